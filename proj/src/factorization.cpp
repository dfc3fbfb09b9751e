#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "binary_io.hpp"
#include "greenrec/models.hpp"
#include "greenrec/random.hpp"

namespace greenrec {

MfState MfState::zeros(std::size_t n_users, std::size_t n_items, std::size_t factors,
                       bool biased) {
    MfState s;
    s.factors = factors;
    s.biased = biased;
    s.P.assign(n_users * factors, 0.0);
    s.Q.assign(n_items * factors, 0.0);
    if (biased) {
        s.user_bias.assign(n_users, 0.0);
        s.item_bias.assign(n_items, 0.0);
    }
    return s;
}

double MfState::predict(UserIndex u, ItemIndex i) const {
    const double* p = P.data() + u * factors;
    const double* q = Q.data() + i * factors;
    double dot = 0.0;
    for (std::size_t f = 0; f < factors; ++f) dot += p[f] * q[f];
    if (biased) dot += mu + user_bias[u] + item_bias[i];
    return dot;
}

double mf_objective(const MfState& s, std::span<const Triple> ratings, double reg) {
    double total = 0.0;
    for (const auto& r : ratings) {
        const double e = r.value - s.predict(r.user, r.item);
        const double* p = s.P.data() + r.user * s.factors;
        const double* q = s.Q.data() + r.item * s.factors;
        double norms = 0.0;
        for (std::size_t f = 0; f < s.factors; ++f) norms += p[f] * p[f] + q[f] * q[f];
        if (s.biased)
            norms += s.user_bias[r.user] * s.user_bias[r.user] +
                     s.item_bias[r.item] * s.item_bias[r.item];
        total += e * e + reg * norms;
    }
    return total;
}

void mf_add_gradient(const MfState& s, const Triple& r, double reg, MfState& grad) {
    const double e = r.value - s.predict(r.user, r.item);
    const double* p = s.P.data() + r.user * s.factors;
    const double* q = s.Q.data() + r.item * s.factors;
    double* gp = grad.P.data() + r.user * s.factors;
    double* gq = grad.Q.data() + r.item * s.factors;
    for (std::size_t f = 0; f < s.factors; ++f) {
        gp[f] += -2.0 * e * q[f] + 2.0 * reg * p[f];
        gq[f] += -2.0 * e * p[f] + 2.0 * reg * q[f];
    }
    if (s.biased) {
        grad.user_bias[r.user] += -2.0 * e + 2.0 * reg * s.user_bias[r.user];
        grad.item_bias[r.item] += -2.0 * e + 2.0 * reg * s.item_bias[r.item];
    }
}

void mf_sgd_step(MfState& s, const Triple& r, double learning_rate, double reg) {
    const double e = r.value - s.predict(r.user, r.item);
    double* p = s.P.data() + r.user * s.factors;
    double* q = s.Q.data() + r.item * s.factors;
    for (std::size_t f = 0; f < s.factors; ++f) {
        const double pf = p[f];
        p[f] += learning_rate * (e * q[f] - reg * pf);
        q[f] += learning_rate * (e * pf - reg * q[f]);
    }
    if (s.biased) {
        s.user_bias[r.user] += learning_rate * (e - reg * s.user_bias[r.user]);
        s.item_bias[r.item] += learning_rate * (e - reg * s.item_bias[r.item]);
    }
}

MfState train_mf_sgd(const TrainMatrix& train, const SgdOptions& opt, bool biased) {
    auto s = MfState::zeros(train.n_users(), train.n_items(), opt.factors, biased);
    Rng rng(derive_seed(opt.seed, fnv1a("mf-init")));
    for (auto& v : s.P) v = opt.init_std * rng.normal();
    for (auto& v : s.Q) v = opt.init_std * rng.normal();
    if (biased) s.mu = train.global_mean();

    auto ratings = train.triples();
    std::vector<std::uint32_t> order(ratings.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        rng.shuffle(std::span(order));
        for (auto k : order) mf_sgd_step(s, ratings[k], opt.learning_rate, opt.regularization);
    }
    return s;
}

MfModel::MfModel(const TrainMatrix& train, const SgdOptions& opt, bool biased) {
    if (!train.explicit_ratings())
        throw UnsupportedCombination("matrix factorization by SGD needs explicit ratings");
    init_base(train);
    state_ = train_mf_sgd(train, opt, biased);
}

void MfModel::score_known(UserIndex u, std::span<double> out) const {
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = state_.predict(u, static_cast<ItemIndex>(i));
}

void MfModel::save_state(std::ostream& out) const {
    io::put<std::uint64_t>(out, state_.factors);
    io::put<std::uint8_t>(out, state_.biased ? 1 : 0);
    io::put(out, state_.mu);
    io::put_vec(out, state_.P);
    io::put_vec(out, state_.Q);
    io::put_vec(out, state_.user_bias);
    io::put_vec(out, state_.item_bias);
}

void MfModel::load_state(std::istream& in) {
    state_.factors = io::get<std::uint64_t>(in);
    state_.biased = io::get<std::uint8_t>(in) != 0;
    state_.mu = io::get<double>(in);
    state_.P = io::get_vec<double>(in);
    state_.Q = io::get_vec<double>(in);
    state_.user_bias = io::get_vec<double>(in);
    state_.item_bias = io::get_vec<double>(in);
}

// ---------------------------------------------------------------------------

SparseMatrix to_sparse(const TrainMatrix& train, double offset) {
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(train.nnz());
    for (const auto& t : train.triples()) {
        double v = train.explicit_ratings() ? t.value - offset : 1.0;
        entries.emplace_back(static_cast<int>(t.user), static_cast<int>(t.item), v);
    }
    SparseMatrix a(static_cast<Eigen::Index>(train.n_users()),
                   static_cast<Eigen::Index>(train.n_items()));
    a.setFromTriplets(entries.begin(), entries.end());
    return a;
}

namespace {

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& y) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

}  // namespace

TruncatedSvd randomized_svd(const SparseMatrix& a, std::size_t rank, std::size_t oversample,
                            std::size_t power_iters, std::uint64_t seed) {
    const auto m = static_cast<std::size_t>(a.rows());
    const auto n = static_cast<std::size_t>(a.cols());
    if (m == 0 || n == 0) throw ConfigError("cannot factorize an empty matrix");
    if (rank == 0) throw ConfigError("rank must be positive");
    const std::size_t full = std::min(m, n);
    const std::size_t r = std::min(rank, full);
    const std::size_t width = std::min(r + oversample, full);

    Rng rng(derive_seed(seed, fnv1a("randomized-svd")));
    Eigen::MatrixXd omega(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
    for (Eigen::Index j = 0; j < omega.cols(); ++j)
        for (Eigen::Index i = 0; i < omega.rows(); ++i) omega(i, j) = rng.normal();

    Eigen::MatrixXd q = orthonormal_basis(a * omega);
    for (std::size_t it = 0; it < power_iters; ++it) {
        Eigen::MatrixXd z = orthonormal_basis(a.transpose() * q);
        q = orthonormal_basis(a * z);
    }
    Eigen::MatrixXd bt = a.transpose() * q;  // n x width, equals B^T
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(bt, Eigen::ComputeThinU | Eigen::ComputeThinV);

    // B^T = U' S V'^T  =>  B = V' S U'^T  =>  A ~ (Q V') S U'^T
    const auto rr = static_cast<Eigen::Index>(r);
    TruncatedSvd out;
    out.sigma = svd.singularValues().head(rr);
    out.U = q * svd.matrixV().leftCols(rr);
    out.V = svd.matrixU().leftCols(rr);
    return out;
}

SvdModel::SvdModel(const TrainMatrix& train, std::size_t factors, std::size_t oversample,
                   std::size_t power_iters, bool center, std::uint64_t seed) {
    init_base(train);
    const double offset = center && train.explicit_ratings() ? train.global_mean() : 0.0;
    svd_ = randomized_svd(to_sparse(train, offset), factors, oversample, power_iters, seed);
    user_weights_ = svd_.U * svd_.sigma.asDiagonal();
}

void SvdModel::score_known(UserIndex u, std::span<double> out) const {
    Eigen::Map<Eigen::VectorXd> scores(out.data(), static_cast<Eigen::Index>(out.size()));
    scores.noalias() = svd_.V * user_weights_.row(u).transpose();
}

void SvdModel::save_state(std::ostream& out) const {
    io::put_matrix(out, svd_.U);
    io::put_matrix(out, svd_.sigma);
    io::put_matrix(out, svd_.V);
}

void SvdModel::load_state(std::istream& in) {
    svd_.U = io::get_matrix(in);
    svd_.sigma = io::get_matrix(in);
    svd_.V = io::get_matrix(in);
    user_weights_ = svd_.U * svd_.sigma.asDiagonal();
}

// ---------------------------------------------------------------------------

double nmf_loss(const SparseMatrix& a, const Eigen::MatrixXd& W, const Eigen::MatrixXd& H) {
    // ||A||^2 - 2 <A, W H> + <W^T W, H H^T>
    const double a_norm = a.squaredNorm();
    const Eigen::MatrixXd aht = a * H.transpose();
    const double cross = (W.array() * aht.array()).sum();
    const double quad = ((W.transpose() * W).array() * (H * H.transpose()).array()).sum();
    return std::max(0.0, a_norm - 2.0 * cross + quad);
}

NmfResult nmf_multiplicative(const SparseMatrix& a, std::size_t rank, std::size_t iterations,
                             std::uint64_t seed) {
    const auto m = a.rows();
    const auto n = a.cols();
    if (m == 0 || n == 0) throw ConfigError("cannot factorize an empty matrix");
    if (rank == 0) throw ConfigError("rank must be positive");
    for (Eigen::Index k = 0; k < a.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(a, k); it; ++it)
            if (it.value() < 0) throw ConfigError("NMF input must be nonnegative");

    const auto r = static_cast<Eigen::Index>(rank);
    const double mean = a.sum() / (static_cast<double>(m) * static_cast<double>(n));
    const double scale = std::sqrt(std::max(mean, 1e-12) / static_cast<double>(rank));
    Rng rng(derive_seed(seed, fnv1a("nmf-init")));
    NmfResult res;
    res.W.resize(m, r);
    res.H.resize(r, n);
    for (Eigen::Index j = 0; j < r; ++j)
        for (Eigen::Index i = 0; i < m; ++i) res.W(i, j) = scale * (0.01 + rng.uniform());
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < r; ++i) res.H(i, j) = scale * (0.01 + rng.uniform());

    auto& W = res.W;
    auto& H = res.H;
    res.loss.push_back(nmf_loss(a, W, H));
    for (std::size_t it = 0; it < iterations; ++it) {
        {
            const Eigen::MatrixXd num = (a.transpose() * W).transpose();  // W^T A
            const Eigen::MatrixXd den = (W.transpose() * W) * H;
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index i = 0; i < r; ++i)
                    if (den(i, j) > 0) H(i, j) *= num(i, j) / den(i, j);
        }
        {
            const Eigen::MatrixXd num = a * H.transpose();  // A H^T
            const Eigen::MatrixXd den = W * (H * H.transpose());
            for (Eigen::Index j = 0; j < r; ++j)
                for (Eigen::Index i = 0; i < m; ++i)
                    if (den(i, j) > 0) W(i, j) *= num(i, j) / den(i, j);
        }
        res.loss.push_back(nmf_loss(a, W, H));
    }
    return res;
}

NmfModel::NmfModel(const TrainMatrix& train, std::size_t factors, std::size_t iterations,
                   std::uint64_t seed) {
    init_base(train);
    nmf_ = nmf_multiplicative(to_sparse(train), factors, iterations, seed);
}

void NmfModel::score_known(UserIndex u, std::span<double> out) const {
    Eigen::Map<Eigen::RowVectorXd> scores(out.data(), static_cast<Eigen::Index>(out.size()));
    scores.noalias() = nmf_.W.row(u) * nmf_.H;
}

void NmfModel::save_state(std::ostream& out) const {
    io::put_matrix(out, nmf_.W);
    io::put_matrix(out, nmf_.H);
    io::put_vec(out, nmf_.loss);
}

void NmfModel::load_state(std::istream& in) {
    nmf_.W = io::get_matrix(in);
    nmf_.H = io::get_matrix(in);
    nmf_.loss = io::get_vec<double>(in);
}

}  // namespace greenrec
