#ifndef GREENREC_MODELS_HPP_
#define GREENREC_MODELS_HPP_

// Concrete recommenders behind greenrec::train(). Exposed so tests and the
// Python module can inspect learned state.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "greenrec/algorithms.hpp"

namespace greenrec {

class RandomModel final : public TrainedModel {
public:
    RandomModel() = default;
    RandomModel(const TrainMatrix& train, std::uint64_t seed);
    AlgorithmKind kind() const override { return AlgorithmKind::Random; }

protected:
    void score_known(UserIndex u, std::span<double> out) const override;
    void save_state(std::ostream& out) const override;
    void load_state(std::istream& in) override;

private:
    std::uint64_t seed_ = 0;
};

class PopularityModel final : public TrainedModel {
public:
    PopularityModel() = default;
    explicit PopularityModel(const TrainMatrix& train);
    AlgorithmKind kind() const override { return AlgorithmKind::Popularity; }
    double count(ItemIndex i) const { return item_counts_.at(i); }

protected:
    void score_known(UserIndex u, std::span<double> out) const override;
    void save_state(std::ostream&) const override {}
    void load_state(std::istream&) override {}
};

/// Damped user/item biases around the global mean.
class BiasModel final : public TrainedModel {
public:
    BiasModel() = default;
    BiasModel(const TrainMatrix& train, double damping);
    AlgorithmKind kind() const override { return AlgorithmKind::Bias; }

    double global_mean() const { return mu_; }
    double user_bias(UserIndex u) const { return user_bias_.at(u); }
    double item_bias(ItemIndex i) const { return item_bias_.at(i); }

protected:
    void score_known(UserIndex u, std::span<double> out) const override;
    void score_unknown(std::span<double> out) const override;
    void save_state(std::ostream& out) const override;
    void load_state(std::istream& in) override;

private:
    double mu_ = 0.0;
    std::vector<double> user_bias_;
    std::vector<double> item_bias_;
};

// ---------------------------------------------------------------------------
// Neighborhood models

struct Neighbor {
    std::uint32_t index;
    double sim;
};

/// Cosine similarity of two sparse vectors with ascending indices. Zero when
/// either vector has zero norm.
double sparse_cosine(std::span<const std::uint32_t> a_idx, std::span<const double> a_val,
                     std::span<const std::uint32_t> b_idx, std::span<const double> b_val);

/// Vectors the KNN models compare: one row per entity (user or item) with
/// ascending indices. Explicit ratings are centered on each user's mean
/// unless `center` is false; implicit data is binary.
struct SparseRows {
    std::vector<std::size_t> ptr{0};
    std::vector<std::uint32_t> idx;
    std::vector<double> val;

    std::size_t rows() const { return ptr.size() - 1; }
    std::span<const std::uint32_t> indices(std::size_t r) const {
        return {idx.data() + ptr[r], ptr[r + 1] - ptr[r]};
    }
    std::span<const double> values(std::size_t r) const {
        return {val.data() + ptr[r], ptr[r + 1] - ptr[r]};
    }
};

SparseRows knn_user_vectors(const TrainMatrix& train, bool center);
SparseRows knn_item_vectors(const TrainMatrix& train, bool center);

/// For every row, its `max_neighbors` most similar other rows with positive
/// cosine similarity, best first (ties to the lower index). `rows` and
/// `columns` hold the same vectors in row and column orientation.
std::vector<std::vector<Neighbor>> top_neighbors(const SparseRows& rows,
                                                 const SparseRows& columns,
                                                 std::size_t max_neighbors);

/// Transposes row vectors.
SparseRows transpose(const SparseRows& rows, std::size_t n_columns);

class ItemKnnModel final : public TrainedModel {
public:
    ItemKnnModel() = default;
    ItemKnnModel(const TrainMatrix& train, std::size_t neighbors, bool center);
    AlgorithmKind kind() const override { return AlgorithmKind::ItemKNN; }
    const std::vector<Neighbor>& neighbors(ItemIndex i) const { return neighbors_.at(i); }

protected:
    void score_known(UserIndex u, std::span<double> out) const override;
    void save_state(std::ostream& out) const override;
    void load_state(std::istream& in) override;

private:
    void build_reverse();

    std::vector<std::vector<Neighbor>> neighbors_;  // item -> its top-M items
    std::vector<std::vector<Neighbor>> reverse_;    // j -> items i with j in N(i)
    std::vector<double> user_mean_;                 // 0 when not centered
};

class UserKnnModel final : public TrainedModel {
public:
    UserKnnModel() = default;
    /// With centered explicit ratings, items rated by fewer than
    /// `min_neighbors` of u's neighbors get no prediction (they rank last).
    UserKnnModel(const TrainMatrix& train, std::size_t neighbors, bool center,
                 std::size_t min_neighbors = 1);
    AlgorithmKind kind() const override { return AlgorithmKind::UserKNN; }
    const std::vector<Neighbor>& neighbors(UserIndex u) const { return neighbors_.at(u); }

protected:
    void score_known(UserIndex u, std::span<double> out) const override;
    void save_state(std::ostream& out) const override;
    void load_state(std::istream& in) override;

private:
    std::vector<std::vector<Neighbor>> neighbors_;
    std::vector<double> user_mean_;
    bool weighted_average_ = true;
    std::size_t min_neighbors_ = 1;
};

// ---------------------------------------------------------------------------
// Matrix factorization trained by SGD

/// Parameters of the rating model mu + b_u + b_i + p_u . q_i (biases and mu
/// are zero and untouched when `biased` is false). P and Q are row-major
/// n x factors.
struct MfState {
    std::size_t factors = 0;
    bool biased = false;
    double mu = 0.0;
    std::vector<double> P, Q, user_bias, item_bias;

    static MfState zeros(std::size_t n_users, std::size_t n_items, std::size_t factors,
                         bool biased);
    double predict(UserIndex u, ItemIndex i) const;
};

/// Sum over observations of (r - r_hat)^2 + reg * (|p_u|^2 + |q_i|^2 [+ b_u^2 + b_i^2]).
double mf_objective(const MfState& s, std::span<const Triple> ratings, double reg);

/// Adds the gradient of one observation's term of mf_objective into `grad`
/// (same shape as `s`).
void mf_add_gradient(const MfState& s, const Triple& r, double reg, MfState& grad);

/// One SGD update on a single observation: every touched parameter moves by
/// -learning_rate/2 times its mf_add_gradient component.
void mf_sgd_step(MfState& s, const Triple& r, double learning_rate, double reg);

struct SgdOptions {
    std::size_t factors = 50;
    double learning_rate = 0.005;
    double regularization = 0.02;
    std::size_t epochs = 20;
    double init_std = 0.1;
    std::uint64_t seed = 0;
};

/// Plain SGD over shuffled observations; each step moves by
/// -learning_rate/2 times the observation's gradient.
MfState train_mf_sgd(const TrainMatrix& train, const SgdOptions& opt, bool biased);

class MfModel final : public TrainedModel {
public:
    MfModel() = default;
    MfModel(const TrainMatrix& train, const SgdOptions& opt, bool biased);
    AlgorithmKind kind() const override {
        return state_.biased ? AlgorithmKind::BiasedMF : AlgorithmKind::FunkSVD;
    }
    const MfState& state() const { return state_; }

protected:
    void score_known(UserIndex u, std::span<double> out) const override;
    void save_state(std::ostream& out) const override;
    void load_state(std::istream& in) override;

private:
    MfState state_;
};

// ---------------------------------------------------------------------------
// Truncated SVD and NMF

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Explicit: observed ratings minus `offset`; implicit: ones.
SparseMatrix to_sparse(const TrainMatrix& train, double offset = 0.0);

struct TruncatedSvd {
    Eigen::MatrixXd U;      // m x r, orthonormal columns
    Eigen::VectorXd sigma;  // r, non-increasing
    Eigen::MatrixXd V;      // n x r, orthonormal columns
};

/// Rank-`rank` SVD by randomized subspace iteration with `oversample` extra
/// columns and `power_iters` re-orthonormalized power steps. The sketch width
/// is capped at min(m, n), in which case the result is exact.
TruncatedSvd randomized_svd(const SparseMatrix& a, std::size_t rank, std::size_t oversample,
                            std::size_t power_iters, std::uint64_t seed);

class SvdModel final : public TrainedModel {
public:
    SvdModel() = default;
    /// `center`: subtract the global mean from explicit ratings first.
    SvdModel(const TrainMatrix& train, std::size_t factors, std::size_t oversample,
             std::size_t power_iters, bool center, std::uint64_t seed);
    AlgorithmKind kind() const override { return AlgorithmKind::SVD; }
    const TruncatedSvd& factors() const { return svd_; }

protected:
    void score_known(UserIndex u, std::span<double> out) const override;
    void save_state(std::ostream& out) const override;
    void load_state(std::istream& in) override;

private:
    TruncatedSvd svd_;
    Eigen::MatrixXd user_weights_;  // U * diag(sigma)
};

struct NmfResult {
    Eigen::MatrixXd W;  // m x r
    Eigen::MatrixXd H;  // r x n
    std::vector<double> loss;  // squared Frobenius error after init and each iteration
};

/// Lee-Seung multiplicative updates on the zero-filled matrix `a`.
NmfResult nmf_multiplicative(const SparseMatrix& a, std::size_t rank, std::size_t iterations,
                             std::uint64_t seed);

/// ||A - W H||_F^2 without materializing W H.
double nmf_loss(const SparseMatrix& a, const Eigen::MatrixXd& W, const Eigen::MatrixXd& H);

class NmfModel final : public TrainedModel {
public:
    NmfModel() = default;
    NmfModel(const TrainMatrix& train, std::size_t factors, std::size_t iterations,
             std::uint64_t seed);
    AlgorithmKind kind() const override { return AlgorithmKind::NMF; }
    const NmfResult& factors() const { return nmf_; }

protected:
    void score_known(UserIndex u, std::span<double> out) const override;
    void save_state(std::ostream& out) const override;
    void load_state(std::istream& in) override;

private:
    NmfResult nmf_;
};

}  // namespace greenrec

#endif  // GREENREC_MODELS_HPP_
