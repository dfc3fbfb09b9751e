#include <algorithm>
#include <cmath>
#include <limits>

#include "binary_io.hpp"
#include "greenrec/models.hpp"

namespace greenrec {

double sparse_cosine(std::span<const std::uint32_t> a_idx, std::span<const double> a_val,
                     std::span<const std::uint32_t> b_idx, std::span<const double> b_val) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (double v : a_val) na += v * v;
    for (double v : b_val) nb += v * v;
    if (na == 0.0 || nb == 0.0) return 0.0;
    std::size_t i = 0, j = 0;
    while (i < a_idx.size() && j < b_idx.size()) {
        if (a_idx[i] < b_idx[j]) {
            ++i;
        } else if (b_idx[j] < a_idx[i]) {
            ++j;
        } else {
            dot += a_val[i++] * b_val[j++];
        }
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

std::vector<double> user_means(const TrainMatrix& train) {
    std::vector<double> means(train.n_users(), 0.0);
    for (UserIndex u = 0; u < train.n_users(); ++u) {
        auto values = train.user_values(u);
        if (values.empty()) continue;
        double sum = 0.0;
        for (double v : values) sum += v;
        means[u] = sum / static_cast<double>(values.size());
    }
    return means;
}

bool use_centering(const TrainMatrix& train, bool center) {
    return center && train.explicit_ratings();
}

std::vector<double> centering_offsets(const TrainMatrix& train, bool center) {
    return use_centering(train, center) ? user_means(train)
                                        : std::vector<double>(train.n_users(), 0.0);
}

// Value a KNN model sees for one training entry.
inline double knn_value(bool centered, double rating, double user_mean) {
    return centered ? rating - user_mean : 1.0;
}

}  // namespace

SparseRows knn_user_vectors(const TrainMatrix& train, bool center) {
    const bool centered = use_centering(train, center);
    auto means = centering_offsets(train, center);
    SparseRows rows;
    rows.idx.reserve(train.nnz());
    rows.val.reserve(train.nnz());
    for (UserIndex u = 0; u < train.n_users(); ++u) {
        auto items = train.user_items(u);
        auto values = train.user_values(u);
        for (std::size_t k = 0; k < items.size(); ++k) {
            rows.idx.push_back(items[k]);
            rows.val.push_back(knn_value(centered, values[k], means[u]));
        }
        rows.ptr.push_back(rows.idx.size());
    }
    return rows;
}

SparseRows transpose(const SparseRows& rows, std::size_t n_columns) {
    SparseRows out;
    out.ptr.assign(n_columns + 1, 0);
    for (auto c : rows.idx) ++out.ptr[c + 1];
    for (std::size_t c = 0; c < n_columns; ++c) out.ptr[c + 1] += out.ptr[c];
    out.idx.resize(rows.idx.size());
    out.val.resize(rows.val.size());
    auto fill = out.ptr;
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        auto idx = rows.indices(r);
        auto val = rows.values(r);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            auto slot = fill[idx[k]]++;
            out.idx[slot] = static_cast<std::uint32_t>(r);
            out.val[slot] = val[k];
        }
    }
    return out;
}

SparseRows knn_item_vectors(const TrainMatrix& train, bool center) {
    return transpose(knn_user_vectors(train, center), train.n_items());
}

std::vector<std::vector<Neighbor>> top_neighbors(const SparseRows& rows,
                                                 const SparseRows& columns,
                                                 std::size_t max_neighbors) {
    const std::size_t n = rows.rows();
    std::vector<double> norms(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (double v : rows.values(r)) s += v * v;
        norms[r] = std::sqrt(s);
    }

    std::vector<std::vector<Neighbor>> out(n);
    std::vector<double> dot(n, 0.0);
    std::vector<char> marked(n, 0);
    std::vector<std::uint32_t> touched;
    std::vector<Neighbor> candidates;
    for (std::size_t r = 0; r < n; ++r) {
        if (norms[r] == 0.0) continue;
        touched.clear();
        auto idx = rows.indices(r);
        auto val = rows.values(r);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            auto other_idx = columns.indices(idx[k]);
            auto other_val = columns.values(idx[k]);
            for (std::size_t m = 0; m < other_idx.size(); ++m) {
                auto o = other_idx[m];
                if (!marked[o]) {
                    marked[o] = 1;
                    touched.push_back(o);
                }
                dot[o] += val[k] * other_val[m];
            }
        }
        candidates.clear();
        for (auto o : touched) {
            double d = dot[o];
            dot[o] = 0.0;
            marked[o] = 0;
            if (o == r || norms[o] == 0.0) continue;
            double sim = d / (norms[r] * norms[o]);
            if (sim > 1e-12) candidates.push_back({o, sim});
        }
        auto better = [](const Neighbor& a, const Neighbor& b) {
            return a.sim != b.sim ? a.sim > b.sim : a.index < b.index;
        };
        const std::size_t keep = std::min(max_neighbors, candidates.size());
        std::partial_sort(candidates.begin(),
                          candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                          candidates.end(), better);
        out[r].assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    return out;
}

namespace {

void put_neighbors(std::ostream& out, const std::vector<std::vector<Neighbor>>& lists) {
    io::put<std::uint64_t>(out, lists.size());
    for (const auto& l : lists) io::put_vec(out, l);
}

std::vector<std::vector<Neighbor>> get_neighbors(std::istream& in) {
    auto n = io::get<std::uint64_t>(in);
    std::vector<std::vector<Neighbor>> lists(n);
    for (auto& l : lists) l = io::get_vec<Neighbor>(in);
    return lists;
}

}  // namespace

ItemKnnModel::ItemKnnModel(const TrainMatrix& train, std::size_t neighbors, bool center) {
    init_base(train);
    auto user_vecs = knn_user_vectors(train, center);
    auto item_vecs = transpose(user_vecs, train.n_items());
    neighbors_ = top_neighbors(item_vecs, user_vecs, neighbors);
    user_mean_ = centering_offsets(train, center);
    if (!use_centering(train, center)) user_mean_.clear();
    build_reverse();
}

void ItemKnnModel::build_reverse() {
    reverse_.assign(neighbors_.size(), {});
    for (std::size_t i = 0; i < neighbors_.size(); ++i)
        for (const auto& nb : neighbors_[i])
            reverse_[nb.index].push_back({static_cast<std::uint32_t>(i), nb.sim});
}

void ItemKnnModel::score_known(UserIndex u, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    const bool centered = !user_mean_.empty();
    auto items = train_items(u);
    auto values = train_values(u);
    for (std::size_t k = 0; k < items.size(); ++k) {
        double x = knn_value(centered, values[k], centered ? user_mean_[u] : 0.0);
        for (const auto& nb : reverse_[items[k]]) out[nb.index] += nb.sim * x;
    }
}

void ItemKnnModel::save_state(std::ostream& out) const {
    put_neighbors(out, neighbors_);
    io::put_vec(out, user_mean_);
}

void ItemKnnModel::load_state(std::istream& in) {
    neighbors_ = get_neighbors(in);
    user_mean_ = io::get_vec<double>(in);
    build_reverse();
}

UserKnnModel::UserKnnModel(const TrainMatrix& train, std::size_t neighbors, bool center,
                           std::size_t min_neighbors)
    : min_neighbors_(std::max<std::size_t>(1, min_neighbors)) {
    init_base(train);
    auto user_vecs = knn_user_vectors(train, center);
    auto item_vecs = transpose(user_vecs, train.n_items());
    neighbors_ = top_neighbors(user_vecs, item_vecs, neighbors);
    weighted_average_ = use_centering(train, center);
    user_mean_ = weighted_average_ ? user_means(train) : std::vector<double>{};
}

void UserKnnModel::score_known(UserIndex u, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if (!weighted_average_) {
        for (const auto& nb : neighbors_[u])
            for (auto i : train_items(nb.index)) out[i] += nb.sim;
        return;
    }
    std::vector<double> weight(out.size(), 0.0);
    std::vector<std::uint32_t> support(out.size(), 0);
    for (const auto& nb : neighbors_[u]) {
        auto items = train_items(nb.index);
        auto values = train_values(nb.index);
        const double mean = user_mean_[nb.index];
        for (std::size_t k = 0; k < items.size(); ++k) {
            out[items[k]] += nb.sim * (values[k] - mean);
            weight[items[k]] += std::abs(nb.sim);
            ++support[items[k]];
        }
    }
    // Too few neighbors rated i: the prediction is undefined and ranks last.
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = support[i] >= min_neighbors_ && weight[i] > 0
                     ? out[i] / weight[i]
                     : std::numeric_limits<double>::quiet_NaN();
}

void UserKnnModel::save_state(std::ostream& out) const {
    put_neighbors(out, neighbors_);
    io::put_vec(out, user_mean_);
    io::put<std::uint8_t>(out, weighted_average_ ? 1 : 0);
    io::put<std::uint64_t>(out, min_neighbors_);
}

void UserKnnModel::load_state(std::istream& in) {
    neighbors_ = get_neighbors(in);
    user_mean_ = io::get_vec<double>(in);
    weighted_average_ = io::get<std::uint8_t>(in) != 0;
    min_neighbors_ = io::get<std::uint64_t>(in);
}

}  // namespace greenrec
