#include "greenrec/algorithms.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

#include "binary_io.hpp"
#include "greenrec/models.hpp"
#include "greenrec/random.hpp"

namespace greenrec {

namespace {

struct KindName {
    AlgorithmKind kind;
    const char* name;
};

constexpr KindName kKindNames[] = {
    {AlgorithmKind::Random, "Random"},     {AlgorithmKind::Popularity, "Popularity"},
    {AlgorithmKind::Bias, "Bias"},         {AlgorithmKind::UserKNN, "UserKNN"},
    {AlgorithmKind::ItemKNN, "ItemKNN"},   {AlgorithmKind::FunkSVD, "FunkSVD"},
    {AlgorithmKind::BiasedMF, "BiasedMF"}, {AlgorithmKind::SVD, "SVD"},
    {AlgorithmKind::NMF, "NMF"},
};

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

constexpr char kMagic[8] = {'G', 'R', 'E', 'C', 'M', 'D', 'L', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

std::string to_string(AlgorithmKind kind) {
    for (const auto& kn : kKindNames)
        if (kn.kind == kind) return kn.name;
    return "?";
}

AlgorithmKind algorithm_from_string(std::string_view name) {
    for (const auto& kn : kKindNames)
        if (iequals(name, kn.name)) return kn.kind;
    if (iequals(name, "Popular") || iequals(name, "Pop")) return AlgorithmKind::Popularity;
    throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

const std::vector<AlgorithmKind>& all_algorithms() {
    static const std::vector<AlgorithmKind> kinds = [] {
        std::vector<AlgorithmKind> v;
        for (const auto& kn : kKindNames) v.push_back(kn.kind);
        return v;
    }();
    return kinds;
}

bool requires_explicit(AlgorithmKind kind) {
    return kind == AlgorithmKind::Bias || kind == AlgorithmKind::FunkSVD ||
           kind == AlgorithmKind::BiasedMF;
}

const std::vector<HyperparamInfo>& hyperparam_schema(AlgorithmKind kind) {
    static const std::vector<HyperparamInfo> none;
    static const std::vector<HyperparamInfo> bias{
        {"damping", 5.0, "added to the item and user counts when averaging residuals"}};
    static const std::vector<HyperparamInfo> item_knn{
        {"neighbors", 20, "neighbors kept per item (M)"},
        {"center", 1, "1: mean-centered ratings, 0: binary vectors (explicit data only)"}};
    static const std::vector<HyperparamInfo> user_knn{
        {"neighbors", 20, "neighbors kept per user (M)"},
        {"center", 1, "1: mean-centered ratings, 0: binary vectors (explicit data only)"},
        {"min_neighbors", 10, "neighbors that must have rated an item for it to be scored "
                              "(centered explicit data only)"}};
    static const std::vector<HyperparamInfo> mf{
        {"factors", 50, "latent dimension"},
        {"learning_rate", 0.005, "SGD step size"},
        {"regularization", 0.02, "L2 penalty on factors (and biases)"},
        {"epochs", 20, "passes over the training ratings"},
        {"init_std", 0.1, "standard deviation of the initial factors"}};
    static const std::vector<HyperparamInfo> svd{
        {"factors", 50, "rank of the truncated SVD"},
        {"oversample", 10, "extra sketch columns"},
        {"power_iters", 4, "subspace iteration steps"},
        {"center", 1, "1: subtract the global mean from explicit ratings, 0: raw ratings"}};
    static const std::vector<HyperparamInfo> nmf{
        {"factors", 50, "rank"},
        {"iterations", 100, "multiplicative update rounds"}};
    switch (kind) {
        case AlgorithmKind::Bias: return bias;
        case AlgorithmKind::UserKNN: return user_knn;
        case AlgorithmKind::ItemKNN: return item_knn;
        case AlgorithmKind::FunkSVD:
        case AlgorithmKind::BiasedMF: return mf;
        case AlgorithmKind::SVD: return svd;
        case AlgorithmKind::NMF: return nmf;
        default: return none;
    }
}

std::map<std::string, std::vector<double>> default_grid(AlgorithmKind kind) {
    switch (kind) {
        case AlgorithmKind::Bias: return {{"damping", {0, 5}}};
        case AlgorithmKind::UserKNN:
        case AlgorithmKind::ItemKNN: return {{"neighbors", {20, 50}}, {"center", {0, 1}}};
        case AlgorithmKind::FunkSVD:
        case AlgorithmKind::BiasedMF:
        case AlgorithmKind::NMF: return {{"factors", {50, 100}}};
        case AlgorithmKind::SVD: return {{"factors", {50, 100}}, {"center", {0, 1}}};
        default: return {};
    }
}

std::vector<Hyperparams> expand_grid(const std::map<std::string, std::vector<double>>& grid) {
    std::vector<Hyperparams> out{{}};
    for (const auto& [name, values] : grid) {
        if (values.empty()) throw ConfigError("grid for '" + name + "' is empty");
        std::vector<Hyperparams> next;
        for (const auto& partial : out)
            for (double v : values) {
                auto combo = partial;
                combo[name] = v;
                next.push_back(std::move(combo));
            }
        out = std::move(next);
    }
    return out;
}

double RecommenderSpec::param(const std::string& name) const {
    if (auto it = hyperparams.find(name); it != hyperparams.end()) return it->second;
    for (const auto& info : hyperparam_schema(kind))
        if (info.name == name) return info.default_value;
    throw ConfigError(to_string(kind) + " has no hyperparameter '" + name + "'");
}

void RecommenderSpec::validate() const {
    const auto& schema = hyperparam_schema(kind);
    for (const auto& [name, value] : hyperparams) {
        bool known = std::any_of(schema.begin(), schema.end(),
                                 [&](const HyperparamInfo& h) { return h.name == name; });
        if (!known)
            throw ConfigError(to_string(kind) + " does not accept hyperparameter '" + name + "'");
        if (!std::isfinite(value))
            throw ConfigError("hyperparameter '" + name + "' must be finite");
    }
    auto positive = [&](const char* name) {
        if (!(param(name) > 0)) throw ConfigError(std::string(name) + " must be positive");
    };
    switch (kind) {
        case AlgorithmKind::Bias:
            if (param("damping") < 0) throw ConfigError("damping must be >= 0");
            break;
        case AlgorithmKind::UserKNN:
            positive("neighbors");
            positive("min_neighbors");
            break;
        case AlgorithmKind::ItemKNN: positive("neighbors"); break;
        case AlgorithmKind::FunkSVD:
        case AlgorithmKind::BiasedMF:
            positive("factors");
            positive("learning_rate");
            positive("epochs");
            if (param("regularization") < 0) throw ConfigError("regularization must be >= 0");
            break;
        case AlgorithmKind::SVD:
        case AlgorithmKind::NMF: positive("factors"); break;
        default: break;
    }
}

// ---------------------------------------------------------------------------

void TrainedModel::init_base(const TrainMatrix& train) {
    n_users_ = train.n_users();
    n_items_ = train.n_items();
    item_counts_.assign(n_items_, 0.0);
    for (ItemIndex i = 0; i < n_items_; ++i)
        item_counts_[i] = static_cast<double>(train.item_count(i));
    seen_ptr_.assign(1, 0);
    seen_items_.clear();
    seen_values_.clear();
    for (UserIndex u = 0; u < n_users_; ++u) {
        auto items = train.user_items(u);
        auto values = train.user_values(u);
        seen_items_.insert(seen_items_.end(), items.begin(), items.end());
        seen_values_.insert(seen_values_.end(), values.begin(), values.end());
        seen_ptr_.push_back(seen_items_.size());
    }
}

bool TrainedModel::knows_user(UserIndex u) const {
    return u < n_users_ && seen_ptr_[u + 1] > seen_ptr_[u];
}

std::span<const ItemIndex> TrainedModel::train_items(UserIndex u) const {
    if (u >= n_users_) return {};
    return {seen_items_.data() + seen_ptr_[u], seen_ptr_[u + 1] - seen_ptr_[u]};
}

std::span<const double> TrainedModel::train_values(UserIndex u) const {
    if (u >= n_users_) return {};
    return {seen_values_.data() + seen_ptr_[u], seen_ptr_[u + 1] - seen_ptr_[u]};
}

double TrainedModel::score(UserIndex u, ItemIndex i) const {
    if (i >= n_items_) throw ConfigError("item index " + std::to_string(i) + " not in catalog");
    std::vector<double> all(n_items_);
    score_all(u, all);
    return all[i];
}

void TrainedModel::score_all(UserIndex u, std::span<double> out) const {
    if (out.size() != n_items_) throw ConfigError("score buffer has the wrong size");
    if (knows_user(u))
        score_known(u, out);
    else
        score_unknown(out);
}

void TrainedModel::score_unknown(std::span<double> out) const {
    std::copy(item_counts_.begin(), item_counts_.end(), out.begin());
}

void TrainedModel::save(std::ostream& out) const {
    out.write(kMagic, sizeof kMagic);
    io::put<std::uint32_t>(out, kFormatVersion);
    io::put<std::uint32_t>(out, static_cast<std::uint32_t>(kind()));
    io::put<std::uint64_t>(out, n_users_);
    io::put<std::uint64_t>(out, n_items_);
    io::put_vec(out, item_counts_);
    std::vector<std::uint64_t> ptr(seen_ptr_.begin(), seen_ptr_.end());
    io::put_vec(out, ptr);
    io::put_vec(out, seen_items_);
    io::put_vec(out, seen_values_);
    save_state(out);
    if (!out) throw Error("failed to write model");
}

std::unique_ptr<TrainedModel> TrainedModel::load(std::istream& in) {
    char magic[sizeof kMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw Error("not a greenrec model file");
    auto version = io::get<std::uint32_t>(in);
    if (version != kFormatVersion)
        throw Error("unsupported model format version " + std::to_string(version));
    auto kind = static_cast<AlgorithmKind>(io::get<std::uint32_t>(in));
    std::unique_ptr<TrainedModel> model;
    switch (kind) {
        case AlgorithmKind::Random: model = std::make_unique<RandomModel>(); break;
        case AlgorithmKind::Popularity: model = std::make_unique<PopularityModel>(); break;
        case AlgorithmKind::Bias: model = std::make_unique<BiasModel>(); break;
        case AlgorithmKind::UserKNN: model = std::make_unique<UserKnnModel>(); break;
        case AlgorithmKind::ItemKNN: model = std::make_unique<ItemKnnModel>(); break;
        case AlgorithmKind::FunkSVD:
        case AlgorithmKind::BiasedMF: model = std::make_unique<MfModel>(); break;
        case AlgorithmKind::SVD: model = std::make_unique<SvdModel>(); break;
        case AlgorithmKind::NMF: model = std::make_unique<NmfModel>(); break;
        default: throw Error("unknown model kind in file");
    }
    model->n_users_ = io::get<std::uint64_t>(in);
    model->n_items_ = io::get<std::uint64_t>(in);
    model->item_counts_ = io::get_vec<double>(in);
    auto ptr = io::get_vec<std::uint64_t>(in);
    model->seen_ptr_.assign(ptr.begin(), ptr.end());
    model->seen_items_ = io::get_vec<ItemIndex>(in);
    model->seen_values_ = io::get_vec<double>(in);
    if (model->seen_ptr_.size() != model->n_users_ + 1 ||
        model->item_counts_.size() != model->n_items_)
        throw Error("model file corrupt");
    model->load_state(in);
    if (model->kind() != kind) throw Error("model file corrupt");
    return model;
}

// ---------------------------------------------------------------------------

RandomModel::RandomModel(const TrainMatrix& train, std::uint64_t seed) : seed_(seed) {
    init_base(train);
}

void RandomModel::score_known(UserIndex u, std::span<double> out) const {
    const auto user_seed = derive_seed(seed_, u);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<double>(mix64(user_seed ^ mix64(i)) >> 11) * 0x1.0p-53;
}

void RandomModel::save_state(std::ostream& out) const { io::put(out, seed_); }
void RandomModel::load_state(std::istream& in) { seed_ = io::get<std::uint64_t>(in); }

PopularityModel::PopularityModel(const TrainMatrix& train) { init_base(train); }

void PopularityModel::score_known(UserIndex, std::span<double> out) const {
    std::copy(item_counts_.begin(), item_counts_.end(), out.begin());
}

BiasModel::BiasModel(const TrainMatrix& train, double damping) {
    if (!train.explicit_ratings())
        throw UnsupportedCombination("Bias needs explicit ratings");
    init_base(train);
    mu_ = train.global_mean();
    item_bias_.assign(train.n_items(), 0.0);
    for (ItemIndex i = 0; i < train.n_items(); ++i) {
        double sum = 0.0;
        for (double r : train.item_values(i)) sum += r - mu_;
        double denom = static_cast<double>(train.item_count(i)) + damping;
        item_bias_[i] = denom > 0 ? sum / denom : 0.0;
    }
    user_bias_.assign(train.n_users(), 0.0);
    for (UserIndex u = 0; u < train.n_users(); ++u) {
        auto items = train.user_items(u);
        auto values = train.user_values(u);
        double sum = 0.0;
        for (std::size_t k = 0; k < items.size(); ++k) sum += values[k] - mu_ - item_bias_[items[k]];
        double denom = static_cast<double>(items.size()) + damping;
        user_bias_[u] = denom > 0 ? sum / denom : 0.0;
    }
}

void BiasModel::score_known(UserIndex u, std::span<double> out) const {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = mu_ + user_bias_[u] + item_bias_[i];
}

void BiasModel::score_unknown(std::span<double> out) const {
    std::fill(out.begin(), out.end(), mu_);
}

void BiasModel::save_state(std::ostream& out) const {
    io::put(out, mu_);
    io::put_vec(out, user_bias_);
    io::put_vec(out, item_bias_);
}

void BiasModel::load_state(std::istream& in) {
    mu_ = io::get<double>(in);
    user_bias_ = io::get_vec<double>(in);
    item_bias_ = io::get_vec<double>(in);
}

// ---------------------------------------------------------------------------

std::unique_ptr<TrainedModel> train(const RecommenderSpec& spec, const TrainMatrix& data) {
    spec.validate();
    if (data.nnz() == 0) throw ConfigError("training set is empty");
    if (requires_explicit(spec.kind) && !data.explicit_ratings())
        throw UnsupportedCombination(to_string(spec.kind) +
                                     " requires explicit ratings; dataset is implicit");
    auto count = [&](const char* name) {
        return static_cast<std::size_t>(std::llround(spec.param(name)));
    };
    switch (spec.kind) {
        case AlgorithmKind::Random: return std::make_unique<RandomModel>(data, spec.seed);
        case AlgorithmKind::Popularity: return std::make_unique<PopularityModel>(data);
        case AlgorithmKind::Bias:
            return std::make_unique<BiasModel>(data, spec.param("damping"));
        case AlgorithmKind::UserKNN:
            return std::make_unique<UserKnnModel>(data, count("neighbors"),
                                                  spec.param("center") != 0.0,
                                                  count("min_neighbors"));
        case AlgorithmKind::ItemKNN:
            return std::make_unique<ItemKnnModel>(data, count("neighbors"),
                                                  spec.param("center") != 0.0);
        case AlgorithmKind::FunkSVD:
        case AlgorithmKind::BiasedMF: {
            SgdOptions opt;
            opt.factors = count("factors");
            opt.learning_rate = spec.param("learning_rate");
            opt.regularization = spec.param("regularization");
            opt.epochs = count("epochs");
            opt.init_std = spec.param("init_std");
            opt.seed = spec.seed;
            return std::make_unique<MfModel>(data, opt, spec.kind == AlgorithmKind::BiasedMF);
        }
        case AlgorithmKind::SVD:
            return std::make_unique<SvdModel>(data, count("factors"), count("oversample"),
                                              count("power_iters"), spec.param("center") != 0.0,
                                              spec.seed);
        case AlgorithmKind::NMF:
            return std::make_unique<NmfModel>(data, count("factors"), count("iterations"),
                                              spec.seed);
    }
    throw ConfigError("unhandled algorithm kind");
}

std::vector<ItemIndex> top_k_from_scores(std::span<const double> scores, std::size_t k,
                                         std::span<const ItemIndex> exclude) {
    std::vector<ItemIndex> candidates;
    candidates.reserve(scores.size());
    auto ex = exclude.begin();
    for (ItemIndex i = 0; i < scores.size(); ++i) {
        while (ex != exclude.end() && *ex < i) ++ex;
        if (ex != exclude.end() && *ex == i) continue;
        candidates.push_back(i);
    }
    auto key = [&](ItemIndex i) {
        double s = scores[i];
        return std::isnan(s) ? -std::numeric_limits<double>::infinity() : s;
    };
    auto better = [&](ItemIndex a, ItemIndex b) {
        double sa = key(a), sb = key(b);
        return sa != sb ? sa > sb : a < b;
    };
    const std::size_t n = std::min(k, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n),
                      candidates.end(), better);
    candidates.resize(n);
    return candidates;
}

RankedList recommend_top_k(const TrainedModel& model, UserIndex user, std::size_t k,
                           std::span<const ItemIndex> exclude) {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (!std::is_sorted(exclude.begin(), exclude.end()))
        throw ConfigError("exclude list must be sorted");
    std::vector<double> scores(model.n_items());
    model.score_all(user, scores);
    return {user, top_k_from_scores(scores, k, exclude)};
}

}  // namespace greenrec
