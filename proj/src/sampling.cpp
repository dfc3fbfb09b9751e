#include "greenrec/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "greenrec/random.hpp"

namespace greenrec {

namespace {

constexpr double kFracTolerance = 1e-9;

std::size_t round_count(double x) {
    return static_cast<std::size_t>(std::llround(x));
}

// Snaps a derived fraction to 1e-9 so 1 - 0.8 - 0.1 equals 0.1.
double snap(double frac) { return std::round(frac * 1e9) / 1e9; }

struct UserHoldout {
    std::vector<std::uint32_t> train, val, test;
};

// Shuffles each user's rows once and cuts them into test, val, train in that
// order.
std::vector<UserHoldout> per_user_holdout(const Dataset& d, double val_frac,
                                          double test_frac, std::uint64_t seed) {
    auto by_user = d.rows_by_user();
    Rng rng(derive_seed(seed, fnv1a("per-user-holdout")));
    std::vector<UserHoldout> out(by_user.size());
    for (std::size_t u = 0; u < by_user.size(); ++u) {
        auto rows = by_user[u];
        const std::size_t n = rows.size();
        if (n < 3)
            throw ConfigError("user '" + d.users().id(static_cast<UserIndex>(u)) +
                              "' has " + std::to_string(n) +
                              " interactions; at least 3 are needed to appear in "
                              "train, validation and test");
        std::size_t n_test = std::max<std::size_t>(1, round_count(test_frac * n));
        std::size_t n_val = std::max<std::size_t>(1, round_count(val_frac * n));
        if (n_test + n_val >= n)
            throw ConfigError("user '" + d.users().id(static_cast<UserIndex>(u)) +
                              "' has no interactions left for training under the "
                              "requested fractions");
        rng.shuffle(std::span(rows));
        auto& h = out[u];
        h.test.assign(rows.begin(), rows.begin() + n_test);
        h.val.assign(rows.begin() + n_test, rows.begin() + n_test + n_val);
        h.train.assign(rows.begin() + n_test + n_val, rows.end());
    }
    return out;
}

std::shared_ptr<const InteractionIds> gather(const std::vector<UserHoldout>& h,
                                             InteractionIds UserHoldout::*field) {
    InteractionIds ids;
    for (const auto& u : h) ids.insert(ids.end(), (u.*field).begin(), (u.*field).end());
    std::sort(ids.begin(), ids.end());
    return std::make_shared<const InteractionIds>(std::move(ids));
}

std::vector<UserIndex> all_users(const Dataset& d) {
    std::vector<UserIndex> users(d.n_users());
    std::iota(users.begin(), users.end(), 0);
    return users;
}

}  // namespace

void SplitConfig::validate() const {
    if (!(train_frac > 0 && val_frac > 0 && test_frac > 0))
        throw ConfigError("split fractions must be positive");
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > kFracTolerance)
        throw ConfigError("split fractions must sum to 1");
}

std::string to_string(DownsampleMethod m) {
    return m == DownsampleMethod::UserBased ? "user_based" : "user_subset";
}

DownsampleMethod method_from_string(std::string_view s) {
    if (s == "user_based" || s == "UserBased" || s == "user-based")
        return DownsampleMethod::UserBased;
    if (s == "user_subset" || s == "UserSubset" || s == "user-subset")
        return DownsampleMethod::UserSubset;
    throw ConfigError("unknown downsampling method '" + std::string(s) + "'");
}

void DownsamplePlan::validate() const {
    if (portions.empty()) throw ConfigError("downsample plan has no portions");
    for (std::size_t i = 0; i < portions.size(); ++i) {
        if (!(portions[i] > 0.0 && portions[i] <= 1.0))
            throw ConfigError("portions must lie in (0, 1]");
        if (i > 0 && !(portions[i] > portions[i - 1]))
            throw ConfigError("portions must be strictly increasing");
    }
}

std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t total,
                                   const std::vector<std::size_t>& lo,
                                   const std::vector<std::size_t>& hi) {
    const std::size_t n = weights.size();
    double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<double> target(n, 0.0);
    std::vector<std::size_t> out(n);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (lo[i] > hi[i]) throw ConfigError("apportion: empty bound interval");
        if (weight_sum > 0) target[i] = weights[i] * static_cast<double>(total) / weight_sum;
        auto base = static_cast<std::size_t>(std::floor(target[i]));
        out[i] = std::clamp(base, lo[i], hi[i]);
        assigned += out[i];
    }

    std::vector<std::size_t> order(n);
    while (assigned != total) {
        const bool grow = assigned < total;
        order.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (grow ? out[i] < hi[i] : out[i] > lo[i]) order.push_back(i);
        if (order.empty())
            throw ConfigError("infeasible quota: cannot distribute " +
                              std::to_string(total) + " within per-user bounds");
        auto remainder = [&](std::size_t i) { return target[i] - static_cast<double>(out[i]); };
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return grow ? remainder(a) > remainder(b) : remainder(a) < remainder(b);
        });
        for (auto i : order) {
            if (assigned == total) break;
            if (grow) {
                ++out[i];
                ++assigned;
            } else {
                --out[i];
                --assigned;
            }
        }
    }
    return out;
}

std::vector<SplitBundle> split_user_based(const Dataset& d, const SplitConfig& cfg,
                                          const DownsamplePlan& plan) {
    cfg.validate();
    plan.validate();
    auto holdout = per_user_holdout(d, cfg.val_frac, cfg.test_frac, cfg.seed);
    auto val = gather(holdout, &UserHoldout::val);
    auto test = gather(holdout, &UserHoldout::test);
    auto users = all_users(d);

    std::vector<SplitBundle> bundles;
    bundles.reserve(plan.portions.size());
    for (double p : plan.portions) {
        SplitBundle b;
        b.portion = p;
        b.val = val;
        b.test = test;
        b.users_included = users;
        Rng rng(derive_seed(plan.seed, fnv1a("user-based-portion"), portion_key(p)));
        for (const auto& h : holdout) {
            const std::size_t pool = h.train.size();
            std::size_t keep = std::max<std::size_t>(1, round_count(p * pool));
            keep = std::min(keep, pool);
            auto ids = h.train;
            for (std::size_t i = 0; i < keep; ++i) {
                auto j = i + static_cast<std::size_t>(rng.below(pool - i));
                std::swap(ids[i], ids[j]);
            }
            b.train.insert(b.train.end(), ids.begin(), ids.begin() + keep);
        }
        std::sort(b.train.begin(), b.train.end());
        bundles.push_back(std::move(b));
    }
    return bundles;
}

std::vector<SplitBundle> split_user_subset(const Dataset& d, const SplitConfig& cfg,
                                           const DownsamplePlan& plan) {
    cfg.validate();
    plan.validate();
    const std::size_t n_total = d.size();
    const std::size_t val_total = round_count(cfg.val_frac * n_total);
    const std::size_t test_total = round_count(cfg.test_frac * n_total);
    const std::size_t holdout_total = val_total + test_total;

    auto by_user = d.rows_by_user();
    Rng shuffle_rng(derive_seed(cfg.seed, fnv1a("user-subset-rows")));
    for (auto& rows : by_user) shuffle_rng.shuffle(std::span(rows));

    auto draw_order = all_users(d);
    Rng order_rng(derive_seed(plan.seed, fnv1a("user-subset-order")));
    order_rng.shuffle(std::span(draw_order));

    std::vector<SplitBundle> bundles;
    bundles.reserve(plan.portions.size());
    for (double p : plan.portions) {
        const std::size_t target =
            holdout_total + round_count(p * cfg.train_frac * static_cast<double>(n_total));
        std::vector<UserIndex> selected;
        std::size_t covered = 0;
        for (auto u : draw_order) {
            if (covered >= target) break;
            selected.push_back(u);
            covered += by_user[u].size();
        }

        std::vector<double> weights;
        std::vector<std::size_t> lo(selected.size(), 0), hi;
        std::size_t capacity = 0;
        for (auto u : selected) {
            weights.push_back(static_cast<double>(by_user[u].size()));
            hi.push_back(by_user[u].size() - 1);
            capacity += by_user[u].size() - 1;
        }
        if (holdout_total > capacity)
            throw ConfigError("infeasible quota: validation+test needs " +
                              std::to_string(holdout_total) + " interactions but the " +
                              std::to_string(selected.size()) +
                              " selected users can spare only " + std::to_string(capacity) +
                              " (portion " + std::to_string(p) + ")");
        auto holdout = apportion(weights, holdout_total, lo, hi);

        std::vector<double> hweights(holdout.begin(), holdout.end());
        std::vector<std::size_t> vlo, vhi;
        for (auto h : holdout) {
            vlo.push_back(h >= 2 ? 1 : 0);
            vhi.push_back(h >= 2 ? h - 1 : h);
        }
        auto val_counts = apportion(hweights, val_total, vlo, vhi);

        SplitBundle b;
        b.portion = p;
        InteractionIds val, test;
        for (std::size_t k = 0; k < selected.size(); ++k) {
            const auto& rows = by_user[selected[k]];
            const std::size_t nv = val_counts[k];
            const std::size_t nt = holdout[k] - nv;
            val.insert(val.end(), rows.begin(), rows.begin() + nv);
            test.insert(test.end(), rows.begin() + nv, rows.begin() + nv + nt);
            b.train.insert(b.train.end(), rows.begin() + nv + nt, rows.end());
        }
        std::sort(val.begin(), val.end());
        std::sort(test.begin(), test.end());
        std::sort(b.train.begin(), b.train.end());
        b.val = std::make_shared<const InteractionIds>(std::move(val));
        b.test = std::make_shared<const InteractionIds>(std::move(test));
        std::sort(selected.begin(), selected.end());
        b.users_included = std::move(selected);
        bundles.push_back(std::move(b));
    }
    return bundles;
}

std::vector<SplitBundle> split_fixed_users_varying_ratio(
    const Dataset& d, const std::vector<TrainTestRatio>& ratios, std::uint64_t seed) {
    auto users = all_users(d);
    std::vector<SplitBundle> bundles;
    for (const auto& r : ratios) {
        if (!(r.train_frac > 0 && r.test_frac > 0))
            throw ConfigError("train and test fractions must be positive");
        double val_frac = snap(1.0 - r.train_frac - r.test_frac);
        if (val_frac < 0) throw ConfigError("train_frac + test_frac exceeds 1");
        auto holdout = per_user_holdout(d, val_frac, r.test_frac, seed);
        SplitBundle b;
        b.portion = r.train_frac;
        b.val = gather(holdout, &UserHoldout::val);
        b.test = gather(holdout, &UserHoldout::test);
        b.train = *gather(holdout, &UserHoldout::train);
        b.users_included = users;
        bundles.push_back(std::move(b));
    }
    return bundles;
}

std::vector<SplitBundle> make_splits(const Dataset& d, const SplitConfig& cfg,
                                     const DownsamplePlan& plan) {
    return plan.method == DownsampleMethod::UserBased ? split_user_based(d, cfg, plan)
                                                      : split_user_subset(d, cfg, plan);
}

}  // namespace greenrec
