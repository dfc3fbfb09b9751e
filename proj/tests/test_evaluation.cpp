#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "greenrec/evaluation.hpp"
#include "greenrec/models.hpp"
#include "greenrec/train_matrix.hpp"
#include "support.hpp"

using namespace greenrec;

namespace {

double ndcg(const std::vector<ItemIndex>& ranked, const std::vector<ItemIndex>& relevant,
            std::size_t k) {
    return ndcg_at_k(std::span<const ItemIndex>(ranked), std::span<const ItemIndex>(relevant), k);
}

MetricRecord record(AlgorithmKind a, double portion, double score, std::string dataset = "ml") {
    MetricRecord r;
    r.dataset = std::move(dataset);
    r.algorithm = a;
    r.portion = portion;
    r.ndcg_at_10 = score;
    return r;
}

}  // namespace

TEST_CASE("ndcg hand cases") {
    CHECK(ndcg({4, 7, 1}, {7}, 10) == doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-12));
    CHECK(ndcg({1, 2, 3}, {3, 1, 2}, 10) == 1.0);
    CHECK(ndcg({1, 2, 3}, {9}, 10) == 0.0);
    CHECK(ndcg({1, 2, 3}, {3}, 2) == 0.0);
    // Items below rank k do not matter.
    CHECK(ndcg({5, 1, 2, 3}, {5, 3}, 2) == ndcg({5, 1, 3, 2}, {5, 3}, 2));
    CHECK(ndcg({}, {1}, 10) == 0.0);
}

TEST_CASE("ndcg equals the enumeration oracle") {
    auto sweep = testing::ndcg_sweep(ndcg, 6);
    CHECK(sweep.max_error <= 1e-12);
    CHECK(sweep.in_range);
    CHECK(sweep.perfect_iff_one);
    CHECK(sweep.cases > 10000);
    CHECK(testing::ndcg_by_enumeration({2, 0, 1}, {0}, 10, {0, 1, 2}) ==
          doctest::Approx(1.0 / std::log2(3.0)));
}

TEST_CASE("random model approaches the uniform-ranking expectation") {
    // u0 has one training item; six other items form its candidates, two of them relevant.
    Dataset d("toy", Feedback::Implicit);
    for (int i = 0; i < 7; ++i) d.add("u0", "i" + std::to_string(i));
    for (int i = 0; i < 7; ++i) d.add("u1", "i" + std::to_string(i));
    std::vector<std::uint32_t> train_ids, holdout;
    for (std::uint32_t id = 0; id < d.size(); ++id) {
        const auto& row = d.interactions()[id];
        const bool is_u0 = d.users().id(row.user) == "u0";
        const auto item = d.items().id(row.item);
        if (!is_u0 || item == "i6") train_ids.push_back(id);
        if (is_u0 && (item == "i0" || item == "i1")) holdout.push_back(id);
    }
    auto train = TrainMatrix::build(d, train_ids);

    std::vector<std::uint32_t> perm{0, 1, 2, 3, 4, 5};
    double expected = 0.0;
    int count = 0;
    do {
        expected += testing::ndcg_by_enumeration(perm, {0, 1}, 10, {0, 1, 2, 3, 4, 5});
        ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    expected /= count;

    double total = 0.0;
    const int seeds = 4000;
    for (int s = 0; s < seeds; ++s) {
        RandomModel m(train, derive_seed(1234, static_cast<std::uint64_t>(s)));
        auto score = evaluate_holdout(m, d, holdout, {}, 10);
        CHECK(score.n_eval_users == 1);
        total += score.ndcg;
    }
    CHECK(std::abs(total / seeds - expected) < 0.015);
}

TEST_CASE("perfect model scores one on its bundle") {
    Dataset d("toy", Feedback::Implicit);
    d.add("a", "x");
    for (const char* u : {"b", "c", "d"}) {
        d.add(u, "p");
        d.add(u, "q");
    }
    d.add("b", "r");
    d.add("c", "r");
    d.add("a", "p");
    d.add("a", "q");
    d.add("a", "r");
    std::vector<std::uint32_t> train_ids, holdout;
    for (std::uint32_t id = 0; id < d.size(); ++id) {
        const auto& row = d.interactions()[id];
        if (d.users().id(row.user) == "a" && d.items().id(row.item) != "x")
            holdout.push_back(id);
        else
            train_ids.push_back(id);
    }
    PopularityModel m(TrainMatrix::build(d, train_ids));
    CHECK(evaluate_holdout(m, d, holdout, {}, 10).ndcg == 1.0);
    std::vector<std::uint32_t> nothing;
    CHECK(evaluate_holdout(m, d, nothing, {}, 10).n_eval_users == 0);
    SplitBundle empty;
    empty.train = train_ids;
    empty.val = std::make_shared<const InteractionIds>();
    empty.test = std::make_shared<const InteractionIds>();
    CHECK_THROWS_AS(evaluate_bundle(m, d, empty), ConfigError);
}

TEST_CASE("relative performance") {
    std::vector<MetricRecord> records{record(AlgorithmKind::SVD, 0.5, 0.2),
                                      record(AlgorithmKind::SVD, 1.0, 0.4)};
    auto rel = relative_performance(records);
    CHECK(rel.at(0.5) == doctest::Approx(50.0));
    CHECK(rel.at(1.0) == 100.0);
    records[1].ndcg_at_10 = 0.0;
    CHECK_THROWS_AS(relative_performance(records), ConfigError);
    records.pop_back();
    CHECK_THROWS_AS(relative_performance(records), ConfigError);
}

TEST_CASE("relative performance at full data is exactly 100") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<MetricRecord> records;
        for (int s = 0; s < 5; ++s) {
            records.push_back(record(AlgorithmKind::NMF, 1.0, 0.01 + rng.uniform()));
            records.back().seed = static_cast<std::uint64_t>(s);
        }
        CHECK(relative_performance(records).at(1.0) == 100.0);
    }
}

TEST_CASE("min-max normalisation") {
    auto n = normalize_scores(std::map<int, double>{{1, 0.1}, {2, 0.3}, {3, 0.5}});
    CHECK(n.at(1) == 0.0);
    CHECK(n.at(2) == doctest::Approx(0.5));
    CHECK(n.at(3) == 1.0);
    auto flat = normalize_scores(std::map<int, double>{{1, 0.2}, {2, 0.2}});
    CHECK(flat.at(1) == 0.5);
    CHECK(flat.at(2) == 0.5);
}

TEST_CASE("group aggregation") {
    std::vector<RelativeCell> cells{
        {"ml-100k", AlgorithmKind::ItemKNN, DownsampleMethod::UserBased, 0.5, 40},
        {"ml-100k", AlgorithmKind::UserKNN, DownsampleMethod::UserBased, 0.5, 60},
        {"ml-100k", AlgorithmKind::Random, DownsampleMethod::UserBased, 0.5, 500},
        {"gowalla", AlgorithmKind::ItemKNN, DownsampleMethod::UserBased, 0.5, 70},
    };
    auto by_alg = aggregate_groups(cells, Grouping::ByAlgorithmGroup);
    REQUIRE(by_alg.rows.size() == 1);
    CHECK(by_alg.rows[0].group == "Group 1");
    // ItemKNN averages 40 and 70 over datasets.
    CHECK(by_alg.rows[0].mean == doctest::Approx((55.0 + 60.0) / 2));
    CHECK(by_alg.rows[0].spread == doctest::Approx(2.5));

    cells.pop_back();
    by_alg = aggregate_groups(cells, Grouping::ByAlgorithmGroup);
    CHECK(by_alg.rows[0].mean == doctest::Approx(50.0));
    CHECK(by_alg.rows[0].spread == doctest::Approx(10.0));

    std::vector<RelativeCell> single{{"gowalla", AlgorithmKind::ItemKNN, DownsampleMethod::UserSubset, 0.3, 70}};
    auto by_dataset = aggregate_groups(single, Grouping::ByDatasetGroup);
    REQUIRE(by_dataset.rows.size() == 1);
    CHECK(by_dataset.rows[0].group == "Gowalla");
    CHECK(by_dataset.rows[0].mean == 70.0);
    CHECK(by_dataset.rows[0].spread == 0.0);
}

TEST_CASE("groups and names") {
    CHECK(algorithm_group(AlgorithmKind::NMF) == "Group 1");
    CHECK(algorithm_group(AlgorithmKind::Bias) == "Group 2");
    CHECK(algorithm_group(AlgorithmKind::Random).empty());
    CHECK(dataset_group("ML-100K") == "MovieLens");
    CHECK(dataset_group("amazon-books") == "Amazon");
    CHECK(dataset_group("lastfm") == "lastfm");
}

TEST_CASE("hyperparameter text round trip") {
    Hyperparams h{{"neighbors", 50}, {"center", 0}, {"learning_rate", 0.005}};
    auto text = format_hyperparams(h);
    CHECK(parse_hyperparams(text) == h);
    CHECK(format_hyperparams({}) == "-");
    CHECK(parse_hyperparams("-").empty());
}

TEST_CASE("relative table flags undefined baselines") {
    std::vector<MetricRecord> records{record(AlgorithmKind::SVD, 0.5, 0.2), record(AlgorithmKind::SVD, 1.0, 0.4),
                                      record(AlgorithmKind::NMF, 0.5, 0.1), record(AlgorithmKind::NMF, 1.0, 0.0)};
    std::vector<std::string> undefined;
    auto table = relative_table(records, &undefined);
    CHECK(table.size() == 2);
    CHECK(undefined.size() == 1);
}
