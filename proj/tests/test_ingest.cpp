#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "greenrec/ingest.hpp"
#include "support.hpp"

using namespace greenrec;

TEST_CASE("three-line explicit file") {
    auto d = parse_dataset("u1\ti1\t5\t1\nu2\ti1\t4\t2\nu1\ti2\t3\t3\n", Schema::parse("ml100k"),
                           Feedback::Explicit, "toy");
    CHECK(d.n_users() == 2);
    CHECK(d.n_items() == 2);
    CHECK(d.size() == 3);
    CHECK(d.users().id(0) == "u1");
    CHECK(d.interactions()[1].user == 1);
    CHECK(d.interactions()[1].item == 0);
    CHECK(*d.interactions()[2].rating == 3.0);
    CHECK(*d.interactions()[2].timestamp == 3);
}

TEST_CASE("empty input is an empty dataset") {
    auto d = parse_dataset("", Schema::parse("ml100k"), Feedback::Explicit);
    CHECK(d.empty());
    CHECK(d.n_users() == 0);
    CHECK(d.n_items() == 0);
    auto s = compute_stats(d);
    CHECK(!s.sparsity_pct);
}

TEST_CASE("parse errors carry the line number") {
    const auto schema = Schema::parse("ml100k");
    try {
        parse_dataset("u1\ti1\t5\t1\n\nu2\ti1\tfive\t2\n", schema, Feedback::Explicit);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_dataset("u1\ti1\n", schema, Feedback::Explicit), ParseError);
}

TEST_CASE("feedback and schema must agree") {
    CHECK_THROWS_AS(parse_dataset("u\ti\t5\t1\n", Schema::parse("ml100k"), Feedback::Implicit),
                    ConfigError);
    CHECK_THROWS_AS(parse_dataset("u,i\n", Schema::parse("ui"), Feedback::Explicit), ConfigError);
    auto d = parse_dataset("u,i\nv,i\n", Schema::parse("delim=comma,user=0,item=1,rating=none,timestamp=none"),
                           Feedback::Implicit);
    CHECK(d.size() == 2);
    CHECK(!d.interactions()[0].rating);
}

TEST_CASE("schema presets") {
    auto ml1m = parse_dataset("1::10::4::978300760\n", Schema::parse("ml1m"), Feedback::Explicit);
    CHECK(ml1m.size() == 1);
    auto amazon = parse_dataset("item9,user3,5.0,1400000000\n", Schema::parse("amazon"), Feedback::Explicit);
    CHECK(amazon.users().id(0) == "user3");
    CHECK(amazon.items().id(0) == "item9");
    auto gowalla = parse_dataset("0\t2010-10-19T23:55:27Z\t30.23\t-97.79\t22847\n",
                                 Schema::parse("gowalla"), Feedback::Implicit);
    CHECK(gowalla.items().id(0) == "22847");
    CHECK(*gowalla.interactions()[0].timestamp == 1287532527);
    auto recbole = parse_dataset("user_id:token\titem_id:token\trating:float\ttimestamp:float\n1\t2\t3\t4\n",
                                 Schema::parse("recbole"), Feedback::Explicit);
    CHECK(recbole.size() == 1);
    CHECK_THROWS_AS(Schema::parse("nonsense"), ConfigError);
}

TEST_CASE("feedback names") {
    CHECK(feedback_from_string("implicit") == Feedback::Implicit);
    CHECK(to_string(Feedback::Explicit) == "explicit");
    CHECK_THROWS_AS(feedback_from_string("both"), ConfigError);
}

TEST_CASE("rating entropy") {
    auto same = parse_dataset("a\tx\t5\t0\nb\tx\t5\t0\nc\ty\t5\t0\n", Schema::parse("ml100k"), Feedback::Explicit);
    CHECK(rating_entropy(same) == doctest::Approx(0.0));
    auto four = parse_dataset("a\tx\t1\t0\nb\tx\t2\t0\nc\ty\t3\t0\nd\ty\t4\t0\n", Schema::parse("ml100k"),
                              Feedback::Explicit);
    CHECK(rating_entropy(four) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(rating_entropy(four, EntropyBase::Two) == doctest::Approx(2.0));
}

TEST_CASE("stats are order independent") {
    Rng rng(5);
    auto edges = testing::random_edges(rng, 8, 9, 0.4);
    Rng r1(9), r2(9);
    auto a = testing::dataset_from_edges(edges, &r1);
    std::vector<std::pair<testing::Edge, double>> rows;
    for (const auto& r : a.interactions())
        rows.push_back({{a.users().id(r.user), a.items().id(r.item)}, *r.rating});
    std::reverse(rows.begin(), rows.end());
    Dataset b("synthetic", Feedback::Explicit);
    for (const auto& [e, v] : rows) b.add(e.first, e.second, v);
    auto sa = compute_stats(a), sb = compute_stats(b);
    CHECK(sa.n_users == sb.n_users);
    CHECK(sa.n_items == sb.n_items);
    CHECK(*sa.sparsity_pct == *sb.sparsity_pct);
    CHECK(*sa.entropy == doctest::Approx(*sb.entropy).epsilon(1e-15));
    CHECK(sa.avg_int_per_user == sb.avg_int_per_user);
}

TEST_CASE("small stats by hand") {
    auto d = parse_dataset("a\tx\t1\t0\na\ty\t2\t0\nb\tx\t1\t0\nb\tz\t2\t0\n", Schema::parse("ml100k"),
                           Feedback::Explicit);
    auto s = compute_stats(d);
    CHECK(s.n_users == 2);
    CHECK(s.n_items == 3);
    CHECK(s.avg_int_per_user == doctest::Approx(2.0));
    CHECK(s.avg_int_per_item == doctest::Approx(4.0 / 3.0));
    CHECK(*s.sparsity_pct == doctest::Approx(100.0 * (1.0 - 4.0 / 6.0)));
    CHECK(*s.entropy == doctest::Approx(std::log(2.0)));
    auto implicit = parse_dataset("a x\n", Schema::parse("ui"), Feedback::Implicit);
    CHECK(!compute_stats(implicit).entropy);
}

TEST_CASE("write then load round trip") {
    auto d = parse_dataset("u1\ti1\t4.5\t10\nu2\ti3\t2\t11\n", Schema::parse("ml100k"), Feedback::Explicit);
    auto path = std::filesystem::temp_directory_path() / "greenrec_ingest_roundtrip.tsv";
    write_dataset(path, d);
    auto back = load_dataset(path, Schema::parse("ml100k"), Feedback::Explicit);
    CHECK(back.interactions() == d.interactions());
    CHECK(back.users().ids() == d.users().ids());
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_dataset(path, Schema::parse("ml100k"), Feedback::Explicit), Error);
}
