#include "effort/adaptation.hpp"
#include "effort/error.hpp"

#include "support/oracles.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace effort;

namespace {

auto neighbors_with(std::vector<double> similarities) -> NeighborList
{
    NeighborList out;
    for (std::size_t i = 0; i < similarities.size(); ++i) {
        out.push_back({i, 1.0 / similarities[i] - 1.0, similarities[i]});
    }
    return out;
}

auto sized_schema() -> Schema
{
    return parse_schema("id:id\nfp:size_numeric\nx:numeric\nlang:categorical\neffort:effort\n");
}

auto sized(std::string id, double fp, double x, std::string lang, double effort) -> Project
{
    return Project{std::move(id), {fp, x, std::move(lang)}, effort};
}

auto constant_tree(std::size_t arity, double value) -> ModelTree
{
    ModelTree t;
    for (std::size_t j = 0; j < arity; ++j) {
        t.input_names.push_back("d" + std::to_string(j));
    }
    t.root.model.intercept = value;
    t.root.n = 10;
    return t;
}

} // namespace

TEST_CASE("strategy tokens round-trip")
{
    for (auto s : all_strategies()) {
        CHECK(parse_strategy(to_token(s)) == s);
    }
    CHECK(to_token(Strategy::mt_eba) == "mt-eba");
    CHECK(to_token(Strategy::l_eba) == "l-eba");
    CHECK_THROWS_AS(parse_strategy("MT-EBA"), Error);
}

TEST_CASE("estimate_eba")
{
    const std::vector<double> efforts{500, 100, 200, 300};
    CHECK(estimate_eba({{0, 0.1, 0.9}}, efforts) == 500.0);
    CHECK(estimate_eba({{1, 0.1, 0.9}, {2, 0.2, 0.8}, {3, 0.3, 0.7}}, efforts) == 200.0);
    CHECK(estimate_eba({{1, 0.1, 0.9}, {2, 0.2, 0.8}}, efforts) == 150.0);
    CHECK_THROWS_AS(estimate_eba({}, efforts), Error);
}

TEST_CASE("estimate_weighted_mean")
{
    const std::vector<double> efforts{100, 200, 300};
    // Weights 0.8 and 0.2: 0.8 * 100 + 0.2 * 200.
    CHECK(estimate_weighted_mean(neighbors_with({0.8, 0.2}), efforts) == doctest::Approx(120.0).epsilon(1e-14));
    CHECK(estimate_weighted_mean(neighbors_with({0.4}), efforts) == 100.0);
    const auto equal = neighbors_with({0.5, 0.5, 0.5});
    CHECK(estimate_weighted_mean(equal, efforts) == doctest::Approx(estimate_eba(equal, efforts)));
    CHECK_THROWS_AS(estimate_weighted_mean({}, efforts), Error);
}

TEST_CASE("estimate_similarity")
{
    const std::vector<double> efforts{120, 240, 360};
    // (0.5 * 120 + 0.25 * 240) / 0.75
    CHECK(estimate_similarity(neighbors_with({0.5, 0.25}), efforts) == doctest::Approx(160.0).epsilon(1e-14));
    CHECK(estimate_similarity(neighbors_with({0.3}), efforts) == 120.0);
    CHECK(estimate_similarity(neighbors_with({0.2, 0.2, 0.2}), efforts) == doctest::Approx(240.0));
    CHECK_THROWS_AS(estimate_similarity({}, efforts), Error);
}

TEST_CASE("weighted and similarity estimates bound and agree")
{
    testing::SyntheticSpec spec;
    spec.projects = 40;
    const auto d = testing::synthetic_dataset(spec, 8);
    const auto n = apply_normalizer(fit_normalizer(d), d);
    const auto efforts = d.efforts();
    for (std::size_t t = 0; t < 10; ++t) {
        for (std::size_t k = 1; k <= 3; ++k) {
            const auto nn = nearest_neighbors(n[t], n.projects(), n.schema(), k, t);
            double lo = 1e300;
            double hi = -1e300;
            for (const auto& x : nn) {
                lo = std::min(lo, efforts[x.project_index]);
                hi = std::max(hi, efforts[x.project_index]);
            }
            for (double e : {estimate_eba(nn, efforts), estimate_similarity(nn, efforts)}) {
                CHECK(e >= lo - 1e-9);
                CHECK(e <= hi + 1e-9);
            }
            CHECK(estimate_weighted_mean(nn, efforts) == doctest::Approx(estimate_similarity(nn, efforts)));
        }
    }
}

TEST_CASE("linear size adjustment")
{
    CHECK(linear_size_adjust(400, 100, 150) == doctest::Approx(600.0).epsilon(1e-15));
    CHECK(linear_size_adjust(400, 100, 100) == 400.0);
    CHECK_THROWS_WITH_AS(linear_size_adjust(400, 0, 100), "degenerate analogy size", Error);
    CHECK_THROWS_AS(linear_size_adjust(400, -3, 100), Error);

    const Dataset train(sized_schema(), {sized("a", 100, 1, "w", 400), sized("b", 200, 2, "w", 1000)});
    const auto target = sized("t", 150, 1, "w", 1);
    const CaseBase cb{train, train};
    const Target t{target, target};
    CHECK(estimate_linear_size(t, {{0, 0, 1}}, cb) == doctest::Approx(600.0));
    // K = 2: mean of 600 and 750.
    CHECK(estimate_linear_size(t, {{0, 0, 1}, {1, 0, 1}}, cb) == doctest::Approx(675.0));

    const auto no_size = parse_schema("x:numeric\neffort:effort\n");
    const Dataset plain(no_size, {Project{"a", {1.0}, 4.0}});
    const Project pt{"t", {1.0}, 1.0};
    CHECK_THROWS_AS(estimate_linear_size(Target{pt, pt}, {{0, 0, 1}}, CaseBase{plain, plain}), Error);
}

TEST_CASE("Mendes adaptation rules")
{
    const Dataset train(sized_schema(), {sized("a", 100, 1, "w", 300), sized("b", 50, 2, "w", 100),
                                         sized("c", 100, 4, "w", 100), sized("z", 0, 2, "w", 100)});
    const CaseBase cb{train, train};
    SUBCASE("unit ratio")
    {
        const auto t = sized("t", 100, 1, "w", 1);
        CHECK(estimate_mendes_rules(Target{t, t}, {{0, 0, 1}}, cb) == 300.0);
    }
    SUBCASE("double size")
    {
        const auto t = sized("t", 200, 1, "w", 1);
        CHECK(estimate_mendes_rules(Target{t, t}, {{0, 0, 1}}, cb) == doctest::Approx(600.0));
    }
    SUBCASE("two analogies with ratios 1 and 2")
    {
        const auto t = sized("t", 100, 1, "w", 1);
        // Ratios 100/100 = 1 and 100/50 = 2 on efforts 100, 100.
        CHECK(estimate_mendes_rules(Target{t, t}, {{2, 0, 1}, {1, 0, 1}}, cb) == doctest::Approx(150.0));
    }
    SUBCASE("several size-like columns are averaged")
    {
        const auto t = sized("t", 200, 8, "w", 1);
        const std::vector<std::size_t> cols{0, 1};
        // (200/100 + 8/4) / 2 * 100
        CHECK(estimate_mendes_rules(Target{t, t}, {{2, 0, 1}}, cb, cols) == doctest::Approx(200.0));
    }
    SUBCASE("zero analogy feature")
    {
        const auto t = sized("t", 100, 1, "w", 1);
        CHECK_THROWS_AS(estimate_mendes_rules(Target{t, t}, {{3, 0, 1}}, cb), Error);
    }
}

TEST_CASE("regression toward the mean")
{
    SUBCASE("hand evaluation")
    {
        // Productivity 400 / 100 = 4: 100 * (4 + (6 - 4) * 0.5)
        CHECK(rtm_adjust(100, 400, RtmContext{6, 0.5}) == doctest::Approx(500.0).epsilon(1e-15));
        CHECK_THROWS_AS(rtm_adjust(0, 400, RtmContext{6, 0.5}), Error);
    }
    SUBCASE("limits r = 1 and r = 0")
    {
        const Dataset train(sized_schema(), {sized("a", 120, 0.0, "w", 600), sized("b", 80, 1.0, "w", 160),
                                             sized("c", 40, 0.5, "v", 100)});
        const auto n = apply_normalizer(fit_normalizer(train), train);
        const auto target = sized("t", 100, 0.1, "w", 1);
        const auto tn = fit_normalizer(train).apply(target);
        const CaseBase cb{train, n};
        CHECK(estimate_rtm(Target{target, tn}, cb, RtmContext{3.0, 1.0}) == 600.0);
        CHECK(estimate_rtm(Target{target, tn}, cb, RtmContext{3.0, 0.0}) == 120.0 * 3.0);
    }
    SUBCASE("identical productivity gives r = 0")
    {
        const Dataset train(sized_schema(), {sized("a", 100, 0.1, "w", 500), sized("b", 20, 0.7, "v", 100),
                                             sized("c", 60, 0.2, "w", 300), sized("d", 10, 0.9, "w", 50)});
        const auto n = apply_normalizer(fit_normalizer(train), train);
        const auto ctx = build_rtm_context(CaseBase{train, n});
        CHECK(ctx.correlation == 0.0);
        CHECK(ctx.mean_productivity == doctest::Approx(5.0));
    }
    SUBCASE("analogies that are exact twins give r = 1")
    {
        const Dataset train(sized_schema(),
                            {sized("a", 100, 0.1, "w", 500), sized("a2", 100, 0.1, "w", 500),
                             sized("b", 20, 0.9, "v", 300), sized("b2", 20, 0.9, "v", 300),
                             sized("c", 60, 0.5, "u", 90), sized("c2", 60, 0.5, "u", 90)});
        const auto n = apply_normalizer(fit_normalizer(train), train);
        CHECK(build_rtm_context(CaseBase{train, n}).correlation == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("matches an independent correlation over the leave-one-out pairs")
    {
        testing::SyntheticSpec spec;
        spec.projects = 10;
        const auto d = testing::synthetic_dataset(spec, 17);
        const auto n = apply_normalizer(fit_normalizer(d), d);
        const auto ctx = build_rtm_context(CaseBase{d, n});

        const std::vector<Project> raw(d.projects().begin(), d.projects().end());
        const auto scaled = oracle::scale(raw, raw);
        std::vector<double> actual;
        std::vector<double> analogy;
        double mean = 0.0;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const auto a = oracle::scan_neighbors(scaled[i], scaled, 1, static_cast<std::ptrdiff_t>(i)).front().first;
            const double pr_i = *raw[i].effort / std::get<double>(raw[i].features[0]);
            const double pr_a = *raw[a].effort / std::get<double>(raw[a].features[0]);
            actual.push_back(pr_i);
            analogy.push_back(pr_a);
            mean += pr_i / static_cast<double>(raw.size());
        }
        CHECK(ctx.correlation == doctest::Approx(oracle::pearson(analogy, actual)).epsilon(1e-12));
        CHECK(ctx.mean_productivity == doctest::Approx(mean).epsilon(1e-12));
    }
    SUBCASE("errors")
    {
        const Dataset two(sized_schema(), {sized("a", 1, 0, "w", 1), sized("b", 2, 1, "w", 2)});
        CHECK_THROWS_AS(build_rtm_context(CaseBase{two, two}), Error);
        const auto s = parse_schema("x:numeric\neffort:effort\n");
        const Dataset plain(s, {Project{"a", {1.0}, 1.0}, Project{"b", {2.0}, 1.0}, Project{"c", {3.0}, 1.0}});
        CHECK_THROWS_AS(build_rtm_context(CaseBase{plain, plain}), Error);
    }
}

TEST_CASE("pearson correlation")
{
    CHECK(pearson_correlation(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}) == doctest::Approx(1.0));
    CHECK(pearson_correlation(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(pearson_correlation(std::vector<double>{1, 1, 1}, std::vector<double>{3, 2, 1}) == 0.0);
}

TEST_CASE("difference table")
{
    SUBCASE("two projects are each other's analogy")
    {
        const Dataset d(sized_schema(), {sized("a", 0.2, 0.4, "w", 100), sized("b", 0.6, 0.1, "v", 250)});
        const auto t = build_difference_table(d);
        REQUIRE(t.records.size() == 2);
        CHECK(t.records[0].analogy_index == 1);
        CHECK(t.records[1].analogy_index == 0);
        CHECK(t.records[0].effort_delta == -t.records[1].effort_delta);
        CHECK(t.records[0].deltas[0] == doctest::Approx(-0.4));
        CHECK(t.records[0].deltas[2] == 1.0);
        CHECK(t.input_names == std::vector<std::string>{"d_fp", "d_x", "d_lang"});
    }
    SUBCASE("identical projects give all-zero records")
    {
        const Dataset d(sized_schema(), {sized("a", 0.2, 0.4, "w", 100), sized("b", 0.2, 0.4, "w", 100),
                                         sized("c", 0.9, 0.9, "v", 900)});
        const auto t = build_difference_table(d);
        for (std::size_t i : {0U, 1U}) {
            CHECK(t.records[i].effort_delta == 0.0);
            for (double v : t.records[i].deltas) {
                CHECK(v == 0.0);
            }
        }
    }
    SUBCASE("fewer than two projects")
    {
        const Dataset d(sized_schema(), {sized("a", 0.2, 0.4, "w", 100)});
        CHECK_THROWS_AS(build_difference_table(d), Error);
    }
    SUBCASE("matches an exhaustive pairwise oracle")
    {
        testing::SyntheticSpec spec;
        spec.projects = 15;
        spec.categorical = 2;
        const auto raw = testing::synthetic_dataset(spec, 23);
        const auto d = apply_normalizer(fit_normalizer(raw), raw);
        const auto t = build_difference_table(d);
        REQUIRE(t.records.size() == 15);
        const std::vector<Project> pool(d.projects().begin(), d.projects().end());
        for (std::size_t i = 0; i < pool.size(); ++i) {
            // Exhaustive: every pairwise distance, lowest distance then lowest index.
            std::size_t best = i == 0 ? 1 : 0;
            for (std::size_t j = 0; j < pool.size(); ++j) {
                if (j != i && oracle::distance(pool[i], pool[j]) < oracle::distance(pool[i], pool[best])) {
                    best = j;
                }
            }
            const auto& r = t.records[i];
            CHECK(r.analogy_index == best);
            CHECK(r.effort_delta == *pool[i].effort - *pool[best].effort);
            for (std::size_t k = 0; k < pool[i].features.size(); ++k) {
                if (const auto* x = std::get_if<double>(&pool[i].features[k])) {
                    CHECK(r.deltas[k] == *x - std::get<double>(pool[best].features[k]));
                } else {
                    CHECK(r.deltas[k] == (pool[i].features[k] == pool[best].features[k] ? 0.0 : 1.0));
                }
            }
        }
        const auto again = build_difference_table(d);
        for (std::size_t i = 0; i < t.records.size(); ++i) {
            CHECK(again.records[i].deltas == t.records[i].deltas);
        }
        const auto m = t.to_training_matrix();
        CHECK(m.rows() == 15);
        CHECK(m.arity() == d.schema().predictor_count());
    }
}

TEST_CASE("estimate_mt")
{
    const Dataset train(sized_schema(), {sized("a", 0.1, 0.1, "w", 500), sized("b", 0.5, 0.5, "w", 600),
                                         sized("c", 0.9, 0.9, "v", 200)});
    const auto target = sized("t", 0.1, 0.12, "w", 1);

    SUBCASE("additive adjustment")
    {
        const auto r = estimate_mt(target, train, constant_tree(3, -50.0), 1, 15.0);
        CHECK(r.effort == 450.0);
        CHECK(r.floored == 0);
    }
    SUBCASE("mean of adapted analogies")
    {
        // Analogies a (500) and b (600) adapted by -50: mean of 450 and 550.
        CHECK(estimate_mt(target, train, constant_tree(3, -50.0), 2, 15.0).effort == 500.0);
    }
    SUBCASE("null tree equals plain analogy for every K")
    {
        const auto efforts = train.efforts();
        for (std::size_t k = 1; k <= 3; ++k) {
            const auto nn = nearest_neighbors(target, train.projects(), train.schema(), k);
            CHECK(estimate_mt(target, train, constant_tree(3, 0.0), k, 15.0).effort == estimate_eba(nn, efforts));
        }
    }
    SUBCASE("negative adapted efforts are floored")
    {
        const auto r = estimate_mt(target, train, constant_tree(3, -1e6), 2, 15.0);
        CHECK(r.effort == effort_floor);
        CHECK(r.floored == 2);
    }
    SUBCASE("identical target has a zero difference vector to its rank-1 analogy")
    {
        const auto nn = nearest_neighbors(train[1], train.projects(), train.schema(), 1);
        CHECK(nn[0].distance == 0.0);
        for (double v : difference_vector(train[1], train[nn[0].project_index], train.schema())) {
            CHECK(v == 0.0);
        }
    }
    SUBCASE("errors")
    {
        CHECK_THROWS_AS(estimate_mt(target, train, constant_tree(3, 0.0), 4, 15.0), Error);
        CHECK_THROWS_AS(estimate_mt(target, train, constant_tree(2, 0.0), 1, 15.0), Error);
    }
}

TEST_CASE("Estimator checks strategy requirements and normalizes on the training fold")
{
    const auto s = parse_schema("x:numeric\nc:categorical\neffort:effort\n");
    const Dataset plain(s, {Project{"a", {1.0, std::string("p")}, 10.0}, Project{"b", {3.0, std::string("q")}, 20.0},
                            Project{"c", {5.0, std::string("p")}, 30.0}});
    CHECK_THROWS_AS(Estimator(Strategy::l_eba, plain), Error);
    CHECK_THROWS_AS(Estimator(Strategy::r_eba, plain), Error);
    CHECK_THROWS_AS(Estimator(Strategy::mendes, plain), Error);

    const Estimator eba(Strategy::eba, plain);
    CHECK(eba.normalizer().range(0)->min == 1.0);
    CHECK(eba.normalizer().range(0)->max == 5.0);
    // 4.6 is nearest to 5 once scaled by the training range.
    CHECK(eba.estimate(Project{"t", {4.6, std::string("p")}, 1.0}, 1).effort == 30.0);

    const Estimator mt(Strategy::mt_eba, plain);
    REQUIRE(mt.tree());
    CHECK(mt.tree()->arity() == 2);
}
