#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "steerbench/errors.hpp"
#include "steerbench/metrics.hpp"
#include "steerbench/profile.hpp"
#include "steerbench/rng.hpp"

using namespace steerbench;

namespace {

BetaProfile beta_profile(double alpha, double beta) {
    BetaProfile p;
    p.alpha = alpha;
    p.beta = beta;
    return p;
}

std::vector<PersonaStatement> balanced_sample(int per_valence, double confidence) {
    std::vector<PersonaStatement> out;
    for (int i = 0; i < per_valence; ++i) {
        out.push_back(PersonaStatement::make("pos " + std::to_string(i), "d", Valence::positive,
                                             confidence));
        out.push_back(PersonaStatement::make("neg " + std::to_string(i), "d", Valence::negative,
                                             confidence));
    }
    return out;
}

SteerabilityIndex make_index(const std::string& dim, Valence dir, int k, int trial,
                             double value) {
    SteerabilityIndex index;
    index.dimension = dim;
    index.direction = dir;
    index.budget_k = k;
    index.experiment_trial = trial;
    index.value = value;
    return index;
}

SteerabilityCurve curve_with_k1(const std::string& dim, Valence dir, double mean_at_1) {
    SteerabilityCurve curve;
    curve.dimension = dim;
    curve.direction = dir;
    curve.points.push_back({1, mean_at_1, 0.0});
    return curve;
}

} // namespace

TEST_CASE("Distribution rejects malformed inputs") {
    CHECK_THROWS_AS(Distribution(beta_profile(0.0, 1.0)), Error);
    CHECK_THROWS_AS(Distribution(beta_profile(1.0, -2.0)), Error);
    CHECK_THROWS_AS(Distribution(ProfileAggregate{}), Error);
}

TEST_CASE("Distribution quantile inverts the CDF, single beta and mixture") {
    const Distribution single(beta_profile(2.0, 1.0));
    CHECK(single.quantile(0.25) == doctest::Approx(0.5).epsilon(1e-10)); // F(x) = x^2

    // Even mixture of Beta(1,1) and Beta(2,1): F(x) = x/2 + x^2/2, F(0.5) = 0.375.
    const auto mixture = aggregate_trials({beta_profile(1.0, 1.0), beta_profile(2.0, 1.0)});
    const Distribution mixed(mixture);
    CHECK(mixed.cdf(0.5) == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(mixed.quantile(0.375) == doctest::Approx(0.5).epsilon(1e-10));

    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
        const double q = rng.unit_open();
        CHECK(mixed.cdf(mixed.quantile(q)) == doctest::Approx(q).epsilon(1e-9));
    }
    CHECK_THROWS_AS(mixed.quantile(0.0), Error);
    CHECK_THROWS_AS(mixed.quantile(1.0), Error);
}

TEST_CASE("quantile_grid is non-decreasing and consistent with quantile()") {
    const auto agg = aggregate_trials({beta_profile(3.0, 2.0), beta_profile(12.0, 4.0)});
    const Distribution dist(agg);
    const auto grid = dist.quantile_grid(257);
    REQUIRE(grid.size() == 257);
    for (std::size_t j = 1; j < grid.size(); ++j) CHECK(grid[j] >= grid[j - 1]);
    for (const std::size_t j : {std::size_t{0}, std::size_t{128}, std::size_t{256}}) {
        const double q = (static_cast<double>(j) + 0.5) / 257.0;
        CHECK(grid[j] == doctest::Approx(dist.quantile(q)).epsilon(1e-9));
    }
}

TEST_CASE("wasserstein distance of a distribution to itself is zero") {
    const Distribution p(beta_profile(3.0, 2.0));
    CHECK(wasserstein(p, p) == 0.0);
}

TEST_CASE("wasserstein matches closed forms") {
    // Beta(2,1) vs Beta(1,2): quantiles sqrt(q) and 1-sqrt(1-q); the
    // quantile-difference integral evaluates to exactly 1/3.
    const Distribution right(beta_profile(2.0, 1.0));
    const Distribution left(beta_profile(1.0, 2.0));
    CHECK(wasserstein(right, left) == doctest::Approx(1.0 / 3.0).epsilon(1e-3));

    // Uniform vs Beta(2,1): integral of sqrt(q) - q over (0,1) is 1/6.
    const Distribution uniform(beta_profile(1.0, 1.0));
    CHECK(wasserstein(uniform, right) == doctest::Approx(1.0 / 6.0).epsilon(1e-3));
}

TEST_CASE("wasserstein self-converges as the grid is refined") {
    Rng rng(404);
    for (int i = 0; i < 4; ++i) {
        const Distribution p(beta_profile(1.0 + 40.0 * rng.unit_open(),
                                          1.0 + 40.0 * rng.unit_open()));
        const Distribution q(beta_profile(1.0 + 40.0 * rng.unit_open(),
                                          1.0 + 40.0 * rng.unit_open()));
        const double coarse = wasserstein(p, q, kDefaultWassersteinResolution);
        const double fine = wasserstein(p, q, 4 * kDefaultWassersteinResolution);
        CHECK(std::abs(coarse - fine) < 1e-4);
    }
}

TEST_CASE("wasserstein satisfies the metric axioms on random triples") {
    Rng rng(505);
    const int resolution = 256;
    for (int i = 0; i < 40; ++i) {
        const auto draw = [&] {
            return Distribution(beta_profile(1.0 + 30.0 * rng.unit_open(),
                                             1.0 + 30.0 * rng.unit_open()));
        };
        const Distribution p = draw();
        const Distribution q = draw();
        const Distribution r = draw();
        const double pq = wasserstein(p, q, resolution);
        const double qp = wasserstein(q, p, resolution);
        const double pr = wasserstein(p, r, resolution);
        const double qr = wasserstein(q, r, resolution);
        CHECK(pq >= 0.0);
        CHECK(pq == doctest::Approx(qp).epsilon(1e-12)); // symmetry
        CHECK(pq <= pr + qr + 1e-12);                    // triangle inequality
    }
}

TEST_CASE("steerability index anchors: unmoved profile scores zero") {
    const auto sample = balanced_sample(20, 0.9);
    const BetaPrior prior;
    const Distribution base(estimate_profile({}, prior));
    const Distribution max_pos(maximally_steered(sample, Valence::positive, prior));
    const Distribution max_neg(maximally_steered(sample, Valence::negative, prior));

    const auto idx = steerability_index(base, base, max_pos, max_neg, Valence::positive, 3,
                                        "d", 0);
    CHECK(idx.value == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(idx.budget_k == 3);
    CHECK(idx.dimension == "d");
    CHECK(idx.capacity == doctest::Approx(idx.residual).epsilon(1e-12));
}

TEST_CASE("steerability index anchors: full swing from one extreme to the other is one") {
    const auto sample = balanced_sample(20, 0.9);
    const BetaPrior prior;
    const Distribution max_pos(maximally_steered(sample, Valence::positive, prior));
    const Distribution max_neg(maximally_steered(sample, Valence::negative, prior));

    // Base at the opposite extreme, steered onto the target: capacity equals
    // the normalizer and the residual vanishes.
    const auto idx = steerability_index(max_neg, max_pos, max_pos, max_neg, Valence::positive);
    CHECK(idx.value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(idx.residual == 0.0);

    const auto mirrored =
        steerability_index(max_pos, max_neg, max_pos, max_neg, Valence::negative);
    CHECK(mirrored.value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("steering away from the target direction scores negative") {
    const auto sample = balanced_sample(20, 0.9);
    const BetaPrior prior;
    const Distribution base(estimate_profile({}, prior));
    const Distribution max_pos(maximally_steered(sample, Valence::positive, prior));
    const Distribution max_neg(maximally_steered(sample, Valence::negative, prior));

    // The model drifted to the negative extreme while scored against positive.
    const auto idx = steerability_index(base, max_neg, max_pos, max_neg, Valence::positive);
    CHECK(idx.value < 0.0);
    CHECK(idx.value >= -1.0 - 1e-9);
}

TEST_CASE("steerability index stays within [-1, 1] for posterior-consistent profiles") {
    Rng rng(909);
    const BetaPrior prior;
    for (int i = 0; i < 25; ++i) {
        const auto sample = balanced_sample(15, 0.6 + 0.4 * rng.unit_open());
        const auto max_pos = maximally_steered(sample, Valence::positive, prior);
        const auto max_neg = maximally_steered(sample, Valence::negative, prior);

        // Arbitrary answer patterns over the same sample stay between the extremes.
        const auto answer_randomly = [&] {
            std::vector<AnswerRecord> records;
            for (const auto& s : sample) {
                AnswerRecord r;
                r.answer = rng.below(2) == 0 ? Answer::yes : Answer::no;
                r.valence = s.direction;
                r.confidence = s.label_confidence;
                records.push_back(r);
            }
            return estimate_profile(records, prior);
        };
        const Distribution base(answer_randomly());
        const Distribution steered(answer_randomly());
        const Valence dir = rng.below(2) == 0 ? Valence::positive : Valence::negative;
        const auto idx = steerability_index(base, steered, Distribution(max_pos),
                                            Distribution(max_neg), dir, 1, "d", 0, 512);
        CHECK(idx.value <= 1.0 + 1e-9);
        CHECK(idx.value >= -1.0 - 1e-9);
        CHECK(idx.normalizer > 0.0);
        CHECK(idx.value ==
              doctest::Approx((idx.capacity - idx.residual) / idx.normalizer).epsilon(1e-12));
    }
}

TEST_CASE("a zero normalizer is rejected as degenerate") {
    // Confidence exactly 0.5 carries no evidence: both maximal marginals
    // collapse onto the prior.
    const auto sample = balanced_sample(10, 0.5);
    const BetaPrior prior;
    const Distribution base(estimate_profile({}, prior));
    const Distribution max_pos(maximally_steered(sample, Valence::positive, prior));
    const Distribution max_neg(maximally_steered(sample, Valence::negative, prior));
    CHECK_THROWS_WITH_AS(
        steerability_index(base, base, max_pos, max_neg, Valence::positive),
        doctest::Contains("degenerate"), Error);
    CHECK_THROWS_AS(steerability_index_from(0.1, 0.0, 0.0, Valence::positive, 1, "d", 0), Error);
}

TEST_CASE("build_curve averages per budget with population dispersion") {
    const std::vector<SteerabilityIndex> indices{
        make_index("d", Valence::positive, 1, 0, 0.2),
        make_index("d", Valence::positive, 1, 1, 0.4),
        make_index("d", Valence::positive, 3, 0, 0.5),
        make_index("d", Valence::positive, 3, 1, 0.7),
    };
    const auto curve = build_curve(indices, {1, 3});
    CHECK(curve.dimension == "d");
    CHECK(curve.direction == Valence::positive);
    REQUIRE(curve.points.size() == 2);
    CHECK(curve.points[0].budget_k == 1);
    CHECK(curve.points[0].mean == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(curve.points[0].std == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(curve.points[1].mean == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(curve.points[1].std == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("build_curve with a single trial reports zero dispersion") {
    const std::vector<SteerabilityIndex> indices{
        make_index("d", Valence::negative, 1, 0, -0.25),
        make_index("d", Valence::negative, 2, 0, -0.5),
    };
    const auto curve = build_curve(indices, {1, 2});
    CHECK(curve.points[0].std == 0.0);
    CHECK(curve.points[1].std == 0.0);
    CHECK(curve.points[0].mean == -0.25);
}

TEST_CASE("build_curve rejects inconsistent input") {
    const auto good = make_index("d", Valence::positive, 1, 0, 0.1);

    // Mixed dimensions or directions in the same curve.
    CHECK_THROWS_AS(build_curve({good, make_index("e", Valence::positive, 1, 1, 0.1)}, {1}),
                    Error);
    CHECK_THROWS_AS(build_curve({good, make_index("d", Valence::negative, 1, 1, 0.1)}, {1}),
                    Error);
    // Duplicate (budget, trial) cell.
    CHECK_THROWS_AS(build_curve({good, make_index("d", Valence::positive, 1, 0, 0.2)}, {1}),
                    Error);
    // Schedule must be strictly increasing.
    CHECK_THROWS_AS(build_curve({good}, {1, 1}), Error);
    CHECK_THROWS_AS(build_curve({good}, {3, 2}), Error);
    CHECK_THROWS_AS(build_curve({}, {1}), Error);
}

TEST_CASE("build_curve names every missing cell unless gap-tolerant") {
    const std::vector<SteerabilityIndex> indices{
        make_index("d", Valence::positive, 1, 0, 0.1),
        make_index("d", Valence::positive, 1, 1, 0.2),
        make_index("d", Valence::positive, 5, 0, 0.3), // trial 1 missing at k=5
    };
    try {
        build_curve(indices, {1, 3, 5});
        FAIL("expected an incomplete-curve error");
    } catch (const Error& e) {
        const std::string what = e.what();
        CHECK(what.find("k=3: no indices") != std::string::npos);
        CHECK(what.find("k=5: missing trial 1") != std::string::npos);
    }

    const auto tolerant = build_curve(indices, {1, 3, 5}, true);
    REQUIRE(tolerant.points.size() == 2);
    CHECK(tolerant.points[0].budget_k == 1);
    CHECK(tolerant.points[1].budget_k == 5);
    CHECK(tolerant.points[1].mean == doctest::Approx(0.3));
}

TEST_CASE("category map parses, rejects double assignment, defaults to other") {
    const auto map = category_map_from_json(
        R"({"personality": ["agreeableness", "openness"], "ethics": ["ends-justify-means"]})");
    CHECK(map.category_of("agreeableness") == "personality");
    CHECK(map.category_of("ends-justify-means") == "ethics");
    CHECK(map.category_of("unknown-dimension") == "other");

    CHECK_THROWS_AS(category_map_from_json(R"({"a": ["x"], "b": ["x"]})"), ConfigError);
    CHECK_THROWS_AS(category_map_from_json(R"({"a": "x"})"), ConfigError);
    CHECK_THROWS_AS(category_map_from_json("not json"), ConfigError);
    CHECK_THROWS_AS(category_map_from_json(R"(["a"])"), ConfigError);
    // Repeating the same assignment is harmless.
    CHECK_NOTHROW(category_map_from_json(R"({"a": ["x", "x"]})"));
}

TEST_CASE("one_shot_summary averages k=1 means per category and direction") {
    CategoryMap categories;
    categories.dimension_to_category = {{"agree", "personality"},
                                        {"open", "personality"},
                                        {"ends", "ethics"}};
    const std::vector<SteerabilityCurve> curves{
        curve_with_k1("agree", Valence::positive, 0.2),
        curve_with_k1("agree", Valence::negative, 0.1),
        curve_with_k1("open", Valence::positive, 0.4),
        curve_with_k1("open", Valence::negative, 0.3),
        curve_with_k1("ends", Valence::positive, 0.6),
        curve_with_k1("ends", Valence::negative, 0.5),
    };

    const auto summary = one_shot_summary(curves, categories);
    REQUIRE(summary.rows.size() == 2); // ordered by name: ethics, personality
    CHECK(summary.rows[0].category == "ethics");
    CHECK(summary.rows[0].positive == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(summary.rows[0].dimension_count == 1);
    CHECK(summary.rows[1].category == "personality");
    CHECK(summary.rows[1].positive == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(summary.rows[1].negative == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(summary.rows[1].dimension_count == 2);
    CHECK(summary.warnings.empty());

    // Average over category rows...
    CHECK(summary.average.category == "average");
    CHECK(summary.average.positive == doctest::Approx((0.6 + 0.3) / 2.0).epsilon(1e-15));
    CHECK(summary.average.negative == doctest::Approx((0.5 + 0.2) / 2.0).epsilon(1e-15));
    CHECK(summary.average.dimension_count == 3);

    // ...or over every member dimension.
    const auto flat = one_shot_summary(curves, categories, {}, SummaryAveraging::over_dimensions);
    CHECK(flat.average.positive == doctest::Approx((0.2 + 0.4 + 0.6) / 3.0).epsilon(1e-15));
    CHECK(flat.average.negative == doctest::Approx((0.1 + 0.3 + 0.5) / 3.0).epsilon(1e-15));
}

TEST_CASE("one_shot_summary follows the filter order and warns on empty categories") {
    CategoryMap categories;
    categories.dimension_to_category = {{"agree", "personality"}, {"ends", "ethics"}};
    const std::vector<SteerabilityCurve> curves{
        curve_with_k1("agree", Valence::positive, 0.2),
        curve_with_k1("ends", Valence::positive, 0.6),
    };

    const auto summary =
        one_shot_summary(curves, categories, {"personality", "politics", "ethics"});
    REQUIRE(summary.rows.size() == 2);
    CHECK(summary.rows[0].category == "personality");
    CHECK(summary.rows[1].category == "ethics");
    REQUIRE(summary.warnings.size() == 1);
    CHECK(summary.warnings[0].find("politics") != std::string::npos);
}

TEST_CASE("one_shot_summary requires a k=1 point on every curve") {
    SteerabilityCurve no_k1;
    no_k1.dimension = "agree";
    no_k1.direction = Valence::positive;
    no_k1.points.push_back({2, 0.5, 0.0});
    CHECK_THROWS_AS(one_shot_summary({no_k1}, CategoryMap{}), Error);
}

TEST_CASE("baseline_summary reports mixture moments per dimension") {
    std::map<std::string, ProfileAggregate> baselines;
    baselines["uniform"] = aggregate_trials({beta_profile(1.0, 1.0)});
    baselines["peaked"] = aggregate_trials({beta_profile(101.0, 1.0)});

    const auto rows = baseline_summary(baselines);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].dimension == "peaked");
    CHECK(rows[0].mean == doctest::Approx(101.0 / 102.0).epsilon(1e-12));
    CHECK(rows[1].dimension == "uniform");
    CHECK(rows[1].mean == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(rows[1].std == doctest::Approx(std::sqrt(1.0 / 12.0)).epsilon(1e-12));
}
