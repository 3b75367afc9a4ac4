#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "steerbench/errors.hpp"
#include "steerbench/profile.hpp"
#include "steerbench/rng.hpp"

using namespace steerbench;

namespace {

AnswerRecord record(Answer answer, Valence valence, double confidence) {
    AnswerRecord r;
    r.answer = answer;
    r.valence = valence;
    r.confidence = confidence;
    r.logprob_gap = answer == Answer::yes ? 1.0 : -1.0;
    return r;
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

} // namespace

TEST_CASE("belief_increment maps confidence to evidence weight") {
    CHECK(belief_increment(0.5) == 0.0);
    CHECK(belief_increment(1.0) == 1.0);
    CHECK(belief_increment(0.75) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(belief_increment(0.97554) == doctest::Approx(0.95108).epsilon(1e-12));
    CHECK_THROWS_AS(belief_increment(0.49), DataError);
    CHECK_THROWS_AS(belief_increment(1.01), DataError);
}

TEST_CASE("prior validation rejects parameters below one") {
    CHECK_NOTHROW((BetaPrior{1.0, 1.0}.validate()));
    CHECK_NOTHROW((BetaPrior{2.5, 1.0}.validate()));
    CHECK_THROWS_AS((BetaPrior{0.9, 1.0}.validate()), ConfigError);
    CHECK_THROWS_AS((BetaPrior{1.0, 0.0}.validate()), ConfigError);
    CHECK_THROWS_AS(BetaProfile::from_prior(BetaPrior{0.5, 0.5}), ConfigError);
}

TEST_CASE("update_profile routes evidence by answer/valence agreement") {
    const BetaProfile prior = BetaProfile::from_prior(BetaPrior{});

    // Behavior-consistent pairs load alpha...
    auto p = update_profile(prior, Answer::yes, Valence::positive, 1.0);
    CHECK(p.alpha == 2.0);
    CHECK(p.beta == 1.0);
    CHECK(p.n_updates == 1);

    p = update_profile(prior, Answer::no, Valence::negative, 1.0);
    CHECK(p.alpha == 2.0);
    CHECK(p.beta == 1.0);

    // ...and the mismatched pairs load beta.
    p = update_profile(prior, Answer::no, Valence::positive, 1.0);
    CHECK(p.alpha == 1.0);
    CHECK(p.beta == 2.0);

    p = update_profile(prior, Answer::yes, Valence::negative, 1.0);
    CHECK(p.alpha == 1.0);
    CHECK(p.beta == 2.0);

    // Uninformative labels move nothing but still count as an update.
    p = update_profile(prior, Answer::yes, Valence::positive, 0.5);
    CHECK(p.alpha == 1.0);
    CHECK(p.beta == 1.0);
    CHECK(p.n_updates == 1);
}

TEST_CASE("profile moments match the beta closed forms") {
    BetaProfile p;
    p.alpha = 3.0;
    p.beta = 5.0;
    CHECK(p.mean() == doctest::Approx(3.0 / 8.0).epsilon(1e-15));
    CHECK(p.variance() == doctest::Approx(15.0 / (64.0 * 9.0)).epsilon(1e-15));
    CHECK(p.stddev() == doctest::Approx(std::sqrt(15.0 / 576.0)).epsilon(1e-15));
}

TEST_CASE("estimate_profile is a left fold with conserved mass") {
    Rng rng(314);
    std::vector<AnswerRecord> responses;
    double expected_mass = 0.0;
    for (int i = 0; i < 200; ++i) {
        const Answer a = rng.below(2) == 0 ? Answer::yes : Answer::no;
        const Valence v = rng.below(2) == 0 ? Valence::positive : Valence::negative;
        const double c = 0.5 + 0.5 * rng.unit_open();
        responses.push_back(record(a, v, c));
        expected_mass += 2.0 * (c - 0.5);
    }

    const BetaPrior prior{1.5, 2.0};
    const auto profile = estimate_profile(responses, prior);
    CHECK(profile.n_updates == 200);
    CHECK(profile.prior_alpha == 1.5);
    CHECK(profile.prior_beta == 2.0);
    // Conservation: total added mass equals the sum of increments.
    const double added = (profile.alpha - profile.prior_alpha) +
                         (profile.beta - profile.prior_beta);
    CHECK(added == doctest::Approx(expected_mass).epsilon(1e-12));

    // Empty evidence returns the prior unchanged.
    const auto empty = estimate_profile({}, prior);
    CHECK(empty.alpha == 1.5);
    CHECK(empty.beta == 2.0);
    CHECK(empty.n_updates == 0);
}

TEST_CASE("estimate_profile is order-independent") {
    Rng rng(2718);
    std::vector<AnswerRecord> responses;
    for (int i = 0; i < 64; ++i) {
        responses.push_back(record(rng.below(2) == 0 ? Answer::yes : Answer::no,
                                   rng.below(2) == 0 ? Valence::positive : Valence::negative,
                                   0.5 + 0.5 * rng.unit_open()));
    }
    const auto reference = estimate_profile(responses, BetaPrior{});
    for (int shuffle = 0; shuffle < 50; ++shuffle) {
        rng.shuffle(responses);
        const auto permuted = estimate_profile(responses, BetaPrior{});
        CHECK(std::abs(permuted.alpha - reference.alpha) <= 1e-12);
        CHECK(std::abs(permuted.beta - reference.beta) <= 1e-12);
        CHECK(permuted.n_updates == reference.n_updates);
    }
}

TEST_CASE("maximally_steered mirrors across directions on a balanced sample") {
    const auto sample = balanced_sample(10, 1.0);

    const auto max_pos = maximally_steered(sample, Valence::positive, BetaPrior{});
    const auto max_neg = maximally_steered(sample, Valence::negative, BetaPrior{});

    // All 20 statements align perfectly: positives answered yes, negatives no.
    CHECK(max_pos.alpha == 21.0);
    CHECK(max_pos.beta == 1.0);
    CHECK(max_neg.alpha == 1.0);
    CHECK(max_neg.beta == 21.0);
    CHECK(max_pos.mean() + max_neg.mean() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("maximally_steered uses each statement's own confidence") {
    std::vector<PersonaStatement> sample{
        PersonaStatement::make("a", "d", Valence::positive, 0.8),
        PersonaStatement::make("b", "d", Valence::negative, 0.9),
    };
    const auto max_pos = maximally_steered(sample, Valence::positive, BetaPrior{});
    // positive statement -> yes -> alpha += 0.6; negative -> no -> alpha += 0.8
    CHECK(max_pos.alpha == doctest::Approx(1.0 + 0.6 + 0.8).epsilon(1e-12));
    CHECK(max_pos.beta == 1.0);

    const auto max_neg = maximally_steered(sample, Valence::negative, BetaPrior{});
    CHECK(max_neg.alpha == 1.0);
    CHECK(max_neg.beta == doctest::Approx(1.0 + 0.6 + 0.8).epsilon(1e-12));
}

TEST_CASE("a fully consistent sample converges to the steered extreme") {
    // Answering every statement in perfect agreement with the positive
    // direction reproduces maximally_steered exactly.
    const auto sample = balanced_sample(25, 0.95);
    std::vector<AnswerRecord> responses;
    for (const auto& s : sample) {
        responses.push_back(record(s.direction == Valence::positive ? Answer::yes : Answer::no,
                                   s.direction, s.label_confidence));
    }
    const auto estimated = estimate_profile(responses, BetaPrior{});
    const auto maximal = maximally_steered(sample, Valence::positive, BetaPrior{});
    CHECK(estimated.alpha == doctest::Approx(maximal.alpha).epsilon(1e-12));
    CHECK(estimated.beta == doctest::Approx(maximal.beta).epsilon(1e-12));
}

TEST_CASE("posterior mean tracks the underlying yes-rate") {
    // Simulated evidence: positive-valence statements answered yes with
    // probability p, unit confidence. The posterior mean must land within a
    // few standard errors of p.
    for (const double p : {0.1, 0.5, 0.9}) {
        Rng rng(1000 + static_cast<int>(p * 100));
        const int n = 400;
        std::vector<AnswerRecord> responses;
        for (int i = 0; i < n; ++i) {
            const bool yes = rng.unit_open() < p;
            responses.push_back(
                record(yes ? Answer::yes : Answer::no, Valence::positive, 1.0));
        }
        const auto profile = estimate_profile(responses, BetaPrior{});
        const double tol = 4.0 * std::sqrt(p * (1.0 - p) / n) + 2.0 / n;
        CHECK(std::abs(profile.mean() - p) < tol);
    }
}

TEST_CASE("aggregate_trials with one component is that component") {
    BetaProfile p;
    p.alpha = 4.0;
    p.beta = 2.0;
    const auto agg = aggregate_trials({p});
    CHECK(agg.mean == doctest::Approx(p.mean()).epsilon(1e-15));
    CHECK(agg.variance == doctest::Approx(p.variance()).epsilon(1e-15));
    CHECK(agg.weights == std::vector<double>{1.0});
}

TEST_CASE("aggregate_trials of identical components adds no dispersion") {
    BetaProfile p;
    p.alpha = 7.0;
    p.beta = 3.0;
    const auto agg = aggregate_trials({p, p, p});
    CHECK(agg.mean == doctest::Approx(p.mean()).epsilon(1e-15));
    CHECK(agg.variance == doctest::Approx(p.variance()).epsilon(1e-14));
}

TEST_CASE("aggregate_trials applies the law of total variance") {
    BetaProfile lo;
    lo.alpha = 1.0;
    lo.beta = 2.0; // mean 1/3
    BetaProfile hi;
    hi.alpha = 2.0;
    hi.beta = 1.0; // mean 2/3
    const auto agg = aggregate_trials({lo, hi});
    CHECK(agg.mean == doctest::Approx(0.5).epsilon(1e-15));
    const double within = 0.5 * (lo.variance() + hi.variance());
    const double between = 0.5 * (std::pow(1.0 / 3.0 - 0.5, 2) + std::pow(2.0 / 3.0 - 0.5, 2));
    CHECK(agg.variance == doctest::Approx(within + between).epsilon(1e-14));
    CHECK(agg.stddev() == doctest::Approx(std::sqrt(within + between)).epsilon(1e-14));
}

TEST_CASE("aggregate_trials validates caller-supplied weights") {
    BetaProfile p;
    const std::vector<BetaProfile> two{p, p};
    CHECK_THROWS_AS(aggregate_trials({}), Error);
    CHECK_THROWS_AS(aggregate_trials(two, std::vector<double>{1.0}), Error);
    CHECK_THROWS_AS(aggregate_trials(two, std::vector<double>{1.0, -0.5}), Error);
    CHECK_THROWS_AS(aggregate_trials(two, std::vector<double>{0.0, 0.0}), Error);

    BetaProfile q;
    q.alpha = 3.0;
    q.beta = 1.0;
    const auto agg = aggregate_trials({p, q}, std::vector<double>{3.0, 1.0});
    CHECK(agg.weights[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(agg.weights[1] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(agg.mean == doctest::Approx(0.75 * 0.5 + 0.25 * 0.75).epsilon(1e-15));
}
