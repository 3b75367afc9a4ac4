#pragma once

#include <optional>
#include <vector>

#include "steerbench/answers.hpp"
#include "steerbench/persona.hpp"

namespace steerbench {

struct BetaPrior {
    double alpha = 1.0;
    double beta = 1.0;

    void validate() const; // both >= 1 so densities stay bounded
};

// A behavioral marginal on [0,1] as a beta posterior. The prior is carried
// along so conservation (alpha + beta - prior sum = sum of increments) stays
// checkable after any number of folds.
struct BetaProfile {
    double alpha = 1.0;
    double beta = 1.0;
    double prior_alpha = 1.0;
    double prior_beta = 1.0;
    long n_updates = 0;
    ScoreContext provenance; // cell coordinates; steering trials are pooled

    static BetaProfile from_prior(const BetaPrior& prior, ScoreContext provenance = {});

    double mean() const { return alpha / (alpha + beta); }
    double variance() const;
    double stddev() const;
};

// delta = 2 * (confidence - 0.5), the weight a single answer contributes.
double belief_increment(double confidence);

// (yes, positive) and (no, negative) push mass toward alpha; the two
// mismatched pairs push toward beta.
BetaProfile update_profile(const BetaProfile& profile, Answer answer, Valence valence,
                           double confidence);

// Left fold of update_profile over the responses; addition commutes, so the
// result is order-independent.
BetaProfile estimate_profile(const std::vector<AnswerRecord>& responses, const BetaPrior& prior,
                             ScoreContext provenance = {});

// The profile a fully direction-aligned model would produce on this exact
// profiling sample: answers match statement valence for the positive
// direction and complement it for the negative direction.
BetaProfile maximally_steered(const std::vector<PersonaStatement>& profiling_sample,
                              Valence direction, const BetaPrior& prior,
                              ScoreContext provenance = {});

// Equal-weight (or caller-weighted) mixture of per-trial profiles; summary
// moments via the law of total variance.
struct ProfileAggregate {
    std::vector<BetaProfile> components;
    std::vector<double> weights; // normalized, non-negative, sum to 1
    double mean = 0.0;
    double variance = 0.0;

    double stddev() const;
};

ProfileAggregate aggregate_trials(const std::vector<BetaProfile>& profiles,
                                  const std::optional<std::vector<double>>& weights = {});

} // namespace steerbench
