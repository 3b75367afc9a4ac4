#include "steerbench/profile.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "steerbench/errors.hpp"

namespace steerbench {

void BetaPrior::validate() const {
    if (!(alpha >= 1.0) || !(beta >= 1.0))
        throw ConfigError("beta prior parameters must be >= 1, got alpha=" +
                          std::to_string(alpha) + " beta=" + std::to_string(beta));
}

BetaProfile BetaProfile::from_prior(const BetaPrior& prior, ScoreContext provenance) {
    prior.validate();
    BetaProfile profile;
    profile.alpha = profile.prior_alpha = prior.alpha;
    profile.beta = profile.prior_beta = prior.beta;
    profile.provenance = std::move(provenance);
    return profile;
}

double BetaProfile::variance() const {
    const double s = alpha + beta;
    return alpha * beta / (s * s * (s + 1.0));
}

double BetaProfile::stddev() const { return std::sqrt(variance()); }

double belief_increment(double confidence) {
    if (!(confidence >= 0.5 && confidence <= 1.0))
        throw DataError("label confidence must lie in [0.5, 1], got " +
                        std::to_string(confidence));
    return 2.0 * (confidence - 0.5);
}

BetaProfile update_profile(const BetaProfile& profile, Answer answer, Valence valence,
                           double confidence) {
    const double delta = belief_increment(confidence);
    BetaProfile next = profile;
    const bool consistent = (answer == Answer::yes) == (valence == Valence::positive);
    if (consistent)
        next.alpha += delta;
    else
        next.beta += delta;
    ++next.n_updates;
    return next;
}

BetaProfile estimate_profile(const std::vector<AnswerRecord>& responses, const BetaPrior& prior,
                             ScoreContext provenance) {
    BetaProfile profile = BetaProfile::from_prior(prior, std::move(provenance));
    for (const AnswerRecord& record : responses)
        profile = update_profile(profile, record.answer, record.valence, record.confidence);
    return profile;
}

BetaProfile maximally_steered(const std::vector<PersonaStatement>& profiling_sample,
                              Valence direction, const BetaPrior& prior,
                              ScoreContext provenance) {
    BetaProfile profile = BetaProfile::from_prior(prior, std::move(provenance));
    for (const PersonaStatement& statement : profiling_sample) {
        const Answer aligned = (statement.direction == direction) ? Answer::yes : Answer::no;
        profile = update_profile(profile, aligned, statement.direction,
                                 statement.label_confidence);
    }
    return profile;
}

double ProfileAggregate::stddev() const { return std::sqrt(variance); }

ProfileAggregate aggregate_trials(const std::vector<BetaProfile>& profiles,
                                  const std::optional<std::vector<double>>& weights) {
    if (profiles.empty()) throw Error("cannot aggregate an empty list of profiles");

    ProfileAggregate aggregate;
    aggregate.components = profiles;
    if (weights) {
        if (weights->size() != profiles.size())
            throw Error("weight count " + std::to_string(weights->size()) +
                        " does not match profile count " + std::to_string(profiles.size()));
        double total = 0.0;
        for (double w : *weights) {
            if (!(w >= 0.0)) throw Error("mixture weights must be non-negative");
            total += w;
        }
        if (!(total > 0.0)) throw Error("mixture weights must not all be zero");
        aggregate.weights.reserve(weights->size());
        for (double w : *weights) aggregate.weights.push_back(w / total);
    } else {
        aggregate.weights.assign(profiles.size(), 1.0 / static_cast<double>(profiles.size()));
    }

    double mean = 0.0;
    for (std::size_t i = 0; i < profiles.size(); ++i)
        mean += aggregate.weights[i] * profiles[i].mean();
    // Law of total variance: E[var] + var of the component means.
    double variance = 0.0;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const double d = profiles[i].mean() - mean;
        variance += aggregate.weights[i] * (profiles[i].variance() + d * d);
    }
    aggregate.mean = mean;
    aggregate.variance = variance;
    return aggregate;
}

} // namespace steerbench
