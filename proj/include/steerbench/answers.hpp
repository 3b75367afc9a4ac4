#pragma once

#include <optional>
#include <string>

#include "steerbench/persona.hpp"

namespace steerbench {

enum class Answer { yes, no };

const char* to_string(Answer a);
Answer answer_from_string(std::string_view s);

/// Sign convention for the whole pipeline: yes iff the gap is >= 0.
inline Answer answer_from_gap(double logprob_gap) {
    return logprob_gap >= 0.0 ? Answer::yes : Answer::no;
}

struct TrialIds {
    int experiment_trial = 0;
    int steering_trial = 0;

    bool operator==(const TrialIds&) const = default;
};

// One extracted yes/no answer with the profiling statement's valence and
// confidence attached, tagged with the coordinates it was scored under.
struct AnswerRecord {
    Answer answer = Answer::yes;
    double logprob_gap = 0.0;
    Valence valence = Valence::positive;
    double confidence = 1.0;
    std::string dimension;
    int budget_k = 0;
    TrialIds trials;
};

// What a backend returns for one prompt; the caller attaches coordinates.
struct ScoredAnswer {
    Answer answer = Answer::yes;
    double logprob_gap = 0.0;
};

// Coordinates known at submission time. Aggregation keys on these, never on
// arrival order, so scoring may complete in any order.
struct ScoreContext {
    std::string dimension;
    std::optional<Valence> steering_direction; // nullopt = unsteered baseline
    int budget_k = 0;
    TrialIds trials;

    std::string context_tag() const; // "baseline", "positive" or "negative"
};

AnswerRecord make_answer_record(const ScoredAnswer& scored, const PersonaStatement& statement,
                                const ScoreContext& context);

} // namespace steerbench
