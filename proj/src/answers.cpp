#include "steerbench/answers.hpp"

#include "steerbench/errors.hpp"

namespace steerbench {

const char* to_string(Answer a) { return a == Answer::yes ? "yes" : "no"; }

Answer answer_from_string(std::string_view s) {
    if (s == "yes") return Answer::yes;
    if (s == "no") return Answer::no;
    throw DataError("unknown answer: " + std::string(s));
}

std::string ScoreContext::context_tag() const {
    if (!steering_direction) return "baseline";
    return to_string(*steering_direction);
}

AnswerRecord make_answer_record(const ScoredAnswer& scored, const PersonaStatement& statement,
                                const ScoreContext& context) {
    AnswerRecord record;
    record.answer = scored.answer;
    record.logprob_gap = scored.logprob_gap;
    record.valence = statement.direction;
    record.confidence = statement.label_confidence;
    record.dimension = context.dimension;
    record.budget_k = context.budget_k;
    record.trials = context.trials;
    return record;
}

} // namespace steerbench
