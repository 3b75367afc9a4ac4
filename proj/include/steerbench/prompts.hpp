#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "steerbench/persona.hpp"

namespace steerbench {

// Which dimension/direction to steer toward and with how many statements.
// budget_k = 0 is the unsteered baseline.
struct SteeringSpec {
    std::string dimension;
    Valence direction = Valence::positive;
    int budget_k = 0;
};

// Abstract (system, user) text pair plus the profiling statement whose
// valence and confidence drive later scoring. Chat-template wrapping is a
// backend concern; this layer never emits role markers.
struct ChatPrompt {
    std::string system_text;
    std::string user_text;
    PersonaStatement profiling_statement;
};

// budget_k distinct statements drawn uniformly without replacement from the
// direction-matching steering split, in sampled order.
std::vector<PersonaStatement> sample_steering_statements(const DimensionDataset& dataset,
                                                         const SteeringSpec& spec,
                                                         std::uint64_t rng_seed);

// With steering statements: the principles header, one statement per line
// (single leading space), a blank line, then the answer-criteria block.
// Without steering: the criteria block alone.
std::string render_system_prompt(const std::vector<PersonaStatement>& steering,
                                 bool include_answer_criteria = true);

// The polar profiling question around one statement.
std::string render_profiling_prompt(const PersonaStatement& statement);

ChatPrompt build_prompt(const DimensionDataset& dataset, const SteeringSpec& spec,
                        const PersonaStatement& profiling_statement, std::uint64_t rng_seed);

} // namespace steerbench
