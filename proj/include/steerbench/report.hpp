#pragma once

#include <string>
#include <vector>

#include "steerbench/metrics.hpp"

namespace steerbench {

// Machine-readable emitters use shortest-round-trip floats; the markdown
// tables round the way the usual presentation does (indices to 2 decimals,
// baseline probabilities to 3).

std::string curves_to_csv(const std::vector<SteerabilityCurve>& curves);

std::string indices_to_json(const std::vector<SteerabilityIndex>& indices);

std::string baseline_to_csv(const std::vector<BaselineRow>& rows);
std::string baseline_to_markdown(const std::vector<BaselineRow>& rows);

std::string one_shot_to_csv(const OneShotSummary& summary);
std::string one_shot_to_markdown(const OneShotSummary& summary);

// One plot per dimension: every curve (typically the positive and negative
// series) on shared axes, mean lines over mean +- std bands.
std::string curves_to_svg(const std::string& dimension,
                          const std::vector<SteerabilityCurve>& curves);

} // namespace steerbench
