#pragma once

#include <string>

namespace steerbench {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

/// Fixed-point with the given number of decimals (used by report tables).
std::string format_fixed(double value, int decimals);

} // namespace steerbench
