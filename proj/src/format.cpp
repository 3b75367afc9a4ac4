#include "steerbench/format.hpp"

#include <array>
#include <charconv>
#include <cstdio>

#include "steerbench/errors.hpp"

namespace steerbench {

std::string format_double(double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) throw Error("format_double: conversion failed");
    return std::string(buf.data(), ptr);
}

std::string format_fixed(double value, int decimals) {
    std::array<char, 64> buf{};
    const int n = std::snprintf(buf.data(), buf.size(), "%.*f", decimals, value);
    if (n < 0 || n >= static_cast<int>(buf.size())) throw Error("format_fixed: conversion failed");
    return std::string(buf.data(), static_cast<std::size_t>(n));
}

} // namespace steerbench
