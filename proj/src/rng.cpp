#include "steerbench/rng.hpp"

#include "steerbench/errors.hpp"

namespace steerbench {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

SeedKey::SeedKey(std::uint64_t master) : state_(splitmix64(master ^ 0x5345454442454e43ULL)) {}

SeedKey& SeedKey::mix(std::string_view field) {
    // FNV-1a over the bytes, then a length marker so "ab","c" != "a","bc".
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : field) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    state_ = splitmix64(state_ ^ h);
    return mix(static_cast<std::uint64_t>(field.size()));
}

SeedKey& SeedKey::mix(std::uint64_t value) {
    state_ = splitmix64(state_ ^ value);
    return *this;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw Error("Rng::below: bound must be positive");
    // Reject above the largest multiple of bound to keep the draw unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % bound;
}

std::vector<std::size_t> Rng::sample_indices(std::size_t n, std::size_t k) {
    if (k > n) throw Error("Rng::sample_indices: k exceeds population size");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

} // namespace steerbench
