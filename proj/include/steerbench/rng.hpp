#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace steerbench {

std::uint64_t splitmix64(std::uint64_t x);

// Order-sensitive accumulator that folds coordinate fields (master seed,
// model, dimension, direction, budget, trial indices, purpose tag) into a
// 64-bit seed. Every random draw in the harness derives from one of these,
// so any sub-run can be recomputed in isolation and still match a full run.
class SeedKey {
public:
    explicit SeedKey(std::uint64_t master);

    SeedKey& mix(std::string_view field);
    SeedKey& mix(std::uint64_t value);
    SeedKey& mix(int value) { return mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(value))); }

    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_;
};

// mt19937_64 plus hand-rolled draws. std::uniform_int_distribution and
// std::shuffle are implementation-defined, which would break seed
// reproducibility across standard libraries; the engine's output sequence
// itself is pinned by the standard.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on the open interval (0,1); never returns an endpoint.
    double unit_open() {
        const std::uint64_t bits = next_u64() >> 11; // top 53 bits
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    // Uniform in [0, bound) by rejection; bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices from [0, n), in sampled order (partial Fisher-Yates).
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

private:
    std::mt19937_64 engine_;
};

} // namespace steerbench
