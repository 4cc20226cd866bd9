#pragma once

#include <cstdint>
#include <vector>

#include "imbopt/errors.hpp"

namespace imbopt {

// One named stream per randomness consumer. Keeping the streams independent
// means e.g. a different model width never shifts the batch shuffles.
enum class Stream : std::uint64_t {
    Init = 1,      // parameter initialization
    Data = 2,      // dataset synthesis (train)
    TestData = 3,  // dataset synthesis (balanced test split)
    Batching = 4,  // epoch shuffles / batch plans
    Noise = 5,     // Monte-Carlo noise draws
};

/// Deterministic splittable PRNG.
///
/// The (seed, stream_id) pair is expanded with SplitMix64 into the 256-bit
/// state of a xoshiro256++ generator. Identical (seed, stream_id) therefore
/// reproduces the identical uint64 sequence on any platform; derived values
/// that go through libm (normal()) are bit-stable on a given platform.
class SeededRng {
public:
    SeededRng(std::uint64_t seed, std::uint64_t stream_id);
    SeededRng(std::uint64_t seed, Stream stream) : SeededRng(seed, static_cast<std::uint64_t>(stream)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64();
    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01();
    /// Uniform in (0, 1]; safe as a log() argument.
    double uniform_open01();
    /// Standard normal via Box-Muller on the uniform stream (pairs cached).
    double normal();
    /// Unbiased integer in [0, n) by rejection.
    std::uint64_t uniform_below(std::uint64_t n);

    /// Child generator with a stream id derived from (stream_id, child_id);
    /// used to give every run/class/purpose its own reproducible stream.
    SeededRng split(std::uint64_t child_id) const;

    /// Fisher-Yates using this generator (std::shuffle is not portable).
    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.empty()) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

private:
    std::uint64_t state_[4];
    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

/// Derived stream id for manifest bookkeeping (same mix used by split()).
std::uint64_t derive_stream_id(std::uint64_t stream_id, std::uint64_t child_id);

/// k distinct indices from [0, n), order-deterministic (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(SeededRng& rng, std::size_t n, std::size_t k);

/// Gaussian draw with the given mean and per-coordinate variance.
/// cov_diag entries must be strictly positive.
std::vector<double> gaussian_sample(SeededRng& rng, const std::vector<double>& mean,
                                    const std::vector<double>& cov_diag);

}  // namespace imbopt
