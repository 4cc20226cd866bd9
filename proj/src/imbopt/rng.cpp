#include "imbopt/rng.hpp"

#include <cmath>
#include <numbers>

namespace imbopt {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t derive_stream_id(std::uint64_t stream_id, std::uint64_t child_id) {
    std::uint64_t x = stream_id ^ (child_id * 0xD1B54A32D192ED03ULL);
    return splitmix64(x);
}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    std::uint64_t x = seed ^ (stream_id * 0x9E3779B97F4A7C15ULL);
    for (auto& s : state_) s = splitmix64(x);
}

std::uint64_t SeededRng::next_u64() {
    // xoshiro256++
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double SeededRng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform_open01() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double SeededRng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    const double u1 = uniform_open01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
}

std::uint64_t SeededRng::uniform_below(std::uint64_t n) {
    if (n == 0) throw DomainError("uniform_below: n must be positive");
    const std::uint64_t threshold = (0ULL - n) % n;  // 2^64 mod n
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

SeededRng SeededRng::split(std::uint64_t child_id) const {
    return SeededRng(seed_, derive_stream_id(stream_id_, child_id));
}

std::vector<std::size_t> sample_without_replacement(SeededRng& rng, std::size_t n, std::size_t k) {
    if (k > n) throw DomainError("sample_without_replacement: k exceeds n");
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

std::vector<double> gaussian_sample(SeededRng& rng, const std::vector<double>& mean,
                                    const std::vector<double>& cov_diag) {
    if (mean.size() != cov_diag.size())
        throw DimensionError("gaussian_sample: mean/cov_diag length mismatch");
    std::vector<double> out(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
        if (!(cov_diag[i] > 0.0))
            throw DomainError("gaussian_sample: nonpositive variance");
        out[i] = mean[i] + std::sqrt(cov_diag[i]) * rng.normal();
    }
    return out;
}

}  // namespace imbopt
