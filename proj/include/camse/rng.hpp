#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace camse {

// Deterministic RNG. All mappings from raw engine output to doubles/indices
// are written out here instead of using std::*_distribution, whose results
// are implementation-defined; this keeps runs bit-reproducible across
// standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // [0, 1) with 53 bits of randomness.
    double next_double() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Unbiased integer in [0, n), n >= 1. Rejection sampling on the top range.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = eng_();
        while (x >= limit) x = eng_();
        return x % n;
    }

    // Fisher-Yates; std::shuffle's sequence is implementation-defined.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derive a stream-specific seed from a master seed and a label, so the
    // init/dropout/shuffle streams never alias.
    static std::uint64_t derive(std::uint64_t seed, std::string_view stream) {
        std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
        for (char c : stream) {
            h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
            h *= 1099511628211ULL;
        }
        // splitmix64 finalizer over seed ^ h
        std::uint64_t z = seed ^ h;
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace camse
