#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace cor {

// Deterministic random source. mt19937_64 output is fully specified by the
// standard; the derived helpers below avoid std::*_distribution, whose
// algorithms are implementation-defined, so streams are reproducible across
// compilers and platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [0, n). Modulo bias is negligible for the small n used here.
    std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    // Uniform integer in [lo, hi] inclusive.
    int next_int(int lo, int hi) {
        if (hi <= lo) return lo;
        return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    double next_range(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Fisher-Yates; std::shuffle is implementation-defined, this is not.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[next_below(i)]);
        }
    }

  private:
    std::mt19937_64 eng_;
};

// Stable 64-bit string hash (FNV-1a).
std::uint64_t fnv1a64(std::string_view s);

// Derives an independent stream seed from a base seed and a tag.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

}  // namespace cor
