#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace curvecluster {

// Deterministic stream splitting.
//
// Everything stochastic in the library draws from std::mt19937_64 (whose
// output sequence is pinned down by the standard, so results are portable)
// seeded through derive_seed().  Independent units of work -- one Monte Carlo
// replication, one simulated panel, one series within a panel -- get their own
// seed derived from (parent_seed, tag).  Derivation is a keyed hash, not
// sequential advancement, so dropping or reordering work items never perturbs
// the draws of the others.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
    // Two finalizer rounds decorrelate (parent, tag) pairs that differ in
    // only a few bits, which is the common case (tag = replication index).
    return splitmix64(splitmix64(parent) ^ splitmix64(tag * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
}

// Stream tags for the top-level split of a master seed.
namespace seed_tag {
inline constexpr std::uint64_t quantile = 0x71u;    // threshold Monte Carlo
inline constexpr std::uint64_t study_rep = 0x72u;   // simulation replications
inline constexpr std::uint64_t series = 0x73u;      // series within one panel
}  // namespace seed_tag

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1) with 53 random bits; the usual shift-and-scale
    // construction so the value sequence is engine-defined, not libstdc++-defined.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Standard normal via the Marsaglia polar method (rejection on uniform
    // pairs, two normals per acceptance).  Distribution-function-free, hence
    // identical output on every platform.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace curvecluster
