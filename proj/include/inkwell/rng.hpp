#pragma once

#include <cstdint>
#include <random>

namespace inkwell {

/// Seeded random source used by every generator in the project.
///
/// The engine is `std::mt19937_64`, whose output sequence is fixed by the C++
/// standard. The standard distributions are implementation-defined, so the
/// conversions to uniform reals, bounded integers and normals are done here:
///   uniform()   = (next() >> 11) * 2^-53                  in [0,1)
///   below(n)    = next() % n  (modulo bias is negligible for small n)
///   normal()    = Box-Muller on two uniform() draws, no cached second value
/// so corpora and initial weights are identical across compilers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t below(std::uint64_t n);
    int range(int lo, int hi_inclusive);
    double normal();

private:
    std::mt19937_64 engine_;
};

/// Per-item seed for fan-out generation: the base seed xor the item index.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) { return base ^ index; }

}  // namespace inkwell
