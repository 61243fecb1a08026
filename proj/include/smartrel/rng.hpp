#ifndef SMARTREL_RNG_HPP
#define SMARTREL_RNG_HPP

#include <cstdint>

#include <Eigen/Dense>

namespace smartrel {

// Counter-based generator with O(1) splitting (SplitMix64 output function over
// a keyed counter). Integer state only, so streams are identical across
// platforms and independent of evaluation order. Substreams derived with
// split() do not overlap the parent stream.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : key_(mix(seed ^ 0x5368616e6e6f6eULL)), counter_(0) {}

  // Independent stream derived from this generator's key and a stream id.
  SplitRng split(std::uint64_t stream) const {
    SplitRng child(0);
    child.key_ = mix(key_ + 0x9e3779b97f4a7c15ULL * (stream + 1));
    child.counter_ = 0;
    return child;
  }

  std::uint64_t next_u64() {
    std::uint64_t x = key_ + 0x9e3779b97f4a7c15ULL * (++counter_);
    return mix(x);
  }

  // Uniform on (0,1): 53-bit mantissa, offset so 0 is never returned.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal by inversion.
  double next_normal();

  // Exponential(1) by inversion.
  double next_exponential();

  Eigen::VectorXd normal_vector(Eigen::Index n);

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace smartrel

#endif  // SMARTREL_RNG_HPP
