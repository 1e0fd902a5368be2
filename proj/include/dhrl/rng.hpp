#ifndef DHRL_RNG_HPP
#define DHRL_RNG_HPP

#include <cstdint>
#include <random>

#include <Eigen/Core>

#include "dhrl/common.hpp"

namespace dhrl {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic random stream. All stochastic operations in the library draw
// from one of these; substreams are derived by seed-splitting so parallel
// consumers never share state.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : base_(seed), gen_(splitmix64(seed)) {}

  // Child stream derived from the base seed and a salt; independent of how
  // many draws the parent has made.
  RandomStream split(std::uint64_t salt) const {
    return RandomStream(splitmix64(base_ ^ (0x6a09e667f3bcc909ULL + salt * 0x9e3779b97f4a7c15ULL)));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform double in [0, 1) built from the top 53 bits; bit-exact across
  // platforms since mt19937_64 output is fully specified.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  int uniform_int(int n) {
    if (n <= 0) throw ContractError("uniform_int: n must be positive");
    return static_cast<int>(uniform01() * n) % n;
  }

  // Inverse-CDF sample from an (unnormalized-tolerant) probability vector.
  int categorical(const Eigen::Ref<const Eigen::VectorXd>& probs) {
    const double u = uniform01() * probs.sum();
    double acc = 0.0;
    for (int i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return static_cast<int>(probs.size()) - 1;
  }

  std::uint64_t base_seed() const { return base_; }

 private:
  std::uint64_t base_;
  std::mt19937_64 gen_;
};

}  // namespace dhrl

#endif
