#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace orthosync {

// SplitMix64 step, advances the state and returns the next value.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for sub-stream (stream, counter) of a master seed. The scheme is
// fixed: start from master, mix, fold in stream, mix, fold in counter, mix.
// Re-running any single (stream, counter) cell reproduces its seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t counter) {
  std::uint64_t state = master;
  splitmix64(state);
  state ^= stream;
  splitmix64(state);
  state ^= counter;
  return splitmix64(state);
}

// Seedable generator: mt19937_64 uniforms, Gaussians via Box-Muller.
// Rng::kLabel is echoed into run metadata since the exact stream depends on
// this choice.
class Rng {
 public:
  static constexpr const char* kLabel = "mt19937_64+box-muller";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double gaussian();

  // Row-major fill order.
  Eigen::MatrixXd gaussian_matrix(int rows, int cols);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Haar-distributed d x d orthogonal matrix: QR of a Gaussian matrix with the
// R diagonal sign-corrected. Covers both components of O(d).
Eigen::MatrixXd haar_orthogonal(int d, Rng& rng);

}  // namespace orthosync
