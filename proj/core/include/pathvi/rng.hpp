#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace pathvi::numerics {

/// Seeded random stream used everywhere randomness is needed.
///
/// The generator is std::mt19937_64 (bit-exact across platforms) and the
/// normal transform is a hand-rolled Box-Muller, so a (seed, call sequence)
/// pair fully determines every sample. std::normal_distribution is avoided
/// on purpose: its output differs between standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in (0, 1].
  double uniform01_open_left() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01_open_left();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd gaussian_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  /// Uniform on the unit sphere S^{n-1}.
  Eigen::VectorXd uniform_sphere(int n) {
    while (true) {
      Eigen::VectorXd g = gaussian_vector(n);
      const double nrm = g.norm();
      if (nrm > 1e-300) return g / nrm;
    }
  }

  /// Uniform in the closed unit ball of R^n.
  Eigen::VectorXd uniform_ball(int n) {
    const Eigen::VectorXd dir = uniform_sphere(n);
    const double r = std::pow(uniform01(), 1.0 / static_cast<double>(n));
    return r * dir;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Stable derivation of per-trial seeds from a master seed (splitmix64 step).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace pathvi::numerics
