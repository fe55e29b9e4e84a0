#pragma once

// Seeded samplers for the correlated-Gaussian staircase benchmark.
//
// U ~ N(0, I_d), N ~ N(0, I_d) independent, V = f(rho U + sqrt(1 - rho^2) N)
// with f a strictly increasing map applied per coordinate. The mutual
// information is -(d/2) log(1 - rho^2) for every f.

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace jsdmi {

/// Reproducible random stream.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the
/// standard. The engine is seeded with SplitMix64(seed, stream) so distinct
/// (seed, stream) pairs give unrelated sequences. Uniforms take the top 53
/// bits; normals use the Marsaglia polar method. Both conversions are
/// implemented here, so streams are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class Transform { identity, cubic, asinh, halfcube };

std::string_view to_string(Transform t);
Transform parse_transform(std::string_view name);

double apply_transform(double x, Transform t);

/// -(d/2) log(1 - rho^2).
double gaussian_mi(double rho, std::size_t d);

/// Correlation giving the target MI in dimension d: sqrt(1 - exp(-2 mi / d)).
double rho_for_mi(double target_mi, std::size_t d);

struct GaussianTaskSpec {
  std::size_t d = 5;
  double rho = 0.0;
  Transform transform = Transform::identity;

  double true_mi() const { return gaussian_mi(rho, d); }
};

/// b paired rows (u_i, v_i).
struct SampleBatch {
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;

  Eigen::Index size() const noexcept { return u.rows(); }
  Eigen::Index dim() const noexcept { return u.cols(); }
};

/// Draws b joint samples. Per row, the d coordinates of u are drawn first,
/// then the d coordinates of the noise.
SampleBatch sample_joint(const GaussianTaskSpec& spec, std::size_t b, Rng& rng);

struct StaircaseStep {
  double target_mi = 0.0;
  std::size_t iterations = 0;

  bool operator==(const StaircaseStep&) const = default;
};

struct StaircaseSchedule {
  std::vector<StaircaseStep> steps;

  /// Targets strictly increasing and positive iteration counts.
  void validate() const;
  std::size_t total_iterations() const;
};

/// Five steps of 4000 iterations with targets 2, 4, 6, 8, 10 nats.
StaircaseSchedule default_staircase(std::size_t d);

}  // namespace jsdmi
