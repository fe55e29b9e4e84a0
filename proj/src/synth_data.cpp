#include "jsdmi/synth_data.hpp"

#include <cmath>
#include <stdexcept>

namespace jsdmi {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed;
  std::uint64_t a = splitmix64(state);
  state = a ^ (stream * 0xD1B54A32D192ED03ULL);
  return splitmix64(state);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : engine_(mix_seed(seed, stream)) {}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double x, y, s;
  do {
    x = 2.0 * uniform() - 1.0;
    y = 2.0 * uniform() - 1.0;
    s = x * x + y * y;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = y * f;
  has_spare_ = true;
  return x * f;
}

std::string_view to_string(Transform t) {
  switch (t) {
    case Transform::identity: return "identity";
    case Transform::cubic: return "cubic";
    case Transform::asinh: return "asinh";
    case Transform::halfcube: return "halfcube";
  }
  return "identity";
}

Transform parse_transform(std::string_view name) {
  if (name == "identity" || name == "gauss" || name == "gaussian") return Transform::identity;
  if (name == "cubic") return Transform::cubic;
  if (name == "asinh") return Transform::asinh;
  if (name == "halfcube" || name == "half-cube") return Transform::halfcube;
  throw std::invalid_argument("unknown transform '" + std::string(name) + "'");
}

double apply_transform(double x, Transform t) {
  switch (t) {
    case Transform::identity: return x;
    case Transform::cubic: return x * x * x;
    case Transform::asinh: return std::asinh(x);
    case Transform::halfcube: return std::copysign(std::pow(std::abs(x), 1.5), x);
  }
  return x;
}

double gaussian_mi(double rho, std::size_t d) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::domain_error("rho must lie in [0, 1)");
  // 1 - rho is exact for rho >= 1/2, so the factored form keeps full precision near 1.
  return -0.5 * static_cast<double>(d) * std::log((1.0 - rho) * (1.0 + rho));
}

double rho_for_mi(double target_mi, std::size_t d) {
  if (!(target_mi >= 0.0) || !std::isfinite(target_mi)) {
    throw std::domain_error("rho_for_mi: target MI must be finite and >= 0");
  }
  if (d == 0) throw std::domain_error("rho_for_mi: d must be >= 1");
  return std::sqrt(-std::expm1(-2.0 * target_mi / static_cast<double>(d)));
}

SampleBatch sample_joint(const GaussianTaskSpec& spec, std::size_t b, Rng& rng) {
  if (b == 0) throw std::invalid_argument("sample_joint: batch size must be >= 1");
  if (spec.d == 0) throw std::invalid_argument("sample_joint: d must be >= 1");
  if (!(spec.rho >= 0.0 && spec.rho < 1.0)) throw std::domain_error("rho must lie in [0, 1)");
  const auto n = static_cast<Eigen::Index>(b);
  const auto d = static_cast<Eigen::Index>(spec.d);
  const double noise_scale = std::sqrt(1.0 - spec.rho * spec.rho);
  SampleBatch batch{Eigen::MatrixXd(n, d), Eigen::MatrixXd(n, d)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) batch.u(i, k) = rng.normal();
    for (Eigen::Index k = 0; k < d; ++k) {
      const double mixed = spec.rho * batch.u(i, k) + noise_scale * rng.normal();
      batch.v(i, k) = apply_transform(mixed, spec.transform);
    }
  }
  return batch;
}

void StaircaseSchedule::validate() const {
  if (steps.empty()) throw std::invalid_argument("schedule: at least one step required");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].iterations == 0) throw std::invalid_argument("schedule: iterations must be > 0");
    if (!(steps[i].target_mi >= 0.0)) throw std::invalid_argument("schedule: targets must be >= 0");
    if (i > 0 && !(steps[i].target_mi > steps[i - 1].target_mi)) {
      throw std::invalid_argument("schedule: targets must be strictly increasing");
    }
  }
}

std::size_t StaircaseSchedule::total_iterations() const {
  std::size_t total = 0;
  for (const auto& s : steps) total += s.iterations;
  return total;
}

StaircaseSchedule default_staircase(std::size_t d) {
  if (d == 0) throw std::invalid_argument("default_staircase: d must be >= 1");
  StaircaseSchedule s;
  for (int k = 1; k <= 5; ++k) s.steps.push_back({2.0 * k, 4000});
  return s;
}

}  // namespace jsdmi
