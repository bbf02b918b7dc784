#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "fbsched/sim_time.hpp"

namespace fbsched {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Matrix exponential by scaling and squaring with a truncated Taylor
/// series. The series is cut once a term falls below `series_tol` of the
/// partial sum; squaring amplifies that cut, so it sits near machine epsilon
/// to keep the final result inside 1e-13 relative.
inline Matrix expm(const Matrix& m, double series_tol = 1e-17) {
  if (m.rows() != m.cols()) throw std::invalid_argument("expm of non-square matrix");
  if (!m.allFinite()) throw std::invalid_argument("expm of non-finite matrix");
  const auto n = m.rows();
  const double norm = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix scaled = m / std::ldexp(1.0, squarings);

  Matrix sum = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  // A norm-0.5 argument converges well inside 30 terms.
  for (int k = 1; k < 30; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() <= series_tol * sum.cwiseAbs().maxCoeff()) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

struct ZohSegment {
  Matrix Ad;
  Vector Bd;
};

/// Exact zero-order-hold transition over `dt`: Ad = e^{A dt},
/// Bd = integral_0^dt e^{A s} B ds, both read off the exponential of the
/// augmented matrix [[A, B], [0, 0]] dt.
inline ZohSegment zoh_discretize(const Matrix& A, const Vector& B, Duration dt) {
  if (dt.ns < 0) throw std::invalid_argument("negative hold interval");
  const auto n = A.rows();
  if (A.cols() != n || B.size() != n) throw std::invalid_argument("A/B dimension mismatch");
  if (!A.allFinite() || !B.allFinite()) throw std::invalid_argument("non-finite plant matrices");
  if (dt.ns == 0) return {Matrix::Identity(n, n), Vector::Zero(n)};

  Matrix aug = Matrix::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = A;
  aug.topRightCorner(n, 1) = B;
  const Matrix e = expm(aug * dt.seconds());
  return {e.topLeftCorner(n, n), e.topRightCorner(n, 1)};
}

/// Single-input single-output continuous LTI plant with a held input.
struct LtiPlant {
  Matrix A;
  Vector B;
  Eigen::RowVectorXd C;
  Vector x;
  double u_held = 0.0;
  SimTime last_update{};

  std::size_t order() const { return static_cast<std::size_t>(A.rows()); }
};

/// Builds a plant from explicit matrices, validating dimensions.
inline LtiPlant make_plant(Matrix A, Vector B, Eigen::RowVectorXd C) {
  const auto n = A.rows();
  if (n < 1 || A.cols() != n) throw std::invalid_argument("A must be square with n >= 1");
  if (B.size() != n) throw std::invalid_argument("B must have n rows");
  if (C.size() != n) throw std::invalid_argument("C must have n columns");
  if (!A.allFinite() || !B.allFinite() || !C.allFinite()) {
    throw std::invalid_argument("plant matrices must be finite");
  }
  LtiPlant p{std::move(A), std::move(B), std::move(C), Vector::Zero(n), 0.0, {}};
  return p;
}

/// Controllable canonical realization of num(s)/den(s). Coefficients are
/// listed highest power first; the transfer function must be strictly proper.
inline LtiPlant plant_from_transfer_function(std::vector<double> num, std::vector<double> den) {
  while (!den.empty() && den.front() == 0.0) den.erase(den.begin());
  while (num.size() > 1 && num.front() == 0.0) num.erase(num.begin());
  if (den.size() < 2) throw std::invalid_argument("denominator must have degree >= 1");
  if (num.empty()) throw std::invalid_argument("numerator is empty");
  const std::size_t n = den.size() - 1;
  if (num.size() > n) throw std::invalid_argument("transfer function must be strictly proper");
  const double lead = den.front();
  Matrix A = Matrix::Zero(n, n);
  for (std::size_t i = 0; i + 1 < n; ++i) A(i, i + 1) = 1.0;
  for (std::size_t j = 0; j < n; ++j) A(n - 1, j) = -den[n - j] / lead;
  Vector B = Vector::Zero(n);
  B(n - 1) = 1.0;
  Eigen::RowVectorXd C = Eigen::RowVectorXd::Zero(n);
  // num padded to length n: b_{n-1} s^{n-1} + ... + b_0
  for (std::size_t k = 0; k < num.size(); ++k) {
    const std::size_t power = num.size() - 1 - k;
    C(power) = num[k] / lead;
  }
  return make_plant(std::move(A), std::move(B), std::move(C));
}

/// Memoizes ZOH segments by interval length; event spacing repeats a lot.
class ZohCache {
 public:
  const ZohSegment& get(const LtiPlant& p, Duration dt) {
    auto it = cache_.find(dt.ns);
    if (it != cache_.end()) return it->second;
    if (cache_.size() >= kMaxEntries) cache_.clear();
    return cache_.emplace(dt.ns, zoh_discretize(p.A, p.B, dt)).first->second;
  }

 private:
  static constexpr std::size_t kMaxEntries = 4096;
  std::unordered_map<std::int64_t, ZohSegment> cache_;
};

/// Evolves the plant under the held input up to `to`.
inline void advance(LtiPlant& p, SimTime to, ZohCache* cache = nullptr) {
  if (to < p.last_update) throw std::logic_error("plant time regression");
  const Duration dt = to - p.last_update;
  if (dt.ns > 0) {
    if (cache) {
      const auto& seg = cache->get(p, dt);
      p.x = seg.Ad * p.x + seg.Bd * p.u_held;
    } else {
      const auto seg = zoh_discretize(p.A, p.B, dt);
      p.x = seg.Ad * p.x + seg.Bd * p.u_held;
    }
  }
  p.last_update = to;
}

/// Uniform measurement noise on the sampled output; amplitude 0 disables it.
struct MeasurementNoise {
  double amplitude = 0.0;
  std::mt19937_64 rng{0};
};

inline double sample_output(const LtiPlant& p, MeasurementNoise* noise = nullptr) {
  const double y = p.C.dot(p.x);
  if (noise == nullptr || noise->amplitude <= 0.0) return y;
  std::uniform_real_distribution<double> dist(-noise->amplitude, noise->amplitude);
  return y + dist(noise->rng);
}

/// Advances to `now`, then latches `u` into the hold.
inline void actuate(LtiPlant& p, double u, SimTime now, ZohCache* cache = nullptr) {
  advance(p, now, cache);
  p.u_held = u;
}

}  // namespace fbsched
