#pragma once

#include <stdexcept>

namespace fbsched {

struct PidGains {
  double K = 0.98;
  double Ti = 0.12;  ///< integral time, s
  double Td = 0.05;  ///< derivative time, s
  double M = 10.0;   ///< derivative filter constant

  void validate() const {
    if (!(Ti > 0.0)) throw std::invalid_argument("PID Ti must be > 0");
    if (!(Td >= 0.0)) throw std::invalid_argument("PID Td must be >= 0");
    if (!(M > 0.0)) throw std::invalid_argument("PID M must be > 0");
  }

  friend bool operator==(const PidGains&, const PidGains&) = default;
};

/// Discrete coefficients for one sampling period.
struct PidDerived {
  double bi = 0.0;
  double ad = 0.0;
  double bd = 0.0;
};

struct PidState {
  double ui = 0.0;
  double ud = 0.0;
  double yold = 0.0;
};

enum class ControllerVariant {
  Traditional,  ///< coefficients frozen at the period the task started with
  Modified,     ///< coefficients recomputed from the current period every activation
};

inline PidDerived derive_params(const PidGains& g, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("PID period must be > 0");
  PidDerived d;
  d.bi = g.K * h / g.Ti;
  d.ad = g.Td / (g.M * h + g.Td);
  d.bd = g.M * g.K * d.ad;
  return d;
}

struct PidOutput {
  double u = 0.0;
  PidState next;
};

/// One controller pass. The integral term used in `u` is the value from
/// before this sample; the derivative term is the freshly filtered one.
inline PidOutput pid_step(double K, const PidDerived& d, const PidState& s, double r, double y) {
  PidOutput out;
  const double up = K * (r - y);
  out.next.ud = d.ad * s.ud + d.bd * (s.yold - y);
  out.u = up + s.ui + out.next.ud;
  out.next.ui = s.ui + d.bi * (r - y);
  out.next.yold = y;
  return out;
}

/// Control-task state: gains, cached coefficients and controller memory.
class PidController {
 public:
  PidController(ControllerVariant variant, PidGains gains, double initial_period)
      : variant_(variant), gains_(gains) {
    gains_.validate();
    cached_ = derive_params(gains_, initial_period);
  }

  /// Runs one iteration with the period currently in force.
  double iterate(double r, double y, double h_current) {
    if (variant_ == ControllerVariant::Modified) cached_ = derive_params(gains_, h_current);
    const PidOutput out = pid_step(gains_.K, cached_, state_, r, y);
    state_ = out.next;
    return out.u;
  }

  ControllerVariant variant() const { return variant_; }
  const PidGains& gains() const { return gains_; }
  const PidDerived& cached() const { return cached_; }
  const PidState& state() const { return state_; }

 private:
  ControllerVariant variant_;
  PidGains gains_;
  PidDerived cached_;
  PidState state_;
};

}  // namespace fbsched
