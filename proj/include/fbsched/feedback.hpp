#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "fbsched/sim_time.hpp"

namespace fbsched {

enum class Paradigm {
  OLS,   ///< open loop: periods never change
  TTFS,  ///< rescaling algorithm runs unconditionally every fs_period
  EDFS,  ///< detector runs every detector_period and gates the algorithm
};

constexpr std::string_view to_string(Paradigm p) {
  switch (p) {
    case Paradigm::OLS: return "ols";
    case Paradigm::TTFS: return "ttfs";
    case Paradigm::EDFS: return "edfs";
  }
  return "?";
}

inline std::optional<Paradigm> paradigm_from_string(std::string_view s) {
  if (s == "ols") return Paradigm::OLS;
  if (s == "ttfs") return Paradigm::TTFS;
  if (s == "edfs") return Paradigm::EDFS;
  return std::nullopt;
}

struct FsConfig {
  Paradigm paradigm = Paradigm::EDFS;
  double setpoint = 0.8;           ///< target requested utilization U_R
  Duration fs_period = milliseconds(1000);
  Duration detector_period = milliseconds(500);
  double threshold = 0.02;         ///< detector band delta
  Duration fs_exec = milliseconds(1);
  Duration detector_exec = microseconds(100);
  double h_min_s = 1e-3;
  double h_max_s = 1.0;

  void validate() const {
    if (!(setpoint > 0.0 && setpoint <= 1.0)) throw std::invalid_argument("setpoint must be in (0, 1]");
    if (!(threshold >= 0.0)) throw std::invalid_argument("threshold must be >= 0");
    if (fs_period.ns <= 0) throw std::invalid_argument("fs_period must be > 0");
    if (detector_period.ns <= 0) throw std::invalid_argument("detector_period must be > 0");
    if (fs_exec.ns <= 0) throw std::invalid_argument("fs_exec must be > 0");
    if (detector_exec.ns <= 0) throw std::invalid_argument("detector_exec must be > 0");
    if (!(h_min_s > 0.0 && h_min_s <= h_max_s)) throw std::invalid_argument("need 0 < h_min <= h_max");
  }

  friend bool operator==(const FsConfig&, const FsConfig&) = default;
};

/// Common factor applied to every period, or nullopt when nothing is
/// requesting CPU and there is nothing to rescale.
inline std::optional<double> rescaling_factor(double u_req, double setpoint) {
  if (!(setpoint > 0.0)) throw std::invalid_argument("setpoint must be > 0");
  if (u_req < 0.0) throw std::invalid_argument("negative requested utilization");
  if (u_req == 0.0) return std::nullopt;
  return u_req / setpoint;
}

/// Periods in seconds keyed by task id.
using PeriodMap = std::map<int, double>;

inline PeriodMap rescale_periods(const PeriodMap& periods, double eta, double h_min_s, double h_max_s) {
  if (!(eta > 0.0)) throw std::invalid_argument("rescaling factor must be > 0");
  PeriodMap out;
  for (const auto& [id, h] : periods) out.emplace(id, std::clamp(eta * h, h_min_s, h_max_s));
  return out;
}

/// Slack on the detector comparison. Utilizations are sums of ratios, so a
/// deviation meant to sit exactly on the threshold (0.82 vs 0.80, 0.02) can
/// land a few ulps short of it.
inline constexpr double kDetectorSlack = 1e-12;

/// Execution-request condition; the boundary counts as a deviation.
inline bool detect_event(double u_req, double setpoint, double threshold) {
  return std::abs(u_req - setpoint) >= threshold - kDetectorSlack;
}

struct FsDecision {
  double u_req = 0.0;
  double eta = 1.0;
  bool fired = false;      ///< rescaling algorithm executed in this activation
  bool rescaled = false;   ///< new_periods is meaningful
  PeriodMap new_periods;
  Duration exec;           ///< CPU the activation costs
};

/// Body of one feedback-scheduler job, evaluated from the requested
/// utilization and periods as seen when the job starts.
inline FsDecision fs_task_body(const FsConfig& cfg, double u_req, const PeriodMap& periods) {
  FsDecision d;
  d.u_req = u_req;
  switch (cfg.paradigm) {
    case Paradigm::OLS:
      throw std::logic_error("open-loop scheduling has no feedback-scheduler task");
    case Paradigm::TTFS:
      d.fired = true;
      d.exec = cfg.fs_exec;
      break;
    case Paradigm::EDFS:
      d.fired = detect_event(u_req, cfg.setpoint, cfg.threshold);
      d.exec = cfg.detector_exec;
      if (d.fired) d.exec += cfg.fs_exec;
      break;
  }
  if (d.fired) {
    if (auto eta = rescaling_factor(u_req, cfg.setpoint)) {
      d.eta = *eta;
      d.new_periods = rescale_periods(periods, *eta, cfg.h_min_s, cfg.h_max_s);
      d.rescaled = true;
    }
  }
  return d;
}

}  // namespace fbsched
