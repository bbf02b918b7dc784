#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fbsched/feedback.hpp"
#include "fbsched/sim_time.hpp"

namespace fbsched {

/// Per-loop control cost and deadline bookkeeping. The IAE integral is kept
/// as sum(|e| * dt_ns) so constant integrands on a ns grid sum exactly.
struct LoopMetrics {
  double iae_ns = 0.0;
  long miss_count = 0;
  long job_count = 0;

  double iae() const { return iae_ns / 1e9; }
};

/// Left-endpoint rectangle: adds |e| held over the next `dt`.
inline void accumulate_iae(LoopMetrics& m, double e_abs, Duration dt) {
  m.iae_ns += e_abs * static_cast<double>(dt.ns);
}

struct OverheadMetrics {
  long fs_activations = 0;  ///< executions of the rescaling algorithm
  long detector_runs = 0;   ///< event-detector evaluations (EDFS only)
  Duration fs_cpu_time;     ///< CPU charged to feedback-scheduler jobs
};

struct LoopSample {
  double r = 0.0;
  double y = 0.0;
  double u = 0.0;
  double h_ms = 0.0;
};

struct TraceRow {
  SimTime time;
  std::vector<LoopSample> loops;
  double u_req = 0.0;
  double u_meas = 0.0;
};

struct EventRecord {
  SimTime time;
  std::string kind;
  int task_id = 0;
  std::string detail;
};

enum class SchedRecordKind { Release, Start, Preempt, Resume, Finish, Miss };

/// CPU state transition of one job; the raw material for oracle comparisons.
struct SchedRecord {
  SimTime time;
  int task_id = 0;
  long seq = 0;
  SchedRecordKind kind = SchedRecordKind::Release;

  friend auto operator<=>(const SchedRecord&, const SchedRecord&) = default;
};

struct TraceSet {
  Paradigm paradigm = Paradigm::OLS;
  SimTime duration;
  Duration grid;
  std::vector<int> loop_ids;
  std::vector<double> divergence_limits;  ///< |y| above this means "diverged"
  std::vector<TraceRow> rows;
  std::vector<EventRecord> events;
  std::vector<SchedRecord> schedule;
  std::vector<LoopMetrics> loops;
  OverheadMetrics overhead;

  std::size_t loop_index(int id) const {
    auto it = std::find(loop_ids.begin(), loop_ids.end(), id);
    return static_cast<std::size_t>(it - loop_ids.begin());
  }
};

struct LoopSummary {
  int id = 0;
  double iae = 0.0;
  long jobs = 0;
  long misses = 0;
  double miss_ratio = 0.0;
  double max_abs_y = 0.0;
  bool stable = true;
};

struct Summary {
  Paradigm paradigm = Paradigm::OLS;
  std::vector<LoopSummary> loops;
  double iae_total = 0.0;
  long fs_activations = 0;
  long detector_runs = 0;
  double fs_cpu_time_s = 0.0;
  double mean_u_req = 0.0;
  double max_u_req = 0.0;
};

/// Largest |y| of a loop over samples with t0 <= t <= t1; infinity if any
/// sample is non-finite.
inline double max_abs_output(const TraceSet& ts, std::size_t loop, SimTime t0, SimTime t1) {
  double m = 0.0;
  for (const auto& row : ts.rows) {
    if (row.time < t0 || row.time > t1) continue;
    const double y = row.loops[loop].y;
    if (!std::isfinite(y)) return INFINITY;
    m = std::max(m, std::abs(y));
  }
  return m;
}

inline long count_events(const TraceSet& ts, const std::string& kind, SimTime t0, SimTime t1) {
  return static_cast<long>(std::count_if(ts.events.begin(), ts.events.end(), [&](const EventRecord& e) {
    return e.kind == kind && e.time >= t0 && e.time <= t1;
  }));
}

inline Summary summarize(const TraceSet& ts) {
  Summary s;
  s.paradigm = ts.paradigm;
  for (std::size_t i = 0; i < ts.loop_ids.size(); ++i) {
    LoopSummary l;
    l.id = ts.loop_ids[i];
    l.iae = ts.loops[i].iae();
    l.jobs = ts.loops[i].job_count;
    l.misses = ts.loops[i].miss_count;
    l.miss_ratio = l.jobs > 0 ? static_cast<double>(l.misses) / static_cast<double>(l.jobs) : 0.0;
    l.max_abs_y = max_abs_output(ts, i, SimTime{0}, ts.duration);
    l.stable = std::isfinite(l.max_abs_y) && l.max_abs_y <= ts.divergence_limits[i];
    s.iae_total += l.iae;
    s.loops.push_back(l);
  }
  s.fs_activations = ts.overhead.fs_activations;
  s.detector_runs = ts.overhead.detector_runs;
  s.fs_cpu_time_s = ts.overhead.fs_cpu_time.seconds();
  if (!ts.rows.empty()) {
    double sum = 0.0;
    for (const auto& row : ts.rows) {
      sum += row.u_req;
      s.max_u_req = std::max(s.max_u_req, row.u_req);
    }
    s.mean_u_req = sum / static_cast<double>(ts.rows.size());
  }
  return s;
}

}  // namespace fbsched
