#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fbsched/sim_time.hpp"

namespace fbsched {

enum class TaskKind { Control, FeedbackScheduler, EventDetector };
enum class SchedPolicy { FixedPriority, EDF };

/// Piecewise-constant execution time c(t). Each step holds from its start
/// time until the next step; before the first step the first value applies.
class ExecProfile {
 public:
  struct Step {
    SimTime from;
    Duration exec;
    friend bool operator==(const Step&, const Step&) = default;
  };

  ExecProfile() = default;
  explicit ExecProfile(std::vector<Step> steps) : steps_(std::move(steps)) {
    if (steps_.empty()) throw std::invalid_argument("execution profile has no steps");
    for (std::size_t i = 0; i < steps_.size(); ++i) {
      if (steps_[i].exec.ns <= 0) {
        throw std::invalid_argument("execution time must be positive");
      }
      if (i > 0 && steps_[i].from < steps_[i - 1].from) {
        throw std::invalid_argument("execution profile times must be nondecreasing");
      }
    }
  }

  static ExecProfile constant(Duration c) { return ExecProfile({{SimTime{0}, c}}); }

  Duration at(SimTime t) const {
    // Last step whose start is <= t; a step starting exactly at t wins.
    auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                               [](SimTime v, const Step& s) { return v < s.from; });
    if (it == steps_.begin()) return steps_.front().exec;
    return std::prev(it)->exec;
  }

  const std::vector<Step>& steps() const { return steps_; }
  bool empty() const { return steps_.empty(); }

  friend bool operator==(const ExecProfile&, const ExecProfile&) = default;

 private:
  std::vector<Step> steps_;
};

struct TaskSpec {
  int id = 0;
  TaskKind kind = TaskKind::Control;
  int priority = 0;  ///< higher value runs first under FixedPriority
  Duration initial_period;
  SimTime start_time;
  ExecProfile exec_profile;
};

enum class JobState { Ready, Running, Finished };

struct Job {
  int task_id = 0;
  long seq = 0;  ///< per-task release index, starting at 0
  int priority = 0;
  SimTime release;
  SimTime abs_deadline;
  Duration total_exec;
  Duration remaining_exec;
  JobState state = JobState::Ready;
  bool started = false;
  bool miss_recorded = false;
};

/// New job of `task` released at `now`; deadline equals the period in force.
inline Job release_job(const TaskSpec& task, SimTime now, Duration period, long seq = 0) {
  if (now < task.start_time) {
    throw std::logic_error("task " + std::to_string(task.id) + " released before its start time");
  }
  if (period.ns <= 0) throw std::logic_error("non-positive period");
  const Duration c = task.exec_profile.at(now);
  return Job{.task_id = task.id,
             .seq = seq,
             .priority = task.priority,
             .release = now,
             .abs_deadline = now + period,
             .total_exec = c,
             .remaining_exec = c};
}

/// True when `a` should run in preference to `b`.
inline bool runs_before(const Job& a, const Job& b, SchedPolicy policy) {
  if (policy == SchedPolicy::FixedPriority) {
    if (a.priority != b.priority) return a.priority > b.priority;
  } else {
    if (a.abs_deadline != b.abs_deadline) return a.abs_deadline < b.abs_deadline;
  }
  if (a.task_id != b.task_id) return a.task_id < b.task_id;
  return a.seq < b.seq;
}

/// Index of the job that should hold the CPU, or nullopt when idle.
inline std::optional<std::size_t> pick_running(std::span<const Job> ready, SchedPolicy policy) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < ready.size(); ++i) {
    if (ready[i].state == JobState::Finished) continue;
    if (!best || runs_before(ready[i], ready[*best], policy)) best = i;
  }
  return best;
}

/// Charges `dt` of CPU to a running job. Finishing is exact: the job moves
/// to Finished when remaining reaches zero.
inline void account_execution(Job& job, Duration dt) {
  if (job.state != JobState::Running) throw std::logic_error("charging a job that is not running");
  if (dt.ns < 0 || dt > job.remaining_exec) {
    throw std::logic_error("charged " + std::to_string(dt.ns) + "ns to job of task " +
                           std::to_string(job.task_id) + " with only " +
                           std::to_string(job.remaining_exec.ns) + "ns remaining");
  }
  job.remaining_exec -= dt;
  if (job.remaining_exec.ns == 0) job.state = JobState::Finished;
}

inline void preempt(Job& job) {
  if (job.state == JobState::Running) job.state = JobState::Ready;
}

/// One task's contribution to requested utilization.
struct LoadTerm {
  Duration exec;
  double period_s = 0.0;
};

inline double requested_utilization(std::span<const LoadTerm> tasks) {
  double u = 0.0;
  for (const auto& t : tasks) {
    if (!(t.period_s > 0.0)) throw std::invalid_argument("non-positive period in utilization");
    u += t.exec.seconds() / t.period_s;
  }
  return u;
}

/// Reports a deadline miss the first time an unfinished job is seen at or
/// past its deadline. Later calls for the same job return false.
inline bool check_deadline(Job& job, SimTime now) {
  if (job.miss_recorded || job.state == JobState::Finished || job.remaining_exec.ns == 0) {
    return false;
  }
  if (now < job.abs_deadline) return false;
  job.miss_recorded = true;
  return true;
}

}  // namespace fbsched
