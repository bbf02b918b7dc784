#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fbsched/event_queue.hpp"
#include "fbsched/feedback.hpp"
#include "fbsched/metrics.hpp"
#include "fbsched/pid.hpp"
#include "fbsched/plant.hpp"
#include "fbsched/scenario.hpp"
#include "fbsched/scheduler.hpp"

namespace fbsched {

/// Task id reserved for the feedback-scheduler / event-detector task.
inline constexpr int kFeedbackTaskId = 0;

/// Rate-monotonic priorities from default periods (shorter period, higher
/// priority; equal periods favour the lower id). Explicit priorities win.
/// The feedback task sits above every control task.
inline std::map<int, int> assign_priorities(const std::vector<LoopSpec>& loops) {
  std::vector<const LoopSpec*> order;
  for (const auto& l : loops) order.push_back(&l);
  std::sort(order.begin(), order.end(), [](const LoopSpec* a, const LoopSpec* b) {
    if (a->period != b->period) return a->period > b->period;
    return a->id > b->id;
  });
  std::map<int, int> prio;
  int next = 1;
  for (const auto* l : order) prio[l->id] = l->priority.value_or(next++);
  int top = 0;
  for (const auto& [id, p] : prio) top = std::max(top, p);
  prio[kFeedbackTaskId] = top + 1;
  return prio;
}

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace detail

/// Single-run discrete-event co-simulation of the CPU, the control tasks,
/// the feedback scheduler and the continuous plants.
class Kernel {
 public:
  explicit Kernel(const Scenario& sc) : sc_(sc) {
    sc_.validate();
    noise_.amplitude = sc_.noise_amplitude;
    noise_.rng.seed(sc_.seed);
    const auto prio = assign_priorities(sc_.loops);
    for (const auto& l : sc_.loops) {
      ControlTask ct{
          .spec = &l,
          .task = TaskSpec{l.id, TaskKind::Control, prio.at(l.id), l.period, l.start, l.exec},
          .plant = l.plant.instantiate(),
          .zoh = {},
          .pid = PidController(l.variant, l.gains, l.period.seconds()),
          .period_s = l.period.seconds(),
          .next_seq = 0,
          .release_period = {},
      };
      control_.push_back(std::move(ct));
    }
    if (sc_.fs.paradigm != Paradigm::OLS) {
      const bool ttfs = sc_.fs.paradigm == Paradigm::TTFS;
      fs_task_ = TaskSpec{kFeedbackTaskId,
                          ttfs ? TaskKind::FeedbackScheduler : TaskKind::EventDetector,
                          prio.at(kFeedbackTaskId),
                          ttfs ? sc_.fs.fs_period : sc_.fs.detector_period,
                          SimTime{0},
                          ExecProfile::constant(ttfs ? sc_.fs.fs_exec : sc_.fs.detector_exec)};
    }
  }

  TraceSet run() {
    trace_ = TraceSet{};
    trace_.paradigm = sc_.fs.paradigm;
    trace_.duration = SimTime{sc_.duration.ns};
    trace_.grid = sc_.trace_grid;
    for (const auto& ct : control_) {
      trace_.loop_ids.push_back(ct.spec->id);
      trace_.divergence_limits.push_back(sc_.divergence_factor * std::abs(ct.spec->reference.amplitude));
    }
    trace_.loops.assign(control_.size(), LoopMetrics{});

    seed_events();
    const SimTime end = trace_.duration;
    while (!queue_.empty() && queue_.top().time <= end) {
      const SimTime t = queue_.top().time;
      advance_cpu(t);
      while (!queue_.empty() && queue_.top().time == t) handle(queue_.pop());
      dispatch(t);
    }
    if (trace_.rows.empty() || trace_.rows.back().time != end - Duration{(end.ns % sc_.trace_grid.ns)}) {
      throw std::logic_error("event queue drained before the end of the run");
    }
    return std::move(trace_);
  }

 private:
  struct ControlTask {
    const LoopSpec* spec;
    TaskSpec task;
    LtiPlant plant;
    ZohCache zoh;
    PidController pid;
    double period_s;        ///< period mailbox, written by the feedback task
    long next_seq = 0;
    std::map<long, double> release_period;  ///< period read at each live job's release
    double pending_u = 0.0;
  };

  void seed_events() {
    const SimTime end = trace_.duration;
    for (const auto& ct : control_) {
      const auto& l = *ct.spec;
      if (l.start <= end) {
        queue_.push({l.start, EventKind::TaskRelease, l.id});
        queue_.push({l.start, EventKind::WorkloadChange, l.id});
      }
      for (const auto& step : l.exec.steps()) {
        if (step.from > l.start && step.from <= end) queue_.push({step.from, EventKind::WorkloadChange, l.id});
      }
      if (auto tog = l.reference.next_toggle(SimTime{0}); tog && *tog <= end) {
        queue_.push({*tog, EventKind::ReferenceToggle, l.id});
      }
    }
    if (fs_task_) queue_.push({SimTime{0}, EventKind::TaskRelease, kFeedbackTaskId});
    queue_.push({SimTime{0}, EventKind::TraceSample, 0});
  }

  ControlTask& control(int id) {
    for (auto& ct : control_) {
      if (ct.spec->id == id) return ct;
    }
    throw std::logic_error("unknown task id " + std::to_string(id));
  }

  std::size_t loop_index(int id) const {
    for (std::size_t i = 0; i < control_.size(); ++i) {
      if (control_[i].spec->id == id) return i;
    }
    throw std::logic_error("unknown loop id " + std::to_string(id));
  }

  bool enabled(const ControlTask& ct, SimTime t) const { return t >= ct.spec->start; }

  double requested_utilization_at(SimTime t) const {
    std::vector<LoadTerm> terms;
    for (const auto& ct : control_) {
      if (enabled(ct, t)) terms.push_back({ct.spec->exec.at(t), ct.period_s});
    }
    return requested_utilization(terms);
  }

  void log(SimTime t, std::string kind, int id, std::string detail) {
    trace_.events.push_back({t, std::move(kind), id, std::move(detail)});
  }

  void record(SimTime t, const Job& j, SchedRecordKind k) { trace_.schedule.push_back({t, j.task_id, j.seq, k}); }

  Job* find_running() {
    for (auto& j : live_) {
      if (j.state == JobState::Running) return &j;
    }
    return nullptr;
  }

  void advance_cpu(SimTime t) {
    const Duration dt = t - cpu_time_;
    if (dt.ns < 0) throw std::logic_error("CPU clock regression");
    if (dt.ns > 0) {
      if (Job* j = find_running()) {
        account_execution(*j, dt);
        busy_ += dt;
        if (j->task_id == kFeedbackTaskId) trace_.overhead.fs_cpu_time += dt;
        // A finished job keeps the CPU until its completion event at t.
        if (j->state == JobState::Finished) finished_running_ = {j->task_id, j->seq};
      }
    }
    cpu_time_ = t;
  }

  void handle(const Event& e) {
    switch (e.kind) {
      case EventKind::TaskRelease: on_release(e); break;
      case EventKind::WorkloadChange: on_workload(e); break;
      case EventKind::ExecCompletion: on_completion(e); break;
      case EventKind::ReferenceToggle: on_toggle(e); break;
      case EventKind::TraceSample: on_sample(e); break;
    }
  }

  void check_misses(int task_id, SimTime t) {
    for (auto& j : live_) {
      if (j.task_id != task_id || !check_deadline(j, t)) continue;
      record(t, j, SchedRecordKind::Miss);
      log(t, "miss", task_id, "job=" + std::to_string(j.seq));
      if (task_id != kFeedbackTaskId) trace_.loops[loop_index(task_id)].miss_count++;
    }
  }

  void on_release(const Event& e) {
    const SimTime t = e.time;
    check_misses(e.id, t);
    if (e.id == kFeedbackTaskId) {
      const Job j = release_job(*fs_task_, t, fs_task_->initial_period, fs_seq_++);
      live_.push_back(j);
      record(t, j, SchedRecordKind::Release);
      queue_.push({t + fs_task_->initial_period, EventKind::TaskRelease, kFeedbackTaskId});
      return;
    }
    auto& ct = control(e.id);
    const Duration period{round_to_ns(ct.period_s)};
    const Job j = release_job(ct.task, t, period, ct.next_seq++);
    ct.release_period[j.seq] = ct.period_s;
    live_.push_back(j);
    trace_.loops[loop_index(e.id)].job_count++;
    record(t, j, SchedRecordKind::Release);
    log(t, "release", e.id, "h_ms=" + detail::fmt("%.9g", ct.period_s * 1e3));
    queue_.push({t + period, EventKind::TaskRelease, e.id});
  }

  void on_workload(const Event& e) {
    const auto& ct = control(e.id);
    const char* kind = e.time == ct.spec->start ? "enable" : "workload";
    log(e.time, kind, e.id, "c_ms=" + detail::fmt("%.9g", ct.spec->exec.at(e.time).millis()));
  }

  void on_toggle(const Event& e) {
    const auto& ref = control(e.id).spec->reference;
    log(e.time, "reference", e.id, "r=" + detail::fmt("%.9g", ref.value(e.time)));
    if (auto next = ref.next_toggle(e.time); next && *next <= trace_.duration) {
      queue_.push({*next, EventKind::ReferenceToggle, e.id});
    }
  }

  void on_completion(const Event& e) {
    auto it = std::find_if(live_.begin(), live_.end(), [&](const Job& j) {
      return j.task_id == e.id && j.state == JobState::Finished;
    });
    if (it == live_.end()) return;  // superseded by a preemption
    const SimTime t = e.time;
    record(t, *it, SchedRecordKind::Finish);
    if (e.id == kFeedbackTaskId) {
      if (pending_fs_ && pending_fs_->rescaled) {
        for (const auto& [id, h] : pending_fs_->new_periods) control(id).period_s = h;
        log(t, "periods", kFeedbackTaskId, "eta=" + detail::fmt("%.9g", pending_fs_->eta));
      }
      pending_fs_.reset();
    } else {
      auto& ct = control(e.id);
      actuate(ct.plant, ct.pending_u, t, &ct.zoh);
      ct.release_period.erase(it->seq);
    }
    live_.erase(it);
    finished_running_.reset();
  }

  void on_start(Job& j, SimTime t) {
    if (j.task_id == kFeedbackTaskId) {
      const double u_req = requested_utilization_at(t);
      // Every control task is rescaled, switched on or not, so period ratios
      // (and with them the rate-monotonic order) stay fixed.
      PeriodMap periods;
      for (const auto& ct : control_) periods[ct.spec->id] = ct.period_s;
      FsDecision d = fs_task_body(sc_.fs, u_req, periods);
      if (sc_.fs.paradigm == Paradigm::EDFS) {
        trace_.overhead.detector_runs++;
        log(t, "detector", kFeedbackTaskId, std::string("fired=") + (d.fired ? "1" : "0"));
      }
      if (d.fired) {
        trace_.overhead.fs_activations++;
        log(t, "fs_run", kFeedbackTaskId,
            "u_req=" + detail::fmt("%.9g", u_req) + " eta=" + detail::fmt("%.9g", d.eta));
      }
      j.total_exec = d.exec;
      j.remaining_exec = d.exec;
      pending_fs_ = std::move(d);
      return;
    }
    auto& ct = control(j.task_id);
    advance(ct.plant, t, &ct.zoh);
    const double y = sample_output(ct.plant, &noise_);
    const double r = ct.spec->reference.value(t);
    ct.pending_u = ct.pid.iterate(r, y, ct.release_period.at(j.seq));
  }

  void dispatch(SimTime t) {
    if (finished_running_) throw std::logic_error("finished job without a completion event");
    const auto pick = pick_running(live_, sc_.policy);
    Job* current = find_running();
    Job* next = pick ? &live_[*pick] : nullptr;
    if (current == next) return;
    if (current) {
      preempt(*current);
      record(t, *current, SchedRecordKind::Preempt);
    }
    if (!next) return;
    if (!next->started) {
      next->started = true;
      on_start(*next, t);
      record(t, *next, SchedRecordKind::Start);
    } else {
      record(t, *next, SchedRecordKind::Resume);
    }
    next->state = JobState::Running;
    queue_.push({t + next->remaining_exec, EventKind::ExecCompletion, next->task_id});
  }

  void on_sample(const Event& e) {
    const SimTime t = e.time;
    TraceRow row;
    row.time = t;
    const Duration step = std::min(sc_.trace_grid, trace_.duration - t);
    for (std::size_t i = 0; i < control_.size(); ++i) {
      auto& ct = control_[i];
      advance(ct.plant, t, &ct.zoh);
      LoopSample s;
      s.r = ct.spec->reference.value(t);
      s.y = sample_output(ct.plant);
      s.u = ct.plant.u_held;
      s.h_ms = ct.period_s * 1e3;
      if (enabled(ct, t) && step.ns > 0) accumulate_iae(trace_.loops[i], std::abs(s.r - s.y), step);
      row.loops.push_back(s);
    }
    row.u_req = requested_utilization_at(t);

    busy_history_.push_back(busy_);
    const std::size_t back =
        static_cast<std::size_t>(std::max<std::int64_t>(1, sc_.umeas_window.ns / sc_.trace_grid.ns));
    const std::size_t n = busy_history_.size();
    if (n > 1) {
      const std::size_t from = n - 1 >= back ? n - 1 - back : 0;
      const Duration span = t - trace_.rows[from].time;
      row.u_meas = static_cast<double>((busy_history_[n - 1] - busy_history_[from]).ns) /
                   static_cast<double>(span.ns);
    }
    trace_.rows.push_back(std::move(row));

    const SimTime next = t + sc_.trace_grid;
    if (next <= trace_.duration) queue_.push({next, EventKind::TraceSample, 0});
  }

  Scenario sc_;
  std::vector<ControlTask> control_;
  std::optional<TaskSpec> fs_task_;
  long fs_seq_ = 0;
  std::optional<FsDecision> pending_fs_;
  MeasurementNoise noise_;

  EventQueue queue_;
  std::vector<Job> live_;
  std::optional<std::pair<int, long>> finished_running_;
  SimTime cpu_time_{};
  Duration busy_{};
  std::vector<Duration> busy_history_;
  TraceSet trace_;
};

/// Runs one scenario to completion. Deterministic: equal scenarios give
/// equal traces.
inline TraceSet run(const Scenario& sc) { return Kernel(sc).run(); }

}  // namespace fbsched
