#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "fbsched/sim_time.hpp"

namespace fbsched {

// Declaration order is the tie-break rank at equal timestamps.
enum class EventKind : std::uint8_t {
  TaskRelease = 0,
  WorkloadChange = 1,
  ExecCompletion = 2,
  ReferenceToggle = 3,
  TraceSample = 4,
};

constexpr std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::TaskRelease: return "task_release";
    case EventKind::WorkloadChange: return "workload_change";
    case EventKind::ExecCompletion: return "exec_completion";
    case EventKind::ReferenceToggle: return "reference_toggle";
    case EventKind::TraceSample: return "trace_sample";
  }
  return "?";
}

struct Event {
  SimTime time;
  EventKind kind = EventKind::TraceSample;
  int id = 0;  ///< task or loop id; 0 when the event has no owner

  friend constexpr bool operator==(const Event&, const Event&) = default;
};

/// Total order on events: time, then kind rank, then id.
constexpr bool event_before(const Event& a, const Event& b) {
  return std::tuple(a.time, static_cast<int>(a.kind), a.id) <
         std::tuple(b.time, static_cast<int>(b.kind), b.id);
}

/// Min-queue of pending events. Rejects anything scheduled before the
/// last popped time, which would mean the kernel tried to rewrite history.
class EventQueue {
 public:
  void push(const Event& e) {
    if (e.time < now_) {
      throw std::logic_error("event scheduled in the past: t=" + std::to_string(e.time.ns) +
                             "ns < now=" + std::to_string(now_.ns) + "ns");
    }
    heap_.push(e);
  }

  Event pop() {
    if (heap_.empty()) throw std::logic_error("pop from empty event queue");
    Event e = heap_.top();
    heap_.pop();
    now_ = e.time;
    return e;
  }

  const Event& top() const { return heap_.top(); }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  SimTime now() const { return now_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const { return event_before(b, a); }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  SimTime now_{};
};

}  // namespace fbsched
