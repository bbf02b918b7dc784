#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fbsched/kernel.hpp"
#include "fbsched/metrics.hpp"
#include "fbsched/scenario.hpp"

namespace fbsched {

/// Nine significant digits, always '.' as decimal separator.
inline std::string csv_number(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  return std::string(buf, ptr);
}

inline void write_traces_csv(std::ostream& out, const TraceSet& ts) {
  out << "time_s";
  for (int id : ts.loop_ids) {
    out << ",r_" << id << ",y_" << id << ",u_" << id << ",h_" << id << "_ms";
  }
  out << ",u_req,u_meas\n";
  for (const auto& row : ts.rows) {
    out << csv_number(row.time.seconds());
    for (const auto& s : row.loops) {
      out << ',' << csv_number(s.r) << ',' << csv_number(s.y) << ',' << csv_number(s.u) << ','
          << csv_number(s.h_ms);
    }
    out << ',' << csv_number(row.u_req) << ',' << csv_number(row.u_meas) << '\n';
  }
}

inline void write_events_csv(std::ostream& out, const TraceSet& ts) {
  out << "time_s,kind,task_id,detail\n";
  for (const auto& e : ts.events) {
    out << csv_number(e.time.seconds()) << ',' << e.kind << ',' << e.task_id << ',' << e.detail << '\n';
  }
}

inline void write_summary_kv(std::ostream& out, const Summary& s) {
  out << "paradigm = " << to_string(s.paradigm) << '\n';
  out << "iae_total = " << csv_number(s.iae_total) << '\n';
  for (const auto& l : s.loops) out << "iae_loop_" << l.id << " = " << csv_number(l.iae) << '\n';
  for (const auto& l : s.loops) out << "miss_ratio_task_" << l.id << " = " << csv_number(l.miss_ratio) << '\n';
  out << "fs_activations = " << s.fs_activations << '\n';
  out << "detector_runs = " << s.detector_runs << '\n';
  out << "fs_cpu_time_s = " << csv_number(s.fs_cpu_time_s) << '\n';
  out << "mean_u_req = " << csv_number(s.mean_u_req) << '\n';
  out << "max_u_req = " << csv_number(s.max_u_req) << '\n';
  for (const auto& l : s.loops) out << "stable_loop_" << l.id << " = " << (l.stable ? 1 : 0) << '\n';
}

inline void write_summary_table(std::ostream& out, const Summary& s) {
  out << "paradigm: " << to_string(s.paradigm) << "\n\n";
  out << std::left << std::setw(6) << "loop" << std::right << std::setw(17) << "IAE" << std::setw(8) << "jobs"
      << std::setw(8) << "misses" << std::setw(17) << "miss ratio" << std::setw(17) << "max |y|"
      << "  verdict\n";
  for (const auto& l : s.loops) {
    out << std::left << std::setw(6) << l.id << std::right << std::setw(17) << csv_number(l.iae) << std::setw(8)
        << l.jobs << std::setw(8) << l.misses << std::setw(17) << csv_number(l.miss_ratio) << std::setw(17)
        << csv_number(l.max_abs_y) << "  " << (l.stable ? "stable" : "diverged") << '\n';
  }
  out << '\n';
  out << "total IAE        " << csv_number(s.iae_total) << '\n';
  out << "FS activations   " << s.fs_activations << '\n';
  out << "detector runs    " << s.detector_runs << '\n';
  out << "FS CPU time [s]  " << csv_number(s.fs_cpu_time_s) << '\n';
  out << "mean U_req       " << csv_number(s.mean_u_req) << '\n';
  out << "max U_req        " << csv_number(s.max_u_req) << '\n';
}

inline const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Plots one run's traces.csv: loop outputs, periods and utilization."""
import csv
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
with open(here / "traces.csv", newline="") as f:
    rows = list(csv.DictReader(f))
t = [float(r["time_s"]) for r in rows]
loops = sorted({k[2:] for k in rows[0] if k.startswith("y_")}, key=int)

fig, ax = plt.subplots(len(loops) + 2, 1, sharex=True, figsize=(10, 2.2 * (len(loops) + 2)))
for a, i in zip(ax, loops):
    a.plot(t, [float(r[f"r_{i}"]) for r in rows], "k--", lw=0.8, label="r")
    a.plot(t, [float(r[f"y_{i}"]) for r in rows], lw=0.8, label="y")
    a.set_ylabel(f"loop {i}")
    a.set_ylim(-3, 3)
    a.legend(loc="upper right")
for i in loops:
    ax[-2].plot(t, [float(r[f"h_{i}_ms"]) for r in rows], label=f"h_{i}")
ax[-2].set_ylabel("period [ms]")
ax[-2].legend(loc="upper right")
ax[-1].plot(t, [float(r["u_req"]) for r in rows], label="U_req")
ax[-1].plot(t, [float(r["u_meas"]) for r in rows], lw=0.6, label="U_meas")
ax[-1].set_ylabel("utilization")
ax[-1].set_xlabel("time [s]")
ax[-1].legend(loc="upper right")
fig.tight_layout()
fig.savefig(here / "traces.png", dpi=120)
)PY";

inline const char* kComparePlotScript = R"PY(#!/usr/bin/env python3
"""Overlays loop 1 output and requested utilization for ols/ttfs/edfs."""
import csv
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
fig, ax = plt.subplots(2, 1, sharex=True, figsize=(10, 6))
for name in ("ols", "ttfs", "edfs"):
    with open(here / name / "traces.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    t = [float(r["time_s"]) for r in rows]
    ax[0].plot(t, [float(r["y_1"]) for r in rows], lw=0.8, label=name)
    ax[1].plot(t, [float(r["u_req"]) for r in rows], lw=0.8, label=name)
ax[0].set_ylim(-3, 3)
ax[0].set_ylabel("loop 1 output")
ax[1].set_ylabel("requested utilization")
ax[1].set_xlabel("time [s]")
for a in ax:
    a.legend(loc="upper right")
fig.tight_layout()
fig.savefig(here / "comparison.png", dpi=120)
)PY";

namespace detail {

inline bool write_file(const std::filesystem::path& p, const std::string& content, std::ostream& err) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) {
    err << "error: cannot write " << p.string() << '\n';
    return false;
  }
  out << content;
  out.close();
  if (!out) {
    err << "error: failed writing " << p.string() << '\n';
    return false;
  }
  return true;
}

inline bool ensure_dir(const std::filesystem::path& dir, std::ostream& err) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    err << "error: cannot create output directory " << dir.string() << ": " << ec.message() << '\n';
    return false;
  }
  return true;
}

}  // namespace detail

/// Writes traces.csv, events.csv, summary.txt, summary.kv and plot.py.
inline bool write_run_outputs(const std::filesystem::path& dir, const TraceSet& ts, std::ostream& err) {
  if (!detail::ensure_dir(dir, err)) return false;
  const Summary s = summarize(ts);
  std::ostringstream traces, events, kv, table;
  write_traces_csv(traces, ts);
  write_events_csv(events, ts);
  write_summary_kv(kv, s);
  write_summary_table(table, s);
  return detail::write_file(dir / "traces.csv", traces.str(), err) &&
         detail::write_file(dir / "events.csv", events.str(), err) &&
         detail::write_file(dir / "summary.kv", kv.str(), err) &&
         detail::write_file(dir / "summary.txt", table.str(), err) &&
         detail::write_file(dir / "plot.py", kPlotScript, err);
}

inline int run_command(Scenario sc, std::optional<Paradigm> paradigm, const std::filesystem::path& out_dir,
                       std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
  if (paradigm) sc.fs.paradigm = *paradigm;
  if (seed) sc.seed = *seed;
  TraceSet ts;
  try {
    ts = run(sc);
  } catch (const std::exception& e) {
    err << "error: simulation failed: " << e.what() << '\n';
    return 3;
  }
  if (!write_run_outputs(out_dir, ts, err)) return 2;
  write_summary_table(out, summarize(ts));
  return 0;
}

struct Comparison {
  TraceSet ols, ttfs, edfs;
};

/// Runs the same scenario under all three paradigms, concurrently.
inline Comparison compare(const Scenario& base) {
  auto with = [&](Paradigm p) {
    Scenario s = base;
    s.fs.paradigm = p;
    return s;
  };
  auto f_ols = std::async(std::launch::async, [s = with(Paradigm::OLS)] { return run(s); });
  auto f_ttfs = std::async(std::launch::async, [s = with(Paradigm::TTFS)] { return run(s); });
  auto f_edfs = std::async(std::launch::async, [s = with(Paradigm::EDFS)] { return run(s); });
  return {f_ols.get(), f_ttfs.get(), f_edfs.get()};
}

inline void write_comparison_table(std::ostream& out, const Summary& ols, const Summary& ttfs, const Summary& edfs) {
  const Summary* all[] = {&ols, &ttfs, &edfs};
  out << std::left << std::setw(8) << "method" << std::right << std::setw(17) << "total IAE" << std::setw(16)
      << "FS activations" << std::setw(15) << "detector runs";
  for (const auto& l : ols.loops) out << std::setw(10) << ("loop " + std::to_string(l.id));
  out << '\n';
  for (const Summary* s : all) {
    out << std::left << std::setw(8) << to_string(s->paradigm) << std::right << std::setw(17)
        << csv_number(s->iae_total) << std::setw(16) << s->fs_activations << std::setw(15) << s->detector_runs;
    for (const auto& l : s->loops) out << std::setw(10) << (l.stable ? "stable" : "diverged");
    out << '\n';
  }
}

inline int compare_command(Scenario sc, const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed,
                           std::ostream& out, std::ostream& err) {
  if (seed) sc.seed = *seed;
  Comparison c;
  try {
    c = compare(sc);
  } catch (const std::exception& e) {
    err << "error: simulation failed: " << e.what() << '\n';
    return 3;
  }
  if (!detail::ensure_dir(out_dir, err)) return 2;
  if (!write_run_outputs(out_dir / "ols", c.ols, err) || !write_run_outputs(out_dir / "ttfs", c.ttfs, err) ||
      !write_run_outputs(out_dir / "edfs", c.edfs, err)) {
    return 2;
  }
  const Summary so = summarize(c.ols), st = summarize(c.ttfs), se = summarize(c.edfs);
  std::ostringstream table, kv;
  write_comparison_table(table, so, st, se);
  for (const Summary* s : {&so, &st, &se}) {
    const std::string p(to_string(s->paradigm));
    kv << p << ".iae_total = " << csv_number(s->iae_total) << '\n';
    kv << p << ".fs_activations = " << s->fs_activations << '\n';
    kv << p << ".detector_runs = " << s->detector_runs << '\n';
    for (const auto& l : s->loops) kv << p << ".stable_loop_" << l.id << " = " << (l.stable ? 1 : 0) << '\n';
  }
  if (!detail::write_file(out_dir / "comparison.txt", table.str(), err) ||
      !detail::write_file(out_dir / "comparison.kv", kv.str(), err) ||
      !detail::write_file(out_dir / "plot_comparison.py", kComparePlotScript, err)) {
    return 2;
  }
  out << table.str();
  return 0;
}

}  // namespace fbsched
