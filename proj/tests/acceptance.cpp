// Prints one PASS/FAIL line per acceptance criterion; exit status is the
// number of failures (capped).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fbsched/fbsched.hpp"
#include "oracle/closed_form_servo.hpp"
#include "oracle/quantum_scheduler.hpp"
#include "oracle/rk4.hpp"

using namespace fbsched;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(const char* id, bool ok, const std::string& detail) {
  std::printf("%s %-3s %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

/// Times at which a loop was enabled or its execution time changed.
std::vector<SimTime> workload_changes(const TraceSet& ts) {
  std::vector<SimTime> out;
  for (const auto& e : ts.events) {
    if ((e.kind == "enable" || e.kind == "workload") && (out.empty() || out.back() != e.time)) out.push_back(e.time);
  }
  return out;
}

bool all_stable(const TraceSet& ts, SimTime t0, SimTime t1) {
  for (std::size_t i = 0; i < ts.loop_ids.size(); ++i) {
    if (!(max_abs_output(ts, i, t0, t1) <= ts.divergence_limits[i])) return false;
  }
  return true;
}

SimTime at(double s) { return time_from_seconds(s); }

void paper_narrative(const Comparison& c, const Scenario& sc) {
  {
    bool overloaded = true;
    double min_u = INFINITY;
    for (const auto& row : c.ols.rows) {
      if (row.time >= at(4) && row.time < at(6)) {
        min_u = std::min(min_u, row.u_req);
        overloaded = overloaded && row.u_req > 1.0;
      }
    }
    const auto s = summarize(c.ols);
    const bool diverged = !s.loops[0].stable;
    report("1a", overloaded && diverged,
           fmt("OLS: min U_req on [4,6) = %.4f, loop 1 max|y| = %.3g", min_u, s.loops[0].max_abs_y) +
               (diverged ? " (diverged)" : " (stable)"));
  }
  {
    const auto& ts = c.ttfs;
    const bool stable = all_stable(ts, SimTime{0}, at(6));
    bool settled = true;
    std::string worst;
    for (SimTime tc : workload_changes(ts)) {
      if (tc > at(6)) break;
      bool hit = false;
      for (const auto& row : ts.rows) {
        if (row.time >= tc && row.time <= tc + sc.fs.fs_period && std::abs(row.u_req - 0.8) <= 0.01) {
          hit = true;
          break;
        }
      }
      if (!hit) {
        settled = false;
        worst += fmt(" no settle after %.3fs", tc.seconds());
      }
    }
    Duration longest{0};
    SimTime run_start{-1};
    for (const auto& row : ts.rows) {
      if (row.time < at(6)) continue;
      if (row.u_req > 1.0) {
        if (run_start.ns < 0) run_start = row.time;
        longest = std::max(longest, row.time - run_start + ts.grid);
      } else {
        run_start = SimTime{-1};
      }
    }
    const bool overload = longest >= milliseconds(300);
    report("1b", stable && settled && overload,
           std::string("TTFS: stable on [0,6] = ") + (stable ? "yes" : "no") + ", U_req settles within T_FS = " +
               (settled ? "yes" : "no") + worst + fmt(", longest overload in [6,12] = %.3fs", longest.seconds()));
  }
  {
    const auto& ts = c.edfs;
    const bool stable = all_stable(ts, SimTime{0}, ts.duration);
    const auto changes = workload_changes(ts);
    long outside = 0;
    double worst = 0.0;
    for (const auto& row : ts.rows) {
      const double dev = std::abs(row.u_req - 0.8);
      if (dev <= 0.02 + 1e-12) continue;
      bool excused = false;
      for (SimTime tc : changes) excused = excused || (row.time >= tc && row.time <= tc + sc.fs.detector_period);
      if (!excused) {
        ++outside;
        worst = std::max(worst, dev);
      }
    }
    report("1c", stable && outside == 0,
           std::string("EDFS: stable over 12 s = ") + (stable ? "yes" : "no") +
               fmt(", samples outside 0.80+-0.02 beyond T_ED of a change = %.0f (worst dev %.4f)",
                   static_cast<double>(outside), worst));
  }
  {
    const double io = summarize(c.ols).iae_total, it = summarize(c.ttfs).iae_total, ie = summarize(c.edfs).iae_total;
    const long at_ = count_events(c.ttfs, "fs_run", SimTime{0}, at(6));
    const long ae = count_events(c.edfs, "fs_run", SimTime{0}, at(6));
    report("1d", ie <= it && it <= io && ae < at_,
           fmt("IAE EDFS %.4f <= TTFS %.4f <= OLS %.4g", ie, it, io) +
               fmt("; activations on [0,6]: EDFS %.0f < TTFS %.0f", static_cast<double>(ae),
                   static_cast<double>(at_)));
  }
}

void rescaling_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> n_dist(1, 10);
  std::uniform_real_distribution<double> c_dist(1e-5, 1e-2), h_dist(1e-3, 0.5), ur_dist(0.05, 1.0);
  double worst_u = 0.0, worst_ratio = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = n_dist(rng);
    std::vector<double> c;
    PeriodMap h;
    for (int i = 0; i < n; ++i) {
      c.push_back(c_dist(rng));
      h[i] = h_dist(rng);
    }
    auto util = [&](const PeriodMap& p) {
      double u = 0.0;
      for (int i = 0; i < n; ++i) u += c[static_cast<std::size_t>(i)] / p.at(i);
      return u;
    };
    const double ur = ur_dist(rng);
    const auto eta = rescaling_factor(util(h), ur);
    const PeriodMap out = rescale_periods(h, *eta, 0.0, INFINITY);
    worst_u = std::max(worst_u, std::abs(util(out) - ur));
    for (int i = 1; i < n; ++i) {
      worst_ratio = std::max(worst_ratio, std::abs(out.at(i) / out.at(0) - h.at(i) / h.at(0)));
    }
  }
  const double secs = since(t0);
  report("2", worst_u <= 1e-9 && worst_ratio <= 1e-9 && secs < 1.0,
         fmt("1000 instances: max |U-U_R| = %.2e, max ratio error = %.2e, %.3fs", worst_u, worst_ratio, secs));
}

void oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);
  int mismatches = 0, first_bad = -1;
  for (int trial = 0; trial < 200; ++trial) {
    const auto rc = oracle::random_case(rng);
    auto got = run(rc.scenario).schedule;
    std::sort(got.begin(), got.end());
    if (got != oracle::quantum_schedule(rc.tasks, rc.edf, rc.duration_us)) {
      ++mismatches;
      if (first_bad < 0) first_bad = trial;
    }
  }
  const double secs = since(t0);
  report("3", mismatches == 0 && secs < 30.0,
         fmt("200 random task sets: %.0f mismatching traces (first %.0f), %.2fs", mismatches, first_bad, secs));
}

void plant_exactness() {
  const LtiPlant base = PlantSpec::paper_servo().instantiate();
  const std::array<double, 2> x0 = {0.3, -2.0};
  double worst = 0.0;
  for (std::int64_t ns = 1000; ns <= 2'000'000'000; ns *= 10) {
    for (std::int64_t mult : {1, 2, 5}) {
      if (ns * mult > 2'000'000'000) continue;
      LtiPlant p = base;
      p.x << x0[0], x0[1];
      p.u_held = -0.7;
      advance(p, SimTime{ns * mult});
      const auto want = oracle::servo_state(x0, -0.7, static_cast<double>(ns * mult) * 1e-9);
      const double err = std::hypot(p.x(0) - want[0], p.x(1) - want[1]) / std::hypot(want[0], want[1]);
      worst = std::max(worst, err);
    }
  }
  LtiPlant p = base;
  p.x << 0.3, -2.0;
  p.u_held = -0.7;
  const Vector start = p.x;
  advance(p, time_from_seconds(1.0));
  const Vector ref = oracle::rk4(p.A, p.B, start, -0.7, 1.0, 1e-5);
  const double rk_err = (p.x - ref).norm() / ref.norm();
  report("4", worst <= 1e-10 && rk_err <= 1e-8,
         fmt("closed form over 1us..2s: max rel err %.2e; RK4(10us) over 1s: rel err %.2e", worst, rk_err));
}

void pid_equivalence() {
  Scenario trad = paper_scenario(), mod = paper_scenario();
  trad.fs.paradigm = mod.fs.paradigm = Paradigm::OLS;
  for (auto& l : trad.loops) l.variant = ControllerVariant::Traditional;
  for (auto& l : mod.loops) l.variant = ControllerVariant::Modified;
  const TraceSet a = run(trad), b = run(mod);
  long differing = 0;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    for (std::size_t k = 0; k < a.rows[i].loops.size(); ++k) {
      const auto& x = a.rows[i].loops[k];
      const auto& y = b.rows[i].loops[k];
      if (std::memcmp(&x.u, &y.u, sizeof(double)) != 0 || std::memcmp(&x.y, &y.y, sizeof(double)) != 0) ++differing;
    }
  }
  const auto d = derive_params(PidGains{}, 0.010);
  const bool params = std::abs(d.bi - 0.0816667) <= 1e-6 && std::abs(d.ad - 0.333333) <= 1e-6 &&
                      std::abs(d.bd - 3.266667) <= 1e-6;
  report("5", differing == 0 && params && !a.rows.empty(),
         fmt("%.0f differing samples over 12 s at constant period; derive_params(10ms) = (%.7f, %.6f, ", differing,
             d.bi, d.ad) +
             fmt("%.6f)", d.bd));
}

void detector_boundary() {
  int wrong = 0, checked = 0;
  for (double delta : {0.01, 0.02, 0.05, 0.1}) {
    for (double ur : {0.5, 0.7, 0.8, 0.9}) {
      for (int k = -200; k <= 200; ++k) {
        const double off = delta + k * 1e-4;
        if (off < 0) continue;
        for (double sign : {1.0, -1.0}) {
          const double u = ur + sign * off;
          const bool want = k >= 0;
          if (detect_event(u, ur, delta) != want) ++wrong;
          ++checked;
        }
      }
      if (!detect_event(ur + delta, ur, delta) || !detect_event(ur - delta, ur, delta)) ++wrong;
    }
  }
  report("6", wrong == 0, fmt("%.0f of %.0f swept points classified wrongly (boundary inclusive)", wrong, checked));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism(const fs::path& out) {
  const fs::path a = out / "compare_a", b = out / "compare_b";
  fs::remove_all(a);
  fs::remove_all(b);
  std::ostringstream sink, err;
  const int ra = compare_command(paper_scenario(), a, std::nullopt, sink, err);
  const int rb = compare_command(paper_scenario(), b, std::nullopt, sink, err);
  int files = 0, differ = 0;
  if (ra == 0 && rb == 0) {
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      if (slurp(e.path()) != slurp(b / fs::relative(e.path(), a))) ++differ;
    }
  }
  report("7", ra == 0 && rb == 0 && files == 6 && differ == 0,
         fmt("two compare runs: %.0f CSV files, %.0f differ", files, differ) + (err.str().empty() ? "" : " " + err.str()));
}

void counting(const Comparison& c) {
  Scenario steady = steady_scenario();
  steady.fs.paradigm = Paradigm::EDFS;
  const TraceSet s = run(steady);
  const long tt = c.ttfs.overhead.fs_activations, det = c.edfs.overhead.detector_runs;
  report("8", tt == 13 && det == 25 && s.overhead.fs_activations == 0,
         fmt("TTFS activations %.0f (want 13), EDFS detector runs %.0f (want 25), ", tt, det) +
             fmt("steady EDFS activations %.0f (want 0)", s.overhead.fs_activations));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "fbsched_acceptance";
  fs::create_directories(out);

  const Scenario sc = paper_scenario();
  const auto t0 = std::chrono::steady_clock::now();
  const Comparison c = compare(sc);
  std::printf("paper scenario, three paradigms: %.2fs\n", since(t0));

  paper_narrative(c, sc);
  rescaling_exactness();
  oracle_equivalence();
  plant_exactness();
  pid_equivalence();
  detector_boundary();
  determinism(out);
  counting(c);

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
