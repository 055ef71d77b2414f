#include "phaseamp/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "phaseamp/amp.hpp"
#include "phaseamp/rng.hpp"
#include "phaseamp/se_dynamics.hpp"
#include "phaseamp/se_maps.hpp"
#include "phaseamp/spectral.hpp"

namespace phaseamp {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kKindNames[] = {
    "se-trajectory",     "se-basin",      "se-phase-scan", "amp-vs-se",
    "noise-sensitivity", "spectral-demo", "nullclines"};

// ---------------------------------------------------------------------------
// Formatting

std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string cell_text(const Cell& c) {
  if (std::holds_alternative<std::int64_t>(c)) {
    return std::to_string(std::get<std::int64_t>(c));
  }
  if (std::holds_alternative<double>(c)) return fmt17(std::get<double>(c));
  return std::get<std::string>(c);
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Row ordering: lexicographic over the row (schemas put the key columns
// first, so this is exactly "sorted by the declared key").  Doubles use the
// IEEE total order so ties and specials stay deterministic.

std::uint64_t total_order_key(double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof u);
  // Monotone sign-magnitude flip: orders like < on numbers and places
  // every NaN bit pattern deterministically at an end.
  return (u & 0x8000000000000000ull) ? ~u : (u | 0x8000000000000000ull);
}

bool cell_less(const Cell& a, const Cell& b) {
  if (std::holds_alternative<std::int64_t>(a)) {
    return std::get<std::int64_t>(a) < std::get<std::int64_t>(b);
  }
  if (std::holds_alternative<double>(a)) {
    return total_order_key(std::get<double>(a)) <
           total_order_key(std::get<double>(b));
  }
  return std::get<std::string>(a) < std::get<std::string>(b);
}

void sort_rows(ResultTable& table) {
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const std::vector<Cell>& a, const std::vector<Cell>& b) {
                     for (std::size_t k = 0; k < a.size(); ++k) {
                       if (cell_less(a[k], b[k])) return true;
                       if (cell_less(b[k], a[k])) return false;
                     }
                     return false;
                   });
}

// ---------------------------------------------------------------------------
// Trial fan-out: a worker pool pulls indices off an atomic counter.  Each
// trial's randomness comes from its own seed, and results land in
// preallocated slots, so any thread count yields the same row set.

template <typename Fn>
void parallel_for_indexed(std::size_t count, int threads, Fn&& fn) {
  const int workers =
      std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Assertion blocks

struct AssertEval {
  const std::map<std::string, double>& values;
  std::vector<std::string> failures;

  explicit AssertEval(const ExperimentSpec& spec) : values(spec.assertions) {}

  bool active() const { return !values.empty(); }
  bool has(const char* key) const { return values.count(key) != 0; }
  double get(const char* key, double fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }
  // Bound checks register a failure message when violated.
  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  // Flag keys assert a condition when >= 0.5 and its negation otherwise.
  void flag(const char* key, bool condition) {
    if (!has(key)) return;
    const bool wanted = get(key, 0.0) >= 0.5;
    if (condition != wanted) {
      failures.push_back(std::string(key) + ": condition is " +
                         (condition ? "true" : "false") + ", asserted " +
                         (wanted ? "true" : "false"));
    }
  }

  void finish(ExperimentResult& result) const {
    if (!active()) return;
    result.has_assert = true;
    result.assert_passed = failures.empty();
    if (failures.empty()) {
      result.summary += " | assert PASS";
    } else {
      result.summary += " | assert FAIL: " + failures.front();
      if (failures.size() > 1) {
        result.summary +=
            " (+" + std::to_string(failures.size() - 1) + " more)";
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Shared helpers

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::ConvergedSuccess: return "converged_success";
    case Verdict::ConvergedNoisyFP: return "converged_noisy_fp";
    case Verdict::Stalled: return "stalled";
    case Verdict::MaxIters: return "max_iters";
  }
  return "unknown";
}

std::string region_name(const SEState& state, double delta, Field field) {
  const double a = field == Field::Complex ? std::abs(state.alpha)
                                           : state.alpha.real();
  if (!(a > 0.0 && a <= 1.0)) return "off_chart";
  switch (classify_region(state, delta, field).tag) {
    case RegionTag::R0: return "r0";
    case RegionTag::R1: return "r1";
    case RegionTag::R2a: return "r2a";
    case RegionTag::R2b: return "r2b";
    case RegionTag::OutOfDomain: return "out_of_domain";
  }
  return "off_chart";
}

// States of the SE orbit from `init`, indices 0..iters (no verdict logic:
// finite-n traces are compared entry by entry, past any convergence).
std::vector<SEState> se_prefix(const SEState& init, const ModelParams& params,
                               int iters) {
  std::vector<SEState> states;
  states.reserve(static_cast<std::size_t>(iters) + 1);
  states.push_back(init);
  for (int t = 0; t < iters; ++t) {
    states.push_back(se_step(states.back(), params));
  }
  return states;
}

std::int64_t icell(std::int64_t v) { return v; }

// ---------------------------------------------------------------------------
// Runners (one per kind).  Each builds its table, sorts it, and derives the
// summary/assert verdict from the sorted rows.

ExperimentResult run_se_trajectory(const ExperimentSpec& spec) {
  const Trajectory traj =
      se_trajectory(SEState(std::complex<double>(spec.alpha0, 0.0),
                            spec.sigma0_sq),
                    spec.model, static_cast<std::size_t>(spec.iterations),
                    spec.tolerance);

  ExperimentResult result;
  result.table.columns = {"t", "alpha_abs", "sigma2", "amse", "region"};
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    const SEState& st = traj.states[t];
    result.table.rows.push_back(
        {icell(static_cast<std::int64_t>(t)), std::abs(st.alpha), st.sigma2,
         se_predicted_amse(st),
         region_name(st, spec.model.delta, spec.model.field)});
  }
  sort_rows(result.table);

  const SEState& last = traj.states.back();
  result.summary = std::string("se-trajectory: verdict=") +
                   verdict_name(traj.verdict) +
                   " iterations=" + std::to_string(traj.iterations_used) +
                   " final_alpha_abs=" + fmt6(std::abs(last.alpha)) +
                   " final_sigma2=" + fmt6(last.sigma2);

  AssertEval ae(spec);
  ae.flag("require_success", traj.verdict == Verdict::ConvergedSuccess);
  if (ae.has("final_sigma2_max")) {
    ae.require(last.sigma2 <= ae.get("final_sigma2_max", 0.0),
               "final_sigma2_max: final sigma2 = " + fmt6(last.sigma2));
  }
  if (ae.has("final_alpha_abs_min")) {
    ae.require(std::abs(last.alpha) >= ae.get("final_alpha_abs_min", 0.0),
               "final_alpha_abs_min: final |alpha| = " +
                   fmt6(std::abs(last.alpha)));
  }
  ae.finish(result);
  return result;
}

ExperimentResult run_se_basin(const ExperimentSpec& spec) {
  const BasinGrid grid =
      se_basin_grid(spec.model, static_cast<std::size_t>(spec.grid_n),
                    static_cast<std::size_t>(spec.iterations), spec.tolerance);

  ExperimentResult result;
  result.table.columns = {"i", "j", "alpha0", "sigma0_sq", "success"};
  for (std::size_t i = 0; i < grid.grid_n; ++i) {
    for (std::size_t j = 0; j < grid.grid_n; ++j) {
      result.table.rows.push_back({icell(static_cast<std::int64_t>(i)),
                                   icell(static_cast<std::int64_t>(j)),
                                   grid.alpha0[i], grid.sigma0_sq[j],
                                   icell(grid.cell(i, j) ? 1 : 0)});
    }
  }
  sort_rows(result.table);

  const double frac = grid.success_fraction();
  result.summary = "se-basin: grid=" + std::to_string(grid.grid_n) + "x" +
                   std::to_string(grid.grid_n) +
                   " success_fraction=" + fmt6(frac);

  AssertEval ae(spec);
  if (ae.has("success_fraction_min")) {
    ae.require(frac >= ae.get("success_fraction_min", 0.0),
               "success_fraction_min: fraction = " + fmt6(frac));
  }
  if (ae.has("success_fraction_max")) {
    ae.require(frac <= ae.get("success_fraction_max", 1.0),
               "success_fraction_max: fraction = " + fmt6(frac));
  }
  ae.flag("proper_subset", frac > 0.0 && frac < 1.0);
  ae.flag("all_success", frac == 1.0);
  ae.finish(result);
  return result;
}

ExperimentResult run_se_phase_scan(const ExperimentSpec& spec) {
  const double threshold = phase_transition_scan(
      spec.model.field, spec.delta_lo, spec.delta_hi,
      static_cast<std::size_t>(spec.scan_steps),
      SEState(std::complex<double>(spec.alpha0, 0.0), spec.sigma0_sq),
      static_cast<std::size_t>(spec.iterations), spec.tolerance);

  ExperimentResult result;
  result.table.columns = {"delta_lo", "delta_hi", "scan_steps", "threshold"};
  result.table.rows.push_back({spec.delta_lo, spec.delta_hi,
                               icell(spec.scan_steps), threshold});

  result.summary = "se-phase-scan: threshold=" + fmt6(threshold) +
                   " bracket=[" + fmt6(spec.delta_lo) + "," +
                   fmt6(spec.delta_hi) +
                   "] steps=" + std::to_string(spec.scan_steps);

  AssertEval ae(spec);
  if (ae.has("threshold_near")) {
    const double target = ae.get("threshold_near", 0.0);
    const double tol = ae.get("threshold_tol", 0.02);
    ae.require(std::abs(threshold - target) <= tol,
               "threshold_near: |" + fmt6(threshold) + " - " + fmt6(target) +
                   "| > " + fmt6(tol));
  }
  ae.finish(result);
  return result;
}

ExperimentResult run_nullclines(const ExperimentSpec& spec) {
  ExperimentResult result;
  result.table.columns = {"alpha", "f1_inverse", "f2", "l_bound"};

  bool f1_gt_f2 = true;
  bool f1_gt_l = true;
  for (int k = 1; k <= spec.alpha_steps; ++k) {
    const double alpha = static_cast<double>(k) / (spec.alpha_steps + 1.0);
    const double f1i = F1_inverse(alpha, spec.model.field);
    const double f2 = F2(alpha, spec.model);
    const double lb = L_boundary(alpha, spec.model.delta, spec.model.field);
    f1_gt_f2 = f1_gt_f2 && f1i > f2;
    f1_gt_l = f1_gt_l && f1i > lb;
    result.table.rows.push_back({alpha, f1i, f2, lb});
  }
  sort_rows(result.table);

  result.summary =
      "nullclines: rows=" + std::to_string(result.table.rows.size()) +
      " f1_gt_f2=" + (f1_gt_f2 ? "true" : "false") +
      " f1_gt_l=" + (f1_gt_l ? "true" : "false");

  AssertEval ae(spec);
  ae.flag("f1_dominates", f1_gt_f2 && f1_gt_l);
  ae.finish(result);
  return result;
}

ExperimentResult run_noise_sensitivity(const ExperimentSpec& spec,
                                       int threads) {
  std::vector<NoiseSensitivity> per_delta(spec.deltas.size());
  parallel_for_indexed(spec.deltas.size(), threads, [&](std::size_t i) {
    per_delta[i] = noise_sensitivity(spec.deltas[i], spec.model.field);
  });

  ExperimentResult result;
  result.table.columns = {"delta", "sigma_w2", "slope", "slope_extrapolated",
                          "slope_closed_form"};
  double worst_rel_err = 0.0;
  for (std::size_t i = 0; i < spec.deltas.size(); ++i) {
    const NoiseSensitivity& ns = per_delta[i];
    for (int k = 2; k >= 0; --k) {  // ascending sigma_w2
      result.table.rows.push_back({spec.deltas[i], ns.sigma_w2[k],
                                   ns.slope[k], ns.slope_extrapolated,
                                   ns.slope_closed_form});
    }
    worst_rel_err =
        std::max(worst_rel_err, std::abs(ns.slope[2] - ns.slope_closed_form) /
                                    ns.slope_closed_form);
  }
  sort_rows(result.table);

  result.summary =
      "noise-sensitivity: deltas=" + std::to_string(spec.deltas.size()) +
      " worst_rel_err=" + fmt6(worst_rel_err);

  AssertEval ae(spec);
  if (ae.has("slope_rel_tol")) {
    ae.require(worst_rel_err <= ae.get("slope_rel_tol", 0.0),
               "slope_rel_tol: worst relative error = " + fmt6(worst_rel_err));
  }
  ae.finish(result);
  return result;
}

ExperimentResult run_amp_vs_se(const ExperimentSpec& spec, int threads) {
  struct Trial {
    double delta;
    int n;
    std::uint64_t seed;
  };
  std::vector<Trial> trials;
  for (double delta : spec.deltas) {
    for (int n : spec.sizes) {
      for (std::uint64_t seed : spec.seeds) trials.push_back({delta, n, seed});
    }
  }

  std::vector<std::vector<std::vector<Cell>>> rows_per(trials.size());
  std::vector<std::uint8_t> truncated(trials.size(), 0);
  parallel_for_indexed(trials.size(), threads, [&](std::size_t i) {
    const Trial& tr = trials[i];
    ModelConfig config;
    config.params = spec.model;
    config.params.delta = tr.delta;
    config.n = tr.n;
    config.seed = tr.seed;
    const MeasurementInstance inst = generate_instance(config);
    const AMPState init =
        make_informative_init(inst, spec.alpha0, spec.sigma0_sq, tr.seed);
    const AMPTrace trace = run_amp(inst, init, spec.iterations, spec.epsilon);
    const std::vector<SEState> se =
        se_prefix(SEState(std::complex<double>(spec.alpha0, 0.0),
                          spec.sigma0_sq),
                  config.params, spec.iterations);
    truncated[i] = trace.truncated ? 1 : 0;
    auto& rows = rows_per[i];
    rows.reserve(trace.size());
    for (std::size_t t = 0; t < trace.size(); ++t) {
      rows.push_back({tr.delta, icell(tr.n),
                      icell(static_cast<std::int64_t>(tr.seed)),
                      icell(static_cast<std::int64_t>(t)),
                      std::abs(trace.alpha_hat[t]), trace.sigma2_hat[t],
                      trace.amse[t], trace.divergence[t],
                      std::abs(se[t].alpha), se[t].sigma2});
    }
  });

  ExperimentResult result;
  result.table.columns = {"delta",     "n",          "seed",
                          "t",         "alpha_hat_abs", "sigma2_hat",
                          "amse",      "divergence", "se_alpha_abs",
                          "se_sigma2"};
  for (auto& rows : rows_per) {
    for (auto& row : rows) result.table.rows.push_back(std::move(row));
  }
  sort_rows(result.table);

  AssertEval ae(spec);
  const double dev_t_max =
      ae.get("dev_t_max", std::numeric_limits<double>::infinity());
  double max_dev = 0.0;
  double final_amse_max = 0.0;
  const auto& rows = result.table.rows;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const double t = static_cast<double>(std::get<std::int64_t>(row[3]));
    if (t <= dev_t_max) {
      const double dev =
          std::max(std::abs(std::get<double>(row[4]) - std::get<double>(row[8])),
                   std::abs(std::get<double>(row[5]) - std::get<double>(row[9])));
      max_dev = std::max(max_dev, dev);
    }
    const bool last_of_trial =
        r + 1 == rows.size() ||
        !(rows[r + 1][0] == row[0] && rows[r + 1][1] == row[1] &&
          rows[r + 1][2] == row[2]);
    if (last_of_trial) {
      final_amse_max = std::max(final_amse_max, std::get<double>(row[6]));
    }
  }
  const int n_trunc = std::count(truncated.begin(), truncated.end(), 1);

  result.summary = "amp-vs-se: trials=" + std::to_string(trials.size()) +
                   " max_dev=" + fmt6(max_dev) +
                   " final_amse_max=" + fmt6(final_amse_max) +
                   " truncated=" + std::to_string(n_trunc);

  if (ae.has("max_dev_max")) {
    ae.require(max_dev <= ae.get("max_dev_max", 0.0) && n_trunc == 0,
               "max_dev_max: max deviation = " + fmt6(max_dev) +
                   ", truncated trials = " + std::to_string(n_trunc));
  }
  if (ae.has("final_amse_max")) {
    ae.require(final_amse_max <= ae.get("final_amse_max", 0.0),
               "final_amse_max: worst final amse = " + fmt6(final_amse_max));
  }
  ae.finish(result);
  return result;
}

ExperimentResult run_spectral_demo(const ExperimentSpec& spec, int threads) {
  struct Trial {
    int n;
    std::uint64_t seed;
  };
  std::vector<Trial> trials;
  for (int n : spec.sizes) {
    for (std::uint64_t seed : spec.seeds) trials.push_back({n, seed});
  }

  std::vector<std::vector<std::vector<Cell>>> rows_per(trials.size());
  parallel_for_indexed(trials.size(), threads, [&](std::size_t i) {
    const Trial& tr = trials[i];
    ModelConfig config;
    config.params = spec.model;
    config.n = tr.n;
    config.seed = tr.seed;
    const MeasurementInstance inst = generate_instance(config);

    SpectralConfig scfg;
    scfg.delta = spec.model.delta;
    scfg.sigma_w2 = spec.model.sigma_w2;
    const SpectralResult sr = spectral_initialize(inst, scfg);

    const double empirical =
        std::norm(inst.x_star_cplx.dot(sr.x0)) /
        (sr.x0.squaredNorm() * inst.x_star_cplx.squaredNorm());

    const AMPState init = make_initial_state(inst, sr.x0);
    const AMPTrace decoupled =
        run_amp(inst, init, spec.iterations, spec.epsilon, &sr.p0);
    const AMPTrace blind = run_amp(inst, init, spec.iterations, spec.epsilon);
    const std::vector<SEState> se =
        se_prefix(SEState(std::sqrt(sr.predicted_alpha0_sq),
                          sr.predicted_sigma0_sq),
                  config.params, spec.iterations);

    auto& rows = rows_per[i];
    auto emit = [&](const char* variant, const AMPTrace& trace) {
      for (std::size_t t = 0; t < trace.size(); ++t) {
        rows.push_back({icell(tr.n), icell(static_cast<std::int64_t>(tr.seed)),
                        std::string(variant),
                        icell(static_cast<std::int64_t>(t)),
                        std::abs(trace.alpha_hat[t]), trace.sigma2_hat[t],
                        trace.amse[t], std::abs(se[t].alpha), se[t].sigma2,
                        sr.predicted_alpha0_sq, empirical});
      }
    };
    emit("decoupled", decoupled);
    emit("blind", blind);
  });

  ExperimentResult result;
  result.table.columns = {"n",          "seed",       "variant",
                          "t",          "alpha_hat_abs", "sigma2_hat",
                          "amse",       "se_alpha_abs", "se_sigma2",
                          "predicted_alpha0_sq", "empirical_alpha0_sq"};
  for (auto& rows : rows_per) {
    for (auto& row : rows) result.table.rows.push_back(std::move(row));
  }
  sort_rows(result.table);

  AssertEval ae(spec);
  const double dev_t_max = ae.get("dev_t_max", 10.0);

  // Aggregates over the sorted table: overlap error averaged over trials,
  // the worst decoupled deviation within the horizon, and each blind
  // trial's peak deviation (the decoupling evidence is that every blind
  // run leaves the SE band).
  double overlap_err_sum = 0.0;
  std::size_t n_trials_seen = 0;
  double decoupled_max_dev = 0.0;
  double blind_peak_min = std::numeric_limits<double>::infinity();
  double blind_peak_cur = 0.0;
  bool in_blind_group = false;
  const auto& rows = result.table.rows;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string& variant = std::get<std::string>(row[2]);
    const double t = static_cast<double>(std::get<std::int64_t>(row[3]));
    const double dev =
        std::max(std::abs(std::get<double>(row[4]) - std::get<double>(row[7])),
                 std::abs(std::get<double>(row[5]) - std::get<double>(row[8])));
    if (variant == "decoupled") {
      if (t <= dev_t_max) decoupled_max_dev = std::max(decoupled_max_dev, dev);
      if (std::get<std::int64_t>(row[3]) == 0) {
        overlap_err_sum +=
            std::get<double>(row[10]) - std::get<double>(row[9]);
        ++n_trials_seen;
      }
    } else {
      if (!in_blind_group) {
        in_blind_group = true;
        blind_peak_cur = 0.0;
      }
      if (t <= dev_t_max) blind_peak_cur = std::max(blind_peak_cur, dev);
      const bool last_of_group =
          r + 1 == rows.size() ||
          !(rows[r + 1][0] == row[0] && rows[r + 1][1] == row[1] &&
            rows[r + 1][2] == row[2]);
      if (last_of_group) {
        blind_peak_min = std::min(blind_peak_min, blind_peak_cur);
        in_blind_group = false;
      }
    }
  }
  const double mean_overlap_err =
      n_trials_seen > 0 ? std::abs(overlap_err_sum / n_trials_seen) : 0.0;

  result.summary = "spectral-demo: trials=" + std::to_string(trials.size()) +
                   " mean_overlap_err=" + fmt6(mean_overlap_err) +
                   " decoupled_max_dev=" + fmt6(decoupled_max_dev) +
                   " blind_peak_dev_min=" + fmt6(blind_peak_min);

  if (ae.has("overlap_tol")) {
    ae.require(mean_overlap_err <= ae.get("overlap_tol", 0.0),
               "overlap_tol: mean overlap error = " + fmt6(mean_overlap_err));
  }
  if (ae.has("decoupled_max_dev")) {
    ae.require(decoupled_max_dev <= ae.get("decoupled_max_dev", 0.0),
               "decoupled_max_dev: max deviation = " +
                   fmt6(decoupled_max_dev));
  }
  if (ae.has("blind_min_exceed")) {
    ae.require(blind_peak_min > ae.get("blind_min_exceed", 0.0),
               "blind_min_exceed: smallest blind peak deviation = " +
                   fmt6(blind_peak_min));
  }
  ae.finish(result);
  return result;
}

// ---------------------------------------------------------------------------
// Config schema

struct KindSchema {
  std::set<std::string> allowed;
  std::set<std::string> required;
  std::set<std::string> assert_keys;
  bool delta_required = true;
};

KindSchema schema_for(ExperimentKind kind) {
  KindSchema s;
  s.allowed = {"kind", "model", "out", "format", "assert"};
  s.required = {"kind", "model"};
  switch (kind) {
    case ExperimentKind::SeTrajectory:
      s.allowed.insert({"init", "iterations", "tolerance"});
      s.required.insert("init");
      s.assert_keys = {"require_success", "final_sigma2_max",
                       "final_alpha_abs_min"};
      break;
    case ExperimentKind::SeBasin:
      s.allowed.insert({"grid_n", "iterations", "tolerance"});
      s.assert_keys = {"success_fraction_min", "success_fraction_max",
                       "proper_subset", "all_success"};
      break;
    case ExperimentKind::SePhaseScan:
      s.allowed.insert(
          {"delta_range", "init", "scan_steps", "iterations", "tolerance"});
      s.required.insert({"delta_range", "init"});
      s.assert_keys = {"threshold_near", "threshold_tol"};
      s.delta_required = false;
      break;
    case ExperimentKind::AmpVsSe:
      s.allowed.insert(
          {"sizes", "seeds", "init", "iterations", "deltas", "epsilon"});
      s.required.insert({"sizes", "seeds", "init", "iterations"});
      s.assert_keys = {"max_dev_max", "dev_t_max", "final_amse_max"};
      break;
    case ExperimentKind::NoiseSensitivity:
      s.allowed.insert("deltas");
      s.required.insert("deltas");
      s.assert_keys = {"slope_rel_tol"};
      s.delta_required = false;
      break;
    case ExperimentKind::SpectralDemo:
      s.allowed.insert({"sizes", "seeds", "iterations", "epsilon"});
      s.required.insert({"sizes", "seeds", "iterations"});
      s.assert_keys = {"overlap_tol", "decoupled_max_dev", "blind_min_exceed",
                       "dev_t_max"};
      break;
    case ExperimentKind::Nullclines:
      s.allowed.insert("alpha_steps");
      s.assert_keys = {"f1_dominates"};
      break;
  }
  return s;
}

// SAX pass whose only job is rejecting duplicate object keys (the DOM
// parser silently keeps the last occurrence).

class DupKeySax : public nlohmann::json_sax<json> {
 public:
  explicit DupKeySax(std::vector<std::string>* errors) : errors_(errors) {}

  bool null() override { return true; }
  bool boolean(bool) override { return true; }
  bool number_integer(number_integer_t) override { return true; }
  bool number_unsigned(number_unsigned_t) override { return true; }
  bool number_float(number_float_t, const string_t&) override { return true; }
  bool string(string_t&) override { return true; }
  bool binary(binary_t&) override { return true; }
  bool start_object(std::size_t) override {
    scopes_.emplace_back();
    return true;
  }
  bool key(string_t& val) override {
    if (!scopes_.empty() && !scopes_.back().insert(val).second) {
      errors_->push_back("duplicate key '" + val + "'");
    }
    return true;
  }
  bool end_object() override {
    if (!scopes_.empty()) scopes_.pop_back();
    return true;
  }
  bool start_array(std::size_t) override { return true; }
  bool end_array() override { return true; }
  bool parse_error(std::size_t position, const std::string&,
                   const nlohmann::detail::exception& ex) override {
    errors_->push_back("syntax error at byte " + std::to_string(position) +
                       ": " + ex.what());
    return false;
  }

 private:
  std::vector<std::string>* errors_;
  std::vector<std::set<std::string>> scopes_;
};

// Extraction helpers: every mismatch lands in `errors` and leaves the
// target untouched, so parsing can keep enumerating problems.

void report_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& prefix,
                         std::vector<std::string>* errors) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      errors->push_back(prefix + "unknown key '" + item.key() + "'");
    }
  }
}

bool take_double(const json& obj, const char* key, const std::string& prefix,
                 std::vector<std::string>* errors, double* out) {
  if (!obj.contains(key)) return false;
  const json& v = obj.at(key);
  if (!v.is_number()) {
    errors->push_back(prefix + key + ": must be a number");
    return false;
  }
  *out = v.get<double>();
  return true;
}

bool take_int(const json& obj, const char* key, const std::string& prefix,
              std::vector<std::string>* errors, int* out) {
  if (!obj.contains(key)) return false;
  const json& v = obj.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    errors->push_back(prefix + key + ": must be an integer");
    return false;
  }
  const std::int64_t raw = v.get<std::int64_t>();
  if (raw < std::numeric_limits<int>::min() ||
      raw > std::numeric_limits<int>::max()) {
    errors->push_back(prefix + key + ": out of integer range");
    return false;
  }
  *out = static_cast<int>(raw);
  return true;
}

bool take_string(const json& obj, const char* key, const std::string& prefix,
                 std::vector<std::string>* errors, std::string* out) {
  if (!obj.contains(key)) return false;
  const json& v = obj.at(key);
  if (!v.is_string()) {
    errors->push_back(prefix + key + ": must be a string");
    return false;
  }
  *out = v.get<std::string>();
  return true;
}

}  // namespace

const char* kind_name(ExperimentKind kind) {
  return kKindNames[static_cast<int>(kind)];
}

std::optional<ExperimentKind> parse_kind(const std::string& name) {
  for (int k = 0; k < 7; ++k) {
    if (name == kKindNames[k]) return static_cast<ExperimentKind>(k);
  }
  return std::nullopt;
}

std::vector<std::string> validate_spec(const ExperimentSpec& spec) {
  std::vector<std::string> errors;
  auto bad = [&](const std::string& msg) { errors.push_back(msg); };
  const ExperimentKind kind = spec.kind;
  const Field field = spec.model.field;

  if (!(std::isfinite(spec.model.delta) && spec.model.delta > 0.0)) {
    bad("model.delta: must be a finite number > 0");
  }
  if (!(std::isfinite(spec.model.sigma_w2) && spec.model.sigma_w2 >= 0.0)) {
    bad("model.sigma_w2: must be a finite number >= 0");
  }

  const bool uses_init = kind == ExperimentKind::SeTrajectory ||
                         kind == ExperimentKind::SePhaseScan ||
                         kind == ExperimentKind::AmpVsSe;
  if (uses_init) {
    if (!(std::isfinite(spec.alpha0) && std::abs(spec.alpha0) <= 1.0)) {
      bad("init.alpha0: must be a finite number in [-1, 1]");
    }
    if (!(std::isfinite(spec.sigma0_sq) && spec.sigma0_sq >= 0.0)) {
      bad("init.sigma0_sq: must be a finite number >= 0");
    }
    if (spec.alpha0 * spec.alpha0 + spec.sigma0_sq <= 0.0) {
      bad("init: alpha0^2 + sigma0_sq must be > 0");
    }
    if (kind == ExperimentKind::SePhaseScan && !(spec.alpha0 > 0.0)) {
      bad("init.alpha0: must be > 0 for se-phase-scan");
    }
  }

  const bool se_kind = kind == ExperimentKind::SeTrajectory ||
                       kind == ExperimentKind::SeBasin ||
                       kind == ExperimentKind::SePhaseScan;
  if (se_kind) {
    if (spec.iterations < 1 || spec.iterations > 10000000) {
      bad("iterations: must be in [1, 10000000]");
    }
    if (!(spec.tolerance > 0.0 && spec.tolerance < 1.0)) {
      bad("tolerance: must be in (0, 1)");
    }
  }
  if (kind == ExperimentKind::AmpVsSe ||
      kind == ExperimentKind::SpectralDemo) {
    if (spec.iterations < 0 || spec.iterations > 100000) {
      bad("iterations: must be in [0, 100000]");
    }
    if (!(std::isfinite(spec.epsilon) && spec.epsilon >= 0.0)) {
      bad("epsilon: must be a finite number >= 0");
    }
    if (spec.sizes.empty()) bad("sizes: must be a nonempty array");
    for (std::size_t i = 0; i < spec.sizes.size(); ++i) {
      if (spec.sizes[i] < 16 || spec.sizes[i] > 100000) {
        bad("sizes[" + std::to_string(i) + "]: must be in [16, 100000]");
      }
    }
    if (spec.seeds.empty()) bad("seeds: must be a nonempty array");
    if (spec.seeds.size() > 10000) bad("seeds: at most 10000 entries");
  }

  switch (kind) {
    case ExperimentKind::SeTrajectory:
      break;
    case ExperimentKind::SeBasin:
      if (spec.grid_n < 2 || spec.grid_n > 512) {
        bad("grid_n: must be in [2, 512]");
      }
      break;
    case ExperimentKind::SePhaseScan:
      if (!(std::isfinite(spec.delta_lo) && std::isfinite(spec.delta_hi) &&
            0.0 < spec.delta_lo && spec.delta_lo < spec.delta_hi)) {
        bad("delta_range: must satisfy 0 < lo < hi");
      }
      if (spec.scan_steps < 1 || spec.scan_steps > 200) {
        bad("scan_steps: must be in [1, 200]");
      }
      break;
    case ExperimentKind::AmpVsSe:
      if (spec.deltas.empty()) bad("deltas: must be a nonempty array");
      for (std::size_t i = 0; i < spec.deltas.size(); ++i) {
        if (!(std::isfinite(spec.deltas[i]) && spec.deltas[i] > 0.0)) {
          bad("deltas[" + std::to_string(i) + "]: must be > 0");
        }
      }
      if (field == Field::Real && !(spec.epsilon > 0.0)) {
        bad("epsilon: must be > 0 for the real field (divergence smoothing)");
      }
      break;
    case ExperimentKind::NoiseSensitivity: {
      if (spec.model.sigma_w2 != 0.0) {
        bad("model.sigma_w2: must be 0 (the sigma_w2 sweep is built in)");
      }
      if (spec.deltas.empty()) bad("deltas: must be a nonempty array");
      const double delta_amp = thresholds(field).delta_amp;
      for (std::size_t i = 0; i < spec.deltas.size(); ++i) {
        if (!(std::isfinite(spec.deltas[i]) &&
              spec.deltas[i] > delta_amp + 1e-6)) {
          bad("deltas[" + std::to_string(i) +
              "]: must exceed the AMP threshold " + fmt6(delta_amp));
        }
      }
      break;
    }
    case ExperimentKind::SpectralDemo:
      if (field != Field::Complex) {
        bad("model.field: spectral-demo requires the complex field");
      }
      if (!(spec.model.delta > 2.0)) {
        bad("model.delta: must be > 2 for spectral-demo");
      }
      if (spec.model.sigma_w2 != 0.0) {
        bad("model.sigma_w2: spectral-demo requires a noiseless model");
      }
      break;
    case ExperimentKind::Nullclines: {
      if (spec.alpha_steps < 1 || spec.alpha_steps > 4096) {
        bad("alpha_steps: must be in [1, 4096]");
      }
      const double delta_global = thresholds(field).delta_global;
      if (!(spec.model.delta > delta_global)) {
        bad("model.delta: must exceed the local threshold " +
            fmt6(delta_global) + " so the sigma2 nullcline exists");
      }
      break;
    }
  }

  if (!spec.assertions.empty()) {
    const KindSchema schema = schema_for(kind);
    for (const auto& [key, value] : spec.assertions) {
      if (!schema.assert_keys.count(key)) {
        errors.push_back("assert: unknown key '" + key + "' for kind '" +
                         kind_name(kind) + "'");
      } else if (!std::isfinite(value)) {
        errors.push_back("assert." + key + ": must be finite");
      }
    }
  }
  return errors;
}

ConfigParse parse_config_text(const std::string& text) {
  ConfigParse out;
  std::vector<std::string>& errors = out.errors;

  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    errors.push_back("config: empty document");
    return out;
  }

  DupKeySax sax(&errors);
  const bool syntax_ok = json::sax_parse(text, &sax);
  if (!syntax_ok) return out;  // parse_error already recorded

  const json root = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded() || !root.is_object()) {
    errors.push_back("config: top level must be a JSON object");
    return out;
  }

  std::string kind_str;
  if (!take_string(root, "kind", "", &errors, &kind_str)) {
    if (!root.contains("kind")) errors.push_back("kind: required");
    return out;
  }
  const auto kind = parse_kind(kind_str);
  if (!kind) {
    errors.push_back("kind: unknown experiment kind '" + kind_str + "'");
    return out;
  }
  ExperimentSpec& spec = out.spec;
  spec.kind = *kind;

  const KindSchema schema = schema_for(spec.kind);
  report_unknown_keys(root, schema.allowed, "", &errors);
  bool missing_required = false;
  for (const std::string& key : schema.required) {
    if (!root.contains(key)) {
      errors.push_back(key + ": required for kind '" + kind_str + "'");
      missing_required = true;
    }
  }

  // model block
  if (root.contains("model")) {
    const json& model = root.at("model");
    if (!model.is_object()) {
      errors.push_back("model: must be an object");
    } else {
      report_unknown_keys(model, {"field", "delta", "sigma_w2"}, "model.",
                          &errors);
      std::string field_str;
      if (take_string(model, "field", "model.", &errors, &field_str)) {
        if (field_str == "complex") {
          spec.model.field = Field::Complex;
        } else if (field_str == "real") {
          spec.model.field = Field::Real;
        } else {
          errors.push_back("model.field: must be 'complex' or 'real'");
        }
      } else if (!model.contains("field")) {
        errors.push_back("model.field: required");
        missing_required = true;
      }
      const bool have_delta =
          take_double(model, "delta", "model.", &errors, &spec.model.delta);
      if (!have_delta && schema.delta_required && !model.contains("delta")) {
        errors.push_back("model.delta: required for kind '" + kind_str + "'");
        missing_required = true;
      }
      take_double(model, "sigma_w2", "model.", &errors, &spec.model.sigma_w2);
    }
  }

  // init block
  if (root.contains("init")) {
    const json& init = root.at("init");
    if (!init.is_object()) {
      errors.push_back("init: must be an object");
    } else {
      report_unknown_keys(init, {"alpha0", "sigma0_sq"}, "init.", &errors);
      if (!take_double(init, "alpha0", "init.", &errors, &spec.alpha0) &&
          !init.contains("alpha0")) {
        errors.push_back("init.alpha0: required");
        missing_required = true;
      }
      if (!take_double(init, "sigma0_sq", "init.", &errors, &spec.sigma0_sq) &&
          !init.contains("sigma0_sq")) {
        errors.push_back("init.sigma0_sq: required");
        missing_required = true;
      }
    }
  }

  // delta_range
  if (root.contains("delta_range")) {
    const json& range = root.at("delta_range");
    if (!range.is_array() || range.size() != 2 || !range[0].is_number() ||
        !range[1].is_number()) {
      errors.push_back("delta_range: must be an array of two numbers");
    } else {
      spec.delta_lo = range[0].get<double>();
      spec.delta_hi = range[1].get<double>();
    }
  }

  // scalar controls
  take_int(root, "iterations", "", &errors, &spec.iterations);
  take_double(root, "tolerance", "", &errors, &spec.tolerance);
  take_double(root, "epsilon", "", &errors, &spec.epsilon);
  take_int(root, "grid_n", "", &errors, &spec.grid_n);
  take_int(root, "scan_steps", "", &errors, &spec.scan_steps);
  take_int(root, "alpha_steps", "", &errors, &spec.alpha_steps);

  // arrays
  if (root.contains("deltas")) {
    const json& arr = root.at("deltas");
    if (!arr.is_array() || arr.empty()) {
      errors.push_back("deltas: must be a nonempty array of numbers");
    } else {
      for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) {
          errors.push_back("deltas[" + std::to_string(i) +
                           "]: must be a number");
        } else {
          spec.deltas.push_back(arr[i].get<double>());
        }
      }
    }
  }
  if (root.contains("sizes")) {
    const json& arr = root.at("sizes");
    if (!arr.is_array() || arr.empty()) {
      errors.push_back("sizes: must be a nonempty array of integers");
    } else {
      for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number_integer() && !arr[i].is_number_unsigned()) {
          errors.push_back("sizes[" + std::to_string(i) +
                           "]: must be an integer");
        } else {
          spec.sizes.push_back(static_cast<int>(arr[i].get<std::int64_t>()));
        }
      }
    }
  }
  if (root.contains("seeds")) {
    const json& arr = root.at("seeds");
    if (!arr.is_array() || arr.empty()) {
      errors.push_back("seeds: must be a nonempty array of integers");
    } else {
      for (std::size_t i = 0; i < arr.size(); ++i) {
        if (arr[i].is_number_unsigned()) {
          const std::uint64_t u = arr[i].get<std::uint64_t>();
          if (u > static_cast<std::uint64_t>(
                      std::numeric_limits<std::int64_t>::max())) {
            errors.push_back("seeds[" + std::to_string(i) +
                             "]: must be <= 9223372036854775807");
          } else {
            spec.seeds.push_back(u);
          }
        } else if (arr[i].is_number_integer() &&
                   arr[i].get<std::int64_t>() >= 0) {
          spec.seeds.push_back(
              static_cast<std::uint64_t>(arr[i].get<std::int64_t>()));
        } else {
          errors.push_back("seeds[" + std::to_string(i) +
                           "]: must be a nonnegative integer");
        }
      }
    }
  }

  // assert block
  if (root.contains("assert")) {
    const json& blk = root.at("assert");
    if (!blk.is_object()) {
      errors.push_back("assert: must be an object");
    } else {
      for (const auto& item : blk.items()) {
        if (!schema.assert_keys.count(item.key())) {
          errors.push_back("assert: unknown key '" + item.key() +
                           "' for kind '" + kind_str + "'");
        } else if (item.value().is_boolean()) {
          spec.assertions[item.key()] = item.value().get<bool>() ? 1.0 : 0.0;
        } else if (item.value().is_number()) {
          spec.assertions[item.key()] = item.value().get<double>();
        } else {
          errors.push_back("assert." + item.key() +
                           ": must be a number or boolean");
        }
      }
    }
  }

  // output controls
  if (take_string(root, "out", "", &errors, &spec.out_path)) {
    if (spec.out_path.empty()) errors.push_back("out: must be nonempty");
  }
  std::string format_str;
  if (take_string(root, "format", "", &errors, &format_str)) {
    if (format_str == "csv") {
      spec.format = OutputFormat::Csv;
    } else if (format_str == "json") {
      spec.format = OutputFormat::Json;
    } else {
      errors.push_back("format: must be 'csv' or 'json'");
    }
  }

  // Kind-specific defaults for everything left unset.
  if (!root.contains("iterations")) {
    switch (spec.kind) {
      case ExperimentKind::SeTrajectory: spec.iterations = 10000; break;
      case ExperimentKind::SeBasin: spec.iterations = 5000; break;
      case ExperimentKind::SePhaseScan: spec.iterations = 20000; break;
      default: break;  // required for the AMP kinds, reported above
    }
  }
  if (!root.contains("epsilon")) {
    spec.epsilon = (spec.kind == ExperimentKind::AmpVsSe &&
                    spec.model.field == Field::Real)
                       ? 1e-6
                       : 0.0;
  }
  if (spec.kind == ExperimentKind::AmpVsSe && spec.deltas.empty() &&
      !root.contains("deltas")) {
    spec.deltas = {spec.model.delta};
  }
  if (!schema.delta_required && root.contains("model") &&
      root.at("model").is_object() && !root.at("model").contains("delta")) {
    if (spec.kind == ExperimentKind::SePhaseScan && spec.delta_hi > 0.0) {
      spec.model.delta = spec.delta_hi;
    } else if (spec.kind == ExperimentKind::NoiseSensitivity &&
               !spec.deltas.empty()) {
      spec.model.delta = spec.deltas.front();
    }
  }

  // Numeric bounds, unless missing keys already make them moot.
  if (!missing_required) {
    for (auto& msg : validate_spec(spec)) errors.push_back(std::move(msg));
  }
  return out;
}

std::string serialize_config(const ExperimentSpec& spec) {
  const KindSchema schema = schema_for(spec.kind);
  ordered_json doc;
  doc["kind"] = kind_name(spec.kind);
  ordered_json model;
  model["field"] = spec.model.field == Field::Complex ? "complex" : "real";
  model["delta"] = spec.model.delta;
  model["sigma_w2"] = spec.model.sigma_w2;
  doc["model"] = std::move(model);
  if (schema.allowed.count("init")) {
    ordered_json init;
    init["alpha0"] = spec.alpha0;
    init["sigma0_sq"] = spec.sigma0_sq;
    doc["init"] = std::move(init);
  }
  if (schema.allowed.count("delta_range")) {
    doc["delta_range"] = {spec.delta_lo, spec.delta_hi};
  }
  if (schema.allowed.count("scan_steps")) doc["scan_steps"] = spec.scan_steps;
  if (schema.allowed.count("deltas")) doc["deltas"] = spec.deltas;
  if (schema.allowed.count("sizes")) doc["sizes"] = spec.sizes;
  if (schema.allowed.count("seeds")) doc["seeds"] = spec.seeds;
  if (schema.allowed.count("iterations")) doc["iterations"] = spec.iterations;
  if (schema.allowed.count("tolerance")) doc["tolerance"] = spec.tolerance;
  if (schema.allowed.count("epsilon")) doc["epsilon"] = spec.epsilon;
  if (schema.allowed.count("grid_n")) doc["grid_n"] = spec.grid_n;
  if (schema.allowed.count("alpha_steps")) {
    doc["alpha_steps"] = spec.alpha_steps;
  }
  if (!spec.assertions.empty()) {
    ordered_json blk;
    for (const auto& [key, value] : spec.assertions) blk[key] = value;
    doc["assert"] = std::move(blk);
  }
  if (!spec.out_path.empty()) doc["out"] = spec.out_path;
  doc["format"] = spec.format == OutputFormat::Csv ? "csv" : "json";
  return doc.dump(2) + "\n";
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int threads) {
  const std::vector<std::string> errors = validate_spec(spec);
  if (!errors.empty()) {
    std::string msg = "invalid experiment spec:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
  if (threads < 1) throw std::invalid_argument("run_experiment: threads < 1");

  switch (spec.kind) {
    case ExperimentKind::SeTrajectory: return run_se_trajectory(spec);
    case ExperimentKind::SeBasin: return run_se_basin(spec);
    case ExperimentKind::SePhaseScan: return run_se_phase_scan(spec);
    case ExperimentKind::AmpVsSe: return run_amp_vs_se(spec, threads);
    case ExperimentKind::NoiseSensitivity:
      return run_noise_sensitivity(spec, threads);
    case ExperimentKind::SpectralDemo: return run_spectral_demo(spec, threads);
    case ExperimentKind::Nullclines: return run_nullclines(spec);
  }
  throw std::logic_error("run_experiment: unreachable kind");
}

void write_table_csv(const ResultTable& table, std::ostream& os) {
  std::string line;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c > 0) line += ',';
    line += table.columns[c];
  }
  os << line << '\n';
  for (const auto& row : table.rows) {
    line.clear();
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) line += ',';
      line += cell_text(row[c]);
    }
    os << line << '\n';
  }
}

void write_table_json(const ResultTable& table, std::ostream& os) {
  os << "[";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    os << (r == 0 ? "\n" : ",\n") << "  {";
    const auto& row = table.rows[r];
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) os << ", ";
      os << '"' << json_escape(table.columns[c]) << "\": ";
      if (std::holds_alternative<std::string>(row[c])) {
        os << '"' << json_escape(std::get<std::string>(row[c])) << '"';
      } else {
        os << cell_text(row[c]);
      }
    }
    os << "}";
  }
  os << "\n]\n";
}

void write_result(const ExperimentResult& result, OutputFormat format,
                  std::ostream& os) {
  if (format == OutputFormat::Csv) {
    write_table_csv(result.table, os);
  } else {
    write_table_json(result.table, os);
  }
}

}  // namespace phaseamp
