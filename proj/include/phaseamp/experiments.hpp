// Reproducible experiment harness: strict JSON configuration, seeded
// parallel trial fan-out, and deterministic CSV/JSON emission for the
// experiment families built on the state-evolution and AMP modules
// (trajectories, basins, phase scans, finite-n tracking, noise-sensitivity
// slopes, the spectral pipeline, and nullcline tables).

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "phaseamp/model.hpp"

namespace phaseamp {

enum class ExperimentKind {
  SeTrajectory,      // one SE orbit with region labels and a verdict
  SeBasin,           // success grid over (α₀, σ₀²)
  SePhaseScan,       // bisect δ on the SE success verdict
  AmpVsSe,           // finite-n AMP runs against the SE prediction
  NoiseSensitivity,  // AMSE/σ_w² slopes vs the closed form
  SpectralDemo,      // spectral init: decoupled vs blind handoff to AMP
  Nullclines         // (α, F1⁻¹, F2, L) table at fixed δ
};

// Canonical lowercase-hyphen name (the CLI subcommand and config "kind").
const char* kind_name(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(const std::string& name);

enum class OutputFormat { Csv, Json };

// A fully resolved experiment description.  parse_config_text fills every
// field applicable to the kind (defaults included), so serialize_config
// always emits a complete, round-trippable document.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::SeTrajectory;
  ModelParams model;

  double alpha0 = 0.5;     // informative-init overlap
  double sigma0_sq = 0.5;  // informative-init residual variance
  int iterations = 0;      // max SE iterations / exact AMP iterations
  double tolerance = 1e-6;
  double epsilon = 0.0;  // AMP divergence smoothing
  int grid_n = 50;
  double delta_lo = 0.0;  // phase-scan bracket
  double delta_hi = 0.0;
  int scan_steps = 25;
  int alpha_steps = 19;  // nullcline grid: α = k/(alpha_steps+1)
  std::vector<double> deltas;
  std::vector<int> sizes;
  std::vector<std::uint64_t> seeds;

  // Optional pass/fail bounds evaluated against the finished table; empty
  // means no assertion block.  Keys are kind-specific (see README).
  std::map<std::string, double> assertions;

  std::string out_path;
  OutputFormat format = OutputFormat::Csv;
};

// One table cell: integers stay integers in the artifact, floats are
// serialized with 17 significant digits, strings are short enum-like tags.
using Cell = std::variant<std::int64_t, double, std::string>;

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;  // every row matches columns
};

struct ExperimentResult {
  ResultTable table;
  std::string summary;       // one line, no trailing newline
  bool has_assert = false;   // an assertion block was evaluated
  bool assert_passed = true; // vacuously true without a block
};

struct ConfigParse {
  ExperimentSpec spec;
  std::vector<std::string> errors;  // empty iff the config is valid

  bool ok() const { return errors.empty(); }
};

// Strict parse of a JSON experiment config: duplicate keys, unknown keys,
// type mismatches, and every violated numeric bound are all enumerated
// (parsing does not stop at the first problem).  On success the returned
// spec has every applicable field resolved.
ConfigParse parse_config_text(const std::string& text);

// Canonical JSON document for a resolved spec: fixed key order, floats at
// 17 significant digits.  parse_config_text(serialize_config(s)) recovers
// s exactly.
std::string serialize_config(const ExperimentSpec& spec);

// Re-checks the numeric bounds parse_config_text enforces (useful for
// ExperimentSpec values built in code); returns field-level messages,
// empty when valid.
std::vector<std::string> validate_spec(const ExperimentSpec& spec);

// Runs the experiment: expands the ExperimentSpec into (parameter × seed)
// trials,
// fans them out over `threads` workers (each trial's randomness is fixed
// by its own seed, so the row set is identical for any thread count),
// sorts rows by the leading key columns, and returns the table plus a
// one-line summary.  Assertion blocks are evaluated into
// has_assert/assert_passed and reflected at the end of the summary.
ExperimentResult run_experiment(const ExperimentSpec& spec, int threads = 1);

// Deterministic writers (no locale dependence, '.' decimal point).  CSV:
// one header row, comma-separated; reruns of the same spec are
// byte-identical.  JSON: an array of flat row objects.
void write_table_csv(const ResultTable& table, std::ostream& os);
void write_table_json(const ResultTable& table, std::ostream& os);
void write_result(const ExperimentResult& result, OutputFormat format,
                  std::ostream& os);

}  // namespace phaseamp
