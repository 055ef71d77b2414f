// Command-line front end for the experiment harness.  One subcommand per
// experiment kind; every subcommand reads a JSON config and takes the same
// overrides:
//   --config PATH   JSON experiment configuration (required)
//   --out PATH      output path (overrides the config's "out")
//   --format F      csv | json (overrides the config's "format")
//   --threads N     worker threads (default: $PHASEAMP_THREADS, then 1)
//   --seed U64      master seed; trial seed i becomes derive_seed(seed, i)
// Exit codes: 0 success (assertions, if any, passed), 2 validation failure,
// 1 runtime failure or a failed assertion block.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "phaseamp/experiments.hpp"
#include "phaseamp/rng.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

const char* kind_description(phaseamp::ExperimentKind kind) {
  using phaseamp::ExperimentKind;
  switch (kind) {
    case ExperimentKind::SeTrajectory:
      return "Iterate the state evolution from one (alpha0, sigma0_sq)";
    case ExperimentKind::SeBasin:
      return "Success grid of SE starts over (alpha0, sigma0_sq)";
    case ExperimentKind::SePhaseScan:
      return "Bisect the oversampling ratio on the SE success verdict";
    case ExperimentKind::AmpVsSe:
      return "Finite-n AMP runs against the SE prediction";
    case ExperimentKind::NoiseSensitivity:
      return "High-SNR AMSE/noise slopes vs the closed form";
    case ExperimentKind::SpectralDemo:
      return "Spectral initializer: decoupled vs blind handoff to AMP";
    case ExperimentKind::Nullclines:
      return "Tabulate the nullclines F1^-1, F2 and the boundary L";
  }
  return "";
}

int resolve_threads(bool flag_given, int flag_value, std::string* error) {
  if (flag_given) {
    if (flag_value < 1 || flag_value > 256) {
      *error = "--threads: must be in [1, 256]";
      return 0;
    }
    return flag_value;
  }
  const char* env = std::getenv("PHASEAMP_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1 || v > 256) {
    *error = "PHASEAMP_THREADS: must be a positive integer (at most 256)";
    return 0;
  }
  return static_cast<int>(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phaseamp: state-evolution and AMP experiments for "
               "amplitude-based phase retrieval"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::string format_override;
  int threads_flag = 1;
  std::uint64_t master_seed = 0;

  for (int k = 0; k < 7; ++k) {
    const auto kind = static_cast<phaseamp::ExperimentKind>(k);
    CLI::App* sub =
        app.add_subcommand(phaseamp::kind_name(kind), kind_description(kind));
    sub->add_option("--config", config_path, "JSON experiment config")
        ->required();
    sub->add_option("--out", out_override,
                    "output path (overrides the config)");
    sub->add_option("--format", format_override,
                    "output format (overrides the config)")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", threads_flag, "worker threads");
    sub->add_option("--seed", master_seed,
                    "master seed; replaces configured seeds with "
                    "derive_seed(seed, index)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  CLI::App* sub = app.get_subcommands().front();
  const auto sub_kind = phaseamp::parse_kind(sub->get_name());

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "config error: cannot read '" << config_path << "'\n";
    return kExitValidation;
  }
  std::ostringstream slurp;
  slurp << in.rdbuf();

  phaseamp::ConfigParse parsed = phaseamp::parse_config_text(slurp.str());
  if (!parsed.ok()) {
    for (const auto& e : parsed.errors) std::cerr << "config error: " << e
                                                  << "\n";
    return kExitValidation;
  }
  phaseamp::ExperimentSpec spec = parsed.spec;

  if (sub_kind && spec.kind != *sub_kind) {
    std::cerr << "config error: kind '" << phaseamp::kind_name(spec.kind)
              << "' does not match subcommand '" << sub->get_name() << "'\n";
    return kExitValidation;
  }

  if (sub->count("--out") > 0) spec.out_path = out_override;
  if (sub->count("--format") > 0) {
    spec.format = format_override == "json" ? phaseamp::OutputFormat::Json
                                            : phaseamp::OutputFormat::Csv;
  }
  if (sub->count("--seed") > 0) {
    for (std::size_t i = 0; i < spec.seeds.size(); ++i) {
      spec.seeds[i] = phaseamp::derive_seed(master_seed, i);
    }
  }
  if (spec.out_path.empty()) {
    std::cerr << "config error: no output path (set \"out\" in the config or "
                 "pass --out)\n";
    return kExitValidation;
  }

  std::string threads_error;
  const int threads =
      resolve_threads(sub->count("--threads") > 0, threads_flag,
                      &threads_error);
  if (!threads_error.empty()) {
    std::cerr << "config error: " << threads_error << "\n";
    return kExitValidation;
  }

  try {
    const phaseamp::ExperimentResult result =
        phaseamp::run_experiment(spec, threads);

    std::ofstream out(spec.out_path);
    if (!out) {
      std::cerr << "error: cannot open output '" << spec.out_path << "'\n";
      return kExitRuntime;
    }
    phaseamp::write_result(result, spec.format, out);
    out.flush();
    if (!out) {
      std::cerr << "error: short write to '" << spec.out_path << "'\n";
      return kExitRuntime;
    }

    std::cout << result.summary << "\n";
    return (result.has_assert && !result.assert_passed) ? kExitRuntime
                                                        : kExitOk;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
