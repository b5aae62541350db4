// Command-line front end: validate / estimate / placebo / resample / loo /
// simulate / mc, driven by a config file with flag overrides.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "masc/artifacts.hpp"
#include "masc/config.hpp"
#include "masc/dgp.hpp"
#include "masc/estimator.hpp"
#include "masc/inference.hpp"
#include "masc/panel.hpp"
#include "masc/robustness.hpp"
#include "masc/text.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNonConvergence = 3;

struct Overrides {
  std::string config_path;
  std::string data;
  std::string treated;
  std::string donors;
  int intervention = 0;
  std::string v_mode;
  std::string mediator_mode;
  int mediator_lag = -1;
  int standardize = -1;
  int n_iter = 0;
  long long seed = -1;
  std::string pvalue_denominator;
  std::string output;
  int jobs = -1;
  bool strict = false;
  std::string exclude;
};

void add_common_options(CLI::App* cmd, Overrides& overrides, bool config_required = true) {
  auto* config = cmd->add_option("-c,--config", overrides.config_path, "config file path");
  if (config_required) config->required();
  cmd->add_option("--data", overrides.data, "override [data] path");
  cmd->add_option("--treated", overrides.treated, "override treated units (comma separated)");
  cmd->add_option("--donors", overrides.donors, "override donor units (comma separated)");
  cmd->add_option("--intervention", overrides.intervention, "override intervention period");
  cmd->add_option("--v-mode", overrides.v_mode, "uniform | equal-pre-post | user");
  cmd->add_option("--mediator-mode", overrides.mediator_mode, "single-lag | full-path");
  cmd->add_option("--mediator-lag", overrides.mediator_lag, "lag for single-lag mode");
  cmd->add_option("--standardize", overrides.standardize, "1 to standardize predictors, 0 to skip");
  cmd->add_option("--n-iter", overrides.n_iter, "resampling iterations");
  cmd->add_option("--seed", overrides.seed, "inference seed");
  cmd->add_option("--pvalue-denominator", overrides.pvalue_denominator, "donors | donors+1");
  cmd->add_option("-o,--output", overrides.output, "output directory");
  cmd->add_option("-j,--jobs", overrides.jobs, "worker cap (0 = hardware)");
  cmd->add_flag("--strict", overrides.strict, "treat solver non-convergence as fatal");
}

std::vector<std::string> comma_list(const std::string& value) {
  std::vector<std::string> out;
  for (const auto& token : masc::split(value, ',')) {
    const auto trimmed = masc::trim(token);
    if (!trimmed.empty()) out.emplace_back(trimmed);
  }
  return out;
}

masc::EstimationConfig apply_overrides(masc::EstimationConfig config, const Overrides& overrides) {
  if (!overrides.data.empty()) config.data_path = overrides.data;
  if (!overrides.treated.empty()) config.treated = comma_list(overrides.treated);
  if (!overrides.donors.empty()) config.donors = comma_list(overrides.donors);
  if (overrides.intervention != 0) config.intervention_period = overrides.intervention;
  if (!overrides.v_mode.empty()) {
    if (overrides.v_mode == "uniform") config.v_mode = masc::VMode::Uniform;
    else if (overrides.v_mode == "equal-pre-post") config.v_mode = masc::VMode::EqualPrePost;
    else if (overrides.v_mode == "user") config.v_mode = masc::VMode::User;
    else throw masc::Error(masc::ErrorCode::ConfigError, "bad --v-mode");
  }
  if (!overrides.mediator_mode.empty()) {
    if (overrides.mediator_mode == "single-lag")
      config.mediator_mode.kind = masc::MediatorMode::Kind::SingleLag;
    else if (overrides.mediator_mode == "full-path")
      config.mediator_mode.kind = masc::MediatorMode::Kind::FullPath;
    else throw masc::Error(masc::ErrorCode::ConfigError, "bad --mediator-mode");
  }
  if (overrides.mediator_lag >= 0) config.mediator_mode.lag = overrides.mediator_lag;
  if (overrides.standardize >= 0) config.standardize = overrides.standardize != 0;
  if (overrides.n_iter > 0) config.inference.n_iter = overrides.n_iter;
  if (overrides.seed >= 0) config.inference.seed = static_cast<std::uint64_t>(overrides.seed);
  if (!overrides.pvalue_denominator.empty()) {
    if (overrides.pvalue_denominator == "donors")
      config.inference.pvalue_denominator = masc::PValueDenominator::Donors;
    else if (overrides.pvalue_denominator == "donors+1")
      config.inference.pvalue_denominator = masc::PValueDenominator::DonorsPlusOne;
    else throw masc::Error(masc::ErrorCode::ConfigError, "bad --pvalue-denominator");
  }
  if (!overrides.output.empty()) config.output_dir = overrides.output;
  if (overrides.jobs >= 0) config.jobs = overrides.jobs;
  if (overrides.strict) config.strict = true;
  return config;
}

std::string artifact_path(const std::string& dir, const std::string& base,
                          const std::string& unit, bool multi) {
  const auto dot = base.find_last_of('.');
  std::string name = base;
  if (multi && dot != std::string::npos) {
    name = base.substr(0, dot) + "_" + unit + base.substr(dot);
  }
  return (std::filesystem::path(dir) / name).string();
}

int report_validation(const masc::ValidationReport& report) {
  for (const auto& issue : report.errors) {
    std::cerr << "error: [" << issue.code << "] " << issue.message;
    if (!issue.location.empty()) std::cerr << " at " << issue.location;
    std::cerr << "\n";
  }
  for (const auto& issue : report.warnings) {
    std::cerr << "warning: [" << issue.code << "] " << issue.message;
    if (!issue.location.empty()) std::cerr << " at " << issue.location;
    std::cerr << "\n";
  }
  return report.ok() ? kExitOk : kExitValidation;
}

struct LoadedRun {
  masc::EstimationConfig config;
  masc::PanelDataset panel;
};

LoadedRun load_and_validate(const Overrides& overrides) {
  masc::EstimationConfig config =
      apply_overrides(masc::parse_config_file(overrides.config_path), overrides);
  if (config.data_path.empty()) {
    throw masc::Error(masc::ErrorCode::ConfigError, "no data path configured");
  }
  masc::PanelDataset panel = masc::load_panel_file(config.data_path, config.schema);
  const masc::ValidationReport report = masc::validate(panel, config);
  if (!report.ok()) {
    report_validation(report);
    throw masc::Error(masc::ErrorCode::ConfigError, "validation failed");
  }
  for (const auto& issue : report.warnings) {
    std::cerr << "warning: [" << issue.code << "] " << issue.message << "\n";
  }
  panel = masc::designate(panel, config.treated, config.donors, config.intervention_period);
  return {std::move(config), std::move(panel)};
}

int convergence_exit(const masc::MascRun& run, bool strict) {
  if (run.all_converged) return kExitOk;
  std::cerr << "warning: at least one solve reported non-convergence for '" << run.treated
            << "'\n";
  return strict ? kExitNonConvergence : kExitOk;
}

int run_estimate(const Overrides& overrides) {
  LoadedRun loaded = load_and_validate(overrides);
  const auto& config = loaded.config;
  masc::EstimationSettings settings = masc::settings_from(config);
  settings.jobs = config.jobs;

  int exit_code = kExitOk;
  const bool multi = config.treated.size() > 1;
  for (const auto& unit : config.treated) {
    const masc::MascRun run =
        masc::run_masc(loaded.panel, unit, config.donors, config.specs, settings, true);
    masc::write_file(artifact_path(config.output_dir, "effects.csv", unit, multi),
                     masc::effects_csv(run.effects));
    masc::write_file(artifact_path(config.output_dir, "weights.json", unit, multi),
                     masc::weights_json(run));
    masc::write_file(artifact_path(config.output_dir, "series.csv", unit, multi),
                     masc::series_csv(loaded.panel, run));
    masc::write_file(artifact_path(config.output_dir, "fit.json", unit, multi),
                     masc::fit_json(loaded.panel, run));
    std::cout << "estimated '" << unit << "': " << run.post_periods.size()
              << " post periods, pre-fit RMSPE (Y00) " << masc::format_sig6(run.y00.pre_fit_rmspe)
              << "\n";
    for (const auto& warning : run.warnings) {
      std::cerr << "warning: [" << warning.code << "] " << warning.message << "\n";
    }
    exit_code = std::max(exit_code, convergence_exit(run, config.strict));
  }
  return exit_code;
}

int run_placebo(const Overrides& overrides) {
  LoadedRun loaded = load_and_validate(overrides);
  const auto& config = loaded.config;
  const std::set<masc::EffectKind> targets = {masc::EffectKind::Total, masc::EffectKind::Direct,
                                              masc::EffectKind::Indirect};
  const masc::PlaceboResult placebo =
      masc::placebo_test(loaded.panel, config, targets, config.jobs);

  masc::EstimationSettings settings = masc::settings_from(config);
  const masc::MascRun run = masc::run_masc(loaded.panel, config.treated.front(), config.donors,
                                           config.specs, settings, false);
  masc::write_file(artifact_path(config.output_dir, "effects.csv", run.treated, false),
                   masc::effects_csv_with_pvalues(run.effects, placebo.p_per_period));
  masc::write_file(artifact_path(config.output_dir, "placebo_stats.csv", run.treated, false),
                   masc::placebo_stats_csv(placebo, run.treated));

  for (const auto& [effect, p] : placebo.p_overall) {
    std::cout << "p_overall(" << masc::effect_name(effect) << ") = " << masc::format_sig6(p);
    if (p == 0.0) std::cout << "  (< 1/" << placebo.denominator << ")";
    std::cout << "\n";
  }
  for (const auto& warning : placebo.warnings) {
    std::cerr << "warning: [" << warning.code << "] " << warning.message << "\n";
  }
  return kExitOk;
}

int run_resample(const Overrides& overrides) {
  LoadedRun loaded = load_and_validate(overrides);
  const auto& config = loaded.config;
  masc::EstimationSettings settings = masc::settings_from(config);

  std::vector<masc::MascRun> baseline;
  baseline.reserve(config.treated.size());
  for (const auto& unit : config.treated) {
    baseline.push_back(
        masc::run_masc(loaded.panel, unit, config.donors, config.specs, settings, true));
  }
  const masc::ResamplingResult result =
      masc::resampling_inference(loaded.panel, config, baseline, config.inference.n_iter,
                                 config.inference.seed, config.jobs);

  masc::write_file(artifact_path(config.output_dir, "effects.csv", "", false),
                   masc::effects_csv_with_pvalues(result.observed, result.p_values));
  std::cout << "resampling: " << result.n_iter << " iterations, seed " << result.seed << "\n";
  for (const auto& [effect, by_period] : result.p_values) {
    const int last = result.observed.post_periods.back();
    std::cout << "p(" << masc::effect_name(effect) << ", " << last
              << ") = " << masc::format_sig6(by_period.at(last)) << "\n";
  }
  return kExitOk;
}

int run_loo(const Overrides& overrides) {
  LoadedRun loaded = load_and_validate(overrides);
  const auto& config = loaded.config;
  const std::set<masc::EffectKind> targets = {masc::EffectKind::Total, masc::EffectKind::Direct,
                                              masc::EffectKind::Indirect};

  if (!overrides.exclude.empty()) {
    // Manual single-exclusion run.
    masc::EstimationConfig variant = config;
    std::erase(variant.donors, overrides.exclude);
    if (variant.donors.size() == config.donors.size()) {
      throw masc::Error(masc::ErrorCode::UnknownUnit,
                        "--exclude unit '" + overrides.exclude + "' is not in the donor pool");
    }
    masc::EstimationSettings settings = masc::settings_from(config);
    const masc::MascRun run = masc::run_masc(loaded.panel, config.treated.front(), variant.donors,
                                             config.specs, settings, false);
    masc::write_file(
        artifact_path(config.output_dir, "effects_excl_" + overrides.exclude + ".csv", "", false),
        masc::effects_csv(run.effects));
    std::cout << "excluded '" << overrides.exclude << "'\n";
    return convergence_exit(run, config.strict);
  }

  const masc::LooResult loo = masc::leave_one_out(loaded.panel, config, targets, config.jobs);
  masc::write_file(artifact_path(config.output_dir, "effects.csv", "", false),
                   masc::effects_csv(loo.baseline));
  for (const auto& [donor, variant] : loo.variants) {
    if (variant.failed) continue;
    masc::write_file(artifact_path(config.output_dir, "effects_excl_" + donor + ".csv", "", false),
                     masc::effects_csv(variant.effects));
  }
  masc::write_file(artifact_path(config.output_dir, "loo_summary.csv", "", false),
                   masc::loo_summary_csv(loo));
  for (const auto& [effect, deviation] : loo.max_abs_deviation) {
    std::cout << "max |deviation| (" << masc::effect_name(effect)
              << ") = " << masc::format_sig6(deviation) << "\n";
  }
  for (const auto& warning : loo.warnings) {
    std::cerr << "warning: [" << warning.code << "] " << warning.message << "\n";
  }
  return kExitOk;
}

int run_simulate(const Overrides& overrides) {
  std::ifstream in(overrides.config_path);
  if (!in) throw masc::Error(masc::ErrorCode::IoError, "cannot open config");
  const masc::RawConfig raw = masc::parse_raw_config(in);
  masc::EstimationConfig config = apply_overrides(masc::config_from(raw), overrides);
  masc::DgpDesign design = masc::dgp_design_from(raw);
  if (overrides.seed >= 0) design.seed = static_cast<std::uint64_t>(overrides.seed);

  auto [panel, truth] = masc::simulate(design);
  masc::write_file(artifact_path(config.output_dir, "panel.csv", "", false),
                   masc::serialize_panel(panel));
  masc::write_file(artifact_path(config.output_dir, "ground_truth.csv", "", false),
                   masc::ground_truth_csv(truth));
  std::cout << "simulated " << panel.n_units() << " units x " << panel.n_periods()
            << " periods (intervention at " << panel.intervention_period << ")\n";
  return kExitOk;
}

int run_mc(const Overrides& overrides) {
  std::ifstream in(overrides.config_path);
  if (!in) throw masc::Error(masc::ErrorCode::IoError, "cannot open config");
  const masc::RawConfig raw = masc::parse_raw_config(in);
  masc::EstimationConfig config = apply_overrides(masc::config_from(raw), overrides);
  masc::DgpDesign design = masc::dgp_design_from(raw);

  std::vector<int> grid = {20, 200};
  int reps = 100;
  if (const auto value = raw.get("mc", "pre_period_grid")) {
    grid.clear();
    for (const auto& token : comma_list(*value)) {
      const auto parsed = masc::parse_int(token);
      if (!parsed) throw masc::Error(masc::ErrorCode::ConfigError, "bad pre_period_grid");
      grid.push_back(static_cast<int>(*parsed));
    }
  }
  if (const auto value = raw.get("mc", "reps")) {
    const auto parsed = masc::parse_int(*value);
    if (!parsed) throw masc::Error(masc::ErrorCode::ConfigError, "bad reps");
    reps = static_cast<int>(*parsed);
  }
  const std::uint64_t seed =
      overrides.seed >= 0 ? static_cast<std::uint64_t>(overrides.seed) : config.inference.seed;

  const masc::BiasTable table = masc::monte_carlo(design, grid, reps, seed, config.jobs);
  masc::write_file(artifact_path(config.output_dir, "mc_bias.csv", "", false),
                   masc::bias_table_csv(table));
  for (const auto& cell : table.cells) {
    std::cout << "n_pre=" << cell.n_pre << " " << cell.effect
              << ": mean bias = " << masc::format_sig6(cell.mean_bias)
              << " (MC se = " << masc::format_sig6(cell.mc_se) << ")\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mediation analysis synthetic control"};
  app.require_subcommand(1);

  Overrides overrides;
  auto* validate_cmd = app.add_subcommand("validate", "check data and config");
  auto* estimate_cmd = app.add_subcommand("estimate", "total/direct/indirect effects");
  auto* placebo_cmd = app.add_subcommand("placebo", "in-space placebo p-values");
  auto* resample_cmd = app.add_subcommand("resample", "resampling inference");
  auto* loo_cmd = app.add_subcommand("loo", "leave-one-out donor sensitivity");
  auto* simulate_cmd = app.add_subcommand("simulate", "factor-model panel simulation");
  auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo bias table");
  for (auto* cmd :
       {validate_cmd, estimate_cmd, placebo_cmd, resample_cmd, loo_cmd, simulate_cmd, mc_cmd}) {
    add_common_options(cmd, overrides);
  }
  loo_cmd->add_option("--exclude", overrides.exclude, "exclude a single named donor");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate_cmd) {
      masc::EstimationConfig config =
          apply_overrides(masc::parse_config_file(overrides.config_path), overrides);
      const masc::PanelDataset panel = masc::load_panel_file(config.data_path, config.schema);
      const masc::ValidationReport report = masc::validate(panel, config);
      const int code = report_validation(report);
      if (code == kExitOk) std::cout << "ok\n";
      return code;
    }
    if (*estimate_cmd) return run_estimate(overrides);
    if (*placebo_cmd) return run_placebo(overrides);
    if (*resample_cmd) return run_resample(overrides);
    if (*loo_cmd) return run_loo(overrides);
    if (*simulate_cmd) return run_simulate(overrides);
    if (*mc_cmd) return run_mc(overrides);
  } catch (const masc::Error& error) {
    std::cerr << "error: " << error.what() << "\n";
    return error.code() == masc::ErrorCode::NonConvergence ? kExitNonConvergence : kExitValidation;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
