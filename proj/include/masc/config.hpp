#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "masc/panel.hpp"
#include "masc/predictor.hpp"

namespace masc {

enum class PValueDenominator { Donors, DonorsPlusOne };

struct InferenceSettings {
  int n_iter = 10000;
  std::uint64_t seed = 20240817;
  PValueDenominator pvalue_denominator = PValueDenominator::Donors;
};

// One reproducible run: data location and schema, design designation,
// predictors, weighting choices, and inference settings.
struct EstimationConfig {
  std::string data_path;
  CsvSchema schema;

  std::vector<std::string> treated;
  std::vector<std::string> donors;
  int intervention_period = 0;

  std::vector<PredictorSpec> specs;  // empty => default_specs
  VMode v_mode = VMode::EqualPrePost;
  std::map<std::string, double> v_user;
  MediatorMode mediator_mode = MediatorMode::single_lag(1);
  bool standardize = true;

  InferenceSettings inference;

  std::string output_dir = "out";
  int jobs = 0;      // 0 = hardware concurrency
  bool strict = false;
};

// Raw parse of the config grammar: [section], key = value, '#' comments.
// Repeated keys keep every occurrence in order.
struct RawConfig {
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections;

  const std::vector<std::pair<std::string, std::string>>* section(const std::string& name) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;
};

RawConfig parse_raw_config(std::istream& in);

// Builds an estimation config from the raw sections (see README for the
// grammar). Unknown keys are errors.
EstimationConfig parse_config(std::istream& in);
EstimationConfig parse_config_file(const std::string& path);
EstimationConfig config_from(const RawConfig& raw);

// Parses one predictor line: `outcome|mediator|covariate:<name> mean <a>[..<b>]`.
PredictorSpec parse_predictor_line(const std::string& line);

}  // namespace masc
