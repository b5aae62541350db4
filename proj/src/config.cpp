#include "masc/config.hpp"

#include <fstream>
#include <sstream>

#include "masc/text.hpp"

namespace masc {

namespace {

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::ConfigError, message);
}

std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> out;
  for (const auto& token : split(value, ',')) {
    const auto trimmed = trim(token);
    if (!trimmed.empty()) out.emplace_back(trimmed);
  }
  return out;
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "yes" || value == "1") return true;
  if (value == "false" || value == "no" || value == "0") return false;
  config_error("key '" + key + "' expects a boolean, got '" + value + "'");
}

long long parse_integer(const std::string& value, const std::string& key) {
  const auto parsed = parse_int(value);
  if (!parsed) config_error("key '" + key + "' expects an integer, got '" + value + "'");
  return *parsed;
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>* RawConfig::section(
    const std::string& name) const {
  for (const auto& [section_name, entries] : sections) {
    if (section_name == name) return &entries;
  }
  return nullptr;
}

std::optional<std::string> RawConfig::get(const std::string& section_name,
                                          const std::string& key) const {
  const auto* entries = section(section_name);
  if (!entries) return std::nullopt;
  for (const auto& [entry_key, value] : *entries) {
    if (entry_key == key) return value;
  }
  return std::nullopt;
}

RawConfig parse_raw_config(std::istream& in) {
  RawConfig raw;
  std::string line;
  std::string current;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto content = trim(line);
    if (content.empty()) continue;
    if (content.front() == '[') {
      if (content.back() != ']') {
        config_error("line " + std::to_string(line_no) + ": unterminated section header");
      }
      current = std::string(trim(content.substr(1, content.size() - 2)));
      raw.sections.emplace_back(current, std::vector<std::pair<std::string, std::string>>{});
      continue;
    }
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      config_error("line " + std::to_string(line_no) + ": expected key = value");
    }
    if (current.empty()) {
      config_error("line " + std::to_string(line_no) + ": key outside any [section]");
    }
    const std::string key(trim(content.substr(0, eq)));
    const std::string value(trim(content.substr(eq + 1)));
    if (key.empty()) config_error("line " + std::to_string(line_no) + ": empty key");
    raw.sections.back().second.emplace_back(key, value);
  }
  return raw;
}

PredictorSpec parse_predictor_line(const std::string& line) {
  std::istringstream stream(line);
  std::string variable, aggregation, window;
  stream >> variable >> aggregation >> window;
  if (variable.empty() || aggregation.empty() || window.empty()) {
    config_error("predictor '" + line + "': expected <variable> mean <window>");
  }
  if (aggregation != "mean") {
    config_error("predictor '" + line + "': only 'mean' aggregation is supported");
  }
  PredictorSpec spec;
  if (variable == "outcome") {
    spec.variable = PredictorSpec::Variable::Outcome;
  } else if (variable == "mediator") {
    spec.variable = PredictorSpec::Variable::Mediator;
  } else if (variable.rfind("covariate:", 0) == 0) {
    spec.variable = PredictorSpec::Variable::Covariate;
    spec.covariate = variable.substr(std::string("covariate:").size());
    if (spec.covariate.empty()) config_error("predictor '" + line + "': empty covariate name");
  } else {
    config_error("predictor '" + line + "': unknown variable '" + variable + "'");
  }
  const auto dots = window.find("..");
  if (dots == std::string::npos) {
    const auto a = parse_int(window);
    if (!a) config_error("predictor '" + line + "': bad window '" + window + "'");
    spec.window_start = spec.window_end = static_cast<int>(*a);
  } else {
    const auto a = parse_int(window.substr(0, dots));
    const auto b = parse_int(window.substr(dots + 2));
    if (!a || !b) config_error("predictor '" + line + "': bad window '" + window + "'");
    spec.window_start = static_cast<int>(*a);
    spec.window_end = static_cast<int>(*b);
  }
  return spec;
}

EstimationConfig config_from(const RawConfig& raw) {
  EstimationConfig config;
  for (const auto& [section, entries] : raw.sections) {
    if (section == "data") {
      for (const auto& [key, value] : entries) {
        if (key == "path") config.data_path = value;
        else if (key == "unit_column") config.schema.unit = value;
        else if (key == "period_column") config.schema.period = value;
        else if (key == "outcome_column") config.schema.outcome = value;
        else if (key == "mediator_column") config.schema.mediator = value;
        else if (key == "covariate_columns") config.schema.covariates = parse_list(value);
        else config_error("unknown key '" + key + "' in [data]");
      }
    } else if (section == "design") {
      for (const auto& [key, value] : entries) {
        if (key == "treated") config.treated = parse_list(value);
        else if (key == "donors") config.donors = parse_list(value);
        else if (key == "intervention_period")
          config.intervention_period = static_cast<int>(parse_integer(value, key));
        else config_error("unknown key '" + key + "' in [design]");
      }
    } else if (section == "predictors") {
      for (const auto& [key, value] : entries) {
        if (key == "predictor") config.specs.push_back(parse_predictor_line(value));
        else config_error("unknown key '" + key + "' in [predictors]");
      }
    } else if (section == "estimation") {
      for (const auto& [key, value] : entries) {
        if (key == "v_mode") {
          if (value == "uniform") config.v_mode = VMode::Uniform;
          else if (value == "equal-pre-post") config.v_mode = VMode::EqualPrePost;
          else if (value == "user") config.v_mode = VMode::User;
          else config_error("v_mode must be uniform, equal-pre-post, or user");
        } else if (key == "v_weight") {
          const auto space = value.find_last_of(' ');
          if (space == std::string::npos) config_error("v_weight expects '<label> <weight>'");
          const std::string label(trim(value.substr(0, space)));
          const auto weight = parse_double(trim(value.substr(space + 1)));
          if (label.empty() || !weight) config_error("v_weight expects '<label> <weight>'");
          config.v_user[label] = *weight;
        } else if (key == "mediator_mode") {
          if (value == "single-lag") config.mediator_mode.kind = MediatorMode::Kind::SingleLag;
          else if (value == "full-path") config.mediator_mode.kind = MediatorMode::Kind::FullPath;
          else config_error("mediator_mode must be single-lag or full-path");
        } else if (key == "mediator_lag") {
          config.mediator_mode.lag = static_cast<int>(parse_integer(value, key));
          if (config.mediator_mode.lag < 0) config_error("mediator_lag must be >= 0");
        } else if (key == "standardize") {
          config.standardize = parse_bool(value, key);
        } else {
          config_error("unknown key '" + key + "' in [estimation]");
        }
      }
    } else if (section == "inference") {
      for (const auto& [key, value] : entries) {
        if (key == "n_iter") config.inference.n_iter = static_cast<int>(parse_integer(value, key));
        else if (key == "seed")
          config.inference.seed = static_cast<std::uint64_t>(parse_integer(value, key));
        else if (key == "pvalue_denominator") {
          if (value == "donors") config.inference.pvalue_denominator = PValueDenominator::Donors;
          else if (value == "donors+1")
            config.inference.pvalue_denominator = PValueDenominator::DonorsPlusOne;
          else config_error("pvalue_denominator must be donors or donors+1");
        } else {
          config_error("unknown key '" + key + "' in [inference]");
        }
      }
    } else if (section == "output") {
      for (const auto& [key, value] : entries) {
        if (key == "directory") config.output_dir = value;
        else if (key == "jobs") config.jobs = static_cast<int>(parse_integer(value, key));
        else if (key == "strict") config.strict = parse_bool(value, key);
        else config_error("unknown key '" + key + "' in [output]");
      }
    } else if (section == "dgp" || section == "mc") {
      // Consumed by the simulation commands.
    } else {
      config_error("unknown section [" + section + "]");
    }
  }
  return config;
}

EstimationConfig parse_config(std::istream& in) { return config_from(parse_raw_config(in)); }

EstimationConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config '" + path + "'");
  return parse_config(in);
}

}  // namespace masc
