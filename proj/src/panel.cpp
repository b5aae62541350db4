#include "masc/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "masc/config.hpp"
#include "masc/text.hpp"

namespace masc {

namespace {

std::string cell_location(const std::string& unit, int period) {
  return "(" + unit + "," + std::to_string(period) + ")";
}

}  // namespace

std::optional<std::size_t> PanelDataset::unit_index(std::string_view unit) const {
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (units[i] == unit) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> PanelDataset::period_index(int label) const {
  const auto it = std::lower_bound(periods.begin(), periods.end(), label);
  if (it == periods.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - periods.begin());
}

std::size_t PanelDataset::intervention_index() const {
  const auto idx = period_index(intervention_period);
  if (!idx) throw Error(ErrorCode::UnknownPeriod, "intervention period not designated");
  return *idx;
}

const Eigen::MatrixXd* PanelDataset::covariate(std::string_view name) const {
  for (const auto& [cov_name, matrix] : covariates) {
    if (cov_name == name) return &matrix;
  }
  return nullptr;
}

PanelDataset load_panel(std::istream& csv_source, const CsvSchema& schema) {
  std::string header_line;
  if (!std::getline(csv_source, header_line)) {
    throw Error(ErrorCode::IoError, "empty CSV source");
  }
  if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();
  const std::vector<std::string> header = split(header_line, ',');

  auto column_of = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (std::string(trim(header[i])) == name) return i;
    }
    throw Error(ErrorCode::UnknownColumn, "column '" + name + "' not found in header");
  };

  const std::size_t unit_col = column_of(schema.unit);
  const std::size_t period_col = column_of(schema.period);
  const std::size_t outcome_col = column_of(schema.outcome);
  const std::size_t mediator_col = column_of(schema.mediator);

  std::vector<std::pair<std::string, std::size_t>> covariate_cols;
  if (schema.covariates.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i == unit_col || i == period_col || i == outcome_col || i == mediator_col) continue;
      covariate_cols.emplace_back(std::string(trim(header[i])), i);
    }
  } else {
    for (const auto& name : schema.covariates) {
      covariate_cols.emplace_back(name, column_of(name));
    }
  }

  struct Row {
    std::string unit;
    int period;
    double outcome;
    double mediator;
    std::vector<double> covariates;
  };
  std::vector<Row> rows;
  std::vector<std::string> units;        // order of first appearance
  std::set<int> period_set;

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(csv_source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::NonNumeric,
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    auto numeric = [&](std::size_t col) -> double {
      const auto v = parse_double(trim(fields[col]));
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorCode::NonNumeric, "line " + std::to_string(line_no) + ", column '" +
                                               header[col] + "': '" + fields[col] + "'");
      }
      return *v;
    };
    Row row;
    row.unit = std::string(trim(fields[unit_col]));
    const auto period = parse_int(trim(fields[period_col]));
    if (!period) {
      throw Error(ErrorCode::NonNumeric,
                  "line " + std::to_string(line_no) + ": period '" + fields[period_col] + "'");
    }
    row.period = static_cast<int>(*period);
    row.outcome = numeric(outcome_col);
    row.mediator = numeric(mediator_col);
    row.covariates.reserve(covariate_cols.size());
    for (const auto& [name, col] : covariate_cols) row.covariates.push_back(numeric(col));

    if (std::find(units.begin(), units.end(), row.unit) == units.end()) units.push_back(row.unit);
    period_set.insert(row.period);
    rows.push_back(std::move(row));
  }

  PanelDataset dataset;
  dataset.units = units;
  dataset.periods.assign(period_set.begin(), period_set.end());

  const std::size_t n_units = dataset.units.size();
  const std::size_t n_periods = dataset.periods.size();
  if (n_units == 0 || n_periods == 0) {
    throw Error(ErrorCode::IoError, "CSV contains no data rows");
  }

  dataset.outcome.setConstant(n_units, n_periods, std::nan(""));
  dataset.mediator.setConstant(n_units, n_periods, std::nan(""));
  for (const auto& [name, col] : covariate_cols) {
    dataset.covariates.emplace_back(name,
                                    Eigen::MatrixXd::Constant(n_units, n_periods, std::nan("")));
  }

  for (const auto& row : rows) {
    const std::size_t u = *dataset.unit_index(row.unit);
    const std::size_t p = *dataset.period_index(row.period);
    if (!std::isnan(dataset.outcome(u, p))) {
      throw Error(ErrorCode::DuplicateCell, cell_location(row.unit, row.period));
    }
    dataset.outcome(u, p) = row.outcome;
    dataset.mediator(u, p) = row.mediator;
    for (std::size_t k = 0; k < covariate_cols.size(); ++k) {
      dataset.covariates[k].second(u, p) = row.covariates[k];
    }
  }

  for (std::size_t u = 0; u < n_units; ++u) {
    for (std::size_t p = 0; p < n_periods; ++p) {
      if (std::isnan(dataset.outcome(u, p))) {
        throw Error(ErrorCode::MissingCell, cell_location(dataset.units[u], dataset.periods[p]));
      }
    }
  }
  return dataset;
}

PanelDataset load_panel_file(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return load_panel(in, schema);
}

std::string serialize_panel(const PanelDataset& dataset) {
  std::string out = "unit,period,outcome,mediator";
  for (const auto& [name, matrix] : dataset.covariates) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (std::size_t u = 0; u < dataset.n_units(); ++u) {
    for (std::size_t p = 0; p < dataset.n_periods(); ++p) {
      out += dataset.units[u];
      out += ',';
      out += std::to_string(dataset.periods[p]);
      out += ',';
      out += format_roundtrip(dataset.outcome(u, p));
      out += ',';
      out += format_roundtrip(dataset.mediator(u, p));
      for (const auto& [name, matrix] : dataset.covariates) {
        out += ',';
        out += format_roundtrip(matrix(u, p));
      }
      out += '\n';
    }
  }
  return out;
}

PanelDataset designate(const PanelDataset& dataset,
                       std::vector<std::string> treated,
                       std::vector<std::string> donors,
                       int intervention_period) {
  PanelDataset out = dataset;
  out.treated_units = std::move(treated);
  out.donor_units = std::move(donors);
  out.intervention_period = intervention_period;
  return out;
}

ValidationReport validate(const PanelDataset& dataset, const EstimationConfig& config) {
  ValidationReport report;
  auto error = [&](ErrorCode code, std::string message, std::string location = "") {
    report.errors.push_back({error_code_name(code), std::move(message), std::move(location)});
  };
  auto warning = [&](std::string code, std::string message, std::string location = "") {
    report.warnings.push_back({std::move(code), std::move(message), std::move(location)});
  };

  for (std::size_t u = 0; u < dataset.n_units(); ++u) {
    for (std::size_t p = 0; p < dataset.n_periods(); ++p) {
      const bool bad = !std::isfinite(dataset.outcome(u, p)) || !std::isfinite(dataset.mediator(u, p));
      if (bad) {
        error(ErrorCode::MissingCell, "non-finite cell",
              cell_location(dataset.units[u], dataset.periods[p]));
      }
    }
  }

  const auto t_idx = dataset.period_index(config.intervention_period);
  if (!t_idx) {
    error(ErrorCode::UnknownPeriod,
          "intervention period " + std::to_string(config.intervention_period) + " not in panel");
  } else {
    if (*t_idx < 1) {
      error(ErrorCode::TooFewPeriods, "no pre-intervention period exists");
    }
    // t >= T being within the panel guarantees at least one post period.
  }

  if (config.treated.empty()) {
    error(ErrorCode::UnknownUnit, "no treated unit named");
  }
  for (const auto& unit : config.treated) {
    if (!dataset.unit_index(unit)) error(ErrorCode::UnknownUnit, "treated unit not in panel", unit);
  }
  for (const auto& unit : config.donors) {
    if (!dataset.unit_index(unit)) error(ErrorCode::UnknownUnit, "donor unit not in panel", unit);
  }
  for (const auto& unit : config.treated) {
    if (std::find(config.donors.begin(), config.donors.end(), unit) != config.donors.end()) {
      error(ErrorCode::OverlappingPools, "unit in both treated and donor pools", unit);
    }
  }
  if (config.donors.size() < 2) {
    error(ErrorCode::DonorPoolTooSmall, "donor pool needs at least 2 units");
  } else if (config.donors.size() < 5) {
    warning("SmallDonorPool",
            "donor pool has only " + std::to_string(config.donors.size()) + " units");
  }

  const auto specs = config.specs;
  for (const auto& spec : specs) {
    const std::string where = spec.describe();
    if (spec.window_start > spec.window_end) {
      error(ErrorCode::WindowOutOfRange, "window start exceeds end", where);
      continue;
    }
    if (!dataset.period_index(spec.window_start) || !dataset.period_index(spec.window_end)) {
      error(ErrorCode::WindowOutOfRange, "window outside the panel's periods", where);
      continue;
    }
    if (t_idx && spec.window_end >= config.intervention_period) {
      error(ErrorCode::WindowCrossesIntervention,
            "pre-period predictor window reaches into the post period", where);
    }
    if (spec.variable == PredictorSpec::Variable::Covariate &&
        dataset.covariate(spec.covariate) == nullptr) {
      error(ErrorCode::UnknownCovariate, "covariate not in panel", spec.covariate);
    }
  }

  // Constant predictors carry no matching information once standardized.
  if (t_idx && report.errors.empty()) {
    std::vector<std::string> pool = config.donors;
    pool.insert(pool.end(), config.treated.begin(), config.treated.end());
    std::vector<PredictorSpec> effective = specs;
    if (effective.empty()) {
      for (std::size_t p = 0; p < *t_idx; ++p) {
        effective.push_back(PredictorSpec::outcome(dataset.periods[p], dataset.periods[p]));
        effective.push_back(PredictorSpec::mediator(dataset.periods[p], dataset.periods[p]));
      }
    }
    for (const auto& spec : effective) {
      double mn = 0.0, mx = 0.0;
      bool first = true;
      for (const auto& unit : pool) {
        const auto u = dataset.unit_index(unit);
        if (!u) continue;
        const auto a = dataset.period_index(spec.window_start);
        const auto b = dataset.period_index(spec.window_end);
        if (!a || !b) continue;
        const Eigen::MatrixXd* source = nullptr;
        switch (spec.variable) {
          case PredictorSpec::Variable::Outcome: source = &dataset.outcome; break;
          case PredictorSpec::Variable::Mediator: source = &dataset.mediator; break;
          case PredictorSpec::Variable::Covariate: source = dataset.covariate(spec.covariate); break;
        }
        if (!source) continue;
        const double v = source->row(static_cast<Eigen::Index>(*u))
                             .segment(static_cast<Eigen::Index>(*a),
                                      static_cast<Eigen::Index>(*b - *a + 1))
                             .mean();
        if (first) {
          mn = mx = v;
          first = false;
        } else {
          mn = std::min(mn, v);
          mx = std::max(mx, v);
        }
      }
      if (!first && mn == mx) {
        warning("ConstantPredictor", "predictor is constant across units", spec.describe());
      }
    }
  }

  return report;
}

}  // namespace masc
