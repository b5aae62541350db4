#pragma once

#include <Eigen/Dense>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "masc/errors.hpp"

namespace masc {

struct EstimationConfig;

// Maps the roles in a long-format CSV to column names. When covariates is
// empty, every column other than the four named ones is taken as a covariate.
struct CsvSchema {
  std::string unit = "unit";
  std::string period = "period";
  std::string outcome = "outcome";
  std::string mediator = "mediator";
  std::vector<std::string> covariates;
};

// Balanced unit-by-period panel. Matrices are units x periods; period labels
// are arbitrary ascending integers (e.g. years) mapped to contiguous indices.
// Immutable after construction; safe to share across estimation tasks.
struct PanelDataset {
  std::vector<std::string> units;
  std::vector<int> periods;
  Eigen::MatrixXd outcome;
  Eigen::MatrixXd mediator;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> covariates;

  // Design designation (set by designate(); label 0 means unset).
  int intervention_period = 0;
  std::vector<std::string> treated_units;
  std::vector<std::string> donor_units;

  std::size_t n_units() const { return units.size(); }
  std::size_t n_periods() const { return periods.size(); }

  std::optional<std::size_t> unit_index(std::string_view unit) const;
  std::optional<std::size_t> period_index(int label) const;

  // 0-based index of the first post-intervention period.
  std::size_t intervention_index() const;
  std::size_t n_pre() const { return intervention_index(); }
  std::size_t n_post() const { return n_periods() - intervention_index(); }

  const Eigen::MatrixXd* covariate(std::string_view name) const;
};

struct ValidationIssue {
  std::string code;
  std::string message;
  std::string location;
};

// Estimation is refused iff errors is non-empty.
struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;
  bool ok() const { return errors.empty(); }
};

// Parses a long-format CSV (UTF-8, header row required) into a balanced
// panel. Throws Error with MissingCell / NonNumeric / DuplicateCell /
// UnknownColumn on malformed input.
PanelDataset load_panel(std::istream& csv_source, const CsvSchema& schema = {});
PanelDataset load_panel_file(const std::string& path, const CsvSchema& schema = {});

// Canonical CSV form: header `unit,period,outcome,mediator[,<covariate>...]`,
// rows ordered by unit then period, numbers in shortest round-trip form.
// load_panel(serialize_panel(d)) == d on the data fields.
std::string serialize_panel(const PanelDataset& dataset);

// Returns a copy with treated/donor/intervention designation applied.
// Membership and disjointness problems are reported by validate(), not here;
// only units/periods entirely unknown to the dataset throw.
PanelDataset designate(const PanelDataset& dataset,
                       std::vector<std::string> treated,
                       std::vector<std::string> donors,
                       int intervention_period);

ValidationReport validate(const PanelDataset& dataset, const EstimationConfig& config);

}  // namespace masc
