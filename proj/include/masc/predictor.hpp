#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "masc/errors.hpp"
#include "masc/panel.hpp"

namespace masc {

// Declarative description of one matching target: a variable averaged over an
// inclusive window of period labels. Raw values are windows of length one.
struct PredictorSpec {
  enum class Variable { Outcome, Mediator, Covariate };

  Variable variable = Variable::Outcome;
  std::string covariate;  // set when variable == Covariate
  int window_start = 0;
  int window_end = 0;

  static PredictorSpec outcome(int a, int b) { return {Variable::Outcome, "", a, b}; }
  static PredictorSpec mediator(int a, int b) { return {Variable::Mediator, "", a, b}; }
  static PredictorSpec covariate_mean(std::string name, int a, int b) {
    return {Variable::Covariate, std::move(name), a, b};
  }

  std::string describe() const;
};

struct PredictorLabel {
  std::string text;
  bool post = false;  // true for post-intervention mediator entries

  bool operator==(const PredictorLabel&) const = default;
};

// Realized matching vectors: the treated unit's target vector and one row per
// donor, sharing the same ordered labels.
struct TargetSet {
  std::vector<PredictorLabel> labels;
  Eigen::VectorXd treated;        // length = labels
  Eigen::MatrixXd donors;         // donors x labels
  std::vector<std::string> donor_ids;
};

enum class VMode { Uniform, EqualPrePost, User };

struct VWeights {
  Eigen::VectorXd diagonal;  // positive, sums to 1
  VMode mode = VMode::Uniform;
};

struct MediatorMode {
  enum class Kind { SingleLag, FullPath };
  Kind kind = Kind::SingleLag;
  int lag = 1;

  static MediatorMode single_lag(int k) { return {Kind::SingleLag, k}; }
  static MediatorMode full_path() { return {Kind::FullPath, 0}; }
};

// Ireland-style default when the user names no predictors: every pre-period
// outcome value and every pre-period mediator value individually.
std::vector<PredictorSpec> default_specs(const PanelDataset& dataset);

// Pre-intervention matching problem for the total effect.
TargetSet build_alpha_targets(const PanelDataset& dataset,
                              const std::string& treated,
                              const std::vector<std::string>& donors,
                              const std::vector<PredictorSpec>& specs);

// Alpha targets extended with post-period mediator entries for the direct
// effect at post period t_prime: M at t_prime - lag under single-lag, or the
// whole path M_T..M_{t_prime} under full-path.
TargetSet build_theta_targets(const PanelDataset& dataset,
                              const std::string& treated,
                              const std::vector<std::string>& donors,
                              const std::vector<PredictorSpec>& specs,
                              int t_prime,
                              MediatorMode mode);

// Mediator-as-outcome matching problem (pre-period mediator plus any
// covariate specs); used for the counterfactual mediator.
TargetSet build_mediator_targets(const PanelDataset& dataset,
                                 const std::string& treated,
                                 const std::vector<std::string>& donors,
                                 const std::vector<PredictorSpec>& specs);

// Theta-style problem whose post-period entry for the treated side is an
// externally supplied value (the first-step counterfactual mediator) while
// donor rows carry their observed mediator at t_prime.
TargetSet build_theta_targets_with_override(const PanelDataset& dataset,
                                            const std::string& treated,
                                            const std::vector<std::string>& donors,
                                            const std::vector<PredictorSpec>& specs,
                                            int t_prime,
                                            double treated_post_value);

// Divides every label row by its standard deviation across treated + donors
// (sample sd; rows with sd = 0 are left unscaled and reported). V then acts
// on standardized coordinates.
std::vector<Warning> standardize_targets(TargetSet& targets);

// Diagonal V over the target labels. equal-pre-post splits total mass evenly
// between the pre-period block and the post-period block, uniformly inside
// each; user weights are matched by label text and normalized.
VWeights build_v(const std::vector<PredictorLabel>& labels, VMode mode,
                 const std::map<std::string, double>& user = {});

}  // namespace masc
