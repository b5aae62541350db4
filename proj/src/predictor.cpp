#include "masc/predictor.hpp"

#include <cmath>

namespace masc {

namespace {

std::string window_text(int a, int b) {
  if (a == b) return std::to_string(a);
  return std::to_string(a) + ".." + std::to_string(b);
}

const Eigen::MatrixXd& source_matrix(const PanelDataset& dataset, const PredictorSpec& spec) {
  switch (spec.variable) {
    case PredictorSpec::Variable::Outcome:
      return dataset.outcome;
    case PredictorSpec::Variable::Mediator:
      return dataset.mediator;
    case PredictorSpec::Variable::Covariate: {
      const Eigen::MatrixXd* matrix = dataset.covariate(spec.covariate);
      if (!matrix) throw Error(ErrorCode::UnknownCovariate, spec.covariate);
      return *matrix;
    }
  }
  throw Error(ErrorCode::UnknownCovariate, "bad spec variable");
}

double evaluate(const PanelDataset& dataset, const PredictorSpec& spec, std::size_t unit) {
  const auto a = dataset.period_index(spec.window_start);
  const auto b = dataset.period_index(spec.window_end);
  if (!a || !b || *a > *b) {
    throw Error(ErrorCode::WindowOutOfRange, spec.describe());
  }
  const auto& matrix = source_matrix(dataset, spec);
  return matrix.row(static_cast<Eigen::Index>(unit))
      .segment(static_cast<Eigen::Index>(*a), static_cast<Eigen::Index>(*b - *a + 1))
      .mean();
}

std::size_t require_unit(const PanelDataset& dataset, const std::string& unit) {
  const auto idx = dataset.unit_index(unit);
  if (!idx) throw Error(ErrorCode::UnknownUnit, unit);
  return *idx;
}

TargetSet evaluate_specs(const PanelDataset& dataset, const std::string& treated,
                         const std::vector<std::string>& donors,
                         const std::vector<PredictorSpec>& specs) {
  if (specs.empty()) throw Error(ErrorCode::EmptySpecList, "no predictor specs");
  const std::size_t t_star = dataset.intervention_index();
  TargetSet out;
  out.labels.reserve(specs.size());
  for (const auto& spec : specs) {
    const auto end_idx = dataset.period_index(spec.window_end);
    if (end_idx && *end_idx >= t_star) {
      throw Error(ErrorCode::WindowCrossesIntervention, spec.describe());
    }
    out.labels.push_back({spec.describe(), false});
  }
  const std::size_t treated_idx = require_unit(dataset, treated);
  out.treated.resize(static_cast<Eigen::Index>(specs.size()));
  for (std::size_t k = 0; k < specs.size(); ++k) {
    out.treated(static_cast<Eigen::Index>(k)) = evaluate(dataset, specs[k], treated_idx);
  }
  out.donors.resize(static_cast<Eigen::Index>(donors.size()),
                    static_cast<Eigen::Index>(specs.size()));
  out.donor_ids = donors;
  for (std::size_t d = 0; d < donors.size(); ++d) {
    const std::size_t u = require_unit(dataset, donors[d]);
    for (std::size_t k = 0; k < specs.size(); ++k) {
      out.donors(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k)) =
          evaluate(dataset, specs[k], u);
    }
  }
  return out;
}

void append_post_mediator(TargetSet& targets, const PanelDataset& dataset,
                          const std::string& treated, int period_label,
                          std::optional<double> treated_override = std::nullopt) {
  const auto p = dataset.period_index(period_label);
  if (!p) throw Error(ErrorCode::UnknownPeriod, std::to_string(period_label));
  const std::size_t treated_idx = require_unit(dataset, treated);

  targets.labels.push_back({"mediator " + std::to_string(period_label), true});
  const Eigen::Index k = targets.treated.size();
  targets.treated.conservativeResize(k + 1);
  targets.treated(k) = treated_override ? *treated_override
                                        : dataset.mediator(static_cast<Eigen::Index>(treated_idx),
                                                           static_cast<Eigen::Index>(*p));
  targets.donors.conservativeResize(Eigen::NoChange, k + 1);
  for (std::size_t d = 0; d < targets.donor_ids.size(); ++d) {
    const std::size_t u = require_unit(dataset, targets.donor_ids[d]);
    targets.donors(static_cast<Eigen::Index>(d), k) =
        dataset.mediator(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(*p));
  }
}

}  // namespace

std::string PredictorSpec::describe() const {
  std::string name;
  switch (variable) {
    case Variable::Outcome: name = "outcome"; break;
    case Variable::Mediator: name = "mediator"; break;
    case Variable::Covariate: name = "covariate:" + covariate; break;
  }
  return name + " " + window_text(window_start, window_end);
}

std::vector<PredictorSpec> default_specs(const PanelDataset& dataset) {
  std::vector<PredictorSpec> specs;
  const std::size_t t_star = dataset.intervention_index();
  specs.reserve(2 * t_star);
  for (std::size_t p = 0; p < t_star; ++p) {
    specs.push_back(PredictorSpec::outcome(dataset.periods[p], dataset.periods[p]));
  }
  for (std::size_t p = 0; p < t_star; ++p) {
    specs.push_back(PredictorSpec::mediator(dataset.periods[p], dataset.periods[p]));
  }
  return specs;
}

TargetSet build_alpha_targets(const PanelDataset& dataset, const std::string& treated,
                              const std::vector<std::string>& donors,
                              const std::vector<PredictorSpec>& specs) {
  return evaluate_specs(dataset, treated, donors, specs);
}

TargetSet build_theta_targets(const PanelDataset& dataset, const std::string& treated,
                              const std::vector<std::string>& donors,
                              const std::vector<PredictorSpec>& specs, int t_prime,
                              MediatorMode mode) {
  const std::size_t t_star = dataset.intervention_index();
  const auto tp = dataset.period_index(t_prime);
  if (!tp || *tp < t_star) {
    throw Error(ErrorCode::UnknownPeriod,
                "direct-effect period " + std::to_string(t_prime) + " is not post-intervention");
  }
  TargetSet targets = evaluate_specs(dataset, treated, donors, specs);
  if (mode.kind == MediatorMode::Kind::SingleLag) {
    if (mode.lag < 0 || *tp < t_star + static_cast<std::size_t>(mode.lag)) {
      throw Error(ErrorCode::LagBeforeIntervention,
                  "lag " + std::to_string(mode.lag) + " at period " + std::to_string(t_prime) +
                      " reaches before the intervention");
    }
    const std::size_t p = *tp - static_cast<std::size_t>(mode.lag);
    append_post_mediator(targets, dataset, treated, dataset.periods[p]);
  } else {
    for (std::size_t p = t_star; p <= *tp; ++p) {
      append_post_mediator(targets, dataset, treated, dataset.periods[p]);
    }
  }
  return targets;
}

TargetSet build_mediator_targets(const PanelDataset& dataset, const std::string& treated,
                                 const std::vector<std::string>& donors,
                                 const std::vector<PredictorSpec>& specs) {
  return evaluate_specs(dataset, treated, donors, specs);
}

TargetSet build_theta_targets_with_override(const PanelDataset& dataset,
                                            const std::string& treated,
                                            const std::vector<std::string>& donors,
                                            const std::vector<PredictorSpec>& specs, int t_prime,
                                            double treated_post_value) {
  const std::size_t t_star = dataset.intervention_index();
  const auto tp = dataset.period_index(t_prime);
  if (!tp || *tp < t_star) {
    throw Error(ErrorCode::UnknownPeriod,
                "period " + std::to_string(t_prime) + " is not post-intervention");
  }
  TargetSet targets = evaluate_specs(dataset, treated, donors, specs);
  append_post_mediator(targets, dataset, treated, t_prime, treated_post_value);
  return targets;
}

std::vector<Warning> standardize_targets(TargetSet& targets) {
  std::vector<Warning> warnings;
  const Eigen::Index n_labels = targets.treated.size();
  const Eigen::Index n_donors = targets.donors.rows();
  if (targets.donors.cols() != n_labels) {
    throw Error(ErrorCode::DimensionMismatch, "donor matrix does not match label count");
  }
  const double n = static_cast<double>(n_donors + 1);
  for (Eigen::Index k = 0; k < n_labels; ++k) {
    const double mean = (targets.treated(k) + targets.donors.col(k).sum()) / n;
    double ss = (targets.treated(k) - mean) * (targets.treated(k) - mean);
    for (Eigen::Index d = 0; d < n_donors; ++d) {
      const double gap = targets.donors(d, k) - mean;
      ss += gap * gap;
    }
    const double sd = n > 1.0 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    if (sd <= 0.0) {
      warnings.push_back({"ConstantPredictor",
                          "label '" + targets.labels[k].text + "' has zero variance; left unscaled"});
      continue;
    }
    targets.treated(k) /= sd;
    targets.donors.col(k) /= sd;
  }
  return warnings;
}

VWeights build_v(const std::vector<PredictorLabel>& labels, VMode mode,
                 const std::map<std::string, double>& user) {
  if (labels.empty()) throw Error(ErrorCode::EmptySpecList, "no labels for V");
  VWeights v;
  v.mode = mode;
  v.diagonal.resize(static_cast<Eigen::Index>(labels.size()));
  switch (mode) {
    case VMode::Uniform:
      v.diagonal.setConstant(1.0 / static_cast<double>(labels.size()));
      break;
    case VMode::EqualPrePost: {
      std::size_t n_post = 0;
      for (const auto& label : labels) n_post += label.post ? 1 : 0;
      if (n_post == 0) {
        throw Error(ErrorCode::EqualPrePostWithoutPostLabels,
                    "equal-pre-post weighting needs at least one post-period label");
      }
      const std::size_t n_pre = labels.size() - n_post;
      if (n_pre == 0) {
        throw Error(ErrorCode::EqualPrePostWithoutPostLabels,
                    "equal-pre-post weighting needs at least one pre-period label");
      }
      for (std::size_t k = 0; k < labels.size(); ++k) {
        v.diagonal(static_cast<Eigen::Index>(k)) =
            labels[k].post ? 0.5 / static_cast<double>(n_post) : 0.5 / static_cast<double>(n_pre);
      }
      break;
    }
    case VMode::User: {
      double total = 0.0;
      for (std::size_t k = 0; k < labels.size(); ++k) {
        const auto it = user.find(labels[k].text);
        const double w = it == user.end() ? 0.0 : it->second;
        if (w <= 0.0) {
          throw Error(ErrorCode::ZeroOrNegativeUserWeight,
                      "label '" + labels[k].text + "' needs a positive user weight");
        }
        v.diagonal(static_cast<Eigen::Index>(k)) = w;
        total += w;
      }
      v.diagonal /= total;
      break;
    }
  }
  return v;
}

}  // namespace masc
