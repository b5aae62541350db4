#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "masc/predictor.hpp"
#include "masc/random.hpp"

using namespace masc;
using masc::testing::make_panel;

namespace {

// 1986..2007 panel, euro-style: intervention 1998, 12 pre periods.
PanelDataset euro_panel(std::uint64_t seed = 1) {
  Rng rng(seed);
  std::vector<std::string> units = {"IE", "AU", "SE", "CA", "CH"};
  std::vector<int> periods;
  for (int year = 1986; year <= 2007; ++year) periods.push_back(year);
  Eigen::MatrixXd outcome(5, 22), mediator(5, 22);
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index t = 0; t < 22; ++t) {
      outcome(i, t) = rng.normal(10, 2);
      mediator(i, t) = rng.normal(0, 1);
    }
  }
  return make_panel(units, periods, outcome, mediator, {"IE"}, {"AU", "SE", "CA", "CH"}, 1998);
}

}  // namespace

TEST_CASE("default specs give one entry per pre-period value of outcome and mediator") {
  const PanelDataset panel = euro_panel();
  const auto specs = default_specs(panel);
  CHECK(specs.size() == 24);  // 12 pre-period outcomes + 12 pre-period mediators
  const TargetSet targets =
      build_alpha_targets(panel, "IE", panel.donor_units, specs);
  CHECK(targets.labels.size() == 24);
  CHECK(targets.treated.size() == 24);
  CHECK(targets.donors.rows() == 4);
  CHECK(targets.donors.cols() == 24);
  for (const auto& label : targets.labels) CHECK_FALSE(label.post);
}

TEST_CASE("three windows of outcome and mediator give six targets") {
  const PanelDataset panel = euro_panel();
  std::vector<PredictorSpec> specs = {
      PredictorSpec::outcome(1986, 1989),  PredictorSpec::outcome(1990, 1993),
      PredictorSpec::outcome(1994, 1997),  PredictorSpec::mediator(1986, 1989),
      PredictorSpec::mediator(1990, 1993), PredictorSpec::mediator(1994, 1997),
  };
  const TargetSet targets = build_alpha_targets(panel, "IE", panel.donor_units, specs);
  CHECK(targets.labels.size() == 6);
  CHECK(targets.donors.cols() == 6);
}

TEST_CASE("window means equal direct arithmetic means") {
  const PanelDataset panel = euro_panel(9);
  const std::vector<PredictorSpec> specs = {PredictorSpec::outcome(1990, 1993)};
  const TargetSet targets = build_alpha_targets(panel, "IE", panel.donor_units, specs);
  const std::size_t a = *panel.period_index(1990);
  double sum = 0.0;
  for (std::size_t t = a; t <= *panel.period_index(1993); ++t) {
    sum += panel.outcome(0, static_cast<Eigen::Index>(t));
  }
  CHECK(targets.treated(0) == doctest::Approx(sum / 4.0).epsilon(1e-14));
}

TEST_CASE("length-one window returns the raw cell") {
  const PanelDataset panel = euro_panel(13);
  const std::vector<PredictorSpec> specs = {PredictorSpec::mediator(1991, 1991)};
  const TargetSet targets = build_alpha_targets(panel, "IE", panel.donor_units, specs);
  CHECK(targets.treated(0) == panel.mediator(0, *panel.period_index(1991)));
}

TEST_CASE("pre-period windows may not reach the intervention") {
  const PanelDataset panel = euro_panel();
  const std::vector<PredictorSpec> specs = {PredictorSpec::outcome(1994, 1999)};
  CHECK_THROWS_AS(build_alpha_targets(panel, "IE", panel.donor_units, specs), Error);
}

TEST_CASE("empty spec list is rejected") {
  const PanelDataset panel = euro_panel();
  CHECK_THROWS_AS(build_alpha_targets(panel, "IE", panel.donor_units, {}), Error);
}

TEST_CASE("theta targets extend alpha targets with post-period mediator entries") {
  const PanelDataset panel = euro_panel();
  const auto specs = default_specs(panel);

  SUBCASE("lag zero at the intervention adds exactly one entry") {
    const TargetSet targets = build_theta_targets(panel, "IE", panel.donor_units, specs, 1998,
                                                  MediatorMode::single_lag(0));
    CHECK(targets.labels.size() == 25);
    CHECK(targets.labels.back().post);
    CHECK(targets.labels.back().text == "mediator 1998");
    CHECK(targets.treated(24) == panel.mediator(0, *panel.period_index(1998)));
  }

  SUBCASE("full path at T+3 adds four entries") {
    const TargetSet targets = build_theta_targets(panel, "IE", panel.donor_units, specs, 2001,
                                                  MediatorMode::full_path());
    CHECK(targets.labels.size() == 28);
    int post_count = 0;
    for (const auto& label : targets.labels) post_count += label.post ? 1 : 0;
    CHECK(post_count == 4);
  }

  SUBCASE("single lag one at T+5 matches the mediator at T+4") {
    const TargetSet targets = build_theta_targets(panel, "IE", panel.donor_units, specs, 2003,
                                                  MediatorMode::single_lag(1));
    CHECK(targets.labels.size() == 25);
    CHECK(targets.labels.back().text == "mediator 2002");
  }

  SUBCASE("lag reaching before the intervention is rejected") {
    CHECK_THROWS_AS(build_theta_targets(panel, "IE", panel.donor_units, specs, 1998,
                                        MediatorMode::single_lag(1)),
                    Error);
  }
}

TEST_CASE("labels align between treated vector and donor rows") {
  const PanelDataset panel = euro_panel(21);
  const auto specs = default_specs(panel);
  for (const int t_prime : {1998, 2001, 2007}) {
    const TargetSet targets = build_theta_targets(panel, "IE", panel.donor_units, specs, t_prime,
                                                  MediatorMode::single_lag(0));
    CHECK(targets.treated.size() == static_cast<Eigen::Index>(targets.labels.size()));
    CHECK(targets.donors.cols() == static_cast<Eigen::Index>(targets.labels.size()));
    CHECK(targets.donor_ids == panel.donor_units);
  }
}

TEST_CASE("standardization scales every varying label row to unit variance") {
  PanelDataset panel = euro_panel(33);
  // A constant mediator row exercises the sd = 0 path.
  panel.mediator.col(3).setConstant(2.0);
  std::vector<PredictorSpec> specs = {PredictorSpec::outcome(1986, 1989),
                                      PredictorSpec::mediator(1989, 1989)};
  TargetSet targets = build_alpha_targets(panel, "IE", panel.donor_units, specs);
  const auto warnings = standardize_targets(targets);
  CHECK(warnings.size() == 1);

  const Eigen::Index varying = 0;
  const double n = static_cast<double>(targets.donors.rows() + 1);
  const double mean = (targets.treated(varying) + targets.donors.col(varying).sum()) / n;
  double ss = (targets.treated(varying) - mean) * (targets.treated(varying) - mean);
  for (Eigen::Index d = 0; d < targets.donors.rows(); ++d) {
    ss += (targets.donors(d, varying) - mean) * (targets.donors(d, varying) - mean);
  }
  CHECK(std::sqrt(ss / (n - 1.0)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("V weighting modes") {
  std::vector<PredictorLabel> labels;
  for (int i = 0; i < 24; ++i) labels.push_back({"pre " + std::to_string(i), false});

  SUBCASE("uniform splits mass evenly") {
    std::vector<PredictorLabel> six(labels.begin(), labels.begin() + 6);
    const VWeights v = build_v(six, VMode::Uniform);
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(v.diagonal(i) == doctest::Approx(1.0 / 6.0));
  }

  SUBCASE("equal-pre-post gives the post block half the mass") {
    labels.push_back({"mediator 1998", true});
    const VWeights v = build_v(labels, VMode::EqualPrePost);
    CHECK(v.diagonal(24) == doctest::Approx(0.5));
    for (Eigen::Index i = 0; i < 24; ++i) CHECK(v.diagonal(i) == doctest::Approx(0.5 / 24.0));
    CHECK(v.diagonal.sum() == doctest::Approx(1.0));
  }

  SUBCASE("equal-pre-post without post labels is an error") {
    CHECK_THROWS_AS(build_v(labels, VMode::EqualPrePost), Error);
  }

  SUBCASE("user map is normalized") {
    std::vector<PredictorLabel> two = {{"A", false}, {"B", false}};
    const VWeights v = build_v(two, VMode::User, {{"A", 2.0}, {"B", 2.0}});
    CHECK(v.diagonal(0) == doctest::Approx(0.5));
    CHECK(v.diagonal(1) == doctest::Approx(0.5));
  }

  SUBCASE("missing or non-positive user weights are errors") {
    std::vector<PredictorLabel> two = {{"A", false}, {"B", false}};
    CHECK_THROWS_AS(build_v(two, VMode::User, {{"A", 2.0}}), Error);
    CHECK_THROWS_AS(build_v(two, VMode::User, {{"A", 2.0}, {"B", -1.0}}), Error);
  }
}

TEST_CASE("covariate specs read the named covariate") {
  PanelDataset panel = euro_panel(41);
  Eigen::MatrixXd capital(5, 22);
  capital.setConstant(3.0);
  capital.row(0).setConstant(5.0);
  panel.covariates.emplace_back("capital", capital);
  const std::vector<PredictorSpec> specs = {PredictorSpec::covariate_mean("capital", 1986, 1990)};
  const TargetSet targets = build_alpha_targets(panel, "IE", panel.donor_units, specs);
  CHECK(targets.treated(0) == doctest::Approx(5.0));
  CHECK(targets.donors(0, 0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(build_alpha_targets(panel, "IE", panel.donor_units,
                                      {PredictorSpec::covariate_mean("schooling", 1986, 1990)}),
                  Error);
}
