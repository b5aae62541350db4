#include <doctest.h>

#include <sstream>

#include "masc/config.hpp"
#include "masc/dgp.hpp"

using namespace masc;

namespace {

const char* kFullConfig = R"(# euro run
[data]
path = data/panel.csv
unit_column = country
covariate_columns = capital, schooling

[design]
treated = Belgium
donors = Australia, Sweden, Canada, Switzerland
intervention_period = 1998

[predictors]
predictor = outcome mean 1986..1989
predictor = mediator mean 1990..1993
predictor = covariate:capital mean 1986..1990
predictor = outcome mean 1997

[estimation]
v_mode = equal-pre-post
mediator_mode = single-lag
mediator_lag = 1
standardize = true

[inference]
n_iter = 2500
seed = 99
pvalue_denominator = donors+1

[output]
directory = results
jobs = 4
strict = true
)";

}  // namespace

TEST_CASE("full config parses") {
  std::istringstream in(kFullConfig);
  const EstimationConfig config = parse_config(in);
  CHECK(config.data_path == "data/panel.csv");
  CHECK(config.schema.unit == "country");
  CHECK(config.schema.covariates == std::vector<std::string>{"capital", "schooling"});
  CHECK(config.treated == std::vector<std::string>{"Belgium"});
  CHECK(config.donors.size() == 4);
  CHECK(config.intervention_period == 1998);
  REQUIRE(config.specs.size() == 4);
  CHECK(config.specs[0].variable == PredictorSpec::Variable::Outcome);
  CHECK(config.specs[0].window_start == 1986);
  CHECK(config.specs[0].window_end == 1989);
  CHECK(config.specs[2].variable == PredictorSpec::Variable::Covariate);
  CHECK(config.specs[2].covariate == "capital");
  CHECK(config.specs[3].window_start == 1997);
  CHECK(config.specs[3].window_end == 1997);
  CHECK(config.v_mode == VMode::EqualPrePost);
  CHECK(config.mediator_mode.kind == MediatorMode::Kind::SingleLag);
  CHECK(config.mediator_mode.lag == 1);
  CHECK(config.standardize);
  CHECK(config.inference.n_iter == 2500);
  CHECK(config.inference.seed == 99);
  CHECK(config.inference.pvalue_denominator == PValueDenominator::DonorsPlusOne);
  CHECK(config.output_dir == "results");
  CHECK(config.jobs == 4);
  CHECK(config.strict);
}

TEST_CASE("unknown keys and malformed lines are rejected") {
  {
    std::istringstream in("[design]\ntreated = A\nbogus = 1\n");
    CHECK_THROWS_AS(parse_config(in), Error);
  }
  {
    std::istringstream in("[bogus_section]\nkey = 1\n");
    CHECK_THROWS_AS(parse_config(in), Error);
  }
  {
    std::istringstream in("key_outside_section = 1\n");
    CHECK_THROWS_AS(parse_config(in), Error);
  }
  {
    std::istringstream in("[design\ntreated = A\n");
    CHECK_THROWS_AS(parse_config(in), Error);
  }
}

TEST_CASE("predictor line grammar") {
  const PredictorSpec spec = parse_predictor_line("mediator mean 1990..1995");
  CHECK(spec.variable == PredictorSpec::Variable::Mediator);
  CHECK(spec.window_start == 1990);
  CHECK(spec.window_end == 1995);

  CHECK_THROWS_AS(parse_predictor_line("outcome median 1990..1995"), Error);
  CHECK_THROWS_AS(parse_predictor_line("volume mean 1990"), Error);
  CHECK_THROWS_AS(parse_predictor_line("covariate: mean 1990"), Error);
  CHECK_THROWS_AS(parse_predictor_line("outcome mean x..y"), Error);
}

TEST_CASE("user V weights parse labels with embedded spaces") {
  std::istringstream in(
      "[estimation]\nv_mode = user\nv_weight = outcome 1986..1989 2.5\nv_weight = mediator 1990 "
      "1.5\n");
  const EstimationConfig config = parse_config(in);
  CHECK(config.v_mode == VMode::User);
  REQUIRE(config.v_user.size() == 2);
  CHECK(config.v_user.at("outcome 1986..1989") == doctest::Approx(2.5));
  CHECK(config.v_user.at("mediator 1990") == doctest::Approx(1.5));
}

TEST_CASE("dgp section populates a simulation design") {
  std::istringstream in(R"([dgp]
n_pre = 12
n_post = 10
n_treated = 2
n_donors = 9
mediator_effect = 0.8
phi_control = 1.0
phi_treated = 1.0
rho_intercept = 1.2
rho_slope = -1.0
mediator_noise_sd = 0
outcome_noise_sd = 0
noise = uniform
convex_hull = true
post_spread = 2.0
seed = 321
)");
  const RawConfig raw = parse_raw_config(in);
  const DgpDesign design = dgp_design_from(raw);
  CHECK(design.n_pre == 12);
  CHECK(design.n_post == 10);
  CHECK(design.n_treated == 2);
  CHECK(design.n_donors == 9);
  CHECK(design.mediator_effect == doctest::Approx(0.8));
  CHECK(design.rho_slope == doctest::Approx(-1.0));
  CHECK(design.mediator_noise_sd == 0.0);
  CHECK(design.noise == NoiseKind::Uniform);
  CHECK(design.convex_hull);
  CHECK(design.post_spread == doctest::Approx(2.0));
  CHECK(design.seed == 321);
}
