#include <doctest.h>

#include "obsbandit/config.hpp"

using namespace obsbandit;

TEST_CASE("empty input yields the defaults") {
  const auto resolved = config::parse("");
  CHECK(resolved == config::Resolved{});
  CHECK(resolved.experiment.n_arms_sweep == std::vector<long>{10, 20, 50});
  CHECK(resolved.experiment.d_y_sweep == std::vector<long>{5, 20, 50});
  CHECK(resolved.experiment.d_x == 20);
  CHECK(resolved.experiment.horizon == 2000);
  CHECK(resolved.experiment.repetitions == 100);
}

TEST_CASE("parsing a full document") {
  const std::string text = R"(
# comment line
[sweep]
n_arms = 3, 4
d_y = 2
d_x = 5

[run]
horizon = 100
repetitions = 7
delta = 0.1
seed = 99
retain_traces = true

[instance]
gamma_r = 0.5
sigma_y = 1 0 0 1   # identity

[verify]
lambda_t = 0.125

[output]
dir = results
)";
  const auto r = config::parse(text);
  CHECK(r.experiment.n_arms_sweep == std::vector<long>{3, 4});
  CHECK(r.experiment.d_y_sweep == std::vector<long>{2});
  CHECK(r.experiment.d_x == 5);
  CHECK(r.experiment.horizon == 100);
  CHECK(r.experiment.repetitions == 7);
  CHECK(r.experiment.delta == 0.1);
  CHECK(r.experiment.master_seed == 99);
  CHECK(r.experiment.retain_traces);
  CHECK(r.experiment.gamma_r == 0.5);
  CHECK(r.experiment.sigma_y_override ==
        std::vector<double>{1.0, 0.0, 0.0, 1.0});
  CHECK(r.verify.lambda_t == 0.125);
  CHECK(r.output.dir == "results");
}

TEST_CASE("unknown keys and sections are hard errors") {
  CHECK_THROWS_AS(config::parse("[instance]\nsigma_z = 1\n"), ConfigError);
  CHECK_THROWS_AS(config::parse("[nosuch]\nkey = 1\n"), ConfigError);
  CHECK_THROWS_AS(config::parse("key = 1\n"), ConfigError);  // before section
  CHECK_THROWS_AS(config::parse("[run]\nhorizon = abc\n"), ConfigError);
  CHECK_THROWS_AS(config::parse("[run]\nretain_traces = maybe\n"), ConfigError);
  CHECK_THROWS_AS(config::parse("[run]\nhorizon\n"), ConfigError);
  CHECK_THROWS_AS(config::parse("[run\nhorizon = 5\n"), ConfigError);
  CHECK_THROWS_AS(config::parse_file("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("render/parse round trip") {
  config::Resolved r;
  r.experiment.n_arms_sweep = {2, 9};
  r.experiment.d_y_sweep = {4};
  r.experiment.d_x = 3;
  r.experiment.horizon = 321;
  r.experiment.repetitions = 13;
  r.experiment.delta = 0.0625;
  r.experiment.master_seed = 0xDEADBEEFull;
  r.experiment.gamma_r = 1.75;
  r.experiment.percentile = 0.8;
  r.experiment.t_eff = 17;
  r.experiment.retain_traces = true;
  r.experiment.redraw_instances = false;
  r.experiment.threads = 3;
  r.experiment.sigma_y_override = {2.0, 0.5, 0.5, 2.0};
  r.experiment.mu_star_override = {1.0, -2.0, 0.3333333333333333};
  r.verify.n_arms = 7;
  r.verify.lambda_t = 0.0078125;
  r.verify.target_scale = 36.0;
  r.output.dir = "elsewhere";
  r.output.traces = "t.csv";

  const auto round_tripped = config::parse(config::render(r));
  CHECK(round_tripped == r);
}

TEST_CASE("fingerprint is stable and sensitive") {
  config::Resolved a, b;
  CHECK(config::fingerprint(a) == config::fingerprint(b));
  b.experiment.master_seed += 1;
  CHECK(config::fingerprint(a) != config::fingerprint(b));
  CHECK(config::fingerprint(a).size() == 16);
}
