#include "fracpm/config.hpp"

#include <doctest.h>

using namespace fracpm;

TEST_CASE("minimal valid config parses") {
  const char* text =
      "[domain]\n"
      "dimension = 1\n"
      "resolution = 100\n"
      "gamma0 = left\n"
      "[operator]\n"
      "s = 0.5\n"
      "[solver]\n"
      "delta = 1e-2\n"
      "mu = 1e-2\n"
      "dt = 1e-4\n"
      "t_end = 0.1\n";
  const ParseResult r = parse_config(text);
  REQUIRE(r.ok());
  CHECK(r.config->dimension == 1);
  CHECK(r.config->resolution == 100);
  CHECK(r.config->s == 0.5);
  CHECK(r.config->solver.delta == 1e-2);
  CHECK(r.config->solver.t_end == 0.1);
}

TEST_CASE("s out of range is rejected with its line number") {
  const ParseResult r = parse_config("[operator]\ns = 1.5\n");
  REQUIRE(!r.ok());
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].line == 2);
  CHECK(r.errors[0].message.find("s must lie in (0,1)") != std::string::npos);
}

TEST_CASE("missing solver section falls back to defaults") {
  const ParseResult r = parse_config("[domain]\ndimension = 1\nresolution = 50\ngamma0 = left\n");
  REQUIRE(r.ok());
  CHECK(r.config->solver.dt == 1e-4);
  CHECK(r.config->solver.delta == 1e-2);
  CHECK(r.config->solver.mu == 1e-2);
  CHECK(r.config->solver.adapt);
  // defaults are echoed through serialization
  CHECK(r.config->serialize().find("dt = 0.0001") != std::string::npos);
}

TEST_CASE("all violations are reported, each with a line") {
  const char* text =
      "[domain]\n"
      "dimension = 7\n"
      "resolution = 2\n"
      "gamma0 = middle\n"
      "mystery = 1\n"
      "[solver]\n"
      "dt = -1\n";
  const ParseResult r = parse_config(text);
  REQUIRE(!r.ok());
  CHECK(r.errors.size() >= 5);
  CHECK(r.errors[0].line == 2);
}

TEST_CASE("config round-trips through serialize/parse losslessly") {
  const char* text =
      "[domain]\n"
      "dimension = 2\n"
      "resolution = 24\n"
      "gamma0 = left,bottom\n"
      "coefficient = diagonal:2,0.5\n"
      "[operator]\n"
      "s = 0.75\n"
      "mass_mode = consistent\n"
      "[solver]\n"
      "delta = 0.05\n"
      "mu = 0.003\n"
      "dt = 2e-4\n"
      "t_end = 0.02\n"
      "picard_iters = 3\n"
      "adapt = off\n"
      "initial = bump\n"
      "[sweep]\n"
      "delta_grid = 1e-1,5e-2\n"
      "mu_grid = 1e-2,5e-3\n"
      "[output]\n"
      "directory = results\n"
      "snapshots = 0.01,0.02\n";
  const ParseResult first = parse_config(text);
  REQUIRE(first.ok());
  const std::string canonical = first.config->serialize();
  const ParseResult second = parse_config(canonical);
  REQUIRE(second.ok());
  CHECK(second.config->serialize() == canonical);
  CHECK(second.config->hash() == first.config->hash());
}

TEST_CASE("cross-field violations: 2D sides in 1D, snapshots past t_end") {
  const ParseResult r = parse_config(
      "[domain]\ndimension = 1\nresolution = 50\ngamma0 = top\n"
      "[output]\nsnapshots = 5.0\n");
  REQUIRE(!r.ok());
  CHECK(r.errors.size() >= 2);
}

TEST_CASE("delta = 0 requires the replay flag and Picard") {
  const ParseResult bad = parse_config("[solver]\ndelta = 0\n");
  CHECK(!bad.ok());
  const ParseResult good =
      parse_config("[solver]\ndelta = 0\nlimit_replay = on\npicard_iters = 2\n");
  CHECK(good.ok());
}

TEST_CASE("coefficient specs parse and build") {
  for (const char* spec : {"identity", "diagonal:2,0.5", "full:2,0.25,1", "affine:1,1"}) {
    auto parsed = CoefficientSpec::parse(spec);
    REQUIRE(parsed.has_value());
    CHECK(CoefficientSpec::parse(parsed->to_string()).has_value());
  }
  CHECK(!CoefficientSpec::parse("diag(2)").has_value());
  CHECK(!CoefficientSpec::parse("full:1,2").has_value());

  const auto affine = CoefficientSpec::parse("affine:1,1");
  Eigen::Vector2d x(0.25, 0.0);
  CHECK(affine->to_fn()(x)(0, 0) == doctest::Approx(1.25));
}

TEST_CASE("sweep grids must decrease strictly") {
  const ParseResult r = parse_config("[sweep]\ndelta_grid = 1e-2,1e-2\n");
  REQUIRE(!r.ok());
  CHECK(r.errors[0].message.find("strictly decreasing") != std::string::npos);
}
