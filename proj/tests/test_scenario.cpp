#include <doctest.h>

#include <cmath>
#include <sstream>

#include "impulsim/scenario.hpp"

using namespace impulsim;

namespace {

const char* kMinimal = R"RAW(
[dynamics]
n = 1
m = 1
g1 = "1"

[input]
a = 0
b = 1
segment1 = "0.25"

[initial]
x = 0
)RAW";

}  // namespace

TEST_CASE("minimal scenario gets defaults") {
  const Scenario sc = parse_scenario(kMinimal, "minimal");
  CHECK(sc.n == 1);
  CHECK(sc.m == 1);
  CHECK(sc.l == 0);
  CHECK(sc.f_src.size() == 1);      // defaults to zero drift
  CHECK(sc.step == 1e-4);
  CHECK(sc.grid == 16385);
  CHECK_FALSE(sc.family);
  const auto u = sc.make_input();
  CHECK(u->eval(0.5)[0] == 0.25);
  const Dynamics dyn = sc.make_dynamics();
  CHECK(dyn.drift.dim() == 1);
}

TEST_CASE("g fields referencing u are rejected") {
  const char* text = R"RAW(
[dynamics]
n = 1
m = 1
g1 = "u1"

[input]
a = 0
b = 1
segment1 = "0"

[initial]
x = 0
)RAW";
  CHECK_THROWS_AS((void)parse_scenario(text, "bad"), ScenarioError);
}

TEST_CASE("diagnostics carry line numbers and field names") {
  const char* text = R"RAW(
[dynamics]
n = 1
m = 1
g1 = "1"
bogus = 3

[input]
a = 0
b = 1
segment1 = "0"

[initial]
x = 0
)RAW";
  try {
    (void)parse_scenario(text, "diag");
    FAIL("expected a scenario error");
  } catch (const ScenarioError& e) {
    CHECK(e.line() == 6);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
}

TEST_CASE("syntax errors name the offending line") {
  CHECK_THROWS_AS((void)parse_scenario("[dynamics\nn = 1", "x"), ScenarioError);
  CHECK_THROWS_AS((void)parse_scenario("n = 1", "x"), ScenarioError);
  CHECK_THROWS_AS((void)parse_scenario("[dynamics]\nn 1", "x"), ScenarioError);
  CHECK_THROWS_AS((void)parse_scenario("[bogus_section]\nn = 1", "x"), ScenarioError);
}

TEST_CASE("jump syntax and bridge overrides parse") {
  const char* text = R"RAW(
[dynamics]
n = 2
m = 2
g1 = "1", "0"
g2 = "0", "x1"

[control_set]
kind = box
lower = -1, -1
upper = 2, 2
whitney = 2

[input]
a = 0
b = 1
breakpoints = 0, 0.5, 1
segment1 = "0", "0"
segment2 = "1", "1"
jump2 = (0,0) -> (1,1) -> (1,1)

[initial]
x = 0, 0

[bridges]
jump2_minus = (0,0), (1,0), (1,1)
)RAW";
  const Scenario sc = parse_scenario(text, "jumps");
  const auto u = sc.make_input();
  CHECK(u->has_jumps());
  const auto [l, r] = u->one_sided_limits(0.5);
  CHECK(l[0] == 0.0);
  CHECK(r[0] == 1.0);
  REQUIRE(sc.bridges.count(1) == 1);
  REQUIRE(sc.bridges.at(1).minus.has_value());
  CHECK(sc.bridges.at(1).minus->length() == doctest::Approx(2.0));
}

TEST_CASE("discontinuous segments without a jump entry are rejected") {
  const char* text = R"RAW(
[dynamics]
n = 1
m = 1
g1 = "1"

[input]
a = 0
b = 1
breakpoints = 0, 0.5, 1
segment1 = "0"
segment2 = "1"

[initial]
x = 0
)RAW";
  const Scenario sc = parse_scenario(text, "nojump");
  CHECK_THROWS_AS((void)sc.make_input(), ConfigError);
}

TEST_CASE("family scenarios need k at instantiation") {
  const Scenario sc = builtin_scenario("ex21");
  CHECK(sc.family);
  CHECK_THROWS_AS((void)sc.make_input(), ConfigError);
  const auto u = sc.make_input(4.0);
  const Vec v = u->eval(0.3);
  CHECK(v[0] == doctest::Approx((std::cos(1.2) - 1.0) / 2.0));
  CHECK(v[2] == doctest::Approx(0.3));
}

TEST_CASE("builtin scenarios validate and instantiate") {
  for (const std::string& name : builtin_scenario_names()) {
    CAPTURE(name);
    const Scenario sc = builtin_scenario(name);
    CHECK(sc.name == name);
    const Dynamics dyn = sc.make_dynamics();
    CHECK(dyn.n == sc.n);
    if (!sc.family) CHECK_NOTHROW((void)sc.make_input());
    CHECK_FALSE(sc.ks.empty());
  }
  CHECK(is_builtin_scenario("ex21"));
  CHECK_FALSE(is_builtin_scenario("nonsense"));
  CHECK_THROWS_AS((void)builtin_scenario("nonsense"), ConfigError);
  CHECK_THROWS_AS((void)load_scenario("/nonexistent/file.scn"), ConfigError);
}

TEST_CASE("ex21 target pair and cost block") {
  const Scenario sc = builtin_scenario("ex21");
  REQUIRE(sc.has_target());
  const ControlTrajectoryPair target = sc.make_target_pair();
  const Vec xt = target.x(0.3);
  CHECK(xt[2] == doctest::Approx(0.7));
  CHECK(xt[3] == doctest::Approx(std::exp(0.3)));
  REQUIRE(sc.has_cost());
  const auto phi = sc.make_cost_phi();
  CHECK(phi(0.4) == 0.4);
  CHECK(sc.cost_times == std::vector<double>{0.5, 1.0});
}

TEST_CASE("sample-table segments parse") {
  const char* text = R"RAW(
[dynamics]
n = 1
m = 2
g1 = "1"
g2 = "0"

[control_set]
kind = box
lower = -1, -1
upper = 1, 1

[input]
a = 0
b = 1
segment1 = samples: 0:(0,0), 0.5:(0.5,-0.5), 1:(0,0)

[initial]
x = 0
)RAW";
  const Scenario sc = parse_scenario(text, "samples");
  const auto u = sc.make_input();
  CHECK(u->eval(0.25)[0] == doctest::Approx(0.25));
  CHECK(u->eval(0.25)[1] == doctest::Approx(-0.25));
  CHECK(u->total_variation() == doctest::Approx(2.0 * std::hypot(0.5, 0.5)));
}

TEST_CASE("sweep validation") {
  std::string text(kMinimal);
  text += "\n[sweep]\nks = 8, 4\n";
  CHECK_THROWS_AS((void)parse_scenario(text, "x"), ScenarioError);
  std::string text2(kMinimal);
  text2 += "\n[sweep]\ntaus = 2.5\n";
  CHECK_THROWS_AS((void)parse_scenario(text2, "x"), ScenarioError);
  std::string text3(kMinimal);
  text3 += "\n[sweep]\nsupport = 1.5\n";
  CHECK_THROWS_AS((void)parse_scenario(text3, "x"), ScenarioError);
}

TEST_CASE("v block round-trips into a sampled control") {
  const char* text = R"RAW(
[dynamics]
n = 1
m = 1
l = 1
f = "v1"
g1 = "1"

[input]
a = 0
b = 1
segment1 = "0"

[v]
samples = (0.5), (1.5)
lower = 0
upper = 2

[initial]
x = 0
)RAW";
  const Scenario sc = parse_scenario(text, "v");
  const auto v = sc.make_v();
  REQUIRE(v.has_value());
  CHECK(v->eval(0.25)[0] == 1.5);  // right-node sample on (0, 1]
  CHECK(v->eval(0.0)[0] == 0.5);
}
