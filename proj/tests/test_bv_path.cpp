#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "impulsim/bv_path.hpp"

using namespace impulsim;

namespace {

const ExprDims kTOnly{0, 0, 0, true, false};

BVPath scalar_step(double at_value = 1.0) {
  const ControlSet U = ControlSet::box({-0.5}, {1.5});
  std::vector<PathSegment> segs;
  segs.push_back(PathSegment::expressions({Expr::literal(0.0)}));
  segs.push_back(PathSegment::expressions({Expr::literal(1.0)}));
  std::vector<JumpTriple> jumps = {
      {{0.0}, {0.0}, {0.0}}, {{0.0}, {at_value}, {1.0}}, {{1.0}, {1.0}, {1.0}}};
  return BVPath(0.0, 1.0, {0.0, 0.5, 1.0}, std::move(segs), std::move(jumps), U);
}

// Random continuous piecewise-linear path for property checks.
BVPath random_pl_path(std::mt19937_64& rng, int dim) {
  std::uniform_int_distribution<int> nknots(3, 9);
  std::uniform_real_distribution<double> val(-0.9, 0.9);
  const int K = nknots(rng);
  std::vector<double> ts;
  std::vector<Vec> vals;
  for (int i = 0; i < K; ++i) {
    ts.push_back(static_cast<double>(i) / (K - 1));
    Vec v(static_cast<std::size_t>(dim));
    for (double& c : v) c = val(rng);
    vals.push_back(std::move(v));
  }
  const ControlSet U = ControlSet::box(Vec(static_cast<std::size_t>(dim), -1.0),
                                       Vec(static_cast<std::size_t>(dim), 1.0));
  return BVPath::from_samples(0.0, 1.0, std::move(ts), std::move(vals), U);
}

}  // namespace

TEST_CASE("constant path evaluates to the constant") {
  const ControlSet U = ControlSet::box({-1, -1}, {1, 1});
  const BVPath p = BVPath::from_expressions(
      0.0, 2.0, {Expr::literal(0.25), Expr::literal(-0.5)}, U);
  for (double t : {0.0, 0.3, 1.0, 2.0}) {
    const Vec v = p.eval(t);
    CHECK(v[0] == 0.25);
    CHECK(v[1] == -0.5);
  }
  CHECK(p.total_variation() == 0.0);
  CHECK_FALSE(p.has_jumps());
}

TEST_CASE("step path: at-value convention and one-sided limits") {
  const BVPath p = scalar_step(1.0);
  CHECK(p.eval(0.5)[0] == 1.0);  // at-value wins at the breakpoint
  CHECK(p.eval(0.25)[0] == 0.0);
  CHECK(p.eval(0.75)[0] == 1.0);
  const auto [l, r] = p.one_sided_limits(0.5);
  CHECK(l[0] == 0.0);
  CHECK(r[0] == 1.0);
  // Continuity points: both limits equal the value.
  const auto [lc, rc] = p.one_sided_limits(0.3);
  CHECK(lc[0] == 0.0);
  CHECK(rc[0] == 0.0);
  // Boundary convention: left limit at a and right limit at b equal eval.
  CHECK(p.one_sided_limits(0.0).first[0] == p.eval(0.0)[0]);
  CHECK(p.one_sided_limits(1.0).second[0] == p.eval(1.0)[0]);
  CHECK(p.has_jumps());
}

TEST_CASE("two-sided jump stores the full triple") {
  const ControlSet U = ControlSet::box({-0.5}, {1.5});
  std::vector<PathSegment> segs;
  segs.push_back(PathSegment::expressions({Expr::literal(0.0)}));
  segs.push_back(PathSegment::expressions({Expr::literal(1.0)}));
  std::vector<JumpTriple> jumps = {
      {{0.0}, {0.0}, {0.0}}, {{0.0}, {0.5}, {1.0}}, {{1.0}, {1.0}, {1.0}}};
  const BVPath p(0.0, 1.0, {0.0, 0.5, 1.0}, std::move(segs), std::move(jumps), U);
  const auto [l, r] = p.one_sided_limits(0.5);
  CHECK(l[0] == 0.0);
  CHECK(r[0] == 1.0);
  CHECK(p.eval(0.5)[0] == 0.5);
  // Both jump legs count once t passes the breakpoint.
  CHECK(p.variation(0.5) == 0.5);
  CHECK(p.variation(0.6) == 1.0);
}

TEST_CASE("oscillating-family control evaluates pointwise") {
  const ControlSet U = ControlSet::box({-1, -1, -1}, {1, 1, 1});
  std::vector<Expr> comps = {Expr::literal(0.0), Expr::literal(0.0),
                             parse_expression("t", kTOnly)};
  const BVPath p = BVPath::from_expressions(0.0, 1.0, std::move(comps), U);
  const Vec v = p.eval(0.3);
  CHECK(v[0] == 0.0);
  CHECK(v[1] == 0.0);
  CHECK(v[2] == 0.3);
}

TEST_CASE("variation of the scalar step by direct jump sum") {
  const BVPath p = scalar_step(1.0);
  CHECK(p.variation(0.4) == 0.0);
  CHECK(p.variation(0.5) == 1.0);  // left jump counted at t_i
  CHECK(p.variation(0.6) == 1.0);
  CHECK(p.total_variation() == 1.0);
  CHECK(p.variation(0.0) == 0.0);
}

TEST_CASE("variation of sin(2*pi*t) is 4") {
  const ControlSet U = ControlSet::box({-1.5}, {1.5});
  const Expr e = parse_expression("sin(6.283185307179586*t)", kTOnly);
  const BVPath p = BVPath::from_expressions(0.0, 1.0, {e}, U);
  // Independent oracle: chord sum over a fine partition converges to the
  // analytic total 4 from below.
  double oracle = 0.0;
  const int N = 1 << 21;
  double prev = 0.0;
  for (int i = 1; i <= N; ++i) {
    const double t = static_cast<double>(i) / N;
    const double cur = std::sin(2.0 * M_PI * t);
    oracle += std::abs(cur - prev);
    prev = cur;
  }
  CHECK(oracle == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(p.total_variation() == doctest::Approx(4.0).epsilon(1e-8));
  CHECK(std::abs(p.total_variation() - 4.0) <= 1e-8);
}

TEST_CASE("variation is nondecreasing and bounds the jump triangle") {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 10; ++rep) {
    const BVPath p = random_pl_path(rng, 2);
    double prev = -1.0;
    for (int i = 0; i <= 50; ++i) {
      const double t = i / 50.0;
      const double v = p.variation(t);
      CHECK(v >= prev - 1e-12);
      prev = v;
      const auto [l, r] = p.one_sided_limits(t);
      const Vec mid = p.eval(t);
      CHECK(dist2(mid, l) + dist2(r, mid) <= p.total_variation() + 1e-12);
    }
  }
}

TEST_CASE("reversal preserves total variation") {
  std::mt19937_64 rng(1234);
  for (int rep = 0; rep < 10; ++rep) {
    std::uniform_int_distribution<int> nknots(3, 9);
    std::uniform_real_distribution<double> val(-0.9, 0.9);
    const int K = nknots(rng);
    std::vector<double> ts;
    std::vector<Vec> vals;
    for (int i = 0; i < K; ++i) {
      ts.push_back(static_cast<double>(i) / (K - 1));
      vals.push_back({val(rng), val(rng)});
    }
    const ControlSet U = ControlSet::box({-1, -1}, {1, 1});
    const BVPath fwd = BVPath::from_samples(0.0, 1.0, ts, vals, U);
    std::vector<double> rts;
    std::vector<Vec> rvals;
    for (int i = K - 1; i >= 0; --i) {
      rts.push_back(1.0 - ts[static_cast<std::size_t>(i)]);
      rvals.push_back(vals[static_cast<std::size_t>(i)]);
    }
    const BVPath rev = BVPath::from_samples(0.0, 1.0, rts, rvals, U);
    CHECK(fwd.total_variation() == doctest::Approx(rev.total_variation()).epsilon(1e-12));
  }
}

TEST_CASE("all outputs are members of the control set") {
  std::mt19937_64 rng(99);
  const BVPath p = random_pl_path(rng, 3);
  const ControlSet& U = p.control_set();
  for (int i = 0; i <= 40; ++i) {
    const double t = i / 40.0;
    CHECK(U.contains(p.eval(t), 1e-9));
    const auto [l, r] = p.one_sided_limits(t);
    CHECK(U.contains(l, 1e-9));
    CHECK(U.contains(r, 1e-9));
  }
}

TEST_CASE("domain errors outside [a,b]") {
  const BVPath p = scalar_step();
  CHECK_THROWS_AS((void)p.eval(-0.1), DomainError);
  CHECK_THROWS_AS((void)p.eval(1.1), DomainError);
  CHECK_THROWS_AS((void)p.variation(2.0), DomainError);
  CHECK_THROWS_AS((void)p.one_sided_limits(-1.0), DomainError);
}

TEST_CASE("construction rejects inconsistent data") {
  const ControlSet U = ControlSet::box({-0.5}, {1.5});
  // Segment endpoint does not match the declared jump triple.
  std::vector<PathSegment> segs;
  segs.push_back(PathSegment::expressions({Expr::literal(0.0)}));
  segs.push_back(PathSegment::expressions({Expr::literal(1.0)}));
  std::vector<JumpTriple> bad = {
      {{0.0}, {0.0}, {0.0}}, {{0.3}, {1.0}, {1.0}}, {{1.0}, {1.0}, {1.0}}};
  CHECK_THROWS_AS(BVPath(0.0, 1.0, {0.0, 0.5, 1.0}, std::move(segs), std::move(bad), U),
                  ConfigError);

  // Values outside U.
  CHECK_THROWS_AS(BVPath::from_expressions(0.0, 1.0, {Expr::literal(7.0)}, U),
                  ConfigError);

  // Breakpoints must increase.
  std::vector<PathSegment> segs2;
  segs2.push_back(PathSegment::expressions({Expr::literal(0.0)}));
  segs2.push_back(PathSegment::expressions({Expr::literal(0.0)}));
  std::vector<JumpTriple> jumps2(3, JumpTriple{{0.0}, {0.0}, {0.0}});
  CHECK_THROWS_AS(BVPath(0.0, 1.0, {0.0, 0.6, 0.4}, std::move(segs2), std::move(jumps2), U),
                  ConfigError);

  // k must be substituted before a segment is built.
  const Expr with_k = parse_expression("k*t", ExprDims{0, 0, 0, true, true});
  CHECK_THROWS_AS((void)PathSegment::expressions({with_k}), ConfigError);
}

TEST_CASE("variation refinement that cannot settle is a computation error") {
  // Finite but enormous variation: the dyadic refinement hits its cell cap
  // long before the estimate stabilizes.
  const ControlSet U = ControlSet::box({-1.5}, {1.5});
  const Expr osc = parse_expression("sin(1/(t+0.00001))", kTOnly);
  BVPath::Options opts;
  opts.variation_max_cells = 1 << 12;
  CHECK_THROWS_AS(BVPath::from_expressions(0.0, 1.0, {osc}, U, opts),
                  ComputationError);
}

TEST_CASE("hull control sets accept interior points and reject exterior ones") {
  const ControlSet tri = ControlSet::hull({{0, 0}, {1, 0}, {0, 1}});
  CHECK(tri.contains({0.25, 0.25}));
  CHECK(tri.contains({0.0, 0.0}));
  CHECK(tri.contains({0.5, 0.5}, 1e-9));  // on the edge
  CHECK_FALSE(tri.contains({0.6, 0.6}, 1e-9));
  CHECK(tri.distance({1.0, 1.0}) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
  CHECK(tri.distance({-1.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sampled control is left-continuous piecewise constant") {
  // Samples at 0, 0.5, 1; value on (t_{j-1}, t_j] is sample j.
  const SampledControl v(0.0, 1.0, 1, {{10.0}, {20.0}, {30.0}}, {0.0}, {40.0});
  CHECK(v.eval(0.0)[0] == 10.0);
  CHECK(v.eval(0.25)[0] == 20.0);
  CHECK(v.eval(0.5)[0] == 20.0);   // left-continuous at the node
  CHECK(v.eval(0.75)[0] == 30.0);
  CHECK(v.eval(1.0)[0] == 30.0);
  CHECK_THROWS_AS((void)v.eval(1.5), DomainError);
  CHECK_THROWS_AS(SampledControl(0.0, 1.0, 1, {{99.0}}, {0.0}, {40.0}), ConfigError);
}
