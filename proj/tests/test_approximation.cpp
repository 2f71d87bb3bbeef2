#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "impulsim/approximation.hpp"
#include "impulsim/scenario.hpp"

using namespace impulsim;

namespace {

const ExprDims kTOnly{0, 0, 0, true, false};

std::shared_ptr<const BVPath> scalar_step(double at_value) {
  const ControlSet U = ControlSet::box({-0.5}, {1.5});
  std::vector<PathSegment> segs;
  segs.push_back(PathSegment::expressions({Expr::literal(0.0)}));
  segs.push_back(PathSegment::expressions({Expr::literal(1.0)}));
  std::vector<JumpTriple> jumps = {
      {{0.0}, {0.0}, {0.0}}, {{0.0}, {at_value}, {1.0}}, {{1.0}, {1.0}, {1.0}}};
  return std::make_shared<const BVPath>(
      BVPath(0.0, 1.0, {0.0, 0.5, 1.0}, std::move(segs), std::move(jumps), U));
}

std::shared_ptr<const BVPath> ramp_path() {
  const ControlSet U = ControlSet::box({-0.5}, {1.5});
  return std::make_shared<const BVPath>(
      BVPath::from_expressions(0.0, 1.0, {parse_expression("t", kTOnly)}, U));
}

double l1_distance(const SmoothClock& shat, const Clock& sigma, int grid = 20001) {
  double acc = 0.0;
  double prev = std::abs(shat.value(0.0) - sigma(0.0));
  for (int i = 1; i < grid; ++i) {
    const double t = static_cast<double>(i) / (grid - 1);
    const double cur = std::abs(shat.value(t) - sigma(t));
    acc += 0.5 * (prev + cur) / (grid - 1);
    prev = cur;
  }
  return acc;
}

}  // namespace

TEST_CASE("mollifier kernel basics") {
  const MollifierKernel kernel = MollifierKernel::standard(1.0);
  CHECK(std::abs(kernel.mass() - 1.0) <= 1e-10);
  CHECK(kernel.profile(0.0) > 0.0);
  CHECK(kernel.profile(1.0) == 0.0);
  CHECK(kernel.profile(-1.0) == 0.0);
  // Even profile, unit cumulative, even first-moment cumulative.
  for (double th : {0.1, 0.35, 0.8}) {
    CHECK(kernel.profile(th) == kernel.profile(-th));
    CHECK(kernel.cumulative(th) + kernel.cumulative(-th) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(kernel.moment_cumulative(th) ==
          doctest::Approx(kernel.moment_cumulative(-th)).epsilon(1e-12));
    CHECK(kernel.profile(th) >= 0.0);
  }
  CHECK(kernel.cumulative(1.0) == 1.0);
  CHECK(kernel.cumulative(-1.0) == 0.0);
  CHECK(kernel.moment_cumulative(1.0) == 0.0);
  CHECK_THROWS_AS((void)MollifierKernel::standard(0.0), ConfigError);
}

TEST_CASE("identity clock is a fixed point of mollification") {
  const ControlSet U = ControlSet::box({-1.0}, {1.0});
  auto u = std::make_shared<const BVPath>(
      BVPath::from_expressions(0.0, 1.0, {Expr::literal(0.0)}, U));
  const Clock sigma = canonical_clock(u);
  const MollifierKernel kernel = MollifierKernel::standard(1.0);
  for (int k : {1, 8, 128}) {
    const SmoothClock shat = mollify_clock(sigma, k, kernel);
    for (std::size_t i = 0; i < shat.t_grid().size(); ++i)
      CHECK(std::abs(shat.values()[i] - shat.t_grid()[i]) <= 1e-12);
    CHECK(std::abs(shat.value(0.0)) <= 1e-12);
    CHECK(std::abs(shat.value(1.0) - 1.0) <= 1e-12);
  }
}

TEST_CASE("mollified step clock obeys the midpoint law and converges in L1") {
  auto u = scalar_step(1.0);
  const Clock sigma = canonical_clock(u);
  const MollifierKernel kernel = MollifierKernel::standard(1.0);
  // Jump of sigma at 0.5 goes from 0.25 to 0.75.
  const auto& row = sigma.jump_rows()[1];
  CHECK(row.s_minus == 0.25);
  CHECK(row.s_plus == 0.75);
  double prev_mid_err = 1e9, prev_l1 = 1e9;
  for (int k : {8, 32, 128}) {
    const SmoothClock shat = mollify_clock(sigma, k, kernel);
    const double mid_err = std::abs(shat.value(0.5) - 0.5);
    const double l1 = l1_distance(shat, sigma);
    CHECK(mid_err < prev_mid_err + 1e-15);
    CHECK(l1 < prev_l1);
    prev_mid_err = mid_err;
    prev_l1 = l1;
    // Boundary values and the slope bound.
    CHECK(std::abs(shat.value(0.0)) <= 1e-8);
    CHECK(std::abs(shat.value(1.0) - 1.0) <= 1e-8);
    const auto& tg = shat.t_grid();
    const auto& vals = shat.values();
    const double L = sigma.slope_bound();
    for (std::size_t i = 1; i < tg.size(); ++i) {
      const double dt = tg[i] - tg[i - 1];
      if (dt <= 0.0) continue;
      CHECK(vals[i] - vals[i - 1] >= dt / L - 1e-9);
    }
  }
  CHECK(prev_l1 <= 2e-3);
}

TEST_CASE("mollify validates its preconditions") {
  auto u = scalar_step(1.0);
  const Clock sigma = canonical_clock(u);
  CHECK_THROWS_AS((void)mollify_clock(sigma, 0, MollifierKernel::standard(1.0)),
                  PreconditionError);
  CHECK_THROWS_AS((void)mollify_clock(sigma, 4, MollifierKernel::standard(1.5)),
                  PreconditionError);  // support exceeds b - a
}

TEST_CASE("fixup without jumps returns the mollified clock unchanged") {
  auto u = ramp_path();
  const Clock sigma = canonical_clock(u);
  const MollifierKernel kernel = MollifierKernel::standard(1.0);
  const SmoothClock shat = mollify_clock(sigma, 16, kernel);
  const SmoothClock sk = fixup_clock(shat, sigma);
  CHECK(sk.surgeries().empty());
  for (double t : {0.0, 0.31, 0.5, 0.77, 1.0})
    CHECK(sk.value(t) == shat.value(t));
}

TEST_CASE("fixup hits an interior at-value exactly once active") {
  auto u = scalar_step(0.5);  // sigma(t_i) strictly inside the jump interval
  const Clock sigma = canonical_clock(u);
  const MollifierKernel kernel = MollifierKernel::standard(1.0);
  const auto& row = sigma.jump_rows()[1];
  CHECK(row.s_minus < row.s_at);
  CHECK(row.s_at < row.s_plus);
  for (int k : {8, 32, 128}) {
    const SmoothClock sk = fixup_clock(mollify_clock(sigma, k, kernel), sigma);
    REQUIRE(sk.surgeries().size() == 1);
    if (sk.surgeries()[0].applied) {
      CHECK(sk.value(row.t) == row.s_at);
      // Inverse returns the jump time across the whole surgery interval.
      CHECK(sk.inverse(row.s_at) == doctest::Approx(row.t).epsilon(1e-12));
    }
  }
  // At k = 128 the surgery is certainly active.
  const SmoothClock sk = fixup_clock(mollify_clock(sigma, 128, kernel), sigma);
  CHECK(sk.surgeries()[0].applied);
  CHECK(std::abs(sk.value(row.t) - row.s_at) <= 1e-3);
}

TEST_CASE("fixup converges in the boundary at-value case") {
  auto u = scalar_step(1.0);  // sigma(t_i) equals the right end of the interval
  const Clock sigma = canonical_clock(u);
  const MollifierKernel kernel = MollifierKernel::standard(1.0);
  const auto& row = sigma.jump_rows()[1];
  CHECK(row.s_at == row.s_plus);
  double prev = 1e9;
  for (int k : {8, 32, 128}) {
    const SmoothClock sk = fixup_clock(mollify_clock(sigma, k, kernel), sigma);
    const double err = std::abs(sk.value(row.t) - row.s_at);
    CHECK(err < prev);
    prev = err;
    // The inverse maps stay equi-Lipschitz.
    const double L = sigma.slope_bound();
    const auto& tg = sk.t_grid();
    const auto& vals = sk.values();
    for (std::size_t i = 1; i < tg.size(); ++i) {
      const double dt = tg[i] - tg[i - 1];
      const double ds = vals[i] - vals[i - 1];
      if (ds <= 0.0) continue;
      CHECK(dt / ds <= L * (1.0 + 1e-6));
    }
  }
  CHECK(prev <= 5e-3);
}

TEST_CASE("approximating sequence: constant-speed ramp reduces to solver error") {
  // u(t) = t makes the canonical clock the identity, so the surgery is empty
  // and u_k == u up to quadrature noise.
  auto u = ramp_path();
  const GraphCompletion gc = build_completion(u);
  Dynamics dyn;
  dyn.n = 1;
  dyn.m = 1;
  dyn.drift = VectorField({Expr::literal(0.0)});
  dyn.g.push_back(VectorField({parse_expression("x1", ExprDims{1, 0, 0, false, false})}));
  ApproxOptions opts;
  opts.report_grid = 2001;
  const auto steps = approximating_sequence(gc, dyn, nullptr, {1.0}, {8, 128}, opts);
  auto y = std::make_shared<const SpaceTimePath>(
      integrate_spacetime(gc, dyn, nullptr, {1.0}, opts.step));
  const Trajectory x = gc_solution(y, gc.clock());
  // The clock here is affine, so every k in the sweep is already exact up to
  // solver tolerance, not just the largest.
  for (const auto& st : steps) {
    double worst_u = 0.0, worst_x = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const double t = i / 100.0;
      worst_u = std::max(worst_u, std::abs(st.u_k->eval(t)[0] - u->eval(t)[0]));
      worst_x = std::max(worst_x, dist2(st.x_k.eval(t), x.eval(t)));
    }
    CHECK(worst_u <= 1e-6);
    CHECK(worst_x <= 1e-6);
  }
}

TEST_CASE("approximating sequence validates its k list") {
  auto u = ramp_path();
  const GraphCompletion gc = build_completion(u);
  Dynamics dyn;
  dyn.n = 1;
  dyn.m = 1;
  dyn.drift = VectorField({Expr::literal(0.0)});
  dyn.g.push_back(VectorField({Expr::literal(1.0)}));
  CHECK_THROWS_AS((void)approximating_sequence(gc, dyn, nullptr, {0.0}, {}),
                  UsageError);
  CHECK_THROWS_AS((void)approximating_sequence(gc, dyn, nullptr, {0.0}, {8, 8}),
                  UsageError);
}

TEST_CASE("approximating sequence: step with linear field reaches exp(jump)") {
  auto u = scalar_step(1.0);
  const GraphCompletion gc = build_completion(u);
  Dynamics dyn;
  dyn.n = 1;
  dyn.m = 1;
  dyn.drift = VectorField({Expr::literal(0.0)});
  dyn.g.push_back(VectorField({parse_expression("x1", ExprDims{1, 0, 0, false, false})}));
  ApproxOptions opts;
  opts.report_grid = 2001;
  const auto steps = approximating_sequence(gc, dyn, nullptr, {1.0}, {8, 32, 128}, opts);
  const double var_phi = gc.control_variation();
  for (const auto& st : steps) {
    // Drift-free scalar dynamics: x_k(1) = exp(u_k(1)) = e exactly.
    CHECK(std::abs(st.x_k.eval(1.0)[0] - std::exp(1.0)) <= 1e-8);
    CHECK(st.var_uk <= var_phi + 1e-9);
    // The generated controls are AC and stay in U.
    CHECK_FALSE(st.u_k->has_jumps());
    for (int i = 0; i <= 50; ++i)
      CHECK(u->control_set().contains(st.u_k->eval(i / 50.0), 1e-7));
  }
}

TEST_CASE("limit error functional") {
  ControlTrajectoryPair target;
  target.a = 0.0;
  target.b = 1.0;
  target.m = 1;
  target.n = 1;
  target.u = [](double t) { return Vec{t}; };
  target.x = [](double t) { return Vec{2.0 * t}; };

  SUBCASE("identical pair gives zero") {
    CHECK(limit_error(target, target, 0.5) == 0.0);
  }
  SUBCASE("constant shift has the closed-form value") {
    const double delta = 0.125;
    ControlTrajectoryPair cand = target;
    cand.u = [delta](double t) { return Vec{t + delta}; };
    // x identical, u shifted: pointwise delta plus L1 delta*(b-a).
    CHECK(limit_error(target, cand, 0.7) ==
          doctest::Approx(delta * (1.0 + 1.0)).epsilon(1e-12));
  }
  SUBCASE("interval mismatch is a usage error") {
    ControlTrajectoryPair other = target;
    other.b = 2.0;
    CHECK_THROWS_AS((void)limit_error(target, other, 0.5), UsageError);
  }
  SUBCASE("family errors decrease along the sweep") {
    const Scenario sc = builtin_scenario("ex21");
    const Dynamics dyn = sc.make_dynamics();
    const ControlTrajectoryPair tgt = sc.make_target_pair();
    BVPath::Options relaxed;
    relaxed.variation_rel_tol = 1e-7;
    double prev = 1e9;
    for (double k : {100.0, 400.0}) {
      const auto u_k = sc.make_input(k, relaxed);
      const Trajectory x_k = integrate_caratheodory(dyn, *u_k, nullptr, sc.x0, 1e-3);
      ControlTrajectoryPair cand = tgt;
      cand.u = [u_k](double t) { return u_k->eval(t); };
      cand.x = [&x_k](double t) { return x_k.eval(t); };
      const double err = limit_error(tgt, cand, 1.0, 2001);
      CHECK(err > 0.0);
      CHECK(err < prev);
      prev = err;
    }
  }
}

TEST_CASE("lie brackets") {
  const ExprDims d2{2, 0, 0, false, false};
  const VectorField g1({Expr::literal(1.0), Expr::literal(0.0)});
  const VectorField g2({Expr::literal(0.0), parse_expression("x1", d2)});

  SUBCASE("bracket of a field with itself vanishes") {
    const Vec b = lie_bracket(g1, g1, {0.3, -0.7});
    CHECK(b[0] == 0.0);
    CHECK(b[1] == 0.0);
  }
  SUBCASE("shear pair bracket is the unit vertical field") {
    for (const Vec& x : {Vec{0.0, 0.0}, Vec{2.0, -1.0}}) {
      const Vec b = lie_bracket(g1, g2, x);
      CHECK(b[0] == 0.0);
      CHECK(b[1] == 1.0);
    }
  }
  SUBCASE("oscillator pair bracket is (0,0,-2,0,0,0) everywhere") {
    const Scenario sc = builtin_scenario("ex21");
    const Dynamics dyn = sc.make_dynamics();
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int rep = 0; rep < 5; ++rep) {
      Vec x(6);
      for (double& c : x) c = dist(rng);
      const Vec b = lie_bracket(dyn.g[0], dyn.g[1], x);
      for (std::size_t i = 0; i < 6; ++i) CHECK(b[i] == (i == 2 ? -2.0 : 0.0));
    }
  }
  SUBCASE("antisymmetry is exact") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    const VectorField a({parse_expression("sin(x2)", d2), parse_expression("x1*x2", d2)});
    const VectorField b({parse_expression("x2^2", d2), parse_expression("exp(x1/2)", d2)});
    for (int rep = 0; rep < 10; ++rep) {
      const Vec x = {dist(rng), dist(rng)};
      const Vec ab = lie_bracket(a, b, x);
      const Vec ba = lie_bracket(b, a, x);
      for (std::size_t i = 0; i < 2; ++i) CHECK(ab[i] == -ba[i]);
    }
  }
  SUBCASE("matches finite differences") {
    const ExprDims d2f{2, 0, 0, false, false};
    const VectorField a({parse_expression("sin(x2)", d2f), parse_expression("x1*x2", d2f)});
    const VectorField b({parse_expression("x2^2", d2f), parse_expression("exp(x1/2)", d2f)});
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
      const Vec x = {dist(rng), dist(rng)};
      const Vec sym = lie_bracket(a, b, x);
      // Finite-difference Jacobian-vector products.
      const double h = 1e-5;
      auto field = [&](const VectorField& f, const Vec& p) {
        EvalEnv env;
        env.x = std::span<const double>(p.data(), p.size());
        return f.eval(env);
      };
      Vec fd(2, 0.0);
      const Vec va = field(a, x), vb = field(b, x);
      for (int j = 0; j < 2; ++j) {
        Vec xp = x, xm = x;
        xp[static_cast<std::size_t>(j)] += h;
        xm[static_cast<std::size_t>(j)] -= h;
        const Vec bp = field(b, xp), bm = field(b, xm);
        const Vec ap = field(a, xp), am = field(a, xm);
        for (int i = 0; i < 2; ++i) {
          const std::size_t ii = static_cast<std::size_t>(i);
          const std::size_t jj = static_cast<std::size_t>(j);
          fd[ii] += (bp[ii] - bm[ii]) / (2 * h) * va[jj] -
                    (ap[ii] - am[ii]) / (2 * h) * vb[jj];
        }
      }
      for (std::size_t i = 0; i < 2; ++i)
        CHECK(std::abs(sym[i] - fd[i]) <= 1e-6 * (1.0 + std::abs(sym[i])));
    }
  }
}

TEST_CASE("commutativity reports") {
  const ExprDims d2{2, 0, 0, false, false};
  SUBCASE("diagonal fields commute") {
    Dynamics dyn;
    dyn.n = 2;
    dyn.m = 2;
    dyn.drift = VectorField({Expr::literal(0.0), Expr::literal(0.0)});
    dyn.g.push_back(VectorField({parse_expression("x1", d2), Expr::literal(0.0)}));
    dyn.g.push_back(VectorField({Expr::literal(0.0), parse_expression("x2", d2)}));
    const auto report = commutativity_report(dyn, {{0.5, -0.5}, {2.0, 3.0}});
    CHECK(report.commuting);
    CHECK(report.max_norm <= 1e-9);
  }
  SUBCASE("oscillator fields witness non-commutativity") {
    const Scenario sc = builtin_scenario("ex21");
    const auto report =
        commutativity_report(sc.make_dynamics(), {Vec(6, 0.0), Vec(6, 1.0)});
    CHECK_FALSE(report.commuting);
    CHECK(report.witness_alpha == 1);
    CHECK(report.witness_beta == 2);
    CHECK(report.max_norm == doctest::Approx(2.0));
  }
  SUBCASE("a single field commutes vacuously") {
    Dynamics dyn;
    dyn.n = 1;
    dyn.m = 1;
    dyn.drift = VectorField({Expr::literal(0.0)});
    dyn.g.push_back(VectorField({parse_expression("x1", ExprDims{1, 0, 0, false, false})}));
    const auto report = commutativity_report(dyn, {{1.0}});
    CHECK(report.commuting);
    CHECK(report.pairs.empty());
  }
  SUBCASE("empty sample set is rejected") {
    Dynamics dyn;
    dyn.n = 1;
    dyn.m = 1;
    dyn.drift = VectorField({Expr::literal(0.0)});
    dyn.g.push_back(VectorField({Expr::literal(1.0)}));
    CHECK_THROWS_AS((void)commutativity_report(dyn, {}), PreconditionError);
  }
}

TEST_CASE("dependence probe") {
  Dynamics dyn;
  dyn.n = 1;
  dyn.m = 1;
  dyn.drift = VectorField({Expr::literal(0.0)});
  dyn.g.push_back(VectorField({parse_expression("x1", ExprDims{1, 0, 0, false, false})}));

  SUBCASE("identical data reports a zero ratio") {
    auto u = scalar_step(1.0);
    const auto res = dependence_probe(dyn, u, u, nullptr, {1.0}, {1.0}, {0.25, 0.75});
    CHECK(res.max_ratio == 0.0);
  }
  SUBCASE("linear field: ratio stable across jump perturbations") {
    auto make_sized_step = [](double size) {
      const ControlSet U = ControlSet::box({-0.5}, {1.6});
      std::vector<PathSegment> segs;
      segs.push_back(PathSegment::expressions({Expr::literal(0.0)}));
      segs.push_back(PathSegment::expressions({Expr::literal(size)}));
      std::vector<JumpTriple> jumps = {
          {{0.0}, {0.0}, {0.0}}, {{0.0}, {size}, {size}}, {{size}, {size}, {size}}};
      return std::make_shared<const BVPath>(
          BVPath(0.0, 1.0, {0.0, 0.5, 1.0}, std::move(segs), std::move(jumps),
                 U));
    };
    auto u1 = make_sized_step(1.0);
    double prev_ratio = -1.0;
    for (double delta : {1e-2, 1e-3}) {
      auto u2 = make_sized_step(1.0 + delta);
      const auto res =
          dependence_probe(dyn, u1, u2, nullptr, {1.0}, {1.0}, {0.75, 1.0});
      CHECK(res.max_ratio > 0.0);
      if (prev_ratio > 0.0) {
        CHECK(res.max_ratio / prev_ratio <= 2.0);
        CHECK(prev_ratio / res.max_ratio <= 2.0);
      }
      prev_ratio = res.max_ratio;
    }
  }
  SUBCASE("random piecewise-linear perturbations stay finite") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> val(0.0, 0.4);
    auto base = ramp_path();
    double max_ratio = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> ts = {0.0, 0.25, 0.5, 0.75, 1.0};
      std::vector<Vec> vs;
      for (double t : ts) vs.push_back({t * 0.5 + val(rng) * 0.2});
      const ControlSet U = ControlSet::box({-0.5}, {1.5});
      auto pert = std::make_shared<const BVPath>(
          BVPath::from_samples(0.0, 1.0, ts, vs, U));
      const auto res = dependence_probe(dyn, base, pert, nullptr, {1.0}, {1.0},
                                        {0.5, 1.0});
      CHECK(std::isfinite(res.max_ratio));
      max_ratio = std::max(max_ratio, res.max_ratio);
    }
    CHECK(max_ratio > 0.0);
  }
  SUBCASE("non-commuting dynamics are rejected") {
    Dynamics nc;
    nc.n = 2;
    nc.m = 2;
    nc.drift = VectorField({Expr::literal(0.0), Expr::literal(0.0)});
    nc.g.push_back(VectorField({Expr::literal(1.0), Expr::literal(0.0)}));
    nc.g.push_back(VectorField(
        {Expr::literal(0.0), parse_expression("x1", ExprDims{2, 0, 0, false, false})}));
    const ControlSet U = ControlSet::box({-0.5, -0.5}, {1.5, 1.5});
    auto u = std::make_shared<const BVPath>(BVPath::from_expressions(
        0.0, 1.0, {parse_expression("t", kTOnly), Expr::literal(0.0)}, U));
    CHECK_THROWS_AS((void)dependence_probe(nc, u, u, nullptr, {0, 0}, {0, 0}, {1.0}),
                    PreconditionError);
  }
}

TEST_CASE("pointwise density of the generated controls") {
  // The generated u_k are AC, U-valued, of bounded variation, and converge
  // pointwise to u at grid points and at the breakpoint.
  auto u = scalar_step(0.5);
  const GraphCompletion gc = build_completion(u);
  Dynamics dyn;
  dyn.n = 1;
  dyn.m = 1;
  dyn.drift = VectorField({Expr::literal(0.0)});
  dyn.g.push_back(VectorField({Expr::literal(1.0)}));
  ApproxOptions opts;
  opts.report_grid = 2001;
  const auto steps =
      approximating_sequence(gc, dyn, nullptr, {0.0}, {16, 64, 256, 1024}, opts);
  const double var_phi = gc.control_variation();
  std::vector<double> test_ts = {0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0};
  std::vector<double> prev_err(test_ts.size(), 1e9);
  for (const auto& st : steps) {
    CHECK_FALSE(st.u_k->has_jumps());
    CHECK(st.var_uk <= var_phi + 1e-9);
    for (std::size_t i = 0; i < test_ts.size(); ++i) {
      const double err =
          std::abs(st.u_k->eval(test_ts[i])[0] - u->eval(test_ts[i])[0]);
      CHECK(err <= prev_err[i] + 1e-9);
      prev_err[i] = err;
    }
  }
  for (double e : prev_err) CHECK(e <= 2e-3);
}

TEST_CASE("bounded-variation certificate on the step scenario") {
  const Scenario sc = builtin_scenario("step_noncomm");
  const Dynamics dyn = sc.make_dynamics();
  const auto u = sc.make_input();
  const GraphCompletion gc = build_completion(u, sc.bridges);
  auto y = std::make_shared<const SpaceTimePath>(
      integrate_spacetime(gc, dyn, nullptr, sc.x0, 1e-4));
  const Trajectory x = gc_solution(y, gc.clock());

  ControlTrajectoryPair target;
  target.a = sc.a;
  target.b = sc.b;
  target.m = sc.m;
  target.n = sc.n;
  target.u = [&u](double t) { return u->eval(t); };
  target.x = [&x](double t) { return x.eval(t); };

  ApproxOptions opts;
  opts.report_grid = 5001;
  const auto steps =
      approximating_sequence(gc, dyn, nullptr, sc.x0, sc.ks, opts);
  const ApproxReport report = make_report(target, steps, sc.taus, 5001);
  const auto cert = bv_simple_certificate(report, gc.control_variation());
  CHECK(cert.decreasing);
  CHECK(cert.variation_budget_ok);
  CHECK(cert.below_threshold);
  CHECK(cert.certified());
  CHECK(cert.final_max_error <= 1e-3);
}

TEST_CASE("commuting fields make the trajectory bridge-independent") {
  const Scenario sc = builtin_scenario("step_comm");
  const Dynamics dyn = sc.make_dynamics();
  const auto u = sc.make_input();
  BridgeOverrides two_leg;
  two_leg[1].minus = Arc({{0, 0}, {1, 0}, {1, 1}});
  std::vector<Trajectory> xs;
  for (const BridgeOverrides& b : {BridgeOverrides{}, two_leg}) {
    const GraphCompletion gc = build_completion(u, b);
    auto y = std::make_shared<const SpaceTimePath>(
        integrate_spacetime(gc, dyn, nullptr, sc.x0, 1e-4));
    xs.push_back(gc_solution(y, gc.clock()));
  }
  double worst = 0.0;
  for (int i = 0; i <= 100; ++i)
    worst = std::max(worst, dist2(xs[0].eval(i / 100.0), xs[1].eval(i / 100.0)));
  CHECK(worst <= 1e-8);
}

TEST_CASE("smaller mollifier support tightens the finite-k error") {
  auto u = scalar_step(1.0);
  const Clock sigma = canonical_clock(u);
  const SmoothClock wide = mollify_clock(sigma, 32, MollifierKernel::standard(1.0));
  const SmoothClock narrow = mollify_clock(sigma, 32, MollifierKernel::standard(0.25));
  CHECK(l1_distance(narrow, sigma) < l1_distance(wide, sigma));
}

TEST_CASE("hull control sets run through the whole pipeline") {
  // Triangle hull; the jump bridge is a chord, inside by convexity.
  const ControlSet tri = ControlSet::hull({{0, 0}, {1, 0}, {0, 1}});
  std::vector<PathSegment> segs;
  segs.push_back(PathSegment::expressions({Expr::literal(0.1), Expr::literal(0.1)}));
  segs.push_back(PathSegment::expressions({Expr::literal(0.6), Expr::literal(0.2)}));
  std::vector<JumpTriple> jumps = {{{0.1, 0.1}, {0.1, 0.1}, {0.1, 0.1}},
                                   {{0.1, 0.1}, {0.6, 0.2}, {0.6, 0.2}},
                                   {{0.6, 0.2}, {0.6, 0.2}, {0.6, 0.2}}};
  auto u = std::make_shared<const BVPath>(
      BVPath(0.0, 1.0, {0.0, 0.5, 1.0}, std::move(segs), std::move(jumps), tri));
  const GraphCompletion gc = build_completion(u);
  Dynamics dyn;
  dyn.n = 1;
  dyn.m = 2;
  dyn.drift = VectorField({Expr::literal(0.0)});
  dyn.g.push_back(VectorField({Expr::literal(1.0)}));
  dyn.g.push_back(VectorField({Expr::literal(-1.0)}));
  auto y = std::make_shared<const SpaceTimePath>(
      integrate_spacetime(gc, dyn, nullptr, {0.0}, 1e-3));
  const Trajectory x = gc_solution(y, gc.clock());
  // dx = du1 - du2: x(1) = (0.6 - 0.1) - (0.2 - 0.1) = 0.4.
  CHECK(x.eval(1.0)[0] == doctest::Approx(0.4).epsilon(1e-9));
  // A path leaving the hull is rejected at construction.
  CHECK_THROWS_AS(BVPath::from_expressions(
                      0.0, 1.0, {Expr::literal(0.9), Expr::literal(0.9)}, tri),
                  ConfigError);
}

TEST_CASE("approx report CSV schema") {
  ApproxReport report;
  report.rows.push_back({8, 0.5, 0.1, 0.05, 1.0, 2.0});
  std::ostringstream out;
  report.write_csv(out);
  CHECK(out.str().rfind("k,tau,pointwise_err,l1_err,var_uk,sup_xk\n", 0) == 0);
  CHECK(out.str().find("8,0.5,0.1,0.05,1,2") != std::string::npos);
}
