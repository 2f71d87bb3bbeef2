#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "impulsim/completion.hpp"

using namespace impulsim;

namespace {

const ExprDims kTOnly{0, 0, 0, true, false};

std::shared_ptr<const BVPath> scalar_step(double at_value = 1.0) {
  const ControlSet U = ControlSet::box({-0.5}, {1.5}, 2.0);
  std::vector<PathSegment> segs;
  segs.push_back(PathSegment::expressions({Expr::literal(0.0)}));
  segs.push_back(PathSegment::expressions({Expr::literal(1.0)}));
  std::vector<JumpTriple> jumps = {
      {{0.0}, {0.0}, {0.0}}, {{0.0}, {at_value}, {1.0}}, {{1.0}, {1.0}, {1.0}}};
  return std::make_shared<const BVPath>(
      BVPath(0.0, 1.0, {0.0, 0.5, 1.0}, std::move(segs), std::move(jumps), U));
}

std::shared_ptr<const BVPath> two_jump_path() {
  // Jumps of size 1 at t = 1/3 and t = 2/3 (at-value = right value).
  const ControlSet U = ControlSet::box({-0.5}, {2.5});
  std::vector<PathSegment> segs;
  segs.push_back(PathSegment::expressions({Expr::literal(0.0)}));
  segs.push_back(PathSegment::expressions({Expr::literal(1.0)}));
  segs.push_back(PathSegment::expressions({Expr::literal(2.0)}));
  std::vector<JumpTriple> jumps = {{{0.0}, {0.0}, {0.0}},
                                   {{0.0}, {1.0}, {1.0}},
                                   {{1.0}, {2.0}, {2.0}},
                                   {{2.0}, {2.0}, {2.0}}};
  return std::make_shared<const BVPath>(BVPath(0.0, 1.0, {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0},
                                               std::move(segs), std::move(jumps), U));
}

std::shared_ptr<const BVPath> random_pl_path(std::mt19937_64& rng, int dim) {
  std::uniform_int_distribution<int> nknots(3, 8);
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
  return std::make_shared<const BVPath>(
      BVPath::from_samples(0.0, 1.0, std::move(ts), std::move(vals), U));
}

void check_clock_identity(const GraphCompletion& gc, double tol = 1e-9) {
  const BVPath& u = *gc.path();
  for (int i = 0; i <= 1000; ++i) {
    const double t = u.a() + (u.b() - u.a()) * (i / 1000.0);
    const double s = gc.clock()(t);
    CHECK(std::abs(gc.phi0(s) - t) <= tol);
    CHECK(dist2(gc.phi(s), u.eval(t)) <= tol);
  }
  for (double t : u.breakpoints()) {
    const double s = gc.clock()(t);
    CHECK(std::abs(gc.phi0(s) - t) <= tol);
    CHECK(dist2(gc.phi(s), u.eval(t)) <= tol);
  }
}

}  // namespace

TEST_CASE("canonical clock of a zero-variation path is the identity") {
  const ControlSet U = ControlSet::box({-1.0}, {1.0});
  auto u = std::make_shared<const BVPath>(
      BVPath::from_expressions(0.0, 1.0, {Expr::literal(0.5)}, U));
  const Clock sigma = canonical_clock(u);
  for (double t : {0.0, 0.125, 0.5, 0.9, 1.0}) CHECK(sigma(t) == t);
  CHECK(sigma.normalizer() == 1.0);
}

TEST_CASE("canonical clock of the scalar step matches hand values") {
  const Clock sigma = canonical_clock(scalar_step(1.0));
  CHECK(sigma(0.25) == 0.125);
  CHECK(sigma(0.5) == 0.75);
  CHECK(sigma(0.75) == 0.875);
  CHECK(sigma(0.0) == 0.0);
  CHECK(sigma(1.0) == 1.0);
  // One-sided values at the jump.
  const auto& row = sigma.jump_rows()[1];
  CHECK(row.s_minus == 0.25);
  CHECK(row.s_at == 0.75);
  CHECK(row.s_plus == 0.75);
}

TEST_CASE("canonical clock with two equal jumps") {
  const Clock sigma = canonical_clock(two_jump_path());
  // sigma(2/3) = (2/3 + 2) / 3 = 8/9.
  CHECK(sigma(2.0 / 3.0) == doctest::Approx(8.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("clock is strictly increasing with the slope bound") {
  auto u = scalar_step(1.0);
  const GraphCompletion gc = build_completion(u);
  const Clock& sigma = gc.clock();
  const double L = gc.lipschitz();
  double prev_t = 0.0, prev_s = sigma(0.0);
  for (int i = 1; i <= 500; ++i) {
    const double t = i / 500.0;
    const double s = sigma(t);
    CHECK(s > prev_s);
    CHECK(s - prev_s >= (t - prev_t) / L - 1e-12);
    prev_t = t;
    prev_s = s;
  }
}

TEST_CASE("bridge: no jump gives degenerate arcs") {
  const ControlSet U = ControlSet::box({-1, -1}, {1, 1});
  const Vec p = {0.5, 0.5};
  const auto [minus, plus] = bridge(p, p, p, U);
  CHECK(minus.degenerate());
  CHECK(plus.degenerate());
  CHECK(minus.length() == 0.0);
}

TEST_CASE("bridge: straight chord has variation equal to the distance") {
  const ControlSet U = ControlSet::box({-1, -1}, {2, 2});
  const auto [minus, plus] = bridge({0, 0}, {1, 1}, {1, 1}, U);
  CHECK(minus.length() == doctest::Approx(std::sqrt(2.0)));
  CHECK(plus.degenerate());
  CHECK_THROWS_AS((void)bridge({5, 5}, {1, 1}, {1, 1}, U), DomainError);
}

TEST_CASE("user bridge arcs are held to the Whitney bound") {
  const Arc two_leg({{0, 0}, {1, 0}, {1, 1}});
  CHECK(two_leg.length() == doctest::Approx(2.0));
  const ControlSet tight = ControlSet::box({-1, -1}, {2, 2}, 1.0);
  CHECK_THROWS_AS(validate_bridge_arc(two_leg, {0, 0}, {1, 1}, tight),
                  PreconditionError);
  const ControlSet loose = ControlSet::box({-1, -1}, {2, 2}, 1.5);
  CHECK_NOTHROW(validate_bridge_arc(two_leg, {0, 0}, {1, 1}, loose));  // 2 <= 1.5*sqrt(2)
  CHECK_THROWS_AS(validate_bridge_arc(two_leg, {0, 0}, {0.5, 0.5}, loose), ConfigError);
}

TEST_CASE("completion of a continuous path is a bijective reparameterization") {
  std::mt19937_64 rng(5);
  auto u = random_pl_path(rng, 2);
  const GraphCompletion gc = build_completion(u);
  CHECK(gc.jump_arcs().empty());
  check_clock_identity(gc);
  // phi0 strictly increasing (no flats) and preimages degenerate.
  for (int i = 0; i <= 20; ++i) {
    const double t = i / 20.0;
    const auto [s1, s2] = gc.preimage(t);
    CHECK(s2 - s1 <= 1e-12);
  }
}

TEST_CASE("step completion: flat interval of normalized length 1/2") {
  auto u = scalar_step(1.0);
  const GraphCompletion gc = build_completion(u);
  // Arclength budget: 1 (time) + 1 (jump) = 2.
  CHECK(gc.lipschitz() == doctest::Approx(2.0).epsilon(1e-12));
  const auto [s1, s2] = gc.preimage(0.5);
  CHECK(s2 - s1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s1 == doctest::Approx(0.25).epsilon(1e-12));
  check_clock_identity(gc);
  // Jump-arc bookkeeping matches the preimage.
  REQUIRE(gc.jump_arcs().size() == 1);
  const auto& arc = gc.jump_arcs()[0];
  CHECK(arc.c_minus == doctest::Approx(s1));
  CHECK(arc.d_plus == doctest::Approx(s2));
  // phi crosses the jump inside the flat interval.
  CHECK(gc.phi(s1)[0] == doctest::Approx(0.0));
  CHECK(gc.phi(s2)[0] == doctest::Approx(1.0));
  CHECK(gc.phi0(0.5 * (s1 + s2)) == doctest::Approx(0.5));
}

TEST_CASE("jumps at the interval ends get one-sided arcs") {
  // Left jump at b only (the right value at b is pinned to the at-value).
  const ControlSet U = ControlSet::box({-0.5}, {1.5});
  std::vector<PathSegment> segs;
  segs.push_back(PathSegment::expressions({Expr::literal(0.0)}));
  std::vector<JumpTriple> jumps = {{{0.0}, {0.0}, {0.0}}, {{0.0}, {1.0}, {1.0}}};
  auto u = std::make_shared<const BVPath>(
      BVPath(0.0, 1.0, {0.0, 1.0}, std::move(segs), std::move(jumps), U));
  const Clock sigma = canonical_clock(u);
  CHECK(sigma(1.0) == 1.0);             // left jump at b counted at t = b
  CHECK(sigma.jump_rows()[1].s_minus == 0.5);
  const GraphCompletion gc = build_completion(u);
  const auto [s1, s2] = gc.preimage(1.0);
  CHECK(s1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s2 == 1.0);
  CHECK(gc.phi(1.0)[0] == doctest::Approx(1.0));
  check_clock_identity(gc);

  // Right jump at a only.
  std::vector<PathSegment> segs2;
  segs2.push_back(PathSegment::expressions({Expr::literal(1.0)}));
  std::vector<JumpTriple> jumps2 = {{{0.0}, {0.0}, {1.0}}, {{1.0}, {1.0}, {1.0}}};
  auto u2 = std::make_shared<const BVPath>(
      BVPath(0.0, 1.0, {0.0, 1.0}, std::move(segs2), std::move(jumps2), U));
  const GraphCompletion gc2 = build_completion(u2);
  CHECK(gc2.clock()(0.0) == 0.0);       // the jump sits entirely after sigma(a)
  const auto [a1, a2] = gc2.preimage(0.0);
  CHECK(a1 == 0.0);
  CHECK(a2 == doctest::Approx(0.5).epsilon(1e-12));
  check_clock_identity(gc2);
}

TEST_CASE("preimage at boundaries and continuity points") {
  auto u = scalar_step(1.0);
  const GraphCompletion gc = build_completion(u);
  const auto [a1, a2] = gc.preimage(0.0);
  CHECK(a1 == 0.0);
  CHECK(a2 <= 1e-12);
  const auto [c1, c2] = gc.preimage(0.3);
  CHECK(c2 - c1 <= 1e-12);
  CHECK(gc.phi0(c1) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS((void)gc.preimage(1.5), DomainError);
}

TEST_CASE("clock identity and budgets hold on random paths with jumps") {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 5; ++rep) {
    // Random PL path with a mid-interval jump.
    std::uniform_real_distribution<double> val(-0.8, 0.8);
    const ControlSet U = ControlSet::box({-1, -1}, {1, 1});
    std::vector<PathSegment> segs;
    segs.push_back(PathSegment::samples({0.0, 0.2, 0.5},
                                        {{val(rng), val(rng)},
                                         {val(rng), val(rng)},
                                         {val(rng), val(rng)}}));
    segs.push_back(PathSegment::samples({0.5, 0.8, 1.0},
                                        {{val(rng), val(rng)},
                                         {val(rng), val(rng)},
                                         {val(rng), val(rng)}}));
    const Vec left = segs[0].values().back();
    const Vec right = segs[1].values().front();
    std::vector<JumpTriple> jumps = {
        {segs[0].values().front(), segs[0].values().front(), segs[0].values().front()},
        {left, left, right},  // pure right jump
        {segs[1].values().back(), segs[1].values().back(), segs[1].values().back()}};
    auto u = std::make_shared<const BVPath>(
        BVPath(0.0, 1.0, {0.0, 0.5, 1.0}, std::move(segs), std::move(jumps), U));

    const GraphCompletion gc = build_completion(u);
    check_clock_identity(gc);

    // Variation budget with M = 1.
    CHECK(gc.total_variation() <= 1.0 + u->total_variation() + 1e-6);

    // Lipschitz chords on the stored grid.
    const auto& s = gc.grid();
    const auto& p0 = gc.phi0_samples();
    const auto& pp = gc.phi_samples();
    const double L = gc.lipschitz();
    for (std::size_t i = 1; i < s.size(); ++i) {
      const double ds = s[i] - s[i - 1];
      if (ds <= 0.0) continue;
      const double du = std::hypot(pp[2 * i] - pp[2 * i - 2], pp[2 * i + 1] - pp[2 * i - 1]);
      CHECK(std::hypot(p0[i] - p0[i - 1], du) / ds <= L * (1.0 + 1e-9));
      CHECK(p0[i] >= p0[i - 1]);
    }
  }
}

TEST_CASE("completion CSV schema") {
  auto u = scalar_step(1.0);
  GraphCompletion::Options opt;
  opt.base_grid = 17;
  const GraphCompletion gc = build_completion(u, {}, opt);
  std::ostringstream out;
  gc.write_csv(out);
  const std::string text = out.str();
  CHECK(text.rfind("s,phi0,phi_1\n", 0) == 0);
  CHECK(text.find("0.25,0.5,0") != std::string::npos);  // flat-interval start
}

TEST_CASE("bridge override count and placement are validated") {
  auto u = scalar_step(1.0);
  BridgeOverrides bad;
  bad[0].minus = Arc({{0.0}, {1.0}});  // breakpoint 0 has no left jump
  CHECK_THROWS_AS((void)build_completion(u, bad), ConfigError);
  BridgeOverrides out_of_range;
  out_of_range[7].minus = Arc({{0.0}, {1.0}});
  CHECK_THROWS_AS((void)build_completion(u, out_of_range), ConfigError);
}

TEST_CASE("reparameterization keeps the graph and rescales the clock") {
  auto u = scalar_step(1.0);
  const GraphCompletion gc = build_completion(u);
  const auto eta = [](double s) { return s * s * (3.0 - 2.0 * s); };  // smoothstep
  const GraphCompletion gc2 = gc.reparameterize(eta);
  check_clock_identity(gc2, 1e-9);
  // Same geometry, different parameter speeds.
  CHECK(gc2.lipschitz() > gc.lipschitz());
  for (double t : {0.1, 0.5, 0.9}) {
    const double s2 = gc2.clock()(t);
    CHECK(gc2.phi0(s2) == doctest::Approx(t).epsilon(1e-12));
  }
}
