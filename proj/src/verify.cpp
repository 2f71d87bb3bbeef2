#include "impulsim/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace impulsim {

namespace {

using Clk = std::chrono::steady_clock;

double seconds_since(Clk::time_point t0) {
  return std::chrono::duration<double>(Clk::now() - t0).count();
}

CriterionResult run_criterion(int number, const std::string& name,
                              const std::function<void(CriterionResult&)>& fn) {
  CriterionResult r;
  r.number = number;
  r.name = name;
  const auto t0 = Clk::now();
  try {
    fn(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = seconds_since(t0);
  return r;
}

std::string fmt(double v) { return double_to_string(v); }

// Relaxed refinement for family sweeps that consume only u(t) and du/dt.
BVPath::Options family_options() {
  BVPath::Options o;
  o.variation_rel_tol = 1e-7;
  o.variation_max_cells = 1 << 20;
  return o;
}

Vec ex21_analytic(double t, double k) {
  const double u1 = (std::cos(k * t) - 1.0) / std::sqrt(k);
  const double u2 = std::sin(k * t) / std::sqrt(k);
  const double ak = (1.0 / (2.0 * k * k) + 2.0 / k) * t -
                    std::sin(2.0 * k * t) / (4.0 * k * k * k) -
                    2.0 * std::sin(k * t) / (k * k);
  return {u1, u2, 1.0 - t + std::sin(k * t) / k, std::exp(t), 1.0 - t, ak};
}

Vec ex21_limit(double t) {
  return {0.0, 0.0, 1.0 - t, std::exp(t), 1.0 - t, 0.0};
}

Trajectory solve_with_bridges(const Scenario& sc, const Dynamics& dyn,
                              const std::shared_ptr<const BVPath>& u,
                              const BridgeOverrides& bridges, double step,
                              GraphCompletion* out_gc = nullptr) {
  GraphCompletion gc = build_completion(u, bridges);
  auto y = std::make_shared<const SpaceTimePath>(
      integrate_spacetime(gc, dyn, nullptr, sc.x0, step));
  Trajectory x = gc_solution(y, gc.clock());
  if (out_gc != nullptr) *out_gc = std::move(gc);
  return x;
}

BridgeOverrides bridge_u1_then_u2() {
  BridgeOverrides b;
  b[1].minus = Arc({{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}});
  return b;
}

BridgeOverrides bridge_u2_then_u1() {
  BridgeOverrides b;
  b[1].minus = Arc({{0.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}});
  return b;
}

std::shared_ptr<const BVPath> make_step_path(double at_value) {
  const ControlSet U = ControlSet::box({-0.5}, {1.5});
  std::vector<PathSegment> segs;
  segs.push_back(PathSegment::expressions({Expr::literal(0.0)}));
  segs.push_back(PathSegment::expressions({Expr::literal(1.0)}));
  std::vector<JumpTriple> jumps = {
      {{0.0}, {0.0}, {0.0}}, {{0.0}, {at_value}, {1.0}}, {{1.0}, {1.0}, {1.0}}};
  return std::make_shared<const BVPath>(
      BVPath(0.0, 1.0, {0.0, 0.5, 1.0}, std::move(segs), std::move(jumps), U));
}

// Flat left piece, jump 0 -> 0.5, then a unit-slope ramp: the clock slopes
// differ across the jump, so the midpoint-law error is nonzero and O(1/k).
std::shared_ptr<const BVPath> make_asym_step_path() {
  const ControlSet U = ControlSet::box({-0.5}, {1.5});
  ExprDims dims{0, 0, 0, true, false};
  std::vector<PathSegment> segs;
  segs.push_back(PathSegment::expressions({Expr::literal(0.0)}));
  segs.push_back(PathSegment::expressions({parse_expression("t", dims)}));
  std::vector<JumpTriple> jumps = {
      {{0.0}, {0.0}, {0.0}}, {{0.0}, {0.5}, {0.5}}, {{1.0}, {1.0}, {1.0}}};
  return std::make_shared<const BVPath>(
      BVPath(0.0, 1.0, {0.0, 0.5, 1.0}, std::move(segs), std::move(jumps), U));
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const VerifyOptions& options) {
  std::vector<CriterionResult> results;

  // Shared ex21 artifacts (criteria 1-3, 6).
  const Scenario ex21 = builtin_scenario("ex21");
  const Dynamics ex21_dyn = ex21.make_dynamics();

  std::vector<double> grid101;
  for (int i = 0; i <= 100; ++i) grid101.push_back(i / 100.0);

  std::map<int, Trajectory> ex21_solutions;
  auto ex21_solution = [&](int k) -> const Trajectory& {
    auto it = ex21_solutions.find(k);
    if (it == ex21_solutions.end()) {
      auto u = ex21.make_input(static_cast<double>(k), family_options());
      it = ex21_solutions
               .emplace(k, integrate_caratheodory(ex21_dyn, *u, nullptr, ex21.x0, 1e-4))
               .first;
    }
    return it->second;
  };

  results.push_back(run_criterion(1, "ex21-closed-form", [&](CriterionResult& r) {
    double worst = 0.0;
    double worst_time = 0.0;
    for (int k : {5, 20, 100}) {
      const auto t0 = Clk::now();
      const Trajectory& x = ex21_solution(k);
      const double elapsed = seconds_since(t0);
      worst_time = std::max(worst_time, elapsed);
      for (double t : grid101) {
        const Vec num = x.eval(t);
        const Vec ref = ex21_analytic(t, k);
        for (std::size_t c = 0; c < ref.size(); ++c)
          worst = std::max(worst, std::abs(num[c] - ref[c]));
      }
    }
    r.pass = worst <= 1e-6 && worst_time <= 2.0;
    r.detail = "max component err " + fmt(worst) + " <= 1e-06, slowest k " +
               fmt(worst_time) + "s <= 2s";
  }));

  results.push_back(run_criterion(2, "ex21-convergence", [&](CriterionResult& r) {
    std::map<int, double> err;
    for (int k : {25, 100, 400}) {
      const Trajectory& x = ex21_solution(k);
      double e = 0.0;
      for (double t : grid101) e = std::max(e, dist2(x.eval(t), ex21_limit(t)));
      err[k] = e;
    }
    const double r1 = err[100] / err[25];
    const double r2 = err[400] / err[100];
    r.pass = r1 <= 0.6 && r2 <= 0.6;
    r.detail = "err(25)=" + fmt(err[25]) + " err(100)=" + fmt(err[100]) +
               " err(400)=" + fmt(err[400]) + "; ratios " + fmt(r1) + ", " +
               fmt(r2) + " <= 0.6";
  }));

  results.push_back(run_criterion(3, "ex21-cost-decay", [&](CriterionResult& r) {
    const auto phi = ex21.make_cost_phi();
    const double cost_k = evaluate_cost_example(ex21_solution(100), phi, ex21.cost_times);
    const Trajectory limit = Trajectory::from_function(0.0, 1.0, 6, ex21_limit);
    const double cost_limit = evaluate_cost_example(limit, phi, ex21.cost_times);
    r.pass = cost_k <= 0.03 && cost_limit == 0.0;
    r.detail = "cost(k=100) " + fmt(cost_k) + " <= 0.03, cost(limit) " +
               fmt(cost_limit) + " == 0";
  }));

  results.push_back(run_criterion(4, "noncommutative-bridge-dependence",
                                  [&](CriterionResult& r) {
    const Scenario sc = builtin_scenario("step_noncomm");
    const Dynamics dyn = sc.make_dynamics();
    const auto u = sc.make_input();
    struct Case {
      const char* name;
      BridgeOverrides bridges;
      Vec expect;
    };
    std::vector<Case> cases;
    cases.push_back({"u1-then-u2", bridge_u1_then_u2(), {1.0, 1.0}});
    cases.push_back({"u2-then-u1", bridge_u2_then_u1(), {1.0, 0.0}});
    cases.push_back({"diagonal", {}, {1.0, 0.5}});
    double worst = 0.0;
    std::string detail;
    for (const Case& c : cases) {
      const Trajectory x = solve_with_bridges(sc, dyn, u, c.bridges, sc.step);
      const double err = dist2(x.eval(1.0), c.expect);
      worst = std::max(worst, err);
      if (!detail.empty()) detail += ", ";
      detail += std::string(c.name) + " err " + fmt(err);
    }
    r.pass = worst <= 1e-8;
    r.detail = detail + "; all <= 1e-08";
  }));

  results.push_back(run_criterion(5, "commutative-bridge-independence",
                                  [&](CriterionResult& r) {
    const Scenario sc = builtin_scenario("step_comm");
    const Dynamics dyn = sc.make_dynamics();
    const auto u = sc.make_input();
    std::vector<Trajectory> xs;
    for (const BridgeOverrides& b :
         {bridge_u1_then_u2(), bridge_u2_then_u1(), BridgeOverrides{}})
      xs.push_back(solve_with_bridges(sc, dyn, u, b, sc.step));
    double worst = 0.0;
    for (double t : grid101)
      for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = i + 1; j < xs.size(); ++j)
          worst = std::max(worst, dist2(xs[i].eval(t), xs[j].eval(t)));
    r.pass = worst <= 1e-7;
    r.detail = "max pairwise discrepancy " + fmt(worst) + " <= 1e-07";
  }));

  results.push_back(run_criterion(6, "caratheodory-consistency", [&](CriterionResult& r) {
    const auto u = ex21.make_input(10.0);
    const Trajectory direct =
        integrate_caratheodory(ex21_dyn, *u, nullptr, ex21.x0, 1e-4);
    GraphCompletion gc = build_completion(u);
    auto y = std::make_shared<const SpaceTimePath>(
        integrate_spacetime(gc, ex21_dyn, nullptr, ex21.x0, 1e-4));
    const Trajectory via_gc = gc_solution(y, gc.clock());
    double worst = 0.0;
    for (double t : grid101)
      worst = std::max(worst, dist2(direct.eval(t), via_gc.eval(t)));
    r.pass = worst <= 1e-7;
    r.detail = "max |gc - caratheodory| " + fmt(worst) + " <= 1e-07";
  }));

  results.push_back(run_criterion(7, "clock-suite", [&](CriterionResult& r) {
    const auto u = make_step_path(1.0);
    const Clock sigma = canonical_clock(u);
    const bool hand = sigma(0.25) == 0.125 && sigma(0.5) == 0.75 && sigma(0.75) == 0.875;

    const GraphCompletion gc = build_completion(u);
    const Clock& sc = gc.clock();
    std::vector<double> ts;
    for (int i = 0; i < 1000; ++i) ts.push_back(i / 999.0);
    for (double bp : u->breakpoints()) ts.push_back(bp);
    double identity_err = 0.0;
    std::vector<double> svals;
    for (double t : ts) {
      const double s = sc(t);
      svals.push_back(s);
      const Vec uval = u->eval(t);
      double err = std::abs(gc.phi0(s) - t);
      err = std::max(err, dist2(gc.phi(s), uval));
      identity_err = std::max(identity_err, err);
    }
    bool slope_ok = true;
    const double L = gc.lipschitz();
    for (std::size_t i = 0; i < ts.size() && slope_ok; ++i)
      for (std::size_t j = i + 1; j < ts.size(); ++j) {
        const double dt = ts[j] - ts[i];
        const double ds = svals[j] - svals[i];
        if (dt > 0.0 && ds < dt / L - 1e-12) {
          slope_ok = false;
          break;
        }
      }
    r.pass = hand && identity_err <= 1e-9 && slope_ok;
    r.detail = std::string("hand values ") + (hand ? "exact" : "WRONG") +
               ", identity err " + fmt(identity_err) + " <= 1e-09, slope bound " +
               (slope_ok ? "holds" : "VIOLATED");
  }));

  results.push_back(run_criterion(8, "mollified-clock-suite", [&](CriterionResult& r) {
    const std::vector<int> ks = {8, 32, 128};
    std::ostringstream detail;
    bool ok = true;

    // (a) identity clock stays fixed.
    {
      const ControlSet U = ControlSet::box({-1.0}, {1.0});
      auto u = std::make_shared<const BVPath>(
          BVPath::from_expressions(0.0, 1.0, {Expr::literal(0.0)}, U));
      const Clock sigma = canonical_clock(u);
      const MollifierKernel kernel = MollifierKernel::standard(1.0);
      double worst = 0.0;
      for (int k : ks) {
        const SmoothClock shat = mollify_clock(sigma, k, kernel);
        for (std::size_t j = 0; j < shat.t_grid().size(); ++j)
          worst = std::max(worst,
                           std::abs(shat.values()[j] - shat.t_grid()[j]));
      }
      ok = ok && worst <= 1e-12;
      detail << "identity err " << fmt(worst) << " <= 1e-12";
    }

    // (b) midpoint law error decreases monotonically at an asymmetric jump.
    {
      const auto u = make_asym_step_path();
      const Clock sigma = canonical_clock(u);
      const MollifierKernel kernel = MollifierKernel::standard(1.0);
      const auto& row = sigma.jump_rows()[1];
      const double mid = 0.5 * (row.s_minus + row.s_plus);
      std::vector<double> errs;
      for (int k : ks)
        errs.push_back(std::abs(mollify_clock(sigma, k, kernel).value(row.t) - mid));
      const bool dec = errs[0] > errs[1] && errs[1] > errs[2];
      ok = ok && dec;
      detail << "; midpoint errs " << fmt(errs[0]) << " > " << fmt(errs[1]) << " > "
             << fmt(errs[2]) << (dec ? "" : " NOT DECREASING");
    }

    // (c) interior-value surgery lands on sigma(t_i); (d) inverse maps stay
    // equi-Lipschitz.
    {
      const auto u = make_step_path(0.5);
      const Clock sigma = canonical_clock(u);
      const MollifierKernel kernel = MollifierKernel::standard(1.0);
      const auto& row = sigma.jump_rows()[1];
      double fix_err_128 = -1.0;
      double worst_lip = 0.0;
      const double L = sigma.slope_bound();
      for (int k : ks) {
        const SmoothClock shat = mollify_clock(sigma, k, kernel);
        const SmoothClock sk = fixup_clock(shat, sigma);
        if (k == 128) fix_err_128 = std::abs(sk.value(row.t) - row.s_at);
        const auto& tg = sk.t_grid();
        const auto& vals = sk.values();
        for (std::size_t j = 1; j < tg.size(); ++j) {
          const double dt = tg[j] - tg[j - 1];
          const double ds = vals[j] - vals[j - 1];
          if (dt <= 0.0) continue;
          if (ds > 0.0) worst_lip = std::max(worst_lip, dt / ds);
        }
      }
      const bool fix_ok = fix_err_128 >= 0.0 && fix_err_128 <= 1e-3;
      const bool lip_ok = worst_lip <= L * (1.0 + 1e-6);
      ok = ok && fix_ok && lip_ok;
      detail << "; fixup err(k=128) " << fmt(fix_err_128) << " <= 0.001"
             << "; inverse Lipschitz " << fmt(worst_lip) << " <= " << fmt(L * (1.0 + 1e-6));
    }
    r.pass = ok;
    r.detail = detail.str();
  }));

  results.push_back(run_criterion(9, "variation-budgets", [&](CriterionResult& r) {
    bool ok = true;
    double worst_slack = -1e9;
    auto check_budget = [&](const GraphCompletion& gc) {
      const double M = gc.control_set().whitney_constant();
      const double budget = (gc.time_b() - gc.time_a()) +
                            (2.0 * M - 1.0) * gc.path()->total_variation() + 1e-6;
      const double slack = gc.total_variation() - budget;
      worst_slack = std::max(worst_slack, slack);
      if (slack > 0.0) ok = false;
    };
    const Scenario noncomm = builtin_scenario("step_noncomm");
    const auto u_nc = noncomm.make_input();
    for (const BridgeOverrides& b :
         {bridge_u1_then_u2(), bridge_u2_then_u1(), BridgeOverrides{}})
      check_budget(build_completion(u_nc, b));
    check_budget(build_completion(builtin_scenario("step_comm").make_input()));
    check_budget(build_completion(make_asym_step_path()));
    check_budget(build_completion(make_step_path(0.5)));

    // Generated approximating controls stay within Var(phi).
    const Dynamics dyn = noncomm.make_dynamics();
    const GraphCompletion gc = build_completion(u_nc);
    ApproxOptions aopts;
    aopts.report_grid = 2001;
    const auto steps =
        approximating_sequence(gc, dyn, nullptr, noncomm.x0, {16, 64, 256}, aopts);
    const double var_phi = gc.control_variation();
    double worst_var = 0.0;
    for (const auto& st : steps) {
      worst_var = std::max(worst_var, st.var_uk - var_phi);
      if (st.var_uk > var_phi + 1e-9) ok = false;
    }
    r.pass = ok;
    r.detail = "completion budget slack " + fmt(worst_slack) +
               " <= 0, max Var(u_k) - Var(phi) " + fmt(worst_var) + " <= 0";
  }));

  results.push_back(run_criterion(10, "rk4-order", [&](CriterionResult& r) {
    // Exponential oracle dx = x du with u = 2t, so truncation stays well
    // above the double-precision floor at the prescribed steps.
    const ControlSet U = ControlSet::box({-0.1}, {2.1});
    ExprDims dims{0, 0, 0, true, false};
    auto u = std::make_shared<const BVPath>(
        BVPath::from_expressions(0.0, 1.0, {parse_expression("2*t", dims)}, U));
    Dynamics dyn;
    dyn.n = 1;
    dyn.m = 1;
    dyn.drift = VectorField({Expr::literal(0.0)});
    dyn.g.push_back(VectorField({parse_expression("x1", ExprDims{1, 0, 0, false, false})}));
    const double exact = std::exp(2.0);
    auto endpoint_err = [&](double h) {
      const Trajectory x = integrate_caratheodory(dyn, *u, nullptr, {1.0}, h);
      return std::abs(x.eval(1.0)[0] - exact);
    };
    const double e1 = endpoint_err(1e-3);
    const double e2 = endpoint_err(5e-4);
    const double ratio = e1 / e2;
    r.pass = ratio >= 12.0;
    r.detail = "err(1e-3) " + fmt(e1) + ", err(5e-4) " + fmt(e2) + ", ratio " +
               fmt(ratio) + " >= 12";
  }));

  results.push_back(run_criterion(11, "expression-dsl", [&](CriterionResult& r) {
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> dist(0.2, 2.0);
    const ExprDims dims{3, 0, 0, true, false};
    const std::vector<std::string> corpus = {
        "sin(x1)*cos(x2)",       "exp(x1/2) + x3",
        "log(x1*x1 + 1)",        "sqrt(x1*x1 + 0.5)",
        "(x1 + x2)^3",           "x1^2.5",
        "x2/(x1*x1 + 1)",        "-(x1*sin(x2)) + t*x3",
        "exp(-x1) * sin(t)",     "(x3 - x1)^2 + x2^2"};
    double worst_rel = 0.0;
    int checked = 0;
    for (int p = 0; p < 100; ++p) {
      const Expr e = parse_expression(corpus[static_cast<std::size_t>(p) % corpus.size()],
                                      dims);
      Vec x = {dist(rng), dist(rng), dist(rng)};
      const double tval = dist(rng);
      for (int var = 1; var <= 3; ++var) {
        const Variable xv{VarKind::X, var};
        const Expr de = e.derivative(xv);
        EvalEnv env;
        env.t = tval;
        env.x = std::span<const double>(x.data(), x.size());
        const double sym = de.eval(env);
        const double h = 1e-5;
        Vec xp = x, xm = x;
        xp[static_cast<std::size_t>(var - 1)] += h;
        xm[static_cast<std::size_t>(var - 1)] -= h;
        EvalEnv envp = env, envm = env;
        envp.x = std::span<const double>(xp.data(), xp.size());
        envm.x = std::span<const double>(xm.data(), xm.size());
        const double fd = (e.eval(envp) - e.eval(envm)) / (2.0 * h);
        worst_rel = std::max(worst_rel, std::abs(sym - fd) / (1.0 + std::abs(sym)));
        ++checked;
      }
    }
    const bool fd_ok = worst_rel <= 1e-6;

    // Bracket of the oscillator fields is exactly (0,0,-2,0,0,0).
    const Scenario sc = builtin_scenario("ex21");
    const Dynamics dyn = sc.make_dynamics();
    std::uniform_real_distribution<double> xdist(-1.0, 1.0);
    Vec x(6);
    for (double& c : x) c = xdist(rng);
    const Vec bracket = lie_bracket(dyn.g[0], dyn.g[1], x);
    bool bracket_ok = bracket.size() == 6;
    for (std::size_t i = 0; i < bracket.size() && bracket_ok; ++i)
      bracket_ok = bracket[i] == (i == 2 ? -2.0 : 0.0);

    r.pass = fd_ok && bracket_ok;
    r.detail = "max relative fd mismatch " + fmt(worst_rel) + " <= 1e-06 over " +
               std::to_string(checked) + " checks; bracket " +
               (bracket_ok ? "exact (0,0,-2,0,0,0)" : "WRONG");
  }));

  return results;
}

int print_acceptance(std::ostream& out, const std::vector<CriterionResult>& results,
                     double total_seconds) {
  int failures = 0;
  for (const CriterionResult& r : results) {
    if (!r.pass) ++failures;
    out << (r.pass ? "[PASS] " : "[FAIL] ") << r.number << " " << r.name << ": "
        << r.detail << " (" << double_to_string(r.seconds) << "s)\n";
  }
  const bool time_ok = total_seconds <= 60.0;
  if (!time_ok) ++failures;
  out << (time_ok ? "[PASS] " : "[FAIL] ") << "total wall-clock "
      << double_to_string(total_seconds) << "s <= 60s\n";
  out << (failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES: " + std::to_string(failures))
      << "\n";
  return failures;
}

}  // namespace impulsim
