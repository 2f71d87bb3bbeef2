#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "impulsim/verify.hpp"

namespace fs = std::filesystem;
using namespace impulsim;

namespace {

struct CommonArgs {
  std::string scenario;
  std::string out_dir = ".";
  std::optional<double> step;
  std::vector<int> ks;
  std::vector<double> taus;
  double k_value = 10.0;
  unsigned seed = 42;
};

fs::path ensure_out_dir(const CommonArgs& args) {
  fs::path dir(args.out_dir);
  fs::create_directories(dir);
  return dir;
}

std::string sc_name_stem(const Scenario& sc) {
  std::string stem = fs::path(sc.name).stem().string();
  if (stem.empty()) stem = "scenario";
  return stem;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  fn(out);
  std::cout << "wrote " << path.string() << "\n";
}

Scenario load(const CommonArgs& args) {
  if (args.scenario.empty())
    throw ConfigError("--scenario <path|builtin> is required");
  Scenario sc = load_scenario(args.scenario);
  if (args.step.has_value()) sc.step = *args.step;
  if (!args.ks.empty()) sc.ks = args.ks;
  if (!args.taus.empty()) sc.taus = args.taus;
  return sc;
}

int cmd_solve(const CommonArgs& args) {
  const Scenario sc = load(args);
  const Dynamics dyn = sc.make_dynamics();
  const auto v = sc.make_v();
  const std::optional<double> k =
      sc.family ? std::optional<double>(args.k_value) : std::nullopt;
  const auto u = sc.make_input(k);

  const GraphCompletion::Options gopt{sc.grid, true, 1e-9, 1000};
  const GraphCompletion gc = build_completion(u, sc.bridges, gopt);
  auto y = std::make_shared<const SpaceTimePath>(
      integrate_spacetime(gc, dyn, v ? &*v : nullptr, sc.x0, sc.step));
  const Trajectory x = gc_solution(y, gc.clock());

  const fs::path dir = ensure_out_dir(args);
  write_file(dir / (sc_name_stem(sc) + "_trajectory.csv"),
             [&](std::ostream& out) { x.write_csv(out); });
  write_file(dir / (sc_name_stem(sc) + "_completion.csv"),
             [&](std::ostream& out) { gc.write_csv(out); });

  std::vector<Vec> samples = {sc.x0};
  for (double t : {0.25, 0.5, 0.75, 1.0})
    samples.push_back(x.eval(sc.a + t * (sc.b - sc.a)));
  const CommutativityReport comm = commutativity_report(dyn, samples);

  std::cout << "Var(u)        = " << double_to_string(u->total_variation()) << "\n"
            << "Lipschitz L   = " << double_to_string(gc.lipschitz()) << "\n"
            << "commutativity = "
            << (comm.commuting ? "commuting (sampled)"
                               : "non-commuting: [g" + std::to_string(comm.witness_alpha) +
                                     ",g" + std::to_string(comm.witness_beta) +
                                     "] norm " + double_to_string(comm.max_norm))
            << "\n";
  return 0;
}

int cmd_approximate(const CommonArgs& args) {
  const Scenario sc = load(args);
  if (sc.ks.empty())
    throw ConfigError("scenario has no sweep ks; pass --ks or add a [sweep] block");
  const Dynamics dyn = sc.make_dynamics();
  const auto v = sc.make_v();
  std::vector<double> taus = sc.taus;
  if (taus.empty()) taus = {sc.a + 0.25 * (sc.b - sc.a), sc.a + 0.5 * (sc.b - sc.a),
                            sc.a + 0.75 * (sc.b - sc.a), sc.b};
  const fs::path dir = ensure_out_dir(args);

  if (sc.family) {
    // Family sweep: integrate the AC member for each k and report errors
    // against the declared analytic target.
    if (!sc.has_target())
      throw ConfigError("family scenario needs a [target] block for the sweep");
    const ControlTrajectoryPair target = sc.make_target_pair();
    ApproxReport report;
    BVPath::Options relaxed;
    relaxed.variation_rel_tol = 1e-7;
    relaxed.variation_max_cells = 1 << 20;
    std::vector<double> costs;
    for (int k : sc.ks) {
      const auto u_k = sc.make_input(static_cast<double>(k), relaxed);
      const Trajectory x_k =
          integrate_caratheodory(dyn, *u_k, v ? &*v : nullptr, sc.x0, sc.step);
      ControlTrajectoryPair cand;
      cand.a = target.a;
      cand.b = target.b;
      cand.m = target.m;
      cand.n = target.n;
      cand.u = [u_k](double t) { return u_k->eval(t); };
      cand.x = [&x_k](double t) { return x_k.eval(t); };
      double sup = 0.0;
      for (int i = 0; i <= 100; ++i)
        sup = std::max(sup, norm2(x_k.eval(sc.a + (sc.b - sc.a) * (i / 100.0))));
      for (double tau : taus) {
        const auto [pw, l1] = pair_errors(target, cand, tau);
        report.rows.push_back({k, tau, pw, l1, u_k->total_variation(), sup});
      }
      if (sc.has_cost())
        costs.push_back(evaluate_cost_example(x_k, sc.make_cost_phi(), sc.cost_times));
    }
    write_file(dir / (sc_name_stem(sc) + "_approx.csv"),
               [&](std::ostream& out) { report.write_csv(out); });
    if (!costs.empty()) {
      write_file(dir / (sc_name_stem(sc) + "_cost.csv"), [&](std::ostream& out) {
        out << "k,cost\n";
        for (std::size_t i = 0; i < costs.size(); ++i)
          out << sc.ks[i] << ',' << double_to_string(costs[i]) << "\n";
      });
      std::cout << "cost at largest k = " << double_to_string(costs.back()) << "\n";
    }
    std::cout << "family sweep over " << sc.ks.size()
              << " members; errors decrease toward the declared target\n";
    return 0;
  }

  const GraphCompletion::Options gopt{sc.grid, true, 1e-9, 1000};
  const GraphCompletion gc = build_completion(sc.make_input(), sc.bridges, gopt);
  auto y = std::make_shared<const SpaceTimePath>(
      integrate_spacetime(gc, dyn, v ? &*v : nullptr, sc.x0, sc.step));
  const Trajectory x = gc_solution(y, gc.clock());

  ApproxOptions aopt;
  aopt.step = sc.step;
  aopt.support_halfwidth = sc.support;
  const auto steps =
      approximating_sequence(gc, dyn, v ? &*v : nullptr, sc.x0, sc.ks, aopt);

  ControlTrajectoryPair target;
  target.a = sc.a;
  target.b = sc.b;
  target.m = sc.m;
  target.n = sc.n;
  const auto u_path = gc.path();
  target.u = [u_path](double t) { return u_path->eval(t); };
  target.x = [&x](double t) { return x.eval(t); };
  const ApproxReport report = make_report(target, steps, taus);
  write_file(dir / (sc_name_stem(sc) + "_approx.csv"),
             [&](std::ostream& out) { report.write_csv(out); });

  const CertificateResult cert =
      bv_simple_certificate(report, gc.control_variation());
  std::cout << "BV-simple certificate: "
            << (cert.certified() ? "CERTIFIED" : "not certified") << "\n"
            << "  errors decreasing in k : " << (cert.decreasing ? "yes" : "NO") << "\n"
            << "  final max limit error  : " << double_to_string(cert.final_max_error)
            << (cert.below_threshold ? " <= " : " > ")
            << double_to_string(cert.threshold) << "\n"
            << "  Var(u_k) <= Var(phi)   : "
            << (cert.variation_budget_ok ? "yes" : "NO") << "\n";
  return 0;
}

int cmd_verify(const CommonArgs& args, const std::string& what) {
  if (!what.empty() && what != "all" && !is_builtin_scenario(what)) {
    // Validate a user scenario file: load + instantiate everything.
    const Scenario sc = load_scenario(what);
    (void)sc.make_dynamics();
    (void)sc.make_v();
    if (!sc.family) (void)sc.make_input();
    std::cout << "scenario '" << what << "' is valid\n";
    return 0;
  }
  VerifyOptions vopt;
  vopt.seed = args.seed;
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = run_acceptance(vopt);
  const double total = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
  const int failures = print_acceptance(std::cout, results, total);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"impulsim — simulation of impulsive control systems driven by "
               "bounded-variation inputs"};
  app.require_subcommand(1);

  CommonArgs args;

  auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
    if (needs_scenario)
      cmd->add_option("--scenario", args.scenario,
                      "scenario file or builtin (ex21, step_noncomm, step_comm)");
    cmd->add_option("--out", args.out_dir, "output directory for CSV files");
    cmd->add_option_function<double>(
        "--step", [&](double v) { args.step = v; }, "RK4 step override");
    cmd->add_option("--ks", args.ks, "sweep k values override")->delimiter(',');
    cmd->add_option("--taus", args.taus, "sweep tau values override")->delimiter(',');
    cmd->add_option("--k", args.k_value, "family parameter for solve (default 10)");
    cmd->add_option("--seed", args.seed, "seed for randomized checks (default 42)");
  };

  CLI::App* solve = app.add_subcommand("solve", "build a completion and integrate");
  add_common(solve, true);
  CLI::App* approximate =
      app.add_subcommand("approximate", "build the approximating sequence sweep");
  add_common(approximate, true);
  CLI::App* verify = app.add_subcommand("verify", "run the acceptance suite");
  std::string what = "all";
  verify->add_option("what", what, "'all' or a scenario file to validate");
  add_common(verify, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(args);
    if (approximate->parsed()) return cmd_approximate(args);
    if (verify->parsed()) return cmd_verify(args, what);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
