#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "impulsim/approximation.hpp"

namespace impulsim {

/// Scenario parse/validation failure carrying a line number and field name.
class ScenarioError : public Error {
 public:
  ScenarioError(const std::string& what, int line, const std::string& field)
      : Error("line " + std::to_string(line) + ", " + field + ": " + what),
        line_(line),
        field_(field) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

/// Parsed and validated scenario file: dynamics, input path (possibly a
/// k-family), ordinary control, initial state, solver and sweep settings,
/// bridge overrides, and optional analytic target / cost blocks.
struct Scenario {
  std::string name;

  // [dynamics]
  int n = 0, m = 0, l = 0;
  std::vector<std::string> f_src;               // n expressions
  std::vector<std::vector<std::string>> g_src;  // m lists of n expressions
  double guard = 1e8;

  // [control_set]
  ControlSet control_set;

  // [input]
  double a = 0.0, b = 1.0;
  std::vector<double> breakpoints;
  struct SegmentSpec {
    std::vector<std::string> exprs;  // m expressions of t (and k), or
    std::vector<double> sample_ts;   // a sample table
    std::vector<Vec> sample_vals;
    bool is_expression() const { return !exprs.empty(); }
  };
  std::vector<SegmentSpec> segments;
  std::map<std::size_t, JumpTriple> jump_specs;  // 0-based breakpoint index
  bool family = false;                           // expressions reference k

  // [v]
  std::vector<Vec> v_samples;
  Vec v_lower, v_upper;

  // [initial]
  Vec x0;

  // [solver]
  double step = 1e-4;
  std::size_t grid = 16385;

  // [sweep]
  std::vector<int> ks;
  std::vector<double> taus;
  std::optional<double> support;

  // [bridges]
  std::map<std::size_t, BridgeOverride> bridges;  // 0-based breakpoint index

  // [target] — analytic limit pair for family sweeps
  std::vector<std::string> target_u_src;  // m expressions of t
  std::vector<std::string> target_x_src;  // n expressions of t
  bool has_target() const { return !target_u_src.empty(); }

  // [cost]
  std::string cost_phi_src;
  std::vector<double> cost_times;
  bool has_cost() const { return !cost_phi_src.empty(); }

  // ---- Instantiation ----
  Dynamics make_dynamics() const;
  /// Input path; k must be supplied for family scenarios (ConfigError if
  /// required and absent). Options let family sweeps relax the variation
  /// refinement when only u(t) and du/dt are consumed.
  std::shared_ptr<const BVPath> make_input(std::optional<double> k = {},
                                           BVPath::Options options = {}) const;
  std::optional<SampledControl> make_v() const;
  ControlTrajectoryPair make_target_pair() const;  // throws when absent
  std::function<double(double)> make_cost_phi() const;
};

/// Reads and validates a scenario file; every diagnostic names a line and
/// field. Built-in names ("ex21", "step_noncomm", "step_comm") bypass the
/// filesystem.
Scenario load_scenario(const std::string& path_or_builtin);

/// Parses scenario text (for tests and embedded scenarios).
Scenario parse_scenario(const std::string& text, const std::string& name);

std::vector<std::string> builtin_scenario_names();
bool is_builtin_scenario(const std::string& name);
Scenario builtin_scenario(const std::string& name);

}  // namespace impulsim
