#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "impulsim/completion.hpp"
#include "impulsim/dynamics.hpp"

namespace impulsim {

/// Numerical solution (y0, y): [0,1] -> [a,b] x R^n of the pseudo-time system
///   y0' = phi0'(s),
///   y'  = f(y0, y, phi(s), psi(s)) phi0'(s) + sum_a g_a(y) phi_a'(s),
/// sampled at every solver substep; piecewise-linear in between.
class SpaceTimePath {
 public:
  SpaceTimePath(int n, double a, double b, std::vector<double> s,
                std::vector<double> y0, std::vector<double> y_flat,
                std::uint64_t completion_id, double step, std::size_t steps);

  int dim() const { return n_; }
  double time_a() const { return a_; }
  double time_b() const { return b_; }
  const std::vector<double>& grid() const { return s_; }
  const std::vector<double>& y0_samples() const { return y0_; }
  const std::vector<double>& y_samples() const { return y_; }  // stride n
  std::uint64_t completion_id() const { return completion_id_; }
  double step() const { return step_; }
  std::size_t step_count() const { return steps_; }

  double y0(double s) const;
  Vec y(double s) const;

 private:
  int n_ = 0;
  double a_ = 0.0, b_ = 1.0;
  std::vector<double> s_, y0_, y_;
  std::uint64_t completion_id_ = 0;
  double step_ = 0.0;
  std::size_t steps_ = 0;
};

/// Fixed-step RK4 on s in [0,1] with phi0', phi' taken as the chord slopes of
/// the completion grid; substeps never straddle a grid knot, and psi(s) =
/// v(phi0(s)) with left-continuous sampling. v may be null when l = 0.
/// Throws BlowUpError past the growth guard and NumericError on non-finite
/// state.
SpaceTimePath integrate_spacetime(const GraphCompletion& gc, const Dynamics& dyn,
                                  const SampledControl* v, const Vec& x0,
                                  double step);

/// Trajectory t -> x(t) in real time, with stored one-sided limits at jump
/// times. Backed by samples, a function, or a space-time path composed with a
/// clock (the graph-completion route).
class Trajectory {
 public:
  struct Jump {
    double t;
    Vec left, at, right;
  };

  Trajectory() = default;

  static Trajectory from_samples(double a, double b, int n,
                                 std::vector<double> ts, std::vector<double> xs_flat);
  static Trajectory from_function(double a, double b, int n,
                                  std::function<Vec(double)> fn);
  /// x(t) = y(sigma(t)) for an arbitrary time-to-parameter map; jump rows
  /// may be supplied when sigma has known discontinuities.
  static Trajectory composed(std::shared_ptr<const SpaceTimePath> y,
                             std::function<double(double)> sigma, double a,
                             double b, std::vector<Jump> jumps = {});

  double a() const { return a_; }
  double b() const { return b_; }
  int dim() const { return n_; }

  Vec eval(double t) const;
  Vec left_limit(double t) const;
  Vec right_limit(double t) const;
  const std::vector<Jump>& jumps() const { return jumps_; }

  /// Rows t, x_1..x_n on a uniform grid of the given size, with jump-envelope
  /// rows at stored jumps; columns per the trajectory CSV schema.
  void write_csv(std::ostream& out, std::size_t grid_points = 1001) const;

 private:
  double a_ = 0.0, b_ = 1.0;
  int n_ = 0;
  // sample backend
  std::vector<double> ts_, xs_;
  // function backend
  std::function<Vec(double)> fn_;
  // composed backend
  std::shared_ptr<const SpaceTimePath> path_;
  std::function<double(double)> sigma_;
  std::vector<Jump> jumps_;
};

/// Single-valued graph-completion solution x(t) = y(sigma(t)) with the jump
/// envelope y(sigma(t-)), y(sigma(t+)) stored per jump. Throws UsageError
/// when y was not integrated over the clock's completion.
Trajectory gc_solution(std::shared_ptr<const SpaceTimePath> y, const Clock& clock);

/// Classical Caratheodory solution for an absolutely continuous input: RK4 on
/// [a,b] for dx = f dt + sum_a g_a du_a, with du from symbolic derivatives on
/// expression segments and chord slopes on sample tables. Throws
/// PreconditionError when u has a jump.
Trajectory integrate_caratheodory(const Dynamics& dyn, const BVPath& u,
                                  const SampledControl* v, const Vec& x0,
                                  double step);

/// x6(1-endpoint) + max over times of (x4(t) - exp(phi(t)))^2; requires
/// dim >= 6 (UsageError otherwise).
double evaluate_cost_example(const Trajectory& x,
                             const std::function<double(double)>& phi,
                             const std::vector<double>& times);

}  // namespace impulsim
