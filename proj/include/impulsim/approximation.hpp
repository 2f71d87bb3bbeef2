#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "impulsim/integrator.hpp"

namespace impulsim {

/// Standard bump kernel C*exp(-1/(1-theta^2)) on (-1,1), normalized to unit
/// mass, with cumulative tables for exact convolution against piecewise-affine
/// functions. support_halfwidth is the M of the scaling rho_k(t) = 2k rho(2kt),
/// so the k-th kernel is supported on [-M/2k, M/2k].
class MollifierKernel {
 public:
  /// Empty kernel; only standard() produces a usable one.
  MollifierKernel() = default;

  static MollifierKernel standard(double support_halfwidth);

  double support_halfwidth() const { return support_halfwidth_; }
  /// Unit-support profile value at theta (already normalized).
  double profile(double theta) const;
  /// Quadrature value of the profile's mass (should be 1 within 1e-10).
  double mass() const;
  /// P(theta) = integral_{-1}^{theta} profile.
  double cumulative(double theta) const;
  /// Q(theta) = integral_{-1}^{theta} theta' * profile(theta').
  double moment_cumulative(double theta) const;

 private:
  struct Tables;
  double support_halfwidth_ = 1.0;
  std::shared_ptr<const Tables> tables_;
};

/// Absolutely continuous strictly increasing map [a,b] -> [0,1]; either a
/// mollified clock or a mollified clock after jump surgery. Carries an exact
/// evaluator alongside its sample grid.
class SmoothClock {
 public:
  struct Surgery {
    std::size_t bp_index = 0;
    double t = 0.0;              // jump time t_i
    double s1 = 0.0, s_at = 0.0, s2 = 0.0;
    double t_lo = 0.0, t_hi = 0.0;  // inverse of the mollified clock at s1, s2
    double s_mid = 0.0;          // parameter the two legs meet at
    double t_mid = 0.0;          // time the legs meet at (= t for case A/C legs)
    bool applied = false;
  };

  double time_a() const;
  double time_b() const;
  int k() const;
  /// L with slope >= 1/L (inherited from the source clock).
  double slope_bound() const;

  double value(double t) const;
  /// Inverse map [0,1] -> [a,b] (the equi-Lipschitz phi_{0,k}).
  double inverse(double s) const;

  const std::vector<double>& t_grid() const;
  const std::vector<double>& values() const;
  const std::vector<Surgery>& surgeries() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  friend SmoothClock mollify_clock(const Clock&, int, const MollifierKernel&,
                                   const struct MollifyOptions&);
  friend SmoothClock fixup_clock(const SmoothClock&, const Clock&);
};

struct MollifyOptions {
  std::size_t base_grid = 2049;         // uniform time samples of the output
  std::size_t jump_window_points = 129; // extra samples across each jump window
};

/// Convolution of the odd-reflected extension of sigma with the scaled kernel.
/// Exact (to quadrature-table precision) on the clock's piecewise-affine
/// graph. Requires sigma strictly increasing with slope >= 1/L on its pieces;
/// throws PreconditionError otherwise.
SmoothClock mollify_clock(const Clock& sigma, int k, const MollifierKernel& kernel,
                          const MollifyOptions& options = {});

/// Piecewise-affine surgery on each jump interval [sigma(t_i-), sigma(t_i+)]
/// so that sigma_k(t_i) converges to sigma(t_i); where the surgery is not yet
/// admissible at this k, the mollified clock is kept on that interval.
SmoothClock fixup_clock(const SmoothClock& sigma_hat, const Clock& sigma);

/// Control/trajectory pair on [a,b] for the limit-solution error functional.
struct ControlTrajectoryPair {
  double a = 0.0, b = 1.0;
  int m = 0, n = 0;
  std::function<Vec(double)> u, x;
};

/// |(u_c,x_c)(tau) - (u,x)(tau)| and the trapezoid L1 distance on a uniform
/// grid; limit_error is their sum. Throws UsageError on interval/dimension
/// mismatch.
std::pair<double, double> pair_errors(const ControlTrajectoryPair& target,
                                      const ControlTrajectoryPair& candidate,
                                      double tau, std::size_t grid = 10001);
double limit_error(const ControlTrajectoryPair& target,
                   const ControlTrajectoryPair& candidate, double tau,
                   std::size_t grid = 10001);

struct ApproxOptions {
  double step = 1e-4;
  std::optional<double> support_halfwidth;  // default b - a
  MollifyOptions mollify;
  std::size_t report_grid = 10001;
  bool parallel = true;
};

/// One member of the approximating sequence u_k = phi o sigma_k,
/// x_k = y[phi_{0,k}, phi; v] o sigma_k.
struct ApproxStep {
  int k = 0;
  SmoothClock sigma_k;
  std::shared_ptr<const BVPath> u_k;  // sampled representation of phi o sigma_k
  Trajectory x_k;
  double var_uk = 0.0;
  double sup_xk = 0.0;
};

/// Builds the approximating sequence along ks (increasing). Per-k work runs
/// in parallel when enabled; results are returned in ks order.
std::vector<ApproxStep> approximating_sequence(const GraphCompletion& gc,
                                               const Dynamics& dyn,
                                               const SampledControl* v,
                                               const Vec& x0,
                                               const std::vector<int>& ks,
                                               const ApproxOptions& options = {});

struct ApproxRecord {
  int k = 0;
  double tau = 0.0;
  double pointwise_err = 0.0;
  double l1_err = 0.0;
  double var_uk = 0.0;
  double sup_xk = 0.0;
};

struct ApproxReport {
  std::vector<ApproxRecord> rows;  // ordered by k, then tau
  /// Columns k,tau,pointwise_err,l1_err,var_uk,sup_xk.
  void write_csv(std::ostream& out) const;
};

/// Per-(k, tau) error rows of a sequence against a target pair.
ApproxReport make_report(const ControlTrajectoryPair& target,
                         const std::vector<ApproxStep>& steps,
                         const std::vector<double>& taus,
                         std::size_t grid = 10001);

struct CertificateResult {
  bool decreasing = false;
  bool below_threshold = false;
  bool variation_budget_ok = false;
  double final_max_error = 0.0;
  double threshold = 1e-3;
  bool certified() const {
    return decreasing && below_threshold && variation_budget_ok;
  }
};

/// Checks the bounded-variation certificate on a report: limit_error
/// decreasing in k at every tau, below the threshold at the largest k, and
/// Var(u_k) within the budget var_phi for every k.
CertificateResult bv_simple_certificate(const ApproxReport& report, double var_phi,
                                        double threshold = 1e-3);

/// [g_a, g_b](x) = Dg_b(x) g_a(x) - Dg_a(x) g_b(x), with symbolic Jacobians.
Vec lie_bracket(const VectorField& g_alpha, const VectorField& g_beta, const Vec& x);

struct CommutativityReport {
  struct PairEntry {
    int alpha = 0, beta = 0;  // 1-based field indices
    double max_norm = 0.0;
  };
  std::vector<PairEntry> pairs;
  bool commuting = true;
  double max_norm = 0.0;
  int witness_alpha = 0, witness_beta = 0;
  Vec witness_point;
};

/// Samples all pairwise brackets; verdict "commuting" iff every norm is at
/// most tol at every sample point.
CommutativityReport commutativity_report(const Dynamics& dyn,
                                         const std::vector<Vec>& sample_points,
                                         double tol = 1e-9);

struct DependenceProbeResult {
  struct Row {
    double t = 0.0;
    double input = 0.0, output = 0.0, ratio = 0.0;
  };
  std::vector<Row> rows;
  double max_ratio = 0.0;
};

struct ProbeOptions {
  double step = 1e-4;
  std::size_t l1_grid = 10001;
  GraphCompletion::Options completion;
};

/// Empirical input-to-output stability ratio for commuting dynamics:
/// output = |x1(t)-x2(t)| + ||x1-x2||_1 over
/// input = |x1bar-x2bar| + |u1(a)-u2(a)| + |u1(t)-u2(t)| + ||u1-u2||_1,
/// with solutions taken as graph-completion solutions of the canonical
/// completions. Throws PreconditionError when the fields do not commute at
/// the probe's sample points.
DependenceProbeResult dependence_probe(const Dynamics& dyn,
                                       std::shared_ptr<const BVPath> u1,
                                       std::shared_ptr<const BVPath> u2,
                                       const SampledControl* v, const Vec& x1bar,
                                       const Vec& x2bar,
                                       const std::vector<double>& probe_times,
                                       const ProbeOptions& options = {});

}  // namespace impulsim
