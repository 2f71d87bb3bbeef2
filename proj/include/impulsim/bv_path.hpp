#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "impulsim/control_set.hpp"
#include "impulsim/expr.hpp"
#include "impulsim/numeric.hpp"

namespace impulsim {

/// One-sided values at a breakpoint. At the left endpoint left == at, at the
/// right endpoint right == at.
struct JumpTriple {
  Vec left, at, right;
};

/// Continuous piece of a path on a closed subinterval: either component
/// expressions of t (with k already bound) or a piecewise-linear sample table.
class PathSegment {
 public:
  static PathSegment expressions(std::vector<Expr> components);
  /// knots must be strictly increasing and span the segment interval.
  static PathSegment samples(std::vector<double> knots, std::vector<Vec> values);

  bool is_expression() const { return !components_.empty(); }
  const std::vector<Expr>& components() const { return components_; }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<Vec>& values() const { return values_; }

 private:
  std::vector<Expr> components_;
  std::vector<double> knots_;
  std::vector<Vec> values_;
};

struct BVPathOptions {
  /// Stop refining an expression segment's variation once the relative
  /// change between dyadic levels drops below this.
  double variation_rel_tol = 1e-10;
  int variation_initial_cells = 64;
  int variation_max_cells = 1 << 21;
  /// Tolerance for matching segment endpoint values against jump triples.
  double continuity_tol = 1e-9;
};

/// Pointwise-defined bounded-variation path u:[a,b] -> U with explicit jump
/// triples at its breakpoints. Immutable after construction; all queries are
/// pure and safe to call concurrently.
class BVPath {
 public:
  using Options = BVPathOptions;

  /// Builds and validates the path. Throws ConfigError on inconsistent data
  /// (breakpoints not increasing, segment/jump mismatch, values outside U)
  /// and ComputationError when variation refinement fails to converge.
  BVPath(double a, double b, std::vector<double> breakpoints,
         std::vector<PathSegment> segments, std::vector<JumpTriple> jumps,
         ControlSet control_set, Options options = {});

  /// Convenience: single expression segment on [a,b], continuous path.
  static BVPath from_expressions(double a, double b, std::vector<Expr> comps,
                                 ControlSet control_set, Options options = {});
  /// Convenience: continuous piecewise-linear path through the given samples.
  static BVPath from_samples(double a, double b, std::vector<double> knots,
                             std::vector<Vec> values, ControlSet control_set,
                             Options options = {});

  double a() const { return a_; }
  double b() const { return b_; }
  int dim() const { return dim_; }
  const ControlSet& control_set() const { return control_set_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<JumpTriple>& jumps() const { return jumps_; }
  const std::vector<PathSegment>& segments() const { return segments_; }

  /// Pointwise value; the at-value of the triple at breakpoints.
  /// Throws DomainError for t outside [a,b].
  Vec eval(double t) const;

  /// (left limit, right limit) at t; both equal eval(t) where the path is
  /// continuous, and the one-sided limits at a/b equal eval there.
  std::pair<Vec, Vec> one_sided_limits(double t) const;

  /// Total variation on [a,t]. At an interior breakpoint t_i <= t the jump
  /// |u(t_i)-u(t_i-)| counts fully and |u(t_i+)-u(t_i)| only when t > t_i.
  double variation(double t) const;

  /// variation(b): the full-interval total (right jump at b is empty).
  double total_variation() const { return total_variation_; }

  /// Variation limits flanking breakpoint index i: the value just before t_i
  /// and the value for t just after t_i.
  double variation_before(std::size_t bp_index) const;
  double variation_after(std::size_t bp_index) const;

  bool has_jumps() const;

  /// Time knots at which the cumulative-variation (and value) interpolation
  /// is exact: breakpoints plus sample/refinement knots of every segment.
  const std::vector<double>& structural_knots() const { return knot_ts_; }

  /// View of segment i's proxy grid: knots (spanning the segment interval),
  /// flat values at the knots (stride dim), and cumulative variation
  /// starting at 0.
  struct SegmentView {
    const std::vector<double>& ts;
    const std::vector<double>& values_flat;
    const std::vector<double>& cumvar;
    int dim;
    Vec value(std::size_t q) const {
      return Vec(values_flat.begin() + static_cast<long>(q) * dim,
                 values_flat.begin() + static_cast<long>(q + 1) * dim);
    }
  };
  SegmentView segment_samples(std::size_t i) const {
    return {tables_[i].ts, tables_[i].vals, tables_[i].cumvar, dim_};
  }

 private:
  double a_ = 0.0, b_ = 1.0;
  int dim_ = 0;
  std::vector<double> breakpoints_;
  std::vector<PathSegment> segments_;
  std::vector<JumpTriple> jumps_;
  ControlSet control_set_;
  Options options_;

  // Per segment: refined knot grid, flat values at knots (stride dim), and
  // cumulative variation at knots (starting from 0 within the segment).
  struct SegmentTable {
    std::vector<double> ts;
    std::vector<double> vals;  // stride dim
    std::vector<double> cumvar;
  };
  std::vector<SegmentTable> tables_;
  std::vector<double> jump_left_;     // |at - left| per breakpoint
  std::vector<double> jump_right_;    // |right - at| per breakpoint
  std::vector<double> cum_before_;    // variation accumulated strictly before t_i
  double total_variation_ = 0.0;
  std::vector<double> knot_ts_;       // merged structural knots

  Vec segment_value(std::size_t seg, double t) const;
  void build_tables();
  void validate() const;
};

/// Ordinary bounded measurable control v:[a,b] -> V stored as a uniform
/// sample table with left-continuous piecewise-constant interpolation:
/// v(t) = samples[j] on (t_{j-1}, t_j], v(a) = samples[0].
class SampledControl {
 public:
  SampledControl() = default;
  SampledControl(double a, double b, int dim, std::vector<Vec> samples,
                 Vec lower, Vec upper);

  static SampledControl constant(double a, double b, Vec value, Vec lower, Vec upper);

  double a() const { return a_; }
  double b() const { return b_; }
  int dim() const { return dim_; }
  bool empty() const { return samples_.empty(); }

  Vec eval(double t) const;

 private:
  double a_ = 0.0, b_ = 1.0;
  int dim_ = 0;
  std::vector<Vec> samples_;
  Vec lower_, upper_;
};

}  // namespace impulsim
