#pragma once

#include <vector>

#include "impulsim/numeric.hpp"

namespace impulsim {

/// Compact control set U in R^m. Two kinds are built in: an axis-aligned box
/// and the convex hull of a finite vertex list. Both are convex, so straight
/// chords between members stay inside the set and whitney_constant = 1 is
/// always valid; a larger constant may be declared to admit longer
/// user-supplied bridging arcs.
class ControlSet {
 public:
  enum class Kind { Box, Hull };

  /// Empty set; only box()/hull() produce usable instances.
  ControlSet() = default;

  static ControlSet box(Vec lower, Vec upper, double whitney_constant = 1.0);
  static ControlSet hull(std::vector<Vec> vertices, double whitney_constant = 1.0);

  int dim() const { return dim_; }
  Kind kind() const { return kind_; }
  double whitney_constant() const { return whitney_; }

  /// Membership up to tol (Euclidean distance for hulls, per-axis for boxes).
  bool contains(const Vec& u, double tol = 1e-9) const;

  /// Distance from u to the set (0 inside).
  double distance(const Vec& u) const;

  /// Point of the set closest to u (u itself when inside).
  Vec project(const Vec& u) const;

  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  const std::vector<Vec>& vertices() const { return vertices_; }

 private:
  int dim_ = 0;
  Kind kind_ = Kind::Box;
  double whitney_ = 1.0;
  Vec lower_, upper_;          // Box
  std::vector<Vec> vertices_;  // Hull
};

}  // namespace impulsim
