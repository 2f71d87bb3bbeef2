#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "impulsim/bv_path.hpp"

namespace impulsim {

/// Polyline arc in control space, traversed at constant speed on [0,1].
class Arc {
 public:
  explicit Arc(std::vector<Vec> points);
  static Arc straight(Vec from, Vec to);

  const std::vector<Vec>& points() const { return points_; }
  double length() const { return length_; }
  bool degenerate() const { return length_ == 0.0; }
  Vec eval(double theta) const;

 private:
  std::vector<Vec> points_;
  std::vector<double> cumlen_;
  double length_ = 0.0;
};

/// Default bridging arcs for one jump triple: straight chords from u_minus to
/// u_at and from u_at to u_plus (valid for the convex built-in control sets,
/// where the Whitney bound holds with M = 1). Coincident endpoints give
/// degenerate zero-length arcs. Throws DomainError when a point is outside U.
std::pair<Arc, Arc> bridge(const Vec& u_minus, const Vec& u_at, const Vec& u_plus,
                           const ControlSet& U);

/// Validates a user-supplied bridging arc against its endpoints and the
/// control set's Whitney constant. Throws DomainError (points outside U) or
/// PreconditionError (variation exceeds M times the endpoint distance).
void validate_bridge_arc(const Arc& arc, const Vec& from, const Vec& to,
                         const ControlSet& U);

/// Per-jump replacement arcs, keyed by 0-based breakpoint index. A missing
/// side keeps the straight default.
struct BridgeOverride {
  std::optional<Arc> minus, plus;
};
using BridgeOverrides = std::map<std::size_t, BridgeOverride>;

/// Clock sigma: [a,b] -> [0,1] selecting, for each t, a parameter with
/// (phi0,phi)(sigma(t)) = (t,u(t)). Left-continuous: at a jump it sits at the
/// end of the minus-side bridging arc. The canonical clock is
///   sigma(t) = (t - a + Var_[a,t](u)) / (b - a + Var_[a,b](u)),
/// with the left jump at t counted and the right jump excluded.
class Clock {
 public:
  Clock() = default;  // invalid

  static Clock canonical(std::shared_ptr<const BVPath> u);

  bool valid() const { return path_ != nullptr; }
  double operator()(double t) const;

  /// Denominator b - a + Var_[a,b](u).
  double normalizer() const { return normalizer_; }
  /// L with sigma(t2) - sigma(t1) >= (t2 - t1)/L for all t1 < t2.
  double slope_bound() const { return slope_L_; }
  /// 0 for a standalone canonical clock, otherwise the owning completion.
  std::uint64_t completion_id() const { return completion_id_; }
  const std::shared_ptr<const BVPath>& path() const { return path_; }

  struct JumpRow {
    std::size_t bp_index;
    double t;
    double s_minus, s_at, s_plus;  // sigma(t-), sigma(t), sigma(t+)
    bool has_jump() const { return s_plus > s_minus; }
  };
  /// One row per breakpoint of the underlying path, in time order.
  const std::vector<JumpRow>& jump_rows() const { return rows_; }

  /// Maximal affine pieces of the graph of sigma over [a,b], in time order;
  /// consecutive pieces share their t endpoint, and a gap between s1 of one
  /// piece and s0 of the next is a jump of sigma.
  struct Piece {
    double t0, t1, s0, s1;
  };
  const std::vector<Piece>& affine_graph() const { return pieces_; }

 private:
  std::shared_ptr<const BVPath> path_;
  double normalizer_ = 1.0;
  double slope_L_ = 1.0;
  std::vector<JumpRow> rows_;
  std::vector<Piece> pieces_;
  // Optional monotone remapping of the canonical value (used by completions
  // reparameterized by arclength); empty for the canonical clock.
  std::vector<double> remap_from_, remap_to_;
  std::uint64_t completion_id_ = 0;

  friend class GraphCompletion;
};

struct CompletionOptions {
  std::size_t base_grid = 16385;   // uniform grid resolution merged into the knots
  bool check_graph = true;         // verify the graph property after building
  double graph_tol = 1e-9;
  std::size_t graph_check_points = 1000;
};

/// Lipschitz space-time control (phi0, phi): [0,1] -> [a,b] x U whose image
/// contains the graph of u, with each jump bridged by an explicit arc. Built
/// by arclength reparameterization, so the stored grid is traversed at
/// constant speed and the Lipschitz constant equals the curve's variation.
class GraphCompletion {
 public:
  using Options = CompletionOptions;

  static GraphCompletion build(std::shared_ptr<const BVPath> u,
                               const BridgeOverrides& bridges = {},
                               const Options& options = {});

  /// Assembles a completion from explicit samples (no arclength pass). Used
  /// for perturbation experiments and reparameterizations; when u is null the
  /// object carries no clock and cannot produce graph-completion solutions.
  static GraphCompletion from_samples(std::shared_ptr<const BVPath> u,
                                      ControlSet control_set,
                                      std::vector<double> s,
                                      std::vector<double> phi0,
                                      std::vector<double> phi_flat,
                                      Clock clock, const Options& options = {});

  // Accessors.
  const std::vector<double>& grid() const { return s_; }
  const std::vector<double>& phi0_samples() const { return phi0_; }
  const std::vector<double>& phi_samples() const { return phi_; }  // stride m
  int control_dim() const { return m_; }
  double time_a() const { return a_; }
  double time_b() const { return b_; }
  double lipschitz() const { return lipschitz_L_; }
  /// Var_[0,1](phi0,phi): equal to the Lipschitz constant after the
  /// constant-speed reparameterization.
  double total_variation() const { return lipschitz_L_; }
  /// Var_[0,1](phi): variation of the control part alone (grid chord sum).
  double control_variation() const;
  const Clock& clock() const { return clock_; }
  const ControlSet& control_set() const { return control_set_; }
  const std::shared_ptr<const BVPath>& path() const { return path_; }
  std::uint64_t id() const { return id_; }

  struct JumpArc {
    std::size_t bp_index;
    double t;
    double c_minus, d_minus;  // parameter interval of the minus arc
    double c_plus, d_plus;    // parameter interval of the plus arc
  };
  const std::vector<JumpArc>& jump_arcs() const { return jump_arcs_; }

  double phi0(double s) const;
  Vec phi(double s) const;

  /// Maximal parameter interval [s1, s2] with phi0 == t (degenerate at
  /// continuity points), located by binary search on the monotone grid.
  /// Throws DomainError for t outside [a,b].
  std::pair<double, double> preimage(double t) const;

  /// Columns s, phi0, phi_1..phi_m.
  void write_csv(std::ostream& out) const;

  /// New completion traversing the same curve under the knot-wise increasing
  /// rescaling s -> eta(s) (eta(0)=0, eta(1)=1). The result is no longer
  /// constant-speed; its Lipschitz constant is recomputed from chords.
  GraphCompletion reparameterize(const std::function<double(double)>& eta) const;

 private:
  GraphCompletion() = default;
  void finalize(const Options& options);

  std::shared_ptr<const BVPath> path_;
  ControlSet control_set_;
  int m_ = 0;
  double a_ = 0.0, b_ = 1.0;
  std::vector<double> s_, phi0_, phi_;
  double lipschitz_L_ = 1.0;
  Clock clock_;
  std::vector<JumpArc> jump_arcs_;
  std::uint64_t id_ = 0;
};

/// Canonical clock of u (Clock::canonical).
Clock canonical_clock(std::shared_ptr<const BVPath> u);

/// Canonical completion of u (GraphCompletion::build).
GraphCompletion build_completion(std::shared_ptr<const BVPath> u,
                                 const BridgeOverrides& bridges = {},
                                 const GraphCompletion::Options& options = {});

}  // namespace impulsim
