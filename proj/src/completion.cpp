#include "impulsim/completion.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>

#include "impulsim/errors.hpp"

namespace impulsim {

namespace {
std::atomic<std::uint64_t> g_completion_counter{0};
std::uint64_t next_completion_id() { return ++g_completion_counter; }
}  // namespace

// ---------------------------------------------------------------------------
// Arc
// ---------------------------------------------------------------------------

Arc::Arc(std::vector<Vec> points) : points_(std::move(points)) {
  if (points_.empty()) throw ConfigError("arc: empty point list");
  const std::size_t d = points_.front().size();
  cumlen_.resize(points_.size(), 0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (points_[i].size() != d) throw ConfigError("arc: point dimension mismatch");
    cumlen_[i] = cumlen_[i - 1] + dist2(points_[i], points_[i - 1]);
  }
  length_ = cumlen_.back();
}

Arc Arc::straight(Vec from, Vec to) {
  std::vector<Vec> pts;
  pts.push_back(std::move(from));
  pts.push_back(std::move(to));
  return Arc(std::move(pts));
}

Vec Arc::eval(double theta) const {
  if (points_.size() == 1 || length_ == 0.0) return points_.front();
  theta = std::min(std::max(theta, 0.0), 1.0);
  const double target = theta * length_;
  const std::size_t i = cell_index(cumlen_, target);
  const double seg = cumlen_[i + 1] - cumlen_[i];
  const double frac = seg > 0.0 ? (target - cumlen_[i]) / seg : 1.0;
  return lerp(points_[i], points_[i + 1], frac);
}

std::pair<Arc, Arc> bridge(const Vec& u_minus, const Vec& u_at, const Vec& u_plus,
                           const ControlSet& U) {
  for (const Vec* v : {&u_minus, &u_at, &u_plus})
    if (!U.contains(*v, 1e-9))
      throw DomainError("bridge: endpoint outside the control set");
  return {Arc::straight(u_minus, u_at), Arc::straight(u_at, u_plus)};
}

void validate_bridge_arc(const Arc& arc, const Vec& from, const Vec& to,
                         const ControlSet& U) {
  if (arc.points().empty()) throw ConfigError("bridge arc: empty");
  if (dist2(arc.points().front(), from) > 1e-9 ||
      dist2(arc.points().back(), to) > 1e-9)
    throw ConfigError("bridge arc: endpoints do not match the jump values");
  for (const Vec& p : arc.points())
    if (!U.contains(p, 1e-9))
      throw DomainError("bridge arc: point outside the control set");
  const double bound = U.whitney_constant() * dist2(from, to);
  if (arc.length() > bound + 1e-12)
    throw PreconditionError("bridge arc: variation " + double_to_string(arc.length()) +
                            " exceeds the Whitney bound " + double_to_string(bound));
}

// ---------------------------------------------------------------------------
// Clock
// ---------------------------------------------------------------------------

Clock Clock::canonical(std::shared_ptr<const BVPath> u) {
  if (u == nullptr) throw UsageError("clock: null path");
  Clock c;
  c.path_ = std::move(u);
  const BVPath& p = *c.path_;
  c.normalizer_ = (p.b() - p.a()) + p.total_variation();
  c.slope_L_ = c.normalizer_;

  const auto& bps = p.breakpoints();
  c.rows_.resize(bps.size());
  for (std::size_t i = 0; i < bps.size(); ++i) {
    const double t = bps[i];
    const double base = t - p.a();
    JumpRow& row = c.rows_[i];
    row.bp_index = i;
    row.t = t;
    row.s_minus = (base + p.variation_before(i)) / c.normalizer_;
    row.s_at = (base + p.variation(t)) / c.normalizer_;
    row.s_plus = (base + p.variation_after(i)) / c.normalizer_;
  }

  // Affine graph: one piece per proxy-knot cell of every segment.
  for (std::size_t seg = 0; seg < p.segments().size(); ++seg) {
    const auto tab = p.segment_samples(seg);
    const double base_var = p.variation_after(seg);
    for (std::size_t q = 0; q + 1 < tab.ts.size(); ++q) {
      Piece piece;
      piece.t0 = tab.ts[q];
      piece.t1 = tab.ts[q + 1];
      piece.s0 = (piece.t0 - p.a() + base_var + tab.cumvar[q]) / c.normalizer_;
      piece.s1 = (piece.t1 - p.a() + base_var + tab.cumvar[q + 1]) / c.normalizer_;
      c.pieces_.push_back(piece);
    }
  }
  return c;
}

double Clock::operator()(double t) const {
  if (!valid()) throw UsageError("clock: not initialized");
  const BVPath& p = *path_;
  if (t < p.a() || t > p.b()) throw DomainError("clock: t outside [a,b]");
  const double shat = (t - p.a() + p.variation(t)) / normalizer_;
  if (remap_from_.empty()) return shat;
  return pl_interp(remap_from_, remap_to_, shat);
}

// ---------------------------------------------------------------------------
// GraphCompletion
// ---------------------------------------------------------------------------

namespace {

struct CurvePoint {
  double shat;  // canonical parameter
  double t;
  Vec u;
};

}  // namespace

GraphCompletion GraphCompletion::build(std::shared_ptr<const BVPath> u,
                                       const BridgeOverrides& bridges,
                                       const Options& options) {
  if (u == nullptr) throw UsageError("completion: null path");
  const BVPath& path = *u;
  const ControlSet& U = path.control_set();
  Clock canon = Clock::canonical(u);
  const double D = canon.normalizer();

  for (const auto& [bp, ov] : bridges) {
    if (bp >= path.breakpoints().size())
      throw ConfigError("completion: bridge override index out of range");
    const auto& row = canon.jump_rows()[bp];
    if (ov.minus.has_value() && !(row.s_at > row.s_minus))
      throw ConfigError("completion: minus-side override at a breakpoint without a left jump");
    if (ov.plus.has_value() && !(row.s_plus > row.s_at))
      throw ConfigError("completion: plus-side override at a breakpoint without a right jump");
  }

  // Walk the path in time order, emitting curve points in canonical order:
  // minus arc, plus arc at each breakpoint, proxy knots inside each segment.
  std::vector<CurvePoint> pts;
  const std::size_t nbp = path.breakpoints().size();
  for (std::size_t i = 0; i < nbp; ++i) {
    const auto& row = canon.jump_rows()[i];
    const auto& triple = path.jumps()[i];

    auto emit_arc = [&](const Arc& arc, double s_from, double s_to) {
      const auto& apts = arc.points();
      double cum = 0.0;
      for (std::size_t q = 0; q < apts.size(); ++q) {
        if (q > 0) cum += dist2(apts[q], apts[q - 1]);
        const double frac = arc.length() > 0.0 ? cum / arc.length() : 1.0;
        pts.push_back({s_from + frac * (s_to - s_from), row.t, apts[q]});
      }
    };

    const auto ov = bridges.find(i);
    if (row.s_at > row.s_minus) {
      Arc minus = (ov != bridges.end() && ov->second.minus.has_value())
                      ? *ov->second.minus
                      : Arc::straight(triple.left, triple.at);
      validate_bridge_arc(minus, triple.left, triple.at, U);
      emit_arc(minus, row.s_minus, row.s_at);
    } else {
      pts.push_back({row.s_at, row.t, triple.at});
    }
    if (row.s_plus > row.s_at) {
      Arc plus = (ov != bridges.end() && ov->second.plus.has_value())
                     ? *ov->second.plus
                     : Arc::straight(triple.at, triple.right);
      validate_bridge_arc(plus, triple.at, triple.right, U);
      emit_arc(plus, row.s_at, row.s_plus);
    }

    if (i + 1 < nbp) {
      const auto tab = path.segment_samples(i);
      const double base_var = path.variation_after(i);
      for (std::size_t q = 1; q + 1 < tab.ts.size(); ++q) {
        const double shat = (tab.ts[q] - path.a() + base_var + tab.cumvar[q]) / D;
        pts.push_back({shat, tab.ts[q], tab.value(q)});
      }
    }
  }

  // Drop duplicates / zero-length chords.
  std::vector<CurvePoint> clean;
  clean.reserve(pts.size());
  for (auto& p : pts) {
    if (!clean.empty()) {
      const CurvePoint& prev = clean.back();
      if (p.shat - prev.shat <= 1e-15 &&
          std::abs(p.t - prev.t) <= 1e-15 && dist2(p.u, prev.u) <= 1e-15)
        continue;
    }
    clean.push_back(std::move(p));
  }
  if (clean.size() < 2) throw ComputationError("completion: degenerate curve");

  // Arclength along the polyline.
  std::vector<double> xi(clean.size(), 0.0);
  for (std::size_t i = 1; i < clean.size(); ++i) {
    const double dt = clean[i].t - clean[i - 1].t;
    const double du = dist2(clean[i].u, clean[i - 1].u);
    xi[i] = xi[i - 1] + std::hypot(dt, du);
  }
  const double total_len = xi.back();
  if (!(total_len > 0.0)) throw ComputationError("completion: zero arclength");

  // Merge a uniform grid (in the final parameter) into the knot set. Points
  // too close to an existing knot are skipped: a sliver cell would let
  // coordinate rounding dominate its chord length and break the exact
  // constant-speed property of the final parameterization.
  std::vector<CurvePoint> knots;
  std::vector<double> knot_xi;
  const std::size_t base = std::max<std::size_t>(options.base_grid, 2);
  const double guard = 1e-6 * total_len;
  std::size_t next_uniform = 1;
  auto uniform_target = [&](std::size_t q) {
    return total_len * (static_cast<double>(q) / static_cast<double>(base - 1));
  };
  for (std::size_t i = 0; i < clean.size(); ++i) {
    while (i > 0 && next_uniform + 1 < base &&
           uniform_target(next_uniform) < xi[i] - guard) {
      const double target = uniform_target(next_uniform);
      ++next_uniform;
      if (!knot_xi.empty() && target - knot_xi.back() <= guard) continue;
      const double cell = xi[i] - xi[i - 1];
      const double frac = cell > 0.0 ? (target - xi[i - 1]) / cell : 0.0;
      CurvePoint mid;
      mid.shat = clean[i - 1].shat + frac * (clean[i].shat - clean[i - 1].shat);
      mid.t = clean[i - 1].t + frac * (clean[i].t - clean[i - 1].t);
      mid.u = lerp(clean[i - 1].u, clean[i].u, frac);
      knots.push_back(std::move(mid));
      knot_xi.push_back(target);
    }
    while (next_uniform + 1 < base && uniform_target(next_uniform) <= xi[i] + guard)
      ++next_uniform;  // uniform point coincides with a structural knot
    knots.push_back(clean[i]);
    knot_xi.push_back(xi[i]);
  }

  GraphCompletion gc;
  gc.path_ = u;
  gc.control_set_ = U;
  gc.m_ = path.dim();
  gc.a_ = path.a();
  gc.b_ = path.b();
  gc.lipschitz_L_ = total_len;
  const std::size_t N = knots.size();
  gc.s_.resize(N);
  gc.phi0_.resize(N);
  gc.phi_.resize(N * static_cast<std::size_t>(gc.m_));
  std::vector<double> shat_knots(N);
  for (std::size_t i = 0; i < N; ++i) {
    gc.s_[i] = knot_xi[i] / total_len;
    gc.phi0_[i] = knots[i].t;
    shat_knots[i] = knots[i].shat;
    for (int c = 0; c < gc.m_; ++c)
      gc.phi_[i * static_cast<std::size_t>(gc.m_) + static_cast<std::size_t>(c)] =
          knots[i].u[static_cast<std::size_t>(c)];
  }
  gc.s_.front() = 0.0;
  gc.s_.back() = 1.0;

  // Clock in the final parameterization.
  gc.id_ = next_completion_id();
  Clock clock = canon;
  clock.remap_from_ = std::move(shat_knots);
  clock.remap_to_ = gc.s_;
  clock.slope_L_ = total_len;
  clock.completion_id_ = gc.id_;
  auto remap = [&clock](double shat) {
    return pl_interp(clock.remap_from_, clock.remap_to_, shat);
  };
  for (auto& row : clock.rows_) {
    row.s_minus = remap(row.s_minus);
    row.s_at = remap(row.s_at);
    row.s_plus = remap(row.s_plus);
  }
  for (auto& piece : clock.pieces_) {
    piece.s0 = remap(piece.s0);
    piece.s1 = remap(piece.s1);
  }
  for (const auto& row : clock.rows_) {
    if (!row.has_jump()) continue;
    gc.jump_arcs_.push_back(
        {row.bp_index, row.t, row.s_minus, row.s_at, row.s_at, row.s_plus});
  }
  gc.clock_ = std::move(clock);

  gc.finalize(options);
  return gc;
}

void GraphCompletion::finalize(const Options& options) {
  const std::size_t N = s_.size();
  if (N < 2 || phi0_.size() != N || phi_.size() != N * static_cast<std::size_t>(m_))
    throw ComputationError("completion: inconsistent sample arrays");
  for (std::size_t i = 1; i < N; ++i) {
    if (!(s_[i] >= s_[i - 1]))
      throw ComputationError("completion: parameter grid not increasing");
    if (phi0_[i] < phi0_[i - 1] - 1e-12)
      throw ComputationError("completion: phi0 not monotone");
  }
  if (std::abs(phi0_.front() - a_) > 1e-9 || std::abs(phi0_.back() - b_) > 1e-9)
    throw ComputationError("completion: phi0 endpoint mismatch");
  phi0_.front() = a_;
  phi0_.back() = b_;

  // Lipschitz chords.
  double max_speed = 0.0;
  for (std::size_t i = 1; i < N; ++i) {
    const double ds = s_[i] - s_[i - 1];
    if (ds <= 0.0) continue;
    double du2 = 0.0;
    for (int c = 0; c < m_; ++c) {
      const double d = phi_[i * static_cast<std::size_t>(m_) + static_cast<std::size_t>(c)] -
                       phi_[(i - 1) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(c)];
      du2 += d * d;
    }
    max_speed = std::max(max_speed, std::hypot(phi0_[i] - phi0_[i - 1], std::sqrt(du2)) / ds);
  }
  if (max_speed > lipschitz_L_ * (1.0 + 1e-9))
    throw ComputationError("completion: chord speed exceeds the Lipschitz constant (max " +
                           double_to_string(max_speed) + " vs " +
                           double_to_string(lipschitz_L_) + ")");

  // Variation budget relative to the underlying path.
  if (path_ != nullptr) {
    const double M = control_set_.whitney_constant();
    const double budget =
        (b_ - a_) + (2.0 * M - 1.0) * path_->total_variation() + 1e-6;
    double var = 0.0;
    for (std::size_t i = 1; i < N; ++i) {
      double du2 = 0.0;
      for (int c = 0; c < m_; ++c) {
        const double d = phi_[i * static_cast<std::size_t>(m_) + static_cast<std::size_t>(c)] -
                         phi_[(i - 1) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(c)];
        du2 += d * d;
      }
      var += std::hypot(phi0_[i] - phi0_[i - 1], std::sqrt(du2));
    }
    if (var > budget)
      throw ComputationError("completion: variation exceeds the Whitney budget");
  }

  // Graph property on a dense time grid plus the breakpoints.
  if (options.check_graph && path_ != nullptr && clock_.valid()) {
    std::vector<double> ts;
    const std::size_t G = std::max<std::size_t>(options.graph_check_points, 2);
    ts.reserve(G + path_->breakpoints().size());
    for (std::size_t i = 0; i < G; ++i)
      ts.push_back(a_ + (b_ - a_) * (static_cast<double>(i) / static_cast<double>(G - 1)));
    for (double t : path_->breakpoints()) ts.push_back(t);
    for (double t : ts) {
      const double s = clock_(t);
      const Vec uval = path_->eval(t);
      const Vec pval = phi(s);
      double err = std::abs(phi0(s) - t);
      err = std::max(err, dist2(pval, uval));
      if (err > options.graph_tol)
        throw ComputationError("completion: graph property violated at t = " +
                               double_to_string(t) + " (err " + double_to_string(err) + ")");
    }
  }
}

GraphCompletion GraphCompletion::from_samples(std::shared_ptr<const BVPath> u,
                                              ControlSet control_set,
                                              std::vector<double> s,
                                              std::vector<double> phi0,
                                              std::vector<double> phi_flat,
                                              Clock clock, const Options& options) {
  GraphCompletion gc;
  gc.path_ = std::move(u);
  gc.control_set_ = std::move(control_set);
  gc.m_ = gc.control_set_.dim();
  if (phi0.empty()) throw ConfigError("completion: empty samples");
  gc.a_ = phi0.front();
  gc.b_ = phi0.back();
  gc.s_ = std::move(s);
  gc.phi0_ = std::move(phi0);
  gc.phi_ = std::move(phi_flat);
  // Lipschitz constant from chords.
  double max_speed = 0.0;
  for (std::size_t i = 1; i < gc.s_.size(); ++i) {
    const double ds = gc.s_[i] - gc.s_[i - 1];
    if (ds <= 0.0) continue;
    double du2 = 0.0;
    for (int c = 0; c < gc.m_; ++c) {
      const double d =
          gc.phi_[i * static_cast<std::size_t>(gc.m_) + static_cast<std::size_t>(c)] -
          gc.phi_[(i - 1) * static_cast<std::size_t>(gc.m_) + static_cast<std::size_t>(c)];
      du2 += d * d;
    }
    max_speed = std::max(max_speed, std::hypot(gc.phi0_[i] - gc.phi0_[i - 1], std::sqrt(du2)) / ds);
  }
  gc.lipschitz_L_ = max_speed;
  gc.id_ = next_completion_id();
  gc.clock_ = std::move(clock);
  gc.clock_.completion_id_ = gc.id_;
  if (gc.clock_.valid()) gc.clock_.slope_L_ = std::max(gc.clock_.slope_L_, max_speed);
  Options opts = options;
  opts.check_graph = options.check_graph && gc.path_ != nullptr && gc.clock_.valid();
  gc.finalize(opts);
  return gc;
}

double GraphCompletion::control_variation() const {
  double var = 0.0;
  const std::size_t m = static_cast<std::size_t>(m_);
  for (std::size_t i = 1; i < s_.size(); ++i) {
    double du2 = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const double d = phi_[i * m + c] - phi_[(i - 1) * m + c];
      du2 += d * d;
    }
    var += std::sqrt(du2);
  }
  return var;
}

double GraphCompletion::phi0(double s) const { return pl_interp(s_, phi0_, s); }

Vec GraphCompletion::phi(double s) const {
  Vec out(static_cast<std::size_t>(m_));
  if (s <= s_.front()) {
    for (int c = 0; c < m_; ++c) out[static_cast<std::size_t>(c)] = phi_[static_cast<std::size_t>(c)];
    return out;
  }
  if (s >= s_.back()) {
    const std::size_t off = (s_.size() - 1) * static_cast<std::size_t>(m_);
    for (int c = 0; c < m_; ++c) out[static_cast<std::size_t>(c)] = phi_[off + static_cast<std::size_t>(c)];
    return out;
  }
  const std::size_t i = cell_index(s_, s);
  const double ds = s_[i + 1] - s_[i];
  const double theta = ds > 0.0 ? (s - s_[i]) / ds : 1.0;
  const std::size_t o0 = i * static_cast<std::size_t>(m_);
  const std::size_t o1 = (i + 1) * static_cast<std::size_t>(m_);
  for (int c = 0; c < m_; ++c) {
    const std::size_t cc = static_cast<std::size_t>(c);
    out[cc] = phi_[o0 + cc] + theta * (phi_[o1 + cc] - phi_[o0 + cc]);
  }
  return out;
}

std::pair<double, double> GraphCompletion::preimage(double t) const {
  if (t < a_ || t > b_) throw DomainError("preimage: t outside [a,b]");
  // Entering parameter: first s with phi0(s) = t.
  const auto lo = std::lower_bound(phi0_.begin(), phi0_.end(), t);
  double s1;
  if (lo == phi0_.begin()) {
    s1 = s_.front();
  } else {
    const std::size_t i = static_cast<std::size_t>(lo - phi0_.begin());
    if (i < phi0_.size() && phi0_[i] == t) {
      s1 = s_[i];
    } else {
      const double span = phi0_[i] - phi0_[i - 1];
      const double frac = span > 0.0 ? (t - phi0_[i - 1]) / span : 1.0;
      s1 = s_[i - 1] + frac * (s_[i] - s_[i - 1]);
    }
  }
  // Leaving parameter: last s with phi0(s) = t.
  const auto hi = std::upper_bound(phi0_.begin(), phi0_.end(), t);
  double s2;
  if (hi == phi0_.end()) {
    s2 = s_.back();
  } else {
    const std::size_t i = static_cast<std::size_t>(hi - phi0_.begin());
    if (i > 0 && phi0_[i - 1] == t) {
      s2 = s_[i - 1];
    } else {
      const double span = phi0_[i] - phi0_[i - 1];
      const double frac = span > 0.0 ? (t - phi0_[i - 1]) / span : 0.0;
      s2 = s_[i - 1] + frac * (s_[i] - s_[i - 1]);
    }
  }
  if (s2 < s1) std::swap(s1, s2);
  return {s1, s2};
}

void GraphCompletion::write_csv(std::ostream& out) const {
  out << "s,phi0";
  for (int c = 1; c <= m_; ++c) out << ",phi_" << c;
  out << "\n";
  for (std::size_t i = 0; i < s_.size(); ++i) {
    out << double_to_string(s_[i]) << ',' << double_to_string(phi0_[i]);
    for (int c = 0; c < m_; ++c)
      out << ',' << double_to_string(phi_[i * static_cast<std::size_t>(m_) + static_cast<std::size_t>(c)]);
    out << "\n";
  }
}

GraphCompletion GraphCompletion::reparameterize(
    const std::function<double(double)>& eta) const {
  std::vector<double> new_s(s_.size());
  for (std::size_t i = 0; i < s_.size(); ++i) new_s[i] = eta(s_[i]);
  if (std::abs(new_s.front()) > 1e-12 || std::abs(new_s.back() - 1.0) > 1e-12)
    throw ConfigError("reparameterize: eta must fix 0 and 1");
  new_s.front() = 0.0;
  new_s.back() = 1.0;
  for (std::size_t i = 1; i < new_s.size(); ++i)
    if (!(new_s[i] >= new_s[i - 1]))
      throw ConfigError("reparameterize: eta must be increasing");

  Clock clock = clock_;
  if (clock.valid()) {
    for (double& v : clock.remap_to_) v = eta(v);
    for (auto& row : clock.rows_) {
      row.s_minus = eta(row.s_minus);
      row.s_at = eta(row.s_at);
      row.s_plus = eta(row.s_plus);
    }
    for (auto& p : clock.pieces_) {
      p.s0 = eta(p.s0);
      p.s1 = eta(p.s1);
    }
  }
  Options opts;
  opts.check_graph = clock.valid() && path_ != nullptr;
  GraphCompletion gc = from_samples(path_, control_set_, std::move(new_s), phi0_,
                                    phi_, std::move(clock), opts);
  std::vector<JumpArc> arcs = jump_arcs_;
  for (auto& a : arcs) {
    a.c_minus = eta(a.c_minus);
    a.d_minus = eta(a.d_minus);
    a.c_plus = eta(a.c_plus);
    a.d_plus = eta(a.d_plus);
  }
  gc.jump_arcs_ = std::move(arcs);
  return gc;
}

Clock canonical_clock(std::shared_ptr<const BVPath> u) {
  return Clock::canonical(std::move(u));
}

GraphCompletion build_completion(std::shared_ptr<const BVPath> u,
                                 const BridgeOverrides& bridges,
                                 const GraphCompletion::Options& options) {
  return GraphCompletion::build(std::move(u), bridges, options);
}

}  // namespace impulsim
