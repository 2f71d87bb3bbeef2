#include "impulsim/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "impulsim/errors.hpp"

namespace impulsim {

void Dynamics::validate() const {
  if (n < 1 || m < 0 || l < 0) throw ConfigError("dynamics: bad dimensions");
  if (drift.dim() != n) throw ConfigError("dynamics: drift must have n components");
  if (static_cast<int>(g.size()) != m)
    throw ConfigError("dynamics: need one vector field per impulsive channel");
  for (const Expr& e : drift.components()) {
    for (const Variable& var : e.variables()) {
      if (var.kind == VarKind::K) throw ConfigError("dynamics: unbound parameter k in drift");
      if (var.kind == VarKind::X && var.index > n)
        throw ConfigError("dynamics: drift references " + var.name());
      if (var.kind == VarKind::U && var.index > m)
        throw ConfigError("dynamics: drift references " + var.name());
      if (var.kind == VarKind::V && var.index > l)
        throw ConfigError("dynamics: drift references " + var.name());
    }
  }
  for (std::size_t a = 0; a < g.size(); ++a) {
    if (g[a].dim() != n)
      throw ConfigError("dynamics: g" + std::to_string(a + 1) + " must have n components");
    for (const Expr& e : g[a].components()) {
      for (const Variable& var : e.variables()) {
        if (var.kind != VarKind::X || var.index > n)
          throw ConfigError("dynamics: g" + std::to_string(a + 1) +
                            " may only reference x variables, got " + var.name());
      }
    }
  }
  if (!(growth_guard > 0.0)) throw ConfigError("dynamics: growth guard must be positive");
}

// ---------------------------------------------------------------------------
// SpaceTimePath
// ---------------------------------------------------------------------------

SpaceTimePath::SpaceTimePath(int n, double a, double b, std::vector<double> s,
                             std::vector<double> y0, std::vector<double> y_flat,
                             std::uint64_t completion_id, double step,
                             std::size_t steps)
    : n_(n), a_(a), b_(b), s_(std::move(s)), y0_(std::move(y0)),
      y_(std::move(y_flat)), completion_id_(completion_id), step_(step),
      steps_(steps) {
  if (s_.size() < 2 || y0_.size() != s_.size() ||
      y_.size() != s_.size() * static_cast<std::size_t>(n_))
    throw UsageError("space-time path: inconsistent sample arrays");
}

double SpaceTimePath::y0(double s) const { return pl_interp(s_, y0_, s); }

Vec SpaceTimePath::y(double s) const {
  const std::size_t n = static_cast<std::size_t>(n_);
  Vec out(n);
  std::size_t i;
  double theta;
  if (s <= s_.front()) {
    i = 0;
    theta = 0.0;
  } else if (s >= s_.back()) {
    i = s_.size() - 2;
    theta = 1.0;
  } else {
    i = cell_index(s_, s);
    const double ds = s_[i + 1] - s_[i];
    theta = ds > 0.0 ? (s - s_[i]) / ds : 1.0;
  }
  const std::size_t o0 = i * n, o1 = (i + 1) * n;
  for (std::size_t c = 0; c < n; ++c)
    out[c] = y_[o0 + c] + theta * (y_[o1 + c] - y_[o0 + c]);
  return out;
}

// ---------------------------------------------------------------------------
// RK4 cores
// ---------------------------------------------------------------------------

namespace {

void check_state(const Vec& y, double guard) {
  for (double v : y) {
    if (!std::isfinite(v)) throw NumericError("integration produced a non-finite state");
    if (std::abs(v) > guard)
      throw BlowUpError("state norm exceeded the growth guard " + double_to_string(guard));
  }
}

}  // namespace

SpaceTimePath integrate_spacetime(const GraphCompletion& gc, const Dynamics& dyn,
                                  const SampledControl* v, const Vec& x0,
                                  double step) {
  dyn.validate();
  if (static_cast<int>(x0.size()) != dyn.n)
    throw UsageError("integrate: initial state has wrong dimension");
  if (dyn.m != gc.control_dim())
    throw UsageError("integrate: completion control dimension mismatch");
  if (!(step > 0.0)) throw UsageError("integrate: step must be positive");
  if (!all_finite(x0)) throw NumericError("integrate: non-finite initial state");
  if (v != nullptr && dyn.l > 0 && v->dim() != dyn.l)
    throw UsageError("integrate: v dimension mismatch");

  const std::vector<double>& grid = gc.grid();
  const std::vector<double>& phi0 = gc.phi0_samples();
  const std::vector<double>& phi = gc.phi_samples();
  const std::size_t m = static_cast<std::size_t>(dyn.m);
  const std::size_t n = static_cast<std::size_t>(dyn.n);
  const double a = gc.time_a(), b = gc.time_b();

  std::vector<double> out_s, out_y0, out_y;
  const std::size_t approx = grid.size() + static_cast<std::size_t>(1.0 / step) + 2;
  out_s.reserve(approx);
  out_y0.reserve(approx);
  out_y.reserve(approx * n);

  Vec y = x0;
  Vec k1(n), k2(n), k3(n), k4(n), stage(n), fval(n), gval(n);
  Vec u_stage(m), v_stage;
  std::size_t nsteps = 0;

  auto push_sample = [&](double s, double y0val) {
    out_s.push_back(s);
    out_y0.push_back(y0val);
    out_y.insert(out_y.end(), y.begin(), y.end());
  };
  push_sample(grid.front(), phi0.front());

  for (std::size_t cell = 0; cell + 1 < grid.size(); ++cell) {
    const double s0 = grid[cell], s1 = grid[cell + 1];
    const double ds = s1 - s0;
    if (ds <= 0.0) continue;
    const double d0 = (phi0[cell + 1] - phi0[cell]) / ds;
    std::vector<double> dphi(m);
    for (std::size_t c = 0; c < m; ++c)
      dphi[c] = (phi[(cell + 1) * m + c] - phi[cell * m + c]) / ds;

    const std::size_t nsub =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ds / step - 1e-12)));
    const double h = ds / static_cast<double>(nsub);

    auto rhs = [&](double s, const Vec& state, Vec& out) {
      const double frac = (s - s0);
      const double t_here = phi0[cell] + frac * d0;
      for (std::size_t c = 0; c < m; ++c)
        u_stage[c] = phi[cell * m + c] + frac * dphi[c];
      EvalEnv env;
      env.t = t_here;
      env.x = std::span<const double>(state.data(), state.size());
      env.u = std::span<const double>(u_stage.data(), u_stage.size());
      if (v != nullptr && !v->empty()) {
        v_stage = v->eval(std::min(std::max(t_here, a), b));
        env.v = std::span<const double>(v_stage.data(), v_stage.size());
      }
      dyn.drift.eval_into(env, fval);
      for (std::size_t c = 0; c < n; ++c) out[c] = fval[c] * d0;
      for (std::size_t alpha = 0; alpha < m; ++alpha) {
        if (dphi[alpha] == 0.0) continue;
        dyn.g[alpha].eval_into(env, gval);
        for (std::size_t c = 0; c < n; ++c) out[c] += gval[c] * dphi[alpha];
      }
    };

    for (std::size_t sub = 0; sub < nsub; ++sub) {
      const double s = s0 + h * static_cast<double>(sub);
      rhs(s, y, k1);
      for (std::size_t c = 0; c < n; ++c) stage[c] = y[c] + 0.5 * h * k1[c];
      rhs(s + 0.5 * h, stage, k2);
      for (std::size_t c = 0; c < n; ++c) stage[c] = y[c] + 0.5 * h * k2[c];
      rhs(s + 0.5 * h, stage, k3);
      for (std::size_t c = 0; c < n; ++c) stage[c] = y[c] + h * k3[c];
      const double s_end = sub + 1 == nsub ? s1 : s + h;
      rhs(s_end, stage, k4);
      for (std::size_t c = 0; c < n; ++c)
        y[c] += (h / 6.0) * (k1[c] + 2.0 * (k2[c] + k3[c]) + k4[c]);
      check_state(y, dyn.growth_guard);
      ++nsteps;
      // y0 solves y0' = d0 exactly; evaluate it rather than accumulate.
      const double y0val =
          sub + 1 == nsub ? phi0[cell + 1] : phi0[cell] + (s_end - s0) * d0;
      push_sample(s_end, y0val);
    }
  }

  return SpaceTimePath(dyn.n, a, b, std::move(out_s), std::move(out_y0),
                       std::move(out_y), gc.id(), step, nsteps);
}

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

Trajectory Trajectory::from_samples(double a, double b, int n,
                                    std::vector<double> ts,
                                    std::vector<double> xs_flat) {
  Trajectory tr;
  tr.a_ = a;
  tr.b_ = b;
  tr.n_ = n;
  tr.ts_ = std::move(ts);
  tr.xs_ = std::move(xs_flat);
  if (tr.ts_.size() < 2 || tr.xs_.size() != tr.ts_.size() * static_cast<std::size_t>(n))
    throw UsageError("trajectory: inconsistent sample arrays");
  return tr;
}

Trajectory Trajectory::from_function(double a, double b, int n,
                                     std::function<Vec(double)> fn) {
  Trajectory tr;
  tr.a_ = a;
  tr.b_ = b;
  tr.n_ = n;
  tr.fn_ = std::move(fn);
  return tr;
}

Trajectory Trajectory::composed(std::shared_ptr<const SpaceTimePath> y,
                                std::function<double(double)> sigma, double a,
                                double b, std::vector<Jump> jumps) {
  Trajectory tr;
  tr.a_ = a;
  tr.b_ = b;
  tr.n_ = y->dim();
  tr.path_ = std::move(y);
  tr.sigma_ = std::move(sigma);
  tr.jumps_ = std::move(jumps);
  return tr;
}

Vec Trajectory::eval(double t) const {
  if (t < a_ || t > b_) throw DomainError("trajectory: t outside [a,b]");
  if (path_ != nullptr) return path_->y(sigma_(t));
  if (fn_) return fn_(t);
  const std::size_t n = static_cast<std::size_t>(n_);
  Vec out(n);
  std::size_t i;
  double theta;
  if (t <= ts_.front()) {
    i = 0;
    theta = 0.0;
  } else if (t >= ts_.back()) {
    i = ts_.size() - 2;
    theta = 1.0;
  } else {
    i = cell_index(ts_, t);
    const double dt = ts_[i + 1] - ts_[i];
    theta = dt > 0.0 ? (t - ts_[i]) / dt : 1.0;
  }
  for (std::size_t c = 0; c < n; ++c)
    out[c] = xs_[i * n + c] + theta * (xs_[(i + 1) * n + c] - xs_[i * n + c]);
  return out;
}

Vec Trajectory::left_limit(double t) const {
  for (const Jump& j : jumps_)
    if (j.t == t) return j.left;
  return eval(t);
}

Vec Trajectory::right_limit(double t) const {
  for (const Jump& j : jumps_)
    if (j.t == t) return j.right;
  return eval(t);
}

void Trajectory::write_csv(std::ostream& out, std::size_t grid_points) const {
  out << "t";
  for (int c = 1; c <= n_; ++c) out << ",x_" << c;
  out << ",side\n";
  const std::size_t G = std::max<std::size_t>(grid_points, 2);
  std::size_t next_jump = 0;
  auto emit = [&](double t, const Vec& x, const char* side) {
    out << double_to_string(t);
    for (double v : x) out << ',' << double_to_string(v);
    out << ',' << side << "\n";
  };
  for (std::size_t i = 0; i < G; ++i) {
    const double t = a_ + (b_ - a_) * (static_cast<double>(i) / static_cast<double>(G - 1));
    while (next_jump < jumps_.size() && jumps_[next_jump].t <= t) {
      const Jump& j = jumps_[next_jump];
      emit(j.t, j.left, "left");
      emit(j.t, j.at, "");
      emit(j.t, j.right, "right");
      ++next_jump;
    }
    bool is_jump_time = false;
    for (const Jump& j : jumps_)
      if (j.t == t) is_jump_time = true;
    if (!is_jump_time) emit(t, eval(t), "");
  }
}

Trajectory gc_solution(std::shared_ptr<const SpaceTimePath> y, const Clock& clock) {
  if (y == nullptr) throw UsageError("gc solution: null space-time path");
  if (!clock.valid()) throw UsageError("gc solution: clock not initialized");
  if (clock.completion_id() == 0 || y->completion_id() != clock.completion_id())
    throw UsageError("gc solution: clock and space-time path come from different completions");

  std::vector<Trajectory::Jump> jumps;
  for (const auto& row : clock.jump_rows()) {
    if (!row.has_jump()) continue;
    Trajectory::Jump j;
    j.t = row.t;
    j.left = y->y(row.s_minus);
    j.at = y->y(row.s_at);
    j.right = y->y(row.s_plus);
    jumps.push_back(std::move(j));
  }
  const BVPath& path = *clock.path();
  Clock sigma = clock;
  return Trajectory::composed(
      std::move(y), [sigma](double t) { return sigma(t); }, path.a(), path.b(),
      std::move(jumps));
}

Trajectory integrate_caratheodory(const Dynamics& dyn, const BVPath& u,
                                  const SampledControl* v, const Vec& x0,
                                  double step) {
  dyn.validate();
  if (u.has_jumps())
    throw PreconditionError("caratheodory: input has jumps; use the space-time route");
  if (static_cast<int>(x0.size()) != dyn.n)
    throw UsageError("integrate: initial state has wrong dimension");
  if (dyn.m != u.dim()) throw UsageError("integrate: control dimension mismatch");
  if (!(step > 0.0)) throw UsageError("integrate: step must be positive");
  if (!all_finite(x0)) throw NumericError("integrate: non-finite initial state");
  if (v != nullptr && dyn.l > 0 && v->dim() != dyn.l)
    throw UsageError("integrate: v dimension mismatch");

  const std::size_t n = static_cast<std::size_t>(dyn.n);
  const std::size_t m = static_cast<std::size_t>(dyn.m);

  // Per-segment derivative data: symbolic components for expressions,
  // otherwise chord slopes between sample knots.
  struct SegDeriv {
    bool symbolic = false;
    std::vector<Expr> dexprs;
  };
  std::vector<SegDeriv> derivs(u.segments().size());
  for (std::size_t i = 0; i < u.segments().size(); ++i) {
    const PathSegment& seg = u.segments()[i];
    if (seg.is_expression()) {
      derivs[i].symbolic = true;
      for (const Expr& e : seg.components())
        derivs[i].dexprs.push_back(e.derivative({VarKind::T, 0}));
    }
  }

  std::vector<double> out_t, out_x;
  Vec x = x0;
  Vec k1(n), k2(n), k3(n), k4(n), stage(n), fval(n), gval(n);
  Vec u_val(m), du_val(m), v_stage;

  auto push_sample = [&](double t) {
    out_t.push_back(t);
    out_x.insert(out_x.end(), x.begin(), x.end());
  };
  push_sample(u.a());

  for (std::size_t segi = 0; segi < u.segments().size(); ++segi) {
    const auto tab = u.segment_samples(segi);
    const PathSegment& seg = u.segments()[segi];
    const bool symbolic = derivs[segi].symbolic;
    // For sample segments, align substeps to the sample knots; expression
    // segments are smooth and use the segment interval directly.
    std::vector<double> cells;
    if (symbolic) {
      cells = {tab.ts.front(), tab.ts.back()};
    } else {
      cells = tab.ts;
    }
    for (std::size_t cell = 0; cell + 1 < cells.size(); ++cell) {
      const double t0 = cells[cell], t1 = cells[cell + 1];
      const double dt_cell = t1 - t0;
      if (dt_cell <= 0.0) continue;
      std::vector<double> slope(m, 0.0);
      if (!symbolic) {
        for (std::size_t c = 0; c < m; ++c)
          slope[c] = (tab.values_flat[(cell + 1) * m + c] -
                      tab.values_flat[cell * m + c]) /
                     dt_cell;
      }
      auto rhs = [&](double t, const Vec& state, Vec& out) {
        EvalEnv env;
        env.t = t;
        if (symbolic) {
          for (std::size_t c = 0; c < m; ++c) {
            u_val[c] = seg.components()[c].eval(env);
            du_val[c] = derivs[segi].dexprs[c].eval(env);
          }
        } else {
          const double frac = t - t0;
          for (std::size_t c = 0; c < m; ++c) {
            u_val[c] = tab.values_flat[cell * m + c] + frac * slope[c];
            du_val[c] = slope[c];
          }
        }
        env.x = std::span<const double>(state.data(), state.size());
        env.u = std::span<const double>(u_val.data(), u_val.size());
        if (v != nullptr && !v->empty()) {
          v_stage = v->eval(std::min(std::max(t, u.a()), u.b()));
          env.v = std::span<const double>(v_stage.data(), v_stage.size());
        }
        dyn.drift.eval_into(env, fval);
        for (std::size_t c = 0; c < n; ++c) out[c] = fval[c];
        for (std::size_t alpha = 0; alpha < m; ++alpha) {
          if (du_val[alpha] == 0.0) continue;
          dyn.g[alpha].eval_into(env, gval);
          for (std::size_t c = 0; c < n; ++c) out[c] += gval[c] * du_val[alpha];
        }
      };

      const std::size_t nsub = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(dt_cell / step - 1e-12)));
      const double h = dt_cell / static_cast<double>(nsub);
      for (std::size_t sub = 0; sub < nsub; ++sub) {
        const double t = t0 + h * static_cast<double>(sub);
        rhs(t, x, k1);
        for (std::size_t c = 0; c < n; ++c) stage[c] = x[c] + 0.5 * h * k1[c];
        rhs(t + 0.5 * h, stage, k2);
        for (std::size_t c = 0; c < n; ++c) stage[c] = x[c] + 0.5 * h * k2[c];
        rhs(t + 0.5 * h, stage, k3);
        for (std::size_t c = 0; c < n; ++c) stage[c] = x[c] + h * k3[c];
        const double t_end = sub + 1 == nsub ? t1 : t + h;
        rhs(t_end, stage, k4);
        for (std::size_t c = 0; c < n; ++c)
          x[c] += (h / 6.0) * (k1[c] + 2.0 * (k2[c] + k3[c]) + k4[c]);
        check_state(x, dyn.growth_guard);
        push_sample(t_end);
      }
    }
  }
  return Trajectory::from_samples(u.a(), u.b(), dyn.n, std::move(out_t),
                                  std::move(out_x));
}

double evaluate_cost_example(const Trajectory& x,
                             const std::function<double(double)>& phi,
                             const std::vector<double>& times) {
  if (x.dim() < 6) throw UsageError("cost: trajectory needs at least 6 state components");
  const Vec x_end = x.eval(x.b());
  double cost = x_end[5];
  double sup = 0.0;
  for (double t : times) {
    if (t < x.a() || t > x.b()) throw DomainError("cost: time outside [a,b]");
    const Vec xt = x.eval(t);
    const double d = xt[3] - std::exp(phi(t));
    sup = std::max(sup, d * d);
  }
  return cost + sup;
}

}  // namespace impulsim
