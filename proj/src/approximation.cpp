#include "impulsim/approximation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <mutex>
#include <ostream>

#include "impulsim/errors.hpp"

namespace impulsim {

// ---------------------------------------------------------------------------
// MollifierKernel
// ---------------------------------------------------------------------------

namespace {

double bump_raw(double theta) {
  const double w = 1.0 - theta * theta;
  if (w <= 0.0) return 0.0;
  return std::exp(-1.0 / w);
}

}  // namespace

struct MollifierKernel::Tables {
  double C = 1.0;          // normalization of the raw bump
  double raw_mass = 0.0;   // quadrature of the normalized profile
  std::vector<double> theta, P, Q;
  double h = 0.0;

  static std::shared_ptr<const Tables> get() {
    static std::shared_ptr<const Tables> instance = build();
    return instance;
  }

  static std::shared_ptr<const Tables> build() {
    auto tab = std::make_shared<Tables>();
    const std::size_t N = 1 << 13;  // cells
    tab->h = 2.0 / static_cast<double>(N);
    tab->theta.resize(N + 1);
    tab->P.resize(N + 1);
    tab->Q.resize(N + 1);
    for (std::size_t j = 0; j <= N; ++j)
      tab->theta[j] = -1.0 + tab->h * static_cast<double>(j);

    // Normalization constant from a fine Simpson pass.
    {
      const std::size_t M = 1 << 15;
      const double hh = 2.0 / static_cast<double>(M);
      double integral = 0.0;
      for (std::size_t j = 0; j < M; ++j) {
        const double t0 = -1.0 + hh * static_cast<double>(j);
        integral += (hh / 6.0) * (bump_raw(t0) + 4.0 * bump_raw(t0 + 0.5 * hh) +
                                  bump_raw(t0 + hh));
      }
      tab->C = 1.0 / integral;
    }

    auto prof = [&](double th) { return tab->C * bump_raw(th); };
    tab->P[0] = 0.0;
    tab->Q[0] = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      const double t0 = tab->theta[j], t1 = tab->theta[j + 1];
      const double mid = 0.5 * (t0 + t1);
      const double w = t1 - t0;
      tab->P[j + 1] = tab->P[j] +
                      (w / 6.0) * (prof(t0) + 4.0 * prof(mid) + prof(t1));
      tab->Q[j + 1] = tab->Q[j] + (w / 6.0) * (t0 * prof(t0) + 4.0 * mid * prof(mid) +
                                               t1 * prof(t1));
    }
    tab->raw_mass = tab->P[N];

    // Exact endpoints: unit mass for P, zero drift and evenness for Q.
    for (double& p : tab->P) p /= tab->raw_mass;
    const double q_end = tab->Q[N];
    for (std::size_t j = 0; j <= N; ++j)
      tab->Q[j] -= q_end * (static_cast<double>(j) / static_cast<double>(N));
    for (std::size_t j = 0; j <= N / 2; ++j) {
      const double avg = 0.5 * (tab->Q[j] + tab->Q[N - j]);
      tab->Q[j] = avg;
      tab->Q[N - j] = avg;
    }
    for (std::size_t j = 0; j <= N / 2; ++j) {
      const double avg = 0.5 * (tab->P[j] + 1.0 - tab->P[N - j]);
      tab->P[j] = avg;
      tab->P[N - j] = 1.0 - avg;
    }
    tab->P[0] = 0.0;
    tab->P[N] = 1.0;
    tab->Q[0] = 0.0;
    tab->Q[N] = 0.0;
    return tab;
  }

  double profile(double th) const { return C * bump_raw(th) / raw_mass; }

  double cum(double th, bool moment) const {
    const std::vector<double>& table = moment ? Q : P;
    if (th <= -1.0) return 0.0;
    if (th >= 1.0) return table.back();
    const std::size_t j = std::min(
        static_cast<std::size_t>((th + 1.0) / h), table.size() - 2);
    const double tj = theta[j];
    const double w = th - tj;
    if (w <= 0.0) return table[j];
    const double mid = tj + 0.5 * w;
    double corr;
    if (moment) {
      corr = (w / 6.0) * (tj * profile(tj) + 4.0 * mid * profile(mid) + th * profile(th));
    } else {
      corr = (w / 6.0) * (profile(tj) + 4.0 * profile(mid) + profile(th));
    }
    return table[j] + corr;
  }
};

MollifierKernel MollifierKernel::standard(double support_halfwidth) {
  if (!(support_halfwidth > 0.0))
    throw ConfigError("mollifier: support halfwidth must be positive");
  MollifierKernel k;
  k.support_halfwidth_ = support_halfwidth;
  k.tables_ = Tables::get();
  return k;
}

double MollifierKernel::profile(double theta) const { return tables_->profile(theta); }
double MollifierKernel::mass() const { return tables_->raw_mass; }
double MollifierKernel::cumulative(double theta) const {
  return tables_->cum(theta, false);
}
double MollifierKernel::moment_cumulative(double theta) const {
  return tables_->cum(theta, true);
}

// ---------------------------------------------------------------------------
// SmoothClock
// ---------------------------------------------------------------------------

struct SmoothClock::Impl {
  double a = 0.0, b = 1.0;
  int k = 1;
  double L = 1.0;
  double M_k = 0.5;
  MollifierKernel kernel;
  std::vector<Clock::Piece> pieces;  // extended, contiguous in t
  std::vector<double> piece_t1;      // upper time bounds for binary search
  std::vector<Surgery> surgeries;    // time-ordered; only applied ones alter values
  std::vector<double> grid, vals;

  double conv(double t) const {
    const double lo = t - M_k, hi = t + M_k;
    std::size_t idx = static_cast<std::size_t>(
        std::upper_bound(piece_t1.begin(), piece_t1.end(), lo) - piece_t1.begin());
    double acc = 0.0;
    for (; idx < pieces.size() && pieces[idx].t0 < hi; ++idx) {
      const Clock::Piece& p = pieces[idx];
      const double th0 = std::max(p.t0, lo);
      const double th1 = std::min(p.t1, hi);
      if (!(th1 > th0)) continue;
      const double beta = (p.s1 - p.s0) / (p.t1 - p.t0);
      const double alpha = p.s0 - beta * p.t0;
      const double tau1 = (t - th1) / M_k;
      const double tau2 = (t - th0) / M_k;
      const double dP = kernel.cumulative(tau2) - kernel.cumulative(tau1);
      const double dQ =
          kernel.moment_cumulative(tau2) - kernel.moment_cumulative(tau1);
      acc += (alpha + beta * t) * dP - beta * M_k * dQ;
    }
    return acc;
  }

  const Surgery* surgery_at_time(double t) const {
    for (const Surgery& s : surgeries) {
      if (!s.applied) continue;
      if (t >= s.t_lo && t <= s.t_hi) return &s;
      if (s.t_lo > t) break;
    }
    return nullptr;
  }

  double value(double t) const {
    if (const Surgery* s = surgery_at_time(t)) {
      if (t <= s->t_mid) {
        const double span = s->t_mid - s->t_lo;
        return span > 0.0 ? s->s1 + (t - s->t_lo) * (s->s_mid - s->s1) / span
                          : s->s_mid;
      }
      const double span = s->t_hi - s->t_mid;
      return span > 0.0 ? s->s_mid + (t - s->t_mid) * (s->s2 - s->s_mid) / span
                        : s->s_mid;
    }
    return conv(t);
  }

  double inverse(double s) const {
    for (const Surgery& sg : surgeries) {
      if (!sg.applied) continue;
      if (s >= sg.s1 && s <= sg.s2) {
        if (s <= sg.s_mid) {
          const double span = sg.s_mid - sg.s1;
          return span > 0.0 ? sg.t_lo + (s - sg.s1) * (sg.t_mid - sg.t_lo) / span
                            : sg.t_mid;
        }
        const double span = sg.s2 - sg.s_mid;
        return span > 0.0 ? sg.t_mid + (s - sg.s_mid) * (sg.t_hi - sg.t_mid) / span
                          : sg.t_mid;
      }
    }
    // Monotone bisection on the convolution.
    double lo = a, hi = b;
    double flo = value(lo), fhi = value(hi);
    if (s <= flo) return a;
    if (s >= fhi) return b;
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (hi - lo <= 1e-15 * (std::abs(lo) + std::abs(hi) + 1.0)) return mid;
      const double fm = value(mid);
      if (fm < s) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }
};

double SmoothClock::time_a() const { return impl_->a; }
double SmoothClock::time_b() const { return impl_->b; }
int SmoothClock::k() const { return impl_->k; }
double SmoothClock::slope_bound() const { return impl_->L; }
double SmoothClock::value(double t) const {
  if (t < impl_->a || t > impl_->b) throw DomainError("smooth clock: t outside [a,b]");
  return impl_->value(t);
}
double SmoothClock::inverse(double s) const { return impl_->inverse(s); }
const std::vector<double>& SmoothClock::t_grid() const { return impl_->grid; }
const std::vector<double>& SmoothClock::values() const { return impl_->vals; }
const std::vector<SmoothClock::Surgery>& SmoothClock::surgeries() const {
  return impl_->surgeries;
}

SmoothClock mollify_clock(const Clock& sigma, int k, const MollifierKernel& kernel,
                          const MollifyOptions& options) {
  if (!sigma.valid()) throw UsageError("mollify: clock not initialized");
  if (k < 1) throw PreconditionError("mollify: k must be >= 1");
  const BVPath& path = *sigma.path();
  const double a = path.a(), b = path.b();
  if (kernel.support_halfwidth() > (b - a) + 1e-12)
    throw PreconditionError("mollify: kernel support exceeds b - a");

  const double L = sigma.slope_bound();
  const auto& pieces = sigma.affine_graph();
  if (pieces.empty()) throw PreconditionError("mollify: clock has no graph pieces");
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& p = pieces[i];
    const double slope = (p.s1 - p.s0) / (p.t1 - p.t0);
    if (slope + 1e-12 < (1.0 / L) * (1.0 - 1e-9))
      throw PreconditionError("mollify: clock violates the 1/L slope bound");
    if (i > 0 && pieces[i].s0 < pieces[i - 1].s1 - 1e-15)
      throw PreconditionError("mollify: clock is not increasing");
  }

  auto impl = std::make_shared<SmoothClock::Impl>();
  impl->a = a;
  impl->b = b;
  impl->k = k;
  impl->L = L;
  impl->M_k = kernel.support_halfwidth() / (2.0 * static_cast<double>(k));
  impl->kernel = kernel;

  // Odd reflections about (a, 0) and (b, 1) extend the graph far enough to
  // cover every convolution window.
  impl->pieces.reserve(3 * pieces.size());
  for (auto it = pieces.rbegin(); it != pieces.rend(); ++it)
    impl->pieces.push_back({2.0 * a - it->t1, 2.0 * a - it->t0, -it->s1, -it->s0});
  impl->pieces.insert(impl->pieces.end(), pieces.begin(), pieces.end());
  for (auto it = pieces.rbegin(); it != pieces.rend(); ++it)
    impl->pieces.push_back({2.0 * b - it->t1, 2.0 * b - it->t0, 2.0 - it->s1, 2.0 - it->s0});
  impl->piece_t1.reserve(impl->pieces.size());
  for (const auto& p : impl->pieces) impl->piece_t1.push_back(p.t1);

  // Sample grid: uniform base, the clock's own knots, and a refined window
  // across every jump.
  std::vector<double> grid;
  const std::size_t base = std::max<std::size_t>(options.base_grid, 2);
  for (std::size_t j = 0; j < base; ++j)
    grid.push_back(a + (b - a) * (static_cast<double>(j) / static_cast<double>(base - 1)));
  for (const auto& p : pieces) {
    grid.push_back(p.t0);
    grid.push_back(p.t1);
  }
  for (const auto& row : sigma.jump_rows()) {
    if (!row.has_jump()) continue;
    const std::size_t w = std::max<std::size_t>(options.jump_window_points, 3);
    for (std::size_t j = 0; j < w; ++j) {
      const double t = row.t + impl->M_k * (2.0 * static_cast<double>(j) /
                                                static_cast<double>(w - 1) -
                                            1.0);
      if (t > a && t < b) grid.push_back(t);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  while (!grid.empty() && grid.front() < a) grid.erase(grid.begin());
  while (!grid.empty() && grid.back() > b) grid.pop_back();

  impl->grid = std::move(grid);
  impl->vals.resize(impl->grid.size());
  for (std::size_t j = 0; j < impl->grid.size(); ++j)
    impl->vals[j] = impl->conv(impl->grid[j]);

  SmoothClock out;
  out.impl_ = std::move(impl);
  return out;
}

SmoothClock fixup_clock(const SmoothClock& sigma_hat, const Clock& sigma) {
  if (!sigma.valid()) throw UsageError("fixup: clock not initialized");
  const auto base = sigma_hat.impl_;
  if (base == nullptr) throw UsageError("fixup: clock not mollified");
  const double L = base->L;

  auto impl = std::make_shared<SmoothClock::Impl>(*base);
  impl->surgeries.clear();

  for (const auto& row : sigma.jump_rows()) {
    if (!row.has_jump()) continue;
    SmoothClock::Surgery s;
    s.bp_index = row.bp_index;
    s.t = row.t;
    s.s1 = row.s_minus;
    s.s_at = row.s_at;
    s.s2 = row.s_plus;
    s.applied = false;

    const double shat_ti = base->value(row.t);
    if (shat_ti > s.s1 && shat_ti < s.s2) {
      const double t_lo = base->inverse(s.s1);
      const double t_hi = base->inverse(s.s2);
      const double eps = 1e-12 * (s.s2 - s.s1);
      double s_mid;
      if (s.s_at <= s.s1 + eps) {
        s_mid = s.s1 + (row.t - t_lo) / L;        // first leg at inverse slope L
      } else if (s.s_at >= s.s2 - eps) {
        s_mid = s.s2 - (t_hi - row.t) / L;        // second leg at inverse slope L
      } else {
        s_mid = s.s_at;                           // legs meet exactly at sigma(t_i)
      }
      const bool interior = s_mid > s.s1 && s_mid < s.s2 && t_lo < row.t && row.t < t_hi;
      bool slopes_ok = interior;
      if (interior) {
        const double inv1 = (row.t - t_lo) / (s_mid - s.s1);
        const double inv2 = (t_hi - row.t) / (s.s2 - s_mid);
        slopes_ok = inv1 <= L * (1.0 + 1e-6) && inv2 <= L * (1.0 + 1e-6);
      }
      if (slopes_ok) {
        s.applied = true;
        s.t_lo = t_lo;
        s.t_hi = t_hi;
        s.t_mid = row.t;
        s.s_mid = s_mid;
      }
    }
    impl->surgeries.push_back(s);
  }

  // Refresh the sample grid with the surgery knots, re-evaluating through
  // the patched map.
  std::vector<double> grid = base->grid;
  for (const auto& s : impl->surgeries) {
    if (!s.applied) continue;
    grid.push_back(s.t_lo);
    grid.push_back(s.t_mid);
    grid.push_back(s.t_hi);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  impl->grid = std::move(grid);
  impl->vals.resize(impl->grid.size());
  for (std::size_t j = 0; j < impl->grid.size(); ++j)
    impl->vals[j] = impl->value(impl->grid[j]);

  SmoothClock out;
  out.impl_ = std::move(impl);
  return out;
}

// ---------------------------------------------------------------------------
// Error functionals
// ---------------------------------------------------------------------------

namespace {

double pair_distance(const ControlTrajectoryPair& p, const ControlTrajectoryPair& q,
                     double t) {
  const Vec pu = p.u(t), qu = q.u(t);
  const Vec px = p.x(t), qx = q.x(t);
  double s = 0.0;
  for (std::size_t i = 0; i < pu.size(); ++i) {
    const double d = pu[i] - qu[i];
    s += d * d;
  }
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double d = px[i] - qx[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

std::pair<double, double> pair_errors(const ControlTrajectoryPair& target,
                                      const ControlTrajectoryPair& candidate,
                                      double tau, std::size_t grid) {
  if (target.a != candidate.a || target.b != candidate.b ||
      target.m != candidate.m || target.n != candidate.n)
    throw UsageError("limit error: pairs live on different intervals or dimensions");
  if (tau < target.a || tau > target.b)
    throw DomainError("limit error: tau outside [a,b]");
  const double pointwise = pair_distance(target, candidate, tau);
  const std::size_t G = std::max<std::size_t>(grid, 2);
  double l1 = 0.0;
  double prev = pair_distance(target, candidate, target.a);
  const double h = (target.b - target.a) / static_cast<double>(G - 1);
  for (std::size_t i = 1; i < G; ++i) {
    const double t = target.a + h * static_cast<double>(i);
    const double cur = pair_distance(target, candidate, std::min(t, target.b));
    l1 += 0.5 * h * (prev + cur);
    prev = cur;
  }
  return {pointwise, l1};
}

double limit_error(const ControlTrajectoryPair& target,
                   const ControlTrajectoryPair& candidate, double tau,
                   std::size_t grid) {
  const auto [pointwise, l1] = pair_errors(target, candidate, tau, grid);
  return pointwise + l1;
}

// ---------------------------------------------------------------------------
// Approximating sequence
// ---------------------------------------------------------------------------

namespace {

ApproxStep build_step(const GraphCompletion& gc, const Dynamics& dyn,
                      const SampledControl* v, const Vec& x0, int k,
                      const MollifierKernel& kernel, const ApproxOptions& options) {
  ApproxStep step;
  step.k = k;

  const Clock& sigma = gc.clock();
  SmoothClock sigma_hat = mollify_clock(sigma, k, kernel, options.mollify);
  step.sigma_k = fixup_clock(sigma_hat, sigma);

  // Space-time control (phi_{0,k}, phi) over the completion grid plus the
  // surgery knots.
  std::vector<double> s_knots = gc.grid();
  for (const auto& sg : step.sigma_k.surgeries()) {
    if (!sg.applied) continue;
    s_knots.push_back(sg.s1);
    s_knots.push_back(sg.s_mid);
    s_knots.push_back(sg.s2);
  }
  std::sort(s_knots.begin(), s_knots.end());
  s_knots.erase(std::unique(s_knots.begin(), s_knots.end()), s_knots.end());

  const int m = gc.control_dim();
  std::vector<double> phi0k(s_knots.size());
  std::vector<double> phik(s_knots.size() * static_cast<std::size_t>(m));
  for (std::size_t j = 0; j < s_knots.size(); ++j) {
    phi0k[j] = step.sigma_k.inverse(s_knots[j]);
    if (j > 0) phi0k[j] = std::max(phi0k[j], phi0k[j - 1]);
    const Vec u = gc.phi(s_knots[j]);
    for (int c = 0; c < m; ++c)
      phik[j * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)] =
          u[static_cast<std::size_t>(c)];
  }
  phi0k.front() = gc.time_a();
  phi0k.back() = gc.time_b();

  GraphCompletion::Options gopt;
  gopt.check_graph = false;
  GraphCompletion gck = GraphCompletion::from_samples(
      nullptr, gc.control_set(), std::move(s_knots), std::move(phi0k),
      std::move(phik), Clock(), gopt);

  auto yk = std::make_shared<const SpaceTimePath>(
      integrate_spacetime(gck, dyn, v, x0, options.step));

  SmoothClock sk = step.sigma_k;
  step.x_k = Trajectory::composed(
      yk, [sk](double t) { return sk.value(t); }, gc.time_a(), gc.time_b());

  // Sampled u_k = phi o sigma_k on the smooth clock's grid.
  const std::vector<double>& tg = step.sigma_k.t_grid();
  std::vector<Vec> uvals(tg.size());
  for (std::size_t j = 0; j < tg.size(); ++j)
    uvals[j] = gc.phi(step.sigma_k.values()[j]);
  step.u_k = std::make_shared<const BVPath>(BVPath::from_samples(
      gc.time_a(), gc.time_b(), tg, std::move(uvals), gc.control_set()));
  step.var_uk = step.u_k->total_variation();

  double sup = 0.0;
  const std::size_t G = std::max<std::size_t>(options.report_grid, 2);
  for (std::size_t j = 0; j < G; ++j) {
    const double t = gc.time_a() + (gc.time_b() - gc.time_a()) *
                                       (static_cast<double>(j) / static_cast<double>(G - 1));
    sup = std::max(sup, norm2(step.x_k.eval(t)));
  }
  step.sup_xk = sup;
  return step;
}

}  // namespace

std::vector<ApproxStep> approximating_sequence(const GraphCompletion& gc,
                                               const Dynamics& dyn,
                                               const SampledControl* v,
                                               const Vec& x0,
                                               const std::vector<int>& ks,
                                               const ApproxOptions& options) {
  if (!gc.clock().valid())
    throw UsageError("approximating sequence: completion carries no clock");
  if (ks.empty()) throw UsageError("approximating sequence: empty k list");
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (ks[i] <= ks[i - 1])
      throw UsageError("approximating sequence: ks must be increasing");

  const double support =
      options.support_halfwidth.value_or(gc.time_b() - gc.time_a());
  const MollifierKernel kernel = MollifierKernel::standard(support);

  std::vector<ApproxStep> steps(ks.size());
  if (options.parallel && ks.size() > 1) {
    std::vector<std::future<ApproxStep>> futures;
    futures.reserve(ks.size());
    for (int k : ks)
      futures.push_back(std::async(std::launch::async, [&, k] {
        return build_step(gc, dyn, v, x0, k, kernel, options);
      }));
    for (std::size_t i = 0; i < futures.size(); ++i) steps[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < ks.size(); ++i)
      steps[i] = build_step(gc, dyn, v, x0, ks[i], kernel, options);
  }
  return steps;
}

void ApproxReport::write_csv(std::ostream& out) const {
  out << "k,tau,pointwise_err,l1_err,var_uk,sup_xk\n";
  for (const ApproxRecord& r : rows) {
    out << r.k << ',' << double_to_string(r.tau) << ','
        << double_to_string(r.pointwise_err) << ',' << double_to_string(r.l1_err)
        << ',' << double_to_string(r.var_uk) << ',' << double_to_string(r.sup_xk)
        << "\n";
  }
}

ApproxReport make_report(const ControlTrajectoryPair& target,
                         const std::vector<ApproxStep>& steps,
                         const std::vector<double>& taus, std::size_t grid) {
  ApproxReport report;
  for (const ApproxStep& step : steps) {
    ControlTrajectoryPair cand;
    cand.a = target.a;
    cand.b = target.b;
    cand.m = target.m;
    cand.n = target.n;
    const auto u_k = step.u_k;
    const Trajectory x_k = step.x_k;
    cand.u = [u_k](double t) { return u_k->eval(t); };
    cand.x = [x_k](double t) { return x_k.eval(t); };
    for (double tau : taus) {
      const auto [pw, l1] = pair_errors(target, cand, tau, grid);
      report.rows.push_back({step.k, tau, pw, l1, step.var_uk, step.sup_xk});
    }
  }
  return report;
}

CertificateResult bv_simple_certificate(const ApproxReport& report, double var_phi,
                                        double threshold) {
  CertificateResult res;
  res.threshold = threshold;
  res.decreasing = true;
  res.below_threshold = true;
  res.variation_budget_ok = true;

  // Group rows by tau; rows are ordered by k then tau.
  std::vector<double> taus;
  for (const auto& r : report.rows) {
    if (std::find(taus.begin(), taus.end(), r.tau) == taus.end())
      taus.push_back(r.tau);
    if (r.var_uk > var_phi + 1e-9) res.variation_budget_ok = false;
  }
  int k_max = 0;
  for (const auto& r : report.rows) k_max = std::max(k_max, r.k);
  for (double tau : taus) {
    double prev = -1.0;
    for (const auto& r : report.rows) {
      if (r.tau != tau) continue;
      const double err = r.pointwise_err + r.l1_err;
      if (prev >= 0.0 && err > prev * (1.0 + 1e-9) + 1e-12) res.decreasing = false;
      prev = err;
      if (r.k == k_max) {
        res.final_max_error = std::max(res.final_max_error, err);
        if (err > threshold) res.below_threshold = false;
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Lie brackets and commutativity
// ---------------------------------------------------------------------------

Vec lie_bracket(const VectorField& g_alpha, const VectorField& g_beta, const Vec& x) {
  const int n = g_alpha.dim();
  if (g_beta.dim() != n || static_cast<int>(x.size()) != n)
    throw UsageError("lie bracket: dimension mismatch");
  EvalEnv env;
  env.x = std::span<const double>(x.data(), x.size());
  const Vec va = g_alpha.eval(env);
  const Vec vb = g_beta.eval(env);
  Vec out(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      const Variable xj{VarKind::X, j + 1};
      const double dbij = g_beta.components()[static_cast<std::size_t>(i)]
                              .derivative(xj)
                              .eval(env);
      const double daij = g_alpha.components()[static_cast<std::size_t>(i)]
                              .derivative(xj)
                              .eval(env);
      acc += dbij * va[static_cast<std::size_t>(j)] - daij * vb[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

CommutativityReport commutativity_report(const Dynamics& dyn,
                                         const std::vector<Vec>& sample_points,
                                         double tol) {
  dyn.validate();
  if (sample_points.empty())
    throw PreconditionError("commutativity: need at least one sample point");
  CommutativityReport report;
  for (int a = 0; a < dyn.m; ++a) {
    for (int b = a + 1; b < dyn.m; ++b) {
      CommutativityReport::PairEntry entry{a + 1, b + 1, 0.0};
      for (const Vec& x : sample_points) {
        const double norm = norm2(lie_bracket(dyn.g[static_cast<std::size_t>(a)],
                                              dyn.g[static_cast<std::size_t>(b)], x));
        if (norm > entry.max_norm) entry.max_norm = norm;
        if (norm > report.max_norm) {
          report.max_norm = norm;
          report.witness_alpha = a + 1;
          report.witness_beta = b + 1;
          report.witness_point = x;
        }
      }
      report.pairs.push_back(entry);
    }
  }
  report.commuting = report.max_norm <= tol;
  return report;
}

DependenceProbeResult dependence_probe(const Dynamics& dyn,
                                       std::shared_ptr<const BVPath> u1,
                                       std::shared_ptr<const BVPath> u2,
                                       const SampledControl* v, const Vec& x1bar,
                                       const Vec& x2bar,
                                       const std::vector<double>& probe_times,
                                       const ProbeOptions& options) {
  if (u1 == nullptr || u2 == nullptr) throw UsageError("probe: null input path");
  if (u1->a() != u2->a() || u1->b() != u2->b())
    throw UsageError("probe: inputs live on different intervals");

  // Commutativity is a precondition; sample around the initial states.
  std::vector<Vec> samples = {x1bar, x2bar};
  for (double delta : {0.5, -0.5, 1.0}) {
    Vec p = x1bar;
    for (double& c : p) c += delta;
    samples.push_back(std::move(p));
  }
  const CommutativityReport comm = commutativity_report(dyn, samples);
  if (!comm.commuting)
    throw PreconditionError("probe: dynamics are not commuting (bracket norm " +
                            double_to_string(comm.max_norm) + ")");

  auto solve = [&](std::shared_ptr<const BVPath> u, const Vec& x0) {
    GraphCompletion gc = build_completion(u, {}, options.completion);
    auto y = std::make_shared<const SpaceTimePath>(
        integrate_spacetime(gc, dyn, v, x0, options.step));
    return gc_solution(std::move(y), gc.clock());
  };
  const Trajectory x1 = solve(u1, x1bar);
  const Trajectory x2 = solve(u2, x2bar);

  const double a = u1->a(), b = u1->b();
  const std::size_t G = std::max<std::size_t>(options.l1_grid, 2);
  const double h = (b - a) / static_cast<double>(G - 1);
  double l1_u = 0.0, l1_x = 0.0;
  double prev_u = dist2(u1->eval(a), u2->eval(a));
  double prev_x = dist2(x1.eval(a), x2.eval(a));
  for (std::size_t i = 1; i < G; ++i) {
    const double t = std::min(a + h * static_cast<double>(i), b);
    const double cu = dist2(u1->eval(t), u2->eval(t));
    const double cx = dist2(x1.eval(t), x2.eval(t));
    l1_u += 0.5 * h * (prev_u + cu);
    l1_x += 0.5 * h * (prev_x + cx);
    prev_u = cu;
    prev_x = cx;
  }

  const double base_in = dist2(x1bar, x2bar) + dist2(u1->eval(a), u2->eval(a));
  DependenceProbeResult res;
  for (double t : probe_times) {
    if (t < a || t > b) throw DomainError("probe: time outside [a,b]");
    DependenceProbeResult::Row row;
    row.t = t;
    row.input = base_in + dist2(u1->eval(t), u2->eval(t)) + l1_u;
    row.output = dist2(x1.eval(t), x2.eval(t)) + l1_x;
    row.ratio = row.input < 1e-14 ? 0.0 : row.output / row.input;
    res.max_ratio = std::max(res.max_ratio, row.ratio);
    res.rows.push_back(row);
  }
  return res;
}

}  // namespace impulsim
