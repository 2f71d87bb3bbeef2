#include "impulsim/bv_path.hpp"

#include <algorithm>
#include <cmath>

#include "impulsim/errors.hpp"

namespace impulsim {

PathSegment PathSegment::expressions(std::vector<Expr> components) {
  if (components.empty()) throw ConfigError("segment: empty component list");
  for (const Expr& e : components) {
    if (e.empty()) throw ConfigError("segment: empty expression");
    for (const Variable& v : e.variables()) {
      if (v.kind == VarKind::K)
        throw ConfigError("segment: unbound parameter k (substitute it first)");
      if (v.kind != VarKind::T)
        throw ConfigError("segment expression may only reference t, got " + v.name());
    }
  }
  PathSegment s;
  s.components_ = std::move(components);
  return s;
}

PathSegment PathSegment::samples(std::vector<double> knots, std::vector<Vec> values) {
  if (knots.size() < 2 || knots.size() != values.size())
    throw ConfigError("segment: sample table needs matching knots/values, >= 2 entries");
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i] > knots[i - 1]))
      throw ConfigError("segment: sample knots must be strictly increasing");
  const std::size_t d = values.front().size();
  for (const Vec& v : values)
    if (v.size() != d) throw ConfigError("segment: sample dimension mismatch");
  PathSegment s;
  s.knots_ = std::move(knots);
  s.values_ = std::move(values);
  return s;
}

BVPath::BVPath(double a, double b, std::vector<double> breakpoints,
               std::vector<PathSegment> segments, std::vector<JumpTriple> jumps,
               ControlSet control_set, Options options)
    : a_(a),
      b_(b),
      breakpoints_(std::move(breakpoints)),
      segments_(std::move(segments)),
      jumps_(std::move(jumps)),
      control_set_(std::move(control_set)),
      options_(options) {
  if (!(a_ < b_)) throw ConfigError("path: requires a < b");
  if (breakpoints_.size() < 2 || breakpoints_.front() != a_ || breakpoints_.back() != b_)
    throw ConfigError("path: breakpoints must run from a to b");
  for (std::size_t i = 1; i < breakpoints_.size(); ++i)
    if (!(breakpoints_[i] > breakpoints_[i - 1]))
      throw ConfigError("path: breakpoints must be strictly increasing");
  if (segments_.size() + 1 != breakpoints_.size())
    throw ConfigError("path: need one segment per breakpoint interval");
  if (jumps_.size() != breakpoints_.size())
    throw ConfigError("path: need one jump triple per breakpoint");

  dim_ = control_set_.dim();
  for (auto& j : jumps_) {
    if (static_cast<int>(j.at.size()) != dim_ ||
        static_cast<int>(j.left.size()) != dim_ ||
        static_cast<int>(j.right.size()) != dim_)
      throw ConfigError("path: jump triple dimension mismatch");
  }
  // Boundary convention: no left jump at a, no right jump at b.
  jumps_.front().left = jumps_.front().at;
  jumps_.back().right = jumps_.back().at;

  build_tables();
  validate();
}

BVPath BVPath::from_expressions(double a, double b, std::vector<Expr> comps,
                                ControlSet control_set, Options options) {
  const int dim = control_set.dim();
  if (static_cast<int>(comps.size()) != dim)
    throw ConfigError("path: expression count must equal control dimension");
  PathSegment seg = PathSegment::expressions(std::move(comps));
  // Continuous path: triples are the segment's endpoint values.
  Vec va(dim), vb(dim);
  for (int c = 0; c < dim; ++c) {
    EvalEnv env;
    env.t = a;
    va[c] = seg.components()[c].eval(env);
    env.t = b;
    vb[c] = seg.components()[c].eval(env);
  }
  std::vector<JumpTriple> jumps = {{va, va, va}, {vb, vb, vb}};
  return BVPath(a, b, {a, b}, {std::move(seg)}, std::move(jumps),
                std::move(control_set), options);
}

BVPath BVPath::from_samples(double a, double b, std::vector<double> knots,
                            std::vector<Vec> values, ControlSet control_set,
                            Options options) {
  PathSegment seg = PathSegment::samples(std::move(knots), std::move(values));
  const Vec va = seg.values().front();
  const Vec vb = seg.values().back();
  std::vector<JumpTriple> jumps = {{va, va, va}, {vb, vb, vb}};
  return BVPath(a, b, {a, b}, {std::move(seg)}, std::move(jumps),
                std::move(control_set), options);
}

Vec BVPath::segment_value(std::size_t seg, double t) const {
  const PathSegment& s = segments_[seg];
  if (s.is_expression()) {
    EvalEnv env;
    env.t = t;
    Vec v(dim_);
    for (int c = 0; c < dim_; ++c) v[c] = s.components()[c].eval(env);
    return v;
  }
  const auto& ts = s.knots();
  const auto& vals = s.values();
  if (t <= ts.front()) return vals.front();
  if (t >= ts.back()) return vals.back();
  const std::size_t i = cell_index(ts, t);
  const double h = ts[i + 1] - ts[i];
  return lerp(vals[i], vals[i + 1], h > 0.0 ? (t - ts[i]) / h : 1.0);
}

void BVPath::build_tables() {
  const std::size_t nseg = segments_.size();
  const std::size_t d = static_cast<std::size_t>(dim_);
  tables_.resize(nseg);
  for (std::size_t i = 0; i < nseg; ++i) {
    const double t0 = breakpoints_[i], t1 = breakpoints_[i + 1];
    SegmentTable& tab = tables_[i];
    const PathSegment& s = segments_[i];

    auto chord = [&](std::size_t j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = tab.vals[j * d + c] - tab.vals[(j - 1) * d + c];
        acc += diff * diff;
      }
      return std::sqrt(acc);
    };

    if (!s.is_expression()) {
      tab.ts = s.knots();
      if (tab.ts.front() != t0 || tab.ts.back() != t1)
        throw ConfigError("path: segment sample knots must span its interval");
      tab.vals.resize(tab.ts.size() * d);
      for (std::size_t j = 0; j < tab.ts.size(); ++j)
        for (std::size_t c = 0; c < d; ++c) tab.vals[j * d + c] = s.values()[j][c];
    } else {
      // Dyadic refinement until the variation estimate settles.
      int cells = options_.variation_initial_cells;
      double prev_var = -1.0;
      EvalEnv env;
      for (;;) {
        const std::size_t count = static_cast<std::size_t>(cells) + 1;
        tab.ts.resize(count);
        tab.vals.resize(count * d);
        for (std::size_t j = 0; j < count; ++j) {
          const double t = t0 + (t1 - t0) * (static_cast<double>(j) / cells);
          tab.ts[j] = t;
          env.t = t;
          for (std::size_t c = 0; c < d; ++c)
            tab.vals[j * d + c] = s.components()[c].eval(env);
        }
        double var = 0.0;
        for (std::size_t j = 1; j < count; ++j) var += chord(j);
        if (!std::isfinite(var))
          throw ComputationError("path: variation estimate is not finite");
        if (prev_var >= 0.0 &&
            std::abs(var - prev_var) <= options_.variation_rel_tol * std::max(1.0, var))
          break;
        if (cells >= options_.variation_max_cells)
          throw ComputationError("path: variation refinement did not converge");
        prev_var = var;
        cells *= 2;
      }
    }
    tab.cumvar.resize(tab.ts.size());
    tab.cumvar[0] = 0.0;
    for (std::size_t j = 1; j < tab.ts.size(); ++j)
      tab.cumvar[j] = tab.cumvar[j - 1] + chord(j);
  }

  const std::size_t nbp = breakpoints_.size();
  jump_left_.resize(nbp);
  jump_right_.resize(nbp);
  cum_before_.resize(nbp);
  for (std::size_t i = 0; i < nbp; ++i) {
    jump_left_[i] = dist2(jumps_[i].at, jumps_[i].left);
    jump_right_[i] = dist2(jumps_[i].right, jumps_[i].at);
  }
  cum_before_[0] = 0.0;
  for (std::size_t i = 1; i < nbp; ++i)
    cum_before_[i] = cum_before_[i - 1] + jump_left_[i - 1] + jump_right_[i - 1] +
                     tables_[i - 1].cumvar.back();
  total_variation_ = cum_before_.back() + jump_left_.back();

  knot_ts_.clear();
  for (std::size_t i = 0; i < nseg; ++i)
    knot_ts_.insert(knot_ts_.end(), tables_[i].ts.begin(), tables_[i].ts.end());
  std::sort(knot_ts_.begin(), knot_ts_.end());
  knot_ts_.erase(std::unique(knot_ts_.begin(), knot_ts_.end()), knot_ts_.end());
}

void BVPath::validate() const {
  const double tol = options_.continuity_tol;
  const std::size_t d = static_cast<std::size_t>(dim_);
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto view = segment_samples(i);
    if (view.values_flat.size() != view.ts.size() * d)
      throw ConfigError("path: segment dimension mismatch");
    if (dist2(view.value(0), jumps_[i].right) > tol)
      throw ConfigError("path: segment " + std::to_string(i + 1) +
                        " start does not match the jump triple's right value");
    if (dist2(view.value(view.ts.size() - 1), jumps_[i + 1].left) > tol)
      throw ConfigError("path: segment " + std::to_string(i + 1) +
                        " end does not match the jump triple's left value");
  }
  // Membership: jump triples and segment knots.
  for (std::size_t i = 0; i < jumps_.size(); ++i) {
    for (const Vec* v : {&jumps_[i].left, &jumps_[i].at, &jumps_[i].right})
      if (!control_set_.contains(*v, 1e-7))
        throw ConfigError("path: jump value at breakpoint " + std::to_string(i + 1) +
                          " lies outside the control set");
  }
  Vec probe(d);
  for (const SegmentTable& tab : tables_) {
    for (std::size_t j = 0; j * d < tab.vals.size(); ++j) {
      for (std::size_t c = 0; c < d; ++c) probe[c] = tab.vals[j * d + c];
      if (!control_set_.contains(probe, 1e-7))
        throw ConfigError("path: segment value lies outside the control set");
    }
  }
}

Vec BVPath::eval(double t) const {
  if (t < a_ || t > b_) throw DomainError("path: t outside [a,b]");
  const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it != breakpoints_.end() && *it == t)
    return jumps_[static_cast<std::size_t>(it - breakpoints_.begin())].at;
  const std::size_t seg = cell_index(breakpoints_, t);
  return segment_value(seg, t);
}

std::pair<Vec, Vec> BVPath::one_sided_limits(double t) const {
  if (t < a_ || t > b_) throw DomainError("path: t outside [a,b]");
  const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it != breakpoints_.end() && *it == t) {
    const auto& j = jumps_[static_cast<std::size_t>(it - breakpoints_.begin())];
    return {j.left, j.right};
  }
  Vec v = segment_value(cell_index(breakpoints_, t), t);
  return {v, v};
}

double BVPath::variation(double t) const {
  if (t < a_ || t > b_) throw DomainError("path: t outside [a,b]");
  const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it != breakpoints_.end() && *it == t) {
    const std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin());
    return cum_before_[i] + jump_left_[i];
  }
  const std::size_t seg = cell_index(breakpoints_, t);
  const SegmentTable& tab = tables_[seg];
  const std::size_t cell = cell_index(tab.ts, t);
  const std::size_t d = static_cast<std::size_t>(dim_);
  const Vec here = segment_value(seg, t);
  double chord = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    const double diff = here[c] - tab.vals[cell * d + c];
    chord += diff * diff;
  }
  const double partial = tab.cumvar[cell] + std::sqrt(chord);
  return cum_before_[seg] + jump_left_[seg] + jump_right_[seg] + partial;
}

double BVPath::variation_before(std::size_t bp_index) const {
  return cum_before_[bp_index];
}

double BVPath::variation_after(std::size_t bp_index) const {
  return cum_before_[bp_index] + jump_left_[bp_index] + jump_right_[bp_index];
}

bool BVPath::has_jumps() const {
  for (std::size_t i = 0; i < jumps_.size(); ++i)
    if (jump_left_[i] > 0.0 || jump_right_[i] > 0.0) return true;
  return false;
}

SampledControl::SampledControl(double a, double b, int dim, std::vector<Vec> samples,
                               Vec lower, Vec upper)
    : a_(a), b_(b), dim_(dim), samples_(std::move(samples)),
      lower_(std::move(lower)), upper_(std::move(upper)) {
  if (!(a_ < b_)) throw ConfigError("sampled control: requires a < b");
  if (samples_.empty()) throw ConfigError("sampled control: empty sample table");
  for (const Vec& s : samples_) {
    if (static_cast<int>(s.size()) != dim_)
      throw ConfigError("sampled control: sample dimension mismatch");
    for (int c = 0; c < dim_; ++c) {
      if (!lower_.empty() && (s[c] < lower_[c] - 1e-9 || s[c] > upper_[c] + 1e-9))
        throw ConfigError("sampled control: sample outside V");
    }
  }
}

SampledControl SampledControl::constant(double a, double b, Vec value, Vec lower,
                                        Vec upper) {
  const int dim = static_cast<int>(value.size());
  return SampledControl(a, b, dim, {std::move(value)}, std::move(lower),
                        std::move(upper));
}

Vec SampledControl::eval(double t) const {
  if (t < a_ || t > b_) throw DomainError("sampled control: t outside [a,b]");
  if (samples_.size() == 1) return samples_[0];
  const double h = (b_ - a_) / static_cast<double>(samples_.size() - 1);
  // Left-continuous: value on (t_{j-1}, t_j] is samples[j]. The small shift
  // keeps exact grid nodes on their own sample despite rounding in t/h.
  const double idx = std::ceil((t - a_) / h - 1e-12);
  const std::size_t j = static_cast<std::size_t>(
      std::min(std::max(idx, 0.0), static_cast<double>(samples_.size() - 1)));
  return samples_[j];
}

}  // namespace impulsim
