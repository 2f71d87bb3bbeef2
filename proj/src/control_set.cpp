#include "impulsim/control_set.hpp"

#include <cmath>

#include "impulsim/errors.hpp"

namespace impulsim {

ControlSet ControlSet::box(Vec lower, Vec upper, double whitney_constant) {
  if (lower.empty() || lower.size() != upper.size())
    throw ConfigError("control set: lower/upper dimension mismatch");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!(lower[i] <= upper[i]))
      throw ConfigError("control set: lower > upper on axis " + std::to_string(i + 1));
  if (!(whitney_constant >= 1.0))
    throw ConfigError("control set: whitney constant must be >= 1");
  ControlSet s;
  s.dim_ = static_cast<int>(lower.size());
  s.kind_ = Kind::Box;
  s.whitney_ = whitney_constant;
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

ControlSet ControlSet::hull(std::vector<Vec> vertices, double whitney_constant) {
  if (vertices.empty()) throw ConfigError("control set: empty vertex list");
  const std::size_t d = vertices.front().size();
  if (d == 0) throw ConfigError("control set: zero-dimensional vertex");
  for (const Vec& v : vertices)
    if (v.size() != d) throw ConfigError("control set: vertex dimension mismatch");
  if (!(whitney_constant >= 1.0))
    throw ConfigError("control set: whitney constant must be >= 1");
  ControlSet s;
  s.dim_ = static_cast<int>(d);
  s.kind_ = Kind::Hull;
  s.whitney_ = whitney_constant;
  s.vertices_ = std::move(vertices);
  return s;
}

namespace {

// Nearest point of conv(vertices) to the origin-shifted target, via the
// Wolfe minimum-norm-point iteration on the shifted point cloud.
Vec hull_project(const std::vector<Vec>& vertices, const Vec& target) {
  const std::size_t d = target.size();
  std::vector<Vec> pts(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) pts[i] = sub(vertices[i], target);

  auto support = [&](const Vec& w) {
    std::size_t best = 0;
    double bestv = dot(pts[0], w);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double v = dot(pts[i], w);
      if (v < bestv) {
        bestv = v;
        best = i;
      }
    }
    return best;
  };

  std::vector<std::size_t> corral;
  std::vector<double> lambda;
  {
    std::size_t i0 = 0;
    double best = dot(pts[0], pts[0]);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double v = dot(pts[i], pts[i]);
      if (v < best) {
        best = v;
        i0 = i;
      }
    }
    corral = {i0};
    lambda = {1.0};
  }

  Vec x = pts[corral[0]];
  const double eps = 1e-14;
  for (int iter = 0; iter < 200; ++iter) {
    // Add the vertex most opposed to x.
    const std::size_t j = support(x);
    const double xx = dot(x, x);
    if (dot(pts[j], x) > xx - eps * (1.0 + xx)) break;  // optimal
    corral.push_back(j);
    lambda.push_back(0.0);

    // Minor cycle: pull x toward the affine minimizer over the corral,
    // dropping vertices whose weight would turn negative.
    for (int minor = 0; minor < 200; ++minor) {
      const std::size_t m = corral.size();
      // Solve for affine weights: minimize |sum w_i p_i| s.t. sum w_i = 1.
      // KKT system of size m+1.
      std::vector<double> A((m + 1) * (m + 1), 0.0), rhs(m + 1, 0.0);
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < m; ++c)
          A[r * (m + 1) + c] = dot(pts[corral[r]], pts[corral[c]]);
        A[r * (m + 1) + m] = 1.0;
        A[m * (m + 1) + r] = 1.0;
      }
      rhs[m] = 1.0;
      std::vector<double> w = rhs;
      std::vector<double> M = A;
      if (!solve_dense(M, w, m + 1)) {
        // Degenerate corral: drop the newest vertex.
        corral.pop_back();
        lambda.pop_back();
        break;
      }
      w.resize(m);
      bool feasible = true;
      for (double wi : w)
        if (wi < eps) feasible = false;
      if (feasible) {
        lambda = w;
        break;
      }
      // Step as far as possible toward w while staying in the simplex.
      double theta = 1.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (w[i] < eps) {
          const double denom = lambda[i] - w[i];
          if (denom > eps) theta = std::min(theta, lambda[i] / denom);
        }
      }
      for (std::size_t i = 0; i < m; ++i)
        lambda[i] = (1.0 - theta) * lambda[i] + theta * w[i];
      // Drop zero-weight vertices.
      for (std::size_t i = m; i-- > 0;) {
        if (lambda[i] <= eps) {
          corral.erase(corral.begin() + static_cast<long>(i));
          lambda.erase(lambda.begin() + static_cast<long>(i));
        }
      }
      // Renormalize.
      double sum = 0.0;
      for (double li : lambda) sum += li;
      for (double& li : lambda) li /= sum;
    }

    x.assign(d, 0.0);
    for (std::size_t i = 0; i < corral.size(); ++i)
      for (std::size_t c = 0; c < d; ++c) x[c] += lambda[i] * pts[corral[i]][c];
  }

  return add(x, target);
}

}  // namespace

bool ControlSet::contains(const Vec& u, double tol) const {
  if (static_cast<int>(u.size()) != dim_) return false;
  if (kind_ == Kind::Box) {
    for (std::size_t i = 0; i < u.size(); ++i)
      if (u[i] < lower_[i] - tol || u[i] > upper_[i] + tol) return false;
    return true;
  }
  return distance(u) <= tol;
}

double ControlSet::distance(const Vec& u) const {
  if (static_cast<int>(u.size()) != dim_)
    throw DomainError("control set: dimension mismatch");
  if (kind_ == Kind::Box) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double d = u[i] < lower_[i]   ? lower_[i] - u[i]
                       : u[i] > upper_[i] ? u[i] - upper_[i]
                                          : 0.0;
      s += d * d;
    }
    return std::sqrt(s);
  }
  return dist2(hull_project(vertices_, u), u);
}

Vec ControlSet::project(const Vec& u) const {
  if (static_cast<int>(u.size()) != dim_)
    throw DomainError("control set: dimension mismatch");
  if (kind_ == Kind::Box) {
    Vec p = u;
    for (std::size_t i = 0; i < p.size(); ++i)
      p[i] = std::min(std::max(p[i], lower_[i]), upper_[i]);
    return p;
  }
  return hull_project(vertices_, u);
}

}  // namespace impulsim
