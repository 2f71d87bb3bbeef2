#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

namespace impulsim {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec& a) {
  double s = 0.0;
  for (double x : a) s = std::max(s, std::abs(x));
  return s;
}

inline double dist2(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline Vec sub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec add(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec scale(const Vec& a, double c) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
  return r;
}

/// a + theta*(b - a), componentwise.
inline Vec lerp(const Vec& a, const Vec& b, double theta) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + theta * (b[i] - a[i]);
  return r;
}

inline bool all_finite(const Vec& a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

/// Shortest text that parses back to the same double (uses %.17g, which is
/// always round-trip safe).
inline std::string double_to_string(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer a shorter form when it round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char s[40];
    std::snprintf(s, sizeof(s), "%.*g", prec, v);
    if (std::strtod(s, nullptr) == v) return s;
  }
  return buf;
}

/// Index of the grid cell containing x: largest i with knots[i] <= x,
/// clamped to [0, knots.size()-2]. Knots must be sorted ascending.
inline std::size_t cell_index(const std::vector<double>& knots, double x) {
  if (knots.size() < 2) return 0;
  auto it = std::upper_bound(knots.begin(), knots.end(), x);
  std::size_t i = static_cast<std::size_t>(it - knots.begin());
  if (i == 0) return 0;
  i -= 1;
  return std::min(i, knots.size() - 2);
}

/// Piecewise-linear interpolation of (knots, values) at x, clamped to the ends.
inline double pl_interp(const std::vector<double>& knots,
                        const std::vector<double>& values, double x) {
  if (knots.empty()) return 0.0;
  if (x <= knots.front()) return values.front();
  if (x >= knots.back()) return values.back();
  const std::size_t i = cell_index(knots, x);
  const double h = knots[i + 1] - knots[i];
  if (h <= 0.0) return values[i + 1];
  const double theta = (x - knots[i]) / h;
  return values[i] + theta * (values[i + 1] - values[i]);
}

/// Solves the dense system A*x = b in place by Gaussian elimination with
/// partial pivoting. A is row-major n x n. Returns false when singular.
inline bool solve_dense(std::vector<double>& A, std::vector<double>& b,
                        std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r * n + col]) > std::abs(A[piv * n + col])) piv = r;
    if (std::abs(A[piv * n + col]) < 1e-14) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(A[col * n + c], A[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = A[r * n + col] / A[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= A[i * n + c] * b[c];
    b[i] = s / A[i * n + i];
  }
  return true;
}

}  // namespace impulsim
