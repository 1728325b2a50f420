/*
 * Copyright (C) 2026 The latplan Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include <boost/container/small_vector.hpp>

namespace latplan {

/// Coefficients below this magnitude are treated as exact zeros when the
/// degree is canonicalized.
inline constexpr double kCoeffTrim = 1e-12;

/// Real polynomial in the monomial basis, lowest degree first.
///
/// The coefficient list is always kept in canonical form: trailing
/// coefficients with magnitude below kCoeffTrim are removed, and the zero
/// polynomial is stored as the single coefficient {0}.
class Polynomial
{
public:
  using Coeffs = boost::container::small_vector<double, 8>;

  Polynomial()
  : _c{0.0}
  {
  }

  Polynomial(std::initializer_list<double> coeffs)
  : _c(coeffs.begin(), coeffs.end())
  {
    trim();
  }

  explicit Polynomial(Coeffs coeffs)
  : _c(std::move(coeffs))
  {
    trim();
  }

  template<typename It>
  Polynomial(It first, It last)
  : _c(first, last)
  {
    trim();
  }

  static Polynomial constant(double c) { return Polynomial({c}); }

  const Coeffs& coeffs() const { return _c; }
  double operator[](std::size_t i) const { return i < _c.size() ? _c[i] : 0.0; }

  std::size_t degree() const { return _c.size() - 1; }
  bool is_zero() const { return _c.size() == 1 && _c[0] == 0.0; }

  double max_abs_coeff() const
  {
    double m = 0.0;
    for (double c : _c)
      m = std::max(m, std::abs(c));
    return m;
  }

  /// Horner evaluation.
  double operator()(double t) const
  {
    double acc = 0.0;
    for (auto it = _c.rbegin(); it != _c.rend(); ++it)
      acc = acc * t + *it;
    return acc;
  }

  /// Value of the k-th derivative at t, without materializing it.
  double derivative_at(double t, std::size_t k) const
  {
    if (k >= _c.size())
      return 0.0;
    double acc = 0.0;
    for (std::size_t i = _c.size(); i-- > k;)
    {
      double falling = 1.0;
      for (std::size_t j = 0; j < k; ++j)
        falling *= static_cast<double>(i - j);
      acc = acc * t + falling * _c[i];
    }
    return acc;
  }

  Polynomial derivative() const
  {
    if (_c.size() == 1)
      return Polynomial();
    Coeffs d(_c.size() - 1);
    for (std::size_t i = 1; i < _c.size(); ++i)
      d[i - 1] = static_cast<double>(i) * _c[i];
    return Polynomial(std::move(d));
  }

  /// Anti-derivative with zero constant term.
  Polynomial integral() const
  {
    Coeffs d(_c.size() + 1, 0.0);
    for (std::size_t i = 0; i < _c.size(); ++i)
      d[i + 1] = _c[i] / static_cast<double>(i + 1);
    return Polynomial(std::move(d));
  }

  /// p(t + shift), via repeated synthetic division (Taylor shift).
  Polynomial shifted(double shift) const
  {
    Coeffs d(_c.begin(), _c.end());
    const std::size_t n = d.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = n - 1; j > i; --j)
        d[j - 1] += shift * d[j];
    return Polynomial(std::move(d));
  }

  Polynomial& operator+=(const Polynomial& o)
  {
    if (o._c.size() > _c.size())
      _c.resize(o._c.size(), 0.0);
    for (std::size_t i = 0; i < o._c.size(); ++i)
      _c[i] += o._c[i];
    trim();
    return *this;
  }

  Polynomial& operator-=(const Polynomial& o)
  {
    if (o._c.size() > _c.size())
      _c.resize(o._c.size(), 0.0);
    for (std::size_t i = 0; i < o._c.size(); ++i)
      _c[i] -= o._c[i];
    trim();
    return *this;
  }

  Polynomial& operator*=(double s)
  {
    for (double& c : _c)
      c *= s;
    trim();
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b)
  {
    Coeffs d(a._c.size() + b._c.size() - 1, 0.0);
    for (std::size_t i = 0; i < a._c.size(); ++i)
      for (std::size_t j = 0; j < b._c.size(); ++j)
        d[i + j] += a._c[i] * b._c[j];
    return Polynomial(std::move(d));
  }

private:
  void trim()
  {
    while (_c.size() > 1 && std::abs(_c.back()) < kCoeffTrim)
      _c.pop_back();
    if (_c.empty())
      _c.resize(1, 0.0);
    if (_c.size() == 1 && std::abs(_c[0]) < kCoeffTrim)
      _c[0] = 0.0;
  }

  Coeffs _c;
};

inline double evaluate(const Polynomial& p, double t) { return p(t); }
inline Polynomial derivative(const Polynomial& p) { return p.derivative(); }
inline Polynomial integrate(const Polynomial& p) { return p.integral(); }

/// Outcome of a bounded root query. When `everywhere_zero` is set the
/// polynomial vanishes identically and `roots` is empty.
struct RootSet
{
  bool everywhere_zero = false;
  std::vector<double> roots;
};

namespace detail {

// Bisection on a bracket with a strict sign change. Converges to the
// floating-point sign flip, so the result is accurate to `tol`.
inline double bisect(const Polynomial& p, double a, double b, double fa, double tol)
{
  for (int it = 0; it < 200 && b - a > tol; ++it)
  {
    const double mid = 0.5 * (a + b);
    const double fm = p(mid);
    if (fm == 0.0)
      return mid;
    if ((fm < 0.0) == (fa < 0.0))
    {
      a = mid;
      fa = fm;
    }
    else
    {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

inline void collect_roots(
  const Polynomial& p, double lo, double hi, double tol, std::vector<double>& out)
{
  const std::size_t deg = p.degree();
  if (deg == 0)
    return;

  if (deg == 1)
  {
    const double r = -p[0] / p[1];
    if (r >= lo - tol && r <= hi + tol)
      out.push_back(std::clamp(r, lo, hi));
    return;
  }

  // Critical points split [lo, hi] into pieces on which p is monotone, so
  // each piece holds at most one root and a sign change brackets it.
  std::vector<double> crit;
  collect_roots(p.derivative(), lo, hi, tol, crit);
  std::sort(crit.begin(), crit.end());

  const double zero_tol = tol * (1.0 + p.max_abs_coeff());

  std::vector<double> knots;
  knots.reserve(crit.size() + 2);
  knots.push_back(lo);
  for (double c : crit)
    if (c > lo && c < hi)
      knots.push_back(c);
  knots.push_back(hi);

  std::vector<double> values(knots.size());
  for (std::size_t i = 0; i < knots.size(); ++i)
    values[i] = p(knots[i]);

  for (std::size_t i = 0; i < knots.size(); ++i)
  {
    // Touching roots (even multiplicity) and roots sitting on a knot.
    if (std::abs(values[i]) <= zero_tol)
    {
      const bool is_endpoint = (i == 0 || i + 1 == knots.size());
      if (values[i] == 0.0 || !is_endpoint)
        out.push_back(knots[i]);
      else
      {
        // Near-zero endpoint: only accept it if there is no bracketed root
        // just inside, which the sign-change pass below will report.
        const std::size_t j = (i == 0) ? 1 : i - 1;
        const bool bracketed = (values[i] < 0.0) != (values[j] < 0.0) && values[j] != 0.0;
        if (!bracketed)
          out.push_back(knots[i]);
      }
    }
  }

  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
  {
    const double fa = values[i];
    const double fb = values[i + 1];
    if (fa == 0.0 || fb == 0.0)
      continue;
    if ((fa < 0.0) != (fb < 0.0))
      out.push_back(bisect(p, knots[i], knots[i + 1], fa, tol * 0.25));
  }
}

} // namespace detail

/// All distinct real roots of p in [lo, hi], sorted, each within `tol`.
///
/// Roots closer than `tol` are merged. An identically zero polynomial is
/// reported through RootSet::everywhere_zero instead of a root list.
inline RootSet real_roots_in_interval(const Polynomial& p, double lo, double hi, double tol)
{
  RootSet result;
  if (p.is_zero())
  {
    result.everywhere_zero = true;
    return result;
  }
  if (hi < lo)
    return result;

  std::vector<double> raw;
  detail::collect_roots(p, lo, hi, tol, raw);
  std::sort(raw.begin(), raw.end());

  for (double r : raw)
  {
    if (!result.roots.empty() && r - result.roots.back() < tol)
      continue;
    result.roots.push_back(r);
  }
  return result;
}

} // namespace latplan
