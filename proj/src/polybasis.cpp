#include "hdgflow/polybasis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace hdgflow {

namespace {

// Returns (P_m(x), P_{m-1}(x)) by the three-term recurrence.
std::pair<double, double> legendre_pair(int m, double x)
{
  double p0 = 1.0, p1 = x;
  for (int n = 2; n <= m; ++n) {
    const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
    p0 = p1;
    p1 = p2;
  }
  return {p1, p0};
}

} // namespace

void gauss_legendre(int m, std::vector<double>& points, std::vector<double>& weights)
{
  if (m < 1)
    throw std::invalid_argument("gauss_legendre: need at least one point");
  points.assign(m, 0.0);
  weights.assign(m, 0.0);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [pm, pm1] = legendre_pair(m, x);
      const double dp = m * (x * pm - pm1) / (x * x - 1.0);
      const double dx = pm / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    const auto [pm, pm1] = legendre_pair(m, x);
    const double dp = m * (x * pm - pm1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // [-1, 1] -> [0, 1], ascending
    points[i] = 0.5 * (1.0 - x);
    points[m - 1 - i] = 0.5 * (1.0 + x);
    weights[i] = weights[m - 1 - i] = 0.5 * w;
  }
  if (m % 2 == 1)
    points[m / 2] = 0.5;
}

namespace {

void check_degree(int degree)
{
  if (degree < 0 || degree > kMaxQuadratureDegree)
    throw std::invalid_argument("quadrature degree " + std::to_string(degree) +
                                " outside supported range [0, " +
                                std::to_string(kMaxQuadratureDegree) + "]");
}

} // namespace

QuadratureRule quad_segment(int degree)
{
  check_degree(degree);
  const int m = degree / 2 + 1;
  std::vector<double> x, w;
  gauss_legendre(m, x, w);
  QuadratureRule rule;
  rule.dim = 1;
  rule.degree = degree;
  for (int i = 0; i < m; ++i) {
    rule.points.emplace_back(x[i], 0.0);
    rule.weights.push_back(w[i]);
  }
  return rule;
}

QuadratureRule quad_triangle(int degree)
{
  check_degree(degree);
  // x = s, y = t (1 - s), Jacobian (1 - s): degree + 1 in s, degree in t.
  const int m = (degree + 2) / 2 + ((degree + 2) % 2);
  std::vector<double> x, w;
  gauss_legendre(m, x, w);
  QuadratureRule rule;
  rule.dim = 2;
  rule.degree = degree;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double s = x[i];
      const double t = x[j];
      rule.points.emplace_back(s, t * (1.0 - s));
      rule.weights.push_back(w[i] * w[j] * (1.0 - s));
    }
  return rule;
}

TriangleBasis::TriangleBasis(int k) : k_(k), dim_(triangle_dim(k))
{
  if (k < 0)
    throw std::invalid_argument("TriangleBasis: negative degree");
  for (int d = 0; d <= k; ++d)
    for (int b = 0; b <= d; ++b)
      exponents_.emplace_back(d - b, b);

  // Modified Gram-Schmidt (two passes) on monomials in the L2(T) inner
  // product, evaluated with a rule exact for degree 2k.
  const QuadratureRule rule = quad_triangle(2 * k);
  const std::size_t nq = rule.size();
  RowMatrix mono(nq, dim_);
  std::vector<double> buf(dim_);
  for (std::size_t q = 0; q < nq; ++q) {
    monomials(rule.points[q], buf);
    for (int j = 0; j < dim_; ++j)
      mono(q, j) = buf[j];
  }
  auto inner = [&](const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
    double s = 0.0;
    for (std::size_t q = 0; q < nq; ++q)
      s += rule.weights[q] * f[q] * g[q];
    return s;
  };

  coeffs_ = RowMatrix::Identity(dim_, dim_);
  std::vector<Eigen::VectorXd> vals(dim_);
  for (int i = 0; i < dim_; ++i) {
    Eigen::VectorXd v = mono.col(i);
    Eigen::RowVectorXd c = coeffs_.row(i);
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < i; ++j) {
        const double r = inner(v, vals[j]);
        v -= r * vals[j];
        c -= r * coeffs_.row(j);
      }
    const double norm = std::sqrt(inner(v, v));
    if (!(norm > 1e-14))
      throw std::runtime_error("TriangleBasis: monomials numerically dependent");
    vals[i] = v / norm;
    coeffs_.row(i) = c / norm;
  }
}

void TriangleBasis::monomials(const Vec2& xi, std::span<double> m) const
{
  for (int j = 0; j < dim_; ++j) {
    const auto [a, b] = exponents_[j];
    m[j] = std::pow(xi.x(), a) * std::pow(xi.y(), b);
  }
}

void TriangleBasis::values(const Vec2& xi, std::span<double> out) const
{
  std::vector<double> m(dim_);
  monomials(xi, m);
  for (int i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (int j = 0; j <= i; ++j)
      s += coeffs_(i, j) * m[j];
    out[i] = s;
  }
}

namespace {

// d/dx of x^a with the convention 0 * x^-1 = 0
double dpow(double x, int a) { return a == 0 ? 0.0 : a * std::pow(x, a - 1); }
double ddpow(double x, int a) { return a < 2 ? 0.0 : a * (a - 1) * std::pow(x, a - 2); }

} // namespace

void TriangleBasis::gradients(const Vec2& xi, std::span<double> dx, std::span<double> dy) const
{
  std::vector<double> mx(dim_), my(dim_);
  for (int j = 0; j < dim_; ++j) {
    const auto [a, b] = exponents_[j];
    mx[j] = dpow(xi.x(), a) * std::pow(xi.y(), b);
    my[j] = std::pow(xi.x(), a) * dpow(xi.y(), b);
  }
  for (int i = 0; i < dim_; ++i) {
    double sx = 0.0, sy = 0.0;
    for (int j = 0; j <= i; ++j) {
      sx += coeffs_(i, j) * mx[j];
      sy += coeffs_(i, j) * my[j];
    }
    dx[i] = sx;
    dy[i] = sy;
  }
}

void TriangleBasis::hessians(const Vec2& xi, std::span<double> dxx, std::span<double> dxy,
                             std::span<double> dyy) const
{
  std::vector<double> mxx(dim_), mxy(dim_), myy(dim_);
  for (int j = 0; j < dim_; ++j) {
    const auto [a, b] = exponents_[j];
    mxx[j] = ddpow(xi.x(), a) * std::pow(xi.y(), b);
    mxy[j] = dpow(xi.x(), a) * dpow(xi.y(), b);
    myy[j] = std::pow(xi.x(), a) * ddpow(xi.y(), b);
  }
  for (int i = 0; i < dim_; ++i) {
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int j = 0; j <= i; ++j) {
      sxx += coeffs_(i, j) * mxx[j];
      sxy += coeffs_(i, j) * mxy[j];
      syy += coeffs_(i, j) * myy[j];
    }
    dxx[i] = sxx;
    dxy[i] = sxy;
    dyy[i] = syy;
  }
}

SegmentBasis::SegmentBasis(int k) : k_(k)
{
  if (k < 0)
    throw std::invalid_argument("SegmentBasis: negative degree");
}

void SegmentBasis::values(double t, std::span<double> out) const
{
  const double x = 2.0 * t - 1.0;
  double p0 = 1.0, p1 = x;
  out[0] = 1.0;
  if (k_ >= 1)
    out[1] = std::sqrt(3.0) * x;
  for (int n = 2; n <= k_; ++n) {
    const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
    out[n] = std::sqrt(2.0 * n + 1.0) * p2;
    p0 = p1;
    p1 = p2;
  }
}

void SegmentBasis::derivatives(double t, std::span<double> out) const
{
  // P'_n = n (P_{n-1} - x P_n) / (1 - x^2) is singular at the ends; use the
  // recursion P'_{n+1} = P'_{n-1} + (2n + 1) P_n instead.
  const double x = 2.0 * t - 1.0;
  std::vector<double> p(k_ + 2), dp(k_ + 2);
  p[0] = 1.0;
  dp[0] = 0.0;
  if (k_ + 1 >= 1) {
    p[1] = x;
    dp[1] = 1.0;
  }
  for (int n = 1; n <= k_; ++n) {
    p[n + 1] = ((2.0 * n + 1.0) * x * p[n] - n * p[n - 1]) / (n + 1.0);
    dp[n + 1] = dp[n - 1] + (2.0 * n + 1.0) * p[n];
  }
  for (int n = 0; n <= k_; ++n)
    out[n] = 2.0 * std::sqrt(2.0 * n + 1.0) * dp[n];
}

BasisTable eval_basis(const TriangleBasis& basis, std::span<const Vec2> points)
{
  const int n = basis.size();
  BasisTable table;
  table.values.resize(points.size(), n);
  table.dx.resize(points.size(), n);
  table.dy.resize(points.size(), n);
  for (std::size_t q = 0; q < points.size(); ++q) {
    basis.values(points[q], {table.values.row(q).data(), static_cast<std::size_t>(n)});
    basis.gradients(points[q], {table.dx.row(q).data(), static_cast<std::size_t>(n)},
                    {table.dy.row(q).data(), static_cast<std::size_t>(n)});
  }
  return table;
}

BasisTable eval_basis(const SegmentBasis& basis, std::span<const double> points)
{
  const int n = basis.size();
  BasisTable table;
  table.values.resize(points.size(), n);
  table.dx.resize(points.size(), n);
  for (std::size_t q = 0; q < points.size(); ++q) {
    basis.values(points[q], {table.values.row(q).data(), static_cast<std::size_t>(n)});
    basis.derivatives(points[q], {table.dx.row(q).data(), static_cast<std::size_t>(n)});
  }
  return table;
}

} // namespace hdgflow
