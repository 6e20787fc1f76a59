#include "hdgflow/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace hdgflow {

using std::numbers::pi;

Vec2 ManufacturedCase::u_d(const Vec2& x) const { return -(kappa(x) / mu) * grad_p_d(x); }

double ManufacturedCase::f_d(const Vec2& x) const
{
  const Mat2 h = hess_p_d(x);
  return (grad_kappa(x).dot(grad_p_d(x)) + kappa(x) * h.trace()) / mu;
}

Vec2 ManufacturedCase::f_s(const Vec2& x) const
{
  const auto h = hess_u_s(x);
  const Vec2 lap(h[0].trace(), h[1].trace());
  Vec2 f = -mu * lap + grad_p_s(x);
  if (convection)
    f += grad_u_s(x) * u_s(x);
  return f;
}

Vec2 ManufacturedCase::interface_traction(const Vec2& x, const Vec2& n, const Vec2& tau) const
{
  const Mat2 g = grad_u_s(x);
  const Mat2 eps = 0.5 * (g + g.transpose());
  const Vec2 us = u_s(x);
  return 2.0 * mu * eps * n - p_s(x) * n + alpha * mu / std::sqrt(kappa(x)) * us.dot(tau) * tau + p_d(x) * n;
}

ManufacturedCase make_example1(double mu, KappaChoice choice, double alpha, bool convection)
{
  ManufacturedCase mc;
  mc.name = choice == KappaChoice::Kappa1 ? "example1-kappa1" : "example1-kappa2";
  mc.domain = {0.0, 1.0, -1.0, 1.0, 0.0, {0, 1, 2, 3}};
  mc.mu = mu;
  mc.alpha = alpha;
  mc.convection = convection;

  mc.u_s = [](const Vec2& x) {
    const double c = std::cos(pi * x.x() * x.y());
    return Vec2(pi * x.x() * c + 1.0, -pi * x.y() * c + 2.0 * x.x());
  };
  mc.grad_u_s = [](const Vec2& x) {
    const double a = x.x(), b = x.y();
    const double c = std::cos(pi * a * b), s = std::sin(pi * a * b);
    Mat2 g;
    g << pi * c - pi * pi * a * b * s, -pi * pi * a * a * s,
         pi * pi * b * b * s + 2.0, -pi * c + pi * pi * a * b * s;
    return g;
  };
  mc.hess_u_s = [](const Vec2& x) {
    const double a = x.x(), b = x.y();
    const double c = std::cos(pi * a * b), s = std::sin(pi * a * b);
    const double p2 = pi * pi, p3 = p2 * pi;
    Mat2 h1, h2;
    const double u1xx = -2.0 * p2 * b * s - p3 * a * b * b * c;
    const double u1xy = -2.0 * p2 * a * s - p3 * a * a * b * c;
    const double u1yy = -p3 * a * a * a * c;
    const double u2xx = p3 * b * b * b * c;
    const double u2xy = 2.0 * p2 * b * s + p3 * a * b * b * c;
    const double u2yy = 2.0 * p2 * a * s + p3 * a * a * b * c;
    h1 << u1xx, u1xy, u1xy, u1yy;
    h2 << u2xx, u2xy, u2xy, u2yy;
    return std::array<Mat2, 2>{h1, h2};
  };
  mc.p_s = [mu](const Vec2& x) {
    return mu * (1.0 - pi) * std::cos(pi * x.x() * x.y()) + std::sin(0.5 * pi * x.y()) / mu;
  };
  mc.grad_p_s = [mu](const Vec2& x) {
    const double s = std::sin(pi * x.x() * x.y());
    return Vec2(-mu * (1.0 - pi) * pi * x.y() * s,
                -mu * (1.0 - pi) * pi * x.x() * s + 0.5 * pi * std::cos(0.5 * pi * x.y()) / mu);
  };
  const double a2 = alpha * alpha;
  mc.p_d = [mu, a2](const Vec2& x) {
    const double d = pi * x.x() + 1.0;
    return -8.0 * mu * x.x() * x.y() / (d * d * a2) + mu * std::cos(pi * x.x() * x.y());
  };
  mc.grad_p_d = [mu, a2](const Vec2& x) {
    const double a = x.x(), b = x.y(), d = pi * a + 1.0;
    const double s = std::sin(pi * a * b);
    return Vec2(-8.0 * mu * b * (1.0 - pi * a) / (a2 * d * d * d) - mu * pi * b * s,
                -8.0 * mu * a / (a2 * d * d) - mu * pi * a * s);
  };
  mc.hess_p_d = [mu, a2](const Vec2& x) {
    const double a = x.x(), b = x.y(), d = pi * a + 1.0;
    const double c = std::cos(pi * a * b), s = std::sin(pi * a * b);
    const double pxx = -8.0 * mu * b * (2.0 * pi * pi * a - 4.0 * pi) / (a2 * d * d * d * d) - mu * pi * pi * b * b * c;
    const double pyy = -mu * pi * pi * a * a * c;
    const double pxy = -8.0 * mu * (1.0 - pi * a) / (a2 * d * d * d) - mu * pi * s - mu * pi * pi * a * b * c;
    Mat2 h;
    h << pxx, pxy, pxy, pyy;
    return h;
  };
  auto k1 = [a2](const Vec2& x) {
    const double d = pi * x.x() + 1.0;
    return a2 * d * d / 4.0;
  };
  auto k1_grad = [a2](const Vec2& x) { return Vec2(a2 * pi * (pi * x.x() + 1.0) / 2.0, 0.0); };
  if (choice == KappaChoice::Kappa1) {
    mc.kappa = k1;
    mc.grad_kappa = k1_grad;
  } else {
    mc.kappa = [k1](const Vec2& x) {
      const double s = std::sin(10.0 * x.y());
      return k1(x) * std::exp(-15.0 * s * s);
    };
    mc.grad_kappa = [k1, k1_grad](const Vec2& x) {
      const double s = std::sin(10.0 * x.y());
      const double e = std::exp(-15.0 * s * s);
      return Vec2(k1_grad(x).x() * e, k1(x) * e * -150.0 * std::sin(20.0 * x.y()));
    };
  }
  return mc;
}

ManufacturedCase make_polynomial_case(int k, double mu, double alpha)
{
  if (k < 1)
    throw std::invalid_argument("make_polynomial_case: k must be >= 1");
  ManufacturedCase mc;
  mc.name = "polynomial";
  mc.domain = {0.0, 1.0, -1.0, 1.0, 0.0, {0, 1, 2, 3}};
  mc.mu = mu;
  mc.alpha = alpha;
  mc.convection = false;
  mc.kappa = [](const Vec2&) { return 1.0; };
  mc.grad_kappa = [](const Vec2&) { return Vec2(0.0, 0.0); };
  mc.hess_p_d = [](const Vec2&) { return Mat2(Mat2::Zero()); };
  if (k == 1) {
    // no interface flux: p^d constant, u^d = 0
    mc.u_s = [](const Vec2& x) { return Vec2(x.x() + 2.0 * x.y() + 1.0, -x.y()); };
    mc.grad_u_s = [](const Vec2&) {
      Mat2 g;
      g << 1.0, 2.0, 0.0, -1.0;
      return g;
    };
    mc.hess_u_s = [](const Vec2&) { return std::array<Mat2, 2>{Mat2::Zero(), Mat2::Zero()}; };
    mc.p_s = [](const Vec2&) { return 0.3; };
    mc.grad_p_s = [](const Vec2&) { return Vec2(0.0, 0.0); };
    mc.p_d = [](const Vec2&) { return -0.2; };
    mc.grad_p_d = [](const Vec2&) { return Vec2(0.0, 0.0); };
  } else {
    // u^s_2 = 1 on y = 0 matches u^d_2 = -(1/mu) d_y p^d = 1
    mc.u_s = [](const Vec2& x) { return Vec2(2.0 * x.x() * x.y() + x.y() * x.y(), -x.y() * x.y() + 1.0); };
    mc.grad_u_s = [](const Vec2& x) {
      Mat2 g;
      g << 2.0 * x.y(), 2.0 * x.x() + 2.0 * x.y(), 0.0, -2.0 * x.y();
      return g;
    };
    mc.hess_u_s = [](const Vec2&) {
      Mat2 h1, h2;
      h1 << 0.0, 2.0, 2.0, 2.0;
      h2 << 0.0, 0.0, 0.0, -2.0;
      return std::array<Mat2, 2>{h1, h2};
    };
    mc.p_s = [](const Vec2& x) { return x.x() + x.y(); };
    mc.grad_p_s = [](const Vec2&) { return Vec2(1.0, 1.0); };
    mc.p_d = [mu](const Vec2& x) { return 0.5 * mu * x.x() - mu * x.y(); };
    mc.grad_p_d = [mu](const Vec2&) { return Vec2(0.5 * mu, -mu); };
  }
  return mc;
}

ProblemData to_problem_data(const ManufacturedCase& mc, double beta)
{
  ProblemData d;
  d.mu = mc.mu;
  d.alpha = mc.alpha;
  d.beta = beta;
  d.convection = mc.convection;
  d.permeability = isotropic_permeability([kappa = mc.kappa](int, const Vec2& x) { return kappa(x); });
  d.source_s = [mc](const Vec2& x) { return mc.f_s(x); };
  d.source_d = [mc](const Vec2& x) { return mc.f_d(x); };
  d.velocity_bc = mc.u_s;
  d.normal_flux_bc = [mc](const Vec2& x, const Vec2& n) { return mc.u_d(x).dot(n); };
  d.interface_traction = [mc](const Vec2& x, const Vec2& n, const Vec2& tau) {
    return mc.interface_traction(x, n, tau);
  };
  return d;
}

double exact_pressure_mean(const ManufacturedCase& mc, const Mesh& mesh, int degree)
{
  const QuadratureRule r = quad_triangle(std::min(degree, kMaxQuadratureDegree));
  double s = 0.0;
  for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c) {
    const Subdomain side = mesh.cell(c).subdomain;
    double sc = 0.0;
    for (std::size_t q = 0; q < r.size(); ++q)
      sc += r.weights[q] * mc.pressure(side, mesh.to_physical(c, r.points[q]));
    s += sc * mesh.cell(c).det;
  }
  return s / mesh.domain().area();
}

namespace {

double pressure_shift(const ManufacturedCase& mc, const SpaceLayout& layout)
{
  return layout.has_multiplier() ? exact_pressure_mean(mc, layout.mesh(), 3 * layout.degree() + 10) : 0.0;
}

/// Hessians of the two velocity components of a discrete field.
std::array<Mat2, 2> velocity_hessian(const DiscreteField& f, int cell, const Vec2& x)
{
  const SpaceLayout& layout = f.layout();
  const TriangleBasis& basis = layout.velocity_basis();
  const int n = basis.size();
  std::vector<double> hxx(n), hxy(n), hyy(n);
  basis.hessians(f.mesh().to_reference(cell, x), hxx, hxy, hyy);
  const Mat2& inv = f.mesh().cell(cell).inverse_jacobian;
  const auto c = f.block(layout.cell_velocity(cell));
  std::array<Mat2, 2> out{Mat2::Zero(), Mat2::Zero()};
  for (int i = 0; i < n; ++i) {
    Mat2 href;
    href << hxx[i], hxy[i], hxy[i], hyy[i];
    const Mat2 h = inv.transpose() * href * inv;
    out[0] += c[i] * h;
    out[1] += c[n + i] * h;
  }
  return out;
}

} // namespace

DiscreteField interpolate_exact(const ManufacturedCase& mc, std::shared_ptr<const SpaceLayout> layout)
{
  const Mesh& mesh = layout->mesh();
  DiscreteField f(layout);
  bdm_interpolate(f, [&](int c, const Vec2& x) { return mc.velocity(mesh.cell(c).subdomain, x); });
  project_facet_velocity(f, [&](int, const Vec2& x) { return mc.u_s(x); });
  const double shift = pressure_shift(mc, *layout);
  project_pressure(f, [&](int c, const Vec2& x) { return mc.pressure(mesh.cell(c).subdomain, x) - shift; });
  project_facet_pressure(f, Subdomain::Stokes, [&](int, const Vec2& x) { return mc.p_s(x) - shift; });
  project_facet_pressure(f, Subdomain::Darcy, [&](int, const Vec2& x) { return mc.p_d(x) - shift; });
  return f;
}

ErrorReport error_norms(const ManufacturedCase& mc, const DiscreteField& uh)
{
  const SpaceLayout& layout = uh.layout();
  const Mesh& mesh = layout.mesh();
  const QuadratureRule r = quad_triangle(3 * layout.degree() + 2);
  const double shift = pressure_shift(mc, layout);
  double e_energy = 0.0, e_u = 0.0, e_p = 0.0;
  for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c) {
    const Cell& cell = mesh.cell(c);
    for (std::size_t q = 0; q < r.size(); ++q) {
      const Vec2 x = mesh.to_physical(c, r.points[q]);
      const double w = r.weights[q] * cell.det;
      const double du = (mc.velocity(cell.subdomain, x) - uh.velocity(c, x)).squaredNorm();
      const double dp = mc.pressure(cell.subdomain, x) - shift - uh.pressure(c, x);
      e_u += w * du;
      e_p += w * dp * dp;
      if (cell.subdomain == Subdomain::Stokes)
        e_energy += w * (mc.grad_u_s(x) - uh.velocity_gradient(c, x)).squaredNorm();
      else
        e_energy += w * du;
    }
  }
  ErrorReport out;
  out.err_E_u = std::sqrt(e_energy);
  out.err_L2_u = std::sqrt(e_u);
  out.err_L2_p = std::sqrt(e_p);
  const DiscreteField interp = interpolate_exact(mc, uh.layout_ptr());
  out.discrete = discrete_triple_norms(DiscreteField(uh.layout_ptr(), interp.coefficients() - uh.coefficients()));
  return out;
}

double interpolation_error_vprime(const ManufacturedCase& mc, std::shared_ptr<const SpaceLayout> layout)
{
  const Mesh& mesh = layout->mesh();
  const DiscreteField pi_u = interpolate_exact(mc, layout);
  const int deg = 3 * layout->degree() + 2;
  const QuadratureRule cr = quad_triangle(deg);
  const QuadratureRule fr = quad_segment(deg);
  double total = 0.0;
  for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c) {
    const Cell& cell = mesh.cell(c);
    const double h = cell.diameter;
    for (std::size_t q = 0; q < cr.size(); ++q) {
      const Vec2 x = mesh.to_physical(c, cr.points[q]);
      const double w = cr.weights[q] * cell.det;
      if (cell.subdomain == Subdomain::Stokes) {
        total += w * (mc.grad_u_s(x) - pi_u.velocity_gradient(c, x)).squaredNorm();
        const auto he = mc.hess_u_s(x);
        const auto hh = velocity_hessian(pi_u, c, x);
        total += w * h * h * ((he[0] - hh[0]).squaredNorm() + (he[1] - hh[1]).squaredNorm());
      } else {
        const double div = -mc.f_d(x) - pi_u.divergence(c, x);
        total += w * ((mc.u_d(x) - pi_u.velocity(c, x)).squaredNorm() + div * div);
      }
    }
    for (int l = 0; l < 3; ++l) {
      const int f = cell.facets[l];
      const Facet& facet = mesh.facet(f);
      const Vec2 n = mesh.outward_normal(c, f);
      for (std::size_t q = 0; q < fr.size(); ++q) {
        const double t = fr.points[q].x();
        const Vec2 x = mesh.facet_point(f, t);
        const double w = fr.weights[q] * facet.length;
        // (u - Pi u) - (u - Pibar u) = Pibar u - Pi u
        if (cell.subdomain == Subdomain::Stokes) {
          total += w / h * (pi_u.facet_velocity(f, t) - pi_u.velocity(c, x)).squaredNorm();
        } else if (facet.cls == FacetClass::Interface) {
          const double d = (pi_u.facet_velocity(f, t) - pi_u.velocity(c, x)).dot(n);
          total += w / h * d * d;
        }
      }
    }
  }
  for (int f = 0; f < static_cast<int>(mesh.num_facets()); ++f) {
    const Facet& facet = mesh.facet(f);
    for (std::size_t q = 0; q < fr.size(); ++q) {
      const double t = fr.points[q].x();
      const Vec2 x = mesh.facet_point(f, t);
      const double w = fr.weights[q] * facet.length;
      if (facet.cls == FacetClass::InteriorD) {
        const double jump = (pi_u.velocity(facet.cells[1], x) - pi_u.velocity(facet.cells[0], x)).dot(facet.normal);
        total += w / facet.length * jump * jump;
      } else if (facet.cls == FacetClass::ExteriorD) {
        const double d = (mc.u_d(x) - pi_u.velocity(facet.cells[0], x)).dot(facet.normal);
        total += w / facet.length * d * d;
      } else if (facet.cls == FacetClass::Interface) {
        const double d = (mc.u_s(x) - pi_u.facet_velocity(f, t)).dot(facet.tangent);
        total += w * d * d;
      }
    }
  }
  return std::sqrt(total);
}

double ConservationReport::max_relative() const
{
  const double m = std::max({divergence, normal_jump, interface_trace});
  return velocity_l2 > 0.0 ? m / velocity_l2 : m;
}

ConservationReport conservation_report(const DiscreteField& uh, const FormContext& ctx)
{
  const SpaceLayout& layout = uh.layout();
  const Mesh& mesh = layout.mesh();
  const QuadTables& t = ctx.assembly();
  const CellPolynomialField source = projected_porous_source(ctx);
  ConservationReport out;
  double l2 = 0.0;
  for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c) {
    const Cell& cell = mesh.cell(c);
    for (std::size_t q = 0; q < t.cell_rule.size(); ++q) {
      const Vec2 x = mesh.to_physical(c, t.cell_rule.points[q]);
      l2 += t.cell_rule.weights[q] * cell.det * uh.velocity(c, x).squaredNorm();
      double r = uh.divergence(c, x);
      if (cell.subdomain == Subdomain::Darcy)
        r += source.value(c, x);
      out.divergence = std::max(out.divergence, std::abs(r));
    }
  }
  out.velocity_l2 = std::sqrt(l2);
  for (int f = 0; f < static_cast<int>(mesh.num_facets()); ++f) {
    const Facet& facet = mesh.facet(f);
    for (std::size_t q = 0; q < t.facet_rule.size(); ++q) {
      const double s = t.facet_rule.points[q].x();
      const Vec2 x = mesh.facet_point(f, s);
      const Vec2 u0 = uh.velocity(facet.cells[0], x);
      if (facet.is_boundary()) {
        out.boundary_flux += t.facet_rule.weights[q] * facet.length * u0.dot(facet.normal);
        continue;
      }
      const Vec2 u1 = uh.velocity(facet.cells[1], x);
      out.normal_jump = std::max(out.normal_jump, std::abs((u0 - u1).dot(facet.normal)));
      if (facet.cls == FacetClass::Interface) {
        const double ubar = uh.facet_velocity(f, s).dot(facet.normal);
        out.interface_trace = std::max({out.interface_trace, std::abs(u0.dot(facet.normal) - ubar),
                                        std::abs(u1.dot(facet.normal) - ubar)});
      }
    }
  }
  out.multiplier = uh.multiplier();
  return out;
}

double ConvergenceReport::rate(double coarse, double fine)
{
  if (!(coarse > 1e-14) || !(fine > 1e-14))
    return std::numeric_limits<double>::quiet_NaN();
  return std::log2(coarse / fine);
}

double ConvergenceReport::rate_E_u(std::size_t l) const
{
  return l == 0 ? std::numeric_limits<double>::quiet_NaN()
                : rate(levels[l - 1].errors.err_E_u, levels[l].errors.err_E_u);
}

double ConvergenceReport::rate_L2_u(std::size_t l) const
{
  return l == 0 ? std::numeric_limits<double>::quiet_NaN()
                : rate(levels[l - 1].errors.err_L2_u, levels[l].errors.err_L2_u);
}

double ConvergenceReport::rate_L2_p(std::size_t l) const
{
  return l == 0 ? std::numeric_limits<double>::quiet_NaN()
                : rate(levels[l - 1].errors.err_L2_p, levels[l].errors.err_L2_p);
}

void ConvergenceReport::write_csv(std::ostream& out) const
{
  out << "level,h,dofs,err_E_u,err_L2_u,err_L2_p,rate_E_u,rate_L2_u,rate_L2_p,picard_iters\n";
  char buf[64];
  auto num = [&](double v) {
    if (std::isnan(v))
      return std::string();
    std::snprintf(buf, sizeof buf, "%.10e", v);
    return std::string(buf);
  };
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const LevelResult& r = levels[l];
    out << r.level << ',' << num(r.h) << ',' << r.dofs << ',' << num(r.errors.err_E_u) << ','
        << num(r.errors.err_L2_u) << ',' << num(r.errors.err_L2_p) << ',' << num(rate_E_u(l)) << ','
        << num(rate_L2_u(l)) << ',' << num(rate_L2_p(l)) << ',' << r.solve.iterations << '\n';
  }
}

ConvergenceReport run_convergence(const ManufacturedCase& mc, const ConvergenceOptions& options, bool allow_short)
{
  if (options.levels < (allow_short ? 1 : 3))
    throw std::invalid_argument("run_convergence: at least 3 levels are required");
  if (options.k < 1)
    throw std::invalid_argument("run_convergence: k must be >= 1");
  const double beta = options.beta > 0.0 ? options.beta : default_penalty(options.k);
  ConvergenceReport report;
  Mesh mesh = build_structured_mesh(mc.domain, options.coarse_n);
  for (int level = 0; level < options.levels; ++level) {
    if (level > 0)
      mesh = refine_uniform(mesh);
    auto mesh_ptr = std::make_shared<const Mesh>(mesh);
    auto layout = std::make_shared<const SpaceLayout>(mesh_ptr, options.k, true);
    const FormContext ctx(layout, to_problem_data(mc, beta));
    PicardResult result = picard_solve(ctx, options.solver);
    LevelResult row;
    row.level = level;
    row.h = mesh.h();
    row.dofs = layout->size();
    row.errors = error_norms(mc, result.solution);
    row.solve = result.report;
    row.conservation = conservation_report(result.solution, ctx);
    if (options.on_level)
      options.on_level(row, result.solution, ctx);
    report.levels.push_back(row);
  }
  return report;
}

} // namespace hdgflow
