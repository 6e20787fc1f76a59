#include "hdgflow/fespace.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hdgflow {

bool has_facet_velocity(FacetClass cls)
{
  return cls == FacetClass::InteriorS || cls == FacetClass::Interface || cls == FacetClass::ExteriorS;
}

bool has_facet_pressure(FacetClass cls, Subdomain side)
{
  if (cls == FacetClass::Interface)
    return true;
  if (side == Subdomain::Stokes)
    return cls == FacetClass::InteriorS || cls == FacetClass::ExteriorS;
  return cls == FacetClass::InteriorD || cls == FacetClass::ExteriorD;
}

SpaceLayout::SpaceLayout(std::shared_ptr<const Mesh> mesh, int k, bool mean_multiplier)
    : mesh_(std::move(mesh)), k_(k), multiplier_(mean_multiplier), vbasis_(k),
      pbasis_(k >= 1 ? k - 1 : 0), fbasis_(k)
{
  if (k < 1)
    throw std::invalid_argument("SpaceLayout: polynomial degree k must be >= 1");
  const int nc = static_cast<int>(mesh_->num_cells());
  const int nf = static_cast<int>(mesh_->num_facets());
  int offset = 0;
  auto add_block = [&](FieldBlock b, int n) {
    blocks_[static_cast<int>(b)] = {offset, n};
    offset += n;
  };
  add_block(FieldBlock::Velocity, nc * cell_velocity_size());
  add_block(FieldBlock::Pressure, nc * cell_pressure_size());

  ubar_index_.assign(nf, -1);
  pbar_s_index_.assign(nf, -1);
  pbar_d_index_.assign(nf, -1);
  int nu = 0, ns = 0, nd = 0;
  for (int f = 0; f < nf; ++f) {
    const FacetClass cls = mesh_->facet(f).cls;
    if (has_facet_velocity(cls))
      ubar_index_[f] = nu++;
    if (has_facet_pressure(cls, Subdomain::Stokes))
      pbar_s_index_[f] = ns++;
    if (has_facet_pressure(cls, Subdomain::Darcy))
      pbar_d_index_[f] = nd++;
  }
  add_block(FieldBlock::FacetVelocity, nu * facet_velocity_size());
  add_block(FieldBlock::FacetPressureS, ns * facet_pressure_size());
  add_block(FieldBlock::FacetPressureD, nd * facet_pressure_size());
  add_block(FieldBlock::Multiplier, multiplier_ ? 1 : 0);
  size_ = offset;

  const QuadratureRule rule = quad_triangle(2 * k);
  pmean_.assign(pbasis_.size(), 0.0);
  std::vector<double> vals(pbasis_.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    pbasis_.values(rule.points[q], vals);
    for (int i = 0; i < pbasis_.size(); ++i)
      pmean_[i] += rule.weights[q] * vals[i];
  }
}

DofRange SpaceLayout::cell_velocity(int c) const
{
  const int n = cell_velocity_size();
  return {blocks_[0].offset + c * n, n};
}

DofRange SpaceLayout::cell_pressure(int c) const
{
  const int n = cell_pressure_size();
  return {blocks_[1].offset + c * n, n};
}

DofRange SpaceLayout::facet_velocity(int f) const
{
  const int i = ubar_index_.at(f);
  if (i < 0)
    return {0, 0};
  const int n = facet_velocity_size();
  return {blocks_[2].offset + i * n, n};
}

DofRange SpaceLayout::facet_pressure(int f, Subdomain side) const
{
  const int i = side == Subdomain::Stokes ? pbar_s_index_.at(f) : pbar_d_index_.at(f);
  if (i < 0)
    return {0, 0};
  const int n = facet_pressure_size();
  const int b = side == Subdomain::Stokes ? 3 : 4;
  return {blocks_[b].offset + i * n, n};
}

DofRange SpaceLayout::multiplier() const { return blocks_[5]; }

std::string SpaceLayout::descriptor() const
{
  std::ostringstream out;
  out << "k=" << k_ << " cells=" << mesh_->num_cells() << " facets=" << mesh_->num_facets();
  const char* names[6] = {"u", "p", "ubar", "pbar_s", "pbar_d", "lambda"};
  for (int b = 0; b < 6; ++b)
    out << ' ' << names[b] << '=' << blocks_[b].offset << ':' << blocks_[b].size;
  return out.str();
}

// --- DiscreteField ---------------------------------------------------------

DiscreteField::DiscreteField(std::shared_ptr<const SpaceLayout> layout)
    : layout_(std::move(layout)), coeffs_(Eigen::VectorXd::Zero(layout_->size()))
{}

DiscreteField::DiscreteField(std::shared_ptr<const SpaceLayout> layout, Eigen::VectorXd coefficients)
    : layout_(std::move(layout)), coeffs_(std::move(coefficients))
{
  if (coeffs_.size() != layout_->size())
    throw std::invalid_argument("DiscreteField: coefficient vector length does not match layout");
}

namespace {

Vec2 physical_gradient(const Mat2& inv_jac, double dxi, double deta)
{
  return {inv_jac(0, 0) * dxi + inv_jac(1, 0) * deta, inv_jac(0, 1) * dxi + inv_jac(1, 1) * deta};
}

} // namespace

Vec2 DiscreteField::velocity(int cell, const Vec2& x) const
{
  const auto& basis = layout_->velocity_basis();
  const int n = basis.size();
  std::vector<double> phi(n);
  basis.values(mesh().to_reference(cell, x), phi);
  const auto c = block(layout_->cell_velocity(cell));
  Vec2 u = Vec2::Zero();
  for (int i = 0; i < n; ++i) {
    u.x() += c[i] * phi[i];
    u.y() += c[n + i] * phi[i];
  }
  return u;
}

Mat2 DiscreteField::velocity_gradient(int cell, const Vec2& x) const
{
  const auto& basis = layout_->velocity_basis();
  const int n = basis.size();
  std::vector<double> gx(n), gy(n);
  basis.gradients(mesh().to_reference(cell, x), gx, gy);
  const Mat2& inv = mesh().cell(cell).inverse_jacobian;
  const auto c = block(layout_->cell_velocity(cell));
  Mat2 g = Mat2::Zero();
  for (int i = 0; i < n; ++i) {
    const Vec2 d = physical_gradient(inv, gx[i], gy[i]);
    g.row(0) += c[i] * d.transpose();
    g.row(1) += c[n + i] * d.transpose();
  }
  return g;
}

double DiscreteField::divergence(int cell, const Vec2& x) const
{
  const Mat2 g = velocity_gradient(cell, x);
  return g(0, 0) + g(1, 1);
}

double DiscreteField::pressure(int cell, const Vec2& x) const
{
  const auto& basis = layout_->pressure_basis();
  std::vector<double> phi(basis.size());
  basis.values(mesh().to_reference(cell, x), phi);
  const auto c = block(layout_->cell_pressure(cell));
  double p = 0.0;
  for (int i = 0; i < basis.size(); ++i)
    p += c[i] * phi[i];
  return p;
}

Vec2 DiscreteField::facet_velocity(int facet, double t) const
{
  const DofRange r = layout_->facet_velocity(facet);
  if (r.empty())
    throw std::invalid_argument("facet_velocity: facet carries no velocity unknowns");
  const auto& basis = layout_->facet_basis();
  const int n = basis.size();
  std::vector<double> psi(n);
  basis.values(t, psi);
  const auto c = block(r);
  Vec2 u = Vec2::Zero();
  for (int i = 0; i < n; ++i) {
    u.x() += c[i] * psi[i];
    u.y() += c[n + i] * psi[i];
  }
  return u;
}

double DiscreteField::facet_pressure(int facet, Subdomain side, double t) const
{
  const DofRange r = layout_->facet_pressure(facet, side);
  if (r.empty())
    throw std::invalid_argument("facet_pressure: facet carries no pressure unknowns on this side");
  const auto& basis = layout_->facet_basis();
  std::vector<double> psi(basis.size());
  basis.values(t, psi);
  const auto c = block(r);
  double p = 0.0;
  for (int i = 0; i < basis.size(); ++i)
    p += c[i] * psi[i];
  return p;
}

double DiscreteField::multiplier() const
{
  const DofRange r = layout_->multiplier();
  return r.empty() ? 0.0 : coeffs_[r.offset];
}

void DiscreteField::save(std::ostream& out) const
{
  out << "hdgflow-field 1\n";
  out << "layout " << layout_->descriptor() << '\n';
  out << "size " << coeffs_.size() << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < coeffs_.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", coeffs_[i]);
    out << buf;
  }
}

DiscreteField DiscreteField::load(std::istream& in, std::shared_ptr<const SpaceLayout> layout)
{
  std::string line;
  if (!std::getline(in, line) || line != "hdgflow-field 1")
    throw std::runtime_error("DiscreteField::load: not an hdgflow field file");
  if (!std::getline(in, line) || line.rfind("layout ", 0) != 0)
    throw std::runtime_error("DiscreteField::load: missing layout line");
  if (line.substr(7) != layout->descriptor())
    throw std::runtime_error("DiscreteField::load: layout mismatch (stored '" + line.substr(7) +
                             "', expected '" + layout->descriptor() + "')");
  std::string tag;
  long n = 0;
  if (!(in >> tag >> n) || tag != "size" || n != layout->size())
    throw std::runtime_error("DiscreteField::load: bad size line");
  Eigen::VectorXd c(n);
  for (long i = 0; i < n; ++i)
    if (!(in >> c[i]))
      throw std::runtime_error("DiscreteField::load: truncated coefficient list");
  return DiscreteField(std::move(layout), std::move(c));
}

// --- CellPolynomialField -----------------------------------------------------

std::span<const double> CellPolynomialField::block(int cell, int component) const
{
  const int n = basis_size();
  return {coefficients.data() + (cell * components + component) * n, static_cast<std::size_t>(n)};
}

std::span<double> CellPolynomialField::block(int cell, int component)
{
  const int n = basis_size();
  return {coefficients.data() + (cell * components + component) * n, static_cast<std::size_t>(n)};
}

double CellPolynomialField::value(int cell, const Vec2& x, int component) const
{
  const int n = basis_size();
  std::vector<double> phi(n);
  basis->values(mesh->to_reference(cell, x), phi);
  const auto c = block(cell, component);
  double v = 0.0;
  for (int i = 0; i < n; ++i)
    v += c[i] * phi[i];
  return v;
}

namespace {

int projection_degree(int degree) { return std::min(2 * degree + 8, kMaxQuadratureDegree); }

CellPolynomialField make_cell_field(std::shared_ptr<const Mesh> mesh, int degree, int components)
{
  CellPolynomialField field;
  field.mesh = std::move(mesh);
  field.degree = degree;
  field.components = components;
  field.basis = std::make_shared<const TriangleBasis>(degree);
  field.coefficients = Eigen::VectorXd::Zero(field.mesh->num_cells() * components * field.basis->size());
  return field;
}

// Orthonormal basis on the reference triangle: the projection coefficients
// are sum_q w_q f(x_q) phi_i(xi_q), with reference weights.
template <class Eval>
void project_into(CellPolynomialField& field, Eval&& eval)
{
  const Mesh& mesh = *field.mesh;
  const QuadratureRule rule = quad_triangle(projection_degree(field.degree));
  const BasisTable table = eval_basis(*field.basis, rule.points);
  const int n = field.basis->size();
  std::vector<double> fv(field.components);
  for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c) {
    for (std::size_t q = 0; q < rule.size(); ++q) {
      eval(c, mesh.to_physical(c, rule.points[q]), fv);
      for (int comp = 0; comp < field.components; ++comp) {
        auto b = field.block(c, comp);
        const double s = rule.weights[q] * fv[comp];
        for (int i = 0; i < n; ++i)
          b[i] += s * table.values(q, i);
      }
    }
  }
}

} // namespace

CellPolynomialField project_cell(std::shared_ptr<const Mesh> mesh, int degree, const CellScalarFn& f)
{
  CellPolynomialField field = make_cell_field(std::move(mesh), degree, 1);
  project_into(field, [&](int c, const Vec2& x, std::vector<double>& out) { out[0] = f(c, x); });
  return field;
}

CellPolynomialField project_cell(std::shared_ptr<const Mesh> mesh, int degree, const CellVectorFn& f)
{
  CellPolynomialField field = make_cell_field(std::move(mesh), degree, 2);
  project_into(field, [&](int c, const Vec2& x, std::vector<double>& out) {
    const Vec2 v = f(c, x);
    out[0] = v.x();
    out[1] = v.y();
  });
  return field;
}

void project_pressure(DiscreteField& field, const CellScalarFn& f)
{
  const SpaceLayout& layout = field.layout();
  const CellPolynomialField p = project_cell(layout.mesh_ptr(), layout.degree() - 1, f);
  for (int c = 0; c < static_cast<int>(layout.mesh().num_cells()); ++c) {
    auto dst = field.block(layout.cell_pressure(c));
    const auto src = p.block(c, 0);
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

namespace {

template <class Eval>
void project_facets(DiscreteField& field, int components, const std::function<DofRange(int)>& range, Eval&& eval)
{
  const SpaceLayout& layout = field.layout();
  const Mesh& mesh = layout.mesh();
  const QuadratureRule rule = quad_segment(projection_degree(layout.degree()));
  const SegmentBasis& basis = layout.facet_basis();
  const int n = basis.size();
  std::vector<double> psi(n), fv(components);
  for (int f = 0; f < static_cast<int>(mesh.num_facets()); ++f) {
    const DofRange r = range(f);
    if (r.empty())
      continue;
    auto dst = field.block(r);
    std::fill(dst.begin(), dst.end(), 0.0);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double t = rule.points[q].x();
      basis.values(t, psi);
      eval(f, mesh.facet_point(f, t), fv);
      for (int comp = 0; comp < components; ++comp)
        for (int i = 0; i < n; ++i)
          dst[comp * n + i] += rule.weights[q] * fv[comp] * psi[i];
    }
  }
}

} // namespace

void project_facet_velocity(DiscreteField& field, const FacetVectorFn& g)
{
  const SpaceLayout& layout = field.layout();
  project_facets(field, 2, [&](int f) { return layout.facet_velocity(f); },
                 [&](int f, const Vec2& x, std::vector<double>& out) {
                   const Vec2 v = g(f, x);
                   out[0] = v.x();
                   out[1] = v.y();
                 });
}

void project_facet_pressure(DiscreteField& field, Subdomain side, const FacetScalarFn& g)
{
  const SpaceLayout& layout = field.layout();
  project_facets(field, 1, [&](int f) { return layout.facet_pressure(f, side); },
                 [&](int f, const Vec2& x, std::vector<double>& out) { out[0] = g(f, x); });
}

// --- BDM interpolation -------------------------------------------------------

CellPolynomialField bdm_interpolate(std::shared_ptr<const Mesh> mesh_ptr, int k, const CellVectorFn& u)
{
  if (k < 1)
    throw std::invalid_argument("bdm_interpolate: k must be >= 1");
  CellPolynomialField field = make_cell_field(std::move(mesh_ptr), k, 2);
  const Mesh& mesh = *field.mesh;
  const TriangleBasis& vb = *field.basis;
  const TriangleBasis grad_basis(k - 1);
  const TriangleBasis bubble_basis(std::max(k - 2, 0));
  const int nbubble = k >= 2 ? bubble_basis.size() : 0;
  const SegmentBasis sb(k);
  const int n = vb.size();
  const int ndof = 2 * n;

  const int qdeg = std::min(3 * k + 6, kMaxQuadratureDegree);
  const QuadratureRule crule = quad_triangle(qdeg);
  const QuadratureRule frule = quad_segment(qdeg);
  const BasisTable vtab = eval_basis(vb, crule.points);
  const BasisTable gtab = eval_basis(grad_basis, crule.points);
  const BasisTable btab = eval_basis(bubble_basis, crule.points);

  Eigen::MatrixXd dofs(ndof, ndof);
  Eigen::VectorXd rhs(ndof);
  std::vector<double> phi(n), psi(k + 1);

  for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c) {
    const Cell& cell = mesh.cell(c);
    const Mat2& inv = cell.inverse_jacobian;
    dofs.setZero();
    rhs.setZero();
    int row = 0;
    // edge normal moments
    for (int l = 0; l < 3; ++l) {
      const int f = cell.facets[l];
      const Facet& facet = mesh.facet(f);
      const Vec2 nrm = facet.normal * cell.facet_sign[l];
      for (std::size_t q = 0; q < frule.size(); ++q) {
        const double t = frule.points[q].x();
        const Vec2 x = mesh.facet_point(f, t);
        const double w = frule.weights[q] * facet.length;
        sb.values(t, psi);
        vb.values(mesh.to_reference(c, x), phi);
        const double un = u(c, x).dot(nrm);
        for (int m = 0; m <= k; ++m) {
          rhs[row + m] += w * un * psi[m];
          for (int i = 0; i < n; ++i) {
            dofs(row + m, i) += w * psi[m] * phi[i] * nrm.x();
            dofs(row + m, n + i) += w * psi[m] * phi[i] * nrm.y();
          }
        }
      }
      row += k + 1;
    }
    // interior moments: gradients of P_{k-1} (constant dropped) and curls of
    // bubble * P_{k-2}
    const int ngrad = grad_basis.size() - 1;
    for (std::size_t q = 0; q < crule.size(); ++q) {
      const Vec2 xi = crule.points[q];
      const Vec2 x = mesh.to_physical(c, xi);
      const double w = crule.weights[q] * cell.det;
      const Vec2 uq = u(c, x);
      for (int g = 0; g < ngrad; ++g) {
        const Vec2 dq = physical_gradient(inv, gtab.dx(q, g + 1), gtab.dy(q, g + 1));
        rhs[row + g] += w * uq.dot(dq);
        for (int i = 0; i < n; ++i) {
          dofs(row + g, i) += w * vtab.values(q, i) * dq.x();
          dofs(row + g, n + i) += w * vtab.values(q, i) * dq.y();
        }
      }
      if (nbubble > 0) {
        const double l0 = 1.0 - xi.x() - xi.y(), l1 = xi.x(), l2 = xi.y();
        const double b = l0 * l1 * l2;
        const double db_dxi = l1 * l2 * -1.0 + l0 * l2;
        const double db_deta = l1 * l2 * -1.0 + l0 * l1;
        for (int j = 0; j < nbubble; ++j) {
          const double qv = btab.values(q, j);
          const double dxi = db_dxi * qv + b * btab.dx(q, j);
          const double deta = db_deta * qv + b * btab.dy(q, j);
          const Vec2 grad = physical_gradient(inv, dxi, deta);
          const Vec2 curl(grad.y(), -grad.x());
          const int r = row + ngrad + j;
          rhs[r] += w * uq.dot(curl);
          for (int i = 0; i < n; ++i) {
            dofs(r, i) += w * vtab.values(q, i) * curl.x();
            dofs(r, n + i) += w * vtab.values(q, i) * curl.y();
          }
        }
      }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(dofs);
    if (!lu.isInvertible())
      throw std::runtime_error("bdm_interpolate: singular local system on cell " + std::to_string(c));
    const Eigen::VectorXd sol = lu.solve(rhs);
    auto bx = field.block(c, 0);
    auto by = field.block(c, 1);
    for (int i = 0; i < n; ++i) {
      bx[i] = sol[i];
      by[i] = sol[n + i];
    }
  }
  return field;
}

void bdm_interpolate(DiscreteField& field, const CellVectorFn& u)
{
  const SpaceLayout& layout = field.layout();
  const CellPolynomialField pi = bdm_interpolate(layout.mesh_ptr(), layout.degree(), u);
  const int n = layout.velocity_basis().size();
  for (int c = 0; c < static_cast<int>(layout.mesh().num_cells()); ++c) {
    auto dst = field.block(layout.cell_velocity(c));
    const auto sx = pi.block(c, 0);
    const auto sy = pi.block(c, 1);
    std::copy(sx.begin(), sx.end(), dst.begin());
    std::copy(sy.begin(), sy.end(), dst.begin() + n);
  }
}

// --- zero mean ---------------------------------------------------------------

double pressure_integral(const DiscreteField& field)
{
  const SpaceLayout& layout = field.layout();
  const auto& integrals = layout.pressure_basis_integrals();
  double total = 0.0;
  for (int c = 0; c < static_cast<int>(layout.mesh().num_cells()); ++c) {
    const auto p = field.block(layout.cell_pressure(c));
    double s = 0.0;
    for (std::size_t i = 0; i < integrals.size(); ++i)
      s += p[i] * integrals[i];
    total += s * layout.mesh().cell(c).det;
  }
  return total;
}

void enforce_zero_mean(DiscreteField& field)
{
  const SpaceLayout& layout = field.layout();
  const double mean = pressure_integral(field) / layout.mesh().domain().area();
  // the constant 1 has coefficients int_T phi_i (orthonormal basis)
  const auto& one = layout.pressure_basis_integrals();
  for (int c = 0; c < static_cast<int>(layout.mesh().num_cells()); ++c) {
    auto p = field.block(layout.cell_pressure(c));
    for (std::size_t i = 0; i < one.size(); ++i)
      p[i] -= mean * one[i];
  }
}

void enforce_zero_mean(CellPolynomialField& p)
{
  const Mesh& mesh = *p.mesh;
  const QuadratureRule rule = quad_triangle(2 * p.degree);
  const int n = p.basis_size();
  std::vector<double> integrals(n, 0.0), phi(n);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    p.basis->values(rule.points[q], phi);
    for (int i = 0; i < n; ++i)
      integrals[i] += rule.weights[q] * phi[i];
  }
  double total = 0.0;
  for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c) {
    const auto b = p.block(c, 0);
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      s += b[i] * integrals[i];
    total += s * mesh.cell(c).det;
  }
  const double mean = total / mesh.domain().area();
  for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c) {
    auto b = p.block(c, 0);
    for (int i = 0; i < n; ++i)
      b[i] -= mean * integrals[i];
  }
}

} // namespace hdgflow
