#include "hdgflow/forms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hdgflow/simd.hpp"

namespace hdgflow {

namespace {

std::span<const double> as_span(const RowMatrix& m)
{
  return {m.data(), static_cast<std::size_t>(m.size())};
}

std::span<double> as_span(RowMatrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

/// c += sum_q w_q a(q, :)^T b(q, :)
void gram(const RowMatrix& a, const RowMatrix& b, const std::vector<double>& w, RowMatrix& c)
{
  c.setZero(a.cols(), b.cols());
  simd::weighted_gram(a.cols(), b.cols(), as_span(a), as_span(b), w, as_span(c));
}

/// out = sum_q w_q a(q, :)
Eigen::VectorXd moment(const RowMatrix& a, const std::vector<double>& w)
{
  Eigen::VectorXd out = Eigen::VectorXd::Zero(a.cols());
  simd::weighted_moment(a.cols(), as_span(a), w, {out.data(), static_cast<std::size_t>(out.size())});
  return out;
}

void append_range(std::vector<int>& idx, DofRange r)
{
  for (int i = 0; i < r.size; ++i)
    idx.push_back(r[i]);
}

/// Physical gradients from reference derivative tables.
void map_gradients(const Mat2& inv, const BasisTable& t, RowMatrix& dx, RowMatrix& dy)
{
  dx = inv(0, 0) * t.dx + inv(1, 0) * t.dy;
  dy = inv(0, 1) * t.dx + inv(1, 1) * t.dy;
}

/// Evaluates the cell velocity of w at the rows of a basis table.
void eval_velocity(const DiscreteField& w, int cell, const RowMatrix& values, Eigen::VectorXd& wx,
                   Eigen::VectorXd& wy)
{
  const SpaceLayout& layout = w.layout();
  const int n = layout.velocity_basis().size();
  const auto c = w.block(layout.cell_velocity(cell));
  const Eigen::Map<const Eigen::VectorXd> cx(c.data(), n), cy(c.data() + n, n);
  wx = values * cx;
  wy = values * cy;
}

// Kernel layout of a free-flow cell: [u_x][u_y] then [ubar_x][ubar_y] per facet.
struct FreeFlowLayout {
  int nv, nf, size;
  explicit FreeFlowLayout(const SpaceLayout& layout)
      : nv(layout.velocity_basis().size()), nf(layout.facet_basis().size()), size(2 * nv + 6 * nf)
  {}
  // compact index (cell + one facet) -> kernel index
  int map(int l, int compact) const
  {
    return compact < 2 * nv ? compact : 2 * nv + 2 * nf * l + (compact - 2 * nv);
  }
};

void free_flow_indices(const SpaceLayout& layout, const Cell& cell, int c, std::vector<int>& idx)
{
  append_range(idx, layout.cell_velocity(c));
  for (int l = 0; l < 3; ++l) {
    const DofRange r = layout.facet_velocity(cell.facets[l]);
    if (r.empty())
      throw std::logic_error("free-flow cell facet without velocity unknowns");
    append_range(idx, r);
  }
}

/// Trace table of component c of (v - vbar) on one facet over the compact
/// [cell | facet] unknowns.
void jump_table(int c, const FreeFlowLayout& fl, const RowMatrix& phi, const RowMatrix& psi, RowMatrix& t)
{
  const int nq = static_cast<int>(phi.rows());
  t.setZero(nq, 2 * fl.nv + 2 * fl.nf);
  t.middleCols(c * fl.nv, fl.nv) = phi;
  t.middleCols(2 * fl.nv + c * fl.nf, fl.nf) = -psi;
}

void add_compact(LocalKernel& k, const FreeFlowLayout& fl, int l, const RowMatrix& block, double scale)
{
  for (int i = 0; i < block.rows(); ++i) {
    const int r = fl.map(l, i);
    for (int j = 0; j < block.cols(); ++j)
      k.matrix(r, fl.map(l, j)) += scale * block(i, j);
  }
}

void require_subdomain(const Mesh& mesh, int cell, Subdomain s, const char* what)
{
  if (mesh.cell(cell).subdomain != s)
    throw std::invalid_argument(std::string(what) + ": cell " + std::to_string(cell) +
                                " is in the wrong subdomain");
}

bool is_spd(const Mat2& k)
{
  return std::abs(k(0, 1) - k(1, 0)) <= 1e-12 * k.cwiseAbs().maxCoeff() && k(0, 0) > 0.0 &&
         k.determinant() > 0.0;
}

} // namespace

Vec2 reference_edge_point(int l, double s)
{
  static const Vec2 v[3] = {Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)};
  const Vec2& a = v[(l + 1) % 3];
  const Vec2& b = v[(l + 2) % 3];
  return a + s * (b - a);
}

QuadTables::QuadTables(const SpaceLayout& layout, int degree)
    : cell_rule(quad_triangle(degree)), facet_rule(quad_segment(degree))
{
  velocity = eval_basis(layout.velocity_basis(), cell_rule.points);
  pressure = eval_basis(layout.pressure_basis(), cell_rule.points);
  std::vector<double> s, s_rev;
  for (const Vec2& p : facet_rule.points) {
    s.push_back(p.x());
    s_rev.push_back(1.0 - p.x());
  }
  for (int l = 0; l < 3; ++l) {
    std::vector<Vec2> pts;
    for (double t : s)
      pts.push_back(reference_edge_point(l, t));
    edge_velocity[l] = eval_basis(layout.velocity_basis(), pts);
    edge_pressure[l] = eval_basis(layout.pressure_basis(), pts);
  }
  facet_forward = eval_basis(layout.facet_basis(), s).values;
  facet_reverse = eval_basis(layout.facet_basis(), s_rev).values;
}

FormContext::FormContext(std::shared_ptr<const SpaceLayout> layout, ProblemData data)
    : layout_(std::move(layout)), data_(std::move(data)),
      assembly_(*layout_, 3 * layout_->degree() + 2),
      data_tables_(*layout_, std::min(3 * layout_->degree() + 10, kMaxQuadratureDegree))
{
  data_.validate();
  if (layout_->has_multiplier() && !data_.has_pressure_boundary())
    balance_flux_data();
}

void FormContext::balance_flux_data()
{
  // Net outflow implied by the data under the data quadrature:
  // int f^d + int_{exterior, porous} g_n + int_{exterior, free} g . n.
  const Mesh& m = mesh();
  const QuadTables& t = data_tables_;
  double net = 0.0, flux_length = 0.0;
  if (data_.source_d)
    for (int c = 0; c < static_cast<int>(m.num_cells()); ++c) {
      if (m.cell(c).subdomain != Subdomain::Darcy)
        continue;
      double s = 0.0;
      for (std::size_t q = 0; q < t.cell_rule.size(); ++q)
        s += t.cell_rule.weights[q] * data_.source_d(m.to_physical(c, t.cell_rule.points[q]));
      net += s * m.cell(c).det;
    }
  for (int f = 0; f < static_cast<int>(m.num_facets()); ++f) {
    const Facet& facet = m.facet(f);
    double s = 0.0;
    if (facet.cls == FacetClass::ExteriorD) {
      flux_length += facet.length;
      if (data_.normal_flux_bc)
        for (std::size_t q = 0; q < t.facet_rule.size(); ++q)
          s += t.facet_rule.weights[q] *
               data_.normal_flux_bc(m.facet_point(f, t.facet_rule.points[q].x()), facet.normal);
    } else if (facet.cls == FacetClass::ExteriorS && data_.velocity_bc) {
      for (std::size_t q = 0; q < t.facet_rule.size(); ++q)
        s += t.facet_rule.weights[q] *
             data_.velocity_bc(m.facet_point(f, t.facet_rule.points[q].x())).dot(facet.normal);
    }
    net += s * facet.length;
  }
  compatibility_defect_ = net;
  if (flux_length > 0.0)
    flux_shift_ = -net / flux_length;
}

void FormContext::physical_gradients(int cell, const QuadTables& t, RowMatrix& dx, RowMatrix& dy) const
{
  map_gradients(mesh().cell(cell).inverse_jacobian, t.velocity, dx, dy);
}

// --- free-flow forms ----------------------------------------------------------

LocalKernel local_ahs(const FormContext& ctx, int c)
{
  const Mesh& mesh = ctx.mesh();
  require_subdomain(mesh, c, Subdomain::Stokes, "local_ahs");
  const SpaceLayout& layout = ctx.layout();
  const QuadTables& t = ctx.assembly();
  const Cell& cell = mesh.cell(c);
  const double mu = ctx.data().mu;
  const FreeFlowLayout fl(layout);
  const int nv = fl.nv;

  LocalKernel k;
  free_flow_indices(layout, cell, c, k.rows);
  k.cols = k.rows;
  k.matrix.setZero(fl.size, fl.size);

  RowMatrix dx, dy, g;
  ctx.physical_gradients(c, t, dx, dy);
  std::vector<double> w(t.cell_rule.size());
  for (std::size_t q = 0; q < w.size(); ++q)
    w[q] = t.cell_rule.weights[q] * cell.det * mu;
  RowMatrix gxx, gyy, gyx;
  gram(dx, dx, w, gxx);
  gram(dy, dy, w, gyy);
  gram(dy, dx, w, gyx);
  k.matrix.block(0, 0, nv, nv) += 2.0 * gxx + gyy;
  k.matrix.block(nv, nv, nv, nv) += gxx + 2.0 * gyy;
  k.matrix.block(0, nv, nv, nv) += gyx;
  k.matrix.block(nv, 0, nv, nv) += gyx.transpose();

  const double gamma = 2.0 * ctx.data().beta * mu / cell.diameter;
  const Mat2& inv = cell.inverse_jacobian;
  RowMatrix ex, ey, jump[2], flux[2], tt, ts;
  for (int l = 0; l < 3; ++l) {
    const Facet& facet = mesh.facet(cell.facets[l]);
    const double sign = cell.facet_sign[l];
    const Vec2 n = facet.normal * sign;
    const RowMatrix& phi = t.edge_velocity[l].values;
    const RowMatrix& psi = t.facet_values(sign);
    map_gradients(inv, t.edge_velocity[l], ex, ey);
    const RowMatrix dn = n.x() * ex + n.y() * ey;
    std::vector<double> wf(t.facet_rule.size());
    for (std::size_t q = 0; q < wf.size(); ++q)
      wf[q] = t.facet_rule.weights[q] * facet.length;
    for (int comp = 0; comp < 2; ++comp) {
      jump_table(comp, fl, phi, psi, jump[comp]);
      // (2 mu eps(phi_j e_d) n)_comp = mu (delta_{comp,d} d_n phi_j + d_comp phi_j n_d)
      flux[comp].setZero(phi.rows(), 2 * nv + 2 * fl.nf);
      const RowMatrix& dc = comp == 0 ? ex : ey;
      for (int d = 0; d < 2; ++d) {
        auto blk = flux[comp].middleCols(d * nv, nv);
        blk = mu * n[d] * dc;
        if (d == comp)
          blk += mu * dn;
      }
      gram(jump[comp], jump[comp], wf, tt);
      gram(jump[comp], flux[comp], wf, ts);
      add_compact(k, fl, l, tt, gamma);
      add_compact(k, fl, l, ts, -1.0);
      add_compact(k, fl, l, RowMatrix(ts.transpose()), -1.0);
    }
  }
  return k;
}

LocalKernel local_th(const FormContext& ctx, int c, const DiscreteField& w)
{
  const Mesh& mesh = ctx.mesh();
  require_subdomain(mesh, c, Subdomain::Stokes, "local_th");
  const SpaceLayout& layout = ctx.layout();
  const QuadTables& t = ctx.assembly();
  const Cell& cell = mesh.cell(c);
  const FreeFlowLayout fl(layout);
  const int nv = fl.nv, nf = fl.nf;

  LocalKernel k;
  free_flow_indices(layout, cell, c, k.rows);
  k.cols = k.rows;
  k.matrix.setZero(fl.size, fl.size);

  // -int phi_j (w . grad phi_i) delta_cd
  RowMatrix dx, dy, g;
  ctx.physical_gradients(c, t, dx, dy);
  Eigen::VectorXd wx, wy;
  eval_velocity(w, c, t.velocity.values, wx, wy);
  const RowMatrix adv = wx.asDiagonal() * dx + wy.asDiagonal() * dy;
  std::vector<double> wq(t.cell_rule.size());
  for (std::size_t q = 0; q < wq.size(); ++q)
    wq[q] = t.cell_rule.weights[q] * cell.det;
  gram(adv, t.velocity.values, wq, g);
  k.matrix.block(0, 0, nv, nv) -= g;
  k.matrix.block(nv, nv, nv, nv) -= g;

  RowMatrix jump, up, gf;
  for (int l = 0; l < 3; ++l) {
    const Facet& facet = mesh.facet(cell.facets[l]);
    const double sign = cell.facet_sign[l];
    const Vec2 n = facet.normal * sign;
    const RowMatrix& phi = t.edge_velocity[l].values;
    const RowMatrix& psi = t.facet_values(sign);
    eval_velocity(w, c, phi, wx, wy);
    const Eigen::VectorXd wn = n.x() * wx + n.y() * wy;
    const Eigen::VectorXd wplus = wn.cwiseMax(0.0), wminus = wn.cwiseMin(0.0);
    std::vector<double> wf(t.facet_rule.size());
    for (std::size_t q = 0; q < wf.size(); ++q)
      wf[q] = t.facet_rule.weights[q] * facet.length;
    for (int comp = 0; comp < 2; ++comp) {
      jump_table(comp, fl, phi, psi, jump);
      up.setZero(phi.rows(), 2 * nv + 2 * nf);
      up.middleCols(comp * nv, nv) = wplus.asDiagonal() * phi;
      up.middleCols(2 * nv + comp * nf, nf) = wminus.asDiagonal() * psi;
      gram(jump, up, wf, gf);
      add_compact(k, fl, l, gf, 1.0);
    }
    if (facet.cls == FacetClass::Interface) {
      std::vector<double> wi(wf.size());
      for (std::size_t q = 0; q < wf.size(); ++q)
        wi[q] = wf[q] * wn[q];
      gram(psi, psi, wi, gf);
      const int off = 2 * nv + 2 * nf * l;
      k.matrix.block(off, off, nf, nf) += gf;
      k.matrix.block(off + nf, off + nf, nf, nf) += gf;
    }
  }
  return k;
}

// --- porous and interface forms -------------------------------------------------

LocalKernel local_ad(const FormContext& ctx, int c)
{
  const Mesh& mesh = ctx.mesh();
  require_subdomain(mesh, c, Subdomain::Darcy, "local_ad");
  const SpaceLayout& layout = ctx.layout();
  const QuadTables& t = ctx.assembly();
  const Cell& cell = mesh.cell(c);
  const int nv = layout.velocity_basis().size();
  const std::size_t nq = t.cell_rule.size();

  std::vector<double> w[2][2];
  for (auto& row : w)
    for (auto& v : row)
      v.resize(nq);
  for (std::size_t q = 0; q < nq; ++q) {
    const Vec2 x = mesh.to_physical(c, t.cell_rule.points[q]);
    const Mat2 kappa = ctx.data().permeability(c, x);
    if (!is_spd(kappa) || !kappa.allFinite())
      throw std::runtime_error("local_ad: permeability is not symmetric positive definite in cell " +
                               std::to_string(c) + " at (" + std::to_string(x.x()) + ", " +
                               std::to_string(x.y()) + ")");
    const Mat2 kinv = kappa.inverse();
    const double s = t.cell_rule.weights[q] * cell.det * ctx.data().mu;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        w[a][b][q] = s * 0.5 * (kinv(a, b) + kinv(b, a));
  }
  LocalKernel k;
  append_range(k.rows, layout.cell_velocity(c));
  k.cols = k.rows;
  k.matrix.setZero(2 * nv, 2 * nv);
  RowMatrix g;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      gram(t.velocity.values, t.velocity.values, w[a][b], g);
      k.matrix.block(a * nv, b * nv, nv, nv) = g;
    }
  return k;
}

LocalKernel local_aI(const FormContext& ctx, int f)
{
  const Mesh& mesh = ctx.mesh();
  const Facet& facet = mesh.facet(f);
  if (facet.cls != FacetClass::Interface)
    throw std::invalid_argument("local_aI: facet " + std::to_string(f) + " is not on the interface");
  const QuadTables& t = ctx.assembly();
  const int nf = ctx.layout().facet_basis().size();
  const Vec2 tau = facet.tangent;
  const ProblemData& d = ctx.data();
  std::vector<double> w(t.facet_rule.size());
  for (std::size_t q = 0; q < w.size(); ++q) {
    const Vec2 x = mesh.facet_point(f, t.facet_rule.points[q].x());
    const double kt = tau.dot(d.permeability(facet.cells[1], x) * tau);
    if (!(kt > 0.0))
      throw std::runtime_error("local_aI: tangential permeability is not positive on facet " + std::to_string(f));
    w[q] = t.facet_rule.weights[q] * facet.length * d.alpha * d.mu / std::sqrt(kt);
  }
  RowMatrix g;
  gram(t.facet_forward, t.facet_forward, w, g);
  LocalKernel k;
  append_range(k.rows, ctx.layout().facet_velocity(f));
  k.cols = k.rows;
  k.matrix.setZero(2 * nf, 2 * nf);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      k.matrix.block(a * nf, b * nf, nf, nf) = tau[a] * tau[b] * g;
  return k;
}

// --- pressure coupling ----------------------------------------------------------

LocalKernel local_bh(const FormContext& ctx, int c)
{
  const Mesh& mesh = ctx.mesh();
  const SpaceLayout& layout = ctx.layout();
  const QuadTables& t = ctx.assembly();
  const Cell& cell = mesh.cell(c);
  const Subdomain side = cell.subdomain;
  const int nv = layout.velocity_basis().size();
  const int np = layout.pressure_basis().size();
  const int nf = layout.facet_basis().size();

  LocalKernel k;
  append_range(k.rows, layout.cell_velocity(c));
  append_range(k.cols, layout.cell_pressure(c));
  for (int l = 0; l < 3; ++l) {
    const DofRange r = layout.facet_pressure(cell.facets[l], side);
    if (r.empty())
      throw std::logic_error("local_bh: facet without pressure unknowns");
    append_range(k.cols, r);
  }
  k.matrix.setZero(2 * nv, np + 3 * nf);

  RowMatrix dx, dy, g;
  ctx.physical_gradients(c, t, dx, dy);
  std::vector<double> w(t.cell_rule.size());
  for (std::size_t q = 0; q < w.size(); ++q)
    w[q] = t.cell_rule.weights[q] * cell.det;
  gram(dx, t.pressure.values, w, g);
  k.matrix.block(0, 0, nv, np) -= g;
  gram(dy, t.pressure.values, w, g);
  k.matrix.block(nv, 0, nv, np) -= g;

  for (int l = 0; l < 3; ++l) {
    const Facet& facet = mesh.facet(cell.facets[l]);
    const double sign = cell.facet_sign[l];
    const Vec2 n = facet.normal * sign;
    std::vector<double> wf(t.facet_rule.size());
    for (std::size_t q = 0; q < wf.size(); ++q)
      wf[q] = t.facet_rule.weights[q] * facet.length;
    gram(t.edge_velocity[l].values, t.facet_values(sign), wf, g);
    k.matrix.block(0, np + l * nf, nv, nf) += n.x() * g;
    k.matrix.block(nv, np + l * nf, nv, nf) += n.y() * g;
  }
  return k;
}

LocalKernel local_bhI(const FormContext& ctx, int f, Subdomain side)
{
  const Mesh& mesh = ctx.mesh();
  const SpaceLayout& layout = ctx.layout();
  const Facet& facet = mesh.facet(f);
  const bool ok = facet.cls == FacetClass::Interface ||
                  (facet.cls == FacetClass::ExteriorS && side == Subdomain::Stokes);
  if (!ok)
    throw std::invalid_argument("local_bhI: facet " + std::to_string(f) +
                                " has no facet velocity/pressure pairing on this side");
  const QuadTables& t = ctx.assembly();
  const int nf = layout.facet_basis().size();
  const Vec2 n = side == Subdomain::Stokes ? facet.normal : Vec2(-facet.normal);
  std::vector<double> w(t.facet_rule.size());
  for (std::size_t q = 0; q < w.size(); ++q)
    w[q] = t.facet_rule.weights[q] * facet.length;
  RowMatrix g;
  gram(t.facet_forward, t.facet_forward, w, g);
  LocalKernel k;
  append_range(k.rows, layout.facet_velocity(f));
  append_range(k.cols, layout.facet_pressure(f, side));
  k.matrix.setZero(2 * nf, nf);
  k.matrix.block(0, 0, nf, nf) = -n.x() * g;
  k.matrix.block(nf, 0, nf, nf) = -n.y() * g;
  return k;
}

LocalKernel local_mean(const FormContext& ctx, int c)
{
  const SpaceLayout& layout = ctx.layout();
  if (!layout.has_multiplier())
    throw std::logic_error("local_mean: layout has no multiplier");
  const auto& integrals = layout.pressure_basis_integrals();
  LocalKernel k;
  k.rows = {layout.multiplier().offset};
  append_range(k.cols, layout.cell_pressure(c));
  k.matrix.resize(1, static_cast<Eigen::Index>(integrals.size()));
  for (std::size_t i = 0; i < integrals.size(); ++i)
    k.matrix(0, static_cast<Eigen::Index>(i)) = ctx.mesh().cell(c).det * integrals[i];
  return k;
}

// --- loads and essential data ----------------------------------------------------

LocalKernel local_rhs(const FormContext& ctx, int c)
{
  const Mesh& mesh = ctx.mesh();
  const SpaceLayout& layout = ctx.layout();
  const QuadTables& t = ctx.data_tables();
  const Cell& cell = mesh.cell(c);
  const ProblemData& d = ctx.data();
  const std::size_t nq = t.cell_rule.size();
  LocalKernel k;
  if (cell.subdomain == Subdomain::Stokes) {
    append_range(k.rows, layout.cell_velocity(c));
    const int nv = layout.velocity_basis().size();
    k.vector = Eigen::VectorXd::Zero(2 * nv);
    if (!d.source_s)
      return k;
    std::vector<double> wx(nq), wy(nq);
    for (std::size_t q = 0; q < nq; ++q) {
      const Vec2 f = d.source_s(mesh.to_physical(c, t.cell_rule.points[q]));
      const double s = t.cell_rule.weights[q] * cell.det;
      wx[q] = s * f.x();
      wy[q] = s * f.y();
    }
    k.vector.head(nv) = moment(t.velocity.values, wx);
    k.vector.tail(nv) = moment(t.velocity.values, wy);
  } else {
    append_range(k.rows, layout.cell_pressure(c));
    k.vector = Eigen::VectorXd::Zero(layout.pressure_basis().size());
    if (!d.source_d)
      return k;
    std::vector<double> w(nq);
    for (std::size_t q = 0; q < nq; ++q)
      w[q] = t.cell_rule.weights[q] * cell.det * d.source_d(mesh.to_physical(c, t.cell_rule.points[q]));
    k.vector = moment(t.pressure.values, w);
  }
  return k;
}

LocalKernel bc_contributions(const FormContext& ctx, int f)
{
  const Mesh& mesh = ctx.mesh();
  const SpaceLayout& layout = ctx.layout();
  const QuadTables& t = ctx.data_tables();
  const Facet& facet = mesh.facet(f);
  const ProblemData& d = ctx.data();
  const std::size_t nq = t.facet_rule.size();
  LocalKernel k;
  if (facet.cls == FacetClass::ExteriorD &&
      d.darcy_sides[static_cast<int>(facet.side)] == DarcyBoundary::NormalFlux) {
    append_range(k.rows, layout.facet_pressure(f, Subdomain::Darcy));
    std::vector<double> w(nq);
    for (std::size_t q = 0; q < nq; ++q) {
      const Vec2 x = mesh.facet_point(f, t.facet_rule.points[q].x());
      const double g = d.normal_flux_bc ? d.normal_flux_bc(x, facet.normal) : 0.0;
      w[q] = t.facet_rule.weights[q] * facet.length * (g + ctx.normal_flux_shift());
    }
    k.vector = moment(t.facet_forward, w);
  } else if (facet.cls == FacetClass::Interface && d.interface_traction) {
    append_range(k.rows, layout.facet_velocity(f));
    const int nf = layout.facet_basis().size();
    std::vector<double> wx(nq), wy(nq);
    for (std::size_t q = 0; q < nq; ++q) {
      const Vec2 g = d.interface_traction(mesh.facet_point(f, t.facet_rule.points[q].x()), facet.normal,
                                          facet.tangent);
      const double s = t.facet_rule.weights[q] * facet.length;
      wx[q] = s * g.x();
      wy[q] = s * g.y();
    }
    k.vector.resize(2 * nf);
    k.vector.head(nf) = moment(t.facet_forward, wx);
    k.vector.tail(nf) = moment(t.facet_forward, wy);
  }
  return k;
}

DofConstraints essential_constraints(const FormContext& ctx)
{
  const Mesh& mesh = ctx.mesh();
  const SpaceLayout& layout = ctx.layout();
  const QuadTables& t = ctx.data_tables();
  const ProblemData& d = ctx.data();
  const std::size_t nq = t.facet_rule.size();
  const int nf = layout.facet_basis().size();
  DofConstraints out;
  std::vector<double> wx(nq), wy(nq);
  for (int f = 0; f < static_cast<int>(mesh.num_facets()); ++f) {
    const Facet& facet = mesh.facet(f);
    if (facet.cls == FacetClass::ExteriorS) {
      for (std::size_t q = 0; q < nq; ++q) {
        const Vec2 g = d.velocity_bc ? d.velocity_bc(mesh.facet_point(f, t.facet_rule.points[q].x()))
                                     : Vec2::Zero();
        wx[q] = t.facet_rule.weights[q] * g.x();
        wy[q] = t.facet_rule.weights[q] * g.y();
      }
      const Eigen::VectorXd cx = moment(t.facet_forward, wx), cy = moment(t.facet_forward, wy);
      const DofRange r = layout.facet_velocity(f);
      for (int m = 0; m < nf; ++m) {
        out.dofs.push_back(r[m]);
        out.values.push_back(cx[m]);
      }
      for (int m = 0; m < nf; ++m) {
        out.dofs.push_back(r[nf + m]);
        out.values.push_back(cy[m]);
      }
    } else if (facet.cls == FacetClass::ExteriorD &&
               d.darcy_sides[static_cast<int>(facet.side)] == DarcyBoundary::Pressure) {
      for (std::size_t q = 0; q < nq; ++q)
        wx[q] = t.facet_rule.weights[q] *
                (d.pressure_bc ? d.pressure_bc(mesh.facet_point(f, t.facet_rule.points[q].x())) : 0.0);
      const Eigen::VectorXd cp = moment(t.facet_forward, wx);
      const DofRange r = layout.facet_pressure(f, Subdomain::Darcy);
      for (int m = 0; m < nf; ++m) {
        out.dofs.push_back(r[m]);
        out.values.push_back(cp[m]);
      }
    }
  }
  return out;
}

CellPolynomialField projected_porous_source(const FormContext& ctx)
{
  const Mesh& mesh = ctx.mesh();
  const SpaceLayout& layout = ctx.layout();
  CellPolynomialField out;
  out.mesh = layout.mesh_ptr();
  out.degree = layout.degree() - 1;
  out.components = 1;
  out.basis = std::make_shared<const TriangleBasis>(out.degree);
  out.coefficients = Eigen::VectorXd::Zero(mesh.num_cells() * out.basis->size());
  if (!ctx.data().source_d)
    return out;
  const QuadTables& t = ctx.data_tables();
  std::vector<double> w(t.cell_rule.size());
  for (int c = 0; c < static_cast<int>(mesh.num_cells()); ++c) {
    if (mesh.cell(c).subdomain != Subdomain::Darcy)
      continue;
    for (std::size_t q = 0; q < w.size(); ++q)
      w[q] = t.cell_rule.weights[q] * ctx.data().source_d(mesh.to_physical(c, t.cell_rule.points[q]));
    const Eigen::VectorXd m = moment(t.pressure.values, w);
    auto b = out.block(c, 0);
    for (int i = 0; i < m.size(); ++i)
      b[i] = m[i];
  }
  return out;
}

} // namespace hdgflow
