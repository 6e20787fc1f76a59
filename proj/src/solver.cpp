#include "hdgflow/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include <klu.h>

#include "hdgflow/norms.hpp"
#include "hdgflow/parallel.hpp"

namespace hdgflow {

void SolverParams::validate() const
{
  if (!(picard_tol > 0.0))
    throw std::invalid_argument("SolverParams: picard_tol must be positive");
  if (picard_max_iter < 1)
    throw std::invalid_argument("SolverParams: picard_max_iter must be >= 1");
  if (!(relaxation > 0.0 && relaxation <= 1.0))
    throw std::invalid_argument("SolverParams: relaxation must be in (0, 1]");
  if (anderson_depth < 0)
    throw std::invalid_argument("SolverParams: anderson_depth must be >= 0");
}

std::string sparse_solver_version()
{
  return "KLU " + std::to_string(KLU_MAIN_VERSION) + "." + std::to_string(KLU_SUB_VERSION) + "." +
         std::to_string(KLU_SUBSUB_VERSION);
}

bool needs_mean_multiplier(const ProblemData& data) { return !data.has_pressure_boundary(); }

Eigen::VectorXd LinearSystem::expand(const Eigen::VectorXd& free) const
{
  Eigen::VectorXd full = Eigen::VectorXd::Zero(full_size);
  for (std::size_t i = 0; i < free_to_full.size(); ++i)
    full[free_to_full[i]] = free[static_cast<Eigen::Index>(i)];
  for (std::size_t i = 0; i < constraints.dofs.size(); ++i)
    full[constraints.dofs[i]] = constraints.values[i];
  return full;
}

namespace {

struct Scatter {
  const std::vector<int>& to_free;
  const Eigen::VectorXd& fixed; // full-length, constrained values
  std::vector<Eigen::Triplet<double>>& triplets;
  Eigen::VectorXd& rhs;

  void add(int i, int j, double v)
  {
    const int fi = to_free[i];
    if (fi < 0 || v == 0.0)
      return;
    const int fj = to_free[j];
    if (fj < 0)
      rhs[fi] -= v * fixed[j];
    else
      triplets.emplace_back(fi, fj, v);
  }

  void matrix(const LocalKernel& k, bool transpose = false)
  {
    for (std::size_t r = 0; r < k.rows.size(); ++r)
      for (std::size_t c = 0; c < k.cols.size(); ++c) {
        const double v = k.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        if (transpose)
          add(k.cols[c], k.rows[r], v);
        else
          add(k.rows[r], k.cols[c], v);
      }
  }

  void vector(const LocalKernel& k)
  {
    for (std::size_t r = 0; r < k.rows.size(); ++r) {
      const int fi = to_free[k.rows[r]];
      if (fi >= 0)
        rhs[fi] += k.vector[static_cast<Eigen::Index>(r)];
    }
  }
};

// Kernels of one cell or facet, kept in scatter order. `transposed` marks
// b_h kernels that enter both as written and transposed.
struct KernelList {
  std::vector<LocalKernel> matrices;
  std::vector<bool> transposed;
  std::vector<LocalKernel> loads;

  void add(LocalKernel k, bool both = false)
  {
    matrices.push_back(std::move(k));
    transposed.push_back(both);
  }
};

} // namespace

LinearSystem assemble_global(const FormContext& ctx, const DiscreteField* w, unsigned workers)
{
  const SpaceLayout& layout = ctx.layout();
  const Mesh& mesh = ctx.mesh();
  const ProblemData& data = ctx.data();
  if (layout.has_multiplier() && data.has_pressure_boundary())
    throw std::invalid_argument(
        "assemble_global: constraint conflict, the zero-mean multiplier and a pressure boundary are both active");
  if (!layout.has_multiplier() && !data.has_pressure_boundary())
    throw std::invalid_argument(
        "assemble_global: pressure is undetermined, enable the zero-mean multiplier or a pressure boundary");
  if (w && w->coefficients().size() != layout.size())
    throw std::invalid_argument("assemble_global: convection field has a different layout");

  LinearSystem sys;
  sys.full_size = layout.size();
  sys.constraints = essential_constraints(ctx);
  sys.full_to_free.assign(sys.full_size, 0);
  Eigen::VectorXd fixed = Eigen::VectorXd::Zero(sys.full_size);
  for (std::size_t i = 0; i < sys.constraints.dofs.size(); ++i) {
    sys.full_to_free[sys.constraints.dofs[i]] = -1;
    fixed[sys.constraints.dofs[i]] = sys.constraints.values[i];
  }
  for (int i = 0; i < sys.full_size; ++i)
    if (sys.full_to_free[i] == 0) {
      sys.full_to_free[i] = static_cast<int>(sys.free_to_full.size());
      sys.free_to_full.push_back(i);
    }
  const int nfree = static_cast<int>(sys.free_to_full.size());
  sys.rhs = Eigen::VectorXd::Zero(nfree);

  const int nc = static_cast<int>(mesh.num_cells());
  const int nf = static_cast<int>(mesh.num_facets());
  std::vector<KernelList> kernels(nc + nf);
  parallel_for(nc + nf, workers, [&](std::size_t item) {
    KernelList& list = kernels[item];
    if (static_cast<int>(item) < nc) {
      const int c = static_cast<int>(item);
      if (mesh.cell(c).subdomain == Subdomain::Stokes) {
        list.add(local_ahs(ctx, c));
        if (w)
          list.add(local_th(ctx, c, *w));
      } else {
        list.add(local_ad(ctx, c));
      }
      list.add(local_bh(ctx, c), true);
      if (layout.has_multiplier())
        list.add(local_mean(ctx, c), true);
      list.loads.push_back(local_rhs(ctx, c));
    } else {
      const int f = static_cast<int>(item) - nc;
      const FacetClass cls = mesh.facet(f).cls;
      if (cls == FacetClass::Interface) {
        list.add(local_aI(ctx, f));
        list.add(local_bhI(ctx, f, Subdomain::Stokes), true);
        list.add(local_bhI(ctx, f, Subdomain::Darcy), true);
      } else if (cls == FacetClass::ExteriorS) {
        list.add(local_bhI(ctx, f, Subdomain::Stokes), true);
      }
      LocalKernel bc = bc_contributions(ctx, f);
      if (!bc.rows.empty())
        list.loads.push_back(std::move(bc));
    }
  });

  std::vector<Eigen::Triplet<double>> triplets;
  Scatter scatter{sys.full_to_free, fixed, triplets, sys.rhs};
  for (const KernelList& list : kernels) {
    for (std::size_t i = 0; i < list.matrices.size(); ++i) {
      scatter.matrix(list.matrices[i]);
      if (list.transposed[i])
        scatter.matrix(list.matrices[i], true);
    }
    for (const LocalKernel& load : list.loads)
      scatter.vector(load);
  }
  sys.matrix.resize(nfree, nfree);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  sys.matrix.makeCompressed();
  return sys;
}

namespace {

} // namespace

struct SparseFactorization::Handles {
  klu_common common;
  klu_symbolic* symbolic = nullptr;
  klu_numeric* numeric = nullptr;

  Handles() { klu_defaults(&common); }
  ~Handles()
  {
    if (numeric)
      klu_free_numeric(&numeric, &common);
    if (symbolic)
      klu_free_symbolic(&symbolic, &common);
  }
};

SparseFactorization::SparseFactorization(const Eigen::SparseMatrix<double>& a, const std::vector<int>* ordering,
                                         const char* what)
    : n_(static_cast<int>(a.rows())), what_(what), klu_(std::make_unique<Handles>())
{
  if (n_ == 0)
    return;
  Eigen::SparseMatrix<double> m = a;
  m.makeCompressed();
  int* perm = ordering ? const_cast<int*>(ordering->data()) : nullptr;
  klu_->symbolic = ordering ? klu_analyze_given(n_, m.outerIndexPtr(), m.innerIndexPtr(), perm, perm, &klu_->common)
                            : klu_analyze(n_, m.outerIndexPtr(), m.innerIndexPtr(), &klu_->common);
  if (klu_->symbolic)
    klu_->numeric = klu_factor(m.outerIndexPtr(), m.innerIndexPtr(), m.valuePtr(), klu_->symbolic, &klu_->common);
  if (!klu_->numeric || klu_->common.status != KLU_OK)
    throw std::runtime_error(what_ + ": sparse LU factorization failed (KLU status " +
                             std::to_string(klu_->common.status) +
                             "); check the pressure constraint mode and the penalty beta");
}

SparseFactorization::~SparseFactorization() = default;

Eigen::VectorXd SparseFactorization::solve(const Eigen::VectorXd& b) const
{
  Eigen::VectorXd x = b;
  if (n_ == 0)
    return x;
  if (!klu_solve(klu_->symbolic, klu_->numeric, n_, 1, x.data(), &klu_->common) || !x.allFinite())
    throw std::runtime_error(what_ + ": sparse LU solve failed");
  return x;
}

namespace {

// Nested dissection of the facet graph (facets sharing a cell are coupled)
// by recursive coordinate bisection of the cells. Separator facets are
// numbered after both halves.
void dissect(const Mesh& mesh, std::vector<int> cells, std::vector<char>& placed, std::vector<int>& order)
{
  constexpr std::size_t leaf = 8;
  if (cells.size() <= leaf) {
    for (int c : cells)
      for (int f : mesh.cell(c).facets)
        if (!placed[f]) {
          placed[f] = 1;
          order.push_back(f);
        }
    return;
  }
  Vec2 lo = mesh.centroid(cells[0]), hi = lo;
  for (int c : cells) {
    lo = lo.cwiseMin(mesh.centroid(c));
    hi = hi.cwiseMax(mesh.centroid(c));
  }
  const int axis = hi.x() - lo.x() >= hi.y() - lo.y() ? 0 : 1;
  std::sort(cells.begin(), cells.end(), [&](int a, int b) {
    const double pa = mesh.centroid(a)[axis], pb = mesh.centroid(b)[axis];
    return pa < pb || (pa == pb && a < b);
  });
  const auto mid = cells.begin() + static_cast<std::ptrdiff_t>(cells.size() / 2);
  std::vector<int> left(cells.begin(), mid), right(mid, cells.end());
  std::vector<char> in_right(mesh.num_cells(), 0);
  for (int c : right)
    in_right[c] = 1;
  std::vector<int> separator;
  for (int c : left)
    for (int f : mesh.cell(c).facets) {
      const Facet& facet = mesh.facet(f);
      if (!placed[f] && !facet.is_boundary() && (in_right[facet.cells[0]] || in_right[facet.cells[1]])) {
        placed[f] = 1;
        separator.push_back(f);
      }
    }
  dissect(mesh, std::move(left), placed, order);
  dissect(mesh, std::move(right), placed, order);
  order.insert(order.end(), separator.begin(), separator.end());
}

/// Fill-reducing ordering of the condensed unknowns: facet blocks in nested
/// dissection order, the multiplier last.
std::vector<int> skeleton_ordering(const LinearSystem& system, const CondensedSystem& reduced,
                                   const SpaceLayout& layout)
{
  const Mesh& mesh = layout.mesh();
  std::vector<int> position(system.full_size, -1);
  for (int s = 0; s < reduced.size(); ++s)
    position[system.free_to_full[reduced.skeleton()[s]]] = s;
  std::vector<int> cells(mesh.num_cells());
  for (std::size_t c = 0; c < cells.size(); ++c)
    cells[c] = static_cast<int>(c);
  std::vector<char> placed(mesh.num_facets(), 0);
  std::vector<int> facets;
  dissect(mesh, std::move(cells), placed, facets);

  std::vector<int> order;
  order.reserve(reduced.size());
  auto take = [&](DofRange r) {
    for (int i = 0; i < r.size; ++i)
      if (position[r[i]] >= 0)
        order.push_back(position[r[i]]);
  };
  for (int f : facets) {
    const FacetClass cls = mesh.facet(f).cls;
    if (has_facet_velocity(cls))
      take(layout.facet_velocity(f));
    if (has_facet_pressure(cls, Subdomain::Stokes))
      take(layout.facet_pressure(f, Subdomain::Stokes));
    if (has_facet_pressure(cls, Subdomain::Darcy))
      take(layout.facet_pressure(f, Subdomain::Darcy));
  }
  if (layout.has_multiplier())
    take(layout.multiplier());
  if (static_cast<int>(order.size()) != reduced.size())
    throw std::logic_error("skeleton_ordering: ordering does not cover the condensed unknowns");
  return order;
}

/// b - A x with long double accumulation.
Eigen::VectorXd extended_residual(const LinearSystem& system, const Eigen::VectorXd& x)
{
  const Eigen::SparseMatrix<double>& a = system.matrix;
  std::vector<long double> acc(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    acc[i] = system.rhs[i];
  for (Eigen::Index j = 0; j < a.outerSize(); ++j) {
    const long double xj = x[j];
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, j); it; ++it)
      acc[it.row()] -= static_cast<long double>(it.value()) * xj;
  }
  Eigen::VectorXd r(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    r[i] = static_cast<double>(acc[i]);
  return r;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& index)
{
  Eigen::VectorXd out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = v[index[i]];
  return out;
}

} // namespace

Eigen::VectorXd solve_full(const LinearSystem& system)
{
  return SparseFactorization(system.matrix, nullptr, "solve_full").solve(system.rhs);
}

CondensedSystem::CondensedSystem(const LinearSystem& system, const SpaceLayout& layout, unsigned workers)
{
  const Mesh& mesh = layout.mesh();
  const int nc = static_cast<int>(mesh.num_cells());
  free_size_ = static_cast<int>(system.free_to_full.size());

  std::vector<int> owner(free_size_, -1);
  cells_.resize(nc);
  for (int c = 0; c < nc; ++c) {
    auto& interior = cells_[c].interior;
    for (DofRange r : {layout.cell_velocity(c), layout.cell_pressure(c)})
      for (int i = 0; i < r.size; ++i) {
        const int fi = system.full_to_free[r[i]];
        if (fi < 0)
          throw std::logic_error("static_condense: constrained cell unknown");
        interior.push_back(fi);
        owner[fi] = c;
      }
  }
  std::vector<int> position(free_size_, -1);
  for (int i = 0; i < free_size_; ++i)
    if (owner[i] < 0) {
      position[i] = static_cast<int>(skeleton_.size());
      skeleton_.push_back(i);
    }

  const Eigen::SparseMatrix<double, Eigen::RowMajor> rows(system.matrix);
  const Eigen::SparseMatrix<double>& cols = system.matrix;

  std::vector<Eigen::MatrixXd> schur(nc);
  parallel_for(nc, workers, [&](std::size_t ci) {
    CellBlock& cb = cells_[ci];
    const int ni = static_cast<int>(cb.interior.size());
    std::vector<int> local(ni);
    std::vector<int>& coupled = cb.coupled;
    for (int fi : cb.interior) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, fi); it; ++it)
        if (owner[it.col()] < 0)
          coupled.push_back(position[it.col()]);
      for (Eigen::SparseMatrix<double>::InnerIterator it(cols, fi); it; ++it)
        if (owner[it.row()] < 0)
          coupled.push_back(position[it.row()]);
    }
    std::sort(coupled.begin(), coupled.end());
    coupled.erase(std::unique(coupled.begin(), coupled.end()), coupled.end());
    const int nb = static_cast<int>(coupled.size());
    auto interior_slot = [&](int fi) {
      return static_cast<int>(std::find(cb.interior.begin(), cb.interior.end(), fi) - cb.interior.begin());
    };
    auto coupled_slot = [&](int fi) {
      return static_cast<int>(std::lower_bound(coupled.begin(), coupled.end(), position[fi]) - coupled.begin());
    };

    Eigen::MatrixXd a_ii = Eigen::MatrixXd::Zero(ni, ni);
    cb.a_ib = Eigen::MatrixXd::Zero(ni, nb);
    cb.a_bi = Eigen::MatrixXd::Zero(nb, ni);
    for (int r = 0; r < ni; ++r) {
      const int fi = cb.interior[r];
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, fi); it; ++it) {
        if (owner[it.col()] == static_cast<int>(ci))
          a_ii(r, interior_slot(static_cast<int>(it.col()))) = it.value();
        else if (owner[it.col()] < 0)
          cb.a_ib(r, coupled_slot(static_cast<int>(it.col()))) = it.value();
      }
      for (Eigen::SparseMatrix<double>::InnerIterator it(cols, fi); it; ++it)
        if (owner[it.row()] < 0)
          cb.a_bi(coupled_slot(static_cast<int>(it.row())), r) = it.value();
    }
    cb.lu.compute(a_ii);
    if (!(cb.lu.rcond() > 1e-14))
      throw std::runtime_error("static_condense: singular cell block in cell " + std::to_string(ci));
    schur[ci] = cb.a_bi * cb.lu.solve(cb.a_ib);
  });

  const int ns = size();
  std::vector<Eigen::Triplet<double>> triplets;
  for (int s = 0; s < ns; ++s) {
    const int fi = skeleton_[s];
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, fi); it; ++it)
      if (owner[it.col()] < 0)
        triplets.emplace_back(s, position[it.col()], it.value());
  }
  for (int c = 0; c < nc; ++c) {
    const auto& coupled = cells_[c].coupled;
    for (std::size_t i = 0; i < coupled.size(); ++i) {
      for (std::size_t j = 0; j < coupled.size(); ++j) {
        const double v = schur[c](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (v != 0.0)
          triplets.emplace_back(coupled[i], coupled[j], -v);
      }
    }
  }
  reduced_.resize(ns, ns);
  reduced_.setFromTriplets(triplets.begin(), triplets.end());
  reduced_.makeCompressed();
  rhs_ = reduce_rhs(system.rhs);
  free_rhs_ = system.rhs;
}

Eigen::VectorXd CondensedSystem::reduce_rhs(const Eigen::VectorXd& free_rhs) const
{
  Eigen::VectorXd out(size());
  for (int s = 0; s < size(); ++s)
    out[s] = free_rhs[skeleton_[s]];
  for (const CellBlock& cb : cells_) {
    const Eigen::VectorXd t = cb.a_bi * cb.lu.solve(gather(free_rhs, cb.interior));
    for (std::size_t i = 0; i < cb.coupled.size(); ++i)
      out[cb.coupled[i]] -= t[static_cast<Eigen::Index>(i)];
  }
  return out;
}

Eigen::VectorXd CondensedSystem::recover_interior(const Eigen::VectorXd& skeleton_solution) const
{
  return recover_interior(skeleton_solution, free_rhs_);
}

Eigen::VectorXd CondensedSystem::recover_interior(const Eigen::VectorXd& skeleton_solution,
                                                  const Eigen::VectorXd& free_rhs) const
{
  Eigen::VectorXd x = Eigen::VectorXd::Zero(free_size_);
  for (int s = 0; s < size(); ++s)
    x[skeleton_[s]] = skeleton_solution[s];
  for (const CellBlock& cb : cells_) {
    Eigen::VectorXd xb(cb.coupled.size());
    for (std::size_t i = 0; i < cb.coupled.size(); ++i)
      xb[static_cast<Eigen::Index>(i)] = skeleton_solution[cb.coupled[i]];
    const Eigen::VectorXd xi = cb.lu.solve(gather(free_rhs, cb.interior) - cb.a_ib * xb);
    for (std::size_t i = 0; i < cb.interior.size(); ++i)
      x[cb.interior[i]] = xi[static_cast<Eigen::Index>(i)];
  }
  return x;
}

CondensedSystem static_condense(const LinearSystem& system, const SpaceLayout& layout, unsigned workers)
{
  return CondensedSystem(system, layout, workers);
}

DiscreteField solve_linear(const LinearSystem& system, std::shared_ptr<const SpaceLayout> layout, bool condense,
                           double* residual, unsigned workers)
{
  std::unique_ptr<CondensedSystem> reduced;
  std::unique_ptr<SparseFactorization> lu;
  if (condense) {
    reduced = std::make_unique<CondensedSystem>(system, *layout, workers);
    const std::vector<int> order = skeleton_ordering(system, *reduced, *layout);
    lu = std::make_unique<SparseFactorization>(reduced->matrix(), &order, "solve_linear");
  } else {
    lu = std::make_unique<SparseFactorization>(system.matrix, nullptr, "solve_linear");
  }
  auto apply_inverse = [&](const Eigen::VectorXd& b) -> Eigen::VectorXd {
    if (reduced)
      return reduced->recover_interior(lu->solve(reduced->reduce_rhs(b)), b);
    return lu->solve(b);
  };

  // Iterative refinement with residuals accumulated in extended precision.
  // With mu small the load is dominated by a pressure gradient of size 1/mu;
  // a double-precision residual would leave velocity errors of order
  // eps ||f|| / mu.
  Eigen::VectorXd x = apply_inverse(system.rhs);
  Eigen::VectorXd r = extended_residual(system, x);
  double rnorm = r.norm();
  for (int step = 0; step < kRefinementSteps && rnorm > 0.0; ++step) {
    const Eigen::VectorXd candidate = x + apply_inverse(r);
    Eigen::VectorXd rc = extended_residual(system, candidate);
    if (!(rc.norm() < rnorm))
      break;
    x = candidate;
    r = std::move(rc);
    rnorm = r.norm();
  }
  if (residual) {
    const double nb = system.rhs.norm();
    *residual = nb > 0.0 ? rnorm / nb : rnorm;
  }
  return DiscreteField(std::move(layout), system.expand(x));
}

namespace {

/// Coefficients that drive the fixed-point map (cell and facet velocities);
/// the Anderson least-squares problem is posed on these.
std::vector<int> velocity_unknowns(const SpaceLayout& layout)
{
  std::vector<int> out;
  for (FieldBlock b : {FieldBlock::Velocity, FieldBlock::FacetVelocity}) {
    const DofRange r = layout.block(b);
    for (int i = 0; i < r.size; ++i)
      out.push_back(r[i]);
  }
  return out;
}

} // namespace

PicardResult picard_solve(const FormContext& ctx, const SolverParams& params)
{
  params.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto& layout = ctx.layout_ptr();
  auto linear_solve = [&](const DiscreteField* w, double* residual) {
    const LinearSystem sys = assemble_global(ctx, w, params.workers);
    return solve_linear(sys, layout, params.condense, residual, params.workers);
  };
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  SolveReport report;
  if (!ctx.data().convection) {
    DiscreteField u = linear_solve(nullptr, &report.residual);
    report.iterations = 1;
    report.converged = true;
    report.wall_seconds = elapsed();
    return {std::move(u), report};
  }

  // x is the convecting field, g = Psi(x) the Oseen solution for it. The
  // returned iterate is always a g, so it solves a linear problem exactly.
  const std::vector<int> mix = velocity_unknowns(*layout);
  DiscreteField x = params.initial_guess == InitialGuess::StokesDarcy ? linear_solve(nullptr, nullptr)
                                                                      : DiscreteField(layout);
  DiscreteField g(layout);
  const double theta = params.relaxation;
  std::vector<Eigen::VectorXd> f_hist, x_hist;
  for (int m = 1; m <= params.picard_max_iter; ++m) {
    try {
      g = linear_solve(&x, &report.residual);
    } catch (const std::exception& e) {
      throw std::runtime_error("picard_solve: iteration " + std::to_string(m) + ": " + e.what());
    }
    const Eigen::VectorXd f = g.coefficients() - x.coefficients();
    const double inc = discrete_triple_norms(DiscreteField(layout, f)).v;
    const double size = discrete_triple_norms(g).v;
    const double rel = size > 0.0 ? inc / size : (inc > 0.0 ? INFINITY : 0.0);
    report.iterations = m;
    report.increments.push_back(inc);
    report.relative_increments.push_back(rel);
    if (rel <= params.picard_tol) {
      report.converged = true;
      break;
    }
    if (!std::isfinite(rel))
      break;

    // x + theta f, corrected along the previous steps (Anderson mixing).
    Eigen::VectorXd next = x.coefficients() + theta * f;
    if (params.anderson_depth > 0) {
      f_hist.push_back(f);
      x_hist.push_back(x.coefficients());
      if (static_cast<int>(f_hist.size()) > params.anderson_depth + 1) {
        f_hist.erase(f_hist.begin());
        x_hist.erase(x_hist.begin());
      }
      const int cols = static_cast<int>(f_hist.size()) - 1;
      if (cols > 0) {
        Eigen::MatrixXd df(static_cast<Eigen::Index>(mix.size()), cols);
        Eigen::VectorXd fk(static_cast<Eigen::Index>(mix.size()));
        for (std::size_t i = 0; i < mix.size(); ++i) {
          fk[static_cast<Eigen::Index>(i)] = f_hist.back()[mix[i]];
          for (int j = 0; j < cols; ++j)
            df(static_cast<Eigen::Index>(i), j) = f_hist[j + 1][mix[i]] - f_hist[j][mix[i]];
        }
        const Eigen::VectorXd gamma = df.colPivHouseholderQr().solve(fk);
        for (int j = 0; j < cols; ++j)
          next -= gamma[j] * ((x_hist[j + 1] - x_hist[j]) + theta * (f_hist[j + 1] - f_hist[j]));
      }
    }
    x = DiscreteField(layout, std::move(next));
  }
  report.wall_seconds = elapsed();
  return {std::move(g), report};
}

} // namespace hdgflow
