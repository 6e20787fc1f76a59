#pragma once

// Global assembly, sparse direct solves with optional static condensation,
// and the Picard iteration for the convective problem.

#include <Eigen/Sparse>

#include <memory>
#include <string>
#include <vector>

#include "hdgflow/forms.hpp"

namespace hdgflow {

enum class InitialGuess { Zero, StokesDarcy };

struct SolverParams {
  double picard_tol = 1e-10;
  int picard_max_iter = 50;
  bool condense = true;
  InitialGuess initial_guess = InitialGuess::StokesDarcy;
  double relaxation = 1.0; // next convecting field x + relaxation (Psi(x) - x)
  int anderson_depth = 0;  // 0: no mixing; m > 0: Anderson mixing over the last m increments
  unsigned workers = 1; // assembly threads; results do not depend on it

  void validate() const;
  bool operator==(const SolverParams&) const = default;
};

struct SolveReport {
  int iterations = 0; // linear solves with the convection term (1 without it)
  bool converged = false;
  std::vector<double> increments;          // |||u^m - u^{m-1}|||_v
  std::vector<double> relative_increments; // divided by |||u^m|||_v
  double residual = 0.0;                   // ||Ax - b|| / ||b|| of the last solve
  double wall_seconds = 0.0;
};

/// Linear system over the free unknowns. Essential data has been moved to
/// the right-hand side.
struct LinearSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  std::vector<int> free_to_full;
  std::vector<int> full_to_free; // -1 on constrained unknowns
  DofConstraints constraints;
  int full_size = 0;

  /// Full coefficient vector from free values plus the constrained data.
  Eigen::VectorXd expand(const Eigen::VectorXd& free) const;
};

/// True when the data needs the zero-mean multiplier (no pressure boundary).
bool needs_mean_multiplier(const ProblemData& data);

/// Assembles a_h + b_h + b_h^T (+ t_h at w when given). Contributions are
/// scattered in ascending cell order, then ascending facet order, whatever
/// the worker count. Throws std::invalid_argument if the layout's multiplier
/// does not match the pressure boundary setup or w has a different layout.
LinearSystem assemble_global(const FormContext& ctx, const DiscreteField* w, unsigned workers = 1);

/// "KLU <major>.<minor>.<patch>"
std::string sparse_solver_version();

/// Sparse LU factorization (KLU). The ordering, when given, is a symmetric
/// fill-reducing permutation; otherwise KLU's AMD ordering is used.
class SparseFactorization {
public:
  SparseFactorization(const Eigen::SparseMatrix<double>& a, const std::vector<int>* ordering, const char* what);
  ~SparseFactorization();
  SparseFactorization(const SparseFactorization&) = delete;
  SparseFactorization& operator=(const SparseFactorization&) = delete;

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

private:
  struct Handles;
  int n_ = 0;
  std::string what_;
  std::unique_ptr<Handles> klu_;
};

/// Sparse LU on the full system. Throws std::runtime_error on a singular
/// factorization.
Eigen::VectorXd solve_full(const LinearSystem& system);

/// System reduced to the facet unknowns (and the multiplier) by eliminating
/// each cell's velocity and pressure block.
class CondensedSystem {
public:
  CondensedSystem(const LinearSystem& system, const SpaceLayout& layout, unsigned workers = 1);

  const Eigen::SparseMatrix<double>& matrix() const { return reduced_; }
  const Eigen::VectorXd& rhs() const { return rhs_; }
  int size() const { return static_cast<int>(skeleton_.size()); }
  /// Free index of each condensed unknown.
  const std::vector<int>& skeleton() const { return skeleton_; }

  /// Reduced right-hand side for an arbitrary free-unknown right-hand side.
  Eigen::VectorXd reduce_rhs(const Eigen::VectorXd& free_rhs) const;

  /// Free-unknown vector from a solution of the reduced system.
  Eigen::VectorXd recover_interior(const Eigen::VectorXd& skeleton_solution) const;
  Eigen::VectorXd recover_interior(const Eigen::VectorXd& skeleton_solution, const Eigen::VectorXd& free_rhs) const;

private:
  struct CellBlock {
    std::vector<int> interior; // free indices
    std::vector<int> coupled;  // skeleton positions
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    Eigen::MatrixXd a_ib;
    Eigen::MatrixXd a_bi;
  };
  int free_size_ = 0;
  std::vector<int> skeleton_; // free index of each skeleton position
  std::vector<CellBlock> cells_;
  Eigen::SparseMatrix<double> reduced_;
  Eigen::VectorXd rhs_;
  Eigen::VectorXd free_rhs_;
};

CondensedSystem static_condense(const LinearSystem& system, const SpaceLayout& layout, unsigned workers = 1);

/// Solves the system (condensed or not) with up to kRefinementSteps steps of
/// iterative refinement and returns the full field.
inline constexpr int kRefinementSteps = 3;
DiscreteField solve_linear(const LinearSystem& system, std::shared_ptr<const SpaceLayout> layout,
                           bool condense, double* residual = nullptr, unsigned workers = 1);

struct PicardResult {
  DiscreteField solution;
  SolveReport report;
};

/// Fixed-point iteration u^m = Psi(u^{m-1}): each step solves the problem
/// with the convection velocity frozen at the previous iterate. Without
/// convection this is a single linear solve. Failures inside the loop are
/// rethrown with the iteration index.
PicardResult picard_solve(const FormContext& ctx, const SolverParams& params);

} // namespace hdgflow
