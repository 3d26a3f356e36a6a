#pragma once

#include <string>
#include <vector>

#include "semilab/grid.hpp"
#include "semilab/potential.hpp"

namespace semilab {

/// Eigenpair of P(h) = -h^2 Delta + V on the periodic grid. The field is
/// normalized in L^2(torus); residual is ||(P - E)u|| / ||u||.
struct EigenPair {
  double h = 0.0;
  double energy = 0.0;
  ScalarField field{TorusGrid(1, 16)};
  double residual = 0.0;
};

enum class SolverMode { Dense, Iterative };

inline constexpr std::size_t kDenseLimit = 4096;
inline constexpr double kResidualTolerance = 1e-8;

struct SolveRequest {
  TorusGrid grid{2, 64};
  PotentialSpec potential;
  double h = 0.1;
  double energy_target = 1.0;
  int count = 1;
  SolverMode mode = SolverMode::Iterative;
};

struct SolveResult {
  std::vector<EigenPair> pairs;
  /// Two returned energies closer than 1e-10; the basis of that eigenspace
  /// is arbitrary.
  bool degenerate = false;
  std::vector<std::string> warnings;
  int iterations = 0;
};

/// Thrown when the iterative solver hits its cap; carries the residual it
/// reached.
class SolveFailure : public Error {
public:
  SolveFailure(const std::string &what, double attained)
      : Error(what), attained_residual(attained) {}
  double attained_residual;
};

/// Smallest admissible grid for the iterative solver: the power of two
/// >= max(64, 16/h).
int minimum_grid_size(double h);

/// (-h^2 Delta + V) u with -Delta applied as the multiplier (2 pi |k|)^2.
ScalarField apply_hamiltonian(const ScalarField &u, double h, const ScalarField &V);

SolveResult solve_eigenpairs(const SolveRequest &req);
/// Same, with the potential already sampled on the grid.
SolveResult solve_eigenpairs(const ScalarField &V, double h, double energy_target, int count,
                             SolverMode mode);

/// The dense operator matrix (column-major, size N x N), assembled column by
/// column from apply_hamiltonian. Only for N <= kDenseLimit.
std::vector<double> assemble_dense(const ScalarField &V, double h);

struct WeylCount {
  long observed = 0;
  double predicted = 0.0;
};

/// observed = #{eigenvalues <= E} of the discrete operator (dense inertia);
/// predicted = (2 pi h)^-dim Vol{(x, xi) : |xi|^2 + V(x) <= E}.
WeylCount weyl_count_check(const ScalarField &V, double h, double E);

/// Number of eigenvalues of the symmetric matrix A (column-major) strictly
/// below sigma, by LDL^T inertia.
long count_below(std::vector<double> A, int n, double sigma);

} // namespace semilab
