#include "semilab/eigensolver.hpp"

#include <lapacke.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "semilab/spectral.hpp"

namespace semilab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Window {
  std::vector<double> values;  // ascending
  std::vector<double> vectors; // column-major n x values.size()
};

// Eigenpairs of the dense symmetric matrix whose indices straddle sigma:
// up to `below` eigenvalues under sigma and `above` at or over it.
Window dense_window(const std::vector<double> &A, int n, double sigma, int below, int above) {
  const long nu = count_below(A, n, sigma);
  const long il = std::max<long>(1, nu - below + 1);
  const long iu = std::min<long>(n, nu + above);
  Window w;
  if (iu < il) return w;
  std::vector<double> a = A;
  const int want = static_cast<int>(iu - il + 1);
  w.values.resize(n);
  w.vectors.resize(static_cast<std::size_t>(n) * want);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(want));
  lapack_int found = 0;
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'U', n, a.data(), n, 0.0, 0.0, il, iu, 0.0, &found,
                     w.values.data(), w.vectors.data(), n, isuppz.data());
  if (info != 0) throw Error("dense eigensolver: dsyevr failed with info " + std::to_string(info));
  w.values.resize(found);
  w.vectors.resize(static_cast<std::size_t>(n) * found);
  return w;
}

// Order by distance to the target, ties toward the smaller value.
std::vector<int> nearest_order(const std::vector<double> &vals, double target) {
  std::vector<int> idx(vals.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double da = std::abs(vals[a] - target), db = std::abs(vals[b] - target);
    if (da != db) return da < db;
    return vals[a] < vals[b];
  });
  return idx;
}

double dot(const double *a, const double *b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// The first entry within a relative 1e-6 of the largest magnitude is made
// positive; the slack keeps odd eigenfunctions (two extrema of equal size)
// from flipping on roundoff.
void fix_sign(std::vector<double> &v) {
  double best = 0.0;
  for (double x : v) best = std::max(best, std::abs(x));
  for (double x : v)
    if (std::abs(x) >= (1.0 - 1e-6) * best) {
      if (x < 0.0)
        for (auto &y : v) y = -y;
      return;
    }
}

double kinetic(double h, int kx, int ky) { return h * h * kTwoPi * kTwoPi * (double(kx) * kx + double(ky) * ky); }

// Real Fourier basis on the modes |k| <= K: the constant, then cos/sin pairs
// for the half set (kx > 0, or kx == 0 and ky > 0).
struct FourierBasis {
  struct Mode {
    int kx, ky;
  };
  int dim;
  std::vector<Mode> half;
  int size() const { return 1 + 2 * static_cast<int>(half.size()); }
};

FourierBasis make_basis(int dim, int K) {
  FourierBasis b{dim, {}};
  if (dim == 1) {
    for (int k = 1; k <= K; ++k) b.half.push_back({k, 0});
    return b;
  }
  for (int ky = -K; ky <= K; ++ky)
    for (int kx = 0; kx <= K; ++kx) {
      if (kx * kx + ky * ky > K * K) continue;
      if (kx == 0 && ky <= 0) continue;
      b.half.push_back({kx, ky});
    }
  return b;
}

int basis_size(int dim, int K) { return make_basis(dim, K).size(); }

cplx vhat(const Spectrum &s, int kx, int ky) {
  const int n = s.grid.n();
  auto red = [n](int k) {
    k %= n;
    if (k >= n / 2) k -= n;
    if (k < -n / 2) k += n;
    return k;
  };
  return s.coefficient(red(kx), red(ky));
}

// Galerkin matrix of the grid operator restricted to the real Fourier basis.
std::vector<double> galerkin_matrix(const FourierBasis &b, const Spectrum &vs, double h) {
  const int D = b.size();
  std::vector<double> G(static_cast<std::size_t>(D) * D, 0.0);
  auto at = [&](int i, int j) -> double & { return G[static_cast<std::size_t>(j) * D + i]; };
  const double s2 = std::sqrt(2.0);
  const int H = static_cast<int>(b.half.size());
  at(0, 0) = vhat(vs, 0, 0).real();
  for (int a = 0; a < H; ++a) {
    const auto ka = b.half[a];
    const cplx v = vhat(vs, ka.kx, ka.ky);
    const int ca = 1 + 2 * a, sa = 2 + 2 * a;
    at(0, ca) = at(ca, 0) = s2 * v.real();
    at(0, sa) = at(sa, 0) = -s2 * v.imag();
    for (int c = a; c < H; ++c) {
      const auto kb = b.half[c];
      const cplx dm = vhat(vs, ka.kx - kb.kx, ka.ky - kb.ky);
      const cplx sm = vhat(vs, ka.kx + kb.kx, ka.ky + kb.ky);
      const int cb = 1 + 2 * c, sb = 2 + 2 * c;
      at(ca, cb) = at(cb, ca) = dm.real() + sm.real();
      at(sa, sb) = at(sb, sa) = dm.real() - sm.real();
      at(ca, sb) = at(sb, ca) = dm.imag() - sm.imag();
      if (c != a) {
        // <s_a|V|c_b> = <c_b|V|s_a> = Im V(kb - ka) - Im V(kb + ka)
        at(sa, cb) = at(cb, sa) = -dm.imag() - sm.imag();
      }
    }
    const double t = kinetic(h, ka.kx, ka.ky);
    at(ca, ca) += t;
    at(sa, sa) += t;
  }
  return G;
}

// Grid samples of sum_j y_j basis_j, unit Euclidean norm basis.
std::vector<double> synthesize(const FourierBasis &b, const double *y, const TorusGrid &g) {
  Spectrum s(g);
  const double N = static_cast<double>(g.size());
  const int n = g.n();
  s.at(0, 0) = y[0] / std::sqrt(N);
  const double amp = std::sqrt(2.0 / N) * 0.5;
  for (std::size_t a = 0; a < b.half.size(); ++a) {
    const auto k = b.half[a];
    const cplx c = amp * cplx(y[1 + 2 * a], -y[2 + 2 * a]);
    const int jy = ((k.ky % n) + n) % n;
    s.at(k.kx, jy) += c;
    if (k.kx == 0 && g.dim() == 2) s.at(0, ((n - k.ky) % n + n) % n) += std::conj(c);
  }
  ScalarField f = inverse(s);
  return std::move(f.values);
}

// Generalized Davidson for the eigenvalues nearest sigma. Only
// apply_hamiltonian touches the operator; the preconditioner is a clamped
// Fourier-diagonal inverse of the kinetic part.
struct DavidsonOutcome {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  std::vector<double> residuals;
  int iterations = 0;
};

DavidsonOutcome davidson(const ScalarField &V, double h, double sigma, int wanted,
                         std::vector<std::vector<double>> start, double tol, int max_iter) {
  const TorusGrid g = V.grid;
  const std::size_t N = g.size();
  const int block = static_cast<int>(start.size());
  const int max_dim = std::max(4 * block, block + 8);
  double vbar = 0.0;
  for (double v : V.values) vbar += v;
  vbar /= static_cast<double>(N);

  Eigen::MatrixXd Vb(static_cast<Eigen::Index>(N), max_dim);
  Eigen::MatrixXd Wb(static_cast<Eigen::Index>(N), max_dim);
  int s = 0;

  ScalarField scratch(g);
  auto apply = [&](const double *x, double *out) {
    std::copy(x, x + N, scratch.values.begin());
    ScalarField y = apply_hamiltonian(scratch, h, V);
    std::copy(y.values.begin(), y.values.end(), out);
  };
  // Orthonormalize column `s` against the first s columns (two passes);
  // returns false when the new direction is numerically dependent.
  auto append = [&](const std::vector<double> &x) -> bool {
    if (s >= max_dim) return false;
    double *col = Vb.col(s).data();
    std::copy(x.begin(), x.end(), col);
    const double n0 = std::sqrt(dot(col, col, N));
    if (n0 == 0.0) return false;
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < s; ++j) {
        const double c = dot(Vb.col(j).data(), col, N);
        Vb.col(s) -= c * Vb.col(j);
      }
    const double n1 = std::sqrt(dot(col, col, N));
    if (n1 < 1e-10 * n0) return false;
    Vb.col(s) /= n1;
    apply(col, Wb.col(s).data());
    ++s;
    return true;
  };

  for (auto &x : start) append(x);
  if (s == 0) throw Error("davidson: empty start space");

  DavidsonOutcome out;
  double worst = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    Eigen::MatrixXd G = Vb.leftCols(s).transpose() * Wb.leftCols(s);
    G = 0.5 * (G + G.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    std::vector<double> theta(es.eigenvalues().data(), es.eigenvalues().data() + s);
    auto order = nearest_order(theta, sigma);
    const int take = std::min(block, s);
    Eigen::MatrixXd Y(s, take);
    for (int j = 0; j < take; ++j) Y.col(j) = es.eigenvectors().col(order[j]);
    Eigen::MatrixXd X = Vb.leftCols(s) * Y;
    Eigen::MatrixXd AX = Wb.leftCols(s) * Y;

    std::vector<double> res(take);
    worst = 0.0;
    for (int j = 0; j < take; ++j) {
      Eigen::VectorXd r = AX.col(j) - theta[order[j]] * X.col(j);
      res[j] = r.norm() / X.col(j).norm();
      if (j < wanted) worst = std::max(worst, res[j]);
    }
    if (worst <= tol || it + 1 == max_iter) {
      for (int j = 0; j < std::min(wanted, take); ++j) {
        out.values.push_back(theta[order[j]]);
        out.vectors.emplace_back(X.col(j).data(), X.col(j).data() + N);
        out.residuals.push_back(res[j]);
      }
      if (worst > tol) throw SolveFailure("davidson: no convergence after " +
                                              std::to_string(max_iter) + " iterations",
                                          worst);
      return out;
    }

    // Corrections for the unconverged block members.
    std::vector<std::vector<double>> corr;
    for (int j = 0; j < take; ++j) {
      if (res[j] <= tol) continue;
      ScalarField r(g);
      Eigen::Map<Eigen::VectorXd>(r.values.data(), static_cast<Eigen::Index>(N)) =
          AX.col(j) - theta[order[j]] * X.col(j);
      const double th = theta[order[j]];
      ScalarField t = apply_multiplier(r, [&](int kx, int ky) {
        const double d = kinetic(h, kx, ky) + vbar - th;
        return cplx(1.0 / std::max(d, 1.0), 0.0);
      });
      corr.push_back(std::move(t.values));
    }
    if (s + static_cast<int>(corr.size()) > max_dim) {
      // Restart from the current Ritz block.
      Eigen::MatrixXd Xc = X, AXc = AX;
      // Re-orthonormalize (Ritz vectors are orthonormal up to roundoff).
      s = 0;
      for (int j = 0; j < take; ++j) {
        std::vector<double> x(Xc.col(j).data(), Xc.col(j).data() + N);
        append(x);
      }
    }
    int added = 0;
    for (auto &c : corr)
      if (append(c)) ++added;
    if (added == 0) {
      // Stagnation: fall back to the raw residual directions.
      for (int j = 0; j < take; ++j) {
        std::vector<double> r(N);
        Eigen::Map<Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(N)) =
            AX.col(j) - theta[order[j]] * X.col(j);
        if (append(r)) ++added;
      }
      if (added == 0)
        throw SolveFailure("davidson: search space stagnated", worst);
    }
  }
  throw SolveFailure("davidson: no convergence", worst);
}

void check_field_grid(const ScalarField &a, const ScalarField &b) {
  if (a.grid != b.grid) throw Error("apply_hamiltonian: field and potential live on different grids");
}

} // namespace

int minimum_grid_size(double h) {
  if (!(h > 0.0)) throw Error("minimum_grid_size: h must be > 0");
  const double need = std::max(64.0, 16.0 / h);
  return next_pow2(static_cast<int>(std::ceil(need - 1e-9)), 64);
}

ScalarField apply_hamiltonian(const ScalarField &u, double h, const ScalarField &V) {
  check_field_grid(u, V);
  const double c = h * h * kTwoPi * kTwoPi;
  ScalarField out = apply_multiplier(u, [c](int kx, int ky) {
    return cplx(c * (double(kx) * kx + double(ky) * ky), 0.0);
  });
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += V.values[i] * u.values[i];
  out.label = u.label;
  return out;
}

std::vector<double> assemble_dense(const ScalarField &V, double h) {
  const std::size_t N = V.grid.size();
  if (N > kDenseLimit) throw Error("assemble_dense: dimension " + std::to_string(N) + " exceeds the dense limit");
  std::vector<double> A(N * N);
  ScalarField e(V.grid);
  for (std::size_t j = 0; j < N; ++j) {
    std::fill(e.values.begin(), e.values.end(), 0.0);
    e.values[j] = 1.0;
    ScalarField col = apply_hamiltonian(e, h, V);
    std::copy(col.values.begin(), col.values.end(), A.begin() + j * N);
  }
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t i = j + 1; i < N; ++i) {
      const double s = 0.5 * (A[j * N + i] + A[i * N + j]);
      A[j * N + i] = A[i * N + j] = s;
    }
  return A;
}

long count_below(std::vector<double> A, int n, double sigma) {
  for (int i = 0; i < n; ++i) A[static_cast<std::size_t>(i) * n + i] -= sigma;
  std::vector<lapack_int> ipiv(n);
  const lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, A.data(), n, ipiv.data());
  if (info < 0) throw Error("count_below: dsytrf failed");
  // A - sigma I = L D L^T; the inertia of D is that of A - sigma I.
  long neg = 0;
  auto d = [&](int i, int j) { return A[static_cast<std::size_t>(j) * n + i]; };
  for (int i = 0; i < n;) {
    if (ipiv[i] > 0) {
      if (d(i, i) < 0.0) ++neg;
      ++i;
    } else {
      const double a = d(i, i), b = d(i + 1, i), c = d(i + 1, i + 1);
      const double det = a * c - b * b;
      if (det < 0.0)
        ++neg;
      else if (a + c < 0.0)
        neg += 2;
      i += 2;
    }
  }
  return neg;
}

SolveResult solve_eigenpairs(const SolveRequest &req) {
  ScalarField V = potential_eval(req.potential, req.grid);
  return solve_eigenpairs(V, req.h, req.energy_target, req.count, req.mode);
}

SolveResult solve_eigenpairs(const ScalarField &V, double h, double energy_target, int count,
                             SolverMode mode) {
  if (!(h > 0.0)) throw Error("solve_eigenpairs: h must be > 0");
  if (count < 1) throw Error("solve_eigenpairs: count must be >= 1");
  const TorusGrid g = V.grid;
  const std::size_t N = g.size();
  if (static_cast<std::size_t>(count) > N) throw Error("solve_eigenpairs: count exceeds dimension");
  SolveResult result;
  std::vector<double> energies;
  std::vector<std::vector<double>> vecs;

  if (mode == SolverMode::Dense) {
    if (N > kDenseLimit)
      throw Error("solve_eigenpairs: dense mode needs dimension <= 4096, got " + std::to_string(N));
    auto A = assemble_dense(V, h);
    auto w = dense_window(A, static_cast<int>(N), energy_target, count, count);
    auto order = nearest_order(w.values, energy_target);
    for (int j = 0; j < count && j < static_cast<int>(order.size()); ++j) {
      energies.push_back(w.values[order[j]]);
      const double *c = w.vectors.data() + static_cast<std::size_t>(order[j]) * N;
      vecs.emplace_back(c, c + N);
    }
    result.iterations = 1;
  } else {
    if (g.n() < minimum_grid_size(h))
      throw Error("solve_eigenpairs: grid n=" + std::to_string(g.n()) +
                  " under-resolves h=" + std::to_string(h) + " (needs " +
                  std::to_string(minimum_grid_size(h)) + ")");
    double vmin = V.values[0];
    for (double v : V.values) vmin = std::min(vmin, v);
    // Start space: Galerkin on the low Fourier modes of the same grid
    // operator, sized past the classical momentum cutoff.
    const double k_class = std::sqrt(std::max(energy_target - vmin, 0.0) + 1.0) / (kTwoPi * h);
    int K = static_cast<int>(std::ceil(1.6 * k_class + 6.0));
    K = std::min(K, g.n() / 2 - 1);
    while (K > 1 && basis_size(g.dim(), K) > static_cast<int>(kDenseLimit)) --K;
    const FourierBasis basis = make_basis(g.dim(), K);
    const int block = count + std::max(4, count);
    Spectrum vs = forward(V);
    auto G = galerkin_matrix(basis, vs, h);
    auto w = dense_window(G, basis.size(), energy_target, block, block);
    auto order = nearest_order(w.values, energy_target);
    std::vector<std::vector<double>> start;
    for (int j = 0; j < block && j < static_cast<int>(order.size()); ++j)
      start.push_back(synthesize(basis, w.vectors.data() + static_cast<std::size_t>(order[j]) * basis.size(), g));
    auto d = davidson(V, h, energy_target, count, std::move(start), 1e-10, 200);
    energies = d.values;
    vecs = std::move(d.vectors);
    result.iterations = d.iterations;
  }

  // Normalize, fix signs and recompute residuals from scratch.
  const double scale = 1.0 / std::sqrt(g.cell_volume());
  std::vector<int> idx(energies.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t j = 0; j < energies.size(); ++j) {
    auto &v = vecs[j];
    const double nv = std::sqrt(dot(v.data(), v.data(), N));
    for (auto &x : v) x *= scale / nv;
    fix_sign(v);
    ScalarField u(g, std::move(v), "u");
    u.h = h;
    ScalarField Pu = apply_hamiltonian(u, h, V);
    double rn = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double r = Pu.values[i] - energies[j] * u.values[i];
      rn += r * r;
    }
    const double res = std::sqrt(rn * g.cell_volume()) / u.l2_norm();
    if (res > kResidualTolerance)
      throw SolveFailure("solve_eigenpairs: residual " + std::to_string(res) + " above tolerance", res);
    result.pairs.push_back({h, energies[j], std::move(u), res});
  }
  std::stable_sort(result.pairs.begin(), result.pairs.end(), [&](const EigenPair &a, const EigenPair &b) {
    const double da = std::abs(a.energy - energy_target), db = std::abs(b.energy - energy_target);
    if (da != db) return da < db;
    return a.energy < b.energy;
  });
  for (std::size_t a = 0; a < result.pairs.size(); ++a)
    for (std::size_t b = a + 1; b < result.pairs.size(); ++b)
      if (std::abs(result.pairs[a].energy - result.pairs[b].energy) < 1e-10) result.degenerate = true;
  if (result.degenerate)
    result.warnings.push_back("degenerate eigenvalues returned; eigenspace basis is arbitrary");
  return result;
}

WeylCount weyl_count_check(const ScalarField &V, double h, double E) {
  const std::size_t N = V.grid.size();
  if (N > kDenseLimit) throw Error("weyl_count_check: needs a dense-feasible grid (<= 4096 points)");
  WeylCount wc;
  auto A = assemble_dense(V, h);
  // #{lambda <= E}: count strictly below the next representable value.
  wc.observed = count_below(std::move(A), static_cast<int>(N), std::nextafter(E, INFINITY));
  const int dim = V.grid.dim();
  const double ball = dim == 1 ? 2.0 : std::numbers::pi;
  double vol = 0.0;
  for (double v : V.values) {
    const double s = E - v;
    if (s > 0.0) vol += ball * (dim == 1 ? std::sqrt(s) : s);
  }
  vol *= V.grid.cell_volume();
  wc.predicted = vol / std::pow(kTwoPi * h, dim);
  return wc;
}

} // namespace semilab
