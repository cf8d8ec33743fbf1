#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>
#include <string>

#include "ouphase/errors.hpp"

// Dense kernels for matrices of dimension <= 4: continuous algebraic Riccati
// equations (including the guaranteed-cost sign pattern), Lyapunov and forced
// Sylvester equations, and the matrix exponential. Stabilising Riccati
// solutions come from the stable invariant subspace of the associated
// Hamiltonian matrix, followed by a Newton (Kleinman) polish.

namespace ouphase::linsolve {

using Matrix = Eigen::MatrixXd;

namespace detail {

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline void check_square_small(const Matrix& a, const char* name) {
  if (a.rows() != a.cols() || a.rows() < 1 || a.rows() > 4) {
    throw std::invalid_argument(std::string(name) +
                                " must be square with dimension 1..4");
  }
}

inline bool is_hurwitz(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) return false;
  return (es.eigenvalues().real().array() < 0.0).all();
}

// Solves A X + X A^T + Rhs = 0 through the n^2 x n^2 Kronecker system.
// Throws only if the operator is singular (some eigenvalue pair of A sums
// to zero).
inline Matrix sylvester_solve(const Matrix& a, const Matrix& rhs) {
  const int n = static_cast<int>(a.rows());
  Matrix k = Matrix::Zero(n * n, n * n);
  for (int j = 0; j < n; ++j) k.block(j * n, j * n, n, n) += a;  // I (x) A
  for (int i = 0; i < n; ++i)                                    // A (x) I
    for (int j = 0; j < n; ++j)
      for (int r = 0; r < n; ++r) k(j * n + r, i * n + r) += a(j, i);
  Eigen::FullPivLU<Matrix> lu(k);
  if (!lu.isInvertible()) {
    throw SolverError("Lyapunov/Sylvester operator is singular");
  }
  Eigen::VectorXd vec = lu.solve(Eigen::VectorXd(
      Eigen::Map<const Eigen::VectorXd>(rhs.data(), rhs.size())));
  return -Eigen::Map<const Matrix>(vec.data(), n, n);
}

// Residuals are measured against the backward-error scale of the instance:
// max(|A|*|X|, |M|, 1) in max-abs norms.
inline double residual_scale(const Matrix& a, const Matrix& x,
                             const Matrix& m) {
  return std::max({max_abs(a) * max_abs(x), max_abs(m), 1.0});
}

inline double min_sym_eig(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  return es.eigenvalues().minCoeff();
}

}  // namespace detail

/// e^{A tau} by Pade-13 with scaling and squaring. Dimension <= 4; throws
/// Overflow for max-row-sum of |A tau| beyond 350.
inline Matrix matrix_exp(const Matrix& a, double tau) {
  detail::check_square_small(a, "A");
  const int n = static_cast<int>(a.rows());
  Matrix b = a * tau;
  const double nrm = b.cwiseAbs().rowwise().sum().maxCoeff();
  if (!std::isfinite(nrm) || nrm > 350.0) {
    throw Overflow("matrix_exp: ||A tau|| = " + std::to_string(nrm) +
                   " beyond supported range");
  }
  if (nrm == 0.0) return Matrix::Identity(n, n);
  static const double p13[14] = {64764752532480000.0,
                                 32382376266240000.0,
                                 7771770303897600.0,
                                 1187353796428800.0,
                                 129060195264000.0,
                                 10559470521600.0,
                                 670442572800.0,
                                 33522128640.0,
                                 1323241920.0,
                                 40840800.0,
                                 960960.0,
                                 16380.0,
                                 182.0,
                                 1.0};
  const double theta13 = 5.371920351148152;
  int squarings = 0;
  if (nrm > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
    b /= std::pow(2.0, squarings);
  }
  const Matrix eye = Matrix::Identity(n, n);
  const Matrix b2 = b * b;
  const Matrix b4 = b2 * b2;
  const Matrix b6 = b4 * b2;
  const Matrix u =
      b * (b6 * (p13[13] * b6 + p13[11] * b4 + p13[9] * b2) + p13[7] * b6 +
           p13[5] * b4 + p13[3] * b2 + p13[1] * eye);
  const Matrix v = b6 * (p13[12] * b6 + p13[10] * b4 + p13[8] * b2) +
                   p13[6] * b6 + p13[4] * b4 + p13[2] * b2 + p13[0] * eye;
  Matrix f = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) f = f * f;
  return f;
}

/// Solves A P + P A^T + M = 0 for symmetric P; A must be Hurwitz and M
/// symmetric positive semidefinite.
inline Matrix solve_lyapunov(const Matrix& a, const Matrix& m) {
  detail::check_square_small(a, "A");
  if (m.rows() != a.rows() || m.cols() != a.cols()) {
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  }
  if (!detail::is_hurwitz(a)) throw UnstableA("solve_lyapunov: A not Hurwitz");
  Matrix x = detail::sylvester_solve(a, m);
  x = 0.5 * (x + x.transpose()).eval();
  const Matrix res = a * x + x * a.transpose() + m;
  const double tol = 1e-12 * detail::residual_scale(a, x, m);
  if (detail::max_abs(res) > tol) {
    throw IllConditioned("solve_lyapunov: residual " +
                         std::to_string(detail::max_abs(res)) +
                         " exceeds tolerance");
  }
  return x;
}

/// Solves A X + X A^T + e^{A tau} M = 0; X is not symmetric for tau > 0.
/// At tau = 0 this coincides with solve_lyapunov.
inline Matrix solve_sylvester_forced(const Matrix& a, const Matrix& m,
                                     double tau) {
  detail::check_square_small(a, "A");
  if (m.rows() != a.rows() || m.cols() != a.cols()) {
    throw std::invalid_argument("solve_sylvester_forced: dimension mismatch");
  }
  if (tau < 0.0) {
    throw std::invalid_argument("solve_sylvester_forced: tau must be >= 0");
  }
  if (!detail::is_hurwitz(a)) {
    throw UnstableA("solve_sylvester_forced: A not Hurwitz");
  }
  const Matrix forcing = matrix_exp(a, tau) * m;
  Matrix x = detail::sylvester_solve(a, forcing);
  const Matrix res = a * x + x * a.transpose() + forcing;
  const double tol = 1e-11 * detail::residual_scale(a, x, m);
  if (detail::max_abs(res) > tol) {
    throw IllConditioned("solve_sylvester_forced: residual exceeds tolerance");
  }
  return x;
}

namespace detail {

// Extracts a real basis of the stable invariant subspace of H and returns
// P = W U^{-1}. Throws NoStabilizingSolution when the subspace dimension is
// not n or is not a graph over the first block.
inline Matrix stable_subspace_solution(const Matrix& h, int n) {
  Eigen::EigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success) {
    throw NoStabilizingSolution("eigen decomposition failed");
  }
  const auto& vals = es.eigenvalues();
  const auto& vecs = es.eigenvectors();
  const double imag_tol = 1e-10 * std::max(1.0, vals.cwiseAbs().maxCoeff());
  Matrix basis(2 * n, 2 * n);
  int cols = 0;
  for (int i = 0; i < vals.size() && cols < 2 * n; ++i) {
    if (!(vals(i).real() < 0.0)) continue;
    if (std::abs(vals(i).imag()) <= imag_tol) {
      // real eigenvalue: rotate the (possibly complex-scaled) vector real
      Eigen::VectorXcd v = vecs.col(i);
      int k = 0;
      v.cwiseAbs().maxCoeff(&k);
      v *= std::conj(v(k)) / std::abs(v(k));
      basis.col(cols++) = v.real();
    } else if (vals(i).imag() > 0.0) {
      basis.col(cols++) = vecs.col(i).real();
      if (cols < 2 * n) basis.col(cols++) = vecs.col(i).imag();
    }
  }
  if (cols != n) {
    throw NoStabilizingSolution(
        "stable invariant subspace has dimension " + std::to_string(cols) +
        ", expected " + std::to_string(n));
  }
  const Matrix u = basis.topLeftCorner(n, n);
  const Matrix w = basis.block(n, 0, n, n);
  // P = W U^{-1}, via U^T P^T = W^T.
  Eigen::FullPivLU<Matrix> lu(Matrix(u.transpose()));
  if (!lu.isInvertible()) {
    throw NoStabilizingSolution("invariant subspace is not a graph");
  }
  Matrix p = lu.solve(Matrix(w.transpose())).transpose();
  return 0.5 * (p + p.transpose()).eval();
}

}  // namespace detail

/// Solves A P + P A^T - P S P + Q = 0 for the stabilising P (A - P S
/// Hurwitz). S and Q are symmetric; S may be indefinite or negative, which is
/// how the guaranteed-cost equations enter. Residual must come out below
/// 1e-10 relative to the instance scale.
inline Matrix solve_care_general(const Matrix& a, const Matrix& s,
                                 const Matrix& q) {
  detail::check_square_small(a, "A");
  const int n = static_cast<int>(a.rows());
  const double qn = detail::max_abs(q);
  const double sn = detail::max_abs(s);
  if (qn == 0.0 && detail::is_hurwitz(a)) return Matrix::Zero(n, n);
  if (sn == 0.0) return solve_lyapunov(a, q);

  // Balance the quadratic and constant coefficients: with P = c P' the
  // equation for P' has S' = c S, Q' = Q / c.
  const double c = std::sqrt(qn / sn);
  const Matrix sb = c * s;
  const Matrix qb = q / c;

  Matrix h(2 * n, 2 * n);
  h << a.transpose(), -sb, -qb, -a;
  Matrix p;
  try {
    p = detail::stable_subspace_solution(h, n);
  } catch (const NoStabilizingSolution&) {
    // Degenerate eigenstructure: retry on a shifted problem, then polish on
    // the original one below.
    const double eta = 1e-13 * std::max(detail::max_abs(a), 1.0);
    const Matrix ashift = a - eta * Matrix::Identity(n, n);
    Matrix hp(2 * n, 2 * n);
    hp << ashift.transpose(), -sb, -qb, -ashift;
    p = detail::stable_subspace_solution(hp, n);
  }

  // Newton (Kleinman) polish: (A - P S') D + D (A - P S')^T + R(P) = 0.
  auto residual = [&](const Matrix& pp) -> Matrix {
    return a * pp + pp * a.transpose() - pp * sb * pp + qb;
  };
  for (int it = 0; it < 12; ++it) {
    const Matrix r = residual(p);
    const double scale = std::max(
        {detail::max_abs(a) * detail::max_abs(p), detail::max_abs(qb),
         detail::max_abs(p) * detail::max_abs(sb) * detail::max_abs(p), 1.0});
    if (detail::max_abs(r) <= 1e-14 * scale) break;
    try {
      const Matrix delta = detail::sylvester_solve(a - p * sb, r);
      p = 0.5 * ((p + delta) + (p + delta).transpose()).eval();
    } catch (const SolverError&) {
      break;
    }
  }
  p *= c;

  if (!detail::is_hurwitz(a - p * s)) {
    throw NoStabilizingSolution("closed loop A - P S is not Hurwitz");
  }
  const Matrix res = a * p + p * a.transpose() - p * s * p + q;
  const double scale =
      std::max({detail::max_abs(a) * detail::max_abs(p), detail::max_abs(q),
                detail::max_abs(p) * sn * detail::max_abs(p), 1.0});
  if (detail::max_abs(res) > 1e-10 * scale) {
    throw IllConditioned("solve_care_general: residual exceeds tolerance");
  }
  return p;
}

/// Filter-form CARE: A P + P A^T + Bq Bq^T - P C^T (Dr Dr^T)^{-1} C P = 0,
/// stabilising P >= 0.
inline Matrix solve_care(const Matrix& a, const Matrix& c, const Matrix& bq,
                         const Matrix& dr) {
  detail::check_square_small(a, "A");
  if (c.cols() != a.rows() || bq.rows() != a.rows() || dr.rows() != c.rows()) {
    throw std::invalid_argument("solve_care: dimension mismatch");
  }
  const Matrix r = dr * dr.transpose();
  Eigen::FullPivLU<Matrix> lu(r);
  if (!lu.isInvertible()) {
    throw std::invalid_argument("solve_care: Dr Dr^T is singular");
  }
  const Matrix s = c.transpose() * lu.solve(c);
  return solve_care_general(a, 0.5 * (s + s.transpose()), bq * bq.transpose());
}

/// Uncertain system of the guaranteed-cost estimator:
///   dx = [A + D1 Delta(t) E1] x + w1,   y = [C + D2 Delta(t) E1] x + w2,
/// with Delta^T Delta <= I, cov(w1) = V1, cov(w2) = V2, and a fixed
/// multiplier epsilon > 0.
struct GcProblem {
  Matrix A, C, D1, D2, E1, V1, V2;
  double epsilon = 0.0;
};

struct GcSolution {
  /// Stabilising S+ > 0 of the first Riccati equation, when it exists at
  /// this epsilon. Its absence signals epsilon at or beyond the feasible
  /// range of that equation; the estimator equation may still be solvable.
  std::optional<Matrix> s_plus;
  /// Stabilising Q+ > 0 of the estimator Riccati equation; the guaranteed
  /// error-covariance bound.
  Matrix q_plus;
};

inline void validate_gc_problem(const GcProblem& gp) {
  detail::check_square_small(gp.A, "A");
  const int n = static_cast<int>(gp.A.rows());
  if (gp.epsilon <= 0.0 || !std::isfinite(gp.epsilon)) {
    throw std::invalid_argument("GcProblem: epsilon must be positive");
  }
  if (gp.C.cols() != n || gp.E1.cols() != n || gp.D1.rows() != n) {
    throw std::invalid_argument("GcProblem: dimension mismatch");
  }
  if (gp.D2.rows() != gp.C.rows() || gp.D2.cols() != gp.D1.cols()) {
    throw std::invalid_argument("GcProblem: D2 must be l x r");
  }
  if (gp.V1.rows() != n || gp.V2.rows() != gp.C.rows()) {
    throw std::invalid_argument("GcProblem: V1/V2 dimension mismatch");
  }
  if (detail::min_sym_eig(gp.V1) <= 0.0 || detail::min_sym_eig(gp.V2) <= 0.0) {
    throw std::invalid_argument("GcProblem: V1, V2 must be positive definite");
  }
}

/// Solves the guaranteed-cost Riccati pair at gp.epsilon. Q+ satisfies
/// Q+ <= S+ whenever S+ exists. Throws EpsilonInfeasible when the estimator
/// equation has no stabilising solution at this epsilon.
inline GcSolution solve_gc_riccati_pair(const GcProblem& gp) {
  validate_gc_problem(gp);
  const double eps = gp.epsilon;
  const Matrix e11 = gp.E1.transpose() * gp.E1;

  GcSolution out;
  try {
    const Matrix qmat =
        gp.D1 * gp.D1.transpose() / eps + gp.V1;
    Matrix s = solve_care_general(gp.A, (-eps) * e11, qmat);
    if (detail::min_sym_eig(s) > 0.0) out.s_plus = std::move(s);
  } catch (const SolverError&) {
    // No stabilising S+ at this epsilon.
  }

  const Matrix w = eps * gp.V2 + gp.D2 * gp.D2.transpose();
  const Matrix winv = w.inverse();
  const Matrix at = gp.A - gp.D1 * gp.D2.transpose() * winv * gp.C;
  Matrix smat = eps * (gp.C.transpose() * winv * gp.C - e11);
  smat = 0.5 * (smat + smat.transpose()).eval();
  const int r = static_cast<int>(gp.D1.cols());
  Matrix qmat = gp.D1 *
                    (Matrix::Identity(r, r) -
                     gp.D2.transpose() * winv * gp.D2) *
                    gp.D1.transpose() / eps +
                gp.V1;
  qmat = 0.5 * (qmat + qmat.transpose()).eval();

  Matrix q;
  try {
    q = solve_care_general(at, smat, qmat);
  } catch (const SolverError& e) {
    throw EpsilonInfeasible(std::string("estimator Riccati infeasible: ") +
                            e.what());
  }
  if (!(detail::min_sym_eig(q) > 0.0)) {
    throw EpsilonInfeasible("estimator Riccati solution is not positive");
  }
  if (out.s_plus) {
    const Matrix gap = *out.s_plus - q;
    const double tol = 1e-9 * std::max(detail::max_abs(*out.s_plus), 1.0);
    if (detail::min_sym_eig(gap) < -tol) {
      throw IllConditioned("solve_gc_riccati_pair: Q+ <= S+ violated");
    }
  }
  out.q_plus = std::move(q);
  return out;
}

}  // namespace ouphase::linsolve
