#include "pinchsec/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pinchsec {
namespace {

double max_abs_entry(const CMatrix& m) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) s = std::max(s, std::abs(m(i, j)));
  return s;
}

void require_hermitian(const CMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix is not square");
  if (!is_hermitian(m)) throw std::invalid_argument("matrix is not Hermitian");
}

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

void require_psd(const EigenDecomposition& eig, double trace) {
  const double lo = eig.values.size() ? eig.values(0) : 0.0;
  if (lo < -1e-9 * std::max(trace, 0.0))
    throw NotPsdError("matrix is not positive semidefinite (min eigenvalue " +
                      std::to_string(lo) + ")");
}

}  // namespace

bool is_hermitian(const CMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  // Absolute tolerance for unit-scale matrices, relative for large ones.
  const double scaled = tol * std::max(1.0, max_abs_entry(m));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i; j < m.cols(); ++j)
      if (std::abs(m(i, j) - std::conj(m(j, i))) > scaled) return false;
  return true;
}

Eigen::MatrixXd real_embedding(const CMatrix& m) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd e(2 * n, 2 * n);
  const Eigen::MatrixXd re = m.real();
  const Eigen::MatrixXd im = m.imag();
  e.topLeftCorner(n, n) = re;
  e.topRightCorner(n, n) = -im;
  e.bottomLeftCorner(n, n) = im;
  e.bottomRightCorner(n, n) = re;
  return e;
}

void symmetric_jacobi(const Eigen::MatrixXd& input, Eigen::VectorXd& values,
                      Eigen::MatrixXd& vectors, JacobiStats* stats) {
  const Eigen::Index n = input.rows();
  Eigen::MatrixXd a = 0.5 * (input + input.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = a.norm();
  constexpr int kMaxSweeps = 60;

  double off = off_diagonal_norm(a);
  if (stats) {
    stats->sweeps = 0;
    stats->off_norms.assign(1, off);
  }
  for (int sweep = 0; sweep < kMaxSweeps && off > 1e-15 * scale && off > 0.0; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    off = off_diagonal_norm(a);
    if (stats) {
      stats->sweeps = sweep + 1;
      stats->off_norms.push_back(off);
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });
  values.resize(n);
  vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    values(j) = a(order[j], order[j]);
    vectors.col(j) = v.col(order[j]);
  }
}

EigenDecomposition hermitian_eig(const CMatrix& m, JacobiStats* stats) {
  require_hermitian(m);
  const Eigen::Index n = m.rows();
  const CMatrix sym = 0.5 * (m + m.adjoint());

  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  symmetric_jacobi(real_embedding(sym), evals, evecs, stats);

  // Every eigenpair of M appears twice in the embedding, as [a; b] and
  // [-b; a] (the latter is j*v). Pivoted complex Gram-Schmidt over the 2n
  // real eigenvectors keeps exactly n complex-orthonormal eigenvectors.
  std::vector<CVector> candidates;
  candidates.reserve(static_cast<std::size_t>(2 * n));
  for (Eigen::Index j = 0; j < 2 * n; ++j) {
    CVector c(n);
    for (Eigen::Index r = 0; r < n; ++r) c(r) = Complex(evecs(r, j), evecs(r + n, j));
    candidates.push_back(std::move(c));
  }
  std::vector<bool> used(candidates.size(), false);
  std::vector<CVector> basis;
  basis.reserve(static_cast<std::size_t>(n));
  while (static_cast<Eigen::Index>(basis.size()) < n) {
    double best = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (used[c]) continue;
      const double r = candidates[c].norm();
      if (r > best) {
        best = r;
        best_idx = c;
      }
    }
    used[best_idx] = true;
    CVector u = candidates[best_idx] / best;
    basis.push_back(u);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (used[c]) continue;
      candidates[c] -= u * u.dot(candidates[c]);
    }
  }

  // Rayleigh quotients, then sort ascending.
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t j = 0; j < basis.size(); ++j)
    ranked.emplace_back(basis[j].dot(sym * basis[j]).real(), j);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values(j) = ranked[static_cast<std::size_t>(j)].first;
    CVector v = basis[ranked[static_cast<std::size_t>(j)].second];
    // Deterministic phase: largest-magnitude entry real positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    const Complex ph = v(arg) / std::abs(v(arg));
    out.vectors.col(j) = v * std::conj(ph);
  }
  return out;
}

MinEigen min_eig(const CMatrix& m) {
  const auto eig = hermitian_eig(m);
  return {eig.values(0), eig.vectors.col(0)};
}

double regularization_shift(const CMatrix& phi, double eps_rel) {
  const double n = static_cast<double>(phi.rows());
  return eps_rel * std::max(phi.trace().real() / n, kRegularizationFloor);
}

CMatrix regularized_inverse(const CMatrix& phi, double eps_rel) {
  const auto eig = hermitian_eig(phi);
  const double trace = phi.trace().real();
  require_psd(eig, trace);
  const double eps = regularization_shift(phi, eps_rel);
  const Eigen::Index n = phi.rows();
  Eigen::VectorXd inv(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double shifted = std::max(eig.values(j), 0.0) + eps;
    if (shifted <= 0.0) throw NotPsdError("regularized matrix is singular");
    inv(j) = 1.0 / shifted;
  }
  return eig.vectors * inv.asDiagonal() * eig.vectors.adjoint();
}

CMatrix hermitian_sqrt(const CMatrix& phi) {
  const auto eig = hermitian_eig(phi);
  require_psd(eig, phi.trace().real());
  const Eigen::VectorXd root = eig.values.cwiseMax(0.0).cwiseSqrt();
  return eig.vectors * root.asDiagonal() * eig.vectors.adjoint();
}

}  // namespace pinchsec
