#pragma once

// Small dense Hermitian linear algebra. Matrices here are at most a few dozen
// rows, so everything is built on a cyclic Jacobi eigensolver applied to the
// real-symmetric embedding [[Re M, -Im M], [Im M, Re M]].

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace pinchsec {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kDefaultEpsRel = 1e-9;
inline constexpr double kRegularizationFloor = 1e-30;

class NotPsdError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct JacobiStats {
  int sweeps = 0;
  // Off-diagonal Frobenius norm before the first sweep and after every sweep.
  std::vector<double> off_norms;
};

struct EigenDecomposition {
  Eigen::VectorXd values;  // ascending
  CMatrix vectors;         // unitary, column j pairs with values(j)
};

struct MinEigen {
  double value = 0.0;
  CVector vector;
};

bool is_hermitian(const CMatrix& m, double tol = 1e-12);

// Real-symmetric 2n x 2n embedding of an n x n Hermitian matrix.
Eigen::MatrixXd real_embedding(const CMatrix& m);

// Cyclic Jacobi on a real symmetric matrix. Returns ascending eigenvalues and
// orthonormal eigenvectors (columns).
void symmetric_jacobi(const Eigen::MatrixXd& a, Eigen::VectorXd& values,
                      Eigen::MatrixXd& vectors, JacobiStats* stats = nullptr);

EigenDecomposition hermitian_eig(const CMatrix& m, JacobiStats* stats = nullptr);
MinEigen min_eig(const CMatrix& m);

// Shift added to the diagonal by regularized_inverse.
double regularization_shift(const CMatrix& phi, double eps_rel = kDefaultEpsRel);

// (Phi + eps I)^{-1} with eps = eps_rel * max(trace(Phi)/N, floor).
CMatrix regularized_inverse(const CMatrix& phi, double eps_rel = kDefaultEpsRel);

// Hermitian PSD square root; eigenvalues below zero are clamped.
CMatrix hermitian_sqrt(const CMatrix& phi);

}  // namespace pinchsec
