#include "qstrat/hermitian_eigen.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

#include "qstrat/errors.hpp"

namespace qstrat::linalg {
namespace {

template <typename Scalar>
Scalar unit_phase(const Scalar& x) {
  const double r = std::abs(x);
  if (r == 0.0) return Scalar(1.0);
  return x / r;
}

// Reduces the Hermitian matrix `a` (lower triangle) to tridiagonal form
// a = Q T Q^H.  On return `diag` holds T's diagonal and `sub` the moduli of
// its subdiagonal; `phases` makes T = D T_real D^H with D = diag(phases).
template <typename Scalar>
void householder_tridiagonalize(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a,
                                Eigen::VectorXd& diag, Eigen::VectorXd& sub,
                                Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& phases,
                                Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>* q) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = a.rows();
  a.template triangularView<Eigen::StrictlyUpper>() = a.adjoint();
  diag.resize(n);
  sub.resize(std::max<Eigen::Index>(n - 1, 0));
  phases = Vec::Ones(n);
  if (q) q->setIdentity(n, n);

  std::vector<Scalar> off(static_cast<std::size_t>(std::max<Eigen::Index>(n - 1, 0)));
  Vec v, p, w;
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index r = n - k - 1;
    auto x = a.col(k).tail(r);
    const double tail_norm = x.tail(r - 1).norm();
    if (tail_norm == 0.0) {
      off[static_cast<std::size_t>(k)] = x(0);
      continue;
    }
    const double norm = x.norm();
    const Scalar alpha = -unit_phase(x(0)) * norm;
    v = x;
    v(0) -= alpha;
    v.normalize();
    auto block = a.bottomRightCorner(r, r);
    p.noalias() = block * v;
    const Scalar kappa = v.dot(p);  // v^H p, real for Hermitian blocks
    w = p - kappa * v;
    block.noalias() -= 2.0 * v * w.adjoint();
    block.noalias() -= 2.0 * w * v.adjoint();
    off[static_cast<std::size_t>(k)] = alpha;
    if (q) {
      auto right = q->rightCols(r);
      Vec qv = right * v;
      right.noalias() -= 2.0 * qv * v.adjoint();
    }
  }
  if (n >= 2) off[static_cast<std::size_t>(n - 2)] = a(n - 1, n - 2);

  for (Eigen::Index i = 0; i < n; ++i) diag(i) = std::real(a(i, i));
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const Scalar e = off[static_cast<std::size_t>(k)];
    sub(k) = std::abs(e);
    phases(k + 1) = phases(k) * unit_phase(e);
  }
}

void sort_ascending(Eigen::VectorXd& values, Eigen::MatrixXd* z) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return values(i) < values(j); });
  Eigen::VectorXd sorted(n);
  for (Eigen::Index i = 0; i < n; ++i) sorted(i) = values(idx[static_cast<std::size_t>(i)]);
  values = sorted;
  if (z && z->size() > 0) {
    Eigen::MatrixXd zs(z->rows(), n);
    for (Eigen::Index i = 0; i < n; ++i) zs.col(i) = z->col(idx[static_cast<std::size_t>(i)]);
    *z = std::move(zs);
  }
}

}  // namespace

void tridiagonal_ql(Eigen::VectorXd& d, Eigen::VectorXd& sub, Eigen::MatrixXd* z) {
  const int n = static_cast<int>(d.size());
  if (n <= 1) return;
  Eigen::VectorXd e(n);
  for (int i = 0; i + 1 < n; ++i) e(i) = sub(i);
  e(n - 1) = 0.0;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr int kMaxSweeps = 100;

  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m = l;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d(m)) + std::abs(d(m + 1));
        if (std::abs(e(m)) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == kMaxSweeps) {
          throw NumericContractError("tridiagonal QL failed to converge");
        }
        double g = (d(l + 1) - d(l)) / (2.0 * e(l));
        double r = std::hypot(g, 1.0);
        g = d(m) - d(l) + e(l) / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        int i = m - 1;
        for (; i >= l; --i) {
          double f = s * e(i);
          const double b = c * e(i);
          r = std::hypot(f, g);
          e(i + 1) = r;
          if (r == 0.0) {
            d(i + 1) -= p;
            e(m) = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d(i + 1) - p;
          r = (d(i) - g) * s + 2.0 * c * b;
          p = s * r;
          d(i + 1) = g + p;
          g = c * r - b;
          if (z) {
            auto zi = z->col(i);
            auto zi1 = z->col(i + 1);
            for (Eigen::Index k = 0; k < z->rows(); ++k) {
              f = zi1(k);
              zi1(k) = s * zi(k) + c * f;
              zi(k) = c * zi(k) - s * f;
            }
          }
        }
        if (r == 0.0 && i >= l) continue;
        d(l) -= p;
        e(l) = g;
        e(m) = 0.0;
      }
    } while (m != l);
  }
}

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& a_in, bool want_vectors) {
  if (a_in.rows() != a_in.cols()) throw NumericContractError("symmetric_eigen: matrix not square");
  Eigen::MatrixXd a = a_in;
  Eigen::VectorXd diag, sub, phases;
  Eigen::MatrixXd q;
  householder_tridiagonalize<double>(a, diag, sub, phases, want_vectors ? &q : nullptr);
  SymmetricEigen out;
  if (want_vectors) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Identity(a.rows(), a.rows());
    tridiagonal_ql(diag, sub, &z);
    sort_ascending(diag, &z);
    out.vectors = q * phases.asDiagonal() * z;
  } else {
    tridiagonal_ql(diag, sub, nullptr);
    sort_ascending(diag, nullptr);
  }
  out.values = std::move(diag);
  return out;
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& a) {
  return symmetric_eigen(a, false).values;
}

HermitianEigen hermitian_eigen(const Eigen::MatrixXcd& a_in, bool want_vectors) {
  if (a_in.rows() != a_in.cols()) throw NumericContractError("hermitian_eigen: matrix not square");
  Eigen::MatrixXcd a = a_in;
  Eigen::VectorXd diag, sub;
  Eigen::VectorXcd phases;
  Eigen::MatrixXcd q;
  householder_tridiagonalize<std::complex<double>>(a, diag, sub, phases,
                                                   want_vectors ? &q : nullptr);
  HermitianEigen out;
  if (want_vectors) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Identity(a.rows(), a.rows());
    tridiagonal_ql(diag, sub, &z);
    sort_ascending(diag, &z);
    out.vectors = q * phases.asDiagonal() * z.cast<std::complex<double>>();
  } else {
    tridiagonal_ql(diag, sub, nullptr);
    sort_ascending(diag, nullptr);
  }
  out.values = std::move(diag);
  return out;
}

}  // namespace qstrat::linalg
