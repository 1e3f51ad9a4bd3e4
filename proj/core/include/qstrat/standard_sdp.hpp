#pragma once

// Standard conic form consumed by the interior-point solver:
//
//   minimize    <C, X>
//   subject to  <A_k, X> = b_k        k = 0..m-1
//               X in S+^{s_1} x ... x S+^{s_p} x R+^l x R^f
//
// Each A_k is stored sparsely.  A PSD entry (block, r, c, v) with r <= c
// stands for the symmetric matrix with v at (r, c) and (c, r), so it
// contributes v*X_rr on the diagonal and 2*v*X_rc off it.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace qstrat {

struct PsdEntry {
  std::uint32_t block = 0;
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  double value = 0.0;
};

struct LinearEntry {
  std::uint32_t index = 0;
  double value = 0.0;
};

struct ConstraintRow {
  std::vector<PsdEntry> psd;
  std::vector<LinearEntry> nonneg;
  std::vector<LinearEntry> free;
};

/// A point of the cone's ambient space (also used for dual slacks).
struct ConicVector {
  std::vector<Eigen::MatrixXd> psd;
  Eigen::VectorXd nonneg;
  Eigen::VectorXd free;
};

struct StandardSdp {
  std::vector<std::size_t> psd_sides;
  std::size_t nonneg_count = 0;
  std::size_t free_count = 0;

  ConicVector c;  // symmetric cost blocks
  std::vector<ConstraintRow> rows;
  Eigen::VectorXd b;

  std::size_t num_rows() const noexcept { return rows.size(); }
  /// Throws BuildError when sides, cost shapes or entry indices disagree.
  void validate() const;
  /// All-zero vector with this problem's block shapes.
  ConicVector zero_vector() const;
};

/// Row-wise evaluation A(X) including the free part.
Eigen::VectorXd apply_rows(const StandardSdp& p, const ConicVector& x);
/// A^T(y) as symmetric blocks plus linear parts.
ConicVector adjoint_rows(const StandardSdp& p, const Eigen::VectorXd& y);
/// Trace inner product summed over all parts.
double inner(const ConicVector& a, const ConicVector& b);
/// Max absolute entry over all parts.
double max_abs(const ConicVector& a);
void axpy(double alpha, const ConicVector& x, ConicVector& y);

}  // namespace qstrat
