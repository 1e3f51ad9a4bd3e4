#pragma once

// Lowering of structured SDPs to StandardSdp.
//
// Hermitian PSD variables of side d become real PSD blocks of side 2d
// holding [[Re, -Im], [Im, Re]]; coefficients are embedded the same way and
// halved so that <A, R> = Re Tr[G X].  When every coefficient is real the
// problem is invariant under complex conjugation, so variables are
// restricted to real symmetric matrices instead (blocks of side d).
// Inequalities gain a slack variable, turning every constraint into
// equalities, one row per upper-triangular entry (real and imaginary parts).

#include <cstddef>
#include <string>
#include <vector>

#include "qstrat/sdp_problem.hpp"
#include "qstrat/standard_sdp.hpp"

namespace qstrat {

struct LoweringOptions {
  /// Use the real symmetric restriction when all data are real.
  bool allow_real = true;
  /// Number slack variables before user variables.
  bool slack_first = false;
  /// Remove linearly dependent equality rows.
  bool presolve = true;
  double rank_tol = 1e-10;
};

enum class SlotKind { psd_block, nonneg, free_scalar, free_hermitian };

struct VariableSlot {
  std::string name;
  SystemList systems;
  Cone cone = Cone::psd;
  bool is_slack = false;
  SlotKind kind = SlotKind::psd_block;
  /// PSD block index, or first coordinate in the nonneg / free vector.
  std::size_t offset = 0;
};

/// Which constraint entry an equality row enforces.
struct RowOrigin {
  std::size_t constraint = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  bool imaginary = false;
};

struct LoweredProblem {
  StandardSdp sdp;
  bool complex_mode = false;
  Sense sense = Sense::minimize;
  double objective_constant = 0.0;
  /// User variables (declaration order) followed by slacks, one per
  /// inequality constraint, in constraint order.
  std::vector<VariableSlot> slots;
  std::size_t user_variable_count = 0;
  /// Origin of each row kept in `sdp`.
  std::vector<RowOrigin> origins;
  /// Rows removed by presolve, with their right-hand sides.
  std::vector<ConstraintRow> dropped_rows;
  std::vector<double> dropped_b;
  std::vector<RowOrigin> dropped_origins;

  /// Objective of the structured problem given the standard-form objective.
  double problem_value(double standard_value) const;
  /// Values of every slot (user variables then slacks) encoded in `x`.
  Assignment recover(const ConicVector& x) const;
  /// Inverse of `recover`: encodes one value per slot.
  ConicVector embed(const Assignment& values) const;
  /// Row-space image of per-constraint operators: entry k is the real or
  /// imaginary part named by origins[k].
  Eigen::VectorXd extract_rows(const std::vector<LabeledOperator>& per_constraint) const;
};

/// Throws BuildError on malformed problems or inconsistent equalities.
LoweredProblem lower_to_standard(const SdpProblem& p, const LoweringOptions& o = {});

/// The structured problem as the dual of a StandardSdp: its scalar
/// coordinates become the multipliers y, while each PSD variable and each
/// inequality becomes a slack block Z = C - A^T y.  Equalities become free
/// primal columns.  Feasibility of the structured problem is then measured
/// by the dual residual, which the solver computes without the W dZ W
/// amplification that limits primal accuracy on ill-conditioned problems.
struct DualFormProblem {
  StandardSdp sdp;
  bool complex_mode = false;
  Sense sense = Sense::minimize;
  double objective_constant = 0.0;
  /// User variables; offset is the first coordinate of each.  A PSD or
  /// Hermitian variable of side d > 1 owns d(d+1)/2 coordinates (real
  /// mode) or d^2 (upper-triangle real parts, then strict imaginary parts).
  std::vector<VariableSlot> slots;
  /// Equalities are solved out: coordinate j is offset(j) + sum of
  /// weight * y(row) over basis[j].
  Eigen::VectorXd offset;
  std::vector<std::vector<std::pair<std::size_t, double>>> basis;
  /// Equality rows removed as dependent.
  std::size_t dropped_equalities = 0;

  /// Structured objective given the standard-form dual objective b^T y.
  double problem_value(double standard_dual_value) const;
  /// Variable values encoded by the multipliers `y`.
  Assignment recover(const Eigen::VectorXd& y) const;
};

/// Structured variables become the standard-form multipliers y; cone
/// variables and inequalities become slack blocks Z = C - A^T y, and
/// equalities are eliminated, so y is feasible to rounding at every
/// iterate.  Throws BuildError on malformed problems, inconsistent
/// equalities or a costed direction no constraint touches.
DualFormProblem lower_to_dual_form(const SdpProblem& p, const LoweringOptions& o = {});

}  // namespace qstrat
