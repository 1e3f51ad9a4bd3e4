#pragma once

// Primal-dual interior-point method for StandardSdp: Nesterov-Todd scaling,
// Mehrotra predictor-corrector, dense Schur complement.

#include <iosfwd>
#include <string>
#include <vector>

#include "qstrat/standard_sdp.hpp"

namespace qstrat {

struct SolverOptions {
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iters = 200;
  /// When the iteration breaks down, the best iterate is still returned as
  /// near_optimal if its residuals and relative <X,Z> are below this.
  double reduced_tol = 1e-6;
  double step_fraction = 0.98;
  /// Iteration log; also enabled by QSTRAT_SOLVER_TRACE=1.
  bool verbose = false;
  std::ostream* trace = nullptr;  // defaults to std::cerr

  /// Throws DomainError on nonpositive tolerances or a step fraction outside (0, 1).
  void validate() const;
};

enum class SolveStatus { optimal, near_optimal, max_iters, numerical_failure, infeasible_certificate };

/// optimal or near_optimal.
inline bool solved(SolveStatus s) { return s == SolveStatus::optimal || s == SolveStatus::near_optimal; }

const char* to_string(SolveStatus s);
SolveStatus solve_status_from_string(const std::string& s);

struct IterationRecord {
  int iteration = 0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double complementarity = 0.0;  // <X, Z>
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double primal_step = 0.0;
  double dual_step = 0.0;
  double min_eig_x = 0.0;  // least eigenvalue over PSD blocks and nonnegatives
  double min_eig_z = 0.0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::numerical_failure;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;  // complementarity <X,Z>; |primal - dual| also carries the residuals
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  ConicVector x;
  Eigen::VectorXd y;
  ConicVector z;
  std::vector<IterationRecord> history;
  std::string message;
};

SolveReport solve(const StandardSdp& p, const SolverOptions& o = {});

struct KktResiduals {
  double primal_residual = 0.0;  // ||b - A(X)||_inf / (1 + ||b||_inf)
  double dual_residual = 0.0;    // ||C - A^T y - Z||_inf / (1 + ||C||_inf)
  double gap = 0.0;              // <X,Z>
  double primal_value = 0.0;
  double dual_value = 0.0;
};

/// Recomputes residuals from the report's solution blocks.  Throws
/// ContractError when blocks are missing or misshapen.
KktResiduals check_kkt(const StandardSdp& p, const SolveReport& r);

}  // namespace qstrat
