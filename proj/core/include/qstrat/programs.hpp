#pragma once

// Semidefinite programs for strategy distinguishability and their evaluation.
//
// Every builder takes two strategies on the same RoundStructure.  Variable
// names follow the formulas: S, S[k] (sub co-strategy chain), Y[k] (dual
// chain), N, N[k] (smoothed comb), W[k], X[k] (cost dual), mu, lambda.

#include <optional>
#include <string>

#include "qstrat/comb.hpp"
#include "qstrat/errors.hpp"
#include "qstrat/lowering.hpp"
#include "qstrat/sdp_problem.hpp"
#include "qstrat/solver.hpp"

namespace qstrat {

enum class Quantity { distance, dmin, dmax };
enum class Mode { adaptive, parallel };

const char* to_string(Quantity q);
const char* to_string(Mode m);
/// Throws ParseError on unknown names.
Quantity quantity_from_string(const std::string& s);
Mode mode_from_string(const std::string& s);

/// max Tr[S(ΓN - ΓM)] over sub co-strategies (S, S[n], ..., S[1]).
SdpProblem build_distance_primal(const StrategyChoi& n, const StrategyChoi& m);
/// min mu over the Y chain with Y[n] >= ΓN - ΓM.
SdpProblem build_distance_dual(const StrategyChoi& n, const StrategyChoi& m);
/// Two-outcome measuring co-strategy form; its optimum is twice the distance.
SdpProblem build_distance_gw(const StrategyChoi& n, const StrategyChoi& m);
/// min Tr[S ΓM] subject to Tr[S ΓN] >= 1 - eps over sub co-strategies.
SdpProblem build_dmin_primal(const StrategyChoi& n, const StrategyChoi& m, double eps);
SdpProblem build_dmin_dual(const StrategyChoi& n, const StrategyChoi& m, double eps);
/// min lambda with a comb N <= lambda ΓM within eps of ΓN.  At eps = 0 the
/// comb must equal ΓN and the program reduces to min lambda, lambda ΓM >= ΓN.
SdpProblem build_dmax_primal(const StrategyChoi& n, const StrategyChoi& m, double eps);
SdpProblem build_dmax_dual(const StrategyChoi& n, const StrategyChoi& m, double eps);

SdpProblem build_primal(Quantity q, const StrategyChoi& n, const StrategyChoi& m, double eps);
SdpProblem build_dual(Quantity q, const StrategyChoi& n, const StrategyChoi& m, double eps);

/// Which side of the standard-form pair carries the structured variables.
/// Dual form keeps them in y, where the interior-point directions are
/// computed without the ill-conditioned primal back-substitution.
enum class Orientation { primal, dual };

struct EvaluateOptions {
  SolverOptions solver;
  Orientation orientation = Orientation::dual;
  LoweringOptions lowering;
  /// Required |primal - dual| <= gap_tolerance * (1 + |primal|).
  double gap_tolerance = 1e-6;
  /// Solve the dual program too; otherwise the dual certificate of the
  /// primal solve is used.
  bool solve_dual_program = true;
};

/// A structured problem solved through lowering.
struct ProgramSolution {
  Orientation orientation = Orientation::primal;
  LoweredProblem lowered;    // primal orientation
  DualFormProblem dual_form; // dual orientation
  SolveReport report;
  /// Objective of the structured problem at the returned primal point.
  double value = 0.0;
  /// Objective bound from the standard-form dual certificate.
  double bound = 0.0;

  /// Structured variables at the returned point.
  Assignment assignment() const;
};

ProgramSolution solve_program(const SdpProblem& p, const EvaluateOptions& o = {});

struct QuantityResult {
  /// Reported quantity: the distance, or a log2 value for dmin / dmax.
  double value = 0.0;
  /// Raw optima of the primal and dual programs.
  double primal_value = 0.0;
  double dual_value = 0.0;
  /// |primal_value - dual_value|.
  double gap = 0.0;
  SolveReport solver;
  std::optional<SolveReport> dual_solver;
  Mode mode = Mode::adaptive;
  Quantity quantity = Quantity::distance;
  double epsilon = 0.0;

  /// Iterations over both solves.
  int total_iterations() const;
};

/// Maps a raw optimum to the reported scale: the distance itself,
/// -log2 for dmin and log2 for dmax, with the infinite sentinels below.
double reported_value(Quantity q, double raw);

/// Solver failure or an uncertified gap; carries what was computed, with
/// value on the reported scale.
class SolveError : public Error {
 public:
  SolveError(const std::string& what, QuantityResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const QuantityResult& partial() const noexcept { return partial_; }

 private:
  QuantityResult partial_;
};

/// Optimum values below this are reported as an infinite dmin.
inline constexpr double kDminFloor = 1e-12;
/// lambda above this is reported as an infinite dmax.
inline constexpr double kDmaxCeiling = 1e12;

/// Parallel mode evaluates on the one-turn tensor powers of the channels
/// (DomainError when a strategy is not a channel power).
QuantityResult evaluate(Quantity q, const StrategyChoi& n, const StrategyChoi& m, double eps, Mode mode,
                        const EvaluateOptions& o = {});

/// (2^lambda ΓM - ΓN) / (2^lambda - 1); DomainError when lambda <= 0.
StrategyChoi exact_cost_comb_at(const StrategyChoi& n, const StrategyChoi& m, double lambda);
/// exact_cost_comb_at with lambda from the eps = 0 dmax evaluation.
StrategyChoi exact_cost_comb(const StrategyChoi& n, const StrategyChoi& m, const EvaluateOptions& o = {});

}  // namespace qstrat
