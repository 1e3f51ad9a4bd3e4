#pragma once

// Structured SDP descriptions over labeled operators.
//
// Every constraint lives on its own system list (empty for scalar
// constraints) and reads  sum_t coeff_t * map_t(X_t)  REL  rhs  in the
// Loewner order.  Scalar variables are operators on no systems (1x1).

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qstrat/labeled_operator.hpp"

namespace qstrat {

enum class Sense { minimize, maximize };
enum class Cone { psd, hermitian_free, nonneg, free };
enum class Relation { eq, le, ge };

const char* to_string(Cone c);

struct Variable {
  std::string name;
  SystemList systems;  // empty for nonneg / free scalars
  Cone cone = Cone::psd;

  std::size_t dim() const { return total_dim(systems); }
};

/// X -> trace_extend(X, constraint systems).
struct TraceExtend {};
/// Operator X -> scalar Tr[G X]; G lives on the variable's systems.
struct InnerProduct {
  LabeledOperator g;
};
/// Scalar x -> x G; G lives on the constraint's systems.
struct ScaleOperator {
  LabeledOperator g;
};

using LinearMap = std::variant<TraceExtend, InnerProduct, ScaleOperator>;

struct Term {
  std::string variable;
  double coeff = 1.0;
  LinearMap map = TraceExtend{};
};

struct Constraint {
  std::string name;
  SystemList systems;
  std::vector<Term> terms;
  Relation relation = Relation::eq;
  LabeledOperator rhs;  // on `systems`
};

/// Objective contribution Tr[G X]; for scalar variables G is 1x1.
struct ObjectiveTerm {
  std::string variable;
  LabeledOperator g;
};

struct SdpProblem {
  std::string name;
  Sense sense = Sense::minimize;
  std::vector<Variable> variables;
  std::vector<Constraint> constraints;
  std::vector<ObjectiveTerm> objective;
  double objective_constant = 0.0;

  const Variable& variable(const std::string& name) const;
  std::optional<std::size_t> variable_index(const std::string& name) const;

  /// Throws BuildError on unknown variables, shape mismatches or
  /// non-Hermitian coefficient operators.
  void validate() const;
  /// True when every coefficient operator and right-hand side is real.
  bool has_real_data() const;
};

/// One value per variable, in declaration order.
using Assignment = std::vector<LabeledOperator>;

/// Applies a map to a variable value, landing on `target` systems.
LabeledOperator apply_map(const LinearMap& map, const LabeledOperator& x, const SystemList& target);
/// The adjoint map applied to `y`, landing on the variable's systems.
LabeledOperator adjoint_map(const LinearMap& map, const LabeledOperator& y, const SystemList& variable_systems);

/// sum of terms of `c` evaluated at `x`.
LabeledOperator constraint_lhs(const SdpProblem& p, const Constraint& c, const Assignment& x);
double objective_value(const SdpProblem& p, const Assignment& x);

/// Worst violation of constraints and cone memberships at `x`
/// (infinity norm for equalities, negated least eigenvalue otherwise).
double max_violation(const SdpProblem& p, const Assignment& x);

}  // namespace qstrat
