#include "qstrat/sdp_problem.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "qstrat/errors.hpp"

namespace qstrat {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool is_scalar_cone(Cone c) { return c == Cone::nonneg || c == Cone::free; }

// Shared names must agree in dimension for trace_extend to apply.
bool compatible(const SystemList& a, const SystemList& b) {
  for (const auto& s : a) {
    for (const auto& t : b) {
      if (s.name == t.name && s.dim != t.dim) return false;
    }
  }
  return true;
}

void require_hermitian(const LabeledOperator& g, const std::string& where) {
  if (!g.is_hermitian(kKernelTol)) throw BuildError(where + ": coefficient operator is not Hermitian");
}

}  // namespace

const char* to_string(Cone c) {
  switch (c) {
    case Cone::psd: return "psd";
    case Cone::hermitian_free: return "hermitian_free";
    case Cone::nonneg: return "nonneg";
    case Cone::free: return "free";
  }
  return "psd";
}

std::optional<std::size_t> SdpProblem::variable_index(const std::string& n) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].name == n) return i;
  }
  return std::nullopt;
}

const Variable& SdpProblem::variable(const std::string& n) const {
  const auto i = variable_index(n);
  if (!i) throw BuildError("unknown variable '" + n + "'");
  return variables[*i];
}

void SdpProblem::validate() const {
  std::unordered_set<std::string> names;
  for (const auto& v : variables) {
    if (!names.insert(v.name).second) throw BuildError("duplicate variable '" + v.name + "'");
    if (is_scalar_cone(v.cone) && !v.systems.empty()) {
      throw BuildError("scalar variable '" + v.name + "' must not carry systems");
    }
    try {
      validate_systems(v.systems);
    } catch (const LabelingError& e) {
      throw BuildError("variable '" + v.name + "': " + e.what());
    }
  }
  for (const auto& c : constraints) {
    const std::string where = "constraint '" + c.name + "'";
    try {
      validate_systems(c.systems);
    } catch (const LabelingError& e) {
      throw BuildError(where + ": " + e.what());
    }
    if (c.rhs.systems() != c.systems) throw BuildError(where + ": right-hand side systems differ");
    require_hermitian(c.rhs, where);
    if (c.terms.empty()) throw BuildError(where + " has no terms");
    for (const auto& t : c.terms) {
      const auto& v = variable(t.variable);
      std::visit(Overloaded{
                     [&](const TraceExtend&) {
                       if (!compatible(v.systems, c.systems)) {
                         throw BuildError(where + ": dimensions of '" + v.name + "' disagree");
                       }
                     },
                     [&](const InnerProduct& m) {
                       if (!c.systems.empty()) throw BuildError(where + ": inner product needs a scalar constraint");
                       if (m.g.systems() != v.systems) throw BuildError(where + ": inner product operator systems differ");
                       require_hermitian(m.g, where);
                     },
                     [&](const ScaleOperator& m) {
                       if (v.dim() != 1) throw BuildError(where + ": scaled operator needs a scalar variable");
                       if (m.g.systems() != c.systems) throw BuildError(where + ": scaled operator systems differ");
                       require_hermitian(m.g, where);
                     },
                 },
                 t.map);
    }
  }
  for (const auto& o : objective) {
    const auto& v = variable(o.variable);
    if (o.g.systems() != v.systems) throw BuildError("objective operator for '" + v.name + "' has wrong systems");
    require_hermitian(o.g, "objective");
  }
}

bool SdpProblem::has_real_data() const {
  for (const auto& c : constraints) {
    if (!c.rhs.is_real()) return false;
    for (const auto& t : c.terms) {
      if (const auto* ip = std::get_if<InnerProduct>(&t.map); ip && !ip->g.is_real()) return false;
      if (const auto* so = std::get_if<ScaleOperator>(&t.map); so && !so->g.is_real()) return false;
    }
  }
  for (const auto& o : objective) {
    if (!o.g.is_real()) return false;
  }
  return true;
}

LabeledOperator apply_map(const LinearMap& map, const LabeledOperator& x, const SystemList& target) {
  return std::visit(Overloaded{
                        [&](const TraceExtend&) { return trace_extend(x, target); },
                        [&](const InnerProduct& m) {
                          return LabeledOperator::scalar((m.g.matrix().cwiseProduct(x.matrix().transpose())).sum());
                        },
                        [&](const ScaleOperator& m) { return m.g * x.matrix()(0, 0); },
                    },
                    map);
}

LabeledOperator adjoint_map(const LinearMap& map, const LabeledOperator& y, const SystemList& variable_systems) {
  return std::visit(Overloaded{
                        [&](const TraceExtend&) { return trace_extend(y, variable_systems); },
                        [&](const InnerProduct& m) { return m.g.adjoint() * y.matrix()(0, 0); },
                        [&](const ScaleOperator& m) {
                          return LabeledOperator::scalar((m.g.matrix().conjugate().cwiseProduct(y.matrix())).sum());
                        },
                    },
                    map);
}

LabeledOperator constraint_lhs(const SdpProblem& p, const Constraint& c, const Assignment& x) {
  LabeledOperator acc = LabeledOperator::zero(c.systems);
  for (const auto& t : c.terms) {
    const auto i = p.variable_index(t.variable);
    if (!i) throw BuildError("unknown variable '" + t.variable + "'");
    acc += apply_map(t.map, x.at(*i), c.systems) * t.coeff;
  }
  return acc;
}

double objective_value(const SdpProblem& p, const Assignment& x) {
  double v = p.objective_constant;
  for (const auto& o : p.objective) {
    const auto i = p.variable_index(o.variable);
    if (!i) throw BuildError("unknown variable '" + o.variable + "'");
    v += inner_product(o.g, x.at(*i));
  }
  return v;
}

double max_violation(const SdpProblem& p, const Assignment& x) {
  double worst = 0.0;
  for (const auto& c : p.constraints) {
    const LabeledOperator diff = constraint_lhs(p, c, x) - c.rhs;
    switch (c.relation) {
      case Relation::eq: worst = std::max(worst, diff.matrix().cwiseAbs().maxCoeff()); break;
      case Relation::ge: worst = std::max(worst, -min_eigenvalue(diff)); break;
      case Relation::le: worst = std::max(worst, -min_eigenvalue(diff * -1.0)); break;
    }
  }
  for (std::size_t i = 0; i < p.variables.size(); ++i) {
    const auto& v = p.variables[i];
    const auto& m = x.at(i).matrix();
    switch (v.cone) {
      case Cone::psd: worst = std::max(worst, -min_eigenvalue(x[i])); break;
      case Cone::hermitian_free: worst = std::max(worst, (m - m.adjoint()).cwiseAbs().maxCoeff()); break;
      case Cone::nonneg: worst = std::max(worst, -m(0, 0).real()); break;
      case Cone::free: break;
    }
  }
  return worst;
}

}  // namespace qstrat
