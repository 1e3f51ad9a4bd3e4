#include "qstrat/programs.hpp"

#include <cmath>
#include <limits>

namespace qstrat {
namespace {

std::string indexed(const char* base, std::size_t k) { return std::string(base) + "[" + std::to_string(k) + "]"; }

const RoundStructure& common_rounds(const StrategyChoi& n, const StrategyChoi& m) {
  if (!(n.rounds == m.rounds)) throw DomainError("strategies have different round structures");
  n.rounds.validate();
  return n.rounds;
}

void check_epsilon(double eps, bool allow_one) {
  if (!(eps >= 0.0) || eps > 1.0 || (!allow_one && eps == 1.0)) {
    throw DomainError("epsilon " + std::to_string(eps) + " is out of range");
  }
}

LabeledOperator identity_on(const SystemList& s) { return LabeledOperator::identity(s); }
LabeledOperator zero_on(const SystemList& s) { return LabeledOperator::zero(s); }

Term extend(const std::string& v, double coeff = 1.0) { return Term{v, coeff, TraceExtend{}}; }

struct Builder {
  SdpProblem p;

  void var(const std::string& name, SystemList systems, Cone cone) {
    p.variables.push_back({name, std::move(systems), cone});
  }
  void constrain(const std::string& name, SystemList systems, std::vector<Term> terms, Relation rel,
                 LabeledOperator rhs) {
    p.constraints.push_back({name, std::move(systems), std::move(terms), rel, std::move(rhs)});
  }
  void constrain_zero(const std::string& name, const SystemList& systems, std::vector<Term> terms, Relation rel) {
    constrain(name, systems, std::move(terms), rel, zero_on(systems));
  }
  void objective(const std::string& v, LabeledOperator g) { p.objective.push_back({v, std::move(g)}); }
};

// S <= S[n] ⊗ I_Bn,  Tr_Ai S[i] = S[i-1] ⊗ I_B(i-1),  Tr S[1] = 1.
void add_costrategy_chain(Builder& b, const RoundStructure& r) {
  const std::size_t n = r.n();
  for (std::size_t i = n; i >= 1; --i) b.var(indexed("S", i), r.upto_input(i), Cone::psd);
  b.constrain_zero("S<=S[n]", r.canonical_systems(), {extend(indexed("S", n)), extend("S", -1.0)}, Relation::ge);
  for (std::size_t i = n; i >= 2; --i) {
    b.constrain_zero("chain[" + std::to_string(i) + "]", r.rounds_upto(i - 1),
                     {extend(indexed("S", i)), extend(indexed("S", i - 1), -1.0)}, Relation::eq);
  }
  b.constrain("normalization", {}, {extend(indexed("S", 1))}, Relation::eq, LabeledOperator::scalar(1.0));
}

// Y[i-1] ⊗ I_Ai >= Tr_Bi Y[i] for i = n..2.
void add_dual_chain(Builder& b, const RoundStructure& r, Cone inner_cone) {
  const std::size_t n = r.n();
  for (std::size_t i = n - 1; i >= 1; --i) b.var(indexed("Y", i), r.rounds_upto(i), inner_cone);
  for (std::size_t i = n; i >= 2; --i) {
    b.constrain_zero("chain[" + std::to_string(i) + "]", r.upto_input(i),
                     {extend(indexed("Y", i - 1)), extend(indexed("Y", i), -1.0)}, Relation::ge);
  }
}

// scalar I_A1 >= Tr_B1 Y[1].
void add_dual_top(Builder& b, const RoundStructure& r, const std::string& scalar) {
  const SystemList& a1 = r.inputs[0];
  b.constrain_zero("top", a1, {Term{scalar, 1.0, ScaleOperator{identity_on(a1)}}, extend("Y[1]", -1.0)},
                   Relation::ge);
}

}  // namespace

const char* to_string(Quantity q) {
  switch (q) {
    case Quantity::distance: return "distance";
    case Quantity::dmin: return "dmin";
    case Quantity::dmax: return "dmax";
  }
  return "distance";
}

const char* to_string(Mode m) { return m == Mode::adaptive ? "adaptive" : "parallel"; }

Quantity quantity_from_string(const std::string& s) {
  if (s == "distance") return Quantity::distance;
  if (s == "dmin") return Quantity::dmin;
  if (s == "dmax") return Quantity::dmax;
  throw ParseError("unknown quantity '" + s + "'", 0);
}

Mode mode_from_string(const std::string& s) {
  if (s == "adaptive") return Mode::adaptive;
  if (s == "parallel") return Mode::parallel;
  throw ParseError("unknown mode '" + s + "'", 0);
}

SdpProblem build_distance_primal(const StrategyChoi& nc, const StrategyChoi& mc) {
  const auto& r = common_rounds(nc, mc);
  Builder b;
  b.p.name = "distance_primal";
  b.p.sense = Sense::maximize;
  b.var("S", r.canonical_systems(), Cone::psd);
  add_costrategy_chain(b, r);
  b.objective("S", nc.op - mc.op);
  return b.p;
}

SdpProblem build_distance_dual(const StrategyChoi& nc, const StrategyChoi& mc) {
  const auto& r = common_rounds(nc, mc);
  const std::size_t n = r.n();
  Builder b;
  b.p.name = "distance_dual";
  b.p.sense = Sense::minimize;
  b.var("mu", {}, Cone::free);
  b.var(indexed("Y", n), r.canonical_systems(), Cone::psd);
  b.constrain("Y[n]>=diff", r.canonical_systems(), {extend(indexed("Y", n))}, Relation::ge, nc.op - mc.op);
  add_dual_chain(b, r, Cone::hermitian_free);
  add_dual_top(b, r, "mu");
  b.objective("mu", LabeledOperator::scalar(1.0));
  return b.p;
}

SdpProblem build_distance_gw(const StrategyChoi& nc, const StrategyChoi& mc) {
  const auto& r = common_rounds(nc, mc);
  const std::size_t n = r.n();
  Builder b;
  b.p.name = "distance_gw";
  b.p.sense = Sense::maximize;
  const SystemList full = r.canonical_systems();
  b.var("T0", full, Cone::psd);
  b.var("T1", full, Cone::psd);
  for (std::size_t i = n; i >= 1; --i) b.var(indexed("T", i), r.upto_input(i), Cone::psd);
  b.constrain_zero("T0+T1", full, {extend("T0"), extend("T1"), extend(indexed("T", n), -1.0)}, Relation::eq);
  for (std::size_t i = n; i >= 2; --i) {
    b.constrain_zero("chain[" + std::to_string(i) + "]", r.rounds_upto(i - 1),
                     {extend(indexed("T", i)), extend(indexed("T", i - 1), -1.0)}, Relation::eq);
  }
  b.constrain("normalization", {}, {extend(indexed("T", 1))}, Relation::eq, LabeledOperator::scalar(1.0));
  const LabeledOperator diff = nc.op - mc.op;
  b.objective("T0", diff);
  b.objective("T1", diff * -1.0);
  return b.p;
}

SdpProblem build_dmin_primal(const StrategyChoi& nc, const StrategyChoi& mc, double eps) {
  check_epsilon(eps, false);
  const auto& r = common_rounds(nc, mc);
  Builder b;
  b.p.name = "dmin_primal";
  b.p.sense = Sense::minimize;
  b.var("S", r.canonical_systems(), Cone::psd);
  add_costrategy_chain(b, r);
  b.constrain("success", {}, {Term{"S", 1.0, InnerProduct{nc.op}}}, Relation::ge, LabeledOperator::scalar(1.0 - eps));
  b.objective("S", mc.op);
  return b.p;
}

SdpProblem build_dmin_dual(const StrategyChoi& nc, const StrategyChoi& mc, double eps) {
  check_epsilon(eps, false);
  const auto& r = common_rounds(nc, mc);
  const std::size_t n = r.n();
  Builder b;
  b.p.name = "dmin_dual";
  b.p.sense = Sense::maximize;
  b.var("mu1", {}, Cone::nonneg);
  b.var("mu2", {}, Cone::free);
  b.var(indexed("Y", n), r.canonical_systems(), Cone::psd);
  b.constrain("Y[n]>=mu1*N-M", r.canonical_systems(),
              {extend(indexed("Y", n)), Term{"mu1", -1.0, ScaleOperator{nc.op}}}, Relation::ge, mc.op * -1.0);
  add_dual_chain(b, r, Cone::hermitian_free);
  add_dual_top(b, r, "mu2");
  b.objective("mu1", LabeledOperator::scalar(1.0 - eps));
  b.objective("mu2", LabeledOperator::scalar(-1.0));
  return b.p;
}

SdpProblem build_dmax_primal(const StrategyChoi& nc, const StrategyChoi& mc, double eps) {
  check_epsilon(eps, true);
  const auto& r = common_rounds(nc, mc);
  const std::size_t n = r.n();
  const SystemList full = r.canonical_systems();
  Builder b;
  b.p.name = "dmax_primal";
  b.p.sense = Sense::minimize;
  b.var("lambda", {}, Cone::free);
  b.objective("lambda", LabeledOperator::scalar(1.0));
  if (eps == 0.0) {
    // Without smoothing the comb N must equal ΓN, which leaves no interior.
    b.constrain("N<=lambda*M", full, {Term{"lambda", 1.0, ScaleOperator{mc.op}}}, Relation::ge, nc.op);
    return b.p;
  }
  b.var("N", full, Cone::psd);
  for (std::size_t i = n - 1; i >= 1; --i) b.var(indexed("N", i), r.rounds_upto(i), Cone::psd);
  b.var(indexed("Y", n), full, Cone::psd);
  b.constrain("N<=lambda*M", full, {Term{"lambda", 1.0, ScaleOperator{mc.op}}, extend("N", -1.0)}, Relation::ge,
              zero_on(full));
  b.constrain("Y[n]>=N-N", full, {extend(indexed("Y", n)), extend("N")}, Relation::ge, nc.op);
  add_dual_chain(b, r, Cone::psd);
  b.constrain("top", r.inputs[0], {extend("Y[1]")}, Relation::le, identity_on(r.inputs[0]) * eps);
  for (std::size_t i = n; i >= 1; --i) {
    const std::string upper = i == n ? std::string("N") : indexed("N", i);
    std::vector<Term> terms{extend(upper)};
    LabeledOperator rhs = zero_on(r.upto_input(i));
    if (i > 1) {
      terms.push_back(extend(indexed("N", i - 1), -1.0));
    } else {
      rhs = identity_on(r.upto_input(1));
    }
    b.constrain("comb[" + std::to_string(i) + "]", r.upto_input(i), std::move(terms), Relation::eq, std::move(rhs));
  }
  return b.p;
}

SdpProblem build_dmax_dual(const StrategyChoi& nc, const StrategyChoi& mc, double eps) {
  check_epsilon(eps, true);
  const auto& r = common_rounds(nc, mc);
  const std::size_t n = r.n();
  const SystemList full = r.canonical_systems();
  Builder b;
  b.p.name = "dmax_dual";
  b.p.sense = Sense::maximize;
  if (eps == 0.0) {
    b.var("W", full, Cone::psd);
    b.constrain("budget", {}, {Term{"W", 1.0, InnerProduct{mc.op}}}, Relation::le, LabeledOperator::scalar(1.0));
    b.objective("W", nc.op);
    return b.p;
  }
  b.var(indexed("W", n + 2), full, Cone::psd);
  b.var(indexed("W", n + 1), full, Cone::psd);
  for (std::size_t i = n; i >= 1; --i) b.var(indexed("W", i), r.upto_input(i), Cone::psd);
  for (std::size_t i = n; i >= 1; --i) b.var(indexed("X", i), r.upto_input(i), Cone::hermitian_free);
  b.constrain("budget", {}, {Term{indexed("W", n + 2), 1.0, InnerProduct{mc.op}}}, Relation::le,
              LabeledOperator::scalar(1.0));
  b.constrain_zero("W[n+2]>=W[n+1]+X[n]", full,
                   {extend(indexed("W", n + 2)), extend(indexed("W", n + 1), -1.0), extend(indexed("X", n), -1.0)},
                   Relation::ge);
  b.constrain_zero("W[n]>=W[n+1]", full, {extend(indexed("W", n)), extend(indexed("W", n + 1), -1.0)}, Relation::ge);
  for (std::size_t i = n; i >= 2; --i) {
    b.constrain_zero("W-chain[" + std::to_string(i) + "]", r.rounds_upto(i - 1),
                     {extend(indexed("W", i - 1)), extend(indexed("W", i), -1.0)}, Relation::ge);
    b.constrain_zero("X-chain[" + std::to_string(i) + "]", r.rounds_upto(i - 1),
                     {extend(indexed("X", i)), extend(indexed("X", i - 1), -1.0)}, Relation::ge);
  }
  b.objective(indexed("W", n + 1), nc.op);
  b.objective(indexed("W", 1), identity_on(r.upto_input(1)) * -eps);
  b.objective(indexed("X", 1), identity_on(r.upto_input(1)));
  return b.p;
}

SdpProblem build_primal(Quantity q, const StrategyChoi& n, const StrategyChoi& m, double eps) {
  switch (q) {
    case Quantity::distance: return build_distance_primal(n, m);
    case Quantity::dmin: return build_dmin_primal(n, m, eps);
    case Quantity::dmax: return build_dmax_primal(n, m, eps);
  }
  throw DomainError("unknown quantity");
}

SdpProblem build_dual(Quantity q, const StrategyChoi& n, const StrategyChoi& m, double eps) {
  switch (q) {
    case Quantity::distance: return build_distance_dual(n, m);
    case Quantity::dmin: return build_dmin_dual(n, m, eps);
    case Quantity::dmax: return build_dmax_dual(n, m, eps);
  }
  throw DomainError("unknown quantity");
}

ProgramSolution solve_program(const SdpProblem& p, const EvaluateOptions& o) {
  ProgramSolution s;
  s.orientation = o.orientation;
  if (o.orientation == Orientation::dual) {
    s.dual_form = lower_to_dual_form(p, o.lowering);
    s.report = solve(s.dual_form.sdp, o.solver);
    s.value = s.dual_form.problem_value(s.report.dual_value);
    s.bound = s.dual_form.problem_value(s.report.primal_value);
    return s;
  }
  s.lowered = lower_to_standard(p, o.lowering);
  s.report = solve(s.lowered.sdp, o.solver);
  s.value = s.lowered.problem_value(s.report.primal_value);
  s.bound = s.lowered.problem_value(s.report.dual_value);
  return s;
}

Assignment ProgramSolution::assignment() const {
  if (orientation == Orientation::dual) return dual_form.recover(report.y);
  return lowered.recover(report.x);
}

int QuantityResult::total_iterations() const {
  return solver.iterations + (dual_solver ? dual_solver->iterations : 0);
}

double reported_value(Quantity q, double raw) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (q) {
    case Quantity::distance: return raw;
    case Quantity::dmin: return raw < kDminFloor ? inf : -std::log2(raw);
    case Quantity::dmax: return raw > kDmaxCeiling ? inf : std::log2(std::max(raw, 0.0));
  }
  return raw;
}

namespace {

// In dual form the y of each program is a feasible structured point, so its
// objective bounds the optimum on its own side; with both programs solved,
// weak duality between them certifies the value even when the multiplier
// side of a solve broke down.
bool usable_solve(const SolveReport& r, const EvaluateOptions& o) {
  if (solved(r.status)) return true;
  return o.orientation == Orientation::dual && o.solve_dual_program &&
         (r.status == SolveStatus::numerical_failure || r.status == SolveStatus::max_iters) &&
         r.dual_residual <= o.solver.feas_tol;
}

}  // namespace

QuantityResult evaluate(Quantity q, const StrategyChoi& n, const StrategyChoi& m, double eps, Mode mode,
                        const EvaluateOptions& o) {
  if (q == Quantity::dmin) check_epsilon(eps, false);
  if (q != Quantity::dmin) check_epsilon(eps, true);
  const StrategyChoi* pn = &n;
  const StrategyChoi* pm = &m;
  StrategyChoi tn, tm;
  if (mode == Mode::parallel) {
    const auto cn = as_channel_power(n);
    const auto cm = as_channel_power(m);
    if (!cn || !cm) throw DomainError("parallel mode needs n-fold uses of one channel");
    tn = tensor_power_choi(*cn, n.rounds.n());
    tm = tensor_power_choi(*cm, m.rounds.n());
    pn = &tn;
    pm = &tm;
  }

  QuantityResult res;
  res.quantity = q;
  res.mode = mode;
  res.epsilon = eps;
  const auto primal = solve_program(build_primal(q, *pn, *pm, eps), o);
  res.solver = primal.report;
  res.primal_value = primal.value;
  res.dual_value = primal.bound;
  if (o.solve_dual_program) {
    const auto dual = solve_program(build_dual(q, *pn, *pm, eps), o);
    res.dual_solver = dual.report;
    res.dual_value = dual.value;
  }
  res.gap = std::abs(res.primal_value - res.dual_value);
  const double mid = 0.5 * (res.primal_value + res.dual_value);
  constexpr double inf = std::numeric_limits<double>::infinity();

  auto usable = [&](const SolveReport& r) { return usable_solve(r, o); };

  // Rank-deficient ΓM: no finite lambda exists, so the primal is infeasible
  // and the dual unbounded.
  const bool dmax_unbounded =
      q == Quantity::dmax &&
      (primal.report.status == SolveStatus::infeasible_certificate ||
       (res.dual_solver && res.dual_solver->status == SolveStatus::infeasible_certificate) ||
       (usable(primal.report) && res.primal_value > kDmaxCeiling));
  if (dmax_unbounded) {
    res.value = inf;
    return res;
  }

  auto fail = [&](const std::string& why) {
    res.value = reported_value(q, mid);
    throw SolveError(std::string(to_string(q)) + " (" + to_string(mode) + "): " + why, res);
  };
  if (!usable(res.solver)) {
    fail(std::string("primal solve ended with ") + to_string(res.solver.status) + ": " + res.solver.message);
  }
  if (res.dual_solver && !usable(*res.dual_solver)) {
    fail(std::string("dual solve ended with ") + to_string(res.dual_solver->status) + ": " +
         res.dual_solver->message);
  }
  if (res.gap > o.gap_tolerance * (1.0 + std::abs(res.primal_value))) {
    fail("duality gap " + std::to_string(res.gap) + " exceeds tolerance");
  }

  res.value = reported_value(q, mid);
  return res;
}

StrategyChoi exact_cost_comb_at(const StrategyChoi& n, const StrategyChoi& m, double lambda) {
  common_rounds(n, m);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("exact cost comb needs a finite positive lambda, got " + std::to_string(lambda));
  }
  const double scale = std::exp2(lambda);
  return {n.rounds, (m.op * scale - n.op) * (1.0 / (scale - 1.0))};
}

StrategyChoi exact_cost_comb(const StrategyChoi& n, const StrategyChoi& m, const EvaluateOptions& o) {
  const auto r = evaluate(Quantity::dmax, n, m, 0.0, Mode::adaptive, o);
  // Below the evaluation accuracy the strategies are indistinguishable.
  if (r.value <= o.gap_tolerance) throw DomainError("strategies are identical; the exact cost comb is degenerate");
  return exact_cost_comb_at(n, m, r.value);
}

}  // namespace qstrat
