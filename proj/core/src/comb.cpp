#include "qstrat/comb.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "qstrat/errors.hpp"

namespace qstrat {
namespace {

using Index = Eigen::Index;

void append(SystemList& dst, const SystemList& src) { dst.insert(dst.end(), src.begin(), src.end()); }

SystemList renamed_group(const SystemList& group, const std::string& prefix, std::size_t round) {
  SystemList out;
  for (std::size_t j = 0; j < group.size(); ++j) {
    std::string name = prefix + std::to_string(round);
    if (group.size() > 1) name += "_" + std::to_string(j + 1);
    out.push_back({std::move(name), group[j].dim});
  }
  return out;
}

// Uniform double in (0, 1] from the top 53 bits.
double uniform_open(std::mt19937_64& gen) {
  return (static_cast<double>(gen() >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

SystemList RoundStructure::canonical_systems() const { return rounds_upto(n()); }

SystemList RoundStructure::rounds_upto(std::size_t k) const {
  if (k > n()) throw DomainError("round index out of range");
  SystemList out;
  for (std::size_t i = 0; i < k; ++i) {
    append(out, inputs[i]);
    append(out, outputs[i]);
  }
  return out;
}

SystemList RoundStructure::upto_input(std::size_t k) const {
  if (k < 1 || k > n()) throw DomainError("round index out of range");
  SystemList out = rounds_upto(k - 1);
  append(out, inputs[k - 1]);
  return out;
}

void RoundStructure::validate() const {
  if (inputs.empty()) throw DomainError("a strategy needs at least one round");
  if (inputs.size() != outputs.size()) throw DomainError("input and output round counts differ");
  for (std::size_t i = 0; i < n(); ++i) {
    if (inputs[i].empty() || outputs[i].empty()) {
      throw DomainError("round " + std::to_string(i + 1) + " has an empty system group");
    }
  }
  validate_systems(canonical_systems());
}

StrategyChoi::StrategyChoi(RoundStructure r, LabeledOperator o) : rounds(std::move(r)), op(std::move(o)) {
  rounds.validate();
  if (op.systems() != rounds.canonical_systems()) {
    throw LabelingError("strategy operator systems do not follow the round structure");
  }
}

RoundStructure one_turn(std::size_t dim_in, std::size_t dim_out) {
  RoundStructure r;
  r.inputs.push_back({{"A1", dim_in}});
  r.outputs.push_back({{"B1", dim_out}});
  return r;
}

StrategyChoi gadc_choi(const GadcParams& p) {
  const double g = p.gamma;
  const double nn = p.noise;
  if (!(g >= 0.0 && g <= 1.0)) throw DomainError("GADC damping must lie in [0, 1]");
  if (!(nn >= 0.0 && nn <= 1.0)) throw DomainError("GADC noise must lie in [0, 1]");
  const double s = std::sqrt(1.0 - g);
  CMatrix m = CMatrix::Zero(4, 4);
  m(0, 0) = 1.0 - g * nn;
  m(0, 3) = s;
  m(1, 1) = g * nn;
  m(2, 2) = g * (1.0 - nn);
  m(3, 0) = s;
  m(3, 3) = 1.0 - g * (1.0 - nn);
  auto r = one_turn(2, 2);
  return {r, LabeledOperator(r.canonical_systems(), std::move(m))};
}

StrategyChoi identity_choi(std::size_t d) {
  if (d < 1) throw DomainError("identity channel needs d >= 1");
  const auto dd = static_cast<Index>(d);
  CMatrix m = CMatrix::Zero(dd * dd, dd * dd);
  for (Index i = 0; i < dd; ++i) {
    for (Index j = 0; j < dd; ++j) m(i * dd + i, j * dd + j) = 1.0;
  }
  auto r = one_turn(d, d);
  return {r, LabeledOperator(r.canonical_systems(), std::move(m))};
}

StrategyChoi preparation_choi(const CMatrix& state) {
  if (state.rows() != state.cols() || state.rows() == 0) throw DomainError("state must be square");
  if ((state - state.adjoint()).cwiseAbs().maxCoeff() > kKernelTol) {
    throw DomainError("state is not Hermitian");
  }
  if (std::abs(state.trace() - Complex(1.0)) > kKernelTol) throw DomainError("state trace is not 1");
  auto r = one_turn(1, static_cast<std::size_t>(state.rows()));
  LabeledOperator op(r.canonical_systems(), state);
  if (min_eigenvalue(op) < -kKernelTol) throw DomainError("state is not positive semidefinite");
  return {r, std::move(op)};
}

StrategyChoi replacement_choi(std::size_t d, std::size_t k) {
  if (d < 1) throw DomainError("replacement channel needs d >= 1");
  const CMatrix ket = basis_state(d, k);
  auto r = one_turn(d, d);
  auto op = kron(LabeledOperator::identity(r.inputs[0]), LabeledOperator(r.outputs[0], ket));
  return {r, std::move(op)};
}

CMatrix pi_state(double m) {
  if (!(m >= 1.0)) throw DomainError("pi_M needs M >= 1");
  CMatrix s = CMatrix::Zero(2, 2);
  s(0, 0) = 1.0 / m;
  s(1, 1) = 1.0 - 1.0 / m;
  return s;
}

CMatrix basis_state(std::size_t d, std::size_t k) {
  if (k >= d) throw DomainError("basis index out of range");
  CMatrix s = CMatrix::Zero(static_cast<Index>(d), static_cast<Index>(d));
  s(static_cast<Index>(k), static_cast<Index>(k)) = 1.0;
  return s;
}

StrategyChoi n_fold_sequential_choi(const StrategyChoi& channel, std::size_t n) {
  if (n < 1) throw DomainError("n must be at least 1");
  if (channel.rounds.n() != 1) throw DomainError("n-fold composition needs a one-turn channel");
  if (n == 1) return channel;
  RoundStructure r;
  LabeledOperator op = LabeledOperator::scalar(1.0);
  for (std::size_t k = 1; k <= n; ++k) {
    r.inputs.push_back(renamed_group(channel.rounds.inputs[0], "A", k));
    r.outputs.push_back(renamed_group(channel.rounds.outputs[0], "B", k));
    SystemList round_systems = r.inputs.back();
    append(round_systems, r.outputs.back());
    op = kron(op, channel.op.relabeled(std::move(round_systems)));
  }
  return {std::move(r), std::move(op)};
}

StrategyChoi tensor_power_choi(const StrategyChoi& channel, std::size_t n) {
  if (n < 1) throw DomainError("n must be at least 1");
  if (channel.rounds.n() != 1) throw DomainError("tensor power needs a one-turn channel");
  if (n == 1) return channel;
  const StrategyChoi seq = n_fold_sequential_choi(channel, n);
  RoundStructure r;
  r.inputs.emplace_back();
  r.outputs.emplace_back();
  for (std::size_t k = 0; k < n; ++k) {
    append(r.inputs[0], seq.rounds.inputs[k]);
    append(r.outputs[0], seq.rounds.outputs[k]);
  }
  const auto names = system_names(r.canonical_systems());
  LabeledOperator op = permute_systems(seq.op, std::span<const std::string>(names));
  return {std::move(r), std::move(op)};
}

std::optional<StrategyChoi> as_channel_power(const StrategyChoi& s) {
  const auto& r = s.rounds;
  const std::size_t n = r.n();
  if (n == 1) return s;
  std::vector<std::size_t> in_dims, out_dims;
  for (const auto& sys : r.inputs[0]) in_dims.push_back(sys.dim);
  for (const auto& sys : r.outputs[0]) out_dims.push_back(sys.dim);
  std::vector<std::string> later;
  double scale = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    if (r.inputs[k].size() != in_dims.size() || r.outputs[k].size() != out_dims.size()) return std::nullopt;
    for (std::size_t j = 0; j < in_dims.size(); ++j) {
      if (r.inputs[k][j].dim != in_dims[j]) return std::nullopt;
    }
    for (std::size_t j = 0; j < out_dims.size(); ++j) {
      if (r.outputs[k][j].dim != out_dims[j]) return std::nullopt;
    }
    for (const auto& sys : r.inputs[k]) later.push_back(sys.name);
    for (const auto& sys : r.outputs[k]) later.push_back(sys.name);
    scale *= static_cast<double>(r.input_dim(k));
  }
  LabeledOperator base = partial_trace(s.op, std::span<const std::string>(later)) * (1.0 / scale);
  RoundStructure br;
  br.inputs.push_back(r.inputs[0]);
  br.outputs.push_back(r.outputs[0]);
  StrategyChoi channel(br, std::move(base));
  const StrategyChoi rebuilt = n_fold_sequential_choi(channel, n);
  const double size = std::max(1.0, s.op.matrix().cwiseAbs().maxCoeff());
  if ((rebuilt.op.matrix() - s.op.matrix()).cwiseAbs().maxCoeff() > kConstructionTol * size) {
    return std::nullopt;
  }
  return channel;
}

LabeledOperator link_product(const LabeledOperator& a, const LabeledOperator& b) {
  std::vector<std::string> shared, a_rest, b_rest;
  SystemList out_systems;
  for (const auto& sys : a.systems()) {
    const auto p = b.position(sys.name);
    if (p >= 0) {
      if (b.systems()[static_cast<std::size_t>(p)].dim != sys.dim) {
        throw LabelingError("link product: dimension mismatch on '" + sys.name + "'");
      }
      shared.push_back(sys.name);
    } else {
      a_rest.push_back(sys.name);
      out_systems.push_back(sys);
    }
  }
  for (const auto& sys : b.systems()) {
    if (!a.has_system(sys.name)) {
      b_rest.push_back(sys.name);
      out_systems.push_back(sys);
    }
  }
  std::vector<std::string> a_order = a_rest;
  a_order.insert(a_order.end(), shared.begin(), shared.end());
  std::vector<std::string> b_order = shared;
  b_order.insert(b_order.end(), b_rest.begin(), b_rest.end());
  const CMatrix am = permute_systems(a, std::span<const std::string>(a_order)).matrix();
  const CMatrix bm = permute_systems(b, std::span<const std::string>(b_order)).matrix();

  std::size_t shared_dim = 1;
  for (const auto& name : shared) shared_dim *= a.systems()[static_cast<std::size_t>(a.position(name))].dim;
  const auto ds = static_cast<Index>(shared_dim);
  const Index da = am.rows() / ds;
  const Index db = bm.rows() / ds;

  // out[(i,k),(j,l)] = sum_{s,t} a[(i,s),(j,t)] b[(s,k),(t,l)] as a GEMM over
  // rows (i,j) x (s,t) times (s,t) x (k,l).
  CMatrix lhs(da * da, ds * ds);
  for (Index t = 0; t < ds; ++t) {
    for (Index s = 0; s < ds; ++s) {
      for (Index j = 0; j < da; ++j) {
        for (Index i = 0; i < da; ++i) lhs(i * da + j, s * ds + t) = am(i * ds + s, j * ds + t);
      }
    }
  }
  CMatrix rhs(ds * ds, db * db);
  for (Index l = 0; l < db; ++l) {
    for (Index k = 0; k < db; ++k) {
      for (Index t = 0; t < ds; ++t) {
        for (Index s = 0; s < ds; ++s) rhs(s * ds + t, k * db + l) = bm(s * db + k, t * db + l);
      }
    }
  }
  const CMatrix prod = lhs * rhs;
  CMatrix out(da * db, da * db);
  for (Index l = 0; l < db; ++l) {
    for (Index j = 0; j < da; ++j) {
      for (Index k = 0; k < db; ++k) {
        for (Index i = 0; i < da; ++i) out(i * db + k, j * db + l) = prod(i * da + j, k * db + l);
      }
    }
  }
  return {std::move(out_systems), std::move(out)};
}

CombReport verify_comb(const StrategyChoi& s, double tol) {
  const auto& r = s.rounds;
  const std::size_t n = r.n();
  CombReport rep;
  rep.residuals.assign(n, 0.0);
  rep.min_eigenvalues.assign(n, 0.0);
  LabeledOperator level = s.op;
  for (std::size_t i = n; i >= 1; --i) {
    rep.min_eigenvalues[i - 1] = min_eigenvalue(level);
    const auto outs = system_names(r.outputs[i - 1]);
    const LabeledOperator t = partial_trace(level, std::span<const std::string>(outs));
    if (i == 1) {
      const LabeledOperator id = LabeledOperator::identity(t.systems());
      rep.residuals[0] = (t.matrix() - id.matrix()).cwiseAbs().maxCoeff();
      break;
    }
    const auto ins = system_names(r.inputs[i - 1]);
    const LabeledOperator prev =
        partial_trace(t, std::span<const std::string>(ins)) * (1.0 / static_cast<double>(r.input_dim(i - 1)));
    const LabeledOperator extended = kron(prev, LabeledOperator::identity(r.inputs[i - 1]));
    rep.residuals[i - 1] = (t.matrix() - extended.matrix()).cwiseAbs().maxCoeff();
    level = prev;
  }
  rep.pass = true;
  for (std::size_t k = 0; k < n; ++k) {
    if (!(rep.residuals[k] <= tol) || !(rep.min_eigenvalues[k] >= -tol)) rep.pass = false;
  }
  return rep;
}

StrategyChoi random_channel_choi(std::size_t dim_a, std::size_t dim_b, std::uint64_t seed) {
  if (dim_a < 1 || dim_b < 1) throw DomainError("random channel dimensions must be >= 1");
  const auto da = static_cast<Index>(dim_a);
  const auto db = static_cast<Index>(dim_b);
  const Index de = da * db;
  std::mt19937_64 gen(seed);
  // Columns of v are images of the input basis in B ⊗ E (B most significant).
  CMatrix v(db * de, da);
  constexpr double two_pi = 6.283185307179586476925286766559;
  for (Index c = 0; c < da; ++c) {
    for (Index r = 0; r < db * de; ++r) {
      const double u1 = uniform_open(gen);
      const double u2 = uniform_open(gen);
      const double rad = std::sqrt(-2.0 * std::log(u1));
      v(r, c) = Complex(rad * std::cos(two_pi * u2), rad * std::sin(two_pi * u2));
    }
  }
  // Modified Gram-Schmidt, two passes.
  for (Index c = 0; c < da; ++c) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Index p = 0; p < c; ++p) {
        const Complex proj = v.col(p).dot(v.col(c));
        v.col(c) -= proj * v.col(p);
      }
    }
    v.col(c).normalize();
  }
  // w[(i,b), e] = v[(b,e), i];  Choi = w w^H.
  CMatrix w(da * db, de);
  for (Index e = 0; e < de; ++e) {
    for (Index b = 0; b < db; ++b) {
      for (Index i = 0; i < da; ++i) w(i * db + b, e) = v(b * de + e, i);
    }
  }
  CMatrix g = w * w.adjoint();
  g = 0.5 * (g + g.adjoint()).eval();
  auto r = one_turn(dim_a, dim_b);
  return {r, LabeledOperator(r.canonical_systems(), std::move(g))};
}

}  // namespace qstrat
