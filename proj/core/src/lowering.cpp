#include "qstrat/lowering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iterator>
#include <set>
#include <map>
#include <unordered_map>
#include <utility>

#include "qstrat/errors.hpp"

namespace qstrat {
namespace {

using Eigen::Index;

// Coordinate of the standard-form variable: kind (2 bits) | block (14) | row (24) | col (24).
using Key = std::uint64_t;
constexpr std::uint64_t kPsd = 0, kNonneg = 1, kFree = 2;

Key make_key(std::uint64_t kind, std::uint64_t block, std::uint64_t r, std::uint64_t c) {
  return (kind << 62) | (block << 48) | (r << 24) | c;
}
std::uint64_t key_kind(Key k) { return k >> 62; }
std::uint32_t key_block(Key k) { return static_cast<std::uint32_t>((k >> 48) & 0x3fff); }
std::uint32_t key_row(Key k) { return static_cast<std::uint32_t>((k >> 24) & 0xffffff); }
std::uint32_t key_col(Key k) { return static_cast<std::uint32_t>(k & 0xffffff); }

using SparseRow = std::vector<std::pair<Key, double>>;

std::size_t tri_index(std::size_t r, std::size_t c) { return c * (c + 1) / 2 + r; }
std::size_t strict_index(std::size_t r, std::size_t c) { return c * (c - 1) / 2 + r; }

std::size_t free_width(std::size_t d, bool complex_mode) {
  return complex_mode ? d * d : d * (d + 1) / 2;
}

// Appends the coefficients of X -> scale * Re Tr[G X] on `slot` (G Hermitian).
void add_functional(const VariableSlot& slot, const CMatrix& g, double scale, bool complex_mode, SparseRow& out) {
  const Index d = g.rows();
  auto re_sym = [&](Index r, Index c) { return 0.5 * (g(r, c).real() + g(c, r).real()); };
  auto im_sym = [&](Index r, Index c) { return 0.5 * (g(r, c).imag() - g(c, r).imag()); };
  auto push = [&](std::uint64_t kind, std::size_t block, std::size_t r, std::size_t c, double v) {
    if (v != 0.0) out.emplace_back(make_key(kind, block, r, c), scale * v);
  };
  switch (slot.kind) {
    case SlotKind::nonneg: push(kNonneg, 0, 0, slot.offset, g(0, 0).real()); break;
    case SlotKind::free_scalar: push(kFree, 0, 0, slot.offset, g(0, 0).real()); break;
    case SlotKind::psd_block:
      for (Index c = 0; c < d; ++c) {
        for (Index r = 0; r <= c; ++r) {
          const double re = re_sym(r, c);
          if (!complex_mode) {
            push(kPsd, slot.offset, r, c, re);
          } else {
            push(kPsd, slot.offset, r, c, 0.5 * re);
            push(kPsd, slot.offset, r + d, c + d, 0.5 * re);
          }
        }
      }
      if (complex_mode) {
        // Upper-right block of realify(G)/2 is -Im(G)/2; the diagonal of Im(G) vanishes.
        for (Index c = 0; c < d; ++c) {
          for (Index r = 0; r < d; ++r) {
            if (r == c) continue;
            push(kPsd, slot.offset, r, c + d, -0.5 * im_sym(r, c));
          }
        }
      }
      break;
    case SlotKind::free_hermitian: {
      const auto du = static_cast<std::size_t>(d);
      for (Index c = 0; c < d; ++c) {
        for (Index r = 0; r <= c; ++r) {
          const double w = r == c ? 1.0 : 2.0;
          push(kFree, 0, 0, slot.offset + tri_index(r, c), w * re_sym(r, c));
          if (complex_mode && r < c) {
            push(kFree, 0, 0, slot.offset + du * (du + 1) / 2 + strict_index(r, c), 2.0 * im_sym(r, c));
          }
        }
      }
      break;
    }
  }
}

void merge(SparseRow& row) {
  std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseRow out;
  for (const auto& e : row) {
    if (!out.empty() && out.back().first == e.first) {
      out.back().second += e.second;
    } else {
      out.push_back(e);
    }
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const auto& e) { return e.second == 0.0; }), out.end());
  row = std::move(out);
}

ConstraintRow to_constraint_row(const SparseRow& row) {
  ConstraintRow r;
  for (const auto& [k, v] : row) {
    switch (key_kind(k)) {
      case kPsd: r.psd.push_back({key_block(k), key_row(k), key_col(k), v}); break;
      case kNonneg: r.nonneg.push_back({key_col(k), v}); break;
      default: r.free.push_back({key_col(k), v}); break;
    }
  }
  return r;
}

// Unit Hermitian functional picking Re Y_rc or Im Y_rc.
CMatrix unit_functional(std::size_t d, const RowOrigin& o) {
  CMatrix e = CMatrix::Zero(static_cast<Index>(d), static_cast<Index>(d));
  const auto r = static_cast<Index>(o.row);
  const auto c = static_cast<Index>(o.col);
  if (r == c) {
    e(r, r) = 1.0;
  } else if (!o.imaginary) {
    e(r, c) = 0.5;
    e(c, r) = 0.5;
  } else {
    e(r, c) = Complex(0.0, 0.5);
    e(c, r) = Complex(0.0, -0.5);
  }
  return e;
}

struct PresolveResult {
  std::vector<bool> keep;
};

// Keeps a maximal independent subset of rows (earliest rows preferred).
PresolveResult presolve(const std::vector<SparseRow>& rows, const std::vector<double>& b,
                        const std::vector<RowOrigin>& origins, double tol) {
  const std::size_t m = rows.size();
  PresolveResult res;
  res.keep.assign(m, false);
  double b_scale = 1.0;
  for (double v : b) b_scale = std::max(b_scale, std::abs(v));

  std::vector<bool> active(m, true);
  for (std::size_t i = 0; i < m; ++i) {
    if (rows[i].empty()) {
      active[i] = false;
      if (std::abs(b[i]) > 1e-9 * b_scale) {
        throw BuildError("constraint " + std::to_string(origins[i].constraint) +
                         " requires 0 = " + std::to_string(b[i]));
      }
    }
  }

  // Peel rows owning a coordinate no other active row touches.
  std::unordered_map<Key, std::vector<std::size_t>> touching;
  for (std::size_t i = 0; i < m; ++i) {
    if (!active[i]) continue;
    for (const auto& e : rows[i]) touching[e.first].push_back(i);
  }
  std::unordered_map<Key, std::size_t> count;
  for (const auto& [k, list] : touching) count[k] = list.size();
  std::deque<std::size_t> queue;
  for (const auto& [k, list] : touching) {
    if (list.size() == 1) queue.push_back(list.front());
  }
  std::sort(queue.begin(), queue.end());
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    if (!active[i]) continue;
    active[i] = false;
    res.keep[i] = true;
    for (const auto& e : rows[i]) {
      if (--count[e.first] == 1) {
        for (std::size_t j : touching[e.first]) {
          if (active[j]) queue.push_back(j);
        }
      }
    }
  }

  // Gram-Schmidt on what is left.
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < m; ++i) {
    if (active[i]) rest.push_back(i);
  }
  if (rest.empty()) return res;
  std::unordered_map<Key, Index> coord;
  for (std::size_t i : rest) {
    for (const auto& e : rows[i]) coord.try_emplace(e.first, static_cast<Index>(coord.size()));
  }
  const auto n = static_cast<Index>(coord.size());
  std::vector<Eigen::VectorXd> basis;
  std::vector<double> basis_b;
  for (std::size_t i : rest) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (const auto& e : rows[i]) v(coord[e.first]) = e.second;
    double beta = b[i];
    const double norm0 = v.norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < basis.size(); ++j) {
        const double coef = basis[j].dot(v);
        v -= coef * basis[j];
        beta -= coef * basis_b[j];
      }
    }
    const double norm = v.norm();
    if (norm <= tol * norm0) {
      if (std::abs(beta) > 1e-8 * b_scale) {
        throw BuildError("constraint " + std::to_string(origins[i].constraint) +
                         " is inconsistent with the other equalities");
      }
      continue;
    }
    basis.push_back(v / norm);
    basis_b.push_back(beta / norm);
    res.keep[i] = true;
  }
  return res;
}

CMatrix hermitian_from_coordinates(const Eigen::VectorXd& u, std::size_t offset, Index d, bool complex_mode) {
  CMatrix m(d, d);
  const auto du = static_cast<std::size_t>(d);
  for (Index c = 0; c < d; ++c) {
    for (Index r = 0; r <= c; ++r) {
      const double re = u(static_cast<Index>(offset + tri_index(r, c)));
      double im = 0.0;
      if (complex_mode && r < c) im = u(static_cast<Index>(offset + du * (du + 1) / 2 + strict_index(r, c)));
      m(r, c) = Complex(re, im);
      m(c, r) = Complex(re, -im);
    }
  }
  return m;
}

// Entries of one constraint: a row per upper-triangle entry (real and
// imaginary parts) over the coordinates of `slots`, with right-hand sides.
struct ConstraintRows {
  std::vector<SparseRow> rows;
  std::vector<double> b;
  std::vector<RowOrigin> origins;
};

ConstraintRows constraint_rows(const SdpProblem& p, std::size_t k, const std::vector<VariableSlot>& slots,
                               bool complex_mode, const VariableSlot* slack, double slack_coeff) {
  const auto& c = p.constraints[k];
  const std::size_t d = total_dim(c.systems);
  std::vector<std::pair<const VariableSlot*, Term>> terms;
  for (const auto& t : c.terms) terms.emplace_back(&slots[*p.variable_index(t.variable)], t);
  if (slack) {
    Term s;
    s.variable = slack->name;
    s.coeff = slack_coeff;
    terms.emplace_back(slack, s);
  }
  ConstraintRows out;
  for (std::size_t col = 0; col < d; ++col) {
    for (std::size_t row = 0; row <= col; ++row) {
      for (int part = 0; part < (complex_mode && row < col ? 2 : 1); ++part) {
        const RowOrigin origin{k, row, col, part == 1};
        const LabeledOperator e(c.systems, unit_functional(d, origin));
        SparseRow sr;
        for (const auto& [slot, t] : terms) {
          const LabeledOperator g = adjoint_map(t.map, e, slot->systems);
          add_functional(*slot, g.matrix(), t.coeff, complex_mode, sr);
        }
        merge(sr);
        const Complex rv = c.rhs.matrix()(static_cast<Index>(row), static_cast<Index>(col));
        out.rows.push_back(std::move(sr));
        out.b.push_back(origin.imaginary ? rv.imag() : rv.real());
        out.origins.push_back(origin);
      }
    }
  }
  return out;
}

// Pivot coordinate j of an equality row; the row then reads
// u_j = (rhs - sum of the other terms) / a.
struct Expression {
  double constant = 0.0;
  std::map<std::size_t, double> terms;  // over coordinates left free
};

struct Elimination {
  std::vector<Expression> expr;  // per coordinate
  std::size_t dropped = 0;
};

// Sparse elimination with threshold pivoting, choosing pivots that touch the
// fewest other rows first; the partial-trace chains of comb constraints then
// eliminate without fill.
Elimination eliminate(const std::vector<SparseRow>& rows, const std::vector<double>& b,
                      const std::vector<RowOrigin>& origins, std::size_t coords, double tol) {
  constexpr double kThreshold = 0.1;
  const std::size_t m = rows.size();
  std::vector<std::map<std::size_t, double>> r(m);
  std::vector<double> rhs = b;
  std::vector<std::set<std::size_t>> touching(coords);
  double b_scale = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    b_scale = std::max(b_scale, std::abs(b[i]));
    for (const auto& [key, a] : rows[i]) {
      r[i][key_col(key)] += a;
      touching[key_col(key)].insert(i);
    }
  }
  Elimination out;
  std::vector<bool> done(m, false);
  std::vector<std::pair<std::size_t, std::size_t>> order;  // (row, pivot)
  std::size_t remaining = m;
  auto retire = [&](std::size_t i) {
    for (const auto& e : r[i]) touching[e.first].erase(i);
    done[i] = true;
    --remaining;
  };
  auto drop_if_empty = [&](std::size_t i) {
    if (!r[i].empty()) return false;
    if (std::abs(rhs[i]) > 1e-9 * b_scale) {
      throw BuildError("constraint " + std::to_string(origins[i].constraint) + " requires 0 = " +
                       std::to_string(rhs[i]));
    }
    retire(i);
    ++out.dropped;
    return true;
  };

  std::size_t first = 0;
  while (remaining > 0) {
    std::size_t bi = m, bj = 0;
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = first; i < m && best > 0; ++i) {
      if (done[i]) {
        if (i == first) ++first;
        continue;
      }
      if (drop_if_empty(i)) continue;
      double row_max = 0.0;
      for (const auto& e : r[i]) row_max = std::max(row_max, std::abs(e.second));
      for (const auto& [j, a] : r[i]) {
        if (std::abs(a) < kThreshold * row_max) continue;
        const std::size_t cost = (r[i].size() - 1) * (touching[j].size() - 1);
        if (cost < best) {
          best = cost;
          bi = i;
          bj = j;
          if (cost == 0) break;
        }
      }
    }
    if (bi == m) break;
    const double ap = r[bi].at(bj);
    const std::vector<std::size_t> others(touching[bj].begin(), touching[bj].end());
    for (std::size_t s : others) {
      if (s == bi) continue;
      const double f = r[s].at(bj) / ap;
      for (const auto& [j, a] : r[bi]) {
        auto it = r[s].find(j);
        const double old = it == r[s].end() ? 0.0 : it->second;
        const double v = j == bj ? 0.0 : old - f * a;
        if (std::abs(v) <= tol * std::max(std::abs(old), std::abs(f * a))) {
          if (it != r[s].end()) {
            r[s].erase(it);
            touching[j].erase(s);
          }
        } else if (it == r[s].end()) {
          r[s].emplace(j, v);
          touching[j].insert(s);
        } else {
          it->second = v;
        }
      }
      rhs[s] -= f * rhs[bi];
    }
    order.emplace_back(bi, bj);
    retire(bi);
    for (std::size_t s : others) {
      if (s != bi && !done[s]) drop_if_empty(s);
    }
  }

  out.expr.resize(coords);
  std::vector<bool> solved(coords, false);
  for (const auto& [i, j] : order) solved[j] = true;
  for (std::size_t j = 0; j < coords; ++j) {
    if (!solved[j]) out.expr[j].terms.emplace(j, 1.0);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto [i, p] = *it;
    const double ap = r[i].at(p);
    Expression e;
    e.constant = rhs[i] / ap;
    for (const auto& [j, a] : r[i]) {
      if (j == p) continue;
      const auto& ej = out.expr[j];
      e.constant -= a / ap * ej.constant;
      for (const auto& [k, w] : ej.terms) e.terms[k] -= a / ap * w;
    }
    out.expr[p] = std::move(e);
  }
  return out;
}

}  // namespace

double LoweredProblem::problem_value(double standard_value) const {
  return (sense == Sense::maximize ? -standard_value : standard_value) + objective_constant;
}

Assignment LoweredProblem::recover(const ConicVector& x) const {
  Assignment out;
  out.reserve(slots.size());
  for (const auto& s : slots) {
    const auto d = static_cast<Index>(total_dim(s.systems));
    CMatrix m = CMatrix::Zero(d, d);
    switch (s.kind) {
      case SlotKind::nonneg: m(0, 0) = x.nonneg(static_cast<Index>(s.offset)); break;
      case SlotKind::free_scalar: m(0, 0) = x.free(static_cast<Index>(s.offset)); break;
      case SlotKind::psd_block: {
        const auto& r = x.psd[s.offset];
        if (!complex_mode) {
          m = r.cast<Complex>();
        } else {
          const Eigen::MatrixXd re = 0.5 * (r.topLeftCorner(d, d) + r.bottomRightCorner(d, d));
          const Eigen::MatrixXd im = 0.5 * (r.bottomLeftCorner(d, d) - r.topRightCorner(d, d));
          m.real() = re;
          m.imag() = im;
        }
        break;
      }
      case SlotKind::free_hermitian: m = hermitian_from_coordinates(x.free, s.offset, d, complex_mode); break;
    }
    out.emplace_back(s.systems, std::move(m));
  }
  return out;
}

ConicVector LoweredProblem::embed(const Assignment& values) const {
  if (values.size() != slots.size()) throw BuildError("embed needs one value per slot");
  ConicVector x = sdp.zero_vector();
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const auto& s = slots[k];
    const CMatrix& m = values[k].matrix();
    const Index d = m.rows();
    switch (s.kind) {
      case SlotKind::nonneg: x.nonneg(static_cast<Index>(s.offset)) = m(0, 0).real(); break;
      case SlotKind::free_scalar: x.free(static_cast<Index>(s.offset)) = m(0, 0).real(); break;
      case SlotKind::psd_block: {
        const CMatrix h = 0.5 * (m + m.adjoint());
        x.psd[s.offset] = complex_mode ? realify(h) : Eigen::MatrixXd(h.real());
        break;
      }
      case SlotKind::free_hermitian: {
        const auto du = static_cast<std::size_t>(d);
        for (Index c = 0; c < d; ++c) {
          for (Index r = 0; r <= c; ++r) {
            const Complex v = 0.5 * (m(r, c) + std::conj(m(c, r)));
            x.free(static_cast<Index>(s.offset + tri_index(r, c))) = v.real();
            if (complex_mode && r < c) {
              x.free(static_cast<Index>(s.offset + du * (du + 1) / 2 + strict_index(r, c))) = v.imag();
            }
          }
        }
        break;
      }
    }
  }
  return x;
}

Eigen::VectorXd LoweredProblem::extract_rows(const std::vector<LabeledOperator>& per_constraint) const {
  Eigen::VectorXd out(static_cast<Index>(origins.size()));
  for (std::size_t k = 0; k < origins.size(); ++k) {
    const auto& o = origins[k];
    const Complex v = per_constraint.at(o.constraint).matrix()(static_cast<Index>(o.row), static_cast<Index>(o.col));
    out(static_cast<Index>(k)) = o.imaginary ? v.imag() : v.real();
  }
  return out;
}

LoweredProblem lower_to_standard(const SdpProblem& p, const LoweringOptions& o) {
  p.validate();
  LoweredProblem lp;
  lp.complex_mode = !(o.allow_real && p.has_real_data());
  lp.sense = p.sense;
  lp.objective_constant = p.objective_constant;

  // Slots: user variables then one slack per inequality.
  for (const auto& v : p.variables) lp.slots.push_back({v.name, v.systems, v.cone, false});
  lp.user_variable_count = lp.slots.size();
  std::vector<std::ptrdiff_t> slack_of(p.constraints.size(), -1);
  for (std::size_t k = 0; k < p.constraints.size(); ++k) {
    const auto& c = p.constraints[k];
    if (c.relation == Relation::eq) continue;
    slack_of[k] = static_cast<std::ptrdiff_t>(lp.slots.size());
    lp.slots.push_back({"slack:" + c.name, c.systems, Cone::psd, true});
  }

  // Layout, optionally numbering slacks first.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < lp.slots.size(); ++i) {
    if (lp.slots[i].is_slack == o.slack_first) order.push_back(i);
  }
  for (std::size_t i = 0; i < lp.slots.size(); ++i) {
    if (lp.slots[i].is_slack != o.slack_first) order.push_back(i);
  }
  auto& sdp = lp.sdp;
  for (std::size_t i : order) {
    auto& s = lp.slots[i];
    const std::size_t d = total_dim(s.systems);
    switch (s.cone) {
      case Cone::psd:
        if (d == 1) {
          s.kind = SlotKind::nonneg;
          s.offset = sdp.nonneg_count++;
        } else {
          s.kind = SlotKind::psd_block;
          s.offset = sdp.psd_sides.size();
          sdp.psd_sides.push_back(lp.complex_mode ? 2 * d : d);
        }
        break;
      case Cone::nonneg:
        s.kind = SlotKind::nonneg;
        s.offset = sdp.nonneg_count++;
        break;
      case Cone::free:
        s.kind = SlotKind::free_scalar;
        s.offset = sdp.free_count++;
        break;
      case Cone::hermitian_free:
        if (d == 1) {
          s.kind = SlotKind::free_scalar;
          s.offset = sdp.free_count++;
        } else {
          s.kind = SlotKind::free_hermitian;
          s.offset = sdp.free_count;
          sdp.free_count += free_width(d, lp.complex_mode);
        }
        break;
    }
  }

  // Objective.
  sdp.c = sdp.zero_vector();
  {
    SparseRow obj;
    const double sign = p.sense == Sense::maximize ? -1.0 : 1.0;
    for (const auto& t : p.objective) {
      const auto i = *p.variable_index(t.variable);
      add_functional(lp.slots[i], t.g.matrix(), sign, lp.complex_mode, obj);
    }
    merge(obj);
    for (const auto& [k, v] : obj) {
      switch (key_kind(k)) {
        case kPsd: {
          auto& blk = sdp.c.psd[key_block(k)];
          blk(key_row(k), key_col(k)) = v;
          blk(key_col(k), key_row(k)) = v;
          break;
        }
        case kNonneg: sdp.c.nonneg(key_col(k)) = v; break;
        default: sdp.c.free(key_col(k)) = v; break;
      }
    }
  }

  // Equality rows.
  std::vector<SparseRow> rows;
  std::vector<double> b;
  std::vector<RowOrigin> origins;
  for (std::size_t k = 0; k < p.constraints.size(); ++k) {
    const auto& c = p.constraints[k];
    const VariableSlot* slack = slack_of[k] >= 0 ? &lp.slots[static_cast<std::size_t>(slack_of[k])] : nullptr;
    auto cr = constraint_rows(p, k, lp.slots, lp.complex_mode, slack, c.relation == Relation::ge ? -1.0 : 1.0);
    std::move(cr.rows.begin(), cr.rows.end(), std::back_inserter(rows));
    b.insert(b.end(), cr.b.begin(), cr.b.end());
    origins.insert(origins.end(), cr.origins.begin(), cr.origins.end());
  }

  std::vector<bool> keep(rows.size(), true);
  if (o.presolve) {
    keep = presolve(rows, b, origins, o.rank_tol).keep;
  }
  std::vector<double> kept_b;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (keep[i]) {
      sdp.rows.push_back(to_constraint_row(rows[i]));
      kept_b.push_back(b[i]);
      lp.origins.push_back(origins[i]);
    } else {
      lp.dropped_rows.push_back(to_constraint_row(rows[i]));
      lp.dropped_b.push_back(b[i]);
      lp.dropped_origins.push_back(origins[i]);
    }
  }
  sdp.b = Eigen::Map<const Eigen::VectorXd>(kept_b.data(), static_cast<Index>(kept_b.size()));
  sdp.validate();
  return lp;
}

double DualFormProblem::problem_value(double standard_dual_value) const {
  return (sense == Sense::maximize ? standard_dual_value : -standard_dual_value) + objective_constant;
}

Assignment DualFormProblem::recover(const Eigen::VectorXd& y) const {
  Eigen::VectorXd u = offset;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    for (const auto& [row, w] : basis[j]) u(static_cast<Index>(j)) += w * y(static_cast<Index>(row));
  }
  Assignment out;
  out.reserve(slots.size());
  for (const auto& s : slots) {
    const auto d = static_cast<Index>(total_dim(s.systems));
    CMatrix m = CMatrix::Zero(d, d);
    if (s.kind == SlotKind::free_scalar) {
      m(0, 0) = u(static_cast<Index>(s.offset));
    } else {
      m = hermitian_from_coordinates(u, s.offset, d, complex_mode);
    }
    out.emplace_back(s.systems, std::move(m));
  }
  return out;
}

DualFormProblem lower_to_dual_form(const SdpProblem& p, const LoweringOptions& o) {
  p.validate();
  DualFormProblem dp;
  const bool cm = !(o.allow_real && p.has_real_data());
  dp.complex_mode = cm;
  dp.sense = p.sense;
  dp.objective_constant = p.objective_constant;
  auto& sdp = dp.sdp;

  // Coordinates of each variable, and the slack block (if any) it lives in.
  struct Home {
    enum { none, nonneg, psd } kind = none;
    std::size_t index = 0;
  };
  auto new_home = [&](bool cone, std::size_t d) {
    Home h;
    if (!cone) return h;
    if (d == 1) {
      h.kind = Home::nonneg;
      h.index = sdp.nonneg_count++;
    } else {
      h.kind = Home::psd;
      h.index = sdp.psd_sides.size();
      sdp.psd_sides.push_back(cm ? 2 * d : d);
    }
    return h;
  };
  std::size_t coords = 0;
  std::vector<Home> var_home;
  for (const auto& v : p.variables) {
    const std::size_t d = v.dim();
    VariableSlot s{v.name, v.systems, v.cone, false};
    s.kind = d == 1 ? SlotKind::free_scalar : SlotKind::free_hermitian;
    s.offset = coords;
    coords += d == 1 ? 1 : free_width(d, cm);
    dp.slots.push_back(std::move(s));
    var_home.push_back(new_home(v.cone == Cone::psd || v.cone == Cone::nonneg, d));
  }
  std::vector<Home> con_home;
  for (const auto& c : p.constraints) con_home.push_back(new_home(c.relation != Relation::eq, total_dim(c.systems)));

  std::vector<SparseRow> qrows(coords);
  SparseRow cost;  // entries of C
  auto put = [](SparseRow& row, std::uint64_t kind, std::size_t block, std::size_t r, std::size_t c, double v) {
    if (v != 0.0) row.emplace_back(make_key(kind, block, r, c), v);
  };

  // Z = realify(X(u)) for PSD variables; Z = u for nonnegative scalars.
  for (std::size_t i = 0; i < p.variables.size(); ++i) {
    const auto& h = var_home[i];
    const std::size_t off = dp.slots[i].offset;
    if (h.kind == Home::nonneg) put(qrows[off], kNonneg, 0, 0, h.index, -1.0);
    if (h.kind != Home::psd) continue;
    const std::size_t d = p.variables[i].dim();
    for (std::size_t c = 0; c < d; ++c) {
      for (std::size_t r = 0; r <= c; ++r) {
        auto& row = qrows[off + tri_index(r, c)];
        put(row, kPsd, h.index, r, c, -1.0);
        if (cm) put(row, kPsd, h.index, r + d, c + d, -1.0);
        if (cm && r < c) {
          auto& im = qrows[off + d * (d + 1) / 2 + strict_index(r, c)];
          put(im, kPsd, h.index, r, c + d, 1.0);
          put(im, kPsd, h.index, c, r + d, -1.0);
        }
      }
    }
  }

  // Z = +-(lhs - rhs) for inequalities; equalities are gathered for presolve.
  std::vector<SparseRow> eq_rows;
  std::vector<double> eq_b;
  std::vector<RowOrigin> eq_origins;
  for (std::size_t k = 0; k < p.constraints.size(); ++k) {
    const auto& c = p.constraints[k];
    auto cr = constraint_rows(p, k, dp.slots, cm, nullptr, 0.0);
    if (c.relation == Relation::eq) {
      std::move(cr.rows.begin(), cr.rows.end(), std::back_inserter(eq_rows));
      eq_b.insert(eq_b.end(), cr.b.begin(), cr.b.end());
      eq_origins.insert(eq_origins.end(), cr.origins.begin(), cr.origins.end());
      continue;
    }
    const double sigma = c.relation == Relation::ge ? 1.0 : -1.0;
    const auto& h = con_home[k];
    const std::size_t d = total_dim(c.systems);
    for (std::size_t e = 0; e < cr.rows.size(); ++e) {
      const auto& og = cr.origins[e];
      const double rv = cr.b[e];
      if (h.kind == Home::nonneg) {
        for (const auto& [key, a] : cr.rows[e]) put(qrows[key_col(key)], kNonneg, 0, 0, h.index, -sigma * a);
        put(cost, kNonneg, 0, 0, h.index, -sigma * rv);
        continue;
      }
      const std::size_t r = og.row, cc = og.col;
      if (!og.imaginary) {
        for (const auto& [key, a] : cr.rows[e]) {
          put(qrows[key_col(key)], kPsd, h.index, r, cc, -sigma * a);
          if (cm) put(qrows[key_col(key)], kPsd, h.index, r + d, cc + d, -sigma * a);
        }
        put(cost, kPsd, h.index, r, cc, -sigma * rv);
        if (cm) put(cost, kPsd, h.index, r + d, cc + d, -sigma * rv);
      } else {
        for (const auto& [key, a] : cr.rows[e]) {
          put(qrows[key_col(key)], kPsd, h.index, r, cc + d, sigma * a);
          put(qrows[key_col(key)], kPsd, h.index, cc, r + d, -sigma * a);
        }
        put(cost, kPsd, h.index, r, cc + d, sigma * rv);
        put(cost, kPsd, h.index, cc, r + d, -sigma * rv);
      }
    }
  }

  const Elimination elim = eliminate(eq_rows, eq_b, eq_origins, coords, o.rank_tol);
  dp.dropped_equalities = elim.dropped;

  SparseRow obj;
  for (const auto& t : p.objective) {
    add_functional(dp.slots[*p.variable_index(t.variable)], t.g.matrix(), 1.0, cm, obj);
  }
  merge(obj);
  std::vector<double> f(coords, 0.0);
  for (const auto& [key, a] : obj) f[key_col(key)] = a;

  // Substitute u = constant + sum w t_k: Z = C - sum_j u_j Q_j.
  std::vector<SparseRow> trows(coords);
  std::vector<double> gain(coords, 0.0);
  double f_scale = 0.0;
  for (std::size_t j = 0; j < coords; ++j) {
    merge(qrows[j]);
    f_scale = std::max(f_scale, std::abs(f[j]));
    const auto& e = elim.expr[j];
    if (e.constant != 0.0) {
      for (const auto& [key, a] : qrows[j]) cost.emplace_back(key, -e.constant * a);
      dp.objective_constant += f[j] * e.constant;
    }
    for (const auto& [k, w] : e.terms) {
      for (const auto& [key, a] : qrows[j]) trows[k].emplace_back(key, w * a);
      gain[k] += w * f[j];
    }
  }

  const double sign = p.sense == Sense::maximize ? 1.0 : -1.0;
  std::vector<double> b;
  std::vector<std::ptrdiff_t> row_of(coords, -1);
  for (std::size_t k = 0; k < coords; ++k) {
    merge(trows[k]);
    if (trows[k].empty()) {
      if (std::abs(gain[k]) > 1e-12 * (1.0 + f_scale)) {
        std::size_t owner = 0;
        while (owner + 1 < dp.slots.size() && dp.slots[owner + 1].offset <= k) ++owner;
        throw BuildError("variable " + dp.slots[owner].name + " has a costed direction no constraint touches");
      }
      continue;
    }
    row_of[k] = static_cast<std::ptrdiff_t>(sdp.rows.size());
    sdp.rows.push_back(to_constraint_row(trows[k]));
    b.push_back(sign * gain[k]);
  }
  dp.offset = Eigen::VectorXd::Zero(static_cast<Index>(coords));
  dp.basis.assign(coords, {});
  for (std::size_t j = 0; j < coords; ++j) {
    dp.offset(static_cast<Index>(j)) = elim.expr[j].constant;
    for (const auto& [k, w] : elim.expr[j].terms) {
      if (row_of[k] >= 0) dp.basis[j].emplace_back(static_cast<std::size_t>(row_of[k]), w);
    }
  }
  sdp.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Index>(b.size()));

  sdp.c = sdp.zero_vector();
  merge(cost);
  for (const auto& [key, v] : cost) {
    switch (key_kind(key)) {
      case kPsd: {
        auto& blk = sdp.c.psd[key_block(key)];
        blk(key_row(key), key_col(key)) = v;
        blk(key_col(key), key_row(key)) = v;
        break;
      }
      case kNonneg: sdp.c.nonneg(key_col(key)) = v; break;
      default: sdp.c.free(key_col(key)) = v; break;
    }
  }
  sdp.validate();
  return dp;
}

}  // namespace qstrat
