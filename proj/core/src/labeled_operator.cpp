#include "qstrat/labeled_operator.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "qstrat/errors.hpp"
#include "qstrat/hermitian_eigen.hpp"

namespace qstrat {
namespace {

using Index = Eigen::Index;

std::vector<std::size_t> strides_of(const SystemList& systems) {
  std::vector<std::size_t> s(systems.size(), 1);
  for (std::size_t i = systems.size(); i-- > 1;) s[i - 1] = s[i] * systems[i].dim;
  return s;
}

std::vector<std::size_t> positions_of(const LabeledOperator& m, std::span<const std::string> names) {
  std::vector<std::size_t> out;
  out.reserve(names.size());
  for (const auto& n : names) {
    const auto p = m.position(n);
    if (p < 0) throw LabelingError("unknown system '" + n + "'");
    if (std::find(out.begin(), out.end(), static_cast<std::size_t>(p)) != out.end()) {
      throw LabelingError("system '" + n + "' listed twice");
    }
    out.push_back(static_cast<std::size_t>(p));
  }
  return out;
}

void require_hermitian(const CMatrix& h, const char* op) {
  if (h.rows() != h.cols() || (h - h.adjoint()).cwiseAbs().maxCoeff() > kKernelTol) {
    if (h.size() == 0) return;
    throw NumericContractError(std::string(op) + ": operator is not Hermitian");
  }
}

}  // namespace

std::size_t total_dim(const SystemList& systems) {
  std::size_t d = 1;
  for (const auto& s : systems) d *= s.dim;
  return d;
}

std::vector<std::string> system_names(const SystemList& systems) {
  std::vector<std::string> names;
  names.reserve(systems.size());
  for (const auto& s : systems) names.push_back(s.name);
  return names;
}

void validate_systems(const SystemList& systems) {
  std::unordered_set<std::string> seen;
  for (const auto& s : systems) {
    if (s.name.empty()) throw LabelingError("empty system name");
    if (s.dim < 1) throw LabelingError("system '" + s.name + "' has dimension 0");
    if (!seen.insert(s.name).second) throw LabelingError("duplicate system name '" + s.name + "'");
  }
}

LabeledOperator::LabeledOperator() : m_(CMatrix::Zero(1, 1)) {}

LabeledOperator::LabeledOperator(SystemList systems, CMatrix entries)
    : systems_(std::move(systems)), m_(std::move(entries)) {
  validate_systems(systems_);
  const auto d = static_cast<Index>(total_dim(systems_));
  if (m_.rows() != d || m_.cols() != d) {
    throw LabelingError("matrix side " + std::to_string(m_.rows()) + "x" +
                        std::to_string(m_.cols()) + " does not match system dimension " +
                        std::to_string(d));
  }
}

LabeledOperator LabeledOperator::identity(SystemList systems) {
  const auto d = static_cast<Index>(total_dim(systems));
  return {std::move(systems), CMatrix::Identity(d, d)};
}

LabeledOperator LabeledOperator::zero(SystemList systems) {
  const auto d = static_cast<Index>(total_dim(systems));
  return {std::move(systems), CMatrix::Zero(d, d)};
}

LabeledOperator LabeledOperator::scalar(Complex value) {
  CMatrix m(1, 1);
  m(0, 0) = value;
  return {SystemList{}, std::move(m)};
}

std::ptrdiff_t LabeledOperator::position(std::string_view name) const {
  for (std::size_t i = 0; i < systems_.size(); ++i) {
    if (systems_[i].name == name) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

bool LabeledOperator::is_hermitian(double tol) const {
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool LabeledOperator::is_real() const { return (m_.imag().array() == 0.0).all(); }

LabeledOperator LabeledOperator::relabeled(SystemList systems) const {
  if (systems.size() != systems_.size()) throw LabelingError("relabel: system count differs");
  for (std::size_t i = 0; i < systems.size(); ++i) {
    if (systems[i].dim != systems_[i].dim) {
      throw LabelingError("relabel: dimension of '" + systems[i].name + "' differs");
    }
  }
  return {std::move(systems), m_};
}

LabeledOperator LabeledOperator::adjoint() const { return {systems_, m_.adjoint()}; }

void LabeledOperator::require_same_systems(const LabeledOperator& other) const {
  if (systems_ != other.systems_) throw LabelingError("operands act on different systems");
}

LabeledOperator& LabeledOperator::operator+=(const LabeledOperator& other) {
  require_same_systems(other);
  m_ += other.m_;
  return *this;
}

LabeledOperator& LabeledOperator::operator-=(const LabeledOperator& other) {
  require_same_systems(other);
  m_ -= other.m_;
  return *this;
}

LabeledOperator& LabeledOperator::operator*=(Complex s) {
  m_ *= s;
  return *this;
}

LabeledOperator kron(const LabeledOperator& a, const LabeledOperator& b) {
  SystemList systems = a.systems();
  systems.insert(systems.end(), b.systems().begin(), b.systems().end());
  validate_systems(systems);
  const CMatrix& am = a.matrix();
  const CMatrix& bm = b.matrix();
  const Index db = bm.rows();
  CMatrix out(am.rows() * db, am.cols() * db);
  for (Index j = 0; j < am.cols(); ++j) {
    for (Index i = 0; i < am.rows(); ++i) {
      out.block(i * db, j * db, db, db) = am(i, j) * bm;
    }
  }
  return {std::move(systems), std::move(out)};
}

LabeledOperator permute_systems(const LabeledOperator& m, std::span<const std::size_t> order) {
  const auto& old = m.systems();
  if (order.size() != old.size()) throw LabelingError("permutation has wrong length");
  std::vector<bool> used(old.size(), false);
  for (auto k : order) {
    if (k >= old.size() || used[k]) throw LabelingError("invalid permutation");
    used[k] = true;
  }
  SystemList systems;
  systems.reserve(old.size());
  for (auto k : order) systems.push_back(old[k]);

  const auto old_strides = strides_of(old);
  const std::size_t d = m.dim();
  std::vector<Index> map(d);
  std::vector<std::size_t> digit(systems.size(), 0);
  for (std::size_t idx = 0; idx < d; ++idx) {
    std::size_t src = 0;
    for (std::size_t k = 0; k < systems.size(); ++k) src += digit[k] * old_strides[order[k]];
    map[idx] = static_cast<Index>(src);
    for (std::size_t k = systems.size(); k-- > 0;) {
      if (++digit[k] < systems[k].dim) break;
      digit[k] = 0;
    }
  }
  const CMatrix& in = m.matrix();
  CMatrix out(in.rows(), in.cols());
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t r = 0; r < d; ++r) out(static_cast<Index>(r), static_cast<Index>(c)) = in(map[r], map[c]);
  }
  return {std::move(systems), std::move(out)};
}

LabeledOperator permute_systems(const LabeledOperator& m, std::span<const std::string> names) {
  if (names.size() != m.systems().size()) throw LabelingError("permutation has wrong length");
  const auto order = positions_of(m, names);
  return permute_systems(m, std::span<const std::size_t>(order));
}

LabeledOperator trace_extend(const LabeledOperator& m, const SystemList& target) {
  validate_systems(target);
  const auto& src = m.systems();
  const auto src_strides = strides_of(src);

  // For each target system: offset stride into m, or extension slot.
  std::vector<std::size_t> kept_stride(target.size(), 0);
  std::vector<bool> is_ext(target.size(), false);
  for (std::size_t k = 0; k < target.size(); ++k) {
    const auto p = m.position(target[k].name);
    if (p < 0) {
      is_ext[k] = true;
      continue;
    }
    if (src[static_cast<std::size_t>(p)].dim != target[k].dim) {
      throw LabelingError("dimension mismatch on system '" + target[k].name + "'");
    }
    kept_stride[k] = src_strides[static_cast<std::size_t>(p)];
  }

  // Offsets of all traced-system digit combinations.
  std::vector<std::size_t> traced_off{0};
  for (std::size_t i = 0; i < src.size(); ++i) {
    const bool in_target = std::any_of(target.begin(), target.end(),
                                       [&](const SystemLabel& t) { return t.name == src[i].name; });
    if (in_target) continue;
    std::vector<std::size_t> next;
    next.reserve(traced_off.size() * src[i].dim);
    for (auto o : traced_off) {
      for (std::size_t v = 0; v < src[i].dim; ++v) next.push_back(o + v * src_strides[i]);
    }
    traced_off = std::move(next);
  }

  const std::size_t d = total_dim(target);
  std::vector<std::size_t> kept(d), ext(d);
  std::vector<std::size_t> digit(target.size(), 0);
  for (std::size_t idx = 0; idx < d; ++idx) {
    std::size_t ko = 0;
    std::size_t eo = 0;
    for (std::size_t k = 0; k < target.size(); ++k) {
      if (is_ext[k]) {
        eo = eo * target[k].dim + digit[k];
      } else {
        ko += digit[k] * kept_stride[k];
      }
    }
    kept[idx] = ko;
    ext[idx] = eo;
    for (std::size_t k = target.size(); k-- > 0;) {
      if (++digit[k] < target[k].dim) break;
      digit[k] = 0;
    }
  }

  const CMatrix& in = m.matrix();
  CMatrix out = CMatrix::Zero(static_cast<Index>(d), static_cast<Index>(d));
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t r = 0; r < d; ++r) {
      if (ext[r] != ext[c]) continue;
      Complex acc(0.0, 0.0);
      for (auto t : traced_off) acc += in(static_cast<Index>(kept[r] + t), static_cast<Index>(kept[c] + t));
      out(static_cast<Index>(r), static_cast<Index>(c)) = acc;
    }
  }
  return {target, std::move(out)};
}

LabeledOperator partial_trace(const LabeledOperator& m, std::span<const std::string> over) {
  const auto pos = positions_of(m, over);
  SystemList rest;
  for (std::size_t i = 0; i < m.systems().size(); ++i) {
    if (std::find(pos.begin(), pos.end(), i) == pos.end()) rest.push_back(m.systems()[i]);
  }
  return trace_extend(m, rest);
}

LabeledOperator partial_trace(const LabeledOperator& m, std::initializer_list<std::string> over) {
  return partial_trace(m, std::span<const std::string>(over.begin(), over.size()));
}

LabeledOperator partial_transpose(const LabeledOperator& m, std::span<const std::string> over) {
  const auto pos = positions_of(m, over);
  const auto& systems = m.systems();
  const auto strides = strides_of(systems);
  const std::size_t d = m.dim();
  const CMatrix& in = m.matrix();
  CMatrix out(in.rows(), in.cols());
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t r = 0; r < d; ++r) {
      std::size_t rr = r;
      std::size_t cc = c;
      for (auto p : pos) {
        const std::size_t s = strides[p];
        const std::size_t dr = (r / s) % systems[p].dim;
        const std::size_t dc = (c / s) % systems[p].dim;
        rr = rr - dr * s + dc * s;
        cc = cc - dc * s + dr * s;
      }
      out(static_cast<Index>(r), static_cast<Index>(c)) = in(static_cast<Index>(rr), static_cast<Index>(cc));
    }
  }
  return {systems, std::move(out)};
}

LabeledOperator partial_transpose(const LabeledOperator& m, std::initializer_list<std::string> over) {
  return partial_transpose(m, std::span<const std::string>(over.begin(), over.size()));
}

double inner_product(const LabeledOperator& a, const LabeledOperator& b) {
  if (a.systems() != b.systems()) throw LabelingError("inner product of operators on different systems");
  return (a.matrix().conjugate().cwiseProduct(b.matrix())).sum().real();
}

RMatrix realify(const CMatrix& h) {
  require_hermitian(h, "realify");
  const Index d = h.rows();
  RMatrix out(2 * d, 2 * d);
  out.topLeftCorner(d, d) = h.real();
  out.topRightCorner(d, d) = -h.imag();
  out.bottomLeftCorner(d, d) = h.imag();
  out.bottomRightCorner(d, d) = h.real();
  return out;
}

RMatrix realify(const LabeledOperator& h) { return realify(h.matrix()); }

EigenDecomposition eigh(const LabeledOperator& h) {
  require_hermitian(h.matrix(), "eigh");
  auto r = linalg::hermitian_eigen(h.matrix(), true);
  return {std::move(r.values), std::move(r.vectors)};
}

RVector eigvalsh(const LabeledOperator& h) {
  require_hermitian(h.matrix(), "eigvalsh");
  return linalg::hermitian_eigen(h.matrix(), false).values;
}

double min_eigenvalue(const LabeledOperator& h) { return eigvalsh(h).minCoeff(); }

double trace_norm(const LabeledOperator& h) { return eigvalsh(h).cwiseAbs().sum(); }

}  // namespace qstrat
