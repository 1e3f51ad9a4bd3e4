#pragma once

// Dense complex operators over ordered lists of named tensor factors.
//
// Entries are indexed mixed-radix over the listed systems, the first system
// being the most significant digit, so kron(a, b) places a's systems first.

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace qstrat {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Hermiticity tolerance for freshly constructed operators.
inline constexpr double kConstructionTol = 1e-12;
/// Hermiticity tolerance checked by numerical kernels (eigh, realify, ...).
inline constexpr double kKernelTol = 1e-10;

struct SystemLabel {
  std::string name;
  std::size_t dim = 1;

  friend bool operator==(const SystemLabel&, const SystemLabel&) = default;
};

using SystemList = std::vector<SystemLabel>;

std::size_t total_dim(const SystemList& systems);
std::vector<std::string> system_names(const SystemList& systems);

/// Throws LabelingError on empty names, zero dimensions or duplicates.
void validate_systems(const SystemList& systems);

class LabeledOperator {
 public:
  /// The scalar 0 on no systems.
  LabeledOperator();
  LabeledOperator(SystemList systems, CMatrix entries);

  static LabeledOperator identity(SystemList systems);
  static LabeledOperator zero(SystemList systems);
  static LabeledOperator scalar(Complex value);

  const SystemList& systems() const noexcept { return systems_; }
  const CMatrix& matrix() const noexcept { return m_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }

  /// Index of `name` in the system list, or -1.
  std::ptrdiff_t position(std::string_view name) const;
  bool has_system(std::string_view name) const { return position(name) >= 0; }

  bool is_hermitian(double tol = kConstructionTol) const;
  /// True when every imaginary part is exactly zero.
  bool is_real() const;
  Complex trace() const { return m_.trace(); }

  /// Same entries, new names (dimensions must agree position by position).
  LabeledOperator relabeled(SystemList systems) const;
  LabeledOperator adjoint() const;

  LabeledOperator& operator+=(const LabeledOperator& other);
  LabeledOperator& operator-=(const LabeledOperator& other);
  LabeledOperator& operator*=(Complex s);

  friend LabeledOperator operator+(LabeledOperator a, const LabeledOperator& b) { return a += b; }
  friend LabeledOperator operator-(LabeledOperator a, const LabeledOperator& b) { return a -= b; }
  friend LabeledOperator operator*(LabeledOperator a, Complex s) { return a *= s; }
  friend LabeledOperator operator*(Complex s, LabeledOperator a) { return a *= s; }
  friend LabeledOperator operator*(LabeledOperator a, double s) { return a *= Complex(s); }
  friend LabeledOperator operator*(double s, LabeledOperator a) { return a *= Complex(s); }

 private:
  void require_same_systems(const LabeledOperator& other) const;

  SystemList systems_;
  CMatrix m_;
};

/// Tensor product; system lists are concatenated (a first).
LabeledOperator kron(const LabeledOperator& a, const LabeledOperator& b);

/// New system k is old system order[k].
LabeledOperator permute_systems(const LabeledOperator& m, std::span<const std::size_t> order);
/// Reorders to the given name sequence (a permutation of the current names).
LabeledOperator permute_systems(const LabeledOperator& m, std::span<const std::string> names);

LabeledOperator partial_trace(const LabeledOperator& m, std::span<const std::string> over);
LabeledOperator partial_trace(const LabeledOperator& m, std::initializer_list<std::string> over);
LabeledOperator partial_transpose(const LabeledOperator& m, std::span<const std::string> over);
LabeledOperator partial_transpose(const LabeledOperator& m, std::initializer_list<std::string> over);

/// Traces out systems absent from `target`, tensors identities onto systems
/// absent from `m`, and orders the result as `target`.  Its adjoint is the
/// same map taken from `target` back to `m.systems()`.
LabeledOperator trace_extend(const LabeledOperator& m, const SystemList& target);

/// Real Frobenius inner product Re Tr[a† b].
double inner_product(const LabeledOperator& a, const LabeledOperator& b);

/// Complex-to-real embedding [[Re, -Im], [Im, Re]].
RMatrix realify(const LabeledOperator& h);
RMatrix realify(const CMatrix& h);

struct EigenDecomposition {
  RVector values;   // ascending
  CMatrix vectors;  // columns are eigenvectors
};

/// Hermitian eigendecomposition (tolerance kKernelTol on the Hermitian check).
EigenDecomposition eigh(const LabeledOperator& h);
RVector eigvalsh(const LabeledOperator& h);
double min_eigenvalue(const LabeledOperator& h);
double trace_norm(const LabeledOperator& h);

}  // namespace qstrat
