#include "qstrat/standard_sdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qstrat/errors.hpp"

namespace qstrat {

void StandardSdp::validate() const {
  if (c.psd.size() != psd_sides.size()) throw BuildError("cost has wrong number of PSD blocks");
  for (std::size_t k = 0; k < psd_sides.size(); ++k) {
    const auto s = static_cast<Eigen::Index>(psd_sides[k]);
    if (s < 1) throw BuildError("PSD block " + std::to_string(k) + " has side 0");
    if (c.psd[k].rows() != s || c.psd[k].cols() != s) {
      throw BuildError("cost block " + std::to_string(k) + " does not match its side");
    }
  }
  if (static_cast<std::size_t>(c.nonneg.size()) != nonneg_count) throw BuildError("nonnegative cost length");
  if (static_cast<std::size_t>(c.free.size()) != free_count) throw BuildError("free cost length");
  if (static_cast<std::size_t>(b.size()) != rows.size()) throw BuildError("right-hand side length");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& e : rows[i].psd) {
      if (e.block >= psd_sides.size() || e.col >= psd_sides[e.block] || e.row > e.col) {
        throw BuildError("row " + std::to_string(i) + " has an invalid PSD entry");
      }
    }
    for (const auto& e : rows[i].nonneg) {
      if (e.index >= nonneg_count) throw BuildError("row " + std::to_string(i) + " has an invalid nonneg entry");
    }
    for (const auto& e : rows[i].free) {
      if (e.index >= free_count) throw BuildError("row " + std::to_string(i) + " has an invalid free entry");
    }
  }
}

ConicVector StandardSdp::zero_vector() const {
  ConicVector v;
  for (auto s : psd_sides) {
    const auto n = static_cast<Eigen::Index>(s);
    v.psd.push_back(Eigen::MatrixXd::Zero(n, n));
  }
  v.nonneg = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nonneg_count));
  v.free = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free_count));
  return v;
}

Eigen::VectorXd apply_rows(const StandardSdp& p, const ConicVector& x) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(p.rows.size()));
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const auto& row = p.rows[i];
    double acc = 0.0;
    for (const auto& e : row.psd) {
      const double v = x.psd[e.block](e.row, e.col);
      acc += (e.row == e.col ? 1.0 : 2.0) * e.value * v;
    }
    for (const auto& e : row.nonneg) acc += e.value * x.nonneg(e.index);
    for (const auto& e : row.free) acc += e.value * x.free(e.index);
    out(static_cast<Eigen::Index>(i)) = acc;
  }
  return out;
}

ConicVector adjoint_rows(const StandardSdp& p, const Eigen::VectorXd& y) {
  ConicVector out = p.zero_vector();
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const double yi = y(static_cast<Eigen::Index>(i));
    if (yi == 0.0) continue;
    const auto& row = p.rows[i];
    for (const auto& e : row.psd) {
      auto& m = out.psd[e.block];
      m(e.row, e.col) += yi * e.value;
      if (e.row != e.col) m(e.col, e.row) += yi * e.value;
    }
    for (const auto& e : row.nonneg) out.nonneg(e.index) += yi * e.value;
    for (const auto& e : row.free) out.free(e.index) += yi * e.value;
  }
  return out;
}

double inner(const ConicVector& a, const ConicVector& b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.psd.size(); ++k) acc += a.psd[k].cwiseProduct(b.psd[k]).sum();
  acc += a.nonneg.dot(b.nonneg);
  acc += a.free.dot(b.free);
  return acc;
}

double max_abs(const ConicVector& a) {
  double m = 0.0;
  for (const auto& blk : a.psd) {
    if (blk.size() > 0) m = std::max(m, blk.cwiseAbs().maxCoeff());
  }
  if (a.nonneg.size() > 0) m = std::max(m, a.nonneg.cwiseAbs().maxCoeff());
  if (a.free.size() > 0) m = std::max(m, a.free.cwiseAbs().maxCoeff());
  return m;
}

void axpy(double alpha, const ConicVector& x, ConicVector& y) {
  for (std::size_t k = 0; k < x.psd.size(); ++k) y.psd[k] += alpha * x.psd[k];
  y.nonneg += alpha * x.nonneg;
  y.free += alpha * x.free;
}

}  // namespace qstrat
