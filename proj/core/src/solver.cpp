#include "qstrat/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <string_view>

#include "qstrat/errors.hpp"
#include "qstrat/hermitian_eigen.hpp"

namespace qstrat {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
// Extended precision for recovering the primal direction from dy: W dZ W
// cancels by a factor approaching |W|^2 |dZ| / |dX| near the optimum.
using MatrixXl = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXl = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

constexpr double kDivergence = 1e12;
constexpr double kFreeRegularization = 1e-10;
constexpr int kFreeRefinements = 3;
// Krylov refinement of the Newton system: the factored Schur complement is
// only a preconditioner once eps * cond(M) nears one, which happens as mu -> 0.
constexpr int kKrylovDim = 30;
constexpr int kKrylovRestarts = 3;
constexpr double kKrylovTol = 1e-13;
constexpr int kBacktracks = 20;
constexpr double kBacktrackFactor = 0.8;

struct Expanded {
  std::uint32_t p;
  std::uint32_t q;
  double a;
};

struct BlockRow {
  Index row;
  std::vector<Expanded> e;
  bool dense;
};

struct LinearColumn {
  std::vector<std::pair<Index, double>> entries;
};

// Row data regrouped by cone block for Schur complement assembly.
struct Layout {
  std::vector<std::vector<BlockRow>> psd;   // per PSD block
  std::vector<LinearColumn> nonneg;         // per nonnegative coordinate
  MatrixXd free;                            // m x f
};

Layout make_layout(const StandardSdp& p) {
  Layout lay;
  lay.psd.resize(p.psd_sides.size());
  lay.nonneg.resize(p.nonneg_count);
  lay.free = MatrixXd::Zero(static_cast<Index>(p.num_rows()), static_cast<Index>(p.free_count));
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const auto row = static_cast<Index>(i);
    const auto& r = p.rows[i];
    std::vector<std::vector<Expanded>> per_block(p.psd_sides.size());
    for (const auto& e : r.psd) {
      per_block[e.block].push_back({e.row, e.col, e.value});
      if (e.row != e.col) per_block[e.block].push_back({e.col, e.row, e.value});
    }
    for (std::size_t k = 0; k < per_block.size(); ++k) {
      if (per_block[k].empty()) continue;
      const bool dense = per_block[k].size() > 4 * p.psd_sides[k];
      lay.psd[k].push_back({row, std::move(per_block[k]), dense});
    }
    for (const auto& e : r.nonneg) lay.nonneg[e.index].entries.emplace_back(row, e.value);
    for (const auto& e : r.free) lay.free(row, e.index) += e.value;
  }
  return lay;
}

// Nesterov-Todd scaling of one PSD block: G^{-1} X G^{-T} = G^T Z G = diag(lambda).
struct BlockScaling {
  MatrixXd g;
  MatrixXd w;  // G G^T
  VectorXd lambda;
  MatrixXl gl;  // g and w in extended precision
  MatrixXl wl;
};

// From the SVD of Lz^T Lx rather than an eigendecomposition of Lx^T Z Lx,
// which would square the conditioning near the boundary.
bool nt_scaling(const MatrixXd& x, const MatrixXd& z, BlockScaling& out) {
  Eigen::LLT<MatrixXd> lx(x);
  Eigen::LLT<MatrixXd> lz(z);
  if (lx.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
  const MatrixXd l = lx.matrixL();
  const MatrixXd prod = MatrixXd(lz.matrixL()).transpose() * l;
  Eigen::BDCSVD<MatrixXd> svd(prod, Eigen::ComputeThinV);
  out.lambda = svd.singularValues();
  if (!(out.lambda.minCoeff() > 0.0)) return false;
  const VectorXd inv_sqrt_lambda = out.lambda.cwiseSqrt().cwiseInverse();
  out.g = l * svd.matrixV() * inv_sqrt_lambda.asDiagonal();
  out.w = out.g * out.g.transpose();
  out.gl = out.g.cast<long double>();
  out.wl = out.w.cast<long double>();
  return true;
}

double min_eig(const MatrixXd& m) {
  if (m.rows() == 0) return std::numeric_limits<double>::infinity();
  return linalg::symmetric_eigenvalues(m).minCoeff();
}

// Largest step keeping diag(lambda) + alpha*d PSD (infinity if unbounded).
double max_step_scaled(const VectorXd& lambda, const MatrixXd& d) {
  const VectorXd s = lambda.cwiseSqrt().cwiseInverse();
  const MatrixXd t = s.asDiagonal() * d * s.asDiagonal();
  const double g = min_eig(0.5 * (t + t.transpose()));
  return g < 0.0 ? -1.0 / g : std::numeric_limits<double>::infinity();
}

double max_step_linear(const VectorXd& x, const VectorXd& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < x.size(); ++i) {
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  }
  return a;
}

struct ExtendedVector {
  std::vector<MatrixXl> psd;
  VectorXl nonneg;
};

ExtendedVector adjoint_extended(const StandardSdp& p, const VectorXd& y) {
  ExtendedVector out;
  for (auto side : p.psd_sides) {
    const auto n = static_cast<Index>(side);
    out.psd.push_back(MatrixXl::Zero(n, n));
  }
  out.nonneg = VectorXl::Zero(static_cast<Index>(p.nonneg_count));
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const long double yi = y(static_cast<Index>(i));
    for (const auto& e : p.rows[i].psd) {
      const long double v = static_cast<long double>(e.value) * yi;
      out.psd[e.block](e.row, e.col) += v;
      if (e.row != e.col) out.psd[e.block](e.col, e.row) += v;
    }
    for (const auto& e : p.rows[i].nonneg) out.nonneg(e.index) += static_cast<long double>(e.value) * yi;
  }
  return out;
}

VectorXd apply_extended(const StandardSdp& p, const ExtendedVector& x, const VectorXd& free) {
  VectorXd out(static_cast<Index>(p.rows.size()));
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    long double s = 0.0L;
    for (const auto& e : p.rows[i].psd) {
      const long double v = x.psd[e.block](e.row, e.col);
      s += static_cast<long double>(e.value) * (e.row == e.col ? v : 2.0L * v);
    }
    for (const auto& e : p.rows[i].nonneg) s += static_cast<long double>(e.value) * x.nonneg(e.index);
    for (const auto& e : p.rows[i].free) s += static_cast<long double>(e.value) * free(e.index);
    out(static_cast<Index>(i)) = static_cast<double>(s);
  }
  return out;
}

// True when v + alpha*dv has positive definite blocks and positive
// nonnegative coordinates.
bool interior_after(const ConicVector& v, const ConicVector& dv, double alpha) {
  for (std::size_t k = 0; k < v.psd.size(); ++k) {
    Eigen::LLT<MatrixXd> l(v.psd[k] + alpha * dv.psd[k]);
    if (l.info() != Eigen::Success) return false;
  }
  for (Index i = 0; i < v.nonneg.size(); ++i) {
    if (!(v.nonneg(i) + alpha * dv.nonneg(i) > 0.0)) return false;
  }
  return true;
}

bool finite(const ConicVector& v) {
  for (const auto& b : v.psd) {
    if (!b.allFinite()) return false;
  }
  return v.nonneg.allFinite() && v.free.allFinite();
}

bool trace_enabled(const SolverOptions& o) {
  if (o.verbose) return true;
  const char* env = std::getenv("QSTRAT_SOLVER_TRACE");
  return env != nullptr && std::string_view(env) == "1";
}

class InteriorPoint {
 public:
  InteriorPoint(const StandardSdp& p, const SolverOptions& o) : p_(p), o_(o), lay_(make_layout(p)) {
    m_ = static_cast<Index>(p.num_rows());
    nu_ = static_cast<double>(p.nonneg_count);
    for (auto s : p.psd_sides) nu_ += static_cast<double>(s);
    b_norm_ = p.b.size() > 0 ? p.b.cwiseAbs().maxCoeff() : 0.0;
    c_norm_ = max_abs(p.c);
  }

  SolveReport run();

 private:
  struct Direction {
    ConicVector dx;
    VectorXd dy;
    ConicVector dz;
    std::vector<MatrixXd> dz_scaled;  // G^T dZ G per PSD block
    std::vector<MatrixXd> u;          // scaled dX + dZ per PSD block
  };

  void initialize();
  void residuals();
  bool scale();
  bool assemble_and_factor();
  void direction(const std::vector<MatrixXd>& rc_psd, const VectorXd& rc_lin, Direction& d) const;
  void solve_reduced(const VectorXd& rhs, const VectorXd& rf, VectorXd& dy, VectorXd& dxf) const;
  VectorXd apply_newton(const VectorXd& v) const;
  VectorXd precondition(const VectorXd& r) const;
  VectorXd gmres(const VectorXd& r0) const;
  void step_lengths(const Direction& d, double& ap, double& ad) const;
  void fill_report(SolveReport& r) const;

  const StandardSdp& p_;
  const SolverOptions& o_;
  Layout lay_;
  Index m_ = 0;
  double nu_ = 0.0;
  double b_norm_ = 0.0;
  double c_norm_ = 0.0;

  ConicVector x_, z_;
  VectorXd y_;

  // Residuals at the current iterate.
  VectorXd rp_;
  ConicVector rd_;
  VectorXd rf_;
  double pobj_ = 0.0, dobj_ = 0.0, compl_ = 0.0, pres_ = 0.0, dres_ = 0.0;

  std::vector<BlockScaling> sc_;
  VectorXd lin_lambda_;
  MatrixXd schur_;
  Eigen::LLT<MatrixXd> schur_llt_;
  MatrixXd minv_af_;
  MatrixXd free_schur_;
  Eigen::LLT<MatrixXd> free_llt_;
};

// Scale-aware start: each block starts at a multiple of the identity sized
// from the row norms it carries, b and C.
void InteriorPoint::initialize() {
  x_ = p_.zero_vector();
  z_ = p_.zero_vector();
  y_ = VectorXd::Zero(m_);
  std::vector<VectorXd> row_norm(p_.psd_sides.size(), VectorXd::Zero(m_));
  VectorXd lin_norm = VectorXd::Zero(m_);
  for (std::size_t i = 0; i < p_.rows.size(); ++i) {
    const auto& r = p_.rows[i];
    const auto row = static_cast<Index>(i);
    for (const auto& e : r.psd) row_norm[e.block](row) += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
    for (const auto& e : r.nonneg) lin_norm(row) += e.value * e.value;
  }
  auto start = [&](const VectorXd& sq, double side, double c_norm, double& xi, double& eta) {
    xi = std::max(10.0, std::sqrt(side));
    eta = std::max({10.0, std::sqrt(side), c_norm});
    for (Index i = 0; i < m_; ++i) {
      const double a = std::sqrt(sq(i));
      if (a == 0.0) continue;
      xi = std::max(xi, side * (1.0 + std::abs(p_.b(i))) / (1.0 + a));
      eta = std::max(eta, a);
    }
  };
  for (std::size_t k = 0; k < p_.psd_sides.size(); ++k) {
    double xi = 0.0, eta = 0.0;
    start(row_norm[k], static_cast<double>(p_.psd_sides[k]), p_.c.psd[k].norm(), xi, eta);
    x_.psd[k].diagonal().setConstant(xi);
    z_.psd[k].diagonal().setConstant(eta);
  }
  if (p_.nonneg_count > 0) {
    double xi = 0.0, eta = 0.0;
    start(lin_norm, 1.0, p_.c.nonneg.norm(), xi, eta);
    x_.nonneg.setConstant(xi);
    z_.nonneg.setConstant(eta);
  }
}

void InteriorPoint::residuals() {
  const VectorXd ax = apply_rows(p_, x_);
  rp_ = p_.b - ax;
  ConicVector aty = adjoint_rows(p_, y_);
  rd_ = p_.c;
  axpy(-1.0, aty, rd_);
  rf_ = rd_.free;
  axpy(-1.0, z_, rd_);  // z_.free is identically zero
  pobj_ = inner(p_.c, x_);
  dobj_ = p_.b.dot(y_);
  compl_ = 0.0;
  for (std::size_t k = 0; k < x_.psd.size(); ++k) compl_ += x_.psd[k].cwiseProduct(z_.psd[k]).sum();
  compl_ += x_.nonneg.dot(z_.nonneg);
  pres_ = (rp_.size() > 0 ? rp_.cwiseAbs().maxCoeff() : 0.0) / (1.0 + b_norm_);
  dres_ = max_abs(rd_) / (1.0 + c_norm_);
}

bool InteriorPoint::scale() {
  sc_.resize(p_.psd_sides.size());
  for (std::size_t k = 0; k < p_.psd_sides.size(); ++k) {
    if (!nt_scaling(x_.psd[k], z_.psd[k], sc_[k])) return false;
  }
  lin_lambda_ = (x_.nonneg.cwiseProduct(z_.nonneg)).cwiseSqrt();
  return true;
}

bool InteriorPoint::assemble_and_factor() {
  schur_.setZero(m_, m_);
  for (std::size_t k = 0; k < lay_.psd.size(); ++k) {
    const auto& rows = lay_.psd[k];
    const MatrixXd& w = sc_[k].w;
    const auto side = w.rows();
    std::vector<std::size_t> sparse;
    for (std::size_t a = 0; a < rows.size(); ++a) {
      if (!rows[a].dense) {
        sparse.push_back(a);
        continue;
      }
      MatrixXd ai = MatrixXd::Zero(side, side);
      for (const auto& e : rows[a].e) ai(e.p, e.q) += e.a;
      const MatrixXd v = w * ai * w;
      const Index i = rows[a].row;
      for (std::size_t b = 0; b < rows.size(); ++b) {
        if (rows[b].dense && b < a) continue;
        double s = 0.0;
        for (const auto& e : rows[b].e) s += e.a * v(e.p, e.q);
        const Index j = rows[b].row;
        schur_(std::min(i, j), std::max(i, j)) += s;
      }
    }
    for (std::size_t ia = 0; ia < sparse.size(); ++ia) {
      const auto& ri = rows[sparse[ia]];
      for (std::size_t ib = ia; ib < sparse.size(); ++ib) {
        const auto& rj = rows[sparse[ib]];
        double s = 0.0;
        for (const auto& ei : ri.e) {
          for (const auto& ej : rj.e) s += ei.a * ej.a * w(ei.q, ej.p) * w(ej.q, ei.p);
        }
        schur_(std::min(ri.row, rj.row), std::max(ri.row, rj.row)) += s;
      }
    }
  }
  for (std::size_t j = 0; j < lay_.nonneg.size(); ++j) {
    const double wj = x_.nonneg(static_cast<Index>(j)) / z_.nonneg(static_cast<Index>(j));
    const auto& col = lay_.nonneg[j].entries;
    for (std::size_t a = 0; a < col.size(); ++a) {
      for (std::size_t b = a; b < col.size(); ++b) {
        const Index r = std::min(col[a].first, col[b].first);
        const Index c = std::max(col[a].first, col[b].first);
        schur_(r, c) += wj * col[a].second * col[b].second;
      }
    }
  }
  schur_.triangularView<Eigen::StrictlyLower>() = schur_.transpose();
  schur_llt_.compute(schur_);
  if (schur_llt_.info() != Eigen::Success) {
    const double shift = 1e-14 * std::max(1.0, schur_.diagonal().cwiseAbs().maxCoeff());
    schur_.diagonal().array() += shift;
    schur_llt_.compute(schur_);
    if (schur_llt_.info() != Eigen::Success) return false;
  }
  if (p_.free_count > 0) {
    minv_af_ = schur_llt_.solve(lay_.free);
    MatrixXd sf = lay_.free.transpose() * minv_af_;
    sf = 0.5 * (sf + sf.transpose()).eval();
    free_schur_ = sf;
    const double reg = kFreeRegularization * std::max(1.0, sf.diagonal().cwiseAbs().maxCoeff());
    sf.diagonal().array() += reg;
    free_llt_.compute(sf);
    if (free_llt_.info() != Eigen::Success) return false;
  }
  return true;
}

// rc_psd[k] is the scaled complementarity target (symmetric); rc_lin likewise
// for the nonnegative coordinates.
void InteriorPoint::direction(const std::vector<MatrixXd>& rc_psd, const VectorXd& rc_lin,
                              Direction& d) const {
  const std::size_t nb = p_.psd_sides.size();
  d.u.resize(nb);
  ConicVector t = p_.zero_vector();
  for (std::size_t k = 0; k < nb; ++k) {
    const auto& s = sc_[k];
    const Index n = s.lambda.size();
    MatrixXd u(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) u(i, j) = 2.0 * rc_psd[k](i, j) / (s.lambda(i) + s.lambda(j));
    }
    d.u[k] = u;
    t.psd[k] = s.g * u * s.g.transpose() - s.w * rd_.psd[k] * s.w;
  }
  for (Index j = 0; j < t.nonneg.size(); ++j) {
    const double xj = x_.nonneg(j);
    const double zj = z_.nonneg(j);
    t.nonneg(j) = rc_lin(j) / zj - (xj / zj) * rd_.nonneg(j);
  }
  const VectorXd rhs = rp_ - apply_rows(p_, t);

  // Newton step for given (dy, dx_free); the reduced system is solved with
  // the factored Schur complement, then refined against the exact operator.
  auto complete = [&](Direction& dd) {
    const ExtendedVector atdy = adjoint_extended(p_, dd.dy);
    dd.dz = rd_;
    dd.dz.free.setZero();
    dd.dz_scaled.resize(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      const auto& s = sc_[k];
      const MatrixXl dz = rd_.psd[k].cast<long double>() - atdy.psd[k];
      const MatrixXl dx = s.gl * dd.u[k].cast<long double>() * s.gl.transpose() - s.wl * dz * s.wl;
      dd.dz.psd[k] = dz.cast<double>();
      dd.dx.psd[k] = (0.5L * (dx + dx.transpose())).cast<double>();
      dd.dz_scaled[k] = s.g.transpose() * dd.dz.psd[k] * s.g;
    }
    for (Index j = 0; j < dd.dx.nonneg.size(); ++j) {
      const long double xj = x_.nonneg(j);
      const long double zj = z_.nonneg(j);
      const long double dz = static_cast<long double>(rd_.nonneg(j)) - atdy.nonneg(j);
      dd.dz.nonneg(j) = static_cast<double>(dz);
      dd.dx.nonneg(j) = static_cast<double>((rc_lin(j) - xj * dz) / zj);
    }
  };

  d.dx = t;
  solve_reduced(rhs, rf_, d.dy, d.dx.free);
  complete(d);
  const Index f = static_cast<Index>(p_.free_count);
  auto residual = [&](const Direction& dd) {
    VectorXd r(m_ + f);
    r.head(m_) = rp_ - apply_rows(p_, dd.dx);
    if (f > 0) r.tail(f) = rf_ - lay_.free.transpose() * dd.dy;
    return r;
  };
  VectorXd r = residual(d);
  double rnorm = r.cwiseAbs().maxCoeff();
  for (int k = 0; k < kKrylovRestarts && rnorm > 0.0; ++k) {
    const VectorXd c = gmres(r);
    Direction trial = d;
    trial.dy += c.head(m_);
    if (f > 0) trial.dx.free = d.dx.free + c.tail(f);
    complete(trial);
    const VectorXd rt = residual(trial);
    const double tnorm = rt.cwiseAbs().maxCoeff();
    if (!(tnorm < rnorm)) break;
    const bool done = tnorm > 0.5 * rnorm;
    d = std::move(trial);
    r = rt;
    rnorm = tnorm;
    if (done) break;
  }
}

// Homogeneous Newton operator on (dy, dx_free): [M dy + A_f dxf; A_f^T dy],
// applied through the cone scalings rather than the assembled M.
VectorXd InteriorPoint::apply_newton(const VectorXd& v) const {
  const Index f = static_cast<Index>(p_.free_count);
  const VectorXd dy = v.head(m_);
  ExtendedVector dx = adjoint_extended(p_, dy);
  for (std::size_t k = 0; k < sc_.size(); ++k) {
    const MatrixXl t = sc_[k].wl * dx.psd[k] * sc_[k].wl;
    dx.psd[k] = 0.5L * (t + t.transpose());
  }
  for (Index j = 0; j < dx.nonneg.size(); ++j) {
    dx.nonneg(j) *= static_cast<long double>(x_.nonneg(j)) / static_cast<long double>(z_.nonneg(j));
  }
  VectorXd out(m_ + f);
  out.head(m_) = apply_extended(p_, dx, f > 0 ? VectorXd(v.tail(f)) : VectorXd());
  if (f > 0) out.tail(f) = lay_.free.transpose() * dy;
  return out;
}

VectorXd InteriorPoint::precondition(const VectorXd& r) const {
  const Index f = static_cast<Index>(p_.free_count);
  VectorXd dy, dxf;
  solve_reduced(r.head(m_), r.tail(f), dy, dxf);
  VectorXd out(m_ + f);
  out.head(m_) = dy;
  out.tail(f) = dxf;
  return out;
}

// Right-preconditioned GMRES for apply_newton(c) = r0, starting from zero.
VectorXd InteriorPoint::gmres(const VectorXd& r0) const {
  const Index n = r0.size();
  const double beta = r0.norm();
  VectorXd sol = VectorXd::Zero(n);
  if (!(beta > 0.0) || !std::isfinite(beta)) return sol;
  MatrixXd v(n, kKrylovDim + 1);
  MatrixXd h = MatrixXd::Zero(kKrylovDim + 1, kKrylovDim);
  VectorXd cs = VectorXd::Zero(kKrylovDim), sn = VectorXd::Zero(kKrylovDim);
  VectorXd g = VectorXd::Zero(kKrylovDim + 1);
  g(0) = beta;
  v.col(0) = r0 / beta;
  Index used = 0;
  for (Index j = 0; j < kKrylovDim; ++j) {
    VectorXd w = apply_newton(precondition(v.col(j)));
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i <= j; ++i) {
        const double hij = v.col(i).dot(w);
        h(i, j) += hij;
        w -= hij * v.col(i);
      }
    }
    h(j + 1, j) = w.norm();
    for (Index i = 0; i < j; ++i) {
      const double a = cs(i) * h(i, j) + sn(i) * h(i + 1, j);
      h(i + 1, j) = -sn(i) * h(i, j) + cs(i) * h(i + 1, j);
      h(i, j) = a;
    }
    const double rr = std::hypot(h(j, j), h(j + 1, j));
    if (!(rr > 0.0)) break;
    cs(j) = h(j, j) / rr;
    sn(j) = h(j + 1, j) / rr;
    h(j, j) = rr;
    h(j + 1, j) = 0.0;
    g(j + 1) = -sn(j) * g(j);
    g(j) *= cs(j);
    used = j + 1;
    if (std::abs(g(j + 1)) <= kKrylovTol * beta) break;
    const double wn = w.norm();
    if (!(wn > 0.0)) break;
    v.col(j + 1) = w / wn;
  }
  if (used == 0) return sol;
  const VectorXd coef =
      h.topLeftCorner(used, used).triangularView<Eigen::Upper>().solve(g.head(used));
  const VectorXd u = v.leftCols(used) * coef;
  return precondition(u);
}

// Solves [M A_f; A_f^T 0] [dy; dxf] = [rhs; rf] by block elimination.
void InteriorPoint::solve_reduced(const VectorXd& rhs, const VectorXd& rf, VectorXd& dy, VectorXd& dxf) const {
  if (p_.free_count == 0) {
    dy = schur_llt_.solve(rhs);
    dxf.resize(0);
    return;
  }
  const VectorXd minv_rhs = schur_llt_.solve(rhs);
  // The factor is regularized; refine against the exact matrix.
  const VectorXd g = lay_.free.transpose() * minv_rhs - rf;
  dxf = free_llt_.solve(g);
  for (int k = 0; k < kFreeRefinements; ++k) dxf += free_llt_.solve(g - free_schur_ * dxf);
  dy = minv_rhs - minv_af_ * dxf;
}

void InteriorPoint::step_lengths(const Direction& d, double& ap, double& ad) const {
  ap = std::numeric_limits<double>::infinity();
  ad = ap;
  for (std::size_t k = 0; k < sc_.size(); ++k) {
    const MatrixXd dx_scaled = d.u[k] - d.dz_scaled[k];
    ap = std::min(ap, max_step_scaled(sc_[k].lambda, dx_scaled));
    ad = std::min(ad, max_step_scaled(sc_[k].lambda, d.dz_scaled[k]));
  }
  ap = std::min(ap, max_step_linear(x_.nonneg, d.dx.nonneg));
  ad = std::min(ad, max_step_linear(z_.nonneg, d.dz.nonneg));
}

void InteriorPoint::fill_report(SolveReport& r) const {
  r.primal_value = pobj_;
  r.dual_value = dobj_;
  r.gap = compl_;
  r.primal_residual = pres_;
  r.dual_residual = dres_;
  r.x = x_;
  r.y = y_;
  r.z = z_;
}

SolveReport InteriorPoint::run() {
  SolveReport rep;
  const bool tracing = trace_enabled(o_);
  std::ostream& log = o_.trace ? *o_.trace : std::cerr;
  initialize();
  int stalls = 0;
  // Best iterate so far by max(pres, dres, relative <X,Z>).
  struct Snapshot {
    ConicVector x, z;
    VectorXd y;
    double merit = std::numeric_limits<double>::infinity();
  } best;

  for (int iter = 0;; ++iter) {
    residuals();
    rep.iterations = iter;
    IterationRecord rec;
    rec.iteration = iter;
    rec.primal_objective = pobj_;
    rec.dual_objective = dobj_;
    rec.complementarity = compl_;
    rec.primal_residual = pres_;
    rec.dual_residual = dres_;
    rec.min_eig_x = std::numeric_limits<double>::infinity();
    rec.min_eig_z = rec.min_eig_x;
    for (std::size_t k = 0; k < x_.psd.size(); ++k) {
      rec.min_eig_x = std::min(rec.min_eig_x, min_eig(x_.psd[k]));
      rec.min_eig_z = std::min(rec.min_eig_z, min_eig(z_.psd[k]));
    }
    if (x_.nonneg.size() > 0) {
      rec.min_eig_x = std::min(rec.min_eig_x, x_.nonneg.minCoeff());
      rec.min_eig_z = std::min(rec.min_eig_z, z_.nonneg.minCoeff());
    }

    const double scale_obj = 1.0 + std::abs(pobj_);
    const bool converged = pres_ <= o_.feas_tol && dres_ <= o_.feas_tol &&
                           compl_ <= o_.gap_tol * scale_obj;
    auto finish = [&](SolveStatus st, std::string msg) {
      rep.history.push_back(rec);
      rep.status = st;
      rep.message = std::move(msg);
      fill_report(rep);
      if (tracing) log << "status " << to_string(st) << (rep.message.empty() ? "" : ": ") << rep.message << '\n';
      return rep;
    };
    if (converged) return finish(SolveStatus::optimal, "");
    const double merit = std::max({pres_, dres_, compl_ / scale_obj});
    if (merit < best.merit) best = {x_, z_, y_, merit};
    // Near a rank-deficient optimum the X side loses accuracy as mu -> 0 and
    // the iteration may break down after the useful digits are in.
    auto fail = [&](SolveStatus st, std::string msg) {
      if (!(best.merit <= o_.reduced_tol)) return finish(st, std::move(msg));
      x_ = std::move(best.x);
      z_ = std::move(best.z);
      y_ = std::move(best.y);
      residuals();
      return finish(SolveStatus::near_optimal, "best iterate after: " + msg);
    };
    if (!std::isfinite(pobj_) || !std::isfinite(dobj_)) return fail(SolveStatus::numerical_failure, "non-finite iterate");
    if (max_abs(x_) > kDivergence || max_abs(z_) > kDivergence ||
        (y_.size() > 0 && y_.cwiseAbs().maxCoeff() > kDivergence)) {
      const char* which = dobj_ > kDivergence ? "dual objective diverges: primal infeasible"
                          : pobj_ < -kDivergence ? "primal objective diverges: dual infeasible"
                                                 : "iterates diverge";
      return finish(SolveStatus::infeasible_certificate, which);
    }
    if (stalls >= 3) return fail(SolveStatus::numerical_failure, "step lengths stalled");
    if (iter >= o_.max_iters) return fail(SolveStatus::max_iters, "iteration limit reached");
    if (!scale()) return fail(SolveStatus::numerical_failure, "iterate left the cone interior");
    if (!assemble_and_factor()) return fail(SolveStatus::numerical_failure, "Schur complement not positive definite");

    const double mu = compl_ / std::max(nu_, 1.0);
    const std::size_t nb = p_.psd_sides.size();

    // Predictor: target zero complementarity.
    std::vector<MatrixXd> rc(nb);
    for (std::size_t k = 0; k < nb; ++k) rc[k] = -MatrixXd(sc_[k].lambda.cwiseAbs2().asDiagonal());
    VectorXd rc_lin = -lin_lambda_.cwiseAbs2();
    Direction aff;
    direction(rc, rc_lin, aff);
    double ap = 0.0, ad = 0.0;
    step_lengths(aff, ap, ad);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);

    double mu_aff = 0.0;
    {
      ConicVector xa = x_, za = z_;
      axpy(ap, aff.dx, xa);
      axpy(ad, aff.dz, za);
      double c = 0.0;
      for (std::size_t k = 0; k < nb; ++k) c += xa.psd[k].cwiseProduct(za.psd[k]).sum();
      c += xa.nonneg.dot(za.nonneg);
      mu_aff = c / std::max(nu_, 1.0);
    }
    double sigma = mu > 0.0 ? std::pow(std::max(mu_aff, 0.0) / mu, 3.0) : 0.0;
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Corrector with second-order term.
    for (std::size_t k = 0; k < nb; ++k) {
      const MatrixXd dxs = aff.u[k] - aff.dz_scaled[k];
      const MatrixXd cross = dxs * aff.dz_scaled[k];
      rc[k] = -MatrixXd(sc_[k].lambda.cwiseAbs2().asDiagonal()) - 0.5 * (cross + cross.transpose());
      rc[k].diagonal().array() += sigma * mu;
    }
    for (Index j = 0; j < rc_lin.size(); ++j) {
      rc_lin(j) = sigma * mu - lin_lambda_(j) * lin_lambda_(j) - aff.dx.nonneg(j) * aff.dz.nonneg(j);
    }
    Direction d;
    direction(rc, rc_lin, d);
    step_lengths(d, ap, ad);
    ap = std::min(1.0, o_.step_fraction * ap);
    ad = std::min(1.0, o_.step_fraction * ad);
    if (!std::isfinite(ap) || !std::isfinite(ad) || !finite(d.dx) || !finite(d.dz) || !d.dy.allFinite()) {
      return fail(SolveStatus::numerical_failure, "non-finite search direction");
    }

    rec.primal_step = ap;
    rec.dual_step = ad;
    rep.history.push_back(rec);
    if (tracing) {
      char line[200];
      std::snprintf(line, sizeof line, "%4d  pobj %+.10e  dobj %+.10e  gap %.3e  pres %.3e  dres %.3e  ap %.3f  ad %.3f\n",
                    iter, pobj_, dobj_, compl_, pres_, dres_, ap, ad);
      log << line;
    }

    // Rounding can leave a nearly singular block indefinite after a full
    // fraction-to-boundary step; shorten the step until factorizable.
    // A side that still cannot move stays put while the other advances.
    bool px = false, pz = false;
    for (int back = 0; back < kBacktracks && !(px && pz); ++back) {
      px = px || interior_after(x_, d.dx, ap);
      pz = pz || interior_after(z_, d.dz, ad);
      if (!px) ap *= kBacktrackFactor;
      if (!pz) ad *= kBacktrackFactor;
    }
    if (!px) ap = 0.0;
    if (!pz) ad = 0.0;
    axpy(ap, d.dx, x_);
    axpy(ad, d.dz, z_);
    y_ += ad * d.dy;

    stalls = (ap < 1e-10 && ad < 1e-10) ? stalls + 1 : 0;
  }
}

}  // namespace

void SolverOptions::validate() const {
  if (!(gap_tol > 0.0)) throw DomainError("gap_tol must be positive");
  if (!(feas_tol > 0.0)) throw DomainError("feas_tol must be positive");
  if (max_iters < 0) throw DomainError("max_iters must be nonnegative");
  if (!(reduced_tol >= 0.0)) throw DomainError("reduced_tol must be nonnegative");
  if (!(step_fraction > 0.0 && step_fraction < 1.0)) throw DomainError("step_fraction must lie in (0, 1)");
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::near_optimal: return "near_optimal";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::numerical_failure: return "numerical_failure";
    case SolveStatus::infeasible_certificate: return "infeasible_certificate";
  }
  return "numerical_failure";
}

SolveStatus solve_status_from_string(const std::string& s) {
  if (s == "optimal") return SolveStatus::optimal;
  if (s == "near_optimal") return SolveStatus::near_optimal;
  if (s == "max_iters") return SolveStatus::max_iters;
  if (s == "numerical_failure") return SolveStatus::numerical_failure;
  if (s == "infeasible_certificate") return SolveStatus::infeasible_certificate;
  throw DomainError("unknown solve status '" + s + "'");
}

SolveReport solve(const StandardSdp& p, const SolverOptions& o) {
  o.validate();
  p.validate();
  InteriorPoint ip(p, o);
  return ip.run();
}

KktResiduals check_kkt(const StandardSdp& p, const SolveReport& r) {
  auto same_shape = [&](const ConicVector& v) {
    if (v.psd.size() != p.psd_sides.size()) return false;
    for (std::size_t k = 0; k < v.psd.size(); ++k) {
      const auto s = static_cast<Index>(p.psd_sides[k]);
      if (v.psd[k].rows() != s || v.psd[k].cols() != s) return false;
    }
    return static_cast<std::size_t>(v.nonneg.size()) == p.nonneg_count &&
           static_cast<std::size_t>(v.free.size()) == p.free_count;
  };
  if (!same_shape(r.x)) throw ContractError("report is missing primal blocks");
  if (!same_shape(r.z)) throw ContractError("report is missing dual slack blocks");
  if (static_cast<std::size_t>(r.y.size()) != p.num_rows()) throw ContractError("report is missing dual multipliers");

  KktResiduals k;
  const double b_norm = p.b.size() > 0 ? p.b.cwiseAbs().maxCoeff() : 0.0;
  const VectorXd rp = p.b - apply_rows(p, r.x);
  k.primal_residual = (rp.size() > 0 ? rp.cwiseAbs().maxCoeff() : 0.0) / (1.0 + b_norm);
  ConicVector rd = p.c;
  axpy(-1.0, adjoint_rows(p, r.y), rd);
  axpy(-1.0, r.z, rd);
  k.dual_residual = max_abs(rd) / (1.0 + max_abs(p.c));
  k.primal_value = inner(p.c, r.x);
  k.dual_value = p.b.dot(r.y);
  k.gap = inner(r.x, r.z);
  return k;
}

}  // namespace qstrat
