#include "fibertopo/mma.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fibertopo {

namespace {

using Eigen::ArrayXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Subproblem {
  int n = 0;
  int m = 0;
  ArrayXd low, upp, alpha, beta, p0, q0;
  MatrixXd pmat, qmat;  // m x n
  ArrayXd a, b, c, d;
  double a0 = 1.0;
};

struct Iterate {
  ArrayXd x, y, lam, xsi, eta, mu, s;
  double z = 1.0;
  double zet = 1.0;
};

struct Residual {
  double norm = 0.0;
  double max = 0.0;
};

Residual residual(const Subproblem& sp, const Iterate& it, double epsi) {
  const ArrayXd ux1 = sp.upp - it.x;
  const ArrayXd xl1 = it.x - sp.low;
  const ArrayXd plam = sp.p0 + (sp.pmat.transpose() * it.lam.matrix()).array();
  const ArrayXd qlam = sp.q0 + (sp.qmat.transpose() * it.lam.matrix()).array();
  const ArrayXd gvec = (sp.pmat * (1.0 / ux1).matrix()).array() +
                       (sp.qmat * (1.0 / xl1).matrix()).array();
  const ArrayXd dpsidx = plam / (ux1 * ux1) - qlam / (xl1 * xl1);

  double sq = 0.0;
  double mx = 0.0;
  auto acc = [&](const ArrayXd& r) {
    sq += r.square().sum();
    if (r.size() > 0) mx = std::max(mx, r.abs().maxCoeff());
  };
  auto acc1 = [&](double r) {
    sq += r * r;
    mx = std::max(mx, std::abs(r));
  };
  acc(dpsidx - it.xsi + it.eta);
  acc(sp.c + sp.d * it.y - it.mu - it.lam);
  acc1(sp.a0 - it.zet - (sp.a * it.lam).sum());
  acc(gvec - sp.a * it.z - it.y + it.s - sp.b);
  acc(it.xsi * (it.x - sp.alpha) - epsi);
  acc(it.eta * (sp.beta - it.x) - epsi);
  acc(it.mu * it.y - epsi);
  acc1(it.zet * it.z - epsi);
  acc(it.lam * it.s - epsi);
  return {std::sqrt(sq), mx};
}

double max_step_ratio(const ArrayXd& dv, const ArrayXd& v) {
  if (v.size() == 0) return 0.0;
  return (-1.01 * dv / v).maxCoeff();
}

// Primal-dual Newton iterations on the relaxed KKT system, driving the
// relaxation epsi from 1 down to epsimin.
Iterate solve_subproblem(const Subproblem& sp, double epsimin, double& final_residual,
                         int& newton_iterations) {
  const int n = sp.n;
  const int m = sp.m;
  Iterate it;
  it.x = 0.5 * (sp.alpha + sp.beta);
  it.y = ArrayXd::Ones(m);
  it.lam = ArrayXd::Ones(m);
  it.xsi = (1.0 / (it.x - sp.alpha)).max(1.0);
  it.eta = (1.0 / (sp.beta - it.x)).max(1.0);
  it.mu = (0.5 * sp.c).max(1.0);
  it.s = ArrayXd::Ones(m);
  it.z = 1.0;
  it.zet = 1.0;

  double epsi = 1.0;
  newton_iterations = 0;
  Residual res{};
  for (;;) {
    res = residual(sp, it, epsi);
    int inner = 0;
    while (res.max > 0.9 * epsi && inner < 200) {
      ++inner;
      ++newton_iterations;
      const ArrayXd ux1 = sp.upp - it.x;
      const ArrayXd xl1 = it.x - sp.low;
      const ArrayXd ux2 = ux1 * ux1;
      const ArrayXd xl2 = xl1 * xl1;
      const ArrayXd ux3 = ux1 * ux2;
      const ArrayXd xl3 = xl1 * xl2;
      const ArrayXd plam = sp.p0 + (sp.pmat.transpose() * it.lam.matrix()).array();
      const ArrayXd qlam = sp.q0 + (sp.qmat.transpose() * it.lam.matrix()).array();
      const ArrayXd gvec = (sp.pmat * (1.0 / ux1).matrix()).array() +
                           (sp.qmat * (1.0 / xl1).matrix()).array();
      // GG = P diag(1/ux2) - Q diag(1/xl2)
      const MatrixXd gg = sp.pmat * (1.0 / ux2).matrix().asDiagonal() -
                          sp.qmat * (1.0 / xl2).matrix().asDiagonal();
      const ArrayXd dpsidx = plam / ux2 - qlam / xl2;
      const ArrayXd delx = dpsidx - epsi / (it.x - sp.alpha) + epsi / (sp.beta - it.x);
      const ArrayXd dely = sp.c + sp.d * it.y - it.lam - epsi / it.y;
      const double delz = sp.a0 - (sp.a * it.lam).sum() - epsi / it.z;
      const ArrayXd dellam = gvec - sp.a * it.z - it.y - sp.b + epsi / it.lam;
      const ArrayXd diagx =
          2.0 * (plam / ux3 + qlam / xl3) + it.xsi / (it.x - sp.alpha) + it.eta / (sp.beta - it.x);
      const ArrayXd diagxinv = 1.0 / diagx;
      const ArrayXd diagy = sp.d + it.mu / it.y;
      const ArrayXd diaglamyi = it.s / it.lam + 1.0 / diagy;

      // Reduced (m+1) x (m+1) system in (dlam, dz).
      MatrixXd aa(m + 1, m + 1);
      aa.topLeftCorner(m, m) = gg * diagxinv.matrix().asDiagonal() * gg.transpose();
      aa.topLeftCorner(m, m).diagonal() += diaglamyi.matrix();
      aa.topRightCorner(m, 1) = sp.a.matrix();
      aa.bottomLeftCorner(1, m) = sp.a.matrix().transpose();
      aa(m, m) = -it.zet / it.z;
      VectorXd bb(m + 1);
      bb.head(m) = (dellam + dely / diagy).matrix() - gg * (delx / diagx).matrix();
      bb[m] = delz;
      const VectorXd sol = aa.partialPivLu().solve(bb);
      const ArrayXd dlam = sol.head(m).array();
      const double dz = sol[m];
      const ArrayXd dx = -delx / diagx - (gg.transpose() * dlam.matrix()).array() / diagx;
      const ArrayXd dy = -dely / diagy + dlam / diagy;
      const ArrayXd dxsi = -it.xsi + epsi / (it.x - sp.alpha) - it.xsi * dx / (it.x - sp.alpha);
      const ArrayXd deta = -it.eta + epsi / (sp.beta - it.x) + it.eta * dx / (sp.beta - it.x);
      const ArrayXd dmu = -it.mu + epsi / it.y - it.mu * dy / it.y;
      const double dzet = -it.zet + epsi / it.z - it.zet * dz / it.z;
      const ArrayXd ds = -it.s + epsi / it.lam - it.s * dlam / it.lam;

      double stm = 1.0;
      stm = std::max(stm, max_step_ratio(dy, it.y));
      stm = std::max(stm, -1.01 * dz / it.z);
      stm = std::max(stm, max_step_ratio(dlam, it.lam));
      stm = std::max(stm, max_step_ratio(dxsi, it.xsi));
      stm = std::max(stm, max_step_ratio(deta, it.eta));
      stm = std::max(stm, max_step_ratio(dmu, it.mu));
      stm = std::max(stm, -1.01 * dzet / it.zet);
      stm = std::max(stm, max_step_ratio(ds, it.s));
      stm = std::max(stm, (-1.01 * dx / (it.x - sp.alpha)).maxCoeff());
      stm = std::max(stm, (1.01 * dx / (sp.beta - it.x)).maxCoeff());
      double step = 1.0 / stm;

      const Iterate old = it;
      Residual trial{2.0 * res.norm, 0.0};
      for (int backtrack = 0; backtrack < 50 && trial.norm > res.norm; ++backtrack) {
        it.x = old.x + step * dx;
        it.y = old.y + step * dy;
        it.z = old.z + step * dz;
        it.lam = old.lam + step * dlam;
        it.xsi = old.xsi + step * dxsi;
        it.eta = old.eta + step * deta;
        it.mu = old.mu + step * dmu;
        it.zet = old.zet + step * dzet;
        it.s = old.s + step * ds;
        trial = residual(sp, it, epsi);
        step *= 0.5;
      }
      res = trial;
    }
    if (epsi <= epsimin * (1.0 + 1e-9)) break;
    epsi = std::max(0.1 * epsi, epsimin);
  }
  (void)n;
  final_residual = res.max;
  return it;
}

}  // namespace

MmaSolver::MmaSolver(VectorXd xmin, VectorXd xmax, VectorXd move, int num_constraints,
                     MmaSettings settings)
    : xmin_(std::move(xmin)),
      xmax_(std::move(xmax)),
      move_(std::move(move)),
      m_(num_constraints),
      settings_(settings) {
  if (xmin_.size() != xmax_.size() || move_.size() != xmin_.size()) {
    throw std::invalid_argument("mma: bound and move vectors must have equal length");
  }
  if (((xmax_ - xmin_).array() <= 0.0).any()) {
    throw std::invalid_argument("mma: xmax must exceed xmin");
  }
  if (m_ < 0) throw std::invalid_argument("mma: negative constraint count");
}

MmaSolver::Step MmaSolver::update(const VectorXd& xval, const VectorXd& df0, const VectorXd& g,
                                  const MatrixXd& dg) {
  const int n = num_variables();
  if (xval.size() != n || df0.size() != n || g.size() != m_ || dg.rows() != m_ ||
      dg.cols() != n) {
    throw std::invalid_argument("mma: dimension mismatch");
  }
  if (!df0.allFinite() || !g.allFinite() || !dg.allFinite()) {
    throw std::invalid_argument("mma: non-finite function or gradient value");
  }
  ++iter_;
  const ArrayXd x = xval.array();
  // The move limits shrink the box the approximation is built on; the
  // asymptote spacing scales with this local box.
  const ArrayXd lo = (x - move_.array()).max(xmin_.array());
  const ArrayXd hi = (x + move_.array()).min(xmax_.array());
  const ArrayXd range = (hi - lo).max(1e-5);

  // Asymptotes.
  if (iter_ <= 2) {
    low_ = (x - settings_.asy_init * range).matrix();
    upp_ = (x + settings_.asy_init * range).matrix();
  } else {
    const ArrayXd zzz = (x - xold1_.array()) * (xold1_.array() - xold2_.array());
    ArrayXd factor = ArrayXd::Ones(n);
    factor = (zzz > 0.0).select(settings_.asy_incr, factor);
    factor = (zzz < 0.0).select(settings_.asy_decr, factor);
    ArrayXd low = x - factor * (xold1_.array() - low_.array());
    ArrayXd upp = x + factor * (upp_.array() - xold1_.array());
    low = low.max(x - settings_.asy_max * range).min(x - settings_.asy_min * range);
    upp = upp.min(x + settings_.asy_max * range).max(x + settings_.asy_min * range);
    low_ = low.matrix();
    upp_ = upp.matrix();
  }

  // A problem without constraints gets one inert constraint 0 <= 1.
  const int m = std::max(m_, 1);
  Subproblem sp;
  sp.n = n;
  sp.m = m;
  sp.low = low_.array();
  sp.upp = upp_.array();
  sp.alpha = (sp.low + settings_.albefa * (x - sp.low))
                 .max(lo);
  sp.beta = (sp.upp - settings_.albefa * (sp.upp - x))
                .min(hi);

  const ArrayXd ux2 = (sp.upp - x).square();
  const ArrayXd xl2 = (x - sp.low).square();
  const ArrayXd reg = settings_.raa0 / range;
  {
    const ArrayXd pos = df0.array().max(0.0);
    const ArrayXd neg = (-df0.array()).max(0.0);
    const ArrayXd pq = 0.001 * (pos + neg) + reg;
    sp.p0 = (pos + pq) * ux2;
    sp.q0 = (neg + pq) * xl2;
  }
  sp.pmat = MatrixXd::Zero(m, n);
  sp.qmat = MatrixXd::Zero(m, n);
  ArrayXd gval = ArrayXd::Constant(m, -1.0);
  for (int i = 0; i < m_; ++i) {
    const ArrayXd row = dg.row(i).transpose().array();
    const ArrayXd pos = row.max(0.0);
    const ArrayXd neg = (-row).max(0.0);
    const ArrayXd pq = 0.001 * (pos + neg) + reg;
    sp.pmat.row(i) = ((pos + pq) * ux2).matrix().transpose();
    sp.qmat.row(i) = ((neg + pq) * xl2).matrix().transpose();
    gval[i] = g[i];
  }
  if (m_ == 0) {
    sp.pmat.row(0) = (reg * ux2).matrix().transpose();
    sp.qmat.row(0) = (reg * xl2).matrix().transpose();
  }
  sp.b = (sp.pmat * (1.0 / (sp.upp - x)).matrix()).array() +
         (sp.qmat * (1.0 / (x - sp.low)).matrix()).array() - gval;
  sp.a0 = settings_.a0;
  sp.a = ArrayXd::Zero(m);
  sp.c = ArrayXd::Constant(m, settings_.c);
  sp.d = ArrayXd::Constant(m, settings_.d);

  Step step;
  const Iterate sol = solve_subproblem(sp, settings_.epsimin, step.kkt_residual,
                                       step.newton_iterations);
  step.x = sol.x.matrix();
  // Guard against round-off leaving the box.
  step.x = step.x.cwiseMax(xmin_).cwiseMin(xmax_);
  step.relaxed = m_ > 0 && sol.y.head(m_).maxCoeff() > 1e-6;

  xold2_ = iter_ >= 2 ? xold1_ : xval;
  xold1_ = xval;
  return step;
}

}  // namespace fibertopo
