#include "asvnav/qp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <vector>

// TEMP instrumentation
namespace qpstat {
inline double& t_ctor() { static double v = 0; return v; }
inline double& t_factor() { static double v = 0; return v; }
inline double& t_eqp() { static double v = 0; return v; }
inline double& t_scan() { static double v = 0; return v; }
inline double& t_stat() { static double v = 0; return v; }
inline double& t_seed() { static double v = 0; return v; }
inline long& n_factor() { static long v = 0; return v; }
inline long& n_runs() { static long v = 0; return v; }
inline long& n_elastic() { static long v = 0; return v; }
struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};
}  // namespace qpstat

namespace asv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct WorkFactor {
  Eigen::ColPivHouseholderQR<MatrixXd> qr;  // of the reduced working rows B
  MatrixXd q1, z;                           // range and null-space bases within the reduced space
  int rows = 0;
  bool rank_ok = false;
};

// Primal active-set solver for one strictly convex QP. Constraints are the
// fixed equality rows plus a working subset of the inequality rows. The
// equality rows never change, so their factorization is done once up front
// and the iteration runs in the coordinates q of the equality null space
// (p = p_eq + Z_e q); each working-set change then only refactors the small
// reduced matrix of working rows instead of the full constraint matrix.
class ActiveSet {
 public:
  ActiveSet(const MatrixXd& h, const VectorXd& g, const MatrixXd& a_eq, const VectorXd& b_eq,
            const MatrixXd& a_in, const VectorXd& b_in)
      : h_(h), g_(g), a_eq_(a_eq), b_eq_(b_eq), a_in_(a_in), b_in_(b_in) {
    qpstat::Timer t_;
    n_ = static_cast<int>(h.rows());
    me_ = static_cast<int>(a_eq.rows());
    mi_ = static_cast<int>(a_in.rows());
    nz_ = n_ - me_;
    row_norm_.resize(mi_);
    for (int i = 0; i < mi_; ++i) row_norm_[i] = std::max(a_in_.row(i).norm(), 1e-30);

    if (me_ > 0) {
      Eigen::ColPivHouseholderQR<MatrixXd> qr(a_eq_.transpose());
      qr.setThreshold(1e-11);
      eq_ok_ = qr.rank() == me_ && me_ <= n_;
      if (!eq_ok_) return;
      const MatrixXd qfull = qr.householderQ() * MatrixXd::Identity(n_, n_);
      q1e_ = qfull.leftCols(me_);
      ze_ = qfull.rightCols(nz_);
      r1e_ = qr.matrixQR().topLeftCorner(me_, me_);
      perm_e_ = qr.colsPermutation();
      p_eq_ = q1e_ * r1e_.transpose().triangularView<Eigen::Lower>().solve(
                         perm_e_.transpose() * b_eq_);
    } else {
      ze_ = MatrixXd::Identity(n_, n_);
      p_eq_ = VectorXd::Zero(n_);
    }
    h_red_ = ze_.transpose() * h_ * ze_;
    g_red_ = ze_.transpose() * (g_ + h_ * p_eq_);
    a_red_ = a_in_ * ze_;
    b_red_ = b_in_ - a_in_ * p_eq_;
    qpstat::t_ctor() += t_.ms();
  }

  // p must satisfy the equalities and inequalities (to working precision).
  // seed may pre-load the working set (rows need not be active at p: working
  // rows only ever move toward their faces, so feasibility is preserved);
  // final_w receives the working set at the solution.
  QpStatus run(VectorXd& p, VectorXd& lambda_eq, VectorXd& mu_in, int& iterations,
               std::vector<int>* final_w = nullptr, const std::vector<int>* seed = nullptr) {
    if (!eq_ok_) return QpStatus::failure;  // equality rows dependent
    qpstat::n_runs()++;
    VectorXd q = ze_.transpose() * (p - p_eq_);
    std::vector<int> w;  // indices into inequality rows
    { qpstat::Timer t_; if (seed) seed_from(*seed, w); seed_working_set(q, w); qpstat::t_seed() += t_.ms(); }

    const int max_iter = 5 * (n_ + me_ + mi_) + 50;
    for (int iter = 0; iter < max_iter; ++iter) {
      iterations = iter + 1;
      qpstat::Timer tf_;
      WorkFactor f = factor(w);
      qpstat::t_factor() += tf_.ms(); qpstat::n_factor()++;
      if (!f.rank_ok) {
        if (w.empty()) return QpStatus::failure;
        w.pop_back();
        continue;
      }
      qpstat::Timer te_;
      VectorXd q_star = eqp_solve(f, w);
      qpstat::t_eqp() += te_.ms();
      if (!q_star.allFinite()) return QpStatus::failure;
      const VectorXd d = q_star - q;

      bool stationary = d.lpNorm<Eigen::Infinity>() <= 1e-11 * (1.0 + q.lpNorm<Eigen::Infinity>());
      if (!stationary) {
        qpstat::Timer ts_;
        double alpha = 1.0;
        int blocker = -1;
        const double dnorm = d.norm();
        for (int i = 0; i < mi_; ++i) {
          if (in_set(w, i)) continue;
          const double ad = a_red_.row(i).dot(d);
          if (ad >= -1e-13 * row_norm_[i] * dnorm) continue;
          const double resid = std::max(0.0, a_red_.row(i).dot(q) - b_red_[i]);
          const double ai = resid / (-ad);
          if (ai < alpha) {
            alpha = ai;
            blocker = i;
          }
        }
        if (blocker < 0) {
          q = q_star;
          stationary = true;
          qpstat::t_scan() += ts_.ms();
        } else {
          q += alpha * d;
          add_row(w, blocker);
          qpstat::t_scan() += ts_.ms();
          continue;
        }
      }

      if (stationary) {
        qpstat::Timer tm_;
        // multipliers for the working set at the stationary point
        const VectorXd grad = h_ * (p_eq_ + ze_ * q) + g_;
        const int mw = static_cast<int>(w.size());
        VectorXd mu_w = VectorXd::Zero(mw);
        if (mw > 0) {
          const VectorXd rhs = f.q1.transpose() * (ze_.transpose() * grad);
          mu_w = f.qr.colsPermutation() *
                 f.qr.matrixQR()
                     .topLeftCorner(mw, mw)
                     .template triangularView<Eigen::Upper>()
                     .solve(rhs);
        }
        int drop = -1;
        double mu_min = -1e-8 * (1.0 + grad.lpNorm<Eigen::Infinity>());
        for (int k = 0; k < mw; ++k) {
          if (mu_w[k] < mu_min) {
            mu_min = mu_w[k];
            drop = k;
          }
        }
        if (drop < 0) {
          VectorXd resid = grad;
          for (int k = 0; k < mw; ++k) resid -= mu_w[k] * a_in_.row(w[k]).transpose();
          lambda_eq = VectorXd::Zero(me_);
          if (me_ > 0) {
            lambda_eq = perm_e_ * r1e_.triangularView<Eigen::Upper>().solve(
                                      q1e_.transpose() * resid);
          }
          mu_in = VectorXd::Zero(mi_);
          for (int k = 0; k < mw; ++k) mu_in[w[k]] = std::max(0.0, mu_w[k]);
          p = p_eq_ + ze_ * q;
          if (final_w) *final_w = w;
          qpstat::t_stat() += tm_.ms();
          return QpStatus::optimal;
        }
        w.erase(w.begin() + drop);
        qpstat::t_stat() += tm_.ms();
      }
    }
    return QpStatus::failure;
  }

 private:
  static bool in_set(const std::vector<int>& w, int i) {
    return std::find(w.begin(), w.end(), i) != w.end();
  }

  // Adopt a caller-supplied working set, dropping out-of-range, duplicate,
  // and rank-breaking rows.
  // Greedily accept candidate rows that stay numerically independent of the
  // equality rows and of one another, via incremental orthonormalization of
  // the reduced rows (a row dependent on the equalities reduces to ~zero).
  // One pass over the candidates; refactorizing per row would dwarf the cost
  // of the solve itself.
  void seed_rows(const std::vector<int>& cand, std::vector<int>& w) {
    if (nz_ <= 0) return;
    MatrixXd qb(nz_, nz_);
    int nb = 0;
    const auto residual = [&](const VectorXd& v) {
      VectorXd r = v;
      if (nb > 0) {
        r -= qb.leftCols(nb) * (qb.leftCols(nb).transpose() * v);
        r -= qb.leftCols(nb) * (qb.leftCols(nb).transpose() * r);  // reorthogonalize
      }
      return r;
    };
    for (int k = 0; k < static_cast<int>(w.size()) && nb < nz_; ++k) {
      const VectorXd r = residual(a_red_.row(w[k]).transpose());
      if (r.norm() > 1e-10) qb.col(nb++) = r / r.norm();
    }
    for (int i : cand) {
      if (static_cast<int>(w.size()) >= nz_ || nb >= nz_) break;
      if (i < 0 || i >= mi_ || in_set(w, i)) continue;
      const VectorXd r = residual(a_red_.row(i).transpose());
      if (r.norm() <= 1e-10 * std::max(1.0, row_norm_[i])) continue;
      qb.col(nb++) = r / r.norm();
      w.push_back(i);
    }
  }

  void seed_from(const std::vector<int>& seed, std::vector<int>& w) { seed_rows(seed, w); }

  // Start from the inequality rows active at q, added while they stay
  // linearly independent of the equality rows.
  void seed_working_set(const VectorXd& q, std::vector<int>& w) {
    std::vector<int> cand;
    for (int i = 0; i < mi_; ++i) {
      if (in_set(w, i)) continue;
      const double resid = (a_red_.row(i).dot(q) - b_red_[i]) / row_norm_[i];
      if (std::abs(resid) <= 1e-10) cand.push_back(i);
    }
    seed_rows(cand, w);
  }

  // When a blocking row is linearly dependent on the working set, swap it in
  // for a dependent working inequality row instead of growing the set.
  void add_row(std::vector<int>& w, int row) {
    w.push_back(row);
    if (factor(w).rank_ok) return;
    w.pop_back();
    // find the dependency coefficients: B y = b_row in the reduced space
    WorkFactor f = factor(w);
    VectorXd y = VectorXd::Zero(static_cast<Eigen::Index>(w.size()));
    if (!w.empty()) y = f.qr.solve(a_red_.row(row).transpose());
    int swap = -1;
    double best = 1e-9;
    for (int k = 0; k < static_cast<int>(w.size()); ++k) {
      if (std::abs(y[k]) > best) {
        best = std::abs(y[k]);
        swap = k;
      }
    }
    if (swap < 0) return;  // dependent on equalities alone; drop the blocker
    w.erase(w.begin() + swap);
    w.push_back(row);
    if (!factor(w).rank_ok) w.pop_back();
  }

  WorkFactor factor(const std::vector<int>& w) {
    const int mw = static_cast<int>(w.size());
    WorkFactor f;
    f.rows = mw;
    if (mw == 0) {  // empty QR crashes inside Eigen's column-pivot search
      f.rank_ok = true;
      f.q1.resize(nz_, 0);
      f.z = MatrixXd::Identity(nz_, nz_);
      return f;
    }
    MatrixXd b(nz_, mw);
    for (int k = 0; k < mw; ++k) b.col(k) = a_red_.row(w[k]).transpose();
    f.qr.compute(b);
    f.qr.setThreshold(1e-11);
    f.rank_ok = f.qr.rank() == mw && mw <= nz_;
    if (f.rank_ok) {
      const MatrixXd q = f.qr.householderQ() * MatrixXd::Identity(nz_, nz_);
      f.q1 = q.leftCols(mw);
      f.z = q.rightCols(nz_ - mw);
    }
    return f;
  }

  // min over the equality null space: 1/2 q'H_red q + g_red'q  s.t. B^T q = b_W,
  // via q = q_part + Z y.
  VectorXd eqp_solve(const WorkFactor& f, const std::vector<int>& w) {
    const int mw = f.rows;
    VectorXd q_part = VectorXd::Zero(nz_);
    if (mw > 0) {
      VectorXd b_w(mw);
      for (int k = 0; k < mw; ++k) b_w[k] = b_red_[w[k]];
      const VectorXd pb = f.qr.colsPermutation().transpose() * b_w;
      const VectorXd y = f.qr.matrixQR()
                             .topLeftCorner(mw, mw)
                             .template triangularView<Eigen::Upper>()
                             .transpose()
                             .solve(pb);
      q_part = f.q1 * y;
    }
    const int nf = static_cast<int>(f.z.cols());
    if (nf == 0) return q_part;
    MatrixXd hz = f.z.transpose() * h_red_ * f.z;
    const VectorXd rhs = -f.z.transpose() * (g_red_ + h_red_ * q_part);
    Eigen::LLT<MatrixXd> llt(hz);
    if (llt.info() != Eigen::Success) {
      hz += 1e-10 * (1.0 + hz.diagonal().cwiseAbs().maxCoeff()) * MatrixXd::Identity(nf, nf);
      llt.compute(hz);
      if (llt.info() != Eigen::Success) return VectorXd::Constant(nz_, kInf);
    }
    return q_part + f.z * llt.solve(rhs);
  }

  const MatrixXd& h_;
  const VectorXd& g_;
  const MatrixXd& a_eq_;
  const VectorXd& b_eq_;
  const MatrixXd& a_in_;
  const VectorXd& b_in_;
  std::vector<double> row_norm_;
  int n_ = 0, me_ = 0, mi_ = 0, nz_ = 0;
  bool eq_ok_ = true;
  // fixed equality-block factorization: A_eq^T = [Q1e Ze] [R1e; 0] P^T
  MatrixXd q1e_, ze_, r1e_;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> perm_e_;
  VectorXd p_eq_;    // particular solution of the equality rows
  MatrixXd h_red_;   // Ze^T H Ze
  VectorXd g_red_;   // Ze^T (g + H p_eq)
  MatrixXd a_red_;   // inequality rows mapped into the reduced space
  VectorXd b_red_;   // matching right-hand sides
};

// Minimum-norm solution of a_eq p = b_eq (zero when there are no equalities).
VectorXd least_norm_point(const MatrixXd& a_eq, const VectorXd& b_eq, int n) {
  if (a_eq.rows() == 0) return VectorXd::Zero(n);
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(a_eq);
  return cod.solve(b_eq);
}

double worst_violation(const MatrixXd& a_in, const VectorXd& b_in, const VectorXd& p) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a_in.rows(); ++i) {
    const double norm = std::max(a_in.row(i).norm(), 1e-30);
    worst = std::max(worst, (b_in[i] - a_in.row(i).dot(p)) / norm);
  }
  return worst;
}

}  // namespace

static void qp_stats_dump() {
  std::fprintf(stderr,
               "[qp-stats] runs=%ld elastic=%ld factors=%ld ctor=%.1f seed=%.1f factor=%.1f "
               "eqp=%.1f scan=%.1f stat=%.1f\n",
               qpstat::n_runs(), qpstat::n_elastic(), qpstat::n_factor(), qpstat::t_ctor(),
               qpstat::t_seed(), qpstat::t_factor(), qpstat::t_eqp(), qpstat::t_scan(),
               qpstat::t_stat());
}

QpResult solve_qp(const QpProblem& qp, const VectorXd* warm, const std::vector<int>* warm_active) {
  if (std::getenv("ASVNAV_QP_STATS")) {
    static const bool once = [] {
      std::atexit(qp_stats_dump);
      return true;
    }();
    (void)once;
  }
  const int n = static_cast<int>(qp.h.rows());
  const int me = static_cast<int>(qp.a_eq.rows());
  const int mi = static_cast<int>(qp.a_in.rows());

  if (qp.g.size() != n || qp.h.cols() != n) throw DimensionError("solve_qp: H/g size mismatch");
  if (qp.b_eq.size() != me || (me > 0 && qp.a_eq.cols() != n)) {
    throw DimensionError("solve_qp: equality block size mismatch");
  }
  if (qp.b_in.size() != mi || (mi > 0 && qp.a_in.cols() != n)) {
    throw DimensionError("solve_qp: inequality block size mismatch");
  }
  VectorXd weight = qp.elastic_weight;
  if (weight.size() == 0) weight = VectorXd::Ones(mi);
  if (weight.size() != mi) throw DimensionError("solve_qp: elastic_weight size mismatch");

  QpResult res;
  res.slack = VectorXd::Zero(mi);
  res.mu_in = VectorXd::Zero(mi);
  res.lambda_eq = VectorXd::Zero(me);

  // Try a directly feasible start: projected warm point first, then the
  // least-norm equality solution.
  std::vector<VectorXd> candidates;
  if (warm && warm->size() == n) {
    VectorXd pw = *warm;
    if (me > 0) {
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(qp.a_eq);
      pw -= cod.solve(qp.a_eq * pw - qp.b_eq);
    }
    candidates.push_back(pw);
  }
  candidates.push_back(least_norm_point(qp.a_eq, qp.b_eq, n));

  const std::vector<int>* seed = warm_active;
  VectorXd p_start;  // best (least-violating) start seen; used by repair and elastic
  double viol_start = kInf;
  for (const VectorXd& p0 : candidates) {
    const double v = worst_violation(qp.a_in, qp.b_in, p0);
    if (v < viol_start) {
      viol_start = v;
      p_start = p0;
    }
    if (v > 1e-10) continue;
    VectorXd p = p0;
    int iters = 0;
    std::vector<int> w_final;
    const QpStatus st = ActiveSet(qp.h, qp.g, qp.a_eq, qp.b_eq, qp.a_in, qp.b_in)
                            .run(p, res.lambda_eq, res.mu_in, iters, &w_final, seed);
    seed = nullptr;  // fall back to a clean cold start if the seeded run fails
    res.iterations += iters;
    if (st == QpStatus::optimal) {
      res.status = QpStatus::optimal;
      res.p = p;
      res.active = std::move(w_final);
      return res;
    }
  }

  // Feasibility repair: project the best candidate onto the faces of the
  // violated rows (treated as equalities with a small interior margin)
  // within the equality manifold. Mild start violations — the common case in
  // the middle of an SQP run — disappear within a few projections, at a
  // fraction of the cost of an elastic solve.
  if (viol_start > 1e-10) {
    std::vector<int> faces;
    const auto in_faces = [&](int i) {
      return std::find(faces.begin(), faces.end(), i) != faces.end();
    };
    for (int round = 0; round < 6; ++round) {
      bool any_new = false;
      for (int i = 0; i < mi; ++i) {
        const double norm = std::max(qp.a_in.row(i).norm(), 1e-30);
        if ((qp.b_in[i] - qp.a_in.row(i).dot(p_start)) / norm > 1e-10 && !in_faces(i)) {
          faces.push_back(i);
          any_new = true;
        }
      }
      if (!any_new) break;
      const int mf = static_cast<int>(faces.size());
      if (me + mf >= n) break;
      MatrixXd a_s(me + mf, n);
      VectorXd b_s(me + mf);
      if (me > 0) {
        a_s.topRows(me) = qp.a_eq;
        b_s.head(me) = qp.b_eq;
      }
      for (int k = 0; k < mf; ++k) {
        a_s.row(me + k) = qp.a_in.row(faces[k]);
        b_s[me + k] = qp.b_in[faces[k]] + 1e-8 * std::max(qp.a_in.row(faces[k]).norm(), 1e-30);
      }
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(a_s);
      const VectorXd p_next = p_start - cod.solve(a_s * p_start - b_s);
      if (!p_next.allFinite()) break;
      p_start = p_next;
    }
    const double v = worst_violation(qp.a_in, qp.b_in, p_start);
    if (v <= 1e-10) {
      viol_start = v;
      VectorXd p = p_start;
      int iters = 0;
      std::vector<int> w_final;
      const QpStatus st = ActiveSet(qp.h, qp.g, qp.a_eq, qp.b_eq, qp.a_in, qp.b_in)
                              .run(p, res.lambda_eq, res.mu_in, iters, &w_final, warm_active);
      res.iterations += iters;
      if (st == QpStatus::optimal) {
        res.status = QpStatus::optimal;
        res.p = p;
        res.active = std::move(w_final);
        return res;
      }
    }
  }

  qpstat::n_elastic()++;
  const bool qdbg = std::getenv("ASVNAV_QP_STATS") != nullptr;
  // Elastic relaxation: add one slack variable per relaxed inequality row,
  // heavily penalized, so the relaxed QP has a strictly feasible start.
  // Only rows violated at the start point need slacks — a primal-feasible
  // iteration keeps initially satisfied rows satisfied — which keeps the
  // extended problem close to the original one. Hard rows (weight 0) always
  // keep their original form; if none are violated and the start was
  // feasible (the active set failed for another reason), fall back to
  // relaxing every soft row.
  if (me > 0) {  // re-project: the face repair may have traded equality residual
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(qp.a_eq);
    p_start -= cod.solve(qp.a_eq * p_start - qp.b_eq);
  }
  std::vector<int> soft;
  for (int i = 0; i < mi; ++i) {
    if (weight[i] <= 0.0) continue;
    const double norm = std::max(qp.a_in.row(i).norm(), 1e-30);
    if ((qp.b_in[i] - qp.a_in.row(i).dot(p_start)) / norm > 1e-10) soft.push_back(i);
  }
  if (soft.empty()) {
    for (int i = 0; i < mi; ++i) {
      if (weight[i] > 0.0) soft.push_back(i);
    }
  }
  const int ns = static_cast<int>(soft.size());
  const int ne = n + ns;
  if (qdbg) {
    std::fprintf(stderr, "[qp-el] viol_start=%.3e ns=%d  ", viol_start, ns);
  }

  double rho = 1e4 * (1.0 + qp.g.lpNorm<Eigen::Infinity>());
  const double h_scale = 1.0 + qp.h.diagonal().cwiseAbs().maxCoeff();

  for (int attempt = 0; attempt < 3; ++attempt) {
    MatrixXd h_ext = MatrixXd::Zero(ne, ne);
    h_ext.topLeftCorner(n, n) = qp.h;
    h_ext.bottomRightCorner(ns, ns) = 1e-8 * h_scale * MatrixXd::Identity(ns, ns);
    VectorXd g_ext(ne);
    g_ext.head(n) = qp.g;
    for (int k = 0; k < ns; ++k) g_ext[n + k] = rho * weight[soft[k]];

    MatrixXd a_eq_ext = MatrixXd::Zero(me, ne);
    if (me > 0) a_eq_ext.leftCols(n) = qp.a_eq;

    MatrixXd a_in_ext = MatrixXd::Zero(mi + ns, ne);
    VectorXd b_in_ext(mi + ns);
    if (mi > 0) {
      a_in_ext.topLeftCorner(mi, n) = qp.a_in;
      b_in_ext.head(mi) = qp.b_in;
    }
    for (int k = 0; k < ns; ++k) {
      a_in_ext(soft[k], n + k) = 1.0;       // a_j p + t_j >= b_j
      a_in_ext(mi + k, n + k) = 1.0;        // t_j >= 0
      b_in_ext[mi + k] = 0.0;
    }

    VectorXd p_ext = VectorXd::Zero(ne);
    p_ext.head(n) = p_start;
    for (int k = 0; k < ns; ++k) {
      const int j = soft[k];
      p_ext[n + k] = std::max(0.0, qp.b_in[j] - qp.a_in.row(j).dot(p_ext.head(n))) + 1.0;
    }
    if (worst_violation(a_in_ext, b_in_ext, p_ext) > 1e-10) {
      res.status = QpStatus::infeasible;  // unrelaxed rows conflict with the equalities
      return res;
    }

    // seed with the slack-floor rows (slacks want to be zero) plus the
    // caller's warm active set
    std::vector<int> seed_ext;
    for (int k = 0; k < ns; ++k) seed_ext.push_back(mi + k);
    if (warm_active) {
      for (int i : *warm_active) {
        if (i >= 0 && i < mi) seed_ext.push_back(i);
      }
    }

    VectorXd lam_eq, mu_ext;
    int iters = 0;
    std::vector<int> w_final;
    const QpStatus st = ActiveSet(h_ext, g_ext, a_eq_ext, qp.b_eq, a_in_ext, b_in_ext)
                            .run(p_ext, lam_eq, mu_ext, iters, &w_final, &seed_ext);
    res.iterations += iters;
    if (qdbg) {
      double msl = 0.0;
      for (int k = 0; k < ns; ++k) msl = std::max(msl, p_ext[n + k]);
      std::fprintf(stderr, "el-iters=%d st=%d max_slack=%.3e\n", iters, static_cast<int>(st), msl);
    }
    if (st != QpStatus::optimal) {
      res.status = QpStatus::failure;
      return res;
    }

    res.p = p_ext.head(n);
    res.lambda_eq = lam_eq;
    res.mu_in = mu_ext.head(mi);
    res.slack = VectorXd::Zero(mi);
    for (int k = 0; k < ns; ++k) res.slack[soft[k]] = std::max(0.0, p_ext[n + k]);
    res.max_slack = res.slack.size() ? res.slack.maxCoeff() : 0.0;
    res.active.clear();
    for (int i : w_final) {  // keep only rows of the original problem
      if (i < mi) res.active.push_back(i);
    }

    // Exact-penalty insurance: guarded rows (large weights, e.g. input box
    // rows) must come back with zero slack; escalate rho if they did not.
    bool guarded_ok = true;
    for (int k = 0; k < ns; ++k) {
      if (weight[soft[k]] >= 100.0 && res.slack[soft[k]] > 1e-7) guarded_ok = false;
    }
    if (guarded_ok) {
      res.status = res.max_slack > 1e-8 ? QpStatus::elastic : QpStatus::optimal;
      return res;
    }
    rho *= 100.0;
  }
  res.status = QpStatus::elastic;
  return res;
}

}  // namespace asv
