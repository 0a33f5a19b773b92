#include <cmath>
#include <string>

#include "sdr/error.hpp"
#include "sdr/scores.hpp"

namespace sdr {

std::pair<Vector, Index> mean_score(const Matrix& rows,
                                    const std::vector<char>& trimmed) {
  const Index n = rows.rows();
  Vector m = Vector::Zero(rows.cols());
  Index used = 0;
  for (Index i = 0; i < n; ++i) {
    if (!trimmed.empty() && trimmed[i]) continue;
    m += rows.row(i).transpose();
    ++used;
  }
  if (used > 0) m /= double(used);
  return {m, used};
}

namespace {

Vector mean_at(const ScoreEvaluator& ev, VecRef v, Index p, Index d,
               Index* used = nullptr) {
  std::vector<char> trimmed;
  Matrix rows = ev.rows(unvecl(v, p, d), &trimmed);
  auto [m, n_used] = mean_score(rows, trimmed);
  if (used) *used = n_used;
  return m;
}

Matrix jacobian_at(const ScoreEvaluator& ev, VecRef v, VecRef m0, Index p,
                   Index d, double rel_step) {
  Matrix j(m0.size(), v.size());
  Vector vj = v;
  for (Index k = 0; k < v.size(); ++k) {
    const double step = rel_step * std::max(1.0, std::abs(v(k)));
    vj(k) = v(k) + step;
    j.col(k) = (mean_at(ev, vj, p, d) - m0) / step;
    vj(k) = v(k);
  }
  return j;
}

}  // namespace

Matrix score_jacobian(const ScoreEvaluator& ev, const BasisMatrix& b,
                      double rel_step) {
  Vector v = vecl(b);
  Vector m0 = mean_at(ev, v, b.p(), b.d());
  return jacobian_at(ev, v, m0, b.p(), b.d(), rel_step);
}

FitResult solve_score(const ScoreEvaluator& ev, const BasisMatrix& init,
                      const SolveOptions& opts) {
  const Index p = init.p(), d = init.d(), pt = init.free_count();
  // Trimming suppresses rows, so a runaway basis that trims nearly everything
  // would shrink the mean score for free; refuse states below this floor.
  const Index min_used = std::max<Index>(pt + 2, ev.n() / 5);
  FitResult res;
  Vector v = vecl(init);
  Index used = 0;
  Vector m = mean_at(ev, v, p, d, &used);
  if (used < min_used)
    throw degenerate_design_error(
        "score: initial basis leaves too few untrimmed observations (" +
        std::to_string(used) + " of " + std::to_string(ev.n()) + ")");
  double norm = m.norm();
  res.iterations.push_back({v, norm, false});

  for (int iter = 0; iter < opts.max_iter && norm > opts.tol; ++iter) {
    Matrix j = jacobian_at(ev, v, m, p, d, opts.fd_rel_step);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(j);
    bool damped = cod.rank() < pt;
    Vector delta;
    if (!damped) {
      delta = cod.solve(-m);
    } else {
      // Levenberg fallback when the Jacobian loses rank.
      Matrix a = j.transpose() * j;
      a.diagonal().array() += opts.damping * j.norm();
      delta = a.ldlt().solve(-j.transpose() * m);
    }

    double alpha = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      Vector trial = v + alpha * delta;
      Index trial_used = 0;
      Vector mt = mean_at(ev, trial, p, d, &trial_used);
      const double tn = mt.norm();
      if (trial_used >= min_used && tn < norm) {
        v = trial;
        m = mt;
        norm = tn;
        used = trial_used;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // no descent direction left
    res.iterations.push_back({v, norm, damped});
  }

  res.beta = unvecl(v, p, d);
  res.converged = norm <= opts.tol;
  std::vector<char> trimmed;
  res.scores = ev.rows(res.beta, &trimmed);
  res.trimmed = std::move(trimmed);
  auto [mf, n_used] = mean_score(res.scores, res.trimmed);
  res.n_used = n_used;
  res.trimmed_fraction =
      ev.n() > 0 ? 1.0 - double(n_used) / double(ev.n()) : 0.0;
  res.jacobian = jacobian_at(ev, v, mf, p, d, opts.fd_rel_step);
  return res;
}

}  // namespace sdr
