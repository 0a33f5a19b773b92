#include "sdr/scores.hpp"

#include <cmath>
#include <string>

#include "sdr/error.hpp"

namespace sdr {

namespace {

void check_data(const ScoreData& data, const BasisMatrix& b) {
  if (data.y.size() != data.x.rows())
    throw validation_error("score: response and covariates disagree on n");
  if (data.x.cols() != b.p())
    throw validation_error("score: covariate dimension does not match basis");
}

// vecl of resid * grad^T: block k is grad_k times the lower part of resid.
RowVector outer_row(VecRef resid, VecRef grad, Index d) {
  const Index pl = resid.size() - d;
  RowVector row(pl * d);
  for (Index k = 0; k < d; ++k)
    row.segment(k * pl, pl) = grad(k) * resid.tail(pl).transpose();
  return row;
}

Vector posited_gradient(const PositedModel& posited, double y, VecRef u,
                        Index i) {
  Vector g = posited.logdens_grad(y, u);
  if (!g.allFinite())
    throw validation_error(
        "local score: posited gradient is not finite at observation " +
        std::to_string(i));
  return g;
}

// Geometric mean of the per-direction spreads of the projections; bandwidths
// follow this scale when the smoothers track a moving basis.
double projected_scale(MatRef u) {
  const Index n = u.rows();
  if (n < 2) return 1.0;
  double logsum = 0.0;
  for (Index j = 0; j < u.cols(); ++j) {
    const double m = u.col(j).mean();
    const double v = (u.col(j).array() - m).square().sum() / double(n - 1);
    logsum += 0.5 * std::log(std::max(v, 1e-300));
  }
  return std::exp(logsum / double(u.cols()));
}

}  // namespace

PositedModel posited_normal_linear(int d) {
  PositedModel m;
  m.name = "normal-linear";
  m.mean = [](VecRef u) { return u.sum(); };
  m.mean_grad = [d](VecRef) { return Vector::Ones(d); };
  return m;
}

PositedModel posited_normal_quadratic(int d) {
  PositedModel m;
  m.name = "normal-quadratic";
  m.mean = [](VecRef u) {
    double s = u.sum() + u.squaredNorm();
    for (Index j = 0; j + 1 < u.size(); ++j)
      for (Index k = j + 1; k < u.size(); ++k) s += u(j) * u(k);
    return s;
  };
  m.mean_grad = [d](VecRef u) {
    Vector g = Vector::Ones(d) + 2.0 * u;
    const double s = u.sum();
    for (Index j = 0; j < d; ++j) g(j) += s - u(j);
    return g;
  };
  return m;
}

PositedModel posited_normal_cubic_1d() {
  PositedModel m;
  m.name = "normal-cubic";
  m.mean = [](VecRef u) { return u(0) * u(0) * u(0); };
  m.mean_grad = [](VecRef u) {
    return Vector::Constant(1, 3.0 * u(0) * u(0));
  };
  return m;
}

ScoreEvaluator::ScoreEvaluator(ScoreModel model, ScoreData data,
                               const BasisMatrix& pilot)
    : model_(std::move(model)), data_y_(data.y), data_x_(data.x) {
  check_data(data, pilot);
  d_ = pilot.d();
  const Index p = pilot.p();
  cols_ = (p - d_) * d_;

  const Matrix u = data_x_ * pilot.matrix();
  pilot_scale_ = projected_scale(u);
  const SmootherSpec& sp = model_.smoother;
  switch (model_.kind) {
    case ScoreKind::oracle:
      if (!model_.oracle.density || !model_.oracle.grad)
        throw validation_error("oracle score: density handles missing");
      ex_ = std::make_shared<NwEstimator>(data_x_, u, sp.h_x, sp.kernel, sp.trim);
      break;
    case ScoreKind::efficient:
      ex_ = std::make_shared<NwEstimator>(data_x_, u, sp.h_x, sp.kernel, sp.trim);
      fit_ = std::make_shared<ConditionalDensityFit>(data_y_, u, sp);
      break;
    case ScoreKind::local: {
      if (!model_.posited.is_mean_model() && !model_.posited.logdens_grad)
        throw validation_error("local score: posited model missing");
      ex_ = std::make_shared<NwEstimator>(data_x_, u, sp.h_x, sp.kernel, sp.trim);
      if (model_.posited.is_mean_model()) {
        ey_ = std::make_shared<NwEstimator>(data_y_, u, sp.h, sp.kernel, sp.trim);
      } else {
        Matrix targets(data_y_.size(), d_);
        for (Index i = 0; i < data_y_.size(); ++i)
          targets.row(i) = posited_gradient(model_.posited, data_y_(i),
                                            u.row(i).transpose(), i)
                               .transpose();
        edt_ = std::make_shared<NwEstimator>(std::move(targets), u, sp.h,
                                             sp.kernel, sp.trim);
      }
      break;
    }
    case ScoreKind::linearity_shortcut:
      if (d_ != 1)
        throw validation_error("linearity shortcut: only d = 1 is supported");
      break;
    case ScoreKind::general: {
      if (model_.pairs.empty())
        throw validation_error("general score: empty pair list");
      for (const auto& pair : model_.pairs) {
        if (!pair.g || !pair.a)
          throw validation_error("general score: missing handle in pair");
        Vector gv(data_y_.size());
        const Index qa = pair.a(data_x_.row(0).transpose()).size();
        Matrix av(data_y_.size(), qa);
        for (Index i = 0; i < data_y_.size(); ++i) {
          gv(i) = pair.g(data_y_(i), u.row(i).transpose());
          Vector ai = pair.a(data_x_.row(i).transpose());
          if (ai.size() != qa)
            throw validation_error("general score: a(x) dimension varies");
          av.row(i) = ai.transpose();
        }
        eg_.push_back(std::make_shared<NwEstimator>(gv, u, sp.h, sp.kernel, sp.trim));
        ea_.push_back(std::make_shared<NwEstimator>(std::move(av), u, sp.h,
                                                    sp.kernel, sp.trim));
      }
      // all pairs must agree on the output dimension so contributions sum
      cols_ = ea_.front()->target_dim();
      for (const auto& ea : ea_)
        if (ea->target_dim() != cols_)
          throw validation_error("general score: pair output dimensions differ");
      break;
    }
  }
}

Matrix ScoreEvaluator::rows(const BasisMatrix& b,
                            std::vector<char>* trimmed) const {
  if (b.p() != data_x_.cols() || b.d() != d_)
    throw validation_error("score: basis shape changed between calls");
  if (model_.profile &&
      (model_.kind == ScoreKind::oracle || model_.kind == ScoreKind::local))
    return rows_profiled(b, trimmed);
  const Index n = data_y_.size(), p = b.p(), d = d_;
  Matrix out = Matrix::Zero(n, cols_);
  std::vector<char> mask(n, 0);
  const Matrix u = data_x_ * b.matrix();

  switch (model_.kind) {
    case ScoreKind::oracle: {
      for (Index i = 0; i < n; ++i) {
        const Vector ui = u.row(i).transpose();
        auto ex = (*ex_)(ui);
        if (ex.trimmed) { mask[i] = 1; continue; }
        Vector resid = data_x_.row(i).transpose() - ex.value;
        Vector g = model_.oracle.grad(data_y_(i), ui);
        out.row(i) = outer_row(resid, g, d);
      }
      break;
    }
    case ScoreKind::efficient: {
      for (Index i = 0; i < n; ++i) {
        const Vector ui = u.row(i).transpose();
        auto ex = (*ex_)(ui);
        auto de = (*fit_)(data_y_(i), ui);
        if (ex.trimmed || de.trimmed) { mask[i] = 1; continue; }
        Vector resid = data_x_.row(i).transpose() - ex.value;
        Vector g = de.gradient / de.density;
        out.row(i) = outer_row(resid, g, d);
      }
      break;
    }
    case ScoreKind::local: {
      for (Index i = 0; i < n; ++i) {
        const Vector ui = u.row(i).transpose();
        auto ex = (*ex_)(ui);
        if (ex.trimmed) { mask[i] = 1; continue; }
        Vector g;
        if (model_.posited.is_mean_model()) {
          auto ey = (*ey_)(ui);
          if (ey.trimmed) { mask[i] = 1; continue; }
          g = (data_y_(i) - ey.value(0)) * model_.posited.mean_grad(ui);
        } else {
          auto ct = (*edt_)(ui);
          if (ct.trimmed) { mask[i] = 1; continue; }
          g = posited_gradient(model_.posited, data_y_(i), ui, i) - ct.value;
        }
        Vector resid = data_x_.row(i).transpose() - ex.value;
        out.row(i) = outer_row(resid, g, d);
      }
      break;
    }
    case ScoreKind::linearity_shortcut: {
      const Vector beta = b.matrix().col(0);
      const double btb = beta.squaredNorm();
      for (Index i = 0; i < n; ++i) {
        const Vector xi = data_x_.row(i).transpose();
        const double proj = beta.dot(xi) / btb;
        Vector resid = xi - proj * beta;
        const double r = data_y_(i) - beta.dot(xi);
        out.row(i) = (r * resid.tail(p - 1)).transpose();
      }
      break;
    }
    case ScoreKind::general: {
      for (std::size_t k = 0; k < model_.pairs.size(); ++k) {
        const auto& pair = model_.pairs[k];
        for (Index i = 0; i < n; ++i) {
          if (mask[i]) continue;
          const Vector ui = u.row(i).transpose();
          auto eg = (*eg_[k])(ui);
          auto ea = (*ea_[k])(ui);
          if (eg.trimmed || ea.trimmed) {
            mask[i] = 1;
            out.row(i).setZero();
            continue;
          }
          const double gc = pair.g(data_y_(i), ui) - eg.value(0);
          Vector ac = pair.a(data_x_.row(i).transpose()) - ea.value;
          out.row(i) += (gc * ac).transpose();
        }
      }
      break;
    }
  }
  if (trimmed) *trimmed = std::move(mask);
  return out;
}

Matrix ScoreEvaluator::rows_profiled(const BasisMatrix& b,
                                     std::vector<char>* trimmed) const {
  const Index n = data_y_.size(), d = d_;
  Matrix out = Matrix::Zero(n, cols_);
  std::vector<char> mask(n, 0);
  const Matrix u = data_x_ * b.matrix();
  const double scale = projected_scale(u);
  const double ratio =
      (pilot_scale_ > 0 && scale > 0) ? scale / pilot_scale_ : 1.0;
  const SmootherSpec& sp = model_.smoother;

  const NwEstimator ex(data_x_, u, sp.h_x * ratio, sp.kernel, sp.trim);
  std::shared_ptr<const NwEstimator> ey, edt;
  if (model_.kind == ScoreKind::local) {
    if (model_.posited.is_mean_model()) {
      ey = std::make_shared<NwEstimator>(Matrix(data_y_), u, sp.h * ratio,
                                         sp.kernel, sp.trim);
    } else {
      Matrix targets(n, d);
      for (Index i = 0; i < n; ++i)
        targets.row(i) = posited_gradient(model_.posited, data_y_(i),
                                          u.row(i).transpose(), i)
                             .transpose();
      edt = std::make_shared<NwEstimator>(std::move(targets), u, sp.h * ratio,
                                          sp.kernel, sp.trim);
    }
  }

  for (Index i = 0; i < n; ++i) {
    const Vector ui = u.row(i).transpose();
    auto exv = ex(ui);
    if (exv.trimmed) { mask[i] = 1; continue; }
    Vector g;
    if (model_.kind == ScoreKind::oracle) {
      g = model_.oracle.grad(data_y_(i), ui);
    } else if (model_.posited.is_mean_model()) {
      auto eyv = (*ey)(ui);
      if (eyv.trimmed) { mask[i] = 1; continue; }
      g = (data_y_(i) - eyv.value(0)) * model_.posited.mean_grad(ui);
    } else {
      auto ct = (*edt)(ui);
      if (ct.trimmed) { mask[i] = 1; continue; }
      g = posited_gradient(model_.posited, data_y_(i), ui, i) - ct.value;
    }
    Vector resid = data_x_.row(i).transpose() - exv.value;
    out.row(i) = outer_row(resid, g, d);
  }
  if (trimmed) *trimmed = std::move(mask);
  return out;
}

Matrix efficient_score(ScoreData data, const BasisMatrix& b,
                       const ConditionalDensityFit& fit, const NwEstimator& ex,
                       std::vector<char>* trimmed) {
  check_data(data, b);
  const Index n = data.y.size(), d = b.d();
  Matrix out = Matrix::Zero(n, (b.p() - d) * d);
  if (trimmed) trimmed->assign(n, 0);
  const Matrix u = data.x * b.matrix();
  for (Index i = 0; i < n; ++i) {
    const Vector ui = u.row(i).transpose();
    auto exv = ex(ui);
    auto de = fit(data.y(i), ui);
    if (exv.trimmed || de.trimmed) {
      if (trimmed) (*trimmed)[i] = 1;
      continue;
    }
    Vector resid = data.x.row(i).transpose() - exv.value;
    Vector g = de.gradient / de.density;
    out.row(i) = outer_row(resid, g, d);
  }
  return out;
}

Matrix local_score(ScoreData data, const BasisMatrix& b,
                   const PositedModel& posited, const NwEstimator& ex,
                   const NwEstimator* ey, const NwEstimator* edt,
                   std::vector<char>* trimmed) {
  check_data(data, b);
  const Index n = data.y.size(), d = b.d();
  Matrix out = Matrix::Zero(n, (b.p() - d) * d);
  if (trimmed) trimmed->assign(n, 0);
  const Matrix u = data.x * b.matrix();
  for (Index i = 0; i < n; ++i) {
    const Vector ui = u.row(i).transpose();
    auto exv = ex(ui);
    bool cut = exv.trimmed;
    Vector g;
    if (!cut) {
      if (posited.is_mean_model()) {
        if (!ey) throw validation_error("local score: EY handle required");
        auto eyv = (*ey)(ui);
        cut = eyv.trimmed;
        if (!cut) g = (data.y(i) - eyv.value(0)) * posited.mean_grad(ui);
      } else {
        if (!edt) throw validation_error("local score: EdT handle required");
        auto ct = (*edt)(ui);
        cut = ct.trimmed;
        if (!cut) g = posited_gradient(posited, data.y(i), ui, i) - ct.value;
      }
    }
    if (cut) {
      if (trimmed) (*trimmed)[i] = 1;
      continue;
    }
    Vector resid = data.x.row(i).transpose() - exv.value;
    out.row(i) = outer_row(resid, g, d);
  }
  return out;
}

Matrix linearity_shortcut_score(ScoreData data, const BasisMatrix& b) {
  ScoreModel model;
  model.kind = ScoreKind::linearity_shortcut;
  ScoreEvaluator ev(model, data, b);
  return ev.rows(b);
}

Matrix general_orthogonal_score(ScoreData data, const BasisMatrix& b,
                                const std::vector<GeneralPair>& pairs,
                                const SmootherSpec& smoother,
                                std::vector<char>* trimmed) {
  ScoreModel model;
  model.kind = ScoreKind::general;
  model.pairs = pairs;
  model.smoother = smoother;
  ScoreEvaluator ev(model, data, b);
  return ev.rows(b, trimmed);
}

}  // namespace sdr
