#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sdr/basis.hpp"
#include "sdr/smoothing.hpp"
#include "sdr/standardize.hpp"
#include "sdr/types.hpp"

namespace sdr {

// Response and covariates on the scale the estimating equation is solved on.
struct ScoreData {
  const Vector& y;
  const Matrix& x;
};

// Conditional density of the response given the index, plus its log gradient
// in the index. Used verbatim by the oracle score; the efficient score
// estimates the same pair nonparametrically.
struct DensityHandles {
  std::function<double(double, VecRef)> density;
  std::function<Vector(double, VecRef)> grad;
};

// Working model for the locally efficient score. A mean model (normal with
// the given conditional mean, unit variance) centers through the response
// residual: rows use (Y - E(Y|u)) grad_mean(u). A free-form log-density
// gradient is centered instead by its own kernel regression on u.
struct PositedModel {
  std::string name;
  std::function<double(VecRef)> mean;
  std::function<Vector(VecRef)> mean_grad;
  std::function<Vector(double, VecRef)> logdens_grad;
  bool is_mean_model() const { return static_cast<bool>(mean_grad); }
};

PositedModel posited_normal_linear(int d);     // E*(Y|u) = sum_j u_j
PositedModel posited_normal_quadratic(int d);  // full quadratic in u
PositedModel posited_normal_cubic_1d();        // E*(Y|u) = u^3

// Response-side scalar function of (y, u) and covariate-side vector function
// of x, combined as centered products.
struct GeneralPair {
  std::function<double(double, VecRef)> g;
  std::function<Vector(VecRef)> a;
};

enum class ScoreKind { oracle, efficient, local, linearity_shortcut, general };

struct ScoreModel {
  ScoreKind kind = ScoreKind::efficient;
  SmootherSpec smoother;
  DensityHandles oracle;                            // kind == oracle
  PositedModel posited;                             // kind == local
  std::vector<GeneralPair> pairs;                   // kind == general
  // Rebuild the conditional-mean smoothers at every basis the equation is
  // evaluated at, with bandwidths rescaled to the projected spread there.
  // The density fit of the efficient score is always built once at the pilot
  // and held fixed while the basis varies.
  bool profile = false;
};

// Score rows. With profile off, every nonparametric ingredient is prebuilt
// at a pilot basis and held fixed while the basis argument varies; with
// profile on, the conditional means track the basis. Immutable and reentrant.
class ScoreEvaluator {
 public:
  ScoreEvaluator(ScoreModel model, ScoreData data, const BasisMatrix& pilot);

  // n×q rows; trimmed observations are zeroed and flagged.
  Matrix rows(const BasisMatrix& b, std::vector<char>* trimmed = nullptr) const;

  Index cols() const { return cols_; }
  Index n() const { return data_y_.size(); }
  const ScoreModel& model() const { return model_; }

 private:
  Matrix rows_profiled(const BasisMatrix& b, std::vector<char>* trimmed) const;

  ScoreModel model_;
  Vector data_y_;
  Matrix data_x_;
  Index d_, cols_;
  double pilot_scale_ = 1.0;  // projected spread the bandwidths were set for
  std::shared_ptr<const NwEstimator> ex_, ey_, edt_;
  std::shared_ptr<const ConditionalDensityFit> fit_;
  std::vector<std::shared_ptr<const NwEstimator>> eg_, ea_;
};

// Direct forms of the individual score matrices.
Matrix efficient_score(ScoreData data, const BasisMatrix& b,
                       const ConditionalDensityFit& fit, const NwEstimator& ex,
                       std::vector<char>* trimmed = nullptr);
Matrix local_score(ScoreData data, const BasisMatrix& b,
                   const PositedModel& posited, const NwEstimator& ex,
                   const NwEstimator* ey, const NwEstimator* edt,
                   std::vector<char>* trimmed = nullptr);
Matrix linearity_shortcut_score(ScoreData data, const BasisMatrix& b);
Matrix general_orthogonal_score(ScoreData data, const BasisMatrix& b,
                                const std::vector<GeneralPair>& pairs,
                                const SmootherSpec& smoother,
                                std::vector<char>* trimmed = nullptr);

struct SolveOptions {
  int max_iter = 50;
  double tol = 1e-6;          // on the norm of the mean score
  double fd_rel_step = 1e-5;  // forward-difference Jacobian
  double damping = 1e-4;      // Levenberg factor on singular Jacobians
  int max_halvings = 12;
  // Kernel supports and trimming give the empirical score a noise floor, so
  // solve_score reports convergence strictly against tol while fitting front
  // ends accept a stall as a root, with a warning, when the norm sits below
  // stall_tol or every mean-score component is within stall_z standard
  // errors of zero.
  double stall_tol = 1e-4;
  double stall_z = 3.0;
};

struct IterRecord {
  Vector v;
  double score_norm;
  bool damped;
};

struct FitResult {
  std::string estimator;
  BasisMatrix beta;       // standardized scale
  Matrix beta_original;   // original scale, identity upper block
  Matrix span_x;          // original-scale span, no pivot normalization
  Matrix vcov;            // p_t×p_t, standardized-scale vecl coordinates
  Vector se;              // sqrt(vcov_jj / n_used)
  Matrix vcov_original;   // free coefficients of beta_original, vecl order
  Vector se_original;
  std::vector<IterRecord> iterations;
  bool converged = false;
  double trimmed_fraction = 0.0;
  Matrix scores;          // rows at the solution
  std::vector<char> trimmed;
  Matrix jacobian;        // mean-score Jacobian at the solution
  Standardizer standardizer;
  Index n_used = 0;
  bool has_inference = false;
  std::string pilot;
  Vector eigenvalues;     // slice estimators only
  bool weak = false;
  std::vector<std::string> warnings;
};

// Gauss-Newton on the mean score: delta = -J^+ m with a forward-difference
// Jacobian and halving line search on ||m||; converged iff ||m|| <= tol.
// Non-convergence is reported in the result, never thrown.
FitResult solve_score(const ScoreEvaluator& evaluator, const BasisMatrix& init,
                      const SolveOptions& opts = {});

// Mean over untrimmed rows and the count used.
std::pair<Vector, Index> mean_score(const Matrix& rows,
                                    const std::vector<char>& trimmed);

// Forward-difference Jacobian of the mean score at b.
Matrix score_jacobian(const ScoreEvaluator& evaluator, const BasisMatrix& b,
                      double rel_step = 1e-5);

}  // namespace sdr
