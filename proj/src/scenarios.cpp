#include "sdr/scenarios.hpp"

#include <cmath>

#include "sdr/error.hpp"

namespace sdr {

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vector basis_vector(int d, int j, double value) {
  Vector g = Vector::Zero(d);
  g(j) = value;
  return g;
}

// Conditionally normal response: Y | t ~ N(mean(t), variance(t)).
void attach_normal_family(Scenario& sc, const IndexFunction& mean,
                          const IndexFunction& variance) {
  const Matrix beta = sc.beta_true;
  sc.draw_y = [mean, variance, beta](MatRef x, Rng& rng) {
    const Matrix t = x * beta;
    Vector y(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
      const Vector ti = t.row(i).transpose();
      y(i) = mean.value(ti) + std::sqrt(variance.value(ti)) * rng.normal();
    }
    return y;
  };
  sc.density_t = [mean, variance](double y, VecRef t) {
    const double m = mean.value(t), v = variance.value(t);
    const double r = y - m;
    return std::exp(-0.5 * r * r / v) / std::sqrt(2.0 * M_PI * v);
  };
  sc.grad_logdensity_t = [mean, variance](double y, VecRef t) {
    const double m = mean.value(t), v = variance.value(t);
    const double r = y - m;
    Vector g = (r / v) * mean.grad(t);
    g += (0.5 * r * r / (v * v) - 0.5 / v) * variance.grad(t);
    return g;
  };
  sc.has_oracle = true;
}

Matrix example12_covariates(int n, Rng& rng) {
  Matrix x(n, 6);
  for (Index i = 0; i < n; ++i) {
    const double x1 = rng.normal();
    const double x2 = rng.normal();
    const double e1 = rng.normal();
    const double e2 = rng.normal();
    x(i, 0) = x1;
    x(i, 1) = x2;
    x(i, 2) = 0.2 * x1 + 0.2 * (x2 + 2.0) * (x2 + 2.0) + 0.2 * e1;
    x(i, 3) = 0.1 + 0.1 * (x1 + x2) + 0.3 * (x1 + 1.5) * (x1 + 1.5) + 0.2 * e2;
    x(i, 4) = rng.bernoulli(expit(x1)) ? 1.0 : 0.0;
    x(i, 5) = rng.bernoulli(expit(x2)) ? 1.0 : 0.0;
  }
  return x;
}

Vector example12_direction() {
  Vector beta(6);
  beta << 1.3, -1.3, 1.0, -0.5, 0.5, -0.5;
  return beta;
}

}  // namespace

IndexFunction mean_function(const std::string& name, int d) {
  if (d < 1) throw validation_error("mean_function: d must be >= 1");
  if (name == "linear")
    return {name, [](VecRef t) { return t.sum(); },
            [d](VecRef) { return Vector::Ones(d); }};
  if (name == "quadratic")
    return {name, [](VecRef t) { return 2.0 * t(0) * t(0); },
            [d](VecRef t) { return basis_vector(d, 0, 4.0 * t(0)); }};
  if (name == "cubic")
    return {name, [](VecRef t) { return t(0) * t(0) * t(0); },
            [d](VecRef t) { return basis_vector(d, 0, 3.0 * t(0) * t(0)); }};
  if (name == "sinexp")
    return {name,
            [](VecRef t) { return std::sin(2.0 * t(0)) + 2.0 * std::exp(2.0 + t(0)); },
            [d](VecRef t) {
              return basis_vector(
                  d, 0, 2.0 * std::cos(2.0 * t(0)) + 2.0 * std::exp(2.0 + t(0)));
            }};
  throw validation_error("unknown mean function '" + name +
                         "' (valid: linear, quadratic, cubic, sinexp)");
}

IndexFunction variance_function(const std::string& name, int d) {
  if (d < 1) throw validation_error("variance_function: d must be >= 1");
  if (name == "unit")
    return {name, [](VecRef) { return 1.0; },
            [d](VecRef) { return Vector::Zero(d); }};
  if (name == "logquad")
    return {name, [](VecRef t) { return std::log(2.0 + t(0) * t(0)); },
            [d](VecRef t) {
              return basis_vector(d, 0, 2.0 * t(0) / (2.0 + t(0) * t(0)));
            }};
  if (name == "expindex")
    return {name, [d](VecRef t) { return 2.0 * std::exp(t(d - 1)); },
            [d](VecRef t) {
              return basis_vector(d, d - 1, 2.0 * std::exp(t(d - 1)));
            }};
  throw validation_error("unknown variance function '" + name +
                         "' (valid: unit, logquad, expindex)");
}

std::vector<std::string> mean_function_names() {
  return {"linear", "quadratic", "cubic", "sinexp"};
}

std::vector<std::string> variance_function_names() {
  return {"unit", "logquad", "expindex"};
}

Scenario example1_scenario() {
  Scenario sc;
  sc.name = "example1";
  sc.p = 6;
  sc.d = 1;
  sc.beta_true = example12_direction();
  sc.draw_x = example12_covariates;
  attach_normal_family(sc, mean_function("linear", 1),
                       variance_function("unit", 1));
  return sc;
}

Scenario example2_scenario() {
  Scenario sc;
  sc.name = "example2";
  sc.p = 6;
  sc.d = 1;
  sc.beta_true = example12_direction();
  sc.draw_x = example12_covariates;
  attach_normal_family(sc, mean_function("sinexp", 1),
                       variance_function("logquad", 1));
  return sc;
}

Scenario example3_scenario() {
  Scenario sc;
  sc.name = "example3";
  sc.p = 6;
  sc.d = 2;
  Matrix beta(6, 2);
  beta << 1.0, 0.8,
      2.0 / 3.0, 0.8,
      2.0 / 3.0, -0.3,
      0.0, 0.3,
      -1.0 / 3.0, 0.0,
      2.0 / 3.0, 0.0;
  sc.beta_true = beta;
  const double s3 = std::sqrt(3.0);
  sc.draw_x = [s3](int n, Rng& rng) {
    Matrix x(n, 6);
    for (Index i = 0; i < n; ++i) {
      const double u1 = rng.bernoulli(0.5) ? 1.0 : -1.0;
      const double u2 =
          rng.bernoulli(0.7) ? std::sqrt(3.0 / 7.0) : -std::sqrt(7.0 / 3.0);
      const double u3 = rng.uniform(-s3, s3);
      const double u4 = rng.uniform(-s3, s3);
      const double u5 = rng.uniform(-s3, s3);
      const double u6 = rng.uniform(-s3, s3);
      x(i, 0) = u1 - u2;
      x(i, 1) = u2 - u3 - u4;
      x(i, 2) = u3 + u4;
      x(i, 3) = 2.0 * u4;
      x(i, 4) = u5 + 0.5 * u6;
      x(i, 5) = u6;
    }
    return x;
  };
  attach_normal_family(sc, mean_function("quadratic", 2),
                       variance_function("expindex", 2));
  return sc;
}

Scenario custom_scenario(std::string name, Matrix beta,
                         const std::string& mean_name,
                         const std::string& variance_name) {
  if (beta.rows() < 2 || beta.cols() < 1 || beta.cols() >= beta.rows())
    throw validation_error("custom scenario: beta must be p×d with 1 <= d < p");
  const int p = int(beta.rows()), d = int(beta.cols());
  if (!Eigen::FullPivLU<Matrix>(beta.topRows(d)).isInvertible())
    throw pivot_error("custom scenario: beta has a singular upper block");
  Scenario sc;
  sc.name = std::move(name);
  sc.p = p;
  sc.d = d;
  sc.beta_true = std::move(beta);
  sc.draw_x = [p](int n, Rng& rng) {
    Matrix x(n, p);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < p; ++j) x(i, j) = rng.normal();
    return x;
  };
  attach_normal_family(sc, mean_function(mean_name, d),
                       variance_function(variance_name, d));
  return sc;
}

Scenario scenario_by_name(const std::string& name) {
  if (name == "example1") return example1_scenario();
  if (name == "example2") return example2_scenario();
  if (name == "example3") return example3_scenario();
  throw validation_error("unknown scenario '" + name +
                         "' (valid: example1, example2, example3)");
}

std::vector<std::string> scenario_names() {
  return {"example1", "example2", "example3"};
}

OracleLaw standardized_oracle(const Scenario& scenario, const Standardizer& s) {
  if (!scenario.has_oracle)
    throw validation_error("scenario '" + scenario.name +
                           "' carries no analytic conditional law");
  const Matrix c = s.dewhitener * scenario.beta_true;
  Eigen::FullPivLU<Matrix> lu(c.topRows(scenario.d));
  if (!lu.isInvertible())
    throw pivot_error(
        "true basis has a singular upper block after standardization");
  OracleLaw law;
  law.basis_std = c * lu.inverse();
  law.basis_std.topRows(scenario.d) = Matrix::Identity(scenario.d, scenario.d);
  const Matrix ctop = c.topRows(scenario.d);
  const Vector shift = scenario.beta_true.transpose() * s.mean;
  auto dens = scenario.density_t;
  auto grad = scenario.grad_logdensity_t;
  law.handles.density = [dens, ctop, shift](double y, VecRef u) {
    return dens(y, Vector(ctop.transpose() * u + shift));
  };
  law.handles.grad = [grad, ctop, shift](double y, VecRef u) {
    return Vector(ctop * grad(y, Vector(ctop.transpose() * u + shift)));
  };
  return law;
}

Sample draw_sample(const Scenario& scenario, int n, Rng& rng) {
  if (n < 1) throw validation_error("draw_sample: n must be >= 1");
  if (!scenario.draw_x || !scenario.draw_y)
    throw validation_error("scenario '" + scenario.name +
                           "' is missing samplers");
  Sample s;
  s.x = scenario.draw_x(n, rng);
  s.y = scenario.draw_y(s.x, rng);
  s.scenario = scenario;
  return s;
}

Sample make_example1(int n, std::uint64_t seed) {
  Rng rng(seed);
  return draw_sample(example1_scenario(), n, rng);
}

Sample make_example2(int n, std::uint64_t seed) {
  Rng rng(seed);
  return draw_sample(example2_scenario(), n, rng);
}

Sample make_example3(int n, std::uint64_t seed) {
  Rng rng(seed);
  return draw_sample(example3_scenario(), n, rng);
}

}  // namespace sdr
