#include "sdr/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdr/csv.hpp"
#include "sdr/error.hpp"
#include "sdr/estimators.hpp"
#include "sdr/inference.hpp"
#include "sdr/monte_carlo.hpp"

namespace sdr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt4(double x) {
  if (std::isnan(x)) return "--";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

std::string trimmed_copy(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string token;
  for (char c : s) {
    if (c == ',') {
      if (!trimmed_copy(token).empty()) out.push_back(trimmed_copy(token));
      token.clear();
    } else {
      token.push_back(c);
    }
  }
  if (!trimmed_copy(token).empty()) out.push_back(trimmed_copy(token));
  return out;
}

double parse_config_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw validation_error("config: key '" + key + "': cannot parse '" +
                           value + "' as a number");
  return v;
}

long long parse_config_int(const std::string& key, const std::string& value) {
  const double v = parse_config_double(key, value);
  if (v != std::floor(v))
    throw validation_error("config: key '" + key + "' must be an integer");
  return (long long)(v);
}

SmootherSpec parse_bandwidth_spec(const RunConfig& cfg) {
  SmootherSpec spec;
  spec.h = spec.h_x = spec.h_y = spec.b = 0;  // zeros keep the rate defaults
  spec.kernel = parse_kernel(cfg.kernel);
  for (const auto& token : split_list(cfg.bandwidth)) {
    const auto eq = token.find('=');
    if (eq == std::string::npos)
      throw validation_error("bandwidth: expected key=value, got '" + token +
                             "'");
    const std::string key = trimmed_copy(token.substr(0, eq));
    const double value = parse_config_double("bandwidth " + key,
                                             trimmed_copy(token.substr(eq + 1)));
    if (key == "h") spec.h = value;
    else if (key == "hx") spec.h_x = value;
    else if (key == "hy") spec.h_y = value;
    else if (key == "b") spec.b = value;
    else if (key == "trim") spec.trim = value;
    else if (key == "floor") spec.density_floor = value;
    else
      throw validation_error("bandwidth: unknown key '" + key +
                             "' (valid: h, hx, hy, b, trim, floor)");
    if ((key == "h" || key == "hx" || key == "hy" || key == "b") && value <= 0)
      throw validation_error("bandwidth: " + key + " must be positive");
  }
  return spec;
}

PositedModel resolve_posited(const std::string& name, int d) {
  if (name.empty()) return PositedModel{};
  if (name == "linear") return posited_normal_linear(d);
  if (name == "quadratic") return posited_normal_quadratic(d);
  if (name == "cubic") {
    if (d != 1)
      throw validation_error("posited model 'cubic' supports d=1 only");
    return posited_normal_cubic_1d();
  }
  throw validation_error("unknown posited model '" + name +
                         "' (valid: linear, quadratic, cubic)");
}

Matrix parse_beta_matrix(const std::string& text) {
  std::vector<std::string> columns;
  std::string token;
  for (char c : text) {
    if (c == ';') {
      columns.push_back(token);
      token.clear();
    } else {
      token.push_back(c);
    }
  }
  columns.push_back(token);
  std::vector<std::vector<double>> cols;
  for (const auto& col : columns) {
    std::vector<double> entries;
    for (const auto& cell : split_list(col))
      entries.push_back(parse_config_double("beta", cell));
    if (entries.empty()) throw validation_error("beta: empty column");
    if (!cols.empty() && entries.size() != cols.front().size())
      throw validation_error("beta: columns have different lengths");
    cols.push_back(std::move(entries));
  }
  Matrix beta(Index(cols.front().size()), Index(cols.size()));
  for (Index k = 0; k < beta.cols(); ++k)
    for (Index j = 0; j < beta.rows(); ++j)
      beta(j, k) = cols[std::size_t(k)][std::size_t(j)];
  return beta;
}

Scenario resolve_scenario(const RunConfig& cfg) {
  if (cfg.scenario.empty())
    throw validation_error("a scenario name is required (--scenario)");
  if (cfg.scenario == "custom") {
    if (cfg.beta.empty())
      throw validation_error("custom scenario needs --beta");
    return custom_scenario("custom", parse_beta_matrix(cfg.beta), cfg.mean,
                           cfg.variance);
  }
  return scenario_by_name(cfg.scenario);
}

int resolve_workers(const RunConfig& cfg) {
  if (cfg.workers > 0) return cfg.workers;
  if (const char* env = std::getenv("SDR_WORKERS")) {
    const long long v = parse_config_int("SDR_WORKERS", env);
    if (v < 1) throw validation_error("SDR_WORKERS must be >= 1");
    return int(v);
  }
  return 1;
}

struct InputData {
  Dataset ds;
  Scenario scenario;
  bool from_scenario = false;
};

InputData acquire_data(const RunConfig& cfg) {
  if (!cfg.data.empty() && !cfg.scenario.empty())
    throw validation_error("give either --data or --scenario, not both");
  InputData in;
  if (!cfg.data.empty()) {
    in.ds = load_csv(cfg.data, cfg.response, split_list(cfg.covariates));
    return in;
  }
  in.scenario = resolve_scenario(cfg);
  Rng rng(cfg.seed);
  const Sample smp = draw_sample(in.scenario, cfg.n, rng);
  in.ds.x = smp.x;
  in.ds.y = smp.y;
  in.ds.response = "y";
  for (int j = 1; j <= in.scenario.p; ++j)
    in.ds.covariates.push_back("x" + std::to_string(j));
  in.from_scenario = true;
  return in;
}

int resolve_d(const RunConfig& cfg, const InputData& in) {
  if (cfg.d > 0) return cfg.d;
  return in.from_scenario ? in.scenario.d : 1;
}

std::vector<Index> pivot_permutation(const RunConfig& cfg, const Dataset& ds,
                                     int d) {
  const Index p = ds.x.cols();
  std::vector<Index> perm;
  if (cfg.pivot.empty()) {
    for (Index j = 0; j < p; ++j) perm.push_back(j);
    return perm;
  }
  std::vector<Index> lead;
  if (cfg.pivot == "auto-corr") {
    std::vector<std::pair<double, Index>> scored;
    const double ym = ds.y.mean();
    const double ysd = std::sqrt((ds.y.array() - ym).square().sum());
    for (Index j = 0; j < p; ++j) {
      const double xm = ds.x.col(j).mean();
      const double xsd = std::sqrt((ds.x.col(j).array() - xm).square().sum());
      const double cov =
          ((ds.x.col(j).array() - xm) * (ds.y.array() - ym)).sum();
      const double corr = xsd > 0 && ysd > 0 ? cov / (xsd * ysd) : 0.0;
      scored.emplace_back(-std::abs(corr), j);
    }
    std::stable_sort(scored.begin(), scored.end());
    for (int k = 0; k < d; ++k) lead.push_back(scored[std::size_t(k)].second);
  } else {
    for (const auto& token : split_list(cfg.pivot)) {
      auto it = std::find(ds.covariates.begin(), ds.covariates.end(), token);
      Index j;
      if (it != ds.covariates.end()) {
        j = Index(it - ds.covariates.begin());
      } else {
        const long long v = parse_config_int("pivot", token);
        if (v < 1 || v > p)
          throw validation_error("pivot: index " + token + " out of range");
        j = Index(v - 1);
      }
      if (std::find(lead.begin(), lead.end(), j) != lead.end())
        throw validation_error("pivot: column '" + token + "' repeated");
      lead.push_back(j);
    }
    if (Index(lead.size()) != d)
      throw validation_error("pivot: need exactly d=" + std::to_string(d) +
                             " columns, got " + std::to_string(lead.size()));
  }
  perm = lead;
  for (Index j = 0; j < p; ++j)
    if (std::find(lead.begin(), lead.end(), j) == lead.end())
      perm.push_back(j);
  return perm;
}

void write_output(const RunConfig& cfg, const std::string& text,
                  std::ostream& out, std::ostream& err) {
  if (cfg.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(cfg.out);
  if (!f) throw io_error("cannot write '" + cfg.out + "'");
  f << text;
  if (!f.good()) throw io_error("failed while writing '" + cfg.out + "'");
  err << "wrote " << cfg.out << "\n";
}

FitOptions make_fit_options(const RunConfig& cfg, int d,
                            const Scenario* scenario) {
  FitOptions opt;
  opt.d = d;
  opt.bandwidths = parse_bandwidth_spec(cfg);
  opt.resmooth_passes = cfg.resmooth;
  opt.pilot = cfg.pilot;
  opt.n_slices = cfg.slices;
  opt.posited = resolve_posited(cfg.posited, d);
  opt.scenario = scenario;
  return opt;
}

struct FitRow {
  std::string name;
  int column = 1;
  double coef = kNaN;
  double se = kNaN;
  double z = kNaN;
  double p = kNaN;
  double lo = kNaN, hi = kNaN;
  bool pivot = false;
};

std::vector<FitRow> fit_rows(const FitResult& fr,
                             const std::vector<std::string>& names,
                             double level) {
  const Index p = Index(names.size());
  const Index d = fr.beta.d();
  const Matrix& b =
      fr.beta_original.size() > 0 ? fr.beta_original : fr.span_x;
  const bool have_se =
      fr.has_inference && fr.se_original.size() == (p - d) * d &&
      fr.beta_original.size() > 0;
  const double zq = normal_quantile(0.5 * (1.0 + level));
  std::vector<FitRow> rows;
  for (Index k = 0; k < d; ++k)
    for (Index j = 0; j < p; ++j) {
      FitRow r;
      r.name = names[std::size_t(j)];
      r.column = int(k + 1);
      r.coef = b(j, k);
      r.pivot = j < d;
      if (!r.pivot && have_se) {
        r.se = fr.se_original(k * (p - d) + (j - d));
        if (r.se > 0) {
          r.z = r.coef / r.se;
          r.p = 2.0 * normal_cdf(-std::abs(r.z));
        }
        r.lo = r.coef - zq * r.se;
        r.hi = r.coef + zq * r.se;
      }
      rows.push_back(std::move(r));
    }
  return rows;
}

std::string render_fit_text(const FitResult& fr,
                            const std::vector<FitRow>& rows, double level) {
  std::ostringstream out;
  out << "estimator: " << fr.estimator << "  converged: "
      << (fr.converged ? "yes" : "no") << "  n_used: " << fr.n_used
      << "  trimmed: " << fmt4(fr.trimmed_fraction) << "  pilot: "
      << (fr.pilot.empty() ? "-" : fr.pilot) << "  level: " << fmt4(level)
      << "\n\n";
  auto pad = [](const std::string& s, int width) {
    std::string t = s;
    if (int(t.size()) < width) t.insert(0, std::size_t(width - int(t.size())), ' ');
    return t;
  };
  out << pad("covariate", 10) << pad("col", 5) << pad("coef", 12)
      << pad("se", 12) << pad("z", 10) << pad("p", 10) << pad("lo", 12)
      << pad("hi", 12) << "\n";
  for (const auto& r : rows) {
    out << pad(r.name, 10) << pad(std::to_string(r.column), 5)
        << pad(fmt4(r.coef), 12);
    if (r.pivot)
      out << pad("(pivot)", 12) << pad("", 10) << pad("", 10) << pad("", 12)
          << pad("", 12);
    else
      out << pad(fmt4(r.se), 12) << pad(fmt4(r.z), 10) << pad(fmt4(r.p), 10)
          << pad(fmt4(r.lo), 12) << pad(fmt4(r.hi), 12);
    out << "\n";
  }
  if (fr.eigenvalues.size() > 0) {
    out << "\neigenvalues:";
    for (Index i = 0; i < fr.eigenvalues.size(); ++i)
      out << " " << fmt4(fr.eigenvalues(i));
    if (fr.weak) out << "  (weak spectrum)";
    out << "\n";
  }
  return out.str();
}

std::string render_fit_csv(const FitResult& fr, const std::vector<FitRow>& rows,
                           const RunConfig& cfg) {
  std::ostringstream out;
  out << "# sdr-fit,1\n";
  out << "# estimator," << fr.estimator << "\n";
  out << "# converged," << (fr.converged ? 1 : 0) << "\n";
  out << "# n_used," << fr.n_used << "\n";
  out << "# trimmed," << fmt17(fr.trimmed_fraction) << "\n";
  out << "# level," << fmt17(cfg.level) << "\n";
  if (!fr.pilot.empty()) out << "# pilot," << fr.pilot << "\n";
  out << "covariate,column,coef,se,z,p,lo,hi,pivot\n";
  for (const auto& r : rows) {
    out << r.name << "," << r.column << "," << fmt17(r.coef) << ",";
    if (!r.pivot && !std::isnan(r.se))
      out << fmt17(r.se) << "," << fmt17(r.z) << "," << fmt17(r.p) << ","
          << fmt17(r.lo) << "," << fmt17(r.hi);
    else
      out << ",,,,";
    out << "," << (r.pivot ? 1 : 0) << "\n";
  }
  return out.str();
}

std::string render_fit_json(const FitResult& fr,
                            const std::vector<FitRow>& rows,
                            const RunConfig& cfg) {
  nlohmann::json j;
  j["estimator"] = fr.estimator;
  j["converged"] = fr.converged;
  j["n_used"] = fr.n_used;
  j["trimmed_fraction"] = fr.trimmed_fraction;
  j["level"] = cfg.level;
  j["pilot"] = fr.pilot;
  j["warnings"] = fr.warnings;
  j["coefficients"] = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json jr;
    jr["covariate"] = r.name;
    jr["column"] = r.column;
    jr["coef"] = r.coef;
    jr["pivot"] = r.pivot;
    if (!r.pivot && !std::isnan(r.se)) {
      jr["se"] = r.se;
      jr["z"] = r.z;
      jr["p"] = r.p;
      jr["lo"] = r.lo;
      jr["hi"] = r.hi;
    }
    j["coefficients"].push_back(std::move(jr));
  }
  return j.dump(2) + "\n";
}

std::string trace_path(const RunConfig& cfg) {
  return cfg.out.empty() ? "sdr_fit.trace" : cfg.out + ".trace";
}

void write_trace(const std::string& path, const FitResult& fr) {
  std::ofstream f(path);
  if (!f) throw io_error("cannot write '" + path + "'");
  f << "iter,score_norm,damped\n";
  for (std::size_t i = 0; i < fr.iterations.size(); ++i)
    f << i << "," << fmt17(fr.iterations[i].score_norm) << ","
      << (fr.iterations[i].damped ? 1 : 0) << "\n";
}

}  // namespace

void apply_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trimmed_copy(line);
    if (t.empty() || t[0] == '#') continue;
    if (t[0] == '[')
      throw validation_error("config: flat key=value only (line " +
                             std::to_string(lineno) + ")");
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw validation_error("config: expected key=value at line " +
                             std::to_string(lineno));
    const std::string key = trimmed_copy(t.substr(0, eq));
    const std::string value = trimmed_copy(t.substr(eq + 1));
    if (key == "data") cfg.data = value;
    else if (key == "response") cfg.response = value;
    else if (key == "covariates") cfg.covariates = value;
    else if (key == "scenario") cfg.scenario = value;
    else if (key == "estimators") cfg.estimators = value;
    else if (key == "d") cfg.d = int(parse_config_int(key, value));
    else if (key == "pivot") cfg.pivot = value;
    else if (key == "bandwidth") cfg.bandwidth = value;
    else if (key == "kernel") cfg.kernel = value;
    else if (key == "pilot") cfg.pilot = value;
    else if (key == "posited") cfg.posited = value;
    else if (key == "slices") cfg.slices = int(parse_config_int(key, value));
    else if (key == "resmooth") cfg.resmooth = int(parse_config_int(key, value));
    else if (key == "seed") cfg.seed = std::uint64_t(parse_config_int(key, value));
    else if (key == "n") cfg.n = int(parse_config_int(key, value));
    else if (key == "reps") cfg.reps = int(parse_config_int(key, value));
    else if (key == "workers") cfg.workers = int(parse_config_int(key, value));
    else if (key == "level") cfg.level = parse_config_double(key, value);
    else if (key == "beta") cfg.beta = value;
    else if (key == "mean") cfg.mean = value;
    else if (key == "variance") cfg.variance = value;
    else if (key == "format") cfg.format = value;
    else if (key == "out") cfg.out = value;
    else
      throw validation_error("config: unknown key '" + key + "' at line " +
                             std::to_string(lineno));
  }
}

int cmd_fit(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::vector<EstimatorKind> kinds = parse_estimator_list(cfg.estimators);
  if (kinds.size() != 1)
    throw validation_error("fit takes exactly one estimator");
  InputData in = acquire_data(cfg);
  const int d = resolve_d(cfg, in);
  const std::vector<Index> perm = pivot_permutation(cfg, in.ds, d);
  Matrix x(in.ds.x.rows(), in.ds.x.cols());
  std::vector<std::string> names;
  for (std::size_t j = 0; j < perm.size(); ++j) {
    x.col(Index(j)) = in.ds.x.col(perm[j]);
    names.push_back(in.ds.covariates[std::size_t(perm[j])]);
  }

  FitOptions opt =
      make_fit_options(cfg, d, in.from_scenario ? &in.scenario : nullptr);
  opt.estimator = kinds.front();
  const FitResult fr = fit_sdr(x, in.ds.y, opt);

  const auto rows = fit_rows(fr, names, cfg.level);
  const ReportFormat format = parse_format(cfg.format);
  std::string text;
  switch (format) {
    case ReportFormat::text: text = render_fit_text(fr, rows, cfg.level); break;
    case ReportFormat::csv: text = render_fit_csv(fr, rows, cfg); break;
    case ReportFormat::json: text = render_fit_json(fr, rows, cfg); break;
  }
  write_output(cfg, text, out, err);
  for (const auto& w : fr.warnings) err << "warning: " << w << "\n";
  if (!fr.converged) {
    const std::string path = trace_path(cfg);
    write_trace(path, fr);
    err << "error: solver did not converge; iteration trace: " << path
        << "\n";
    return 3;
  }
  return 0;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.data.empty())
    throw validation_error("simulate draws from a scenario, not a data file");
  const Scenario scenario = resolve_scenario(cfg);
  if (cfg.n < 1) throw validation_error("simulate: n must be >= 1");
  Rng rng(cfg.seed);
  const Sample smp = draw_sample(scenario, cfg.n, rng);
  std::vector<std::string> names{"y"};
  for (int j = 1; j <= scenario.p; ++j)
    names.push_back("x" + std::to_string(j));
  Matrix table(smp.x.rows(), smp.x.cols() + 1);
  table.col(0) = smp.y;
  table.rightCols(smp.x.cols()) = smp.x;
  std::ostringstream buf;
  buf << names[0];
  for (std::size_t j = 1; j < names.size(); ++j) buf << "," << names[j];
  buf << "\n";
  for (Index i = 0; i < table.rows(); ++i) {
    for (Index j = 0; j < table.cols(); ++j)
      buf << (j ? "," : "") << fmt17(table(i, j));
    buf << "\n";
  }
  write_output(cfg, buf.str(), out, err);
  return 0;
}

int cmd_mc(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Scenario scenario = resolve_scenario(cfg);
  const std::vector<EstimatorKind> kinds = parse_estimator_list(cfg.estimators);
  const int workers = resolve_workers(cfg);
  FitOptions base = make_fit_options(cfg, std::max(1, scenario.d), nullptr);
  base.scenario = nullptr;  // run_monte_carlo wires the scenario per fit
  const MCReport report = run_monte_carlo(scenario, kinds, cfg.n, cfg.reps,
                                          cfg.seed, workers, base);
  write_output(cfg, report_table(report, parse_format(cfg.format)), out, err);
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  return 0;
}

int cmd_r2scan(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.d > 1)
    throw validation_error("r2scan ranks single-index fits; d must be 1");
  const std::vector<EstimatorKind> kinds = parse_estimator_list(cfg.estimators);
  if (kinds.empty()) throw validation_error("r2scan needs at least one estimator");
  InputData in = acquire_data(cfg);
  const std::vector<Index> perm = pivot_permutation(cfg, in.ds, 1);
  Matrix x(in.ds.x.rows(), in.ds.x.cols());
  for (std::size_t j = 0; j < perm.size(); ++j)
    x.col(Index(j)) = in.ds.x.col(perm[j]);

  struct Row {
    std::string estimator;
    double r2 = kNaN;
    bool converged = false;
  };
  std::vector<Row> rows;
  for (EstimatorKind kind : kinds) {
    FitOptions opt =
        make_fit_options(cfg, 1, in.from_scenario ? &in.scenario : nullptr);
    opt.estimator = kind;
    const FitResult fr = fit_sdr(x, in.ds.y, opt);
    const Vector index =
        fr.beta_original.size() > 0
            ? Vector(x * fr.beta_original.col(0))
            : Vector(x * fr.span_x.col(0));
    rows.push_back(
        {estimator_name(kind), cubic_r2(in.ds.y, index), fr.converged});
  }

  const ReportFormat format = parse_format(cfg.format);
  std::string text;
  if (format == ReportFormat::text) {
    std::ostringstream buf;
    buf << "estimator   adj_r2    converged\n";
    for (const auto& r : rows)
      buf << r.estimator << std::string(12 - std::min<std::size_t>(11, r.estimator.size()), ' ')
          << fmt4(r.r2) << "    " << (r.converged ? "yes" : "no") << "\n";
    text = buf.str();
  } else if (format == ReportFormat::csv) {
    std::ostringstream buf;
    buf << "# sdr-r2scan,1\nestimator,adj_r2,converged\n";
    for (const auto& r : rows)
      buf << r.estimator << "," << fmt17(r.r2) << "," << (r.converged ? 1 : 0)
          << "\n";
    text = buf.str();
  } else {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows)
      j.push_back({{"estimator", r.estimator},
                   {"adj_r2", r.r2},
                   {"converged", r.converged}});
    text = j.dump(2) + "\n";
  }
  write_output(cfg, text, out, err);
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  RunConfig cfg;
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) config_path = argv[i + 1];
    else if (a.rfind("--config=", 0) == 0) config_path = a.substr(9);
  }
  try {
    if (!config_path.empty()) apply_config_file(config_path, cfg);
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{"central-subspace estimation by semiparametric efficient scores"};
  app.require_subcommand(1);
  std::string config_opt;

  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--config", config_opt, "flat key=value defaults file");
    sub->add_option("--format", cfg.format, "text, csv, or json");
    sub->add_option("--out", cfg.out, "output path (default: stdout)");
  };
  auto add_scenario = [&](CLI::App* sub) {
    sub->add_option("--scenario", cfg.scenario,
                    "example1, example2, example3, or custom");
    sub->add_option("--beta", cfg.beta,
                    "custom scenario basis; columns ';', entries ','");
    sub->add_option("--mean", cfg.mean, "custom mean function");
    sub->add_option("--variance", cfg.variance, "custom variance function");
  };
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--estimators", cfg.estimators,
                    "comma list: oracle, eff, local, shortcut, sir, dr");
    sub->add_option("--d", cfg.d, "structural dimension (0: scenario's)");
    sub->add_option("--pivot", cfg.pivot,
                    "pivot covariates (names, 1-based indices, or auto-corr)");
    sub->add_option("--bandwidth", cfg.bandwidth,
                    "overrides: h=..,hx=..,hy=..,b=..,trim=..,floor=..");
    sub->add_option("--kernel", cfg.kernel, "quartic or epanechnikov");
    sub->add_option("--pilot", cfg.pilot, "auto, sir, or local");
    sub->add_option("--posited", cfg.posited,
                    "local working model: linear, quadratic, cubic");
    sub->add_option("--slices", cfg.slices, "slice count for sir/dr");
    sub->add_option("--resmooth", cfg.resmooth,
                    "re-smoothing passes after the first solve");
  };

  CLI::App* fit = app.add_subcommand("fit", "fit one estimator to data");
  fit->add_option("--data", cfg.data, "CSV file with a header row");
  fit->add_option("--response", cfg.response, "response column name");
  fit->add_option("--covariates", cfg.covariates,
                  "comma list of covariate columns (default: all others)");
  fit->add_option("--n", cfg.n, "sample size when drawing from a scenario");
  fit->add_option("--seed", cfg.seed, "RNG seed");
  fit->add_option("--level", cfg.level, "confidence level");
  add_scenario(fit);
  add_model(fit);
  add_output(fit);

  CLI::App* simulate =
      app.add_subcommand("simulate", "draw a scenario sample as CSV");
  simulate->add_option("--n", cfg.n, "sample size");
  simulate->add_option("--seed", cfg.seed, "RNG seed");
  add_scenario(simulate);
  add_output(simulate);

  CLI::App* mc = app.add_subcommand("mc", "Monte Carlo replication study");
  mc->add_option("--n", cfg.n, "sample size per replication");
  mc->add_option("--reps", cfg.reps, "replication count");
  mc->add_option("--seed", cfg.seed, "RNG seed");
  mc->add_option("--workers", cfg.workers,
                 "worker threads (default: SDR_WORKERS or 1)");
  add_scenario(mc);
  add_model(mc);
  add_output(mc);

  CLI::App* r2scan = app.add_subcommand(
      "r2scan", "adjusted r-squared of a cubic fit per estimator index");
  r2scan->add_option("--data", cfg.data, "CSV file with a header row");
  r2scan->add_option("--response", cfg.response, "response column name");
  r2scan->add_option("--covariates", cfg.covariates,
                     "comma list of covariate columns (default: all others)");
  r2scan->add_option("--n", cfg.n, "sample size when drawing from a scenario");
  r2scan->add_option("--seed", cfg.seed, "RNG seed");
  add_scenario(r2scan);
  add_model(r2scan);
  add_output(r2scan);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  auto guarded = [&](int (*fn)(const RunConfig&, std::ostream&,
                               std::ostream&)) {
    try {
      return fn(cfg, std::cout, std::cerr);
    } catch (const io_error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 4;
    } catch (const error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  };
  if (app.got_subcommand(fit)) return guarded(cmd_fit);
  if (app.got_subcommand(simulate)) return guarded(cmd_simulate);
  if (app.got_subcommand(mc)) return guarded(cmd_mc);
  return guarded(cmd_r2scan);
}

}  // namespace sdr
