#include "sdr/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sdr/error.hpp"
#include "sdr/inference.hpp"

namespace sdr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vector vec_colmajor(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

struct RepCell {
  bool ok = false;
  bool has_se = false;
  Vector aligned;
  Vector se;
  double distance = kNaN;
  std::string note;
};

// d/dv of the aligned coefficients, forward differences through the
// standardization and the least-squares alignment.
Matrix alignment_jacobian(const FitResult& fr, const Matrix& beta_true) {
  const Index p = fr.beta.p(), d = fr.beta.d();
  const Index pt = (p - d) * d;
  const Vector v0 = vecl(fr.beta);
  const Vector base =
      vec_colmajor(align_least_squares(fr.span_x, beta_true));
  Matrix g(p * d, pt);
  for (Index j = 0; j < pt; ++j) {
    Vector v = v0;
    const double step = 1e-6 * std::max(1.0, std::abs(v0(j)));
    v(j) += step;
    const Matrix span = backtransform_span(unvecl(v, p, d), fr.standardizer);
    g.col(j) =
        (vec_colmajor(align_least_squares(span, beta_true)) - base) / step;
  }
  return g;
}

RepCell run_one(EstimatorKind kind, const Scenario& scenario, MatRef x,
                VecRef y, const FitOptions& base) {
  RepCell cell;
  try {
    FitOptions opt = base;
    opt.estimator = kind;
    opt.d = scenario.d;
    opt.scenario = &scenario;
    FitResult fr = fit_sdr(x, y, opt);
    if (!fr.converged) {
      cell.note = "did not converge";
      return cell;
    }
    cell.aligned = vec_colmajor(align_least_squares(fr.span_x, scenario.beta_true));
    cell.distance = subspace_distance(fr.span_x, scenario.beta_true);
    cell.ok = true;
    if (fr.has_inference) {
      const Matrix g = alignment_jacobian(fr, scenario.beta_true);
      const Matrix vc = g * fr.vcov * g.transpose();
      cell.se =
          (vc.diagonal().cwiseMax(0.0) / double(fr.n_used)).cwiseSqrt();
      cell.has_se = true;
    }
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.note = e.what();
  }
  return cell;
}

double median_of(std::vector<double>& v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

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

std::string coverage_label(double level) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "cover%d", int(std::lround(level * 100)));
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string token;
  for (char c : line) {
    if (c == ',') {
      out.push_back(token);
      token.clear();
    } else {
      token.push_back(c);
    }
  }
  out.push_back(token);
  return out;
}

double parse_double(const std::string& s) {
  if (s.empty()) return kNaN;
  return std::strtod(s.c_str(), nullptr);
}

Vector parse_vector(const std::vector<std::string>& fields, std::size_t from) {
  Vector v(Index(fields.size() - from));
  for (std::size_t i = from; i < fields.size(); ++i)
    v(Index(i - from)) = parse_double(fields[i]);
  return v;
}

EstimatorReport& find_or_add(MCReport& rep, const std::string& name) {
  for (auto& e : rep.estimators)
    if (e.estimator == name) return e;
  rep.estimators.push_back(EstimatorReport{});
  rep.estimators.back().estimator = name;
  return rep.estimators.back();
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isnan(v(i)))
      arr.push_back(nullptr);
    else
      arr.push_back(v(i));
  }
  return arr;
}

Vector vector_from_json(const nlohmann::json& arr) {
  Vector v(Index(arr.size()));
  Index i = 0;
  for (const auto& el : arr) v(i++) = el.is_null() ? kNaN : el.get<double>();
  return v;
}

}  // namespace

std::vector<std::string> coefficient_names(int p, int d) {
  std::vector<std::string> names;
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < p; ++j)
      names.push_back(d == 1 ? "beta" + std::to_string(j + 1)
                             : "beta" + std::to_string(j + 1) +
                                   std::to_string(k + 1));
  return names;
}

MCReport run_monte_carlo(const Scenario& scenario,
                         const std::vector<EstimatorKind>& estimators, int n,
                         int reps, std::uint64_t seed, int workers,
                         const FitOptions& base) {
  if (reps < 1) throw validation_error("monte carlo: reps must be >= 1");
  if (n <= scenario.p + 1)
    throw validation_error("monte carlo: n must exceed the covariate count");
  if (!scenario.draw_x || !scenario.draw_y)
    throw validation_error("scenario '" + scenario.name +
                           "' is missing samplers");
  for (EstimatorKind k : estimators)
    if (k == EstimatorKind::oracle && !scenario.has_oracle)
      throw validation_error(
          "oracle estimator requested but scenario '" + scenario.name +
          "' carries no analytic conditional law");

  MCReport report;
  report.scenario = scenario.name;
  report.p = scenario.p;
  report.d = scenario.d;
  report.n = n;
  report.reps = reps;
  report.seed = seed;
  report.workers = std::max(1, workers);
  report.coefficients = coefficient_names(scenario.p, scenario.d);

  const std::size_t ne = estimators.size();
  std::vector<std::vector<RepCell>> slots(static_cast<std::size_t>(reps),
                                          std::vector<RepCell>(ne));

  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= reps) return;
      try {
        Rng rng(seed, std::uint64_t(rep));
        const Sample smp = draw_sample(scenario, n, rng);
        for (std::size_t e = 0; e < ne; ++e)
          slots[std::size_t(rep)][e] =
              run_one(estimators[e], scenario, smp.x, smp.y, base);
      } catch (const std::exception& ex) {
        for (std::size_t e = 0; e < ne; ++e)
          slots[std::size_t(rep)][e].note = ex.what();
      }
    }
  };
  const int pool = std::max(1, std::min(report.workers, reps));
  if (pool == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(std::size_t(pool));
    for (int t = 0; t < pool; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }

  const Index m = Index(scenario.p) * scenario.d;
  const double z = normal_quantile(0.5 * (1.0 + report.level));
  Matrix truth = scenario.beta_true;
  const Vector truth_vec = vec_colmajor(truth);

  for (std::size_t e = 0; e < ne; ++e) {
    EstimatorReport er;
    er.estimator = estimator_name(estimators[e]);
    er.ave = Vector::Constant(m, kNaN);
    er.stddev = Vector::Constant(m, kNaN);
    er.se_mean = Vector::Constant(m, kNaN);
    er.se_median = Vector::Constant(m, kNaN);
    er.coverage = Vector::Constant(m, kNaN);

    Index n_ok = 0, n_se = 0;
    Vector sum = Vector::Zero(m), sumsq = Vector::Zero(m);
    Vector se_sum = Vector::Zero(m), cover = Vector::Zero(m);
    const std::size_t m_sz = static_cast<std::size_t>(m);
    std::vector<std::vector<double>> se_all(m_sz);
    double dist_sum = 0.0;
    std::string first_note;
    for (int rep = 0; rep < reps; ++rep) {
      const RepCell& cell = slots[std::size_t(rep)][e];
      if (!cell.ok) {
        if (first_note.empty() && !cell.note.empty()) first_note = cell.note;
        continue;
      }
      ++n_ok;
      sum += cell.aligned;
      sumsq += cell.aligned.cwiseAbs2();
      dist_sum += cell.distance;
      if (cell.has_se) {
        ++n_se;
        se_sum += cell.se;
        for (Index j = 0; j < m; ++j) {
          se_all[std::size_t(j)].push_back(cell.se(j));
          if (std::abs(cell.aligned(j) - truth_vec(j)) <= z * cell.se(j))
            cover(j) += 1.0;
        }
      }
    }
    er.failures = reps - int(n_ok);
    if (n_ok > 0) {
      er.ave = sum / double(n_ok);
      er.mean_distance = dist_sum / double(n_ok);
    }
    if (n_ok > 1)
      er.stddev = ((sumsq - sum.cwiseAbs2() / double(n_ok)) /
                   double(n_ok - 1))
                      .cwiseMax(0.0)
                      .cwiseSqrt();
    if (n_se > 0) {
      er.has_inference = true;
      er.se_mean = se_sum / double(n_se);
      er.coverage = cover / double(n_se);
      for (Index j = 0; j < m; ++j)
        er.se_median(j) = median_of(se_all[std::size_t(j)]);
    }
    if (er.failures > 0.02 * reps) {
      std::ostringstream msg;
      msg << er.estimator << ": " << er.failures << " of " << reps
          << " replications failed";
      if (!first_note.empty()) msg << " (first: " << first_note << ")";
      report.warnings.push_back(msg.str());
    }
    report.estimators.push_back(std::move(er));
  }
  return report;
}

ReportFormat parse_format(const std::string& name) {
  if (name == "text") return ReportFormat::text;
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw validation_error("unknown format '" + name +
                         "' (valid: text, csv, json)");
}

std::string format_name(ReportFormat format) {
  switch (format) {
    case ReportFormat::text: return "text";
    case ReportFormat::csv: return "csv";
    case ReportFormat::json: return "json";
  }
  return "?";
}

namespace {

std::string render_text(const MCReport& r) {
  std::ostringstream out;
  out << "scenario: " << r.scenario << "  p: " << r.p << "  d: " << r.d
      << "\n";
  out << "n: " << r.n << "  reps: " << r.reps << "  seed: " << r.seed
      << "  workers: " << r.workers << "  level: " << fmt4(r.level) << "\n\n";
  const int w = 11;
  out << std::left;
  auto pad = [&](const std::string& s, int width) {
    std::string t = s;
    if (int(t.size()) < width) t.append(std::size_t(width - int(t.size())), ' ');
    return t;
  };
  out << pad("estimator", 11) << pad("statistic", 10);
  for (const auto& c : r.coefficients) out << pad(c, w);
  out << "\n";
  const std::string cov = coverage_label(r.level);
  for (const auto& e : r.estimators) {
    auto row = [&](const std::string& stat, const Vector& v) {
      out << pad(e.estimator, 11) << pad(stat, 10);
      for (Index j = 0; j < v.size(); ++j) out << pad(fmt4(v(j)), w);
      out << "\n";
    };
    row("ave", e.ave);
    row("std", e.stddev);
    row("se", e.se_mean);
    row(cov, e.coverage);
  }
  out << "\n";
  for (const auto& e : r.estimators) {
    out << "se_med " << e.estimator << ":";
    for (Index j = 0; j < e.se_median.size(); ++j)
      out << " " << fmt4(e.se_median(j));
    out << "  (failures: " << e.failures
        << ", mean subspace distance: " << fmt4(e.mean_distance) << ")\n";
  }
  for (const auto& wmsg : r.warnings) out << "warning: " << wmsg << "\n";
  return out.str();
}

std::string render_csv(const MCReport& r) {
  std::ostringstream out;
  out << "# sdr-mc,1\n";
  out << "# scenario," << r.scenario << "\n";
  out << "# p," << r.p << "\n# d," << r.d << "\n# n," << r.n << "\n# reps,"
      << r.reps << "\n# seed," << r.seed << "\n# workers," << r.workers
      << "\n# level," << fmt17(r.level) << "\n";
  for (const auto& e : r.estimators) {
    out << "# meta," << e.estimator << "," << e.failures << ","
        << (e.has_inference ? 1 : 0) << "," << fmt17(e.mean_distance) << "\n";
    out << "# se_median," << e.estimator;
    for (Index j = 0; j < e.se_median.size(); ++j)
      out << "," << fmt17(e.se_median(j));
    out << "\n";
  }
  for (const auto& w : r.warnings) out << "# warning," << w << "\n";
  out << "estimator,statistic";
  for (const auto& c : r.coefficients) out << "," << c;
  out << "\n";
  const std::string cov = coverage_label(r.level);
  for (const auto& e : r.estimators) {
    auto row = [&](const std::string& stat, const Vector& v) {
      out << e.estimator << "," << stat;
      for (Index j = 0; j < v.size(); ++j) out << "," << fmt17(v(j));
      out << "\n";
    };
    row("ave", e.ave);
    row("std", e.stddev);
    row("se", e.se_mean);
    row(cov, e.coverage);
  }
  return out.str();
}

std::string render_json(const MCReport& r) {
  nlohmann::json j;
  j["scenario"] = r.scenario;
  j["p"] = r.p;
  j["d"] = r.d;
  j["n"] = r.n;
  j["reps"] = r.reps;
  j["seed"] = r.seed;
  j["workers"] = r.workers;
  j["level"] = r.level;
  j["coefficients"] = r.coefficients;
  j["warnings"] = r.warnings;
  j["estimators"] = nlohmann::json::array();
  for (const auto& e : r.estimators) {
    nlohmann::json je;
    je["estimator"] = e.estimator;
    je["failures"] = e.failures;
    je["has_inference"] = e.has_inference;
    je["mean_distance"] =
        std::isnan(e.mean_distance) ? nlohmann::json(nullptr)
                                    : nlohmann::json(e.mean_distance);
    je["ave"] = vector_to_json(e.ave);
    je["std"] = vector_to_json(e.stddev);
    je["se"] = vector_to_json(e.se_mean);
    je["se_median"] = vector_to_json(e.se_median);
    je["coverage"] = vector_to_json(e.coverage);
    j["estimators"].push_back(std::move(je));
  }
  return j.dump(2) + "\n";
}

}  // namespace

std::string report_table(const MCReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::text: return render_text(report);
    case ReportFormat::csv: return render_csv(report);
    case ReportFormat::json: return render_json(report);
  }
  throw validation_error("unknown report format");
}

MCReport report_from_csv(const std::string& text) {
  MCReport r;
  std::istringstream in(text);
  std::string line;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const std::string body = line.substr(2);
      const auto f = split_csv_line(body);
      if (f.empty()) continue;
      if (f[0] == "scenario" && f.size() > 1) r.scenario = f[1];
      else if (f[0] == "p" && f.size() > 1) r.p = std::stoi(f[1]);
      else if (f[0] == "d" && f.size() > 1) r.d = std::stoi(f[1]);
      else if (f[0] == "n" && f.size() > 1) r.n = std::stoi(f[1]);
      else if (f[0] == "reps" && f.size() > 1) r.reps = std::stoi(f[1]);
      else if (f[0] == "seed" && f.size() > 1) r.seed = std::stoull(f[1]);
      else if (f[0] == "workers" && f.size() > 1) r.workers = std::stoi(f[1]);
      else if (f[0] == "level" && f.size() > 1) r.level = parse_double(f[1]);
      else if (f[0] == "meta" && f.size() > 4) {
        auto& e = find_or_add(r, f[1]);
        e.failures = std::stoi(f[2]);
        e.has_inference = f[3] == "1";
        e.mean_distance = parse_double(f[4]);
      } else if (f[0] == "se_median" && f.size() > 1) {
        find_or_add(r, f[1]).se_median = parse_vector(f, 2);
      } else if (f[0] == "warning") {
        r.warnings.push_back(body.substr(std::string("warning,").size()));
      }
      continue;
    }
    const auto f = split_csv_line(line);
    if (!seen_header) {
      if (f.size() < 2 || f[0] != "estimator")
        throw io_error("mc csv: missing table header");
      r.coefficients.assign(f.begin() + 2, f.end());
      seen_header = true;
      continue;
    }
    if (f.size() != r.coefficients.size() + 2)
      throw io_error("mc csv: row width does not match the header");
    auto& e = find_or_add(r, f[0]);
    const Vector v = parse_vector(f, 2);
    if (f[1] == "ave") e.ave = v;
    else if (f[1] == "std") e.stddev = v;
    else if (f[1] == "se") e.se_mean = v;
    else if (f[1].rfind("cover", 0) == 0) e.coverage = v;
    else throw io_error("mc csv: unknown statistic '" + f[1] + "'");
  }
  if (!seen_header) throw io_error("mc csv: empty input");
  return r;
}

MCReport report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw io_error(std::string("mc json: ") + e.what());
  }
  MCReport r;
  r.scenario = j.value("scenario", std::string{});
  r.p = j.value("p", 0);
  r.d = j.value("d", 0);
  r.n = j.value("n", 0);
  r.reps = j.value("reps", 0);
  r.seed = j.value("seed", std::uint64_t{0});
  r.workers = j.value("workers", 1);
  r.level = j.value("level", 0.95);
  if (j.contains("coefficients"))
    r.coefficients = j["coefficients"].get<std::vector<std::string>>();
  if (j.contains("warnings"))
    r.warnings = j["warnings"].get<std::vector<std::string>>();
  if (j.contains("estimators"))
    for (const auto& je : j["estimators"]) {
      EstimatorReport e;
      e.estimator = je.value("estimator", std::string{});
      e.failures = je.value("failures", 0);
      e.has_inference = je.value("has_inference", false);
      e.mean_distance = je.contains("mean_distance") &&
                                !je["mean_distance"].is_null()
                            ? je["mean_distance"].get<double>()
                            : kNaN;
      e.ave = vector_from_json(je.value("ave", nlohmann::json::array()));
      e.stddev = vector_from_json(je.value("std", nlohmann::json::array()));
      e.se_mean = vector_from_json(je.value("se", nlohmann::json::array()));
      e.se_median =
          vector_from_json(je.value("se_median", nlohmann::json::array()));
      e.coverage =
          vector_from_json(je.value("coverage", nlohmann::json::array()));
      r.estimators.push_back(std::move(e));
    }
  return r;
}

}  // namespace sdr
