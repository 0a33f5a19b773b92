#include "sdr/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sdr/error.hpp"

namespace sdr {

namespace {

std::string trimmed_copy(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string token;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trimmed_copy(token));
      token.clear();
    } else {
      token.push_back(c);
    }
  }
  out.push_back(trimmed_copy(token));
  return out;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN";
}

std::string join(const std::vector<Index>& v, std::size_t limit = 8) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size() && i < limit; ++i) {
    if (i) out << ", ";
    out << v[i];
  }
  if (v.size() > limit) out << ", ... (" << v.size() << " total)";
  return out.str();
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& response_column,
                 const std::vector<std::string>& covariate_columns) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw io_error("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].empty())
      throw io_error("'" + path + "': empty header name in column " +
                     std::to_string(i + 1));
    for (std::size_t j = i + 1; j < header.size(); ++j)
      if (header[i] == header[j])
        throw io_error("'" + path + "': duplicate column '" + header[i] + "'");
  }

  auto column_of = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw io_error("'" + path + "' has no column '" + name + "'");
    return std::size_t(it - header.begin());
  };

  const std::size_t y_col = column_of(response_column);
  std::vector<std::size_t> x_cols;
  std::vector<std::string> x_names;
  if (covariate_columns.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (j != y_col) {
        x_cols.push_back(j);
        x_names.push_back(header[j]);
      }
  } else {
    for (const auto& name : covariate_columns) {
      if (name == response_column)
        throw validation_error("column '" + name +
                               "' is both response and covariate");
      x_cols.push_back(column_of(name));
      x_names.push_back(name);
    }
  }
  if (x_cols.empty())
    throw validation_error("'" + path + "': no covariate columns selected");

  std::vector<std::vector<double>> rows;
  std::vector<Index> missing_rows;
  std::string missing_where;
  Index row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw io_error("'" + path + "', data row " + std::to_string(row) +
                     ": expected " + std::to_string(header.size()) +
                     " fields, found " + std::to_string(cells.size()));
    std::vector<double> parsed(cells.size());
    bool missing_here = false;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (is_missing(cells[j])) {
        if (!missing_here) {
          missing_rows.push_back(row);
          missing_here = true;
          if (missing_where.empty()) missing_where = header[j];
        }
        continue;
      }
      char* end = nullptr;
      parsed[j] = std::strtod(cells[j].c_str(), &end);
      if (end == cells[j].c_str() || *end != '\0')
        throw io_error("'" + path + "', data row " + std::to_string(row) +
                       ", column '" + header[j] + "': cannot parse '" +
                       cells[j] + "' as a number");
    }
    rows.push_back(std::move(parsed));
  }
  if (!missing_rows.empty())
    throw io_error("'" + path + "': missing values (first in column '" +
                   missing_where + "') at data rows " + join(missing_rows));
  if (rows.empty()) throw io_error("'" + path + "' has no data rows");

  Dataset ds;
  ds.response = response_column;
  ds.covariates = x_names;
  const Index n = Index(rows.size());
  ds.y.resize(n);
  ds.x.resize(n, Index(x_cols.size()));
  for (Index i = 0; i < n; ++i) {
    ds.y(i) = rows[std::size_t(i)][y_col];
    for (std::size_t j = 0; j < x_cols.size(); ++j)
      ds.x(i, Index(j)) = rows[std::size_t(i)][x_cols[j]];
  }

  for (Index j = 0; j < ds.x.cols(); ++j) {
    const double lo = ds.x.col(j).minCoeff(), hi = ds.x.col(j).maxCoeff();
    if (lo == hi)
      throw validation_error("covariate '" + x_names[std::size_t(j)] +
                             "' is constant; standardization needs spread");
  }
  return ds;
}

void write_csv(const std::string& path, const std::vector<std::string>& names,
               MatRef columns) {
  if (Index(names.size()) != columns.cols())
    throw validation_error("write_csv: one name per column required");
  std::ofstream out(path);
  if (!out) throw io_error("cannot write '" + path + "'");
  for (std::size_t j = 0; j < names.size(); ++j)
    out << (j ? "," : "") << names[j];
  out << "\n";
  char buf[40];
  for (Index i = 0; i < columns.rows(); ++i) {
    for (Index j = 0; j < columns.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", columns(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out.good()) throw io_error("failed while writing '" + path + "'");
}

}  // namespace sdr
