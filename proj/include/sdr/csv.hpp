#pragma once

#include <string>
#include <vector>

#include "sdr/types.hpp"

namespace sdr {

struct Dataset {
  Vector y;
  Matrix x;
  std::string response;
  std::vector<std::string> covariates;  // column order preserved
  Index rows() const { return y.size(); }
};

// Strict numeric CSV with a mandatory header row. Selects the response and
// covariate columns by name (empty covariate list = every other column in
// file order). Missing values ("NA", "na", or empty cells) and non-numeric
// cells are reported with 1-based data-row and column coordinates; constant
// covariate columns are rejected because standardization needs spread.
Dataset load_csv(const std::string& path, const std::string& response_column,
                 const std::vector<std::string>& covariate_columns = {});

// Header plus rows, every value printed with round-trip precision.
void write_csv(const std::string& path, const std::vector<std::string>& names,
               MatRef columns);

}  // namespace sdr
