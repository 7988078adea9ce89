#pragma once

#include <string>
#include <vector>

#include "plsim/common.hpp"

namespace plsim {

/// A parsed CSV: header names plus one column of doubles per name. Empty
/// fields and NA/NaN tokens are stored as quiet NaN so validation can report
/// their position.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  /// Raw text of cells that failed numeric parsing, keyed by (column, row).
  struct BadCell {
    std::size_t column;
    std::size_t row;
    std::string text;
  };
  std::vector<BadCell> bad_cells;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  /// Position of `name` in the header, or npos.
  std::size_t find(const std::string& name) const;
};

Table parse_csv(const std::string& text);
Table read_csv(const std::string& path);

/// Response Y, index covariates Z (n x p) and linear covariates X (n x q).
/// Immutable after construction.
class Dataset {
 public:
  Dataset(Vector y, Matrix z, Matrix x, std::vector<std::string> z_names = {},
          std::vector<std::string> x_names = {}, std::string y_name = "y");

  const Vector& y() const { return y_; }
  const Matrix& z() const { return z_; }
  const Matrix& x() const { return x_; }
  const std::vector<std::string>& z_names() const { return z_names_; }
  const std::vector<std::string>& x_names() const { return x_names_; }
  const std::string& y_name() const { return y_name_; }

  Index n() const { return y_.size(); }
  Index p() const { return z_.cols(); }
  Index q() const { return x_.cols(); }

  /// Throws TooFewRows unless n > p + q + 2.
  void require_fit_size() const;

 private:
  Vector y_;
  Matrix z_;
  Matrix x_;
  std::vector<std::string> z_names_;
  std::vector<std::string> x_names_;
  std::string y_name_;
};

/// Selects named columns from a table. Rows holding a missing or non-finite
/// value are rejected, never dropped.
Dataset validate_dataset(const Table& table, const std::vector<std::string>& z_names,
                         const std::vector<std::string>& x_names, const std::string& y_name);

}  // namespace plsim
