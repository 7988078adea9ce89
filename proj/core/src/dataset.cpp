#include "plsim/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "plsim/errors.hpp"

namespace plsim {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '"')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '"')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

bool is_missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "na";
}

}  // namespace

std::size_t Table::find(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::string::npos;
}

Table parse_csv(const std::string& text) {
  Table table;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (!have_header) {
      table.header = std::move(cells);
      table.columns.assign(table.header.size(), {});
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw Error(ErrorCode::InvalidInput,
                  "CSV row " + std::to_string(row + 1) + " has " + std::to_string(cells.size()) +
                      " fields, header has " + std::to_string(table.header.size()),
                  {{"row", row + 1}});
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      double value = std::numeric_limits<double>::quiet_NaN();
      if (!is_missing_token(cell)) {
        const char* first = cell.data();
        const char* last = cell.data() + cell.size();
        if (*first == '+') ++first;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last) {
          value = std::numeric_limits<double>::quiet_NaN();
          table.bad_cells.push_back({c, row, cell});
        }
      }
      table.columns[c].push_back(value);
    }
    ++row;
  }
  if (!have_header) throw Error(ErrorCode::InvalidInput, "CSV input has no header row");
  return table;
}

Table read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path, {{"path", path}});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

Dataset::Dataset(Vector y, Matrix z, Matrix x, std::vector<std::string> z_names,
                 std::vector<std::string> x_names, std::string y_name)
    : y_(std::move(y)),
      z_(std::move(z)),
      x_(std::move(x)),
      z_names_(std::move(z_names)),
      x_names_(std::move(x_names)),
      y_name_(std::move(y_name)) {
  const Index n = y_.size();
  if (n < 1) throw Error(ErrorCode::InvalidInput, "dataset needs at least one row");
  if (z_.cols() < 1) throw Error(ErrorCode::InvalidInput, "dataset needs at least one index covariate");
  if (x_.cols() == 0 && x_.rows() == 0) x_.resize(n, 0);
  if (z_.rows() != n || x_.rows() != n) {
    throw Error(ErrorCode::InvalidInput, "covariate row counts do not match the response length");
  }
  if (!y_.allFinite() || !z_.allFinite() || !x_.allFinite()) {
    throw Error(ErrorCode::NonFiniteValue, "dataset contains non-finite entries");
  }
  if (z_names_.empty()) {
    for (Index j = 0; j < z_.cols(); ++j) z_names_.push_back("z" + std::to_string(j + 1));
  }
  if (x_names_.empty()) {
    for (Index j = 0; j < x_.cols(); ++j) x_names_.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<Index>(z_names_.size()) != z_.cols() || static_cast<Index>(x_names_.size()) != x_.cols()) {
    throw Error(ErrorCode::InvalidInput, "column name count does not match covariate count");
  }
}

void Dataset::require_fit_size() const {
  const Index needed = p() + q() + 3;
  if (n() < needed) {
    throw Error(ErrorCode::TooFewRows,
                "need more than p+q+2 = " + std::to_string(needed - 1) + " rows, have " + std::to_string(n()),
                {{"n", n()}, {"needed", needed}});
  }
}

Dataset validate_dataset(const Table& table, const std::vector<std::string>& z_names,
                         const std::vector<std::string>& x_names, const std::string& y_name) {
  std::vector<std::string> wanted;
  wanted.push_back(y_name);
  wanted.insert(wanted.end(), z_names.begin(), z_names.end());
  wanted.insert(wanted.end(), x_names.begin(), x_names.end());

  std::vector<std::size_t> cols;
  for (const auto& name : wanted) {
    const std::size_t c = table.find(name);
    if (c == std::string::npos) {
      throw Error(ErrorCode::MissingColumn, "column '" + name + "' not found", {{"column", name}});
    }
    cols.push_back(c);
  }
  if (z_names.empty()) throw Error(ErrorCode::InvalidInput, "at least one index covariate is required");

  // First offending cell in row-major order; rows are reported 1-based.
  std::size_t bad_rows = 0;
  std::size_t first_row = 0;
  std::string first_col;
  bool first_numeric_failure = false;
  std::string first_text;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    bool row_bad = false;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (!std::isfinite(table.columns[cols[k]][r])) {
        if (!row_bad && bad_rows == 0) {
          first_row = r + 1;
          first_col = wanted[k];
          for (const auto& bc : table.bad_cells) {
            if (bc.column == cols[k] && bc.row == r) {
              first_numeric_failure = true;
              first_text = bc.text;
            }
          }
        }
        row_bad = true;
      }
    }
    if (row_bad) ++bad_rows;
  }
  if (bad_rows > 0) {
    nlohmann::json details{{"row", first_row}, {"col", first_col}, {"rejected_rows", bad_rows}};
    if (first_numeric_failure) {
      details["text"] = first_text;
      throw Error(ErrorCode::NonNumericValue,
                  "non-numeric value '" + first_text + "' in row " + std::to_string(first_row) + ", column '" +
                      first_col + "'",
                  details);
    }
    throw Error(ErrorCode::NonFiniteValue,
                "missing or non-finite value in row " + std::to_string(first_row) + ", column '" + first_col +
                    "' (" + std::to_string(bad_rows) + " incomplete rows)",
                details);
  }

  const auto n = static_cast<Index>(table.rows());
  const auto p = static_cast<Index>(z_names.size());
  const auto q = static_cast<Index>(x_names.size());
  Vector y(n);
  Matrix z(n, p);
  Matrix x(n, q);
  for (Index i = 0; i < n; ++i) {
    y(i) = table.columns[cols[0]][i];
    for (Index j = 0; j < p; ++j) z(i, j) = table.columns[cols[1 + j]][i];
    for (Index k = 0; k < q; ++k) x(i, k) = table.columns[cols[1 + p + k]][i];
  }
  if (n < p + q + 3) {
    throw Error(ErrorCode::TooFewRows,
                "need more than p+q+2 = " + std::to_string(p + q + 2) + " rows, have " + std::to_string(n),
                {{"n", n}, {"needed", p + q + 3}});
  }
  return Dataset(std::move(y), std::move(z), std::move(x), z_names, x_names, y_name);
}

}  // namespace plsim
