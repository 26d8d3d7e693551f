#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hetero {

/// Known outcome domain [a, b].
struct YBounds {
  double a = 0.0;
  double b = 1.0;
  double width() const { return b - a; }
};

enum class ColumnKind { kNumeric, kCategorical };

struct CovariateColumn {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
};

/// Category label -> numeric code.
using Encoding = std::map<std::string, double>;

struct SchemaConfig {
  std::string treatment_column;
  std::string outcome_column;
  std::vector<CovariateColumn> covariate_columns;
  // Explicit codes for categorical columns. Columns without an entry get
  // codes 0, 1, ... in sorted label order.
  std::map<std::string, Encoding> encodings;
  bool binary_treatment = false;
  std::optional<YBounds> y_bounds;

  /// Throws SchemaError when column roles overlap or names are empty.
  void validate() const;
};

/// Parses the key-value schema grammar:
///
///   # comment
///   treatment = bmi
///   outcome = charges
///   covariate = age                 (numeric by default)
///   covariate = sex:categorical
///   encode.sex = female:0, male:1
///   binary_treatment = false
///   y_bounds = 0, 70000
SchemaConfig parse_schema(std::string_view text);
SchemaConfig load_schema_file(const std::filesystem::path& path);

struct DatasetColumns {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> w;  // row-major, n * d
  std::size_t d = 0;
  std::string treatment_name = "x";
  std::string outcome_name = "y";
  std::vector<std::string> covariate_names;
  bool binary_treatment = false;
  std::optional<YBounds> y_bounds;
  std::map<std::string, Encoding> encodings;
  std::size_t dropped_rows = 0;
};

/// Immutable observational records (X_i, Y_i, W_i).
class Dataset {
 public:
  explicit Dataset(DatasetColumns columns);

  std::size_t n() const { return cols_.x.size(); }
  std::size_t d() const { return cols_.d; }
  bool empty() const { return n() == 0; }

  std::span<const double> x() const { return cols_.x; }
  std::span<const double> y() const { return cols_.y; }
  std::span<const double> w_flat() const { return cols_.w; }
  std::span<const double> w(std::size_t i) const {
    return std::span<const double>(cols_.w).subspan(i * cols_.d, cols_.d);
  }

  const std::string& treatment_name() const { return cols_.treatment_name; }
  const std::string& outcome_name() const { return cols_.outcome_name; }
  const std::vector<std::string>& covariate_names() const {
    return cols_.covariate_names;
  }
  std::vector<std::string> column_names() const;

  bool binary_treatment() const { return cols_.binary_treatment; }
  const std::optional<YBounds>& y_bounds() const { return cols_.y_bounds; }
  const std::map<std::string, Encoding>& encodings() const {
    return cols_.encodings;
  }
  std::size_t dropped_rows() const { return cols_.dropped_rows; }

  /// Index of a covariate column, or nullopt.
  std::optional<std::size_t> covariate_index(std::string_view name) const;

  /// Rows at the given indices, in that order (repeats allowed).
  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset with_treatment(std::vector<double> x) const;
  /// Drops covariate columns that take a single value, e.g. after exact
  /// stratification.
  Dataset without_constant_covariates() const;
  Dataset with_outcome(std::vector<double> y,
                       std::optional<YBounds> bounds) const;

  const DatasetColumns& columns() const { return cols_; }

 private:
  DatasetColumns cols_;
};

/// Reads an RFC-4180 CSV with a header row. Rows with missing or
/// unparsable cells are dropped and counted in Dataset::dropped_rows().
Dataset load_csv(const std::filesystem::path& path, const SchemaConfig& schema);
Dataset read_csv(std::istream& in, const SchemaConfig& schema);

/// Writes treatment, outcome, then covariates, with a header row.
void write_csv(std::ostream& out, const Dataset& data);

/// Splits one CSV record into fields (quotes, doubled quotes, CRLF).
std::vector<std::string> split_csv_record(std::string_view line);

struct Equals {
  std::string value;  // category label or number
};
struct Range {
  double lo;
  double hi;  // inclusive
};
struct ColumnConstraint {
  std::string column;
  std::variant<Equals, Range> test;
};
using Predicate = std::vector<ColumnConstraint>;

/// "age=30,smoker=no,bmi=20..40"
Predicate parse_predicate(std::string_view text);

/// Rows satisfying every constraint, order preserved. The result may be
/// empty. Unknown columns throw SchemaError.
Dataset filter_covariates(const Dataset& data, const Predicate& predicate);

/// Observed outcome range widened by margin_fraction * range on both sides;
/// a constant outcome is widened by one unit each side.
YBounds infer_y_bounds(const Dataset& data, double margin_fraction = 0.0);

}  // namespace hetero
