#include "hetero/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "hetero/error.hpp"

namespace hetero {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

bool is_missing(std::string_view s) {
  s = trim(s);
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" ||
         s == "null" || s == "NULL";
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number_or_throw(std::string_view s, std::string_view what) {
  if (auto v = parse_double(s)) return *v;
  throw SchemaError("invalid number for " + std::string(what) + ": '" +
                    std::string(s) + "'");
}

// Reads one logical record; quoted fields may span lines.
bool read_record(std::istream& in, std::string& record) {
  record.clear();
  std::string line;
  bool in_quotes = false;
  bool any = false;
  while (std::getline(in, line)) {
    any = true;
    if (!record.empty() || in_quotes) record.push_back('\n');
    record += line;
    for (char c : line) {
      if (c == '"') in_quotes = !in_quotes;
    }
    if (!in_quotes) break;
  }
  return any;
}

}  // namespace

void SchemaConfig::validate() const {
  if (treatment_column.empty()) throw SchemaError("schema: treatment column not set");
  if (outcome_column.empty()) throw SchemaError("schema: outcome column not set");
  std::set<std::string> seen{treatment_column};
  if (!seen.insert(outcome_column).second) {
    throw SchemaError("schema: treatment and outcome columns must differ");
  }
  for (const auto& c : covariate_columns) {
    if (c.name.empty()) throw SchemaError("schema: empty covariate name");
    if (!seen.insert(c.name).second) {
      throw SchemaError("schema: column '" + c.name + "' used twice");
    }
  }
  for (const auto& [col, enc] : encodings) {
    const bool known = std::any_of(
        covariate_columns.begin(), covariate_columns.end(),
        [&](const CovariateColumn& c) {
          return c.name == col && c.kind == ColumnKind::kCategorical;
        });
    if (!known) {
      throw SchemaError("schema: encoding given for non-categorical column '" +
                        col + "'");
    }
  }
  if (y_bounds && !(y_bounds->a < y_bounds->b)) {
    throw SchemaError("schema: y_bounds requires a < b");
  }
}

SchemaConfig parse_schema(std::string_view text) {
  SchemaConfig schema;
  std::size_t line_no = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw SchemaError("schema line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key == "treatment") {
      schema.treatment_column = value;
    } else if (key == "outcome") {
      schema.outcome_column = value;
    } else if (key == "covariate") {
      CovariateColumn col;
      const auto colon = value.find(':');
      col.name = trim(value.substr(0, colon));
      if (colon != std::string_view::npos) {
        const auto kind = trim(value.substr(colon + 1));
        if (kind == "categorical") {
          col.kind = ColumnKind::kCategorical;
        } else if (kind != "numeric") {
          throw SchemaError("schema: unknown column kind '" + std::string(kind) + "'");
        }
      }
      schema.covariate_columns.push_back(std::move(col));
    } else if (key.rfind("encode.", 0) == 0) {
      Encoding enc;
      for (auto item : split(value, ',')) {
        const auto colon = item.rfind(':');
        if (colon == std::string_view::npos) {
          throw SchemaError("schema: encoding entries are label:code");
        }
        enc[std::string(trim(item.substr(0, colon)))] =
            parse_number_or_throw(item.substr(colon + 1), key);
      }
      schema.encodings[key.substr(7)] = std::move(enc);
    } else if (key == "binary_treatment") {
      schema.binary_treatment = (value == "true" || value == "1" || value == "yes");
    } else if (key == "y_bounds") {
      const auto parts = split(value, ',');
      if (parts.size() != 2) throw SchemaError("schema: y_bounds = a, b");
      schema.y_bounds = YBounds{parse_number_or_throw(parts[0], key),
                                parse_number_or_throw(parts[1], key)};
    } else {
      throw SchemaError("schema: unknown key '" + key + "'");
    }
  }
  schema.validate();
  return schema;
}

SchemaConfig load_schema_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_schema(ss.str());
}

Dataset::Dataset(DatasetColumns columns) : cols_(std::move(columns)) {
  const std::size_t n = cols_.x.size();
  if (cols_.y.size() != n || cols_.w.size() != n * cols_.d) {
    throw InvalidArgument("dataset columns have inconsistent lengths");
  }
  if (cols_.covariate_names.empty() && cols_.d > 0) {
    for (std::size_t j = 0; j < cols_.d; ++j) {
      cols_.covariate_names.push_back(cols_.d == 1 ? "w" : "w" + std::to_string(j + 1));
    }
  }
  if (cols_.covariate_names.size() != cols_.d) {
    throw InvalidArgument("dataset: covariate name count does not match d");
  }
  if (cols_.binary_treatment) {
    for (double v : cols_.x) {
      if (v != 0.0 && v != 1.0) {
        throw SchemaError("binary treatment column contains a value other than 0/1");
      }
    }
  }
  if (cols_.y_bounds) {
    if (!(cols_.y_bounds->a < cols_.y_bounds->b)) {
      throw SchemaError("y_bounds requires a < b");
    }
    for (double v : cols_.y) {
      if (v < cols_.y_bounds->a || v > cols_.y_bounds->b) {
        throw SchemaError("outcome value outside declared y_bounds");
      }
    }
  }
}

std::vector<std::string> Dataset::column_names() const {
  std::vector<std::string> names{cols_.treatment_name, cols_.outcome_name};
  names.insert(names.end(), cols_.covariate_names.begin(), cols_.covariate_names.end());
  return names;
}

std::optional<std::size_t> Dataset::covariate_index(std::string_view name) const {
  for (std::size_t j = 0; j < cols_.covariate_names.size(); ++j) {
    if (cols_.covariate_names[j] == name) return j;
  }
  return std::nullopt;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  DatasetColumns c = cols_;
  c.x.clear();
  c.y.clear();
  c.w.clear();
  c.x.reserve(rows.size());
  c.y.reserve(rows.size());
  c.w.reserve(rows.size() * cols_.d);
  for (std::size_t r : rows) {
    c.x.push_back(cols_.x.at(r));
    c.y.push_back(cols_.y[r]);
    const auto wr = w(r);
    c.w.insert(c.w.end(), wr.begin(), wr.end());
  }
  return Dataset(std::move(c));
}

Dataset Dataset::with_treatment(std::vector<double> x) const {
  DatasetColumns c = cols_;
  c.x = std::move(x);
  return Dataset(std::move(c));
}

Dataset Dataset::without_constant_covariates() const {
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < cols_.d; ++j) {
    for (std::size_t i = 1; i < n(); ++i) {
      if (cols_.w[i * cols_.d + j] != cols_.w[j]) {
        kept.push_back(j);
        break;
      }
    }
  }
  DatasetColumns c = cols_;
  c.d = kept.size();
  c.covariate_names.clear();
  c.w.clear();
  c.w.reserve(n() * kept.size());
  for (std::size_t i = 0; i < n(); ++i) {
    for (std::size_t j : kept) c.w.push_back(cols_.w[i * cols_.d + j]);
  }
  for (std::size_t j : kept) c.covariate_names.push_back(cols_.covariate_names[j]);
  std::erase_if(c.encodings, [&](const auto& e) {
    return std::find(c.covariate_names.begin(), c.covariate_names.end(), e.first) ==
           c.covariate_names.end();
  });
  return Dataset(std::move(c));
}

Dataset Dataset::with_outcome(std::vector<double> y,
                              std::optional<YBounds> bounds) const {
  DatasetColumns c = cols_;
  c.y = std::move(y);
  c.y_bounds = bounds;
  return Dataset(std::move(c));
}

std::vector<std::string> split_csv_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

Dataset read_csv(std::istream& in, const SchemaConfig& schema) {
  schema.validate();
  std::string record;
  if (!read_record(in, record)) throw SchemaError("empty dataset: no header row");
  if (record.rfind("\xEF\xBB\xBF", 0) == 0) record.erase(0, 3);
  std::vector<std::string> header = split_csv_record(record);
  for (auto& h : header) h = std::string(trim(h));

  auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw SchemaError("missing column '" + name + "' in CSV header");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t x_col = column_of(schema.treatment_column);
  const std::size_t y_col = column_of(schema.outcome_column);
  std::vector<std::size_t> w_cols;
  for (const auto& c : schema.covariate_columns) w_cols.push_back(column_of(c.name));
  const std::size_t d = w_cols.size();

  // Categorical cells are kept as labels until every row is read so that
  // automatic codes do not depend on row order.
  struct Row {
    double x, y;
    std::vector<double> w;
    std::vector<std::string> labels;
  };
  std::vector<Row> rows;
  std::size_t dropped = 0;
  std::vector<std::set<std::string>> seen_labels(d);

  while (read_record(in, record)) {
    if (trim(record).empty()) continue;
    const auto fields = split_csv_record(record);
    if (fields.size() != header.size()) {
      ++dropped;
      continue;
    }
    Row row{};
    row.w.assign(d, 0.0);
    row.labels.assign(d, {});
    bool ok = true;
    if (is_missing(fields[x_col]) || is_missing(fields[y_col])) ok = false;
    if (ok) {
      auto xv = parse_double(fields[x_col]);
      auto yv = parse_double(fields[y_col]);
      ok = xv && yv;
      if (ok) {
        row.x = *xv;
        row.y = *yv;
      }
    }
    for (std::size_t j = 0; ok && j < d; ++j) {
      const auto& cell = fields[w_cols[j]];
      if (is_missing(cell)) {
        ok = false;
      } else if (schema.covariate_columns[j].kind == ColumnKind::kCategorical) {
        row.labels[j] = std::string(trim(cell));
        seen_labels[j].insert(row.labels[j]);
      } else if (auto v = parse_double(cell)) {
        row.w[j] = *v;
      } else {
        ok = false;
      }
    }
    if (ok) {
      rows.push_back(std::move(row));
    } else {
      ++dropped;
    }
  }
  if (rows.empty()) throw SchemaError("empty dataset");

  DatasetColumns cols;
  cols.d = d;
  cols.treatment_name = schema.treatment_column;
  cols.outcome_name = schema.outcome_column;
  for (const auto& c : schema.covariate_columns) cols.covariate_names.push_back(c.name);
  cols.binary_treatment = schema.binary_treatment;
  cols.y_bounds = schema.y_bounds;
  cols.dropped_rows = dropped;

  for (std::size_t j = 0; j < d; ++j) {
    const auto& col = schema.covariate_columns[j];
    if (col.kind != ColumnKind::kCategorical) continue;
    Encoding enc;
    if (auto it = schema.encodings.find(col.name); it != schema.encodings.end()) {
      enc = it->second;
      for (const auto& label : seen_labels[j]) {
        if (!enc.count(label)) {
          throw SchemaError("category '" + label + "' of column '" + col.name +
                            "' has no code");
        }
      }
    } else {
      double code = 0.0;
      for (const auto& label : seen_labels[j]) enc[label] = code++;
    }
    cols.encodings[col.name] = std::move(enc);
  }

  cols.x.reserve(rows.size());
  cols.y.reserve(rows.size());
  cols.w.reserve(rows.size() * d);
  for (auto& row : rows) {
    cols.x.push_back(row.x);
    cols.y.push_back(row.y);
    for (std::size_t j = 0; j < d; ++j) {
      const auto& col = schema.covariate_columns[j];
      cols.w.push_back(col.kind == ColumnKind::kCategorical
                           ? cols.encodings[col.name].at(row.labels[j])
                           : row.w[j]);
    }
  }
  return Dataset(std::move(cols));
}

Dataset load_csv(const std::filesystem::path& path, const SchemaConfig& schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path.string());
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& data) {
  const auto names = data.column_names();
  for (std::size_t j = 0; j < names.size(); ++j) {
    out << (j ? "," : "") << names[j];
  }
  out << '\n';
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << data.x()[i] << ',' << data.y()[i];
    for (double v : data.w(i)) out << ',' << v;
    out << '\n';
  }
  out.precision(old_precision);
}

Predicate parse_predicate(std::string_view text) {
  Predicate pred;
  text = trim(text);
  if (text.empty()) return pred;
  for (auto item : split(text, ',')) {
    item = trim(item);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw SchemaError("filter entries are column=value or column=lo..hi");
    }
    ColumnConstraint c;
    c.column = trim(item.substr(0, eq));
    const auto value = trim(item.substr(eq + 1));
    if (const auto dots = value.find(".."); dots != std::string_view::npos) {
      c.test = Range{parse_number_or_throw(value.substr(0, dots), c.column),
                     parse_number_or_throw(value.substr(dots + 2), c.column)};
    } else {
      c.test = Equals{std::string(value)};
    }
    pred.push_back(std::move(c));
  }
  return pred;
}

Dataset filter_covariates(const Dataset& data, const Predicate& predicate) {
  // Resolve each constraint to a column accessor and numeric test.
  struct Resolved {
    int column;  // -2 treatment, -1 outcome, >= 0 covariate index
    double lo, hi;
  };
  std::vector<Resolved> tests;
  for (const auto& c : predicate) {
    Resolved r{};
    if (c.column == data.treatment_name()) {
      r.column = -2;
    } else if (c.column == data.outcome_name()) {
      r.column = -1;
    } else if (auto idx = data.covariate_index(c.column)) {
      r.column = static_cast<int>(*idx);
    } else {
      throw SchemaError("filter: unknown column '" + c.column + "'");
    }
    if (const auto* eq = std::get_if<Equals>(&c.test)) {
      double code;
      const auto enc = data.encodings().find(c.column);
      if (enc != data.encodings().end() && enc->second.count(eq->value)) {
        code = enc->second.at(eq->value);
      } else if (auto v = parse_double(eq->value)) {
        code = *v;
      } else {
        throw SchemaError("filter: '" + eq->value + "' is not a value of column '" +
                          c.column + "'");
      }
      r.lo = r.hi = code;
    } else {
      const auto& range = std::get<Range>(c.test);
      r.lo = range.lo;
      r.hi = range.hi;
    }
    tests.push_back(r);
  }

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < data.n(); ++i) {
    bool ok = true;
    for (const auto& t : tests) {
      const double v = t.column == -2   ? data.x()[i]
                       : t.column == -1 ? data.y()[i]
                                        : data.w(i)[static_cast<std::size_t>(t.column)];
      if (v < t.lo || v > t.hi) {
        ok = false;
        break;
      }
    }
    if (ok) keep.push_back(i);
  }
  return data.subset(keep);
}

YBounds infer_y_bounds(const Dataset& data, double margin_fraction) {
  if (data.empty()) throw InvalidArgument("infer_y_bounds: empty dataset");
  if (margin_fraction < 0.0) throw InvalidArgument("infer_y_bounds: negative margin");
  const auto [lo, hi] = std::minmax_element(data.y().begin(), data.y().end());
  if (*lo == *hi) return {*lo - 1.0, *hi + 1.0};
  const double range = *hi - *lo;
  return {*lo - margin_fraction * range, *hi + margin_fraction * range};
}

}  // namespace hetero
