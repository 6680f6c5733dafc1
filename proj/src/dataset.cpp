#include "drcate/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "drcate/csv.hpp"
#include "drcate/errors.hpp"

namespace drcate {
namespace {

Matrix prepend_intercept(const Matrix& modifiers, Index n) {
  if (modifiers.size() > 0 && modifiers.rows() != n) {
    throw SchemaError("modifier matrix has " + std::to_string(modifiers.rows()) +
                      " rows, expected " + std::to_string(n));
  }
  Matrix v(n, modifiers.cols() + 1);
  v.col(0).setOnes();
  if (modifiers.cols() > 0) v.rightCols(modifiers.cols()) = modifiers;
  return v;
}

std::vector<std::string> default_names(const std::string& stem, Index count) {
  std::vector<std::string> names;
  for (Index j = 0; j < count; ++j) names.push_back(stem + std::to_string(j + 1));
  return names;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

Dataset::Dataset(Vector y, Vector t, Matrix x, const Matrix& modifiers, ColumnNames names)
    : y_(std::move(y)), t_(std::move(t)), x_(std::move(x)), names_(std::move(names)) {
  v_ = prepend_intercept(modifiers, y_.size());
  if (names_.modifiers.empty()) {
    names_.modifiers = default_names("v", modifiers.cols());
  }
  if (static_cast<Index>(names_.modifiers.size()) == modifiers.cols()) {
    names_.modifiers.insert(names_.modifiers.begin(), kInterceptName);
  }
  validate();
}

Dataset::Dataset(FullModifiers, Vector y, Vector t, Matrix x, Matrix v, ColumnNames names)
    : y_(std::move(y)), t_(std::move(t)), x_(std::move(x)), v_(std::move(v)), names_(std::move(names)) {
  validate();
}

void Dataset::validate() {
  const Index n = y_.size();
  if (n == 0) throw SchemaError("dataset has no rows");
  if (t_.size() != n || x_.rows() != n || v_.rows() != n) {
    throw SchemaError("outcome, treatment, confounder and modifier row counts differ");
  }
  if (names_.confounders.empty()) names_.confounders = default_names("x", x_.cols());
  if (static_cast<Index>(names_.confounders.size()) != x_.cols() ||
      static_cast<Index>(names_.modifiers.size()) != v_.cols()) {
    throw SchemaError("column name count does not match matrix width");
  }
  if (!y_.allFinite() || !all_finite(x_) || !all_finite(v_)) {
    throw DomainError("dataset contains non-finite values");
  }
  treated_ = 0;
  for (Index i = 0; i < n; ++i) {
    if (t_[i] == 1.0) {
      ++treated_;
    } else if (t_[i] != 0.0) {
      throw DomainError("treatment value " + csv::format_double(t_[i]) + " at row " +
                        std::to_string(i + 1) + " is not 0 or 1");
    }
  }
  if (treated_ == 0 || treated_ == n) {
    throw DomainError("both treatment arms must be non-empty");
  }
  if ((v_.col(0).array() != 1.0).any()) {
    throw DomainError("first modifier column must be the all-ones intercept");
  }
  if (n < v_.cols()) {
    throw DomainError("modifier matrix has more columns (" + std::to_string(v_.cols()) +
                      ") than rows (" + std::to_string(n) + ")");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(v_);
  qr.setThreshold(1e-10);
  if (qr.rank() < v_.cols()) {
    throw DomainError("modifier matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                      " < " + std::to_string(v_.cols()) + "); check for duplicated or constant modifiers");
  }
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  const auto m = static_cast<Index>(rows.size());
  Vector y(m), t(m);
  Matrix x(m, x_.cols()), v(m, v_.cols());
  for (Index r = 0; r < m; ++r) {
    const Index i = rows[static_cast<std::size_t>(r)];
    y[r] = y_[i];
    t[r] = t_[i];
    x.row(r) = x_.row(i);
    v.row(r) = v_.row(i);
  }
  return Dataset(FullModifiers{}, std::move(y), std::move(t), std::move(x), std::move(v), names_);
}

Dataset Dataset::with_confounders(Matrix x) const {
  return Dataset(FullModifiers{}, y_, t_, std::move(x), v_, names_);
}

Dataset Dataset::with_modifiers(const Matrix& modifiers, std::vector<std::string> names) const {
  ColumnNames cn = names_;
  cn.modifiers = std::move(names);
  return Dataset(y_, t_, x_, modifiers, std::move(cn));
}

Vector dichotomize(const Matrix& exposures) {
  const Index n = exposures.rows();
  const Index k = exposures.cols();
  if (k < 1) throw DomainError("dichotomize needs at least one exposure column");
  if (n < 1) throw DomainError("dichotomize needs at least one row");
  Vector means(k);
  for (Index j = 0; j < k; ++j) {
    const auto col = exposures.col(j);
    if (col.maxCoeff() == col.minCoeff()) {
      throw DomainError("exposure column " + std::to_string(j + 1) +
                        " is constant; mean threshold is degenerate");
    }
    means[j] = col.mean();
  }
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    Index above = 0;
    for (Index j = 0; j < k; ++j) {
      if (exposures(i, j) > means[j]) ++above;
    }
    out[i] = (2 * above > k) ? 1.0 : 0.0;
  }
  return out;
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  if (schema.outcome.empty()) throw SchemaError("schema: outcome column not set");
  if (schema.treatment.empty()) throw SchemaError("schema: treatment column not set");
  const auto table = csv::read_table(path);
  const auto n = table.rows.size();

  auto read_columns = [&](const std::vector<std::string>& names) {
    Matrix m(static_cast<Index>(n), static_cast<Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
      std::size_t c;
      try {
        c = table.column_index(names[j]);
      } catch (const SchemaError&) {
        throw SchemaError("'" + path.string() + "': missing column '" + names[j] + "'");
      }
      for (std::size_t r = 0; r < n; ++r) {
        m(static_cast<Index>(r), static_cast<Index>(j)) =
            csv::parse_double(table.rows[r][c], r + 1, names[j]);
      }
    }
    return m;
  };

  Vector y = read_columns({schema.outcome}).col(0);
  Matrix exposures = read_columns(schema.treatment);
  Matrix x = read_columns(schema.confounders);
  Matrix mods = read_columns(schema.modifiers);

  Vector t;
  const bool binary = exposures.cols() == 1 &&
                      ((exposures.array() == 0.0) || (exposures.array() == 1.0)).all();
  if (binary) {
    t = exposures.col(0);
  } else if (exposures.cols() > 1 || schema.dichotomize) {
    t = dichotomize(exposures);
  } else {
    throw DomainError("'" + path.string() + "': treatment column '" + schema.treatment.front() +
                      "' is not binary and no dichotomization was requested");
  }

  ColumnNames names;
  names.outcome = schema.outcome;
  names.treatment = schema.treatment.size() == 1 ? schema.treatment.front() : "treated";
  names.confounders = schema.confounders;
  names.modifiers = schema.modifiers;
  return Dataset(std::move(y), std::move(t), std::move(x), mods, std::move(names));
}

Schema schema_for(const Dataset& data) {
  const auto& nm = data.names();
  Schema s;
  s.outcome = nm.outcome;
  s.treatment = {nm.treatment};
  s.confounders = nm.confounders;
  s.modifiers.assign(nm.modifiers.begin() + 1, nm.modifiers.end());
  return s;
}

void write_csv(std::ostream& out, const Dataset& data) {
  const auto& nm = data.names();
  std::vector<std::string> header{nm.outcome, nm.treatment};
  header.insert(header.end(), nm.confounders.begin(), nm.confounders.end());
  std::vector<Index> extra;
  for (Index j = 1; j < data.q(); ++j) {
    const auto& name = nm.modifiers[static_cast<std::size_t>(j)];
    if (std::find(nm.confounders.begin(), nm.confounders.end(), name) == nm.confounders.end()) {
      header.push_back(name);
      extra.push_back(j);
    }
  }
  csv::write_row(out, header);
  std::vector<std::string> fields;
  for (Index i = 0; i < data.n(); ++i) {
    fields.clear();
    fields.push_back(csv::format_double(data.y()[i]));
    fields.push_back(csv::format_double(data.t()[i]));
    for (Index j = 0; j < data.p(); ++j) fields.push_back(csv::format_double(data.x()(i, j)));
    for (Index j : extra) fields.push_back(csv::format_double(data.v()(i, j)));
    csv::write_row(out, fields);
  }
}

Matrix StandardizationRecord::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) throw SchemaError("standardization width mismatch");
  return (x.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
}

Matrix StandardizationRecord::invert(const Matrix& z) const {
  if (z.cols() != mean.size()) throw SchemaError("standardization width mismatch");
  return (z.array().rowwise() * sd.transpose().array()).matrix().rowwise() + mean.transpose();
}

std::pair<Dataset, StandardizationRecord> standardize(const Dataset& data, bool include_outcome) {
  StandardizationRecord rec;
  rec.columns = data.names().confounders;
  const Index p = data.p();
  const double n = static_cast<double>(data.n());
  rec.mean.resize(p);
  rec.sd.resize(p);
  for (Index j = 0; j < p; ++j) {
    const auto col = data.x().col(j);
    const double m = col.mean();
    const double sd = std::sqrt((col.array() - m).square().sum() / n);
    if (!(sd > 0.0)) {
      throw DomainError("confounder column '" + rec.columns[static_cast<std::size_t>(j)] +
                        "' has zero standard deviation");
    }
    rec.mean[j] = m;
    rec.sd[j] = sd;
  }
  Dataset out = data.with_confounders(rec.apply(data.x()));
  if (include_outcome) {
    const double m = data.y().mean();
    const double sd = std::sqrt((data.y().array() - m).square().sum() / n);
    if (!(sd > 0.0)) throw DomainError("outcome has zero standard deviation");
    rec.outcome = {m, sd};
    Vector y = (data.y().array() - m) / sd;
    Dataset scaled(y, data.t(), out.x(), data.v().rightCols(data.q() - 1), data.names());
    return {std::move(scaled), std::move(rec)};
  }
  return {std::move(out), std::move(rec)};
}

}  // namespace drcate
