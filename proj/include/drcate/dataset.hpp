#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drcate/types.hpp"

namespace drcate {

inline constexpr const char* kInterceptName = "(Intercept)";

struct ColumnNames {
  std::string outcome = "y";
  std::string treatment = "t";
  std::vector<std::string> confounders;
  // Includes the intercept as the first entry.
  std::vector<std::string> modifiers;
};

// Observed units D_i = [y_i, t_i, x_i, v_i]. The modifier matrix always
// carries an all-ones first column and has full column rank. Immutable.
class Dataset {
 public:
  // `modifiers` excludes the intercept; it is prepended here. Empty name
  // lists are filled with x1..xp / v1..vq.
  Dataset(Vector y, Vector t, Matrix x, const Matrix& modifiers, ColumnNames names = {});

  Index n() const noexcept { return y_.size(); }
  Index p() const noexcept { return x_.cols(); }
  Index q() const noexcept { return v_.cols(); }

  const Vector& y() const noexcept { return y_; }
  const Vector& t() const noexcept { return t_; }
  const Matrix& x() const noexcept { return x_; }
  const Matrix& v() const noexcept { return v_; }
  const ColumnNames& names() const noexcept { return names_; }

  Index treated_count() const noexcept { return treated_; }

  Dataset subset(std::span<const Index> rows) const;
  Dataset with_confounders(Matrix x) const;
  // Replaces the effect modifiers (intercept prepended as usual).
  Dataset with_modifiers(const Matrix& modifiers, std::vector<std::string> names) const;

 private:
  struct FullModifiers {};
  Dataset(FullModifiers, Vector y, Vector t, Matrix x, Matrix v, ColumnNames names);
  void validate();

  Vector y_;
  Vector t_;
  Matrix x_;
  Matrix v_;
  ColumnNames names_;
  Index treated_ = 0;
};

// Column selection for CSV ingestion. More than one treatment column, or a
// single non-binary column with `dichotomize` set, triggers dichotomize().
struct Schema {
  std::string outcome;
  std::vector<std::string> treatment;
  std::vector<std::string> confounders;
  std::vector<std::string> modifiers;
  bool dichotomize = false;
};

Dataset load_csv(const std::filesystem::path& path, const Schema& schema);

// Writes y, t, the confounders and any modifier not already a confounder.
void write_csv(std::ostream& out, const Dataset& data);

// Schema that reloads a file produced by write_csv.
Schema schema_for(const Dataset& data);

// Unit i is treated iff strictly more than k/2 of its k exposures are
// strictly above their column means.
Vector dichotomize(const Matrix& exposures);

struct StandardizationRecord {
  std::vector<std::string> columns;
  Vector mean;
  Vector sd;  // population SD, strictly positive
  std::optional<std::pair<double, double>> outcome;  // (mean, sd) when y was scaled

  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& z) const;
};

std::pair<Dataset, StandardizationRecord> standardize(const Dataset& data,
                                                      bool include_outcome = false);

}  // namespace drcate
