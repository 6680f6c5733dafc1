#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "drcate/dataset.hpp"
#include "drcate/rng.hpp"
#include "drcate/types.hpp"

namespace testutil {

inline std::filesystem::path tmp_path(const std::string& name) {
  std::filesystem::path dir(DRCATE_TEST_TMP);
  std::filesystem::create_directories(dir);
  return dir / name;
}

inline std::filesystem::path write_file(const std::string& name, const std::string& text) {
  auto path = tmp_path(name);
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

inline drcate::Matrix normal_matrix(drcate::Index rows, drcate::Index cols, drcate::Rng& rng) {
  drcate::Matrix m(rows, cols);
  for (drcate::Index i = 0; i < rows; ++i)
    for (drcate::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// Random dataset with p standard-normal confounders, the first q of which are modifiers.
inline drcate::Dataset random_dataset(drcate::Index n, drcate::Index p, drcate::Index q,
                                      std::uint64_t seed) {
  drcate::Rng rng(seed);
  drcate::Matrix x = normal_matrix(n, p, rng);
  drcate::Vector t(n), y(n);
  for (drcate::Index i = 0; i < n; ++i) t[i] = i % 2 == 0 ? 1.0 : 0.0;
  for (drcate::Index i = 0; i < n; ++i) y[i] = x(i, 0) + 0.5 * t[i] + rng.normal();
  return drcate::Dataset(y, t, x, x.leftCols(q));
}

}  // namespace testutil
