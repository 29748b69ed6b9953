#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "ebn/error.hpp"
#include "ebn/types.hpp"

namespace ebn::csv {

// Numbers are written in shortest round-trip form, so identical values give
// identical bytes and re-parsing recovers the exact double.
inline std::string number(double x) { return fmt::format("{}", x); }

inline std::ofstream open(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(fmt::format("cannot open '{}' for writing", path.string()));
  return out;
}

// Plain matrix, one row per line, no header.
inline void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  auto out = open(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << number(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace ebn::csv
