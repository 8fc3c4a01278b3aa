#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "spe/sparse_tensor.hpp"

namespace spe {

/// Fixed numeric output: 9 significant digits, scientific ("%.8e").
std::string format_real(double v);

// PLT v1 pillar tensor text format:
//   PLT v1 <height> <width> <channels> <n_entries>
//   <row> <col> <c0> ... <c(C-1)>        (n_entries lines, sorted by (row, col))
void write_plt(std::ostream& os, const PillarTensor& t);
PillarTensor read_plt(std::istream& is);

void save_plt(const std::filesystem::path& path, const PillarTensor& t);
PillarTensor load_plt(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace spe
