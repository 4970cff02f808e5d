#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "attnlab/linalg.hpp"

namespace attnlab {

/// Delimited matrix text format: one row per line, comma-separated values,
/// '#' comment lines allowed before and between rows, no header. Dimensions
/// are inferred.
Matrix read_matrix(std::istream& in, const std::string& name = "<stream>");
Matrix read_matrix_file(const std::filesystem::path& path);

void write_matrix(std::ostream& out, const Matrix& m);
void write_matrix_file(const std::filesystem::path& path, const Matrix& m);

}  // namespace attnlab
