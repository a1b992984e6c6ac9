#pragma once

#include <filesystem>
#include <string>

#include "ccfm/num_core.hpp"

namespace ccfm {

/// Plain-text matrix: one row per line, whitespace-delimited reals.
/// Blank lines and lines starting with '#' are skipped.
Mat load_matrix(const std::filesystem::path& path);
Mat parse_matrix(const std::string& text);

/// Writes with `digits` significant digits (17 round-trips a double).
void save_matrix(const std::filesystem::path& path, const Mat& rows, int digits = 17);
std::string format_matrix(const Mat& rows, int digits = 17);

}  // namespace ccfm
