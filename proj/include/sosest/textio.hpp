#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "sosest/geometry.hpp"

namespace sosest {

/// Shortest decimal representation that round-trips exactly.
std::string fmt_double(double v);

std::vector<std::string> split_ws(std::string_view line);
std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view s);
double parse_double(const std::string& s);
long parse_long(const std::string& s);

/// Opens for writing, creating parent directories; throws ConfigError on failure.
std::ofstream open_output(const std::filesystem::path& path, bool binary = false);
std::ifstream open_input(const std::filesystem::path& path, bool binary = false);

/// Writes a 2-D array as CSV (one grid row per line).
void write_grid_csv(const std::filesystem::path& path, const ImageD& values);
ImageD read_grid_csv(const std::filesystem::path& path);

/// Flat little-endian f32 grid plus "<path>.txt" sidecar with the grid spec and extra lines.
void write_grid_binary(const std::filesystem::path& path, const ImageD& values,
                       const ImagingGrid& grid, const std::vector<std::string>& extra);

/// 8-bit binary PGM with values mapped linearly from [lo, hi] to [0, 255].
void write_pgm(const std::filesystem::path& path, const ImageD& values, double lo, double hi);

std::string grid_to_string(const ImagingGrid& g);
ImagingGrid grid_from_tokens(const std::vector<std::string>& tokens, std::size_t first);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);

}  // namespace sosest
