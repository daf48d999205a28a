#include "sosest/textio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <sstream>

#include "sosest/error.hpp"

namespace sosest {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream is{std::string(line)};
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(trim(text.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto t = trim(s);
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
  return v;
}

long parse_long(const std::string& s) {
  long v = 0;
  const auto t = trim(s);
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError("expected an integer, got '" + s + "'");
  }
  return v;
}

std::ofstream open_output(const std::filesystem::path& path, bool binary) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw ConfigError("cannot write " + path.string());
  return os;
}

std::ifstream open_input(const std::filesystem::path& path, bool binary) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) throw MissingInputError("cannot read " + path.string());
  return is;
}

void write_grid_csv(const std::filesystem::path& path, const ImageD& values) {
  auto os = open_output(path);
  for (long r = 0; r < values.rows(); ++r) {
    for (long c = 0; c < values.cols(); ++c) {
      if (c) os << ',';
      os << fmt_double(values(r, c));
    }
    os << '\n';
  }
}

ImageD read_grid_csv(const std::filesystem::path& path) {
  auto is = open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& tok : split(line, ',')) row.push_back(parse_double(tok));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError("ragged CSV grid in " + path.string());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return {};
  ImageD out(static_cast<long>(rows.size()), static_cast<long>(rows.front().size()));
  for (long r = 0; r < out.rows(); ++r)
    for (long c = 0; c < out.cols(); ++c) out(r, c) = rows[r][c];
  return out;
}

void write_grid_binary(const std::filesystem::path& path, const ImageD& values,
                       const ImagingGrid& grid, const std::vector<std::string>& extra) {
  static_assert(std::endian::native == std::endian::little, "f32 export assumes little-endian");
  auto os = open_output(path, true);
  for (long r = 0; r < values.rows(); ++r)
    for (long c = 0; c < values.cols(); ++c) {
      const float f = static_cast<float>(values(r, c));
      os.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
  auto side = open_output(path.string() + ".txt");
  side << "format f32le row-major [nz x nx]\n";
  side << "grid " << grid_to_string(grid) << '\n';
  for (const auto& line : extra) side << line << '\n';
}

std::string grid_to_string(const ImagingGrid& g) {
  return fmt_double(g.x0) + ' ' + fmt_double(g.z0) + ' ' + fmt_double(g.dx) + ' ' +
         fmt_double(g.dz) + ' ' + std::to_string(g.nx) + ' ' + std::to_string(g.nz);
}

ImagingGrid grid_from_tokens(const std::vector<std::string>& tokens, std::size_t first) {
  if (tokens.size() < first + 6) throw ConfigError("grid spec needs 6 values");
  ImagingGrid g;
  g.x0 = parse_double(tokens[first]);
  g.z0 = parse_double(tokens[first + 1]);
  g.dx = parse_double(tokens[first + 2]);
  g.dz = parse_double(tokens[first + 3]);
  g.nx = static_cast<int>(parse_long(tokens[first + 4]));
  g.nz = static_cast<int>(parse_long(tokens[first + 5]));
  return g;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace sosest

namespace sosest {

void write_pgm(const std::filesystem::path& path, const ImageD& values, double lo, double hi) {
  if (!(hi > lo)) throw ArgumentError("image display range must be increasing");
  auto os = open_output(path, true);
  os << "P5\n" << values.cols() << ' ' << values.rows() << "\n255\n";
  for (long r = 0; r < values.rows(); ++r)
    for (long c = 0; c < values.cols(); ++c) {
      const double u = std::clamp((values(r, c) - lo) / (hi - lo), 0.0, 1.0);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(u * 255.0))));
    }
}

}  // namespace sosest
