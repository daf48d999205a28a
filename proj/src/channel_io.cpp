#include "sosest/channel_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <sstream>

#include "sosest/error.hpp"
#include "sosest/textio.hpp"

namespace sosest {

namespace {

template <typename T>
void put_le(std::string& buf, T value) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

constexpr std::size_t kHeaderSize = 4 + 2 + 2 + 4 + 4 + 8 + 8;

}  // namespace

std::string frame_file_name(int tx_element) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%03d.sosc", tx_element);
  return buf;
}

void write_channel_frame(const std::filesystem::path& path, const ChannelFrame& frame) {
  std::string buf;
  buf.reserve(kHeaderSize + frame.samples.size() * 4);
  buf.append("SOSC", 4);
  put_le<std::uint16_t>(buf, kChannelFormatVersion);
  put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(frame.tx_element));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(frame.num_rx()));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(frame.num_samples()));
  put_le<double>(buf, frame.fs);
  put_le<double>(buf, frame.t0);
  for (long r = 0; r < frame.samples.rows(); ++r)
    for (long k = 0; k < frame.samples.cols(); ++k) put_le<float>(buf, frame.samples(r, k));
  auto os = open_output(path, true);
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw ConfigError("failed writing " + path.string());
}

ChannelFrame read_channel_frame(const std::filesystem::path& path) {
  auto is = open_input(path, true);
  std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (data.size() < kHeaderSize || data.compare(0, 4, "SOSC") != 0) {
    throw ConfigError(path.string() + ": not a SOSC channel frame");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  const auto version = get_le<std::uint16_t>(p + 4);
  if (version != kChannelFormatVersion) {
    throw ConfigError(path.string() + ": unsupported SOSC version " + std::to_string(version));
  }
  ChannelFrame frame;
  frame.tx_element = get_le<std::uint16_t>(p + 6);
  const auto num_rx = get_le<std::uint32_t>(p + 8);
  const auto num_samples = get_le<std::uint32_t>(p + 12);
  frame.fs = get_le<double>(p + 16);
  frame.t0 = get_le<double>(p + 24);
  const std::size_t expected = kHeaderSize + std::size_t{num_rx} * num_samples * 4;
  if (data.size() != expected) throw ConfigError(path.string() + ": truncated SOSC payload");
  frame.samples.resize(num_rx, num_samples);
  const unsigned char* q = p + kHeaderSize;
  for (std::uint32_t r = 0; r < num_rx; ++r)
    for (std::uint32_t k = 0; k < num_samples; ++k, q += 4) frame.samples(r, k) = get_le<float>(q);
  return frame;
}

void write_manifest(const std::filesystem::path& dir, const ChannelManifest& m) {
  auto os = open_output(dir / "manifest.txt");
  os << "# sosest channel data manifest\n";
  os << "format SOSC " << kChannelFormatVersion << '\n';
  os << "background_sos " << fmt_double(m.medium.background_sos) << '\n';
  os << "medium_grid " << grid_to_string(m.medium.grid) << '\n';
  for (const auto& inc : m.medium.inclusions) {
    os << "inclusion " << to_string(inc.shape) << ' ' << fmt_double(inc.center.x) << ' '
       << fmt_double(inc.center.z) << ' ' << fmt_double(inc.half_x) << ' '
       << fmt_double(inc.half_z) << ' ' << fmt_double(inc.sos) << '\n';
  }
  os << "scatterers " << m.num_scatterers << " density " << fmt_double(m.scatterer_density)
     << " seed " << m.scatterer_seed << '\n';
  for (const auto& [tx, name] : m.frames) os << "frame " << tx << ' ' << name << '\n';
}

ChannelManifest read_manifest(const std::filesystem::path& dir) {
  auto is = open_input(dir / "manifest.txt");
  ChannelManifest m;
  std::string line;
  while (std::getline(is, line)) {
    auto tok = split_ws(line);
    if (tok.empty() || tok[0].starts_with('#')) continue;
    const auto& key = tok[0];
    if (key == "format") {
      if (tok.size() < 3 || tok[1] != "SOSC") throw ConfigError("manifest: unknown format");
    } else if (key == "background_sos" && tok.size() == 2) {
      m.medium.background_sos = parse_double(tok[1]);
    } else if (key == "medium_grid") {
      m.medium.grid = grid_from_tokens(tok, 1);
    } else if (key == "inclusion" && tok.size() == 7) {
      Inclusion inc;
      inc.shape = parse_inclusion_shape(tok[1]);
      inc.center = {parse_double(tok[2]), parse_double(tok[3])};
      inc.half_x = parse_double(tok[4]);
      inc.half_z = parse_double(tok[5]);
      inc.sos = parse_double(tok[6]);
      m.medium.inclusions.push_back(inc);
    } else if (key == "scatterers" && tok.size() == 6) {
      m.num_scatterers = static_cast<std::size_t>(parse_long(tok[1]));
      m.scatterer_density = parse_double(tok[3]);
      m.scatterer_seed = static_cast<std::uint64_t>(std::stoull(tok[5]));
    } else if (key == "frame" && tok.size() == 3) {
      m.frames[static_cast<int>(parse_long(tok[1]))] = tok[2];
    } else {
      throw ConfigError("manifest: unrecognized line '" + line + "'");
    }
  }
  return m;
}

ChannelSet::ChannelSet(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!std::filesystem::is_directory(dir_)) {
    throw MissingInputError("channel data directory " + dir_.string() + " does not exist");
  }
  manifest_ = read_manifest(dir_);
}

const ChannelFrame& ChannelSet::frame(int tx) {
  if (auto it = frames_.find(tx); it != frames_.end()) return it->second;
  auto it = manifest_.frames.find(tx);
  if (it == manifest_.frames.end()) {
    throw MissingInputError("no channel frame for transmit element " + std::to_string(tx));
  }
  auto frame = read_channel_frame(dir_ / it->second);
  return frames_.emplace(tx, std::move(frame)).first->second;
}

void write_channel_set(const std::filesystem::path& dir, const ChannelManifest& manifest,
                       const std::vector<ChannelFrame>& frames) {
  ChannelManifest m = manifest;
  for (const auto& f : frames) {
    const auto name = frame_file_name(f.tx_element);
    write_channel_frame(dir / name, f);
    m.frames[f.tx_element] = name;
  }
  write_manifest(dir, m);
  write_grid_csv(dir / "ground_truth_sos.csv", rasterize_sos(m.medium, m.medium.grid));
}

}  // namespace sosest
