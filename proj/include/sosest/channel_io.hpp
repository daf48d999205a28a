#pragma once

// On-disk channel data: one little-endian "SOSC" binary per frame plus a
// plain-text manifest describing the frames and the medium that produced them.
//
// Frame header (32 bytes):
//   char[4] magic "SOSC" | u16 version | u16 tx_element | u32 num_rx |
//   u32 num_samples | f64 fs | f64 t0
// followed by num_rx * num_samples f32 samples, row-major (rx-major).

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sosest/synthsim.hpp"

namespace sosest {

inline constexpr std::uint16_t kChannelFormatVersion = 1;

void write_channel_frame(const std::filesystem::path& path, const ChannelFrame& frame);
ChannelFrame read_channel_frame(const std::filesystem::path& path);

std::string frame_file_name(int tx_element);

struct ChannelManifest {
  MediumSpec medium;
  std::uint64_t scatterer_seed = 0;
  double scatterer_density = 0.0;
  std::size_t num_scatterers = 0;
  std::map<int, std::string> frames;  // tx element -> file name
};

void write_manifest(const std::filesystem::path& dir, const ChannelManifest& manifest);
ChannelManifest read_manifest(const std::filesystem::path& dir);

/// Frames of a channel-data directory, loaded on demand.
class ChannelSet {
 public:
  ChannelSet() = default;
  explicit ChannelSet(std::filesystem::path dir);

  const ChannelManifest& manifest() const { return manifest_; }
  bool has(int tx) const { return frames_.count(tx) > 0 || manifest_.frames.count(tx) > 0; }
  const ChannelFrame& frame(int tx);
  void insert(ChannelFrame frame) { frames_[frame.tx_element] = std::move(frame); }
  void set_manifest(ChannelManifest m) { manifest_ = std::move(m); }

 private:
  std::filesystem::path dir_;
  ChannelManifest manifest_;
  std::map<int, ChannelFrame> frames_;
};

/// Writes the frames, manifest, and ground-truth SoS raster (CSV) into dir.
void write_channel_set(const std::filesystem::path& dir, const ChannelManifest& manifest,
                       const std::vector<ChannelFrame>& frames);

}  // namespace sosest
