#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "config.hpp"
#include "encoder.hpp"
#include "tensor.hpp"

namespace ae2 {

enum class View : std::uint8_t { Ego, Exo };
enum class Split : std::uint8_t { Train, Val, Test };

const char* to_string(View v);
const char* to_string(Split s);
View view_from_string(const std::string& s);
Split split_from_string(const std::string& s);

// One video: frames plus (optional) key-event labels used only downstream.
// Phase of a frame = number of key events at or before that frame.
struct VideoRecord {
  std::string id;
  View view = View::Ego;
  Split split = Split::Train;
  std::vector<FrameFeatures> frames;
  std::vector<std::size_t> key_events;  // strictly ascending, within [0, T)

  bool has_labels() const { return !key_events.empty(); }
  std::size_t phase_count() const { return key_events.size() + 1; }
  std::size_t phase_of(std::size_t frame) const;
};

struct ManifestEntry {
  std::string id;
  View view = View::Ego;
  Split split = Split::Train;
  std::size_t frame_count = 0;
  std::string feature_file;  // relative to the manifest's directory
  std::vector<std::size_t> key_events;
};

struct Dataset {
  std::vector<VideoRecord> videos;
  std::size_t global_dim = 0;
  std::size_t region_dim = 0;
  std::size_t max_regions = 0;

  std::vector<std::size_t> indices(Split split) const;
  std::vector<std::size_t> indices(Split split, View view) const;
};

// ---- file formats (binary, little-endian) ----
//
// Feature file ("AE2F" v1):
//   magic "AE2F", u32 version, u32 T, u32 Dg, u32 K, u32 Dr
//   per frame: Dg * f32 global, then K region slots, each:
//     4 * f32 box, f32 confidence, u8 identity, u8 present, Dr * f32 feature
//   (absent slots: present = 0 and zeroed payload)
//
// Embedding file ("AE2E" v1):
//   magic "AE2E", u32 version, u32 T, u32 d, T*d*f32 row-major

struct FeatureFileHeader {
  std::uint32_t frames = 0;
  std::uint32_t global_dim = 0;
  std::uint32_t max_regions = 0;
  std::uint32_t region_dim = 0;
};

void write_feature_file(const std::string& path,
                        const std::vector<FrameFeatures>& frames,
                        std::size_t global_dim, std::size_t max_regions,
                        std::size_t region_dim);
std::vector<FrameFeatures> read_feature_file(const std::string& path,
                                             FeatureFileHeader* header = nullptr);

void write_embedding_file(const std::string& path, const Tensor2& embeds);
Tensor2 read_embedding_file(const std::string& path);

// Manifest: one record per line, whitespace-separated key:value fields
// {id, view, split, frame_count, feature_file, key_events}.
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

// Loads the manifest and every referenced feature file.
Dataset load_dataset(const std::string& manifest_path);

// ---- frame subsampling ----

// n ascending indices; without replacement when T >= n, with replacement
// otherwise.
std::vector<std::size_t> subsample_uniform(std::size_t t, std::size_t n,
                                           std::mt19937_64& rng);

// Weight per frame = mean region confidence (0 if no regions) + 1e-6;
// successive weighted draws without replacement (with replacement if T < n).
// All-zero confidences therefore reduce to the uniform sampler.
std::vector<std::size_t> subsample_weighted(const VideoRecord& video, std::size_t n,
                                            std::mt19937_64& rng);

struct PairSample {
  std::size_t video_a = 0;
  std::size_t video_b = 0;
  std::vector<std::size_t> frames_a;
  std::vector<std::size_t> frames_b;
};

// Two distinct training videos uniformly at random (ordered; any view
// combination), each weighted-subsampled to cfg.frames_per_seq.
PairSample make_pair(const Dataset& dataset, std::mt19937_64& rng,
                     const TrainConfig& cfg);

std::vector<FrameFeatures> gather_frames(const VideoRecord& video,
                                         const std::vector<std::size_t>& indices);

}  // namespace ae2
