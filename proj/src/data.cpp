#include "data.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "bytes.hpp"

namespace fs = std::filesystem;

namespace ae2 {

const char* to_string(View v) { return v == View::Ego ? "ego" : "exo"; }
const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    default: return "test";
  }
}

View view_from_string(const std::string& s) {
  if (s == "ego") return View::Ego;
  if (s == "exo") return View::Exo;
  fail(ErrorKind::Data, "unknown view: " + s);
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  fail(ErrorKind::Data, "unknown split: " + s);
}

std::size_t VideoRecord::phase_of(std::size_t frame) const {
  std::size_t phase = 0;
  for (std::size_t e : key_events)
    if (e <= frame) ++phase;
  return phase;
}

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < videos.size(); ++i)
    if (videos[i].split == split) out.push_back(i);
  return out;
}

std::vector<std::size_t> Dataset::indices(Split split, View view) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < videos.size(); ++i)
    if (videos[i].split == split && videos[i].view == view) out.push_back(i);
  return out;
}

void write_feature_file(const std::string& path,
                        const std::vector<FrameFeatures>& frames,
                        std::size_t global_dim, std::size_t max_regions,
                        std::size_t region_dim) {
  std::string out;
  out.append("AE2F");
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(frames.size()));
  put_u32(out, static_cast<std::uint32_t>(global_dim));
  put_u32(out, static_cast<std::uint32_t>(max_regions));
  put_u32(out, static_cast<std::uint32_t>(region_dim));
  for (const FrameFeatures& f : frames) {
    if (f.global.size() != global_dim)
      fail(ErrorKind::Dimension, path + ": frame global dim mismatch");
    if (f.regions.size() > max_regions)
      fail(ErrorKind::Dimension, path + ": more regions than K");
    for (double v : f.global) put_f32(out, static_cast<float>(v));
    for (std::size_t k = 0; k < max_regions; ++k) {
      if (k < f.regions.size()) {
        const RegionToken& r = f.regions[k];
        if (r.feature.size() != region_dim)
          fail(ErrorKind::Dimension, path + ": region feature dim mismatch");
        for (double v : r.box) put_f32(out, static_cast<float>(v));
        put_f32(out, static_cast<float>(r.confidence));
        out.push_back(static_cast<char>(r.identity));
        out.push_back(1);
        for (double v : r.feature) put_f32(out, static_cast<float>(v));
      } else {
        for (int i = 0; i < 5; ++i) put_f32(out, 0.0f);
        out.push_back(0);
        out.push_back(0);
        for (std::size_t i = 0; i < region_dim; ++i) put_f32(out, 0.0f);
      }
    }
  }
  spill(path, out);
}

std::vector<FrameFeatures> read_feature_file(const std::string& path,
                                             FeatureFileHeader* header) {
  ByteReader r(slurp(path), path);
  r.expect_magic("AE2F");
  const std::uint32_t version = r.u32();
  if (version != 1)
    fail(ErrorKind::Data, path + ": unsupported feature file version " +
                              std::to_string(version));
  FeatureFileHeader h;
  h.frames = r.u32();
  h.global_dim = r.u32();
  h.max_regions = r.u32();
  h.region_dim = r.u32();
  std::vector<FrameFeatures> frames(h.frames);
  for (FrameFeatures& f : frames) {
    f.global.resize(h.global_dim);
    for (double& v : f.global) v = r.f32();
    for (std::uint32_t k = 0; k < h.max_regions; ++k) {
      RegionToken tok;
      for (double& v : tok.box) v = r.f32();
      tok.confidence = r.f32();
      const std::uint8_t identity = r.u8();
      const std::uint8_t present = r.u8();
      if (identity >= kIdentityCount)
        fail(ErrorKind::Data, path + ": bad identity code at byte offset " +
                                  std::to_string(r.offset() - 2));
      tok.identity = static_cast<TokenIdentity>(identity);
      tok.feature.resize(h.region_dim);
      for (double& v : tok.feature) v = r.f32();
      if (present) f.regions.push_back(std::move(tok));
    }
  }
  r.expect_end();
  if (header) *header = h;
  return frames;
}

void write_embedding_file(const std::string& path, const Tensor2& embeds) {
  std::string out;
  out.append("AE2E");
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(embeds.rows()));
  put_u32(out, static_cast<std::uint32_t>(embeds.cols()));
  for (double v : embeds.data()) put_f32(out, static_cast<float>(v));
  spill(path, out);
}

Tensor2 read_embedding_file(const std::string& path) {
  ByteReader r(slurp(path), path);
  r.expect_magic("AE2E");
  const std::uint32_t version = r.u32();
  if (version != 1)
    fail(ErrorKind::Data, path + ": unsupported embedding file version " +
                              std::to_string(version));
  const std::uint32_t t = r.u32();
  const std::uint32_t d = r.u32();
  Tensor2 out(t, d);
  for (double& v : out.data()) v = r.f32();
  r.expect_end();
  return out;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ostringstream os;
  for (const ManifestEntry& e : entries) {
    os << "id:" << e.id << " view:" << to_string(e.view)
       << " split:" << to_string(e.split) << " frame_count:" << e.frame_count
       << " feature_file:" << e.feature_file;
    if (!e.key_events.empty()) {
      os << " key_events:";
      for (std::size_t i = 0; i < e.key_events.size(); ++i) {
        if (i) os << ",";
        os << e.key_events[i];
      }
    }
    os << "\n";
  }
  spill(path, os.str());
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Data, "cannot open manifest " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ManifestEntry e;
    bool have_id = false, have_file = false, have_count = false;
    std::istringstream fields(line);
    std::string field;
    while (fields >> field) {
      const std::size_t colon = field.find(':');
      if (colon == std::string::npos)
        fail(ErrorKind::Data, path + ":" + std::to_string(lineno) +
                                  ": field without ':' separator");
      const std::string key = field.substr(0, colon);
      const std::string value = field.substr(colon + 1);
      if (key == "id") {
        e.id = value;
        have_id = true;
      } else if (key == "view") {
        e.view = view_from_string(value);
      } else if (key == "split") {
        e.split = split_from_string(value);
      } else if (key == "frame_count") {
        e.frame_count = std::stoul(value);
        have_count = true;
      } else if (key == "feature_file") {
        e.feature_file = value;
        have_file = true;
      } else if (key == "key_events") {
        std::istringstream nums(value);
        std::string num;
        while (std::getline(nums, num, ','))
          e.key_events.push_back(std::stoul(num));
      } else {
        fail(ErrorKind::Data,
             path + ":" + std::to_string(lineno) + ": unknown field '" + key + "'");
      }
    }
    if (!have_id || !have_file || !have_count)
      fail(ErrorKind::Data, path + ":" + std::to_string(lineno) +
                                ": missing id/frame_count/feature_file");
    for (std::size_t i = 0; i < e.key_events.size(); ++i) {
      if (e.key_events[i] >= e.frame_count ||
          (i > 0 && e.key_events[i] <= e.key_events[i - 1]))
        fail(ErrorKind::Data, path + ":" + std::to_string(lineno) +
                                  ": key_events must be strictly ascending and < T");
    }
    entries.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (std::size_t j = i + 1; j < entries.size(); ++j)
      if (entries[i].id == entries[j].id)
        fail(ErrorKind::Data, path + ": duplicate id '" + entries[i].id + "'");
  return entries;
}

Dataset load_dataset(const std::string& manifest_path) {
  const std::vector<ManifestEntry> entries = read_manifest(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  Dataset ds;
  for (const ManifestEntry& e : entries) {
    VideoRecord v;
    v.id = e.id;
    v.view = e.view;
    v.split = e.split;
    v.key_events = e.key_events;
    FeatureFileHeader h;
    v.frames = read_feature_file((base / e.feature_file).string(), &h);
    if (v.frames.size() != e.frame_count)
      fail(ErrorKind::Data, e.id + ": manifest frame_count " +
                                std::to_string(e.frame_count) + " != file frames " +
                                std::to_string(v.frames.size()));
    if (ds.videos.empty()) {
      ds.global_dim = h.global_dim;
      ds.region_dim = h.region_dim;
      ds.max_regions = h.max_regions;
    } else if (h.global_dim != ds.global_dim || h.region_dim != ds.region_dim) {
      fail(ErrorKind::Data, e.id + ": feature dimensions differ across videos");
    }
    ds.videos.push_back(std::move(v));
  }
  return ds;
}

std::vector<std::size_t> subsample_uniform(std::size_t t, std::size_t n,
                                           std::mt19937_64& rng) {
  if (t == 0) fail(ErrorKind::Degenerate, "subsample_uniform: empty video");
  if (n == 0) fail(ErrorKind::Config, "subsample_uniform: n must be positive");
  std::vector<std::size_t> out;
  out.reserve(n);
  if (t >= n) {
    // Partial Fisher-Yates over 0..t-1.
    std::vector<std::size_t> pool(t);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, t - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    out.assign(pool.begin(), pool.begin() + n);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, t - 1);
    for (std::size_t i = 0; i < n; ++i) out.push_back(pick(rng));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> subsample_weighted(const VideoRecord& video, std::size_t n,
                                            std::mt19937_64& rng) {
  const std::size_t t = video.frames.size();
  if (t == 0) fail(ErrorKind::Degenerate, "subsample_weighted: empty video");
  if (n == 0) fail(ErrorKind::Config, "subsample_weighted: n must be positive");
  std::vector<double> weights(t);
  for (std::size_t i = 0; i < t; ++i) {
    const auto& regions = video.frames[i].regions;
    double mean_conf = 0.0;
    for (const RegionToken& r : regions) mean_conf += r.confidence;
    if (!regions.empty()) mean_conf /= static_cast<double>(regions.size());
    weights[i] = mean_conf + 1e-6;
  }
  std::vector<std::size_t> out;
  out.reserve(n);
  if (t >= n) {
    std::vector<std::size_t> alive(t);
    std::iota(alive.begin(), alive.end(), 0);
    std::vector<double> w = weights;
    for (std::size_t draw = 0; draw < n; ++draw) {
      double total = std::accumulate(w.begin(), w.end(), 0.0);
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      std::size_t chosen = w.size() - 1;
      for (std::size_t i = 0; i < w.size(); ++i) {
        r -= w[i];
        if (r <= 0.0) {
          chosen = i;
          break;
        }
      }
      out.push_back(alive[chosen]);
      alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(chosen));
      w.erase(w.begin() + static_cast<std::ptrdiff_t>(chosen));
    }
  } else {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::uniform_real_distribution<double> u(0.0, total);
    for (std::size_t draw = 0; draw < n; ++draw) {
      double r = u(rng);
      std::size_t chosen = t - 1;
      for (std::size_t i = 0; i < t; ++i) {
        r -= weights[i];
        if (r <= 0.0) {
          chosen = i;
          break;
        }
      }
      out.push_back(chosen);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

PairSample make_pair(const Dataset& dataset, std::mt19937_64& rng,
                     const TrainConfig& cfg) {
  const std::vector<std::size_t> train = dataset.indices(Split::Train);
  if (train.size() < 2)
    fail(ErrorKind::Config, "make_pair: need at least 2 training videos");
  std::uniform_int_distribution<std::size_t> pick_a(0, train.size() - 1);
  const std::size_t a = pick_a(rng);
  std::uniform_int_distribution<std::size_t> pick_b(0, train.size() - 2);
  std::size_t b = pick_b(rng);
  if (b >= a) ++b;
  PairSample pair;
  pair.video_a = train[a];
  pair.video_b = train[b];
  pair.frames_a = subsample_weighted(dataset.videos[pair.video_a],
                                     cfg.frames_per_seq, rng);
  pair.frames_b = subsample_weighted(dataset.videos[pair.video_b],
                                     cfg.frames_per_seq, rng);
  return pair;
}

std::vector<FrameFeatures> gather_frames(const VideoRecord& video,
                                         const std::vector<std::size_t>& indices) {
  std::vector<FrameFeatures> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(video.frames[i]);
  return out;
}

}  // namespace ae2
