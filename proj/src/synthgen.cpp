#include "synthgen.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rng.hpp"

namespace fs = std::filesystem;

namespace ae2 {

std::vector<std::size_t> key_events_from_phase(const std::vector<double>& p,
                                               std::size_t phases) {
  std::vector<std::size_t> events;
  for (std::size_t j = 1; j < phases; ++j) {
    const double threshold = static_cast<double>(j) / static_cast<double>(phases);
    for (std::size_t t = 0; t < p.size(); ++t) {
      if (p[t] >= threshold) {
        events.push_back(t);
        break;
      }
    }
  }
  return events;
}

namespace {

void validate(const SynthConfig& c) {
  if (c.phases == 0) fail(ErrorKind::Config, "synth: phases must be >= 1");
  if (c.tmin < c.phases + 1)
    fail(ErrorKind::Config, "synth: tmin must be at least phases + 1");
  if (c.tmax < c.tmin) fail(ErrorKind::Config, "synth: tmax < tmin");
  if (c.rho_ego < 0.0 || c.rho_ego > 1.0 || c.rho_exo < 0.0 || c.rho_exo > 1.0)
    fail(ErrorKind::Config, "synth: rho must lie in [0,1]");
  if (c.repeat_prob < 0.0 || c.repeat_prob > 1.0)
    fail(ErrorKind::Config, "synth: repeat_prob must lie in [0,1]");
  if (c.sigma < 0.0) fail(ErrorKind::Config, "synth: sigma must be >= 0");
  if (c.signal_dim == 0 || c.global_dim == 0 || c.region_dim == 0)
    fail(ErrorKind::Config, "synth: dimensions must be positive");
  if (c.k_regions == 0) fail(ErrorKind::Config, "synth: k_regions must be >= 1");
}

Tensor2 gaussian_matrix(std::size_t rows, std::size_t cols, double scale,
                        std::mt19937_64& rng) {
  Tensor2 m(rows, cols);
  std::normal_distribution<double> dist(0.0, scale);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

// Piecewise-linear interpolation of the P+1 anchor vectors at phase p in [0,1].
std::vector<double> signal_at(const Tensor2& anchors, double p) {
  const std::size_t segments = anchors.rows() - 1;
  const double scaled = std::clamp(p, 0.0, 1.0) * static_cast<double>(segments);
  std::size_t seg = std::min(static_cast<std::size_t>(scaled), segments - 1);
  const double frac = scaled - static_cast<double>(seg);
  std::vector<double> out(anchors.cols());
  for (std::size_t j = 0; j < anchors.cols(); ++j)
    out[j] = (1.0 - frac) * anchors(seg, j) + frac * anchors(seg + 1, j);
  return out;
}

std::vector<double> mix(const Tensor2& map, const std::vector<double>& in) {
  std::vector<double> out(map.rows(), 0.0);
  for (std::size_t i = 0; i < map.rows(); ++i)
    for (std::size_t j = 0; j < map.cols(); ++j) out[i] += map(i, j) * in[j];
  return out;
}

bool events_valid(const std::vector<std::size_t>& events, std::size_t phases) {
  if (events.size() != phases - 1) return false;
  for (std::size_t i = 0; i + 1 < events.size(); ++i)
    if (events[i + 1] <= events[i]) return false;
  return events.empty() || events.front() >= 1;
}

struct Latent {
  std::vector<double> p;
  std::vector<std::size_t> events;
  bool repeated = false;
};

// Monotone time warp with a possible in-phase repeated segment. Warps are
// resampled until every phase is nonempty (events strictly ascending).
Latent make_latent(std::size_t t, const SynthConfig& cfg, std::mt19937_64& rng) {
  Latent out;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<double> p(t);
    p.front() = 0.0;
    p.back() = 1.0;
    for (std::size_t i = 1; i + 1 < t; ++i) p[i] = u01(rng);
    std::sort(p.begin() + 1, p.end() - 1);
    std::vector<std::size_t> events = key_events_from_phase(p, cfg.phases);
    if (!events_valid(events, cfg.phases)) continue;
    out.p = std::move(p);
    out.events = std::move(events);
    break;
  }
  if (out.p.empty())
    fail(ErrorKind::Config, "synth: could not build a valid time warp (T too small?)");

  if (u01(rng) < cfg.repeat_prob) {
    // Duplicate a contiguous run inside one phase so the phase labels stay
    // monotone and the key-event representation remains exact.
    std::vector<std::size_t> starts{0};
    for (std::size_t e : out.events) starts.push_back(e);
    starts.push_back(out.p.size());
    std::vector<std::size_t> candidates;
    for (std::size_t q = 0; q + 1 < starts.size(); ++q)
      if (starts[q + 1] - starts[q] >= 4) candidates.push_back(q);
    if (!candidates.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
      const std::size_t q = candidates[pick(rng)];
      const std::size_t len = (starts[q + 1] - starts[q]) / 2;
      std::uniform_int_distribution<std::size_t> place(
          starts[q], starts[q + 1] - len);
      const std::size_t a = place(rng);
      std::vector<double> segment(out.p.begin() + a, out.p.begin() + a + len);
      out.p.insert(out.p.begin() + a + len, segment.begin(), segment.end());
      out.events = key_events_from_phase(out.p, cfg.phases);
      out.repeated = true;
    }
  }
  return out;
}

}  // namespace

GenResult generate(const SynthConfig& cfg, std::uint64_t seed,
                   const std::string& out_dir, bool force) {
  validate(cfg);
  const fs::path root(out_dir);
  const fs::path manifest_path = root / "manifest.txt";
  if (fs::exists(manifest_path) && !force)
    fail(ErrorKind::Config,
         manifest_path.string() + " already exists (use force to overwrite)");
  fs::create_directories(root / "features");

  // Shared structure: class-signal anchors and per-view mixing maps.
  auto shared_rng = make_rng(seed, "synth_shared");
  const Tensor2 anchors =
      gaussian_matrix(cfg.phases + 1, cfg.signal_dim, 1.0, shared_rng);
  const double a_scale = 1.0 / std::sqrt(static_cast<double>(2 * cfg.signal_dim));
  const double b_scale = 1.0 / std::sqrt(static_cast<double>(cfg.signal_dim));
  struct ViewMaps {
    Tensor2 global_mix;      // Dg x 2k over [signal; nuisance]
    Tensor2 region_mix;      // Dr x k over signal
    Tensor2 distractor_mix;  // Dr x k over fresh nuisance
  };
  ViewMaps maps[2];
  for (int v = 0; v < 2; ++v) {
    maps[v].global_mix =
        gaussian_matrix(cfg.global_dim, 2 * cfg.signal_dim, a_scale, shared_rng);
    maps[v].region_mix =
        gaussian_matrix(cfg.region_dim, cfg.signal_dim, b_scale, shared_rng);
    maps[v].distractor_mix =
        gaussian_matrix(cfg.region_dim, cfg.signal_dim, b_scale, shared_rng);
  }

  std::vector<ManifestEntry> entries;
  std::ostringstream report;
  std::size_t total_frames = 0;

  const Split splits[3] = {Split::Train, Split::Val, Split::Test};
  const std::size_t counts[3] = {cfg.train_videos, cfg.val_videos, cfg.test_videos};
  const std::size_t informative = std::min<std::size_t>(2, cfg.k_regions);

  for (int vi = 0; vi < 2; ++vi) {
    const View view = vi == 0 ? View::Ego : View::Exo;
    const double rho = vi == 0 ? cfg.rho_ego : cfg.rho_exo;
    const ViewMaps& vm = maps[vi];
    for (int si = 0; si < 3; ++si) {
      for (std::size_t n = 0; n < counts[si]; ++n) {
        std::ostringstream id;
        id << to_string(view) << "_" << to_string(splits[si]) << "_";
        id.fill('0');
        id.width(3);
        id << n;
        auto rng = make_rng(seed, "synth_video_" + id.str());

        std::uniform_int_distribution<std::size_t> tlen(cfg.tmin, cfg.tmax);
        const std::size_t t0 = tlen(rng);
        const Latent latent = make_latent(t0, cfg, rng);
        const std::size_t t = latent.p.size();

        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> conf_hi(0.7, 1.0);
        std::uniform_real_distribution<double> conf_lo(0.0, 0.3);
        std::uniform_real_distribution<double> pos(0.0, 0.6);
        std::uniform_real_distribution<double> extent(0.1, 0.4);
        std::uniform_int_distribution<std::size_t> ident(1, kIdentityCount - 1);

        std::vector<FrameFeatures> frames(t);
        for (std::size_t f = 0; f < t; ++f) {
          const std::vector<double> s = signal_at(anchors, latent.p[f]);
          std::vector<double> mixed_in(2 * cfg.signal_dim);
          for (std::size_t j = 0; j < cfg.signal_dim; ++j) {
            mixed_in[j] = (1.0 - rho) * s[j];
            mixed_in[cfg.signal_dim + j] = gauss(rng);  // nuisance
          }
          FrameFeatures& ff = frames[f];
          ff.global = mix(vm.global_mix, mixed_in);
          for (double& g : ff.global) g += cfg.sigma * gauss(rng);

          std::vector<double> region_sig(cfg.signal_dim);
          for (std::size_t j = 0; j < cfg.signal_dim; ++j) region_sig[j] = rho * s[j];

          const std::size_t distractors =
              cfg.k_regions > informative
                  ? std::uniform_int_distribution<std::size_t>(
                        0, cfg.k_regions - informative)(rng)
                  : 0;
          for (std::size_t r = 0; r < informative + distractors; ++r) {
            RegionToken tok;
            const double x1 = pos(rng), y1 = pos(rng);
            tok.box = {x1, y1, std::min(1.0, x1 + extent(rng)),
                       std::min(1.0, y1 + extent(rng))};
            if (r < informative) {
              tok.identity = r == 0 ? TokenIdentity::LeftHand : TokenIdentity::Object;
              tok.confidence = conf_hi(rng);
              tok.feature = mix(vm.region_mix, region_sig);
            } else {
              tok.identity = static_cast<TokenIdentity>(ident(rng));
              tok.confidence = conf_lo(rng);
              std::vector<double> noise_sig(cfg.signal_dim);
              for (double& v : noise_sig) v = gauss(rng);
              tok.feature = mix(vm.distractor_mix, noise_sig);
            }
            for (double& v : tok.feature) v += cfg.sigma * gauss(rng);
            ff.regions.push_back(std::move(tok));
          }
        }

        const std::string rel = "features/" + id.str() + ".ae2f";
        write_feature_file((root / rel).string(), frames, cfg.global_dim,
                           cfg.k_regions, cfg.region_dim);
        ManifestEntry e;
        e.id = id.str();
        e.view = view;
        e.split = splits[si];
        e.frame_count = t;
        e.feature_file = rel;
        e.key_events = latent.events;
        entries.push_back(std::move(e));
        total_frames += t;

        report << "video id=" << id.str() << " view=" << to_string(view)
               << " split=" << to_string(splits[si]) << " frames=" << t
               << " repeated=" << (latent.repeated ? 1 : 0) << " events=";
        for (std::size_t i = 0; i < latent.events.size(); ++i) {
          if (i) report << ",";
          report << latent.events[i];
        }
        report << "\n";
      }
    }
  }

  write_manifest(manifest_path.string(), entries);
  GenResult res;
  res.manifest_path = manifest_path.string();
  res.report_path = (root / "report.txt").string();
  res.videos = entries.size();
  res.frames = total_frames;

  std::ofstream rep(res.report_path, std::ios::trunc);
  if (!rep) fail(ErrorKind::Data, "cannot write " + res.report_path);
  rep << "generator=ae2-synth seed=" << seed << "\n"
      << "videos=" << res.videos << " frames=" << res.frames << "\n"
      << "per_view_per_split train=" << cfg.train_videos << " val=" << cfg.val_videos
      << " test=" << cfg.test_videos << "\n"
      << report.str();
  return res;
}

}  // namespace ae2
