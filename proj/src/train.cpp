#include "train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>

#include "bytes.hpp"
#include "objective.hpp"
#include "rng.hpp"

namespace fs = std::filesystem;

namespace ae2 {

void write_checkpoint(const std::string& path, const Config& cfg,
                      std::size_t global_dim, std::size_t region_dim,
                      const std::vector<double>& params) {
  std::string out;
  out.append("AE2C");
  put_u32(out, 1);
  const std::string echo = cfg.serialize();
  put_u32(out, static_cast<std::uint32_t>(echo.size()));
  out.append(echo);
  put_u32(out, static_cast<std::uint32_t>(global_dim));
  put_u32(out, static_cast<std::uint32_t>(region_dim));
  put_u64(out, params.size());
  for (double v : params) put_f64(out, v);
  spill(path, out);
}

Checkpoint read_checkpoint(const std::string& path) {
  ByteReader r(slurp(path), path);
  r.expect_magic("AE2C");
  const std::uint32_t version = r.u32();
  if (version != 1)
    fail(ErrorKind::Data, path + ": unsupported checkpoint version " +
                              std::to_string(version));
  Checkpoint ckpt;
  const std::uint32_t config_len = r.u32();
  ckpt.config = Config::load_string(r.take(config_len));
  ckpt.global_dim = r.u32();
  ckpt.region_dim = r.u32();
  const std::uint64_t n = r.u64();
  ckpt.params.resize(n);
  for (double& v : ckpt.params) v = r.f64();
  r.expect_end();
  return ckpt;
}

EncoderConfig encoder_config(const TrainConfig& train, std::size_t global_dim,
                             std::size_t region_dim) {
  EncoderConfig ec;
  ec.global_dim = global_dim;
  ec.region_dim = region_dim;
  ec.hidden_dim = train.hidden_dim;
  ec.layers = train.layers;
  ec.heads = train.heads;
  ec.embed_dim = train.embed_dim;
  ec.max_regions = train.k_regions;
  ec.global_only = train.global_only;
  return ec;
}

Encoder encoder_from_checkpoint(const Checkpoint& ckpt) {
  Encoder enc(encoder_config(ckpt.config.train, ckpt.global_dim, ckpt.region_dim),
              ckpt.config.train.seed);
  if (enc.params().param_count() != ckpt.params.size())
    fail(ErrorKind::Data, "checkpoint/config mismatch: parameter vector has " +
                              std::to_string(ckpt.params.size()) + " entries, model needs " +
                              std::to_string(enc.params().param_count()));
  enc.params().assign_flat(ckpt.params);
  return enc;
}

namespace {

struct FixedPair {
  std::size_t video_a, video_b;
  std::vector<std::size_t> frames_a, frames_b;
};

// The selection metric must compare like against like across epochs, so the
// validation pairs and their frame subsamples are frozen up front.
std::vector<FixedPair> fixed_pairs(const Dataset& ds, const TrainConfig& cfg,
                                   Split split, std::uint64_t seed) {
  const std::vector<std::size_t> vids = ds.indices(split);
  std::vector<FixedPair> out;
  if (vids.size() < 2) return out;
  auto rng = make_rng(seed, "fixed_pairs");
  for (std::size_t n = 0; n < vids.size(); ++n) {
    std::uniform_int_distribution<std::size_t> pick_a(0, vids.size() - 1);
    const std::size_t a = pick_a(rng);
    std::uniform_int_distribution<std::size_t> pick_b(0, vids.size() - 2);
    std::size_t b = pick_b(rng);
    if (b >= a) ++b;
    FixedPair p;
    p.video_a = vids[a];
    p.video_b = vids[b];
    p.frames_a = subsample_weighted(ds.videos[p.video_a], cfg.frames_per_seq, rng);
    p.frames_b = subsample_weighted(ds.videos[p.video_b], cfg.frames_per_seq, rng);
    out.push_back(std::move(p));
  }
  return out;
}

double validation_loss(const Encoder& enc, const Dataset& ds,
                       const std::vector<FixedPair>& pairs, const TrainConfig& cfg) {
  double total = 0.0;
  for (const FixedPair& p : pairs) {
    const Tensor2 x = enc.encode_video(gather_frames(ds.videos[p.video_a], p.frames_a));
    const Tensor2 y = enc.encode_video(gather_frames(ds.videos[p.video_b], p.frames_b));
    // FullReverse keeps the metric deterministic regardless of training mode.
    auto rng = make_rng(cfg.seed, "val_negative");
    const TotalLossResult r = total_loss(x, y, cfg.beta, cfg.gamma, cfg.lambda,
                                         NegativeMode::FullReverse, rng);
    total += r.parts.total;
  }
  return total / static_cast<double>(pairs.size());
}

std::vector<VideoEmbeds> embed_videos(const Encoder& enc, const Dataset& ds,
                                      const std::vector<std::size_t>& indices) {
  std::vector<VideoEmbeds> out;
  for (std::size_t i : indices) {
    const VideoRecord& v = ds.videos[i];
    VideoEmbeds e;
    e.id = v.id;
    e.view = v.view;
    e.split = v.split;
    e.key_events = v.key_events;
    e.embeds = enc.encode_video(v.frames);
    out.push_back(std::move(e));
  }
  return out;
}

double validation_f1(const Encoder& enc, const Dataset& ds, const Config& cfg) {
  const std::vector<VideoEmbeds> train = embed_videos(enc, ds, ds.indices(Split::Train));
  const std::vector<VideoEmbeds> val = embed_videos(enc, ds, ds.indices(Split::Val));
  if (val.empty()) fail(ErrorKind::Eval, "val_f1 selection: no validation videos");
  return phase_classification(train, val, cfg.eval);
}

}  // namespace

TrainResult train_model(const Dataset& dataset, const Config& cfg,
                        const std::string& checkpoint_path,
                        const std::string& log_path,
                        const std::string& init_checkpoint) {
  const TrainConfig& tc = cfg.train;
  if (tc.frames_per_seq < 2)
    fail(ErrorKind::Config, "train: frames_per_seq must be at least 2");
  if (tc.batch_pairs == 0) fail(ErrorKind::Config, "train: batch_pairs must be >= 1");
  const std::vector<std::size_t> train_vids = dataset.indices(Split::Train);
  if (train_vids.size() < 2)
    fail(ErrorKind::Config, "train: need at least 2 training videos");
  for (std::size_t i : train_vids)
    if (dataset.videos[i].frames.empty())
      fail(ErrorKind::Data, "train: video " + dataset.videos[i].id + " has no frames");

  Encoder enc(encoder_config(tc, dataset.global_dim, dataset.region_dim), tc.seed);
  if (!init_checkpoint.empty()) {
    const Checkpoint init = read_checkpoint(init_checkpoint);
    if (init.params.size() != enc.params().param_count())
      fail(ErrorKind::Data, "init checkpoint does not match the configured model");
    enc.params().assign_flat(init.params);
  }
  AdamState adam(enc.params(), {tc.lr, tc.wd});

  const bool select_by_f1 = tc.checkpoint_selection == "val_f1";
  std::vector<FixedPair> val_pairs;
  if (!select_by_f1) {
    val_pairs = fixed_pairs(dataset, tc, Split::Val, tc.seed);
    if (val_pairs.empty())  // no usable validation split: fall back to train
      val_pairs = fixed_pairs(dataset, tc, Split::Train, tc.seed);
  }

  auto pair_rng = make_rng(tc.seed, "train_pairs");
  std::ostringstream log;
  log << "# ae2 training log\n";
  log << "# params=" << enc.params().param_count() << "\n";

  TrainResult result;
  double best = select_by_f1 ? -std::numeric_limits<double>::infinity()
                             : std::numeric_limits<double>::infinity();
  std::vector<double> best_params = enc.params().flatten();
  std::size_t best_epoch = 0;

  const std::size_t draws_per_epoch = train_vids.size();
  const std::size_t pos_frames = tc.effective_pos_frames();
  const bool separate_pos = pos_frames != tc.frames_per_seq;

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    EpochStats stats;
    std::size_t done = 0;
    while (done < draws_per_epoch) {
      const std::size_t batch = std::min(tc.batch_pairs, draws_per_epoch - done);
      const double inv_batch = 1.0 / static_cast<double>(batch);
      for (std::size_t b = 0; b < batch; ++b) {
        const PairSample pair = make_pair(dataset, pair_rng, tc);
        const VideoRecord& va = dataset.videos[pair.video_a];
        const VideoRecord& vb = dataset.videos[pair.video_b];
        Encoder::Cache cache_a, cache_b;
        const std::vector<FrameFeatures> fa = gather_frames(va, pair.frames_a);
        const std::vector<FrameFeatures> fb = gather_frames(vb, pair.frames_b);
        const Tensor2 x = enc.encode_video(fa, &cache_a);
        const Tensor2 y = enc.encode_video(fb, &cache_b);

        double align_part = 0.0, reg_part = 0.0, total_part = 0.0;
        if (!separate_pos) {
          const TotalLossResult r = total_loss(x, y, tc.beta, tc.gamma, tc.lambda,
                                               tc.negative_mode, pair_rng);
          align_part = r.parts.align;
          reg_part = r.parts.reg;
          total_part = r.parts.total;
          if (!std::isfinite(total_part))
            fail(ErrorKind::Numeric, "non-finite loss at epoch " +
                                         std::to_string(epoch) + " step " +
                                         std::to_string(done / tc.batch_pairs) +
                                         " pair " + va.id + "/" + vb.id);
          Tensor2 dx = r.dx;
          dx *= inv_batch;
          Tensor2 dy = r.dy;
          dy *= inv_batch;
          enc.backward(fa, cache_a, dx);
          enc.backward(fb, cache_b, dy);
        } else {
          // The regularizer's positive pair is re-sampled at pos_frames.
          const AlignGradients ag = align_loss(x, y, tc.beta, tc.gamma);
          const std::vector<std::size_t> pa = subsample_weighted(va, pos_frames, pair_rng);
          const std::vector<std::size_t> pb = subsample_weighted(vb, pos_frames, pair_rng);
          Encoder::Cache cache_pa, cache_pb;
          const std::vector<FrameFeatures> fpa = gather_frames(va, pa);
          const std::vector<FrameFeatures> fpb = gather_frames(vb, pb);
          const Tensor2 xp = enc.encode_video(fpa, &cache_pa);
          const Tensor2 yp = enc.encode_video(fpb, &cache_pb);
          const RegLossResult rg = reg_loss(xp, yp, tc.beta, tc.gamma,
                                            tc.negative_mode, pair_rng);
          align_part = ag.loss;
          reg_part = rg.loss;
          total_part = ag.loss + tc.lambda * rg.loss;
          if (!std::isfinite(total_part))
            fail(ErrorKind::Numeric, "non-finite loss at epoch " +
                                         std::to_string(epoch) + " step " +
                                         std::to_string(done / tc.batch_pairs) +
                                         " pair " + va.id + "/" + vb.id);
          Tensor2 dx = ag.dx;
          dx *= inv_batch;
          Tensor2 dy = ag.dy;
          dy *= inv_batch;
          enc.backward(fa, cache_a, dx);
          enc.backward(fb, cache_b, dy);
          Tensor2 dxp = rg.dx;
          dxp *= tc.lambda * inv_batch;
          Tensor2 dyp = rg.dy;
          dyp *= tc.lambda * inv_batch;
          enc.backward(fpa, cache_pa, dxp);
          enc.backward(fpb, cache_pb, dyp);
        }
        stats.align += align_part;
        stats.reg += reg_part;
        stats.total += total_part;
      }
      adam.step(enc.params());
      done += batch;
    }
    stats.align /= static_cast<double>(draws_per_epoch);
    stats.reg /= static_cast<double>(draws_per_epoch);
    stats.total /= static_cast<double>(draws_per_epoch);

    const bool evaluate = tc.val_every > 0 &&
                          (epoch % tc.val_every == 0 || epoch + 1 == tc.epochs);
    if (evaluate) {
      stats.has_val = true;
      if (select_by_f1) {
        stats.val_metric = validation_f1(enc, dataset, cfg);
        if (stats.val_metric > best) {
          best = stats.val_metric;
          best_params = enc.params().flatten();
          best_epoch = epoch;
        }
      } else {
        stats.val_metric = validation_loss(enc, dataset, val_pairs, tc);
        if (stats.val_metric < best) {
          best = stats.val_metric;
          best_params = enc.params().flatten();
          best_epoch = epoch;
        }
      }
    }

    char line[256];
    if (stats.has_val)
      std::snprintf(line, sizeof(line),
                    "epoch=%zu align=%.6f reg=%.6f total=%.6f val=%.6f\n", epoch,
                    stats.align, stats.reg, stats.total, stats.val_metric);
    else
      std::snprintf(line, sizeof(line), "epoch=%zu align=%.6f reg=%.6f total=%.6f\n",
                    epoch, stats.align, stats.reg, stats.total);
    log << line;
    if (tc.verbose) std::fputs(line, stderr);
    result.epochs.push_back(stats);
  }

  log << "best_epoch=" << best_epoch << "\n";
  result.best_epoch = best_epoch;
  result.best_metric = best;

  write_checkpoint(checkpoint_path, cfg, dataset.global_dim, dataset.region_dim,
                   best_params);
  if (!log_path.empty()) spill(log_path, log.str());
  return result;
}

void embed_split(const Dataset& dataset, const Checkpoint& ckpt,
                 const std::string& split, const std::string& out_dir) {
  if (dataset.global_dim != ckpt.global_dim || dataset.region_dim != ckpt.region_dim)
    fail(ErrorKind::Data, "checkpoint feature dimensions do not match the dataset");
  const Encoder enc = encoder_from_checkpoint(ckpt);
  fs::create_directories(out_dir);
  for (const VideoRecord& v : dataset.videos) {
    if (split != "all" && split_from_string(split) != v.split) continue;
    if (v.frames.empty()) continue;
    const Tensor2 e = enc.encode_video(v.frames);
    write_embedding_file((fs::path(out_dir) / (v.id + ".ae2e")).string(), e);
  }
}

std::vector<VideoEmbeds> load_embeddings(const Dataset& dataset,
                                         const std::string& embed_dir, Split split) {
  std::vector<VideoEmbeds> out;
  for (const VideoRecord& v : dataset.videos) {
    if (v.split != split) continue;
    VideoEmbeds e;
    e.id = v.id;
    e.view = v.view;
    e.split = v.split;
    e.key_events = v.key_events;
    e.embeds = read_embedding_file((fs::path(embed_dir) / (v.id + ".ae2e")).string());
    if (e.embeds.rows() != v.frames.size())
      fail(ErrorKind::Data, v.id + ": embedding rows do not match frame count");
    out.push_back(std::move(e));
  }
  return out;
}

MetricsReport evaluate_embeddings(const Dataset& dataset, const std::string& embed_dir,
                                  const Config& cfg, const std::string& report_path,
                                  const std::string& csv_path) {
  const std::vector<VideoEmbeds> train = load_embeddings(dataset, embed_dir, Split::Train);
  const std::vector<VideoEmbeds> test = load_embeddings(dataset, embed_dir, Split::Test);
  if (train.empty() || test.empty())
    fail(ErrorKind::Data, "evaluate: need embedded train and test splits");
  const MetricsReport r = evaluate_all(train, test, cfg.eval, cfg.train.seed);
  if (!report_path.empty()) spill(report_path, format_report(r));
  if (!csv_path.empty()) spill(csv_path, format_csv(r));
  return r;
}

AlignOutput align_files(const std::string& embed_a, const std::string& embed_b,
                        double beta, double gamma, const std::string& csv_path,
                        const std::string& map_path) {
  const Tensor2 a = read_embedding_file(embed_a);
  const Tensor2 b = read_embedding_file(embed_b);
  const CostMatrix cm = cost_matrix(a, b, beta);
  const AlignmentResult soft = dtw_forward(cm, gamma);
  const HardPath hard = hard_dtw(cm);
  const SyncMap sm = sync_map(a, b);

  std::ostringstream csv;
  char buf[64];
  for (std::size_t i = 0; i < cm.M(); ++i)
    for (std::size_t j = 0; j < cm.N(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", cm.c(i, j));
      csv << "cost," << i + 1 << "," << j + 1 << "," << buf << "\n";
    }
  for (std::size_t s = 0; s < hard.path.size(); ++s)
    csv << "path," << hard.path[s].first << "," << hard.path[s].second << ","
        << s + 1 << "\n";
  if (!csv_path.empty()) spill(csv_path, csv.str());

  std::ostringstream mapcsv;
  mapcsv << "ref_index,target_index\n";
  for (std::size_t i = 0; i < sm.map.size(); ++i)
    mapcsv << i << "," << sm.map[i] << "\n";
  if (!map_path.empty()) spill(map_path, mapcsv.str());

  AlignOutput out;
  out.hard_cost = hard.cost;
  out.soft_loss = soft.loss;
  out.path_length = hard.path.size();
  long long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < sm.map.size(); ++i)
    for (std::size_t j = i + 1; j < sm.map.size(); ++j) {
      if (sm.map[i] < sm.map[j]) ++concordant;
      else if (sm.map[i] > sm.map[j]) ++discordant;
    }
  const std::size_t n = sm.map.size();
  out.map_tau = n < 2 ? 0.0
                      : static_cast<double>(concordant - discordant) /
                            (static_cast<double>(n) * (n - 1) / 2.0);
  return out;
}

}  // namespace ae2
