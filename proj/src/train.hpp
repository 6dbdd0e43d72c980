#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "data.hpp"
#include "encoder.hpp"
#include "eval.hpp"

namespace ae2 {

// Checkpoint ("AE2C" v1): magic, u32 version, u32 config_len, config echo
// (key=value text), u32 Dg, u32 Dr, u64 n_params, n * f64 little-endian flat
// parameter vector in registration order.
struct Checkpoint {
  Config config;
  std::size_t global_dim = 0;
  std::size_t region_dim = 0;
  std::vector<double> params;
};

void write_checkpoint(const std::string& path, const Config& cfg,
                      std::size_t global_dim, std::size_t region_dim,
                      const std::vector<double>& params);
Checkpoint read_checkpoint(const std::string& path);

EncoderConfig encoder_config(const TrainConfig& train, std::size_t global_dim,
                             std::size_t region_dim);

// Restores the encoder a checkpoint describes (shape comes from the echoed
// config; the parameter count is validated against it).
Encoder encoder_from_checkpoint(const Checkpoint& ckpt);

struct EpochStats {
  double align = 0.0;
  double reg = 0.0;
  double total = 0.0;
  double val_metric = 0.0;
  bool has_val = false;
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_metric = 0.0;
};

// Full training loop: weighted pair sampling, soft-DTW + hinge objective,
// Adam, per-epoch logging and best-checkpoint selection. `init_checkpoint`
// (optional) warm-starts the parameters; the optimizer state starts fresh.
TrainResult train_model(const Dataset& dataset, const Config& cfg,
                        const std::string& checkpoint_path,
                        const std::string& log_path,
                        const std::string& init_checkpoint = "");

// Writes <out_dir>/<id>.ae2e for every video in `split` ("train", "val",
// "test" or "all").
void embed_split(const Dataset& dataset, const Checkpoint& ckpt,
                 const std::string& split, const std::string& out_dir);

std::vector<VideoEmbeds> load_embeddings(const Dataset& dataset,
                                         const std::string& embed_dir, Split split);

// Loads train+test embeddings, runs the full metric suite and writes the
// key=value report plus the benchmark-table CSV.
MetricsReport evaluate_embeddings(const Dataset& dataset, const std::string& embed_dir,
                                  const Config& cfg, const std::string& report_path,
                                  const std::string& csv_path);

struct AlignOutput {
  double hard_cost = 0.0;
  double soft_loss = 0.0;
  std::size_t path_length = 0;
  double map_tau = 0.0;  // Kendall tau of the sync-map sequence
};

// Aligns two embedding files: writes the cost matrix + hard path as CSV
// (rows "cost,i,j,value" then "path,i,j,step") and the sync map as CSV
// (ref_index,target_index).
AlignOutput align_files(const std::string& embed_a, const std::string& embed_b,
                        double beta, double gamma, const std::string& csv_path,
                        const std::string& map_path);

}  // namespace ae2
