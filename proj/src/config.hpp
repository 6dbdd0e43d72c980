#pragma once

#include <cstdint>
#include <string>

#include "objective.hpp"

namespace ae2 {

// Every training hyperparameter, all overridable through the flat
// key=value config file or CLI --set flags.
struct TrainConfig {
  double beta = 0.1;    // softmax temperature of the cost matrix
  double gamma = 0.1;   // smooth-min temperature
  double lambda = 1.0;  // regularizer weight
  double lr = 1e-3;
  double wd = 1e-5;
  std::size_t epochs = 300;
  std::size_t batch_pairs = 4;
  std::size_t frames_per_seq = 32;
  std::size_t pos_frames = 0;  // 0 = same as frames_per_seq
  std::size_t hidden_dim = 128;
  std::size_t layers = 1;
  std::size_t heads = 2;
  std::size_t k_regions = 4;
  std::size_t embed_dim = 128;
  NegativeMode negative_mode = NegativeMode::FullReverse;
  std::uint64_t seed = 1;
  std::string checkpoint_selection = "loss";  // loss | val_f1
  std::size_t val_every = 1;
  bool global_only = false;
  bool verbose = true;

  std::size_t effective_pos_frames() const {
    return pos_frames == 0 ? frames_per_seq : pos_frames;
  }
};

// Synthetic dataset generator knobs.
struct SynthConfig {
  std::size_t train_videos = 40;  // per view
  std::size_t val_videos = 8;
  std::size_t test_videos = 12;
  std::size_t tmin = 24;
  std::size_t tmax = 48;
  std::size_t phases = 3;
  std::size_t signal_dim = 4;
  std::size_t global_dim = 16;
  std::size_t region_dim = 8;
  std::size_t k_regions = 4;
  double sigma = 0.1;
  double rho_ego = 0.5;  // fraction of action signal routed to region tokens
  double rho_exo = 0.9;
  double repeat_prob = 0.25;
};

// Downstream-evaluation knobs (solver settings are frozen design choices;
// exposed only so tests can tighten them).
struct EvalConfig {
  double svm_l2 = 1e-3;
  std::size_t svm_epochs = 200;
  double svm_lr = 0.1;
  double svm_tol = 1e-8;
  double ridge = 1e-6;
  std::size_t few_shot_repeats = 10;
};

struct Config {
  TrainConfig train;
  SynthConfig synth;
  EvalConfig eval;

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  // key=value lines in a fixed order; parseable by load_string.
  std::string serialize() const;

  static Config load_file(const std::string& path);
  static Config load_string(const std::string& text);
};

}  // namespace ae2
