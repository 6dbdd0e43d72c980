#pragma once

#include <cstdint>
#include <string>

#include "config.hpp"
#include "data.hpp"

namespace ae2 {

struct GenResult {
  std::string manifest_path;
  std::string report_path;
  std::size_t videos = 0;
  std::size_t frames = 0;
};

// Key event j (1-based) = first frame whose latent phase reaches j / phases.
std::vector<std::size_t> key_events_from_phase(const std::vector<double>& p,
                                               std::size_t phases);

// Deterministic synthetic ego/exo dataset with ground-truth key events.
// Each video observes a shared piecewise-linear class signal through a
// per-video monotone time warp; per-view mixing maps route a rho-controlled
// fraction of that signal into region tokens versus the global feature, so
// the view gap and the value of object tokens are real and testable.
// Refuses to overwrite an existing manifest unless `force` is set.
GenResult generate(const SynthConfig& cfg, std::uint64_t seed,
                   const std::string& out_dir, bool force);

}  // namespace ae2
