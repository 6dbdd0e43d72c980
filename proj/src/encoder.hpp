#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ops.hpp"
#include "params.hpp"
#include "tensor.hpp"

namespace ae2 {

// Identity codes for region tokens. 0 is reserved for the global token.
enum class TokenIdentity : std::uint8_t {
  Global = 0,
  LeftHand = 1,
  RightHand = 2,
  Object = 3,
};
constexpr std::size_t kIdentityCount = 4;

struct RegionToken {
  std::array<double, 4> box{};  // x1, y1, x2, y2 in [0,1]
  double confidence = 0.0;
  TokenIdentity identity = TokenIdentity::Object;
  std::vector<double> feature;  // dim Dr
};

// Per-frame input: one global feature vector plus up to K region tokens.
// This is the detector/backbone hand-off point; raw pixels never enter.
struct FrameFeatures {
  std::vector<double> global;  // dim Dg
  std::vector<RegionToken> regions;
};

struct EncoderConfig {
  std::size_t global_dim = 16;   // Dg
  std::size_t region_dim = 8;    // Dr
  std::size_t hidden_dim = 128;  // dh
  std::size_t layers = 1;
  std::size_t heads = 2;
  std::size_t embed_dim = 128;
  std::size_t max_regions = 4;  // K
  bool global_only = false;     // ablation: strip region tokens
};

// Object-centric token-fusion encoder: project global + region features to
// hidden tokens, add spatial/identity embeddings, fuse with a post-norm
// transformer encoder, mean-pool and project to the output embedding.
// Strictly per-frame: no information crosses frame boundaries.
class Encoder {
 public:
  struct FrameCache;
  struct Cache {
    std::vector<FrameCache> frames;
  };

  Encoder(EncoderConfig cfg, std::uint64_t seed);

  const EncoderConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  std::vector<double> encode_frame(const FrameFeatures& f) const;
  Tensor2 encode_video(const std::vector<FrameFeatures>& frames,
                       Cache* cache = nullptr) const;

  // Exact reverse-mode gradients for every parameter block, accumulated into
  // the store. `cache` must come from encode_video on the same frames.
  void backward(const std::vector<FrameFeatures>& frames, const Cache& cache,
                const Tensor2& upstream);

 private:
  struct LayerIdx {
    std::size_t wq, bq, wk, wv, bv, wo, bo;
    std::size_t ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b;
  };

  EncoderConfig cfg_;
  ParamStore params_;
  std::size_t proj_g_w_, proj_g_b_, proj_l_w_, proj_l_b_, spatial_w_, identity_;
  std::vector<LayerIdx> layer_idx_;
  std::size_t head_w_, head_b_;

  Tensor2 build_tokens(const FrameFeatures& f) const;
  Tensor2 forward_tokens(const Tensor2& tokens, FrameCache* cache) const;
};

struct AttentionCache {
  Tensor2 q, k, v;               // n x dh
  std::vector<Tensor2> weights;  // per head, n x n softmax rows
  Tensor2 concat;                // n x dh attention output before Wo
};

struct LayerCache {
  Tensor2 input;  // tokens entering the layer
  AttentionCache attn;
  ops::LayerNormCache ln1;
  Tensor2 u;  // LN1 output, FFN input
  Tensor2 ffn_pre;
  ops::LayerNormCache ln2;
};

struct Encoder::FrameCache {
  Tensor2 tokens;  // initial token matrix
  std::vector<LayerCache> layers;
  Tensor2 out_tokens;
  Tensor2 pooled;  // 1 x dh
};

}  // namespace ae2
