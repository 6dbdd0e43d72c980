#include "encoder.hpp"

#include <cmath>
#include <string>

#include "rng.hpp"

namespace ae2 {

namespace {

void glorot_init(Tensor2& w, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  std::uniform_real_distribution<double> dist(-a, a);
  for (double& v : w.data()) v = dist(rng);
}

// Uniform with standard deviation 0.02, used for the spatial/identity
// embedding tables.
void embed_init(Tensor2& w, std::mt19937_64& rng) {
  const double a = 0.02 * std::sqrt(3.0);
  std::uniform_real_distribution<double> dist(-a, a);
  for (double& v : w.data()) v = dist(rng);
}

Tensor2 head_slice(const Tensor2& x, std::size_t h, std::size_t dk) {
  Tensor2 out(x.rows(), dk);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < dk; ++j) out(i, j) = x(i, h * dk + j);
  return out;
}

void head_slice_add(Tensor2& x, const Tensor2& part, std::size_t h, std::size_t dk) {
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < dk; ++j) x(i, h * dk + j) += part(i, j);
}

}  // namespace

Encoder::Encoder(EncoderConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg_.hidden_dim == 0 || cfg_.heads == 0 || cfg_.layers == 0)
    fail(ErrorKind::Config, "encoder: hidden_dim, heads and layers must be positive");
  if (cfg_.hidden_dim % cfg_.heads != 0)
    fail(ErrorKind::Config, "encoder: hidden_dim must be divisible by heads");
  const std::size_t dh = cfg_.hidden_dim;
  proj_g_w_ = params_.add_block("project_g.weight", cfg_.global_dim, dh);
  proj_g_b_ = params_.add_block("project_g.bias", 1, dh);
  proj_l_w_ = params_.add_block("project_l.weight", cfg_.region_dim, dh);
  proj_l_b_ = params_.add_block("project_l.bias", 1, dh);
  spatial_w_ = params_.add_block("spatial.weight", 5, dh);
  identity_ = params_.add_block("identity.embed", kIdentityCount, dh);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerIdx idx;
    idx.wq = params_.add_block(p + "attn.wq", dh, dh);
    idx.bq = params_.add_block(p + "attn.bq", 1, dh);
    // No key bias: the row softmax is invariant to it, so it would be a
    // structurally gradient-free parameter.
    idx.wk = params_.add_block(p + "attn.wk", dh, dh);
    idx.wv = params_.add_block(p + "attn.wv", dh, dh);
    idx.bv = params_.add_block(p + "attn.bv", 1, dh);
    idx.wo = params_.add_block(p + "attn.wo", dh, dh);
    idx.bo = params_.add_block(p + "attn.bo", 1, dh);
    idx.ln1_g = params_.add_block(p + "ln1.gain", 1, dh);
    idx.ln1_b = params_.add_block(p + "ln1.bias", 1, dh);
    idx.w1 = params_.add_block(p + "ffn.w1", dh, 4 * dh);
    idx.b1 = params_.add_block(p + "ffn.b1", 1, 4 * dh);
    idx.w2 = params_.add_block(p + "ffn.w2", 4 * dh, dh);
    idx.b2 = params_.add_block(p + "ffn.b2", 1, dh);
    idx.ln2_g = params_.add_block(p + "ln2.gain", 1, dh);
    idx.ln2_b = params_.add_block(p + "ln2.bias", 1, dh);
    layer_idx_.push_back(idx);
  }
  head_w_ = params_.add_block("head.weight", dh, cfg_.embed_dim);
  head_b_ = params_.add_block("head.bias", 1, cfg_.embed_dim);

  // One sequential stream over blocks in registration order keeps the whole
  // initialization a pure function of the seed.
  auto rng = make_rng(seed, "encoder_init");
  const auto is_bias = [](const std::string& name) {
    for (const char* suffix : {".bias", ".bq", ".bk", ".bv", ".bo", ".b1", ".b2"})
      if (name.ends_with(suffix)) return true;
    return false;
  };
  for (std::size_t b = 0; b < params_.block_count(); ++b) {
    const std::string& name = params_.name(b);
    Tensor2& w = params_.value(b);
    if (name == "spatial.weight" || name == "identity.embed") {
      embed_init(w, rng);
    } else if (name.ends_with(".gain")) {
      w.fill(1.0);
    } else if (is_bias(name)) {
      w.zero();
    } else {
      glorot_init(w, rng);
    }
  }
}

Tensor2 Encoder::build_tokens(const FrameFeatures& f) const {
  if (f.global.size() != cfg_.global_dim)
    fail(ErrorKind::Dimension, "encode_frame: global feature dim mismatch");
  const std::size_t dh = cfg_.hidden_dim;
  const std::size_t n_regions =
      cfg_.global_only ? 0 : std::min(f.regions.size(), cfg_.max_regions);
  Tensor2 tokens(1 + n_regions, dh);

  const Tensor2& wg = params_.value(proj_g_w_);
  const Tensor2& bg = params_.value(proj_g_b_);
  const Tensor2& id = params_.value(identity_);
  for (std::size_t j = 0; j < dh; ++j) {
    double acc = bg(0, j) + id(0, j);
    for (std::size_t k = 0; k < cfg_.global_dim; ++k)
      acc += f.global[k] * wg(k, j);
    tokens(0, j) = acc;
  }

  const Tensor2& wl = params_.value(proj_l_w_);
  const Tensor2& bl = params_.value(proj_l_b_);
  const Tensor2& sp = params_.value(spatial_w_);
  for (std::size_t r = 0; r < n_regions; ++r) {
    const RegionToken& tok = f.regions[r];
    if (tok.feature.size() != cfg_.region_dim)
      fail(ErrorKind::Dimension, "encode_frame: region feature dim mismatch");
    const std::size_t code = static_cast<std::size_t>(tok.identity);
    const double svec[5] = {tok.box[0], tok.box[1], tok.box[2], tok.box[3],
                            tok.confidence};
    for (std::size_t j = 0; j < dh; ++j) {
      double acc = bl(0, j) + id(code, j);
      for (std::size_t k = 0; k < cfg_.region_dim; ++k)
        acc += tok.feature[k] * wl(k, j);
      for (std::size_t k = 0; k < 5; ++k) acc += svec[k] * sp(k, j);
      tokens(1 + r, j) = acc;
    }
  }
  return tokens;
}

Tensor2 Encoder::forward_tokens(const Tensor2& tokens, FrameCache* cache) const {
  const std::size_t dh = cfg_.hidden_dim;
  const std::size_t dk = dh / cfg_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Tensor2 z = tokens;
  if (cache) {
    cache->tokens = tokens;
    cache->layers.resize(cfg_.layers);
  }
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const LayerIdx& ix = layer_idx_[l];
    LayerCache* lc = cache ? &cache->layers[l] : nullptr;
    if (lc) lc->input = z;

    Tensor2 q = ops::add_row_bias(ops::matmul(z, params_.value(ix.wq)),
                                  params_.value(ix.bq));
    Tensor2 k = ops::matmul(z, params_.value(ix.wk));
    Tensor2 v = ops::add_row_bias(ops::matmul(z, params_.value(ix.wv)),
                                  params_.value(ix.bv));
    Tensor2 concat(z.rows(), dh);
    std::vector<Tensor2> weights;
    weights.reserve(cfg_.heads);
    for (std::size_t h = 0; h < cfg_.heads; ++h) {
      Tensor2 qh = head_slice(q, h, dk);
      Tensor2 kh = head_slice(k, h, dk);
      Tensor2 vh = head_slice(v, h, dk);
      Tensor2 scores = ops::matmul(qh, ops::transpose(kh));
      scores *= scale;
      Tensor2 attn = ops::row_softmax(scores);
      Tensor2 oh = ops::matmul(attn, vh);
      head_slice_add(concat, oh, h, dk);
      weights.push_back(std::move(attn));
    }
    Tensor2 attn_out = ops::add_row_bias(ops::matmul(concat, params_.value(ix.wo)),
                                         params_.value(ix.bo));
    if (lc) {
      lc->attn.q = std::move(q);
      lc->attn.k = std::move(k);
      lc->attn.v = std::move(v);
      lc->attn.weights = std::move(weights);
      lc->attn.concat = concat;
    }

    Tensor2 res1 = z;
    res1 += attn_out;
    Tensor2 u = ops::layer_norm(res1, params_.value(ix.ln1_g), params_.value(ix.ln1_b),
                                lc ? &lc->ln1 : nullptr);
    if (lc) lc->u = u;

    Tensor2 pre = ops::add_row_bias(ops::matmul(u, params_.value(ix.w1)),
                                    params_.value(ix.b1));
    if (lc) lc->ffn_pre = pre;
    Tensor2 act = ops::relu(pre);
    Tensor2 ffn = ops::add_row_bias(ops::matmul(act, params_.value(ix.w2)),
                                    params_.value(ix.b2));
    Tensor2 res2 = u;
    res2 += ffn;
    z = ops::layer_norm(res2, params_.value(ix.ln2_g), params_.value(ix.ln2_b),
                        lc ? &lc->ln2 : nullptr);
  }
  if (cache) cache->out_tokens = z;

  Tensor2 pooled = ops::mean_rows(z);
  if (cache) cache->pooled = pooled;
  Tensor2 out = ops::add_row_bias(ops::matmul(pooled, params_.value(head_w_)),
                                  params_.value(head_b_));
  return out;
}

std::vector<double> Encoder::encode_frame(const FrameFeatures& f) const {
  const Tensor2 out = forward_tokens(build_tokens(f), nullptr);
  return out.data();
}

Tensor2 Encoder::encode_video(const std::vector<FrameFeatures>& frames,
                              Cache* cache) const {
  if (frames.empty()) fail(ErrorKind::Degenerate, "encode_video: empty frame list");
  Tensor2 out(frames.size(), cfg_.embed_dim);
  if (cache) cache->frames.resize(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const Tensor2 row = forward_tokens(build_tokens(frames[t]),
                                       cache ? &cache->frames[t] : nullptr);
    std::copy(row.data().begin(), row.data().end(), out.row(t));
  }
  if (!out.all_finite()) fail(ErrorKind::Numeric, "encode_video: non-finite output");
  return out;
}

void Encoder::backward(const std::vector<FrameFeatures>& frames, const Cache& cache,
                       const Tensor2& upstream) {
  if (upstream.rows() != frames.size() || upstream.cols() != cfg_.embed_dim)
    fail(ErrorKind::Dimension, "encoder backward: upstream must be T x embed_dim");
  if (cache.frames.size() != frames.size())
    fail(ErrorKind::Dimension, "encoder backward: cache does not match frames");
  const std::size_t dh = cfg_.hidden_dim;
  const std::size_t dk = dh / cfg_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  for (std::size_t t = 0; t < frames.size(); ++t) {
    const FrameCache& fc = cache.frames[t];
    Tensor2 dout(1, cfg_.embed_dim);
    std::copy(upstream.row(t), upstream.row(t) + cfg_.embed_dim, dout.row(0));

    // Head and mean-pool.
    Tensor2 dpooled(1, dh);
    ops::matmul_backward(fc.pooled, params_.value(head_w_), dout, &dpooled,
                         &params_.grad(head_w_));
    ops::add_row_bias_backward(dout, nullptr, &params_.grad(head_b_));
    const std::size_t n = fc.out_tokens.rows();
    Tensor2 dz(n, dh);
    ops::mean_rows_backward(n, dpooled, &dz);

    for (std::size_t l = cfg_.layers; l-- > 0;) {
      const LayerIdx& ix = layer_idx_[l];
      const LayerCache& lc = fc.layers[l];

      // LN2 over u + ffn.
      Tensor2 dres2(n, dh);
      ops::layer_norm_backward(lc.ln2, params_.value(ix.ln2_g), dz, &dres2,
                               &params_.grad(ix.ln2_g), &params_.grad(ix.ln2_b));
      Tensor2 du = dres2;  // residual branch

      // FFN: ffn = relu(u*W1 + b1)*W2 + b2.
      Tensor2 act = ops::relu(lc.ffn_pre);
      Tensor2 dact(n, 4 * dh);
      ops::matmul_backward(act, params_.value(ix.w2), dres2, &dact,
                           &params_.grad(ix.w2));
      ops::add_row_bias_backward(dres2, nullptr, &params_.grad(ix.b2));
      Tensor2 dpre(n, 4 * dh);
      ops::relu_backward(lc.ffn_pre, dact, &dpre);
      ops::matmul_backward(lc.u, params_.value(ix.w1), dpre, &du,
                           &params_.grad(ix.w1));
      ops::add_row_bias_backward(dpre, nullptr, &params_.grad(ix.b1));

      // LN1 over input + attention.
      Tensor2 dres1(n, dh);
      ops::layer_norm_backward(lc.ln1, params_.value(ix.ln1_g), du, &dres1,
                               &params_.grad(ix.ln1_g), &params_.grad(ix.ln1_b));
      Tensor2 din = dres1;  // residual branch
      const Tensor2& dattn_out = dres1;

      // Output projection of the attention block.
      Tensor2 dconcat(n, dh);
      ops::matmul_backward(lc.attn.concat, params_.value(ix.wo), dattn_out,
                           &dconcat, &params_.grad(ix.wo));
      ops::add_row_bias_backward(dattn_out, nullptr, &params_.grad(ix.bo));

      Tensor2 dq(n, dh), dkm(n, dh), dv(n, dh);
      for (std::size_t h = 0; h < cfg_.heads; ++h) {
        Tensor2 doh = head_slice(dconcat, h, dk);
        Tensor2 vh = head_slice(lc.attn.v, h, dk);
        Tensor2 qh = head_slice(lc.attn.q, h, dk);
        Tensor2 kh = head_slice(lc.attn.k, h, dk);
        const Tensor2& attn = lc.attn.weights[h];

        Tensor2 dattn(n, n), dvh(n, dk);
        ops::matmul_backward(attn, vh, doh, &dattn, &dvh);
        Tensor2 dscores(n, n);
        ops::row_softmax_backward(attn, dattn, &dscores);
        dscores *= scale;
        Tensor2 dqh(n, dk), dkh_t(dk, n);
        ops::matmul_backward(qh, ops::transpose(kh), dscores, &dqh, &dkh_t);
        head_slice_add(dq, dqh, h, dk);
        head_slice_add(dkm, ops::transpose(dkh_t), h, dk);
        head_slice_add(dv, dvh, h, dk);
      }
      ops::matmul_backward(lc.input, params_.value(ix.wq), dq, &din,
                           &params_.grad(ix.wq));
      ops::add_row_bias_backward(dq, nullptr, &params_.grad(ix.bq));
      ops::matmul_backward(lc.input, params_.value(ix.wk), dkm, &din,
                           &params_.grad(ix.wk));
      ops::matmul_backward(lc.input, params_.value(ix.wv), dv, &din,
                           &params_.grad(ix.wv));
      ops::add_row_bias_backward(dv, nullptr, &params_.grad(ix.bv));

      dz = std::move(din);
    }

    // Token construction.
    const FrameFeatures& f = frames[t];
    const std::size_t n_regions =
        cfg_.global_only ? 0 : std::min(f.regions.size(), cfg_.max_regions);
    Tensor2& dwg = params_.grad(proj_g_w_);
    Tensor2& did = params_.grad(identity_);
    for (std::size_t j = 0; j < dh; ++j) {
      const double g = dz(0, j);
      params_.grad(proj_g_b_)(0, j) += g;
      did(0, j) += g;
      for (std::size_t k = 0; k < cfg_.global_dim; ++k)
        dwg(k, j) += f.global[k] * g;
    }
    Tensor2& dwl = params_.grad(proj_l_w_);
    Tensor2& dsp = params_.grad(spatial_w_);
    for (std::size_t r = 0; r < n_regions; ++r) {
      const RegionToken& tok = f.regions[r];
      const std::size_t code = static_cast<std::size_t>(tok.identity);
      const double svec[5] = {tok.box[0], tok.box[1], tok.box[2], tok.box[3],
                              tok.confidence};
      for (std::size_t j = 0; j < dh; ++j) {
        const double g = dz(1 + r, j);
        params_.grad(proj_l_b_)(0, j) += g;
        did(code, j) += g;
        for (std::size_t k = 0; k < cfg_.region_dim; ++k)
          dwl(k, j) += tok.feature[k] * g;
        for (std::size_t k = 0; k < 5; ++k) dsp(k, j) += svec[k] * g;
      }
    }
  }
}

}  // namespace ae2
