#include <doctest.h>

#include <cmath>

#include "alignment.hpp"
#include "encoder.hpp"
#include "objective.hpp"
#include "rng.hpp"

using namespace ae2;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.global_dim = 6;
  cfg.region_dim = 4;
  cfg.hidden_dim = 8;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.embed_dim = 5;
  cfg.max_regions = 3;
  return cfg;
}

FrameFeatures random_frame(const EncoderConfig& cfg, std::mt19937_64& rng,
                           std::size_t regions) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> box(0.0, 0.5);
  FrameFeatures f;
  f.global.resize(cfg.global_dim);
  for (double& v : f.global) v = u(rng);
  for (std::size_t r = 0; r < regions; ++r) {
    RegionToken tok;
    const double x1 = box(rng), y1 = box(rng);
    tok.box = {x1, y1, x1 + box(rng), y1 + box(rng)};
    tok.confidence = 0.5 + 0.5 * box(rng);
    tok.identity = static_cast<TokenIdentity>(1 + (r % 3));
    tok.feature.resize(cfg.region_dim);
    for (double& v : tok.feature) v = u(rng);
    f.regions.push_back(std::move(tok));
  }
  return f;
}

std::vector<FrameFeatures> random_video(const EncoderConfig& cfg, std::uint64_t seed,
                                        std::size_t frames) {
  auto rng = make_rng(seed, "encoder_video");
  std::uniform_int_distribution<std::size_t> nreg(0, cfg.max_regions);
  std::vector<FrameFeatures> out;
  for (std::size_t t = 0; t < frames; ++t)
    out.push_back(random_frame(cfg, rng, nreg(rng)));
  return out;
}

}  // namespace

TEST_CASE("encode_frame basics") {
  const EncoderConfig cfg = tiny_config();
  const Encoder enc(cfg, 42);

  SUBCASE("zero regions is well-defined") {
    auto rng = make_rng(1, "f");
    const FrameFeatures f = random_frame(cfg, rng, 0);
    const std::vector<double> out = enc.encode_frame(f);
    CHECK(out.size() == cfg.embed_dim);
    for (double v : out) CHECK(std::isfinite(v));
  }

  SUBCASE("identical duplicate regions can be swapped bitwise") {
    auto rng = make_rng(2, "f");
    FrameFeatures f = random_frame(cfg, rng, 2);
    f.regions[1] = f.regions[0];  // same identity and fields
    const std::vector<double> a = enc.encode_frame(f);
    std::swap(f.regions[0], f.regions[1]);
    const std::vector<double> b = enc.encode_frame(f);
    CHECK(a == b);
  }

  SUBCASE("permuting distinct same-identity regions is invariant to 1e-12") {
    auto rng = make_rng(3, "f");
    FrameFeatures f = random_frame(cfg, rng, 3);
    f.regions[0].identity = TokenIdentity::Object;
    f.regions[2].identity = TokenIdentity::Object;
    const std::vector<double> a = enc.encode_frame(f);
    std::swap(f.regions[0], f.regions[2]);
    const std::vector<double> b = enc.encode_frame(f);
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }

  SUBCASE("deterministic across construction with the same seed") {
    auto rng = make_rng(4, "f");
    const FrameFeatures f = random_frame(cfg, rng, 2);
    const Encoder enc2(cfg, 42);
    CHECK(enc.encode_frame(f) == enc2.encode_frame(f));
    const Encoder enc3(cfg, 43);
    CHECK(enc.encode_frame(f) != enc3.encode_frame(f));
  }

  SUBCASE("bounded inputs give finite outputs") {
    auto rng = make_rng(5, "f");
    FrameFeatures f = random_frame(cfg, rng, 3);
    for (double& v : f.global) v *= 1e3;
    for (auto& r : f.regions)
      for (double& v : r.feature) v *= 1e3;
    for (double v : enc.encode_frame(f)) CHECK(std::isfinite(v));
  }

  SUBCASE("dimension mismatch is rejected") {
    FrameFeatures f;
    f.global.assign(cfg.global_dim + 1, 0.0);
    CHECK_THROWS_AS(enc.encode_frame(f), Error);
  }
}

TEST_CASE("encode_video") {
  const EncoderConfig cfg = tiny_config();
  const Encoder enc(cfg, 7);
  const std::vector<FrameFeatures> video = random_video(cfg, 10, 4);

  SUBCASE("rows are per-frame encodings") {
    const Tensor2 e = enc.encode_video(video);
    CHECK(e.rows() == 4);
    CHECK(e.cols() == cfg.embed_dim);
    for (std::size_t t = 0; t < 4; ++t) {
      const std::vector<double> row = enc.encode_frame(video[t]);
      for (std::size_t k = 0; k < cfg.embed_dim; ++k) CHECK(e(t, k) == row[k]);
    }
  }

  SUBCASE("concatenating clips concatenates embeddings") {
    const std::vector<FrameFeatures> extra = random_video(cfg, 11, 3);
    std::vector<FrameFeatures> both = video;
    both.insert(both.end(), extra.begin(), extra.end());
    const Tensor2 a = enc.encode_video(video);
    const Tensor2 b = enc.encode_video(extra);
    const Tensor2 ab = enc.encode_video(both);
    for (std::size_t k = 0; k < cfg.embed_dim; ++k) {
      CHECK(ab(0, k) == a(0, k));
      CHECK(ab(4, k) == b(0, k));
      CHECK(ab(6, k) == b(2, k));
    }
  }

  SUBCASE("per-frame locality: editing frame t changes only row t") {
    std::vector<FrameFeatures> edited = video;
    edited[2].global[0] += 0.5;
    const Tensor2 a = enc.encode_video(video);
    const Tensor2 b = enc.encode_video(edited);
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t k = 0; k < cfg.embed_dim; ++k) {
        if (t == 2) continue;
        CHECK(a(t, k) == b(t, k));
      }
    bool changed = false;
    for (std::size_t k = 0; k < cfg.embed_dim; ++k) changed |= a(2, k) != b(2, k);
    CHECK(changed);
  }

  SUBCASE("global-only mode ignores regions entirely") {
    EncoderConfig gcfg = tiny_config();
    gcfg.global_only = true;
    const Encoder genc(gcfg, 7);
    std::vector<FrameFeatures> stripped = video;
    for (auto& f : stripped) f.regions.clear();
    const Tensor2 a = genc.encode_video(video);
    const Tensor2 b = genc.encode_video(stripped);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == b.data()[i]);
  }

  SUBCASE("empty video is rejected") {
    CHECK_THROWS_AS(enc.encode_video({}), Error);
  }
}

TEST_CASE("encoder backward") {
  const EncoderConfig cfg = tiny_config();

  SUBCASE("zero upstream leaves gradients zero") {
    Encoder enc(cfg, 9);
    const std::vector<FrameFeatures> video = random_video(cfg, 12, 3);
    Encoder::Cache cache;
    enc.encode_video(video, &cache);
    enc.backward(video, cache, Tensor2(3, cfg.embed_dim));
    for (std::size_t b = 0; b < enc.params().block_count(); ++b)
      for (double v : enc.params().grad(b).data()) CHECK(v == 0.0);
  }

  SUBCASE("head gradient equals pooled outer upstream") {
    Encoder enc(cfg, 9);
    const std::vector<FrameFeatures> video = random_video(cfg, 13, 2);
    Encoder::Cache cache;
    enc.encode_video(video, &cache);
    Tensor2 up(2, cfg.embed_dim);
    auto rng = make_rng(1, "up");
    std::uniform_real_distribution<double> u(-1, 1);
    for (double& v : up.data()) v = u(rng);
    enc.backward(video, cache, up);
    const std::size_t head_w = enc.params().index_of("head.weight");
    const Tensor2& got = enc.params().grad(head_w);
    for (std::size_t i = 0; i < cfg.hidden_dim; ++i)
      for (std::size_t j = 0; j < cfg.embed_dim; ++j) {
        double expect = 0.0;
        for (std::size_t t = 0; t < 2; ++t)
          expect += cache.frames[t].pooled(0, i) * up(t, j);
        CHECK(got(i, j) == doctest::Approx(expect).epsilon(1e-12));
      }
  }

  SUBCASE("full parameter gradient matches finite differences") {
    // Dg=6, Dr=4, dh=8, L=1, H=2, T=3, through the full AE2 loss.
    Encoder enc(cfg, 101);
    const std::vector<FrameFeatures> va = random_video(cfg, 14, 3);
    const std::vector<FrameFeatures> vb = random_video(cfg, 15, 4);
    const ScalarFn f = [&](ParamStore&, bool with_grad) {
      Encoder::Cache ca, cb;
      const Tensor2 x = enc.encode_video(va, with_grad ? &ca : nullptr);
      const Tensor2 y = enc.encode_video(vb, with_grad ? &cb : nullptr);
      auto rng = make_rng(0, "hinge");
      const TotalLossResult r =
          total_loss(x, y, 0.1, 0.1, 1.0, NegativeMode::FullReverse, rng);
      if (with_grad) {
        enc.backward(va, ca, r.dx);
        enc.backward(vb, cb, r.dy);
      }
      return r.parts.total;
    };
    const double err = grad_check(enc.params(), f, 1e-5, 60, 77);
    CHECK(err < 1e-4);
  }
}
