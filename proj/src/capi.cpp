#include "ae2/ae2.h"

#include <cstring>
#include <functional>
#include <string>

#include "bytes.hpp"
#include "config.hpp"
#include "data.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "synthgen.hpp"
#include "train.hpp"

using namespace ae2;

struct ae2_config {
  Config cfg;
};

namespace {

thread_local std::string g_last_error;

int guard(const char* what, const std::function<void()>& body) {
  try {
    body();
    g_last_error.clear();
    return AE2_OK;
  } catch (const Error& e) {
    g_last_error = std::string(what) + ": " + e.what();
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    g_last_error = std::string(what) + ": " + e.what();
    return AE2_ERR;
  }
}

const Config& config_or_default(const ae2_config* cfg) {
  static const Config defaults;
  return cfg ? cfg->cfg : defaults;
}

int require(const void* p, const char* name) {
  if (p) return AE2_OK;
  g_last_error = std::string("null argument: ") + name;
  return AE2_ERR_CONFIG;
}

}  // namespace

extern "C" {

const char* ae2_version(void) { return "1.0.0"; }

const char* ae2_last_error(void) { return g_last_error.c_str(); }

ae2_config* ae2_config_new(void) { return new ae2_config(); }

void ae2_config_destroy(ae2_config* cfg) { delete cfg; }

int ae2_config_load(ae2_config* cfg, const char* path) {
  if (int rc = require(cfg, "cfg")) return rc;
  if (int rc = require(path, "path")) return rc;
  return guard("config_load", [&] { cfg->cfg = Config::load_file(path); });
}

int ae2_config_set(ae2_config* cfg, const char* key, const char* value) {
  if (int rc = require(cfg, "cfg")) return rc;
  if (int rc = require(key, "key")) return rc;
  if (int rc = require(value, "value")) return rc;
  return guard("config_set", [&] { cfg->cfg.set(key, value); });
}

int ae2_config_get(const ae2_config* cfg, const char* key, char* buf,
                   size_t buf_len) {
  if (int rc = require(cfg, "cfg")) return rc;
  if (int rc = require(key, "key")) return rc;
  if (int rc = require(buf, "buf")) return rc;
  return guard("config_get", [&] {
    const std::string v = cfg->cfg.get(key);
    if (v.size() + 1 > buf_len)
      fail(ErrorKind::Config, "buffer too small for value of " + std::string(key));
    std::memcpy(buf, v.c_str(), v.size() + 1);
  });
}

int ae2_generate(const ae2_config* cfg, const char* out_dir, int force) {
  if (int rc = require(out_dir, "out_dir")) return rc;
  const Config& c = config_or_default(cfg);
  return guard("generate",
               [&] { generate(c.synth, c.train.seed, out_dir, force != 0); });
}

int ae2_train(const ae2_config* cfg, const char* manifest_path,
              const char* checkpoint_out, const char* log_out,
              const char* init_checkpoint) {
  if (int rc = require(manifest_path, "manifest_path")) return rc;
  if (int rc = require(checkpoint_out, "checkpoint_out")) return rc;
  const Config& c = config_or_default(cfg);
  return guard("train", [&] {
    const Dataset ds = load_dataset(manifest_path);
    train_model(ds, c, checkpoint_out, log_out ? log_out : "",
                init_checkpoint ? init_checkpoint : "");
  });
}

int ae2_embed(const ae2_config* cfg, const char* manifest_path,
              const char* checkpoint_path, const char* split,
              const char* out_dir) {
  if (int rc = require(manifest_path, "manifest_path")) return rc;
  if (int rc = require(checkpoint_path, "checkpoint_path")) return rc;
  if (int rc = require(out_dir, "out_dir")) return rc;
  return guard("embed", [&] {
    const Dataset ds = load_dataset(manifest_path);
    const Checkpoint ckpt = read_checkpoint(checkpoint_path);
    if (cfg) {
      // Explicit configs must agree with the checkpoint on the model shape.
      for (const char* key : {"hidden_dim", "layers", "heads", "k_regions",
                              "embed_dim", "global_only"}) {
        if (cfg->cfg.get(key) != ckpt.config.get(key))
          fail(ErrorKind::Config, std::string("checkpoint/config mismatch on ") +
                                      key + ": config says " + cfg->cfg.get(key) +
                                      ", checkpoint says " + ckpt.config.get(key));
      }
    }
    embed_split(ds, ckpt, split ? split : "all", out_dir);
  });
}

int ae2_evaluate(const ae2_config* cfg, const char* manifest_path,
                 const char* embed_dir, const char* report_out,
                 const char* csv_out) {
  if (int rc = require(manifest_path, "manifest_path")) return rc;
  if (int rc = require(embed_dir, "embed_dir")) return rc;
  const Config& c = config_or_default(cfg);
  return guard("evaluate", [&] {
    const Dataset ds = load_dataset(manifest_path);
    evaluate_embeddings(ds, embed_dir, c, report_out ? report_out : "",
                        csv_out ? csv_out : "");
  });
}

int ae2_align(const ae2_config* cfg, const char* embed_a, const char* embed_b,
              const char* csv_out, const char* map_out, double* hard_cost,
              double* soft_loss, double* map_tau) {
  if (int rc = require(embed_a, "embed_a")) return rc;
  if (int rc = require(embed_b, "embed_b")) return rc;
  const Config& c = config_or_default(cfg);
  return guard("align", [&] {
    const AlignOutput out =
        align_files(embed_a, embed_b, c.train.beta, c.train.gamma,
                    csv_out ? csv_out : "", map_out ? map_out : "");
    if (hard_cost) *hard_cost = out.hard_cost;
    if (soft_loss) *soft_loss = out.soft_loss;
    if (map_tau) *map_tau = out.map_tau;
  });
}

int ae2_retrieve(const ae2_config* cfg, const char* manifest_path,
                 const char* embed_dir, const char* scope, int k,
                 const char* csv_out) {
  if (int rc = require(manifest_path, "manifest_path")) return rc;
  if (int rc = require(embed_dir, "embed_dir")) return rc;
  if (int rc = require(csv_out, "csv_out")) return rc;
  (void)cfg;
  return guard("retrieve", [&] {
    if (k < 1) fail(ErrorKind::Config, "retrieve: k must be >= 1");
    RetrievalScope s = RetrievalScope::Regular;
    const std::string sc = scope ? scope : "regular";
    if (sc == "regular") s = RetrievalScope::Regular;
    else if (sc == "ego2exo") s = RetrievalScope::Ego2Exo;
    else if (sc == "exo2ego") s = RetrievalScope::Exo2Ego;
    else fail(ErrorKind::Config, "retrieve: unknown scope " + sc);
    const Dataset ds = load_dataset(manifest_path);
    const std::vector<VideoEmbeds> test = load_embeddings(ds, embed_dir, Split::Test);
    if (test.empty()) fail(ErrorKind::Data, "retrieve: no embedded test videos");
    spill(csv_out, retrieval_dump(test, static_cast<std::size_t>(k), s));
  });
}

int ae2_embeddings_info(const char* path, uint32_t* frames, uint32_t* dim) {
  if (int rc = require(path, "path")) return rc;
  return guard("embeddings_info", [&] {
    const Tensor2 e = read_embedding_file(path);
    if (frames) *frames = static_cast<uint32_t>(e.rows());
    if (dim) *dim = static_cast<uint32_t>(e.cols());
  });
}

int ae2_embeddings_read(const char* path, double* buf, size_t buf_len) {
  if (int rc = require(path, "path")) return rc;
  if (int rc = require(buf, "buf")) return rc;
  return guard("embeddings_read", [&] {
    const Tensor2 e = read_embedding_file(path);
    if (e.size() > buf_len)
      fail(ErrorKind::Config, "embeddings_read: buffer too small");
    std::memcpy(buf, e.data().data(), e.size() * sizeof(double));
  });
}

}  // extern "C"
