// ae2 command-line tool. Thin shell over the C API in ae2/ae2.h: every
// subcommand builds an ae2_config (file < AE2_SEED env < explicit flags)
// and dispatches to one library call.
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ae2/ae2.h"

namespace {

struct ConfigDeleter {
  void operator()(ae2_config* c) const { ae2_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<ae2_config, ConfigDeleter>;

int fail_rc(int rc) {
  std::fprintf(stderr, "error: %s\n", ae2_last_error());
  return rc;
}

// Shared --config/--set/--seed handling for every subcommand.
struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value config file");
    cmd->add_option("--set", sets, "override a config key (key=value), repeatable");
    cmd->add_option("--seed", seed, "override the config seed");
  }

  // Returns nullptr on error with rc set.
  ConfigPtr build(int* rc, bool* explicit_config) const {
    ConfigPtr cfg(ae2_config_new());
    bool any = false;
    if (!config_path.empty()) {
      if ((*rc = ae2_config_load(cfg.get(), config_path.c_str())) != AE2_OK)
        return nullptr;
      any = true;
    }
    if (const char* env_seed = std::getenv("AE2_SEED")) {
      if ((*rc = ae2_config_set(cfg.get(), "seed", env_seed)) != AE2_OK)
        return nullptr;
      any = true;
    }
    for (const std::string& kv : sets) {
      const std::size_t eq = kv.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "error: --set expects key=value, got '%s'\n",
                     kv.c_str());
        *rc = AE2_ERR_CONFIG;
        return nullptr;
      }
      if ((*rc = ae2_config_set(cfg.get(), kv.substr(0, eq).c_str(),
                                kv.substr(eq + 1).c_str())) != AE2_OK)
        return nullptr;
      any = true;
    }
    if (!seed.empty()) {
      if ((*rc = ae2_config_set(cfg.get(), "seed", seed.c_str())) != AE2_OK)
        return nullptr;
      any = true;
    }
    if (explicit_config) *explicit_config = any;
    *rc = AE2_OK;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ae2 — self-supervised ego-exo temporal alignment toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  CommonOpts gen_opts;
  gen_opts.attach(gen);
  std::string gen_out = "dataset";
  bool gen_force = false;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_flag("--force", gen_force, "overwrite an existing dataset");

  // train
  auto* train = app.add_subcommand("train", "train the encoder");
  CommonOpts train_opts;
  train_opts.attach(train);
  std::string train_manifest, train_ckpt = "ae2.ckpt", train_log, train_init;
  train->add_option("--manifest", train_manifest, "dataset manifest")->required();
  train->add_option("--checkpoint", train_ckpt, "output checkpoint path");
  train->add_option("--log", train_log, "training log path");
  train->add_option("--init-checkpoint", train_init,
                    "warm-start parameters from this checkpoint");

  // embed
  auto* embed = app.add_subcommand("embed", "export frame embeddings");
  CommonOpts embed_opts;
  embed_opts.attach(embed);
  std::string embed_manifest, embed_ckpt, embed_split = "all", embed_out = "embeds";
  embed->add_option("--manifest", embed_manifest, "dataset manifest")->required();
  embed->add_option("--checkpoint", embed_ckpt, "trained checkpoint")->required();
  embed->add_option("--split", embed_split, "train|val|test|all");
  embed->add_option("--out", embed_out, "output directory");

  // eval
  auto* eval = app.add_subcommand("eval", "run the downstream metric suite");
  CommonOpts eval_opts;
  eval_opts.attach(eval);
  std::string eval_manifest, eval_embeds, eval_report = "report.txt",
                             eval_csv = "table.csv";
  eval->add_option("--manifest", eval_manifest, "dataset manifest")->required();
  eval->add_option("--embeddings", eval_embeds, "embedding directory")->required();
  eval->add_option("--report", eval_report, "metric report output");
  eval->add_option("--csv", eval_csv, "summary table output");

  // align
  auto* align = app.add_subcommand("align", "align two embedding files");
  CommonOpts align_opts;
  align_opts.attach(align);
  std::string align_a, align_b, align_csv = "alignment.csv",
                                align_map = "syncmap.csv";
  align->add_option("a", align_a, "reference embedding file")->required();
  align->add_option("b", align_b, "target embedding file")->required();
  align->add_option("--csv", align_csv, "cost/path output CSV");
  align->add_option("--map", align_map, "sync map output CSV");

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "dump per-query frame retrievals");
  CommonOpts retrieve_opts;
  retrieve_opts.attach(retrieve);
  std::string ret_manifest, ret_embeds, ret_scope = "regular",
                            ret_csv = "retrieval.csv";
  int ret_k = 10;
  retrieve->add_option("--manifest", ret_manifest, "dataset manifest")->required();
  retrieve->add_option("--embeddings", ret_embeds, "embedding directory")->required();
  retrieve->add_option("--scope", ret_scope, "regular|ego2exo|exo2ego");
  retrieve->add_option("-k", ret_k, "retrieved frames per query");
  retrieve->add_option("--csv", ret_csv, "output CSV");

  CLI11_PARSE(app, argc, argv);

  int rc = AE2_OK;
  if (gen->parsed()) {
    ConfigPtr cfg = gen_opts.build(&rc, nullptr);
    if (!cfg) return fail_rc(rc);
    if ((rc = ae2_generate(cfg.get(), gen_out.c_str(), gen_force)) != AE2_OK)
      return fail_rc(rc);
    std::printf("manifest=%s/manifest.txt\nreport=%s/report.txt\n", gen_out.c_str(),
                gen_out.c_str());
  } else if (train->parsed()) {
    ConfigPtr cfg = train_opts.build(&rc, nullptr);
    if (!cfg) return fail_rc(rc);
    if ((rc = ae2_train(cfg.get(), train_manifest.c_str(), train_ckpt.c_str(),
                        train_log.empty() ? nullptr : train_log.c_str(),
                        train_init.empty() ? nullptr : train_init.c_str())) != AE2_OK)
      return fail_rc(rc);
    std::printf("checkpoint=%s\n", train_ckpt.c_str());
  } else if (embed->parsed()) {
    bool explicit_config = false;
    ConfigPtr cfg = embed_opts.build(&rc, &explicit_config);
    if (!cfg) return fail_rc(rc);
    // Without explicit settings the model shape comes from the checkpoint.
    if ((rc = ae2_embed(explicit_config ? cfg.get() : nullptr,
                        embed_manifest.c_str(), embed_ckpt.c_str(),
                        embed_split.c_str(), embed_out.c_str())) != AE2_OK)
      return fail_rc(rc);
    std::printf("embeddings=%s\n", embed_out.c_str());
  } else if (eval->parsed()) {
    ConfigPtr cfg = eval_opts.build(&rc, nullptr);
    if (!cfg) return fail_rc(rc);
    if ((rc = ae2_evaluate(cfg.get(), eval_manifest.c_str(), eval_embeds.c_str(),
                           eval_report.c_str(), eval_csv.c_str())) != AE2_OK)
      return fail_rc(rc);
    std::printf("report=%s\ncsv=%s\n", eval_report.c_str(), eval_csv.c_str());
  } else if (align->parsed()) {
    ConfigPtr cfg = align_opts.build(&rc, nullptr);
    if (!cfg) return fail_rc(rc);
    double hard = 0, soft = 0, tau = 0;
    if ((rc = ae2_align(cfg.get(), align_a.c_str(), align_b.c_str(),
                        align_csv.c_str(), align_map.c_str(), &hard, &soft,
                        &tau)) != AE2_OK)
      return fail_rc(rc);
    std::printf("hard_cost=%.6f\nsoft_loss=%.6f\nmap_tau=%.6f\ncsv=%s\nmap=%s\n",
                hard, soft, tau, align_csv.c_str(), align_map.c_str());
  } else if (retrieve->parsed()) {
    ConfigPtr cfg = retrieve_opts.build(&rc, nullptr);
    if (!cfg) return fail_rc(rc);
    if ((rc = ae2_retrieve(cfg.get(), ret_manifest.c_str(), ret_embeds.c_str(),
                           ret_scope.c_str(), ret_k, ret_csv.c_str())) != AE2_OK)
      return fail_rc(rc);
    std::printf("csv=%s\n", ret_csv.c_str());
  }
  return rc;
}
