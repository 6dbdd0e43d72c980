#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "error.hpp"

namespace ae2 {

namespace {

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(ErrorKind::Config, "config: bad numeric value for " + key + ": '" + v + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    fail(ErrorKind::Config, "config: bad integer value for " + key + ": '" + v + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  fail(ErrorKind::Config, "config: bad boolean value for " + key + ": '" + v + "'");
}

// Shortest round-trip representation.
std::string fmt(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

struct Field {
  const char* key;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

#define NUM_FIELD(key, ref)                                              \
  Field {                                                                \
    key, [](Config& c, const std::string& v) { c.ref = parse_double(key, v); }, \
        [](const Config& c) { return fmt(c.ref); }                      \
  }
#define UINT_FIELD(key, ref, type)                                       \
  Field {                                                                \
    key,                                                                 \
        [](Config& c, const std::string& v) {                            \
          c.ref = static_cast<type>(parse_uint(key, v));                 \
        },                                                               \
        [](const Config& c) { return std::to_string(c.ref); }            \
  }
#define BOOL_FIELD(key, ref)                                             \
  Field {                                                                \
    key, [](Config& c, const std::string& v) { c.ref = parse_bool(key, v); }, \
        [](const Config& c) { return c.ref ? "1" : "0"; }                \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      NUM_FIELD("beta", train.beta),
      NUM_FIELD("gamma", train.gamma),
      NUM_FIELD("lambda", train.lambda),
      NUM_FIELD("lr", train.lr),
      NUM_FIELD("wd", train.wd),
      UINT_FIELD("epochs", train.epochs, std::size_t),
      UINT_FIELD("batch_pairs", train.batch_pairs, std::size_t),
      UINT_FIELD("frames_per_seq", train.frames_per_seq, std::size_t),
      UINT_FIELD("pos_frames", train.pos_frames, std::size_t),
      UINT_FIELD("hidden_dim", train.hidden_dim, std::size_t),
      UINT_FIELD("layers", train.layers, std::size_t),
      UINT_FIELD("heads", train.heads, std::size_t),
      UINT_FIELD("k_regions", train.k_regions, std::size_t),
      UINT_FIELD("embed_dim", train.embed_dim, std::size_t),
      Field{"negative_mode",
            [](Config& c, const std::string& v) {
              c.train.negative_mode = negative_mode_from_string(v);
            },
            [](const Config& c) {
              return std::string(to_string(c.train.negative_mode));
            }},
      UINT_FIELD("seed", train.seed, std::uint64_t),
      Field{"checkpoint_selection",
            [](Config& c, const std::string& v) {
              if (v != "loss" && v != "val_f1")
                fail(ErrorKind::Config, "checkpoint_selection must be loss or val_f1");
              c.train.checkpoint_selection = v;
            },
            [](const Config& c) { return c.train.checkpoint_selection; }},
      UINT_FIELD("val_every", train.val_every, std::size_t),
      BOOL_FIELD("global_only", train.global_only),
      BOOL_FIELD("verbose", train.verbose),
      UINT_FIELD("synth_train_videos", synth.train_videos, std::size_t),
      UINT_FIELD("synth_val_videos", synth.val_videos, std::size_t),
      UINT_FIELD("synth_test_videos", synth.test_videos, std::size_t),
      UINT_FIELD("synth_tmin", synth.tmin, std::size_t),
      UINT_FIELD("synth_tmax", synth.tmax, std::size_t),
      UINT_FIELD("synth_phases", synth.phases, std::size_t),
      UINT_FIELD("synth_signal_dim", synth.signal_dim, std::size_t),
      UINT_FIELD("synth_global_dim", synth.global_dim, std::size_t),
      UINT_FIELD("synth_region_dim", synth.region_dim, std::size_t),
      UINT_FIELD("synth_k_regions", synth.k_regions, std::size_t),
      NUM_FIELD("synth_sigma", synth.sigma),
      NUM_FIELD("synth_rho_ego", synth.rho_ego),
      NUM_FIELD("synth_rho_exo", synth.rho_exo),
      NUM_FIELD("synth_repeat_prob", synth.repeat_prob),
      NUM_FIELD("eval_svm_l2", eval.svm_l2),
      UINT_FIELD("eval_svm_epochs", eval.svm_epochs, std::size_t),
      NUM_FIELD("eval_svm_lr", eval.svm_lr),
      NUM_FIELD("eval_svm_tol", eval.svm_tol),
      NUM_FIELD("eval_ridge", eval.ridge),
      UINT_FIELD("eval_few_shot_repeats", eval.few_shot_repeats, std::size_t),
  };
  return f;
}

#undef NUM_FIELD
#undef UINT_FIELD
#undef BOOL_FIELD

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(*this, value);
      return;
    }
  }
  fail(ErrorKind::Config, "config: unknown key '" + key + "'");
}

std::string Config::get(const std::string& key) const {
  for (const Field& f : fields())
    if (key == f.key) return f.get(*this);
  fail(ErrorKind::Config, "config: unknown key '" + key + "'");
}

std::string Config::serialize() const {
  std::ostringstream os;
  for (const Field& f : fields()) os << f.key << "=" << f.get(*this) << "\n";
  return os.str();
}

Config Config::load_string(const std::string& text) {
  Config cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    // Strip comments and whitespace.
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t\r");
    line = line.substr(begin, end - begin + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Config,
           "config: line " + std::to_string(lineno) + " is not key=value");
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

Config Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_string(buf.str());
}

}  // namespace ae2
