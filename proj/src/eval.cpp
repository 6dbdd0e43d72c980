#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "alignment.hpp"
#include "rng.hpp"

namespace ae2 {

namespace {

Tensor2 unit_rows(const Tensor2& x) { return normalize_rows(x); }

struct FlatFrames {
  Tensor2 x;  // row-normalized embeddings
  std::vector<std::size_t> label;
  std::vector<std::size_t> video;
  std::vector<View> view;
};

std::size_t phase_count_of(const std::vector<VideoEmbeds>& videos) {
  std::size_t classes = 0;
  for (const VideoEmbeds& v : videos)
    classes = std::max(classes, v.key_events.size() + 1);
  return classes;
}

std::size_t phase_of(const VideoEmbeds& v, std::size_t frame) {
  std::size_t phase = 0;
  for (std::size_t e : v.key_events)
    if (e <= frame) ++phase;
  return phase;
}

FlatFrames flatten(const std::vector<VideoEmbeds>& videos) {
  std::size_t total = 0, d = 0;
  for (const VideoEmbeds& v : videos) {
    total += v.embeds.rows();
    d = v.embeds.cols();
  }
  FlatFrames out;
  out.x = Tensor2(total, d);
  out.label.reserve(total);
  std::size_t row = 0;
  for (std::size_t vi = 0; vi < videos.size(); ++vi) {
    const VideoEmbeds& v = videos[vi];
    for (std::size_t t = 0; t < v.embeds.rows(); ++t, ++row) {
      std::copy(v.embeds.row(t), v.embeds.row(t) + d, out.x.row(row));
      out.label.push_back(phase_of(v, t));
      out.video.push_back(vi);
      out.view.push_back(v.view);
    }
  }
  out.x = unit_rows(out.x);
  return out;
}

// Symmetric positive-definite solve via Cholesky; the ridge term keeps the
// normal matrix well inside PD territory.
std::vector<double> cholesky_solve(Tensor2 a, std::vector<double> b) {
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = a(i, j);
      for (std::size_t k = 0; k < j; ++k) sum -= a(i, k) * a(j, k);
      if (i == j) {
        if (sum <= 0.0) fail(ErrorKind::Numeric, "cholesky: matrix not PD");
        a(i, i) = std::sqrt(sum);
      } else {
        a(i, j) = sum / a(j, j);
      }
    }
  }
  // Forward then backward substitution.
  for (std::size_t i = 0; i < n; ++i) {
    double sum = b[i];
    for (std::size_t k = 0; k < i; ++k) sum -= a(i, k) * b[k];
    b[i] = sum / a(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double sum = b[i];
    for (std::size_t k = i + 1; k < n; ++k) sum -= a(k, i) * b[k];
    b[i] = sum / a(i, i);
  }
  return b;
}

double classify_f1(const FlatFrames& train, const FlatFrames& test,
                   std::size_t classes, const EvalConfig& cfg) {
  LinearClassifier clf;
  clf.fit(train.x, train.label, classes, cfg);
  std::vector<std::size_t> pred(test.x.rows());
  for (std::size_t i = 0; i < test.x.rows(); ++i)
    pred[i] = clf.predict(test.x.row(i), test.x.cols());
  return macro_f1(test.label, pred, classes);
}

FlatFrames filter_view(const FlatFrames& in, View view) {
  FlatFrames out;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < in.x.rows(); ++i)
    if (in.view[i] == view) keep.push_back(i);
  out.x = Tensor2(keep.size(), in.x.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    std::copy(in.x.row(keep[i]), in.x.row(keep[i]) + in.x.cols(), out.x.row(i));
    out.label.push_back(in.label[keep[i]]);
    out.video.push_back(in.video[keep[i]]);
    out.view.push_back(in.view[keep[i]]);
  }
  return out;
}

}  // namespace

void LinearClassifier::fit(const Tensor2& x, const std::vector<std::size_t>& labels,
                           std::size_t classes, const EvalConfig& cfg) {
  if (x.rows() == 0) fail(ErrorKind::Eval, "classifier: no training samples");
  if (classes == 0) fail(ErrorKind::Eval, "classifier: no classes");
  std::vector<std::size_t> per_class(classes, 0);
  for (std::size_t l : labels) {
    if (l >= classes) fail(ErrorKind::Eval, "classifier: label out of range");
    ++per_class[l];
  }
  for (std::size_t c = 0; c < classes; ++c)
    if (per_class[c] == 0)
      fail(ErrorKind::Eval,
           "classifier: class " + std::to_string(c) + " has no training examples");

  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  weights_ = Tensor2(classes, d);
  bias_.assign(classes, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  Tensor2 grad(classes, d);
  std::vector<double> grad_b(classes);
  for (std::size_t epoch = 0; epoch < cfg.svm_epochs; ++epoch) {
    const double lr = cfg.svm_lr / (1.0 + 0.02 * static_cast<double>(epoch));
    grad.zero();
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    for (std::size_t c = 0; c < classes; ++c) {
      double* gw = grad.row(c);
      const double* w = weights_.row(c);
      for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row(i);
        double score = bias_[c];
        for (std::size_t j = 0; j < d; ++j) score += w[j] * xi[j];
        const double target = labels[i] == c ? 1.0 : -1.0;
        if (target * score < 1.0) {
          for (std::size_t j = 0; j < d; ++j) gw[j] -= target * xi[j] * inv_n;
          grad_b[c] -= target * inv_n;
        }
      }
      for (std::size_t j = 0; j < d; ++j) gw[j] += cfg.svm_l2 * w[j];
    }
    double max_step = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      double* w = weights_.row(c);
      const double* gw = grad.row(c);
      for (std::size_t j = 0; j < d; ++j) {
        const double step = lr * gw[j];
        w[j] -= step;
        max_step = std::max(max_step, std::abs(step));
      }
      const double step = lr * grad_b[c];
      bias_[c] -= step;
      max_step = std::max(max_step, std::abs(step));
    }
    if (max_step < cfg.svm_tol) break;
  }
}

std::size_t LinearClassifier::predict(const double* row, std::size_t d) const {
  if (d != weights_.cols()) fail(ErrorKind::Dimension, "classifier: dim mismatch");
  double best = -std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t c = 0; c < weights_.rows(); ++c) {
    double score = bias_[c];
    const double* w = weights_.row(c);
    for (std::size_t j = 0; j < d; ++j) score += w[j] * row[j];
    if (score > best) {
      best = score;
      arg = c;
    }
  }
  return arg;
}

void LinearRegressor::fit(const Tensor2& x, const Tensor2& y, double ridge) {
  if (x.rows() != y.rows()) fail(ErrorKind::Dimension, "regressor: row mismatch");
  if (x.rows() == 0) fail(ErrorKind::Eval, "regressor: no training samples");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t m = y.cols();
  std::vector<double> xmean(d, 0.0), ymean(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) xmean[j] += x(i, j);
    for (std::size_t j = 0; j < m; ++j) ymean[j] += y(i, j);
  }
  for (double& v : xmean) v /= static_cast<double>(n);
  for (double& v : ymean) v /= static_cast<double>(n);

  Tensor2 gram(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      const double xa = x(i, a) - xmean[a];
      for (std::size_t b = a; b < d; ++b)
        gram(a, b) += xa * (x(i, b) - xmean[b]);
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < a; ++b) gram(a, b) = gram(b, a);
    gram(a, a) += ridge;
  }

  weights_ = Tensor2(d, m);
  intercept_.assign(m, 0.0);
  for (std::size_t t = 0; t < m; ++t) {
    std::vector<double> rhs(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double yc = y(i, t) - ymean[t];
      for (std::size_t j = 0; j < d; ++j) rhs[j] += (x(i, j) - xmean[j]) * yc;
    }
    const std::vector<double> w = cholesky_solve(gram, std::move(rhs));
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      weights_(j, t) = w[j];
      dot += xmean[j] * w[j];
    }
    intercept_[t] = ymean[t] - dot;
  }
}

Tensor2 LinearRegressor::predict(const Tensor2& x) const {
  if (x.cols() != weights_.rows()) fail(ErrorKind::Dimension, "regressor: dim mismatch");
  Tensor2 out(x.rows(), weights_.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t t = 0; t < weights_.cols(); ++t) {
      double acc = intercept_[t];
      for (std::size_t j = 0; j < x.cols(); ++j) acc += x(i, j) * weights_(j, t);
      out(i, t) = acc;
    }
  return out;
}

double macro_f1(const std::vector<std::size_t>& truth,
                const std::vector<std::size_t>& pred, std::size_t classes) {
  if (truth.size() != pred.size()) fail(ErrorKind::Dimension, "macro_f1: size mismatch");
  double sum = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool t = truth[i] == c;
      const bool p = pred[i] == c;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    const double prec = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    const double rec = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
    sum += prec + rec == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
  }
  return sum / static_cast<double>(classes);
}

double phase_classification(const std::vector<VideoEmbeds>& train,
                            const std::vector<VideoEmbeds>& test,
                            const EvalConfig& cfg) {
  const std::size_t classes = std::max(phase_count_of(train), phase_count_of(test));
  return classify_f1(flatten(train), flatten(test), classes, cfg);
}

FewShotResult few_shot(const std::vector<VideoEmbeds>& train,
                       const std::vector<VideoEmbeds>& test, double fraction,
                       std::size_t repeats, const EvalConfig& cfg,
                       std::uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0)
    fail(ErrorKind::Eval, "few_shot: fraction must lie in (0, 1]");
  const std::size_t pick =
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(train.size())));
  if (pick == 0 || train.empty()) fail(ErrorKind::Eval, "few_shot: empty selection");
  const std::size_t classes = std::max(phase_count_of(train), phase_count_of(test));
  const FlatFrames test_flat = flatten(test);

  FewShotResult out;
  for (std::size_t run = 0; run < repeats; ++run) {
    auto rng = make_rng(seed, "few_shot_run_" + std::to_string(run));
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < pick; ++i) {
      std::uniform_int_distribution<std::size_t> sel(i, order.size() - 1);
      std::swap(order[i], order[sel(rng)]);
    }
    std::vector<VideoEmbeds> subset;
    for (std::size_t i = 0; i < pick; ++i) subset.push_back(train[order[i]]);
    out.per_run.push_back(classify_f1(flatten(subset), test_flat, classes, cfg));
  }
  double mean = 0.0;
  for (double v : out.per_run) mean += v;
  mean /= static_cast<double>(out.per_run.size());
  double var = 0.0;
  for (double v : out.per_run) var += (v - mean) * (v - mean);
  out.mean = mean;
  out.stddev = out.per_run.size() > 1
                   ? std::sqrt(var / static_cast<double>(out.per_run.size()))
                   : 0.0;
  return out;
}

double cross_view_classification(const std::vector<VideoEmbeds>& train,
                                 const std::vector<VideoEmbeds>& test,
                                 View train_view, const EvalConfig& cfg) {
  const std::size_t classes = std::max(phase_count_of(train), phase_count_of(test));
  const View test_view = train_view == View::Ego ? View::Exo : View::Ego;
  const FlatFrames train_flat = filter_view(flatten(train), train_view);
  const FlatFrames test_flat = filter_view(flatten(test), test_view);
  if (train_flat.x.rows() == 0 || test_flat.x.rows() == 0)
    fail(ErrorKind::Eval, "cross_view: a view has no frames");
  return classify_f1(train_flat, test_flat, classes, cfg);
}

double frame_retrieval_map(const std::vector<VideoEmbeds>& test, std::size_t k,
                           RetrievalScope scope) {
  const FlatFrames flat = flatten(test);
  const std::size_t n = flat.x.rows();
  const std::size_t d = flat.x.cols();
  double total_ap = 0.0;
  std::size_t queries = 0;
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t q = 0; q < n; ++q) {
    if (scope == RetrievalScope::Ego2Exo && flat.view[q] != View::Ego) continue;
    if (scope == RetrievalScope::Exo2Ego && flat.view[q] != View::Exo) continue;
    scored.clear();
    for (std::size_t g = 0; g < n; ++g) {
      if (scope == RetrievalScope::Regular) {
        if (flat.video[g] == flat.video[q]) continue;
      } else {
        if (flat.view[g] == flat.view[q]) continue;
      }
      double sim = 0.0;
      const double* a = flat.x.row(q);
      const double* b = flat.x.row(g);
      for (std::size_t j = 0; j < d; ++j) sim += a[j] * b[j];
      scored.emplace_back(sim, g);
    }
    if (scored.size() < k)
      fail(ErrorKind::Eval, "frame_retrieval: gallery smaller than k");
    // Highest similarity first; ties broken toward the lower frame index.
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    std::size_t same = 0;
    for (std::size_t r = 0; r < k; ++r)
      same += flat.label[scored[r].second] == flat.label[q];
    total_ap += static_cast<double>(same) / static_cast<double>(k);
    ++queries;
  }
  if (queries == 0) fail(ErrorKind::Eval, "frame_retrieval: no queries in scope");
  return total_ap / static_cast<double>(queries);
}

std::vector<double> progression_targets(std::size_t frame, std::size_t frame_count,
                                        const std::vector<std::size_t>& key_events) {
  std::vector<double> out(key_events.size());
  for (std::size_t j = 0; j < key_events.size(); ++j)
    out[j] = (static_cast<double>(frame) - static_cast<double>(key_events[j])) /
             static_cast<double>(frame_count);
  return out;
}

namespace {

// X augmented with the 0.001 * (i/T) time column when `modified` is set;
// Y holds the per-event targets.
void progression_matrices(const std::vector<VideoEmbeds>& videos, bool modified,
                          std::size_t events, Tensor2* x, Tensor2* y) {
  std::size_t total = 0, d = 0;
  for (const VideoEmbeds& v : videos) {
    if (v.key_events.size() != events)
      fail(ErrorKind::Eval, "phase_progression: videos disagree on event count");
    if (v.embeds.rows() < 2)
      fail(ErrorKind::Eval, "phase_progression: degenerate single-frame video " + v.id);
    total += v.embeds.rows();
    d = v.embeds.cols();
  }
  *x = Tensor2(total, d + (modified ? 1 : 0));
  *y = Tensor2(total, events);
  std::size_t row = 0;
  for (const VideoEmbeds& v : videos) {
    const Tensor2 norm = unit_rows(v.embeds);
    const std::size_t t_count = v.embeds.rows();
    for (std::size_t t = 0; t < t_count; ++t, ++row) {
      std::copy(norm.row(t), norm.row(t) + d, x->row(row));
      if (modified)
        (*x)(row, d) = 0.001 * (static_cast<double>(t) / static_cast<double>(t_count));
      const std::vector<double> targets =
          progression_targets(t, t_count, v.key_events);
      std::copy(targets.begin(), targets.end(), y->row(row));
    }
  }
}

}  // namespace

double phase_progression(const std::vector<VideoEmbeds>& train,
                         const std::vector<VideoEmbeds>& test, bool modified,
                         const EvalConfig& cfg) {
  if (train.empty() || test.empty())
    fail(ErrorKind::Eval, "phase_progression: empty split");
  const std::size_t events = train.front().key_events.size();
  if (events == 0) fail(ErrorKind::Eval, "phase_progression: key events required");
  Tensor2 xtr, ytr, xte, yte;
  progression_matrices(train, modified, events, &xtr, &ytr);
  progression_matrices(test, modified, events, &xte, &yte);
  LinearRegressor reg;
  reg.fit(xtr, ytr, cfg.ridge);
  const Tensor2 pred = reg.predict(xte);
  double r2_sum = 0.0;
  for (std::size_t t = 0; t < events; ++t) {
    double mean = 0.0;
    for (std::size_t i = 0; i < yte.rows(); ++i) mean += yte(i, t);
    mean /= static_cast<double>(yte.rows());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < yte.rows(); ++i) {
      ss_res += (yte(i, t) - pred(i, t)) * (yte(i, t) - pred(i, t));
      ss_tot += (yte(i, t) - mean) * (yte(i, t) - mean);
    }
    if (ss_tot == 0.0)
      fail(ErrorKind::Eval, "phase_progression: degenerate constant targets");
    r2_sum += 1.0 - ss_res / ss_tot;
  }
  return r2_sum / static_cast<double>(events);
}

double kendall_tau(const std::vector<Tensor2>& test_embeds) {
  std::vector<const Tensor2*> usable;
  for (const Tensor2& t : test_embeds) {
    if (t.rows() < 2) {
      std::fprintf(stderr, "kendall_tau: skipping video with %zu frame(s)\n",
                   static_cast<std::size_t>(t.rows()));
      continue;
    }
    usable.push_back(&t);
  }
  if (usable.size() < 2)
    fail(ErrorKind::Eval, "kendall_tau: need at least 2 videos with 2+ frames");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t u = 0; u < usable.size(); ++u) {
    for (std::size_t v = 0; v < usable.size(); ++v) {
      if (u == v) continue;
      const SyncMap sm = sync_map(*usable[u], *usable[v]);
      const std::size_t n = sm.map.size();
      long long concordant = 0, discordant = 0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (sm.map[i] < sm.map[j]) ++concordant;
          else if (sm.map[i] > sm.map[j]) ++discordant;
        }
      }
      const double denom = static_cast<double>(n) * (n - 1) / 2.0;
      sum += static_cast<double>(concordant - discordant) / denom;
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

MetricsReport evaluate_all(const std::vector<VideoEmbeds>& train,
                           const std::vector<VideoEmbeds>& test,
                           const EvalConfig& cfg, std::uint64_t seed) {
  MetricsReport r;
  r.f1_regular = phase_classification(train, test, cfg);
  r.f1_ego2exo = cross_view_classification(train, test, View::Ego, cfg);
  r.f1_exo2ego = cross_view_classification(train, test, View::Exo, cfg);
  r.few_shot_fractions = {0.1, 0.5, 1.0};
  for (double f : r.few_shot_fractions)
    r.few_shot.push_back(few_shot(train, test, f, cfg.few_shot_repeats, cfg, seed));
  const std::size_t ks[3] = {5, 10, 15};
  for (int i = 0; i < 3; ++i) {
    r.map_regular[i] = frame_retrieval_map(test, ks[i], RetrievalScope::Regular);
    r.map_ego2exo[i] = frame_retrieval_map(test, ks[i], RetrievalScope::Ego2Exo);
    r.map_exo2ego[i] = frame_retrieval_map(test, ks[i], RetrievalScope::Exo2Ego);
  }
  r.progression = phase_progression(train, test, false, cfg);
  r.progression_modified = phase_progression(train, test, true, cfg);
  std::vector<Tensor2> embeds;
  for (const VideoEmbeds& v : test) embeds.push_back(v.embeds);
  r.tau = kendall_tau(embeds);
  return r;
}

namespace {
std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}
}  // namespace

std::string format_report(const MetricsReport& r) {
  std::ostringstream os;
  os << "f1_regular=" << num(r.f1_regular) << "\n";
  os << "f1_ego2exo=" << num(r.f1_ego2exo) << "\n";
  os << "f1_exo2ego=" << num(r.f1_exo2ego) << "\n";
  for (std::size_t i = 0; i < r.few_shot.size(); ++i) {
    std::ostringstream key;
    key << "f1_fewshot_" << r.few_shot_fractions[i];
    os << key.str() << "_mean=" << num(r.few_shot[i].mean) << "\n";
    os << key.str() << "_std=" << num(r.few_shot[i].stddev) << "\n";
  }
  const std::size_t ks[3] = {5, 10, 15};
  for (int i = 0; i < 3; ++i) os << "map" << ks[i] << "_regular=" << num(r.map_regular[i]) << "\n";
  for (int i = 0; i < 3; ++i) os << "map" << ks[i] << "_ego2exo=" << num(r.map_ego2exo[i]) << "\n";
  for (int i = 0; i < 3; ++i) os << "map" << ks[i] << "_exo2ego=" << num(r.map_exo2ego[i]) << "\n";
  os << "progression_r2=" << num(r.progression) << "\n";
  os << "progression_r2_modified=" << num(r.progression_modified) << "\n";
  os << "kendall_tau=" << num(r.tau) << "\n";
  return os.str();
}

std::string retrieval_dump(const std::vector<VideoEmbeds>& test, std::size_t k,
                           RetrievalScope scope) {
  const FlatFrames flat = flatten(test);
  const std::size_t n = flat.x.rows();
  const std::size_t d = flat.x.cols();
  std::ostringstream os;
  os << "query_video,query_frame,rank,gallery_video,gallery_frame,similarity,"
        "same_label\n";
  std::vector<std::size_t> frame_within(n);
  {
    std::size_t prev_video = static_cast<std::size_t>(-1), counter = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (flat.video[i] != prev_video) {
        prev_video = flat.video[i];
        counter = 0;
      }
      frame_within[i] = counter++;
    }
  }
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t q = 0; q < n; ++q) {
    if (scope == RetrievalScope::Ego2Exo && flat.view[q] != View::Ego) continue;
    if (scope == RetrievalScope::Exo2Ego && flat.view[q] != View::Exo) continue;
    scored.clear();
    for (std::size_t g = 0; g < n; ++g) {
      if (scope == RetrievalScope::Regular) {
        if (flat.video[g] == flat.video[q]) continue;
      } else {
        if (flat.view[g] == flat.view[q]) continue;
      }
      double sim = 0.0;
      for (std::size_t j = 0; j < d; ++j) sim += flat.x(q, j) * flat.x(g, j);
      scored.emplace_back(sim, g);
    }
    if (scored.size() < k)
      fail(ErrorKind::Eval, "retrieval_dump: gallery smaller than k");
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    for (std::size_t rank = 0; rank < k; ++rank) {
      const std::size_t g = scored[rank].second;
      os << test[flat.video[q]].id << "," << frame_within[q] << "," << rank + 1
         << "," << test[flat.video[g]].id << "," << frame_within[g] << ","
         << num(scored[rank].first) << ","
         << (flat.label[g] == flat.label[q] ? 1 : 0) << "\n";
    }
  }
  return os.str();
}

std::string format_csv(const MetricsReport& r) {
  std::ostringstream os;
  os << "f1_regular,f1_ego2exo,f1_exo2ego,map10_regular,map10_ego2exo,"
        "map10_exo2ego,progression_r2,kendall_tau\n";
  os << num(r.f1_regular) << "," << num(r.f1_ego2exo) << "," << num(r.f1_exo2ego)
     << "," << num(r.map_regular[1]) << "," << num(r.map_ego2exo[1]) << ","
     << num(r.map_exo2ego[1]) << "," << num(r.progression) << "," << num(r.tau)
     << "\n";
  return os.str();
}

}  // namespace ae2
