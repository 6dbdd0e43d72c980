#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"
#include "data.hpp"
#include "tensor.hpp"

namespace ae2 {

// Frozen per-frame embeddings of one video plus its labels.
struct VideoEmbeds {
  std::string id;
  View view = View::Ego;
  Split split = Split::Train;
  std::vector<std::size_t> key_events;
  Tensor2 embeds;  // T x d
};

enum class RetrievalScope { Regular, Ego2Exo, Exo2Ego };

// One-vs-rest linear SVM trained by deterministic full-batch subgradient
// descent on the hinge loss with L2 regularization. Inputs are row-normalized
// so the fit is equivariant under orthogonal rotations of the embeddings.
class LinearClassifier {
 public:
  void fit(const Tensor2& x, const std::vector<std::size_t>& labels,
           std::size_t classes, const EvalConfig& cfg);
  std::size_t predict(const double* row, std::size_t d) const;
  std::size_t classes() const { return weights_.rows(); }

 private:
  Tensor2 weights_;  // classes x d
  std::vector<double> bias_;
};

// Closed-form ridge regression with intercept (one solve per target column).
class LinearRegressor {
 public:
  void fit(const Tensor2& x, const Tensor2& y, double ridge);
  Tensor2 predict(const Tensor2& x) const;

 private:
  Tensor2 weights_;  // d x targets
  std::vector<double> intercept_;
};

double macro_f1(const std::vector<std::size_t>& truth,
                const std::vector<std::size_t>& pred, std::size_t classes);

// ---- the four downstream tasks ----

double phase_classification(const std::vector<VideoEmbeds>& train,
                            const std::vector<VideoEmbeds>& test,
                            const EvalConfig& cfg);

struct FewShotResult {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> per_run;
};
FewShotResult few_shot(const std::vector<VideoEmbeds>& train,
                       const std::vector<VideoEmbeds>& test, double fraction,
                       std::size_t repeats, const EvalConfig& cfg,
                       std::uint64_t seed);

// Train on `train_view` training videos, test on the other view's test videos.
double cross_view_classification(const std::vector<VideoEmbeds>& train,
                                 const std::vector<VideoEmbeds>& test,
                                 View train_view, const EvalConfig& cfg);

double frame_retrieval_map(const std::vector<VideoEmbeds>& test, std::size_t k,
                           RetrievalScope scope);

// Per-frame targets (i - e_j) / T for every key event j; ridge regression on
// train, average R^2 over targets on test. `modified` appends the extra input
// dimension 0.001 * (i / T).
double phase_progression(const std::vector<VideoEmbeds>& train,
                         const std::vector<VideoEmbeds>& test, bool modified,
                         const EvalConfig& cfg);
std::vector<double> progression_targets(std::size_t frame, std::size_t frame_count,
                                        const std::vector<std::size_t>& key_events);

// Mean Kendall's tau over all ordered pairs of videos, using nearest-neighbor
// frame maps. Videos with fewer than 2 frames are skipped with a warning.
double kendall_tau(const std::vector<Tensor2>& test_embeds);

// ---- aggregate report ----

struct MetricsReport {
  double f1_regular = 0.0, f1_ego2exo = 0.0, f1_exo2ego = 0.0;
  std::vector<double> few_shot_fractions;
  std::vector<FewShotResult> few_shot;
  // mAP at k = 5, 10, 15 per scope.
  double map_regular[3] = {0, 0, 0};
  double map_ego2exo[3] = {0, 0, 0};
  double map_exo2ego[3] = {0, 0, 0};
  double progression = 0.0;
  double progression_modified = 0.0;
  double tau = 0.0;
};

MetricsReport evaluate_all(const std::vector<VideoEmbeds>& train,
                           const std::vector<VideoEmbeds>& test,
                           const EvalConfig& cfg, std::uint64_t seed);

// key=value lines, one metric per line.
std::string format_report(const MetricsReport& r);
// CSV mirroring the benchmark table columns.
std::string format_csv(const MetricsReport& r);

// Per-query top-k dump as CSV (header plus one row per retrieved frame):
// query_video,query_frame,rank,gallery_video,gallery_frame,similarity,same_label
std::string retrieval_dump(const std::vector<VideoEmbeds>& test, std::size_t k,
                           RetrievalScope scope);

}  // namespace ae2
