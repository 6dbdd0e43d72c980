#include <doctest.h>

#include <cmath>

#include "eval.hpp"
#include "rng.hpp"

using namespace ae2;

namespace {

Tensor2 random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  auto rng = make_rng(seed, "eval_test");
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor2 m(r, c);
  for (double& v : m.data()) v = u(rng);
  return m;
}

// Three well-separated directions in R^4, one per phase.
Tensor2 cluster_embed(const std::vector<std::size_t>& labels, std::uint64_t seed,
                      double noise = 0.05) {
  auto rng = make_rng(seed, "clusters");
  std::normal_distribution<double> g(0.0, noise);
  const double centers[3][4] = {
      {1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}};
  Tensor2 out(labels.size(), 4);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t k = 0; k < 4; ++k)
      out(i, k) = centers[labels[i]][k] + g(rng);
  return out;
}

VideoEmbeds make_video(const std::string& id, View view, Split split,
                       std::vector<std::size_t> events, Tensor2 embeds) {
  VideoEmbeds v;
  v.id = id;
  v.view = view;
  v.split = split;
  v.key_events = std::move(events);
  v.embeds = std::move(embeds);
  return v;
}

// Phase-labelled video whose frame labels follow the key events, with
// cluster-like embeddings per phase.
VideoEmbeds cluster_video(const std::string& id, View view, Split split,
                          std::size_t t, std::uint64_t seed, double noise = 0.05) {
  const std::size_t e1 = t / 3, e2 = 2 * t / 3;
  std::vector<std::size_t> labels(t);
  for (std::size_t i = 0; i < t; ++i) labels[i] = (i >= e2) ? 2 : (i >= e1 ? 1 : 0);
  return make_video(id, view, split, {e1, e2}, cluster_embed(labels, seed, noise));
}

// Independent brute-force mAP@k over the same scope rules.
double brute_map(const std::vector<VideoEmbeds>& test, std::size_t k,
                 RetrievalScope scope) {
  struct Row {
    std::vector<double> e;
    std::size_t label, video;
    View view;
  };
  std::vector<Row> rows;
  for (std::size_t vi = 0; vi < test.size(); ++vi) {
    const VideoEmbeds& v = test[vi];
    for (std::size_t t = 0; t < v.embeds.rows(); ++t) {
      Row r;
      r.e.assign(v.embeds.row(t), v.embeds.row(t) + v.embeds.cols());
      std::size_t label = 0;
      for (std::size_t e : v.key_events)
        if (e <= t) ++label;
      r.label = label;
      r.video = vi;
      r.view = v.view;
      rows.push_back(std::move(r));
    }
  }
  auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    return dot / std::sqrt(na * nb);
  };
  double total = 0;
  std::size_t queries = 0;
  for (std::size_t q = 0; q < rows.size(); ++q) {
    if (scope == RetrievalScope::Ego2Exo && rows[q].view != View::Ego) continue;
    if (scope == RetrievalScope::Exo2Ego && rows[q].view != View::Exo) continue;
    std::vector<std::pair<double, std::size_t>> gallery;
    for (std::size_t g = 0; g < rows.size(); ++g) {
      if (scope == RetrievalScope::Regular) {
        if (rows[g].video == rows[q].video) continue;
      } else if (rows[g].view == rows[q].view) {
        continue;
      }
      gallery.emplace_back(cosine(rows[q].e, rows[g].e), g);
    }
    std::sort(gallery.begin(), gallery.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::size_t same = 0;
    for (std::size_t r = 0; r < k; ++r)
      same += rows[gallery[r].second].label == rows[q].label;
    total += static_cast<double>(same) / static_cast<double>(k);
    ++queries;
  }
  return total / static_cast<double>(queries);
}

double brute_tau(const std::vector<Tensor2>& embeds) {
  auto cosine = [](const Tensor2& a, std::size_t i, const Tensor2& b, std::size_t j) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      dot += a(i, k) * b(j, k);
      na += a(i, k) * a(i, k);
      nb += b(j, k) * b(j, k);
    }
    return dot / std::sqrt(na * nb);
  };
  double sum = 0;
  std::size_t pairs = 0;
  for (std::size_t u = 0; u < embeds.size(); ++u)
    for (std::size_t v = 0; v < embeds.size(); ++v) {
      if (u == v) continue;
      const std::size_t n = embeds[u].rows();
      std::vector<std::size_t> map(n);
      for (std::size_t i = 0; i < n; ++i) {
        double best = -2;
        for (std::size_t j = 0; j < embeds[v].rows(); ++j) {
          const double c = cosine(embeds[u], i, embeds[v], j);
          if (c > best) {
            best = c;
            map[i] = j;
          }
        }
      }
      long long con = 0, dis = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          if (map[i] < map[j]) ++con;
          if (map[i] > map[j]) ++dis;
        }
      sum += static_cast<double>(con - dis) / (n * (n - 1) / 2.0);
      ++pairs;
    }
  return sum / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("macro F1 against a hand-computed confusion") {
  // 6 frames, 3 classes. truth: 0,0,1,1,2,2; pred: 0,1,1,1,2,0.
  // class 0: tp=1 fp=1 fn=1 -> p=r=0.5, f1=0.5
  // class 1: tp=2 fp=1 fn=0 -> p=2/3, r=1, f1=0.8
  // class 2: tp=1 fp=0 fn=1 -> p=1, r=0.5, f1=2/3
  const std::vector<std::size_t> truth{0, 0, 1, 1, 2, 2};
  const std::vector<std::size_t> pred{0, 1, 1, 1, 2, 0};
  const double expect = (0.5 + 0.8 + 2.0 / 3.0) / 3.0;
  CHECK(macro_f1(truth, pred, 3) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("phase classification") {
  EvalConfig cfg;

  SUBCASE("perfectly separable clusters reach F1 = 1") {
    std::vector<VideoEmbeds> train{cluster_video("tr0", View::Ego, Split::Train, 30, 1),
                                   cluster_video("tr1", View::Exo, Split::Train, 27, 2)};
    std::vector<VideoEmbeds> test{cluster_video("te0", View::Ego, Split::Test, 24, 3),
                                  cluster_video("te1", View::Exo, Split::Test, 21, 4)};
    CHECK(phase_classification(train, test, cfg) == doctest::Approx(1.0));
  }

  SUBCASE("label-free embeddings stay near chance for 3 balanced classes") {
    // Embeddings carry no label signal: F1 hovers around 1/3.
    double sum = 0.0;
    const int reps = 5;
    for (int rep = 0; rep < reps; ++rep) {
      std::vector<std::size_t> events{10, 20};
      std::vector<VideoEmbeds> train{make_video("tr", View::Ego, Split::Train, events,
                                                random_matrix(30, 6, 100 + rep))};
      std::vector<VideoEmbeds> test{make_video("te", View::Exo, Split::Test, events,
                                               random_matrix(30, 6, 200 + rep))};
      sum += phase_classification(train, test, cfg);
    }
    CHECK(std::abs(sum / reps - 1.0 / 3.0) < 0.1);
  }

  SUBCASE("missing training class names the class") {
    std::vector<VideoEmbeds> train{make_video("tr", View::Ego, Split::Train, {},
                                              random_matrix(10, 4, 1))};
    std::vector<VideoEmbeds> test{cluster_video("te", View::Exo, Split::Test, 21, 2)};
    CHECK_THROWS_WITH_AS(phase_classification(train, test, cfg),
                         doctest::Contains("class"), Error);
  }
}

TEST_CASE("few shot") {
  EvalConfig cfg;
  cfg.few_shot_repeats = 3;
  std::vector<VideoEmbeds> train;
  for (int i = 0; i < 6; ++i)
    train.push_back(cluster_video("tr" + std::to_string(i),
                                  i % 2 ? View::Ego : View::Exo, Split::Train, 21,
                                  10 + i));
  std::vector<VideoEmbeds> test{cluster_video("te0", View::Ego, Split::Test, 24, 30),
                                cluster_video("te1", View::Exo, Split::Test, 24, 31)};

  SUBCASE("fraction 1.0 equals the full classification") {
    const FewShotResult r = few_shot(train, test, 1.0, 3, cfg, 7);
    const double full = phase_classification(train, test, cfg);
    CHECK(r.mean == doctest::Approx(full));
    CHECK(r.stddev == doctest::Approx(0.0));
  }

  SUBCASE("deterministic under a fixed seed") {
    const FewShotResult a = few_shot(train, test, 0.5, 3, cfg, 7);
    const FewShotResult b = few_shot(train, test, 0.5, 3, cfg, 7);
    CHECK(a.per_run == b.per_run);
  }

  SUBCASE("fraction bounds") {
    CHECK_THROWS_AS(few_shot(train, test, 0.0, 3, cfg, 7), Error);
    CHECK_THROWS_AS(few_shot(train, test, 1.5, 3, cfg, 7), Error);
  }

  SUBCASE("more labeled videos do not hurt, on average") {
    // Noisy clusters so that single-video training is genuinely worse.
    double at_01 = 0.0, at_10 = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      std::vector<VideoEmbeds> tr;
      for (int i = 0; i < 8; ++i)
        tr.push_back(cluster_video("tr" + std::to_string(i),
                                   i % 2 ? View::Ego : View::Exo, Split::Train, 15,
                                   1000 + 10 * seed + i, 0.6));
      std::vector<VideoEmbeds> te{
          cluster_video("te0", View::Ego, Split::Test, 18, 2000 + seed, 0.6),
          cluster_video("te1", View::Exo, Split::Test, 18, 3000 + seed, 0.6)};
      at_01 += few_shot(tr, te, 0.1, 4, cfg, seed).mean;
      at_10 += few_shot(tr, te, 1.0, 1, cfg, seed).mean;
    }
    CHECK(at_10 >= at_01);
  }
}

TEST_CASE("cross-view classification restricts the splits by view") {
  EvalConfig cfg;
  std::vector<VideoEmbeds> train{cluster_video("tre", View::Ego, Split::Train, 30, 1),
                                 cluster_video("trx", View::Exo, Split::Train, 30, 2)};
  std::vector<VideoEmbeds> test{cluster_video("tee", View::Ego, Split::Test, 24, 3),
                                cluster_video("tex", View::Exo, Split::Test, 24, 4)};
  CHECK(cross_view_classification(train, test, View::Ego, cfg) ==
        doctest::Approx(1.0));
  CHECK(cross_view_classification(train, test, View::Exo, cfg) ==
        doctest::Approx(1.0));
}

TEST_CASE("frame retrieval mAP") {
  SUBCASE("single shared label gives mAP 1") {
    std::vector<VideoEmbeds> test{
        make_video("a", View::Ego, Split::Test, {}, random_matrix(10, 4, 1)),
        make_video("b", View::Exo, Split::Test, {}, random_matrix(12, 4, 2))};
    CHECK(frame_retrieval_map(test, 5, RetrievalScope::Regular) == doctest::Approx(1.0));
  }

  SUBCASE("hand-built AP@5 = 0.6 case") {
    // One ego query (phase A) retrieving from a 5-frame exo gallery whose
    // ranked labels come out A,B,A,A,B -> AP@5 = 3/5. The gallery's key
    // event sits at frame 3, so frames 0..2 share the query's phase and
    // frames 3..4 do not; similarities put frame 3 at rank 2.
    Tensor2 q(1, 2);
    q(0, 0) = 1.0;
    q(0, 1) = 0.0;
    Tensor2 g(5, 2);
    const double frame_sims[5] = {0.95, 0.8, 0.7, 0.9, 0.6};
    for (int i = 0; i < 5; ++i) {
      g(i, 0) = frame_sims[i];
      g(i, 1) = std::sqrt(1.0 - frame_sims[i] * frame_sims[i]);
    }
    std::vector<VideoEmbeds> test{make_video("q", View::Ego, Split::Test, {}, q),
                                  make_video("g", View::Exo, Split::Test, {3}, g)};
    CHECK(frame_retrieval_map(test, 5, RetrievalScope::Ego2Exo) ==
          doctest::Approx(0.6));
  }

  SUBCASE("matches the brute-force reference on random toy sets") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      std::vector<VideoEmbeds> test{
          cluster_video("a", View::Ego, Split::Test, 15, 40 + seed, 0.4),
          cluster_video("b", View::Exo, Split::Test, 12, 50 + seed, 0.4),
          cluster_video("c", View::Ego, Split::Test, 9, 60 + seed, 0.4)};
      for (const auto scope :
           {RetrievalScope::Regular, RetrievalScope::Ego2Exo, RetrievalScope::Exo2Ego})
        CHECK(frame_retrieval_map(test, 5, scope) ==
              doctest::Approx(brute_map(test, 5, scope)).epsilon(1e-12));
    }
  }

  SUBCASE("gallery smaller than k is an error") {
    std::vector<VideoEmbeds> test{
        make_video("a", View::Ego, Split::Test, {}, random_matrix(3, 4, 1)),
        make_video("b", View::Exo, Split::Test, {}, random_matrix(3, 4, 2))};
    CHECK_THROWS_AS(frame_retrieval_map(test, 5, RetrievalScope::Regular), Error);
  }
}

TEST_CASE("phase progression") {
  EvalConfig cfg;

  SUBCASE("hand-computed targets for a 4-frame video with one event") {
    const auto t0 = progression_targets(0, 4, {1});
    CHECK(t0[0] == doctest::Approx(-0.25));
    CHECK(progression_targets(1, 4, {1})[0] == doctest::Approx(0.0));
    CHECK(progression_targets(2, 4, {1})[0] == doctest::Approx(0.25));
    CHECK(progression_targets(3, 4, {1})[0] == doctest::Approx(0.5));
  }

  SUBCASE("embeddings that encode time reach R^2 near 1") {
    // Embed frame i of a T-frame video as a smooth function of i/T.
    auto video = [](const std::string& id, Split split, std::size_t t,
                    std::uint64_t seed) {
      auto rng = make_rng(seed, "prog");
      std::normal_distribution<double> g(0.0, 0.01);
      Tensor2 e(t, 3);
      for (std::size_t i = 0; i < t; ++i) {
        const double p = static_cast<double>(i) / static_cast<double>(t);
        e(i, 0) = p + g(rng);
        e(i, 1) = 1.0 - p + g(rng);
        e(i, 2) = 0.5 + g(rng);
      }
      return make_video(id, View::Ego, split, {t / 3, 2 * t / 3}, std::move(e));
    };
    std::vector<VideoEmbeds> train{video("a", Split::Train, 30, 1),
                                   video("b", Split::Train, 24, 2)};
    std::vector<VideoEmbeds> test{video("c", Split::Test, 27, 3)};
    CHECK(phase_progression(train, test, false, cfg) > 0.9);
  }

  SUBCASE("uninformative embeddings score near zero") {
    std::vector<VideoEmbeds> train{
        make_video("a", View::Ego, Split::Train, {10}, random_matrix(30, 4, 7)),
        make_video("b", View::Ego, Split::Train, {8}, random_matrix(24, 4, 8))};
    std::vector<VideoEmbeds> test{
        make_video("c", View::Ego, Split::Test, {9}, random_matrix(27, 4, 9))};
    const double r2 = phase_progression(train, test, false, cfg);
    CHECK(r2 < 0.2);
    CHECK(r2 > -1.0);
  }

  SUBCASE("modified variant appends the scaled time input") {
    // With only the 0.001 * (i/T) channel carrying signal, the modified
    // variant must outperform the regular one on time-like targets.
    auto video = [](const std::string& id, Split split, std::size_t t,
                    std::uint64_t seed) {
      Tensor2 e = random_matrix(t, 3, seed);
      return make_video(id, View::Ego, split, {t / 2}, std::move(e));
    };
    std::vector<VideoEmbeds> train{video("a", Split::Train, 40, 1),
                                   video("b", Split::Train, 40, 2)};
    std::vector<VideoEmbeds> test{video("c", Split::Test, 40, 3)};
    const double regular = phase_progression(train, test, false, cfg);
    const double modified = phase_progression(train, test, true, cfg);
    CHECK(modified > regular);
    CHECK(modified > 0.9);
  }

  SUBCASE("single-frame videos are rejected") {
    std::vector<VideoEmbeds> train{
        make_video("a", View::Ego, Split::Train, {0}, random_matrix(1, 4, 1))};
    CHECK_THROWS_AS(phase_progression(train, train, false, cfg), Error);
  }
}

TEST_CASE("kendall tau") {
  SUBCASE("identical and reversed sequences give +1 / -1") {
    const Tensor2 x = random_matrix(9, 5, 3);
    Tensor2 rev(9, 5);
    for (std::size_t i = 0; i < 9; ++i)
      for (std::size_t k = 0; k < 5; ++k) rev(i, k) = x(8 - i, k);
    CHECK(kendall_tau({x, x}) == doctest::Approx(1.0));
    CHECK(kendall_tau({x, rev}) == doctest::Approx(-1.0));
  }

  SUBCASE("random embeddings have near-zero mean tau") {
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Tensor2 a = random_matrix(20, 8, 800 + seed);
      const Tensor2 b = random_matrix(22, 8, 900 + seed);
      sum += kendall_tau({a, b});
    }
    CHECK(std::abs(sum / 20.0) < 0.1);
  }

  SUBCASE("matches the brute-force reference") {
    const std::vector<Tensor2> vids{random_matrix(11, 4, 70), random_matrix(9, 4, 71),
                                    random_matrix(13, 4, 72)};
    CHECK(kendall_tau(vids) == doctest::Approx(brute_tau(vids)).epsilon(1e-12));
  }

  SUBCASE("single-frame videos are skipped") {
    const Tensor2 x = random_matrix(9, 5, 3);
    const Tensor2 single = random_matrix(1, 5, 4);
    CHECK(kendall_tau({x, x, single}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(kendall_tau({x, single}), Error);  // nothing left to pair
  }
}

TEST_CASE("metrics are invariant under a global orthogonal rotation") {
  // A Givens-style rotation touching several planes.
  const std::size_t d = 4;
  Tensor2 rot = Tensor2::identity(d);
  auto apply_givens = [&](std::size_t a, std::size_t b, double angle) {
    Tensor2 g = Tensor2::identity(d);
    g(a, a) = std::cos(angle);
    g(b, b) = std::cos(angle);
    g(a, b) = -std::sin(angle);
    g(b, a) = std::sin(angle);
    Tensor2 next(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = 0; k < d; ++k) next(i, j) += rot(i, k) * g(k, j);
    rot = next;
  };
  apply_givens(0, 1, 0.7);
  apply_givens(1, 3, -0.4);
  apply_givens(2, 0, 1.2);

  auto rotate = [&](const VideoEmbeds& v) {
    VideoEmbeds out = v;
    for (std::size_t i = 0; i < v.embeds.rows(); ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double acc = 0;
        for (std::size_t k = 0; k < d; ++k) acc += v.embeds(i, k) * rot(k, j);
        out.embeds(i, j) = acc;
      }
    return out;
  };

  std::vector<VideoEmbeds> train{cluster_video("tr0", View::Ego, Split::Train, 24, 1),
                                 cluster_video("tr1", View::Exo, Split::Train, 21, 2)};
  std::vector<VideoEmbeds> test{cluster_video("te0", View::Ego, Split::Test, 18, 3),
                                cluster_video("te1", View::Exo, Split::Test, 15, 4)};
  std::vector<VideoEmbeds> train_rot, test_rot;
  for (const auto& v : train) train_rot.push_back(rotate(v));
  for (const auto& v : test) test_rot.push_back(rotate(v));

  // Retrieval and tau: exactly invariant on this instance.
  CHECK(frame_retrieval_map(test, 5, RetrievalScope::Regular) ==
        frame_retrieval_map(test_rot, 5, RetrievalScope::Regular));
  std::vector<Tensor2> e, er;
  for (const auto& v : test) e.push_back(v.embeds);
  for (const auto& v : test_rot) er.push_back(v.embeds);
  CHECK(kendall_tau(e) == kendall_tau(er));

  // Classification: the deterministic solver is rotation-equivariant up to
  // floating-point roundoff.
  EvalConfig cfg;
  CHECK(phase_classification(train, test, cfg) ==
        doctest::Approx(phase_classification(train_rot, test_rot, cfg))
            .epsilon(1e-8));
}

TEST_CASE("report formatting") {
  std::vector<VideoEmbeds> train{cluster_video("tr0", View::Ego, Split::Train, 24, 1),
                                 cluster_video("tr1", View::Exo, Split::Train, 21, 2)};
  std::vector<VideoEmbeds> test{cluster_video("te0", View::Ego, Split::Test, 18, 3),
                                cluster_video("te1", View::Exo, Split::Test, 15, 4)};
  EvalConfig cfg;
  cfg.few_shot_repeats = 2;
  const MetricsReport r = evaluate_all(train, test, cfg, 11);
  const std::string report = format_report(r);
  for (const char* key :
       {"f1_regular=", "f1_ego2exo=", "f1_exo2ego=", "f1_fewshot_0.1_mean=",
        "map5_regular=", "map10_ego2exo=", "map15_exo2ego=", "progression_r2=",
        "progression_r2_modified=", "kendall_tau="})
    CHECK(report.find(key) != std::string::npos);
  const std::string csv = format_csv(r);
  CHECK(csv.find("f1_regular,") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);

  const std::string dump = retrieval_dump(test, 5, RetrievalScope::Regular);
  // header + one row per (query, rank).
  CHECK(std::count(dump.begin(), dump.end(), '\n') == 1 + (18 + 15) * 5);
}
