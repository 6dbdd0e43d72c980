#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "alignment.hpp"
#include "rng.hpp"

using namespace ae2;

namespace {

Tensor2 random_matrix(std::size_t r, std::size_t c, std::uint64_t seed,
                      double lo = 0.0, double hi = 3.0) {
  auto rng = make_rng(seed, "alignment_test");
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor2 m(r, c);
  for (double& v : m.data()) v = u(rng);
  return m;
}

// Test-only oracle: exhaustive enumeration over all monotone paths from
// (1,1) to (M,N), accumulating forward like the DP does.
void enumerate_paths(const Tensor2& c, std::size_t i, std::size_t j, double acc,
                     double* best) {
  acc += c(i, j);
  if (i + 1 == c.rows() && j + 1 == c.cols()) {
    *best = std::min(*best, acc);
    return;
  }
  if (i + 1 < c.rows() && j + 1 < c.cols())
    enumerate_paths(c, i + 1, j + 1, acc, best);
  if (i + 1 < c.rows()) enumerate_paths(c, i + 1, j, acc, best);
  if (j + 1 < c.cols()) enumerate_paths(c, i, j + 1, acc, best);
}

double brute_force_dtw(const CostMatrix& cm) {
  double best = std::numeric_limits<double>::infinity();
  enumerate_paths(cm.c, 0, 0, 0.0, &best);
  return best;
}

}  // namespace

TEST_CASE("normalize_rows") {
  const Tensor2 n = normalize_rows(Tensor2::from_rows({{3.0, 4.0}}));
  CHECK(n(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(n(0, 1) == doctest::Approx(0.8).epsilon(1e-15));

  const Tensor2 unit = Tensor2::from_rows({{1.0, 0.0}, {0.0, -1.0}});
  const Tensor2 same = normalize_rows(unit);
  for (std::size_t i = 0; i < unit.size(); ++i)
    CHECK(same.data()[i] == doctest::Approx(unit.data()[i]).epsilon(1e-15));

  CHECK_THROWS_AS(normalize_rows(Tensor2::from_rows({{0.0, 0.0}})), Error);
}

TEST_CASE("cost matrix values and row-stochastic invariant") {
  SUBCASE("single gallery frame gives zero cost") {
    const Tensor2 x = random_matrix(5, 3, 21, -1, 1);
    const Tensor2 y = random_matrix(1, 3, 22, -1, 1);
    const CostMatrix cm = cost_matrix(x, y, 0.1);
    for (std::size_t i = 0; i < 5; ++i) CHECK(cm.c(i, 0) == doctest::Approx(0.0));
  }

  SUBCASE("equal dot products give ln N") {
    // All y rows identical: every softmax is uniform over N = 4.
    const Tensor2 x = random_matrix(3, 4, 23, -1, 1);
    Tensor2 y(4, 4);
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 4; ++k) y(j, k) = (k == 0 ? 2.0 : -0.5);
    const CostMatrix cm = cost_matrix(x, y, 0.1);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        CHECK(cm.c(i, j) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }

  SUBCASE("orthogonal two-frame case matches the closed form") {
    const Tensor2 x = Tensor2::from_rows({{1.0, 0.0}});
    const Tensor2 y = Tensor2::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    const CostMatrix cm = cost_matrix(x, y, 0.1);
    CHECK(cm.c(0, 0) == doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-9));
    CHECK(cm.c(0, 1) == doctest::Approx(std::log1p(std::exp(10.0))).epsilon(1e-9));
  }

  SUBCASE("exp(-C) rows always sum to 1") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Tensor2 x = random_matrix(6, 8, 100 + seed, -2, 2);
      const Tensor2 y = random_matrix(9, 8, 200 + seed, -2, 2);
      const CostMatrix cm = cost_matrix(x, y, 0.1);
      for (std::size_t i = 0; i < cm.M(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < cm.N(); ++j) sum += std::exp(-cm.c(i, j));
        CHECK(std::abs(sum - 1.0) < 1e-9);
        for (std::size_t j = 0; j < cm.N(); ++j) CHECK(cm.c(i, j) >= 0.0);
      }
    }
  }
}

TEST_CASE("smooth_min") {
  SUBCASE("singleton is exact for any gamma") {
    for (double v : {-3.0, 0.0, 7.5})
      for (double g : {1e-3, 0.1, 1.0}) {
        const double vals[1] = {v};
        CHECK(smooth_min(vals, g) == doctest::Approx(v).epsilon(1e-15));
      }
  }
  SUBCASE("two zeros at gamma 0.1") {
    const double vals[2] = {0.0, 0.0};
    CHECK(smooth_min(vals, 0.1) ==
          doctest::Approx(-0.1 * std::log(2.0)).epsilon(1e-15));
  }
  SUBCASE("dominated term vanishes") {
    const double vals[2] = {0.0, 10.0};
    CHECK(std::abs(smooth_min(vals, 0.1)) < 1e-12);
  }
  SUBCASE("bounds: below min, within gamma ln n") {
    auto rng = make_rng(31, "sm");
    std::uniform_real_distribution<double> u(-2, 2);
    for (double g : {1e-3, 0.1, 1.0}) {
      for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> vals(1 + rep % 7);
        for (double& v : vals) v = u(rng);
        const double m = *std::min_element(vals.begin(), vals.end());
        const double s = smooth_min(vals, g);
        CHECK(s <= m + 1e-12);
        CHECK(m - s <= g * std::log(static_cast<double>(vals.size())) + 1e-12);
      }
    }
  }
  SUBCASE("empty list is rejected") {
    CHECK_THROWS_AS(smooth_min(std::span<const double>{}, 0.1), Error);
  }
}

TEST_CASE("hard_dtw oracle") {
  SUBCASE("1xN walks the row") {
    CostMatrix cm;
    cm.c = Tensor2::from_rows({{1.0, 2.0, 3.0}});
    const HardPath p = hard_dtw(cm);
    CHECK(p.cost == 6.0);
    REQUIRE(p.path.size() == 3);
    CHECK(p.path[0] == std::pair<std::size_t, std::size_t>{1, 1});
    CHECK(p.path[2] == std::pair<std::size_t, std::size_t>{1, 3});
  }
  SUBCASE("2x2 diagonal beats the detours") {
    CostMatrix cm;
    cm.c = Tensor2::from_rows({{1.0, 5.0}, {5.0, 1.0}});
    const HardPath p = hard_dtw(cm);
    CHECK(p.cost == 2.0);
    REQUIRE(p.path.size() == 2);
    CHECK(p.path[0] == std::pair<std::size_t, std::size_t>{1, 1});
    CHECK(p.path[1] == std::pair<std::size_t, std::size_t>{2, 2});
  }
  SUBCASE("equals exhaustive enumeration for M,N <= 6") {
    auto rng = make_rng(41, "sizes");
    std::uniform_int_distribution<std::size_t> dim(1, 6);
    for (int rep = 0; rep < 300; ++rep) {
      CostMatrix cm;
      cm.c = random_matrix(dim(rng), dim(rng), 1000 + rep);
      CHECK(hard_dtw(cm).cost == brute_force_dtw(cm));
    }
  }
}

TEST_CASE("dtw_forward") {
  SUBCASE("1x1 equals the single cost") {
    CostMatrix cm;
    cm.c = Tensor2::from_rows({{0.7}});
    CHECK(dtw_forward(cm, 0.1).loss == doctest::Approx(0.7).epsilon(1e-15));
  }
  SUBCASE("gamma -> 0 recovers the hard diagonal") {
    CostMatrix cm;
    cm.c = Tensor2::from_rows({{1.0, 5.0}, {5.0, 1.0}});
    CHECK(dtw_forward(cm, 1e-6).loss == doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("soft loss sandwiched under the hard cost") {
    auto rng = make_rng(43, "sizes2");
    std::uniform_int_distribution<std::size_t> dim(1, 12);
    for (double gamma : {1e-3, 0.1, 1.0}) {
      for (int rep = 0; rep < 60; ++rep) {
        CostMatrix cm;
        const std::size_t m = dim(rng), n = dim(rng);
        cm.c = random_matrix(m, n, 5000 + rep);
        const double hard = hard_dtw(cm).cost;
        const double soft = dtw_forward(cm, gamma).loss;
        CHECK(hard - soft >= -1e-9);
        CHECK(hard - soft <=
              gamma * static_cast<double>(m + n) * std::log(3.0) + 1e-9);
      }
    }
  }
}

TEST_CASE("dtw_backward") {
  SUBCASE("1x1 gradient is one") {
    CostMatrix cm;
    cm.c = Tensor2::from_rows({{0.7}});
    AlignmentResult res = dtw_forward(cm, 0.1);
    const Tensor2& g = dtw_backward(res, cm);
    CHECK(g(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(res.grad_c(0, 0) == g(0, 0));
  }

  SUBCASE("matches central differences on random 5x7 matrices") {
    const double h = 1e-6;
    for (int rep = 0; rep < 5; ++rep) {
      CostMatrix cm;
      cm.c = random_matrix(5, 7, 7000 + rep);
      AlignmentResult res = dtw_forward(cm, 0.1);
      const Tensor2 g = dtw_backward(res, cm);
      double gsum = 0.0;
      for (std::size_t i = 0; i < cm.c.size(); ++i) {
        CostMatrix cp = cm, cmn = cm;
        cp.c.data()[i] += h;
        cmn.c.data()[i] -= h;
        const double fd =
            (dtw_forward(cp, 0.1).loss - dtw_forward(cmn, 0.1).loss) / (2 * h);
        // 1e-6 relative where central differences can resolve the entry;
        // below that the FD roundoff floor (~1e-9 at this loss scale)
        // dominates, so compare absolutely.
        CHECK(std::abs(g.data()[i] - fd) <=
              1e-6 * std::max(1e-2, std::abs(g.data()[i]) + std::abs(fd)));
        CHECK(g.data()[i] >= 0.0);
        gsum += g.data()[i];
      }
      // Expected soft path length lies within the path-length envelope.
      CHECK(gsum >= 5.0 - 1e-6);
      CHECK(gsum <= 11.0 + 1e-6);
    }
  }

  SUBCASE("gamma -> 0 concentrates on the unique optimal path") {
    CostMatrix cm;
    cm.c = Tensor2::from_rows({{1.0, 5.0, 9.0}, {5.0, 1.0, 6.0}, {9.0, 6.0, 1.0}});
    AlignmentResult res = dtw_forward(cm, 1e-4);
    const Tensor2 g = dtw_backward(res, cm);
    const HardPath hard = hard_dtw(cm);
    Tensor2 indicator(3, 3);
    for (const auto& [i, j] : hard.path) indicator(i - 1, j - 1) = 1.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      CHECK(g.data()[i] == doctest::Approx(indicator.data()[i]).epsilon(1e-8));
  }
}

TEST_CASE("align_loss") {
  SUBCASE("one identical frame each: zero loss") {
    const Tensor2 x = Tensor2::from_rows({{0.3, -0.4, 0.1}});
    const AlignGradients g = align_loss(x, x, 0.1, 0.1);
    CHECK(g.loss == doctest::Approx(0.0));
  }

  SUBCASE("embedding gradients match finite differences") {
    const double h = 1e-6;
    Tensor2 x = random_matrix(4, 3, 9001, -1, 1);
    Tensor2 y = random_matrix(5, 3, 9002, -1, 1);
    const AlignGradients g = align_loss(x, y, 0.1, 0.1);
    for (std::size_t i = 0; i < x.size(); ++i) {
      Tensor2 xp = x, xm = x;
      xp.data()[i] += h;
      xm.data()[i] -= h;
      const double fd =
          (align_loss(xp, y, 0.1, 0.1).loss - align_loss(xm, y, 0.1, 0.1).loss) /
          (2 * h);
      const double rel = std::abs(g.dx.data()[i] - fd) /
                         std::max(1e-8, std::abs(g.dx.data()[i]) + std::abs(fd));
      CHECK(rel < 1e-4);
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
      Tensor2 yp = y, ym = y;
      yp.data()[i] += h;
      ym.data()[i] -= h;
      const double fd =
          (align_loss(x, yp, 0.1, 0.1).loss - align_loss(x, ym, 0.1, 0.1).loss) /
          (2 * h);
      const double rel = std::abs(g.dy.data()[i] - fd) /
                         std::max(1e-8, std::abs(g.dy.data()[i]) + std::abs(fd));
      CHECK(rel < 1e-4);
    }
  }

  SUBCASE("loss invariant to positive row rescaling") {
    Tensor2 x = random_matrix(4, 3, 9003, -1, 1);
    const Tensor2 y = random_matrix(5, 3, 9004, -1, 1);
    const double base = align_loss(x, y, 0.1, 0.1).loss;
    for (std::size_t k = 0; k < 3; ++k) x(1, k) *= 7.5;
    for (std::size_t k = 0; k < 3; ++k) x(3, k) *= 0.01;
    CHECK(align_loss(x, y, 0.1, 0.1).loss == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("sync_map") {
  SUBCASE("identity on identical sequences") {
    const Tensor2 x = random_matrix(6, 4, 51, -1, 1);
    const SyncMap sm = sync_map(x, x);
    for (std::size_t i = 0; i < 6; ++i) CHECK(sm.map[i] == i);
  }
  SUBCASE("reversal maps i to T-1-i") {
    const Tensor2 x = random_matrix(6, 4, 52, -1, 1);
    Tensor2 rev(6, 4);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t k = 0; k < 4; ++k) rev(i, k) = x(5 - i, k);
    const SyncMap sm = sync_map(x, rev);
    for (std::size_t i = 0; i < 6; ++i) CHECK(sm.map[i] == 5 - i);
  }
  SUBCASE("matches a brute-force cosine scan") {
    const Tensor2 x = random_matrix(7, 5, 53, -1, 1);
    const Tensor2 y = random_matrix(9, 5, 54, -1, 1);
    const SyncMap sm = sync_map(x, y);
    for (std::size_t i = 0; i < 7; ++i) {
      double best = -1e300;
      std::size_t arg = 0;
      for (std::size_t j = 0; j < 9; ++j) {
        double dot = 0, nx = 0, ny = 0;
        for (std::size_t k = 0; k < 5; ++k) {
          dot += x(i, k) * y(j, k);
          nx += x(i, k) * x(i, k);
          ny += y(j, k) * y(j, k);
        }
        const double cos = dot / std::sqrt(nx * ny);
        if (cos > best) {
          best = cos;
          arg = j;
        }
      }
      CHECK(sm.map[i] == arg);
    }
  }
}
