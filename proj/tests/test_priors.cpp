#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "burstsr/error.hpp"
#include "burstsr/priors.hpp"
#include "test_support.hpp"

namespace burstsr {
namespace {

double prox_objective(const Image& x, const Image& v, double t) {
  return 0.5 * squared_norm(x - v) + t * total_variation(x);
}

// Exact 1-D TV prox by enumeration. Each gap between neighbours is either
// merged or a jump with a fixed sign; given that pattern every segment value
// has a closed form, and the true minimiser is one of the candidates.
std::vector<double> tv1d_brute_force(const std::vector<double>& v, double t) {
  const int n = static_cast<int>(v.size());
  const int gaps = n - 1;
  int patterns = 1;
  for (int g = 0; g < gaps; ++g) patterns *= 3;

  auto objective = [&](const std::vector<double>& x) {
    double f = 0.0;
    for (int i = 0; i < n; ++i) f += 0.5 * (x[i] - v[i]) * (x[i] - v[i]);
    for (int i = 0; i + 1 < n; ++i) f += t * std::abs(x[i + 1] - x[i]);
    return f;
  };

  std::vector<double> best;
  double best_f = std::numeric_limits<double>::infinity();
  std::vector<int> sign(gaps);
  for (int p = 0; p < patterns; ++p) {
    int code = p;
    for (int g = 0; g < gaps; ++g, code /= 3) sign[g] = code % 3 - 1;  // 0 means merged
    std::vector<double> x(n);
    int start = 0;
    while (start < n) {
      int end = start;
      while (end < gaps && sign[end] == 0) ++end;  // segment [start, end]
      double mean = 0.0;
      for (int i = start; i <= end; ++i) mean += v[i];
      const double len = end - start + 1;
      mean /= len;
      const double s_in = start > 0 ? sign[start - 1] : 0.0;
      const double s_out = end < gaps ? sign[end] : 0.0;
      for (int i = start; i <= end; ++i) x[i] = mean - t * (s_in - s_out) / len;
      start = end + 1;
    }
    const double f = objective(x);
    if (f < best_f) {
      best_f = f;
      best = x;
    }
  }
  return best;
}

// Dense ADMM on 1/2 |x - v|^2 + t sum_p |(D x)_p|_2 for a single channel.
Image tv_admm_oracle(const Image& v, double t, int iters) {
  const Index h = v.height(), w = v.width(), n = h * w;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2 * n, n);
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      const Index p = y * w + x;
      if (x + 1 < w) {
        d(2 * p, p + 1) = 1.0;
        d(2 * p, p) = -1.0;
      }
      if (y + 1 < h) {
        d(2 * p + 1, p + w) = 1.0;
        d(2 * p + 1, p) = -1.0;
      }
    }
  }
  const double rho = 1.0;
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n) + rho * d.transpose() * d;
  const Eigen::LLT<Eigen::MatrixXd> llt(lhs);
  const Eigen::VectorXd vv = v.array().matrix();
  Eigen::VectorXd x = vv, z = d * x, u = Eigen::VectorXd::Zero(2 * n);
  for (int k = 0; k < iters; ++k) {
    x = llt.solve(vv + rho * d.transpose() * (z - u));
    const Eigen::VectorXd dx = d * x;
    for (Index p = 0; p < n; ++p) {
      const Eigen::Vector2d a = dx.segment<2>(2 * p) + u.segment<2>(2 * p);
      const double len = a.norm();
      z.segment<2>(2 * p) = len > t / rho ? Eigen::Vector2d((1.0 - t / (rho * len)) * a)
                                          : Eigen::Vector2d::Zero();
    }
    u += dx - z;
  }
  Image out(v.shape());
  for (Index p = 0; p < n; ++p) out.array()[p] = x[p];
  return out;
}

TEST(IdentityPrior, ProxReturnsInput) {
  std::mt19937_64 rng(1);
  const Image v = testing::random_image(4, 5, 3, rng);
  IdentityPrior prior;
  EXPECT_TRUE((prior.prox(v, 0.7).array() == v.array()).all());
  EXPECT_EQ(prior.value(v), 0.0);
  EXPECT_THROW(prior.prox(v, -1.0), ParameterError);
}

TEST(TotalVariation, ValueByHand) {
  Image x(2, 2, 1);
  x(0, 1, 0) = 3.0;
  x(1, 0, 0) = 4.0;
  // p(0,0): grad (3, 4) -> 5; p(0,1): (0, -3) -> 3; p(1,0): (-4, 0) -> 4; p(1,1): 0.
  EXPECT_DOUBLE_EQ(total_variation(x), 12.0);
}

TEST(TvProx, ZeroStrengthAndConstantsAreFixed) {
  std::mt19937_64 rng(2);
  const Image v = testing::random_image(6, 6, 3, rng);
  TotalVariationPrior tv;
  EXPECT_TRUE((tv.prox(v, 0.0).array() == v.array()).all());
  const Image c = Image::constant(6, 6, 3, 0.42);
  EXPECT_LE((tv.prox(c, 0.5).array() - 0.42).abs().maxCoeff(), 1e-12);
}

TEST(TvProx, StepMatchesBruteForce) {
  const std::vector<double> v{0.1, 0.0, 0.2, 0.1, 0.9, 1.0, 0.8, 0.95};
  TotalVariationPrior tv(5000, 1e-12);
  for (double t : {0.05, 0.1, 0.3}) {
    Image img(1, 8, 1);
    for (int i = 0; i < 8; ++i) img(0, i, 0) = v[i];
    const Image out = tv.prox(img, t);
    const std::vector<double> exact = tv1d_brute_force(v, t);
    for (int i = 0; i < 8; ++i) EXPECT_NEAR(out(0, i, 0), exact[i], 1e-6) << "t=" << t;
  }
}

TEST(TvProx, MatchesAdmmOracleOn3x3) {
  std::mt19937_64 rng(3);
  const Image v = testing::random_image(3, 3, 1, rng, 0.0, 1.0);
  TotalVariationPrior tv(20000, 1e-13);
  for (double t : {0.05, 0.2}) {
    const Image oracle = tv_admm_oracle(v, t, 20000);
    EXPECT_LE((tv.prox(v, t).array() - oracle.array()).abs().maxCoeff(), 1e-5) << "t=" << t;
  }
}

TEST(TvProx, DefaultSettingsAreCloseToExact) {
  std::mt19937_64 rng(4);
  const Image v = testing::random_image(3, 3, 1, rng, 0.0, 1.0);
  const Image oracle = tv_admm_oracle(v, 0.1, 20000);
  EXPECT_LE((TotalVariationPrior().prox(v, 0.1).array() - oracle.array()).abs().maxCoeff(), 1e-3);
}

TEST(TvProx, NonExpansiveAndDecreasesObjective) {
  std::mt19937_64 rng(5);
  TotalVariationPrior tv(500, 1e-10);
  for (int trial = 0; trial < 10; ++trial) {
    const Image a = testing::random_image(8, 8, 3, rng), b = testing::random_image(8, 8, 3, rng);
    const double t = 0.05 + 0.05 * trial;
    const Image pa = tv.prox(a, t), pb = tv.prox(b, t);
    EXPECT_LE(norm(pa - pb), norm(a - b) * (1.0 + 1e-6));
    EXPECT_LE(prox_objective(pa, a, t), prox_objective(a, a, t));
  }
}

TEST(TvProx, ChannelsAreIndependent) {
  std::mt19937_64 rng(6);
  const Image v = testing::random_image(5, 5, 3, rng);
  TotalVariationPrior tv(300, 1e-10);
  const Image joint = tv.prox(v, 0.2);
  for (Index c = 0; c < 3; ++c) {
    const Image single = tv.prox(v.channel(c), 0.2);
    EXPECT_LE((joint.channel(c).array() - single.array()).abs().maxCoeff(), 1e-8);
  }
}

TEST(Smoother, ZeroStrengthAndConstants) {
  std::mt19937_64 rng(7);
  const Image v = testing::random_image(7, 7, 2, rng);
  GaussianSmootherPrior s;
  EXPECT_TRUE((s.prox(v, 0.0).array() == v.array()).all());
  EXPECT_LE((s.prox(Image::constant(7, 7, 2, 0.3), 1.5).array() - 0.3).abs().maxCoeff(), 1e-12);
  EXPECT_FALSE(s.has_value());
  EXPECT_FALSE(s.value(v).has_value());
}

TEST(Smoother, ImpulseResponseIsNormalizedGaussian) {
  Image impulse(11, 11, 1);
  impulse(5, 5, 0) = 1.0;
  const Image out = GaussianSmootherPrior().prox(impulse, 1.0);
  double k[7], sum = 0.0;
  for (int i = -3; i <= 3; ++i) sum += k[i + 3] = std::exp(-0.5 * i * i);
  for (double& v : k) v /= sum;
  for (Index y = 0; y < 11; ++y) {
    for (Index x = 0; x < 11; ++x) {
      const Index dy = y - 5, dx = x - 5;
      const double expect =
          std::abs(dy) <= 3 && std::abs(dx) <= 3 ? k[dy + 3] * k[dx + 3] : 0.0;
      EXPECT_NEAR(out(y, x, 0), expect, 1e-6);
    }
  }
}

TEST(PriorFactory, NamesAndErrors) {
  EXPECT_EQ(make_prior("tv")->name(), "tv");
  EXPECT_EQ(make_prior("identity")->name(), "identity");
  EXPECT_EQ(make_prior("none")->name(), "identity");
  EXPECT_EQ(make_prior("smoother")->name(), "smoother");
  EXPECT_THROW(make_prior("dncnn"), Error);
  EXPECT_THROW(TotalVariationPrior(0), ParameterError);
}

}  // namespace
}  // namespace burstsr
