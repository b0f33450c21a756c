#include <cmath>
#include <vector>

#include "doctest.h"
#include "support/oracles.hpp"
#include "support/testutil.hpp"
#include "tiledit/errors.hpp"
#include "tiledit/schedule.hpp"

using namespace tiledit;

TEST_CASE("build_schedule produces decreasing alpha_bars on the standard config") {
  NoiseSchedule s = NoiseSchedule::build(1000, 50, 1e-4, 2e-2, BetaSpacing::linear);
  CHECK(s.num_steps() == 50);
  for (int t = 1; t <= 50; ++t) {
    CHECK(s.alpha_bar(t) > 0.0);
    CHECK(s.alpha_bar(t) <= 1.0);
    CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
  }
  // Leading spacing: evenly spaced training timesteps starting at step 1.
  for (int t = 1; t <= 50; ++t) {
    CHECK(s.model_timestep(t) == 1 + (t - 1) * 20);
    if (t > 1) CHECK(s.model_timestep(t) > s.model_timestep(t - 1));
  }
}

TEST_CASE("subsampled alpha_bars equal the gathered full-schedule products") {
  NoiseSchedule s = NoiseSchedule::build(1000, 50, 1e-4, 2e-2, BetaSpacing::linear);
  // Independent recomputation of the training-schedule products.
  std::vector<double> full(1000);
  double prod = 1.0;
  for (int j = 1; j <= 1000; ++j) {
    double beta = 1e-4 + (2e-2 - 1e-4) * (j - 1) / 999.0;
    prod *= 1.0 - beta;
    full[j - 1] = prod;
  }
  for (int t = 1; t <= 50; ++t) {
    CHECK(s.alpha_bar(t) == doctest::Approx(full[s.model_timestep(t) - 1]).epsilon(1e-12));
  }
}

TEST_CASE("per-step alphas telescope to alpha_bars") {
  NoiseSchedule s = NoiseSchedule::build(1000, 50, 1e-4, 2e-2, BetaSpacing::linear);
  double prod = 1.0;
  for (int t = 1; t <= 50; ++t) {
    prod *= s.alpha(t);
    CHECK(prod == doctest::Approx(s.alpha_bar(t)).epsilon(50 * 1e-12));
    CHECK(s.beta(t) == doctest::Approx(1.0 - s.alpha(t)).epsilon(1e-15));
  }
}

TEST_CASE("quadratic spacing interpolates sqrt(beta)") {
  NoiseSchedule s = NoiseSchedule::build(10, 10, 1e-4, 2e-2, BetaSpacing::quadratic);
  for (int t = 1; t <= 10; ++t) {
    double r = std::sqrt(1e-4) + (std::sqrt(2e-2) - std::sqrt(1e-4)) * (t - 1) / 9.0;
    CHECK(s.beta(t) == doctest::Approx(r * r).epsilon(1e-12));
  }
}

TEST_CASE("raw-beta constructor matches the direct product") {
  NoiseSchedule s = NoiseSchedule::from_betas({0.1, 0.2});
  CHECK(s.num_steps() == 2);
  CHECK(s.alpha_bar(1) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(s.alpha_bar(2) == doctest::Approx(0.72).epsilon(1e-15));
  CHECK(s.alpha_bar(0) == 1.0);
  CHECK(s.model_timestep(2) == 2);
}

TEST_CASE("degenerate beta=0 schedule keeps alpha_bar at one") {
  NoiseSchedule s = NoiseSchedule::from_betas({0.0});
  CHECK(s.alpha_bar(1) == 1.0);
}

TEST_CASE("build_schedule rejects bad ranges") {
  CHECK_THROWS_AS(NoiseSchedule::build(10, 20, 1e-4, 2e-2, BetaSpacing::linear), Error);
  CHECK_THROWS_AS(NoiseSchedule::build(0, 0, 1e-4, 2e-2, BetaSpacing::linear), Error);
  CHECK_THROWS_AS(NoiseSchedule::build(10, 10, 0.0, 2e-2, BetaSpacing::linear), Error);
  CHECK_THROWS_AS(NoiseSchedule::build(10, 10, 0.5, 0.1, BetaSpacing::linear), Error);
  CHECK_THROWS_AS(NoiseSchedule::build(10, 10, 0.5, 1.0, BetaSpacing::linear), Error);
  try {
    NoiseSchedule::build(10, 20, 1e-4, 2e-2, BetaSpacing::linear);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_range);
  }
}

TEST_CASE("schedule value equality") {
  NoiseSchedule a = NoiseSchedule::build(1000, 50, 1e-4, 2e-2, BetaSpacing::linear);
  NoiseSchedule b = NoiseSchedule::build(1000, 50, 1e-4, 2e-2, BetaSpacing::linear);
  NoiseSchedule c = NoiseSchedule::build(1000, 25, 1e-4, 2e-2, BetaSpacing::linear);
  CHECK(a.same_as(b));
  CHECK_FALSE(a.same_as(c));
}

TEST_CASE("predict_clean zero-noise and no-noise cases") {
  NoiseSchedule s = NoiseSchedule::from_betas({0.36});
  Tensor z = testutil::random_tensor(3, 4, 2, 11);

  Tensor eps = zeros_like(z);
  Tensor z0 = predict_clean(z, eps, 1, s);
  double sa = std::sqrt(s.alpha_bar(1));
  for (std::size_t i = 0; i < z.size(); ++i) {
    CHECK(z0.data()[i] == doctest::Approx(z.data()[i] / sa).epsilon(1e-6));
  }

  // alpha_bar == 1: the latent carries no noise and comes back unchanged.
  NoiseSchedule clean = NoiseSchedule::from_betas({0.0});
  Tensor eps2 = testutil::random_tensor(3, 4, 2, 12);
  Tensor back = predict_clean(z, eps2, 1, clean);
  CHECK(testutil::bit_equal(back, z));
}

TEST_CASE("predict_clean scalar case") {
  NoiseSchedule s = NoiseSchedule::from_betas({0.36});  // alpha_bar = 0.64
  Tensor z = Tensor::full(1, 1, 1, 1.0f);
  Tensor e = Tensor::full(1, 1, 1, 0.5f);
  Tensor z0 = predict_clean(z, e, 1, s);
  CHECK(z0.at(0, 0, 0) == doctest::Approx(0.875).epsilon(1e-6));
  CHECK(z0.at(0, 0, 0) ==
        doctest::Approx(oracle::predict_clean(1.0, 0.5, 0.64)).epsilon(1e-7));
}

TEST_CASE("predict_clean validates shapes and index") {
  NoiseSchedule s = NoiseSchedule::from_betas({0.1});
  Tensor a(2, 2, 1), b(2, 3, 1);
  CHECK_THROWS_AS(predict_clean(a, b, 1, s), Error);
  CHECK_THROWS_AS(predict_clean(a, a, 2, s), Error);
}

TEST_CASE("ddim_step terminal step returns the clean prediction exactly") {
  NoiseSchedule s = NoiseSchedule::build(100, 10, 1e-3, 2e-2, BetaSpacing::linear);
  Tensor z = testutil::random_tensor(4, 4, 3, 21);
  Tensor e = testutil::random_tensor(4, 4, 3, 22);
  Tensor stepped = ddim_step(z, e, e, 1, 0, s);
  Tensor clean = predict_clean(z, e, 1, s);
  for (std::size_t i = 0; i < z.size(); ++i) {
    CHECK(stepped.data()[i] == clean.data()[i]);
  }
}

TEST_CASE("ddim_step matches the scalar reference") {
  NoiseSchedule s = NoiseSchedule::build(1000, 50, 1e-4, 2e-2, BetaSpacing::linear);
  Tensor z = testutil::random_tensor(2, 3, 2, 31);
  Tensor e = testutil::random_tensor(2, 3, 2, 32);
  int t = 30, t_prev = 29;
  Tensor out = ddim_step(z, e, e, t, t_prev, s);
  for (std::size_t i = 0; i < z.size(); ++i) {
    double want = oracle::ddim_step(z.data()[i], e.data()[i], e.data()[i],
                                    s.alpha_bar(t), s.alpha_bar(t_prev));
    CHECK(out.data()[i] == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("ddim_inverse_step matches the scalar reference and identity case") {
  NoiseSchedule s = NoiseSchedule::build(1000, 50, 1e-4, 2e-2, BetaSpacing::linear);
  Tensor z = testutil::random_tensor(2, 3, 2, 41);
  Tensor e = testutil::random_tensor(2, 3, 2, 42);
  int t = 10, t_next = 11;
  Tensor out = ddim_inverse_step(z, e, t, t_next, s);
  for (std::size_t i = 0; i < z.size(); ++i) {
    double want = oracle::ddim_inverse_step(z.data()[i], e.data()[i],
                                            s.alpha_bar(t), s.alpha_bar(t_next));
    CHECK(out.data()[i] == doctest::Approx(want).epsilon(1e-6));
  }

  // Constant alpha_bar (beta = 0): zero eps moves nothing.
  NoiseSchedule flat = NoiseSchedule::from_betas({0.0, 0.0});
  Tensor still = ddim_inverse_step(z, zeros_like(z), 0, 2, flat);
  CHECK(testutil::bit_equal(still, z));
}

TEST_CASE("inverse then forward with the same eps is the identity") {
  NoiseSchedule s = NoiseSchedule::build(1000, 50, 1e-4, 2e-2, BetaSpacing::linear);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Tensor z = testutil::random_tensor(4, 4, 2, seed * 100);
    Tensor e = testutil::random_tensor(4, 4, 2, seed * 100 + 1);
    for (auto [t, t_next] : std::vector<std::pair<int, int>>{{0, 1}, {10, 11}, {25, 40}, {49, 50}}) {
      Tensor up = ddim_inverse_step(z, e, t, t_next, s);
      Tensor back = ddim_step(up, e, e, t_next, t, s);
      CHECK(testutil::max_rel_error(back, z) < 1e-6f);
    }
  }
}

TEST_CASE("step index validation") {
  NoiseSchedule s = NoiseSchedule::from_betas({0.1, 0.1});
  Tensor z(1, 1, 1), e(1, 1, 1);
  CHECK_THROWS_AS(ddim_step(z, e, e, 1, 1, s), Error);
  CHECK_THROWS_AS(ddim_step(z, e, e, 3, 1, s), Error);
  CHECK_THROWS_AS(ddim_inverse_step(z, e, 2, 2, s), Error);
  CHECK_THROWS_AS(ddim_inverse_step(z, e, 2, 3, s), Error);
}
