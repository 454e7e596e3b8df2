#include <doctest.h>

#include <cmath>

#include "rpt/envs.hpp"
#include "rpt/special.hpp"

using namespace rpt;
using num::RngStream;

namespace {

LinearEnvConfig env_1d(double a, double b) {
  LinearEnvConfig c;
  c.a = Matrix::Constant(1, 1, a);
  c.b = Matrix::Constant(1, 1, b);
  c.goal = Vector::Zero(1);
  c.horizon = 20;
  return c;
}

Matrix white_image(int side) { return Matrix::Constant(side, side, 1.0); }

}  // namespace

TEST_CASE("linear env: exposed Lipschitz constants") {
  LinearEnvConfig c = env_1d(0.8, 0.2);
  c.reward_scale = 2.0;
  c.action_cost = 1.5;
  LinearLipschitzEnv env(c);
  CHECK(env.lipschitz_f() == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(env.lipschitz_r() == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("linear env: reset determinism and degenerate start") {
  LinearLipschitzEnv env(env_1d(0.8, 0.2));
  const ContextSeed ctx{42, 7};
  const Vector o1 = env.reset(ctx);
  const Vector o2 = env.reset(ctx);
  CHECK(o1[0] == o2[0]);

  // Start fixed at the goal: one zero-action step stays there.
  LinearEnvConfig c = env_1d(0.8, 0.2);
  c.start_lower = Vector::Zero(1);
  c.start_upper = Vector::Zero(1);
  LinearLipschitzEnv at_goal(c);
  at_goal.reset(ctx);
  const StepResult r = at_goal.step(Vector::Zero(1));
  CHECK(r.success);
  CHECK(r.done);
  CHECK_THROWS_AS(at_goal.step(Vector::Zero(1)), std::logic_error);
}

TEST_CASE("linear env: one step of plain arithmetic") {
  LinearEnvConfig c = env_1d(0.8, 0.2);
  c.start_lower = Vector::Constant(1, 1.0);
  c.start_upper = Vector::Constant(1, 1.0);
  LinearLipschitzEnv env(c);
  env.reset(ContextSeed{1, 1});
  const StepResult r = env.step(Vector::Zero(1));
  CHECK(r.state[0] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("linear env: start states cover the start region uniformly") {
  LinearLipschitzEnv env(env_1d(0.8, 0.2));
  int bins[10] = {0};
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const Vector o = env.reset(ContextSeed{99, static_cast<std::uint64_t>(i)});
    int b = static_cast<int>((o[0] + 1.0) / 2.0 * 10.0);
    b = std::clamp(b, 0, 9);
    ++bins[b];
  }
  double chi2 = 0.0;
  for (int b = 0; b < 10; ++b) {
    const double expected = n / 10.0;
    chi2 += (bins[b] - expected) * (bins[b] - expected) / expected;
  }
  // chi-square critical value, 9 dof at p = 0.01
  CHECK(chi2 < 21.666);
}

TEST_CASE("linear env: Lipschitz constants never violated on random audits") {
  RngStream rng(314, {"lip_audit"});
  LinearEnvConfig c;
  c.a = Matrix(2, 2);
  c.a << 0.7, 0.2, -0.1, 0.5;
  c.b = Matrix(2, 2);
  c.b << 0.3, 0.0, 0.1, 0.25;
  c.goal = Vector{{0.4, -0.2}};
  c.reward_scale = 1.7;
  c.action_cost = 0.6;
  LinearLipschitzEnv env(c);
  const double lf = env.lipschitz_f();
  const double lr = env.lipschitz_r();
  for (int i = 0; i < 100000; ++i) {
    const Vector s = 3.0 * rng.normal_vector(2);
    const Vector s2 = 3.0 * rng.normal_vector(2);
    const Vector a = 2.0 * rng.normal_vector(2);
    const Vector a2 = 2.0 * rng.normal_vector(2);
    const double lhs_f = (env.transition(s, a) - env.transition(s2, a2)).norm();
    const double rhs = (s - s2).norm() + (a - a2).norm();
    REQUIRE(lhs_f <= lf * rhs + 1e-9);
    const double lhs_r =
        std::abs(env.lipschitz_reward(s, a) - env.lipschitz_reward(s2, a2));
    REQUIRE(lhs_r <= lr * rhs + 1e-9);
  }
}

TEST_CASE("perturb: zero level is the identity for every channel") {
  RngStream rng(1, {"zero_level"});
  const Matrix img = render_image(Vector{{0.3, 0.4}}, Vector{{0.7, 0.6}}, 16);
  for (ObsChannel ch : {ObsChannel::kShift, ObsChannel::kRotation,
                        ObsChannel::kColor, ObsChannel::kOcclusion,
                        ObsChannel::kErasing, ObsChannel::kMixed}) {
    PerturbationSpec spec;
    spec.channel = ch;
    spec.obs_level = 0.0;
    const Matrix out = perturb_observation(img, spec, rng);
    CHECK((out - img).norm() == 0.0);
  }
  PerturbationSpec ball;
  ball.channel = ObsChannel::kVectorBall;
  ball.obs_level = 0.0;
  const Matrix v = Matrix::Constant(4, 1, 0.5);
  CHECK((perturb_observation(v, ball, rng) - v).norm() == 0.0);
}

TEST_CASE("perturb: vector-ball has exact radius") {
  RngStream rng(2, {"ball"});
  PerturbationSpec spec;
  spec.channel = ObsChannel::kVectorBall;
  spec.obs_level = 0.1;
  const Matrix obs = Matrix::Constant(4, 1, 0.25);
  for (int i = 0; i < 200; ++i) {
    const Matrix out = perturb_observation(obs, spec, rng);
    CHECK(std::abs((out - obs).norm() - 0.1) < 1e-12);
  }
  // Image channels reject vector observations.
  PerturbationSpec shift;
  shift.channel = ObsChannel::kShift;
  shift.obs_level = 0.5;
  CHECK_THROWS_AS(perturb_observation(obs, shift, rng), std::invalid_argument);
}

TEST_CASE("perturb: occlusion block count and area are bounded") {
  RngStream rng(3, {"occlusion"});
  const int side = 32;
  PerturbationSpec spec;
  spec.channel = ObsChannel::kOcclusion;
  spec.obs_level = 1.0;
  const int side_max = std::max(
      1, static_cast<int>(std::lround(20.0 * spec.obs_level * side / 128.0)));
  for (int i = 0; i < 10000; ++i) {
    const Matrix out = perturb_observation(white_image(side), spec, rng);
    const int zeroed = static_cast<int>((out.array() == 0.0).count());
    CHECK(zeroed >= 1);
    CHECK(zeroed <= 3 * side_max * side_max);
  }
}

TEST_CASE("perturb: erasing stays within its area budget") {
  RngStream rng(4, {"erase"});
  const int side = 32;
  PerturbationSpec spec;
  spec.channel = ObsChannel::kErasing;
  spec.obs_level = 1.0;
  const double max_area = 0.1 * spec.obs_level * side * side;
  for (int i = 0; i < 2000; ++i) {
    const Matrix out = perturb_observation(white_image(side), spec, rng);
    const int changed = static_cast<int>((out.array() != 1.0).count());
    CHECK(changed <= static_cast<int>(max_area));
  }
}

TEST_CASE("perturb: image channels preserve shape and [0,1] range") {
  RngStream rng(5, {"range"});
  const Matrix img = render_image(Vector{{0.2, 0.8}}, Vector{{0.6, 0.3}}, 24);
  for (ObsChannel ch : {ObsChannel::kShift, ObsChannel::kRotation,
                        ObsChannel::kColor, ObsChannel::kOcclusion,
                        ObsChannel::kErasing, ObsChannel::kMixed}) {
    for (double level : {0.25, 0.5, 1.0}) {
      PerturbationSpec spec;
      spec.channel = ch;
      spec.obs_level = level;
      for (int i = 0; i < 50; ++i) {
        const Matrix out = perturb_observation(img, spec, rng);
        REQUIRE(out.rows() == 24);
        REQUIRE(out.cols() == 24);
        REQUIRE(out.minCoeff() >= 0.0);
        REQUIRE(out.maxCoeff() <= 1.0);
      }
    }
  }
}

TEST_CASE("perturb: identical spec and stream give bit-identical output") {
  const Matrix img = render_image(Vector{{0.4, 0.4}}, Vector{{0.7, 0.7}}, 16);
  for (ObsChannel ch : {ObsChannel::kShift, ObsChannel::kRotation,
                        ObsChannel::kColor, ObsChannel::kOcclusion,
                        ObsChannel::kErasing, ObsChannel::kMixed}) {
    PerturbationSpec spec;
    spec.channel = ch;
    spec.obs_level = 0.7;
    spec.p_clean = 0.15;
    RngStream r1(44, {"det"});
    RngStream r2(44, {"det"});
    const Matrix a = perturb_observation(img, spec, r1);
    const Matrix b = perturb_observation(img, spec, r2);
    CHECK((a - b).norm() == 0.0);
  }
}

TEST_CASE("perturb_action: identity at zero sigma, MC std, norm lemma") {
  RngStream rng(6, {"act"});
  const Vector a = Vector{{0.3, -0.7}};
  CHECK((perturb_action(a, 0.0, rng) - a).norm() == 0.0);

  const int n = 100000;
  const double sigma = 0.2;
  double sum0 = 0.0, sq0 = 0.0, norm_sum = 0.0, norm_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector out = perturb_action(a, sigma, rng);
    const double d0 = out[0] - a[0];
    sum0 += d0;
    sq0 += d0 * d0;
    const double nn = (out - a).norm();
    norm_sum += nn;
    norm_sq += nn * nn;
  }
  const double mean0 = sum0 / n;
  CHECK(std::abs(std::sqrt(sq0 / n - mean0 * mean0) - sigma) < 0.01 * sigma);

  const double norm_mean = norm_sum / n;
  const double norm_se =
      std::sqrt((norm_sq / n - norm_mean * norm_mean) / static_cast<double>(n));
  CHECK(std::abs(norm_mean - num::chi_mean(2, sigma)) <= 3.0 * norm_se);
  CHECK(num::chi_mean(2, sigma) <= sigma * std::sqrt(2.0));
}

TEST_CASE("render_image: symmetry, peak placement, pixel shifts") {
  const int side = 17;  // odd side puts the center on a pixel
  const Matrix img =
      render_image(Vector{{0.5, 0.5}}, Vector{{0.5, 0.5}}, side);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c)
      CHECK(img(r, c) ==
            doctest::Approx(img(c, side - 1 - r)).epsilon(1e-12));

  const int g = 33;
  const double px = 8.0 / (g - 1);
  const double py = 20.0 / (g - 1);
  const Matrix im2 = render_image(Vector{{px, py}}, Vector{{0.9, 0.9}}, g);
  Eigen::Index pr, pc;
  im2.maxCoeff(&pr, &pc);
  CHECK(pc == 8);
  CHECK(pr == 20);

  // Translating the position by k pixels moves the argmax by k.
  const Matrix im3 =
      render_image(Vector{{(8.0 + 5.0) / (g - 1), py}}, Vector{{0.9, 0.9}}, g);
  im3.maxCoeff(&pr, &pc);
  CHECK(pc == 13);
  CHECK(pr == 20);

  CHECK_THROWS_AS(render_image(Vector{{1.2, 0.0}}, Vector{{0.5, 0.5}}, g),
                  std::invalid_argument);
}

TEST_CASE("image env: rendered observations stay in range and succeed") {
  PointGoalImageEnvConfig cfg;
  cfg.image_side = 16;
  cfg.horizon = 12;
  cfg.success_radius = 0.25;
  PointGoalImageEnv env(cfg);
  const Vector obs = env.reset(ContextSeed{5, 3});
  CHECK(obs.size() == 16 * 16);
  CHECK(obs.minCoeff() >= 0.0);
  CHECK(obs.maxCoeff() <= 1.0);

  // Walking straight toward the goal succeeds well within the horizon.
  bool success = false;
  while (!env.episode_done()) {
    const Vector dir = env.goal() - env.position();
    const StepResult r = env.step(dir / std::max(1e-9, cfg.step_gain));
    success = success || r.success;
  }
  CHECK(success);
}

TEST_CASE("image env: reset positions cover the start region uniformly") {
  PointGoalImageEnvConfig cfg;
  cfg.image_side = 8;
  PointGoalImageEnv env(cfg);
  int bins[16] = {0};
  const int n = 1000;
  const double lo = cfg.start_margin;
  const double span = 1.0 - 2.0 * cfg.start_margin;
  for (int i = 0; i < n; ++i) {
    env.reset(ContextSeed{1234, static_cast<std::uint64_t>(i)});
    const Vector& p = env.position();
    const int bx = std::clamp(static_cast<int>((p[0] - lo) / span * 4.0), 0, 3);
    const int by = std::clamp(static_cast<int>((p[1] - lo) / span * 4.0), 0, 3);
    ++bins[by * 4 + bx];
  }
  double chi2 = 0.0;
  for (int b = 0; b < 16; ++b) {
    const double expected = n / 16.0;
    chi2 += (bins[b] - expected) * (bins[b] - expected) / expected;
  }
  // chi-square critical value, 15 dof at p = 0.01
  CHECK(chi2 < 30.578);
}

TEST_CASE("linear env: states are clipped to the box after each transition") {
  LinearEnvConfig c = env_1d(0.8, 0.2);
  c.state_clip = 10.0;
  LinearLipschitzEnv env(c);
  env.reset(ContextSeed{2, 2});
  const StepResult r = env.step(Vector::Constant(1, 1e6));
  CHECK(r.state[0] == 10.0);
  CHECK(env.transition(Vector::Constant(1, -50.0), Vector::Zero(1))[0] ==
        -10.0);
}
