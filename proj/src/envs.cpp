#include "rpt/envs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "rpt/linalg.hpp"

namespace rpt {

ObsChannel parse_channel(const std::string& name) {
  if (name == "none") return ObsChannel::kNone;
  if (name == "vector_ball") return ObsChannel::kVectorBall;
  if (name == "shift") return ObsChannel::kShift;
  if (name == "rotation") return ObsChannel::kRotation;
  if (name == "color") return ObsChannel::kColor;
  if (name == "occlusion") return ObsChannel::kOcclusion;
  if (name == "erasing") return ObsChannel::kErasing;
  if (name == "mixed") return ObsChannel::kMixed;
  throw std::invalid_argument("unknown observation channel '" + name + "'");
}

std::string channel_name(ObsChannel channel) {
  switch (channel) {
    case ObsChannel::kNone: return "none";
    case ObsChannel::kVectorBall: return "vector_ball";
    case ObsChannel::kShift: return "shift";
    case ObsChannel::kRotation: return "rotation";
    case ObsChannel::kColor: return "color";
    case ObsChannel::kOcclusion: return "occlusion";
    case ObsChannel::kErasing: return "erasing";
    case ObsChannel::kMixed: return "mixed";
  }
  throw std::invalid_argument("unknown observation channel");
}

void PerturbationSpec::validate() const {
  if (!(obs_level >= 0.0 && obs_level <= 1.0))
    throw std::invalid_argument("perturbation: obs_level outside [0, 1]");
  if (!(action_sigma >= 0.0))
    throw std::invalid_argument("perturbation: action_sigma must be >= 0");
  if (!(p_clean >= 0.0 && p_clean <= 1.0))
    throw std::invalid_argument("perturbation: p_clean outside [0, 1]");
}

LinearLipschitzEnv::LinearLipschitzEnv(LinearEnvConfig config)
    : config_(std::move(config)) {
  if (config_.a.rows() != config_.a.cols())
    throw std::invalid_argument("linear env: A must be square");
  if (config_.b.rows() != config_.a.rows())
    throw std::invalid_argument("linear env: B row dim mismatch");
  if (config_.goal.size() != config_.a.rows())
    throw std::invalid_argument("linear env: goal dim mismatch");
  if (!(config_.reward_scale > 0.0))
    throw std::invalid_argument("linear env: reward scale must be > 0");
  if (config_.action_cost < 0.0)
    throw std::invalid_argument("linear env: action cost must be >= 0");
  if (config_.start_lower.size() == 0) {
    config_.start_lower = Vector::Constant(config_.a.rows(), -1.0);
    config_.start_upper = Vector::Constant(config_.a.rows(), 1.0);
  }
  if (config_.start_lower.size() != config_.a.rows() ||
      config_.start_upper.size() != config_.a.rows())
    throw std::invalid_argument("linear env: start box dim mismatch");
  lipschitz_f_ = std::max(num::spectral_norm(config_.a),
                          num::spectral_norm(config_.b));
  lipschitz_r_ = config_.reward_scale * std::max(1.0, config_.action_cost);
}

Vector LinearLipschitzEnv::sample_start(const ContextSeed& context) const {
  num::RngStream rng = context.stream();
  Vector s(config_.a.rows());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    s[i] = rng.uniform(config_.start_lower[i], config_.start_upper[i]);
  return s;
}

Vector LinearLipschitzEnv::reset(const ContextSeed& context) {
  state_ = sample_start(context);
  t_ = 0;
  done_ = false;
  prev_action_ = Vector::Zero(action_dim());
  prev_prev_action_ = Vector::Zero(action_dim());
  progress_.start((state_ - config_.goal).norm(), config_.success_radius,
                  config_.rewards.milestones);
  return state_;
}

Vector LinearLipschitzEnv::transition(const Vector& s, const Vector& a) const {
  Vector next = config_.a * s + config_.b * a;
  return next.cwiseMax(-config_.state_clip).cwiseMin(config_.state_clip);
}

double LinearLipschitzEnv::lipschitz_reward(const Vector& s,
                                            const Vector& a) const {
  return -config_.reward_scale *
         ((s - config_.goal).norm() + config_.action_cost * a.norm());
}

StepResult LinearLipschitzEnv::step(const Vector& action) {
  if (done_) throw std::logic_error("linear env: step after episode end");
  if (action.size() != action_dim())
    throw std::invalid_argument("linear env: action dim mismatch");
  const Vector prev_state = state_;
  state_ = transition(state_, action);
  ++t_;
  const double dist = (state_ - config_.goal).norm();
  const bool success = dist < config_.success_radius;
  done_ = success || t_ >= config_.horizon;
  progress_.update(dist);

  StepResult r;
  r.reward = dense_reward(prev_state, state_, prev_action_, prev_prev_action_,
                          action, config_.goal, progress_.fraction(), success,
                          config_.rewards);
  prev_prev_action_ = prev_action_;
  prev_action_ = action;
  r.observation = state_;
  r.state = state_;
  r.success = success;
  r.done = done_;
  return r;
}

PointGoalImageEnv::PointGoalImageEnv(PointGoalImageEnvConfig config)
    : config_(std::move(config)) {
  if (config_.image_side < 2)
    throw std::invalid_argument("image env: side must be >= 2");
  if (!(config_.start_margin >= 0.0 && config_.start_margin < 0.5))
    throw std::invalid_argument("image env: start margin outside [0, 0.5)");
}

Vector PointGoalImageEnv::render_observation() const {
  return flatten_image(
      render_image(position_, goal_, config_.image_side, config_.blob_width));
}

Vector PointGoalImageEnv::reset(const ContextSeed& context) {
  num::RngStream rng = context.stream();
  const double lo = config_.start_margin;
  const double hi = 1.0 - config_.start_margin;
  position_ = Vector{{rng.uniform(lo, hi), rng.uniform(lo, hi)}};
  goal_ = Vector{{rng.uniform(lo, hi), rng.uniform(lo, hi)}};
  t_ = 0;
  done_ = false;
  prev_action_ = Vector::Zero(2);
  prev_prev_action_ = Vector::Zero(2);
  progress_.start((position_ - goal_).norm(), config_.success_radius,
                  config_.rewards.milestones);
  return render_observation();
}

StepResult PointGoalImageEnv::step(const Vector& action) {
  if (done_) throw std::logic_error("image env: step after episode end");
  if (action.size() != 2)
    throw std::invalid_argument("image env: action dim mismatch");
  const Vector prev_position = position_;
  const Vector bounded = action.cwiseMax(-1.0).cwiseMin(1.0);
  position_ = (position_ + config_.step_gain * bounded)
                  .cwiseMax(0.0)
                  .cwiseMin(1.0);
  ++t_;
  const double dist = (position_ - goal_).norm();
  const bool success = dist < config_.success_radius;
  done_ = success || t_ >= config_.horizon;
  progress_.update(dist);

  StepResult r;
  r.reward = dense_reward(prev_position, position_, prev_action_,
                          prev_prev_action_, action, goal_,
                          progress_.fraction(), success, config_.rewards);
  prev_prev_action_ = prev_action_;
  prev_action_ = action;
  r.observation = render_observation();
  r.state = position_;
  r.success = success;
  r.done = done_;
  return r;
}

Matrix render_image(const Vector& position, const Vector& goal, int side,
                    double blob_width) {
  if (side < 2) throw std::invalid_argument("render: side must be >= 2");
  if (position.size() != 2 || goal.size() != 2)
    throw std::invalid_argument("render: position/goal must be 2-d");
  auto in_box = [](const Vector& v) {
    return v[0] >= 0.0 && v[0] <= 1.0 && v[1] >= 0.0 && v[1] <= 1.0;
  };
  if (!in_box(position) || !in_box(goal))
    throw std::invalid_argument("render: position/goal outside [0,1]^2");

  const double px = position[0] * (side - 1);
  const double py = position[1] * (side - 1);
  const double gx = goal[0] * (side - 1);
  const double gy = goal[1] * (side - 1);
  const double inv = 1.0 / (2.0 * blob_width * blob_width);
  Matrix img(side, side);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const double dp = (c - px) * (c - px) + (r - py) * (r - py);
      const double dg = (c - gx) * (c - gx) + (r - gy) * (r - gy);
      img(r, c) = std::max(std::exp(-dp * inv), 0.5 * std::exp(-dg * inv));
    }
  }
  return img;
}

namespace {

Matrix shift_image(const Matrix& img, double level, num::RngStream& rng) {
  const int side = static_cast<int>(img.rows());
  const int dy = static_cast<int>(std::floor(rng.uniform(0.0, 0.3 * level * side)));
  const int dx = static_cast<int>(std::floor(rng.uniform(0.0, 0.3 * level * side)));
  Matrix out = Matrix::Zero(side, side);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      const int sr = r + dy;
      const int sc = c + dx;
      if (sr < side && sc < side) out(r, c) = img(sr, sc);
    }
  return out;
}

Matrix rotate_image(const Matrix& img, double level, num::RngStream& rng) {
  const int side = static_cast<int>(img.rows());
  const double max_deg = 30.0 * level;
  const double theta = rng.uniform(0.0, max_deg) * std::numbers::pi / 180.0;
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const double ctr = (side - 1) / 2.0;
  Matrix out = Matrix::Zero(side, side);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      const double x = c - ctr;
      const double y = r - ctr;
      const int sc = static_cast<int>(std::lround(ct * x - st * y + ctr));
      const int sr = static_cast<int>(std::lround(st * x + ct * y + ctr));
      if (sr >= 0 && sr < side && sc >= 0 && sc < side) out(r, c) = img(sr, sc);
    }
  return out;
}

Matrix box_blur(const Matrix& img) {
  const int side = static_cast<int>(img.rows());
  Matrix out(side, side);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      double acc = 0.0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = std::clamp(r + dr, 0, side - 1);
          const int cc = std::clamp(c + dc, 0, side - 1);
          acc += img(rr, cc);
        }
      out(r, c) = acc / 9.0;
    }
  return out;
}

Matrix color_jitter(const Matrix& img, double level, num::RngStream& rng) {
  const double hi = 1.0 + 2.0 * level;
  const double lo = 1.0 / hi;
  const double fb = rng.uniform(lo, hi);
  const double fc = rng.uniform(lo, hi);
  const double fs = rng.uniform(lo, hi);
  Matrix out = fb * img;                                  // brightness
  const double m = out.mean();                            // contrast
  out = (m + fc * (out.array() - m)).matrix();
  const Matrix blur = box_blur(out);                      // sharpness
  out = blur + fs * (out - blur);
  return out.cwiseMax(0.0).cwiseMin(1.0);
}

Matrix occlude_image(const Matrix& img, double level, num::RngStream& rng) {
  const int side = static_cast<int>(img.rows());
  // 20 px at a 128 px reference resolution, scaled proportionally.
  int side_max = static_cast<int>(std::lround(20.0 * level * side / 128.0));
  side_max = std::clamp(side_max, 1, side);
  Matrix out = img;
  const int blocks = rng.uniform_int(1, 3);
  for (int i = 0; i < blocks; ++i) {
    const int s = rng.uniform_int(1, side_max);
    const int r0 = rng.uniform_int(0, side - s);
    const int c0 = rng.uniform_int(0, side - s);
    out.block(r0, c0, s, s).setZero();
  }
  return out;
}

Matrix erase_image(const Matrix& img, double level, num::RngStream& rng) {
  const int side = static_cast<int>(img.rows());
  const double max_area = 0.1 * level * side * side;
  if (max_area < 1.0) return img;
  const int w_max =
      std::min(side, static_cast<int>(std::floor(std::sqrt(max_area))));
  const int w = rng.uniform_int(1, w_max);
  const int h_max =
      std::min(side, static_cast<int>(std::floor(max_area / w)));
  const int h = rng.uniform_int(1, h_max);
  const int r0 = rng.uniform_int(0, side - h);
  const int c0 = rng.uniform_int(0, side - w);
  Matrix out = img;
  for (int r = r0; r < r0 + h; ++r)
    for (int c = c0; c < c0 + w; ++c) out(r, c) = rng.uniform();
  return out;
}

}  // namespace

Matrix perturb_observation(const Matrix& obs, const PerturbationSpec& spec,
                           num::RngStream& rng) {
  spec.validate();
  // The no-op branches consume no draws, so a spec that cannot perturb
  // leaves the stream untouched.
  if (spec.channel == ObsChannel::kNone) return obs;
  if (spec.obs_level == 0.0) return obs;
  if (spec.p_clean >= 1.0) return obs;
  if (spec.p_clean > 0.0 && rng.uniform() < spec.p_clean) return obs;

  if (spec.channel == ObsChannel::kVectorBall) {
    if (obs.cols() != 1 || obs.rows() < 1)
      throw std::invalid_argument(
          "perturb: vector-ball channel needs a column vector");
    return obs + spec.obs_level * Matrix(rng.sphere_vector(obs.rows()));
  }

  if (obs.rows() != obs.cols() || obs.rows() < 2)
    throw std::invalid_argument(
        "perturb: image channel needs a square G x G observation");

  ObsChannel ch = spec.channel;
  if (ch == ObsChannel::kMixed) {
    static constexpr ObsChannel kImageOps[] = {
        ObsChannel::kShift, ObsChannel::kRotation, ObsChannel::kColor,
        ObsChannel::kOcclusion, ObsChannel::kErasing};
    ch = kImageOps[rng.uniform_int(0, 4)];
  }
  switch (ch) {
    case ObsChannel::kShift: return shift_image(obs, spec.obs_level, rng);
    case ObsChannel::kRotation: return rotate_image(obs, spec.obs_level, rng);
    case ObsChannel::kColor: return color_jitter(obs, spec.obs_level, rng);
    case ObsChannel::kOcclusion: return occlude_image(obs, spec.obs_level, rng);
    case ObsChannel::kErasing: return erase_image(obs, spec.obs_level, rng);
    default:
      throw std::logic_error("perturb: unreachable channel");
  }
}

Vector perturb_action(const Vector& action, double sigma,
                      num::RngStream& rng) {
  if (sigma < 0.0) throw std::invalid_argument("perturb: sigma must be >= 0");
  if (sigma == 0.0) return action;
  return action + sigma * rng.normal_vector(action.size());
}

Vector flatten_image(const Matrix& image) {
  const auto side = image.rows();
  Vector v(side * image.cols());
  for (Eigen::Index r = 0; r < side; ++r)
    for (Eigen::Index c = 0; c < image.cols(); ++c)
      v[r * image.cols() + c] = image(r, c);
  return v;
}

Matrix unflatten_image(const Vector& obs, int side) {
  if (obs.size() != static_cast<Eigen::Index>(side) * side)
    throw std::invalid_argument("unflatten: size mismatch");
  Matrix m(side, side);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) m(r, c) = obs[r * side + c];
  return m;
}

void write_pgm(const Matrix& image, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("pgm: cannot open " + tmp.string());
    out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
    for (Eigen::Index r = 0; r < image.rows(); ++r)
      for (Eigen::Index c = 0; c < image.cols(); ++c) {
        const double v = std::clamp(image(r, c), 0.0, 1.0);
        out.put(static_cast<char>(std::lround(v * 255.0)));
      }
    if (!out) throw std::runtime_error("pgm: write failed " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace rpt
