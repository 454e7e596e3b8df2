#include "rpt/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace rpt::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
  throw ConfigError("config key '" + key + "': " + why);
}

class KeyReader {
 public:
  explicit KeyReader(const json& j) : j_(j) {}

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_number()) bad_key(key, "expected a number");
    return j_.at(key).get<double>();
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_number_integer()) bad_key(key, "expected an integer");
    return j_.at(key).get<int>();
  }

  std::uint64_t uinteger(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_number_unsigned() && !j_.at(key).is_number_integer())
      bad_key(key, "expected an integer");
    return j_.at(key).get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) bad_key(key, "expected a boolean");
    return j_.at(key).get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) bad_key(key, "expected a string");
    return j_.at(key).get<std::string>();
  }

  std::vector<double> number_list(const std::string& key,
                                  std::vector<double> fallback) {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_array()) bad_key(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j_.at(key)) {
      if (!v.is_number()) bad_key(key, "expected an array of numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }

  std::vector<int> int_list(const std::string& key, std::vector<int> fallback) {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_array()) bad_key(key, "expected an array of integers");
    std::vector<int> out;
    for (const auto& v : j_.at(key)) {
      if (!v.is_number_integer()) bad_key(key, "expected an array of integers");
      out.push_back(v.get<int>());
    }
    return out;
  }

  // Square or (rows x cols) matrix from a scalar (scaled identity) or a
  // row-major flat array.
  Matrix matrix(const std::string& key, Eigen::Index rows, Eigen::Index cols,
                const Matrix& fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (v.is_number()) {
      Matrix m = Matrix::Zero(rows, cols);
      const double s = v.get<double>();
      for (Eigen::Index i = 0; i < std::min(rows, cols); ++i) m(i, i) = s;
      return m;
    }
    if (v.is_array()) {
      if (static_cast<Eigen::Index>(v.size()) != rows * cols)
        bad_key(key, "expected " + std::to_string(rows * cols) + " entries");
      Matrix m(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
          const auto& e = v.at(r * cols + c);
          if (!e.is_number()) bad_key(key, "expected numeric entries");
          m(r, c) = e.get<double>();
        }
      return m;
    }
    bad_key(key, "expected a number or row-major array");
  }

  Vector vector(const std::string& key, Eigen::Index dim,
                const Vector& fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (v.is_number()) return Vector::Constant(dim, v.get<double>());
    if (v.is_array()) {
      if (static_cast<Eigen::Index>(v.size()) != dim)
        bad_key(key, "expected " + std::to_string(dim) + " entries");
      Vector out(dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        if (!v.at(i).is_number()) bad_key(key, "expected numeric entries");
        out[i] = v.at(i).get<double>();
      }
      return out;
    }
    bad_key(key, "expected a number or array");
  }

  void reject_unknown() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.contains(key))
        throw ConfigError("config key '" + key + "': unknown key");
  }

 private:
  const json& j_;
  std::set<std::string> seen_;
};

RewardConfig parse_rewards(KeyReader& r) {
  RewardConfig c;
  c.w_proximity = r.number("rewards.w_proximity", c.w_proximity);
  c.w_progress = r.number("rewards.w_progress", c.w_progress);
  c.w_velocity = r.number("rewards.w_velocity", c.w_velocity);
  c.w_acceleration = r.number("rewards.w_acceleration", c.w_acceleration);
  c.w_success = r.number("rewards.w_success", c.w_success);
  c.milestones = r.integer("rewards.milestones", c.milestones);
  return c;
}

BoundScenario parse_scenario(const json& s, int index) {
  const std::string where = "bounds.scenarios[" + std::to_string(index) + "]";
  if (!s.is_object()) throw ConfigError(where + ": expected an object");
  static const std::set<std::string> known = {
      "name",        "kind",        "a",          "b",
      "expert_gain", "expert_bias", "policy_gain", "policy_bias",
      "drift_steps", "drift_bias_step", "eps_s",  "sigma",
      "gamma",       "horizon",     "horizons",   "rollouts",
      "box_half_width", "state_dim", "action_dim", "reward_scale",
      "action_cost"};
  for (const auto& [key, value] : s.items())
    if (!known.contains(key))
      throw ConfigError(where + ": unknown key '" + key + "'");

  auto matrix_of = [&](const char* key, Eigen::Index rows, Eigen::Index cols,
                       double diag_fallback) {
    if (!s.contains(key)) {
      Matrix m = Matrix::Zero(rows, cols);
      for (Eigen::Index i = 0; i < std::min(rows, cols); ++i)
        m(i, i) = diag_fallback;
      return m;
    }
    const json& v = s.at(key);
    if (v.is_number()) {
      Matrix m = Matrix::Zero(rows, cols);
      for (Eigen::Index i = 0; i < std::min(rows, cols); ++i)
        m(i, i) = v.get<double>();
      return m;
    }
    if (v.is_array() && static_cast<Eigen::Index>(v.size()) == rows * cols) {
      Matrix m(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
          m(r, c) = v.at(r * cols + c).get<double>();
      return m;
    }
    throw ConfigError(where + ": bad matrix for '" + key + "'");
  };

  const int d_s = s.value("state_dim", 1);
  const int d_a = s.value("action_dim", d_s);
  BoundScenario sc;
  sc.name = s.value("name", "scenario_" + std::to_string(index));
  sc.kind = parse_theorem(s.value("kind", "T1"));
  sc.env.a = matrix_of("a", d_s, d_s, 0.8);
  sc.env.b = matrix_of("b", d_s, d_a, 0.2);
  sc.env.goal = Vector::Zero(d_s);
  sc.env.reward_scale = s.value("reward_scale", 1.0);
  sc.env.action_cost = s.value("action_cost", 0.0);
  sc.env.horizon = s.value("horizon", 20);
  sc.expert_gain = matrix_of("expert_gain", d_a, d_s, -1.0);
  sc.expert_bias = Vector::Zero(d_a);
  if (s.contains("expert_bias"))
    sc.expert_bias = Vector::Constant(d_a, s.at("expert_bias").get<double>());
  sc.policy_gain = matrix_of("policy_gain", d_a, d_s, -0.9);
  sc.policy_bias = Vector::Zero(d_a);
  if (s.contains("policy_bias"))
    sc.policy_bias = Vector::Constant(d_a, s.at("policy_bias").get<double>());
  sc.drift_steps = s.value("drift_steps", 0);
  sc.drift_bias_step = s.value("drift_bias_step", 0.0);
  sc.eps_s = s.value("eps_s", 0.0);
  sc.sigma = s.value("sigma", 0.0);
  sc.gamma = s.value("gamma", 0.95);
  if (s.contains("horizons"))
    sc.horizons = s.at("horizons").get<std::vector<int>>();
  sc.rollouts = s.value("rollouts", 1000);
  sc.box = StateBox::symmetric(d_s, s.value("box_half_width", 1.0));
  return sc;
}

}  // namespace

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  KeyReader r(j);
  RunConfig c;

  c.seed = r.uinteger("seed", 1);
  c.out_dir = r.text("out", "out");

  // Environment.
  const std::string env_kind = r.text("env.kind", "linear");
  const RewardConfig rewards = parse_rewards(r);
  if (env_kind == "linear") {
    c.train.env.kind = EnvChoice::Kind::kLinear;
  } else if (env_kind == "point_goal_image") {
    c.train.env.kind = EnvChoice::Kind::kPointGoalImage;
  } else {
    bad_key("env.kind", "expected 'linear' or 'point_goal_image'");
  }
  {
    LinearEnvConfig& e = c.train.env.linear;
    const int d_s = r.integer("env.linear.state_dim", 2);
    const int d_a = r.integer("env.linear.action_dim", d_s);
    e.a = r.matrix("env.linear.a", d_s, d_s,
                   Matrix(0.8 * Matrix::Identity(d_s, d_s)));
    e.b = r.matrix("env.linear.b", d_s, d_a, [&] {
      Matrix m = Matrix::Zero(d_s, d_a);
      for (Eigen::Index i = 0; i < std::min<Eigen::Index>(d_s, d_a); ++i)
        m(i, i) = 0.2;
      return m;
    }());
    e.goal = r.vector("env.linear.goal", d_s, Vector::Zero(d_s));
    e.reward_scale = r.number("env.linear.reward_scale", 1.0);
    e.action_cost = r.number("env.linear.action_cost", 0.0);
    e.success_radius = r.number("env.linear.success_radius", 0.1);
    e.horizon = r.integer("env.linear.horizon", 20);
    e.state_clip = r.number("env.linear.state_clip", 10.0);
    e.start_lower = r.vector("env.linear.start_low", d_s,
                             Vector::Constant(d_s, -1.0));
    e.start_upper = r.vector("env.linear.start_high", d_s,
                             Vector::Constant(d_s, 1.0));
    e.rewards = rewards;
  }
  {
    PointGoalImageEnvConfig& e = c.train.env.image;
    e.image_side = r.integer("env.image.size", 32);
    e.blob_width = r.number("env.image.blob_width", 1.5);
    e.step_gain = r.number("env.image.step_gain", 0.25);
    e.horizon = r.integer("env.image.horizon", 16);
    e.success_radius = r.number("env.image.success_radius", 0.2);
    e.start_margin = r.number("env.image.start_margin", 0.15);
    e.rewards = rewards;
  }

  // Policy.
  c.train.hidden = r.int_list("policy.hidden", {});
  c.train.init_log_std = r.number("policy.init_log_std", c.train.init_log_std);

  // Training loop.
  c.train.outer_steps = r.integer("train.outer_steps", 12);
  c.train.inner_updates = r.integer("train.inner_updates", 10);
  c.train.rollouts_per_context = r.integer("train.rollouts_per_context", 8);
  c.train.contexts_per_iter = r.integer("train.contexts_per_iter", 16);
  c.train.batch_size = r.integer("train.batch_size", 64);
  c.train.learning_rate = r.number("train.learning_rate", 1e-3);
  c.train.grad_clip = r.number("train.grad_clip", 1.0);
  c.train.eval_episodes = r.integer("train.eval_episodes", 32);
  c.train.threads = r.integer("train.threads", 1);
  const std::string ratio = r.text("train.ratio_level", "step");
  if (ratio == "step") c.train.ratio_level = RatioLevel::kStep;
  else if (ratio == "rollout") c.train.ratio_level = RatioLevel::kRollout;
  else bad_key("train.ratio_level", "expected 'step' or 'rollout'");

  // Loss.
  c.train.loss.alpha = r.number("loss.alpha", 0.005);
  c.train.loss.beta = r.number("loss.beta", 0.0005);
  c.train.loss.clip_low = r.number("loss.clip", 0.2);
  c.train.loss.clip_high = r.number("loss.clip_high", 0.2);
  c.train.loss.g_max = r.number("loss.g_max", 100.0);
  c.train.loss.jacobian_mode =
      parse_jacobian_mode(r.text("loss.jacobian_mode", "fd-hutchinson"));
  c.train.loss.probes = r.integer("loss.probes", 8);
  c.train.loss.probe_step = r.number("loss.probe_step", 1e-4);

  // Perturbation template.
  c.train.perturb.channel = parse_channel(r.text("perturb.channel", "none"));
  c.train.perturb.obs_level = r.number("perturb.obs_level", 0.0);
  c.train.perturb.action_sigma = r.number("perturb.action_sigma", 0.0);
  c.train.perturb.p_clean = r.number("perturb.p_clean", 0.15);

  // Curriculum.
  CurriculumConfig& cu = c.train.curriculum;
  cu.enabled = r.boolean("curriculum.enabled", true);
  cu.gamma = r.number("curriculum.gamma", 0.9);
  cu.tau_low = r.number("curriculum.tau_low", 0.6);
  cu.tau_high = r.number("curriculum.tau_high", 0.8);
  cu.delta_obs = r.number("curriculum.delta_obs", 0.2);
  cu.delta_act = r.number("curriculum.delta_act", 0.02);
  cu.obs_min = r.number("curriculum.obs_min", 0.0);
  cu.obs_max = r.number("curriculum.obs_max", 1.0);
  cu.act_min = r.number("curriculum.act_min", 0.0);
  cu.act_max = r.number("curriculum.act_max", 0.3);
  cu.eval_interval = r.integer("curriculum.eval_interval", 1);

  c.train.seed = c.seed;

  // Evaluation / demo / bounds.
  c.eval.checkpoint = r.text("eval.checkpoint", "");
  c.eval.episodes = r.integer("eval.episodes", 50);
  c.eval.obs_level = r.number("eval.obs_level", 1.0);
  c.eval.p_clean = r.number("eval.p_clean", 0.0);
  c.demo.levels = r.number_list("demo.levels", {0.0, 0.25, 0.5, 1.0});
  c.demo.image_side = r.integer("demo.image_size", 32);
  c.bound_rollouts_override = r.integer("bounds.rollouts", 0);
  c.bound_threads = r.integer("bounds.threads", 1);
  if (r.has("bounds.scenarios")) {
    const json& arr = j.at("bounds.scenarios");
    if (!arr.is_array()) bad_key("bounds.scenarios", "expected an array");
    c.raw_scenarios = arr;
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.bound_scenarios.push_back(parse_scenario(arr[i], static_cast<int>(i)));
  }

  r.reject_unknown();
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " +
                      e.what());
  }
  return parse_config(j);
}

nlohmann::json config_to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["out"] = c.out_dir;
  j["env.kind"] = c.train.env.kind == EnvChoice::Kind::kLinear
                      ? "linear"
                      : "point_goal_image";
  const LinearEnvConfig& e = c.train.env.linear;
  const auto d_s = e.a.rows();
  const auto d_a = e.b.cols();
  j["env.linear.state_dim"] = d_s;
  j["env.linear.action_dim"] = d_a;
  auto flat = [](const Matrix& m) {
    std::vector<double> v;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index cc = 0; cc < m.cols(); ++cc) v.push_back(m(r, cc));
    return v;
  };
  j["env.linear.a"] = flat(e.a);
  j["env.linear.b"] = flat(e.b);
  j["env.linear.goal"] = flat(Matrix(e.goal));
  j["env.linear.reward_scale"] = e.reward_scale;
  j["env.linear.action_cost"] = e.action_cost;
  j["env.linear.success_radius"] = e.success_radius;
  j["env.linear.horizon"] = e.horizon;
  j["env.linear.state_clip"] = e.state_clip;
  j["env.linear.start_low"] = flat(Matrix(e.start_lower));
  j["env.linear.start_high"] = flat(Matrix(e.start_upper));
  const PointGoalImageEnvConfig& ie = c.train.env.image;
  j["env.image.size"] = ie.image_side;
  j["env.image.blob_width"] = ie.blob_width;
  j["env.image.step_gain"] = ie.step_gain;
  j["env.image.horizon"] = ie.horizon;
  j["env.image.success_radius"] = ie.success_radius;
  j["env.image.start_margin"] = ie.start_margin;
  const RewardConfig& rw = e.rewards;
  j["rewards.w_proximity"] = rw.w_proximity;
  j["rewards.w_progress"] = rw.w_progress;
  j["rewards.w_velocity"] = rw.w_velocity;
  j["rewards.w_acceleration"] = rw.w_acceleration;
  j["rewards.w_success"] = rw.w_success;
  j["rewards.milestones"] = rw.milestones;
  j["policy.hidden"] = c.train.hidden;
  j["policy.init_log_std"] = c.train.init_log_std;
  j["train.outer_steps"] = c.train.outer_steps;
  j["train.inner_updates"] = c.train.inner_updates;
  j["train.rollouts_per_context"] = c.train.rollouts_per_context;
  j["train.contexts_per_iter"] = c.train.contexts_per_iter;
  j["train.batch_size"] = c.train.batch_size;
  j["train.learning_rate"] = c.train.learning_rate;
  j["train.grad_clip"] = c.train.grad_clip;
  j["train.eval_episodes"] = c.train.eval_episodes;
  j["train.threads"] = c.train.threads;
  j["train.ratio_level"] =
      c.train.ratio_level == RatioLevel::kStep ? "step" : "rollout";
  j["loss.alpha"] = c.train.loss.alpha;
  j["loss.beta"] = c.train.loss.beta;
  j["loss.clip"] = c.train.loss.clip_low;
  j["loss.clip_high"] = c.train.loss.clip_high;
  j["loss.g_max"] = c.train.loss.g_max;
  j["loss.jacobian_mode"] = jacobian_mode_name(c.train.loss.jacobian_mode);
  j["loss.probes"] = c.train.loss.probes;
  j["loss.probe_step"] = c.train.loss.probe_step;
  j["perturb.channel"] = channel_name(c.train.perturb.channel);
  j["perturb.obs_level"] = c.train.perturb.obs_level;
  j["perturb.action_sigma"] = c.train.perturb.action_sigma;
  j["perturb.p_clean"] = c.train.perturb.p_clean;
  const CurriculumConfig& cu = c.train.curriculum;
  j["curriculum.enabled"] = cu.enabled;
  j["curriculum.gamma"] = cu.gamma;
  j["curriculum.tau_low"] = cu.tau_low;
  j["curriculum.tau_high"] = cu.tau_high;
  j["curriculum.delta_obs"] = cu.delta_obs;
  j["curriculum.delta_act"] = cu.delta_act;
  j["curriculum.obs_min"] = cu.obs_min;
  j["curriculum.obs_max"] = cu.obs_max;
  j["curriculum.act_min"] = cu.act_min;
  j["curriculum.act_max"] = cu.act_max;
  j["curriculum.eval_interval"] = cu.eval_interval;
  if (!c.eval.checkpoint.empty()) j["eval.checkpoint"] = c.eval.checkpoint;
  j["eval.episodes"] = c.eval.episodes;
  j["eval.obs_level"] = c.eval.obs_level;
  j["eval.p_clean"] = c.eval.p_clean;
  j["demo.levels"] = c.demo.levels;
  j["demo.image_size"] = c.demo.image_side;
  if (c.bound_rollouts_override > 0)
    j["bounds.rollouts"] = c.bound_rollouts_override;
  j["bounds.threads"] = c.bound_threads;
  if (!c.raw_scenarios.is_null()) j["bounds.scenarios"] = c.raw_scenarios;
  return j;
}

}  // namespace rpt::cli
