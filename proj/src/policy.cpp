#include "rpt/policy.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

#include "rpt/linalg.hpp"

namespace rpt {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
}

void PolicyParams::validate() const {
  if (weights.empty() || weights.size() != biases.size())
    throw std::invalid_argument("policy: weights/biases layer mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (biases[l].size() != weights[l].rows())
      throw std::invalid_argument("policy: bias shape mismatch at layer " +
                                  std::to_string(l));
    if (l + 1 < weights.size() && weights[l + 1].cols() != weights[l].rows())
      throw std::invalid_argument("policy: layer shapes do not compose at " +
                                  std::to_string(l));
  }
  if (log_std.size() != weights.back().rows() || log_std.size() < 1)
    throw std::invalid_argument("policy: log_std length != action dim");
  if (!log_std.allFinite())
    throw std::invalid_argument("policy: log_std not finite");
}

PolicyParams PolicyParams::init_mlp(Eigen::Index obs_dim,
                                    const std::vector<int>& hidden,
                                    Eigen::Index action_dim,
                                    double init_log_std, num::RngStream& rng) {
  PolicyParams p;
  Eigen::Index in = obs_dim;
  std::vector<Eigen::Index> outs(hidden.begin(), hidden.end());
  outs.push_back(action_dim);
  for (Eigen::Index out : outs) {
    Matrix w(out, in);
    const double s = 1.0 / std::sqrt(static_cast<double>(in));
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) w(r, c) = s * rng.normal();
    p.weights.push_back(std::move(w));
    p.biases.push_back(Vector::Zero(out));
    in = out;
  }
  p.log_std = Vector::Constant(action_dim, init_log_std);
  p.validate();
  return p;
}

StateBox::StateBox(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size())
    throw std::invalid_argument("state box: dim mismatch");
  if ((lower.array() > upper.array()).any())
    throw std::invalid_argument("state box: lower > upper");
}

StateBox StateBox::symmetric(Eigen::Index dim, double half_width) {
  return StateBox(Vector::Constant(dim, -half_width),
                  Vector::Constant(dim, half_width));
}

bool StateBox::degenerate() const {
  return (lower.array() == upper.array()).all();
}

Vector StateBox::sample(num::RngStream& rng) const {
  Vector v(dim());
  for (Eigen::Index i = 0; i < dim(); ++i)
    v[i] = rng.uniform(lower[i], upper[i]);
  return v;
}

Vector StateBox::clip(const Vector& v) const {
  return v.cwiseMax(lower).cwiseMin(upper);
}

Vector mean_action(const PolicyParams& params, const Vector& obs) {
  if (obs.size() != params.input_dim())
    throw std::invalid_argument("mean_action: obs dim mismatch");
  Vector h = obs;
  const int layers = params.layer_count();
  for (int l = 0; l < layers; ++l) {
    Vector z = params.weights[l] * h + params.biases[l];
    h = (l + 1 < layers) ? Vector(z.array().tanh().matrix()) : z;
  }
  return h;
}

double log_prob(const PolicyParams& params, const Vector& obs,
                const Vector& action) {
  if (action.size() != params.action_dim())
    throw std::invalid_argument("log_prob: action dim mismatch");
  const Vector mu = mean_action(params, obs);
  const Eigen::ArrayXd z =
      (action - mu).array() * (-params.log_std.array()).exp();
  return -0.5 * z.square().sum() - params.log_std.sum() -
         0.5 * static_cast<double>(action.size()) * kLog2Pi;
}

Vector sample_action(const PolicyParams& params, const Vector& obs,
                     num::RngStream& rng) {
  const Vector mu = mean_action(params, obs);
  const Vector z = rng.normal_vector(params.action_dim());
  return mu.array() + params.log_std.array().exp() * z.array();
}

double kl_divergence(const PolicyParams& p, const PolicyParams& q,
                     const Vector& obs) {
  if (p.action_dim() != q.action_dim())
    throw std::invalid_argument("kl_divergence: action dim mismatch");
  const Vector mu_p = mean_action(p, obs);
  const Vector mu_q = mean_action(q, obs);
  const Eigen::ArrayXd var_p = (2.0 * p.log_std.array()).exp();
  const Eigen::ArrayXd var_q = (2.0 * q.log_std.array()).exp();
  return (q.log_std.array() - p.log_std.array() +
          (var_p + (mu_p - mu_q).array().square()) / (2.0 * var_q) - 0.5)
      .sum();
}

Vector input_grad_logprob(const PolicyParams& params, const Vector& obs,
                          const Vector& action) {
  num::Tape tape;
  num::Var s = tape.leaf(obs);
  PolicyVars pv = PolicyVars::constants(tape, params);
  num::Var lp = pv.log_prob(s, tape.constant(action));
  const num::Var leaves[] = {s};
  return Vector(tape.gradients(lp, leaves)[0]);
}

Matrix mean_jacobian(const PolicyParams& params, const Vector& obs) {
  if (obs.size() != params.input_dim())
    throw std::invalid_argument("mean_jacobian: obs dim mismatch");
  const int layers = params.layer_count();
  // Forward pass keeping hidden activations.
  std::vector<Vector> acts;  // tanh outputs of hidden layers
  Vector h = obs;
  for (int l = 0; l + 1 < layers; ++l) {
    h = ((params.weights[l] * h + params.biases[l]).array().tanh()).matrix();
    acts.push_back(h);
  }
  Matrix jac = params.weights[layers - 1];
  for (int l = layers - 2; l >= 0; --l) {
    const Eigen::ArrayXd d = 1.0 - acts[l].array().square();
    jac = jac * d.matrix().asDiagonal() * params.weights[l];
  }
  return jac;
}

double estimate_lambda(const PolicyParams& params, const StateBox& box, int n,
                       num::RngStream& rng) {
  if (n < 1) throw std::domain_error("estimate_lambda: n must be >= 1");
  if (box.dim() != params.input_dim())
    throw std::invalid_argument("estimate_lambda: box dim mismatch");
  if (params.is_linear()) return num::spectral_norm(params.weights[0]);
  if (box.degenerate())
    return num::spectral_norm(mean_jacobian(params, box.lower));
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector s = box.sample(rng);
    best = std::max(best, num::spectral_norm(mean_jacobian(params, s)));
  }
  return best;
}

namespace {

void write_entry(std::ofstream& out, const std::string& name, const Matrix& m) {
  out << name << '\n';
  const auto rows = static_cast<std::uint32_t>(m.rows());
  const auto cols = static_cast<std::uint32_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
}

Matrix read_entry(std::ifstream& in) {
  std::uint32_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  if (!in) throw std::runtime_error("checkpoint: truncated entry header");
  Matrix m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) {
      double v = 0;
      in.read(reinterpret_cast<char*>(&v), 8);
      m(r, c) = v;
    }
  if (!in) throw std::runtime_error("checkpoint: truncated entry data");
  return m;
}

}  // namespace

void save_checkpoint(const PolicyParams& params,
                     const std::filesystem::path& path) {
  params.validate();
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("checkpoint: cannot open " + tmp.string());
    out << "RPTCKPT v1\n";
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      write_entry(out, "w" + std::to_string(l), params.weights[l]);
      write_entry(out, "b" + std::to_string(l), Matrix(params.biases[l]));
    }
    write_entry(out, "log_std", Matrix(params.log_std));
    if (!out)
      throw std::runtime_error("checkpoint: write failed " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

PolicyParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::string magic;
  std::getline(in, magic);
  if (magic != "RPTCKPT v1")
    throw std::runtime_error("checkpoint: bad header in " + path.string());
  PolicyParams p;
  std::string name;
  while (std::getline(in, name)) {
    if (name.empty()) continue;
    Matrix m = read_entry(in);
    if (name == "log_std") {
      p.log_std = Vector(m.col(0));
    } else if (name[0] == 'w') {
      p.weights.push_back(std::move(m));
    } else if (name[0] == 'b') {
      p.biases.push_back(Vector(m.col(0)));
    } else {
      throw std::runtime_error("checkpoint: unknown entry '" + name + "'");
    }
  }
  p.validate();
  return p;
}

PolicyVars PolicyVars::leaves(num::Tape& tape, const PolicyParams& params) {
  PolicyVars pv;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    pv.weights.push_back(tape.leaf(params.weights[l]));
    pv.biases.push_back(tape.leaf(params.biases[l]));
  }
  pv.log_std = tape.leaf(params.log_std);
  return pv;
}

PolicyVars PolicyVars::constants(num::Tape& tape, const PolicyParams& params) {
  PolicyVars pv;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    pv.weights.push_back(tape.constant(params.weights[l]));
    pv.biases.push_back(tape.constant(params.biases[l]));
  }
  pv.log_std = tape.constant(params.log_std);
  return pv;
}

num::Var PolicyVars::mean(num::Var obs) const {
  num::Var h = obs;
  const int layers = static_cast<int>(weights.size());
  for (int l = 0; l < layers; ++l) {
    num::Var z = matmul(weights[l], h) + biases[l];
    h = (l + 1 < layers) ? tanh(z) : z;
  }
  return h;
}

num::Var PolicyVars::log_prob(num::Var obs, num::Var action) const {
  num::Tape& tape = *log_std.tape();
  num::Var mu = mean(obs);
  num::Var inv_sigma = exp(scale(log_std, -1.0));
  num::Var z = (action - mu) * inv_sigma;
  const double d = static_cast<double>(log_std.rows());
  return scale(sum(square(z)), -0.5) - sum(log_std) -
         tape.constant(0.5 * d * kLog2Pi);
}

std::vector<num::Var> PolicyVars::parameter_list() const {
  std::vector<num::Var> list;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    list.push_back(weights[l]);
    list.push_back(biases[l]);
  }
  list.push_back(log_std);
  return list;
}

}  // namespace rpt
