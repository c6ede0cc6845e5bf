#include "waypointrl/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "waypointrl/rng.hpp"

namespace waypointrl::learn {

Mlp::Mlp(std::vector<int> layer_sizes, std::uint64_t seed) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
  for (int s : sizes_)
    if (s < 1) throw std::invalid_argument("Mlp: layer sizes must be positive");

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int fan_in = sizes_[l];
    const int fan_out = sizes_[l + 1];
    const double scale = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-scale, scale);
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(fan_out));
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
  Trace trace;
  return forward(input, trace);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Trace& trace) const {
  if (input.rows() != input_dim())
    throw std::invalid_argument("Mlp::forward: input has " + std::to_string(input.rows()) +
                                " rows, expected " + std::to_string(input_dim()));
  trace.clear();
  trace.reserve(weights_.size() + 1);
  trace.push_back(input);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = (weights_[l] * trace.back()).colwise() + biases_[l];
    if (l + 1 < weights_.size()) z = z.array().tanh();
    trace.push_back(std::move(z));
  }
  return trace.back();
}

Mlp::Gradients Mlp::zero_gradients() const {
  Gradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(biases_[l].size()));
  }
  return g;
}

void Mlp::backward(const Trace& trace, const Eigen::MatrixXd& grad_output, Gradients& grads,
                   Eigen::MatrixXd* grad_input) const {
  if (trace.size() != weights_.size() + 1)
    throw std::invalid_argument("Mlp::backward: trace does not match this network");

  Eigen::MatrixXd delta = grad_output;  // dL/dz of the linear output layer
  for (std::size_t l = weights_.size(); l-- > 0;) {
    grads.weights[l] += delta * trace[l].transpose();
    grads.biases[l] += delta.rowwise().sum();
    if (l > 0) {
      delta = weights_[l].transpose() * delta;
      // trace[l] holds tanh(z); d tanh = 1 - tanh^2.
      delta.array() *= 1.0 - trace[l].array().square();
    } else if (grad_input != nullptr) {
      *grad_input = weights_[0].transpose() * delta;
    }
  }
}

int Mlp::param_count() const {
  int n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<int>(weights_[l].size() + biases_[l].size());
  return n;
}

Eigen::VectorXd Mlp::flat_params() const {
  Eigen::VectorXd flat(param_count());
  int offset = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    flat.segment(offset, weights_[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(weights_[l].data(), weights_[l].size());
    offset += static_cast<int>(weights_[l].size());
    flat.segment(offset, biases_[l].size()) = biases_[l];
    offset += static_cast<int>(biases_[l].size());
  }
  return flat;
}

void Mlp::set_flat_params(const Eigen::VectorXd& flat) {
  if (flat.size() != param_count())
    throw std::invalid_argument("Mlp::set_flat_params: size mismatch");
  int offset = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::Map<Eigen::VectorXd>(weights_[l].data(), weights_[l].size()) =
        flat.segment(offset, weights_[l].size());
    offset += static_cast<int>(weights_[l].size());
    biases_[l] = flat.segment(offset, biases_[l].size());
    offset += static_cast<int>(biases_[l].size());
  }
}

Eigen::VectorXd Mlp::flatten(const Gradients& grads) const {
  Eigen::VectorXd flat(param_count());
  int offset = 0;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    flat.segment(offset, grads.weights[l].size()) =
        Eigen::Map<const Eigen::VectorXd>(grads.weights[l].data(), grads.weights[l].size());
    offset += static_cast<int>(grads.weights[l].size());
    flat.segment(offset, grads.biases[l].size()) = grads.biases[l];
    offset += static_cast<int>(grads.biases[l].size());
  }
  return flat;
}

Adam::Adam(int param_count, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_ = Eigen::VectorXd::Zero(param_count);
  v_ = Eigen::VectorXd::Zero(param_count);
}

void Adam::update(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (grad.size() != m_.size()) throw std::invalid_argument("Adam::update: size mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_.array().matrix() + (1.0 - beta2_) * grad.array().square().matrix();
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -=
      lr_ * (m_.array() / bias1) / ((v_.array() / bias2).sqrt() + eps_);
}

void Adam::restore(long t, const Eigen::VectorXd& m, const Eigen::VectorXd& v) {
  if (m.size() != m_.size() || v.size() != v_.size())
    throw std::invalid_argument("Adam::restore: size mismatch");
  t_ = t;
  m_ = m;
  v_ = v;
}

}  // namespace waypointrl::learn
