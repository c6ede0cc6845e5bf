#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace waypointrl::learn {

// Fully connected net with tanh hidden layers and a linear output layer.
// Batches are column-major: one sample per column.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> layer_sizes, std::uint64_t seed);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }

  // Per-layer activations kept for the backward pass: trace[0] is the input
  // batch, trace[l] the post-tanh activation of hidden layer l, and the
  // last entry the linear output.
  using Trace = std::vector<Eigen::MatrixXd>;

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Trace& trace) const;

  struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
  };

  Gradients zero_gradients() const;

  // Accumulates parameter gradients for dL/d(output); optionally returns
  // dL/d(input) for chaining through an upstream network.
  void backward(const Trace& trace, const Eigen::MatrixXd& grad_output, Gradients& grads,
                Eigen::MatrixXd* grad_input = nullptr) const;

  int param_count() const;
  Eigen::VectorXd flat_params() const;
  void set_flat_params(const Eigen::VectorXd& flat);
  Eigen::VectorXd flatten(const Gradients& grads) const;

  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::MatrixXd> weights_;  // weights_[l]: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases_;
};

// Adam over a flat parameter vector; state is serializable for checkpoints.
class Adam {
 public:
  Adam() = default;
  Adam(int param_count, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void update(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

  double learning_rate() const { return lr_; }
  long step_count() const { return t_; }
  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }
  void restore(long t, const Eigen::VectorXd& m, const Eigen::VectorXd& v);

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  Eigen::VectorXd m_, v_;
};

}  // namespace waypointrl::learn
