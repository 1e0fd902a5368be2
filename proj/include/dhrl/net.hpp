#ifndef DHRL_NET_HPP
#define DHRL_NET_HPP

#include <vector>

#include <Eigen/Core>

#include "dhrl/common.hpp"
#include "dhrl/rng.hpp"

namespace dhrl {

// One-hidden-layer perceptron: out = W2 tanh(W1 x + b1) + b2. Forward and
// backward operate on column batches.
struct Mlp {
  Eigen::MatrixXd w1;  // hidden x in
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd w2;  // out x hidden
  Eigen::VectorXd b2;  // out

  int in_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }
  int out_dim() const { return static_cast<int>(w2.rows()); }
  std::size_t param_count() const;

  // Weights uniform in +-1/sqrt(fan-in), biases zero.
  static Mlp init(int in, int hidden, int out, RandomStream& rng);

  struct Forward {
    Eigen::MatrixXd hidden;  // tanh activations, hidden x n
    Eigen::MatrixXd out;     // out x n
  };
  Forward forward(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
  Eigen::VectorXd forward_one(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  struct Grads {
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;

    double squared_norm() const;
    void setZero(const Mlp& shape);
  };

  // Exact reverse-mode gradients of sum_i <upstream_i, out_i> w.r.t. the
  // parameters; `x` and `fwd` must come from the same forward call.
  Grads backward(const Eigen::Ref<const Eigen::MatrixXd>& x, const Forward& fwd,
                 const Eigen::Ref<const Eigen::MatrixXd>& upstream) const;

  // Gradient-ascent step: params += scale * grads.
  void apply(const Grads& grads, double scale);

  void flatten(std::vector<double>& out) const;
  void unflatten(const double*& cursor);
  void set_params(const std::vector<double>& params);
  void check_finite() const;
};

// Column-wise softmax with the max-shift trick; strictly positive outputs.
Eigen::MatrixXd softmax_columns(const Eigen::Ref<const Eigen::MatrixXd>& logits);
Eigen::VectorXd softmax_vector(const Eigen::Ref<const Eigen::VectorXd>& logits);

// dH/dlogits for a softmax head with probabilities p (H = entropy).
Eigen::VectorXd entropy_grad_logits(const Eigen::Ref<const Eigen::VectorXd>& p);

}  // namespace dhrl

#endif
