#include "dhrl/net.hpp"

#include <cmath>

namespace dhrl {

std::size_t Mlp::param_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
}

Mlp Mlp::init(int in, int hidden, int out, RandomStream& rng) {
  if (in < 1 || hidden < 1 || out < 1) throw ContractError("Mlp::init: bad shape");
  Mlp net;
  net.w1 = Eigen::MatrixXd(hidden, in);
  net.b1 = Eigen::VectorXd::Zero(hidden);
  net.w2 = Eigen::MatrixXd(out, hidden);
  net.b2 = Eigen::VectorXd::Zero(out);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in));
  for (int j = 0; j < in; ++j)
    for (int i = 0; i < hidden; ++i) net.w1(i, j) = (2.0 * rng.uniform01() - 1.0) * s1;
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (int j = 0; j < hidden; ++j)
    for (int i = 0; i < out; ++i) net.w2(i, j) = (2.0 * rng.uniform01() - 1.0) * s2;
  return net;
}

Mlp::Forward Mlp::forward(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (x.rows() != in_dim()) throw ContractError("Mlp::forward: input dimension mismatch");
  Forward fwd;
  fwd.hidden.noalias() = w1 * x;
  fwd.hidden.colwise() += b1;
  fwd.hidden = fwd.hidden.array().tanh();
  fwd.out.noalias() = w2 * fwd.hidden;
  fwd.out.colwise() += b2;
  return fwd;
}

Eigen::VectorXd Mlp::forward_one(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return forward(x).out.col(0);
}

double Mlp::Grads::squared_norm() const {
  return w1.squaredNorm() + b1.squaredNorm() + w2.squaredNorm() + b2.squaredNorm();
}

void Mlp::Grads::setZero(const Mlp& shape) {
  w1 = Eigen::MatrixXd::Zero(shape.w1.rows(), shape.w1.cols());
  b1 = Eigen::VectorXd::Zero(shape.b1.size());
  w2 = Eigen::MatrixXd::Zero(shape.w2.rows(), shape.w2.cols());
  b2 = Eigen::VectorXd::Zero(shape.b2.size());
}

Mlp::Grads Mlp::backward(const Eigen::Ref<const Eigen::MatrixXd>& x, const Forward& fwd,
                         const Eigen::Ref<const Eigen::MatrixXd>& upstream) const {
  if (upstream.rows() != out_dim() || upstream.cols() != x.cols() ||
      fwd.hidden.cols() != x.cols())
    throw ContractError("Mlp::backward: shape mismatch");
  Grads g;
  g.w2.noalias() = upstream * fwd.hidden.transpose();
  g.b2 = upstream.rowwise().sum();
  Eigen::MatrixXd d_hidden = w2.transpose() * upstream;
  d_hidden.array() *= 1.0 - fwd.hidden.array().square();
  g.w1.noalias() = d_hidden * x.transpose();
  g.b1 = d_hidden.rowwise().sum();
  return g;
}

void Mlp::apply(const Grads& grads, double scale) {
  w1 += scale * grads.w1;
  b1 += scale * grads.b1;
  w2 += scale * grads.w2;
  b2 += scale * grads.b2;
}

void Mlp::flatten(std::vector<double>& out) const {
  out.insert(out.end(), w1.data(), w1.data() + w1.size());
  out.insert(out.end(), b1.data(), b1.data() + b1.size());
  out.insert(out.end(), w2.data(), w2.data() + w2.size());
  out.insert(out.end(), b2.data(), b2.data() + b2.size());
}

void Mlp::unflatten(const double*& cursor) {
  std::copy(cursor, cursor + w1.size(), w1.data());
  cursor += w1.size();
  std::copy(cursor, cursor + b1.size(), b1.data());
  cursor += b1.size();
  std::copy(cursor, cursor + w2.size(), w2.data());
  cursor += w2.size();
  std::copy(cursor, cursor + b2.size(), b2.data());
  cursor += b2.size();
}

void Mlp::set_params(const std::vector<double>& params) {
  if (params.size() != param_count()) throw ContractError("set_params: size mismatch");
  const double* cursor = params.data();
  unflatten(cursor);
}

void Mlp::check_finite() const {
  if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite())
    throw Error("network parameters are not finite");
}

Eigen::MatrixXd softmax_columns(const Eigen::Ref<const Eigen::MatrixXd>& logits) {
  Eigen::MatrixXd p = logits;
  for (int c = 0; c < p.cols(); ++c) {
    Eigen::VectorXd col = p.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp();
    p.col(c) = col / col.sum();
  }
  return p;
}

Eigen::VectorXd softmax_vector(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  Eigen::VectorXd v = logits;
  v.array() -= v.maxCoeff();
  v = v.array().exp();
  return v / v.sum();
}

Eigen::VectorXd entropy_grad_logits(const Eigen::Ref<const Eigen::VectorXd>& p) {
  double entropy = 0.0;
  for (int i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) entropy -= p[i] * std::log(p[i]);
  Eigen::VectorXd g(p.size());
  for (int i = 0; i < p.size(); ++i)
    g[i] = p[i] > 0.0 ? -p[i] * (std::log(p[i]) + entropy) : 0.0;
  return g;
}

}  // namespace dhrl
