#include "roep/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace roep::nn {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  if (shape.empty()) throw std::invalid_argument("tensor: empty shape");
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("tensor: zero-sized dimension");
    n *= d;
  }
  return n;
}

constexpr double kSmallestNormal = std::numeric_limits<double>::min();

void require(bool condition, const char* message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != shape_product(shape_)) {
    throw std::invalid_argument("tensor: value count does not match the shape");
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)),
      value(std::move(value_)),
      grad(value.shape()),
      adam_m(value.shape()),
      adam_v(value.shape()) {}

void init_uniform(Tensor& tensor, double bound, Rng& rng) {
  for (double& v : tensor.values()) v = rng.uniform(-bound, bound);
}

std::vector<double> affine_forward(const Tensor& weight, const Tensor& bias, std::span<const double> x) {
  require(weight.rank() == 2, "affine: weight must be a matrix");
  require(weight.cols() == x.size(), "affine: input width does not match the weight");
  require(bias.size() == weight.rows(), "affine: bias length does not match the weight");
  const std::size_t m = weight.rows();
  const std::size_t n = weight.cols();
  std::vector<double> y(m);
  const double* w = weight.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = w + i * n;
    double acc = bias[i];
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

void affine_backward(const Tensor& weight, std::span<const double> x, std::span<const double> upstream,
                     Tensor* weight_grad, Tensor* bias_grad, std::span<double> input_grad) {
  const std::size_t m = weight.rows();
  const std::size_t n = weight.cols();
  require(x.size() == n && upstream.size() == m, "affine_backward: shape mismatch");
  require(input_grad.empty() || input_grad.size() == n, "affine_backward: input gradient shape mismatch");
  const double* w = weight.values().data();
  double* gw = weight_grad ? weight_grad->values().data() : nullptr;
  for (std::size_t i = 0; i < m; ++i) {
    const double g = upstream[i];
    if (g == 0.0) continue;
    if (bias_grad) (*bias_grad)[i] += g;
    if (gw) {
      double* grow = gw + i * n;
      for (std::size_t j = 0; j < n; ++j) grow[j] += g * x[j];
    }
    if (!input_grad.empty()) {
      const double* row = w + i * n;
      for (std::size_t j = 0; j < n; ++j) input_grad[j] += g * row[j];
    }
  }
}

void relu_inplace(std::span<double> values) {
  for (double& v : values) v = v > 0.0 ? v : 0.0;
}

void relu_backward(std::span<const double> output, std::span<double> grad) {
  require(output.size() == grad.size(), "relu_backward: shape mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(output[i] > 0.0)) grad[i] = 0.0;
  }
}

std::vector<double> recurrent_cell_forward(const RecurrentWeights& w, std::span<const double> m_prev,
                                           std::span<const double> c) {
  require(w.recurrent.rank() == 2 && w.recurrent.rows() == w.recurrent.cols(),
          "recurrent cell: recurrent weight must be square");
  require(w.input.rank() == 2 && w.input.rows() == w.recurrent.rows(), "recurrent cell: input weight rows");
  require(w.input.cols() == c.size(), "recurrent cell: input width does not match");
  std::vector<double> m = affine_forward(w.recurrent, w.bias, m_prev);
  const std::size_t n = c.size();
  const double* wc = w.input.values().data();
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double* row = wc + i * n;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * c[j];
    m[i] += acc;
  }
  relu_inplace(m);
  return m;
}

void recurrent_cell_backward(const RecurrentWeights& w, std::span<const double> m_prev, std::span<const double> c,
                             std::span<const double> output, std::span<const double> upstream,
                             const RecurrentGrads& grads, std::span<double> m_prev_grad,
                             std::span<double> c_grad) {
  std::vector<double> pre_grad(upstream.begin(), upstream.end());
  relu_backward(output, pre_grad);
  affine_backward(w.recurrent, m_prev, pre_grad, grads.recurrent, grads.bias, m_prev_grad);
  affine_backward(w.input, c, pre_grad, grads.input, nullptr, c_grad);
}

std::span<const double> embedding_lookup(const Tensor& table, std::size_t id) {
  require(table.rank() == 2 && id < table.rows(), "embedding: id out of range");
  return table.row(id);
}

void embedding_backward(Tensor& table_grad, std::size_t id, std::span<const double> upstream) {
  require(table_grad.rank() == 2 && id < table_grad.rows() && upstream.size() == table_grad.cols(),
          "embedding_backward: shape mismatch");
  for (std::size_t j = 0; j < upstream.size(); ++j) table_grad.at(id, j) += upstream[j];
}

std::vector<double> softmax(std::span<const double> logits) {
  require(!logits.empty(), "softmax: no logits");
  for (double v : logits) {
    if (!std::isfinite(v)) throw std::invalid_argument("softmax: non-finite logit");
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - top);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> softmax_backward(std::span<const double> probs, std::span<const double> upstream) {
  require(probs.size() == upstream.size(), "softmax_backward: shape mismatch");
  double inner = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) inner += probs[i] * upstream[i];
  std::vector<double> g(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) g[i] = probs[i] * (upstream[i] - inner);
  return g;
}

std::size_t argmax(std::span<const double> values) {
  require(!values.empty(), "argmax: empty input");
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

CategoricalDraw softmax_categorical(std::span<const double> logits, Rng& rng) {
  require(logits.size() >= 2, "softmax_categorical: need at least two categories");
  const std::vector<double> p = softmax(logits);
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t index = p.size() - 1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cumulative += p[i];
    if (u < cumulative) {
      index = i;
      break;
    }
  }
  // log p via log-sum-exp, accurate even when p[index] underflows.
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double v : logits) total += std::exp(v - top);
  return {index, logits[index] - top - std::log(total)};
}

double bce(bool y, double y_hat) {
  const double p = std::clamp(y_hat, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return y ? -std::log(p) : -std::log(1.0 - p);
}

BceResult bce_loss(bool y, std::span<const double> logits) {
  require(logits.size() == 2, "bce_loss: prediction head must have two logits");
  const std::vector<double> p = softmax(logits);
  BceResult result;
  result.y_hat = p[0];
  result.loss = bce(y, p[0]);
  // d/dlogits of -log p[target] is p - onehot(target).
  const std::size_t target = y ? 0 : 1;
  result.logit_grad = p;
  result.logit_grad[target] -= 1.0;
  return result;
}

ReinforceResult reinforce_loss(std::span<const std::vector<double>> logits, std::span<const std::size_t> actions,
                               std::span<const double> returns, std::span<const double> baselines) {
  const std::size_t n = logits.size();
  if (actions.size() != n || returns.size() != n || baselines.size() != n) {
    throw std::invalid_argument("reinforce_loss: sequence lengths differ");
  }
  ReinforceResult result;
  result.logit_grads.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::vector<double> p = softmax(logits[t]);
    require(actions[t] < p.size(), "reinforce_loss: action index out of range");
    const double advantage = returns[t] - baselines[t];
    const double top = *std::max_element(logits[t].begin(), logits[t].end());
    double total = 0.0;
    for (double v : logits[t]) total += std::exp(v - top);
    const double log_prob = logits[t][actions[t]] - top - std::log(total);
    result.loss -= log_prob * advantage;
    std::vector<double> g(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      g[k] = -advantage * ((k == actions[t] ? 1.0 : 0.0) - p[k]);
    }
    result.logit_grads.push_back(std::move(g));
  }
  return result;
}

BaselineLossResult baseline_loss(std::span<const double> returns, std::span<const double> baselines) {
  require(returns.size() == baselines.size() && !returns.empty(), "baseline_loss: sequence lengths differ");
  const double n = static_cast<double>(returns.size());
  BaselineLossResult result;
  result.baseline_grads.resize(returns.size());
  for (std::size_t t = 0; t < returns.size(); ++t) {
    const double diff = returns[t] - baselines[t];
    result.loss += diff * diff / n;
    result.baseline_grads[t] = -2.0 * diff / n;
  }
  return result;
}

void Adam::step(std::span<Parameter* const> parameters, double learning_rate) {
  ++steps_;
  const double b1 = settings_.beta1;
  const double b2 = settings_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (Parameter* p : parameters) {
    auto value = p->value.values();
    auto grad = p->grad.values();
    auto m = p->adam_m.values();
    auto v = p->adam_v.values();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      // Moments of parameters that stop receiving gradient decay geometrically
      // into the subnormal range, where arithmetic is an order of magnitude
      // slower. Their contribution there is below 1e-300, so drop them.
      if (std::abs(m[i]) < kSmallestNormal) m[i] = 0.0;
      if (v[i] < kSmallestNormal) v[i] = 0.0;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + settings_.epsilon);
      grad[i] = 0.0;
    }
  }
}

}  // namespace roep::nn
