#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "roep/rng.hpp"

// Small dense building blocks for the recurrent agent. Every backward function
// accumulates (+=) into the gradient buffers it is handed, so callers can sum
// contributions from several time steps or losses before an optimizer step.
namespace roep::nn {

class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<const double> row(std::size_t r) const { return std::span<const double>(data_).subspan(r * cols(), cols()); }

  void fill(double v);

  friend bool operator==(const Tensor&, const Tensor&) = default;

private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// A trainable tensor with its gradient and Adam moments.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;

  void zero_grad() { grad.fill(0.0); }
};

/// Uniform(-bound, bound) fill.
void init_uniform(Tensor& tensor, double bound, Rng& rng);

// --- affine: y = W x + b, W is [m x n] ---------------------------------------

std::vector<double> affine_forward(const Tensor& weight, const Tensor& bias, std::span<const double> x);
/// Any of the output gradients may be omitted (nullptr / empty span).
void affine_backward(const Tensor& weight, std::span<const double> x, std::span<const double> upstream,
                     Tensor* weight_grad, Tensor* bias_grad, std::span<double> input_grad);

// --- ReLU ---------------------------------------------------------------------

void relu_inplace(std::span<double> values);
/// Zeroes `grad` wherever the forward output was not positive.
void relu_backward(std::span<const double> output, std::span<double> grad);

// --- recurrent memory cell: m = ReLU(W_m m_prev + W_c c + b) -----------------

struct RecurrentWeights {
  const Tensor& recurrent;  // [d_m x d_m]
  const Tensor& input;      // [d_m x d_c]
  const Tensor& bias;       // [d_m]
};

struct RecurrentGrads {
  Tensor* recurrent = nullptr;
  Tensor* input = nullptr;
  Tensor* bias = nullptr;
};

std::vector<double> recurrent_cell_forward(const RecurrentWeights& w, std::span<const double> m_prev,
                                           std::span<const double> c);
/// `output` is the value returned by the forward pass.
void recurrent_cell_backward(const RecurrentWeights& w, std::span<const double> m_prev, std::span<const double> c,
                             std::span<const double> output, std::span<const double> upstream,
                             const RecurrentGrads& grads, std::span<double> m_prev_grad,
                             std::span<double> c_grad);

// --- embedding ------------------------------------------------------------------

std::span<const double> embedding_lookup(const Tensor& table, std::size_t id);
void embedding_backward(Tensor& table_grad, std::size_t id, std::span<const double> upstream);

// --- softmax ------------------------------------------------------------------

/// Max-subtracted softmax. Throws std::invalid_argument on non-finite logits.
std::vector<double> softmax(std::span<const double> logits);
/// Gradient w.r.t. the logits given the gradient w.r.t. the probabilities.
std::vector<double> softmax_backward(std::span<const double> probs, std::span<const double> upstream);
std::size_t argmax(std::span<const double> values);

struct CategoricalDraw {
  std::size_t index = 0;
  double log_probability = 0.0;
};

/// Samples from softmax(logits). Requires at least two logits.
CategoricalDraw softmax_categorical(std::span<const double> logits, Rng& rng);

// --- losses ---------------------------------------------------------------------

inline constexpr double kProbabilityClamp = 1e-12;

/// Binary cross-entropy on a probability, clamped to [eps, 1 - eps].
double bce(bool y, double y_hat);

struct BceResult {
  double loss = 0.0;
  double y_hat = 0.0;                   // probability of "yes"
  std::vector<double> logit_grad;       // w.r.t. the two head logits
};

/// Two-way softmax head; logit 0 is "yes", logit 1 is "no".
BceResult bce_loss(bool y, std::span<const double> logits);

struct ReinforceResult {
  double loss = 0.0;
  std::vector<std::vector<double>> logit_grads;  // one per step
};

/// L = -sum_t log pi(a_t) (R_t - b_t) with the baselines treated as constants.
/// Throws std::invalid_argument when the sequences differ in length.
ReinforceResult reinforce_loss(std::span<const std::vector<double>> logits, std::span<const std::size_t> actions,
                               std::span<const double> returns, std::span<const double> baselines);

struct BaselineLossResult {
  double loss = 0.0;
  std::vector<double> baseline_grads;
};

/// Mean squared error over the T + 1 steps of an episode.
BaselineLossResult baseline_loss(std::span<const double> returns, std::span<const double> baselines);

// --- optimizer ------------------------------------------------------------------

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
public:
  explicit Adam(AdamSettings settings = {}) : settings_(settings) {}

  /// Bias-corrected update of every parameter, then zeroes the gradients.
  /// Moments that fall below the smallest normal double are set to zero.
  void step(std::span<Parameter* const> parameters, double learning_rate);

  long steps() const { return steps_; }
  void set_steps(long steps) { steps_ = steps; }
  const AdamSettings& settings() const { return settings_; }

private:
  AdamSettings settings_;
  long steps_ = 0;
};

}  // namespace roep::nn
