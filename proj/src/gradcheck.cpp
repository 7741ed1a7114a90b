#include "roep/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "roep/nn.hpp"

namespace roep::nn {

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kRelativeErrorFloor});
  return std::abs(analytic - numeric) / scale;
}

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) throw std::invalid_argument("max_relative_error: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) worst = std::max(worst, relative_error(analytic[i], numeric[i]));
  return worst;
}

std::vector<double> numeric_gradient(const std::function<double()>& f, std::span<double> x, double step) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f();
    x[i] = saved - step;
    const double down = f();
    x[i] = saved;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  init_uniform(t, scale, rng);
  return t;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::size_t dim(Rng& rng) { return 1 + rng.index(6); }

double check_affine(Rng& rng) {
  const std::size_t m = dim(rng), n = dim(rng);
  Tensor w = random_tensor({m, n}, rng);
  Tensor b = random_tensor({m}, rng);
  std::vector<double> x = random_vector(n, rng);
  const std::vector<double> r = random_vector(m, rng);
  auto f = [&] { return dot(r, affine_forward(w, b, x)); };

  Tensor gw({m, n}), gb({m});
  std::vector<double> gx(n, 0.0);
  affine_backward(w, x, r, &gw, &gb, gx);
  double worst = max_relative_error(gw.values(), numeric_gradient(f, w.values()));
  worst = std::max(worst, max_relative_error(gb.values(), numeric_gradient(f, b.values())));
  worst = std::max(worst, max_relative_error(gx, numeric_gradient(f, x)));
  return worst;
}

double check_relu(Rng& rng) {
  const std::size_t n = dim(rng);
  std::vector<double> x = random_vector(n, rng);
  const std::vector<double> r = random_vector(n, rng);
  auto f = [&] {
    std::vector<double> y = x;
    relu_inplace(y);
    return dot(r, y);
  };
  std::vector<double> y = x;
  relu_inplace(y);
  std::vector<double> g = r;
  relu_backward(y, g);
  return max_relative_error(g, numeric_gradient(f, x));
}

double check_softmax(Rng& rng) {
  const std::size_t n = 2 + rng.index(5);
  std::vector<double> z = random_vector(n, rng, 3.0);
  const std::vector<double> r = random_vector(n, rng);
  auto f = [&] { return dot(r, softmax(z)); };
  const auto g = softmax_backward(softmax(z), r);
  return max_relative_error(g, numeric_gradient(f, z));
}

double check_recurrent(Rng& rng) {
  const std::size_t dm = dim(rng), dc = dim(rng);
  Tensor wm = random_tensor({dm, dm}, rng);
  Tensor wc = random_tensor({dm, dc}, rng);
  Tensor b = random_tensor({dm}, rng);
  std::vector<double> m_prev = random_vector(dm, rng);
  std::vector<double> c = random_vector(dc, rng);
  const std::vector<double> r = random_vector(dm, rng);
  const RecurrentWeights weights{wm, wc, b};
  auto f = [&] { return dot(r, recurrent_cell_forward(weights, m_prev, c)); };

  Tensor gwm({dm, dm}), gwc({dm, dc}), gb({dm});
  std::vector<double> gm(dm, 0.0), gc(dc, 0.0);
  const auto out = recurrent_cell_forward(weights, m_prev, c);
  recurrent_cell_backward(weights, m_prev, c, out, r, {&gwm, &gwc, &gb}, gm, gc);
  double worst = max_relative_error(gwm.values(), numeric_gradient(f, wm.values()));
  worst = std::max(worst, max_relative_error(gwc.values(), numeric_gradient(f, wc.values())));
  worst = std::max(worst, max_relative_error(gb.values(), numeric_gradient(f, b.values())));
  worst = std::max(worst, max_relative_error(gm, numeric_gradient(f, m_prev)));
  worst = std::max(worst, max_relative_error(gc, numeric_gradient(f, c)));
  return worst;
}

double check_embedding(Rng& rng) {
  const std::size_t vocab = dim(rng), width = dim(rng);
  Tensor table = random_tensor({vocab, width}, rng);
  const std::size_t id = rng.index(vocab);
  const std::vector<double> r = random_vector(width, rng);
  auto f = [&] { return dot(r, embedding_lookup(table, id)); };
  Tensor g({vocab, width});
  embedding_backward(g, id, r);
  return max_relative_error(g.values(), numeric_gradient(f, table.values()));
}

double check_bce(Rng& rng) {
  std::vector<double> z = random_vector(2, rng, 3.0);
  const bool y = rng.bernoulli(0.5);
  auto f = [&] { return bce_loss(y, z).loss; };
  return max_relative_error(bce_loss(y, z).logit_grad, numeric_gradient(f, z));
}

double check_reinforce(Rng& rng) {
  const std::size_t steps = 1 + rng.index(7);
  std::vector<std::vector<double>> logits(steps);
  std::vector<std::size_t> actions(steps);
  std::vector<double> returns(steps), baselines(steps);
  const double ret = rng.uniform(-1.0, 1.5);
  for (std::size_t t = 0; t < steps; ++t) {
    logits[t] = random_vector(3, rng, 2.0);
    actions[t] = rng.index(3);
    returns[t] = ret;
    baselines[t] = rng.uniform(-1.0, 1.5);
  }
  const auto result = reinforce_loss(logits, actions, returns, baselines);
  double worst = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    auto f = [&] { return reinforce_loss(logits, actions, returns, baselines).loss; };
    worst = std::max(worst, max_relative_error(result.logit_grads[t], numeric_gradient(f, logits[t])));
  }
  return worst;
}

double check_baseline(Rng& rng) {
  const std::size_t steps = 1 + rng.index(7);
  const std::vector<double> returns(steps, rng.uniform(-1.0, 1.5));
  std::vector<double> baselines = random_vector(steps, rng, 1.5);
  auto f = [&] { return baseline_loss(returns, baselines).loss; };
  return max_relative_error(baseline_loss(returns, baselines).baseline_grads, numeric_gradient(f, baselines));
}

}  // namespace

std::vector<GradcheckEntry> layer_gradchecks(Rng& rng, int instances) {
  struct Check {
    const char* name;
    double (*run)(Rng&);
  };
  const Check checks[] = {
      {"affine", check_affine},       {"relu", check_relu},
      {"softmax", check_softmax},     {"recurrent_cell", check_recurrent},
      {"embedding", check_embedding}, {"bce_loss", check_bce},
      {"reinforce_loss", check_reinforce}, {"baseline_loss", check_baseline},
  };
  std::vector<GradcheckEntry> report;
  for (const auto& check : checks) {
    GradcheckEntry entry{check.name, 0.0, instances};
    for (int i = 0; i < instances; ++i) {
      entry.max_relative_error = std::max(entry.max_relative_error, check.run(rng));
    }
    report.push_back(entry);
  }
  return report;
}

}  // namespace roep::nn
