#include "imgrid/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "imgrid/errors.hpp"

namespace imgrid::nn {

namespace {

void apply_activation(Activation act, std::vector<double>& v) {
  switch (act) {
    case Activation::Identity:
      break;
    case Activation::Tanh:
      for (double& x : v) x = std::tanh(x);
      break;
    case Activation::Relu:
      for (double& x : v) x = x > 0.0 ? x : 0.0;
      break;
  }
}

// Derivative of the activation expressed through its output value.
double activation_deriv(Activation act, double post) {
  switch (act) {
    case Activation::Identity:
      return 1.0;
    case Activation::Tanh:
      return 1.0 - post * post;
    case Activation::Relu:
      return post > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

}  // namespace

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw ConfigError("unknown activation: " + name);
}

DenseNet DenseNet::create(const std::vector<int>& dims,
                          const std::vector<Activation>& acts,
                          RandomEngine& rng) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1)
    throw UsageError("DenseNet::create: dims/acts size mismatch");
  DenseNet net;
  net.layers.resize(dims.size() - 1);
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    Layer& layer = net.layers[k];
    layer.in = dims[k];
    layer.out = dims[k + 1];
    layer.act = acts[k];
    if (layer.in <= 0 || layer.out <= 0)
      throw UsageError("DenseNet::create: non-positive layer dimension");
    layer.w.resize(static_cast<std::size_t>(layer.out) * layer.in);
    layer.b.assign(static_cast<std::size_t>(layer.out), 0.0);
    const double limit = std::sqrt(6.0 / (layer.in + layer.out));
    for (double& w : layer.w) w = (2.0 * rng.uniform() - 1.0) * limit;
  }
  return net;
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.w.size() + l.b.size();
  return n;
}

bool DenseNet::all_finite() const {
  for (const Layer& l : layers) {
    for (double x : l.w)
      if (!std::isfinite(x)) return false;
    for (double x : l.b)
      if (!std::isfinite(x)) return false;
  }
  return true;
}

GradientSet GradientSet::zeros_like(const DenseNet& net) {
  GradientSet g;
  g.layers.resize(net.layers.size());
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    g.layers[k].w.assign(net.layers[k].w.size(), 0.0);
    g.layers[k].b.assign(net.layers[k].b.size(), 0.0);
  }
  g.input.assign(static_cast<std::size_t>(net.input_dim()), 0.0);
  return g;
}

void GradientSet::accumulate(const GradientSet& other) {
  if (layers.size() != other.layers.size())
    throw UsageError("GradientSet::accumulate: shape mismatch");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].w.size() != other.layers[k].w.size() ||
        layers[k].b.size() != other.layers[k].b.size())
      throw UsageError("GradientSet::accumulate: shape mismatch");
    for (std::size_t i = 0; i < layers[k].w.size(); ++i)
      layers[k].w[i] += other.layers[k].w[i];
    for (std::size_t i = 0; i < layers[k].b.size(); ++i)
      layers[k].b[i] += other.layers[k].b[i];
  }
  for (std::size_t i = 0; i < input.size() && i < other.input.size(); ++i)
    input[i] += other.input[i];
}

void GradientSet::scale(double factor) {
  for (LayerGrad& l : layers) {
    for (double& x : l.w) x *= factor;
    for (double& x : l.b) x *= factor;
  }
  for (double& x : input) x *= factor;
}

bool GradientSet::all_finite() const {
  for (const LayerGrad& l : layers) {
    for (double x : l.w)
      if (!std::isfinite(x)) return false;
    for (double x : l.b)
      if (!std::isfinite(x)) return false;
  }
  return true;
}

std::vector<double> forward(const DenseNet& net, std::span<const double> input,
                            Tape* tape) {
  if (net.layers.empty()) throw UsageError("forward: empty net");
  if (static_cast<int>(input.size()) != net.input_dim())
    throw UsageError("forward: input length does not match input_dim");
  for (double x : input)
    if (!std::isfinite(x)) throw UsageError("forward: non-finite input");

  if (tape) {
    tape->input.assign(input.begin(), input.end());
    tape->pre.clear();
    tape->post.clear();
    tape->pre.reserve(net.layers.size());
    tape->post.reserve(net.layers.size());
  }

  std::vector<double> a(input.begin(), input.end());
  for (const Layer& layer : net.layers) {
    std::vector<double> z(static_cast<std::size_t>(layer.out));
    const double* w = layer.w.data();
    for (int o = 0; o < layer.out; ++o) {
      const double* row = w + static_cast<std::size_t>(o) * layer.in;
      double acc = layer.b[static_cast<std::size_t>(o)];
      for (int i = 0; i < layer.in; ++i) acc += row[i] * a[static_cast<std::size_t>(i)];
      z[static_cast<std::size_t>(o)] = acc;
    }
    if (tape) tape->pre.push_back(z);
    apply_activation(layer.act, z);
    if (tape) tape->post.push_back(z);
    a = std::move(z);
  }
  return a;
}

GradientSet backward(const DenseNet& net, const Tape& tape,
                     std::span<const double> output_grad) {
  const std::size_t n_layers = net.layers.size();
  if (tape.pre.size() != n_layers || tape.post.size() != n_layers ||
      static_cast<int>(tape.input.size()) != net.input_dim())
    throw UsageError("backward: tape does not match net");
  if (static_cast<int>(output_grad.size()) != net.output_dim())
    throw UsageError("backward: output_grad length does not match output_dim");
  for (std::size_t k = 0; k < n_layers; ++k) {
    if (static_cast<int>(tape.post[k].size()) != net.layers[k].out)
      throw UsageError("backward: tape does not match net");
  }

  GradientSet grads = GradientSet::zeros_like(net);
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (std::size_t k = n_layers; k-- > 0;) {
    const Layer& layer = net.layers[k];
    const std::vector<double>& prev =
        k == 0 ? tape.input : tape.post[k - 1];

    // dL/dz = dL/da * act'(z)
    for (int o = 0; o < layer.out; ++o)
      delta[static_cast<std::size_t>(o)] *=
          activation_deriv(layer.act, tape.post[k][static_cast<std::size_t>(o)]);

    LayerGrad& lg = grads.layers[k];
    for (int o = 0; o < layer.out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      lg.b[static_cast<std::size_t>(o)] += d;
      double* wrow = lg.w.data() + static_cast<std::size_t>(o) * layer.in;
      const double* p = prev.data();
      for (int i = 0; i < layer.in; ++i) wrow[i] += d * p[i];
    }

    std::vector<double> next_delta(static_cast<std::size_t>(layer.in), 0.0);
    for (int o = 0; o < layer.out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      const double* wrow = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) next_delta[static_cast<std::size_t>(i)] += d * wrow[i];
    }
    delta = std::move(next_delta);
  }
  grads.input = std::move(delta);
  return grads;
}

AdamState AdamState::create(const DenseNet& net, double lr) {
  AdamState s;
  s.lr = lr;
  GradientSet z = GradientSet::zeros_like(net);
  s.m = z.layers;
  s.v = z.layers;
  return s;
}

void apply_update(AdamState& opt, DenseNet& net, const GradientSet& grads) {
  if (grads.layers.size() != net.layers.size() ||
      opt.m.size() != net.layers.size())
    throw UsageError("apply_update: shape mismatch");
  if (!grads.all_finite())
    throw TrainingError("apply_update: non-finite gradient");

  opt.step += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));

  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    Layer& layer = net.layers[k];
    const LayerGrad& g = grads.layers[k];
    if (g.w.size() != layer.w.size() || g.b.size() != layer.b.size())
      throw UsageError("apply_update: shape mismatch");
    auto step_param = [&](double& p, double& m, double& v, double grad) {
      m = opt.beta1 * m + (1.0 - opt.beta1) * grad;
      v = opt.beta2 * v + (1.0 - opt.beta2) * grad * grad;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      p -= opt.lr * mhat / (std::sqrt(vhat) + opt.epsilon);
    };
    for (std::size_t i = 0; i < layer.w.size(); ++i)
      step_param(layer.w[i], opt.m[k].w[i], opt.v[k].w[i], g.w[i]);
    for (std::size_t i = 0; i < layer.b.size(); ++i)
      step_param(layer.b[i], opt.m[k].b[i], opt.v[k].b[i], g.b[i]);
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw UsageError("softmax: empty input");
  double mx = logits[0];
  for (double x : logits) {
    if (!std::isfinite(x)) throw UsageError("softmax: non-finite logit");
    mx = std::max(mx, x);
  }
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

double categorical_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

int sample_categorical(std::span<const double> probs, RandomEngine& rng) {
  if (probs.empty()) throw UsageError("sample_categorical: empty input");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw UsageError("sample_categorical: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw UsageError("sample_categorical: probabilities must sum to 1");
  const double u = rng.uniform() * sum;
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return last_positive;  // u landed on the tail rounding gap
}

}  // namespace imgrid::nn
