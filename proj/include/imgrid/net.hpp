#pragma once

#include <span>
#include <string>
#include <vector>

#include "imgrid/random.hpp"

namespace imgrid::nn {

enum class Activation { Identity, Tanh, Relu };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct Layer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // row-major, out x in
  std::vector<double> b;  // out
  Activation act = Activation::Identity;
};

/// Plain dense feed-forward network. Layers chain: layer k's output feeds
/// layer k+1's input.
class DenseNet {
 public:
  DenseNet() = default;

  /// dims = {input, hidden..., output}; acts has dims.size()-1 entries.
  /// Weights are Glorot-uniform from rng, biases zero.
  static DenseNet create(const std::vector<int>& dims,
                         const std::vector<Activation>& acts, RandomEngine& rng);

  int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t parameter_count() const;
  bool all_finite() const;

  std::vector<Layer> layers;
};

/// Per-layer activations recorded by forward, consumed by backward.
struct Tape {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;   // z_k = W_k a_{k-1} + b_k
  std::vector<std::vector<double>> post;  // a_k = act(z_k)
};

/// Gradients shaped like the owning net, plus the gradient w.r.t. the input
/// (needed to chain networks, e.g. decoder into encoder).
struct LayerGrad {
  std::vector<double> w;
  std::vector<double> b;
};

struct GradientSet {
  std::vector<LayerGrad> layers;
  std::vector<double> input;

  static GradientSet zeros_like(const DenseNet& net);
  void accumulate(const GradientSet& other);
  void scale(double factor);
  bool all_finite() const;
};

/// Evaluates the net; fills tape when non-null.
std::vector<double> forward(const DenseNet& net, std::span<const double> input,
                            Tape* tape = nullptr);

/// Chain-rule pass over a tape produced by forward on the same net.
GradientSet backward(const DenseNet& net, const Tape& tape,
                     std::span<const double> output_grad);

/// Adam accumulators for one DenseNet.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long long step = 0;
  std::vector<LayerGrad> m;
  std::vector<LayerGrad> v;

  static AdamState create(const DenseNet& net, double lr);
};

/// One Adam step. Throws TrainingError on non-finite gradients.
void apply_update(AdamState& opt, DenseNet& net, const GradientSet& grads);

/// Numerically stable softmax (max subtraction).
std::vector<double> softmax(std::span<const double> logits);

/// -sum p log p, with 0 log 0 = 0.
double categorical_entropy(std::span<const double> probs);

/// Samples an index with probability probs[i]. probs must sum to 1 within
/// 1e-6; all-zero input is a usage error.
int sample_categorical(std::span<const double> probs, RandomEngine& rng);

}  // namespace imgrid::nn
