#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "imgrid/net.hpp"

namespace imgrid::vae {

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;

/// Diagonal Gaussian posterior (mu, log sigma^2) over the latent space.
struct LatentDistribution {
  std::vector<double> mu;
  std::vector<double> logvar;  // clamped to [kLogvarMin, kLogvarMax]
};

/// Encoder maps an observation to 2d outputs (mu, logvar); decoder maps a
/// d-dimensional latent back to observation space.
struct VaeModel {
  nn::DenseNet encoder;
  nn::DenseNet decoder;
  int latent_dim = 0;

  static VaeModel create(int obs_dim, int latent_dim, int hidden_width,
                         RandomEngine& rng);
  int obs_dim() const { return encoder.input_dim(); }
};

LatentDistribution encode(const VaeModel& vae, std::span<const double> obs);

/// Closed-form KL(q || N(0, I)) = 0.5 * sum(mu^2 + e^logvar - logvar - 1).
double kl_divergence(const LatentDistribution& dist);

/// z = mu + exp(logvar / 2) * eps, eps ~ N(0, I).
std::vector<double> reparameterized_sample(const LatentDistribution& dist,
                                           RandomEngine& rng);

/// Running-max normalizer keeping rewards in [0, 1]. The max never resets
/// within a run. Setting fixed_scale > 0 switches to a constant divisor
/// (still clamped to [0, 1]) for sensitivity studies.
struct KlNormalizer {
  double running_max = 0.0;
  double epsilon = 1e-8;
  double fixed_scale = 0.0;

  double normalize(double kl) {
    if (fixed_scale > 0.0)
      return std::clamp(kl / (fixed_scale + epsilon), 0.0, 1.0);
    running_max = std::max(running_max, kl);
    return kl / (running_max + epsilon);
  }
};

/// Novelty reward of an observation: normalized KL of the deterministic
/// encoder posterior (no sampling, so repeated evaluation is reproducible).
double intrinsic_reward(const VaeModel& vae, KlNormalizer& norm,
                        std::span<const double> obs);

/// Per-sample loss (reconstruction MSE + KL) under a frozen noise draw.
/// Gradient outputs are optional so callers can evaluate loss alone, e.g.
/// for finite-difference checks.
double vae_loss(const VaeModel& vae, std::span<const double> obs,
                std::span<const double> eps, nn::GradientSet* encoder_grads,
                nn::GradientSet* decoder_grads);

/// Full-batch training: one Adam step per epoch on the mean loss over the
/// states. Returns the final epoch's mean loss, or nullopt when no epoch ran
/// (empty buffer is warned; epochs = 0 leaves parameters untouched).
std::optional<double> train_vae(VaeModel& vae,
                                const std::vector<std::span<const double>>& states,
                                int epochs, nn::AdamState& encoder_opt,
                                nn::AdamState& decoder_opt, RandomEngine& rng);

}  // namespace imgrid::vae
