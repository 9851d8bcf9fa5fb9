#include "imgrid/vae.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "imgrid/errors.hpp"

namespace imgrid::vae {

VaeModel VaeModel::create(int obs_dim, int latent_dim, int hidden_width,
                          RandomEngine& rng) {
  if (obs_dim <= 0 || latent_dim <= 0 || hidden_width <= 0)
    throw ConfigError("VaeModel::create: dimensions must be positive");
  VaeModel vae;
  vae.latent_dim = latent_dim;
  using nn::Activation;
  vae.encoder = nn::DenseNet::create(
      {obs_dim, hidden_width, hidden_width, 2 * latent_dim},
      {Activation::Tanh, Activation::Tanh, Activation::Identity}, rng);
  vae.decoder = nn::DenseNet::create(
      {latent_dim, hidden_width, hidden_width, obs_dim},
      {Activation::Tanh, Activation::Tanh, Activation::Identity}, rng);
  return vae;
}

LatentDistribution encode(const VaeModel& vae, std::span<const double> obs) {
  const std::vector<double> h = nn::forward(vae.encoder, obs);
  const int d = vae.latent_dim;
  LatentDistribution dist;
  dist.mu.assign(h.begin(), h.begin() + d);
  dist.logvar.assign(h.begin() + d, h.end());
  for (double& lv : dist.logvar) lv = std::clamp(lv, kLogvarMin, kLogvarMax);
  return dist;
}

double kl_divergence(const LatentDistribution& dist) {
  double kl = 0.0;
  for (std::size_t i = 0; i < dist.mu.size(); ++i) {
    const double mu = dist.mu[i];
    const double lv = dist.logvar[i];
    kl += mu * mu + std::exp(lv) - lv - 1.0;
  }
  return std::max(0.5 * kl, 0.0);
}

std::vector<double> reparameterized_sample(const LatentDistribution& dist,
                                           RandomEngine& rng) {
  std::vector<double> z(dist.mu.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = dist.mu[i] + std::exp(0.5 * dist.logvar[i]) * rng.normal();
  return z;
}

double intrinsic_reward(const VaeModel& vae, KlNormalizer& norm,
                        std::span<const double> obs) {
  return norm.normalize(kl_divergence(encode(vae, obs)));
}

double vae_loss(const VaeModel& vae, std::span<const double> obs,
                std::span<const double> eps, nn::GradientSet* encoder_grads,
                nn::GradientSet* decoder_grads) {
  if (static_cast<int>(eps.size()) != vae.latent_dim)
    throw UsageError("vae_loss: eps length must equal latent_dim");

  nn::Tape enc_tape;
  const std::vector<double> h = nn::forward(vae.encoder, obs, &enc_tape);
  const int d = vae.latent_dim;

  std::vector<double> mu(h.begin(), h.begin() + d);
  std::vector<double> logvar(h.begin() + d, h.end());
  std::vector<bool> clamped(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    clamped[static_cast<std::size_t>(i)] =
        logvar[static_cast<std::size_t>(i)] < kLogvarMin ||
        logvar[static_cast<std::size_t>(i)] > kLogvarMax;
    logvar[static_cast<std::size_t>(i)] =
        std::clamp(logvar[static_cast<std::size_t>(i)], kLogvarMin, kLogvarMax);
  }

  std::vector<double> sigma(static_cast<std::size_t>(d));
  std::vector<double> z(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    sigma[static_cast<std::size_t>(i)] = std::exp(0.5 * logvar[static_cast<std::size_t>(i)]);
    z[static_cast<std::size_t>(i)] =
        mu[static_cast<std::size_t>(i)] + sigma[static_cast<std::size_t>(i)] * eps[static_cast<std::size_t>(i)];
  }

  nn::Tape dec_tape;
  const std::vector<double> recon = nn::forward(vae.decoder, z, &dec_tape);

  const int n = static_cast<int>(obs.size());
  double mse = 0.0;
  for (int i = 0; i < n; ++i) {
    const double diff = recon[static_cast<std::size_t>(i)] - obs[static_cast<std::size_t>(i)];
    mse += diff * diff;
  }
  mse /= n;

  const double kl = kl_divergence({mu, logvar});
  const double loss = mse + kl;
  if (!encoder_grads && !decoder_grads) return loss;

  // d(mse)/d(recon) through the decoder, collecting dL/dz on the way.
  std::vector<double> recon_grad(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    recon_grad[static_cast<std::size_t>(i)] =
        2.0 * (recon[static_cast<std::size_t>(i)] - obs[static_cast<std::size_t>(i)]) / n;
  nn::GradientSet dec = nn::backward(vae.decoder, dec_tape, recon_grad);

  // Encoder head gradient: reparameterization path plus the KL terms, with
  // the clamp zeroing logvar gradients outside its range.
  std::vector<double> head_grad(static_cast<std::size_t>(2 * d), 0.0);
  for (int i = 0; i < d; ++i) {
    const double dz = dec.input[static_cast<std::size_t>(i)];
    head_grad[static_cast<std::size_t>(i)] = dz + mu[static_cast<std::size_t>(i)];
    if (!clamped[static_cast<std::size_t>(i)]) {
      head_grad[static_cast<std::size_t>(d + i)] =
          dz * 0.5 * sigma[static_cast<std::size_t>(i)] * eps[static_cast<std::size_t>(i)] +
          0.5 * (std::exp(logvar[static_cast<std::size_t>(i)]) - 1.0);
    }
  }
  nn::GradientSet enc = nn::backward(vae.encoder, enc_tape, head_grad);

  if (decoder_grads) *decoder_grads = std::move(dec);
  if (encoder_grads) *encoder_grads = std::move(enc);
  return loss;
}

std::optional<double> train_vae(VaeModel& vae,
                                const std::vector<std::span<const double>>& states,
                                int epochs, nn::AdamState& encoder_opt,
                                nn::AdamState& decoder_opt, RandomEngine& rng) {
  if (states.empty()) {
    std::fprintf(stderr, "warning: train_vae called with an empty buffer\n");
    return std::nullopt;
  }

  double epoch_loss = 0.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    nn::GradientSet enc_acc = nn::GradientSet::zeros_like(vae.encoder);
    nn::GradientSet dec_acc = nn::GradientSet::zeros_like(vae.decoder);
    epoch_loss = 0.0;
    std::vector<double> eps(static_cast<std::size_t>(vae.latent_dim));
    nn::GradientSet enc_g, dec_g;
    for (const std::span<const double>& s : states) {
      for (double& e : eps) e = rng.normal();
      epoch_loss += vae_loss(vae, s, eps, &enc_g, &dec_g);
      enc_acc.accumulate(enc_g);
      dec_acc.accumulate(dec_g);
    }
    const double inv = 1.0 / static_cast<double>(states.size());
    enc_acc.scale(inv);
    dec_acc.scale(inv);
    epoch_loss *= inv;
    nn::apply_update(encoder_opt, vae.encoder, enc_acc);
    nn::apply_update(decoder_opt, vae.decoder, dec_acc);
  }
  if (epochs == 0) return std::nullopt;
  return epoch_loss;
}

}  // namespace imgrid::vae
