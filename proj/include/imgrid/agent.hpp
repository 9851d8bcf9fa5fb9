#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "imgrid/gridworld.hpp"
#include "imgrid/net.hpp"
#include "imgrid/rollout.hpp"
#include "imgrid/vae.hpp"

namespace imgrid::agent {

// Independent RNG stream tags, combined with the run seed via derive_seed so
// enabling one component never shifts another's draw sequence.
inline constexpr std::uint64_t kStreamActorInit = 1;
inline constexpr std::uint64_t kStreamCriticInit = 2;
inline constexpr std::uint64_t kStreamVaeInit = 3;
inline constexpr std::uint64_t kStreamAction = 4;
inline constexpr std::uint64_t kStreamVaeTrain = 5;
inline constexpr std::uint64_t kStreamLayout = 6;

struct ActorCritic {
  nn::DenseNet actor;   // observation -> action logits
  nn::DenseNet critic;  // observation -> scalar value

  static ActorCritic create(int obs_dim, int num_actions, int hidden_width,
                            std::uint64_t run_seed);
};

struct TrainingConfig {
  double beta_vae = 0.005;
  double beta_llm = 0.005;
  double gamma = 0.99;
  int n_steps = 128;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  int episodes = 1;
  std::uint64_t seed = 0;
  double actor_lr = 7e-4;
  double critic_lr = 7e-4;
  double vae_lr = 1e-3;
  int hidden_width = 128;
  int latent_dim = 16;
  int vae_epochs = 4;
  // A fresh seeded layout per episode by default (the task is to learn the
  // skill, not one maze); false freezes the run's first layout.
  bool layout_per_episode = true;
  double vae_norm_fixed_scale = 0.0;  // 0: running-max KL normalizer

  void validate() const;  // throws ConfigError
};

struct EpisodeLog {
  int episode = 0;
  double extrinsic_return = 0.0;
  double vae_reward_sum = 0.0;
  double llm_reward_sum = 0.0;
  int steps = 0;
  bool success = false;
};

struct TrainStats {
  long segment_updates = 0;
  long vae_trainings = 0;
  long env_steps = 0;
};

struct ActionChoice {
  int action = 0;
  double log_prob = 0.0;
  double value_estimate = 0.0;
};

struct UpdateLosses {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
};

/// r_total = r_ext + beta_vae * r_vae + beta_llm * r_llm.
double combined_reward(double r_ext, double r_vae, double r_llm,
                       const TrainingConfig& cfg);

/// Samples from softmax(actor(obs)); records log-probability and the
/// critic's value estimate for the same state.
ActionChoice select_action(const ActorCritic& ac, std::span<const double> obs,
                           RandomEngine& rng);

/// Backward recursion G_t = r_total(t) + gamma * G_{t+1} from
/// G_N = bootstrap_value; a terminal transition zeroes the chain behind it.
std::vector<double> compute_returns(const RolloutBuffer& segment,
                                    double bootstrap_value,
                                    const TrainingConfig& cfg);

/// One actor step on mean(-log pi(a_t) * A_t) - entropy_coef * mean entropy
/// (advantages A_t = G_t - value_estimate_t held constant), and one critic
/// step on value_coef * mean((G_t - critic(s_t))^2).
UpdateLosses update(ActorCritic& ac, const RolloutBuffer& segment,
                    std::span<const double> returns, const TrainingConfig& cfg,
                    nn::AdamState& actor_opt, nn::AdamState& critic_opt);

using EnvFactory = std::function<grid::GridWorld(int episode)>;
using ScoreFn = std::function<double(const grid::VisibleObjects&)>;
using EpisodeCallback = std::function<void(const EpisodeLog&)>;

/// Intrinsic-reward machinery. A hook may stay null/empty when its beta is
/// zero; that path is then never invoked, so a zero-beta run is bit-for-bit
/// a plain A2C run.
struct IntrinsicHooks {
  vae::VaeModel* vae_model = nullptr;
  vae::KlNormalizer* normalizer = nullptr;
  nn::AdamState* vae_encoder_opt = nullptr;
  nn::AdamState* vae_decoder_opt = nullptr;
  ScoreFn llm_score;
};

struct TrainResult {
  std::vector<EpisodeLog> episodes;
  TrainStats stats;
};

/// Full training loop: per episode, reset the environment and re-seed the
/// segment buffer with s_0; per step, act, collect the three rewards, and
/// store the transition; every n_steps (and at episode end) compute returns,
/// update actor/critic, train the VAE on the buffered states, then clear and
/// re-seed the buffer with the current state. on_episode fires after each
/// episode so callers can persist logs incrementally.
TrainResult train(const EnvFactory& make_env, ActorCritic& ac,
                  nn::AdamState& actor_opt, nn::AdamState& critic_opt,
                  IntrinsicHooks& hooks, const TrainingConfig& cfg,
                  const EpisodeCallback& on_episode = {});

}  // namespace imgrid::agent
