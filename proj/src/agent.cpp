#include "imgrid/agent.hpp"

#include <cmath>
#include <sstream>

#include "imgrid/errors.hpp"

namespace imgrid::agent {

ActorCritic ActorCritic::create(int obs_dim, int num_actions, int hidden_width,
                                std::uint64_t run_seed) {
  if (obs_dim <= 0 || num_actions <= 0 || hidden_width <= 0)
    throw ConfigError("ActorCritic::create: dimensions must be positive");
  using nn::Activation;
  RandomEngine actor_rng(derive_seed(run_seed, kStreamActorInit));
  RandomEngine critic_rng(derive_seed(run_seed, kStreamCriticInit));
  ActorCritic ac;
  ac.actor = nn::DenseNet::create(
      {obs_dim, hidden_width, hidden_width, num_actions},
      {Activation::Tanh, Activation::Tanh, Activation::Identity}, actor_rng);
  ac.critic = nn::DenseNet::create(
      {obs_dim, hidden_width, hidden_width, 1},
      {Activation::Tanh, Activation::Tanh, Activation::Identity}, critic_rng);
  return ac;
}

void TrainingConfig::validate() const {
  if (beta_vae < 0 || beta_llm < 0)
    throw ConfigError("training config: betas must be non-negative");
  if (!(gamma > 0 && gamma <= 1))
    throw ConfigError("training config: gamma must lie in (0, 1]");
  if (n_steps < 1) throw ConfigError("training config: n_steps must be >= 1");
  if (entropy_coef < 0 || value_coef < 0)
    throw ConfigError("training config: loss coefficients must be non-negative");
  if (episodes < 1) throw ConfigError("training config: episodes must be >= 1");
  if (actor_lr <= 0 || critic_lr <= 0 || vae_lr <= 0)
    throw ConfigError("training config: learning rates must be positive");
  if (hidden_width < 1 || latent_dim < 1)
    throw ConfigError("training config: network sizes must be >= 1");
  if (vae_epochs < 0)
    throw ConfigError("training config: vae_epochs must be >= 0");
  if (vae_norm_fixed_scale < 0)
    throw ConfigError("training config: vae_norm_fixed_scale must be >= 0");
}

double combined_reward(double r_ext, double r_vae, double r_llm,
                       const TrainingConfig& cfg) {
  return r_ext + cfg.beta_vae * r_vae + cfg.beta_llm * r_llm;
}

namespace {

double safe_log(double p) { return std::log(std::max(p, 1e-300)); }

}  // namespace

ActionChoice select_action(const ActorCritic& ac, std::span<const double> obs,
                           RandomEngine& rng) {
  const std::vector<double> probs = nn::softmax(nn::forward(ac.actor, obs));
  ActionChoice choice;
  choice.action = nn::sample_categorical(probs, rng);
  choice.log_prob = safe_log(probs[static_cast<std::size_t>(choice.action)]);
  choice.value_estimate = nn::forward(ac.critic, obs)[0];
  return choice;
}

std::vector<double> compute_returns(const RolloutBuffer& segment,
                                    double bootstrap_value,
                                    const TrainingConfig& cfg) {
  if (segment.empty()) throw UsageError("compute_returns: empty segment");
  std::vector<double> g(segment.size());
  double running = bootstrap_value;
  for (std::size_t k = segment.size(); k-- > 0;) {
    const Transition& t = segment[k];
    if (t.terminal) running = 0.0;
    running = combined_reward(t.r_extrinsic, t.r_vae, t.r_llm, cfg) +
              cfg.gamma * running;
    g[k] = running;
  }
  return g;
}

UpdateLosses update(ActorCritic& ac, const RolloutBuffer& segment,
                    std::span<const double> returns, const TrainingConfig& cfg,
                    nn::AdamState& actor_opt, nn::AdamState& critic_opt) {
  if (segment.empty()) throw UsageError("update: empty segment");
  if (returns.size() != segment.size())
    throw UsageError("update: returns misaligned with segment");

  const double batch = static_cast<double>(segment.size());
  nn::GradientSet actor_acc = nn::GradientSet::zeros_like(ac.actor);
  nn::GradientSet critic_acc = nn::GradientSet::zeros_like(ac.critic);
  double policy_loss = 0.0;
  double entropy_sum = 0.0;
  double value_loss = 0.0;

  nn::Tape tape;
  std::vector<double> head;
  for (std::size_t k = 0; k < segment.size(); ++k) {
    const std::span<const double> obs = segment.obs_before(k);
    const Transition& t = segment[k];
    const double advantage = returns[k] - t.value_estimate;

    const std::vector<double> probs = nn::softmax(nn::forward(ac.actor, obs, &tape));
    const double entropy = nn::categorical_entropy(probs);
    policy_loss += -safe_log(probs[static_cast<std::size_t>(t.action)]) * advantage;
    entropy_sum += entropy;

    // d/dlogits of (-log pi(a) * A - entropy_coef * H), averaged over the
    // segment. The advantage is a constant here.
    head.assign(probs.size(), 0.0);
    for (std::size_t j = 0; j < probs.size(); ++j) {
      const double indicator = (static_cast<int>(j) == t.action) ? 1.0 : 0.0;
      head[j] = (advantage * (probs[j] - indicator) +
                 cfg.entropy_coef * probs[j] * (safe_log(probs[j]) + entropy)) /
                batch;
    }
    actor_acc.accumulate(nn::backward(ac.actor, tape, head));

    const double v = nn::forward(ac.critic, obs, &tape)[0];
    const double err = v - returns[k];
    value_loss += cfg.value_coef * err * err;
    const double chead[1] = {cfg.value_coef * 2.0 * err / batch};
    critic_acc.accumulate(nn::backward(ac.critic, tape, chead));
  }

  UpdateLosses losses;
  losses.entropy = entropy_sum / batch;
  losses.actor_loss = policy_loss / batch - cfg.entropy_coef * losses.entropy;
  losses.critic_loss = value_loss / batch;
  if (!std::isfinite(losses.actor_loss) || !std::isfinite(losses.critic_loss)) {
    std::ostringstream diag;
    diag << "non-finite loss (actor " << losses.actor_loss << ", critic "
         << losses.critic_loss << ") over " << segment.size()
         << " transitions; first return " << returns[0] << ", first value "
         << segment[0].value_estimate;
    throw TrainingError(diag.str());
  }
  nn::apply_update(actor_opt, ac.actor, actor_acc);
  nn::apply_update(critic_opt, ac.critic, critic_acc);
  return losses;
}

TrainResult train(const EnvFactory& make_env, ActorCritic& ac,
                  nn::AdamState& actor_opt, nn::AdamState& critic_opt,
                  IntrinsicHooks& hooks, const TrainingConfig& cfg,
                  const EpisodeCallback& on_episode) {
  cfg.validate();
  const bool use_vae = cfg.beta_vae > 0.0;
  const bool use_llm = cfg.beta_llm > 0.0;
  if (use_vae && (!hooks.vae_model || !hooks.normalizer ||
                  !hooks.vae_encoder_opt || !hooks.vae_decoder_opt))
    throw UsageError("train: beta_vae > 0 requires the VAE hooks");
  if (use_llm && !hooks.llm_score)
    throw UsageError("train: beta_llm > 0 requires an llm scorer");

  RandomEngine action_rng(derive_seed(cfg.seed, kStreamAction));
  RandomEngine vae_rng(derive_seed(cfg.seed, kStreamVaeTrain));

  TrainResult out;
  RolloutBuffer buffer;

  const auto flush_segment = [&]() {
    const Transition& last = buffer.back();
    const double bootstrap =
        last.terminal ? 0.0 : nn::forward(ac.critic, buffer.last_flat())[0];
    const std::vector<double> returns = compute_returns(buffer, bootstrap, cfg);
    update(ac, buffer, returns, cfg, actor_opt, critic_opt);
    ++out.stats.segment_updates;
    if (use_vae) {
      if (vae::train_vae(*hooks.vae_model, buffer.states(), cfg.vae_epochs,
                         *hooks.vae_encoder_opt, *hooks.vae_decoder_opt,
                         vae_rng))
        ++out.stats.vae_trainings;
    }
    const grid::Observation reseed = buffer.back().next_obs;
    buffer.reset(reseed);
  };

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    grid::GridWorld env = make_env(episode);
    buffer.reset(env.observe());
    EpisodeLog log;
    log.episode = episode;

    while (!env.done()) {
      const ActionChoice choice =
          select_action(ac, buffer.last_flat(), action_rng);
      const grid::StepOutcome outcome =
          env.step(static_cast<grid::Action>(choice.action));
      ++out.stats.env_steps;

      Transition t;
      t.next_obs = outcome.observation;
      t.action = choice.action;
      t.r_extrinsic = outcome.extrinsic_reward;
      t.log_prob = choice.log_prob;
      t.value_estimate = choice.value_estimate;
      t.terminal = outcome.terminated;
      buffer.push(std::move(t));

      Transition& stored = buffer.back();
      if (use_vae)
        stored.r_vae = vae::intrinsic_reward(*hooks.vae_model, *hooks.normalizer,
                                             buffer.last_flat());
      if (use_llm)
        stored.r_llm = hooks.llm_score(grid::visible_objects(stored.next_obs));

      log.extrinsic_return += stored.r_extrinsic;
      log.vae_reward_sum += stored.r_vae;
      log.llm_reward_sum += stored.r_llm;

      if (buffer.size() >= static_cast<std::size_t>(cfg.n_steps) || env.done())
        flush_segment();
    }

    log.steps = env.step_count();
    log.success = env.terminated();
    out.episodes.push_back(log);
    if (on_episode) on_episode(log);
  }
  return out;
}

}  // namespace imgrid::agent
