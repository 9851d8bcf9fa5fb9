#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "imgrid/gridworld.hpp"

namespace imgrid::agent {

/// One environment transition: the action taken, the state it led to, and
/// the three reward components earned on the way (intrinsic ones already
/// normalized to [0, 1]).
struct Transition {
  grid::Observation next_obs;
  int action = 0;
  double r_extrinsic = 0.0;
  double r_vae = 0.0;
  double r_llm = 0.0;
  double log_prob = 0.0;
  double value_estimate = 0.0;
  bool terminal = false;  // goal reached on this transition
};

/// Segment dataset: seeded with the current state, grown one transition per
/// step, cleared and re-seeded after each update. Keeps the flattened
/// observation of every state s_0..s_T alongside the transitions so both the
/// policy update (which needs s_t) and the VAE (which trains on all states)
/// read precomputed vectors.
class RolloutBuffer {
 public:
  void reset(const grid::Observation& seed_obs) {
    transitions_.clear();
    flat_.clear();
    flat_.push_back(seed_obs.flatten());
  }

  void push(Transition t) {
    flat_.push_back(t.next_obs.flatten());
    transitions_.push_back(std::move(t));
  }

  std::size_t size() const { return transitions_.size(); }
  bool empty() const { return transitions_.empty(); }
  const Transition& operator[](std::size_t k) const { return transitions_[k]; }
  Transition& back() { return transitions_.back(); }
  const Transition& back() const { return transitions_.back(); }

  /// Flattened s_k, the state transition k's action was selected from.
  std::span<const double> obs_before(std::size_t k) const { return flat_[k]; }

  /// Flattened most recent state (s_T); the next action's input and the
  /// segment's bootstrap point.
  std::span<const double> last_flat() const { return flat_.back(); }

  /// Every state in the buffer (s_0..s_T), the VAE training set.
  std::vector<std::span<const double>> states() const {
    return {flat_.begin(), flat_.end()};
  }

 private:
  std::vector<Transition> transitions_;
  std::vector<std::vector<double>> flat_;  // flat_[k] = flattened s_k
};

}  // namespace imgrid::agent
