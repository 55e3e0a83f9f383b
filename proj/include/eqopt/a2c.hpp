#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "eqopt/equalizer.hpp"
#include "eqopt/latent.hpp"
#include "eqopt/neural.hpp"

namespace eqopt {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 1.0;

struct A2CConfig {
  double lr = 5e-4;
  double gamma = 0.98;
  double entropy_coef = 1e-2;
  double value_coef = 0.5;
  std::size_t epochs = 300;
  std::size_t batch = 64;
  std::vector<std::size_t> hidden{64, 64};
  double init_log_std = -1.0;
  double early_stop_tol = 1e-4;
  std::size_t early_stop_patience = 20;  // 0 disables early stopping
  /// Treat every one-step episode as terminal: V(s_next) is replaced by 0 in
  /// the advantage and TD target. Off by default.
  bool terminal_episodes = false;
  std::uint64_t seed = 1;
};

void validate(const A2CConfig& cfg);

/// Gaussian actor (sigmoid-squashed mean, state-independent log std) and a
/// state-value critic.
struct A2CAgent {
  DenseNet actor;   // l -> ... -> d, raw (pre-sigmoid) mean
  Vector log_std;   // d, clamped to [kLogStdMin, kLogStdMax] when used
  DenseNet critic;  // l -> ... -> 1
  AdamState actor_opt;
  AdamState log_std_opt;
  AdamState critic_opt;

  std::size_t state_dim() const { return actor.input_dim(); }
  std::size_t action_dim() const { return actor.output_dim(); }
};

A2CAgent make_agent(std::size_t state_dim, std::size_t action_dim, const A2CConfig& cfg, std::mt19937_64& rng);

struct PolicyOutput {
  Vector mean;     // in [0, 1]^d
  Vector log_std;  // clamped
};

PolicyOutput policy(const A2CAgent& agent, const Vector& s);

struct ActionSample {
  Vector pre_clip;  // the Gaussian draw; log-densities are evaluated here
  Vector action;    // clipped to [0, 1], what the environment executes
};

ActionSample sample_action(const A2CAgent& agent, const Vector& s, std::mt19937_64& rng);

/// Diagonal Gaussian log-density and entropy, per-dimension sums.
double gaussian_log_density(const Vector& x, const Vector& mean, const Vector& log_std);
double gaussian_entropy(const Vector& log_std);

double state_value(const A2CAgent& agent, const Vector& s);

/// A = r + gamma V(s') - V(s).
double compute_advantage(double r, double gamma, double v_curr, double v_next);

struct StepResult {
  double reward;
  Vector next_state;
};

/// One-step episodic environment over a fixed set of start states.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::size_t size() const = 0;
  virtual std::size_t state_dim() const = 0;
  virtual std::size_t action_dim() const = 0;
  virtual const Vector& state(std::size_t i) const = 0;
  virtual StepResult step(std::size_t i, std::span<const double> action) = 0;

  std::size_t evaluations() const noexcept { return evaluations_; }

 protected:
  std::size_t evaluations_ = 0;
};

struct RewardResult {
  double reward;
  Vector next_state;
  MappedParams params;
};

/// r = -||c - l(EQ(d_o, M(a)))||.
RewardResult compute_reward(const AnchorPoint& anchor, const AutoencoderBundle& ae, const Segment& d_o,
                            std::span<const double> action, const ParamRanges& ranges, EqualizerKind kind);

/// Equalizer environment over output segments: state l(d_o), reward from
/// compute_reward. Segments must outlive the environment.
class LatentEqualizerEnv final : public Environment {
 public:
  LatentEqualizerEnv(std::vector<const Segment*> segments, const AutoencoderBundle& ae, const AnchorPoint& anchor,
                     EqualizerKind kind);

  std::size_t size() const override { return segments_.size(); }
  std::size_t state_dim() const override { return ae_->latent_dim(); }
  std::size_t action_dim() const override { return eqopt::action_dim(kind_); }
  const Vector& state(std::size_t i) const override { return states_.at(i); }
  StepResult step(std::size_t i, std::span<const double> action) override;

 private:
  std::vector<const Segment*> segments_;
  const AutoencoderBundle* ae_;
  const AnchorPoint* anchor_;
  EqualizerKind kind_;
  ParamRanges ranges_;
  std::vector<Vector> states_;
};

/// Test bandit: reward -||a - a*||, next state equals the start state.
class RiggedBanditEnv final : public Environment {
 public:
  RiggedBanditEnv(std::vector<Vector> states, Vector target);

  std::size_t size() const override { return states_.size(); }
  std::size_t state_dim() const override { return static_cast<std::size_t>(states_.front().size()); }
  std::size_t action_dim() const override { return static_cast<std::size_t>(target_.size()); }
  const Vector& state(std::size_t i) const override { return states_.at(i); }
  StepResult step(std::size_t i, std::span<const double> action) override;

 private:
  std::vector<Vector> states_;
  Vector target_;
};

struct Transition {
  Vector s_curr;
  Vector s_next;
  Vector a_pre;   // pre-clip sample
  Vector a_exec;  // clipped, executed
  double r = 0.0;
  double v_curr = 0.0;
  double v_next = 0.0;
};

struct A2CLoss {
  double policy = 0.0;   // -mean(A log pi)
  double value = 0.0;    // (c_v / 2) mean(TD^2)
  double entropy = 0.0;  // mean H (the loss subtracts beta * entropy)
  double total = 0.0;
  Gradients actor;
  Vector log_std;
  Gradients critic;
};

/// Joint loss with the advantage and the TD target held constant.
/// Throws DataError on an empty batch.
A2CLoss a2c_loss(const A2CAgent& agent, std::span<const Transition> batch, const A2CConfig& cfg);

struct A2CEpoch {
  double mean_reward;
  double policy_loss;
  double value_loss;
  double entropy;
  double total_loss;
};

struct A2CTrainResult {
  std::vector<A2CEpoch> trace;
  std::size_t updates = 0;
  std::size_t evaluations = 0;
  bool early_stopped = false;
};

/// Alg.-style loop: per epoch shuffle the start states, roll out one step per
/// state and update once per batch.
A2CTrainResult train_a2c(A2CAgent& agent, Environment& env, const A2CConfig& cfg);

Vector mean_action(const A2CAgent& agent, const Vector& s);
/// Deterministic mean action mapped through M.
MappedParams infer_params(const A2CAgent& agent, const Vector& s, const ParamRanges& ranges);

nlohmann::json to_json(const A2CAgent& agent);
A2CAgent a2c_agent_from_json(const nlohmann::json& j);

}  // namespace eqopt
