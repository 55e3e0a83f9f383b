#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "eqopt/a2c.hpp"
#include "eqopt/equalizer.hpp"
#include "eqopt/neural.hpp"

namespace eqopt {

/// Maximized over [0, 1]^d.
using Objective = std::function<double(std::span<const double>)>;

struct SearchResult {
  std::vector<double> best_action;
  double best_score = 0.0;
  std::size_t evaluations = 0;
  std::vector<double> trace;  // best score after each generation / iteration
};

// ---- genetic algorithm ----

struct GAConfig {
  std::size_t population = 25;
  double mutation = 0.1;  // genes move by U[-mutation, mutation]
  double epsilon = 0.0025;
  std::size_t patience = 10;
  std::size_t max_generations = 200;
  std::size_t elites = 1;
};

/// Roulette-wheel draw. Fitness is used as is when all values are positive;
/// otherwise it is shifted to f - min + epsilon.
std::size_t roulette_select(std::span<const double> fitness, double epsilon, std::mt19937_64& rng);

/// Crossover points: {2} for d = 4, {3, 6} for d = 8, {d / 2} otherwise.
std::vector<std::size_t> crossover_points(std::size_t d);

SearchResult run_ga(const Objective& f, std::size_t d, const GAConfig& cfg, std::uint64_t seed);

// ---- particle swarm ----

struct SwarmConfig {
  std::size_t particles = 30;
  double inertia = 0.729;
  double cognitive = 1.494;
  double social = 1.494;
  std::size_t iterations = 100;
};

struct PsoResult : SearchResult {
  std::vector<std::vector<double>> positions;  // final particle positions
};

PsoResult run_pso(const Objective& f, std::size_t d, const SwarmConfig& cfg, std::uint64_t seed);

// ---- grid search ----

inline constexpr double kGridBudget = 1e7;

/// Default lattice levels: 5 for d = 4, 3 for d = 8.
std::size_t default_grid_levels(std::size_t d);

/// Lexicographic sweep of the levels^d lattice (first dimension slowest);
/// strict improvement keeps the lowest-index optimum.
SearchResult run_grid(const Objective& f, std::size_t d, std::size_t levels);

// ---- branching Q-learning ----

struct QLearningConfig {
  std::size_t levels = 16;
  std::size_t replay_capacity = 50000;
  std::size_t batch = 128;
  double eps_start = 1.0;
  double eps_decay = 0.975;
  double eps_floor = 0.005;
  double lr = 1e-3;
  std::size_t lr_step_epochs = 25;
  double lr_floor = 1e-5;
  std::size_t stop_window = 20;
  double stop_std = 0.025;
  std::size_t max_epochs = 200;
  std::size_t train_every = 4;  // environment steps per gradient step
  std::vector<std::size_t> hidden{64, 64};
};

double qlearning_epsilon(const QLearningConfig& cfg, std::size_t epoch);
double qlearning_lr(const QLearningConfig& cfg, std::size_t epoch);

/// Level index -> action value in [0, 1].
double decode_level(std::size_t index, std::size_t levels);
/// Shared TD target: every head regresses onto r.
Vector branching_target(double r, std::size_t heads);

/// Shared trunk with one linear head of `levels` outputs per action dimension.
struct BranchingQNet {
  DenseNet trunk;
  std::vector<DenseNet> heads;

  std::size_t state_dim() const { return trunk.input_dim(); }
  std::size_t action_dim() const { return heads.size(); }
};

BranchingQNet make_branching_qnet(std::size_t state_dim, std::size_t action_dim, const QLearningConfig& cfg,
                                  std::mt19937_64& rng);

/// Q-values, one column per head (levels x heads).
Matrix q_values(const BranchingQNet& net, const Vector& s);

struct QLoss {
  double loss = 0.0;
  Gradients trunk;
  std::vector<Gradients> heads;
};

/// mean over batch and heads of (Q_h(s, i_h) - r)^2.
QLoss branching_loss(const BranchingQNet& net, const Matrix& states, const std::vector<std::vector<std::size_t>>& indices,
                     std::span<const double> rewards);

std::vector<std::size_t> greedy_indices(const BranchingQNet& net, const Vector& s);
std::vector<double> greedy_action(const BranchingQNet& net, const Vector& s);

struct QEpoch {
  double mean_reward;
  double epsilon;
  double lr;
  double loss;
};

struct QLearningResult {
  BranchingQNet net;
  std::vector<QEpoch> trace;
  std::size_t evaluations = 0;
  bool converged = false;
};

QLearningResult run_qlearning(Environment& env, const QLearningConfig& cfg, std::uint64_t seed);

/// Reward -||l(d_i) - l(EQ(d_o, M(a)))||: match the latent of the ideal input.
class IdealMatchEnv final : public Environment {
 public:
  /// Throws DataError if inputs are missing or do not pair with outputs.
  IdealMatchEnv(std::vector<const Segment*> outputs, std::vector<const Segment*> inputs, const AutoencoderBundle& ae,
                EqualizerKind kind);

  std::size_t size() const override { return outputs_.size(); }
  std::size_t state_dim() const override { return ae_->latent_dim(); }
  std::size_t action_dim() const override { return eqopt::action_dim(kind_); }
  const Vector& state(std::size_t i) const override { return states_.at(i); }
  StepResult step(std::size_t i, std::span<const double> action) override;

 private:
  std::vector<const Segment*> outputs_;
  const AutoencoderBundle* ae_;
  EqualizerKind kind_;
  ParamRanges ranges_;
  std::vector<Vector> states_;
  std::vector<Vector> targets_;
};

// ---- sequential DDPG ----

struct DDPGConfig {
  std::size_t replay_capacity = 50000;
  double noise_sigma = 0.075;
  double noise_clip = 0.025;
  double tau = 0.005;
  double gamma = 0.99;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  std::size_t batch = 64;
  std::size_t episodes = 400;
  std::vector<std::size_t> hidden{64, 64};
};

/// clip(N(0, sigma^2), -clip, clip).
double ddpg_noise(const DDPGConfig& cfg, std::mt19937_64& rng);
/// 100 (1 - BER).
double ddpg_reward(double ber);
/// State after choosing `chosen` parameters: those values then zeros.
Vector ddpg_state(std::span<const double> chosen, std::size_t d);

struct DdpgBatch {
  Matrix s;    // d x b
  Vector a;    // b, the action chosen in s
  Vector r;    // b
  Matrix s2;   // d x b
  std::vector<std::uint8_t> done;  // 1: no bootstrap
};

struct DdpgCriticLoss {
  double loss = 0.0;  // mean (Q(s, a) - y)^2, y = r + gamma Q'(s2, mu'(s2)) unless done
  Gradients critic;
};

struct DdpgActorLoss {
  double loss = 0.0;  // -mean Q(s, mu(s))
  Gradients actor;
};

/// Critic regression onto target-network TD values (targets held constant).
DdpgCriticLoss ddpg_critic_loss(const DenseNet& critic, const DenseNet& critic_target, const DenseNet& actor_target,
                                const DdpgBatch& batch, double gamma);
/// Deterministic policy gradient through the critic.
DdpgActorLoss ddpg_actor_loss(const DenseNet& actor, const DenseNet& critic, const Matrix& s);

/// Terminal scorer: BER of the equalized signal for a full action vector and
/// an episode index.
using BerObjective = std::function<double(std::span<const double> action, std::size_t episode)>;

struct DDPGResult {
  std::vector<double> action;  // noise-free rollout
  double final_reward = 0.0;
  std::vector<double> trace;   // terminal reward per episode
  std::size_t evaluations = 0;
  DenseNet actor;
  DenseNet critic;
};

DDPGResult run_ddpg(const BerObjective& ber, std::size_t d, const DDPGConfig& cfg, std::uint64_t seed);

/// Hard decisions at UI centers (0 mV threshold) against the transmitted
/// bits, indexed by absolute symbol. Throws DataError if `bits` does not cover
/// every symbol with a center inside the segment.
double compute_ber(const Segment& equalized, std::span<const std::uint8_t> bits);
double compute_ber(const Waveform& equalized, std::span<const std::uint8_t> bits);

}  // namespace eqopt
