#include "eqopt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "eqopt/errors.hpp"

namespace eqopt {

namespace {

double evaluate(const Objective& f, std::span<const double> a, std::size_t& count) {
  for (double x : a)
    if (!(x >= 0.0 && x <= 1.0)) throw ObjectiveError("candidate left the action box");
  const double v = f(a);
  ++count;
  if (!std::isfinite(v)) throw ObjectiveError("objective returned a non-finite value");
  return v;
}

std::vector<double> random_point(std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(d);
  for (auto& x : p) x = u(rng);
  return p;
}

double clip01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

// ---- genetic algorithm ----

std::size_t roulette_select(std::span<const double> fitness, double epsilon, std::mt19937_64& rng) {
  if (fitness.empty()) throw ParameterError("roulette needs at least one candidate");
  const double lo = *std::min_element(fitness.begin(), fitness.end());
  const double shift = lo > 0.0 ? 0.0 : epsilon - lo;
  double total = 0.0;
  for (double f : fitness) total += f + shift;
  std::uniform_real_distribution<double> u(0.0, total);
  const double r = u(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < fitness.size(); ++i) {
    acc += fitness[i] + shift;
    if (r < acc) return i;
  }
  return fitness.size() - 1;
}

std::vector<std::size_t> crossover_points(std::size_t d) {
  if (d == 4) return {2};
  if (d == 8) return {3, 6};
  return {std::max<std::size_t>(1, d / 2)};
}

SearchResult run_ga(const Objective& f, std::size_t d, const GAConfig& cfg, std::uint64_t seed) {
  if (cfg.population < 2) throw ConfigError("GA population must be at least 2");
  if (!(cfg.epsilon > 0.0)) throw ConfigError("GA epsilon must be positive");
  if (d == 0) throw ParameterError("action dimension must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mut(-cfg.mutation, cfg.mutation);
  const auto cuts = crossover_points(d);
  const std::size_t elites = std::min(cfg.elites, cfg.population);

  SearchResult result;
  std::vector<std::vector<double>> pop(cfg.population);
  for (auto& c : pop) c = random_point(d, rng);
  std::vector<double> fit(cfg.population);
  std::size_t flat = 0;

  for (std::size_t gen = 0; gen < cfg.max_generations; ++gen) {
    for (std::size_t i = 0; i < pop.size(); ++i) fit[i] = evaluate(f, pop[i], result.evaluations);
    const auto best = static_cast<std::size_t>(std::max_element(fit.begin(), fit.end()) - fit.begin());
    if (result.trace.empty() || fit[best] > result.best_score) {
      result.best_score = fit[best];
      result.best_action = pop[best];
    }
    const double zeta = fit[best];
    if (!result.trace.empty() && std::abs(zeta - result.trace.back()) <= cfg.epsilon)
      ++flat;
    else
      flat = 0;
    result.trace.push_back(zeta);
    if (flat >= cfg.patience) break;
    if (gen + 1 == cfg.max_generations) break;

    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fit[a] > fit[b]; });
    std::vector<std::vector<double>> next;
    next.reserve(pop.size());
    for (std::size_t e = 0; e < elites; ++e) next.push_back(pop[order[e]]);
    while (next.size() < pop.size()) {
      const auto& p1 = pop[roulette_select(fit, cfg.epsilon, rng)];
      const auto& p2 = pop[roulette_select(fit, cfg.epsilon, rng)];
      std::vector<double> c1(d), c2(d);
      bool swap = false;
      std::size_t cut = 0;
      for (std::size_t g = 0; g < d; ++g) {
        if (cut < cuts.size() && g == cuts[cut]) {
          swap = !swap;
          ++cut;
        }
        c1[g] = swap ? p2[g] : p1[g];
        c2[g] = swap ? p1[g] : p2[g];
      }
      for (auto* c : {&c1, &c2}) {
        for (auto& g : *c) g = clip01(g + mut(rng));
        if (next.size() < pop.size()) next.push_back(*c);
      }
    }
    pop = std::move(next);
  }
  return result;
}

// ---- particle swarm ----

PsoResult run_pso(const Objective& f, std::size_t d, const SwarmConfig& cfg, std::uint64_t seed) {
  if (cfg.particles == 0) throw ConfigError("swarm needs at least one particle");
  if (d == 0) throw ParameterError("action dimension must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  PsoResult result;
  auto& x = result.positions;
  x.resize(cfg.particles);
  for (auto& p : x) p = random_point(d, rng);
  std::vector<std::vector<double>> v(cfg.particles, std::vector<double>(d, 0.0));
  auto pbest = x;
  std::vector<double> pscore(cfg.particles);
  std::size_t g = 0;
  for (std::size_t i = 0; i < cfg.particles; ++i) {
    pscore[i] = evaluate(f, x[i], result.evaluations);
    if (pscore[i] > pscore[g]) g = i;
  }
  std::vector<double> gbest = pbest[g];
  double gscore = pscore[g];
  result.trace.push_back(gscore);

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    for (std::size_t i = 0; i < cfg.particles; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        const double r1 = u(rng), r2 = u(rng);
        v[i][k] = cfg.inertia * v[i][k] + cfg.cognitive * r1 * (pbest[i][k] - x[i][k]) +
                  cfg.social * r2 * (gbest[k] - x[i][k]);
        x[i][k] = clip01(x[i][k] + v[i][k]);
      }
      const double s = evaluate(f, x[i], result.evaluations);
      if (s > pscore[i]) {
        pscore[i] = s;
        pbest[i] = x[i];
      }
      if (s > gscore) {
        gscore = s;
        gbest = x[i];
      }
    }
    result.trace.push_back(gscore);
  }
  result.best_action = gbest;
  result.best_score = gscore;
  return result;
}

// ---- grid search ----

std::size_t default_grid_levels(std::size_t d) { return d >= 8 ? 3 : 5; }

SearchResult run_grid(const Objective& f, std::size_t d, std::size_t levels) {
  if (levels < 2) throw ParameterError("grid needs at least 2 levels");
  if (d == 0) throw ParameterError("action dimension must be positive");
  if (std::pow(static_cast<double>(levels), static_cast<double>(d)) > kGridBudget)
    throw BudgetError("grid of " + std::to_string(levels) + "^" + std::to_string(d) + " points exceeds the budget");

  SearchResult result;
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> a(d);
  bool first = true;
  while (true) {
    for (std::size_t k = 0; k < d; ++k) a[k] = decode_level(idx[k], levels);
    const double s = evaluate(f, a, result.evaluations);
    if (first || s > result.best_score) {
      result.best_score = s;
      result.best_action = a;
      first = false;
    }
    result.trace.push_back(result.best_score);
    std::size_t k = d;
    while (k > 0 && ++idx[k - 1] == levels) idx[--k] = 0;
    if (k == 0) break;
  }
  return result;
}

// ---- branching Q-learning ----

double qlearning_epsilon(const QLearningConfig& cfg, std::size_t epoch) {
  return std::max(cfg.eps_floor, cfg.eps_start * std::pow(cfg.eps_decay, static_cast<double>(epoch)));
}

double qlearning_lr(const QLearningConfig& cfg, std::size_t epoch) {
  const double steps = std::floor(static_cast<double>(epoch) / static_cast<double>(cfg.lr_step_epochs));
  return std::max(cfg.lr_floor, cfg.lr / std::pow(10.0, steps));
}

double decode_level(std::size_t index, std::size_t levels) {
  if (levels < 2 || index >= levels) throw ParameterError("level index out of range");
  return static_cast<double>(index) / static_cast<double>(levels - 1);
}

Vector branching_target(double r, std::size_t heads) { return Vector::Constant(static_cast<Eigen::Index>(heads), r); }

BranchingQNet make_branching_qnet(std::size_t state_dim, std::size_t action_dim, const QLearningConfig& cfg,
                                  std::mt19937_64& rng) {
  if (cfg.levels < 2) throw ConfigError("Q-learning needs at least 2 levels");
  BranchingQNet net;
  std::vector<std::size_t> dims{state_dim};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  net.trunk = DenseNet::create(dims, std::vector<Activation>(dims.size() - 1, Activation::relu), rng);
  for (std::size_t h = 0; h < action_dim; ++h)
    net.heads.push_back(DenseNet::create({dims.back(), cfg.levels}, {Activation::linear}, rng));
  return net;
}

Matrix q_values(const BranchingQNet& net, const Vector& s) {
  const Matrix z = predict(net.trunk, Matrix(s));
  Matrix q(net.heads.front().output_dim(), static_cast<Eigen::Index>(net.heads.size()));
  for (std::size_t h = 0; h < net.heads.size(); ++h) q.col(static_cast<Eigen::Index>(h)) = predict(net.heads[h], z);
  return q;
}

QLoss branching_loss(const BranchingQNet& net, const Matrix& states, const std::vector<std::vector<std::size_t>>& indices,
                     std::span<const double> rewards) {
  const auto n = states.cols();
  if (n == 0 || indices.size() != static_cast<std::size_t>(n) || rewards.size() != static_cast<std::size_t>(n))
    throw ShapeError("Q-learning batch is inconsistent");
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(net.heads.size()));

  QLoss out;
  const Tape trunk = forward(net.trunk, states);
  Matrix grad_z = Matrix::Zero(trunk.output.rows(), n);
  for (std::size_t h = 0; h < net.heads.size(); ++h) {
    const Tape head = forward(net.heads[h], trunk.output);
    Matrix g = Matrix::Zero(head.output.rows(), n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto i = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(k)].at(h));
      const double err = head.output(i, k) - rewards[static_cast<std::size_t>(k)];
      out.loss += err * err * scale;
      g(i, k) = 2.0 * err * scale;
    }
    out.heads.push_back(backward(net.heads[h], head, g, true));
    grad_z += out.heads.back().input;
  }
  out.trunk = backward(net.trunk, trunk, grad_z, false);
  return out;
}

std::vector<std::size_t> greedy_indices(const BranchingQNet& net, const Vector& s) {
  const Matrix q = q_values(net, s);
  std::vector<std::size_t> idx(static_cast<std::size_t>(q.cols()));
  for (Eigen::Index h = 0; h < q.cols(); ++h) {
    Eigen::Index best = 0;
    q.col(h).maxCoeff(&best);
    idx[static_cast<std::size_t>(h)] = static_cast<std::size_t>(best);
  }
  return idx;
}

std::vector<double> greedy_action(const BranchingQNet& net, const Vector& s) {
  const auto idx = greedy_indices(net, s);
  const std::size_t levels = net.heads.front().output_dim();
  std::vector<double> a(idx.size());
  for (std::size_t h = 0; h < idx.size(); ++h) a[h] = decode_level(idx[h], levels);
  return a;
}

QLearningResult run_qlearning(Environment& env, const QLearningConfig& cfg, std::uint64_t seed) {
  if (env.size() == 0) throw DataError("Q-learning environment is empty");
  if (cfg.batch == 0 || cfg.train_every == 0 || cfg.replay_capacity == 0 || cfg.lr_step_epochs == 0)
    throw ConfigError("Q-learning counts must be positive");
  std::mt19937_64 rng(seed);
  QLearningResult result;
  result.net = make_branching_qnet(env.state_dim(), env.action_dim(), cfg, rng);
  auto& net = result.net;

  const AdamConfig adam{cfg.lr};
  AdamState trunk_opt(adam, net.trunk.parameter_count());
  std::vector<AdamState> head_opt;
  for (const auto& h : net.heads) head_opt.emplace_back(adam, h.parameter_count());

  struct Memory {
    std::size_t state;
    std::vector<std::size_t> idx;
    double r;
  };
  std::deque<Memory> replay;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_level(0, cfg.levels - 1);
  std::vector<std::size_t> order(env.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t eval_start = env.evaluations();
  const std::size_t d = env.action_dim();
  std::size_t steps = 0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double eps = qlearning_epsilon(cfg, epoch);
    const double lr = qlearning_lr(cfg, epoch);
    trunk_opt.config.lr = lr;
    for (auto& o : head_opt) o.config.lr = lr;

    std::shuffle(order.begin(), order.end(), rng);
    QEpoch e{0.0, eps, lr, 0.0};
    std::size_t n_updates = 0;
    for (std::size_t i : order) {
      auto idx = greedy_indices(net, env.state(i));
      for (std::size_t h = 0; h < d; ++h)
        if (u(rng) < eps) idx[h] = pick_level(rng);
      std::vector<double> a(d);
      for (std::size_t h = 0; h < d; ++h) a[h] = decode_level(idx[h], cfg.levels);
      const double r = env.step(i, a).reward;
      e.mean_reward += r / static_cast<double>(order.size());
      replay.push_back(Memory{i, std::move(idx), r});
      if (replay.size() > cfg.replay_capacity) replay.pop_front();

      if (++steps % cfg.train_every != 0 || replay.size() < std::min(cfg.batch, env.size())) continue;
      const std::size_t b = std::min(cfg.batch, replay.size());
      std::uniform_int_distribution<std::size_t> pick(0, replay.size() - 1);
      Matrix states(static_cast<Eigen::Index>(env.state_dim()), static_cast<Eigen::Index>(b));
      std::vector<std::vector<std::size_t>> bi(b);
      std::vector<double> br(b);
      for (std::size_t k = 0; k < b; ++k) {
        const Memory& m = replay[pick(rng)];
        states.col(static_cast<Eigen::Index>(k)) = env.state(m.state);
        bi[k] = m.idx;
        br[k] = m.r;
      }
      QLoss loss = branching_loss(net, states, bi, br);
      adam_step(trunk_opt, net.trunk, loss.trunk);
      for (std::size_t h = 0; h < d; ++h) adam_step(head_opt[h], net.heads[h], loss.heads[h]);
      e.loss += loss.loss;
      ++n_updates;
    }
    if (n_updates) e.loss /= static_cast<double>(n_updates);
    result.trace.push_back(e);

    if (result.trace.size() >= cfg.stop_window) {
      double mean = 0.0, var = 0.0;
      const auto w = static_cast<double>(cfg.stop_window);
      for (std::size_t k = result.trace.size() - cfg.stop_window; k < result.trace.size(); ++k)
        mean += result.trace[k].mean_reward / w;
      for (std::size_t k = result.trace.size() - cfg.stop_window; k < result.trace.size(); ++k)
        var += std::pow(result.trace[k].mean_reward - mean, 2) / w;
      if (std::sqrt(var) < cfg.stop_std) {
        result.converged = true;
        break;
      }
    }
  }
  result.evaluations = env.evaluations() - eval_start;
  return result;
}

IdealMatchEnv::IdealMatchEnv(std::vector<const Segment*> outputs, std::vector<const Segment*> inputs,
                             const AutoencoderBundle& ae, EqualizerKind kind)
    : outputs_(std::move(outputs)), ae_(&ae), kind_(kind), ranges_(ParamRanges::for_kind(kind)) {
  if (outputs_.empty()) throw DataError("environment needs at least one segment");
  if (inputs.size() != outputs_.size()) throw DataError("every output segment needs its ideal input");
  for (std::size_t i = 0; i < inputs.size(); ++i)
    if (inputs[i] == nullptr || inputs[i]->size() != outputs_[i]->size() || inputs[i]->origin != outputs_[i]->origin)
      throw DataError("ideal input does not pair with its output segment");
  const Matrix zs = encode_batch(ae, segments_matrix(outputs_));
  const Matrix zt = encode_batch(ae, segments_matrix(inputs));
  for (Eigen::Index k = 0; k < zs.cols(); ++k) {
    states_.emplace_back(zs.col(k));
    targets_.emplace_back(zt.col(k));
  }
}

StepResult IdealMatchEnv::step(std::size_t i, std::span<const double> action) {
  ++evaluations_;
  const MappedParams p = map_action(action, ranges_);
  Vector z = encode(*ae_, apply_chain(*outputs_.at(i), setting_from_physical(kind_, p.physical)));
  const double r = -(targets_.at(i) - z).norm();
  return StepResult{r, std::move(z)};
}

// ---- sequential DDPG ----

double ddpg_noise(const DDPGConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, cfg.noise_sigma);
  return std::clamp(n(rng), -cfg.noise_clip, cfg.noise_clip);
}

double ddpg_reward(double ber) { return 100.0 * (1.0 - ber); }

Vector ddpg_state(std::span<const double> chosen, std::size_t d) {
  if (chosen.size() > d) throw ShapeError("more chosen parameters than dimensions");
  Vector s = Vector::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < chosen.size(); ++j) s(static_cast<Eigen::Index>(j)) = chosen[j];
  return s;
}

namespace {

Matrix with_action_row(const Matrix& s, const Matrix& a) {
  Matrix sa(s.rows() + 1, s.cols());
  sa.topRows(s.rows()) = s;
  sa.bottomRows(1) = a;
  return sa;
}

}  // namespace

DdpgCriticLoss ddpg_critic_loss(const DenseNet& critic, const DenseNet& critic_target, const DenseNet& actor_target,
                                const DdpgBatch& batch, double gamma) {
  const Eigen::Index b = batch.s.cols();
  if (b == 0) throw DataError("DDPG batch is empty");
  if (batch.a.size() != b || batch.r.size() != b || batch.s2.cols() != b ||
      batch.done.size() != static_cast<std::size_t>(b))
    throw ShapeError("DDPG batch fields disagree in size");
  const Matrix q2 = predict(critic_target, with_action_row(batch.s2, predict(actor_target, batch.s2)));
  const Tape ct = forward(critic, with_action_row(batch.s, batch.a.transpose()));
  const double inv_b = 1.0 / static_cast<double>(b);
  DdpgCriticLoss out;
  Matrix gq(1, b);
  for (Eigen::Index c = 0; c < b; ++c) {
    const double y = batch.r(c) + (batch.done[static_cast<std::size_t>(c)] ? 0.0 : gamma * q2(0, c));
    const double diff = ct.output(0, c) - y;
    out.loss += diff * diff * inv_b;
    gq(0, c) = 2.0 * diff * inv_b;
  }
  out.critic = backward(critic, ct, gq, false);
  return out;
}

DdpgActorLoss ddpg_actor_loss(const DenseNet& actor, const DenseNet& critic, const Matrix& s) {
  const Eigen::Index b = s.cols();
  if (b == 0) throw DataError("DDPG batch is empty");
  const double inv_b = 1.0 / static_cast<double>(b);
  const Tape at = forward(actor, s);
  const Tape qt = forward(critic, with_action_row(s, at.output));
  DdpgActorLoss out;
  out.loss = -qt.output.sum() * inv_b;
  const Gradients gc = backward(critic, qt, Matrix::Constant(1, b, -inv_b), true);
  out.actor = backward(actor, at, gc.input.bottomRows(1), false);
  return out;
}

DDPGResult run_ddpg(const BerObjective& ber, std::size_t d, const DDPGConfig& cfg, std::uint64_t seed) {
  if (d == 0) throw ParameterError("action dimension must be positive");
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (!(cfg.noise_clip >= 0.0)) throw ConfigError("noise clip must be non-negative");
  if (cfg.batch == 0 || cfg.replay_capacity == 0) throw ConfigError("DDPG counts must be positive");
  std::mt19937_64 rng(seed);

  auto make = [&](std::size_t in, Activation out_act) {
    std::vector<std::size_t> dims{in};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(1);
    std::vector<Activation> acts(dims.size() - 1, Activation::relu);
    acts.back() = out_act;
    return DenseNet::create(dims, acts, rng);
  };
  DDPGResult result;
  result.actor = make(d, Activation::sigmoid);
  result.critic = make(d + 1, Activation::linear);
  DenseNet actor_target = result.actor;
  DenseNet critic_target = result.critic;
  AdamState actor_opt(AdamConfig{cfg.actor_lr}, result.actor.parameter_count());
  AdamState critic_opt(AdamConfig{cfg.critic_lr}, result.critic.parameter_count());

  struct Memory {
    Vector s;
    double a;
    double r;
    Vector s2;
    bool done;
  };
  std::deque<Memory> replay;

  auto train_step = [&] {
    const std::size_t b = std::min(cfg.batch, replay.size());
    std::uniform_int_distribution<std::size_t> pick(0, replay.size() - 1);
    DdpgBatch batch;
    batch.s.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(b));
    batch.s2.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(b));
    batch.a.resize(static_cast<Eigen::Index>(b));
    batch.r.resize(static_cast<Eigen::Index>(b));
    batch.done.resize(b);
    for (std::size_t k = 0; k < b; ++k) {
      const Memory& m = replay[pick(rng)];
      const auto c = static_cast<Eigen::Index>(k);
      batch.s.col(c) = m.s;
      batch.s2.col(c) = m.s2;
      batch.a(c) = m.a;
      batch.r(c) = m.r;
      batch.done[k] = m.done ? 1 : 0;
    }
    adam_step(critic_opt, result.critic,
              ddpg_critic_loss(result.critic, critic_target, actor_target, batch, cfg.gamma).critic);
    adam_step(actor_opt, result.actor, ddpg_actor_loss(result.actor, result.critic, batch.s).actor);
    actor_target.soft_update_from(result.actor, cfg.tau);
    critic_target.soft_update_from(result.critic, cfg.tau);
  };

  auto rollout = [&](bool explore, std::size_t episode, std::vector<double>& chosen) {
    chosen.clear();
    for (std::size_t j = 0; j < d; ++j) {
      const Vector s = ddpg_state(chosen, d);
      double a = predict(result.actor, s)(0);
      if (explore) a = clip01(a + ddpg_noise(cfg, rng));
      chosen.push_back(a);
      const bool done = j + 1 == d;
      double r = 0.0;
      if (done) {
        r = ddpg_reward(ber(chosen, episode));
        ++result.evaluations;
      }
      if (explore) {
        replay.push_back(Memory{s, a, r, ddpg_state(chosen, d), done});
        if (replay.size() > cfg.replay_capacity) replay.pop_front();
        train_step();
      }
      if (done) return r;
    }
    return 0.0;
  };

  std::vector<double> chosen;
  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) result.trace.push_back(rollout(true, ep, chosen));
  result.final_reward = rollout(false, cfg.episodes, chosen);
  result.action = chosen;
  return result;
}

double compute_ber(const Segment& equalized, std::span<const std::uint8_t> bits) {
  if (equalized.data.empty()) throw SegmentationError("empty signal");
  if (bits.empty()) throw DataError("bit sequence is empty");
  const double t0 = equalized.start_time();
  const std::size_t len = equalized.size();
  const std::size_t n0 = symbol_at(t0, equalized.ui);
  const std::size_t n1 = symbol_at(t0 + static_cast<double>(len - 1) * equalized.dt, equalized.ui);
  std::size_t errors = 0, count = 0;
  for (std::size_t n = n0; n <= n1; ++n) {
    const auto k = ui_center_index(n, t0, equalized.dt, equalized.ui, len);
    if (!k) continue;
    if (n >= bits.size()) throw DataError("bit sequence is shorter than the signal");
    const bool decided_one = equalized.data[*k] > 0.0;
    errors += decided_one != (bits[n] != 0) ? 1 : 0;
    ++count;
  }
  if (count == 0) throw DataError("signal holds no UI-center sample");
  return static_cast<double>(errors) / static_cast<double>(count);
}

double compute_ber(const Waveform& equalized, std::span<const std::uint8_t> bits) {
  return compute_ber(Segment{equalized.samples, 0, equalized.dt, equalized.ui}, bits);
}

}  // namespace eqopt
