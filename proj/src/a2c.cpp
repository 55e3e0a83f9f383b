#include "eqopt/a2c.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "eqopt/errors.hpp"

namespace eqopt {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
const double kHalfLog2PiE = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

Vector clamp_log_std(const Vector& v) { return v.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax); }

Vector sigmoid(const Vector& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

DenseNet make_trunk(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out, std::mt19937_64& rng) {
  std::vector<std::size_t> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  std::vector<Activation> acts(dims.size() - 1, Activation::relu);
  acts.back() = Activation::linear;
  return DenseNet::create(dims, acts, rng);
}

Matrix stack(std::span<const Transition> batch, Vector Transition::*field) {
  const auto rows = (batch.front().*field).size();
  Matrix m(rows, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t k = 0; k < batch.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = batch[k].*field;
  return m;
}

}  // namespace

void validate(const A2CConfig& cfg) {
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(cfg.entropy_coef >= 0.0) || !(cfg.value_coef >= 0.0)) throw ConfigError("loss coefficients must be >= 0");
  if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (cfg.batch == 0) throw ConfigError("batch size must be positive");
}

A2CAgent make_agent(std::size_t state_dim, std::size_t action_dim, const A2CConfig& cfg, std::mt19937_64& rng) {
  validate(cfg);
  A2CAgent agent;
  agent.actor = make_trunk(state_dim, cfg.hidden, action_dim, rng);
  agent.critic = make_trunk(state_dim, cfg.hidden, 1, rng);
  agent.log_std = Vector::Constant(static_cast<Eigen::Index>(action_dim), cfg.init_log_std);
  const AdamConfig adam{cfg.lr};
  agent.actor_opt = AdamState(adam, agent.actor.parameter_count());
  agent.log_std_opt = AdamState(adam, action_dim);
  agent.critic_opt = AdamState(adam, agent.critic.parameter_count());
  return agent;
}

PolicyOutput policy(const A2CAgent& agent, const Vector& s) {
  return PolicyOutput{sigmoid(predict(agent.actor, s)), clamp_log_std(agent.log_std)};
}

Vector mean_action(const A2CAgent& agent, const Vector& s) { return sigmoid(predict(agent.actor, s)); }

ActionSample sample_action(const A2CAgent& agent, const Vector& s, std::mt19937_64& rng) {
  const PolicyOutput pi = policy(agent, s);
  std::normal_distribution<double> normal(0.0, 1.0);
  ActionSample out;
  out.pre_clip.resize(pi.mean.size());
  for (Eigen::Index i = 0; i < pi.mean.size(); ++i) out.pre_clip(i) = pi.mean(i) + std::exp(pi.log_std(i)) * normal(rng);
  out.action = out.pre_clip.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

double gaussian_log_density(const Vector& x, const Vector& mean, const Vector& log_std) {
  double lp = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double z = (x(i) - mean(i)) * std::exp(-log_std(i));
    lp += -0.5 * z * z - log_std(i) - kHalfLog2Pi;
  }
  return lp;
}

double gaussian_entropy(const Vector& log_std) {
  return log_std.sum() + kHalfLog2PiE * static_cast<double>(log_std.size());
}

double state_value(const A2CAgent& agent, const Vector& s) { return predict(agent.critic, s)(0); }

double compute_advantage(double r, double gamma, double v_curr, double v_next) { return r + gamma * v_next - v_curr; }

RewardResult compute_reward(const AnchorPoint& anchor, const AutoencoderBundle& ae, const Segment& d_o,
                            std::span<const double> action, const ParamRanges& ranges, EqualizerKind kind) {
  RewardResult out;
  out.params = map_action(action, ranges);
  const Segment eq = apply_chain(d_o, setting_from_physical(kind, out.params.physical));
  out.next_state = encode(ae, eq);
  out.reward = latent_score(anchor, out.next_state);
  return out;
}

LatentEqualizerEnv::LatentEqualizerEnv(std::vector<const Segment*> segments, const AutoencoderBundle& ae,
                                       const AnchorPoint& anchor, EqualizerKind kind)
    : segments_(std::move(segments)), ae_(&ae), anchor_(&anchor), kind_(kind), ranges_(ParamRanges::for_kind(kind)) {
  if (segments_.empty()) throw DataError("environment needs at least one segment");
  const Matrix z = encode_batch(ae, segments_matrix(segments_));
  states_.reserve(segments_.size());
  for (Eigen::Index k = 0; k < z.cols(); ++k) states_.emplace_back(z.col(k));
}

StepResult LatentEqualizerEnv::step(std::size_t i, std::span<const double> action) {
  ++evaluations_;
  RewardResult r = compute_reward(*anchor_, *ae_, *segments_.at(i), action, ranges_, kind_);
  return StepResult{r.reward, std::move(r.next_state)};
}

RiggedBanditEnv::RiggedBanditEnv(std::vector<Vector> states, Vector target)
    : states_(std::move(states)), target_(std::move(target)) {
  if (states_.empty()) throw DataError("bandit needs at least one state");
}

StepResult RiggedBanditEnv::step(std::size_t i, std::span<const double> action) {
  ++evaluations_;
  if (action.size() != static_cast<std::size_t>(target_.size())) throw ShapeError("action dimension mismatch");
  const Vector a = Eigen::Map<const Vector>(action.data(), static_cast<Eigen::Index>(action.size()));
  return StepResult{-(a - target_).norm(), states_.at(i)};
}

A2CLoss a2c_loss(const A2CAgent& agent, std::span<const Transition> batch, const A2CConfig& cfg) {
  if (batch.empty()) throw DataError("A2C batch is empty");
  const auto n = static_cast<Eigen::Index>(batch.size());
  const double inv_b = 1.0 / static_cast<double>(n);

  const Matrix s_curr = stack(batch, &Transition::s_curr);
  const Matrix s_next = stack(batch, &Transition::s_next);
  const Matrix a_pre = stack(batch, &Transition::a_pre);

  const Tape actor_tape = forward(agent.actor, s_curr);
  const Tape critic_tape = forward(agent.critic, s_curr);
  const Matrix v_next = predict(agent.critic, s_next);

  const Vector log_std = clamp_log_std(agent.log_std);
  const Vector inv_var = (-2.0 * log_std.array()).exp().matrix();
  const Matrix mean = (1.0 + (-actor_tape.output.array()).exp()).inverse().matrix();

  A2CLoss out;
  Matrix grad_raw(mean.rows(), n);
  Matrix grad_v(1, n);
  Vector grad_log_std = Vector::Zero(log_std.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const double r = batch[static_cast<std::size_t>(k)].r;
    const double v = critic_tape.output(0, k);
    const double target = r + (cfg.terminal_episodes ? 0.0 : cfg.gamma * v_next(0, k));  // held constant
    const double adv = target - v;                         // held constant
    const Vector diff = a_pre.col(k) - mean.col(k);
    const double logp = gaussian_log_density(a_pre.col(k), mean.col(k), log_std);

    out.policy -= adv * logp * inv_b;
    out.value += 0.5 * cfg.value_coef * adv * adv * inv_b;

    // d logp / d mean = diff / var; d mean / d raw = mean (1 - mean).
    const Vector dmean = (diff.array() * inv_var.array()).matrix();
    grad_raw.col(k) = (-adv * inv_b) * (dmean.array() * mean.col(k).array() * (1.0 - mean.col(k).array())).matrix();
    grad_log_std -= adv * inv_b * ((diff.array().square() * inv_var.array()) - 1.0).matrix();
    grad_v(0, k) = -cfg.value_coef * adv * inv_b;
  }
  out.entropy = gaussian_entropy(log_std);
  out.total = out.policy + out.value - cfg.entropy_coef * out.entropy;
  if (!std::isfinite(out.total)) throw OptimError("A2C loss is not finite");

  grad_log_std.array() -= cfg.entropy_coef;
  for (Eigen::Index i = 0; i < grad_log_std.size(); ++i)
    if (agent.log_std(i) < kLogStdMin || agent.log_std(i) > kLogStdMax) grad_log_std(i) = 0.0;

  out.actor = backward(agent.actor, actor_tape, grad_raw, false);
  out.critic = backward(agent.critic, critic_tape, grad_v, false);
  out.log_std = grad_log_std;
  return out;
}

A2CTrainResult train_a2c(A2CAgent& agent, Environment& env, const A2CConfig& cfg) {
  validate(cfg);
  if (env.size() == 0) throw DataError("environment is empty");
  if (env.state_dim() != agent.state_dim() || env.action_dim() != agent.action_dim())
    throw ShapeError("agent and environment dimensions differ");

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(env.size());
  std::iota(order.begin(), order.end(), 0);

  A2CTrainResult result;
  const std::size_t eval_start = env.evaluations();
  std::size_t flat_epochs = 0;
  std::vector<Transition> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    A2CEpoch e{0.0, 0.0, 0.0, 0.0, 0.0};
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t len = std::min(cfg.batch, order.size() - start);
      batch.clear();
      for (std::size_t k = 0; k < len; ++k) {
        const std::size_t i = order[start + k];
        Transition t;
        t.s_curr = env.state(i);
        const ActionSample a = sample_action(agent, t.s_curr, rng);
        StepResult sr = env.step(i, std::span<const double>(a.action.data(), static_cast<std::size_t>(a.action.size())));
        t.s_next = std::move(sr.next_state);
        t.r = sr.reward;
        t.a_pre = a.pre_clip;
        t.a_exec = a.action;
        t.v_curr = state_value(agent, t.s_curr);
        t.v_next = state_value(agent, t.s_next);
        e.mean_reward += t.r / static_cast<double>(order.size());
        batch.push_back(std::move(t));
      }
      A2CLoss loss = a2c_loss(agent, batch, cfg);
      adam_step(agent.actor_opt, agent.actor, loss.actor);
      adam_step(agent.critic_opt, agent.critic, loss.critic);
      adam_step(agent.log_std_opt, std::span<double>(agent.log_std.data(), static_cast<std::size_t>(agent.log_std.size())),
                std::span<const double>(loss.log_std.data(), static_cast<std::size_t>(loss.log_std.size())));
      ++result.updates;
      ++n_batches;
      e.policy_loss += loss.policy;
      e.value_loss += loss.value;
      e.entropy += loss.entropy;
      e.total_loss += loss.total;
    }
    const double nb = static_cast<double>(n_batches);
    e.policy_loss /= nb;
    e.value_loss /= nb;
    e.entropy /= nb;
    e.total_loss /= nb;

    if (!result.trace.empty() && std::abs(e.mean_reward - result.trace.back().mean_reward) < cfg.early_stop_tol)
      ++flat_epochs;
    else
      flat_epochs = 0;
    result.trace.push_back(e);
    if (cfg.early_stop_patience > 0 && flat_epochs >= cfg.early_stop_patience) {
      result.early_stopped = true;
      break;
    }
  }
  result.evaluations = env.evaluations() - eval_start;
  return result;
}

MappedParams infer_params(const A2CAgent& agent, const Vector& s, const ParamRanges& ranges) {
  const Vector a = mean_action(agent, s);
  return map_action(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())), ranges);
}

nlohmann::json to_json(const A2CAgent& agent) {
  return {{"actor", to_json(agent.actor)},
          {"critic", to_json(agent.critic)},
          {"log_std", std::vector<double>(agent.log_std.data(), agent.log_std.data() + agent.log_std.size())},
          {"actor_opt", to_json(agent.actor_opt)},
          {"log_std_opt", to_json(agent.log_std_opt)},
          {"critic_opt", to_json(agent.critic_opt)}};
}

A2CAgent a2c_agent_from_json(const nlohmann::json& j) {
  A2CAgent agent;
  agent.actor = dense_net_from_json(j.at("actor"));
  agent.critic = dense_net_from_json(j.at("critic"));
  const auto ls = j.at("log_std").get<std::vector<double>>();
  agent.log_std = Eigen::Map<const Vector>(ls.data(), static_cast<Eigen::Index>(ls.size()));
  agent.actor_opt = adam_state_from_json(j.at("actor_opt"));
  agent.log_std_opt = adam_state_from_json(j.at("log_std_opt"));
  agent.critic_opt = adam_state_from_json(j.at("critic_opt"));
  if (agent.critic.input_dim() != agent.actor.input_dim() || agent.critic.output_dim() != 1 ||
      static_cast<std::size_t>(agent.log_std.size()) != agent.actor.output_dim())
    throw DataError("A2C checkpoint dimensions are inconsistent");
  return agent;
}

}  // namespace eqopt
