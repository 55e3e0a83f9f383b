#include <doctest.h>

#include <cmath>
#include <numbers>

#include "eqopt/a2c.hpp"
#include "eqopt/errors.hpp"
#include "helpers.hpp"

using namespace eqopt;
using eqopt::testing::numeric_gradient;
using eqopt::testing::random_matrix;
using eqopt::testing::relative_error;

namespace {

A2CAgent small_agent(std::uint64_t seed, std::size_t l = 3, std::size_t d = 4) {
  A2CConfig cfg;
  cfg.hidden = {6, 5};
  std::mt19937_64 rng(seed);
  A2CAgent agent = make_agent(l, d, cfg, rng);
  // Nonzero biases keep ReLU pre-activations away from the kink at 0.
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  for (DenseNet* net : {&agent.actor, &agent.critic}) {
    auto p = net->flat_parameters();
    for (double& v : p) v += jitter(rng);
    net->set_flat_parameters(p);
  }
  return agent;
}

std::vector<Transition> random_batch(const A2CAgent& agent, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Transition> batch(n);
  for (auto& t : batch) {
    t.s_curr = random_matrix(3, 1, rng).col(0);
    t.s_next = random_matrix(3, 1, rng).col(0);
    t.a_pre = random_matrix(4, 1, rng, -0.2, 1.2).col(0);
    t.a_exec = t.a_pre.cwiseMax(0.0).cwiseMin(1.0);
    t.r = g(rng);
    t.v_curr = state_value(agent, t.s_curr);
    t.v_next = state_value(agent, t.s_next);
  }
  return batch;
}

}  // namespace

TEST_SUITE("a2c") {
  TEST_CASE("advantage examples") {
    CHECK(compute_advantage(-2.0, 0.0, 1.5, 9.0) == -3.5);
    CHECK(compute_advantage(-2.0, 0.98, -3.0, -1.0) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(compute_advantage(-0.7, 0.98, 0.0, 0.0) == -0.7);
  }

  TEST_CASE("entropy closed form and monotonicity") {
    CHECK(gaussian_entropy(Vector::Zero(1)) == doctest::Approx(0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e)));
    CHECK(gaussian_entropy(Vector::Zero(1)) == doctest::Approx(1.41894).epsilon(1e-5));
    CHECK(gaussian_entropy(Vector::Zero(4)) == doctest::Approx(4 * 1.4189385332));
    double prev = -1e9;
    for (double ls = -5.0; ls <= 1.0; ls += 0.5) {
      const double h = gaussian_entropy(Vector::Constant(3, ls));
      CHECK(h > prev);
      prev = h;
    }
  }

  TEST_CASE("policy output and sampling") {
    A2CAgent agent = small_agent(1);
    auto& last = agent.actor.layers().back();
    last.weight.setZero();
    last.bias.setZero();
    const Vector s = Vector::Constant(3, 0.3);
    CHECK((policy(agent, s).mean - Vector::Constant(4, 0.5)).norm() == 0.0);
    CHECK((mean_action(agent, s) - Vector::Constant(4, 0.5)).norm() == 0.0);

    agent.log_std.setConstant(-5.0);
    std::mt19937_64 rng(4);
    std::size_t inside = 0, total = 0;
    for (int k = 0; k < 10000; ++k) {
      const ActionSample a = sample_action(agent, s, rng);
      for (Eigen::Index i = 0; i < 4; ++i, ++total) inside += std::abs(a.pre_clip(i) - 0.5) <= 0.03 ? 1 : 0;
    }
    CHECK(static_cast<double>(inside) / static_cast<double>(total) >= 0.99);

    std::mt19937_64 r1(9), r2(9);
    CHECK((sample_action(agent, s, r1).action - sample_action(agent, s, r2).action).norm() == 0.0);

    agent.log_std.setConstant(10.0);
    CHECK(policy(agent, s).log_std.maxCoeff() == kLogStdMax);
    std::mt19937_64 r3(5);
    for (int k = 0; k < 100; ++k) {
      const ActionSample a = sample_action(agent, s, r3);
      CHECK(a.action.minCoeff() >= 0.0);
      CHECK(a.action.maxCoeff() <= 1.0);
    }
  }

  TEST_CASE("loss gradients match central differences") {
    for (bool terminal : {false, true}) {
      A2CAgent agent = small_agent(21);
      agent.log_std = Vector::LinSpaced(4, -1.2, 0.4);
      std::mt19937_64 rng(22);
      const auto batch = random_batch(agent, 7, rng);
      A2CConfig cfg;
      cfg.terminal_episodes = terminal;
      cfg.entropy_coef = 0.05;
      const A2CLoss l = a2c_loss(agent, batch, cfg);

      // Frozen advantages and TD targets from the unperturbed critic.
      std::vector<double> target(batch.size()), adv(batch.size());
      for (std::size_t k = 0; k < batch.size(); ++k) {
        target[k] = batch[k].r + (terminal ? 0.0 : cfg.gamma * state_value(agent, batch[k].s_next));
        adv[k] = target[k] - state_value(agent, batch[k].s_curr);
      }
      auto actor_part = [&] {
        double loss = 0.0;
        const PolicyOutput dummy = policy(agent, batch[0].s_curr);
        for (std::size_t k = 0; k < batch.size(); ++k) {
          const PolicyOutput p = policy(agent, batch[k].s_curr);
          loss -= adv[k] * gaussian_log_density(batch[k].a_pre, p.mean, p.log_std) / batch.size();
        }
        return loss - cfg.entropy_coef * gaussian_entropy(dummy.log_std);
      };
      auto critic_part = [&] {
        double loss = 0.0;
        for (std::size_t k = 0; k < batch.size(); ++k) {
          const double td = target[k] - state_value(agent, batch[k].s_curr);
          loss += 0.5 * cfg.value_coef * td * td / batch.size();
        }
        return loss;
      };
      CHECK(relative_error(l.actor.flat(), numeric_gradient(agent.actor, actor_part)) <= 1e-4);
      CHECK(relative_error(l.critic.flat(), numeric_gradient(agent.critic, critic_part)) <= 1e-4);

      std::vector<double> ls(agent.log_std.data(), agent.log_std.data() + 4);
      auto ls_loss = [&] {
        agent.log_std = Eigen::Map<const Vector>(ls.data(), 4);
        return actor_part();
      };
      const auto num = numeric_gradient(ls, ls_loss);
      agent.log_std = Eigen::Map<const Vector>(ls.data(), 4);
      CHECK(relative_error(std::vector<double>(l.log_std.data(), l.log_std.data() + 4), num) <= 1e-4);

      CHECK(l.total == doctest::Approx(l.policy + l.value - cfg.entropy_coef * l.entropy));
    }
  }

  TEST_CASE("loss term isolation and empty batch") {
    A2CAgent agent = small_agent(31);
    std::mt19937_64 rng(32);
    const auto batch = random_batch(agent, 5, rng);
    A2CConfig cfg;
    cfg.entropy_coef = 0.0;
    cfg.value_coef = 0.0;
    const A2CLoss l = a2c_loss(agent, batch, cfg);
    CHECK(l.total == doctest::Approx(l.policy));
    CHECK_THROWS_AS(a2c_loss(agent, std::vector<Transition>{}, cfg), DataError);
  }

  TEST_CASE("a positive advantage pulls the mean toward the sampled action") {
    A2CAgent agent = small_agent(41);
    const Vector s = Vector::Constant(3, 0.2);
    const Vector m0 = mean_action(agent, s);
    Transition t;
    t.s_curr = s;
    t.s_next = s;
    t.a_pre = (m0.array() + 0.2).matrix();
    t.a_exec = t.a_pre.cwiseMin(1.0);
    t.r = 10.0;
    A2CConfig cfg;
    cfg.gamma = 0.0;
    cfg.lr = 1e-2;
    const A2CLoss l = a2c_loss(agent, std::vector<Transition>{t}, cfg);
    adam_step(agent.actor_opt, agent.actor, l.actor);
    const Vector m1 = mean_action(agent, s);
    CHECK((t.a_pre - m1).norm() < (t.a_pre - m0).norm());
  }

  TEST_CASE("training on a rigged bandit approaches the target") {
    std::vector<Vector> states;
    std::mt19937_64 rng(51);
    for (int k = 0; k < 16; ++k) states.push_back(random_matrix(3, 1, rng).col(0));
    Vector target(4);
    target << 0.2, 0.8, 0.5, 0.35;
    RiggedBanditEnv env(states, target);
    A2CConfig cfg;
    cfg.hidden = {32, 32};
    cfg.lr = 5e-3;
    cfg.batch = 16;
    cfg.epochs = 1200;
    cfg.early_stop_patience = 0;
    cfg.seed = 3;
    std::mt19937_64 init(52);
    A2CAgent agent = make_agent(3, 4, cfg, init);
    const A2CTrainResult r = train_a2c(agent, env, cfg);
    CHECK(r.updates == 1200);
    CHECK(r.evaluations == 1200 * 16);
    double worst = 0.0;
    for (const auto& s : states) worst = std::max(worst, (mean_action(agent, s) - target).norm());
    CHECK(worst < 0.1);

    std::mt19937_64 init2(52);
    A2CAgent again = make_agent(3, 4, cfg, init2);
    RiggedBanditEnv env2(states, target);
    const A2CTrainResult r2 = train_a2c(again, env2, cfg);
    REQUIRE(r2.trace.size() == r.trace.size());
    for (std::size_t k = 0; k < r.trace.size(); ++k) CHECK(r2.trace[k].mean_reward == r.trace[k].mean_reward);
  }

  TEST_CASE("identity action reproduces the latent score") {
    AeConfig acfg;
    acfg.latent_dim = 3;
    acfg.hidden = {8};
    std::mt19937_64 rng(61);
    const AutoencoderBundle ae = make_autoencoder(40, 400.0, acfg, rng);
    Segment s{std::vector<double>(40), 0, 10.0, 156.3};
    std::uniform_real_distribution<double> u(-400.0, 400.0);
    for (auto& v : s.data) v = u(rng);
    const AnchorPoint anchor{Vector::Constant(3, 0.5), 0};

    const std::vector<double> zero(4, 0.0);
    const RewardResult r = compute_reward(anchor, ae, s, zero, ParamRanges::for_kind(EqualizerKind::dfe),
                                          EqualizerKind::dfe);
    CHECK(r.reward == latent_si(ae, anchor, s));
    CHECK((r.next_state - encode(ae, s)).norm() == 0.0);

    const std::vector<double> allpass{0.1, 1.0, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0};
    const RewardResult c = compute_reward(anchor, ae, s, allpass, ParamRanges::for_kind(EqualizerKind::ctle_dfe),
                                          EqualizerKind::ctle_dfe);
    CHECK(c.reward == doctest::Approx(latent_si(ae, anchor, s)).epsilon(1e-9));
    CHECK((c.next_state - encode(ae, s)).norm() <= 1e-9);
  }

  TEST_CASE("inference is deterministic and json round trips") {
    const A2CAgent agent = small_agent(71);
    const Vector s = Vector::Constant(3, -0.4);
    const auto ranges = ParamRanges::for_kind(EqualizerKind::dfe);
    CHECK(infer_params(agent, s, ranges).physical == infer_params(agent, s, ranges).physical);
    const A2CAgent back = a2c_agent_from_json(to_json(agent));
    CHECK((mean_action(back, s) - mean_action(agent, s)).norm() == 0.0);
    CHECK((back.log_std - agent.log_std).norm() == 0.0);
  }
}
