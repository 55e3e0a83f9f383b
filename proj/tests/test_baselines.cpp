#include <doctest.h>

#include <cmath>
#include <numeric>

#include "eqopt/baselines.hpp"
#include "eqopt/channel.hpp"
#include "eqopt/errors.hpp"
#include "helpers.hpp"

using namespace eqopt;
using eqopt::testing::numeric_gradient;
using eqopt::testing::random_matrix;
using eqopt::testing::relative_error;

namespace {

double sum(std::span<const double> a) { return std::accumulate(a.begin(), a.end(), 0.0); }

std::vector<double> flat_of(const Gradients& g) { return g.flat(); }

}  // namespace

TEST_SUITE("baselines") {
  TEST_CASE("GA on a separable objective") {
    const SearchResult r = run_ga(sum, 4, GAConfig{}, 1);
    CHECK(r.best_score >= 3.8);
    CHECK(r.trace.size() <= 200);
    const SearchResult again = run_ga(sum, 4, GAConfig{}, 1);
    CHECK(again.trace == r.trace);
    CHECK(r.evaluations == r.trace.size() * GAConfig{}.population);
  }

  TEST_CASE("GA stops after ten flat generations") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      GAConfig cfg;
      const SearchResult r = run_ga([](std::span<const double> a) { return std::sin(3.0 * sum(a)); }, 8, cfg, seed);
      std::size_t flat = 0;
      for (std::size_t g = 1; g < r.trace.size(); ++g) {
        flat = std::abs(r.trace[g] - r.trace[g - 1]) <= cfg.epsilon ? flat + 1 : 0;
        if (g + 1 < r.trace.size()) REQUIRE(flat < cfg.patience);
      }
      CHECK((flat == cfg.patience || r.trace.size() == cfg.max_generations));
    }
    CHECK(crossover_points(4) == std::vector<std::size_t>{2});
    CHECK(crossover_points(8) == std::vector<std::size_t>{3, 6});
    CHECK_THROWS_AS(run_ga([](std::span<const double>) { return NAN; }, 4, GAConfig{}, 1), ObjectiveError);
  }

  TEST_CASE("roulette selection") {
    std::mt19937_64 rng(3);
    const std::vector<double> f{0.0, 0.0, 5.0};
    std::size_t hits = 0;
    for (int k = 0; k < 1000; ++k) hits += roulette_select(f, 0.0025, rng) == 2 ? 1 : 0;
    CHECK(hits > 990);
    const std::vector<double> neg{-3.0, -1.0};
    std::size_t second = 0;
    for (int k = 0; k < 1000; ++k) second += roulette_select(neg, 0.0025, rng);
    CHECK(second > 990);
  }

  TEST_CASE("PSO") {
    auto sphere = [](std::span<const double> a) {
      double s = 0.0;
      for (double v : a) s -= (v - 0.3) * (v - 0.3);
      return s;
    };
    const PsoResult r = run_pso(sphere, 4, SwarmConfig{}, 2);
    for (double v : r.best_action) CHECK(std::abs(v - 0.3) <= 0.02);
    CHECK(run_pso(sphere, 4, SwarmConfig{}, 2).trace == r.trace);

    SwarmConfig still{1, 0.0, 0.0, 0.0, 20};
    const PsoResult one = run_pso(sphere, 3, still, 5);
    const PsoResult start = run_pso(sphere, 3, SwarmConfig{1, 0.0, 0.0, 0.0, 0}, 5);
    CHECK(one.positions == start.positions);
  }

  TEST_CASE("grid search") {
    std::size_t calls = 0;
    const SearchResult c = run_grid([&](std::span<const double>) { ++calls; return 1.0; }, 2, 2);
    CHECK(calls == 4);
    CHECK(c.evaluations == 4);
    CHECK(c.best_action == std::vector<double>{0.0, 0.0});

    const SearchResult q = run_grid(
        [](std::span<const double> a) { return -(a[0] - 0.25) * (a[0] - 0.25) - (a[1] - 0.75) * (a[1] - 0.75) - a[2] * a[2]; },
        3, 5);
    CHECK(q.best_action == std::vector<double>{0.25, 0.75, 0.0});
    CHECK_THROWS_AS(run_grid(sum, 8, 8), BudgetError);
    CHECK(default_grid_levels(4) == 5);
    CHECK(default_grid_levels(8) == 3);
  }

  TEST_CASE("Q-learning decode, target and schedules") {
    CHECK(decode_level(0, 16) == 0.0);
    CHECK(decode_level(15, 16) == 1.0);
    CHECK(decode_level(8, 16) == 8.0 / 15.0);
    CHECK((branching_target(-1.5, 4) - Vector::Constant(4, -1.5)).norm() == 0.0);
    const QLearningConfig cfg;
    for (std::size_t e = 0; e < 400; ++e) {
      CHECK(qlearning_epsilon(cfg, e) == std::max(0.005, std::pow(0.975, static_cast<double>(e))));
      CHECK(qlearning_lr(cfg, e) == std::max(1e-5, 1e-3 / std::pow(10.0, std::floor(e / 25.0))));
    }
  }

  TEST_CASE("branching Q loss gradients match central differences") {
    QLearningConfig cfg;
    cfg.levels = 5;
    cfg.hidden = {6, 5};
    std::mt19937_64 rng(7);
    BranchingQNet net = make_branching_qnet(3, 4, cfg, rng);
    const Matrix s = random_matrix(3, 6, rng);
    std::uniform_int_distribution<std::size_t> lvl(0, 4);
    std::vector<std::vector<std::size_t>> idx(6, std::vector<std::size_t>(4));
    for (auto& row : idx)
      for (auto& i : row) i = lvl(rng);
    const std::vector<double> r{-0.3, -1.2, 0.4, -0.8, -0.1, 0.0};
    const QLoss l = branching_loss(net, s, idx, r);
    auto loss = [&] { return branching_loss(net, s, idx, r).loss; };
    CHECK(relative_error(flat_of(l.trunk), numeric_gradient(net.trunk, loss)) <= 1e-4);
    for (std::size_t h = 0; h < 4; ++h)
      CHECK(relative_error(flat_of(l.heads[h]), numeric_gradient(net.heads[h], loss)) <= 1e-4);
    CHECK(q_values(net, s.col(0)).rows() == 5);
    CHECK(q_values(net, s.col(0)).cols() == 4);
    CHECK(greedy_action(net, s.col(0)).size() == 4);
  }

  TEST_CASE("Q-learning on a rigged bandit") {
    std::vector<Vector> states;
    std::mt19937_64 rng(8);
    for (int k = 0; k < 8; ++k) states.push_back(random_matrix(3, 1, rng).col(0));
    RiggedBanditEnv env(states, Vector::Constant(2, 0.6));
    QLearningConfig cfg;
    cfg.levels = 6;
    cfg.max_epochs = 150;
    cfg.batch = 32;
    const QLearningResult r = run_qlearning(env, cfg, 3);
    CHECK(r.evaluations == env.evaluations());
    for (std::size_t e = 0; e < r.trace.size(); ++e) {
      CHECK(r.trace[e].epsilon == qlearning_epsilon(cfg, e));
      CHECK(r.trace[e].lr == qlearning_lr(cfg, e));
    }
    const auto a = greedy_action(r.net, states[0]);
    CHECK(std::abs(a[0] - 0.6) <= 0.21);
  }

  TEST_CASE("DDPG state, reward and noise") {
    CHECK((ddpg_state(std::vector<double>{}, 4) - Vector::Zero(4)).norm() == 0.0);
    const Vector s = ddpg_state(std::vector<double>{0.6}, 4);
    CHECK(s(0) == 0.6);
    CHECK(s.tail(3).norm() == 0.0);
    CHECK(ddpg_reward(0.0) == 100.0);
    CHECK(ddpg_reward(0.25) == 75.0);
    DDPGConfig cfg;
    std::mt19937_64 rng(1);
    double lo = 0.0, hi = 0.0;
    for (int k = 0; k < 100000; ++k) {
      const double n = ddpg_noise(cfg, rng);
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    CHECK(lo >= -0.025);
    CHECK(hi <= 0.025);
    CHECK(lo == -0.025);
  }

  TEST_CASE("DDPG critic and actor gradients match central differences") {
    std::mt19937_64 rng(9);
    const std::size_t d = 4;
    DenseNet actor = DenseNet::create({d, 6, 1}, {Activation::relu, Activation::sigmoid}, rng);
    DenseNet critic = DenseNet::create({d + 1, 6, 1}, {Activation::tanh_scaled, Activation::linear}, rng);
    const DenseNet actor_t = DenseNet::create({d, 6, 1}, {Activation::relu, Activation::sigmoid}, rng);
    const DenseNet critic_t = DenseNet::create({d + 1, 6, 1}, {Activation::tanh_scaled, Activation::linear}, rng);
    DdpgBatch b;
    b.s = random_matrix(d, 5, rng, 0.0, 1.0);
    b.s2 = random_matrix(d, 5, rng, 0.0, 1.0);
    b.a = random_matrix(5, 1, rng, 0.0, 1.0).col(0);
    b.r = random_matrix(5, 1, rng, 0.0, 100.0).col(0);
    b.done = {0, 1, 0, 0, 1};
    const DdpgCriticLoss cl = ddpg_critic_loss(critic, critic_t, actor_t, b, 0.99);
    auto closs = [&] { return ddpg_critic_loss(critic, critic_t, actor_t, b, 0.99).loss; };
    CHECK(relative_error(cl.critic.flat(), numeric_gradient(critic, closs)) <= 1e-4);

    const DdpgActorLoss al = ddpg_actor_loss(actor, critic, b.s);
    auto aloss = [&] { return ddpg_actor_loss(actor, critic, b.s).loss; };
    CHECK(relative_error(al.actor.flat(), numeric_gradient(actor, aloss)) <= 1e-4);
  }

  TEST_CASE("DDPG runs and counts terminal evaluations") {
    DDPGConfig cfg;
    cfg.episodes = 30;
    cfg.batch = 8;
    auto ber = [](std::span<const double> a, std::size_t) { return std::abs(a[0] - 0.5) / 2.0; };
    const DDPGResult r = run_ddpg(ber, 3, cfg, 4);
    CHECK(r.trace.size() == 30);
    CHECK(r.evaluations == 31);
    CHECK(r.action.size() == 3);
    const DDPGResult again = run_ddpg(ber, 3, cfg, 4);
    CHECK(again.trace == r.trace);
  }

  TEST_CASE("compute_ber") {
    ChannelConfig ch = ChannelConfig::identity(3);
    ch.n_bits = 500;
    const DataPair p = synthesize_pair(ch);
    CHECK(compute_ber(p.output, p.bits) == 0.0);
    Waveform inv = p.output;
    for (auto& v : inv.samples) v = -v;
    CHECK(compute_ber(inv, p.bits) == 1.0);
    CHECK_THROWS_AS(compute_ber(p.output, std::vector<std::uint8_t>(10, 1)), DataError);

    for (double tap : {0.9, 1.1, -1.3}) {
      ch.isi_taps = {tap};
      const DataPair q = synthesize_pair(ch);
      std::size_t errors = 0, count = 0;
      for (std::size_t n = 0; n < q.bits.size(); ++n) {
        if (!ui_center_index(n, 0.0, ch.dt, ch.ui, q.output.size())) continue;
        double v = q.bits[n] ? 1.0 : -1.0;
        if (n > 0) v += tap * (q.bits[n - 1] ? 1.0 : -1.0);
        errors += (v > 0.0) != (q.bits[n] != 0) ? 1 : 0;
        ++count;
      }
      CHECK(compute_ber(q.output, q.bits) == static_cast<double>(errors) / static_cast<double>(count));
    }
  }
}
