#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "psrl/envs.hpp"
#include "psrl/rng.hpp"

using namespace psrl;
using namespace psrl::env;

namespace {

// Rolls one episode with uniform random actions; returns the total reward.
double random_episode(Env& e, uint64_t seed, Rng& action_rng) {
  e.reset(seed);
  double total = 0;
  while (!e.done()) {
    auto r = e.step(action_rng.uniform_int(e.spec().action_cardinality));
    validate_observation(e.spec(), r.obs);
    total += r.reward;
  }
  return total;
}

}  // namespace

TEST_CASE("same seed reproduces the same trajectory in every environment") {
  EnvParams p;
  for (const auto& name : env_names()) {
    auto a = make_env(name, p);
    auto b = make_env(name, p);
    Rng acts(99);
    std::vector<int> actions;
    a->reset(1234);
    while (!a->done()) {
      int act = acts.uniform_int(a->spec().action_cardinality);
      actions.push_back(act);
      a->step(act);
    }
    // replay the same actions on a fresh instance with the same seed
    auto oa = a->reset(1234);
    auto ob = b->reset(1234);
    CHECK(oa.discrete == ob.discrete);
    for (int act : actions) {
      if (a->done()) break;
      auto ra = a->step(act);
      auto rb = b->step(act);
      CHECK(ra.obs.discrete == rb.obs.discrete);
      CHECK(ra.reward == rb.reward);
      CHECK(ra.done == rb.done);
    }
  }
}

TEST_CASE("stepping a finished episode fails loudly") {
  EnvParams p;
  p.rp_horizon = 4;
  auto e = make_env("repeat_previous", p);
  e->reset(1);
  for (int i = 0; i < 4; ++i) e->step(0);
  CHECK(e->done());
  CHECK_THROWS_AS(e->step(0), std::logic_error);
  CHECK_THROWS_AS(e->sample_test_action(), std::logic_error);
}

TEST_CASE("out-of-range actions are rejected") {
  auto e = make_env("gridworld", EnvParams{});
  e->reset(7);
  CHECK_THROWS_AS(e->step(4), std::logic_error);
  CHECK_THROWS_AS(e->step(-1), std::logic_error);
}

TEST_CASE("gridworld basics") {
  GridWorld g;
  auto obs = g.reset(42);
  CHECK(g.spec().horizon == 9);
  CHECK(g.spec().channel_cardinalities == std::vector<int>{7, 7, 2});
  CHECK(obs.discrete[0] == g.agent_x());
  CHECK(obs.discrete[1] == g.agent_y());
  CHECK(obs.continuous[0] >= 0.0f);
  CHECK(obs.continuous[0] <= 1.0f);

  SUBCASE("reward only on reaching the target, which ends the episode") {
    Rng acts(5);
    int successes = 0;
    for (int ep = 0; ep < 500; ++ep) {
      g.reset(ep);
      while (!g.done()) {
        auto r = g.step(acts.uniform_int(4));
        if (r.reward != 0.0) {
          CHECK(r.reward == 1.0);
          CHECK(r.done);
          CHECK(g.agent_x() == g.target_x());
          CHECK(g.agent_y() == g.target_y());
          ++successes;
        }
      }
    }
    CHECK(successes > 0);
  }

  SUBCASE("distance indicator is correct with probability 0.90 +- 0.01") {
    Rng acts(17);
    long correct = 0, total = 0;
    uint64_t ep = 0;
    while (total < 100000) {
      g.reset(1000000 + ep++);
      while (!g.done() && total < 100000) {
        auto r = g.step(acts.uniform_int(4));
        const int truth = g.last_indicator_truth() ? 1 : 0;
        correct += (r.obs.discrete[2] == truth) ? 1 : 0;
        ++total;
      }
    }
    const double acc = static_cast<double>(correct) / total;
    CHECK(acc == doctest::Approx(0.90).epsilon(0.0112));
  }

  SUBCASE("identical seeds give identical noise streams") {
    auto o1 = g.reset(777);
    auto o2 = g.reset(777);
    CHECK(o1.continuous[0] == o2.continuous[0]);
  }
}

TEST_CASE("repeat_previous reward scheme") {
  const int H = 32, k = 2;
  EnvParams p;
  p.rp_k = k;
  p.rp_horizon = H;
  RepeatPrevious e(k, 4, H);

  SUBCASE("first k steps earn zero and encode reward code 0") {
    e.reset(3);
    for (int t = 0; t < k; ++t) {
      auto r = e.step(0);
      CHECK(r.reward == 0.0);
      CHECK(r.obs.discrete[1] == 0);
    }
    auto r = e.step(e.cards()[1]);  // t = 2 judges the card at t - k = 0... use stored deck
    (void)r;
  }

  SUBCASE("perfect recall earns exactly +1") {
    e.reset(11);
    const auto deck = e.cards();
    double total = 0;
    for (int t = 0; t < H; ++t) {
      total += e.step(t >= k ? deck[t - k] : 0).reward;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("uniform random policy expects return -0.5 (Monte-Carlo oracle)") {
    Rng acts(123);
    double sum = 0;
    const int n = 100000;
    for (int ep = 0; ep < n; ++ep) sum += random_episode(e, 50000 + ep, acts);
    CHECK(sum / n == doctest::Approx(-0.5).epsilon(0.02));
  }

  SUBCASE("test actions are uniform over suits (chi-square)") {
    e.reset(9);
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 10000; ++i) ++counts[e.sample_test_action()];
    double chi2 = 0;
    for (int c : counts) chi2 += (c - 2500.0) * (c - 2500.0) / 2500.0;
    CHECK(chi2 < 16.27);  // df=3 at significance 0.001
  }
}

TEST_CASE("autoencode rewards mirror reverse recall") {
  const int N = 6;
  AutoEncode e(N);

  SUBCASE("perfect play returns exactly 1, worst play exactly -1") {
    e.reset(4);
    const auto deck = e.cards();
    double total = 0;
    for (int t = 0; t < 2 * N; ++t) {
      const int target = t >= N ? deck[2 * N - 1 - t] : 0;
      total += e.step(target).reward;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    e.reset(4);
    total = 0;
    for (int t = 0; t < 2 * N; ++t) {
      const int wrong = t >= N ? (deck[2 * N - 1 - t] + 1) % 4 : 0;
      total += e.step(wrong).reward;
    }
    CHECK(total == doctest::Approx(-1.0).epsilon(1e-12));
  }

  SUBCASE("returns stay in [-1, 1] and equal (correct - incorrect)/N") {
    Rng acts(8);
    for (int ep = 0; ep < 200; ++ep) {
      e.reset(100 + ep);
      const auto deck = e.cards();
      int correct = 0, incorrect = 0;
      double total = 0;
      for (int t = 0; t < 2 * N; ++t) {
        int a = acts.uniform_int(4);
        if (t >= N) (a == deck[2 * N - 1 - t] ? correct : incorrect)++;
        total += e.step(a).reward;
      }
      CHECK(total >= -1.0);
      CHECK(total <= 1.0);
      CHECK(total == doctest::Approx((correct - incorrect) / double(N)).epsilon(1e-9));
    }
  }

  SUBCASE("watch phase has zero reward and code 0") {
    e.reset(21);
    auto r = e.step(2);
    CHECK(r.reward == 0.0);
    CHECK(r.obs.discrete[2] == 0);
  }
}

TEST_CASE("battleship analytic totals") {
  Battleship e(8, 8, {2, 3, 4});

  SUBCASE("a never-miss policy totals exactly 1") {
    for (int ep = 0; ep < 50; ++ep) {
      e.reset(ep);
      double total = 0;
      const int anchor = *e.ship_cells().begin();
      for (int cell : e.ship_cells()) total += e.step(cell).reward;
      while (!e.done()) total += e.step(anchor).reward;  // idle on a sunk cell
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }

  SUBCASE("uniform random without replacement totals exactly 0") {
    Rng order_rng(31);
    for (int ep = 0; ep < 2000; ++ep) {
      e.reset(1000 + ep);
      std::vector<int> order(64);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), order_rng.engine());
      double total = 0;
      for (int cell : order) total += e.step(cell).reward;
      CHECK(e.done());
      CHECK(std::abs(total) < 1e-9);
    }
  }

  SUBCASE("repeat shots earn nothing and observe a miss") {
    e.reset(5);
    int ship = *e.ship_cells().begin();
    auto first = e.step(ship);
    CHECK(first.reward > 0);
    CHECK(first.obs.discrete[0] == 1);
    auto again = e.step(ship);
    CHECK(again.reward == 0.0);
    CHECK(again.obs.discrete[0] == 0);
  }

  SUBCASE("after firing all but one cell the test action is forced") {
    e.reset(77);
    for (int cell = 0; cell < 63; ++cell) e.step(cell);
    for (int i = 0; i < 100; ++i) CHECK(e.sample_test_action() == 63);
  }
}

TEST_CASE("battleship random-without-replacement expected total is 0 +- 0.02") {
  // acceptance-grade oracle, 1e5 episodes driven by the test-action sampler
  Battleship e(8, 8, {2, 3, 4});
  double sum = 0;
  const int n = 100000;
  for (int ep = 0; ep < n; ++ep) {
    e.reset(ep);
    double total = 0;
    while (!e.done()) total += e.step(e.sample_test_action()).reward;
    sum += total;
  }
  CHECK(std::abs(sum / n) < 0.02);
}

TEST_CASE("minesweeper outcomes and encodings") {
  Minesweeper e(6, 6, 6);

  SUBCASE("hitting a mine ends the episode with code 1") {
    e.reset(2);
    int mine = *e.mines().begin();
    auto r = e.step(mine);
    CHECK(r.reward == -1.0);
    CHECK(r.done);
    CHECK(r.obs.discrete[2] == 1);
    CHECK(r.obs.discrete[3] == 1);
  }

  SUBCASE("repeated tiles are penalized with code 2") {
    e.reset(3);
    int safe = 0;
    while (e.mines().count(safe)) ++safe;
    auto first = e.step(safe);
    CHECK(first.reward > 0);
    CHECK(first.obs.discrete[3] == 0);
    auto again = e.step(safe);
    CHECK(again.reward < 0);
    CHECK(again.reward > -1.0);
    CHECK(again.obs.discrete[1] == 1);
    CHECK(again.obs.discrete[3] == 2);
  }

  SUBCASE("clearing every safe cell totals exactly 1") {
    e.reset(4);
    double total = 0;
    for (int cell = 0; cell < 36; ++cell) {
      if (e.mines().count(cell)) continue;
      total += e.step(cell).reward;
    }
    CHECK(e.done());
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("test actions never revisit a played cell") {
    Rng acts(6);
    e.reset(8);
    for (int i = 0; i < 10000; ++i) {
      if (e.done()) e.reset(8 + i);
      int a = e.sample_test_action();
      CHECK(e.visited().count(a) == 0);
      // play something to grow the visited set
      e.step(acts.uniform_int(36));
    }
  }
}

TEST_CASE("concentration rules") {
  Concentration e(1, "rank_or_color", 0);

  SUBCASE("first test action falls back to uniform over the board") {
    e.reset(1);
    std::vector<int> counts(52, 0);
    for (int i = 0; i < 5200; ++i) ++counts[e.sample_test_action()];
    int nonzero = 0;
    for (int c : counts) nonzero += c > 0;
    CHECK(nonzero > 40);  // spread across the board, not stuck
  }

  SUBCASE("after play begins, test actions come from played cells") {
    e.reset(2);
    e.step(10);
    e.step(20);
    for (int i = 0; i < 100; ++i) {
      int a = e.sample_test_action();
      CHECK((a == 10 || a == 20));
    }
  }

  SUBCASE("a matching pair pays, a mismatch costs") {
    e.reset(3);
    const auto& b = e.board();
    // find two distinct positions whose cards share rank or color
    int p1 = -1, p2 = -1;
    for (int i = 0; i < 52 && p1 < 0; ++i) {
      for (int j = i + 1; j < 52; ++j) {
        const bool rank = (b[i] % 52) / 4 == (b[j] % 52) / 4;
        const bool color = b[i] % 2 == b[j] % 2;
        if (rank || color) {
          p1 = i;
          p2 = j;
          break;
        }
      }
    }
    REQUIRE(p1 >= 0);
    e.step(p1);
    auto r = e.step(p2);
    CHECK(r.reward > 0);
    // flipping the matched pair again is penalized
    e.step(p1);
    auto r2 = e.step(p2);
    CHECK(r2.reward < 0);
  }
}

TEST_CASE("delayed catch withholds reward until the end") {
  DelayedCatch e(3);
  Rng acts(12);
  for (int ep = 0; ep < 100; ++ep) {
    e.reset(ep);
    double mid = 0;
    double final_reward = 0;
    while (true) {
      auto r = e.step(acts.uniform_int(3));
      if (r.done) {
        final_reward = r.reward;
        break;
      }
      mid += std::abs(r.reward);
    }
    CHECK(mid == 0.0);
    CHECK(std::abs(final_reward) <= 3.0);
    CHECK(std::fmod(std::abs(final_reward), 1.0) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("dark key-to-door returns live in {0,1,2} with key before door") {
  DarkKeyToDoor e;
  Rng acts(77);
  bool saw_two = false;
  for (int ep = 0; ep < 3000; ++ep) {
    e.reset(ep);
    double total = 0;
    bool key_seen = false;
    while (!e.done()) {
      auto r = e.step(acts.uniform_int(4));
      if (r.reward == 1.0 && !key_seen) {
        key_seen = true;  // first unit of reward must be the key
        CHECK(e.has_key());
      } else if (r.reward == 1.0) {
        CHECK(key_seen);  // the second unit requires the key
      }
      total += r.reward;
    }
    CHECK((total == 0.0 || total == 1.0 || total == 2.0));
    saw_two = saw_two || total == 2.0;
  }
  CHECK(saw_two);
}

TEST_CASE("reward channel encodings follow the per-environment scheme") {
  CHECK(encode_reward_channel("repeat_previous", 0.25) == 1);
  CHECK(encode_reward_channel("repeat_previous", 0.0) == 0);
  CHECK(encode_reward_channel("repeat_previous", -0.25) == 2);
  CHECK(encode_reward_channel("autoencode", 0.0) == 0);
  CHECK(encode_reward_channel("minesweeper", -1.0) == 1);
  CHECK(encode_reward_channel("minesweeper", -0.05) == 2);
  CHECK(encode_reward_channel("minesweeper", 0.05) == 0);
  CHECK(encode_reward_channel("battleship", 1.0) == 0);
  CHECK(encode_reward_channel("battleship", -1.0) == 0);
}

TEST_CASE("episodes respect the declared horizon") {
  EnvParams p;
  Rng acts(3);
  for (const auto& name : env_names()) {
    auto e = make_env(name, p);
    for (int ep = 0; ep < 20; ++ep) {
      e->reset(ep * 31 + 7);
      int steps = 0;
      while (!e->done()) {
        e->step(acts.uniform_int(e->spec().action_cardinality));
        ++steps;
      }
      CHECK(steps <= e->spec().horizon);
    }
  }
}
