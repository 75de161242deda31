#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "taglab/error.h"
#include "taglab/training.h"

using namespace taglab;

namespace {

std::vector<ScheduleResult> run(const std::vector<double>& scores, const TrainConfig& cfg = {}) {
  std::vector<ScheduleResult> out;
  TrainState s = initial_state(cfg);
  for (double f : scores) {
    out.push_back(schedule_step(s, f, cfg));
    s = out.back().state;
    if (out.back().decision == ScheduleDecision::kStop) break;
  }
  return out;
}

}  // namespace

TEST_CASE("improving epochs continue") {
  auto r = run({0.90, 0.91});
  CHECK(r[0].decision == ScheduleDecision::kContinue);
  CHECK(r[1].decision == ScheduleDecision::kContinue);
  CHECK(r[1].improved);
  CHECK(r[1].state.best_epoch == 2);
  CHECK(r[1].state.lr == 1e-3);
}

TEST_CASE("two stale epochs halve the rate") {
  auto r = run({0.90, 0.89, 0.89});
  CHECK(r[1].decision == ScheduleDecision::kContinue);
  CHECK(r[2].decision == ScheduleDecision::kDecay);
  CHECK(r[2].state.lr == 5e-4);
  CHECK(r[2].state.decay_count == 1);
  CHECK(r[2].state.best_epoch == 1);
}

TEST_CASE("equal scores do not count as improvement") {
  auto r = run({0.90, 0.90, 0.90});
  CHECK_FALSE(r[1].improved);
  CHECK(r[2].decision == ScheduleDecision::kDecay);
}

TEST_CASE("stops on the stale streak after the last decay") {
  std::vector<double> scores(40, 0.5);
  scores[0] = 0.9;
  auto r = run(scores);
  // 1 improving epoch, then 5 decays of 2 stale epochs each, then 2 more.
  REQUIRE(r.size() == 13);
  CHECK(r.back().decision == ScheduleDecision::kStop);
  int decays = 0;
  for (const auto& x : r) decays += x.decision == ScheduleDecision::kDecay;
  CHECK(decays == 5);
  CHECK(r[11].state.lr == doctest::Approx(1e-3 / 32));
}

TEST_CASE("improvement resets the stale counter") {
  auto r = run({0.9, 0.8, 0.95, 0.8, 0.8});
  CHECK(r[2].state.epochs_since_improve == 0);
  CHECK(r[3].decision == ScheduleDecision::kContinue);
  CHECK(r[4].decision == ScheduleDecision::kDecay);
}

TEST_CASE("learning rate is initial / 2^decays") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  TrainState s = initial_state({});
  for (int i = 0; i < 100; ++i) {
    auto r = schedule_step(s, u(rng), {});
    CHECK(r.state.lr == doctest::Approx(1e-3 / std::pow(2.0, r.state.decay_count)));
    CHECK(r.state.decay_count <= 5);
    if (r.decision == ScheduleDecision::kStop) break;
    s = r.state;
  }
}

TEST_CASE("gradient clipping") {
  std::vector<double> g{3.0, 4.0};
  std::span<double> parts[] = {g};
  CHECK(clip_gradients(parts, 1.0) == doctest::Approx(5.0));
  CHECK(g[0] == doctest::Approx(0.6));
  CHECK(g[1] == doctest::Approx(0.8));

  std::vector<double> small{0.1, 0.2};
  std::span<double> sp[] = {small};
  clip_gradients(sp, 1.0);
  CHECK(small == std::vector<double>{0.1, 0.2});

  std::vector<double> bad{1.0, NAN};
  std::span<double> bp[] = {bad};
  CHECK_THROWS_AS(clip_gradients(bp, 1.0), NumericError);
}

TEST_CASE("clipping property: bounded norm, preserved direction") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(7), b(3);
    for (auto& x : a) x = n(rng);
    for (auto& x : b) x = n(rng);
    auto a0 = a, b0 = b;
    std::span<double> parts[] = {a, b};
    const double before = clip_gradients(parts, 1.0);
    double sq = 0;
    for (double x : a) sq += x * x;
    for (double x : b) sq += x * x;
    CHECK(std::sqrt(sq) <= 1.0);
    const double k = before > 1.0 ? 1.0 / before : 1.0;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(a0[i] * k));
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(b[i] == doctest::Approx(b0[i] * k));
  }
}

TEST_CASE("train_loop restores the best snapshot and records history") {
  ParamStore p;
  Tensor& w = p.add("w", {1});
  w.value = {0.0};
  TrainConfig cfg;
  cfg.max_epochs = 6;
  cfg.batch_size = 3;
  cfg.initial_lr = 0.1;
  std::vector<double> dev{0.5, 0.7, 0.6, 0.6, 0.65, 0.4};
  std::vector<double> at_epoch;
  std::size_t calls = 0, epoch = 0;
  auto loss = [&](std::span<const std::size_t> batch, std::mt19937_64&) {
    ++calls;
    CHECK(batch.size() <= 3);
    w.grad[0] += -1.0;  // push w upwards every step
    return 1.0;
  };
  auto score = [&] {
    at_epoch.push_back(w.value[0]);
    return dev[epoch++];
  };
  auto r = train_loop(p, cfg, 7, loss, score);
  CHECK(calls == 6 * 3);
  REQUIRE(r.history.size() == 6);
  CHECK(r.best_epoch == 2);
  CHECK(r.best_dev_f1 == 0.7);
  CHECK(w.value[0] == at_epoch[1]);
  CHECK(r.history[1].snapshot);
  CHECK(r.history[3].decayed);
  CHECK(r.history[5].decayed);
  CHECK(r.history[4].lr == doctest::Approx(0.05));
}

TEST_CASE("history serialises as JSON lines") {
  std::vector<EpochRecord> h{{1, 0.001, 2.5, 0.9, false, true}, {2, 0.0005, 2.0, 0.8, true, false}};
  const auto s = history_jsonl(h);
  CHECK(s ==
        "{\"epoch\":1,\"lr\":0.001,\"train_loss\":2.5,\"dev_f1\":0.9,\"decayed\":false,\"snapshot\":true}\n"
        "{\"epoch\":2,\"lr\":0.0005,\"train_loss\":2.0,\"dev_f1\":0.8,\"decayed\":true,\"snapshot\":false}\n");
}

TEST_CASE("grid enumeration") {
  GridAxis axes[] = {{"a", {"1", "2"}}, {"b", {"x", "y", "z"}}};
  auto g = enumerate_grid(axes);
  REQUIRE(g.size() == 6);
  CHECK(g[0] == GridPoint{{"a", "1"}, {"b", "x"}});
  CHECK(g[1] == GridPoint{{"a", "1"}, {"b", "y"}});
  CHECK(g[5] == GridPoint{{"a", "2"}, {"b", "z"}});
  std::set<GridPoint> unique(g.begin(), g.end());
  CHECK(unique.size() == 6);

  GridAxis one[] = {{"only", {"v"}}};
  CHECK(enumerate_grid(one).size() == 1);
  GridAxis empty[] = {{"a", {}}};
  CHECK_THROWS_AS(enumerate_grid(empty), UsageError);
  CHECK_THROWS_AS(enumerate_grid(std::span<const GridAxis>{}), UsageError);
}

TEST_CASE("grid search ranks by dev score with stable ties") {
  GridAxis axes[] = {{"lr", {"a", "b", "c", "d"}}};
  auto eval = [](const GridPoint& p) {
    const auto& v = p[0].second;
    return v == "a" ? 0.5 : v == "b" ? 0.9 : v == "c" ? 0.5 : 0.7;
  };
  for (unsigned threads : {1u, 3u}) {
    auto lb = grid_search(axes, eval, threads);
    REQUIRE(lb.size() == 4);
    CHECK(lb[0].point[0].second == "b");
    CHECK(lb[1].point[0].second == "d");
    CHECK(lb[2].point[0].second == "a");
    CHECK(lb[3].point[0].second == "c");
    CHECK(lb[2].order == 0);
  }
}

TEST_CASE("parallel_for visits every index and rethrows") {
  std::vector<int> seen(50, 0);
  parallel_for(50, 4, [&](std::size_t i) { seen[i] += 1; });
  for (int s : seen) CHECK(s == 1);
  CHECK_THROWS_AS(parallel_for(5, 2, [](std::size_t i) {
                    if (i == 3) throw NumericError("boom");
                  }),
                  NumericError);
}
