#include "taglab/training.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <json.hpp>
#include <thread>

#include "taglab/error.h"

namespace taglab {

TrainState initial_state(const TrainConfig& config) {
  TrainState s;
  s.lr = config.initial_lr;
  return s;
}

const char* to_string(ScheduleDecision decision) {
  switch (decision) {
    case ScheduleDecision::kContinue: return "continue";
    case ScheduleDecision::kDecay: return "decay";
    case ScheduleDecision::kStop: return "stop";
  }
  return "?";
}

ScheduleResult schedule_step(const TrainState& state, double dev_f1, const TrainConfig& config) {
  ScheduleResult r;
  r.state = state;
  r.state.epoch = state.epoch + 1;
  if (dev_f1 > state.best_dev_f1) {
    r.improved = true;
    r.state.best_dev_f1 = dev_f1;
    r.state.best_epoch = r.state.epoch;
    r.state.epochs_since_improve = 0;
    return r;
  }
  if (++r.state.epochs_since_improve < config.patience_epochs) return r;
  if (state.decay_count >= config.max_decays) {
    r.decision = ScheduleDecision::kStop;
    return r;
  }
  r.decision = ScheduleDecision::kDecay;
  r.state.decay_count = state.decay_count + 1;
  r.state.lr = config.initial_lr / std::ldexp(1.0, r.state.decay_count);
  r.state.epochs_since_improve = 0;
  return r;
}

double clip_gradients(std::span<const std::span<double>> grads, double max_norm) {
  if (!(max_norm > 0)) throw UsageError("clip norm must be positive");
  double ss = 0.0;
  for (auto g : grads)
    for (double v : g) {
      if (!std::isfinite(v)) throw NumericError("non-finite gradient entry encountered before clipping");
      ss += v * v;
    }
  const double norm = std::sqrt(ss);
  auto sq_norm = [&] {
    double s = 0.0;
    for (auto g : grads)
      for (double v : g) s += v * v;
    return s;
  };
  // Rounding can leave the rescaled norm a few ulps above the cap; shrink
  // again until it is not.
  double current = norm, shrink = 1.0;
  for (int attempt = 0; current > max_norm && attempt < 8; ++attempt) {
    const double factor = max_norm / current * shrink;
    for (auto g : grads)
      for (double& v : g) v *= factor;
    current = std::sqrt(sq_norm());
    shrink -= 0x1p-50;
  }
  return norm;
}

double clip_gradients(ParamStore& params, double max_norm) {
  std::vector<std::span<double>> grads;
  for (std::size_t i = 0; i < params.size(); ++i) grads.emplace_back(params.at(i).grad);
  try {
    return clip_gradients(grads, max_norm);
  } catch (const NumericError&) {
    for (std::size_t i = 0; i < params.size(); ++i)
      for (double v : params.at(i).grad)
        if (!std::isfinite(v)) throw NumericError("non-finite gradient in parameter '" + params.names()[i] + "'");
    throw;
  }
}

std::string history_jsonl(std::span<const EpochRecord> history) {
  std::string out;
  for (const auto& r : history) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["lr"] = r.lr;
    j["train_loss"] = r.train_loss;
    j["dev_f1"] = r.dev_f1;
    j["decayed"] = r.decayed;
    j["snapshot"] = r.snapshot;
    out += j.dump() + "\n";
  }
  return out;
}

TrainResult train_loop(ParamStore& params, const TrainConfig& config, std::size_t n_train, const BatchLossFn& batch_loss,
                       const DevScoreFn& dev_score) {
  if (config.batch_size < 1) throw UsageError("batch size must be at least 1");
  if (n_train == 0) throw UsageError("empty training set");
  std::mt19937_64 rng(config.seed);
  AdamOptimizer optimizer;
  TrainState state = initial_state(config);
  TrainResult result;
  auto best = params.values();

  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < n_train; b += config.batch_size) {
      std::span<const std::size_t> batch(order.data() + b, std::min(config.batch_size, n_train - b));
      params.zero_grad();
      const double loss = batch_loss(batch, rng);
      if (!std::isfinite(loss)) throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
      epoch_loss += loss * static_cast<double>(batch.size());
      clip_gradients(params, config.clip_norm);
      optimizer.step(params, state.lr);
    }

    const double f1 = dev_score();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = state.lr;
    rec.train_loss = epoch_loss / static_cast<double>(n_train);
    rec.dev_f1 = f1;
    ScheduleResult step = schedule_step(state, f1, config);
    rec.snapshot = step.improved;
    rec.decayed = step.decision == ScheduleDecision::kDecay;
    if (step.improved) best = params.values();
    result.history.push_back(rec);
    state = step.state;
    if (step.decision == ScheduleDecision::kStop) break;
  }
  params.set_values(best);
  result.best_dev_f1 = state.best_dev_f1;
  result.best_epoch = state.best_epoch;
  return result;
}

std::vector<GridPoint> enumerate_grid(std::span<const GridAxis> space) {
  if (space.empty()) throw UsageError("grid search space is empty");
  for (const auto& axis : space)
    if (axis.values.empty()) throw UsageError("grid axis '" + axis.name + "' has no values");
  std::vector<GridPoint> points{GridPoint{}};
  for (const auto& axis : space) {
    std::vector<GridPoint> next;
    for (const auto& p : points)
      for (const auto& v : axis.values) {
        GridPoint q = p;
        q.emplace_back(axis.name, v);
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  return points;
}

std::vector<LeaderboardEntry> grid_search(std::span<const GridAxis> space,
                                          const std::function<double(const GridPoint&)>& evaluate, unsigned threads) {
  auto points = enumerate_grid(space);
  std::vector<LeaderboardEntry> board(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    board[i].point = points[i];
    board[i].order = i;
    board[i].dev_f1 = evaluate(points[i]);
  });
  std::stable_sort(board.begin(), board.end(), [](const auto& a, const auto& b) { return a.dev_f1 > b.dev_f1; });
  return board;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

unsigned thread_cap() {
  const char* env = std::getenv("TAGLAB_THREADS");
  if (!env) return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1) return 1;
  return static_cast<unsigned>(std::min(v, 256L));
}

}  // namespace taglab
