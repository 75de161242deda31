#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "taglab/params.h"

namespace taglab {

struct TrainConfig {
  std::size_t batch_size = 8;
  double clip_norm = 1.0;
  int patience_epochs = 2;  // stale epochs before the learning rate is halved
  int max_decays = 5;       // a stale streak after this many halvings stops training
  double initial_lr = 1e-3;
  std::uint64_t seed = 0;
  int max_epochs = 200;
};

struct TrainState {
  int epoch = 0;
  double lr = 0.0;
  double best_dev_f1 = -std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int epochs_since_improve = 0;
  int decay_count = 0;
};

TrainState initial_state(const TrainConfig& config);

enum class ScheduleDecision { kContinue, kDecay, kStop };
const char* to_string(ScheduleDecision decision);

struct ScheduleResult {
  TrainState state;
  ScheduleDecision decision = ScheduleDecision::kContinue;
  bool improved = false;
};

// Advances the schedule by one finished epoch. A strict increase of the dev
// score is an improvement and resets the stale counter. After
// `patience_epochs` stale epochs the rate is halved and the counter restarts;
// once `max_decays` halvings have happened, the next exhausted streak stops.
ScheduleResult schedule_step(const TrainState& state, double dev_f1, const TrainConfig& config);

// Rescales all gradients so their global L2 norm is at most max_norm and
// returns the norm before clipping. Non-finite entries raise NumericError.
double clip_gradients(std::span<const std::span<double>> grads, double max_norm);
double clip_gradients(ParamStore& params, double max_norm);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double dev_f1 = 0.0;
  bool decayed = false;
  bool snapshot = false;
};

std::string history_jsonl(std::span<const EpochRecord> history);

struct TrainResult {
  std::vector<EpochRecord> history;
  double best_dev_f1 = 0.0;
  int best_epoch = 0;
};

// Accumulates the gradient of the batch objective into the store and returns
// the batch loss. The generator is the training run's, for dropout masks.
using BatchLossFn = std::function<double(std::span<const std::size_t> batch, std::mt19937_64& rng)>;
// Dev weighted-F1 of the current parameters.
using DevScoreFn = std::function<double()>;

// Epoch loop: seeded shuffle, batches (last one may be short), zero grads,
// loss/grad, clip, Adam step; dev score after each epoch drives the schedule.
// On return the store holds the best-dev snapshot.
TrainResult train_loop(ParamStore& params, const TrainConfig& config, std::size_t n_train, const BatchLossFn& batch_loss,
                       const DevScoreFn& dev_score);

struct GridAxis {
  std::string name;
  std::vector<std::string> values;
};

using GridPoint = std::vector<std::pair<std::string, std::string>>;

// Cartesian product, last axis varying fastest.
std::vector<GridPoint> enumerate_grid(std::span<const GridAxis> space);

struct LeaderboardEntry {
  GridPoint point;
  double dev_f1 = 0.0;
  std::size_t order = 0;  // position in enumeration order
};

// Evaluates every point and ranks by dev F1, descending; ties keep
// enumeration order. Cells may run on up to `threads` threads.
std::vector<LeaderboardEntry> grid_search(std::span<const GridAxis> space,
                                          const std::function<double(const GridPoint&)>& evaluate,
                                          unsigned threads = 1);

// Runs fn(0..n-1) on up to `threads` worker threads. The first exception is
// rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

// TAGLAB_THREADS, or 1 when unset or invalid.
unsigned thread_cap();

}  // namespace taglab
