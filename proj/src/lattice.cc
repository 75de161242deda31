#include "taglab/lattice.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace taglab {

Lattice::Lattice(std::size_t positions, std::size_t tags)
    : n(positions),
      num_tags(tags),
      state(positions * tags, 0.0),
      trans(tags * tags, 0.0),
      start(tags, 0.0),
      end(tags, 0.0) {}

void Lattice::validate() const {
  if (n == 0 || num_tags == 0) throw std::invalid_argument("lattice needs n >= 1 and K >= 1");
  if (state.size() != n * num_tags || trans.size() != num_tags * num_tags || start.size() != num_tags ||
      end.size() != num_tags)
    throw std::invalid_argument("lattice score arrays have inconsistent sizes");
  auto finite = [](const std::vector<double>& v) { return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }); };
  if (!finite(state) || !finite(trans) || !finite(start) || !finite(end))
    throw std::invalid_argument("lattice contains a non-finite score");
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t j = 1; j < values.size(); ++j)
    if (values[j] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
  return best;
}

namespace {

// alpha[t][j]: log-sum of all prefixes ending in tag j at t, including state[t][j].
std::vector<double> forward(const Lattice& L) {
  const auto K = L.num_tags;
  std::vector<double> alpha(L.n * K);
  std::vector<double> buf(K);
  for (std::size_t j = 0; j < K; ++j) alpha[j] = L.start[j] + L.at(0, j);
  for (std::size_t t = 1; t < L.n; ++t) {
    for (std::size_t j = 0; j < K; ++j) {
      for (std::size_t i = 0; i < K; ++i) buf[i] = alpha[(t - 1) * K + i] + L.tr(i, j);
      alpha[t * K + j] = log_sum_exp(buf) + L.at(t, j);
    }
  }
  return alpha;
}

// beta[t][i]: log-sum of all suffixes after t given tag i at t, including end.
std::vector<double> backward(const Lattice& L) {
  const auto K = L.num_tags;
  std::vector<double> beta(L.n * K);
  std::vector<double> buf(K);
  for (std::size_t i = 0; i < K; ++i) beta[(L.n - 1) * K + i] = L.end[i];
  for (std::size_t t = L.n - 1; t-- > 0;) {
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < K; ++j) buf[j] = L.tr(i, j) + L.at(t + 1, j) + beta[(t + 1) * K + j];
      beta[t * K + i] = log_sum_exp(buf);
    }
  }
  return beta;
}

}  // namespace

double log_partition(const Lattice& L) {
  L.validate();
  auto alpha = forward(L);
  const auto K = L.num_tags;
  std::vector<double> last(K);
  for (std::size_t j = 0; j < K; ++j) last[j] = alpha[(L.n - 1) * K + j] + L.end[j];
  return log_sum_exp(last);
}

double path_score(const Lattice& L, std::span<const int> path) {
  if (path.size() != L.n)
    throw std::invalid_argument("path length " + std::to_string(path.size()) + " != lattice length " + std::to_string(L.n));
  for (int y : path)
    if (y < 0 || static_cast<std::size_t>(y) >= L.num_tags) throw std::invalid_argument("path tag out of range");
  auto u = [&](std::size_t t) { return static_cast<std::size_t>(path[t]); };
  double s = L.start[u(0)] + L.end[u(L.n - 1)];
  for (std::size_t t = 0; t < L.n; ++t) {
    s += L.at(t, u(t));
    if (t + 1 < L.n) s += L.tr(u(t), u(t + 1));
  }
  return s;
}

Marginals marginals(const Lattice& L) {
  L.validate();
  const auto K = L.num_tags;
  auto alpha = forward(L);
  auto beta = backward(L);
  Marginals m;
  std::vector<double> last(K);
  for (std::size_t j = 0; j < K; ++j) last[j] = alpha[(L.n - 1) * K + j] + L.end[j];
  m.log_z = log_sum_exp(last);

  m.node.resize(L.n * K);
  for (std::size_t t = 0; t < L.n; ++t)
    for (std::size_t j = 0; j < K; ++j) m.node[t * K + j] = std::exp(alpha[t * K + j] + beta[t * K + j] - m.log_z);

  m.edge.resize((L.n - 1) * K * K);
  for (std::size_t t = 0; t + 1 < L.n; ++t)
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j)
        m.edge[(t * K + i) * K + j] =
            std::exp(alpha[t * K + i] + L.tr(i, j) + L.at(t + 1, j) + beta[(t + 1) * K + j] - m.log_z);
  return m;
}

ViterbiResult viterbi(const Lattice& L) {
  L.validate();
  const auto K = L.num_tags;
  std::vector<double> delta(L.n * K);
  std::vector<int> back(L.n * K, 0);
  for (std::size_t j = 0; j < K; ++j) delta[j] = L.start[j] + L.at(0, j);
  for (std::size_t t = 1; t < L.n; ++t) {
    for (std::size_t j = 0; j < K; ++j) {
      int best = 0;
      double best_score = delta[(t - 1) * K] + L.tr(0, j);
      for (std::size_t i = 1; i < K; ++i) {
        double s = delta[(t - 1) * K + i] + L.tr(i, j);
        if (s > best_score) {
          best_score = s;
          best = static_cast<int>(i);
        }
      }
      delta[t * K + j] = best_score + L.at(t, j);
      back[t * K + j] = best;
    }
  }
  std::vector<double> last(K);
  for (std::size_t j = 0; j < K; ++j) last[j] = delta[(L.n - 1) * K + j] + L.end[j];
  ViterbiResult r;
  r.path.assign(L.n, 0);
  r.path[L.n - 1] = argmax(last);
  r.score = last[static_cast<std::size_t>(r.path[L.n - 1])];
  for (std::size_t t = L.n - 1; t > 0; --t) r.path[t - 1] = back[t * K + static_cast<std::size_t>(r.path[t])];
  return r;
}

}  // namespace taglab
