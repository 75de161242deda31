#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace taglab {

// Linear-chain score lattice in the log domain. `state` is row-major n x K,
// `trans` is row-major K x K indexed [from][to].
struct Lattice {
  std::size_t n = 0;
  std::size_t num_tags = 0;
  std::vector<double> state;
  std::vector<double> trans;
  std::vector<double> start;
  std::vector<double> end;

  Lattice() = default;
  // All-zero lattice.
  Lattice(std::size_t positions, std::size_t tags);

  double& at(std::size_t t, std::size_t j) { return state[t * num_tags + j]; }
  double at(std::size_t t, std::size_t j) const { return state[t * num_tags + j]; }
  double& tr(std::size_t i, std::size_t j) { return trans[i * num_tags + j]; }
  double tr(std::size_t i, std::size_t j) const { return trans[i * num_tags + j]; }

  // Throws std::invalid_argument when sizes disagree or a score is non-finite.
  void validate() const;
};

using TagPath = std::vector<int>;

double log_partition(const Lattice& lattice);

double path_score(const Lattice& lattice, std::span<const int> path);

struct Marginals {
  std::vector<double> node;  // n x K
  std::vector<double> edge;  // (n-1) x K x K, [t][from][to]
  double log_z = 0.0;
};

// Forward-backward posteriors.
Marginals marginals(const Lattice& lattice);

struct ViterbiResult {
  TagPath path;
  double score = 0.0;
};

// Best path. Ties resolve to the lower tag index, both in the final-position
// choice and in every backpointer.
ViterbiResult viterbi(const Lattice& lattice);

// Index of the maximum, lowest index on ties.
int argmax(std::span<const double> values);

double log_sum_exp(std::span<const double> values);

}  // namespace taglab
