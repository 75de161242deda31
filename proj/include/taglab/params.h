#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace taglab {

// Dense row-major tensor with a same-shape gradient accumulator.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  std::size_t size() const { return value.size(); }
  std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 1 : shape[0]) : shape[1]; }
  double* row(std::size_t r) { return value.data() + r * cols(); }
  const double* row(std::size_t r) const { return value.data() + r * cols(); }
};

// Named tensors in insertion order. References returned by add()/get() stay
// valid for the lifetime of the store.
class ParamStore {
 public:
  Tensor& add(const std::string& name, std::vector<std::size_t> shape);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  Tensor& at(std::size_t i) { return tensors_[i]; }
  const Tensor& at(std::size_t i) const { return tensors_[i]; }
  std::size_t num_values() const;

  void zero_grad();
  double grad_norm() const;
  double value_sq_norm() const;

  // Snapshot of every value vector, in insertion order.
  std::vector<std::vector<double>> values() const;
  void set_values(const std::vector<std::vector<double>>& values);

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
  std::deque<Tensor> tensors_;
};

void fill_uniform(Tensor& t, double bound, std::mt19937_64& rng);
// Glorot-style bound sqrt(6 / (fan_in + fan_out)) for a [fan_out x fan_in] matrix.
void init_dense(Tensor& t, std::mt19937_64& rng);
// Uniform +-sqrt(3 / dim) for an embedding table [rows x dim].
void init_embedding(Tensor& t, std::mt19937_64& rng);

// Adam over every tensor in a store. Moment buffers are created on first use.
class AdamOptimizer {
 public:
  AdamOptimizer(double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
      : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  void step(ParamStore& store, double lr);
  std::int64_t steps() const { return t_; }

 private:
  double beta1_, beta2_, epsilon_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace taglab
