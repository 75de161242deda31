#include "taglab/params.h"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace taglab {

Tensor& ParamStore::add(const std::string& name, std::vector<std::size_t> shape) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  index_.emplace(name, tensors_.size());
  names_.push_back(name);
  Tensor& t = tensors_.emplace_back();
  t.shape = std::move(shape);
  t.value.assign(n, 0.0);
  t.grad.assign(n, 0.0);
  return t;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return tensors_[it->second];
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return tensors_[it->second];
}

std::size_t ParamStore::num_values() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& t : tensors_) std::fill(t.grad.begin(), t.grad.end(), 0.0);
}

double ParamStore::grad_norm() const {
  double ss = 0.0;
  for (const auto& t : tensors_)
    for (double g : t.grad) ss += g * g;
  return std::sqrt(ss);
}

double ParamStore::value_sq_norm() const {
  double ss = 0.0;
  for (const auto& t : tensors_)
    for (double v : t.value) ss += v * v;
  return ss;
}

std::vector<std::vector<double>> ParamStore::values() const {
  std::vector<std::vector<double>> out;
  out.reserve(tensors_.size());
  for (const auto& t : tensors_) out.push_back(t.value);
  return out;
}

void ParamStore::set_values(const std::vector<std::vector<double>>& values) {
  if (values.size() != tensors_.size()) throw std::invalid_argument("snapshot does not match parameter store");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].size() != tensors_[i].size()) throw std::invalid_argument("snapshot shape mismatch for " + names_[i]);
    tensors_[i].value = values[i];
  }
}

void fill_uniform(Tensor& t, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.value) v = dist(rng);
}

void init_dense(Tensor& t, std::mt19937_64& rng) {
  fill_uniform(t, std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols())), rng);
}

void init_embedding(Tensor& t, std::mt19937_64& rng) { fill_uniform(t, std::sqrt(3.0 / static_cast<double>(t.cols())), rng); }

void AdamOptimizer::step(ParamStore& store, double lr) {
  if (m_.size() != store.size()) {
    m_.clear();
    v_.clear();
    for (std::size_t i = 0; i < store.size(); ++i) {
      m_.emplace_back(store.at(i).size(), 0.0);
      v_.emplace_back(store.at(i).size(), 0.0);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < store.size(); ++i) {
    Tensor& p = store.at(i);
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double g = p.grad[k];
      m[k] = beta1_ * m[k] + (1 - beta1_) * g;
      v[k] = beta2_ * v[k] + (1 - beta2_) * g * g;
      p.value[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + epsilon_);
    }
  }
}

}  // namespace taglab
