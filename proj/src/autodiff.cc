#include "taglab/autodiff.h"

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

#include "taglab/lattice.h"

namespace taglab::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

Graph& graph_of(Expr e) {
  if (!e.graph) throw std::invalid_argument("expression is not attached to a graph");
  return *e.graph;
}

}  // namespace

const std::vector<double>& Expr::value() const { return graph->value(id); }

Expr Graph::record(std::vector<double> value, std::function<void()> backward_fn) {
  if (differentiated_) throw std::logic_error("graph already differentiated; reset() before recording");
  nodes_.push_back({std::move(value), {}, std::move(backward_fn)});
  return {this, static_cast<int>(nodes_.size() - 1)};
}

std::vector<double>& Graph::grad(int id) {
  auto& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

Expr Graph::constant(std::vector<double> value) { return record(std::move(value), nullptr); }

Expr Graph::lookup(Tensor& table, int row) {
  if (table.shape.size() != 2 || row < 0 || static_cast<std::size_t>(row) >= table.rows())
    throw std::out_of_range("lookup: row out of range");
  const auto r = static_cast<std::size_t>(row);
  const auto dim = table.cols();
  std::vector<double> v(table.row(r), table.row(r) + dim);
  int id = static_cast<int>(nodes_.size());
  return record(std::move(v), [this, id, &table, r, dim] {
    const auto& g = grad(id);
    double* dst = table.grad.data() + r * dim;
    for (std::size_t k = 0; k < dim; ++k) dst[k] += g[k];
  });
}

Expr Graph::parameter(Tensor& tensor) {
  int id = static_cast<int>(nodes_.size());
  return record(tensor.value, [this, id, &tensor] {
    const auto& g = grad(id);
    for (std::size_t k = 0; k < g.size(); ++k) tensor.grad[k] += g[k];
  });
}

void Graph::backward(Expr loss) {
  if (differentiated_) throw std::logic_error("backward() called twice on the same graph");
  if (loss.graph != this) throw std::invalid_argument("loss belongs to another graph");
  if (value(loss.id).size() != 1) throw std::invalid_argument("backward() needs a scalar loss");
  differentiated_ = true;
  grad(loss.id)[0] += 1.0;
  for (int i = loss.id; i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backward && !n.grad.empty()) n.backward();
  }
}

void Graph::reset() {
  nodes_.clear();
  differentiated_ = false;
}

Expr affine(Tensor& weight, Tensor& bias, Expr x) {
  Graph& g = graph_of(x);
  const auto out = weight.rows(), in = weight.cols();
  if (weight.shape.size() != 2 || x.dim() != in || bias.size() != out)
    throw std::invalid_argument("affine: shape mismatch");
  std::vector<double> y(out);
  VecMap(y.data(), static_cast<Eigen::Index>(out)) =
      ConstMatMap(weight.value.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)) *
          ConstVecMap(x.value().data(), static_cast<Eigen::Index>(in)) +
      ConstVecMap(bias.value.data(), static_cast<Eigen::Index>(out));
  int id = static_cast<int>(g.size());
  int xid = x.id;
  return g.record(std::move(y), [&g, id, xid, &weight, &bias, out, in] {
    const auto eo = static_cast<Eigen::Index>(out), ei = static_cast<Eigen::Index>(in);
    ConstVecMap gy(g.grad(id).data(), eo);
    ConstVecMap xv(g.value(xid).data(), ei);
    MatMap(weight.grad.data(), eo, ei).noalias() += gy * xv.transpose();
    VecMap(bias.grad.data(), eo) += gy;
    VecMap(g.grad(xid).data(), ei).noalias() += ConstMatMap(weight.value.data(), eo, ei).transpose() * gy;
  });
}

Expr concat(std::span<const Expr> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  Graph& g = graph_of(parts[0]);
  std::vector<double> y;
  std::vector<int> ids;
  for (const auto& p : parts) {
    const auto& v = p.value();
    y.insert(y.end(), v.begin(), v.end());
    ids.push_back(p.id);
  }
  int id = static_cast<int>(g.size());
  return g.record(std::move(y), [&g, id, ids] {
    const auto& gy = g.grad(id);
    std::size_t off = 0;
    for (int pid : ids) {
      auto& gp = g.grad(pid);
      for (std::size_t k = 0; k < gp.size(); ++k) gp[k] += gy[off + k];
      off += gp.size();
    }
  });
}

Expr slice(Expr x, std::size_t begin, std::size_t length) {
  Graph& g = graph_of(x);
  const auto& v = x.value();
  if (begin + length > v.size()) throw std::out_of_range("slice out of range");
  std::vector<double> y(v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(begin + length));
  int id = static_cast<int>(g.size());
  int xid = x.id;
  return g.record(std::move(y), [&g, id, xid, begin] {
    const auto& gy = g.grad(id);
    auto& gx = g.grad(xid);
    for (std::size_t k = 0; k < gy.size(); ++k) gx[begin + k] += gy[k];
  });
}

namespace {

// Elementwise op whose derivative is expressed through its output value.
template <typename F, typename D>
Expr unary(Expr x, F f, D dfdy) {
  Graph& g = graph_of(x);
  std::vector<double> y = x.value();
  for (auto& v : y) v = f(v);
  int id = static_cast<int>(g.size());
  int xid = x.id;
  return g.record(std::move(y), [&g, id, xid, dfdy] {
    const auto& gy = g.grad(id);
    const auto& yv = g.value(id);
    auto& gx = g.grad(xid);
    for (std::size_t k = 0; k < gy.size(); ++k) gx[k] += gy[k] * dfdy(yv[k]);
  });
}

}  // namespace

Expr tanh(Expr x) {
  return unary(x, [](double v) { return std::tanh(v); }, [](double y) { return 1.0 - y * y; });
}

Expr sigmoid(Expr x) {
  return unary(
      x, [](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); },
      [](double y) { return y * (1.0 - y); });
}

Expr relu(Expr x) {
  return unary(x, [](double v) { return v > 0 ? v : 0.0; }, [](double y) { return y > 0 ? 1.0 : 0.0; });
}

Expr cmul(Expr a, Expr b) {
  Graph& g = graph_of(a);
  if (a.dim() != b.dim()) throw std::invalid_argument("cmul: size mismatch");
  std::vector<double> y(a.dim());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = a.value()[k] * b.value()[k];
  int id = static_cast<int>(g.size());
  int aid = a.id, bid = b.id;
  return g.record(std::move(y), [&g, id, aid, bid] {
    const auto& gy = g.grad(id);
    for (std::size_t k = 0; k < gy.size(); ++k) {
      const double ga = gy[k] * g.value(bid)[k];
      const double gb = gy[k] * g.value(aid)[k];
      g.grad(aid)[k] += ga;
      g.grad(bid)[k] += gb;
    }
  });
}

Expr add(Expr a, Expr b) {
  Expr items[] = {a, b};
  return sum(items);
}

Expr mask(Expr x, std::vector<double> mask) {
  Graph& g = graph_of(x);
  if (mask.size() != x.dim()) throw std::invalid_argument("mask: size mismatch");
  std::vector<double> y = x.value();
  for (std::size_t k = 0; k < y.size(); ++k) y[k] *= mask[k];
  int id = static_cast<int>(g.size());
  int xid = x.id;
  return g.record(std::move(y), [&g, id, xid, m = std::move(mask)] {
    const auto& gy = g.grad(id);
    auto& gx = g.grad(xid);
    for (std::size_t k = 0; k < gy.size(); ++k) gx[k] += gy[k] * m[k];
  });
}

Expr scale(Expr x, double factor) { return mask(x, std::vector<double>(x.dim(), factor)); }

Expr max_pool(std::span<const Expr> items) {
  if (items.empty()) throw std::invalid_argument("max_pool: no items");
  Graph& g = graph_of(items[0]);
  const auto dim = items[0].dim();
  std::vector<double> y = items[0].value();
  std::vector<int> winner(dim, items[0].id);
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].dim() != dim) throw std::invalid_argument("max_pool: size mismatch");
    const auto& v = items[i].value();
    for (std::size_t k = 0; k < dim; ++k)
      if (v[k] > y[k]) {
        y[k] = v[k];
        winner[k] = items[i].id;
      }
  }
  int id = static_cast<int>(g.size());
  return g.record(std::move(y), [&g, id, winner] {
    const auto& gy = g.grad(id);
    for (std::size_t k = 0; k < gy.size(); ++k) g.grad(winner[k])[k] += gy[k];
  });
}

Expr sum(std::span<const Expr> items) {
  if (items.empty()) throw std::invalid_argument("sum: no items");
  Graph& g = graph_of(items[0]);
  std::vector<double> y(items[0].dim(), 0.0);
  std::vector<int> ids;
  for (const auto& e : items) {
    if (e.dim() != y.size()) throw std::invalid_argument("sum: size mismatch");
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += e.value()[k];
    ids.push_back(e.id);
  }
  int id = static_cast<int>(g.size());
  return g.record(std::move(y), [&g, id, ids] {
    const auto& gy = g.grad(id);
    for (int pid : ids) {
      auto& gp = g.grad(pid);
      for (std::size_t k = 0; k < gy.size(); ++k) gp[k] += gy[k];
    }
  });
}

Expr neg_log_softmax(Expr logits, int gold) {
  Graph& g = graph_of(logits);
  const auto& z = logits.value();
  if (gold < 0 || static_cast<std::size_t>(gold) >= z.size()) throw std::out_of_range("neg_log_softmax: gold out of range");
  const double lz = log_sum_exp(z);
  std::vector<double> y{lz - z[static_cast<std::size_t>(gold)]};
  int id = static_cast<int>(g.size());
  int zid = logits.id;
  return g.record(std::move(y), [&g, id, zid, gold, lz] {
    const double gy = g.grad(id)[0];
    const auto& zv = g.value(zid);
    auto& gz = g.grad(zid);
    for (std::size_t k = 0; k < zv.size(); ++k)
      gz[k] += gy * (std::exp(zv[k] - lz) - (static_cast<int>(k) == gold ? 1.0 : 0.0));
  });
}

Expr crf_nll(std::span<const Expr> emissions, Tensor& trans, Tensor& start, Tensor& end, std::span<const int> gold) {
  if (emissions.empty()) throw std::invalid_argument("crf_nll: empty sequence");
  if (gold.size() != emissions.size()) throw std::invalid_argument("crf_nll: gold length mismatch");
  Graph& g = graph_of(emissions[0]);
  const auto K = start.size();
  Lattice L(emissions.size(), K);
  for (std::size_t t = 0; t < L.n; ++t) {
    if (emissions[t].dim() != K) throw std::invalid_argument("crf_nll: emission size mismatch");
    std::copy(emissions[t].value().begin(), emissions[t].value().end(), L.state.begin() + static_cast<std::ptrdiff_t>(t * K));
  }
  L.trans = trans.value;
  L.start = start.value;
  L.end = end.value;
  Marginals m = marginals(L);
  std::vector<double> y{m.log_z - path_score(L, gold)};

  std::vector<int> ids;
  for (const auto& e : emissions) ids.push_back(e.id);
  std::vector<int> gold_path(gold.begin(), gold.end());
  int id = static_cast<int>(g.size());
  return g.record(std::move(y), [&g, id, ids, gold_path, m = std::move(m), &trans, &start, &end, K] {
    const double gy = g.grad(id)[0];
    const auto n = ids.size();
    auto y_at = [&](std::size_t t) { return static_cast<std::size_t>(gold_path[t]); };
    for (std::size_t t = 0; t < n; ++t) {
      auto& ge = g.grad(ids[t]);
      for (std::size_t j = 0; j < K; ++j) ge[j] += gy * m.node[t * K + j];
      ge[y_at(t)] -= gy;
    }
    for (std::size_t j = 0; j < K; ++j) {
      start.grad[j] += gy * m.node[j];
      end.grad[j] += gy * m.node[(n - 1) * K + j];
    }
    start.grad[y_at(0)] -= gy;
    end.grad[y_at(n - 1)] -= gy;
    for (std::size_t t = 0; t + 1 < n; ++t) {
      for (std::size_t k = 0; k < K * K; ++k) trans.grad[k] += gy * m.edge[t * K * K + k];
      trans.grad[y_at(t) * K + y_at(t + 1)] -= gy;
    }
  });
}

}  // namespace taglab::ad
