#include "tradelab/diff/autodiff.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "tradelab/error.hpp"

namespace tradelab::diff {
namespace {

thread_local bool g_grad_enabled = true;

Var make(Mat value, std::vector<Var> parents, BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = false;
  if (g_grad_enabled)
    for (const auto& p : parents) needs = needs || p.requires_grad();
  if (needs) {
    node->parents = std::move(parents);
    node->backward = std::move(backward);
    node->requires_grad = true;
  }
  return Var(std::move(node));
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvariantError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
}

}  // namespace

double Var::scalar() const {
  if (rows() != 1 || cols() != 1) throw InvariantError("Var::scalar on a non-scalar value");
  return node_->value(0, 0);
}

Var constant(Mat value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var parameter(Mat value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

std::vector<Var> grad(const Var& loss, const std::vector<Var>& wrt, bool create_graph) {
  if (loss.rows() != 1 || loss.cols() != 1)
    throw ValidationError("grad: loss must be a scalar, got " + std::to_string(loss.rows()) + "x" +
                          std::to_string(loss.cols()));
  std::unordered_map<Node*, Var> grads;
  if (loss.requires_grad()) {
    // Post-order DFS gives a topological order (parents before children).
    std::vector<Var> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Var, std::size_t>> stack{{loss, 0}};
    seen.insert(loss.node());
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto& parents = v.node()->parents;
      if (next < parents.size()) {
        const Var p = parents[next++];
        if (p.requires_grad() && seen.insert(p.node()).second) stack.emplace_back(p, 0);
      } else {
        order.push_back(v);
        stack.pop_back();
      }
    }

    const bool previous = g_grad_enabled;
    g_grad_enabled = create_graph;
    try {
      grads[loss.node()] = constant(Mat::Ones(1, 1));
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = it->node();
        auto found = grads.find(n);
        if (found == grads.end() || !n->backward) continue;
        const Var g = found->second;
        const auto pgs = n->backward(*it, g);
        for (std::size_t k = 0; k < n->parents.size(); ++k) {
          const Var& p = n->parents[k];
          if (!p.requires_grad() || !pgs[k].defined()) continue;
          auto [slot, inserted] = grads.try_emplace(p.node(), pgs[k]);
          if (!inserted) slot->second = add(slot->second, pgs[k]);
        }
      }
    } catch (...) {
      g_grad_enabled = previous;
      throw;
    }
    g_grad_enabled = previous;
  }
  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const auto& w : wrt) {
    auto found = grads.find(w.node());
    if (found != grads.end())
      out.push_back(found->second);
    else
      out.push_back(constant(Mat::Zero(w.rows(), w.cols())));
  }
  return out;
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw InvariantError("matmul: inner dimensions differ");
  return make(a.value() * b.value(), {a, b}, [](const Var& self, const Var& g) {
    const auto& p = self.node()->parents;
    return std::vector<Var>{matmul_nt(g, p[1]), matmul_tn(p[0], g)};
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) throw InvariantError("matmul_nt: inner dimensions differ");
  return make(a.value() * b.value().transpose(), {a, b}, [](const Var& self, const Var& g) {
    const auto& p = self.node()->parents;
    return std::vector<Var>{matmul(g, p[1]), matmul_tn(g, p[0])};
  });
}

Var matmul_tn(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) throw InvariantError("matmul_tn: inner dimensions differ");
  return make(a.value().transpose() * b.value(), {a, b}, [](const Var& self, const Var& g) {
    const auto& p = self.node()->parents;
    return std::vector<Var>{matmul_nt(p[1], g), matmul(p[0], g)};
  });
}

Var transpose(const Var& a) {
  return make(a.value().transpose(), {a},
              [](const Var&, const Var& g) { return std::vector<Var>{transpose(g)}; });
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return make(a.value() + b.value(), {a, b},
              [](const Var&, const Var& g) { return std::vector<Var>{g, g}; });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  return make(a.value() - b.value(), {a, b},
              [](const Var&, const Var& g) { return std::vector<Var>{g, neg(g)}; });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  return make(a.value().cwiseProduct(b.value()), {a, b}, [](const Var& self, const Var& g) {
    const auto& p = self.node()->parents;
    return std::vector<Var>{mul(g, p[1]), mul(g, p[0])};
  });
}

Var neg(const Var& a) {
  return make(-a.value(), {a}, [](const Var&, const Var& g) { return std::vector<Var>{neg(g)}; });
}

Var scale(const Var& a, double c) {
  return make(a.value() * c, {a},
              [c](const Var&, const Var& g) { return std::vector<Var>{scale(g, c)}; });
}

Var add_scalar(const Var& a, double c) {
  return make(a.value().array() + c, {a},
              [](const Var&, const Var& g) { return std::vector<Var>{g}; });
}

Var tanh(const Var& a) {
  return make(a.value().array().tanh().matrix(), {a}, [](const Var& self, const Var& g) {
    // d tanh = 1 - y^2, expressed on the output node.
    return std::vector<Var>{mul(g, add_scalar(neg(square(self)), 1.0))};
  });
}

Var exp(const Var& a) {
  return make(a.value().array().exp().matrix(), {a},
              [](const Var& self, const Var& g) { return std::vector<Var>{mul(g, self)}; });
}

Var log(const Var& a) {
  return make(a.value().array().log().matrix(), {a}, [](const Var& self, const Var& g) {
    return std::vector<Var>{mul(g, reciprocal(self.node()->parents[0]))};
  });
}

Var reciprocal(const Var& a) {
  return make(a.value().array().inverse().matrix(), {a}, [](const Var& self, const Var& g) {
    return std::vector<Var>{neg(mul(g, square(self)))};
  });
}

Var square(const Var& a) {
  return make(a.value().array().square().matrix(), {a}, [](const Var& self, const Var& g) {
    return std::vector<Var>{scale(mul(g, self.node()->parents[0]), 2.0)};
  });
}

Var minimum(const Var& a, const Var& b) {
  check_same_shape(a, b, "minimum");
  const Mat pick_a = (a.value().array() <= b.value().array()).cast<double>().matrix();
  return make(a.value().cwiseMin(b.value()), {a, b}, [pick_a](const Var&, const Var& g) {
    const Var ma = constant(pick_a);
    const Var mb = constant((1.0 - pick_a.array()).matrix());
    return std::vector<Var>{mul(g, ma), mul(g, mb)};
  });
}

Var clamp_st(const Var& a, double lo, double hi) {
  return make(a.value().cwiseMax(lo).cwiseMin(hi), {a},
              [](const Var&, const Var& g) { return std::vector<Var>{g}; });
}

Var add_row(const Var& x, const Var& row) {
  if (row.rows() != 1 || row.cols() != x.cols()) throw InvariantError("add_row: shape mismatch");
  Mat v = x.value();
  v.rowwise() += row.value().row(0);
  return make(std::move(v), {x, row},
              [](const Var&, const Var& g) { return std::vector<Var>{g, sum_rows(g)}; });
}

Var sum_rows(const Var& x) {
  const auto n = x.rows();
  return make(x.value().colwise().sum(), {x},
              [n](const Var&, const Var& g) { return std::vector<Var>{broadcast_rows(g, n)}; });
}

Var broadcast_rows(const Var& row, Eigen::Index n) {
  if (row.rows() != 1) throw InvariantError("broadcast_rows expects a single row");
  return make(row.value().replicate(n, 1), {row},
              [](const Var&, const Var& g) { return std::vector<Var>{sum_rows(g)}; });
}

Var row_sum(const Var& x) {
  const auto m = x.cols();
  return make(x.value().rowwise().sum(), {x},
              [m](const Var&, const Var& g) { return std::vector<Var>{broadcast_cols(g, m)}; });
}

Var broadcast_cols(const Var& col, Eigen::Index m) {
  if (col.cols() != 1) throw InvariantError("broadcast_cols expects a single column");
  return make(col.value().replicate(1, m), {col},
              [](const Var&, const Var& g) { return std::vector<Var>{row_sum(g)}; });
}

Var sum(const Var& x) {
  const auto r = x.rows();
  const auto c = x.cols();
  return make(Mat::Constant(1, 1, x.value().sum()), {x}, [r, c](const Var&, const Var& g) {
    return std::vector<Var>{broadcast_scalar(g, r, c)};
  });
}

Var mean(const Var& x) {
  const auto n = static_cast<double>(x.rows() * x.cols());
  return scale(sum(x), 1.0 / n);
}

Var broadcast_scalar(const Var& s, Eigen::Index rows, Eigen::Index cols) {
  if (s.rows() != 1 || s.cols() != 1) throw InvariantError("broadcast_scalar expects a 1x1 value");
  return make(Mat::Constant(rows, cols, s.value()(0, 0)), {s},
              [](const Var&, const Var& g) { return std::vector<Var>{sum(g)}; });
}

Var concat_cols(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) throw InvariantError("concat_cols: row counts differ");
  Mat v(a.rows(), a.cols() + b.cols());
  v << a.value(), b.value();
  const auto ca = a.cols();
  const auto cb = b.cols();
  return make(std::move(v), {a, b}, [ca, cb](const Var&, const Var& g) {
    return std::vector<Var>{slice_cols(g, 0, ca), slice_cols(g, ca, cb)};
  });
}

Var slice_cols(const Var& x, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > x.cols()) throw InvariantError("slice_cols out of range");
  const auto total = x.cols();
  return make(x.value().middleCols(start, count), {x}, [start, total](const Var&, const Var& g) {
    return std::vector<Var>{pad_cols(g, start, total)};
  });
}

Var pad_cols(const Var& x, Eigen::Index start, Eigen::Index total) {
  if (start < 0 || start + x.cols() > total) throw InvariantError("pad_cols out of range");
  Mat v = Mat::Zero(x.rows(), total);
  v.middleCols(start, x.cols()) = x.value();
  const auto count = x.cols();
  return make(std::move(v), {x}, [start, count](const Var&, const Var& g) {
    return std::vector<Var>{slice_cols(g, start, count)};
  });
}

}  // namespace tradelab::diff
