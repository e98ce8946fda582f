#include "seqaug/autodiff.hpp"

#include <optional>
#include <unordered_map>

#include <fmt/format.h>

#include "seqaug/errors.hpp"

namespace seqaug::ad {

namespace {

thread_local bool g_grad_enabled = true;

void require(bool ok, const char* op, const Var& a, const Var& b) {
  if (!ok)
    throw InvalidArgument(fmt::format("{}: incompatible shapes {}x{} and {}x{}", op, a.rows(),
                                      a.cols(), b.rows(), b.cols()));
}

const Var& parent(const Var& self, std::size_t i) { return self.node()->parents[i]; }

}  // namespace

Var::Var(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Var Var::from_op(Matrix value, std::vector<Var> parents, BackwardFn backward) {
  Var out(std::move(value));
  if (!g_grad_enabled) return out;
  bool any = false;
  for (const auto& p : parents) any = any || p.requires_grad();
  if (!any) return out;
  out.node_->parents = std::move(parents);
  out.node_->backward = std::move(backward);
  out.node_->requires_grad = true;
  return out;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

std::vector<Var> grad(const Var& output, const std::vector<Var>& inputs, GradOptions opts) {
  if (output.rows() != 1 || output.cols() != 1)
    throw InvalidArgument("grad: output must be a 1x1 scalar");

  std::unordered_map<Node*, bool> relevant;
  for (const auto& in : inputs)
    if (in.defined()) relevant[in.node()] = false;
  std::unordered_map<Node*, char> is_input;
  for (const auto& in : inputs)
    if (in.defined()) is_input[in.node()] = 1;

  // Iterative post-order DFS: parents precede children in `order`.
  std::vector<Var> order;
  std::unordered_map<Node*, char> visited;
  if (output.requires_grad()) {
    std::vector<std::pair<Var, std::size_t>> stack{{output, 0}};
    visited[output.node()] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto& parents = v.node()->parents;
      if (next < parents.size()) {
        const Var p = parents[next++];
        if (p.requires_grad() && !visited.count(p.node())) {
          visited[p.node()] = 1;
          stack.emplace_back(p, 0);
        }
        continue;
      }
      bool rel = is_input.count(v.node()) > 0;
      for (const auto& p : parents) {
        auto it = relevant.find(p.node());
        rel = rel || (it != relevant.end() && it->second);
      }
      relevant[v.node()] = rel;
      order.push_back(v);
      stack.pop_back();
    }
  }

  std::unordered_map<Node*, Var> grads;
  std::vector<Var> result;
  {
    std::optional<NoGradGuard> guard;
    if (!opts.create_graph) guard.emplace();
    if (output.requires_grad()) grads[output.node()] = Var(Matrix::Ones(1, 1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* n = it->node();
      if (!relevant[n] || !n->backward) continue;
      auto g = grads.find(n);
      if (g == grads.end()) continue;
      std::vector<char> needed(n->parents.size(), 0);
      bool any = false;
      for (std::size_t i = 0; i < n->parents.size(); ++i) {
        const auto& p = n->parents[i];
        needed[i] = p.requires_grad() && relevant[p.node()];
        any = any || needed[i];
      }
      if (!any) continue;
      const Var upstream = g->second;
      auto parent_grads = n->backward(*it, upstream, needed);
      for (std::size_t i = 0; i < n->parents.size(); ++i) {
        if (!needed[i] || !parent_grads[i].defined()) continue;
        Node* pn = n->parents[i].node();
        auto [slot, inserted] = grads.try_emplace(pn, parent_grads[i]);
        if (!inserted) slot->second = add(slot->second, parent_grads[i]);
      }
      // Interior gradients are no longer needed once propagated.
      if (!is_input.count(n)) grads.erase(n);
    }
    result.reserve(inputs.size());
    for (const auto& in : inputs) {
      auto it = grads.find(in.node());
      if (it != grads.end())
        result.push_back(it->second);
      else
        result.push_back(Var(Matrix::Zero(in.rows(), in.cols())));
    }
  }
  return result;
}

Var add(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add", a, b);
  return Var::from_op(a.value() + b.value(), {a, b},
                      [](const Var&, const Var& g, const std::vector<char>& need) {
                        return std::vector<Var>{need[0] ? g : Var(), need[1] ? g : Var()};
                      });
}

Var sub(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub", a, b);
  return Var::from_op(a.value() - b.value(), {a, b},
                      [](const Var&, const Var& g, const std::vector<char>& need) {
                        return std::vector<Var>{need[0] ? g : Var(), need[1] ? neg(g) : Var()};
                      });
}

Var mul(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul", a, b);
  return Var::from_op(a.value().cwiseProduct(b.value()), {a, b},
                      [](const Var& self, const Var& g, const std::vector<char>& need) {
                        return std::vector<Var>{need[0] ? mul(g, parent(self, 1)) : Var(),
                                                need[1] ? mul(g, parent(self, 0)) : Var()};
                      });
}

Var div(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "div", a, b);
  return Var::from_op(a.value().cwiseQuotient(b.value()), {a, b},
                      [](const Var& self, const Var& g, const std::vector<char>& need) {
                        const Var& den = parent(self, 1);
                        return std::vector<Var>{
                            need[0] ? div(g, den) : Var(),
                            need[1] ? neg(div(mul(g, self), den)) : Var()};
                      });
}

Var neg(const Var& a) {
  return Var::from_op(-a.value(), {a}, [](const Var&, const Var& g, const std::vector<char>&) {
    return std::vector<Var>{neg(g)};
  });
}

Var scale(const Var& a, double s) {
  return Var::from_op(a.value() * s, {a},
                      [s](const Var&, const Var& g, const std::vector<char>&) {
                        return std::vector<Var>{scale(g, s)};
                      });
}

Var add_scalar(const Var& a, double s) {
  return Var::from_op(a.value().array() + s, {a},
                      [](const Var&, const Var& g, const std::vector<char>&) {
                        return std::vector<Var>{g};
                      });
}

Var matmul(const Var& a, const Var& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  Matrix out;
  out.noalias() = a.value() * b.value();
  return Var::from_op(std::move(out), {a, b},
                      [](const Var& self, const Var& g, const std::vector<char>& need) {
                        const Var& lhs = parent(self, 0);
                        const Var& rhs = parent(self, 1);
                        return std::vector<Var>{need[0] ? matmul(g, transpose(rhs)) : Var(),
                                                need[1] ? matmul(transpose(lhs), g) : Var()};
                      });
}

Var transpose(const Var& a) {
  return Var::from_op(a.value().transpose(), {a},
                      [](const Var&, const Var& g, const std::vector<char>&) {
                        return std::vector<Var>{transpose(g)};
                      });
}

Var tanh(const Var& a) {
  return Var::from_op(a.value().array().tanh(), {a},
                      [](const Var& self, const Var& g, const std::vector<char>&) {
                        // d tanh = 1 - y^2
                        return std::vector<Var>{mul(g, add_scalar(neg(mul(self, self)), 1.0))};
                      });
}

Var sigmoid(const Var& a) {
  Matrix y = (1.0 + (-a.value().array()).exp()).inverse();
  return Var::from_op(std::move(y), {a},
                      [](const Var& self, const Var& g, const std::vector<char>&) {
                        return std::vector<Var>{mul(g, mul(self, add_scalar(neg(self), 1.0)))};
                      });
}

Var sqrt(const Var& a) {
  return Var::from_op(a.value().array().sqrt(), {a},
                      [](const Var& self, const Var& g, const std::vector<char>&) {
                        return std::vector<Var>{div(scale(g, 0.5), self)};
                      });
}

Var abs(const Var& a) {
  return Var::from_op(a.value().cwiseAbs(), {a},
                      [](const Var& self, const Var& g, const std::vector<char>&) {
                        const Matrix sign = parent(self, 0).value().array().sign();
                        return std::vector<Var>{mul(g, Var(sign))};
                      });
}

Var square(const Var& a) { return mul(a, a); }

Var add_row(const Var& a, const Var& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row", a, row);
  Matrix out = a.value().rowwise() + row.value().row(0);
  return Var::from_op(std::move(out), {a, row},
                      [](const Var&, const Var& g, const std::vector<char>& need) {
                        return std::vector<Var>{need[0] ? g : Var(),
                                                need[1] ? sum_over_rows(g) : Var()};
                      });
}

Var sum(const Var& a) {
  const auto m = a.rows(), n = a.cols();
  return Var::from_op(Matrix::Constant(1, 1, a.value().sum()), {a},
                      [m, n](const Var&, const Var& g, const std::vector<char>&) {
                        return std::vector<Var>{fill(g, m, n)};
                      });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var sum_over_rows(const Var& a) {
  const auto m = a.rows();
  return Var::from_op(a.value().colwise().sum(), {a},
                      [m](const Var&, const Var& g, const std::vector<char>&) {
                        return std::vector<Var>{repeat_rows(g, m)};
                      });
}

Var sum_over_cols(const Var& a) {
  const auto n = a.cols();
  return Var::from_op(a.value().rowwise().sum(), {a},
                      [n](const Var&, const Var& g, const std::vector<char>&) {
                        return std::vector<Var>{repeat_cols(g, n)};
                      });
}

Var repeat_rows(const Var& row, Eigen::Index m) {
  if (row.rows() != 1) throw InvalidArgument("repeat_rows expects a row vector");
  return Var::from_op(row.value().replicate(m, 1), {row},
                      [](const Var&, const Var& g, const std::vector<char>&) {
                        return std::vector<Var>{sum_over_rows(g)};
                      });
}

Var repeat_cols(const Var& col, Eigen::Index n) {
  if (col.cols() != 1) throw InvalidArgument("repeat_cols expects a column vector");
  return Var::from_op(col.value().replicate(1, n), {col},
                      [](const Var&, const Var& g, const std::vector<char>&) {
                        return std::vector<Var>{sum_over_cols(g)};
                      });
}

Var fill(const Var& scalar, Eigen::Index m, Eigen::Index n) {
  if (scalar.rows() != 1 || scalar.cols() != 1) throw InvalidArgument("fill expects a 1x1 value");
  return Var::from_op(Matrix::Constant(m, n, scalar.item()), {scalar},
                      [](const Var&, const Var& g, const std::vector<char>&) {
                        return std::vector<Var>{sum(g)};
                      });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidArgument("concat_cols of nothing");
  Eigen::Index rows = parts[0].rows(), cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols", parts[0], p);
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return Var::from_op(std::move(out), parts,
                      [offsets](const Var& self, const Var& g, const std::vector<char>& need) {
                        std::vector<Var> out(need.size());
                        for (std::size_t i = 0; i < need.size(); ++i)
                          if (need[i])
                            out[i] = slice_cols(g, offsets[i], parent(self, i).cols());
                        return out;
                      });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw InvalidArgument("slice_cols out of range");
  const auto total = a.cols();
  return Var::from_op(a.value().middleCols(start, count), {a},
                      [start, total](const Var&, const Var& g, const std::vector<char>&) {
                        return std::vector<Var>{pad_cols(g, start, total)};
                      });
}

Var pad_cols(const Var& a, Eigen::Index start, Eigen::Index total) {
  Matrix out = Matrix::Zero(a.rows(), total);
  out.middleCols(start, a.cols()) = a.value();
  const auto count = a.cols();
  return Var::from_op(std::move(out), {a},
                      [start, count](const Var&, const Var& g, const std::vector<char>&) {
                        return std::vector<Var>{slice_cols(g, start, count)};
                      });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidArgument("concat_rows of nothing");
  Eigen::Index cols = parts[0].cols(), rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows", parts[0], p);
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    out.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  return Var::from_op(std::move(out), parts,
                      [offsets](const Var& self, const Var& g, const std::vector<char>& need) {
                        std::vector<Var> out(need.size());
                        for (std::size_t i = 0; i < need.size(); ++i)
                          if (need[i])
                            out[i] = slice_rows(g, offsets[i], parent(self, i).rows());
                        return out;
                      });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    throw InvalidArgument("slice_rows out of range");
  const auto total = a.rows();
  return Var::from_op(a.value().middleRows(start, count), {a},
                      [start, total](const Var&, const Var& g, const std::vector<char>&) {
                        return std::vector<Var>{pad_rows(g, start, total)};
                      });
}

Var pad_rows(const Var& a, Eigen::Index start, Eigen::Index total) {
  Matrix out = Matrix::Zero(total, a.cols());
  out.middleRows(start, a.rows()) = a.value();
  const auto count = a.rows();
  return Var::from_op(std::move(out), {a},
                      [start, count](const Var&, const Var& g, const std::vector<char>&) {
                        return std::vector<Var>{slice_rows(g, start, count)};
                      });
}

}  // namespace seqaug::ad
