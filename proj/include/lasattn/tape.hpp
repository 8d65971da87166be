// Copyright 2026 The lasattn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "lasattn/attention.hpp"
#include "lasattn/ops.hpp"

namespace lasattn {

/// Single-use record of one forward pass. Each op stores what its backward
/// needs; backward() walks the records in reverse creation order.
template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;

  struct Var {
    std::size_t id = 0;
  };

  struct OpRecord {
    std::string_view op;
    std::vector<std::size_t> parents;
    // Reads the node's gradient and accumulates into the parents'.
    std::function<void(Tape&, std::size_t)> backward;
  };

  Var constant(Mat value) {
    Node n;
    n.owned = std::move(value);
    n.rec.op = "constant";
    return push(std::move(n));
  }

  /// Leaf that aliases `value`; its gradient is added into `*grad_sink` by
  /// backward(). The referenced matrix must outlive the tape.
  Var parameter(const Mat& value, Mat* grad_sink) {
    Node n;
    n.ref = &value;
    n.sink = grad_sink;
    n.requires_grad = grad_sink != nullptr;
    n.rec.op = "parameter";
    return push(std::move(n));
  }

  const Mat& value(Var v) const { return value_of(v.id); }
  const Mat& grad(Var v) const { return nodes_.at(v.id).grad; }
  const OpRecord& record(Var v) const { return nodes_.at(v.id).rec; }
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b) {
    Mat out = ops::matmul(value(a), value(b));
    return push_op("matmul", std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
      auto g = ops::matmul_backward(t.value(a), t.value(b), t.nodes_[self].grad);
      t.accumulate(a.id, g.lhs);
      t.accumulate(b.id, g.rhs);
    });
  }

  Var add(Var a, Var b) {
    Mat out = ops::add(value(a), value(b));
    return push_op("add", std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
      t.accumulate(a.id, t.nodes_[self].grad);
      t.accumulate(b.id, t.nodes_[self].grad);
    });
  }

  Var elementwise_mul(Var a, Var b) {
    Mat out = ops::elementwise_mul(value(a), value(b));
    return push_op("elementwise_mul", std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
      auto g = ops::elementwise_mul_backward(t.value(a), t.value(b), t.nodes_[self].grad);
      t.accumulate(a.id, g.lhs);
      t.accumulate(b.id, g.rhs);
    });
  }

  Var add_row_bias(Var x, Var bias) {
    Mat out = ops::add_row_bias(value(x), value(bias));
    return push_op("add_row_bias", std::move(out), {x, bias},
                   [x, bias](Tape& t, std::size_t self) {
                     auto g = ops::add_row_bias_backward(t.nodes_[self].grad);
                     t.accumulate(x.id, g.lhs);
                     t.accumulate(bias.id, g.rhs);
                   });
  }

  Var relu(Var x) {
    Mat out = ops::relu(value(x));
    return push_op("relu", std::move(out), {x}, [x](Tape& t, std::size_t self) {
      t.accumulate(x.id, ops::relu_backward(t.value(x), t.nodes_[self].grad));
    });
  }

  Var softmax_rows(Var x) {
    Mat out = ops::softmax_rows(value(x));
    return push_op("softmax_rows", std::move(out), {x}, [x](Tape& t, std::size_t self) {
      t.accumulate(x.id, ops::softmax_rows_backward(t.value_of(self), t.nodes_[self].grad));
    });
  }

  Var avg_pool_rows(Var x, int window) {
    Mat out = ops::avg_pool_rows(value(x), window);
    return push_op("avg_pool_rows", std::move(out), {x}, [x, window](Tape& t, std::size_t self) {
      t.accumulate(x.id, ops::avg_pool_rows_backward(t.nodes_[self].grad, window));
    });
  }

  Var layer_norm(Var x, Var gamma, Var beta) {
    auto cache = std::make_shared<ops::LayerNormCache<Scalar>>();
    Mat out = ops::layer_norm(value(x), value(gamma), value(beta), cache.get());
    return push_op("layer_norm", std::move(out), {x, gamma, beta},
                   [x, gamma, beta, cache](Tape& t, std::size_t self) {
                     auto g = ops::layer_norm_backward(*cache, t.value(gamma), t.nodes_[self].grad);
                     t.accumulate(x.id, g.input);
                     t.accumulate(gamma.id, g.gamma);
                     t.accumulate(beta.id, g.beta);
                   });
  }

  /// Rows `ids` of `table`, i.e. an embedding lookup.
  Var gather_rows(Var table, std::vector<int> ids) {
    const Mat& tab = value(table);
    Mat out(static_cast<Eigen::Index>(ids.size()), tab.cols());
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (ids[r] < 0 || ids[r] >= tab.rows()) {
        throw InputError("gather_rows: id " + std::to_string(ids[r]) + " outside table of " +
                         std::to_string(tab.rows()) + " rows");
      }
      out.row(static_cast<Eigen::Index>(r)) = tab.row(ids[r]);
    }
    return push_op("gather_rows", std::move(out), {table},
                   [table, ids = std::move(ids)](Tape& t, std::size_t self) {
                     if (!t.nodes_[table.id].requires_grad) return;
                     const Mat& g = t.nodes_[self].grad;
                     Mat gt = Mat::Zero(t.value(table).rows(), g.cols());
                     for (std::size_t r = 0; r < ids.size(); ++r)
                       gt.row(ids[r]) += g.row(static_cast<Eigen::Index>(r));
                     t.accumulate(table.id, gt);
                   });
  }

  Var slice_rows(Var x, Eigen::Index begin, Eigen::Index count) {
    const Mat& v = value(x);
    if (begin < 0 || count < 0 || begin + count > v.rows()) {
      throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                           std::to_string(begin + count) + ") of " + std::to_string(v.rows()));
    }
    Mat out = v.middleRows(begin, count);
    return push_op("slice_rows", std::move(out), {x}, [x, begin, count](Tape& t, std::size_t self) {
      if (!t.nodes_[x.id].requires_grad) return;
      Mat g = Mat::Zero(t.value(x).rows(), t.value(x).cols());
      g.middleRows(begin, count) = t.nodes_[self].grad;
      t.accumulate(x.id, g);
    });
  }

  /// Scalar (1 x 1) cross entropy of a 1 x K logits row.
  Var cross_entropy(Var logits, int label) {
    Mat out(1, 1);
    out(0, 0) = ops::cross_entropy(value(logits), label);
    return push_op("cross_entropy", std::move(out), {logits},
                   [logits, label](Tape& t, std::size_t self) {
                     t.accumulate(logits.id, ops::cross_entropy_backward(
                                                 t.value(logits), label, t.nodes_[self].grad(0, 0)));
                   });
  }

  /// Multi-head attention of x with projection weights wq, wk, wv, wo.
  Var attention(Var x, Var wq, Var wk, Var wv, Var wo,
                std::shared_ptr<const AttentionPlan<Scalar>> plan) {
    auto cache = std::make_shared<AttentionCache<Scalar>>();
    AttentionWeights<Scalar> w{value(wq), value(wk), value(wv), value(wo)};
    Mat out = multi_head_attention(value(x), w, *plan, cache.get());
    caches_.push_back(cache);
    return push_op("attention", std::move(out), {x, wq, wk, wv, wo},
                   [=, w = std::move(w)](Tape& t, std::size_t self) {
                     auto g = multi_head_attention_backward(w, *plan, *cache, t.nodes_[self].grad);
                     t.accumulate(x.id, g.input);
                     t.accumulate(wq.id, g.weights.wq);
                     t.accumulate(wk.id, g.weights.wk);
                     t.accumulate(wv.id, g.weights.wv);
                     t.accumulate(wo.id, g.weights.wo);
                   });
  }

  /// Attention caches in the order the attention ops were recorded.
  const std::vector<std::shared_ptr<AttentionCache<Scalar>>>& attention_caches() const {
    return caches_;
  }

  /// Reverse sweep from a 1 x 1 root; parameter gradients land in their sinks.
  void backward(Var root) {
    Node& r = nodes_.at(root.id);
    if (r.value().rows() != 1 || r.value().cols() != 1) {
      throw DimensionError("Tape::backward: root must be a scalar");
    }
    r.grad = Mat::Ones(1, 1);
    for (std::size_t id = root.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (n.grad.size() == 0) continue;
      if (n.rec.backward) n.rec.backward(*this, id);
      if (n.sink) {
        if (n.sink->size() == 0) *n.sink = Mat::Zero(n.grad.rows(), n.grad.cols());
        *n.sink += n.grad;
      }
    }
  }

 private:
  struct Node {
    Mat owned;
    const Mat* ref = nullptr;
    Mat grad;
    Mat* sink = nullptr;
    bool requires_grad = false;
    OpRecord rec;

    const Mat& value() const { return ref ? *ref : owned; }
  };

  const Mat& value_of(std::size_t id) const { return nodes_.at(id).value(); }

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  Var push_op(std::string_view op, Mat out, std::initializer_list<Var> parents,
              std::function<void(Tape&, std::size_t)> backward) {
    Node n;
    n.owned = std::move(out);
    n.rec.op = op;
    for (const Var p : parents) {
      n.rec.parents.push_back(p.id);
      n.requires_grad = n.requires_grad || nodes_.at(p.id).requires_grad;
    }
    if (n.requires_grad) n.rec.backward = std::move(backward);
    return push(std::move(n));
  }

  void accumulate(std::size_t id, const Mat& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  std::vector<Node> nodes_;
  std::vector<std::shared_ptr<AttentionCache<Scalar>>> caches_;
};

}  // namespace lasattn
