/*
 * Copyright 2026 The mtuplift Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "common/errors.hpp"

namespace mtu::nn {
namespace {

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void softmax_row_inplace(Eigen::Ref<Eigen::RowVectorXd> row) {
  const double mx = row.maxCoeff();
  row = (row.array() - mx).exp();
  row /= row.sum();
}

// Floors q and renormalizes rows that needed flooring; marks which entries
// were above the floor (gradient passes through those only). Returns the
// divisor, or 0 when the row was left untouched.
double floored_row(const double* q, Eigen::Index n, double floor, double* out,
                   bool* active) {
  double total = 0.0;
  bool floored = false;
  for (Eigen::Index j = 0; j < n; ++j) {
    active[j] = q[j] > floor;
    floored = floored || !active[j];
    out[j] = active[j] ? q[j] : floor;
    total += out[j];
  }
  if (!floored) return 0.0;
  for (Eigen::Index j = 0; j < n; ++j) out[j] /= total;
  return total;
}

double kl_row(const double* p, const double* qf, Eigen::Index n) {
  double kl = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (p[j] > 0.0) kl += p[j] * (std::log(p[j]) - std::log(qf[j]));
  }
  return kl;
}

}  // namespace

void Gradients::add(const Param& p, const Matrix& g) {
  auto it = index_.find(&p);
  if (it == index_.end()) {
    index_.emplace(&p, entries_.size());
    entries_.emplace_back(&p, g);
  } else {
    entries_[it->second].second += g;
  }
}

const Matrix* Gradients::find(const Param& p) const {
  auto it = index_.find(&p);
  return it == index_.end() ? nullptr : &entries_[it->second].second;
}

void Gradients::accumulate_into(ParamStore& store) const {
  for (std::size_t i = 0; i < store.size(); ++i) {
    Param& p = store[i];
    if (const Matrix* g = find(p)) p.grad += *g;
  }
}

Var Tape::push(Matrix value, bool grad, Backprop backprop) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = grad;
  if (grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) {
    throw StateError("variable " + std::to_string(v.id) + " is not on this tape");
  }
  return nodes_[v.id];
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.rows() != 1 || m.cols() != 1) throw DimensionError("expected scalar, got " + shape_of(m));
  return m(0, 0);
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, {}); }

Var Tape::dense(Var x, const Param& weights, const Param& bias) {
  const Matrix& in = value(x);
  if (in.cols() != weights.value.cols()) {
    throw DimensionError("dense '" + weights.name + "': input " + shape_of(in) +
                         " vs weights " + shape_of(weights.value));
  }
  if (bias.value.rows() != 1 || bias.value.cols() != weights.value.rows()) {
    throw DimensionError("dense '" + bias.name + "': bias " + shape_of(bias.value));
  }
  Matrix out = in * weights.value.transpose();
  out.rowwise() += bias.value.row(0);
  const bool x_grad = needs_grad(x);
  return push(std::move(out), true, [this, x, x_grad, &weights, &bias](const Matrix& up) {
    const Matrix& in = nodes_[x.id].value;
    sink_->add(weights, up.transpose() * in);
    sink_->add(bias, up.colwise().sum());
    if (x_grad) accumulate(x, up * weights.value);
  });
}

Var Tape::activate(Var x, Activation act) {
  switch (act) {
    case Activation::kRelu: return relu(x);
    case Activation::kSigmoid: return sigmoid(x);
    case Activation::kLinear: break;
  }
  return x;
}

Var Tape::dense_forward(Var x, const Param& weights, const Param& bias, Activation act) {
  return activate(dense(x, weights, bias), act);
}

Var Tape::relu(Var x) {
  Matrix out = value(x).cwiseMax(0.0);
  return push(std::move(out), needs_grad(x), [this, x](const Matrix& up) {
    const Matrix& in = nodes_[x.id].value;
    accumulate(x, (in.array() > 0.0).select(up, 0.0));
  });
}

Var Tape::sigmoid(Var x) {
  Matrix out = (1.0 + (-value(x).array()).exp()).inverse().matrix();
  const Var self{static_cast<std::uint32_t>(nodes_.size())};
  return push(std::move(out), needs_grad(x), [this, x, self](const Matrix& up) {
    const auto s = nodes_[self.id].value.array();
    accumulate(x, (up.array() * s * (1.0 - s)).matrix());
  });
}

Var Tape::softmax_rows(Var x) {
  Matrix out = value(x);
  if (out.cols() == 0) throw DimensionError("softmax of empty rows");
  for (Eigen::Index i = 0; i < out.rows(); ++i) softmax_row_inplace(out.row(i));
  const Var self{static_cast<std::uint32_t>(nodes_.size())};
  return push(std::move(out), needs_grad(x), [this, x, self](const Matrix& up) {
    const Matrix& y = nodes_[self.id].value;
    Eigen::VectorXd dots = (up.array() * y.array()).rowwise().sum();
    Matrix g = y.array() * (up.colwise() - dots).array();
    accumulate(x, g);
  });
}

Var Tape::embedding(const Param& table, std::span<const std::int32_t> ids,
                    std::string_view label) {
  const Eigen::Index rows = table.value.rows();
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.value.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= rows) {
      throw IndexError("id " + std::to_string(ids[i]) + " out of range [0, " +
                       std::to_string(rows) + ") for feature '" + std::string(label) + "'");
    }
    out.row(static_cast<Eigen::Index>(i)) = table.value.row(ids[i]);
  }
  std::vector<std::int32_t> copy(ids.begin(), ids.end());
  return push(std::move(out), true, [this, &table, copy = std::move(copy)](const Matrix& up) {
    Matrix g = Matrix::Zero(table.value.rows(), table.value.cols());
    for (std::size_t i = 0; i < copy.size(); ++i) {
      g.row(copy[i]) += up.row(static_cast<Eigen::Index>(i));
    }
    sink_->add(table, g);
  });
}

Var Tape::mean_pool(const Param& table, const std::vector<std::vector<std::int32_t>>& lists,
                    std::string_view label) {
  const Eigen::Index rows = table.value.rows();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(lists.size()), table.value.cols());
  for (std::size_t b = 0; b < lists.size(); ++b) {
    const auto& ids = lists[b];
    if (ids.empty()) throw DataError("empty item list in group '" + std::string(label) + "'");
    for (std::int32_t id : ids) {
      if (id < 0 || id >= rows) {
        throw IndexError("id " + std::to_string(id) + " out of range [0, " + std::to_string(rows) +
                         ") for group '" + std::string(label) + "'");
      }
      out.row(static_cast<Eigen::Index>(b)) += table.value.row(id);
    }
    out.row(static_cast<Eigen::Index>(b)) /= static_cast<double>(ids.size());
  }
  return push(std::move(out), true, [this, &table, lists](const Matrix& up) {
    Matrix g = Matrix::Zero(table.value.rows(), table.value.cols());
    for (std::size_t b = 0; b < lists.size(); ++b) {
      const double inv = 1.0 / static_cast<double>(lists[b].size());
      for (std::int32_t id : lists[b]) g.row(id) += inv * up.row(static_cast<Eigen::Index>(b));
    }
    sink_->add(table, g);
  });
}

Var Tape::weighted_sum(Var weights, std::span<const Var> items) {
  const Matrix& w = value(weights);
  if (static_cast<std::size_t>(w.cols()) != items.size() || items.empty()) {
    throw DimensionError("weighted_sum: " + std::to_string(w.cols()) + " weights for " +
                         std::to_string(items.size()) + " items");
  }
  const Matrix& first = value(items[0]);
  Matrix out = Matrix::Zero(first.rows(), first.cols());
  bool grad = needs_grad(weights);
  for (std::size_t j = 0; j < items.size(); ++j) {
    const Matrix& item = value(items[j]);
    if (item.rows() != w.rows() || item.cols() != first.cols()) {
      throw DimensionError("weighted_sum: item " + std::to_string(j) + " is " + shape_of(item));
    }
    out += (item.array().colwise() * w.col(static_cast<Eigen::Index>(j)).array()).matrix();
    grad = grad || needs_grad(items[j]);
  }
  std::vector<Var> copy(items.begin(), items.end());
  return push(std::move(out), grad, [this, weights, copy = std::move(copy)](const Matrix& up) {
    const Matrix& w = nodes_[weights.id].value;
    const bool w_grad = nodes_[weights.id].needs_grad;
    Matrix dw(w.rows(), w.cols());
    for (std::size_t j = 0; j < copy.size(); ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      if (nodes_[copy[j].id].needs_grad) {
        accumulate(copy[j], (up.array().colwise() * w.col(col).array()).matrix());
      }
      if (w_grad) {
        dw.col(col) = (up.array() * nodes_[copy[j].id].value.array()).rowwise().sum();
      }
    }
    if (w_grad) accumulate(weights, dw);
  });
}

Var Tape::concat_cols(Var left, Var right) {
  const Matrix& a = value(left);
  const Matrix& b = value(right);
  if (a.rows() != b.rows()) {
    throw DimensionError("concat: " + shape_of(a) + " with " + shape_of(b));
  }
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  const Eigen::Index split = a.cols();
  return push(std::move(out), needs_grad(left) || needs_grad(right),
              [this, left, right, split](const Matrix& up) {
                accumulate(left, up.leftCols(split));
                accumulate(right, up.rightCols(up.cols() - split));
              });
}

Var Tape::add(Var a, Var b) {
  const Matrix& x = value(a);
  const Matrix& y = value(b);
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw DimensionError("add: " + shape_of(x) + " with " + shape_of(y));
  }
  return push(x + y, needs_grad(a) || needs_grad(b), [this, a, b](const Matrix& up) {
    accumulate(a, up);
    accumulate(b, up);
  });
}

Var Tape::scale(Var a, double factor) {
  return push(value(a) * factor, needs_grad(a),
              [this, a, factor](const Matrix& up) { accumulate(a, up * factor); });
}

Var Tape::stop_gradient(Var a) { return push(value(a), false, {}); }

Var Tape::sum_squared_error(Var pred, const Matrix& target) {
  const Matrix& p = value(pred);
  if (p.rows() != target.rows() || p.cols() != target.cols()) {
    throw DimensionError("squared error: prediction " + shape_of(p) + " vs label " +
                         shape_of(target));
  }
  Matrix diff = p - target;
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm();
  return push(std::move(out), needs_grad(pred),
              [this, pred, diff = std::move(diff)](const Matrix& up) {
                accumulate(pred, diff * (2.0 * up(0, 0)));
              });
}

Var Tape::mean_squared_error(Var pred, const Matrix& target) {
  if (target.size() == 0) throw DimensionError("mse over an empty batch");
  return scale(sum_squared_error(pred, target), 1.0 / static_cast<double>(target.size()));
}

Var Tape::kl_rows(Var p, Var q, double floor) {
  const Matrix& pm = value(p);
  const Matrix& qm = value(q);
  if (pm.rows() != qm.rows() || pm.cols() != qm.cols()) {
    throw DimensionError("kl: " + shape_of(pm) + " vs " + shape_of(qm));
  }
  const Eigen::Index n = pm.cols();
  Matrix qf(qm.rows(), n);
  Matrix total(qm.rows(), 1);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> active(qm.rows(), n);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < pm.rows(); ++i) {
    total(i, 0) = floored_row(qm.row(i).data(), n, floor, qf.row(i).data(),
                              active.row(i).data());
    kl += kl_row(pm.row(i).data(), qf.row(i).data(), n);
  }
  Matrix out(1, 1);
  out(0, 0) = kl;
  return push(std::move(out), needs_grad(p) || needs_grad(q),
              [this, p, q, qf = std::move(qf), total = std::move(total),
               active = std::move(active)](const Matrix& up) {
                const Matrix& pm = nodes_[p.id].value;
                const double s = up(0, 0);
                const Eigen::Index n = pm.cols();
                Matrix dp = Matrix::Zero(pm.rows(), n);
                Matrix dq = Matrix::Zero(pm.rows(), n);
                for (Eigen::Index i = 0; i < pm.rows(); ++i) {
                  double dot = 0.0;
                  Eigen::RowVectorXd gq(n);
                  for (Eigen::Index j = 0; j < n; ++j) {
                    const double pj = pm(i, j);
                    if (pj > 0.0) dp(i, j) = s * (std::log(pj) - std::log(qf(i, j)) + 1.0);
                    gq(j) = -s * pj / qf(i, j);
                    dot += gq(j) * qf(i, j);
                  }
                  const double t = total(i, 0);
                  for (Eigen::Index j = 0; j < n; ++j) {
                    if (t == 0.0) {
                      dq(i, j) = gq(j);
                    } else if (active(i, j)) {
                      dq(i, j) = (gq(j) - dot) / t;
                    }
                  }
                }
                accumulate(p, dp);
                accumulate(q, dq);
              });
}

Gradients Tape::backward(Var loss) {
  if (nodes_.empty()) throw StateError("backward called before any forward pass");
  const Matrix& l = value(loss);
  if (l.rows() != 1 || l.cols() != 1) {
    throw DimensionError("backward needs a scalar loss, got " + shape_of(l));
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  Gradients grads;
  sink_ = &grads;
  accumulate(loss, Matrix::Ones(1, 1));
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0 || !n.backprop) continue;
    const Matrix upstream = std::move(n.grad);
    n.grad.resize(0, 0);
    n.backprop(upstream);
  }
  sink_ = nullptr;
  return grads;
}

Vector softmax(std::span<const double> logits) {
  if (logits.empty()) throw DimensionError("softmax of an empty vector");
  Eigen::RowVectorXd row = Eigen::Map<const Eigen::RowVectorXd>(
      logits.data(), static_cast<Eigen::Index>(logits.size()));
  softmax_row_inplace(row);
  return row.transpose();
}

double kl_divergence(std::span<const double> p, std::span<const double> q, double floor) {
  if (p.size() != q.size() || p.empty()) {
    throw DimensionError("kl: lengths " + std::to_string(p.size()) + " and " +
                         std::to_string(q.size()));
  }
  const auto check = [](std::span<const double> v, const char* name) {
    double s = 0.0;
    for (double x : v) {
      if (!(x >= 0.0)) throw DimensionError(std::string("kl: ") + name + " has a negative entry");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-6) {
      throw DimensionError(std::string("kl: ") + name + " does not sum to 1");
    }
  };
  check(p, "p");
  check(q, "q");
  const auto n = static_cast<Eigen::Index>(q.size());
  std::vector<double> qf(q.size());
  auto active = std::make_unique<bool[]>(q.size());
  floored_row(q.data(), n, floor, qf.data(), active.get());
  return kl_row(p.data(), qf.data(), n);
}

double mse(std::span<const double> pred, std::span<const double> label) {
  if (pred.size() != label.size()) {
    throw DimensionError("mse: lengths " + std::to_string(pred.size()) + " and " +
                         std::to_string(label.size()));
  }
  if (pred.empty()) throw DimensionError("mse of empty vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - label[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

}  // namespace mtu::nn
