// Copyright 2026 The Shaper Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shaper/autodiff.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "shaper/errors.h"

namespace shaper {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstMatMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

ConstMatMap View(const Tensor& t) {
  return ConstMatMap(t.data(), t.rows(), t.cols(),
                     Eigen::OuterStride<>(t.cols()));
}
MatMap View(Tensor& t) {
  return MatMap(t.data(), t.rows(), t.cols(), Eigen::OuterStride<>(t.cols()));
}
// Top-left rows x cols block of a row-major tensor, without copying.
MatMap Block(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatMap(t.data(), rows, cols, Eigen::OuterStride<>(t.cols()));
}

Tape& SameTape(const Var& a, const Var& b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw ContractError("operands belong to different tapes");
  }
  return *a.tape();
}

Tape& TapeOf(const Var& a) {
  if (a.tape() == nullptr) throw ContractError("operand is not on a tape");
  return *a.tape();
}

void EnsureParamGrad(Parameter& p) {
  if (!p.grad.SameDims(p.value)) p.grad = Tensor(p.value.dims(), 0.0);
}

[[noreturn]] void ShapeMismatch(const char* op, const Tensor& a,
                                const Tensor& b) {
  throw ValidationError(std::string("invalid shape for ") + op + ": " +
                        a.DimsString() + " vs " + b.DimsString());
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameter

Parameter::Parameter(std::string param_name, Tensor init)
    : name(std::move(param_name)),
      value(std::move(init)),
      grad(value.dims(), 0.0) {}

void Parameter::ZeroGrad() {
  EnsureParamGrad(*this);
  grad.Fill(0.0);
  touched_rows = 0;
  touched_cols = 0;
}

void Parameter::MarkTouched(std::size_t r, std::size_t c) {
  touched_rows = std::max(touched_rows, r);
  touched_cols = std::max(touched_cols, c);
}

// ---------------------------------------------------------------------------
// Var / Tape

const Tensor& Var::value() const { return tape_->ValueOf(id_); }
const Tensor& Var::grad() const { return tape_->GradOf(id_); }
bool Var::requires_grad() const { return tape_->RequiresGrad(id_); }

Var Tape::Constant(Tensor value) {
  return Record(std::move(value), false, nullptr, "constant");
}

Var Tape::Variable(Tensor value) {
  return Record(std::move(value), grad_enabled_, nullptr, "variable");
}

Var Tape::Record(Tensor value, bool requires_grad, BackwardFn fn,
                 const char* op_name) {
  if (!value.AllFinite()) {
    throw NumericError(std::string("non-finite value in ") + op_name);
  }
  Node node;
  node.value = std::move(value);
  node.requires_grad = grad_enabled_ && requires_grad;
  if (node.requires_grad && fn) {
    node.backward = std::move(fn);
    ++recorded_ops_;
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::MutableGrad(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.grad.SameDims(n.value)) n.grad = Tensor(n.value.dims(), 0.0);
  return n.grad;
}

void Tape::Backward(Var loss) {
  if (loss.tape() != this) throw ContractError("loss is not on this tape");
  if (nodes_.empty()) throw ContractError("backward on an empty tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward requires a scalar loss, got dims " +
                        loss.value().DimsString());
  }
  if (backward_done_) throw StateError("backward already ran on this tape");
  backward_done_ = true;
  for (Node& n : nodes_) {
    if (n.requires_grad) n.grad = Tensor(n.value.dims(), 0.0);
  }
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    if (nodes_[i].requires_grad && nodes_[i].backward) {
      nodes_[i].backward(*this, i);
    }
  }
}

namespace ad {

Var MatMul(Var a, Var b) {
  Tape& tape = SameTape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) ShapeMismatch("matmul", av, bv);
  Tensor out = Tensor::Matrix(av.rows(), bv.cols());
  View(out).noalias() = View(av) * View(bv);
  const std::size_t ia = a.id(), ib = b.id();
  return tape.Record(
      std::move(out), a.requires_grad() || b.requires_grad(),
      [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.GradOf(self);
        if (t.RequiresGrad(ia)) {
          View(t.MutableGrad(ia)).noalias() +=
              View(g) * View(t.ValueOf(ib)).transpose();
        }
        if (t.RequiresGrad(ib)) {
          View(t.MutableGrad(ib)).noalias() +=
              View(t.ValueOf(ia)).transpose() * View(g);
        }
      },
      "matmul");
}

Var Add(Var a, Var b) {
  Tape& tape = SameTape(a, b);
  if (!a.value().SameDims(b.value())) ShapeMismatch("add", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return tape.Record(
      std::move(out), a.requires_grad() || b.requires_grad(),
      [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.GradOf(self);
        for (std::size_t id : {ia, ib}) {
          if (!t.RequiresGrad(id)) continue;
          Tensor& dst = t.MutableGrad(id);
          for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
        }
      },
      "add");
}

Var Scale(Var a, double factor) {
  Tape& tape = TapeOf(a);
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  const std::size_t ia = a.id();
  return tape.Record(
      std::move(out), a.requires_grad(),
      [ia, factor](Tape& t, std::size_t self) {
        const Tensor& g = t.GradOf(self);
        Tensor& dst = t.MutableGrad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += factor * g[i];
      },
      "scale");
}

Var Sum(Var a) {
  Tape& tape = TapeOf(a);
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.id();
  return tape.Record(
      Tensor::Scalar(s), a.requires_grad(),
      [ia](Tape& t, std::size_t self) {
        const double g = t.GradOf(self)[0];
        for (double& d : t.MutableGrad(ia).values()) d += g;
      },
      "sum");
}

Var Gelu(Var a) {
  Tape& tape = TapeOf(a);
  Tensor out = a.value();
  for (double& v : out.values()) v = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
  const std::size_t ia = a.id();
  return tape.Record(
      std::move(out), a.requires_grad(),
      [ia](Tape& t, std::size_t self) {
        const Tensor& g = t.GradOf(self);
        const Tensor& x = t.ValueOf(ia);
        Tensor& dst = t.MutableGrad(ia);
        constexpr double kInvSqrt2Pi = 0.3989422804014327;
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double v = x[i];
          const double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
          const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
          dst[i] += g[i] * (cdf + v * pdf);
        }
      },
      "gelu");
}

namespace {

void SoftmaxRowsInPlace(double* data, std::size_t rows, std::size_t cols) {
  MatMap m(data, rows, cols, Eigen::OuterStride<>(cols));
  const Eigen::VectorXd mx = m.rowwise().maxCoeff();
  m.colwise() -= mx;
  m = m.array().exp().matrix();
  const Eigen::VectorXd inv = m.rowwise().sum().cwiseInverse();
  m = inv.asDiagonal() * m;
}

// dx = y * (dy - sum(dy * y)) per row, accumulated into dx.
void SoftmaxRowsBackward(const double* y, const double* dy, double* dx,
                         std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* yr = y + r * cols;
    const double* gr = dy + r * cols;
    double dot = 0.0;
    for (std::size_t c = 0; c < cols; ++c) dot += gr[c] * yr[c];
    double* xr = dx + r * cols;
    for (std::size_t c = 0; c < cols; ++c) xr[c] += yr[c] * (gr[c] - dot);
  }
}

}  // namespace

Var SoftmaxRows(Var a) {
  Tape& tape = TapeOf(a);
  Tensor out = a.value();
  SoftmaxRowsInPlace(out.data(), out.rows(), out.cols());
  const std::size_t ia = a.id();
  return tape.Record(
      std::move(out), a.requires_grad(),
      [ia](Tape& t, std::size_t self) {
        const Tensor& y = t.ValueOf(self);
        SoftmaxRowsBackward(y.data(), t.GradOf(self).data(),
                            t.MutableGrad(ia).data(), y.rows(), y.cols());
      },
      "softmax");
}

Var Linear(Var x, Parameter& weight, Parameter* bias, std::size_t out) {
  Tape& tape = TapeOf(x);
  const Tensor& xv = x.value();
  const std::size_t in = xv.cols();
  if (weight.value.rank() != 2 || in > weight.cols() || out > weight.rows() ||
      out == 0) {
    throw ValidationError("invalid shape for linear: input " +
                          xv.DimsString() + ", out " + std::to_string(out) +
                          ", weight " + weight.value.DimsString());
  }
  if (bias != nullptr && out > bias->value.size()) {
    throw ValidationError("linear bias shorter than output width");
  }
  Tensor y = Tensor::Matrix(xv.rows(), out);
  View(y).noalias() = View(xv) * Block(weight.value, out, in).transpose();
  if (bias != nullptr) {
    const double* b = bias->value.data();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double* row = y.data() + r * out;
      for (std::size_t c = 0; c < out; ++c) row[c] += b[c];
    }
  }
  const std::size_t ix = x.id();
  Parameter* w = &weight;
  return tape.Record(
      std::move(y), true,
      [ix, w, bias, out, in](Tape& t, std::size_t self) {
        const Tensor& g = t.GradOf(self);
        if (t.RequiresGrad(ix)) {
          View(t.MutableGrad(ix)).noalias() += View(g) * Block(w->value, out, in);
        }
        EnsureParamGrad(*w);
        Block(w->grad, out, in).noalias() +=
            View(g).transpose() * View(t.ValueOf(ix));
        w->MarkTouched(out, in);
        if (bias != nullptr) {
          EnsureParamGrad(*bias);
          double* db = bias->grad.data();
          for (std::size_t r = 0; r < g.rows(); ++r) {
            const double* row = g.data() + r * out;
            for (std::size_t c = 0; c < out; ++c) db[c] += row[c];
          }
          bias->MarkTouched(out, 1);
        }
      },
      "linear");
}

Var LayerNorm(Var x, Parameter& gamma, Parameter& beta, double eps) {
  Tape& tape = TapeOf(x);
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows(), w = xv.cols();
  if (w > gamma.value.size() || w > beta.value.size()) {
    throw ValidationError("invalid shape for layer_norm: width " +
                          std::to_string(w) + " exceeds parameter size " +
                          std::to_string(gamma.value.size()));
  }
  Tensor y = Tensor::Matrix(n, w);
  Tensor xhat = Tensor::Matrix(n, w);
  std::vector<double> rstd(n);
  const double* g = gamma.value.data();
  const double* b = beta.value.data();
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = xv.data() + r * w;
    double mean = 0.0;
    for (std::size_t c = 0; c < w; ++c) mean += xr[c];
    mean /= static_cast<double>(w);
    double var = 0.0;
    for (std::size_t c = 0; c < w; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= static_cast<double>(w);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < w; ++c) {
      const double h = (xr[c] - mean) * rstd[r];
      xhat.at(r, c) = h;
      y.at(r, c) = g[c] * h + b[c];
    }
  }
  const std::size_t ix = x.id();
  Parameter* pg = &gamma;
  Parameter* pb = &beta;
  return tape.Record(
      std::move(y), true,
      [ix, pg, pb, xhat = std::move(xhat), rstd = std::move(rstd), n, w](
          Tape& t, std::size_t self) {
        const Tensor& dy = t.GradOf(self);
        EnsureParamGrad(*pg);
        EnsureParamGrad(*pb);
        double* dg = pg->grad.data();
        double* db = pb->grad.data();
        const double* gam = pg->value.data();
        const bool need_x = t.RequiresGrad(ix);
        double* dx = need_x ? t.MutableGrad(ix).data() : nullptr;
        std::vector<double> gh(w);
        for (std::size_t r = 0; r < n; ++r) {
          const double* dyr = dy.data() + r * w;
          const double* hr = xhat.data() + r * w;
          double mean_g = 0.0, mean_gh = 0.0;
          for (std::size_t c = 0; c < w; ++c) {
            dg[c] += dyr[c] * hr[c];
            db[c] += dyr[c];
            gh[c] = dyr[c] * gam[c];
            mean_g += gh[c];
            mean_gh += gh[c] * hr[c];
          }
          if (!need_x) continue;
          mean_g /= static_cast<double>(w);
          mean_gh /= static_cast<double>(w);
          double* dxr = dx + r * w;
          for (std::size_t c = 0; c < w; ++c) {
            dxr[c] += rstd[r] * (gh[c] - mean_g - hr[c] * mean_gh);
          }
        }
        pg->MarkTouched(w, 1);
        pb->MarkTouched(w, 1);
      },
      "layer_norm");
}

Var Embedding(Tape& tape, Parameter& table, std::span<const int> ids) {
  const std::size_t vocab = table.rows(), width = table.cols();
  if (ids.empty()) throw ValidationError("embedding lookup with no ids");
  Tensor y = Tensor::Matrix(ids.size(), width);
  int max_id = 0;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const int id = ids[r];
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw ValidationError("embedding id " + std::to_string(id) +
                            " out of range [0, " + std::to_string(vocab) + ")");
    }
    max_id = std::max(max_id, id);
    std::copy_n(table.value.data() + id * width, width, y.data() + r * width);
  }
  std::vector<int> saved(ids.begin(), ids.end());
  Parameter* p = &table;
  return tape.Record(
      std::move(y), true,
      [p, saved = std::move(saved), width, max_id](Tape& t, std::size_t self) {
        const Tensor& g = t.GradOf(self);
        EnsureParamGrad(*p);
        for (std::size_t r = 0; r < saved.size(); ++r) {
          double* dst = p->grad.data() + saved[r] * width;
          const double* src = g.data() + r * width;
          for (std::size_t c = 0; c < width; ++c) dst[c] += src[c];
        }
        p->MarkTouched(static_cast<std::size_t>(max_id) + 1, width);
      },
      "embedding");
}

Var Attention(Var q, Var k, Var v, std::size_t batch, std::size_t seq,
              std::size_t heads) {
  Tape& tape = SameTape(q, k);
  SameTape(q, v);
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  const std::size_t width = qv.cols();
  if (!qv.SameDims(kv) || !qv.SameDims(vv)) ShapeMismatch("attention", qv, kv);
  if (qv.rows() != batch * seq || heads == 0 || width % heads != 0) {
    throw ValidationError("invalid shape for attention: " + qv.DimsString() +
                          " with batch " + std::to_string(batch) + ", seq " +
                          std::to_string(seq) + ", heads " +
                          std::to_string(heads));
  }
  const std::size_t hd = width / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  Tensor out = Tensor::Matrix(batch * seq, width);
  // Attention probabilities, one seq x seq block per (batch, head).
  Tensor probs({batch * heads * seq, seq}, 0.0);
  const Eigen::OuterStride<> stride(width);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = b * seq * width + h * hd;
      ConstMatMap qb(qv.data() + off, seq, hd, stride);
      ConstMatMap kb(kv.data() + off, seq, hd, stride);
      ConstMatMap vb(vv.data() + off, seq, hd, stride);
      double* pdata = probs.data() + (b * heads + h) * seq * seq;
      MatMap p(pdata, seq, seq, Eigen::OuterStride<>(seq));
      p.noalias() = scale * (qb * kb.transpose());
      SoftmaxRowsInPlace(pdata, seq, seq);
      MatMap ob(out.data() + off, seq, hd, stride);
      ob.noalias() = p * vb;
    }
  }
  const std::size_t iq = q.id(), ik = k.id(), iv = v.id();
  return tape.Record(
      std::move(out),
      q.requires_grad() || k.requires_grad() || v.requires_grad(),
      [iq, ik, iv, probs = std::move(probs), batch, seq, heads, hd, width,
       scale](Tape& t, std::size_t self) {
        const Tensor& g = t.GradOf(self);
        const Tensor& qv = t.ValueOf(iq);
        const Tensor& kv = t.ValueOf(ik);
        const Tensor& vv = t.ValueOf(iv);
        Tensor& dq = t.MutableGrad(iq);
        Tensor& dk = t.MutableGrad(ik);
        Tensor& dv = t.MutableGrad(iv);
        const Eigen::OuterStride<> stride(width);
        RowMat dp(seq, seq), ds(seq, seq);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = b * seq * width + h * hd;
            ConstMatMap qb(qv.data() + off, seq, hd, stride);
            ConstMatMap kb(kv.data() + off, seq, hd, stride);
            ConstMatMap vb(vv.data() + off, seq, hd, stride);
            ConstMatMap gb(g.data() + off, seq, hd, stride);
            const double* pdata = probs.data() + (b * heads + h) * seq * seq;
            ConstMatMap p(pdata, seq, seq, Eigen::OuterStride<>(seq));
            MatMap(dv.data() + off, seq, hd, stride).noalias() +=
                p.transpose() * gb;
            dp.noalias() = gb * vb.transpose();
            ds.setZero();
            SoftmaxRowsBackward(pdata, dp.data(), ds.data(), seq, seq);
            ds *= scale;
            MatMap(dq.data() + off, seq, hd, stride).noalias() += ds * kb;
            MatMap(dk.data() + off, seq, hd, stride).noalias() +=
                ds.transpose() * qb;
          }
        }
      },
      "attention");
}

Var GatherRows(Var x, std::span<const std::size_t> rows) {
  Tape& tape = TapeOf(x);
  const Tensor& xv = x.value();
  const std::size_t w = xv.cols();
  if (rows.empty()) throw ValidationError("gather_rows with no rows");
  Tensor y = Tensor::Matrix(rows.size(), w);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= xv.rows()) {
      throw ValidationError("gather_rows index out of range");
    }
    std::copy_n(xv.data() + rows[i] * w, w, y.data() + i * w);
  }
  std::vector<std::size_t> saved(rows.begin(), rows.end());
  const std::size_t ix = x.id();
  return tape.Record(
      std::move(y), x.requires_grad(),
      [ix, saved = std::move(saved), w](Tape& t, std::size_t self) {
        const Tensor& g = t.GradOf(self);
        Tensor& dx = t.MutableGrad(ix);
        for (std::size_t i = 0; i < saved.size(); ++i) {
          double* dst = dx.data() + saved[i] * w;
          const double* src = g.data() + i * w;
          for (std::size_t c = 0; c < w; ++c) dst[c] += src[c];
        }
      },
      "gather_rows");
}

Var CrossEntropy(Var logits, std::span<const int> labels) {
  Tape& tape = TapeOf(logits);
  const Tensor& lv = logits.value();
  const std::size_t n = lv.rows(), classes = lv.cols();
  if (labels.size() != n) {
    throw ValidationError("cross_entropy: " + std::to_string(labels.size()) +
                          " labels for " + std::to_string(n) + " rows");
  }
  std::size_t count = 0;
  for (int l : labels) {
    if (l >= static_cast<int>(classes)) {
      throw ValidationError("cross_entropy label out of range");
    }
    if (l >= 0) ++count;
  }
  if (count == 0) throw DataError("cross_entropy: no labelled positions");
  Tensor probs = lv;
  SoftmaxRowsInPlace(probs.data(), n, classes);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (labels[r] < 0) continue;
    const double* row = lv.data() + r * classes;
    const double mx = *std::max_element(row, row + classes);
    double s = 0.0;
    for (std::size_t c = 0; c < classes; ++c) s += std::exp(row[c] - mx);
    total += mx + std::log(s) - row[labels[r]];
  }
  const double inv = 1.0 / static_cast<double>(count);
  std::vector<int> saved(labels.begin(), labels.end());
  const std::size_t il = logits.id();
  return tape.Record(
      Tensor::Scalar(total * inv), logits.requires_grad(),
      [il, probs = std::move(probs), saved = std::move(saved), inv, classes](
          Tape& t, std::size_t self) {
        const double g = t.GradOf(self)[0] * inv;
        Tensor& dx = t.MutableGrad(il);
        for (std::size_t r = 0; r < saved.size(); ++r) {
          if (saved[r] < 0) continue;
          const double* p = probs.data() + r * classes;
          double* d = dx.data() + r * classes;
          for (std::size_t c = 0; c < classes; ++c) d[c] += g * p[c];
          d[saved[r]] -= g;
        }
      },
      "cross_entropy");
}

}  // namespace ad

}  // namespace shaper
