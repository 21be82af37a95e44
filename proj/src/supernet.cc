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

#include "shaper/supernet.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shaper/errors.h"
#include "shaper/json_util.h"
#include "shaper/random.h"

namespace shaper {

namespace {

bool IsBottleneck(const std::string& name) {
  return name.find("bottleneck.weight") != std::string::npos;
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// BackboneConfig

void BackboneConfig::Validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) throw ValidationError(std::string(what) + " must be positive");
  };
  positive(num_layers, "num_layers");
  positive(d_model, "d_model");
  positive(d_attn, "d_attn");
  positive(d_ff, "d_ff");
  positive(heads, "heads");
  positive(vocab_size, "vocab_size");
  positive(max_seq_len, "max_seq_len");
  if (d_attn % heads != 0) {
    throw ValidationError("d_attn " + std::to_string(d_attn) +
                          " is not divisible by heads " + std::to_string(heads));
  }
  if (design_space.allowed_dims().empty()) {
    throw ValidationError("design space is empty");
  }
  if (design_space.num_layers() != num_layers) {
    throw ValidationError("design space covers " +
                          std::to_string(design_space.num_layers()) +
                          " layers, backbone has " + std::to_string(num_layers));
  }
  if (static_cast<std::size_t>(design_space.max_dim()) != d_model) {
    throw ValidationError("d_model " + std::to_string(d_model) +
                          " must equal the largest allowed dim " +
                          std::to_string(design_space.max_dim()));
  }
}

BackboneConfig BackboneConfig::Desk(std::size_t vocab_size) {
  BackboneConfig c;
  c.vocab_size = vocab_size;
  return c;
}

BackboneConfig BackboneConfig::BertBase() {
  BackboneConfig c;
  c.num_layers = 12;
  c.d_model = 768;
  c.d_attn = 768;
  c.d_ff = 3072;
  c.heads = 12;
  c.vocab_size = 28996;
  c.max_seq_len = 128;
  c.design_space = DesignSpace({120, 240, 360, 480, 540, 600, 768}, 12);
  return c;
}

nlohmann::json BackboneConfig::ToJson() const {
  return {{"num_layers", num_layers},
          {"d_model", d_model},
          {"d_attn", d_attn},
          {"d_ff", d_ff},
          {"heads", heads},
          {"vocab_size", vocab_size},
          {"max_seq_len", max_seq_len},
          {"allowed_dims", design_space.allowed_dims()}};
}

BackboneConfig BackboneConfig::FromJson(const nlohmann::json& j) {
  const std::string where = "backbone";
  RequireKnownKeys(j,
                   {"num_layers", "d_model", "d_attn", "d_ff", "heads",
                    "vocab_size", "max_seq_len", "allowed_dims"},
                   where);
  BackboneConfig c;
  ReadOptional(j, "num_layers", c.num_layers, where);
  ReadOptional(j, "d_model", c.d_model, where);
  ReadOptional(j, "d_attn", c.d_attn, where);
  ReadOptional(j, "d_ff", c.d_ff, where);
  ReadOptional(j, "heads", c.heads, where);
  ReadOptional(j, "vocab_size", c.vocab_size, where);
  ReadOptional(j, "max_seq_len", c.max_seq_len, where);
  std::vector<int> dims = c.design_space.allowed_dims();
  ReadOptional(j, "allowed_dims", dims, where);
  try {
    c.design_space = DesignSpace(dims, c.num_layers);
  } catch (const Error& e) {
    throw ConfigError(std::string("backbone.allowed_dims: ") + e.what());
  }
  try {
    c.Validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("backbone: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// MlmBatch

std::vector<std::size_t> MlmBatch::MaskedPositions() const {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) pos.push_back(i);
  }
  return pos;
}

std::size_t MlmBatch::MaskedCount() const {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](int l) { return l >= 0; }));
}

// ---------------------------------------------------------------------------
// Supernet

Supernet::Supernet(const BackboneConfig& config) : config_(config) {
  config_.Validate();
  const std::size_t d = config_.d_model;
  token_embedding_ =
      Parameter("embeddings.token", Tensor::Matrix(config_.vocab_size, d));
  position_embedding_ =
      Parameter("embeddings.position", Tensor::Matrix(config_.max_seq_len, d));
  embedding_norm_ = ElasticLayerNorm("embeddings.norm", d);
  for (std::size_t i = 0; i < config_.num_layers; ++i) {
    layers_.emplace_back("layers." + std::to_string(i), config_.layer_dims());
  }
  head_transform_ = ElasticLinear("head.transform", d, d);
  head_norm_ = ElasticLayerNorm("head.norm", d);
  decoder_bias_ = Parameter("head.decoder.bias", Tensor({config_.vocab_size}, 0.0));
  ApplyShape(config_.design_space.Largest());
}

Supernet Supernet::Build(const BackboneConfig& config, std::uint64_t seed) {
  Supernet net(config);
  Rng rng(seed);
  for (Parameter* p : net.Parameters()) {
    if (IsBottleneck(p->name)) {
      p->value.Fill(0.0);
      const std::size_t n = std::min(p->rows(), p->cols());
      for (std::size_t i = 0; i < n; ++i) p->value.at(i, i) = 1.0;
    } else if (EndsWith(p->name, ".gamma")) {
      p->value.Fill(1.0);
    } else if (EndsWith(p->name, ".bias") || EndsWith(p->name, ".beta")) {
      p->value.Fill(0.0);
    } else {
      for (double& v : p->value.values()) v = rng.TruncatedNormal(0.02);
    }
  }
  return net;
}

void Supernet::ApplyShape(const ShapeVector& shape) {
  config_.design_space.Validate(shape);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].set_hidden_dim(static_cast<std::size_t>(shape[i]));
  }
  shape_ = shape;
}

Var Supernet::Encode(Tape& tape, std::span<const int> ids, std::size_t batch,
                     std::size_t seq) {
  if (seq == 0 || seq > config_.max_seq_len || ids.size() != batch * seq ||
      batch == 0) {
    throw ValidationError("encode: " + std::to_string(ids.size()) +
                          " ids for batch " + std::to_string(batch) + " x seq " +
                          std::to_string(seq) + " (max seq " +
                          std::to_string(config_.max_seq_len) + ")");
  }
  std::vector<int> positions(ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    positions[i] = static_cast<int>(i % seq);
  }
  Var x = ad::Add(ad::Embedding(tape, token_embedding_, ids),
                  ad::Embedding(tape, position_embedding_, positions));
  x = embedding_norm_.Forward(x);
  for (ElasticTransformerLayer& layer : layers_) x = layer.Forward(x, batch, seq);
  return x;
}

MlmOutput Supernet::MlmForward(Tape& tape, const MlmBatch& batch) {
  if (batch.labels.size() != batch.inputs.size()) {
    throw ValidationError("mlm batch labels and inputs differ in length");
  }
  const std::vector<std::size_t> positions = batch.MaskedPositions();
  if (positions.empty()) throw DataError("mlm batch has no masked positions");
  Var x = Encode(tape, batch.inputs, batch.batch, batch.seq);
  Var h = ad::GatherRows(x, positions);
  h = head_norm_.Forward(ad::Gelu(head_transform_.Forward(h)));
  Var logits = ad::Linear(h, token_embedding_, &decoder_bias_, config_.vocab_size);
  std::vector<int> labels(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    labels[i] = batch.labels[positions[i]];
  }
  return {ad::CrossEntropy(logits, labels), positions.size()};
}

Tensor Supernet::MlmLogits(const MlmBatch& batch) {
  Tape tape(false);
  const std::vector<std::size_t> positions = batch.MaskedPositions();
  if (positions.empty()) throw DataError("mlm batch has no masked positions");
  Var x = Encode(tape, batch.inputs, batch.batch, batch.seq);
  Var h = ad::GatherRows(x, positions);
  h = head_norm_.Forward(ad::Gelu(head_transform_.Forward(h)));
  return ad::Linear(h, token_embedding_, &decoder_bias_, config_.vocab_size)
      .value();
}

std::vector<Parameter*> Supernet::Parameters() {
  std::vector<Parameter*> out{&token_embedding_, &position_embedding_};
  embedding_norm_.CollectParameters(out);
  for (ElasticTransformerLayer& layer : layers_) layer.CollectParameters(out);
  head_transform_.CollectParameters(out);
  head_norm_.CollectParameters(out);
  out.push_back(&decoder_bias_);
  return out;
}

std::vector<const Parameter*> Supernet::Parameters() const {
  auto params = const_cast<Supernet*>(this)->Parameters();
  return {params.begin(), params.end()};
}

Parameter* Supernet::FindParameter(const std::string& name) {
  for (Parameter* p : Parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

void Supernet::ZeroGrad() {
  for (Parameter* p : Parameters()) p->ZeroGrad();
}

std::size_t Supernet::ActiveParamCount() const {
  const std::size_t d = config_.d_model;
  std::size_t n = token_embedding_.value.size() + position_embedding_.value.size() +
                  2 * d + decoder_bias_.value.size();
  n += head_transform_.ActiveParamCount() + head_norm_.ActiveParamCount();
  for (const ElasticTransformerLayer& layer : layers_) n += layer.ActiveParamCount();
  return n;
}

std::size_t Supernet::TotalParamCount() const {
  std::size_t n = 0;
  for (const Parameter* p : Parameters()) n += p->value.size();
  return n;
}

// ---------------------------------------------------------------------------
// Accounting

namespace {

// Tensor dims for per-layer widths `widths`. A width of 0 zeroes every
// tensor that scales with d_h, which isolates the shape-independent part.
std::vector<SlicedTensor> EnumerateTensors(const BackboneConfig& config,
                                           const std::vector<std::size_t>& widths) {
  const std::size_t d = config.d_model, a = config.d_attn, f = config.d_ff;
  std::vector<SlicedTensor> t;
  t.push_back({"embeddings.token", {config.vocab_size, d}});
  t.push_back({"embeddings.position", {config.max_seq_len, d}});
  t.push_back({"embeddings.norm.gamma", {d}});
  t.push_back({"embeddings.norm.beta", {d}});
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::string p = "layers." + std::to_string(i);
    const std::size_t h = widths[i];
    t.push_back({p + ".in_bottleneck.weight", {h, d}});
    t.push_back({p + ".in_bottleneck.bias", {h}});
    for (const char* proj : {"query", "key", "value"}) {
      t.push_back({p + ".attention." + proj + ".weight", {a, h}});
      t.push_back({p + ".attention." + proj + ".bias", {a}});
    }
    t.push_back({p + ".attention.output.weight", {h, a}});
    t.push_back({p + ".attention.output.bias", {h}});
    t.push_back({p + ".attention.norm.gamma", {h}});
    t.push_back({p + ".attention.norm.beta", {h}});
    t.push_back({p + ".ffn.intermediate.weight", {f, h}});
    t.push_back({p + ".ffn.intermediate.bias", {f}});
    t.push_back({p + ".ffn.output.weight", {h, f}});
    t.push_back({p + ".ffn.output.bias", {h}});
    t.push_back({p + ".ffn.norm.gamma", {h}});
    t.push_back({p + ".ffn.norm.beta", {h}});
    t.push_back({p + ".out_bottleneck.weight", {d, h}});
    t.push_back({p + ".out_bottleneck.bias", {d}});
  }
  t.push_back({"head.transform.weight", {d, d}});
  t.push_back({"head.transform.bias", {d}});
  t.push_back({"head.norm.gamma", {d}});
  t.push_back({"head.norm.beta", {d}});
  t.push_back({"head.decoder.bias", {config.vocab_size}});
  return t;
}

std::uint64_t TotalSize(const std::vector<SlicedTensor>& tensors) {
  std::uint64_t n = 0;
  for (const SlicedTensor& t : tensors) {
    n += std::accumulate(t.dims.begin(), t.dims.end(), std::uint64_t{1},
                         std::multiplies<>());
  }
  return n;
}

}  // namespace

std::vector<SlicedTensor> ActiveTensors(const BackboneConfig& config,
                                        const ShapeVector& shape) {
  config.Validate();
  config.design_space.Validate(shape);
  return EnumerateTensors(config,
                          std::vector<std::size_t>(shape.dims.begin(), shape.dims.end()));
}

std::uint64_t CountParams(const BackboneConfig& config, const ShapeVector& shape) {
  return TotalSize(ActiveTensors(config, shape));
}

std::uint64_t ShapeIndependentParams(const BackboneConfig& config) {
  config.Validate();
  return TotalSize(
      EnumerateTensors(config, std::vector<std::size_t>(config.num_layers, 0)));
}

std::int64_t LayerParamsFormula(std::int64_t d_h, std::int64_t d_attn,
                                std::int64_t d_ff) {
  return d_h * (2 * (2 * d_attn + d_ff + d_h));
}

std::int64_t LayerFlopsFormula(std::int64_t d_h, std::int64_t d_attn,
                               std::int64_t d_ff, std::int64_t seq_len) {
  return d_h * (4 * (2 * d_attn + d_ff + d_h)) + 2 * seq_len * d_attn;
}

}  // namespace shaper
