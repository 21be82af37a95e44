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

#ifndef SHAPER_SUPERNET_H_
#define SHAPER_SUPERNET_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "shaper/autodiff.h"
#include "shaper/elastic.h"
#include "shaper/shape.h"

namespace shaper {

struct BackboneConfig {
  std::size_t num_layers = 4;
  std::size_t d_model = 64;
  std::size_t d_attn = 64;
  std::size_t d_ff = 256;
  std::size_t heads = 4;
  std::size_t vocab_size = 2000;
  std::size_t max_seq_len = 64;
  DesignSpace design_space{{16, 32, 48, 64}, 4};

  // Throws a validation error on any inconsistency (d_model must equal the
  // largest allowed dim, d_attn must split evenly across heads, ...).
  void Validate() const;
  LayerDims layer_dims() const { return {d_model, d_attn, d_ff, heads}; }

  // L=4, d_model=64, 4 heads, d_ff=256, dims {16,32,48,64}, seq 64.
  static BackboneConfig Desk(std::size_t vocab_size = 2000);
  // BERT-base sized: L=12, d_model=768, 12 heads, d_ff=3072, seq 128,
  // dims {120,240,360,480,540,600,768}, cased vocab of 28996.
  static BackboneConfig BertBase();

  nlohmann::json ToJson() const;
  // Rejects unknown keys.
  static BackboneConfig FromJson(const nlohmann::json& j);

  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

// One masked-language-modelling batch: `batch` sequences of `seq` tokens.
// labels[i] is the original token at selected positions and -1 elsewhere.
struct MlmBatch {
  std::size_t batch = 0;
  std::size_t seq = 0;
  std::vector<int> inputs;
  std::vector<int> labels;

  std::vector<std::size_t> MaskedPositions() const;
  std::size_t MaskedCount() const;
};

struct MlmOutput {
  Var loss;
  std::size_t masked_count = 0;
};

// Dims of one parameter tensor as seen by a sliced sub-network.
struct SlicedTensor {
  std::string name;
  std::vector<std::size_t> dims;
};

// Weight-sharing backbone: token + position embeddings, L elastic layers and
// an MLM head whose decoder is tied to the token embedding. Copyable; a copy
// is an independent snapshot.
//
// ApplyShape() followed by a forward is a non-reentrant critical section:
// concurrent evaluations need separate copies.
class Supernet {
 public:
  explicit Supernet(const BackboneConfig& config);

  // Bottlenecks start as identity with zero bias, layer norms as (1, 0),
  // biases zero, every other weight truncated normal with std 0.02.
  static Supernet Build(const BackboneConfig& config, std::uint64_t seed);

  const BackboneConfig& config() const { return config_; }
  std::size_t num_layers() const { return layers_.size(); }
  ElasticTransformerLayer& layer(std::size_t i) { return layers_[i]; }
  const ElasticTransformerLayer& layer(std::size_t i) const { return layers_[i]; }

  void ApplyShape(const ShapeVector& shape);
  const ShapeVector& shape() const { return shape_; }

  // (batch*seq) x d_model encoder output under the current shape.
  Var Encode(Tape& tape, std::span<const int> ids, std::size_t batch,
             std::size_t seq);

  // Mean cross-entropy over the masked positions of `batch`.
  MlmOutput MlmForward(Tape& tape, const MlmBatch& batch);

  // Logits (masked positions x vocab) without recording gradients.
  Tensor MlmLogits(const MlmBatch& batch);

  std::vector<Parameter*> Parameters();
  std::vector<const Parameter*> Parameters() const;
  Parameter* FindParameter(const std::string& name);
  void ZeroGrad();

  std::size_t ActiveParamCount() const;
  std::size_t TotalParamCount() const;

  Parameter& token_embedding() { return token_embedding_; }
  Parameter& position_embedding() { return position_embedding_; }

 private:
  BackboneConfig config_;
  ShapeVector shape_;
  Parameter token_embedding_;
  Parameter position_embedding_;
  ElasticLayerNorm embedding_norm_;
  std::vector<ElasticTransformerLayer> layers_;
  ElasticLinear head_transform_;
  ElasticLayerNorm head_norm_;
  Parameter decoder_bias_;
};

// Every parameter tensor of the sub-network T_S with its sliced dims.
std::vector<SlicedTensor> ActiveTensors(const BackboneConfig& config,
                                        const ShapeVector& shape);

// Exact scalar parameter count of T_S (embeddings and MLM head included).
std::uint64_t CountParams(const BackboneConfig& config, const ShapeVector& shape);

// Parameters whose count does not depend on the shape (embeddings, head and
// the d_attn/d_ff/d_model-sized biases inside each layer).
std::uint64_t ShapeIndependentParams(const BackboneConfig& config);

// Closed-form per-layer weight count d_h * 2 * (2*d_attn + d_ff + d_h).
// Diverges from CountParams whenever d_h != d_model because it charges the
// bottlenecks as d_h x d_h; CountParams is the authority.
std::int64_t LayerParamsFormula(std::int64_t d_h, std::int64_t d_attn,
                                std::int64_t d_ff);

// Closed-form per-layer FLOPs d_h * 4 * (2*d_attn + d_ff + d_h)
// + 2 * seq_len * d_attn.
std::int64_t LayerFlopsFormula(std::int64_t d_h, std::int64_t d_attn,
                               std::int64_t d_ff, std::int64_t seq_len);

}  // namespace shaper

#endif  // SHAPER_SUPERNET_H_
