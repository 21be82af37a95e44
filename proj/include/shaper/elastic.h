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

#ifndef SHAPER_ELASTIC_H_
#define SHAPER_ELASTIC_H_

#include <cstddef>
#include <string>
#include <vector>

#include "shaper/autodiff.h"

namespace shaper {

// Linear layer stored at its maximum size. set_sample_config() selects the
// active prefix; forward uses the top-left active_out x active_in block of
// the weight and the first active_out bias entries, in place.
class ElasticLinear {
 public:
  ElasticLinear() = default;
  ElasticLinear(const std::string& name, std::size_t max_in,
                std::size_t max_out, bool with_bias = true);

  void set_sample_config(std::size_t in_dim, std::size_t out_dim);

  // x must be n x active_in.
  Var Forward(Var x);

  std::size_t max_in() const { return weight_.cols(); }
  std::size_t max_out() const { return weight_.rows(); }
  std::size_t active_in() const { return active_in_; }
  std::size_t active_out() const { return active_out_; }
  bool has_bias() const { return has_bias_; }

  Parameter& weight() { return weight_; }
  const Parameter& weight() const { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& bias() const { return bias_; }

  std::size_t ActiveParamCount() const;
  void CollectParameters(std::vector<Parameter*>& out);

 private:
  Parameter weight_;
  Parameter bias_;
  bool has_bias_ = true;
  std::size_t active_in_ = 0;
  std::size_t active_out_ = 0;
};

class ElasticLayerNorm {
 public:
  static constexpr double kEpsilon = 1e-12;

  ElasticLayerNorm() = default;
  ElasticLayerNorm(const std::string& name, std::size_t max_dim);

  void set_active_dim(std::size_t dim);
  std::size_t active_dim() const { return active_dim_; }
  std::size_t max_dim() const { return gamma_.value.size(); }

  Var Forward(Var x);

  Parameter& gamma() { return gamma_; }
  Parameter& beta() { return beta_; }
  std::size_t ActiveParamCount() const { return 2 * active_dim_; }
  void CollectParameters(std::vector<Parameter*>& out);

 private:
  Parameter gamma_;
  Parameter beta_;
  std::size_t active_dim_ = 0;
};

struct LayerDims {
  std::size_t d_model = 0;
  std::size_t d_attn = 0;
  std::size_t d_ff = 0;
  std::size_t heads = 0;
};

// Post-LN Transformer layer wrapped by bottleneck matrices:
//   h  = in_bottleneck(x)              d_model -> d_h
//   h1 = LN1(h + O(attn(Q h, K h, V h)))
//   h2 = LN2(h1 + W2 gelu(W1 h1))
//   y  = out_bottleneck(h2)            d_h -> d_model
// Only the hidden width d_h is elastic; d_attn, d_ff and the head count are
// fixed.
class ElasticTransformerLayer {
 public:
  ElasticTransformerLayer() = default;
  ElasticTransformerLayer(const std::string& prefix, const LayerDims& dims);

  void set_hidden_dim(std::size_t d_h);
  std::size_t hidden_dim() const { return d_h_; }
  bool configured() const { return d_h_ > 0; }
  const LayerDims& dims() const { return dims_; }

  // x is (batch*seq) x d_model.
  Var Forward(Var x, std::size_t batch, std::size_t seq);

  ElasticLinear& in_bottleneck() { return in_bottleneck_; }
  ElasticLinear& out_bottleneck() { return out_bottleneck_; }
  const ElasticLinear& in_bottleneck() const { return in_bottleneck_; }
  const ElasticLinear& out_bottleneck() const { return out_bottleneck_; }
  ElasticLinear& query() { return query_; }
  ElasticLinear& key() { return key_; }
  ElasticLinear& value() { return value_; }
  ElasticLinear& attn_out() { return attn_out_; }
  ElasticLinear& ffn_in() { return ffn_in_; }
  ElasticLinear& ffn_out() { return ffn_out_; }
  ElasticLayerNorm& attn_norm() { return attn_norm_; }
  ElasticLayerNorm& ffn_norm() { return ffn_norm_; }

  std::size_t ActiveParamCount() const;
  void CollectParameters(std::vector<Parameter*>& out);

 private:
  LayerDims dims_;
  std::size_t d_h_ = 0;
  ElasticLinear in_bottleneck_;
  ElasticLinear query_;
  ElasticLinear key_;
  ElasticLinear value_;
  ElasticLinear attn_out_;
  ElasticLayerNorm attn_norm_;
  ElasticLinear ffn_in_;
  ElasticLinear ffn_out_;
  ElasticLayerNorm ffn_norm_;
  ElasticLinear out_bottleneck_;
};

}  // namespace shaper

#endif  // SHAPER_ELASTIC_H_
