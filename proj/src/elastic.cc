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

#include "shaper/elastic.h"

#include "shaper/errors.h"

namespace shaper {

ElasticLinear::ElasticLinear(const std::string& name, std::size_t max_in,
                             std::size_t max_out, bool with_bias)
    : weight_(name + ".weight", Tensor::Matrix(max_out, max_in)),
      has_bias_(with_bias),
      active_in_(max_in),
      active_out_(max_out) {
  if (with_bias) bias_ = Parameter(name + ".bias", Tensor({max_out}, 0.0));
}

void ElasticLinear::set_sample_config(std::size_t in_dim, std::size_t out_dim) {
  if (in_dim < 1 || in_dim > max_in() || out_dim < 1 || out_dim > max_out()) {
    throw ConfigError("sample config (in=" + std::to_string(in_dim) +
                      ", out=" + std::to_string(out_dim) + ") outside " +
                      weight_.name + " bounds (in<=" + std::to_string(max_in()) +
                      ", out<=" + std::to_string(max_out()) + ")");
  }
  active_in_ = in_dim;
  active_out_ = out_dim;
}

Var ElasticLinear::Forward(Var x) {
  if (x.value().cols() != active_in_) {
    throw ValidationError("invalid shape for " + weight_.name + ": input width " +
                          std::to_string(x.value().cols()) + ", active_in " +
                          std::to_string(active_in_));
  }
  return ad::Linear(x, weight_, has_bias_ ? &bias_ : nullptr, active_out_);
}

std::size_t ElasticLinear::ActiveParamCount() const {
  return active_out_ * active_in_ + (has_bias_ ? active_out_ : 0);
}

void ElasticLinear::CollectParameters(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

ElasticLayerNorm::ElasticLayerNorm(const std::string& name, std::size_t max_dim)
    : gamma_(name + ".gamma", Tensor({max_dim}, 1.0)),
      beta_(name + ".beta", Tensor({max_dim}, 0.0)),
      active_dim_(max_dim) {}

void ElasticLayerNorm::set_active_dim(std::size_t dim) {
  if (dim < 1 || dim > max_dim()) {
    throw ConfigError("layer-norm width " + std::to_string(dim) + " outside [1, " +
                      std::to_string(max_dim()) + "]");
  }
  active_dim_ = dim;
}

Var ElasticLayerNorm::Forward(Var x) {
  if (x.value().cols() != active_dim_) {
    throw ValidationError("invalid shape for " + gamma_.name + ": input width " +
                          std::to_string(x.value().cols()));
  }
  return ad::LayerNorm(x, gamma_, beta_, kEpsilon);
}

void ElasticLayerNorm::CollectParameters(std::vector<Parameter*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

ElasticTransformerLayer::ElasticTransformerLayer(const std::string& prefix,
                                                 const LayerDims& dims)
    : dims_(dims),
      in_bottleneck_(prefix + ".in_bottleneck", dims.d_model, dims.d_model),
      query_(prefix + ".attention.query", dims.d_model, dims.d_attn),
      key_(prefix + ".attention.key", dims.d_model, dims.d_attn),
      value_(prefix + ".attention.value", dims.d_model, dims.d_attn),
      attn_out_(prefix + ".attention.output", dims.d_attn, dims.d_model),
      attn_norm_(prefix + ".attention.norm", dims.d_model),
      ffn_in_(prefix + ".ffn.intermediate", dims.d_model, dims.d_ff),
      ffn_out_(prefix + ".ffn.output", dims.d_ff, dims.d_model),
      ffn_norm_(prefix + ".ffn.norm", dims.d_model),
      out_bottleneck_(prefix + ".out_bottleneck", dims.d_model, dims.d_model) {
  if (dims.heads == 0 || dims.d_attn % dims.heads != 0) {
    throw ValidationError("d_attn " + std::to_string(dims.d_attn) +
                          " is not divisible by head count " +
                          std::to_string(dims.heads));
  }
}

void ElasticTransformerLayer::set_hidden_dim(std::size_t d_h) {
  if (d_h < 1 || d_h > dims_.d_model) {
    throw ConfigError("hidden dim " + std::to_string(d_h) + " outside [1, " +
                      std::to_string(dims_.d_model) + "]");
  }
  in_bottleneck_.set_sample_config(dims_.d_model, d_h);
  query_.set_sample_config(d_h, dims_.d_attn);
  key_.set_sample_config(d_h, dims_.d_attn);
  value_.set_sample_config(d_h, dims_.d_attn);
  attn_out_.set_sample_config(dims_.d_attn, d_h);
  attn_norm_.set_active_dim(d_h);
  ffn_in_.set_sample_config(d_h, dims_.d_ff);
  ffn_out_.set_sample_config(dims_.d_ff, d_h);
  ffn_norm_.set_active_dim(d_h);
  out_bottleneck_.set_sample_config(d_h, dims_.d_model);
  d_h_ = d_h;
}

Var ElasticTransformerLayer::Forward(Var x, std::size_t batch, std::size_t seq) {
  if (!configured()) throw ConfigError("transformer layer has no hidden dim set");
  Var h = in_bottleneck_.Forward(x);
  Var attn = ad::Attention(query_.Forward(h), key_.Forward(h), value_.Forward(h),
                           batch, seq, dims_.heads);
  Var h1 = attn_norm_.Forward(ad::Add(h, attn_out_.Forward(attn)));
  Var ff = ffn_out_.Forward(ad::Gelu(ffn_in_.Forward(h1)));
  Var h2 = ffn_norm_.Forward(ad::Add(h1, ff));
  return out_bottleneck_.Forward(h2);
}

std::size_t ElasticTransformerLayer::ActiveParamCount() const {
  return in_bottleneck_.ActiveParamCount() + query_.ActiveParamCount() +
         key_.ActiveParamCount() + value_.ActiveParamCount() +
         attn_out_.ActiveParamCount() + attn_norm_.ActiveParamCount() +
         ffn_in_.ActiveParamCount() + ffn_out_.ActiveParamCount() +
         ffn_norm_.ActiveParamCount() + out_bottleneck_.ActiveParamCount();
}

void ElasticTransformerLayer::CollectParameters(std::vector<Parameter*>& out) {
  in_bottleneck_.CollectParameters(out);
  query_.CollectParameters(out);
  key_.CollectParameters(out);
  value_.CollectParameters(out);
  attn_out_.CollectParameters(out);
  attn_norm_.CollectParameters(out);
  ffn_in_.CollectParameters(out);
  ffn_out_.CollectParameters(out);
  ffn_norm_.CollectParameters(out);
  out_bottleneck_.CollectParameters(out);
}

}  // namespace shaper
