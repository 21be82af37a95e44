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


#include <cmath>
#include <vector>

#include "doctest.h"
#include "shaper/elastic.h"
#include "shaper/supernet.h"
#include "test_util.h"

namespace shaper {
namespace {

using testing::KindOf;
using testing::RandomMatrix;

using Mat = std::vector<std::vector<double>>;

Mat ToMat(const Tensor& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
  }
  return m;
}

// y = x W^T + b with the full stored weight.
Mat Dense(const Mat& x, const Parameter& w, const Parameter& b) {
  Mat y(x.size(), std::vector<double>(w.rows()));
  for (std::size_t n = 0; n < x.size(); ++n) {
    for (std::size_t o = 0; o < w.rows(); ++o) {
      double s = b.value[o];
      for (std::size_t i = 0; i < w.cols(); ++i) s += x[n][i] * w.value.at(o, i);
      y[n][o] = s;
    }
  }
  return y;
}

Mat Norm(const Mat& x, const Parameter& gamma, const Parameter& beta) {
  Mat y = x;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double d = static_cast<double>(x[n].size());
    double mean = 0.0, var = 0.0;
    for (double v : x[n]) mean += v / d;
    for (double v : x[n]) var += (v - mean) * (v - mean) / d;
    for (std::size_t i = 0; i < x[n].size(); ++i) {
      y[n][i] = (x[n][i] - mean) / std::sqrt(var + 1e-12) * gamma.value[i] + beta.value[i];
    }
  }
  return y;
}

Mat Plus(Mat a, const Mat& b) {
  for (std::size_t n = 0; n < a.size(); ++n) {
    for (std::size_t i = 0; i < a[n].size(); ++i) a[n][i] += b[n][i];
  }
  return a;
}

// Textbook post-LN encoder layer on one sequence, written without the
// library's kernels.
Mat StandardLayer(ElasticTransformerLayer& layer, const Mat& x, std::size_t heads) {
  const Mat q = Dense(x, layer.query().weight(), layer.query().bias());
  const Mat k = Dense(x, layer.key().weight(), layer.key().bias());
  const Mat v = Dense(x, layer.value().weight(), layer.value().bias());
  const std::size_t seq = x.size(), width = q[0].size(), hd = width / heads;
  Mat ctx(seq, std::vector<double>(width, 0.0));
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < seq; ++i) {
      std::vector<double> s(seq);
      double mx = -1e300;
      for (std::size_t j = 0; j < seq; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < hd; ++c) dot += q[i][h * hd + c] * k[j][h * hd + c];
        s[j] = dot / std::sqrt(static_cast<double>(hd));
        mx = std::max(mx, s[j]);
      }
      double z = 0.0;
      for (double& e : s) z += (e = std::exp(e - mx));
      for (std::size_t j = 0; j < seq; ++j) {
        for (std::size_t c = 0; c < hd; ++c) ctx[i][h * hd + c] += s[j] / z * v[j][h * hd + c];
      }
    }
  }
  const Mat h1 = Norm(Plus(x, Dense(ctx, layer.attn_out().weight(), layer.attn_out().bias())),
                      layer.attn_norm().gamma(), layer.attn_norm().beta());
  Mat inter = Dense(h1, layer.ffn_in().weight(), layer.ffn_in().bias());
  for (auto& row : inter) {
    for (double& e : row) e = 0.5 * e * (1.0 + std::erf(e / std::sqrt(2.0)));
  }
  return Norm(Plus(h1, Dense(inter, layer.ffn_out().weight(), layer.ffn_out().bias())),
              layer.ffn_norm().gamma(), layer.ffn_norm().beta());
}

void Randomize(ElasticTransformerLayer& layer, Rng& rng, bool bottlenecks) {
  std::vector<Parameter*> params;
  layer.CollectParameters(params);
  for (Parameter* p : params) {
    const bool is_bottleneck = p->name.find("bottleneck") != std::string::npos;
    if (is_bottleneck && !bottlenecks) continue;
    for (double& v : p->value.values()) v = 0.4 * rng.Normal() + (p->name.ends_with("gamma") ? 1.0 : 0.0);
  }
}

void SetIdentityBottlenecks(ElasticTransformerLayer& layer) {
  for (ElasticLinear* lin : {&layer.in_bottleneck(), &layer.out_bottleneck()}) {
    lin->weight().value.Fill(0.0);
    for (std::size_t i = 0; i < lin->max_out(); ++i) lin->weight().value.at(i, i) = 1.0;
    lin->bias().value.Fill(0.0);
  }
}

TEST_CASE("elastic linear uses the top-left block") {
  Rng rng(1);
  ElasticLinear lin("lin", 4, 4);
  lin.weight().value = RandomMatrix(4, 4, rng);
  for (double& v : lin.bias().value.values()) v = rng.Normal();
  lin.set_sample_config(2, 3);
  const Tensor x = RandomMatrix(5, 2, rng);
  Tape tape(false);
  const Tensor y = lin.Forward(tape.Constant(x)).value();
  REQUIRE(y.dims() == std::vector<std::size_t>{5, 3});
  for (std::size_t n = 0; n < 5; ++n) {
    for (std::size_t o = 0; o < 3; ++o) {
      double s = lin.bias().value[o];
      for (std::size_t i = 0; i < 2; ++i) s += x.at(n, i) * lin.weight().value.at(o, i);
      CHECK(y.at(n, o) == doctest::Approx(s).epsilon(1e-14));
    }
  }
  CHECK(lin.ActiveParamCount() == 3 * 2 + 3);
}

TEST_CASE("full sample config equals the unsliced layer") {
  Rng rng(2);
  ElasticLinear lin("lin", 5, 3);
  lin.weight().value = RandomMatrix(3, 5, rng);
  lin.set_sample_config(5, 3);
  const Tensor x = RandomMatrix(4, 5, rng);
  Tape tape(false);
  const Tensor y = lin.Forward(tape.Constant(x)).value();
  Parameter b("b", Tensor({3}, 0.0));
  const Mat ref = Dense(ToMat(x), lin.weight(), b);
  for (std::size_t n = 0; n < 4; ++n) {
    for (std::size_t o = 0; o < 3; ++o) CHECK(y.at(n, o) == doctest::Approx(ref[n][o]));
  }
}

TEST_CASE("slicing a 768x768 input bottleneck keeps a 768-to-120 map") {
  ElasticLinear lin("in_bottleneck", 768, 768);
  lin.set_sample_config(768, 120);
  Tape tape(false);
  const Tensor y = lin.Forward(tape.Constant(Tensor::Matrix(1, 768, 1.0))).value();
  CHECK(y.dims() == std::vector<std::size_t>{1, 120});
  CHECK(lin.weight().value.dims() == std::vector<std::size_t>{768, 768});
}

TEST_CASE("out-of-range sample config is a configuration error") {
  ElasticLinear lin("lin", 4, 4);
  CHECK(KindOf([&] { lin.set_sample_config(0, 2); }) == ErrorKind::kConfig);
  CHECK(KindOf([&] { lin.set_sample_config(2, 5); }) == ErrorKind::kConfig);
  ElasticLayerNorm ln("ln", 4);
  CHECK(KindOf([&] { ln.set_active_dim(5); }) == ErrorKind::kConfig);
}

TEST_CASE("layer with identity bottlenecks equals a standard layer") {
  Rng rng(3);
  const LayerDims dims{8, 8, 16, 2};
  ElasticTransformerLayer layer("layer", dims);
  Randomize(layer, rng, false);
  SetIdentityBottlenecks(layer);
  layer.set_hidden_dim(8);
  const Tensor x = RandomMatrix(5, 8, rng);
  Tape tape(false);
  const Tensor y = layer.Forward(tape.Constant(x), 1, 5).value();
  const Mat ref = StandardLayer(layer, ToMat(x), dims.heads);
  for (std::size_t n = 0; n < 5; ++n) {
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(y.at(n, i) == doctest::Approx(ref[n][i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("zero input with zero biases gives uniform attention and finite output") {
  Rng rng(6);
  const LayerDims dims{4, 4, 8, 2};
  ElasticTransformerLayer layer("layer", dims);
  Randomize(layer, rng, false);
  SetIdentityBottlenecks(layer);
  for (ElasticLinear* lin : {&layer.query(), &layer.key(), &layer.value()}) {
    lin->bias().value.Fill(0.0);
  }
  layer.set_hidden_dim(4);
  Tape t1(false), t2(false);
  const Tensor y1 = layer.Forward(t1.Constant(Tensor::Matrix(2, 4)), 1, 2).value();
  const Tensor y2 = layer.Forward(t2.Constant(Tensor::Matrix(2, 4)), 1, 2).value();
  CHECK(y1.AllFinite());
  CHECK(y1 == y2);

  // Zero queries and keys: every position attends uniformly.
  Tape t3(false);
  const Tensor v = RandomMatrix(2, 4, rng);
  const Tensor ctx = ad::Attention(t3.Constant(Tensor::Matrix(2, 4)),
                                   t3.Constant(Tensor::Matrix(2, 4)), t3.Constant(v), 1, 2, 2)
                         .value();
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(ctx.at(r, c) == doctest::Approx(0.5 * (v.at(0, c) + v.at(1, c))).epsilon(1e-15));
    }
  }
}

TEST_CASE("unconfigured layer is a configuration error") {
  ElasticTransformerLayer layer("layer", {4, 4, 8, 2});
  Tape tape(false);
  CHECK(KindOf([&] { layer.Forward(tape.Constant(Tensor::Matrix(2, 4)), 1, 2); }) ==
        ErrorKind::kConfig);
}

TEST_CASE("sliced layer gradients match central differences") {
  Rng rng(4);
  ElasticTransformerLayer layer("layer", {8, 8, 16, 2});
  Randomize(layer, rng, true);
  layer.set_hidden_dim(4);
  std::vector<Parameter*> params;
  layer.CollectParameters(params);
  const Tensor x = RandomMatrix(3, 8, rng);
  const std::vector<int> labels{1, 6, 3};
  const auto check = testing::CheckParameterGradients(
      [&](Tape& t) {
        return ad::CrossEntropy(layer.Forward(t.Constant(x), 1, 3), labels);
      },
      params);
  CHECK_MESSAGE(check.max_error <= 1e-4, check.worst);

  // Weight entries outside the active prefix are exactly zero.
  auto outside_zero = [](const Parameter& p, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < p.rows(); ++r) {
      for (std::size_t c = 0; c < p.cols(); ++c) {
        if ((r >= rows || c >= cols) && p.grad.at(r, c) != 0.0) return false;
      }
    }
    return true;
  };
  CHECK(outside_zero(layer.in_bottleneck().weight(), 4, 8));
  CHECK(outside_zero(layer.query().weight(), 8, 4));
  CHECK(outside_zero(layer.attn_out().weight(), 4, 8));
  CHECK(outside_zero(layer.ffn_in().weight(), 16, 4));
  CHECK(outside_zero(layer.ffn_out().weight(), 4, 16));
  CHECK(outside_zero(layer.out_bottleneck().weight(), 8, 4));
  CHECK(outside_zero(layer.attn_norm().gamma(), 4, 1));
  CHECK(outside_zero(layer.ffn_norm().beta(), 4, 1));
}

TEST_CASE("slicing shares storage with the supernet") {
  Rng rng(5);
  ElasticLinear lin("lin", 4, 4);
  lin.weight().value = RandomMatrix(4, 4, rng);
  lin.set_sample_config(2, 2);
  const Tensor x = RandomMatrix(1, 2, rng);
  auto run = [&] {
    Tape tape(false);
    return lin.Forward(tape.Constant(x)).value();
  };
  const Tensor before = run();
  lin.weight().value.at(1, 1) += 1.0;  // inside the prefix
  CHECK_FALSE(run() == before);
  const Tensor mid = run();
  lin.weight().value.at(3, 3) += 1.0;  // outside the prefix
  CHECK(run() == mid);
}

TEST_CASE("apply_shape configures every layer") {
  BackboneConfig config = BackboneConfig::Desk(50);
  Supernet model = Supernet::Build(config, 1);
  model.ApplyShape(config.design_space.Largest());
  for (std::size_t i = 0; i < model.num_layers(); ++i) CHECK(model.layer(i).hidden_dim() == 64);
  model.ApplyShape(config.design_space.Smallest());
  for (std::size_t i = 0; i < model.num_layers(); ++i) CHECK(model.layer(i).hidden_dim() == 16);
  CHECK(KindOf([&] { model.ApplyShape(ShapeVector{{16, 20, 16, 16}}); }) ==
        ErrorKind::kValidation);
}

TEST_CASE("apply_shape on a twelve-layer backbone") {
  BackboneConfig config;
  config.num_layers = 12;
  config.d_model = 768;
  config.d_attn = 24;
  config.d_ff = 24;
  config.heads = 2;
  config.vocab_size = 8;
  config.max_seq_len = 2;
  config.design_space = DesignSpace({120, 240, 360, 480, 540, 600, 768}, 12);
  Supernet model(config);
  const ShapeVector s = ShapeVector::Parse("480-240-360-240-540-480-360-360-360-360-540-480");
  model.ApplyShape(s);
  for (std::size_t i = 0; i < 12; ++i) CHECK(model.layer(i).hidden_dim() == static_cast<std::size_t>(s[i]));
}

}  // namespace
}  // namespace shaper
