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
#include "shaper/autodiff.h"
#include "shaper/optimizer.h"
#include "test_util.h"

namespace shaper {
namespace {

using testing::KindOf;
using testing::RandomMatrix;
using testing::RelativeError;

using InputLoss = std::function<Var(Tape&, const std::vector<Var>&)>;

// Central-difference check of d(loss)/d(input) for tape leaf inputs.
double MaxInputGradError(const InputLoss& fn, std::vector<Tensor> inputs,
                         double h = 1e-5) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : inputs) vars.push_back(tape.Variable(t));
    tape.Backward(fn(tape, vars));
    for (const Var& v : vars) analytic.push_back(v.grad());
  }
  auto eval = [&] {
    Tape tape(false);
    std::vector<Var> vars;
    for (const Tensor& t : inputs) vars.push_back(tape.Constant(t));
    return fn(tape, vars).value()[0];
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double saved = inputs[k][i];
      inputs[k][i] = saved + h;
      const double up = eval();
      inputs[k][i] = saved - h;
      const double down = eval();
      inputs[k][i] = saved;
      const double g = analytic[k].empty() ? 0.0 : analytic[k][i];
      worst = std::max(worst, RelativeError(g, (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

// Reduces a matrix to a scalar through a fixed random projection so every
// output entry gets a distinct upstream gradient.
Var Project(Tape& tape, Var x, std::uint64_t seed = 99) {
  Rng rng(seed);
  const Tensor w = RandomMatrix(x.value().cols(), 1, rng);
  return ad::Sum(ad::MatMul(x, tape.Constant(w)));
}

TEST_CASE("gelu of zero is zero") {
  Tape tape(false);
  const Var y = ad::Gelu(tape.Constant(Tensor({1}, std::vector<double>{0.0})));
  CHECK(y.value()[0] == 0.0);
}

TEST_CASE("softmax of a constant row is uniform") {
  Tape tape(false);
  const Var y = ad::SoftmaxRows(tape.Constant(Tensor::Matrix(1, 4, 1.0)));
  for (double v : y.value().values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("matmul of ones") {
  Tape tape(false);
  const Var y = ad::MatMul(tape.Constant(Tensor::Matrix(2, 3, 1.0)),
                           tape.Constant(Tensor::Matrix(3, 2, 1.0)));
  REQUIRE(y.value().dims() == std::vector<std::size_t>{2, 2});
  for (double v : y.value().values()) CHECK(v == 3.0);
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(3);
  Tape tape(false);
  const Var y = ad::SoftmaxRows(tape.Constant(RandomMatrix(7, 11, rng, 5.0)));
  for (std::size_t r = 0; r < 7; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 11; ++c) s += y.value().at(r, c);
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("gradient of sum is all ones") {
  Rng rng(4);
  Tape tape;
  const Var x = tape.Variable(RandomMatrix(3, 5, rng));
  tape.Backward(ad::Sum(x));
  for (double g : x.grad().values()) CHECK(g == 1.0);
}

TEST_CASE("gradient of zero times x is zero") {
  Rng rng(5);
  Tape tape;
  const Var x = tape.Variable(RandomMatrix(4, 2, rng));
  tape.Backward(ad::Sum(ad::Scale(x, 0.0)));
  for (double g : x.grad().values()) CHECK(g == 0.0);
}

TEST_CASE("primitive gradients match central differences") {
  Rng rng(11);
  SUBCASE("matmul") {
    CHECK(MaxInputGradError(
              [](Tape& t, const std::vector<Var>& v) {
                return Project(t, ad::MatMul(v[0], v[1]));
              },
              {RandomMatrix(3, 4, rng), RandomMatrix(4, 5, rng)}) <= 1e-4);
  }
  SUBCASE("add and scale") {
    CHECK(MaxInputGradError(
              [](Tape& t, const std::vector<Var>& v) {
                return Project(t, ad::Scale(ad::Add(v[0], v[1]), -1.7));
              },
              {RandomMatrix(3, 4, rng), RandomMatrix(3, 4, rng)}) <= 1e-4);
  }
  SUBCASE("gelu") {
    CHECK(MaxInputGradError(
              [](Tape& t, const std::vector<Var>& v) { return Project(t, ad::Gelu(v[0])); },
              {RandomMatrix(4, 6, rng, 2.0)}) <= 1e-4);
  }
  SUBCASE("softmax") {
    CHECK(MaxInputGradError(
              [](Tape& t, const std::vector<Var>& v) {
                return Project(t, ad::SoftmaxRows(v[0]));
              },
              {RandomMatrix(4, 6, rng)}) <= 1e-4);
  }
  SUBCASE("attention") {
    CHECK(MaxInputGradError(
              [](Tape& t, const std::vector<Var>& v) {
                return Project(t, ad::Attention(v[0], v[1], v[2], 2, 3, 2));
              },
              {RandomMatrix(6, 4, rng), RandomMatrix(6, 4, rng), RandomMatrix(6, 4, rng)}) <=
          1e-4);
  }
  SUBCASE("gather rows") {
    const std::vector<std::size_t> rows{2, 0, 2};
    CHECK(MaxInputGradError(
              [&rows](Tape& t, const std::vector<Var>& v) {
                return Project(t, ad::GatherRows(v[0], rows));
              },
              {RandomMatrix(4, 3, rng)}) <= 1e-4);
  }
  SUBCASE("cross entropy ignores unlabelled rows") {
    const std::vector<int> labels{1, -1, 4, 0};
    CHECK(MaxInputGradError(
              [&labels](Tape&, const std::vector<Var>& v) {
                return ad::CrossEntropy(v[0], labels);
              },
              {RandomMatrix(4, 5, rng)}) <= 1e-4);
  }
}

TEST_CASE("parameter primitives match central differences") {
  Rng rng(12);
  Parameter w("w", RandomMatrix(6, 5, rng));
  Parameter b("b", Tensor({6}, 0.0));
  for (double& v : b.value.values()) v = rng.Normal();
  Parameter gamma("gamma", Tensor({6}, 1.0));
  Parameter beta("beta", Tensor({6}, 0.0));
  for (double& v : gamma.value.values()) v += 0.3 * rng.Normal();
  for (double& v : beta.value.values()) v = 0.3 * rng.Normal();
  Parameter table("table", RandomMatrix(7, 4, rng));
  const Tensor x = RandomMatrix(3, 4, rng);
  const std::vector<int> ids{3, 0, 3, 6};

  SUBCASE("sliced linear and layer norm") {
    const auto check = testing::CheckParameterGradients(
        [&](Tape& t) {
          Var h = ad::Linear(t.Constant(x), w, &b, 4);
          return Project(t, ad::LayerNorm(h, gamma, beta));
        },
        {&w, &b, &gamma, &beta});
    CHECK_MESSAGE(check.max_error <= 1e-4, check.worst);
    // Entries outside the 4x4 / 4 prefix receive exactly zero gradient.
    for (std::size_t r = 0; r < 6; ++r) {
      for (std::size_t c = 0; c < 5; ++c) {
        if (r >= 4 || c >= 4) CHECK(w.grad.at(r, c) == 0.0);
      }
    }
    for (std::size_t i = 4; i < 6; ++i) {
      CHECK(b.grad[i] == 0.0);
      CHECK(gamma.grad[i] == 0.0);
      CHECK(beta.grad[i] == 0.0);
    }
  }
  SUBCASE("embedding") {
    const auto check = testing::CheckParameterGradients(
        [&](Tape& t) { return Project(t, ad::Embedding(t, table, ids)); }, {&table});
    CHECK_MESSAGE(check.max_error <= 1e-4, check.worst);
  }
}

TEST_CASE("dimension mismatch is an invalid-shape error") {
  Tape tape(false);
  const Var a = tape.Constant(Tensor::Matrix(2, 3, 1.0));
  const Var b = tape.Constant(Tensor::Matrix(2, 3, 1.0));
  CHECK(KindOf([&] { ad::MatMul(a, b); }) == ErrorKind::kValidation);
  CHECK(KindOf([&] { ad::Add(a, tape.Constant(Tensor::Matrix(3, 2))); }) ==
        ErrorKind::kValidation);
}

TEST_CASE("non-finite input is a numeric error") {
  Tape tape(false);
  Tensor bad = Tensor::Matrix(1, 2, 1.0);
  bad[1] = std::nan("");
  CHECK(KindOf([&] { ad::Gelu(tape.Constant(bad)); }) == ErrorKind::kNumeric);
}

TEST_CASE("backward of a non-scalar loss is a contract violation") {
  Tape tape;
  const Var x = tape.Variable(Tensor::Matrix(2, 2, 1.0));
  CHECK(KindOf([&] { tape.Backward(ad::Scale(x, 2.0)); }) == ErrorKind::kContract);
}

TEST_CASE("forward is deterministic") {
  Rng rng(13);
  const Tensor a = RandomMatrix(5, 7, rng), b = RandomMatrix(7, 3, rng);
  Tape t1(false), t2(false);
  const Tensor y1 = ad::SoftmaxRows(ad::MatMul(t1.Constant(a), t1.Constant(b))).value();
  const Tensor y2 = ad::SoftmaxRows(ad::MatMul(t2.Constant(a), t2.Constant(b))).value();
  CHECK(y1 == y2);
}

Parameter ScalarParam(double w, double g) {
  Parameter p("w", Tensor({1}, std::vector<double>{w}));
  p.grad[0] = g;
  p.MarkAllTouched();
  return p;
}

TEST_CASE("adamw with zero gradient and no decay leaves the parameter") {
  AdamW opt({.learning_rate = 0.1, .weight_decay = 0.0});
  Parameter p = ScalarParam(1.0, 0.0);
  Parameter* ps[] = {&p};
  opt.Step(ps);
  CHECK(p.value[0] == 1.0);
}

TEST_CASE("adamw single step on a scalar") {
  AdamW opt({.learning_rate = 0.1, .weight_decay = 0.0});
  Parameter p = ScalarParam(1.0, 1.0);
  Parameter* ps[] = {&p};
  opt.Step(ps);
  CHECK(p.value[0] == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(opt.step_count() == 1);
  REQUIRE(opt.moments("w") != nullptr);
  CHECK(opt.moments("w")->first.SameDims(p.value));
}

TEST_CASE("adamw with constant gradient decreases monotonically") {
  AdamW opt({.learning_rate = 0.1, .weight_decay = 0.0});
  Parameter p = ScalarParam(1.0, 1.0);
  Parameter* ps[] = {&p};
  opt.Step(ps);
  const double after_one = p.value[0];
  p.grad[0] = 1.0;
  opt.Step(ps);
  CHECK(after_one < 1.0);
  CHECK(p.value[0] < after_one);
}

TEST_CASE("adamw updates only the touched block") {
  AdamW opt;
  Parameter p("m", Tensor::Matrix(3, 3, 1.0));
  p.grad.Fill(0.5);
  p.MarkTouched(2, 1);
  Parameter* ps[] = {&p};
  opt.Step(ps);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      if (r < 2 && c < 1) {
        CHECK(p.value.at(r, c) < 1.0);
      } else {
        CHECK(p.value.at(r, c) == 1.0);
      }
    }
  }
}

TEST_CASE("adamw without gradient storage is a contract violation") {
  AdamW opt;
  Parameter p("p", Tensor({2}, 1.0));
  p.grad = Tensor();
  Parameter* ps[] = {&p};
  CHECK(KindOf([&] { opt.Step(ps); }) == ErrorKind::kContract);
}

}  // namespace
}  // namespace shaper
