// Copyright 2026 The cmtned Authors.
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

// Small dense-network toolkit in double precision: a flat parameter store,
// Nesterov SGD, affine layers, an LSTM with explicit backprop, softmax.

#ifndef CMTNED_CORE_NN_HPP_
#define CMTNED_CORE_NN_HPP_

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cmt::nn {

using Vec = std::vector<double>;

struct Tensor {
  size_t offset = 0;
  int rows = 0;
  int cols = 0;
  size_t size() const { return static_cast<size_t>(rows) * cols; }
};

class ParamStore {
 public:
  Tensor Add(const std::string& name, int rows, int cols);
  double* W(const Tensor& t) { return values_.data() + t.offset; }
  const double* W(const Tensor& t) const { return values_.data() + t.offset; }
  double* G(const Tensor& t) { return grads_.data() + t.offset; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& grads() { return grads_; }
  void ZeroGrad();
  void InitUniform(const Tensor& t, double scale, std::mt19937_64& rng);

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  // "name rows cols" header then values, %.17g.
  void Save(std::ostream& out) const;
  // Values must match the existing layout exactly.
  void Load(std::istream& in, const std::string& source);

 private:
  std::vector<double> values_;
  std::vector<double> grads_;
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

struct SgdOptions {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double clip_norm = 0.0;  // 0 disables global-norm clipping
};

// Nesterov momentum: v = mu v + g; p -= lr (g + mu v), g including decay.
class NesterovSgd {
 public:
  explicit NesterovSgd(const SgdOptions& o) : opt_(o) {}
  void Step(ParamStore* params);
  void set_learning_rate(double lr) { opt_.learning_rate = lr; }

 private:
  SgdOptions opt_;
  std::vector<double> velocity_;
};

// y = W x + b with W rows x cols.
void Affine(const ParamStore& p, const Tensor& w, const Tensor& b, std::span<const double> x,
            Vec* y);
// Accumulates dW, db and (when dx non-null) dx += W^T dy.
void AffineBackward(ParamStore* p, const Tensor& w, const Tensor& b, std::span<const double> x,
                    std::span<const double> dy, Vec* dx);

double Sigmoid(double x);
void SoftmaxInPlace(Vec* v);

// Inverted dropout; mask entries are 0 or 1/(1-p).
Vec DropoutMask(size_t n, double p, std::mt19937_64& rng);

// Single-direction LSTM returning the final hidden state (zeros for an empty
// input). Gates ordered i, f, g, o.
class Lstm {
 public:
  Lstm() = default;
  Lstm(ParamStore* p, const std::string& name, int input, int hidden);
  int hidden() const { return hidden_; }
  int input() const { return input_; }
  void Init(ParamStore* p, std::mt19937_64& rng) const;

  struct Cache {
    std::vector<Vec> xh, i, f, g, o, c, tanh_c;
  };
  Vec Forward(const ParamStore& p, const std::vector<Vec>& xs, Cache* cache) const;
  // Accumulates parameter gradients; dxs receives per-step input gradients.
  void Backward(ParamStore* p, const Cache& cache, std::span<const double> dh,
                std::vector<Vec>* dxs) const;

 private:
  Tensor w_, b_;
  int input_ = 0;
  int hidden_ = 0;
};

}  // namespace cmt::nn

#endif  // CMTNED_CORE_NN_HPP_
