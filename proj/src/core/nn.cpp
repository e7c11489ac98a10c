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

#include "core/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "core/common.hpp"

namespace cmt::nn {

Tensor ParamStore::Add(const std::string& name, int rows, int cols) {
  Tensor t{values_.size(), rows, cols};
  values_.resize(values_.size() + t.size(), 0.0);
  grads_.resize(values_.size(), 0.0);
  names_.push_back(name);
  tensors_.push_back(t);
  return t;
}

void ParamStore::ZeroGrad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

void ParamStore::InitUniform(const Tensor& t, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-scale, scale);
  double* w = W(t);
  for (size_t i = 0; i < t.size(); ++i) w[i] = u(rng);
}

void ParamStore::Save(std::ostream& out) const {
  char buf[32];
  out << "tensors " << tensors_.size() << '\n';
  for (size_t k = 0; k < tensors_.size(); ++k) {
    const Tensor& t = tensors_[k];
    out << names_[k] << ' ' << t.rows << ' ' << t.cols << '\n';
    for (size_t i = 0; i < t.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", values_[t.offset + i]);
      out << buf << (i + 1 == t.size() || (i + 1) % t.cols == 0 ? '\n' : ' ');
    }
  }
}

void ParamStore::Load(std::istream& in, const std::string& source) {
  std::string word;
  size_t n = 0;
  if (!(in >> word >> n) || word != "tensors" || n != tensors_.size()) {
    Fail(ErrorCode::kParse, source + ": expected 'tensors " + std::to_string(tensors_.size()) + "'");
  }
  for (size_t k = 0; k < n; ++k) {
    std::string name;
    int rows = 0, cols = 0;
    in >> name >> rows >> cols;
    const Tensor& t = tensors_[k];
    if (!in || name != names_[k] || rows != t.rows || cols != t.cols) {
      Fail(ErrorCode::kParse, source + ": tensor " + std::to_string(k) + " shape mismatch (found '" +
                                  name + "' " + std::to_string(rows) + "x" + std::to_string(cols) +
                                  ", expected '" + names_[k] + "' " + std::to_string(t.rows) +
                                  "x" + std::to_string(t.cols) + ")");
    }
    for (size_t i = 0; i < t.size(); ++i) {
      if (!(in >> word)) Fail(ErrorCode::kParse, source + ": truncated tensor '" + name + "'");
      double v = ParseDouble(word, source);
      if (!std::isfinite(v)) Fail(ErrorCode::kParse, source + ": non-finite parameter");
      values_[t.offset + i] = v;
    }
  }
}

void NesterovSgd::Step(ParamStore* params) {
  auto& w = params->values();
  auto& g = params->grads();
  if (velocity_.size() != w.size()) velocity_.assign(w.size(), 0.0);
  double scale = 1.0;
  if (opt_.clip_norm > 0) {
    double norm = 0;
    for (double x : g) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > opt_.clip_norm) scale = opt_.clip_norm / norm;
  }
  const double lr = opt_.learning_rate, mu = opt_.momentum, wd = opt_.weight_decay;
  for (size_t i = 0; i < w.size(); ++i) {
    double gi = g[i] * scale + wd * w[i];
    velocity_[i] = mu * velocity_[i] + gi;
    w[i] -= lr * (gi + mu * velocity_[i]);
  }
}

void Affine(const ParamStore& p, const Tensor& w, const Tensor& b, std::span<const double> x,
            Vec* y) {
  const double* W = p.W(w);
  const double* B = p.W(b);
  y->assign(w.rows, 0.0);
  for (int r = 0; r < w.rows; ++r) {
    const double* row = W + static_cast<size_t>(r) * w.cols;
    double s = B[r];
    for (int c = 0; c < w.cols; ++c) s += row[c] * x[c];
    (*y)[r] = s;
  }
}

void AffineBackward(ParamStore* p, const Tensor& w, const Tensor& b, std::span<const double> x,
                    std::span<const double> dy, Vec* dx) {
  const double* W = p->W(w);
  double* GW = p->G(w);
  double* GB = p->G(b);
  if (dx) dx->resize(w.cols, 0.0);
  for (int r = 0; r < w.rows; ++r) {
    const double d = dy[r];
    if (d == 0) continue;
    GB[r] += d;
    double* grow = GW + static_cast<size_t>(r) * w.cols;
    const double* row = W + static_cast<size_t>(r) * w.cols;
    for (int c = 0; c < w.cols; ++c) grow[c] += d * x[c];
    if (dx) {
      for (int c = 0; c < w.cols; ++c) (*dx)[c] += d * row[c];
    }
  }
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

void SoftmaxInPlace(Vec* v) {
  double mx = *std::max_element(v->begin(), v->end());
  double sum = 0;
  for (double& x : *v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : *v) x /= sum;
}

Vec DropoutMask(size_t n, double p, std::mt19937_64& rng) {
  Vec m(n, 1.0);
  if (p <= 0) return m;
  std::bernoulli_distribution keep(1.0 - p);
  for (double& x : m) x = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
  return m;
}

Lstm::Lstm(ParamStore* p, const std::string& name, int input, int hidden)
    : input_(input), hidden_(hidden) {
  w_ = p->Add(name + ".W", 4 * hidden, input + hidden);
  b_ = p->Add(name + ".b", 4 * hidden, 1);
}

void Lstm::Init(ParamStore* p, std::mt19937_64& rng) const {
  p->InitUniform(w_, 1.0 / std::sqrt(static_cast<double>(hidden_)), rng);
  double* b = p->W(b_);
  for (int h = 0; h < 4 * hidden_; ++h) b[h] = (h >= hidden_ && h < 2 * hidden_) ? 1.0 : 0.0;
}

Vec Lstm::Forward(const ParamStore& p, const std::vector<Vec>& xs, Cache* cache) const {
  const int H = hidden_;
  Vec h(H, 0.0), c(H, 0.0), z;
  if (cache) *cache = Cache{};
  for (const Vec& x : xs) {
    Vec xh(x);
    xh.insert(xh.end(), h.begin(), h.end());
    Affine(p, w_, b_, xh, &z);
    Vec i(H), f(H), g(H), o(H), tc(H);
    for (int k = 0; k < H; ++k) {
      i[k] = Sigmoid(z[k]);
      f[k] = Sigmoid(z[H + k]);
      g[k] = std::tanh(z[2 * H + k]);
      o[k] = Sigmoid(z[3 * H + k]);
      c[k] = f[k] * c[k] + i[k] * g[k];
      tc[k] = std::tanh(c[k]);
      h[k] = o[k] * tc[k];
    }
    if (cache) {
      cache->xh.push_back(std::move(xh));
      cache->i.push_back(std::move(i));
      cache->f.push_back(std::move(f));
      cache->g.push_back(std::move(g));
      cache->o.push_back(std::move(o));
      cache->c.push_back(c);
      cache->tanh_c.push_back(std::move(tc));
    }
  }
  return h;
}

void Lstm::Backward(ParamStore* p, const Cache& cache, std::span<const double> dh_out,
                    std::vector<Vec>* dxs) const {
  const int H = hidden_;
  const size_t T = cache.xh.size();
  if (dxs) dxs->assign(T, Vec(input_, 0.0));
  Vec dh(dh_out.begin(), dh_out.end()), dc(H, 0.0), dz(4 * H), dxh;
  for (size_t t = T; t-- > 0;) {
    const Vec& i = cache.i[t];
    const Vec& f = cache.f[t];
    const Vec& g = cache.g[t];
    const Vec& o = cache.o[t];
    const Vec& tc = cache.tanh_c[t];
    for (int k = 0; k < H; ++k) {
      double c_prev = t > 0 ? cache.c[t - 1][k] : 0.0;
      double d_o = dh[k] * tc[k];
      double dck = dc[k] + dh[k] * o[k] * (1.0 - tc[k] * tc[k]);
      double d_i = dck * g[k];
      double d_g = dck * i[k];
      double d_f = dck * c_prev;
      dc[k] = dck * f[k];
      dz[k] = d_i * i[k] * (1.0 - i[k]);
      dz[H + k] = d_f * f[k] * (1.0 - f[k]);
      dz[2 * H + k] = d_g * (1.0 - g[k] * g[k]);
      dz[3 * H + k] = d_o * o[k] * (1.0 - o[k]);
    }
    dxh.assign(input_ + H, 0.0);
    AffineBackward(p, w_, b_, cache.xh[t], dz, &dxh);
    if (dxs) std::copy(dxh.begin(), dxh.begin() + input_, (*dxs)[t].begin());
    std::copy(dxh.begin() + input_, dxh.end(), dh.begin());
  }
}

}  // namespace cmt::nn
