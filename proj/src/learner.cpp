// Copyright 2026 The prepsearch Authors.
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

#include "prepsearch/learner.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "prepsearch/common.hpp"

namespace prepsearch {

int SoftmaxModel::predict(std::span<const double> x) const {
  const std::size_t d = weights.rows - 1;
  const std::size_t k = weights.cols;
  int best = 0;
  double best_score = -INFINITY;
  for (std::size_t c = 0; c < k; ++c) {
    double s = weights(d, c);
    for (std::size_t j = 0; j < d; ++j) s += x[j] * weights(j, c);
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(c);
    }
  }
  return best;
}

double SoftmaxModel::accuracy(const Matrix& x, std::span<const int> y) const {
  if (x.rows == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    correct += predict(x.row(r)) == y[r] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(x.rows);
}

double softmax_loss(const Matrix& weights, const Matrix& x,
                    std::span<const int> y, double l2, Matrix* grad) {
  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  const std::size_t k = weights.cols;
  if (grad) *grad = Matrix(d + 1, k);
  std::vector<double> z(k);
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x.data.data() + r * d;
    for (std::size_t c = 0; c < k; ++c) z[c] = weights(d, c);
    for (std::size_t j = 0; j < d; ++j) {
      const double xj = xr[j];
      const double* wj = weights.data.data() + j * k;
      for (std::size_t c = 0; c < k; ++c) z[c] += xj * wj[c];
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
      v = std::exp(v - zmax);
      sum += v;
    }
    const auto label = static_cast<std::size_t>(y[r]);
    loss -= std::log(z[label] / sum);
    if (grad) {
      for (std::size_t c = 0; c < k; ++c) {
        const double err = z[c] / sum - (c == label ? 1.0 : 0.0);
        (*grad)(d, c) += err;
        double* gc = grad->data.data() + c;
        for (std::size_t j = 0; j < d; ++j) gc[j * k] += err * xr[j];
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  loss *= inv_n;
  double reg = 0.0;
  for (std::size_t j = 0; j < d * k; ++j) reg += weights.data[j] * weights.data[j];
  loss += 0.5 * l2 * reg;
  if (grad) {
    for (double& g : grad->data) g *= inv_n;
    for (std::size_t j = 0; j < d * k; ++j) grad->data[j] += l2 * weights.data[j];
  }
  return loss;
}

SoftmaxModel train_softmax(const Matrix& x, std::span<const int> y,
                           int n_classes, const LearnerConfig& cfg) {
  if (y.size() != x.rows || x.rows == 0) {
    throw Error("SchemaMismatch", "feature rows and labels differ");
  }
  for (double v : x.data) {
    if (!std::isfinite(v)) throw Error("NonFiniteInput", "non-finite feature");
  }
  if (std::set<int>(y.begin(), y.end()).size() < 2) {
    throw Error("DegenerateLabels", "training labels contain a single class");
  }
  const auto k = static_cast<std::size_t>(n_classes);
  SoftmaxModel model;
  model.weights = Matrix(x.cols + 1, k);
  Matrix grad;
  double loss = softmax_loss(model.weights, x, y, cfg.l2, &grad);
  model.loss_history.push_back(loss);
  double step = cfg.learning_rate;
  Matrix trial = model.weights;
  Matrix trial_grad;
  for (int it = 0; it < cfg.iterations; ++it) {
    bool accepted = false;
    for (int halvings = 0; halvings < 40; ++halvings) {
      for (std::size_t i = 0; i < trial.data.size(); ++i) {
        trial.data[i] = model.weights.data[i] - step * grad.data[i];
      }
      const double next = softmax_loss(trial, x, y, cfg.l2, &trial_grad);
      if (std::isfinite(next) && next <= loss) {
        loss = next;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    model.loss_history.push_back(loss);
    if (!accepted) break;
    std::swap(model.weights, trial);
    std::swap(grad, trial_grad);
  }
  return model;
}

}  // namespace prepsearch
