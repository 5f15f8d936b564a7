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

#ifndef PREPSEARCH_LEARNER_HPP
#define PREPSEARCH_LEARNER_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace prepsearch {

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
};

struct LearnerConfig {
  double learning_rate = 0.1;
  int iterations = 300;
  double l2 = 1e-4;
};

/// Multinomial logistic regression. `weights` is (features + 1) x classes;
/// the last row holds the intercepts.
struct SoftmaxModel {
  Matrix weights;
  /// Training loss before the first step and after every iteration.
  std::vector<double> loss_history;

  int predict(std::span<const double> x) const;
  double accuracy(const Matrix& x, std::span<const int> y) const;
};

/// Mean cross-entropy plus (l2 / 2) * ||W without intercepts||^2. Fills
/// `grad` (same shape as `weights`) when non-null.
double softmax_loss(const Matrix& weights, const Matrix& x,
                    std::span<const int> y, double l2, Matrix* grad = nullptr);

/// Full-batch gradient descent from zero weights. A step that would raise
/// the loss is halved until it does not, so the loss never increases.
/// Throws NonFiniteInput for non-finite features and DegenerateLabels when
/// fewer than two classes are present.
SoftmaxModel train_softmax(const Matrix& x, std::span<const int> y,
                           int n_classes, const LearnerConfig& cfg = {});

}  // namespace prepsearch

#endif  // PREPSEARCH_LEARNER_HPP
