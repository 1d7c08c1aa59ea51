/*
 * Copyright 2026 The attrcam Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <vector>

namespace attrcam {

/// Row-major N x M matrix of binary labels or decisions, each +1 or -1.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  /// Throws DataError if any value is not +1/-1.
  LabelMatrix(std::size_t rows, std::size_t cols, std::vector<int> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  int operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  const std::vector<int>& values() const noexcept { return values_; }

  friend bool operator==(const LabelMatrix&, const LabelMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<int> values_;
};

}  // namespace attrcam
