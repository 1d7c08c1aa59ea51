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

#include <filesystem>

#include "attrcam/tensor.hpp"

namespace attrcam {

/// 8-bit value for an intensity in [0, 1] (clamped, round half up).
unsigned char quantize_8bit(double v);

/// Writes image[C, H, W] (C = 1 gray, C = 3 RGB) as an 8-bit PNG with no
/// ancillary chunks and fixed compression settings, so equal tensors give
/// byte-identical files.
void write_png(const std::filesystem::path& path, const Tensor& image);

/// Reads an 8-bit PNG as [C, H, W] with values q / 255. Gray and
/// gray+alpha become C = 1, everything else C = 3; alpha is dropped.
Tensor read_png(const std::filesystem::path& path);

}  // namespace attrcam
