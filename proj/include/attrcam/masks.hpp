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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "attrcam/tensor.hpp"

namespace attrcam {

/// Binary G x G mask on the feature grid. Each cell covers a
/// block x block pixel patch of the input image.
class BlockMask {
 public:
  /// `cells` is row-major with G*G entries of 0/1; at least one must be set.
  BlockMask(std::string name, std::size_t grid, std::size_t block, std::vector<std::uint8_t> cells);

  const std::string& name() const noexcept { return name_; }
  std::size_t grid() const noexcept { return grid_; }
  std::size_t block() const noexcept { return block_; }
  bool cell(std::size_t row, std::size_t col) const { return cells_[row * grid_ + col] != 0; }
  const std::vector<std::uint8_t>& cells() const noexcept { return cells_; }
  std::size_t count() const;
  bool touches_corner() const;

  /// Text form: "G block" followed by G lines of G characters in {0,1}.
  void write(std::ostream& out) const;
  static BlockMask read(std::istream& in, std::string name);

  friend bool operator==(const BlockMask&, const BlockMask&) = default;

 private:
  std::string name_;
  std::size_t grid_;
  std::size_t block_;
  std::vector<std::uint8_t> cells_;
};

/// Nearest-neighbour block replication to an [height, width] 0/1 tensor.
/// Requires height == width == G * block.
Tensor expand_mask(const BlockMask& mask, std::size_t height, std::size_t width);

/// Attribute -> mask name mapping plus the named masks themselves.
class MaskCatalog {
 public:
  void add_mask(BlockMask mask);
  void assign(const std::string& attribute, const std::string& mask_name);

  /// Throws ConfigError naming the attribute when it has no mask.
  const BlockMask& mask_for(const std::string& attribute) const;
  bool covers(const std::string& attribute) const;
  /// Throws ConfigError for the first attribute without a mask.
  void require_covers(const std::vector<std::string>& attributes) const;

  const std::map<std::string, BlockMask>& masks() const noexcept { return masks_; }
  const std::map<std::string, std::string>& assignments() const noexcept { return assignments_; }

  /// Writes `<dir>/catalog.txt` ("attribute mask" lines) and `<dir>/<mask>.mask`.
  void save(const std::filesystem::path& dir) const;
  /// Reads a catalog file; masks are looked up next to it as `<mask>.mask`.
  static MaskCatalog load(const std::filesystem::path& catalog_file);

 private:
  std::map<std::string, BlockMask> masks_;
  std::map<std::string, std::string> assignments_;
};

}  // namespace attrcam
