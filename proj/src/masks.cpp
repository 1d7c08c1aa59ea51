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

#include "attrcam/masks.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "attrcam/errors.hpp"

namespace attrcam {

BlockMask::BlockMask(std::string name, std::size_t grid, std::size_t block, std::vector<std::uint8_t> cells)
    : name_(std::move(name)), grid_(grid), block_(block), cells_(std::move(cells)) {
  if (grid_ < 1 || block_ < 1) throw ConfigError("mask '" + name_ + "': grid and block must be >= 1");
  if (cells_.size() != grid_ * grid_) {
    throw DimensionError("mask '" + name_ + "' needs " + std::to_string(grid_ * grid_) + " cells");
  }
  for (auto& c : cells_) {
    if (c > 1) throw DataError("mask '" + name_ + "' cells must be 0 or 1");
  }
  if (count() == 0) throw DataError("mask '" + name_ + "' has no active cell");
}

std::size_t BlockMask::count() const { return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1)); }

bool BlockMask::touches_corner() const {
  const std::size_t last = grid_ - 1;
  return cell(0, 0) || cell(0, last) || cell(last, 0) || cell(last, last);
}

void BlockMask::write(std::ostream& out) const {
  out << grid_ << ' ' << block_ << '\n';
  for (std::size_t r = 0; r < grid_; ++r) {
    for (std::size_t c = 0; c < grid_; ++c) out << (cell(r, c) ? '1' : '0');
    out << '\n';
  }
}

BlockMask BlockMask::read(std::istream& in, std::string name) {
  std::size_t grid = 0, block = 0;
  if (!(in >> grid >> block) || grid == 0 || block == 0) {
    throw DataError("mask '" + name + "': first line must be 'G block'");
  }
  std::vector<std::uint8_t> cells;
  cells.reserve(grid * grid);
  for (std::size_t r = 0; r < grid; ++r) {
    std::string line;
    if (!(in >> line) || line.size() != grid) {
      throw DataError("mask '" + name + "': row " + std::to_string(r) + " must have " + std::to_string(grid) +
                      " characters");
    }
    for (char ch : line) {
      if (ch != '0' && ch != '1') throw DataError("mask '" + name + "': invalid character '" + std::string(1, ch) + "'");
      cells.push_back(static_cast<std::uint8_t>(ch - '0'));
    }
  }
  return BlockMask(std::move(name), grid, block, std::move(cells));
}

Tensor expand_mask(const BlockMask& mask, std::size_t height, std::size_t width) {
  const std::size_t side = mask.grid() * mask.block();
  if (height != side || width != side) {
    throw DimensionError("mask '" + mask.name() + "' expands to " + std::to_string(side) + "x" +
                         std::to_string(side) + ", requested " + std::to_string(height) + "x" + std::to_string(width));
  }
  Tensor out(Shape{height, width});
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      out[y * width + x] = mask.cell(y / mask.block(), x / mask.block()) ? 1.0 : 0.0;
    }
  }
  return out;
}

void MaskCatalog::add_mask(BlockMask mask) {
  const std::string name = mask.name();
  masks_.insert_or_assign(name, std::move(mask));
}

void MaskCatalog::assign(const std::string& attribute, const std::string& mask_name) {
  if (!masks_.contains(mask_name)) {
    throw ConfigError("attribute '" + attribute + "' refers to unknown mask '" + mask_name + "'");
  }
  assignments_[attribute] = mask_name;
}

bool MaskCatalog::covers(const std::string& attribute) const { return assignments_.contains(attribute); }

const BlockMask& MaskCatalog::mask_for(const std::string& attribute) const {
  const auto it = assignments_.find(attribute);
  if (it == assignments_.end()) throw ConfigError("no mask assigned to attribute '" + attribute + "'");
  return masks_.at(it->second);
}

void MaskCatalog::require_covers(const std::vector<std::string>& attributes) const {
  for (const auto& a : attributes) mask_for(a);
}

void MaskCatalog::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "catalog.txt", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "catalog.txt").string());
    for (const auto& [attribute, mask] : assignments_) out << attribute << ' ' << mask << '\n';
  }
  for (const auto& [name, mask] : masks_) {
    std::ofstream out(dir / (name + ".mask"), std::ios::trunc);
    if (!out) throw IoError("cannot write mask " + name);
    mask.write(out);
  }
}

MaskCatalog MaskCatalog::load(const std::filesystem::path& catalog_file) {
  std::ifstream in(catalog_file);
  if (!in) throw IoError("cannot open mask catalog " + catalog_file.string());
  MaskCatalog catalog;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string attribute, mask_name, extra;
    if (!(ls >> attribute)) continue;
    if (!(ls >> mask_name) || (ls >> extra)) {
      throw DataError(catalog_file.string() + ":" + std::to_string(line_no) + ": expected 'attribute mask'");
    }
    if (!catalog.masks_.contains(mask_name)) {
      const auto mask_path = catalog_file.parent_path() / (mask_name + ".mask");
      std::ifstream mf(mask_path);
      if (!mf) throw IoError("mask file " + mask_path.string() + " not found");
      catalog.add_mask(BlockMask::read(mf, mask_name));
    }
    catalog.assign(attribute, mask_name);
  }
  return catalog;
}

}  // namespace attrcam
