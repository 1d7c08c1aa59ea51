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

#include "attrcam/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "attrcam/csv.hpp"
#include "attrcam/errors.hpp"
#include "attrcam/image_io.hpp"
#include "attrcam/rng.hpp"

namespace attrcam {

LabelMatrix Dataset::labels() const {
  std::vector<int> v;
  v.reserve(samples.size() * attributes.size());
  for (const auto& s : samples) v.insert(v.end(), s.labels.begin(), s.labels.end());
  return LabelMatrix(samples.size(), attributes.size(), std::move(v));
}

Tensor Dataset::batch(const std::vector<std::size_t>& indices) const {
  if (indices.empty()) throw UsageError("batch: no sample indices");
  const Tensor& first = samples.at(indices.front()).image;
  Shape shape{indices.size()};
  shape.insert(shape.end(), first.shape().begin(), first.shape().end());
  Tensor out(shape);
  double* dst = out.data();
  for (auto i : indices) {
    const Tensor& img = samples.at(i).image;
    if (img.shape() != first.shape()) throw DimensionError("batch: images have different shapes");
    std::copy(img.data(), img.data() + img.size(), dst);
    dst += img.size();
  }
  return out;
}

const char* to_string(Pattern p) {
  switch (p) {
    case Pattern::HorizontalStripes: return "hstripes";
    case Pattern::VerticalStripes: return "vstripes";
    case Pattern::Checker: return "checker";
    case Pattern::Patch: return "patch";
  }
  return "?";
}

Pattern parse_pattern(const std::string& s) {
  if (s == "hstripes") return Pattern::HorizontalStripes;
  if (s == "vstripes") return Pattern::VerticalStripes;
  if (s == "checker") return Pattern::Checker;
  if (s == "patch") return Pattern::Patch;
  throw ConfigError("unknown pattern '" + s + "' (expected patch, hstripes, vstripes or checker)");
}

void SyntheticSpec::validate() const {
  if (grid < 2) throw ConfigError("synthetic spec: grid must be >= 2");
  if (image_size < grid || image_size % grid) {
    throw ConfigError("synthetic spec: image_size must be a multiple of grid");
  }
  if (channels != 1 && channels != 3) throw ConfigError("synthetic spec: channels must be 1 or 3");
  if (!(noise >= 0.0)) throw ConfigError("synthetic spec: noise must be >= 0");
  if (!(max_yaw >= 0.0)) throw ConfigError("synthetic spec: max_yaw must be >= 0");
  if (!(lighting >= 0.0 && lighting <= 0.3)) throw ConfigError("synthetic spec: lighting must lie in [0, 0.3]");
  if (attributes.empty()) throw ConfigError("synthetic spec: no attributes");
  std::set<std::string> names;
  std::vector<std::size_t> usage(grid * grid, 0);
  for (const auto& a : attributes) {
    if (a.name.empty() || a.name.find_first_of(" ,\t\n") != std::string::npos) {
      throw ConfigError("synthetic spec: attribute name '" + a.name + "' must be non-empty without spaces or commas");
    }
    if (!names.insert(a.name).second) throw ConfigError("synthetic spec: duplicate attribute '" + a.name + "'");
    if (!(a.prior > 0.0 && a.prior < 1.0)) {
      throw ConfigError("synthetic spec: attribute '" + a.name + "' prior must lie in (0, 1)");
    }
    if (!(a.patch_level >= 0.0 && a.patch_level <= 1.0)) {
      throw ConfigError("synthetic spec: attribute '" + a.name + "' needs patch_level in [0, 1]");
    }
    if (!(a.amplitude_jitter >= 0.0)) {
      throw ConfigError("synthetic spec: attribute '" + a.name + "' needs amplitude_jitter >= 0");
    }
    if (!std::isfinite(a.amplitude_offset)) {
      throw ConfigError("synthetic spec: attribute '" + a.name + "' needs a finite amplitude_offset");
    }
    if (!(a.min_amplitude >= 0.0 && a.max_amplitude >= a.min_amplitude)) {
      throw ConfigError("synthetic spec: attribute '" + a.name + "' needs 0 <= min_amplitude <= max_amplitude");
    }
    const GridRect& r = a.region;
    if (r.rows < 1 || r.cols < 1 || r.row + r.rows > grid || r.col + r.cols > grid) {
      throw ConfigError("synthetic spec: attribute '" + a.name + "' region lies outside the grid");
    }
    const std::size_t last = grid - 1;
    if (r.contains(0, 0) || r.contains(0, last) || r.contains(last, 0) || r.contains(last, last)) {
      throw ConfigError("synthetic spec: attribute '" + a.name + "' region includes a grid corner");
    }
    for (std::size_t y = r.row; y < r.row + r.rows; ++y) {
      for (std::size_t x = r.col; x < r.col + r.cols; ++x) ++usage[y * grid + x];
    }
  }
  std::size_t overlap = 0;
  for (auto u : usage) overlap += u > 1 ? u - 1 : 0;
  if (overlap > overlap_budget) {
    throw ConfigError("synthetic spec: attribute regions overlap in " + std::to_string(overlap) +
                      " cells, budget is " + std::to_string(overlap_budget));
  }
}

SyntheticSpec SyntheticSpec::standard() {
  SyntheticSpec s;
  s.attributes = {
      {"Smiling", 0.5, {5, 2, 2, 4}, Pattern::Patch, 0.5, 1.0, 1.0, "Lips"},
      {"Bangs", 0.2, {1, 2, 2, 4}, Pattern::Patch, 0.5, 1.0, 1.0, "Forehead"},
      {"Eyeglasses", 0.05, {3, 1, 2, 6}, Pattern::Patch, 0.8, 1.0, 1.0, "Eyes", 0.3},
  };
  return s;
}

MaskCatalog synthetic_catalog(const SyntheticSpec& spec) {
  spec.validate();
  MaskCatalog catalog;
  for (const auto& a : spec.attributes) {
    const std::string name = a.mask.empty() ? a.name : a.mask;
    std::vector<std::uint8_t> cells(spec.grid * spec.grid, 0);
    for (std::size_t y = 0; y < spec.grid; ++y) {
      for (std::size_t x = 0; x < spec.grid; ++x) cells[y * spec.grid + x] = a.region.contains(y, x) ? 1 : 0;
    }
    BlockMask mask(name, spec.grid, spec.block(), std::move(cells));
    if (catalog.masks().contains(name) && !(catalog.masks().at(name) == mask)) {
      throw ConfigError("synthetic spec: mask '" + name + "' is used with different regions");
    }
    catalog.add_mask(std::move(mask));
    catalog.assign(a.name, name);
  }
  return catalog;
}

namespace {

// Face geometry in units of the image side.
constexpr double kEyeY = 0.42, kEyeDx = 0.15, kMouthY = 0.74, kMouthDx = 0.12;
constexpr double kBackground = 0.35, kFace = 0.62, kEye = 0.25, kNose = 0.48, kMouth = 0.3;

double pattern_value(Pattern p, std::size_t x, std::size_t y) {
  switch (p) {
    case Pattern::HorizontalStripes: return y % 2 ? -1.0 : 1.0;
    case Pattern::VerticalStripes: return x % 2 ? -1.0 : 1.0;
    case Pattern::Checker: return (x + y) % 2 ? -1.0 : 1.0;
    case Pattern::Patch: return 1.0;
  }
  return 0.0;
}

double segment_distance(double px, double py, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

Landmarks draw_landmarks(const SyntheticSpec& spec, Rng& rng) {
  const double s = static_cast<double>(spec.image_size);
  const double cx = s / 2.0;
  const double jitter = 0.01 * s;
  auto j = [&] { return rng.uniform(-jitter, jitter); };
  Landmarks lm;
  lm.left_eye = {cx - kEyeDx * s + j(), kEyeY * s + j()};
  lm.right_eye = {cx + kEyeDx * s + j(), kEyeY * s + j()};
  lm.left_mouth = {cx - kMouthDx * s + j(), kMouthY * s + j()};
  lm.right_mouth = {cx + kMouthDx * s + j(), kMouthY * s + j()};
  const double eye_mouth = (kMouthY - kEyeY) * s;
  const double yaw = rng.uniform(-spec.max_yaw, spec.max_yaw);
  lm.nose = {cx + yaw * eye_mouth, (kEyeY + kMouthY) / 2.0 * s + j()};
  return lm;
}

// `amplitudes` holds the signed pattern contrast per attribute; 0 leaves the
// region untouched.
Tensor render(const SyntheticSpec& spec, const Landmarks& lm, const std::vector<double>& amplitudes, Rng& rng) {
  const std::size_t n = spec.image_size;
  const double s = static_cast<double>(n);
  const double face = kFace + rng.uniform(-spec.lighting, spec.lighting);
  const double background = kBackground + rng.uniform(-spec.lighting, spec.lighting);
  std::vector<double> gray(n * n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
      const double ex = (px - s / 2.0) / (0.36 * s), ey = (py - 0.55 * s) / (0.44 * s);
      double v = ex * ex + ey * ey <= 1.0 ? face : background;
      for (const Point& eye : {lm.left_eye, lm.right_eye}) {
        if (std::hypot(px - eye.x, py - eye.y) <= 0.05 * s) v = kEye;
      }
      const Point nose_top{lm.nose.x, lm.nose.y - 0.08 * s};
      if (segment_distance(px, py, nose_top, lm.nose) <= 0.025 * s) v = kNose;
      if (segment_distance(px, py, lm.left_mouth, lm.right_mouth) <= 0.03 * s) v = kMouth;
      gray[y * n + x] = v;
    }
  }
  const std::size_t block = spec.block();
  for (std::size_t m = 0; m < spec.attributes.size(); ++m) {
    if (amplitudes[m] == 0.0) continue;
    const auto& a = spec.attributes[m];
    for (std::size_t y = a.region.row * block; y < (a.region.row + a.region.rows) * block; ++y) {
      for (std::size_t x = a.region.col * block; x < (a.region.col + a.region.cols) * block; ++x) {
        double& v = gray[y * n + x];
        v = a.pattern == Pattern::Patch ? v + amplitudes[m] * (a.patch_level - v)
                                        : v + amplitudes[m] * pattern_value(a.pattern, x, y);
      }
    }
  }
  static constexpr double kTint[3] = {1.0, 0.92, 0.85};
  Tensor image(Shape{spec.channels, n, n});
  for (std::size_t c = 0; c < spec.channels; ++c) {
    const double tint = spec.channels == 1 ? 1.0 : kTint[c];
    for (std::size_t i = 0; i < n * n; ++i) {
      const double noise = spec.noise > 0.0 ? spec.noise * rng.normal() : 0.0;
      image[c * n * n + i] = static_cast<double>(quantize_8bit(gray[i] * tint + noise)) / 255.0;
    }
  }
  return image;
}

std::string sample_name(std::size_t stream, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%zu%06zu.png", stream, i);
  return buf;
}

}  // namespace

GeneratedData generate(const SyntheticSpec& spec, std::size_t n, std::uint64_t stream) {
  spec.validate();
  if (n < 1) throw UsageError("generate: sample count must be >= 1");
  Rng rng(spec.seed * 0x9E3779B97F4A7C15ULL + stream * 0xD1B54A32D192ED03ULL + 1);
  const std::size_t m_count = spec.attributes.size();

  std::vector<std::vector<int>> columns(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    const auto positives = static_cast<std::size_t>(std::llround(spec.attributes[m].prior * static_cast<double>(n)));
    columns[m].assign(n, -1);
    std::fill(columns[m].begin(), columns[m].begin() + static_cast<std::ptrdiff_t>(positives), 1);
    rng.shuffle(columns[m]);
  }

  GeneratedData out;
  for (const auto& a : spec.attributes) out.dataset.attributes.push_back(a.name);
  out.dataset.samples.reserve(n);
  std::vector<int> labels(m_count);
  std::vector<double> amplitudes(m_count);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < m_count; ++m) {
      labels[m] = columns[m][i];
      const auto& a = spec.attributes[m];
      const double drawn = rng.uniform(a.min_amplitude, a.max_amplitude);
      amplitudes[m] = (labels[m] == 1 ? drawn : 0.0) + a.amplitude_offset;
      if (a.amplitude_jitter > 0.0) amplitudes[m] += a.amplitude_jitter * rng.normal();
    }
    const Landmarks lm = draw_landmarks(spec, rng);
    Tensor image = render(spec, lm, amplitudes, rng);
    out.dataset.samples.push_back(Sample{sample_name(stream, i), std::move(image), labels, lm});
  }
  out.catalog = synthetic_catalog(spec);
  return out;
}

double frontal_score(const Landmarks& lm) {
  const Point eye{(lm.left_eye.x + lm.right_eye.x) / 2.0, (lm.left_eye.y + lm.right_eye.y) / 2.0};
  const Point mouth{(lm.left_mouth.x + lm.right_mouth.x) / 2.0, (lm.left_mouth.y + lm.right_mouth.y) / 2.0};
  const double vx = mouth.x - eye.x, vy = mouth.y - eye.y;
  const double len = std::hypot(vx, vy);
  if (!(len > 0.0)) throw DataError("frontal_score: eye centre and mouth centre coincide");
  const double cross = vx * (lm.nose.y - eye.y) - vy * (lm.nose.x - eye.x);
  return std::abs(cross) / len / len;
}

Dataset filter_frontal(const Dataset& dataset, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("filter_frontal: threshold must be > 0");
  Dataset out;
  out.attributes = dataset.attributes;
  for (const auto& s : dataset.samples) {
    if (frontal_score(s.landmarks) < threshold) out.samples.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// File IO

namespace {

constexpr const char* kLandmarkHeader[] = {"filename", "lex", "ley", "rex", "rey", "nx",
                                           "ny",       "lmx", "lmy", "rmx", "rmy"};

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw DataError(where + ": invalid number '" + s + "'");
  return v;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::ofstream labels(dir / "labels.csv", std::ios::trunc);
  std::ofstream landmarks(dir / "landmarks.csv", std::ios::trunc);
  if (!labels || !landmarks) throw IoError("cannot write dataset files under " + dir.string());

  std::vector<std::string> header{"filename"};
  header.insert(header.end(), dataset.attributes.begin(), dataset.attributes.end());
  write_csv_row(labels, header);
  write_csv_row(landmarks, std::vector<std::string>(std::begin(kLandmarkHeader), std::end(kLandmarkHeader)));

  for (const auto& s : dataset.samples) {
    write_png(dir / "images" / s.name, s.image);
    std::vector<std::string> row{s.name};
    for (int t : s.labels) row.push_back(t > 0 ? "1" : "-1");
    write_csv_row(labels, row);
    const Landmarks& l = s.landmarks;
    write_csv_row(landmarks, {s.name, format_double(l.left_eye.x), format_double(l.left_eye.y),
                              format_double(l.right_eye.x), format_double(l.right_eye.y), format_double(l.nose.x),
                              format_double(l.nose.y), format_double(l.left_mouth.x), format_double(l.left_mouth.y),
                              format_double(l.right_mouth.x), format_double(l.right_mouth.y)});
  }
  if (!labels || !landmarks) throw IoError("failed writing dataset files under " + dir.string());
}

Dataset load_dataset(const std::filesystem::path& image_dir, const std::filesystem::path& label_file,
                     const std::filesystem::path& landmark_file) {
  const CsvTable labels = read_csv(label_file);
  const CsvTable landmarks = read_csv(landmark_file);
  if (labels.header.size() < 2) throw DataError(label_file.string() + ": header must name at least one attribute");
  const std::vector<std::string> want(std::begin(kLandmarkHeader), std::end(kLandmarkHeader));
  if (landmarks.header != want) {
    throw DataError(landmark_file.string() + ": header must be filename,lex,ley,rex,rey,nx,ny,lmx,lmy,rmx,rmy");
  }
  if (labels.rows.size() != landmarks.rows.size()) {
    throw DataError("row-count mismatch: " + std::to_string(labels.rows.size()) + " label rows vs " +
                    std::to_string(landmarks.rows.size()) + " landmark rows");
  }

  std::unordered_map<std::string, Landmarks> by_name;
  for (std::size_t r = 0; r < landmarks.rows.size(); ++r) {
    const auto& row = landmarks.rows[r];
    const std::string where = landmark_file.string() + ":" + std::to_string(r + 2);
    if (row.size() != want.size()) throw DataError(where + ": expected 11 fields");
    std::array<double, 10> v{};
    for (std::size_t i = 0; i < 10; ++i) v[i] = parse_double(row[i + 1], where);
    by_name[row[0]] = Landmarks{{v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}, {v[6], v[7]}, {v[8], v[9]}};
  }

  Dataset ds;
  ds.attributes.assign(labels.header.begin() + 1, labels.header.end());
  const std::size_t m_count = ds.attributes.size();
  bool saw_zero = false, saw_minus = false;
  std::vector<std::vector<int>> raw;
  raw.reserve(labels.rows.size());
  for (std::size_t r = 0; r < labels.rows.size(); ++r) {
    const auto& row = labels.rows[r];
    const std::string where = label_file.string() + ":" + std::to_string(r + 2);
    if (row.size() != m_count + 1) throw DataError(where + ": expected " + std::to_string(m_count + 1) + " fields");
    std::vector<int> t(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
      const std::string& tok = row[m + 1];
      if (tok == "1" || tok == "+1") {
        t[m] = 1;
      } else if (tok == "-1") {
        t[m] = -1;
        saw_minus = true;
      } else if (tok == "0") {
        t[m] = 0;
        saw_zero = true;
      } else {
        throw DataError(where + ": unknown label token '" + tok + "' for attribute '" + ds.attributes[m] + "'");
      }
    }
    raw.push_back(std::move(t));
  }
  if (saw_zero && saw_minus) throw DataError(label_file.string() + ": mixes 0 and -1 labels");
  if (saw_zero) {
    std::cerr << "warning: " << label_file.string() << " uses {0,1} labels; mapping 0 to -1\n";
    for (auto& t : raw) {
      for (auto& v : t) v = v == 0 ? -1 : v;
    }
  }

  ds.samples.reserve(raw.size());
  for (std::size_t r = 0; r < raw.size(); ++r) {
    const std::string& name = labels.rows[r][0];
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError(landmark_file.string() + ": no landmarks for '" + name + "'");
    const auto path = image_dir / name;
    if (!std::filesystem::exists(path)) throw IoError("missing image " + path.string());
    ds.samples.push_back(Sample{name, read_png(path), std::move(raw[r]), it->second});
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  return load_dataset(dir / "images", dir / "labels.csv", dir / "landmarks.csv");
}

}  // namespace attrcam
