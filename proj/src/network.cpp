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

#include "attrcam/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "attrcam/errors.hpp"
#include "attrcam/ops.hpp"
#include "attrcam/rng.hpp"

namespace attrcam {

std::size_t Architecture::feature_grid() const {
  std::size_t g = image_size;
  for (std::size_t i = 0; i < channels.size(); ++i) g /= pool;
  return g;
}

std::size_t Architecture::feature_channels() const {
  return channels.empty() ? in_channels : channels.back();
}

void Architecture::validate() const {
  if (in_channels < 1) throw ConfigError("architecture: in_channels must be >= 1");
  if (image_size < 1) throw ConfigError("architecture: image_size must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("architecture: kernel size must be odd");
  if (pool < 1) throw ConfigError("architecture: pool must be >= 1");
  std::size_t g = image_size;
  for (auto c : channels) {
    if (c < 1) throw ConfigError("architecture: channel counts must be >= 1");
    if (g % pool) {
      throw ConfigError("architecture: pool " + std::to_string(pool) + " does not divide grid " +
                        std::to_string(g));
    }
    g /= pool;
  }
}

AttributeModel::AttributeModel(Architecture arch, std::vector<ConvBlock> blocks, Tensor head_weight,
                               Tensor head_bias, std::vector<std::string> attributes)
    : arch_(std::move(arch)),
      blocks_(std::move(blocks)),
      head_weight_(std::move(head_weight)),
      head_bias_(std::move(head_bias)),
      attributes_(std::move(attributes)) {
  validate();
}

void AttributeModel::validate() const {
  arch_.validate();
  if (attributes_.empty()) throw ConfigError("model needs at least one attribute");
  if (blocks_.size() != arch_.channels.size()) {
    throw DimensionError("model has " + std::to_string(blocks_.size()) + " conv blocks, architecture expects " +
                         std::to_string(arch_.channels.size()));
  }
  std::size_t in = arch_.in_channels;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Shape want{arch_.channels[i], in, arch_.kernel, arch_.kernel};
    if (blocks_[i].kernel.shape() != want || blocks_[i].bias.shape() != Shape{arch_.channels[i]}) {
      throw DimensionError("conv block " + std::to_string(i) + " has kernel " +
                           shape_string(blocks_[i].kernel.shape()) + ", expected " + shape_string(want));
    }
    in = arch_.channels[i];
  }
  const std::size_t m = attributes_.size();
  if (head_weight_.shape() != Shape{m, arch_.feature_channels()} || head_bias_.shape() != Shape{m}) {
    throw DimensionError("logit head has weight " + shape_string(head_weight_.shape()) + ", expected " +
                         shape_string(Shape{m, arch_.feature_channels()}));
  }
}

AttributeModel AttributeModel::initialize(const Architecture& arch, std::vector<std::string> attributes,
                                          std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  auto fill = [&rng](Shape shape, std::size_t fan_in) {
    Tensor t(std::move(shape));
    const double a = std::sqrt(1.0 / static_cast<double>(fan_in));
    for (auto& v : t.values()) v = rng.uniform(-a, a);
    return t;
  };
  std::vector<ConvBlock> blocks;
  std::size_t in = arch.in_channels;
  for (auto out : arch.channels) {
    const std::size_t fan_in = in * arch.kernel * arch.kernel;
    Tensor kernel = fill(Shape{out, in, arch.kernel, arch.kernel}, fan_in);
    Tensor bias = fill(Shape{out}, fan_in);
    blocks.push_back(ConvBlock{std::move(kernel), std::move(bias)});
    in = out;
  }
  const std::size_t m = attributes.size();
  if (m == 0) throw ConfigError("model needs at least one attribute");
  Tensor w = fill(Shape{m, arch.feature_channels()}, arch.feature_channels());
  Tensor b = fill(Shape{m}, arch.feature_channels());
  return AttributeModel(arch, std::move(blocks), std::move(w), std::move(b), std::move(attributes));
}

std::vector<Tensor*> AttributeModel::parameters() {
  std::vector<Tensor*> p;
  for (auto& b : blocks_) {
    p.push_back(&b.kernel);
    p.push_back(&b.bias);
  }
  p.push_back(&head_weight_);
  p.push_back(&head_bias_);
  return p;
}

std::vector<const Tensor*> AttributeModel::parameters() const {
  std::vector<const Tensor*> p;
  for (const auto& b : blocks_) {
    p.push_back(&b.kernel);
    p.push_back(&b.bias);
  }
  p.push_back(&head_weight_);
  p.push_back(&head_bias_);
  return p;
}

BoundParameters bind_parameters(Graph& graph, const AttributeModel& model, bool requires_grad) {
  BoundParameters bound;
  for (const Tensor* t : model.parameters()) bound.vars.push_back(graph.input(*t, requires_grad));
  return bound;
}

namespace {

void check_images(const AttributeModel& model, const Tensor& images) {
  const Architecture& a = model.architecture();
  if (images.rank() != 4 || images.dim(1) != a.in_channels || images.dim(2) != a.image_size ||
      images.dim(3) != a.image_size) {
    throw ConfigError("model expects images [N," + std::to_string(a.in_channels) + "," +
                      std::to_string(a.image_size) + "," + std::to_string(a.image_size) + "], got " +
                      shape_string(images.shape()));
  }
}

Var trunk(const AttributeModel& model, const BoundParameters& params, Var x) {
  const Architecture& a = model.architecture();
  const int pad = static_cast<int>(a.kernel / 2);
  for (std::size_t i = 0; i < a.channels.size(); ++i) {
    x = ops::conv2d(x, params.vars[2 * i], params.vars[2 * i + 1], 1, pad);
    x = ops::relu(x);
    if (a.pool > 1) x = ops::avg_pool2d(x, static_cast<int>(a.pool));
  }
  return x;
}

ForwardNodes head(const BoundParameters& params, Var features) {
  const std::size_t n = params.vars.size();
  const Var pooled = ops::global_avg_pool(features);
  const Var logits = ops::dense(pooled, params.vars[n - 2], params.vars[n - 1]);
  return {features, pooled, logits};
}

// Drops the leading batch axis of a [1, ...] tensor.
Tensor unbatch(const Tensor& t) {
  Shape s(t.shape().begin() + 1, t.shape().end());
  return t.reshaped(std::move(s));
}

}  // namespace

ForwardNodes forward_nodes(const AttributeModel& model, const BoundParameters& params, Var images) {
  check_images(model, images.value());
  return head(params, trunk(model, params, images));
}

ForwardTrace::ForwardTrace(const AttributeModel& model, const Tensor& image) : image_(image) {
  const Architecture& a = model.architecture();
  if (image.rank() != 3) {
    throw ConfigError("forward expects an image [C,H,W], got " + shape_string(image.shape()));
  }
  const Tensor batch = image.reshaped(Shape{1, image.dim(0), image.dim(1), image.dim(2)});
  check_images(model, batch);

  // The trunk runs without gradients; its output re-enters a fresh graph as
  // a leaf so that backward stops at the feature map.
  Tensor feature_batch;
  {
    Graph scratch;
    const BoundParameters p = bind_parameters(scratch, model, false);
    feature_batch = trunk(model, p, scratch.input(batch, false)).value();
  }
  graph_ = std::make_unique<Graph>();
  const Var f = graph_->input(feature_batch, true);
  const BoundParameters p = bind_parameters(*graph_, model, false);
  nodes_ = head(p, f);

  features_ = unbatch(feature_batch);
  pooled_ = nodes_.pooled.value().reshaped(Shape{a.feature_channels()});
  logits_ = nodes_.logits.value().reshaped(Shape{model.attribute_count()});
  gradients_.resize(model.attribute_count());
}

ForwardTrace::ForwardTrace(ForwardTrace&&) noexcept = default;
ForwardTrace& ForwardTrace::operator=(ForwardTrace&&) noexcept = default;
ForwardTrace::~ForwardTrace() = default;

double ForwardTrace::logit(std::size_t attribute) const {
  if (attribute >= logits_.size()) throw UsageError("attribute index out of range");
  return logits_[attribute];
}

Tensor ForwardTrace::feature_gradients(std::size_t attribute, int signed_target) {
  if (attribute >= gradients_.size()) {
    throw UsageError("attribute index " + std::to_string(attribute) + " out of range");
  }
  if (signed_target != 1 && signed_target != -1) throw UsageError("signed_target must be +1 or -1");
  if (!gradients_[attribute]) {
    if (!graph_) throw UsageError("feature_gradients on a released trace");
    Tensor seed(nodes_.logits.value().shape());
    seed[attribute] = 1.0;
    graph_->backward(nodes_.logits, seed);
    gradients_[attribute] = unbatch(graph_->grad(nodes_.features));
  }
  return signed_target > 0 ? *gradients_[attribute] : -*gradients_[attribute];
}

void ForwardTrace::release() { graph_.reset(); }

ForwardTrace forward(const AttributeModel& model, const Tensor& image) { return ForwardTrace(model, image); }

std::vector<int> predict(const AttributeModel& model, const Tensor& image) {
  const ForwardTrace trace(model, image);
  std::vector<int> out;
  for (double z : trace.logits().values()) out.push_back(decide(z));
  return out;
}

Tensor predict_logits(const AttributeModel& model, const Tensor& images) {
  Graph g;
  const BoundParameters p = bind_parameters(g, model, false);
  return forward_nodes(model, p, g.input(images, false)).logits.value();
}

// Checkpoint layout (little-endian):
//   "ATTRCAM\0" | u32 version
//   u64 in_channels, image_size, kernel, pool, n_blocks, channels[n_blocks]
//   u64 n_attributes, then per attribute u64 length + bytes
//   per parameter tensor: u64 rank, u64 dims[rank], f64 values
namespace {

constexpr char kMagic[8] = {'A', 'T', 'T', 'R', 'C', 'A', 'M', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw DataError("checkpoint truncated");
  return v;
}

void put_tensor(std::ostream& out, const Tensor& t) {
  put<std::uint64_t>(out, t.rank());
  for (auto d : t.shape()) put<std::uint64_t>(out, d);
  out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor get_tensor(std::istream& in) {
  const auto rank = get<std::uint64_t>(in);
  if (rank == 0 || rank > 8) throw DataError("checkpoint: implausible tensor rank");
  Shape shape;
  for (std::uint64_t i = 0; i < rank; ++i) shape.push_back(get<std::uint64_t>(in));
  Tensor t(shape);
  if (!in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)))) {
    throw DataError("checkpoint truncated");
  }
  return t;
}

}  // namespace

void save_checkpoint(const AttributeModel& model, std::ostream& out) {
  const Architecture& a = model.architecture();
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, a.in_channels);
  put<std::uint64_t>(out, a.image_size);
  put<std::uint64_t>(out, a.kernel);
  put<std::uint64_t>(out, a.pool);
  put<std::uint64_t>(out, a.channels.size());
  for (auto c : a.channels) put<std::uint64_t>(out, c);
  put<std::uint64_t>(out, model.attribute_count());
  for (const auto& name : model.attributes()) {
    put<std::uint64_t>(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  for (const Tensor* t : model.parameters()) put_tensor(out, *t);
  if (!out) throw IoError("failed writing checkpoint");
}

void save_checkpoint(const AttributeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_checkpoint(model, out);
}

AttributeModel load_checkpoint(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not an attrcam checkpoint");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  Architecture a;
  a.in_channels = get<std::uint64_t>(in);
  a.image_size = get<std::uint64_t>(in);
  a.kernel = get<std::uint64_t>(in);
  a.pool = get<std::uint64_t>(in);
  const auto n_blocks = get<std::uint64_t>(in);
  if (n_blocks > 64) throw DataError("checkpoint: implausible block count");
  a.channels.clear();
  for (std::uint64_t i = 0; i < n_blocks; ++i) a.channels.push_back(get<std::uint64_t>(in));
  const auto m = get<std::uint64_t>(in);
  if (m > 100000) throw DataError("checkpoint: implausible attribute count");
  std::vector<std::string> names;
  for (std::uint64_t i = 0; i < m; ++i) {
    const auto len = get<std::uint64_t>(in);
    if (len > 4096) throw DataError("checkpoint: implausible attribute name length");
    std::string s(len, '\0');
    if (!in.read(s.data(), static_cast<std::streamsize>(len))) throw DataError("checkpoint truncated");
    names.push_back(std::move(s));
  }
  std::vector<ConvBlock> blocks;
  for (std::uint64_t i = 0; i < n_blocks; ++i) {
    Tensor k = get_tensor(in);
    Tensor b = get_tensor(in);
    blocks.push_back(ConvBlock{std::move(k), std::move(b)});
  }
  Tensor w = get_tensor(in);
  Tensor b = get_tensor(in);
  return AttributeModel(std::move(a), std::move(blocks), std::move(w), std::move(b), std::move(names));
}

AttributeModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace attrcam
