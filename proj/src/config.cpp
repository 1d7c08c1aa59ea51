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

#include "attrcam/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "attrcam/errors.hpp"
#include "json.hpp"

namespace attrcam {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void check_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void read_attribute(const json& j, SyntheticAttribute& a) {
  check_keys(j, "synthetic.attributes[]",
             {"name", "prior", "region", "pattern", "min_amplitude", "max_amplitude", "patch_level", "mask", "amplitude_jitter", "amplitude_offset"});
  read(j, "name", a.name);
  read(j, "prior", a.prior);
  if (j.contains("region")) {
    const auto r = j.at("region").get<std::vector<std::size_t>>();
    if (r.size() != 4) throw ConfigError("attribute '" + a.name + "': region must be [row, col, rows, cols]");
    a.region = {r[0], r[1], r[2], r[3]};
  }
  if (j.contains("pattern")) a.pattern = parse_pattern(j.at("pattern").get<std::string>());
  read(j, "min_amplitude", a.min_amplitude);
  read(j, "max_amplitude", a.max_amplitude);
  read(j, "patch_level", a.patch_level);
  read(j, "amplitude_jitter", a.amplitude_jitter);
  read(j, "amplitude_offset", a.amplitude_offset);
  read(j, "mask", a.mask);
}

ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  check_keys(j, "config", {"seed", "jobs", "data", "synthetic", "model", "train", "cam", "report"});
  read(j, "seed", c.seed);
  read(j, "jobs", c.jobs);
  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, "data", {"dir", "train_dir", "test_dir", "catalog", "frontal_threshold"});
    read(d, "dir", c.data_dir);
    read(d, "train_dir", c.train_dir);
    read(d, "test_dir", c.test_dir);
    read(d, "catalog", c.catalog);
    if (d.contains("frontal_threshold") && !d.at("frontal_threshold").is_null()) {
      c.frontal_threshold = d.at("frontal_threshold").get<double>();
    }
  }
  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    check_keys(s, "synthetic",
               {"image_size", "grid", "channels", "noise", "max_yaw", "lighting", "overlap_budget", "train_samples",
                "test_samples", "attributes"});
    read(s, "image_size", c.synthetic.image_size);
    read(s, "grid", c.synthetic.grid);
    read(s, "channels", c.synthetic.channels);
    read(s, "noise", c.synthetic.noise);
    read(s, "max_yaw", c.synthetic.max_yaw);
    read(s, "lighting", c.synthetic.lighting);
    read(s, "overlap_budget", c.synthetic.overlap_budget);
    read(s, "train_samples", c.train_samples);
    read(s, "test_samples", c.test_samples);
    if (s.contains("attributes")) {
      c.synthetic.attributes.clear();
      for (const auto& a : s.at("attributes")) {
        SyntheticAttribute attr;
        read_attribute(a, attr);
        c.synthetic.attributes.push_back(std::move(attr));
      }
    }
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, "model", {"in_channels", "image_size", "channels", "kernel", "pool"});
    read(m, "in_channels", c.model.in_channels);
    read(m, "image_size", c.model.image_size);
    read(m, "channels", c.model.channels);
    read(m, "kernel", c.model.kernel);
    read(m, "pool", c.model.pool);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, "train", {"mode", "epochs", "batch_size", "learning_rate", "momentum"});
    if (t.contains("mode")) c.train.mode = parse_balance_mode(t.at("mode").get<std::string>());
    read(t, "epochs", c.train.epochs);
    read(t, "batch_size", c.train.batch_size);
    read(t, "learning_rate", c.train.learning_rate);
    read(t, "momentum", c.train.momentum);
  }
  if (j.contains("cam")) {
    const json& m = j.at("cam");
    check_keys(m, "cam", {"methods", "target", "overlay_alpha", "compare_samples"});
    if (m.contains("methods")) {
      c.methods.clear();
      for (const auto& s : m.at("methods").get<std::vector<std::string>>()) c.methods.push_back(parse_cam_method(s));
    }
    if (m.contains("target")) c.target = parse_target_mode(m.at("target").get<std::string>());
    read(m, "overlay_alpha", c.overlay_alpha);
    read(m, "compare_samples", c.compare_samples);
  }
  if (j.contains("report")) {
    const json& r = j.at("report");
    check_keys(r, "report", {"correct_only"});
    read(r, "correct_only", c.correct_only);
  }
  c.propagate_seed();
  return c;
}

ordered_json to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["data"] = {{"dir", c.data_dir},
               {"train_dir", c.train_dir},
               {"test_dir", c.test_dir},
               {"catalog", c.catalog},
               {"frontal_threshold", c.frontal_threshold ? ordered_json(*c.frontal_threshold) : ordered_json()}};
  ordered_json attrs = ordered_json::array();
  for (const auto& a : c.synthetic.attributes) {
    attrs.push_back({{"name", a.name},
                     {"prior", a.prior},
                     {"region", {a.region.row, a.region.col, a.region.rows, a.region.cols}},
                     {"pattern", to_string(a.pattern)},
                     {"min_amplitude", a.min_amplitude},
                     {"max_amplitude", a.max_amplitude},
                     {"patch_level", a.patch_level},
                     {"amplitude_jitter", a.amplitude_jitter},
                     {"amplitude_offset", a.amplitude_offset},
                     {"mask", a.mask}});
  }
  j["synthetic"] = {{"image_size", c.synthetic.image_size}, {"grid", c.synthetic.grid},
                    {"channels", c.synthetic.channels},     {"noise", c.synthetic.noise},
                    {"max_yaw", c.synthetic.max_yaw},       {"lighting", c.synthetic.lighting},
                    {"overlap_budget", c.synthetic.overlap_budget},
                    {"train_samples", c.train_samples},     {"test_samples", c.test_samples},
                    {"attributes", attrs}};
  j["model"] = {{"in_channels", c.model.in_channels},
                {"image_size", c.model.image_size},
                {"channels", c.model.channels},
                {"kernel", c.model.kernel},
                {"pool", c.model.pool}};
  j["train"] = {{"mode", to_string(c.train.mode)},
                {"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"momentum", c.train.momentum}};
  std::vector<std::string> methods;
  for (auto m : c.methods) methods.emplace_back(to_string(m));
  j["cam"] = {{"methods", methods},
              {"target", to_string(c.target)},
              {"overlay_alpha", c.overlay_alpha},
              {"compare_samples", c.compare_samples}};
  j["report"] = {{"correct_only", c.correct_only}};
  return j;
}

}  // namespace

std::filesystem::path ExperimentConfig::train_path() const {
  return train_dir.empty() ? std::filesystem::path(data_dir) / "train" : std::filesystem::path(train_dir);
}

std::filesystem::path ExperimentConfig::test_path() const {
  return test_dir.empty() ? std::filesystem::path(data_dir) / "test" : std::filesystem::path(test_dir);
}

std::filesystem::path ExperimentConfig::catalog_path() const {
  return catalog.empty() ? std::filesystem::path(data_dir) / "masks" / "catalog.txt"
                         : std::filesystem::path(catalog);
}

void ExperimentConfig::propagate_seed() {
  synthetic.seed = seed;
  train.seed = seed;
}

void ExperimentConfig::validate() const {
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (train_samples < 1 || test_samples < 1) throw ConfigError("sample counts must be >= 1");
  if (frontal_threshold && !(*frontal_threshold > 0.0)) throw ConfigError("frontal_threshold must be > 0");
  if (methods.empty()) throw ConfigError("cam.methods must list at least one method");
  std::set<CamMethod> seen(methods.begin(), methods.end());
  if (seen.size() != methods.size()) throw ConfigError("cam.methods lists a method twice");
  if (!(overlay_alpha >= 0.0 && overlay_alpha <= 1.0)) throw ConfigError("cam.overlay_alpha must lie in [0, 1]");
  synthetic.validate();
  model.validate();
  train.validate();
}

ExperimentConfig config_from_json(const std::string& text) {
  try {
    ExperimentConfig c = from_json(json::parse(text));
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return config_from_json(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_resolved_config(const ExperimentConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "config.resolved.json", std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / "config.resolved.json").string());
  out << config_to_json(config);
}

}  // namespace attrcam
