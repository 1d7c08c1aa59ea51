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

#include "attrcam/commands.hpp"

#include <fstream>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "attrcam/csv.hpp"
#include "attrcam/errors.hpp"
#include "attrcam/evaluation.hpp"
#include "attrcam/image_io.hpp"
#include "attrcam/masks.hpp"

namespace attrcam {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void prepare(const ExperimentConfig& config, const fs::path& out_dir) {
  config.validate();
  fs::create_directories(out_dir);
}

Dataset load_split(const ExperimentConfig& config, const fs::path& dir) {
  Dataset ds = load_dataset(dir);
  if (config.frontal_threshold) ds = filter_frontal(ds, *config.frontal_threshold);
  if (ds.size() == 0) throw DataError(dir.string() + ": no samples left after filtering");
  return ds;
}

void check_images(const Dataset& ds, const Architecture& arch) {
  const Shape want{arch.in_channels, arch.image_size, arch.image_size};
  for (const auto& s : ds.samples) {
    if (s.image.shape() != want) {
      throw ConfigError("image " + s.name + " has shape " + shape_string(s.image.shape()) + " but the model expects " +
                        shape_string(want));
    }
  }
}

void check_attributes(const Dataset& ds, const AttributeModel& model) {
  if (ds.attributes != model.attributes()) {
    throw ConfigError("dataset attributes do not match the checkpoint's attributes");
  }
  check_images(ds, model.architecture());
}

std::string stem(const std::string& name) {
  const auto dot = name.rfind('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

std::string run_label(const fs::path& checkpoint, const char* fallback) {
  const std::string parent = fs::absolute(checkpoint).parent_path().filename().string();
  return parent.empty() ? fallback : parent;
}

}  // namespace

void cmd_generate(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
  prepare(config, out_dir);
  const GeneratedData train_set = generate(config.synthetic, config.train_samples, 0);
  const GeneratedData test_set = generate(config.synthetic, config.test_samples, 1);
  save_dataset(train_set.dataset, out_dir / "train");
  save_dataset(test_set.dataset, out_dir / "test");
  train_set.catalog.save(out_dir / "masks");

  ExperimentConfig resolved = config;
  resolved.data_dir = out_dir.string();
  resolved.train_dir.clear();
  resolved.test_dir.clear();
  resolved.catalog.clear();
  save_resolved_config(resolved, out_dir);

  const ClassPriors priors = class_priors(train_set.dataset.labels());
  for (std::size_t m = 0; m < priors.positive.size(); ++m) {
    log << train_set.dataset.attributes[m] << ": p=" << csv_number(priors.positive[m]) << '\n';
  }
  log << "wrote " << config.train_samples << " train and " << config.test_samples << " test samples to "
      << out_dir.string() << '\n';
}

void cmd_train(const ExperimentConfig& config, const fs::path& out_dir, std::ostream& log) {
  prepare(config, out_dir);
  const Dataset ds = load_split(config, config.train_path());
  check_images(ds, config.model);
  const AttributeModel init = AttributeModel::initialize(config.model, ds.attributes, config.seed);
  const TrainResult result = train(init, ds, config.train);

  save_checkpoint(result.model, out_dir / "model.ckpt");
  {
    auto out = open_output(out_dir / "loss.csv");
    write_loss_csv(result.history, ds.attributes, out);
  }
  {
    auto out = open_output(out_dir / "weights.csv");
    const ClassPriors priors = class_priors(ds.labels());
    write_csv_row(out, {"attribute", "p_m", "w_pos", "w_neg"});
    for (std::size_t m = 0; m < ds.attributes.size(); ++m) {
      write_csv_row(out, {ds.attributes[m], csv_number(priors.positive[m]), csv_number(result.weights.positive[m]),
                          csv_number(result.weights.negative[m])});
    }
  }
  save_resolved_config(config, out_dir);
  for (const auto& h : result.history) log << "epoch " << h.epoch << " loss " << csv_number(h.mean_loss) << '\n';
  log << "wrote " << (out_dir / "model.ckpt").string() << '\n';
}

void cmd_cam(const ExperimentConfig& config, const fs::path& checkpoint, const fs::path& out_dir,
             std::ostream& log) {
  prepare(config, out_dir);
  const AttributeModel model = load_checkpoint(checkpoint);
  const Dataset ds = load_split(config, config.test_path());
  check_attributes(ds, model);
  const MaskCatalog catalog = MaskCatalog::load(config.catalog_path());
  catalog.require_covers(model.attributes());

  const std::size_t m_count = model.attribute_count();
  const std::size_t side = model.architecture().image_size;
  std::vector<Tensor> masks;
  for (const auto& a : model.attributes()) masks.push_back(expand_mask(catalog.mask_for(a), side, side));

  // groups[method][attribute][0 -> predicted +1, 1 -> predicted -1]
  std::vector<std::vector<std::array<MapGroup, 2>>> groups;
  for (std::size_t k = 0; k < config.methods.size(); ++k) {
    groups.emplace_back();
    for (std::size_t m = 0; m < m_count; ++m) groups[k].push_back({MapGroup(m, 1), MapGroup(m, -1)});
  }

  auto energies = open_output(out_dir / "energies.csv");
  write_csv_row(energies, {"sample", "attribute", "method", "label", "predicted", "logit", "energy"});
  for_each_sample_cams(model, ds, config.methods, config.target, config.jobs, [&](const SampleCams& s) {
    const Sample& sample = ds.samples[s.index];
    for (std::size_t k = 0; k < config.methods.size(); ++k) {
      for (std::size_t m = 0; m < m_count; ++m) {
        const CamMap& map = s.maps[k][m];
        groups[k][m][map.predicted_sign > 0 ? 0 : 1].accumulate(map, sample.image);
        write_csv_row(energies, {sample.name, model.attributes()[m], to_string(config.methods[k]),
                                 std::to_string(sample.labels[m]), std::to_string(s.decisions[m]),
                                 csv_number(s.logits[m]), csv_number(proportional_energy(map.upscaled, masks[m]))});
      }
    }
  });
  energies.close();

  auto summary = open_output(out_dir / "groups.csv");
  write_csv_row(summary, {"attribute", "method", "predicted", "count", "file"});
  for (std::size_t k = 0; k < config.methods.size(); ++k) {
    for (std::size_t m = 0; m < m_count; ++m) {
      for (const MapGroup& g : groups[k][m]) {
        const std::string sign = g.predicted_sign() > 0 ? "1" : "-1";
        const fs::path rel = fs::path("heatmaps") / model.attributes()[m] / to_string(config.methods[k]) /
                             ("pr=" + sign + ".png");
        std::string file;
        if (g.count() > 0) {
          fs::create_directories((out_dir / rel).parent_path());
          write_png(out_dir / rel, render_overlay(g.mean_image(), g.mean_map(), config.overlay_alpha));
          file = rel.generic_string();
        } else {
          log << "note: no samples predicted " << sign << " for " << model.attributes()[m] << "; no heatmap\n";
        }
        write_csv_row(summary, {model.attributes()[m], to_string(config.methods[k]), sign,
                                std::to_string(g.count()), file});
      }
    }
  }
  save_resolved_config(config, out_dir);
  log << "wrote heatmaps and energies for " << ds.size() << " samples to " << out_dir.string() << '\n';
}

void cmd_report(const ExperimentConfig& config, const fs::path& checkpoint, const std::optional<fs::path>& compare,
                const fs::path& out_dir, std::ostream& log) {
  prepare(config, out_dir);
  const AttributeModel model = load_checkpoint(checkpoint);
  const Dataset ds = load_split(config, config.test_path());
  check_attributes(ds, model);
  const MaskCatalog catalog = MaskCatalog::load(config.catalog_path());

  ReportOptions options;
  options.correct_only = config.correct_only;
  options.jobs = config.jobs;
  if (fs::exists(config.train_path() / "labels.csv")) {
    const Dataset train_set = load_split(config, config.train_path());
    if (train_set.attributes != ds.attributes) throw DataError("train and test splits list different attributes");
    options.priors = class_priors(train_set.labels());
  } else {
    log << "note: no training split found; p_m is taken from the evaluated labels\n";
  }

  const auto reports = build_reports(model, ds, config.methods, config.target, catalog, options);
  for (const auto& r : reports) {
    const std::string base = std::string("report_") + to_string(r.method);
    auto csv = open_output(out_dir / (base + ".csv"));
    write_report_csv(r, csv);
    auto txt = open_output(out_dir / (base + ".txt"));
    write_report_text(r, txt);
    write_report_text(r, log);
  }

  if (compare) {
    const AttributeModel other = load_checkpoint(*compare);
    check_attributes(ds, other);
    std::string la = run_label(checkpoint, "a"), lb = run_label(*compare, "b");
    if (la == lb) {
      la = "a";
      lb = "b";
    }
    const auto others = build_reports(other, ds, config.methods, config.target, catalog, options);
    for (std::size_t k = 0; k < reports.size(); ++k) {
      const std::string base = std::string("report_") + to_string(reports[k].method) + "_paired";
      auto csv = open_output(out_dir / (base + ".csv"));
      write_paired_csv(reports[k], others[k], la, lb, csv);
      auto txt = open_output(out_dir / (base + ".txt"));
      write_paired_text(reports[k], others[k], la, lb, txt);
      write_paired_text(reports[k], others[k], la, lb, log);
    }
  }
  save_resolved_config(config, out_dir);
}

void cmd_compare_targets(const ExperimentConfig& config, const fs::path& checkpoint, const fs::path& out_dir,
                         std::ostream& log) {
  prepare(config, out_dir);
  const AttributeModel model = load_checkpoint(checkpoint);
  const Dataset ds = load_split(config, config.test_path());
  check_attributes(ds, model);
  const std::size_t m_count = model.attribute_count();

  auto summary = open_output(out_dir / "compare.csv");
  write_csv_row(summary, {"sample", "attribute", "method", "logit", "identical", "file"});
  std::vector<std::size_t> taken(m_count, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    bool wanted = false;
    for (std::size_t m = 0; m < m_count; ++m) wanted = wanted || taken[m] < config.compare_samples;
    if (!wanted) break;
    const Sample& sample = ds.samples[i];
    ForwardTrace trace(model, sample.image);
    for (std::size_t m = 0; m < m_count; ++m) {
      if (taken[m] >= config.compare_samples || decide(trace.logit(m)) > 0) continue;
      ++taken[m];
      for (CamMethod method : config.methods) {
        const CamMap pos = compute_cam(trace, m, method, TargetMode::Positive);
        const CamMap pred = compute_cam(trace, m, method, TargetMode::Predicted);
        const Tensor left = render_overlay(sample.image, normalize_map(pos.upscaled), config.overlay_alpha);
        const Tensor right = render_overlay(sample.image, normalize_map(pred.upscaled), config.overlay_alpha);
        const std::size_t h = left.dim(1), w = left.dim(2), gap = 2;
        Tensor pair(Shape{3, h, 2 * w + gap}, 1.0);
        for (std::size_t c = 0; c < 3; ++c) {
          for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
              pair.at({c, y, x}) = left.at({c, y, x});
              pair.at({c, y, w + gap + x}) = right.at({c, y, x});
            }
          }
        }
        const fs::path rel =
            fs::path("compare") / model.attributes()[m] / to_string(method) / (stem(sample.name) + ".png");
        fs::create_directories((out_dir / rel).parent_path());
        write_png(out_dir / rel, pair);
        write_csv_row(summary, {sample.name, model.attributes()[m], to_string(method), csv_number(trace.logit(m)),
                                pos.upscaled == pred.upscaled ? "1" : "0", rel.generic_string()});
      }
    }
  }
  for (std::size_t m = 0; m < m_count; ++m) {
    if (taken[m] == 0) {
      log << "warning: no negatively predicted samples for " << model.attributes()[m] << "; nothing to compare\n";
    }
  }
  save_resolved_config(config, out_dir);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e)) return 4;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const UsageError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return 3;
  return 1;
}

namespace {

const char* kind_of(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return err->kind();
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return "io";
  return "internal";
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gradient-based class activation maps for single-output binary attribute classifiers"};
  app.name("attrcam");
  app.require_subcommand(1);
  app.footer("Config file: JSON, every key optional. Keys and defaults:\n" + config_to_json(ExperimentConfig{}) +
             "Exit codes: 0 success, 2 configuration or usage error, 3 data error, 4 numeric failure.");

  std::string config_file, out_dir, data_dir, checkpoint, compare;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;

  auto common = [&](CLI::App* sub, bool needs_checkpoint) {
    sub->add_option("--config", config_file, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", out_dir, "Output directory")->required();
    sub->add_option("--jobs", jobs, "Worker threads for CAM extraction")->check(CLI::PositiveNumber);
    sub->add_option("--data", data_dir, "Override data.dir");
    if (needs_checkpoint) sub->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  };
  CLI::App* gen = app.add_subcommand("generate", "Write a synthetic train/test dataset and its masks");
  common(gen, false);
  CLI::App* trn = app.add_subcommand("train", "Train a model on the training split");
  common(trn, false);
  CLI::App* cam = app.add_subcommand("cam", "Mean heatmaps per (attribute, method, predicted sign) and energies");
  common(cam, true);
  CLI::App* rep = app.add_subcommand("report", "Error rates and proportional energy tables");
  common(rep, true);
  rep->add_option("--compare", compare, "Second checkpoint reported side by side");
  CLI::App* cmp = app.add_subcommand("compare-targets", "Positive vs predicted target maps on negative predictions");
  common(cmp, true);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "attrcam: error kind=usage exit=2 message=" << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    ExperimentConfig config = config_file.empty() ? ExperimentConfig{} : load_config(config_file);
    if (seed) config.seed = *seed;
    if (jobs) config.jobs = *jobs;
    if (!data_dir.empty()) config.data_dir = data_dir;
    config.propagate_seed();

    const fs::path out_path(out_dir);
    if (gen->parsed()) cmd_generate(config, out_path, out);
    if (trn->parsed()) cmd_train(config, out_path, out);
    if (cam->parsed()) cmd_cam(config, checkpoint, out_path, out);
    if (rep->parsed()) {
      cmd_report(config, checkpoint, compare.empty() ? std::nullopt : std::optional<fs::path>(compare), out_path,
                 out);
    }
    if (cmp->parsed()) cmd_compare_targets(config, checkpoint, out_path, err);
    return 0;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    err << "attrcam: error kind=" << kind_of(e) << " exit=" << code << " message=" << one_line(e.what()) << '\n';
    return code;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace attrcam
