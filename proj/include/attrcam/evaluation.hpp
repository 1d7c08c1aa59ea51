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

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "attrcam/balancing.hpp"
#include "attrcam/cam.hpp"
#include "attrcam/data.hpp"
#include "attrcam/labels.hpp"
#include "attrcam/masks.hpp"
#include "attrcam/network.hpp"

namespace attrcam {

/// Confusion counts and rates for one attribute. A rate whose denominator
/// is zero is absent rather than 0.
struct ErrorRates {
  std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
  std::optional<double> fnr;  // FN / (FN + TP)
  std::optional<double> fpr;  // FP / (FP + TN)
};

std::vector<ErrorRates> error_rates(const LabelMatrix& decisions, const LabelMatrix& labels);

/// Share of the activation mass of `upscaled` that lies inside `mask`
/// (both [H, W]). Returns 0 for an all-zero map; negative activations are a
/// UsageError.
double proportional_energy(const Tensor& upscaled, const Tensor& mask);

/// All CAMs of one sample: `maps[method_index][attribute]`.
struct SampleCams {
  std::size_t index = 0;
  Tensor logits;
  std::vector<int> decisions;
  std::vector<std::vector<CamMap>> maps;
};

/// Runs forward + CAM for every sample and hands the results to `consume`
/// in dataset order. Work is split over `jobs` threads in fixed chunks, so
/// the output does not depend on the worker count.
void for_each_sample_cams(const AttributeModel& model, const Dataset& dataset, const std::vector<CamMethod>& methods,
                          TargetMode target, std::size_t jobs, const std::function<void(const SampleCams&)>& consume);

struct SampleEnergy {
  std::size_t sample = 0;
  std::size_t attribute = 0;
  CamMethod method = CamMethod::GradCam;
  int label = 0;
  int predicted = 0;
  double logit = 0.0;
  double energy = 0.0;
};

struct AttributeMetrics {
  std::string attribute;
  double prior = 0.0;
  ErrorRates rates;
  std::optional<double> energy_pos;  // mean E over positively predicted samples
  std::optional<double> energy_neg;  // mean E over negatively predicted samples
  std::size_t n_pos_pred = 0;
  std::size_t n_neg_pred = 0;
};

struct ExperimentReport {
  CamMethod method = CamMethod::GradCam;
  TargetMode target = TargetMode::Predicted;
  /// Ordered by |p_m - 0.5| ascending.
  std::vector<AttributeMetrics> rows;
};

struct ReportOptions {
  /// Average energies over correctly predicted samples only.
  bool correct_only = false;
  /// Priors shown in the p_m column and used for ordering; taken from the
  /// evaluated labels when absent.
  std::optional<ClassPriors> priors;
  std::size_t jobs = 1;
};

/// Per-sample energies for every method, in (sample, method, attribute) order.
std::vector<SampleEnergy> sample_energies(const AttributeModel& model, const Dataset& dataset,
                                          const std::vector<CamMethod>& methods, TargetMode target,
                                          const MaskCatalog& catalog, std::size_t jobs = 1);

/// Folds per-sample energies of one method into a report.
ExperimentReport assemble_report(const std::vector<std::string>& attributes, const LabelMatrix& labels,
                                 const std::vector<SampleEnergy>& energies, CamMethod method, TargetMode target,
                                 const ReportOptions& options = {});

/// One report per method for `model` on `dataset`. Throws ConfigError if
/// the catalog misses an attribute.
std::vector<ExperimentReport> build_reports(const AttributeModel& model, const Dataset& dataset,
                                            const std::vector<CamMethod>& methods, TargetMode target,
                                            const MaskCatalog& catalog, const ReportOptions& options = {});

ExperimentReport build_report(const AttributeModel& model, const Dataset& dataset, CamMethod method,
                              TargetMode target, const MaskCatalog& catalog, const ReportOptions& options = {});

inline constexpr const char* kReportCsvHeader = "attribute,p_m,fnr,fpr,energy_pos,energy_neg,n_pos_pred,n_neg_pred";

void write_report_csv(const ExperimentReport& report, std::ostream& out);
/// Fixed-width table, three decimals, "n/a" for missing cells.
void write_report_text(const ExperimentReport& report, std::ostream& out);

/// Two reports on the same attributes side by side (e.g. unbalanced vs
/// balanced training), rows in the order of `a`.
void write_paired_csv(const ExperimentReport& a, const ExperimentReport& b, const std::string& label_a,
                      const std::string& label_b, std::ostream& out);
void write_paired_text(const ExperimentReport& a, const ExperimentReport& b, const std::string& label_a,
                       const std::string& label_b, std::ostream& out);

}  // namespace attrcam
