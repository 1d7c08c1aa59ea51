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

#include "attrcam/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <thread>

#include "attrcam/csv.hpp"
#include "attrcam/errors.hpp"

namespace attrcam {

std::vector<ErrorRates> error_rates(const LabelMatrix& decisions, const LabelMatrix& labels) {
  if (decisions.rows() != labels.rows() || decisions.cols() != labels.cols()) {
    throw DimensionError("error_rates: decision and label matrices differ in shape");
  }
  std::vector<ErrorRates> out(labels.cols());
  for (std::size_t m = 0; m < labels.cols(); ++m) {
    ErrorRates& r = out[m];
    for (std::size_t n = 0; n < labels.rows(); ++n) {
      const bool pred = decisions(n, m) > 0, truth = labels(n, m) > 0;
      if (truth) {
        (pred ? r.tp : r.fn)++;
      } else {
        (pred ? r.fp : r.tn)++;
      }
    }
    if (r.fn + r.tp) r.fnr = static_cast<double>(r.fn) / static_cast<double>(r.fn + r.tp);
    if (r.fp + r.tn) r.fpr = static_cast<double>(r.fp) / static_cast<double>(r.fp + r.tn);
  }
  return out;
}

double proportional_energy(const Tensor& upscaled, const Tensor& mask) {
  if (upscaled.shape() != mask.shape()) {
    throw DimensionError("proportional_energy: map " + shape_string(upscaled.shape()) + " vs mask " +
                         shape_string(mask.shape()));
  }
  double inside = 0.0, total = 0.0;
  for (std::size_t i = 0; i < upscaled.size(); ++i) {
    const double a = upscaled[i];
    if (a < 0.0) throw UsageError("proportional_energy: activation map has negative entries");
    total += a;
    inside += mask[i] * a;
  }
  if (total == 0.0) return 0.0;
  return std::clamp(inside / total, 0.0, 1.0);
}

void for_each_sample_cams(const AttributeModel& model, const Dataset& dataset, const std::vector<CamMethod>& methods,
                          TargetMode target, std::size_t jobs, const std::function<void(const SampleCams&)>& consume) {
  constexpr std::size_t kChunk = 64;
  jobs = std::max<std::size_t>(jobs, 1);
  const std::size_t m_count = model.attribute_count();

  auto run = [&](std::size_t index, SampleCams& out) {
    ForwardTrace trace(model, dataset.samples[index].image);
    out.index = index;
    out.logits = trace.logits();
    out.decisions.clear();
    for (double z : trace.logits().values()) out.decisions.push_back(decide(z));
    out.maps.assign(methods.size(), {});
    for (std::size_t k = 0; k < methods.size(); ++k) {
      for (std::size_t m = 0; m < m_count; ++m) out.maps[k].push_back(compute_cam(trace, m, methods[k], target));
    }
  };

  std::vector<SampleCams> slots(kChunk);
  for (std::size_t start = 0; start < dataset.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, dataset.size() - start);
    const std::size_t workers = std::min(jobs, len);
    if (workers == 1) {
      for (std::size_t i = 0; i < len; ++i) run(start + i, slots[i]);
    } else {
      std::vector<std::exception_ptr> errors(workers);
      std::vector<std::thread> threads;
      for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
          try {
            for (std::size_t i = w; i < len; i += workers) run(start + i, slots[i]);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    for (std::size_t i = 0; i < len; ++i) consume(slots[i]);
  }
}

std::vector<SampleEnergy> sample_energies(const AttributeModel& model, const Dataset& dataset,
                                          const std::vector<CamMethod>& methods, TargetMode target,
                                          const MaskCatalog& catalog, std::size_t jobs) {
  if (dataset.attributes != model.attributes()) {
    throw ConfigError("dataset attributes do not match the model's attributes");
  }
  catalog.require_covers(model.attributes());
  const Architecture& arch = model.architecture();
  std::vector<Tensor> masks;
  for (const auto& a : model.attributes()) {
    masks.push_back(expand_mask(catalog.mask_for(a), arch.image_size, arch.image_size));
  }

  std::vector<SampleEnergy> out;
  out.reserve(dataset.size() * methods.size() * model.attribute_count());
  for_each_sample_cams(model, dataset, methods, target, jobs, [&](const SampleCams& s) {
    for (std::size_t k = 0; k < methods.size(); ++k) {
      for (std::size_t m = 0; m < model.attribute_count(); ++m) {
        out.push_back(SampleEnergy{s.index, m, methods[k], dataset.samples[s.index].labels[m], s.decisions[m],
                                   s.logits[m], proportional_energy(s.maps[k][m].upscaled, masks[m])});
      }
    }
  });
  return out;
}

ExperimentReport assemble_report(const std::vector<std::string>& attributes, const LabelMatrix& labels,
                                 const std::vector<SampleEnergy>& energies, CamMethod method, TargetMode target,
                                 const ReportOptions& options) {
  const std::size_t m_count = attributes.size();
  if (labels.cols() != m_count) throw DimensionError("assemble_report: label columns != attributes");
  const ClassPriors priors = options.priors ? *options.priors : class_priors(labels);
  if (priors.positive.size() != m_count) throw DimensionError("assemble_report: priors size != attributes");

  std::vector<int> decisions(labels.rows() * m_count, 0);
  std::vector<double> sum_pos(m_count, 0.0), sum_neg(m_count, 0.0);
  std::vector<std::size_t> cnt_pos(m_count, 0), cnt_neg(m_count, 0), pred_pos(m_count, 0), pred_neg(m_count, 0);
  for (const auto& e : energies) {
    if (e.method != method) continue;
    decisions.at(e.sample * m_count + e.attribute) = e.predicted;
    (e.predicted > 0 ? pred_pos : pred_neg)[e.attribute]++;
    if (options.correct_only && e.predicted != e.label) continue;
    if (e.predicted > 0) {
      sum_pos[e.attribute] += e.energy;
      cnt_pos[e.attribute]++;
    } else {
      sum_neg[e.attribute] += e.energy;
      cnt_neg[e.attribute]++;
    }
  }
  if (std::find(decisions.begin(), decisions.end(), 0) != decisions.end()) {
    throw UsageError("assemble_report: energies do not cover every sample and attribute");
  }
  const auto rates = error_rates(LabelMatrix(labels.rows(), m_count, std::move(decisions)), labels);

  ExperimentReport report{method, target, {}};
  for (std::size_t m = 0; m < m_count; ++m) {
    AttributeMetrics row;
    row.attribute = attributes[m];
    row.prior = priors.positive[m];
    row.rates = rates[m];
    if (cnt_pos[m]) row.energy_pos = sum_pos[m] / static_cast<double>(cnt_pos[m]);
    if (cnt_neg[m]) row.energy_neg = sum_neg[m] / static_cast<double>(cnt_neg[m]);
    row.n_pos_pred = pred_pos[m];
    row.n_neg_pred = pred_neg[m];
    report.rows.push_back(std::move(row));
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const AttributeMetrics& a, const AttributeMetrics& b) {
    return std::abs(a.prior - 0.5) < std::abs(b.prior - 0.5);
  });
  return report;
}

std::vector<ExperimentReport> build_reports(const AttributeModel& model, const Dataset& dataset,
                                            const std::vector<CamMethod>& methods, TargetMode target,
                                            const MaskCatalog& catalog, const ReportOptions& options) {
  const auto energies = sample_energies(model, dataset, methods, target, catalog, options.jobs);
  const LabelMatrix labels = dataset.labels();
  std::vector<ExperimentReport> out;
  for (auto m : methods) out.push_back(assemble_report(dataset.attributes, labels, energies, m, target, options));
  return out;
}

ExperimentReport build_report(const AttributeModel& model, const Dataset& dataset, CamMethod method,
                              TargetMode target, const MaskCatalog& catalog, const ReportOptions& options) {
  return build_reports(model, dataset, {method}, target, catalog, options).front();
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? csv_number(*v) : "NA"; }

std::string text_cell(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", *v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s;
  return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

std::size_t name_width(const ExperimentReport& r) {
  std::size_t w = 9;
  for (const auto& row : r.rows) w = std::max(w, row.attribute.size());
  return w;
}

const AttributeMetrics& find_row(const ExperimentReport& r, const std::string& attribute) {
  for (const auto& row : r.rows) {
    if (row.attribute == attribute) return row;
  }
  throw ConfigError("paired report: attribute '" + attribute + "' missing from the second report");
}

}  // namespace

void write_report_csv(const ExperimentReport& report, std::ostream& out) {
  out << kReportCsvHeader << '\n';
  for (const auto& r : report.rows) {
    write_csv_row(out, {r.attribute, csv_number(r.prior), cell(r.rates.fnr), cell(r.rates.fpr), cell(r.energy_pos),
                        cell(r.energy_neg), std::to_string(r.n_pos_pred), std::to_string(r.n_neg_pred)});
  }
}

void write_report_text(const ExperimentReport& report, std::ostream& out) {
  const std::size_t w = name_width(report);
  out << "Error rates and proportional energy (" << to_string(report.method) << ", target "
      << to_string(report.target) << ")\n";
  out << pad("Attribute", w, true) << "    p_m    FNR    FPR    Pos    Neg  #pos  #neg\n";
  for (const auto& r : report.rows) {
    out << pad(r.attribute, w, true) << ' ' << pad(text_cell(r.prior), 6) << ' ' << pad(text_cell(r.rates.fnr), 6)
        << ' ' << pad(text_cell(r.rates.fpr), 6) << ' ' << pad(text_cell(r.energy_pos), 6) << ' '
        << pad(text_cell(r.energy_neg), 6) << ' ' << pad(std::to_string(r.n_pos_pred), 5) << ' '
        << pad(std::to_string(r.n_neg_pred), 5) << '\n';
  }
}

void write_paired_csv(const ExperimentReport& a, const ExperimentReport& b, const std::string& la,
                      const std::string& lb, std::ostream& out) {
  write_csv_row(out, {"attribute", "p_m", "fnr_" + la, "fpr_" + la, "fnr_" + lb, "fpr_" + lb, "energy_pos_" + la,
                      "energy_neg_" + la, "energy_pos_" + lb, "energy_neg_" + lb});
  for (const auto& ra : a.rows) {
    const auto& rb = find_row(b, ra.attribute);
    write_csv_row(out, {ra.attribute, csv_number(ra.prior), cell(ra.rates.fnr), cell(ra.rates.fpr), cell(rb.rates.fnr),
                        cell(rb.rates.fpr), cell(ra.energy_pos), cell(ra.energy_neg), cell(rb.energy_pos),
                        cell(rb.energy_neg)});
  }
}

void write_paired_text(const ExperimentReport& a, const ExperimentReport& b, const std::string& la,
                       const std::string& lb, std::ostream& out) {
  const std::size_t w = name_width(a);
  out << "Error rates and proportional energy (" << to_string(a.method) << ", target " << to_string(a.target)
      << ")\n";
  out << pad("", w) << "        " << pad("Error rates", 27, true) << "  Proportional energy\n";
  out << pad("", w) << "        " << pad(la, 13, true) << ' ' << pad(lb, 13, true) << "  " << pad(la, 13, true) << ' '
      << lb << '\n';
  out << pad("Attribute", w, true) << "    p_m    FNR    FPR    FNR    FPR    Pos    Neg    Pos    Neg\n";
  for (const auto& ra : a.rows) {
    const auto& rb = find_row(b, ra.attribute);
    out << pad(ra.attribute, w, true) << ' ' << pad(text_cell(ra.prior), 6) << ' ' << pad(text_cell(ra.rates.fnr), 6)
        << ' ' << pad(text_cell(ra.rates.fpr), 6) << ' ' << pad(text_cell(rb.rates.fnr), 6) << ' '
        << pad(text_cell(rb.rates.fpr), 6) << ' ' << pad(text_cell(ra.energy_pos), 6) << ' '
        << pad(text_cell(ra.energy_neg), 6) << ' ' << pad(text_cell(rb.energy_pos), 6) << ' '
        << pad(text_cell(rb.energy_neg), 6) << '\n';
  }
}

}  // namespace attrcam
