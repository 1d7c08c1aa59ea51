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

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "attrcam/csv.hpp"
#include "attrcam/errors.hpp"
#include "attrcam/evaluation.hpp"
#include "test_support.hpp"

namespace attrcam {
namespace {

using testing::gap_linear;
using testing::random_model;
using testing::random_tensor;

LabelMatrix column(std::initializer_list<int> v) { return LabelMatrix(v.size(), 1, std::vector<int>(v)); }

// --- error rates -------------------------------------------------------------

TEST(ErrorRates, PerfectPredictions) {
  const auto labels = column({1, -1, 1, -1});
  const auto r = error_rates(labels, labels).front();
  EXPECT_EQ(*r.fnr, 0.0);
  EXPECT_EQ(*r.fpr, 0.0);
}

TEST(ErrorRates, AllPositiveOnBalancedLabels) {
  const auto r = error_rates(column({1, 1, 1, 1}), column({1, 1, -1, -1})).front();
  EXPECT_EQ(*r.fnr, 0.0);
  EXPECT_EQ(*r.fpr, 1.0);
}

TEST(ErrorRates, HandConfusionMatrix) {
  const auto r = error_rates(column({1, -1, -1, 1}), column({1, 1, -1, -1})).front();
  EXPECT_EQ(r.tp, 1u);
  EXPECT_EQ(r.fn, 1u);
  EXPECT_EQ(r.fp, 1u);
  EXPECT_EQ(r.tn, 1u);
  EXPECT_EQ(*r.fnr, 0.5);
  EXPECT_EQ(*r.fpr, 0.5);
}

TEST(ErrorRates, EmptyDenominatorIsNotAvailable) {
  const auto r = error_rates(column({1, -1}), column({-1, -1})).front();
  EXPECT_FALSE(r.fnr.has_value());
  ASSERT_TRUE(r.fpr.has_value());
  EXPECT_EQ(*r.fpr, 0.5);
}

TEST(ErrorRates, ShapeMismatch) {
  EXPECT_THROW(error_rates(column({1, -1}), column({1, -1, 1})), DimensionError);
}

TEST(ErrorRates, MatchesBruteForceOnRandomMatrices) {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(20), m = 1 + rng.below(4);
    std::vector<int> d(n * m), t(n * m);
    for (auto& v : d) v = rng.uniform() < 0.5 ? 1 : -1;
    for (auto& v : t) v = rng.uniform() < 0.3 ? 1 : -1;
    const auto rates = error_rates(LabelMatrix(n, m, d), LabelMatrix(n, m, t));
    ASSERT_EQ(rates.size(), m);
    for (std::size_t a = 0; a < m; ++a) {
      double fn = 0, tp = 0, fp = 0, tn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const int dv = d[i * m + a], tv = t[i * m + a];
        if (tv > 0) (dv > 0 ? tp : fn) += 1;
        else (dv > 0 ? fp : tn) += 1;
      }
      ASSERT_EQ(rates[a].fnr.has_value(), fn + tp > 0);
      ASSERT_EQ(rates[a].fpr.has_value(), fp + tn > 0);
      if (fn + tp > 0) {
        ASSERT_EQ(*rates[a].fnr, fn / (fn + tp));
      }
      if (fp + tn > 0) {
        ASSERT_EQ(*rates[a].fpr, fp / (fp + tn));
      }
    }
  }
}

// --- proportional energy -----------------------------------------------------

TEST(ProportionalEnergy, HandExample) {
  EXPECT_DOUBLE_EQ(proportional_energy(Tensor::matrix({{1, 1}, {0, 2}}), Tensor::matrix({{1, 0}, {0, 1}})), 0.75);
}

TEST(ProportionalEnergy, ZeroMapIsZero) {
  EXPECT_EQ(proportional_energy(Tensor(Shape{4, 4}), Tensor(Shape{4, 4}, 1.0)), 0.0);
}

TEST(ProportionalEnergy, FullMaskIsOneAndComplementSumsToOne) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor map = random_tensor(rng, {8, 8}, 0.0, 1.0);
    Tensor mask(Shape{8, 8}), complement(Shape{8, 8});
    for (std::size_t i = 0; i < 64; ++i) {
      mask[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;
      complement[i] = 1.0 - mask[i];
    }
    EXPECT_DOUBLE_EQ(proportional_energy(map, Tensor(Shape{8, 8}, 1.0)), 1.0);
    EXPECT_NEAR(proportional_energy(map, mask) + proportional_energy(map, complement), 1.0, 1e-12);
  }
}

TEST(ProportionalEnergy, ScaleInvariant) {
  Rng rng(13);
  const Tensor map = random_tensor(rng, {8, 8}, 0.0, 1.0);
  Tensor m(Shape{8, 8});
  for (std::size_t i = 10; i < 30; ++i) m[i] = 1.0;
  EXPECT_NEAR(proportional_energy(map * 7.5, m), proportional_energy(map, m), 1e-15);
}

TEST(ProportionalEnergy, Errors) {
  EXPECT_THROW(proportional_energy(Tensor(Shape{2, 2}), Tensor(Shape{2, 3})), DimensionError);
  EXPECT_THROW(proportional_energy(Tensor::matrix({{1, -0.5}}), Tensor::matrix({{1, 1}})), UsageError);
}

// --- report assembly ---------------------------------------------------------

SampleEnergy energy(std::size_t s, std::size_t a, int label, int predicted, double e) {
  return SampleEnergy{s, a, CamMethod::GradCam, label, predicted, predicted > 0 ? 1.0 : -1.0, e};
}

TEST(AssembleReport, MeansSplitByPredictedSign) {
  const LabelMatrix labels(3, 1, {1, -1, -1});
  const std::vector<SampleEnergy> e{energy(0, 0, 1, 1, 0.8), energy(1, 0, -1, 1, 0.4), energy(2, 0, -1, -1, 0.1)};
  const auto r = assemble_report({"A"}, labels, e, CamMethod::GradCam, TargetMode::Predicted);
  ASSERT_EQ(r.rows.size(), 1u);
  const auto& row = r.rows[0];
  EXPECT_NEAR(*row.energy_pos, 0.6, 1e-15);
  EXPECT_EQ(*row.energy_neg, 0.1);
  EXPECT_EQ(row.n_pos_pred, 2u);
  EXPECT_EQ(row.n_neg_pred, 1u);
  EXPECT_EQ(*row.rates.fnr, 0.0);
  EXPECT_EQ(*row.rates.fpr, 0.5);
  EXPECT_NEAR(row.prior, 1.0 / 3.0, 1e-15);

  ReportOptions correct;
  correct.correct_only = true;
  const auto rc = assemble_report({"A"}, labels, e, CamMethod::GradCam, TargetMode::Predicted, correct);
  EXPECT_EQ(*rc.rows[0].energy_pos, 0.8);
  EXPECT_EQ(rc.rows[0].n_pos_pred, 2u);
}

TEST(AssembleReport, EmptyGroupIsNotAvailable) {
  const LabelMatrix labels(2, 1, {1, -1});
  const auto r = assemble_report({"A"}, labels, {energy(0, 0, 1, 1, 0.5), energy(1, 0, -1, 1, 0.2)},
                                 CamMethod::GradCam, TargetMode::Predicted);
  EXPECT_TRUE(r.rows[0].energy_pos.has_value());
  EXPECT_FALSE(r.rows[0].energy_neg.has_value());
  std::ostringstream csv, text;
  write_report_csv(r, csv);
  write_report_text(r, text);
  EXPECT_NE(csv.str().find(",NA,"), std::string::npos);
  EXPECT_NE(text.str().find("n/a"), std::string::npos);
}

TEST(AssembleReport, OrderedByDistanceFromBalance) {
  const LabelMatrix labels(2, 2, {1, 1, -1, -1});
  std::vector<SampleEnergy> e;
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t a = 0; a < 2; ++a) e.push_back(energy(s, a, labels(s, a), 1, 0.5));
  }
  ReportOptions opt;
  opt.priors = ClassPriors{{0.05, 0.51}};
  const auto r = assemble_report({"Rare", "Even"}, labels, e, CamMethod::GradCam, TargetMode::Predicted, opt);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].attribute, "Even");
  EXPECT_EQ(r.rows[0].prior, 0.51);
  EXPECT_EQ(r.rows[1].attribute, "Rare");
}

TEST(AssembleReport, IncompleteCoverageRejected) {
  const LabelMatrix labels(2, 1, {1, -1});
  EXPECT_THROW(assemble_report({"A"}, labels, {energy(0, 0, 1, 1, 0.5)}, CamMethod::GradCam, TargetMode::Predicted),
               UsageError);
  EXPECT_THROW(assemble_report({"A", "B"}, labels, {}, CamMethod::GradCam, TargetMode::Predicted), DimensionError);
}

TEST(ReportCsv, HeaderAndParse) {
  const LabelMatrix labels(2, 1, {1, -1});
  const auto r = assemble_report({"A"}, labels, {energy(0, 0, 1, 1, 0.5), energy(1, 0, -1, -1, 0.25)},
                                 CamMethod::GradCam, TargetMode::Predicted);
  std::stringstream csv;
  write_report_csv(r, csv);
  const CsvTable t = read_csv(csv);
  std::ostringstream header;
  write_csv_row(header, t.header);
  EXPECT_EQ(header.str(), std::string(kReportCsvHeader) + "\n");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0], (std::vector<std::string>{"A", "0.5", "0", "0", "0.5", "0.25", "1", "1"}));
}

// --- end to end on a small model -----------------------------------------------

Dataset toy_dataset(Rng& rng, std::size_t n, std::size_t side, std::vector<std::string> attributes) {
  Dataset d;
  d.attributes = std::move(attributes);
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.name = std::to_string(i) + ".png";
    s.image = random_tensor(rng, {1, side, side}, 0.0, 1.0);
    for (std::size_t a = 0; a < d.attributes.size(); ++a) s.labels.push_back(i % (a + 2) == 0 ? 1 : -1);
    d.samples.push_back(std::move(s));
  }
  return d;
}

MaskCatalog full_catalog(const std::vector<std::string>& attributes, std::size_t grid, std::size_t block) {
  MaskCatalog c;
  std::vector<std::uint8_t> cells(grid * grid, 0);
  for (std::size_t i = 0; i < grid * grid / 2; ++i) cells[i] = 1;
  c.add_mask(BlockMask("Top", grid, block, cells));
  for (const auto& a : attributes) c.assign(a, "Top");
  return c;
}

TEST(BuildReport, TwoAttributeToyRunPopulatesEveryCell) {
  Rng rng(14);
  Architecture arch;
  arch.image_size = 8;
  arch.channels = {3};
  const AttributeModel model = random_model(rng, arch, 2);
  Dataset data = toy_dataset(rng, 40, 8, {"attr0", "attr1"});
  const MaskCatalog catalog = full_catalog(data.attributes, arch.feature_grid(), 8 / arch.feature_grid());
  // Relabel so both predicted signs occur for both attributes.
  const Tensor z = predict_logits(model, data.batch([&] {
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
  }()));
  double median[2];
  for (std::size_t a = 0; a < 2; ++a) {
    std::vector<double> col;
    for (std::size_t i = 0; i < data.size(); ++i) col.push_back(z[i * 2 + a]);
    std::sort(col.begin(), col.end());
    median[a] = col[col.size() / 2];
  }
  AttributeModel shifted(model.architecture(), model.blocks(), model.head_weight(),
                         model.head_bias() - Tensor::vector({median[0], median[1]}), model.attributes());
  const auto r = build_report(shifted, data, CamMethod::GradCam, TargetMode::Predicted, catalog);
  ASSERT_EQ(r.rows.size(), 2u);
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.rates.fnr && row.rates.fpr);
    EXPECT_TRUE(row.energy_pos && row.energy_neg);
    EXPECT_EQ(row.n_pos_pred + row.n_neg_pred, data.size());
    EXPECT_GE(*row.energy_pos, 0.0);
    EXPECT_LE(*row.energy_pos, 1.0);
  }
}

TEST(BuildReport, UncoveredAttributeIsConfigError) {
  Rng rng(15);
  Architecture arch;
  arch.image_size = 8;
  arch.channels = {2};
  const AttributeModel model = random_model(rng, arch, 2);
  const Dataset data = toy_dataset(rng, 4, 8, {"attr0", "attr1"});
  const MaskCatalog catalog = full_catalog({"attr0"}, arch.feature_grid(), 8 / arch.feature_grid());
  try {
    build_report(model, data, CamMethod::GradCam, TargetMode::Predicted, catalog);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("attr1"), std::string::npos) << e.what();
  }
}

TEST(BuildReport, IndependentOfWorkerCount) {
  Rng rng(16);
  Architecture arch;
  arch.image_size = 8;
  arch.channels = {3};
  const AttributeModel model = random_model(rng, arch, 2);
  const Dataset data = toy_dataset(rng, 150, 8, {"attr0", "attr1"});
  const MaskCatalog catalog = full_catalog(data.attributes, arch.feature_grid(), 8 / arch.feature_grid());
  const std::vector<CamMethod> methods(kAllCamMethods.begin(), kAllCamMethods.end());
  const auto one = sample_energies(model, data, methods, TargetMode::Predicted, catalog, 1);
  const auto three = sample_energies(model, data, methods, TargetMode::Predicted, catalog, 3);
  ASSERT_EQ(one.size(), data.size() * 2 * 4);
  ASSERT_EQ(one.size(), three.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].sample, three[i].sample);
    EXPECT_EQ(one[i].energy, three[i].energy);
  }
}

TEST(PairedReport, ColumnsForBothModels) {
  const LabelMatrix labels(2, 1, {1, -1});
  const auto a = assemble_report({"A"}, labels, {energy(0, 0, 1, 1, 0.5), energy(1, 0, -1, -1, 0.25)},
                                 CamMethod::GradCam, TargetMode::Predicted);
  const auto b = assemble_report({"A"}, labels, {energy(0, 0, 1, -1, 0.1), energy(1, 0, -1, -1, 0.3)},
                                 CamMethod::GradCam, TargetMode::Predicted);
  std::stringstream csv;
  write_paired_csv(a, b, "u", "b", csv);
  const CsvTable t = read_csv(csv);
  EXPECT_EQ(t.header.size(), 10u);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][2], "0");  // fnr of a
  EXPECT_EQ(t.rows[0][4], "1");  // fnr of b
  EXPECT_EQ(t.rows[0][8], "NA");  // b has no positive predictions
  std::ostringstream text;
  write_paired_text(a, b, "u", "b", text);
  EXPECT_NE(text.str().find("u"), std::string::npos);
}

}  // namespace
}  // namespace attrcam
