/* Copyright 2026 The IWAN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include "json.hpp"

#include "iwan/error.hpp"
#include "iwan/report.hpp"

namespace iwan {
namespace {

AdaptEpochRecord epoch_record(std::size_t e) {
  AdaptEpochRecord r;
  r.epoch = e;
  r.lambda = 0.01 * static_cast<double>(e);
  r.d_loss = 1.2345678901234567;
  r.d0_loss = 0.7;
  r.entropy_loss = 0.05;
  r.weight_mean = 1.0;
  r.weight_std = 0.3;
  if (e % 2 == 0) r.mean_shared_weight = 1.4;
  r.target_accuracy = 0.5;
  return r;
}

RunReport sample_report() {
  RunReport r = make_run_report(TrainConfig{}, {{"source_classes", "4"}});
  record_pretrain_epoch(r, {0, 1.1, 0.4});
  record_pretrain_epoch(r, {1, 0.3, 0.9});
  for (std::size_t e = 0; e < 3; ++e) record_epoch(r, epoch_record(e));
  EvalResult eval{0.75, {1.0, 0.5, std::nullopt}, {{2, 0, 0}, {1, 1, 0}, {0, 0, 0}}};
  finalize(r, eval, std::vector<double>{1.5, 1.5, 0.5, 0.5}, std::vector<int>{0, 1, 2, 2},
           {0, 1});
  r.wall_time_seconds = 1.25;
  return r;
}

TEST(RunReportTest, FirstEpochGivesLengthOne) {
  RunReport r = make_run_report(TrainConfig{});
  record_epoch(r, epoch_record(0));
  EXPECT_EQ(r.epochs.size(), 1u);
  EXPECT_EQ(r.variant, "weighted");
  EXPECT_EQ(r.schema_version, 1);
}

TEST(RunReportTest, OutOfOrderEpochIsContractError) {
  RunReport r = make_run_report(TrainConfig{});
  EXPECT_THROW(record_epoch(r, epoch_record(1)), ContractError);
  record_epoch(r, epoch_record(0));
  EXPECT_THROW(record_epoch(r, epoch_record(0)), ContractError);
  EXPECT_THROW(record_epoch(r, epoch_record(2)), ContractError);
  auto bad = epoch_record(1);
  bad.target_accuracy = 1.5;
  EXPECT_THROW(record_epoch(r, bad), ContractError);
}

TEST(RunReportTest, FinalizeComputesWeightRatio) {
  const RunReport r = sample_report();
  ASSERT_TRUE(r.final_metrics);
  EXPECT_NEAR(*r.final_metrics->weight_ratio, 1.0 / 3.0, 1e-15);
  RunReport perfect = make_run_report(TrainConfig{});
  finalize(perfect, EvalResult{1.0, {1.0}, {{3}}}, {}, {}, {});
  EXPECT_EQ(perfect.final_metrics->evaluation.accuracy, 1.0);
  EXPECT_FALSE(perfect.final_metrics->weight_ratio);
}

TEST(RunReportTest, SerializeParseRoundTrip) {
  const RunReport r = sample_report();
  const std::string text = serialize(r);
  const RunReport back = parse_run_report(text);
  EXPECT_EQ(serialize(back), text);
  EXPECT_EQ(back.epochs.size(), 3u);
  EXPECT_EQ(back.epochs[0].d_loss, round_report_value(1.2345678901234567));
  EXPECT_EQ(back.epochs[1].mean_shared_weight, std::nullopt);
  EXPECT_EQ(back.final_metrics->evaluation, r.final_metrics->evaluation);
  EXPECT_EQ(back.config, r.config);
  EXPECT_EQ(back.task, r.task);
  EXPECT_EQ(back.pretrain_epochs, r.pretrain_epochs);
}

TEST(RunReportTest, FieldOrderIsStableAndPrecisionIsTwelveDigits) {
  const std::string text = serialize(sample_report());
  const auto doc = nlohmann::ordered_json::parse(text);
  std::vector<std::string> keys;
  for (const auto& [k, v] : doc.items()) keys.push_back(k);
  ASSERT_GE(keys.size(), 2u);
  EXPECT_EQ(keys[0], "schema_version");
  EXPECT_NE(text.find("1.23456789012"), std::string::npos);
  EXPECT_EQ(text.find("1.234567890123"), std::string::npos);
  EXPECT_EQ(round_report_value(2.0 / 3.0), 0.666666666667);
}

TEST(RunReportTest, ParseRejectsBadInput) {
  EXPECT_THROW(parse_run_report("{"), DataError);
  auto doc = nlohmann::ordered_json::parse(serialize(sample_report()));
  doc["schema_version"] = 99;
  EXPECT_THROW(parse_run_report(doc.dump()), DataError);
}

TEST(EvalSerializeTest, Fields) {
  const auto doc = nlohmann::json::parse(serialize(EvalResult{0.5, {1.0, 0.0}, {{1, 0}, {1, 0}}}));
  EXPECT_EQ(doc.at("schema_version"), 1);
  EXPECT_EQ(doc.at("accuracy"), 0.5);
  EXPECT_EQ(doc.at("confusion")[1][0], 1);
}

std::vector<SweepRunResult> sample_runs() {
  return {{4, "weighted", 1, 0.8, std::nullopt},   {4, "weighted", 2, 0.9, std::nullopt},
          {4, "unweighted", 1, 0.8, std::nullopt}, {4, "unweighted", 2, 0.8, std::nullopt},
          {2, "weighted", 1, 0.7, 0.2},            {2, "weighted", 2, 0.9, 0.1},
          {2, "unweighted", 1, 0.5, 0.9},          {2, "unweighted", 2, 0.6, 1.0}};
}

TEST(SweepTest, MeanAndPopulationStd) {
  const auto s = summarize_sweep(sample_runs());
  ASSERT_EQ(s.cells.size(), 4u);
  EXPECT_EQ(s.cells[0].target_class_count, 4);
  EXPECT_EQ(s.cells[0].variant, "unweighted");
  EXPECT_EQ(s.cells[1].variant, "weighted");
  EXPECT_NEAR(s.cells[1].mean_accuracy, 0.85, 1e-15);
  EXPECT_NEAR(s.cells[1].std_accuracy, 0.05, 1e-15);
  EXPECT_EQ(s.cells[0].std_accuracy, 0.0);
}

TEST(SweepTest, GapIsWeightedMinusUnweighted) {
  const auto s = summarize_sweep(sample_runs());
  ASSERT_EQ(s.gaps.size(), 2u);
  EXPECT_EQ(s.gaps[0].target_class_count, 4);
  EXPECT_NEAR(s.gaps[0].gap, 0.05, 1e-15);
  EXPECT_EQ(s.gaps[1].target_class_count, 2);
  EXPECT_NEAR(s.gaps[1].gap, 0.25, 1e-15);
}

TEST(SweepTest, GapIsAntisymmetricUnderVariantSwap) {
  auto runs = sample_runs();
  const auto s = summarize_sweep(runs);
  for (auto& r : runs) r.variant = r.variant == "weighted" ? "unweighted" : "weighted";
  const auto swapped = summarize_sweep(runs);
  ASSERT_EQ(s.gaps.size(), swapped.gaps.size());
  for (std::size_t i = 0; i < s.gaps.size(); ++i) EXPECT_EQ(s.gaps[i].gap, -swapped.gaps[i].gap);
}

TEST(SweepTest, SingleRunHasZeroStd) {
  const std::vector<SweepRunResult> runs = {{3, "weighted", 5, 0.6, std::nullopt}};
  const auto s = summarize_sweep(runs);
  EXPECT_EQ(s.cells[0].std_accuracy, 0.0);
  EXPECT_TRUE(s.gaps.empty());
  EXPECT_TRUE(summarize_sweep({}).cells.empty());
}

TEST(SweepTest, MixedSeedSetsAreDataError) {
  auto runs = sample_runs();
  runs.back().seed = 3;
  EXPECT_THROW(summarize_sweep(runs), DataError);
  runs = sample_runs();
  runs.push_back(runs.front());
  EXPECT_THROW(summarize_sweep(runs), DataError);
}

TEST(SweepTest, SerializedDocumentsPopulationStd) {
  const auto doc = nlohmann::json::parse(serialize(summarize_sweep(sample_runs())));
  EXPECT_EQ(doc.at("std_kind"), "population");
  EXPECT_EQ(doc.at("cells").size(), 4u);
  EXPECT_EQ(doc.at("gaps")[1].at("gap"), 0.25);
}

}  // namespace
}  // namespace iwan
