#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "fixtures.hpp"

using namespace sxai;
using fixtures::state;

namespace {

Dataset two_class(std::size_t first, std::size_t second) {
  std::vector<std::pair<VehicleState, Behaviour>> rows;
  for (std::size_t i = 0; i < first; ++i)
    rows.emplace_back(state(true, Objective::waypoint, Progress::transiting, true, false), Behaviour::transit);
  for (std::size_t i = 0; i < second; ++i)
    rows.emplace_back(state(true, Objective::survey, Progress::executing, true, false), Behaviour::survey);
  return fixtures::make_dataset(rows);
}

std::size_t count_label(const Dataset& d, const std::vector<std::size_t>& rows, Behaviour b) {
  return static_cast<std::size_t>(
      std::ranges::count_if(rows, [&](std::size_t i) { return d.labels[i] == code_of(b); }));
}

}  // namespace

TEST(RecordFormat, ExactLine) {
  StateRecord r{"heron", 17, state(true, Objective::survey, Progress::executing, true, false), Behaviour::survey};
  EXPECT_EQ(format_record(r),
            "vessel=heron tick=17 ready_plan=true current_objective=survey progress_type=executing "
            "same_objective=true obstacle_found=false behaviour=survey");
  r.behaviour.reset();
  EXPECT_EQ(format_record(r),
            "vessel=heron tick=17 ready_plan=true current_objective=survey progress_type=executing "
            "same_objective=true obstacle_found=false");
}

TEST(RecordFormat, ParseInvertsFormat) {
  for (const auto& log : simulate(preset("single", 3)))
    for (const auto& r : log.records) EXPECT_EQ(parse_record(format_record(r)), r);
}

TEST(RecordFormat, ParseErrorCarriesLineNumber) {
  std::istringstream in(
      "vessel=heron tick=1 ready_plan=true current_objective=survey progress_type=executing "
      "same_objective=true obstacle_found=false behaviour=survey\n"
      "vessel=heron tick=two ready_plan=true\n");
  try {
    read_records(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse_error);
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(RecordFormat, UnknownBehaviourToken) {
  try {
    parse_record(
        "vessel=heron tick=1 ready_plan=true current_objective=survey progress_type=executing "
        "same_objective=true obstacle_found=false behaviour=fly");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unknown_category);
  }
}

TEST(LoadLog, TenLinesTenRows) {
  const auto dir = fixtures::scratch_dir("load10");
  const auto path = (dir / "ten.log").string();
  {
    std::ofstream out(path);
    for (int t = 0; t < 10; ++t)
      out << format_record({"heron", t, state(true, Objective::hold, Progress::executing, true, false),
                            Behaviour::hold_position})
          << '\n';
  }
  const auto d = load_log(path);
  EXPECT_EQ(d.size(), 10u);
  EXPECT_EQ(d.features.size(), 10u);
}

TEST(LoadLog, FullPresetHasFiveFeatureColumns) {
  const auto& d = fixtures::clean_data();
  EXPECT_GE(d.size(), 5056u);
  EXPECT_EQ(d.features.front().size(), kFeatureCount);
  EXPECT_EQ(d.features.size(), d.labels.size());
}

TEST(LoadLog, MissingFileIsIoError) {
  try {
    load_log("/nonexistent/sxai.log");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::io_error);
  }
}

TEST(LoadLog, RoundTripThroughLineFormat) {
  const auto& d = fixtures::trial_data();
  std::stringstream ss;
  write_records(ss, to_records(d));
  const auto back = to_dataset(read_records(ss));
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.vessels, d.vessels);
  EXPECT_EQ(back.ticks, d.ticks);
}

TEST(LoadLog, RoundTripThroughCsv) {
  const auto& d = fixtures::trial_data();
  std::stringstream ss;
  write_csv(ss, to_records(d));
  const auto back = to_dataset(read_csv(ss));
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_EQ(back.ticks, d.ticks);
}

TEST(LoadLog, CsvRejectsWrongHeader) {
  std::istringstream in("a,b,c\n");
  EXPECT_THROW(read_csv(in), Error);
}

TEST(StratifiedSplit, EvenClassesSplitExactly) {
  const auto d = two_class(50, 50);
  const auto s = stratified_split(d, 0.2, 1);
  EXPECT_EQ(s.test.size(), 20u);
  EXPECT_EQ(count_label(d, s.test, Behaviour::transit), 10u);
  EXPECT_EQ(count_label(d, s.test, Behaviour::survey), 10u);
}

TEST(StratifiedSplit, ImbalancedClassesUseLargestRemainder) {
  const auto d = two_class(90, 10);
  const auto s = stratified_split(d, 0.2, 1);
  EXPECT_EQ(count_label(d, s.test, Behaviour::transit), 18u);
  EXPECT_EQ(count_label(d, s.test, Behaviour::survey), 2u);
}

TEST(StratifiedSplit, RemainderGoesToLargestFraction) {
  // Quotas 3.5 / 1.5 / 0.9, total 6. Floors give 3+1+0; the two spare rows go to
  // the 0.9 remainder, then to the lower code among the tied 0.5s.
  std::vector<std::pair<VehicleState, Behaviour>> rows;
  for (int i = 0; i < 35; ++i) rows.emplace_back(VehicleState{}, Behaviour::wait);
  for (int i = 0; i < 15; ++i) rows.emplace_back(VehicleState{}, Behaviour::transit);
  for (int i = 0; i < 9; ++i) rows.emplace_back(VehicleState{}, Behaviour::survey);
  const auto d = fixtures::make_dataset(rows);
  const auto s = stratified_split(d, 0.1, 5);
  EXPECT_EQ(s.test.size(), 6u);
  EXPECT_EQ(count_label(d, s.test, Behaviour::wait), 4u);
  EXPECT_EQ(count_label(d, s.test, Behaviour::transit), 1u);
  EXPECT_EQ(count_label(d, s.test, Behaviour::survey), 1u);
}

TEST(StratifiedSplit, DeterministicPerSeed) {
  const auto& d = fixtures::clean_data();
  EXPECT_EQ(stratified_split(d, 0.25, 9), stratified_split(d, 0.25, 9));
  EXPECT_NE(stratified_split(d, 0.25, 9).test, stratified_split(d, 0.25, 10).test);
}

TEST(StratifiedSplit, SingletonClassIsDegenerate) {
  const auto d = two_class(10, 1);
  try {
    stratified_split(d, 0.2, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_class);
  }
}

TEST(StratifiedSplit, RejectsFractionOutsideOpenInterval) {
  const auto d = two_class(10, 10);
  EXPECT_THROW(stratified_split(d, 0.0, 1), Error);
  EXPECT_THROW(stratified_split(d, 1.0, 1), Error);
}

TEST(StratifiedSplit, PartitionsRowsAndKeepsProportions) {
  for (const auto* d : {&fixtures::clean_data(), &fixtures::ambiguous_data(), &fixtures::trial_data()}) {
    for (double frac : {0.1, 0.2, 0.33, 0.5}) {
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto s = stratified_split(*d, frac, seed);
        std::vector<std::size_t> all = s.train;
        all.insert(all.end(), s.test.begin(), s.test.end());
        std::ranges::sort(all);
        ASSERT_EQ(all.size(), d->size());
        for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);

        const auto counts = class_counts(*d);
        for (std::size_t c = 0; c < kBehaviourCount; ++c) {
          if (counts[c] < 25) continue;
          const double full = static_cast<double>(counts[c]) / static_cast<double>(d->size());
          for (const auto* part : {&s.train, &s.test}) {
            const double p = static_cast<double>(count_label(*d, *part, behaviour_from_code(c))) /
                             static_cast<double>(part->size());
            EXPECT_LT(std::abs(p - full), 0.02) << "class " << c << " fraction " << frac;
          }
        }
      }
    }
  }
}

TEST(StratifiedFolds, PartitionRowsInBalancedFolds) {
  const auto& d = fixtures::ambiguous_data();
  const auto rows = all_rows(d);
  const auto folds = stratified_folds(d.labels, rows, 5, 17);
  ASSERT_EQ(folds.size(), 5u);
  std::vector<std::size_t> all;
  for (const auto& f : folds) {
    EXPECT_LE(f.size(), d.size() / 5 + 1);
    EXPECT_GE(f.size(), d.size() / 5);
    all.insert(all.end(), f.begin(), f.end());
  }
  std::ranges::sort(all);
  EXPECT_EQ(all, rows);
  EXPECT_EQ(stratified_folds(d.labels, rows, 5, 17), folds);
  EXPECT_THROW(stratified_folds(d.labels, rows, 1, 17), Error);
}
