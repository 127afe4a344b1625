#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "detcal/core.hpp"
#include "detcal/random.hpp"
#include "test_support.hpp"

using namespace detcal;
using detcal::testing::make_record;

TEST(Elements, NamesRoundTrip) {
  for (Element e : kAllElements) {
    auto parsed = parse_element(element_name(e));
    ASSERT_TRUE(parsed.has_value());
    EXPECT_EQ(*parsed, e);
  }
  EXPECT_FALSE(parse_element("theta").has_value());
  EXPECT_EQ(element_name(Element::cos_theta), "cos_theta");
  EXPECT_EQ(element_name(Element::log_w), "log_w");
}

TEST(Dataset, ZeroVarianceNamesRecordAndElement) {
  auto r = make_record("det-17", 0.5, 1);
  r.marginals[index_of(Element::dy)].variance = 0.0;
  try {
    validate_dataset({r});
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.violations().size(), 1u);
    std::string msg = e.what();
    EXPECT_NE(msg.find("det-17"), std::string::npos);
    EXPECT_NE(msg.find("dy"), std::string::npos);
  }
}

TEST(Dataset, SingleRecord) {
  auto d = validate_dataset({make_record("a", 0.3, 0)});
  EXPECT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].id, "a");
}

TEST(Dataset, EmptyIsRejected) { EXPECT_THROW(validate_dataset({}), DataError); }

TEST(Dataset, OneBadScoreAmongHundred) {
  std::vector<DetectionRecord> rs;
  for (int i = 0; i < 100; ++i) rs.push_back(make_record("r" + std::to_string(i), 0.5, i % 2));
  rs[42].score = 1.2;
  auto report = check_records(rs);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].index, 42u);
  EXPECT_EQ(report.violations[0].id, "r42");
  EXPECT_EQ(report.accepted.size(), 99u);
  EXPECT_THROW(validate_dataset(rs), ValidationError);
}

TEST(Dataset, RecordProblems) {
  EXPECT_TRUE(record_problems(make_record("ok", 0.0, 0)).empty());
  EXPECT_TRUE(record_problems(make_record("ok", 1.0, 1)).empty());
  EXPECT_FALSE(record_problems(make_record("bad", -0.01, 0)).empty());
  EXPECT_FALSE(record_problems(make_record("bad", 0.5, 2)).empty());
  auto r = make_record("nan", 0.5, 0);
  r.ground_truth[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(record_problems(r).empty());
  r = make_record("inf", 0.5, 0);
  r.marginals[3].mean = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(record_problems(r).empty());
  r = make_record("neg", 0.5, 0);
  r.marginals[5].variance = -1.0;
  EXPECT_FALSE(record_problems(r).empty());
}

// Property: check_records partitions its input; accepted records are exactly
// those without problems, in their original order.
TEST(Dataset, CheckRecordsPartitionProperty) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<DetectionRecord> rs;
    std::size_t bad = 0;
    for (int i = 0; i < 40; ++i) {
      auto r = make_record("r" + std::to_string(i), rng.uniform(), static_cast<int>(rng.below(2)));
      if (rng.uniform() < 0.2) {
        r.marginals[rng.below(6)].variance = -rng.uniform();
        ++bad;
      }
      rs.push_back(r);
    }
    auto report = check_records(rs);
    EXPECT_EQ(report.violations.size(), bad);
    EXPECT_EQ(report.accepted.size() + report.violations.size(), rs.size());
    std::size_t k = 0;
    for (const auto& r : rs) {
      if (record_problems(r).empty()) {
        ASSERT_LT(k, report.accepted.size());
        EXPECT_EQ(report.accepted[k++], r);
      }
    }
  }
}

TEST(Isotonic, KnotValidation) {
  EXPECT_NO_THROW(IsotonicMap({{0.0, 0.0}, {0.5, 0.5}, {1.0, 1.0}}));
  EXPECT_NO_THROW(IsotonicMap({{0.2, 0.4}, {0.3, 0.4}}));
  EXPECT_THROW(IsotonicMap({}), DataError);
  EXPECT_THROW(IsotonicMap({{0.5, 0.1}, {0.5, 0.2}}), DataError);
  EXPECT_THROW(IsotonicMap({{0.1, 0.5}, {0.2, 0.4}}), DataError);
  EXPECT_THROW(IsotonicMap({{0.1, 1.5}}), DataError);
  EXPECT_THROW(IsotonicMap({{-0.1, 0.5}}), DataError);
}

TEST(Temperature, MustBePositive) {
  TemperatureModel m;
  for (Element e : kAllElements) EXPECT_EQ(m[e], 1.0);
  EXPECT_THROW(TemperatureModel({1, 1, 0, 1, 1, 1}), DataError);
  EXPECT_THROW(TemperatureModel({1, 1, 1, 1, std::numeric_limits<double>::infinity(), 1}), DataError);
}

TEST(Bundle, ActiveWithoutModelIsInvalid) {
  RecalibrationBundle b;
  EXPECT_NO_THROW(b.validate());
  b[Element::dx].active = ActiveRecalibrator::temperature;
  EXPECT_THROW(b.validate(), DataError);
  b[Element::dx].temperature = 2.0;
  EXPECT_NO_THROW(b.validate());
  EXPECT_EQ(b.temperature_model()[Element::dx], 2.0);
  EXPECT_EQ(b.temperature_model()[Element::dy], 1.0);
  b[Element::dy].active = ActiveRecalibrator::isotonic;
  EXPECT_THROW(b.validate(), DataError);
}

TEST(Curve, WeightsMustSumToOne) {
  CalibrationCurve c;
  c.points = {{0.25, 0.2, 0.5, 1}, {0.75, 0.8, 0.5, 1}};
  EXPECT_NO_THROW(validate_curve(c));
  c.points[1].weight = 0.4;
  EXPECT_THROW(validate_curve(c), DataError);
  c.points[1] = {0.75, std::nullopt, 0.5, 0};
  EXPECT_THROW(validate_curve(c), DataError);
  EXPECT_EQ(column_name(c), "cls");
  c.element = Element::log_l;
  EXPECT_EQ(column_name(c), "log_l");
}
