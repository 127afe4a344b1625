#include <gtest/gtest.h>

#include <sstream>

#include "detcal/io.hpp"
#include "detcal/recalibrate.hpp"
#include "detcal/synth.hpp"
#include "test_support.hpp"

using namespace detcal;
using namespace detcal::io;

namespace {

const std::string kHeader =
    R"({"format":"detcal-dump","version":1,"elements":["cos_theta","sin_theta","dx","dy","log_l","log_w"]})";
const std::string kRecord =
    R"({"id":"a","score":0.5,"label":1,"mean":[0,0,0,0,0,0],"var":[1,1,1,1,1,1],"gt":[0,0,0,0,0,0]})";

std::string error_of(const std::string& text) {
  std::istringstream is(text);
  try {
    read_dump(is);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Dump, RoundTripIsBitExact) {
  auto d = synth::generate(synth::standard_miscalibrated(300, 71));
  std::ostringstream os;
  write_dump(os, d);
  std::istringstream is(os.str());
  auto back = read_dump(is);
  EXPECT_EQ(back.dataset, d);
  EXPECT_TRUE(back.annotation.empty());
  std::ostringstream again;
  write_dump(again, back.dataset);
  EXPECT_EQ(again.str(), os.str());
}

TEST(Dump, AnnotationRoundTrip) {
  auto d = detcal::testing::from_truths({0.1, 0.2});
  Annotation a;
  a.classification.push_back(IsotonicMap({{0.1, 0.0}, {0.9, 1.0}}));
  a.regression[index_of(Element::dy)].push_back(IsotonicMap::identity());
  a.regression[index_of(Element::dy)].push_back(IsotonicMap({{0.3, 0.3333333333333333}}));
  std::ostringstream os;
  write_dump(os, d, a);
  std::istringstream is(os.str());
  auto back = read_dump(is);
  EXPECT_EQ(back.annotation, a);
  EXPECT_EQ(back.dataset, d);
}

TEST(Dump, Minimal) {
  std::istringstream is(kHeader + "\n" + kRecord + "\n\n");
  auto dump = read_dump(is);
  EXPECT_EQ(dump.dataset.size(), 1u);
  EXPECT_EQ(dump.dataset[0].id, "a");
}

TEST(Dump, UnknownFieldNamesLine) {
  std::string bad = kRecord;
  bad.insert(1, R"("extra":1,)");
  const auto msg = error_of(kHeader + "\n" + kRecord + "\n" + bad + "\n");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("extra"), std::string::npos) << msg;
}

TEST(Dump, MissingFieldAndBadValues) {
  EXPECT_NE(error_of(kHeader + "\n" + R"({"id":"a","score":0.5,"label":1,"mean":[0,0,0,0,0,0],"var":[1,1,1,1,1,1]})")
                .find("gt"),
            std::string::npos);
  std::string bad_var = kRecord;
  bad_var.replace(bad_var.find("\"var\":[1"), 8, "\"var\":[0");
  const auto msg = error_of(kHeader + "\n" + bad_var + "\n");
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("cos_theta"), std::string::npos) << msg;
  EXPECT_NE(error_of(kHeader + "\n{not json\n").find("line 2"), std::string::npos);
  std::string bad_label = kRecord;
  bad_label.replace(bad_label.find("\"label\":1"), 9, "\"label\":2");
  EXPECT_NE(error_of(kHeader + "\n" + bad_label).find("line 2"), std::string::npos);
}

TEST(Dump, HeaderChecks) {
  std::string v2 = kHeader;
  v2.replace(v2.find("\"version\":1"), 11, "\"version\":2");
  EXPECT_NE(error_of(v2 + "\n" + kRecord).find("incompatible schema version"), std::string::npos);
  std::string swapped = kHeader;
  swapped.replace(swapped.find("\"dx\",\"dy\""), 9, "\"dy\",\"dx\"");
  EXPECT_NE(error_of(swapped + "\n" + kRecord).find("element order"), std::string::npos);
  EXPECT_NE(error_of("").find("empty"), std::string::npos);
  EXPECT_NE(error_of(kHeader + "\n").find("no records"), std::string::npos);
}

TEST(Bundle, RoundTrip) {
  auto d = synth::generate(synth::standard_miscalibrated(2000, 72));
  for (auto method : {recalibrate::Method::isotonic, recalibrate::Method::temperature}) {
    recalibrate::FitOptions opts;
    opts.method = method;
    opts.provenance = {"fnv1a64:0123456789abcdef", "2024-01-01T00:00:00Z"};
    auto b = recalibrate::fit_bundle(d, {}, opts);
    std::ostringstream os;
    write_bundle(os, b);
    std::istringstream is(os.str());
    auto back = read_bundle(is);
    EXPECT_EQ(back, b);
    std::ostringstream again;
    write_bundle(again, back);
    EXPECT_EQ(again.str(), os.str());
  }
}

TEST(Bundle, RejectsWrongVersionAndUnknownFields) {
  RecalibrationBundle b;
  std::ostringstream os;
  write_bundle(os, b);
  std::string text = os.str();
  std::string v9 = text;
  v9.replace(v9.find("\"version\": 1"), 12, "\"version\": 9");
  std::istringstream is9(v9);
  EXPECT_THROW(read_bundle(is9), DataError);
  std::string extra = text;
  extra.insert(extra.find('{') + 1, "\"surprise\": true,");
  std::istringstream ise(extra);
  EXPECT_THROW(read_bundle(ise), DataError);
}

TEST(Fingerprint, KnownValues) {
  // FNV-1a 64-bit reference values
  EXPECT_EQ(fingerprint(""), "fnv1a64:cbf29ce484222325");
  EXPECT_EQ(fingerprint("a"), "fnv1a64:af63dc4c8601ec8c");
  EXPECT_NE(fingerprint("ab"), fingerprint("ba"));
}
