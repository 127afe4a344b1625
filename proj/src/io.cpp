#include "detcal/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

namespace detcal::io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json element_order() {
  ordered_json names = ordered_json::array();
  for (Element e : kAllElements) names.push_back(std::string(element_name(e)));
  return names;
}

ordered_json map_to_json(const IsotonicMap& map) {
  ordered_json in = ordered_json::array(), out = ordered_json::array();
  for (const auto& k : map.knots()) {
    in.push_back(k.input);
    out.push_back(k.output);
  }
  return ordered_json{{"input", std::move(in)}, {"output", std::move(out)}};
}

// Parse failures carry a context prefix ("line 7", "bundle") added by callers.
struct ParseFailure {
  std::string message;
};

[[noreturn]] void fail(std::string message) { throw ParseFailure{std::move(message)}; }

void require_keys(const json& obj, std::initializer_list<std::string_view> required,
                  std::initializer_list<std::string_view> optional = {}) {
  if (!obj.is_object()) fail("expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                       std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) fail("unknown field '" + key + "'");
  }
  for (auto key : required) {
    if (!obj.contains(std::string(key))) fail("missing field '" + std::string(key) + "'");
  }
}

double number(const json& v, std::string_view what) {
  if (!v.is_number()) fail(std::string(what) + " must be a number");
  return v.get<double>();
}

std::array<double, kNumElements> six_numbers(const json& v, std::string_view what) {
  if (!v.is_array() || v.size() != kNumElements) fail(std::string(what) + " must be an array of 6 numbers");
  std::array<double, kNumElements> out{};
  for (std::size_t i = 0; i < kNumElements; ++i) out[i] = number(v[i], what);
  return out;
}

void check_header_common(const json& h, std::string_view format) {
  if (!h["format"].is_string() || h["format"].get<std::string>() != format) {
    fail("expected format '" + std::string(format) + "'");
  }
  if (!h["version"].is_number_integer() || h["version"].get<long long>() != kSchemaVersion) {
    fail("incompatible schema version " + h["version"].dump() + " (supported: " + std::to_string(kSchemaVersion) +
         ")");
  }
  const auto& names = h["elements"];
  bool match = names.is_array() && names.size() == kNumElements;
  for (std::size_t i = 0; match && i < kNumElements; ++i) {
    match = names[i].is_string() && names[i].get<std::string>() == element_name(kAllElements[i]);
  }
  if (!match) fail("element order " + names.dump() + " does not match " + element_order().dump());
}

IsotonicMap map_from_json(const json& v) {
  require_keys(v, {"input", "output"});
  const auto& in = v["input"];
  const auto& out = v["output"];
  if (!in.is_array() || !out.is_array() || in.size() != out.size()) {
    fail("isotonic map needs input and output arrays of equal length");
  }
  std::vector<Knot> knots;
  knots.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) knots.push_back({number(in[i], "knot input"), number(out[i], "knot output")});
  try {
    return IsotonicMap(std::move(knots));
  } catch (const DataError& e) {
    fail(e.what());
  }
}

std::vector<IsotonicMap> chain_from_json(const json& v) {
  if (!v.is_array()) fail("annotation chain must be an array of maps");
  std::vector<IsotonicMap> chain;
  for (const auto& m : v) chain.push_back(map_from_json(m));
  return chain;
}

ordered_json annotation_to_json(const Annotation& a) {
  ordered_json out = ordered_json::object();
  if (!a.classification.empty()) {
    ordered_json chain = ordered_json::array();
    for (const auto& m : a.classification) chain.push_back(map_to_json(m));
    out["classification"] = std::move(chain);
  }
  ordered_json regression = ordered_json::object();
  for (Element e : kAllElements) {
    const auto& maps = a.regression[index_of(e)];
    if (maps.empty()) continue;
    ordered_json chain = ordered_json::array();
    for (const auto& m : maps) chain.push_back(map_to_json(m));
    regression[std::string(element_name(e))] = std::move(chain);
  }
  if (!regression.empty()) out["regression"] = std::move(regression);
  return out;
}

Annotation annotation_from_json(const json& v) {
  require_keys(v, {}, {"classification", "regression"});
  Annotation a;
  if (v.contains("classification")) a.classification = chain_from_json(v["classification"]);
  if (v.contains("regression")) {
    const auto& reg = v["regression"];
    if (!reg.is_object()) fail("annotation regression must be an object keyed by element");
    for (const auto& [key, chain] : reg.items()) {
      const auto e = parse_element(key);
      if (!e) fail("unknown element '" + key + "' in annotation");
      a.regression[index_of(*e)] = chain_from_json(chain);
    }
  }
  return a;
}

DetectionRecord record_from_json(const json& v) {
  require_keys(v, {"id", "score", "label", "mean", "var", "gt"});
  DetectionRecord r;
  if (!v["id"].is_string()) fail("id must be a string");
  r.id = v["id"].get<std::string>();
  r.score = number(v["score"], "score");
  if (!v["label"].is_number_integer()) fail("label must be an integer");
  const auto label = v["label"].get<long long>();
  if (label != 0 && label != 1) fail("label " + std::to_string(label) + " is not binary");
  r.label = static_cast<int>(label);
  const auto mean = six_numbers(v["mean"], "mean");
  const auto var = six_numbers(v["var"], "var");
  r.ground_truth = six_numbers(v["gt"], "gt");
  for (std::size_t i = 0; i < kNumElements; ++i) r.marginals[i] = {mean[i], var[i]};
  return r;
}

ordered_json record_to_json(const DetectionRecord& r) {
  ordered_json mean = ordered_json::array(), var = ordered_json::array(), gt = ordered_json::array();
  for (std::size_t i = 0; i < kNumElements; ++i) {
    mean.push_back(r.marginals[i].mean);
    var.push_back(r.marginals[i].variance);
    gt.push_back(r.ground_truth[i]);
  }
  return ordered_json{{"id", r.id},          {"score", r.score}, {"label", r.label},
                      {"mean", std::move(mean)}, {"var", std::move(var)}, {"gt", std::move(gt)}};
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

void write_dump(std::ostream& os, const Dataset& dataset, const Annotation& annotation) {
  ordered_json header{{"format", kDumpFormat}, {"version", kSchemaVersion}, {"elements", element_order()}};
  if (!annotation.empty()) header["annotation"] = annotation_to_json(annotation);
  os << header.dump() << '\n';
  for (const auto& r : dataset) os << record_to_json(r).dump() << '\n';
}

Dump read_dump(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  Annotation annotation;
  bool have_header = false;
  std::vector<DetectionRecord> records;
  std::vector<std::size_t> record_lines;

  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      const json v = json::parse(line);
      if (!have_header) {
        require_keys(v, {"format", "version", "elements"}, {"annotation"});
        check_header_common(v, kDumpFormat);
        if (v.contains("annotation")) annotation = annotation_from_json(v["annotation"]);
        have_header = true;
      } else {
        records.push_back(record_from_json(v));
        record_lines.push_back(line_no);
      }
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    } catch (const ParseFailure& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.message);
    }
  }
  if (!have_header) throw DataError("dump is empty: missing header line");
  if (records.empty()) throw DataError("dump contains no records");

  auto report = check_records(std::move(records));
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw DataError("line " + std::to_string(record_lines[v.index]) + ": record '" + v.id + "': " + v.reason +
                    (report.violations.size() > 1
                         ? " (" + std::to_string(report.violations.size()) + " invalid records in total)"
                         : std::string()));
  }
  return {validate_dataset(std::move(report.accepted)), std::move(annotation)};
}

void write_dump_file(const std::filesystem::path& path, const Dataset& dataset, const Annotation& annotation) {
  auto out = open_out(path);
  write_dump(out, dataset, annotation);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

Dump read_dump_file(const std::filesystem::path& path) {
  std::istringstream in(read_all(path));
  try {
    return read_dump(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_bundle(std::ostream& os, const RecalibrationBundle& bundle) {
  bundle.validate();
  ordered_json doc{{"format", kBundleFormat},
                   {"version", kSchemaVersion},
                   {"elements", element_order()},
                   {"provenance", {{"dataset", bundle.provenance.dataset_id}, {"fitted_at", bundle.provenance.fitted_at}}}};
  doc["classification"] = bundle.classification ? map_to_json(*bundle.classification) : ordered_json(nullptr);
  ordered_json regression = ordered_json::array();
  for (Element e : kAllElements) {
    const auto& rc = bundle[e];
    ordered_json entry{{"element", std::string(element_name(e))}, {"active", std::string(active_name(rc.active))}};
    entry["temperature"] = rc.temperature ? ordered_json(*rc.temperature) : ordered_json(nullptr);
    entry["isotonic"] = rc.isotonic ? map_to_json(*rc.isotonic) : ordered_json(nullptr);
    regression.push_back(std::move(entry));
  }
  doc["regression"] = std::move(regression);
  os << doc.dump(1) << '\n';
}

RecalibrationBundle read_bundle(std::istream& is) {
  try {
    const json doc = json::parse(is);
    require_keys(doc, {"format", "version", "elements", "provenance", "classification", "regression"});
    check_header_common(doc, kBundleFormat);

    RecalibrationBundle bundle;
    const auto& prov = doc["provenance"];
    require_keys(prov, {"dataset", "fitted_at"});
    if (!prov["dataset"].is_string() || !prov["fitted_at"].is_string()) fail("provenance fields must be strings");
    bundle.provenance = {prov["dataset"].get<std::string>(), prov["fitted_at"].get<std::string>()};

    if (!doc["classification"].is_null()) bundle.classification = map_from_json(doc["classification"]);

    const auto& regression = doc["regression"];
    if (!regression.is_array() || regression.size() != kNumElements) fail("regression must list all six elements");
    for (std::size_t i = 0; i < kNumElements; ++i) {
      const auto& entry = regression[i];
      require_keys(entry, {"element", "active", "temperature", "isotonic"});
      const Element e = kAllElements[i];
      if (entry["element"] != std::string(element_name(e))) fail("regression entries out of element order");
      if (!entry["active"].is_string()) fail("active must be a string");
      const auto active = parse_active(entry["active"].get<std::string>());
      if (!active) fail("unknown active recalibrator " + entry["active"].dump());
      auto& rc = bundle[e];
      rc.active = *active;
      if (!entry["temperature"].is_null()) rc.temperature = number(entry["temperature"], "temperature");
      if (!entry["isotonic"].is_null()) rc.isotonic = map_from_json(entry["isotonic"]);
    }
    bundle.validate();
    return bundle;
  } catch (const json::exception& e) {
    throw DataError(std::string("bundle: malformed JSON: ") + e.what());
  } catch (const ParseFailure& e) {
    throw DataError("bundle: " + e.message);
  }
}

void write_bundle_file(const std::filesystem::path& path, const RecalibrationBundle& bundle) {
  auto out = open_out(path);
  write_bundle(out, bundle);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

RecalibrationBundle read_bundle_file(const std::filesystem::path& path) {
  std::istringstream in(read_all(path));
  try {
    return read_bundle(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string fingerprint(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

std::string file_fingerprint(const std::filesystem::path& path) { return fingerprint(read_all(path)); }

}  // namespace detcal::io
