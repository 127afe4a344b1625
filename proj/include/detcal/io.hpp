#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "detcal/core.hpp"

namespace detcal::io {

// Detection dump: JSON lines. The first line is a header
//   {"format":"detcal-dump","version":1,"elements":[...six names...]}
// optionally carrying "annotation" (isotonic chains from `apply`); every
// following non-blank line is one record
//   {"id":...,"score":...,"label":0|1,"mean":[6],"var":[6],"gt":[6]}
// Unknown or missing fields are rejected.

inline constexpr std::string_view kDumpFormat = "detcal-dump";
inline constexpr std::string_view kBundleFormat = "detcal-bundle";
inline constexpr int kSchemaVersion = 1;

struct Dump {
  Dataset dataset;
  Annotation annotation;
};

void write_dump(std::ostream& os, const Dataset& dataset, const Annotation& annotation = {});
/// Throws DataError naming the first offending line (1-based).
Dump read_dump(std::istream& is);

void write_dump_file(const std::filesystem::path& path, const Dataset& dataset, const Annotation& annotation = {});
Dump read_dump_file(const std::filesystem::path& path);

/// Recalibration bundle as one JSON document.
void write_bundle(std::ostream& os, const RecalibrationBundle& bundle);
RecalibrationBundle read_bundle(std::istream& is);

void write_bundle_file(const std::filesystem::path& path, const RecalibrationBundle& bundle);
RecalibrationBundle read_bundle_file(const std::filesystem::path& path);

/// "fnv1a64:<16 hex digits>" of the given bytes.
std::string fingerprint(std::string_view bytes);
std::string file_fingerprint(const std::filesystem::path& path);

}  // namespace detcal::io
