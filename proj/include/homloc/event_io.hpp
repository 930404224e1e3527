#pragma once

// Line-delimited event files. Line 1 is a JSON header object:
//
//   {"format":"homloc-events","version":1,"generator":...,"seed":...,
//    "scenario_digest":"...","n_emitted":...,"n_detected":...}
//
// followed by one JSON array per detected pair,
//
//   [pair_index,dkx,dky,domega,upsilon]
//
// with reals printed to 17 significant digits so values round-trip exactly.

#include <filesystem>
#include <iosfwd>

#include "homloc/sampler.hpp"

namespace homloc {

inline constexpr const char* kEventFormat = "homloc-events";
inline constexpr int kEventFormatVersion = 1;

void write_events(std::ostream& out, const EventBatch& batch);
/// Throws ParseError (with line number) on malformed or truncated input.
EventBatch read_events(std::istream& in);

void write_events_file(const std::filesystem::path& path, const EventBatch& batch);
EventBatch read_events_file(const std::filesystem::path& path);

}  // namespace homloc
