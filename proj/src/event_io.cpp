#include "homloc/event_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "homloc/errors.hpp"

namespace homloc {

void write_events(std::ostream& out, const EventBatch& batch) {
  nlohmann::ordered_json header;
  header["format"] = kEventFormat;
  header["version"] = kEventFormatVersion;
  header["generator"] = batch.generator;
  header["seed"] = batch.seed;
  header["scenario_digest"] = batch.scenario_digest;
  header["n_emitted"] = batch.n_emitted;
  header["n_detected"] = batch.n_detected();
  out << header.dump() << '\n';

  char line[160];
  for (std::size_t i = 0; i < batch.events.size(); ++i) {
    const auto& e = batch.events[i];
    const std::uint64_t index = i < batch.pair_index.size() ? batch.pair_index[i] : i;
    const int n = std::snprintf(line, sizeof line, "[%llu,%.17g,%.17g,%.17g,%d]\n",
                                static_cast<unsigned long long>(index), e.dkx, e.dky, e.domega,
                                sign(e.tag));
    out.write(line, n);
  }
  if (!out) throw IoError("failed to write event stream");
}

EventBatch read_events(std::istream& in) {
  std::string text;
  std::size_t line_no = 0;
  if (!std::getline(in, text)) throw ParseError(1, "missing event file header");
  ++line_no;

  EventBatch batch;
  std::uint64_t expected = 0;
  try {
    const auto header = nlohmann::json::parse(text);
    if (header.at("format").get<std::string>() != kEventFormat) {
      throw ParseError(line_no, "not a homloc event file");
    }
    if (header.at("version").get<int>() != kEventFormatVersion) {
      throw ParseError(line_no, "unsupported event file version");
    }
    batch.generator = header.at("generator").get<std::string>();
    batch.seed = header.at("seed").get<std::uint64_t>();
    batch.scenario_digest = header.at("scenario_digest").get<std::string>();
    batch.n_emitted = header.at("n_emitted").get<std::uint64_t>();
    expected = header.at("n_detected").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(line_no, std::string("bad header: ") + ex.what());
  }

  batch.events.reserve(expected);
  batch.pair_index.reserve(expected);
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    try {
      const auto rec = nlohmann::json::parse(text);
      if (!rec.is_array() || rec.size() != 5) throw ParseError(line_no, "expected 5 fields");
      DetectionEvent e;
      e.dkx = rec[1].get<double>();
      e.dky = rec[2].get<double>();
      e.domega = rec[3].get<double>();
      e.tag = detector_tag_from_int(rec[4].get<long long>());
      batch.pair_index.push_back(rec[0].get<std::uint64_t>());
      batch.events.push_back(e);
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(line_no, std::string("bad event record: ") + ex.what());
    } catch (const ValidationError& ex) {
      throw ParseError(line_no, ex.what());
    }
  }
  if (batch.events.size() != expected) {
    throw ParseError(line_no + 1, "truncated event file: header declares " +
                                      std::to_string(expected) + " events, found " +
                                      std::to_string(batch.events.size()));
  }
  if (expected > batch.n_emitted) throw ParseError(1, "n_detected exceeds n_emitted");
  return batch;
}

void write_events_file(const std::filesystem::path& path, const EventBatch& batch) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_events(out, batch);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

EventBatch read_events_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_events(in);
}

}  // namespace homloc
