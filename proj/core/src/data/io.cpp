#include "eif/data/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "eif/errors.hpp"
#include "eif/util/binary_io.hpp"

namespace eif {
namespace {

constexpr const char* kMetaFile = "meta.json";
constexpr const char* kValuesFile = "values.f64";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::int64_t parse_timestamp(const std::string& s, std::size_t row) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec == std::errc() && ptr == s.data() + s.size()) return value;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char sep = 0;
  const int got = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &sec);
  if (got < 3 || (got >= 4 && sep != 'T' && sep != ' ') || mo < 1 || mo > 12 || d < 1 || d > 31) {
    throw IngestionError("row " + std::to_string(row) + ": cannot parse timestamp '" + s + "'");
  }
  return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
         h * 3600 + mi * 60 + sec;
}

double parse_value(const std::string& s, std::size_t row) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw IngestionError("row " + std::to_string(row) + ": invalid value '" + s + "'");
  }
  return v;
}

// Maps sorted distinct timestamps onto a regular grid anchored at the first.
struct TimeGrid {
  std::int64_t start = 0;
  std::int64_t step = 1;
  std::size_t steps = 0;

  std::size_t slot(std::int64_t ts) const { return static_cast<std::size_t>((ts - start) / step); }
};

TimeGrid build_grid(const std::vector<std::int64_t>& sorted_unique) {
  TimeGrid g;
  if (sorted_unique.empty()) throw IngestionError("CSV contains no data rows");
  g.start = sorted_unique.front();
  if (sorted_unique.size() == 1) {
    g.steps = 1;
    return g;
  }
  std::int64_t step = sorted_unique[1] - sorted_unique[0];
  for (std::size_t i = 2; i < sorted_unique.size(); ++i) {
    step = std::min(step, sorted_unique[i] - sorted_unique[i - 1]);
  }
  for (std::int64_t ts : sorted_unique) {
    if ((ts - g.start) % step != 0) {
      throw IngestionError("irregular sampling at timestamp " + std::to_string(ts));
    }
  }
  g.step = step;
  g.steps = static_cast<std::size_t>((sorted_unique.back() - g.start) / step) + 1;
  return g;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(std::move(line));
  }
  if (lines.empty()) throw IngestionError(path.string() + " is empty");
  return lines;
}

ImportResult import_wide(const std::vector<std::string>& lines) {
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2) throw IngestionError("wide CSV needs a timestamp and entity columns");
  std::vector<std::string> ids(header.begin() + 1, header.end());
  if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size()) {
    throw IngestionError("wide CSV header repeats an entity column");
  }
  std::vector<std::int64_t> stamps;
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = split_csv_line(lines[r]);
    if (fields.size() != header.size()) {
      throw IngestionError("row " + std::to_string(r) + ": expected " +
                           std::to_string(header.size()) + " fields");
    }
    const std::int64_t ts = parse_timestamp(fields[0], r);
    if (!stamps.empty() && ts == stamps.back()) {
      throw IngestionError("duplicate row at timestamp " + fields[0] + " for entity " + ids[0]);
    }
    if (!stamps.empty() && ts < stamps.back()) {
      throw IngestionError("non-monotone timestamp " + fields[0] + " at row " + std::to_string(r));
    }
    stamps.push_back(ts);
    rows.push_back(std::move(fields));
  }
  const TimeGrid grid = build_grid(stamps);
  Dataset d;
  d.steps = grid.steps;
  d.entities = ids.size();
  d.channels = 1;
  d.entity_ids = ids;
  d.channel_names = {"value"};
  d.start_time = grid.start;
  d.step_seconds = grid.step;
  d.values.assign(d.steps * d.entities, 0.0);
  std::vector<bool> filled(d.values.size(), false);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t t = grid.slot(stamps[r]);
    for (std::size_t n = 0; n < ids.size(); ++n) {
      const std::string& cell = rows[r][n + 1];
      if (cell.empty()) continue;
      d.at(t, n, 0) = parse_value(cell, r + 1);
      filled[d.index(t, n, 0)] = true;
    }
  }
  ImportReport rep;
  rep.rows = rows.size();
  rep.missing_count = static_cast<std::size_t>(std::count(filled.begin(), filled.end(), false));
  rep.steps = d.steps;
  rep.entities = d.entities;
  rep.channels = 1;
  return {std::move(d), rep};
}

ImportResult import_long(const std::vector<std::string>& lines) {
  const auto header = split_csv_line(lines[0]);
  if (header.size() != 4) {
    throw IngestionError("long CSV needs columns timestamp,entity,channel,value");
  }
  struct Row {
    std::int64_t ts;
    std::string raw_ts, entity, channel;
    double value;
  };
  std::vector<Row> rows;
  std::vector<std::string> ids, channels;
  std::unordered_map<std::string, std::size_t> id_index, channel_index;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto f = split_csv_line(lines[r]);
    if (f.size() != 4) throw IngestionError("row " + std::to_string(r) + ": expected 4 fields");
    Row row{parse_timestamp(f[0], r), f[0], f[1], f[2], parse_value(f[3], r)};
    if (!rows.empty() && row.ts < rows.back().ts) {
      throw IngestionError("non-monotone timestamp " + f[0] + " at row " + std::to_string(r));
    }
    if (id_index.emplace(row.entity, ids.size()).second) ids.push_back(row.entity);
    if (channel_index.emplace(row.channel, channels.size()).second) channels.push_back(row.channel);
    rows.push_back(std::move(row));
  }
  std::vector<std::int64_t> stamps;
  for (const auto& r : rows) {
    if (stamps.empty() || stamps.back() != r.ts) stamps.push_back(r.ts);
  }
  const TimeGrid grid = build_grid(stamps);
  Dataset d;
  d.steps = grid.steps;
  d.entities = ids.size();
  d.channels = channels.size();
  d.entity_ids = ids;
  d.channel_names = channels;
  d.start_time = grid.start;
  d.step_seconds = grid.step;
  d.values.assign(d.steps * d.entities * d.channels, 0.0);
  std::vector<bool> filled(d.values.size(), false);
  for (const auto& r : rows) {
    const std::size_t idx =
        d.index(grid.slot(r.ts), id_index.at(r.entity), channel_index.at(r.channel));
    if (filled[idx]) {
      throw IngestionError("duplicate row at timestamp " + r.raw_ts + " for entity " + r.entity +
                           " channel " + r.channel);
    }
    filled[idx] = true;
    d.values[idx] = r.value;
  }
  ImportReport rep;
  rep.rows = rows.size();
  rep.missing_count = static_cast<std::size_t>(std::count(filled.begin(), filled.end(), false));
  rep.steps = d.steps;
  rep.entities = d.entities;
  rep.channels = d.channels;
  return {std::move(d), rep};
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  dataset.validate();
  nlohmann::json meta = {{"format", "eif-dataset"},
                         {"version", 1},
                         {"dtype", "f64"},
                         {"endianness", "little"},
                         {"layout", "TNC"},
                         {"shape", {dataset.steps, dataset.entities, dataset.channels}},
                         {"entity_ids", dataset.entity_ids},
                         {"channel_names", dataset.channel_names},
                         {"start_time", dataset.start_time},
                         {"step_seconds", dataset.step_seconds}};
  std::string blob;
  append_f64_le(blob, dataset.values);
  std::filesystem::create_directories(dir);
  write_file(dir / kValuesFile, blob);
  write_file(dir / kMetaFile, meta.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / kMetaFile));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError("meta.json is not valid JSON: " + std::string(e.what()));
  }
  Dataset d;
  try {
    if (meta.at("endianness").get<std::string>() != "little" ||
        meta.at("dtype").get<std::string>() != "f64") {
      throw CorruptionError("unsupported dataset encoding");
    }
    const auto shape = meta.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 3) throw CorruptionError("meta shape must have three extents");
    d.steps = shape[0];
    d.entities = shape[1];
    d.channels = shape[2];
    d.entity_ids = meta.at("entity_ids").get<std::vector<std::string>>();
    d.channel_names = meta.at("channel_names").get<std::vector<std::string>>();
    d.start_time = meta.at("start_time").get<std::int64_t>();
    d.step_seconds = meta.at("step_seconds").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError("meta.json: " + std::string(e.what()));
  }
  if (d.entity_ids.size() != d.entities) {
    throw CorruptionError("meta.json lists " + std::to_string(d.entity_ids.size()) +
                          " entity ids for N=" + std::to_string(d.entities));
  }
  if (d.channel_names.size() != d.channels) {
    throw CorruptionError("meta.json channel names do not match C");
  }
  const std::string blob = read_file(dir / kValuesFile);
  const std::size_t expected = d.steps * d.entities * d.channels * 8;
  if (blob.size() != expected) {
    throw CorruptionError("values.f64 has " + std::to_string(blob.size()) + " bytes, expected " +
                          std::to_string(expected));
  }
  d.values = decode_f64_le(blob);
  try {
    d.validate();
  } catch (const ContractError& e) {
    throw CorruptionError(std::string("dataset invalid: ") + e.what());
  }
  return d;
}

nlohmann::json to_json(const ImportReport& r) {
  return {{"rows", r.rows},
          {"missing_count", r.missing_count},
          {"steps", r.steps},
          {"entities", r.entities},
          {"channels", r.channels}};
}

ImportResult import_csv(const std::filesystem::path& path, CsvLayout layout) {
  const auto lines = read_lines(path);
  ImportResult result = layout == CsvLayout::kWide ? import_wide(lines) : import_long(lines);
  result.dataset.validate();
  return result;
}

}  // namespace eif
