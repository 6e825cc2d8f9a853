#include "battkit/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "battkit/segment.hpp"

namespace battkit::ingest {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Locale-independent double parse; rejects trailing junk.
std::optional<double> parse_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  const char* begin = t.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + t.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long> parse_int(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  const char* begin = t.c_str();
  char* end = nullptr;
  const long v = std::strtol(begin, &end, 10);
  if (end != begin + t.size()) return std::nullopt;
  return v;
}

// Days since 1970-01-01 for a civil date (Gregorian, proleptic).
long days_from_civil(long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

struct TimeValue {
  double seconds = 0.0;
  bool time_of_day_only = false;  // bare HH:MM:SS, needs rollover handling
};

// Accepts plain seconds, "YYYY-MM-DD[ T]HH:MM:SS[.fff]", or "HH:MM:SS[.fff]".
std::optional<TimeValue> parse_time_field(const std::string& raw) {
  const std::string t = trim(raw);
  if (auto d = parse_double(t)) return TimeValue{*d, false};

  int year, month, day, hh, mm;
  double ss;
  if (std::sscanf(t.c_str(), "%d-%d-%d %d:%d:%lf", &year, &month, &day, &hh, &mm, &ss) == 6 ||
      std::sscanf(t.c_str(), "%d-%d-%dT%d:%d:%lf", &year, &month, &day, &hh, &mm, &ss) == 6) {
    const double days = static_cast<double>(days_from_civil(year, static_cast<unsigned>(month),
                                                            static_cast<unsigned>(day)));
    return TimeValue{days * 86400.0 + hh * 3600.0 + mm * 60.0 + ss, false};
  }
  if (std::sscanf(t.c_str(), "%d:%d:%lf", &hh, &mm, &ss) == 3) {
    return TimeValue{hh * 3600.0 + mm * 60.0 + ss, true};
  }
  return std::nullopt;
}

void append_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

ParseResult parse_cycler_csv(const std::filesystem::path& path, const CellSpec& spec) {
  std::ifstream file(path);
  if (!file) throw Error(Errc::IoError, "cannot open " + path.string());

  std::string header_line;
  if (!std::getline(file, header_line)) throw Error(Errc::IoError, "empty file: " + path.string());
  if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();

  const auto header = split_csv_line(header_line);
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return i;
    return std::nullopt;
  };
  auto required = [&](const std::string& name) {
    auto idx = column(name);
    if (!idx) throw Error(Errc::MissingColumn, "missing column '" + name + "' in " + path.string());
    return *idx;
  };

  const std::size_t col_cell = required("cell_id");
  const std::size_t col_cycle = required("cycle");
  const std::size_t col_step = required("step");
  const std::size_t col_time = required("time");
  const std::size_t col_current = required("current_a");
  const std::size_t col_voltage = required("voltage_v");
  const auto col_capacity = column("capacity_ah");

  ParseResult result;
  // Day-rollover tracking for bare time-of-day stamps, per cell.
  std::map<std::string, std::pair<double, double>> rollover;  // cell -> (last raw tod, offset)

  std::string line;
  while (std::getline(file, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++result.report.rows_total;

    const auto fields = split_csv_line(line);
    const std::size_t needed = std::max({col_cell, col_cycle, col_step, col_time, col_current,
                                         col_voltage, col_capacity.value_or(0)});
    if (fields.size() <= needed) {
      ++result.report.malformed_rows;
      continue;
    }

    CycleRecord rec;
    rec.cell_id = trim(fields[col_cell]);
    const auto cycle = parse_int(fields[col_cycle]);
    const auto current = parse_double(fields[col_current]);
    const auto voltage = parse_double(fields[col_voltage]);
    std::optional<double> capacity = 0.0;
    if (col_capacity) capacity = parse_double(fields[*col_capacity]);

    Step step;
    try {
      step = step_from_string(trim(fields[col_step]));
    } catch (const Error&) {
      ++result.report.malformed_rows;
      continue;
    }

    if (rec.cell_id.empty() || !cycle || *cycle < 0 || !current || !voltage || !capacity) {
      ++result.report.malformed_rows;
      continue;
    }

    const auto time = parse_time_field(fields[col_time]);
    if (!time)
      throw Error(Errc::UnparseableTimestamp,
                  "unparseable time '" + trim(fields[col_time]) + "' in " + path.string());

    if (*voltage < spec.protect_min_v() || *voltage > spec.protect_max_v()) {
      ++result.report.voltage_out_of_window;
      continue;
    }

    rec.cycle = static_cast<int>(*cycle);
    rec.step = step;
    rec.current_a = *current;
    rec.voltage_v = *voltage;
    rec.capacity_ah = *capacity;

    if (time->time_of_day_only) {
      auto& [last_tod, offset] = rollover[rec.cell_id];
      if (time->seconds < last_tod) offset += 86400.0;
      last_tod = time->seconds;
      rec.time_s = time->seconds + offset;
    } else {
      rec.time_s = time->seconds;
    }
    result.records.push_back(std::move(rec));
    ++result.report.rows_kept;
  }

  if (!col_capacity) {
    reconstruct_capacity(result.records);
    result.report.capacity_reconstructed = true;
  }
  return result;
}

void standardize_time(std::vector<CycleRecord>& records) {
  std::map<std::string, double> earliest;
  for (const auto& r : records) {
    auto [it, inserted] = earliest.emplace(r.cell_id, r.time_s);
    if (!inserted && r.time_s < it->second) it->second = r.time_s;
  }
  for (auto& r : records) r.time_s -= earliest[r.cell_id];
}

Dataset make_dataset(std::vector<CycleRecord> records, std::string provenance) {
  Dataset ds;
  ds.provenance.push_back(std::move(provenance));
  for (auto& r : records) ds.cells[r.cell_id].push_back(std::move(r));
  for (auto& [id, recs] : ds.cells)
    std::stable_sort(recs.begin(), recs.end(),
                     [](const CycleRecord& a, const CycleRecord& b) { return a.time_s < b.time_s; });
  return ds;
}

Dataset merge_datasets(const std::vector<Dataset>& parts) {
  Dataset merged;
  for (const auto& part : parts) {
    merged.provenance.insert(merged.provenance.end(), part.provenance.begin(),
                             part.provenance.end());
    merged.duplicates_dropped += part.duplicates_dropped;
    for (const auto& [id, recs] : part.cells) {
      auto& dst = merged.cells[id];
      dst.insert(dst.end(), recs.begin(), recs.end());
    }
  }
  for (auto& [id, recs] : merged.cells) {
    std::stable_sort(recs.begin(), recs.end(), [](const CycleRecord& a, const CycleRecord& b) {
      if (a.time_s != b.time_s) return a.time_s < b.time_s;
      return a.step < b.step;
    });
    std::vector<CycleRecord> unique;
    unique.reserve(recs.size());
    for (auto& r : recs) {
      if (!unique.empty() && unique.back().time_s == r.time_s && unique.back().step == r.step) {
        if (unique.back() == r) {
          ++merged.duplicates_dropped;
          continue;
        }
        throw Error(Errc::ConflictingDuplicate,
                    "conflicting duplicate at cell " + id + " t=" + std::to_string(r.time_s));
      }
      unique.push_back(std::move(r));
    }
    recs = std::move(unique);
  }
  return merged;
}

void write_cycler_csv(const std::filesystem::path& path, const Dataset& dataset,
                      bool with_raw_columns,
                      const std::map<std::string, std::vector<CycleRecord>>* raw_cells) {
  std::ofstream file(path, std::ios::binary);  // binary: byte-stable newlines
  if (!file) throw Error(Errc::IoError, "cannot write " + path.string());

  std::string out = "cell_id,cycle,step,time,current_a,voltage_v,capacity_ah";
  if (with_raw_columns) out += ",current_a_raw,voltage_v_raw";
  out += "\n";

  for (const auto& [id, recs] : dataset.cells) {
    const std::vector<CycleRecord>* raw = nullptr;
    if (with_raw_columns && raw_cells) {
      auto it = raw_cells->find(id);
      if (it != raw_cells->end() && it->second.size() == recs.size()) raw = &it->second;
    }
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& r = recs[i];
      out += r.cell_id;
      out += ',';
      out += std::to_string(r.cycle);
      out += ',';
      out += to_string(r.step);
      out += ',';
      append_double(out, r.time_s);
      out += ',';
      append_double(out, r.current_a);
      out += ',';
      append_double(out, r.voltage_v);
      out += ',';
      append_double(out, r.capacity_ah);
      if (with_raw_columns) {
        const auto& rr = raw ? (*raw)[i] : r;
        out += ',';
        append_double(out, rr.current_a);
        out += ',';
        append_double(out, rr.voltage_v);
      }
      out += "\n";
    }
  }
  file << out;
}

std::vector<CycleRecord> all_records(const Dataset& dataset) {
  std::vector<CycleRecord> out;
  for (const auto& [id, recs] : dataset.cells) out.insert(out.end(), recs.begin(), recs.end());
  return out;
}

}  // namespace battkit::ingest
