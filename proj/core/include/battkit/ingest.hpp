/*
 * ingest.hpp
 *
 * Cycler CSV parsing, multi-cell merging, and time standardization.
 *
 * Canonical schema (header mandatory, UTF-8, comma separated, '.' decimal):
 *   cell_id,cycle,step,time,current_a,voltage_v,capacity_ah
 * with step in {CHG,DCH,REST} and time either plain seconds or ISO-8601
 * ("YYYY-MM-DD HH:MM:SS[.fff]", 'T' separator also accepted, or bare
 * "HH:MM:SS[.fff]" with day rollover detection). The capacity_ah column is
 * optional; when absent, capacity is reconstructed by trapezoidal
 * integration of |current| within each step.
 */

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "battkit/types.hpp"

namespace battkit::ingest {

struct ParseReport {
  std::size_t rows_total = 0;
  std::size_t rows_kept = 0;
  std::size_t malformed_rows = 0;
  std::size_t voltage_out_of_window = 0;
  bool capacity_reconstructed = false;
};

struct ParseResult {
  std::vector<CycleRecord> records;
  ParseReport report;
};

struct Dataset {
  std::map<std::string, std::vector<CycleRecord>> cells;
  std::vector<std::string> provenance;
  std::size_t duplicates_dropped = 0;
};

// Header-driven parse of one cycler CSV export. Malformed rows and rows
// outside the cell's protection window are skipped and counted, never fatal.
// A missing required column is fatal (MissingColumn); an unparseable time
// field is fatal for the file (UnparseableTimestamp).
ParseResult parse_cycler_csv(const std::filesystem::path& path, const CellSpec& spec);

// Rebases every cell's time axis to seconds relative to that cell's
// earliest sample. Already-relative inputs starting at zero are unchanged.
void standardize_time(std::vector<CycleRecord>& records);

Dataset make_dataset(std::vector<CycleRecord> records, std::string provenance);

// Union of all parts. Exact duplicate (cell_id, time_s, step) triples with
// identical payloads are dropped and counted; conflicting payloads are fatal.
Dataset merge_datasets(const std::vector<Dataset>& parts);

// Re-export in the canonical schema. Numeric fields use round-trip ("%.17g")
// formatting so parse -> write -> parse is bit-identical.
void write_cycler_csv(const std::filesystem::path& path, const Dataset& dataset,
                      bool with_raw_columns = false,
                      const std::map<std::string, std::vector<CycleRecord>>* raw_cells = nullptr);

std::vector<CycleRecord> all_records(const Dataset& dataset);

}  // namespace battkit::ingest
