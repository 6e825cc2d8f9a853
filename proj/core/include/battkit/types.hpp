/*
 * types.hpp
 *
 * Domain types shared by every battkit module: raw cycler samples, cell
 * specifications, and segmented half-cycle curves.
 */

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace battkit {

enum class Step { Charge, Discharge, Rest };

enum class Chemistry { LiNiCoAlO2, LiFePO4 };

std::string to_string(Step step);
std::string to_string(Chemistry chem);
Step step_from_string(const std::string& s);
Chemistry chemistry_from_string(const std::string& s);

// Error codes for every named failure mode in the toolkit. Fatal paths
// throw battkit::Error; skip-and-count paths report through result structs.
enum class Errc {
  EmptyStep,
  DegenerateSpan,
  MissingColumn,
  MalformedRow,
  VoltageOutOfWindow,
  UnparseableTimestamp,
  ConflictingDuplicate,
  DimensionMismatch,
  SingularInnovation,
  ShapeMismatch,
  StaleCache,
  EmptyTrainSet,
  TooFewCycles,
  LengthMismatch,
  Empty,
  NonMonotoneVoltage,
  BadWindow,
  CurveTooShort,
  NotAMaximum,
  CrossingNotFound,
  PeakOutOfWindow,
  NonFiniteValue,
  InvalidArgument,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

std::string to_string(Errc code);

// One timestamped sample of a cell under test. current_a is signed,
// positive while charging. capacity_ah accumulates within the current
// step and resets to zero at each step boundary.
struct CycleRecord {
  std::string cell_id;
  int cycle = 0;
  Step step = Step::Rest;
  double time_s = 0.0;
  double current_a = 0.0;
  double voltage_v = 0.0;
  double capacity_ah = 0.0;

  bool operator==(const CycleRecord&) const = default;
};

// Plate specification of a cell under test.
struct CellSpec {
  Chemistry chemistry = Chemistry::LiNiCoAlO2;
  double nominal_capacity_ah = 0.0;
  double nominal_voltage_v = 0.0;
  double max_voltage_v = 0.0;
  double min_voltage_v = 0.0;

  // Protection window used for sample validation. The upper bound sits
  // 0.1 V above the maximum charge voltage (4.2 V cells trip at 4.3 V).
  double protect_min_v() const { return min_voltage_v; }
  double protect_max_v() const { return max_voltage_v + 0.1; }

  void validate() const;
};

CellSpec nca_18650_spec();    // 2.2 Ah, 3.7 V nominal, [2.5, 4.2] V
CellSpec lifepo4_26650_spec();  // 2.5 Ah, 3.3 V nominal, [2.5, 3.6] V
CellSpec default_spec(Chemistry chem);

// One contiguous charge or discharge step: voltage strictly monotone
// (increasing for Charge, decreasing for Discharge), capacity_ah per-step.
struct HalfCycleCurve {
  std::string cell_id;
  int cycle = 0;
  Step step = Step::Charge;
  double c_rate = 0.0;
  std::vector<double> voltage_v;
  std::vector<double> capacity_ah;

  std::size_t size() const { return voltage_v.size(); }
  void validate() const;
};

}  // namespace battkit
