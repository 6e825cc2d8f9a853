#include "battkit/types.hpp"

#include <algorithm>
#include <cctype>

namespace battkit {

std::string to_string(Step step) {
  switch (step) {
    case Step::Charge: return "CHG";
    case Step::Discharge: return "DCH";
    case Step::Rest: return "REST";
  }
  return "?";
}

std::string to_string(Chemistry chem) {
  switch (chem) {
    case Chemistry::LiNiCoAlO2: return "LiNiCoAlO2";
    case Chemistry::LiFePO4: return "LiFePO4";
  }
  return "?";
}

Step step_from_string(const std::string& s) {
  std::string up(s);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "CHG" || up == "CHARGE") return Step::Charge;
  if (up == "DCH" || up == "DCHG" || up == "DISCHARGE") return Step::Discharge;
  if (up == "REST" || up == "IDLE") return Step::Rest;
  throw Error(Errc::MalformedRow, "unknown step label: " + s);
}

Chemistry chemistry_from_string(const std::string& s) {
  std::string lo(s);
  std::transform(lo.begin(), lo.end(), lo.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lo == "linicoalo2" || lo == "nca") return Chemistry::LiNiCoAlO2;
  if (lo == "lifepo4" || lo == "lfp") return Chemistry::LiFePO4;
  throw Error(Errc::InvalidArgument, "unknown chemistry: " + s);
}

std::string to_string(Errc code) {
  switch (code) {
    case Errc::EmptyStep: return "EmptyStep";
    case Errc::DegenerateSpan: return "DegenerateSpan";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::VoltageOutOfWindow: return "VoltageOutOfWindow";
    case Errc::UnparseableTimestamp: return "UnparseableTimestamp";
    case Errc::ConflictingDuplicate: return "ConflictingDuplicate";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::SingularInnovation: return "SingularInnovation";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::StaleCache: return "StaleCache";
    case Errc::EmptyTrainSet: return "EmptyTrainSet";
    case Errc::TooFewCycles: return "TooFewCycles";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::Empty: return "Empty";
    case Errc::NonMonotoneVoltage: return "NonMonotoneVoltage";
    case Errc::BadWindow: return "BadWindow";
    case Errc::CurveTooShort: return "CurveTooShort";
    case Errc::NotAMaximum: return "NotAMaximum";
    case Errc::CrossingNotFound: return "CrossingNotFound";
    case Errc::PeakOutOfWindow: return "PeakOutOfWindow";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoError: return "IoError";
  }
  return "UnknownError";
}

void CellSpec::validate() const {
  if (!(min_voltage_v < nominal_voltage_v && nominal_voltage_v < max_voltage_v))
    throw Error(Errc::InvalidArgument, "cell spec voltage ordering violated");
  if (!(nominal_capacity_ah > 0.0))
    throw Error(Errc::InvalidArgument, "cell spec nominal capacity must be positive");
}

CellSpec nca_18650_spec() {
  return CellSpec{Chemistry::LiNiCoAlO2, 2.2, 3.7, 4.2, 2.5};
}

CellSpec lifepo4_26650_spec() {
  return CellSpec{Chemistry::LiFePO4, 2.5, 3.3, 3.6, 2.5};
}

CellSpec default_spec(Chemistry chem) {
  return chem == Chemistry::LiNiCoAlO2 ? nca_18650_spec() : lifepo4_26650_spec();
}

void HalfCycleCurve::validate() const {
  if (step == Step::Rest)
    throw Error(Errc::InvalidArgument, "half-cycle curve cannot be a rest step");
  if (voltage_v.size() != capacity_ah.size())
    throw Error(Errc::LengthMismatch, "voltage/capacity length mismatch");
  if (voltage_v.size() < 2)
    throw Error(Errc::CurveTooShort, "half-cycle curve needs at least 2 samples");
  const bool ascending = step == Step::Charge;
  for (std::size_t i = 1; i < voltage_v.size(); ++i) {
    const bool ok = ascending ? voltage_v[i] > voltage_v[i - 1] : voltage_v[i] < voltage_v[i - 1];
    if (!ok) throw Error(Errc::NonMonotoneVoltage, "voltage not strictly monotone");
  }
}

}  // namespace battkit
