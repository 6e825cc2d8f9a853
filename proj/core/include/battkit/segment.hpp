/*
 * segment.hpp
 *
 * Cycle segmentation and resampling: groups raw cycler records into
 * half-cycle curves and puts them on uniform voltage grids.
 */

#pragma once

#include <span>
#include <string>
#include <vector>

#include "battkit/types.hpp"

namespace battkit {

struct EmptyStepReport {
  std::string cell_id;
  int cycle = 0;
  Step step = Step::Rest;
  std::size_t raw_samples = 0;      // samples seen in the step
  std::size_t dropped_samples = 0;  // removed by the monotone filter
};

struct SegmentResult {
  std::vector<HalfCycleCurve> curves;
  std::vector<EmptyStepReport> skipped;  // steps with <2 usable samples
};

// Groups records into one HalfCycleCurve per contiguous Charge or Discharge
// step per cycle. Rest steps are dropped. Samples breaking strict voltage
// monotonicity relative to the running extremum are dropped, never averaged,
// so that dQ/dV can never divide by a zero or negative voltage step.
//
// c_rate is derived as median(|current|)/nominal_capacity_ah when a positive
// nominal capacity is supplied, else left at 0.
//
// pre: records sorted by (cell_id, time_s), step labels present.
SegmentResult segment_cycles(std::span<const CycleRecord> records,
                             double nominal_capacity_ah = 0.0);

// Rebuilds per-step capacity by trapezoidal integration of |current| over
// time, for inputs whose capacity column is absent. Resets at each
// (cell_id, cycle, step) boundary.
void reconstruct_capacity(std::vector<CycleRecord>& records);

// Flattens a curve back into records (inverse of segmentation up to time
// and current, which the curve does not retain).
std::vector<CycleRecord> to_records(const HalfCycleCurve& curve);

// Resamples onto a uniform voltage grid of exactly n_points spanning
// [min(V), max(V)], preserving endpoints exactly and interpolating
// capacity linearly. Direction (ascending/descending) is preserved.
//
// errors: DegenerateSpan when max(V) == min(V).
HalfCycleCurve resample_uniform(const HalfCycleCurve& curve, std::size_t n_points);

}  // namespace battkit
