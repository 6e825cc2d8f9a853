#include "battkit/segment.hpp"

#include <algorithm>
#include <cmath>

namespace battkit {

namespace {

double median_abs_current(std::span<const CycleRecord> run) {
  std::vector<double> mags;
  mags.reserve(run.size());
  for (const auto& r : run) mags.push_back(std::fabs(r.current_a));
  std::sort(mags.begin(), mags.end());
  const std::size_t n = mags.size();
  if (n == 0) return 0.0;
  return n % 2 == 1 ? mags[n / 2] : 0.5 * (mags[n / 2 - 1] + mags[n / 2]);
}

// Keeps only samples that advance the running voltage extremum in the
// step's direction. Returns indices into the run.
std::vector<std::size_t> monotone_filter(std::span<const CycleRecord> run, Step step) {
  std::vector<std::size_t> keep;
  if (run.empty()) return keep;
  keep.push_back(0);
  double extremum = run[0].voltage_v;
  const bool ascending = step == Step::Charge;
  for (std::size_t i = 1; i < run.size(); ++i) {
    const double v = run[i].voltage_v;
    if (ascending ? v > extremum : v < extremum) {
      keep.push_back(i);
      extremum = v;
    }
  }
  return keep;
}

}  // namespace

SegmentResult segment_cycles(std::span<const CycleRecord> records, double nominal_capacity_ah) {
  SegmentResult result;
  std::size_t begin = 0;
  while (begin < records.size()) {
    // Contiguous run: same cell, cycle, and step.
    std::size_t end = begin + 1;
    while (end < records.size() && records[end].cell_id == records[begin].cell_id &&
           records[end].cycle == records[begin].cycle && records[end].step == records[begin].step) {
      ++end;
    }
    const auto run = records.subspan(begin, end - begin);
    const Step step = run[0].step;
    if (step != Step::Rest) {
      const auto keep = monotone_filter(run, step);
      if (keep.size() < 2) {
        result.skipped.push_back({run[0].cell_id, run[0].cycle, step, run.size(),
                                  run.size() - keep.size()});
      } else {
        HalfCycleCurve curve;
        curve.cell_id = run[0].cell_id;
        curve.cycle = run[0].cycle;
        curve.step = step;
        if (nominal_capacity_ah > 0.0)
          curve.c_rate = median_abs_current(run) / nominal_capacity_ah;
        curve.voltage_v.reserve(keep.size());
        curve.capacity_ah.reserve(keep.size());
        for (std::size_t i : keep) {
          curve.voltage_v.push_back(run[i].voltage_v);
          curve.capacity_ah.push_back(run[i].capacity_ah);
        }
        result.curves.push_back(std::move(curve));
      }
    }
    begin = end;
  }
  return result;
}

void reconstruct_capacity(std::vector<CycleRecord>& records) {
  std::size_t begin = 0;
  while (begin < records.size()) {
    std::size_t end = begin + 1;
    while (end < records.size() && records[end].cell_id == records[begin].cell_id &&
           records[end].cycle == records[begin].cycle && records[end].step == records[begin].step) {
      ++end;
    }
    records[begin].capacity_ah = 0.0;
    for (std::size_t i = begin + 1; i < end; ++i) {
      const double dt_h = (records[i].time_s - records[i - 1].time_s) / 3600.0;
      const double mean_i = 0.5 * (std::fabs(records[i].current_a) + std::fabs(records[i - 1].current_a));
      records[i].capacity_ah = records[i - 1].capacity_ah + mean_i * dt_h;
    }
    begin = end;
  }
}

std::vector<CycleRecord> to_records(const HalfCycleCurve& curve) {
  std::vector<CycleRecord> records;
  records.reserve(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    CycleRecord r;
    r.cell_id = curve.cell_id;
    r.cycle = curve.cycle;
    r.step = curve.step;
    r.time_s = static_cast<double>(i);
    r.current_a = curve.step == Step::Charge ? curve.c_rate : -curve.c_rate;
    r.voltage_v = curve.voltage_v[i];
    r.capacity_ah = curve.capacity_ah[i];
    records.push_back(std::move(r));
  }
  return records;
}

HalfCycleCurve resample_uniform(const HalfCycleCurve& curve, std::size_t n_points) {
  curve.validate();
  if (n_points < 2) throw Error(Errc::InvalidArgument, "resample needs n_points >= 2");

  const double v_first = curve.voltage_v.front();
  const double v_last = curve.voltage_v.back();
  if (v_first == v_last) throw Error(Errc::DegenerateSpan, "voltage span is degenerate");

  HalfCycleCurve out;
  out.cell_id = curve.cell_id;
  out.cycle = curve.cycle;
  out.step = curve.step;
  out.c_rate = curve.c_rate;
  out.voltage_v.resize(n_points);
  out.capacity_ah.resize(n_points);

  const auto& v = curve.voltage_v;
  const auto& q = curve.capacity_ah;
  const bool ascending = v_last > v_first;

  for (std::size_t i = 0; i < n_points; ++i) {
    double g;
    if (i == 0) {
      g = v_first;  // endpoints are preserved exactly
    } else if (i == n_points - 1) {
      g = v_last;
    } else {
      g = v_first + (v_last - v_first) * (static_cast<double>(i) / static_cast<double>(n_points - 1));
    }
    out.voltage_v[i] = g;

    // Locate the bracketing segment; v is strictly monotone.
    std::size_t lo = 0, hi = v.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      const bool left = ascending ? v[mid] <= g : v[mid] >= g;
      if (left)
        lo = mid;
      else
        hi = mid;
    }
    if (g == v[lo]) {
      out.capacity_ah[i] = q[lo];  // exact node hit, bit-stable
    } else if (g == v[hi]) {
      out.capacity_ah[i] = q[hi];
    } else {
      const double t = (g - v[lo]) / (v[hi] - v[lo]);
      out.capacity_ah[i] = q[lo] + t * (q[hi] - q[lo]);
    }
  }
  return out;
}

}  // namespace battkit
