// Spike-threshold calibration on pooled validation deltas and OR-fusion of
// the statistical and reconstruction detectors into final labels.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bpad/delta.hpp"
#include "bpad/record.hpp"

namespace bpad {

// A delta threshold calibrated once on validation data and then frozen for
// every test deployment. Provenance identifies what produced it.
struct Threshold {
    double q = 90.0;
    double value = 0.0;
    std::string model_id;
    std::string validation_id;
};

// Pools every delta across the traces, drops positions that are
// flatline-labelled Artifact or UNDEFINED, and takes the q-th percentile
// (linear interpolation, the shared percentile) of the remainder.
// Throws std::invalid_argument when nothing survives the filter.
Threshold calibrate_threshold(const std::vector<DeltaTrace>& validation_deltas,
                              const std::vector<LabelMask>& flatline_masks,
                              double q, const std::string& model_id = {},
                              const std::string& validation_id = {});

// Artifact where delta > threshold.value (strictly), Valid at or below,
// Unknown where the trace is undefined. Source = Spike.
LabelMask detect_spikes(const DeltaTrace& delta, const Threshold& threshold);

// OR-fusion of the flatline and spike masks; see or_merge. Source = Fused.
LabelMask fuse(const LabelMask& flatline, const LabelMask& spikes);

} // namespace bpad
