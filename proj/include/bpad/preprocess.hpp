// Record-level robust scaling, overlapping windowing, clean-window
// extraction for training, and seeded record splitting.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bpad/record.hpp"

namespace bpad {

struct WindowOrigin {
    std::string record_id;
    std::size_t start = 0; // index of the window's first sample in the record
};

// N x W matrix of scaled, gap-free windows plus the origin of each row.
struct WindowBatch {
    std::size_t window_len = 0;
    std::vector<double> data; // row-major, size() * window_len entries
    std::vector<WindowOrigin> origins;

    std::size_t size() const { return origins.size(); }
    std::span<const double> window(std::size_t i) const {
        return {data.data() + i * window_len, window_len};
    }
    void push_window(std::span<const double> values, WindowOrigin origin);
};

// Percentile with linear interpolation between order statistics:
// rank r = (n-1) * p / 100, value = v[floor(r)] + frac(r) * (v[floor(r)+1]
// - v[floor(r)]). This exact method is used everywhere a percentile
// appears (scaling stats, threshold calibration) so oracles agree.
// Throws std::invalid_argument on an empty input or p outside [0, 100].
double percentile(std::vector<double> values, double p);

// Median and IQR over all numeric samples (artifacts included).
// Throws std::invalid_argument when the record has no numeric sample.
ScaleStats compute_scale_stats(const Record& record);

// value' = (value - median) / iqr, with the divisor replaced by 1.0 when
// iqr == 0 so constant records stay finite. Missing samples pass through.
Record scale_record(const Record& record, const ScaleStats& stats);
Record unscale_record(const Record& record, const ScaleStats& stats);

// Windows starting at 0, step, 2*step, ... with start + W <= length.
// Windows containing any missing sample are dropped. A record shorter
// than W yields an empty batch.
WindowBatch make_windows(const Record& record, std::size_t window_len,
                         std::size_t step);

// Splits the record into maximal contiguous runs of numeric samples whose
// truth label is Valid, then windows each run with step 1. The result
// never touches an annotated artifact.
WindowBatch clean_training_windows(const Record& record,
                                   const LabelMask& truth,
                                   std::size_t window_len);

// Concatenation followed by one seeded Fisher-Yates permutation, making
// the pool patient-agnostic. Throws on mixed window lengths.
WindowBatch shuffle_and_pool(const std::vector<WindowBatch>& batches,
                             std::uint64_t seed);

struct SplitResult {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
};

// Seeded permutation, then proportional split with largest-remainder
// rounding. Partitions are disjoint and exhaustive.
SplitResult split_records(std::vector<std::string> record_ids,
                          const std::array<std::uint64_t, 3>& ratios,
                          std::uint64_t seed);

} // namespace bpad
