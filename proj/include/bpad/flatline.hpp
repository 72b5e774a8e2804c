// Statistical flatline detector: a unit-step sliding window is artifactual
// when the magnitude of its fitted OLS slope falls below eps. Runs directly
// on records, with no dependence on any trained model.
#pragma once

#include <cstddef>
#include <span>

#include "bpad/record.hpp"

namespace bpad {

struct FlatlineConfig {
    std::size_t window_size = 10; // samples; tunable over {5, 10, 15}
    double eps = 1e-9;            // gradient magnitude threshold
};

// Ordinary least-squares slope of `window` against abscissae 0..L-1.
// Throws std::invalid_argument when the window has fewer than 2 samples.
double fit_slope(std::span<const double> window);

// Every unit-step window of window_size contiguous non-MISSING samples
// with |fit_slope| < eps marks all its samples Artifact; the result is the
// union over windows. Windows touching a MISSING sample are skipped.
// Non-flagged present samples are Valid, missing samples Unknown.
// Source = Flatline.
LabelMask detect_flatline(const Record& record, const FlatlineConfig& cfg);

} // namespace bpad
