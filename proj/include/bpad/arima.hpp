// Benchmark detector: per-sliding-window AR fit on the (optionally
// differenced) series, one-step-ahead forecast, delta = |forecast - actual|.
// Pure conditional least squares; no MA terms (see ArimaConfig).
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bpad/delta.hpp"
#include "bpad/record.hpp"

namespace bpad {

// q is fixed at 0: MA estimation needs iterative nonlinear optimization
// and the benchmark role only requires a credible residual detector.
struct ArimaConfig {
    std::size_t p = 3;          // AR order, >= 1
    std::size_t d = 1;          // differencing order, 0 or 1
    std::size_t window_len = 60; // history samples per fit
};

// d-fold first differencing. Throws std::invalid_argument when the series
// has length <= d.
std::vector<double> difference(std::span<const double> series, std::size_t d);

struct ArFit {
    double intercept = 0.0;
    std::vector<double> coeffs; // coeffs[i] multiplies lag i+1
    bool fallback = false;      // singular system -> persistence model
};

// Conditional least squares of y_t on (1, y_{t-1}, ..., y_{t-p}) over the
// window, normal equations solved by Gaussian elimination with partial
// pivoting. A singular system falls back to the persistence model
// (intercept 0, coefficients (1, 0, ..., 0): predict the last value),
// flagged via `fallback`. Throws std::invalid_argument when the window is
// shorter than p + 5.
ArFit fit_ar(std::span<const double> window, std::size_t p);

// One-step-ahead forecast of the sample following `window` under the fit.
double ar_forecast(const ArFit& fit, std::span<const double> window);

struct ArimaTraceResult {
    DeltaTrace trace;
    std::size_t fallback_windows = 0; // fits that used the persistence model
};

// For each index t with a full MISSING-free history window of window_len
// samples ending at t-1 and sample t present: difference, fit, forecast
// y_t, delta_t = |forecast - actual|. Everything else stays UNDEFINED.
ArimaTraceResult arima_delta_trace(const Record& record,
                                   const ArimaConfig& cfg);

} // namespace bpad
