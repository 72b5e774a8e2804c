#include "bpad/arima.hpp"

#include <cmath>
#include <stdexcept>

namespace bpad {

std::vector<double> difference(std::span<const double> series, std::size_t d) {
    if (series.size() <= d) {
        throw std::invalid_argument("difference: series too short");
    }
    std::vector<double> out(series.begin(), series.end());
    for (std::size_t round = 0; round < d; ++round) {
        for (std::size_t i = 0; i + 1 < out.size(); ++i) {
            out[i] = out[i + 1] - out[i];
        }
        out.pop_back();
    }
    return out;
}

namespace {

// Solves A x = b in place; returns false when a pivot is negligible
// relative to the largest entry of A (singular system).
bool solve_gaussian(std::vector<double>& a, std::vector<double>& b,
                    std::size_t n) {
    double scale = 0.0;
    for (const double v : a) scale = std::max(scale, std::abs(v));
    const double tiny = 1e-12 * std::max(scale, 1e-300);

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < n; ++row) {
            if (std::abs(a[row * n + col]) > std::abs(a[pivot * n + col])) {
                pivot = row;
            }
        }
        if (std::abs(a[pivot * n + col]) < tiny) return false;
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a[col * n + j], a[pivot * n + j]);
            }
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t row = col + 1; row < n; ++row) {
            const double factor = a[row * n + col] / a[col * n + col];
            if (factor == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) {
                a[row * n + j] -= factor * a[col * n + j];
            }
            b[row] -= factor * b[col];
        }
    }
    for (std::size_t col = n; col-- > 0;) {
        double v = b[col];
        for (std::size_t j = col + 1; j < n; ++j) {
            v -= a[col * n + j] * b[j];
        }
        b[col] = v / a[col * n + col];
    }
    return true;
}

ArFit persistence_fit(std::size_t p) {
    ArFit fit;
    fit.coeffs.assign(p, 0.0);
    fit.coeffs[0] = 1.0;
    fit.fallback = true;
    return fit;
}

} // namespace

ArFit fit_ar(std::span<const double> window, std::size_t p) {
    if (p < 1) {
        throw std::invalid_argument("fit_ar: p must be >= 1");
    }
    if (window.size() < p + 5) {
        throw std::invalid_argument("fit_ar: window length " +
                                    std::to_string(window.size()) +
                                    " < p + 5 = " + std::to_string(p + 5));
    }
    const std::size_t n = p + 1;          // unknowns: intercept + p lags
    const std::size_t rows = window.size() - p;

    // Normal equations X^T X and X^T y; regressor 0 is the intercept,
    // regressor 1+i is lag i+1.
    std::vector<double> xtx(n * n, 0.0);
    std::vector<double> xty(n, 0.0);
    std::vector<double> reg(n);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = p + r;
        reg[0] = 1.0;
        for (std::size_t i = 0; i < p; ++i) reg[1 + i] = window[t - 1 - i];
        const double y = window[t];
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                xtx[i * n + j] += reg[i] * reg[j];
            }
            xty[i] += reg[i] * y;
        }
    }
    if (!solve_gaussian(xtx, xty, n)) {
        return persistence_fit(p);
    }
    ArFit fit;
    fit.intercept = xty[0];
    fit.coeffs.assign(xty.begin() + 1, xty.end());
    return fit;
}

double ar_forecast(const ArFit& fit, std::span<const double> window) {
    if (window.size() < fit.coeffs.size()) {
        throw std::invalid_argument("ar_forecast: window shorter than order");
    }
    double v = fit.intercept;
    for (std::size_t i = 0; i < fit.coeffs.size(); ++i) {
        v += fit.coeffs[i] * window[window.size() - 1 - i];
    }
    return v;
}

ArimaTraceResult arima_delta_trace(const Record& record,
                                   const ArimaConfig& cfg) {
    if (cfg.d > 1) {
        throw std::invalid_argument("arima_delta_trace: d must be 0 or 1");
    }
    if (cfg.window_len < cfg.p + cfg.d + 5) {
        throw std::invalid_argument(
            "arima_delta_trace: window_len too small for the AR order");
    }
    const std::size_t n = record.size();
    const std::size_t w = cfg.window_len;
    ArimaTraceResult result;
    result.trace.resize(n);
    if (n < w + 1) return result;

    std::vector<double> history(w);
    for (std::size_t t = w; t < n; ++t) {
        if (record.missing(t)) continue;
        bool complete = true;
        for (std::size_t j = 0; j < w; ++j) {
            if (record.missing(t - w + j)) {
                complete = false;
                break;
            }
            history[j] = record.value(t - w + j);
        }
        if (!complete) continue;

        const std::vector<double> series = difference(history, cfg.d);
        const ArFit fit = fit_ar(series, cfg.p);
        if (fit.fallback) ++result.fallback_windows;
        double forecast = ar_forecast(fit, series);
        if (cfg.d == 1) forecast += history.back(); // un-difference
        result.trace.delta[t] = std::abs(forecast - record.value(t));
        result.trace.reconstruction[t] = forecast;
        result.trace.defined[t] = 1;
    }
    return result;
}

} // namespace bpad
