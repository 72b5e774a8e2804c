#include "bpad/flatline.hpp"

#include <cmath>
#include <stdexcept>

namespace bpad {

double fit_slope(std::span<const double> window) {
    const std::size_t n = window.size();
    if (n < 2) {
        throw std::invalid_argument("fit_slope: need at least 2 samples");
    }
    // Slope = sum (x - xbar)(y - ybar) / sum (x - xbar)^2 with x = 0..n-1.
    const double xbar = 0.5 * static_cast<double>(n - 1);
    double ybar = 0.0;
    for (const double y : window) ybar += y;
    ybar /= static_cast<double>(n);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = static_cast<double>(i) - xbar;
        num += dx * (window[i] - ybar);
        den += dx * dx;
    }
    return num / den;
}

LabelMask detect_flatline(const Record& record, const FlatlineConfig& cfg) {
    if (cfg.window_size < 2) {
        throw std::invalid_argument("detect_flatline: window_size must be >= 2");
    }
    if (!(cfg.eps > 0.0)) {
        throw std::invalid_argument("detect_flatline: eps must be positive");
    }
    const std::size_t n = record.size();
    const std::size_t k = cfg.window_size;

    LabelMask mask;
    mask.source = LabelSource::Flatline;
    mask.labels.resize(n, Label::Valid);
    for (std::size_t i = 0; i < n; ++i) {
        if (record.missing(i)) mask.labels[i] = Label::Unknown;
    }
    if (n < k) return mask;

    std::vector<double> window(k);
    for (std::size_t start = 0; start + k <= n; ++start) {
        bool complete = true;
        for (std::size_t j = 0; j < k; ++j) {
            if (record.missing(start + j)) {
                complete = false;
                break;
            }
            window[j] = record.value(start + j);
        }
        if (!complete) continue;
        if (std::abs(fit_slope(window)) < cfg.eps) {
            for (std::size_t j = 0; j < k; ++j) {
                mask.labels[start + j] = Label::Artifact;
            }
        }
    }
    return mask;
}

} // namespace bpad
