#include "bpad/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bpad/rng.hpp"

namespace bpad {

void WindowBatch::push_window(std::span<const double> values,
                              WindowOrigin origin) {
    if (values.size() != window_len) {
        throw std::invalid_argument("push_window: length mismatch");
    }
    data.insert(data.end(), values.begin(), values.end());
    origins.push_back(std::move(origin));
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) {
        throw std::invalid_argument("percentile: empty input");
    }
    if (!(p >= 0.0 && p <= 100.0)) {
        throw std::invalid_argument("percentile: p must be in [0, 100]");
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double rank = static_cast<double>(n - 1) * p / 100.0;
    const std::size_t lo = static_cast<std::size_t>(rank);
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= n) return values[n - 1];
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

ScaleStats compute_scale_stats(const Record& record) {
    std::vector<double> present;
    present.reserve(record.size());
    for (const auto& s : record.samples) {
        if (s.value) present.push_back(*s.value);
    }
    if (present.empty()) {
        throw std::invalid_argument("compute_scale_stats: record '" +
                                    record.id + "' has no numeric sample");
    }
    ScaleStats stats;
    stats.median = percentile(present, 50.0);
    stats.iqr = percentile(present, 75.0) - percentile(std::move(present), 25.0);
    return stats;
}

namespace {

Record affine_map(const Record& record, double shift, double divisor,
                  bool forward) {
    Record out = record;
    for (auto& s : out.samples) {
        if (!s.value) continue;
        if (forward) {
            s.value = (*s.value - shift) / divisor;
        } else {
            s.value = *s.value * divisor + shift;
        }
    }
    return out;
}

} // namespace

Record scale_record(const Record& record, const ScaleStats& stats) {
    const double divisor = stats.iqr == 0.0 ? 1.0 : stats.iqr;
    return affine_map(record, stats.median, divisor, true);
}

Record unscale_record(const Record& record, const ScaleStats& stats) {
    const double divisor = stats.iqr == 0.0 ? 1.0 : stats.iqr;
    return affine_map(record, stats.median, divisor, false);
}

WindowBatch make_windows(const Record& record, std::size_t window_len,
                         std::size_t step) {
    if (window_len < 1 || step < 1) {
        throw std::invalid_argument("make_windows: window_len and step must be >= 1");
    }
    WindowBatch batch;
    batch.window_len = window_len;
    if (record.size() < window_len) return batch;

    std::vector<double> buffer(window_len);
    for (std::size_t start = 0; start + window_len <= record.size();
         start += step) {
        bool complete = true;
        for (std::size_t k = 0; k < window_len; ++k) {
            if (record.missing(start + k)) {
                complete = false;
                break;
            }
            buffer[k] = record.value(start + k);
        }
        if (complete) {
            batch.push_window(buffer, {record.id, start});
        }
    }
    return batch;
}

WindowBatch clean_training_windows(const Record& record,
                                   const LabelMask& truth,
                                   std::size_t window_len) {
    if (truth.size() != record.size()) {
        throw std::invalid_argument(
            "clean_training_windows: truth mask length mismatch");
    }
    WindowBatch batch;
    batch.window_len = window_len;

    std::size_t run_start = 0;
    bool in_run = false;
    auto flush = [&](std::size_t run_end) {
        // run is [run_start, run_end)
        if (!in_run) return;
        in_run = false;
        if (run_end - run_start < window_len) return;
        for (std::size_t s = run_start; s + window_len <= run_end; ++s) {
            std::vector<double> buffer(window_len);
            for (std::size_t k = 0; k < window_len; ++k) {
                buffer[k] = record.value(s + k);
            }
            batch.push_window(buffer, {record.id, s});
        }
    };

    for (std::size_t i = 0; i < record.size(); ++i) {
        const bool clean =
            !record.missing(i) && truth.labels[i] == Label::Valid;
        if (clean && !in_run) {
            in_run = true;
            run_start = i;
        } else if (!clean) {
            flush(i);
        }
    }
    flush(record.size());
    return batch;
}

WindowBatch shuffle_and_pool(const std::vector<WindowBatch>& batches,
                             std::uint64_t seed) {
    WindowBatch pool;
    for (const auto& b : batches) {
        if (pool.origins.empty() && pool.window_len == 0) {
            pool.window_len = b.window_len;
        }
        if (b.window_len != pool.window_len) {
            throw std::invalid_argument(
                "shuffle_and_pool: mixed window lengths");
        }
        pool.data.insert(pool.data.end(), b.data.begin(), b.data.end());
        pool.origins.insert(pool.origins.end(), b.origins.begin(),
                            b.origins.end());
    }
    const std::size_t n = pool.size();
    if (n < 2) return pool;

    Rng rng(seed);
    const std::size_t w = pool.window_len;
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = rng.next_below(i + 1);
        if (j == i) continue;
        std::swap(pool.origins[i], pool.origins[j]);
        std::swap_ranges(pool.data.begin() + i * w,
                         pool.data.begin() + (i + 1) * w,
                         pool.data.begin() + j * w);
    }
    return pool;
}

SplitResult split_records(std::vector<std::string> record_ids,
                          const std::array<std::uint64_t, 3>& ratios,
                          std::uint64_t seed) {
    const std::uint64_t total = ratios[0] + ratios[1] + ratios[2];
    if (total == 0) {
        throw std::invalid_argument("split_records: ratios sum to zero");
    }
    const std::size_t n = record_ids.size();

    Rng rng = Rng(seed).derive(rng_stream::kSplit);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.next_below(i);
        std::swap(record_ids[i - 1], record_ids[j]);
    }

    // Largest-remainder apportionment of n over the three ratios.
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        const double exact = static_cast<double>(n) *
                             static_cast<double>(ratios[k]) /
                             static_cast<double>(total);
        counts[k] = static_cast<std::size_t>(exact);
        remainder[k] = exact - static_cast<double>(counts[k]);
        assigned += counts[k];
    }
    while (assigned < n) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < 3; ++k) {
            if (remainder[k] > remainder[best]) best = k;
        }
        ++counts[best];
        remainder[best] = -1.0;
        ++assigned;
    }

    SplitResult split;
    std::size_t pos = 0;
    auto take = [&](std::vector<std::string>& out, std::size_t count) {
        for (std::size_t i = 0; i < count && pos < n; ++i, ++pos) {
            out.push_back(std::move(record_ids[pos]));
        }
    };
    take(split.train, counts[0]);
    take(split.validation, counts[1]);
    take(split.test, n); // remainder
    return split;
}

} // namespace bpad
