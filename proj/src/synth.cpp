#include "bpad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bpad/preprocess.hpp"
#include "bpad/rng.hpp"

namespace bpad {

namespace {

double quantize(double v, double step) {
    return step > 0.0 ? std::round(v / step) * step : v;
}

// Knuth's product-of-uniforms sampler; exact for the small rates used here.
std::uint64_t poisson(Rng& rng, double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    std::uint64_t k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= rng.next_uniform();
    } while (p > limit);
    return k - 1;
}

std::uint64_t uniform_int(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
    return lo + rng.next_below(hi - lo + 1);
}

constexpr std::size_t kMargin = 2;        // samples between events / edges
constexpr std::size_t kPlacementTries = 100;

// Draws a start so that [start, start+len) plus the margin is free and
// away from the record edges; false when no placement was found.
bool place_span(Rng& rng, const std::vector<char>& occupied, std::size_t n,
                std::size_t len, std::size_t& start_out) {
    if (len + 2 * kMargin > n) return false;
    const std::size_t max_start = n - kMargin - len;
    for (std::size_t attempt = 0; attempt < kPlacementTries; ++attempt) {
        const std::size_t start =
            kMargin + rng.next_below(max_start - kMargin + 1);
        bool free = true;
        for (std::size_t i = start - kMargin; i < start + len + kMargin; ++i) {
            if (occupied[i]) {
                free = false;
                break;
            }
        }
        if (free) {
            start_out = start;
            return true;
        }
    }
    return false;
}

} // namespace

SynthRecord gen_record(const SynthSettings& cfg, std::uint64_t seed,
                       std::uint64_t record_index) {
    const std::size_t n = cfg.record_len;
    if (n < 4 * kMargin) {
        throw std::invalid_argument("gen_record: record_len too small");
    }
    Rng rng = Rng(seed).derive(rng_stream::kSynthRecordBase + record_index);

    // Clean signal: baseline + sinusoidal drift + stationary AR(1) noise.
    const double baseline =
        cfg.baseline_min +
        rng.next_uniform() * (cfg.baseline_max - cfg.baseline_min);
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double phase = rng.next_uniform() * two_pi;
    const double rho = cfg.ar_coeff;
    double ar = rng.next_gaussian() * cfg.innovation /
                std::sqrt(std::max(1.0 - rho * rho, 1e-12));
    std::vector<double> values(n);
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) ar = rho * ar + cfg.innovation * rng.next_gaussian();
        const double drift =
            cfg.drift_period > 0.0
                ? cfg.drift_amp * std::sin(two_pi * static_cast<double>(t) /
                                               cfg.drift_period +
                                           phase)
                : 0.0;
        values[t] = quantize(baseline + drift + ar, cfg.quant_step);
    }

    // Event counts first, then placements, in a fixed draw order.
    const double per_min = static_cast<double>(n) / 1000.0;
    const std::uint64_t n_flatline = poisson(rng, cfg.flatline_rate * per_min);
    const std::uint64_t n_spike = poisson(rng, cfg.spike_rate * per_min);
    const std::uint64_t n_missing = poisson(rng, cfg.missing_rate * per_min);

    SynthRecord out;
    LabelMask truth;
    truth.source = LabelSource::Truth;
    truth.labels.assign(n, Label::Valid);
    std::vector<char> occupied(n, 0);
    std::vector<char> missing(n, 0);

    for (std::uint64_t e = 0; e < n_flatline; ++e) {
        const std::size_t len =
            uniform_int(rng, cfg.flatline_dur_min, cfg.flatline_dur_max);
        std::size_t start = 0;
        if (!place_span(rng, occupied, n, len, start)) {
            ++out.skipped_events;
            continue;
        }
        const double held = values[start - 1];
        for (std::size_t i = start; i < start + len; ++i) {
            values[i] = held;
            truth.labels[i] = Label::Artifact;
            occupied[i] = 1;
        }
        out.spans.push_back({"flatline", start, len, held});
    }

    for (std::uint64_t e = 0; e < n_spike; ++e) {
        const std::size_t len =
            uniform_int(rng, cfg.spike_dur_min, cfg.spike_dur_max);
        std::size_t start = 0;
        const bool placed = place_span(rng, occupied, n, len, start);
        const double magnitude =
            cfg.spike_amp_min +
            rng.next_uniform() * (cfg.spike_amp_max - cfg.spike_amp_min);
        const double amp = rng.next_below(2) == 0 ? magnitude : -magnitude;
        if (!placed) {
            ++out.skipped_events;
            continue;
        }
        for (std::size_t i = start; i < start + len; ++i) {
            values[i] = quantize(values[i] + amp, cfg.quant_step);
            truth.labels[i] = Label::Artifact;
            occupied[i] = 1;
        }
        out.spans.push_back({"spike", start, len, amp});
    }

    // Missing runs are capped so the record stays comfortably above the
    // 90%-numeric admission rule.
    const std::size_t missing_budget = n * 8 / 100;
    std::size_t missing_used = 0;
    for (std::uint64_t e = 0; e < n_missing; ++e) {
        const std::size_t len =
            uniform_int(rng, cfg.missing_dur_min, cfg.missing_dur_max);
        std::size_t start = 0;
        if (missing_used + len > missing_budget ||
            !place_span(rng, occupied, n, len, start)) {
            ++out.skipped_events;
            continue;
        }
        for (std::size_t i = start; i < start + len; ++i) {
            missing[i] = 1;
            truth.labels[i] = Label::Unknown;
            occupied[i] = 1;
        }
        missing_used += len;
        out.spans.push_back({"missing", start, len, 0.0});
    }

    out.record.samples.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        out.record.samples[t].minute = static_cast<std::int64_t>(t);
        if (!missing[t]) out.record.samples[t].value = values[t];
    }
    out.record.truth = std::move(truth);

    // Audit: longest run of identical quantized values outside injected
    // flatlines (missing samples break runs).
    std::size_t run = 0;
    bool in_flatline_or_gap = true;
    double prev = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const bool excluded =
            missing[t] || out.record.truth->labels[t] == Label::Artifact;
        if (excluded) {
            in_flatline_or_gap = true;
            run = 0;
            continue;
        }
        if (in_flatline_or_gap || values[t] != prev) {
            run = 1;
            in_flatline_or_gap = false;
        } else {
            ++run;
        }
        prev = values[t];
        out.longest_clean_constant_run =
            std::max(out.longest_clean_constant_run, run);
    }
    return out;
}

SynthDatasetResult gen_dataset(const ExperimentConfig& cfg,
                               const std::filesystem::path& out_dir) {
    const std::uint64_t n = cfg.synth.n_records;
    if (n < 3) {
        throw std::invalid_argument("gen_dataset: need at least 3 records");
    }
    std::size_t width = 3;
    for (std::uint64_t v = 1000; n > v; v *= 10) ++width;

    SynthDatasetResult result;
    std::string spans_csv = "record_id,kind,start,length,value\n";
    for (std::uint64_t i = 0; i < n; ++i) {
        std::string id = std::to_string(i);
        id.insert(0, width - std::min(width, id.size()), '0');
        id.insert(0, "r");

        const SynthRecord sr = gen_record(cfg.synth, cfg.seed, i);
        Record record = sr.record;
        record.id = id;
        write_file(out_dir / "records" / (id + ".csv"),
                   write_record_csv(record));
        for (const SynthSpan& span : sr.spans) {
            spans_csv += id + "," + span.kind + "," +
                         std::to_string(span.start) + "," +
                         std::to_string(span.length) + "," +
                         format_double(span.value) + "\n";
        }
        result.total_spans += sr.spans.size();
        result.total_skipped += sr.skipped_events;
        result.record_ids.push_back(std::move(id));
    }

    result.split = split_records(result.record_ids, cfg.split_ratios, cfg.seed);
    std::string manifest = "record_id,split,seed,index\n";
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::string& id = result.record_ids[i];
        const char* split = "train";
        if (std::find(result.split.validation.begin(),
                      result.split.validation.end(),
                      id) != result.split.validation.end()) {
            split = "validation";
        } else if (std::find(result.split.test.begin(),
                             result.split.test.end(),
                             id) != result.split.test.end()) {
            split = "test";
        }
        manifest += id + "," + split + "," + std::to_string(cfg.seed) + "," +
                    std::to_string(i) + "\n";
    }
    write_file(out_dir / "manifest.csv", manifest);
    write_file(out_dir / "spans.csv", spans_csv);
    return result;
}

} // namespace bpad
