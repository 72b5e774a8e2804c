// Core domain types for minute-resolution mean blood pressure records and
// per-sample artifact labels. Pure data plus validation; no detection logic.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bpad {

enum class Label : std::uint8_t { Valid = 0, Artifact = 1, Unknown = 2 };

enum class LabelSource : std::uint8_t { Truth, Flatline, Spike, Fused };

const char* label_source_name(LabelSource source);

// Per-sample binary artifact mask, aligned 1:1 with the owning record.
// Missing samples always carry Unknown.
struct LabelMask {
    LabelSource source = LabelSource::Truth;
    std::vector<Label> labels;

    std::size_t size() const { return labels.size(); }
    std::size_t count(Label value) const;
};

// One sample of a record: wall-clock minute index plus the value in mmHg,
// or nullopt where the monitor produced no number.
struct Sample {
    std::int64_t minute = 0;
    std::optional<double> value;
};

// One patient's minute-resolution signal with optional expert annotations.
// Immutable by convention once constructed; all pipeline stages copy.
struct Record {
    std::string id;
    std::vector<Sample> samples;
    std::optional<LabelMask> truth;

    std::size_t size() const { return samples.size(); }
    bool missing(std::size_t i) const { return !samples[i].value.has_value(); }
    double value(std::size_t i) const { return *samples[i].value; }
    std::size_t count_present() const;
};

// Record-level robust scaling statistics (median / interquartile range).
struct ScaleStats {
    double median = 0.0;
    double iqr = 0.0;
};

struct ValidationResult {
    bool accepted = false;
    std::string rule;   // "index-gap" | "insufficient-data" | "empty"
    std::string detail;

    static ValidationResult ok() { return {true, {}, {}}; }
};

// Admission rule: minute indices strictly increasing with unit step, and at
// least 90% of samples numeric. Rejection is a value, not an error.
ValidationResult validate_record(const Record& record);

// OR fusion of two masks: Artifact wherever either side says Artifact,
// Unknown only where both sides are Unknown. Result source is Fused.
// Throws std::invalid_argument on length mismatch.
LabelMask or_merge(const LabelMask& a, const LabelMask& b);

} // namespace bpad
