#include "bpad/record.hpp"

#include <algorithm>
#include <stdexcept>

namespace bpad {

const char* label_source_name(LabelSource source) {
    switch (source) {
        case LabelSource::Truth: return "truth";
        case LabelSource::Flatline: return "flatline";
        case LabelSource::Spike: return "spike";
        case LabelSource::Fused: return "fused";
    }
    return "?";
}

std::size_t LabelMask::count(Label value) const {
    return static_cast<std::size_t>(
        std::count(labels.begin(), labels.end(), value));
}

std::size_t Record::count_present() const {
    std::size_t n = 0;
    for (const auto& s : samples) {
        if (s.value.has_value()) ++n;
    }
    return n;
}

ValidationResult validate_record(const Record& record) {
    if (record.samples.empty()) {
        return {false, "empty", "record has no samples"};
    }
    for (std::size_t i = 1; i < record.samples.size(); ++i) {
        if (record.samples[i].minute != record.samples[i - 1].minute + 1) {
            return {false, "index-gap",
                    "minute index must advance by one at row " +
                        std::to_string(i) + " (" +
                        std::to_string(record.samples[i - 1].minute) + " -> " +
                        std::to_string(record.samples[i].minute) + ")"};
        }
    }
    const double fraction = static_cast<double>(record.count_present()) /
                            static_cast<double>(record.size());
    if (fraction < 0.90) {
        return {false, "insufficient-data",
                "only " + std::to_string(record.count_present()) + "/" +
                    std::to_string(record.size()) + " samples are numeric"};
    }
    return ValidationResult::ok();
}

LabelMask or_merge(const LabelMask& a, const LabelMask& b) {
    if (a.labels.size() != b.labels.size()) {
        throw std::invalid_argument("or_merge: mask lengths differ (" +
                                    std::to_string(a.labels.size()) + " vs " +
                                    std::to_string(b.labels.size()) + ")");
    }
    LabelMask out;
    out.source = LabelSource::Fused;
    out.labels.resize(a.labels.size());
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        const Label la = a.labels[i];
        const Label lb = b.labels[i];
        if (la == Label::Artifact || lb == Label::Artifact) {
            out.labels[i] = Label::Artifact;
        } else if (la == Label::Unknown && lb == Label::Unknown) {
            out.labels[i] = Label::Unknown;
        } else {
            out.labels[i] = Label::Valid;
        }
    }
    return out;
}

} // namespace bpad
