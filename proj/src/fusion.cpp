#include "bpad/fusion.hpp"

#include <stdexcept>

#include "bpad/preprocess.hpp"

namespace bpad {

Threshold calibrate_threshold(const std::vector<DeltaTrace>& validation_deltas,
                              const std::vector<LabelMask>& flatline_masks,
                              double q, const std::string& model_id,
                              const std::string& validation_id) {
    if (validation_deltas.size() != flatline_masks.size()) {
        throw std::invalid_argument(
            "calibrate_threshold: trace/mask count mismatch");
    }
    std::vector<double> pooled;
    for (std::size_t r = 0; r < validation_deltas.size(); ++r) {
        const DeltaTrace& trace = validation_deltas[r];
        const LabelMask& mask = flatline_masks[r];
        if (trace.size() != mask.size()) {
            throw std::invalid_argument(
                "calibrate_threshold: trace/mask length mismatch in record " +
                std::to_string(r));
        }
        for (std::size_t i = 0; i < trace.size(); ++i) {
            if (!trace.defined[i]) continue;
            if (mask.labels[i] == Label::Artifact) continue;
            pooled.push_back(trace.delta[i]);
        }
    }
    if (pooled.empty()) {
        throw std::invalid_argument(
            "calibrate_threshold: no delta values remain after filtering");
    }
    Threshold threshold;
    threshold.q = q;
    threshold.value = percentile(std::move(pooled), q);
    threshold.model_id = model_id;
    threshold.validation_id = validation_id;
    return threshold;
}

LabelMask detect_spikes(const DeltaTrace& delta, const Threshold& threshold) {
    LabelMask mask;
    mask.source = LabelSource::Spike;
    mask.labels.resize(delta.size(), Label::Unknown);
    for (std::size_t i = 0; i < delta.size(); ++i) {
        if (!delta.defined[i]) continue;
        mask.labels[i] =
            delta.delta[i] > threshold.value ? Label::Artifact : Label::Valid;
    }
    return mask;
}

LabelMask fuse(const LabelMask& flatline, const LabelMask& spikes) {
    return or_merge(flatline, spikes);
}

} // namespace bpad
