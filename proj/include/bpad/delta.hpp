// Per-sample reconstruction/forecast error trace. A sample covered by no
// window keeps defined == 0 and is excluded downstream.
#pragma once

#include <cstdint>
#include <vector>

namespace bpad {

struct DeltaTrace {
    std::vector<double> delta;        // |x - x'| aggregated per sample
    std::vector<double> reconstruction; // aggregated model output per sample
    std::vector<std::uint8_t> defined;

    std::size_t size() const { return delta.size(); }
    void resize(std::size_t n) {
        delta.assign(n, 0.0);
        reconstruction.assign(n, 0.0);
        defined.assign(n, 0);
    }
};

} // namespace bpad
