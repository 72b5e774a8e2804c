// Seeded generator of BPm-like records with ground-truth flatline and
// spike artifacts plus missing runs, standing in for private clinical
// data. Deterministic: record i is produced from a PRNG substream derived
// from (seed, i), so generation order is irrelevant.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bpad/io.hpp"
#include "bpad/record.hpp"

namespace bpad {

// One injected event, for the generation log and self-audit.
struct SynthSpan {
    std::string kind; // "flatline" | "spike" | "missing"
    std::size_t start = 0;
    std::size_t length = 0;
    double value = 0.0; // held value (flatline) or amplitude (spike)
};

struct SynthRecord {
    Record record; // truth labels attached
    std::vector<SynthSpan> spans;
    std::size_t skipped_events = 0; // no placement found / budget exceeded
    // Longest run of identical consecutive quantized values outside the
    // injected flatlines; tracked so accidental flatlines are auditable.
    std::size_t longest_clean_constant_run = 0;
};

// Clean signal: per-record baseline U[baseline_min, baseline_max] +
// sinusoidal drift (amplitude drift_amp, period drift_period, random
// phase) + stationary AR(1) noise (ar_coeff, innovation), quantized to
// quant_step. Event counts are Poisson(rate * len / 1000); flatlines hold
// the last clean value, spikes add a signed amplitude, missing runs drop
// samples (capped so the record stays >= 90% numeric). Events keep a
// 2-sample margin from each other and from the record edges; an event
// with no valid placement after 100 tries is skipped and counted.
SynthRecord gen_record(const SynthSettings& cfg, std::uint64_t seed,
                       std::uint64_t record_index);

struct SynthDatasetResult {
    std::vector<std::string> record_ids;
    SplitResult split;
    std::size_t total_spans = 0;
    std::size_t total_skipped = 0;
};

// Generates cfg.synth.n_records records (ids r000, r001, ...), writes
// records/<id>.csv, manifest.csv (`record_id,split,seed,index`, split via
// split_records with cfg.split_ratios), and spans.csv
// (`record_id,kind,start,length,value`).
SynthDatasetResult gen_dataset(const ExperimentConfig& cfg,
                               const std::filesystem::path& out_dir);

} // namespace bpad
