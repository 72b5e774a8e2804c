// File formats: record CSVs, label CSVs, the binary model container, the
// key=value experiment configuration, and small sidecar files. Every
// writer is byte-deterministic; the model container round-trips weights
// bit-exactly.
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bpad/fusion.hpp"
#include "bpad/model.hpp"
#include "bpad/record.hpp"

namespace bpad {

// Malformed input; `line` is 1-based and 0 when no line applies.
class ParseError : public std::runtime_error {
  public:
    ParseError(std::string message, std::size_t line = 0);
    std::size_t line;
};

// ---------------------------------------------------------------- records

// CSV with header `time_min,bpm,label`. Empty bpm -> MISSING sample;
// label 0 -> Valid, 1 -> Artifact, empty -> Unknown. The four-column
// label-output format (`time_min,bpm,pred_label,source`) is accepted too,
// with pred_label read as the label column. Throws ParseError on any
// malformed row (with its line number) and on non-monotone time_min.
Record parse_record_csv(std::string_view text, const std::string& id = {});

// Inverse of parse_record_csv; values are written with the shortest
// representation that parses back to the same double, so the round trip
// reproduces the record exactly.
std::string write_record_csv(const Record& record);

// Prediction output: header `time_min,bpm,pred_label,source`, bpm to at
// most 6 significant digits, MISSING kept as an empty field. Throws
// std::invalid_argument when mask and record lengths differ.
std::string write_labels_csv(const Record& record, const LabelMask& mask);

// ----------------------------------------------------------------- models

// Container layout: 8-byte magic "BPMVAE01"; u64-LE byte length + UTF-8
// key=value metadata block (version, W, input_dim, hidden_dim, latent_dim,
// num_layers, mode, beta, seed); then each tensor in lexicographic name
// order as u64-LE name length, name, u64-LE rows, u64-LE cols, row-major
// IEEE-754 binary64 little-endian payload.
std::string save_model(const ModelParams& params);

// Throws ParseError on bad magic, unknown version, or truncation.
ModelParams load_model(std::string_view bytes);

// ------------------------------------------------------------ experiment

struct SynthSettings {
    std::uint64_t n_records = 85;
    std::uint64_t record_len = 480; // minutes
    double baseline_min = 60.0, baseline_max = 100.0; // mmHg
    double drift_amp = 5.0;
    double drift_period = 240.0; // minutes
    double ar_coeff = 0.85;
    double innovation = 2.5; // mmHg, >= 2 quantization steps
    double quant_step = 1.0; // mmHg
    double flatline_rate = 2.0; // events per 1000 minutes
    std::uint64_t flatline_dur_min = 5, flatline_dur_max = 120;
    double spike_rate = 4.0;
    double spike_amp_min = 15.0, spike_amp_max = 60.0;
    std::uint64_t spike_dur_min = 1, spike_dur_max = 3;
    double missing_rate = 1.0;
    std::uint64_t missing_dur_min = 1, missing_dur_max = 20;
};

// Every tunable of the pipeline with its default. Parsed from line-based
// `key=value` text (# comments); unknown keys are rejected.
struct ExperimentConfig {
    // preprocessing / model architecture
    std::uint64_t window_len = 60;
    std::uint64_t hidden_dim = 64;
    std::uint64_t latent_dim = 12;
    std::uint64_t num_layers = 2;

    // flatline detector
    std::uint64_t flatline_window = 10;
    double flatline_eps = 1e-9;
    bool flatline_on_scaled = false;

    // ARIMA baseline
    std::uint64_t arima_p = 3;
    std::uint64_t arima_d = 1;
    std::uint64_t arima_window = 60;

    // training
    std::uint64_t epochs = 50;
    std::uint64_t batch_size = 128;
    double learning_rate = 1e-3;
    std::string model_kind = "VAE"; // VAE | AE | ARIMA
    double beta = 0.1;
    double q = 90.0;
    std::uint64_t seed = 1;

    // sweep grids
    std::vector<double> beta_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    std::vector<double> q_grid = {90.0, 92.0, 94.0, 96.0, 98.0};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::uint64_t sweep_jobs = 1;

    // data
    std::array<std::uint64_t, 3> split_ratios = {53, 15, 17};
    std::string data_dir = "data";

    SynthSettings synth;
};

// Parses `key=value` lines; `#` starts a comment, blank lines are
// ignored. Unknown keys or unparsable values throw ParseError with the
// line number. Grid-valued keys take comma-separated lists.
ExperimentConfig parse_config(std::string_view text);

// Applies one `key=value` override (the CLI --set surface).
void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

// Full resolved dump, every key echoed; parse_config(serialize_config(c))
// reproduces c exactly.
std::string serialize_config(const ExperimentConfig& cfg);

// ----------------------------------------------------------------- extras

// Threshold sidecar: key=value lines model_id, validation_id, q, value.
std::string write_threshold(const Threshold& threshold);
Threshold read_threshold(std::string_view text);

// Loss trace CSV: header `epoch,recon,kl,total`, one row per epoch.
std::string write_loss_trace(const std::vector<EpochLoss>& trace);

// Whole-file helpers; throw std::runtime_error with the path on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// Shortest decimal form of v that parses back to the same double.
std::string format_double(double v);

} // namespace bpad
