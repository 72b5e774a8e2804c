// Confusion counting, sensitivity/specificity, multi-seed statistics, and
// the grid-sweep harness that trains models, calibrates thresholds on the
// validation split, deploys the fused detector on the test split, and
// aggregates mean/sigma across seeds.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bpad/arima.hpp"
#include "bpad/flatline.hpp"
#include "bpad/fusion.hpp"
#include "bpad/io.hpp"
#include "bpad/model.hpp"
#include "bpad/preprocess.hpp"
#include "bpad/record.hpp"

namespace bpad {

// Artifact is the positive class.
struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp; fp += o.fp; tn += o.tn; fn += o.fn;
        return *this;
    }
};

// Samples where either side is Unknown are excluded. Throws
// std::invalid_argument on length mismatch.
ConfusionCounts confusion(const LabelMask& pred, const LabelMask& truth);

// tp/(tp+fn) and tn/(tn+fp); nullopt on a zero denominator, never a
// silent 0 or 1.
std::optional<double> sensitivity(const ConfusionCounts& c);
std::optional<double> specificity(const ConfusionCounts& c);

// Mean and population standard deviation over the defined entries;
// nullopt when every entry is undefined.
struct MeanStd {
    std::optional<double> mean;
    std::optional<double> std_dev;
};
MeanStd aggregate(const std::vector<std::optional<double>>& values);

// One experimental setup of the grid. kind is "VAE", "AE", or "ARIMA";
// beta is meaningful only for VAE (0 otherwise).
struct SetupId {
    std::string kind;
    double beta = 0.0;
    double q = 90.0;

    std::string label() const; // e.g. "VAE_b0.1_q90"
};

struct ExperimentStats {
    SetupId setup;
    MeanStd sens;
    MeanStd spec;
    std::size_t iterations = 0;
};

// ------------------------------------------------------------------ data

struct Dataset {
    std::vector<Record> records; // truth masks attached
    SplitResult split;           // ids per split

    const Record& by_id(const std::string& id) const;
};

// Reads manifest.csv (`record_id,split,seed,index`) plus records/<id>.csv.
Dataset load_dataset(const std::filesystem::path& dir);

// Scales every training-split record, extracts clean windows, pools them
// under the seed's shuffle stream, and trains one model. The shared
// implementation behind both the train command and the sweep harness.
TrainResult train_on_dataset(const ExperimentConfig& cfg, const Dataset& data,
                             ModelKind kind, double beta, std::uint64_t seed);

// --------------------------------------------------------------- harness

// Owns the per-record preprocessing (scaling, flatline masks) and the
// per-(kind, beta, seed) model units, so models and delta traces are
// computed once and reused across every Q of the sweep. When a cache
// directory is set, trained models are persisted there and loaded back on
// the next run instead of retrained (bit-identical either way).
class Evaluator {
  public:
    Evaluator(ExperimentConfig cfg, Dataset data);

    const ExperimentConfig& config() const { return cfg_; }
    const Dataset& data() const { return data_; }

    void set_model_cache_dir(const std::filesystem::path& dir);

    // All setups of the configured grid, in emission order:
    // VAE x beta_grid x q_grid, then AE x q_grid, then ARIMA x q_grid.
    std::vector<SetupId> grid() const;

    // Runs one setup across cfg.seeds (ARIMA ignores the seed list and
    // runs once). Training failures are rethrown with the seed id.
    ExperimentStats evaluate(const SetupId& setup);

    // Precomputes the model units needed by `setups`, `jobs` at a time
    // (jobs <= 1 means inline). Results are identical regardless of jobs.
    void prepare(const std::vector<SetupId>& setups, std::size_t jobs);

    // prepare + evaluate over the whole grid.
    std::vector<ExperimentStats> sweep();

    // Registers externally trained parameters (e.g. loaded from a model
    // file) under their own (kind, beta, seed); deltas are still computed
    // on first use.
    void inject_model(ModelParams params);

    // Access for inspection: trained parameters and per-record deltas.
    const ModelParams& model(const std::string& kind, double beta,
                             std::uint64_t seed);
    const DeltaTrace& delta_trace(const std::string& kind, double beta,
                                  std::uint64_t seed,
                                  const std::string& record_id);
    const LabelMask& flatline_mask(const std::string& record_id) const;
    const Record& scaled_record(const std::string& record_id) const;
    std::size_t arima_fallback_windows();

    Threshold calibrate(const SetupId& setup, std::uint64_t seed);

  private:
    struct Prepared {
        const Record* raw = nullptr;
        Record scaled;
        ScaleStats stats;
        LabelMask flatline;
    };
    struct ModelUnit {
        std::string kind;
        double beta = 0.0;
        std::uint64_t seed = 0;
        bool ready = false;      // deltas computed
        bool has_params = false; // trained, loaded, or injected
        ModelParams params;
        std::vector<EpochLoss> trace;
        std::map<std::string, DeltaTrace> deltas; // validation + test records
        std::size_t fallback_windows = 0;         // ARIMA only
    };

    static std::string unit_key(const std::string& kind, double beta,
                                std::uint64_t seed);
    ModelUnit& unit(const std::string& kind, double beta, std::uint64_t seed);
    void run_unit(ModelUnit& u);
    const Prepared& prepared(const std::string& record_id) const;

    ExperimentConfig cfg_;
    Dataset data_;
    std::map<std::string, Prepared> prepared_;
    std::map<std::string, ModelUnit> units_;
    std::filesystem::path model_cache_dir_;
};

// CSV renderers. Sweep table: `kind,beta,q,sens_mean,sens_std,spec_mean,
// spec_std`; undefined statistics render as empty fields. Plot data is
// long-form `series,q,mean,std` for one metric.
std::string sweep_csv(const std::vector<ExperimentStats>& rows);
std::string sweep_csv_row(const ExperimentStats& row);
// Inverse of sweep_csv_row for one data line (iterations not recoverable).
ExperimentStats parse_sweep_row(const std::string& line);
std::string plot_csv(const std::vector<ExperimentStats>& rows,
                     const std::string& metric); // "sensitivity"|"specificity"

} // namespace bpad
