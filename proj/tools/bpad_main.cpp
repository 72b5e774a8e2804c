// bpad: offline experiment driver for the artifact-detection pipeline.
// Subcommands: synth, train, calibrate, detect, evaluate, sweep.
// Exit codes: 0 success, 2 configuration error, 3 numeric failure,
// 4 protocol misuse.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bpad/arima.hpp"
#include "bpad/evaluation.hpp"
#include "bpad/flatline.hpp"
#include "bpad/fusion.hpp"
#include "bpad/io.hpp"
#include "bpad/model.hpp"
#include "bpad/preprocess.hpp"
#include "bpad/synth.hpp"

namespace {

namespace fs = std::filesystem;
using namespace bpad;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitProtocol = 4;

// A structurally valid request that the pipeline state cannot honor
// (e.g. detect without any way to obtain a threshold).
class ProtocolError : public std::runtime_error {
  public:
    explicit ProtocolError(const std::string& message)
        : std::runtime_error(message) {}
};

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir = "out";
    std::int64_t seed = -1; // -1: keep the config value
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path,
                    "Experiment config file (key=value lines)");
    cmd->add_option("--set", opts.sets,
                    "Override one config key (key=value, repeatable)");
    cmd->add_option("--out", opts.out_dir, "Output directory");
    cmd->add_option("--seed", opts.seed, "Override the config seed");
}

// Defaults + config file + --set overrides + --seed, then the resolved
// dump — always written before any real work happens.
ExperimentConfig resolve_config(const CommonOpts& opts) {
    ExperimentConfig cfg;
    if (!opts.config_path.empty()) {
        cfg = parse_config(read_file(opts.config_path));
    }
    for (const std::string& kv : opts.sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ParseError("--set expects key=value, got '" + kv + "'");
        }
        apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opts.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(opts.seed);
    }
    write_file(fs::path(opts.out_dir) / "resolved_config.txt",
               serialize_config(cfg));
    return cfg;
}

std::string count_label(const LabelMask& mask) {
    return std::to_string(mask.count(Label::Artifact)) + " artifact, " +
           std::to_string(mask.count(Label::Valid)) + " valid, " +
           std::to_string(mask.count(Label::Unknown)) + " unknown";
}

int cmd_synth(const CommonOpts& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const SynthDatasetResult result = gen_dataset(cfg, opts.out_dir);
    std::cout << "generated " << result.record_ids.size() << " records ("
              << result.split.train.size() << " train / "
              << result.split.validation.size() << " validation / "
              << result.split.test.size() << " test), "
              << result.total_spans << " injected spans, "
              << result.total_skipped << " skipped events\n";
    return kExitOk;
}

int cmd_train(const CommonOpts& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    if (cfg.model_kind == "ARIMA") {
        throw ProtocolError("model_kind=ARIMA needs no training");
    }
    const ModelKind kind = model_kind_from_string(cfg.model_kind);
    const Dataset data = load_dataset(cfg.data_dir);
    const double beta = kind == ModelKind::VAE ? cfg.beta : 0.0;
    const TrainResult result =
        train_on_dataset(cfg, data, kind, beta, cfg.seed);
    write_file(fs::path(opts.out_dir) / "model.bpm",
               save_model(result.params));
    write_file(fs::path(opts.out_dir) / "loss_trace.csv",
               write_loss_trace(result.trace));
    std::cout << "trained " << cfg.model_kind << " (beta="
              << format_double(beta) << ", seed=" << cfg.seed << "), final "
              << "loss " << format_double(result.trace.back().total) << "\n";
    return kExitOk;
}

// Builds the SetupId + per-unit seed for the configured single model,
// injecting loaded parameters when a model file was given.
SetupId single_setup(const ExperimentConfig& cfg, const std::string& model_path,
                     Evaluator& evaluator, std::uint64_t& seed_out) {
    SetupId setup;
    setup.q = cfg.q;
    if (!model_path.empty()) {
        ModelParams params = load_model(read_file(model_path));
        setup.kind = model_kind_name(params.kind);
        setup.beta = params.kind == ModelKind::VAE ? params.beta : 0.0;
        seed_out = params.seed;
        evaluator.inject_model(std::move(params));
    } else if (cfg.model_kind == "ARIMA") {
        setup.kind = "ARIMA";
        seed_out = 0;
    } else {
        setup.kind = cfg.model_kind;
        setup.beta = cfg.model_kind == "VAE" ? cfg.beta : 0.0;
        seed_out = cfg.seed;
    }
    return setup;
}

int cmd_calibrate(const CommonOpts& opts, const std::string& model_path) {
    const ExperimentConfig cfg = resolve_config(opts);
    if (model_path.empty() && cfg.model_kind != "ARIMA") {
        throw ProtocolError(
            "calibrate needs --model MODEL_FILE (or model_kind=ARIMA); "
            "training happens in 'train'");
    }
    Evaluator evaluator(cfg, load_dataset(cfg.data_dir));
    std::uint64_t seed = 0;
    const SetupId setup = single_setup(cfg, model_path, evaluator, seed);
    const Threshold threshold = evaluator.calibrate(setup, seed);
    write_file(fs::path(opts.out_dir) / "threshold.txt",
               write_threshold(threshold));
    std::cout << "threshold q=" << format_double(threshold.q) << " -> "
              << format_double(threshold.value) << " (model "
              << threshold.model_id << ")\n";
    return kExitOk;
}

int cmd_detect(const CommonOpts& opts, const std::string& model_path,
               const std::string& threshold_path,
               const std::vector<std::string>& record_paths) {
    const ExperimentConfig cfg = resolve_config(opts);
    const bool arima = model_path.empty();
    if (arima && cfg.model_kind != "ARIMA") {
        throw ProtocolError(
            "detect needs --model MODEL_FILE unless model_kind=ARIMA");
    }
    ModelParams params;
    if (!arima) params = load_model(read_file(model_path));

    Threshold threshold;
    if (!threshold_path.empty()) {
        threshold = read_threshold(read_file(threshold_path));
    } else {
        // Calibrate on the fly; requires a dataset with a validation split.
        Dataset data;
        try {
            data = load_dataset(cfg.data_dir);
        } catch (const std::exception& e) {
            throw ProtocolError(
                std::string("no --threshold file and no validation data to "
                            "calibrate on: ") +
                e.what());
        }
        Evaluator evaluator(cfg, std::move(data));
        std::uint64_t seed = 0;
        const SetupId setup = single_setup(cfg, model_path, evaluator, seed);
        threshold = evaluator.calibrate(setup, seed);
    }

    const FlatlineConfig fl{cfg.flatline_window, cfg.flatline_eps};
    const ArimaConfig ac{cfg.arima_p, cfg.arima_d, cfg.arima_window};
    std::string report;
    for (const std::string& path : record_paths) {
        const fs::path in(path);
        Record record = parse_record_csv(read_file(in), in.stem().string());
        const ValidationResult admission = validate_record(record);
        if (!admission.accepted) {
            throw ParseError("record '" + record.id + "' rejected (" +
                             admission.rule + "): " + admission.detail);
        }
        const ScaleStats stats = compute_scale_stats(record);
        const Record scaled = scale_record(record, stats);
        const LabelMask flatline =
            detect_flatline(cfg.flatline_on_scaled ? scaled : record, fl);
        DeltaTrace delta;
        if (arima) {
            delta = arima_delta_trace(scaled, ac).trace;
        } else {
            delta = reconstruct_record(scaled, params);
        }
        const LabelMask spikes = detect_spikes(delta, threshold);
        const LabelMask fused = fuse(flatline, spikes);

        const fs::path out_base = fs::path(opts.out_dir) / record.id;
        write_file(out_base.string() + ".flatline.csv",
                   write_labels_csv(record, flatline));
        write_file(out_base.string() + ".spike.csv",
                   write_labels_csv(record, spikes));
        write_file(out_base.string() + ".fused.csv",
                   write_labels_csv(record, fused));
        std::string delta_csv = "time_min,delta,recon\n";
        for (std::size_t i = 0; i < delta.size(); ++i) {
            delta_csv += std::to_string(record.samples[i].minute);
            delta_csv += ',';
            if (delta.defined[i]) {
                delta_csv += format_double(delta.delta[i]);
                delta_csv += ',';
                delta_csv += format_double(delta.reconstruction[i]);
            } else {
                delta_csv += ',';
            }
            delta_csv += '\n';
        }
        write_file(out_base.string() + ".delta.csv", delta_csv);

        report += record.id + ": " + std::to_string(record.size()) +
                  " samples | flatline " + count_label(flatline) +
                  " | spike " + count_label(spikes) + " | fused " +
                  count_label(fused) + "\n";
    }
    report += "threshold q=" + format_double(threshold.q) + " value=" +
              format_double(threshold.value) + "\n";
    write_file(fs::path(opts.out_dir) / "report.txt", report);
    std::cout << report;
    return kExitOk;
}

int cmd_evaluate(const CommonOpts& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    Evaluator evaluator(cfg, load_dataset(cfg.data_dir));
    SetupId setup;
    setup.kind = cfg.model_kind;
    setup.beta = cfg.model_kind == "VAE" ? cfg.beta : 0.0;
    setup.q = cfg.q;
    const ExperimentStats stats = evaluator.evaluate(setup);
    const std::string csv =
        "kind,beta,q,sens_mean,sens_std,spec_mean,spec_std\n" +
        sweep_csv_row(stats);
    write_file(fs::path(opts.out_dir) / "evaluate.csv", csv);
    std::cout << csv;
    return kExitOk;
}

int cmd_sweep(const CommonOpts& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    Evaluator evaluator(cfg, load_dataset(cfg.data_dir));
    const fs::path out(opts.out_dir);
    evaluator.set_model_cache_dir(out / "models");

    const std::vector<SetupId> setups = evaluator.grid();
    const fs::path rows_dir = out / "rows";

    // Idempotent per-setup job files: finished rows are reloaded, missing
    // ones computed, so an interrupted sweep resumes where it stopped.
    std::vector<SetupId> pending;
    for (const SetupId& setup : setups) {
        if (!fs::exists(rows_dir / (setup.label() + ".csv"))) {
            pending.push_back(setup);
        }
    }
    evaluator.prepare(pending, cfg.sweep_jobs);

    std::vector<ExperimentStats> rows;
    for (const SetupId& setup : setups) {
        const fs::path row_file = rows_dir / (setup.label() + ".csv");
        if (fs::exists(row_file)) {
            rows.push_back(parse_sweep_row(read_file(row_file)));
            continue;
        }
        ExperimentStats stats = evaluator.evaluate(setup);
        write_file(row_file, sweep_csv_row(stats));
        rows.push_back(std::move(stats));
    }

    const std::size_t expected = (cfg.beta_grid.size() + 2) * cfg.q_grid.size();
    if (rows.size() != expected) {
        throw std::logic_error("sweep produced " + std::to_string(rows.size()) +
                               " rows, expected " + std::to_string(expected));
    }
    write_file(out / "sweep.csv", sweep_csv(rows));
    write_file(out / "plot_sensitivity.csv", plot_csv(rows, "sensitivity"));
    write_file(out / "plot_specificity.csv", plot_csv(rows, "specificity"));
    std::cout << sweep_csv(rows);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid artifact detection for minute-resolution mean "
                 "blood pressure signals"};
    app.require_subcommand(1);

    CommonOpts synth_opts, train_opts, calibrate_opts, detect_opts,
        evaluate_opts, sweep_opts;
    std::string calibrate_model, detect_model, detect_threshold;
    std::vector<std::string> detect_records;

    add_common(app.add_subcommand("synth", "Generate a synthetic dataset"),
               synth_opts);
    add_common(app.add_subcommand("train", "Train one model on the training "
                                           "split"),
               train_opts);
    CLI::App* calibrate =
        app.add_subcommand("calibrate", "Calibrate the spike threshold on "
                                        "the validation split");
    add_common(calibrate, calibrate_opts);
    calibrate->add_option("--model", calibrate_model, "Trained model file");
    CLI::App* detect =
        app.add_subcommand("detect", "Label records with the fused detector");
    add_common(detect, detect_opts);
    detect->add_option("--model", detect_model, "Trained model file");
    detect->add_option("--threshold", detect_threshold,
                       "Calibrated threshold sidecar");
    detect->add_option("records", detect_records, "Record CSV files")
        ->required();
    add_common(app.add_subcommand("evaluate", "Evaluate one configured "
                                              "setup across seeds"),
               evaluate_opts);
    add_common(app.add_subcommand("sweep", "Run the full grid sweep"),
               sweep_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (app.got_subcommand("synth")) return cmd_synth(synth_opts);
        if (app.got_subcommand("train")) return cmd_train(train_opts);
        if (app.got_subcommand("calibrate")) {
            return cmd_calibrate(calibrate_opts, calibrate_model);
        }
        if (app.got_subcommand("detect")) {
            return cmd_detect(detect_opts, detect_model, detect_threshold,
                              detect_records);
        }
        if (app.got_subcommand("evaluate")) return cmd_evaluate(evaluate_opts);
        if (app.got_subcommand("sweep")) return cmd_sweep(sweep_opts);
    } catch (const ProtocolError& e) {
        std::cerr << "error (protocol): " << e.what() << "\n";
        return kExitProtocol;
    } catch (const NumericError& e) {
        std::cerr << "error (numeric): " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
