// Python bindings for the core pipeline: preprocessing, both detectors,
// model training/inference, calibration, fusion, and the synthetic data
// generator. Values travel as list[float | None] (None = missing /
// undefined) and labels as small ints (0 valid, 1 artifact, 2 unknown).
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bpad/arima.hpp"
#include "bpad/evaluation.hpp"
#include "bpad/flatline.hpp"
#include "bpad/fusion.hpp"
#include "bpad/io.hpp"
#include "bpad/model.hpp"
#include "bpad/preprocess.hpp"
#include "bpad/record.hpp"
#include "bpad/rng.hpp"
#include "bpad/synth.hpp"

namespace py = pybind11;

namespace {

using OptValues = std::vector<std::optional<double>>;

bpad::Record make_record(const OptValues& values, const std::string& id) {
    bpad::Record r;
    r.id = id;
    r.samples.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        r.samples.push_back({static_cast<std::int64_t>(i), values[i]});
    }
    return r;
}

std::vector<int> mask_to_ints(const bpad::LabelMask& mask) {
    std::vector<int> out;
    out.reserve(mask.size());
    for (bpad::Label l : mask.labels) out.push_back(static_cast<int>(l));
    return out;
}

bpad::LabelMask ints_to_mask(const std::vector<int>& labels,
                             bpad::LabelSource source) {
    bpad::LabelMask mask;
    mask.source = source;
    mask.labels.reserve(labels.size());
    for (int v : labels) {
        if (v < 0 || v > 2) {
            throw std::invalid_argument("label ints must be 0, 1, or 2");
        }
        mask.labels.push_back(static_cast<bpad::Label>(v));
    }
    return mask;
}

OptValues trace_values(const std::vector<double>& values,
                       const std::vector<std::uint8_t>& defined) {
    OptValues out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (defined[i]) out[i] = values[i];
    }
    return out;
}

bpad::DeltaTrace opt_to_trace(const OptValues& deltas) {
    bpad::DeltaTrace t;
    t.resize(deltas.size());
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (deltas[i]) {
            t.delta[i] = *deltas[i];
            t.defined[i] = 1;
        }
    }
    return t;
}

bpad::ExperimentConfig config_from_text(const std::string& text) {
    return bpad::parse_config(text);
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Hybrid artifact detection for minute-resolution blood "
              "pressure signals: flatline detector, reconstruction-error "
              "spike detector, and supporting numerics.";

    py::register_exception<bpad::ParseError>(m, "ParseError");
    py::register_exception<bpad::NumericError>(m, "NumericError");

    py::class_<bpad::Rng>(m, "Rng")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def("next_u64", &bpad::Rng::next_u64)
        .def("next_uniform", &bpad::Rng::next_uniform)
        .def("next_gaussian", &bpad::Rng::next_gaussian)
        .def("next_below", &bpad::Rng::next_below, py::arg("n"))
        .def("derive", &bpad::Rng::derive, py::arg("stream"))
        .def_property_readonly("seed", &bpad::Rng::seed);

    m.def("percentile", &bpad::percentile, py::arg("values"), py::arg("p"),
          "Linear-interpolation percentile, rank (n-1)*p/100.");

    m.def(
        "fit_slope",
        [](const std::vector<double>& window) {
            return bpad::fit_slope(window);
        },
        py::arg("window"), "OLS slope of the window against 0..L-1.");

    m.def(
        "scale_stats",
        [](const OptValues& values) {
            const auto stats = bpad::compute_scale_stats(make_record(values, "py"));
            return py::make_tuple(stats.median, stats.iqr);
        },
        py::arg("values"), "(median, IQR) over the numeric samples.");

    m.def(
        "scale",
        [](const OptValues& values, double median, double iqr) {
            const bpad::Record scaled = bpad::scale_record(
                make_record(values, "py"), bpad::ScaleStats{median, iqr});
            OptValues out(scaled.size());
            for (std::size_t i = 0; i < scaled.size(); ++i) {
                if (!scaled.missing(i)) out[i] = scaled.value(i);
            }
            return out;
        },
        py::arg("values"), py::arg("median"), py::arg("iqr"),
        "(value - median) / iqr with iqr 0 treated as 1.");

    m.def(
        "flatline_labels",
        [](const OptValues& values, std::size_t window_size, double eps) {
            bpad::FlatlineConfig cfg;
            cfg.window_size = window_size;
            cfg.eps = eps;
            return mask_to_ints(
                bpad::detect_flatline(make_record(values, "py"), cfg));
        },
        py::arg("values"), py::arg("window_size") = 10,
        py::arg("eps") = 1e-9,
        "Per-sample flatline labels (0 valid, 1 artifact, 2 unknown).");

    m.def(
        "or_merge",
        [](const std::vector<int>& a, const std::vector<int>& b) {
            return mask_to_ints(
                bpad::or_merge(ints_to_mask(a, bpad::LabelSource::Flatline),
                               ints_to_mask(b, bpad::LabelSource::Spike)));
        },
        py::arg("a"), py::arg("b"),
        "OR-fusion: artifact if either, unknown only if both.");

    m.def(
        "confusion",
        [](const std::vector<int>& pred, const std::vector<int>& truth) {
            const auto c =
                bpad::confusion(ints_to_mask(pred, bpad::LabelSource::Fused),
                                ints_to_mask(truth, bpad::LabelSource::Truth));
            py::dict d;
            d["tp"] = c.tp;
            d["fp"] = c.fp;
            d["tn"] = c.tn;
            d["fn"] = c.fn;
            return d;
        },
        py::arg("pred"), py::arg("truth"),
        "Confusion counts with artifact positive; unknowns excluded.");

    m.def(
        "sensitivity",
        [](std::uint64_t tp, std::uint64_t fp, std::uint64_t tn,
           std::uint64_t fn) {
            return bpad::sensitivity(bpad::ConfusionCounts{tp, fp, tn, fn});
        },
        py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"));

    m.def(
        "specificity",
        [](std::uint64_t tp, std::uint64_t fp, std::uint64_t tn,
           std::uint64_t fn) {
            return bpad::specificity(bpad::ConfusionCounts{tp, fp, tn, fn});
        },
        py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"));

    m.def(
        "split_ids",
        [](std::vector<std::string> ids,
           const std::array<std::uint64_t, 3>& ratios, std::uint64_t seed) {
            const auto s = bpad::split_records(std::move(ids), ratios, seed);
            py::dict d;
            d["train"] = s.train;
            d["validation"] = s.validation;
            d["test"] = s.test;
            return d;
        },
        py::arg("ids"), py::arg("ratios"), py::arg("seed"),
        "Seeded largest-remainder split into train/validation/test.");

    m.def(
        "calibrate_threshold",
        [](const std::vector<OptValues>& validation_deltas,
           const std::vector<std::vector<int>>& flatline_masks, double q) {
            std::vector<bpad::DeltaTrace> traces;
            traces.reserve(validation_deltas.size());
            for (const auto& d : validation_deltas) {
                traces.push_back(opt_to_trace(d));
            }
            std::vector<bpad::LabelMask> masks;
            masks.reserve(flatline_masks.size());
            for (const auto& f : flatline_masks) {
                masks.push_back(ints_to_mask(f, bpad::LabelSource::Flatline));
            }
            return bpad::calibrate_threshold(traces, masks, q).value;
        },
        py::arg("validation_deltas"), py::arg("flatline_masks"), py::arg("q"),
        "q-th percentile of pooled deltas after dropping flatline and "
        "undefined positions.");

    m.def(
        "spike_labels",
        [](const OptValues& deltas, double threshold) {
            bpad::Threshold t;
            t.value = threshold;
            return mask_to_ints(bpad::detect_spikes(opt_to_trace(deltas), t));
        },
        py::arg("deltas"), py::arg("threshold"),
        "Artifact where delta > threshold, unknown where delta is None.");

    m.def(
        "generate_dataset",
        [](const std::filesystem::path& out_dir, const std::string& config) {
            const auto cfg = config_from_text(config);
            const auto result = bpad::gen_dataset(cfg, out_dir);
            py::dict d;
            d["record_ids"] = result.record_ids;
            d["train"] = result.split.train;
            d["validation"] = result.split.validation;
            d["test"] = result.split.test;
            d["total_spans"] = result.total_spans;
            d["total_skipped"] = result.total_skipped;
            return d;
        },
        py::arg("out_dir"), py::arg("config") = std::string(),
        "Generate the synthetic dataset (records/, manifest.csv, "
        "spans.csv) under out_dir.");

    m.def(
        "train",
        [](const std::filesystem::path& data_dir,
           const std::filesystem::path& model_out, const std::string& config) {
            auto cfg = config_from_text(config);
            const auto data = bpad::load_dataset(data_dir);
            const auto kind = bpad::model_kind_from_string(cfg.model_kind);
            const auto result = bpad::train_on_dataset(cfg, data, kind,
                                                       cfg.beta, cfg.seed);
            bpad::write_file(model_out, bpad::save_model(result.params));
            py::list trace;
            for (const auto& e : result.trace) {
                py::dict row;
                row["recon"] = e.reconstruction;
                row["kl"] = e.kl;
                row["total"] = e.total;
                trace.append(row);
            }
            return trace;
        },
        py::arg("data_dir"), py::arg("model_out"),
        py::arg("config") = std::string(),
        "Train on the dataset's training split and write the model file; "
        "returns the per-epoch loss trace.");

    m.def(
        "model_info",
        [](const std::filesystem::path& path) {
            const auto params = bpad::load_model(bpad::read_file(path));
            py::dict d;
            d["kind"] = bpad::model_kind_name(params.kind);
            d["beta"] = params.beta;
            d["seed"] = params.seed;
            d["window_len"] = params.arch.window_len;
            d["input_dim"] = params.arch.input_dim;
            d["hidden_dim"] = params.arch.hidden_dim;
            d["latent_dim"] = params.arch.latent_dim;
            d["num_layers"] = params.arch.num_layers;
            return d;
        },
        py::arg("path"), "Metadata of a saved model file.");

    m.def(
        "delta_trace",
        [](const std::filesystem::path& model_path, const OptValues& values) {
            const auto params = bpad::load_model(bpad::read_file(model_path));
            const auto raw = make_record(values, "py");
            const auto stats = bpad::compute_scale_stats(raw);
            const auto trace = bpad::reconstruct_record(
                bpad::scale_record(raw, stats), params);
            return py::make_tuple(
                trace_values(trace.delta, trace.defined),
                trace_values(trace.reconstruction, trace.defined));
        },
        py::arg("model_path"), py::arg("values"),
        "Scale the series, reconstruct it with the saved model, and return "
        "(deltas, reconstructions); None where no window covers a sample.");

    m.def(
        "arima_delta",
        [](const OptValues& values, std::size_t p, std::size_t d,
           std::size_t window_len) {
            bpad::ArimaConfig cfg;
            cfg.p = p;
            cfg.d = d;
            cfg.window_len = window_len;
            const auto result =
                bpad::arima_delta_trace(make_record(values, "py"), cfg);
            return trace_values(result.trace.delta, result.trace.defined);
        },
        py::arg("values"), py::arg("p") = 3, py::arg("d") = 1,
        py::arg("window_len") = 60,
        "Per-sample one-step forecast error of the sliding AR baseline.");

    m.def(
        "detect",
        [](const std::filesystem::path& model_path, const OptValues& values,
           double threshold, std::size_t flatline_window, double flatline_eps) {
            const auto raw = make_record(values, "py");
            bpad::FlatlineConfig fcfg;
            fcfg.window_size = flatline_window;
            fcfg.eps = flatline_eps;
            const auto flatline = bpad::detect_flatline(raw, fcfg);
            const auto params = bpad::load_model(bpad::read_file(model_path));
            const auto stats = bpad::compute_scale_stats(raw);
            const auto trace = bpad::reconstruct_record(
                bpad::scale_record(raw, stats), params);
            bpad::Threshold t;
            t.value = threshold;
            const auto spikes = bpad::detect_spikes(trace, t);
            py::dict d;
            d["flatline"] = mask_to_ints(flatline);
            d["spike"] = mask_to_ints(spikes);
            d["fused"] = mask_to_ints(bpad::fuse(flatline, spikes));
            return d;
        },
        py::arg("model_path"), py::arg("values"), py::arg("threshold"),
        py::arg("flatline_window") = 10, py::arg("flatline_eps") = 1e-9,
        "Full hybrid detection of one series with a saved model and a "
        "frozen threshold: flatline, spike, and fused label lists.");

    m.def("default_config", [] { return bpad::serialize_config({}); },
          "Every configuration key with its default value.");
}
