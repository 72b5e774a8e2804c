#include "bpad/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "bpad/rng.hpp"

namespace bpad {

ConfusionCounts confusion(const LabelMask& pred, const LabelMask& truth) {
    if (pred.size() != truth.size()) {
        throw std::invalid_argument("confusion: mask lengths differ (" +
                                    std::to_string(pred.size()) + " vs " +
                                    std::to_string(truth.size()) + ")");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const Label p = pred.labels[i];
        const Label t = truth.labels[i];
        if (p == Label::Unknown || t == Label::Unknown) continue;
        if (t == Label::Artifact) {
            p == Label::Artifact ? ++c.tp : ++c.fn;
        } else {
            p == Label::Artifact ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

std::optional<double> sensitivity(const ConfusionCounts& c) {
    const std::uint64_t den = c.tp + c.fn;
    if (den == 0) return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(den);
}

std::optional<double> specificity(const ConfusionCounts& c) {
    const std::uint64_t den = c.tn + c.fp;
    if (den == 0) return std::nullopt;
    return static_cast<double>(c.tn) / static_cast<double>(den);
}

MeanStd aggregate(const std::vector<std::optional<double>>& values) {
    std::vector<double> defined;
    for (const auto& v : values) {
        if (v.has_value()) defined.push_back(*v);
    }
    MeanStd out;
    if (defined.empty()) return out;
    double sum = 0.0;
    for (const double v : defined) sum += v;
    const double mean = sum / static_cast<double>(defined.size());
    double sq = 0.0;
    for (const double v : defined) sq += (v - mean) * (v - mean);
    out.mean = mean;
    out.std_dev = std::sqrt(sq / static_cast<double>(defined.size()));
    return out;
}

std::string SetupId::label() const {
    std::string out = kind;
    if (kind == "VAE") out += "_b" + format_double(beta);
    out += "_q" + format_double(q);
    return out;
}

// ------------------------------------------------------------------ data

const Record& Dataset::by_id(const std::string& id) const {
    for (const Record& r : records) {
        if (r.id == id) return r;
    }
    throw std::invalid_argument("dataset has no record '" + id + "'");
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const std::string manifest = read_file(dir / "manifest.csv");
    Dataset data;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= manifest.size()) {
        const std::size_t end = manifest.find('\n', pos);
        std::string line = manifest.substr(
            pos, end == std::string::npos ? std::string::npos : end - pos);
        pos = end == std::string::npos ? manifest.size() + 1 : end + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "record_id,split,seed,index") {
                throw ParseError("bad manifest header '" + line + "'", 1);
            }
            continue;
        }
        std::vector<std::string> fields;
        std::size_t begin = 0;
        while (true) {
            const std::size_t comma = line.find(',', begin);
            if (comma == std::string::npos) {
                fields.push_back(line.substr(begin));
                break;
            }
            fields.push_back(line.substr(begin, comma - begin));
            begin = comma + 1;
        }
        if (fields.size() != 4) {
            throw ParseError("manifest row needs 4 fields", line_no);
        }
        const std::string& id = fields[0];
        const std::string& split = fields[1];
        if (split == "train") data.split.train.push_back(id);
        else if (split == "validation") data.split.validation.push_back(id);
        else if (split == "test") data.split.test.push_back(id);
        else throw ParseError("bad split '" + split + "'", line_no);
        data.records.push_back(
            parse_record_csv(read_file(dir / "records" / (id + ".csv")), id));
    }
    return data;
}

TrainResult train_on_dataset(const ExperimentConfig& cfg, const Dataset& data,
                             ModelKind kind, double beta, std::uint64_t seed) {
    const ModelArch arch{cfg.window_len, 1, cfg.hidden_dim, cfg.latent_dim,
                         cfg.num_layers};
    std::vector<WindowBatch> batches;
    for (const std::string& id : data.split.train) {
        const Record& record = data.by_id(id);
        if (!record.truth) {
            throw std::invalid_argument("record '" + id +
                                        "' has no truth labels to train on");
        }
        const ScaleStats stats = compute_scale_stats(record);
        const Record scaled = scale_record(record, stats);
        batches.push_back(
            clean_training_windows(scaled, *record.truth, cfg.window_len));
    }
    const WindowBatch pool = shuffle_and_pool(
        batches, Rng(seed).derive(rng_stream::kPoolShuffle).seed());

    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.batch_size = cfg.batch_size;
    tc.learning_rate = cfg.learning_rate;
    tc.seed = seed;
    tc.beta = beta;
    return train_model(pool, kind, arch, tc);
}

// --------------------------------------------------------------- harness

Evaluator::Evaluator(ExperimentConfig cfg, Dataset data)
    : cfg_(std::move(cfg)), data_(std::move(data)) {
    const FlatlineConfig fl{cfg_.flatline_window, cfg_.flatline_eps};
    for (const Record& record : data_.records) {
        Prepared p;
        p.raw = &record;
        p.stats = compute_scale_stats(record);
        p.scaled = scale_record(record, p.stats);
        p.flatline =
            detect_flatline(cfg_.flatline_on_scaled ? p.scaled : record, fl);
        prepared_.emplace(record.id, std::move(p));
    }
}

void Evaluator::set_model_cache_dir(const std::filesystem::path& dir) {
    model_cache_dir_ = dir;
}

const Evaluator::Prepared& Evaluator::prepared(
    const std::string& record_id) const {
    const auto it = prepared_.find(record_id);
    if (it == prepared_.end()) {
        throw std::invalid_argument("unknown record '" + record_id + "'");
    }
    return it->second;
}

std::string Evaluator::unit_key(const std::string& kind, double beta,
                                std::uint64_t seed) {
    std::string key = kind;
    if (kind == "VAE") key += "_b" + format_double(beta);
    if (kind != "ARIMA") key += "_s" + std::to_string(seed);
    return key;
}

Evaluator::ModelUnit& Evaluator::unit(const std::string& kind, double beta,
                                      std::uint64_t seed) {
    const std::string key = unit_key(kind, beta, seed);
    auto it = units_.find(key);
    if (it == units_.end()) {
        ModelUnit u;
        u.kind = kind;
        u.beta = kind == "VAE" ? beta : 0.0;
        u.seed = kind == "ARIMA" ? 0 : seed;
        it = units_.emplace(key, std::move(u)).first;
    }
    return it->second;
}

void Evaluator::run_unit(ModelUnit& u) {
    if (u.ready) return;
    std::vector<const std::string*> deploy_ids;
    for (const std::string& id : data_.split.validation) deploy_ids.push_back(&id);
    for (const std::string& id : data_.split.test) deploy_ids.push_back(&id);

    if (u.kind == "ARIMA") {
        const ArimaConfig ac{cfg_.arima_p, cfg_.arima_d, cfg_.arima_window};
        for (const std::string* id : deploy_ids) {
            ArimaTraceResult r = arima_delta_trace(prepared(*id).scaled, ac);
            u.fallback_windows += r.fallback_windows;
            u.deltas.emplace(*id, std::move(r.trace));
        }
        u.ready = true;
        return;
    }

    const ModelKind kind = model_kind_from_string(u.kind);
    const std::filesystem::path cache_file =
        model_cache_dir_.empty()
            ? std::filesystem::path{}
            : model_cache_dir_ / (unit_key(u.kind, u.beta, u.seed) + ".bpm");

    if (!u.has_params && !cache_file.empty() &&
        std::filesystem::exists(cache_file)) {
        u.params = load_model(read_file(cache_file));
        u.has_params = true;
    }
    if (!u.has_params) {
        try {
            TrainResult result =
                train_on_dataset(cfg_, data_, kind, u.beta, u.seed);
            u.params = std::move(result.params);
            u.trace = std::move(result.trace);
        } catch (const NumericError& e) {
            throw NumericError("seed " + std::to_string(u.seed) + " (" +
                               unit_key(u.kind, u.beta, u.seed) +
                               "): " + e.what());
        }
        u.has_params = true;
        if (!cache_file.empty()) {
            write_file(cache_file, save_model(u.params));
        }
    }
    for (const std::string* id : deploy_ids) {
        u.deltas.emplace(*id, reconstruct_record(prepared(*id).scaled, u.params));
    }
    u.ready = true;
}

void Evaluator::inject_model(ModelParams params) {
    ModelUnit& u =
        unit(model_kind_name(params.kind), params.beta, params.seed);
    if (u.ready || u.has_params) return;
    u.params = std::move(params);
    u.has_params = true;
}

std::vector<SetupId> Evaluator::grid() const {
    std::vector<SetupId> setups;
    for (const double beta : cfg_.beta_grid) {
        for (const double q : cfg_.q_grid) {
            setups.push_back({"VAE", beta, q});
        }
    }
    for (const double q : cfg_.q_grid) setups.push_back({"AE", 0.0, q});
    for (const double q : cfg_.q_grid) setups.push_back({"ARIMA", 0.0, q});
    return setups;
}

void Evaluator::prepare(const std::vector<SetupId>& setups, std::size_t jobs) {
    std::vector<ModelUnit*> todo;
    for (const SetupId& setup : setups) {
        const std::vector<std::uint64_t> seeds =
            setup.kind == "ARIMA" ? std::vector<std::uint64_t>{0} : cfg_.seeds;
        for (const std::uint64_t seed : seeds) {
            ModelUnit& u = unit(setup.kind, setup.beta, seed);
            if (!u.ready && std::find(todo.begin(), todo.end(), &u) == todo.end()) {
                todo.push_back(&u);
            }
        }
    }
    if (jobs <= 1 || todo.size() <= 1) {
        for (ModelUnit* u : todo) run_unit(*u);
        return;
    }
    std::mutex mu;
    std::size_t next = 0;
    std::exception_ptr failure;
    auto worker = [&] {
        while (true) {
            ModelUnit* u = nullptr;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (failure || next >= todo.size()) return;
                u = todo[next++];
            }
            try {
                run_unit(*u);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    const std::size_t n_threads = std::min(jobs, todo.size());
    threads.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

Threshold Evaluator::calibrate(const SetupId& setup, std::uint64_t seed) {
    ModelUnit& u = unit(setup.kind, setup.beta, seed);
    run_unit(u);
    std::vector<DeltaTrace> deltas;
    std::vector<LabelMask> masks;
    std::string validation_id;
    for (const std::string& id : data_.split.validation) {
        deltas.push_back(u.deltas.at(id));
        masks.push_back(prepared(id).flatline);
        if (!validation_id.empty()) validation_id += '+';
        validation_id += id;
    }
    return calibrate_threshold(deltas, masks, setup.q,
                               unit_key(u.kind, u.beta, u.seed),
                               validation_id);
}

ExperimentStats Evaluator::evaluate(const SetupId& setup) {
    const std::vector<std::uint64_t> seeds =
        setup.kind == "ARIMA" ? std::vector<std::uint64_t>{0} : cfg_.seeds;
    if (seeds.empty()) {
        throw std::invalid_argument("evaluate: empty seed list");
    }
    std::vector<std::optional<double>> sens_values;
    std::vector<std::optional<double>> spec_values;
    for (const std::uint64_t seed : seeds) {
        const Threshold threshold = calibrate(setup, seed);
        ModelUnit& u = unit(setup.kind, setup.beta, seed);
        ConfusionCounts counts;
        for (const std::string& id : data_.split.test) {
            const Prepared& p = prepared(id);
            if (!p.raw->truth) {
                throw std::invalid_argument("record '" + id +
                                            "' has no truth labels");
            }
            const LabelMask spikes = detect_spikes(u.deltas.at(id), threshold);
            const LabelMask fused = fuse(p.flatline, spikes);
            counts += confusion(fused, *p.raw->truth);
        }
        sens_values.push_back(sensitivity(counts));
        spec_values.push_back(specificity(counts));
    }
    ExperimentStats stats;
    stats.setup = setup;
    stats.sens = aggregate(sens_values);
    stats.spec = aggregate(spec_values);
    stats.iterations = seeds.size();
    return stats;
}

std::vector<ExperimentStats> Evaluator::sweep() {
    const std::vector<SetupId> setups = grid();
    prepare(setups, cfg_.sweep_jobs);
    std::vector<ExperimentStats> rows;
    rows.reserve(setups.size());
    for (const SetupId& setup : setups) rows.push_back(evaluate(setup));
    return rows;
}

const ModelParams& Evaluator::model(const std::string& kind, double beta,
                                    std::uint64_t seed) {
    if (kind == "ARIMA") {
        throw std::invalid_argument("ARIMA has no model parameters");
    }
    ModelUnit& u = unit(kind, beta, seed);
    run_unit(u);
    return u.params;
}

const DeltaTrace& Evaluator::delta_trace(const std::string& kind, double beta,
                                         std::uint64_t seed,
                                         const std::string& record_id) {
    ModelUnit& u = unit(kind, beta, seed);
    run_unit(u);
    const auto it = u.deltas.find(record_id);
    if (it == u.deltas.end()) {
        throw std::invalid_argument(
            "no delta trace for record '" + record_id +
            "' (only validation/test records are deployed)");
    }
    return it->second;
}

const LabelMask& Evaluator::flatline_mask(const std::string& record_id) const {
    return prepared(record_id).flatline;
}

const Record& Evaluator::scaled_record(const std::string& record_id) const {
    return prepared(record_id).scaled;
}

std::size_t Evaluator::arima_fallback_windows() {
    ModelUnit& u = unit("ARIMA", 0.0, 0);
    run_unit(u);
    return u.fallback_windows;
}

// ------------------------------------------------------------------- csv

namespace {

std::string stat_field(const std::optional<double>& v) {
    return v.has_value() ? format_double(*v) : std::string();
}

} // namespace

std::string sweep_csv_row(const ExperimentStats& row) {
    std::string out;
    out += row.setup.kind;
    out += ',';
    out += format_double(row.setup.beta);
    out += ',';
    out += format_double(row.setup.q);
    out += ',';
    out += stat_field(row.sens.mean);
    out += ',';
    out += stat_field(row.sens.std_dev);
    out += ',';
    out += stat_field(row.spec.mean);
    out += ',';
    out += stat_field(row.spec.std_dev);
    out += '\n';
    return out;
}

std::string sweep_csv(const std::vector<ExperimentStats>& rows) {
    std::string out = "kind,beta,q,sens_mean,sens_std,spec_mean,spec_std\n";
    for (const ExperimentStats& row : rows) out += sweep_csv_row(row);
    return out;
}

ExperimentStats parse_sweep_row(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t begin = 0;
    std::string body = line;
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) {
        body.pop_back();
    }
    while (true) {
        const std::size_t comma = body.find(',', begin);
        if (comma == std::string::npos) {
            fields.push_back(body.substr(begin));
            break;
        }
        fields.push_back(body.substr(begin, comma - begin));
        begin = comma + 1;
    }
    if (fields.size() != 7) {
        throw ParseError("sweep row needs 7 fields, got " +
                         std::to_string(fields.size()));
    }
    const auto stat = [](const std::string& f) -> std::optional<double> {
        if (f.empty()) return std::nullopt;
        std::size_t used = 0;
        const double v = std::stod(f, &used);
        if (used != f.size()) throw ParseError("bad sweep field '" + f + "'");
        return v;
    };
    ExperimentStats row;
    row.setup.kind = fields[0];
    row.setup.beta = stat(fields[1]).value_or(0.0);
    row.setup.q = stat(fields[2]).value_or(0.0);
    row.sens.mean = stat(fields[3]);
    row.sens.std_dev = stat(fields[4]);
    row.spec.mean = stat(fields[5]);
    row.spec.std_dev = stat(fields[6]);
    return row;
}

std::string plot_csv(const std::vector<ExperimentStats>& rows,
                     const std::string& metric) {
    const bool sens = metric == "sensitivity";
    if (!sens && metric != "specificity") {
        throw std::invalid_argument("plot_csv: unknown metric '" + metric +
                                    "'");
    }
    std::string out = "series,q,mean,std\n";
    for (const ExperimentStats& row : rows) {
        std::string series = row.setup.kind;
        if (row.setup.kind == "VAE") {
            series += "_b" + format_double(row.setup.beta);
        }
        const MeanStd& stat = sens ? row.sens : row.spec;
        out += series;
        out += ',';
        out += format_double(row.setup.q);
        out += ',';
        out += stat_field(stat.mean);
        out += ',';
        out += stat_field(stat.std_dev);
        out += '\n';
    }
    return out;
}

} // namespace bpad
