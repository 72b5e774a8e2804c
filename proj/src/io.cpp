#include "bpad/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <utility>

namespace bpad {

ParseError::ParseError(std::string message, std::size_t line_)
    : std::runtime_error(line_ == 0 ? message
                                    : message + " (line " +
                                          std::to_string(line_) + ")"),
      line(line_) {}

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t begin = 0;
    while (true) {
        const std::size_t pos = text.find(sep, begin);
        if (pos == std::string_view::npos) {
            parts.push_back(text.substr(begin));
            return parts;
        }
        parts.push_back(text.substr(begin, pos - begin));
        begin = pos + 1;
    }
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

double parse_double_field(std::string_view field, std::size_t line) {
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError("bad numeric field '" + std::string(field) + "'",
                         line);
    }
    return value;
}

std::int64_t parse_int_field(std::string_view field, std::size_t line) {
    std::int64_t value = 0;
    const auto [ptr, ec] =
        std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError("bad integer field '" + std::string(field) + "'",
                         line);
    }
    return value;
}

Label parse_label_field(std::string_view field, std::size_t line) {
    if (field.empty()) return Label::Unknown;
    if (field == "0") return Label::Valid;
    if (field == "1") return Label::Artifact;
    throw ParseError("bad label '" + std::string(field) +
                         "' (expected 0, 1, or empty)",
                     line);
}

} // namespace

Record parse_record_csv(std::string_view text, const std::string& id) {
    Record record;
    record.id = id;
    LabelMask truth;
    truth.source = LabelSource::Truth;

    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t columns = 0;
    for (std::string_view raw : split(text, '\n')) {
        ++line_no;
        const std::string_view line = strip_cr(raw);
        if (line.empty()) continue;
        if (!header_seen) {
            if (line == "time_min,bpm,label") {
                columns = 3;
            } else if (line == "time_min,bpm,pred_label,source") {
                columns = 4;
            } else {
                throw ParseError("bad header '" + std::string(line) + "'",
                                 line_no);
            }
            header_seen = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != columns) {
            throw ParseError("expected " + std::to_string(columns) +
                                 " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        Sample sample;
        sample.minute = parse_int_field(fields[0], line_no);
        if (!record.samples.empty() &&
            sample.minute <= record.samples.back().minute) {
            throw ParseError("non-monotone time_min (" +
                                 std::to_string(record.samples.back().minute) +
                                 " -> " + std::to_string(sample.minute) + ")",
                             line_no);
        }
        Label label = parse_label_field(fields[2], line_no);
        if (fields[1].empty()) {
            if (!fields[2].empty()) {
                throw ParseError(
                    "a missing sample must carry an empty label", line_no);
            }
            label = Label::Unknown;
        } else {
            sample.value = parse_double_field(fields[1], line_no);
        }
        record.samples.push_back(sample);
        truth.labels.push_back(label);
    }
    if (!header_seen) {
        throw ParseError("empty record file", 0);
    }
    record.truth = std::move(truth);
    return record;
}

std::string write_record_csv(const Record& record) {
    std::string out = "time_min,bpm,label\n";
    for (std::size_t i = 0; i < record.size(); ++i) {
        out += std::to_string(record.samples[i].minute);
        out += ',';
        if (!record.missing(i)) out += format_double(record.value(i));
        out += ',';
        if (record.truth && !record.missing(i)) {
            const Label label = record.truth->labels[i];
            if (label == Label::Valid) out += '0';
            else if (label == Label::Artifact) out += '1';
        }
        out += '\n';
    }
    return out;
}

std::string write_labels_csv(const Record& record, const LabelMask& mask) {
    if (mask.size() != record.size()) {
        throw std::invalid_argument("write_labels_csv: mask length " +
                                    std::to_string(mask.size()) +
                                    " != record length " +
                                    std::to_string(record.size()));
    }
    const char* source = label_source_name(mask.source);
    std::string out = "time_min,bpm,pred_label,source\n";
    char buf[64];
    for (std::size_t i = 0; i < record.size(); ++i) {
        out += std::to_string(record.samples[i].minute);
        out += ',';
        if (!record.missing(i)) {
            std::snprintf(buf, sizeof buf, "%.6g", record.value(i));
            out += buf;
        }
        out += ',';
        if (mask.labels[i] == Label::Valid) out += '0';
        else if (mask.labels[i] == Label::Artifact) out += '1';
        out += ',';
        out += source;
        out += '\n';
    }
    return out;
}

// ----------------------------------------------------------------- models

namespace {

constexpr char kModelMagic[8] = {'B', 'P', 'M', 'V', 'A', 'E', '0', '1'};

void append_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

std::uint64_t read_u64_le(std::string_view bytes, std::size_t& offset) {
    if (offset + 8 > bytes.size()) {
        throw ParseError("model file truncated");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(
                 static_cast<unsigned char>(bytes[offset + i]))
             << (8 * i);
    }
    offset += 8;
    return v;
}

// Strips comments and surrounding whitespace; nullopt for blank lines,
// ParseError (with the line number) when '=' is absent.
std::optional<std::pair<std::string, std::string>> parse_kv_line(
    std::string_view raw, std::size_t line_no) {
    std::string_view line = strip_cr(raw);
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) {
        line.remove_suffix(1);
    }
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) {
        line.remove_prefix(1);
    }
    if (line.empty()) return std::nullopt;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
        throw ParseError("expected key=value, got '" + std::string(line) + "'",
                         line_no);
    }
    return std::make_pair(std::string(line.substr(0, eq)),
                          std::string(line.substr(eq + 1)));
}

std::map<std::string, std::string, std::less<>> parse_kv_lines(
    std::string_view text) {
    std::map<std::string, std::string, std::less<>> kv;
    std::size_t line_no = 0;
    for (std::string_view raw : split(text, '\n')) {
        if (auto entry = parse_kv_line(raw, ++line_no)) {
            kv[std::move(entry->first)] = std::move(entry->second);
        }
    }
    return kv;
}

const std::string& require_key(
    const std::map<std::string, std::string, std::less<>>& kv,
    const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("missing key '" + key + "'");
    return it->second;
}

std::uint64_t to_u64(const std::string& value, const std::string& key) {
    std::uint64_t v = 0;
    const auto [ptr, ec] =
        std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ParseError("bad integer for '" + key + "': '" + value + "'");
    }
    return v;
}

double to_double(const std::string& value, const std::string& key) {
    double v = 0.0;
    const auto [ptr, ec] =
        std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ParseError("bad number for '" + key + "': '" + value + "'");
    }
    return v;
}

} // namespace

std::string save_model(const ModelParams& params) {
    std::string meta;
    meta += "version=1\n";
    meta += "W=" + std::to_string(params.arch.window_len) + "\n";
    meta += "input_dim=" + std::to_string(params.arch.input_dim) + "\n";
    meta += "hidden_dim=" + std::to_string(params.arch.hidden_dim) + "\n";
    meta += "latent_dim=" + std::to_string(params.arch.latent_dim) + "\n";
    meta += "num_layers=" + std::to_string(params.arch.num_layers) + "\n";
    meta += std::string("mode=") + model_kind_name(params.kind) + "\n";
    meta += "beta=" + format_double(params.beta) + "\n";
    meta += "seed=" + std::to_string(params.seed) + "\n";

    std::vector<std::pair<std::string, const Tensor2*>> tensors;
    params.visit_params([&](const std::string& name, const Tensor2& t) {
        tensors.emplace_back(name, &t);
    });
    std::sort(tensors.begin(), tensors.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::string out(kModelMagic, sizeof kModelMagic);
    append_u64_le(out, meta.size());
    out += meta;
    for (const auto& [name, tensor] : tensors) {
        append_u64_le(out, name.size());
        out += name;
        append_u64_le(out, tensor->rows);
        append_u64_le(out, tensor->cols);
        for (const double v : tensor->data) {
            append_u64_le(out, std::bit_cast<std::uint64_t>(v));
        }
    }
    return out;
}

ModelParams load_model(std::string_view bytes) {
    if (bytes.size() < sizeof kModelMagic ||
        std::memcmp(bytes.data(), kModelMagic, sizeof kModelMagic) != 0) {
        throw ParseError("bad model magic");
    }
    std::size_t offset = sizeof kModelMagic;
    const std::uint64_t meta_len = read_u64_le(bytes, offset);
    if (offset + meta_len > bytes.size()) {
        throw ParseError("model file truncated");
    }
    const auto kv = parse_kv_lines(bytes.substr(offset, meta_len));
    offset += meta_len;

    if (require_key(kv, "version") != "1") {
        throw ParseError("unknown model version '" +
                         require_key(kv, "version") + "'");
    }
    ModelParams params;
    params.arch.window_len = to_u64(require_key(kv, "W"), "W");
    params.arch.input_dim = to_u64(require_key(kv, "input_dim"), "input_dim");
    params.arch.hidden_dim =
        to_u64(require_key(kv, "hidden_dim"), "hidden_dim");
    params.arch.latent_dim =
        to_u64(require_key(kv, "latent_dim"), "latent_dim");
    params.arch.num_layers =
        to_u64(require_key(kv, "num_layers"), "num_layers");
    params.kind = model_kind_from_string(require_key(kv, "mode"));
    params.beta = to_double(require_key(kv, "beta"), "beta");
    params.seed = to_u64(require_key(kv, "seed"), "seed");

    // Shape skeleton with every tensor zeroed, then fill by name.
    const ModelArch& arch = params.arch;
    for (std::size_t l = 0; l < arch.num_layers; ++l) {
        params.encoder.push_back(LstmLayerParams::zeros(
            l == 0 ? arch.input_dim : arch.hidden_dim, arch.hidden_dim));
    }
    params.mu_w = Tensor2(arch.hidden_dim, arch.latent_dim);
    params.mu_b = Tensor2(1, arch.latent_dim);
    if (params.kind == ModelKind::VAE) {
        params.logvar_w = Tensor2(arch.hidden_dim, arch.latent_dim);
        params.logvar_b = Tensor2(1, arch.latent_dim);
    }
    for (std::size_t l = 0; l < arch.num_layers; ++l) {
        params.decoder.push_back(LstmLayerParams::zeros(
            l == 0 ? arch.latent_dim : arch.hidden_dim, arch.hidden_dim));
    }
    params.out_w = Tensor2(arch.hidden_dim, 1);
    params.out_b = Tensor2(1, 1);

    std::map<std::string, Tensor2*, std::less<>> by_name;
    params.visit_params([&](const std::string& name, Tensor2& t) {
        by_name[name] = &t;
    });

    std::size_t loaded = 0;
    while (offset < bytes.size()) {
        const std::uint64_t name_len = read_u64_le(bytes, offset);
        if (offset + name_len > bytes.size()) {
            throw ParseError("model file truncated");
        }
        const std::string name(bytes.substr(offset, name_len));
        offset += name_len;
        const std::uint64_t rows = read_u64_le(bytes, offset);
        const std::uint64_t cols = read_u64_le(bytes, offset);
        const auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw ParseError("unexpected tensor '" + name + "'");
        }
        Tensor2& tensor = *it->second;
        if (tensor.rows != rows || tensor.cols != cols) {
            throw ParseError("tensor '" + name + "' has shape " +
                             std::to_string(rows) + "x" +
                             std::to_string(cols) + ", expected " +
                             std::to_string(tensor.rows) + "x" +
                             std::to_string(tensor.cols));
        }
        for (std::size_t n = 0; n < tensor.count(); ++n) {
            tensor.data[n] =
                std::bit_cast<double>(read_u64_le(bytes, offset));
        }
        ++loaded;
    }
    if (loaded != by_name.size()) {
        throw ParseError("model file truncated: " + std::to_string(loaded) +
                         " of " + std::to_string(by_name.size()) +
                         " tensors present");
    }
    return params;
}

// ------------------------------------------------------------ experiment

namespace {

bool to_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ParseError("bad boolean for '" + key + "': '" + value + "'");
}

std::vector<double> to_double_list(const std::string& value,
                                   const std::string& key) {
    std::vector<double> out;
    for (const std::string_view part : split(value, ',')) {
        out.push_back(to_double(std::string(part), key));
    }
    return out;
}

std::vector<std::uint64_t> to_u64_list(const std::string& value,
                                       const std::string& key) {
    std::vector<std::uint64_t> out;
    for (const std::string_view part : split(value, ',')) {
        out.push_back(to_u64(std::string(part), key));
    }
    return out;
}

std::string join_doubles(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += format_double(values[i]);
    }
    return out;
}

std::string join_u64s(const std::vector<std::uint64_t>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(values[i]);
    }
    return out;
}

struct ConfigKey {
    const char* name;
    void (*set)(ExperimentConfig&, const std::string&);
    std::string (*get)(const ExperimentConfig&);
};

#define BPAD_KEY_U64(key, field)                                          \
    ConfigKey{key,                                                        \
              [](ExperimentConfig& c, const std::string& v) {             \
                  c.field = to_u64(v, key);                               \
              },                                                          \
              [](const ExperimentConfig& c) {                             \
                  return std::to_string(c.field);                         \
              }}
#define BPAD_KEY_DBL(key, field)                                          \
    ConfigKey{key,                                                        \
              [](ExperimentConfig& c, const std::string& v) {             \
                  c.field = to_double(v, key);                            \
              },                                                          \
              [](const ExperimentConfig& c) {                             \
                  return format_double(c.field);                          \
              }}

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = {
        BPAD_KEY_U64("window_len", window_len),
        BPAD_KEY_U64("hidden_dim", hidden_dim),
        BPAD_KEY_U64("latent_dim", latent_dim),
        BPAD_KEY_U64("num_layers", num_layers),
        BPAD_KEY_U64("flatline_window", flatline_window),
        BPAD_KEY_DBL("flatline_eps", flatline_eps),
        ConfigKey{"flatline_on_scaled",
                  [](ExperimentConfig& c, const std::string& v) {
                      c.flatline_on_scaled = to_bool(v, "flatline_on_scaled");
                  },
                  [](const ExperimentConfig& c) {
                      return std::string(c.flatline_on_scaled ? "true"
                                                              : "false");
                  }},
        BPAD_KEY_U64("arima_p", arima_p),
        BPAD_KEY_U64("arima_d", arima_d),
        BPAD_KEY_U64("arima_window", arima_window),
        BPAD_KEY_U64("epochs", epochs),
        BPAD_KEY_U64("batch_size", batch_size),
        BPAD_KEY_DBL("learning_rate", learning_rate),
        ConfigKey{"model_kind",
                  [](ExperimentConfig& c, const std::string& v) {
                      if (v != "VAE" && v != "AE" && v != "ARIMA") {
                          throw ParseError(
                              "bad model_kind '" + v +
                              "' (expected VAE, AE, or ARIMA)");
                      }
                      c.model_kind = v;
                  },
                  [](const ExperimentConfig& c) { return c.model_kind; }},
        BPAD_KEY_DBL("beta", beta),
        BPAD_KEY_DBL("q", q),
        BPAD_KEY_U64("seed", seed),
        ConfigKey{"beta_grid",
                  [](ExperimentConfig& c, const std::string& v) {
                      c.beta_grid = to_double_list(v, "beta_grid");
                  },
                  [](const ExperimentConfig& c) {
                      return join_doubles(c.beta_grid);
                  }},
        ConfigKey{"q_grid",
                  [](ExperimentConfig& c, const std::string& v) {
                      c.q_grid = to_double_list(v, "q_grid");
                  },
                  [](const ExperimentConfig& c) {
                      return join_doubles(c.q_grid);
                  }},
        ConfigKey{"seeds",
                  [](ExperimentConfig& c, const std::string& v) {
                      c.seeds = to_u64_list(v, "seeds");
                  },
                  [](const ExperimentConfig& c) {
                      return join_u64s(c.seeds);
                  }},
        BPAD_KEY_U64("sweep_jobs", sweep_jobs),
        ConfigKey{"split_ratios",
                  [](ExperimentConfig& c, const std::string& v) {
                      const auto list = to_u64_list(v, "split_ratios");
                      if (list.size() != 3) {
                          throw ParseError(
                              "split_ratios needs exactly 3 values");
                      }
                      std::copy(list.begin(), list.end(),
                                c.split_ratios.begin());
                  },
                  [](const ExperimentConfig& c) {
                      return join_u64s({c.split_ratios.begin(),
                                        c.split_ratios.end()});
                  }},
        ConfigKey{"data_dir",
                  [](ExperimentConfig& c, const std::string& v) {
                      c.data_dir = v;
                  },
                  [](const ExperimentConfig& c) { return c.data_dir; }},
        BPAD_KEY_U64("n_records", synth.n_records),
        BPAD_KEY_U64("record_len", synth.record_len),
        BPAD_KEY_DBL("baseline_min", synth.baseline_min),
        BPAD_KEY_DBL("baseline_max", synth.baseline_max),
        BPAD_KEY_DBL("drift_amp", synth.drift_amp),
        BPAD_KEY_DBL("drift_period", synth.drift_period),
        BPAD_KEY_DBL("ar_coeff", synth.ar_coeff),
        BPAD_KEY_DBL("innovation", synth.innovation),
        BPAD_KEY_DBL("quant_step", synth.quant_step),
        BPAD_KEY_DBL("flatline_rate", synth.flatline_rate),
        BPAD_KEY_U64("flatline_dur_min", synth.flatline_dur_min),
        BPAD_KEY_U64("flatline_dur_max", synth.flatline_dur_max),
        BPAD_KEY_DBL("spike_rate", synth.spike_rate),
        BPAD_KEY_DBL("spike_amp_min", synth.spike_amp_min),
        BPAD_KEY_DBL("spike_amp_max", synth.spike_amp_max),
        BPAD_KEY_U64("spike_dur_min", synth.spike_dur_min),
        BPAD_KEY_U64("spike_dur_max", synth.spike_dur_max),
        BPAD_KEY_DBL("missing_rate", synth.missing_rate),
        BPAD_KEY_U64("missing_dur_min", synth.missing_dur_min),
        BPAD_KEY_U64("missing_dur_max", synth.missing_dur_max),
    };
    return keys;
}

#undef BPAD_KEY_U64
#undef BPAD_KEY_DBL

const ConfigKey* find_key(const std::string& name) {
    for (const ConfigKey& key : config_keys()) {
        if (name == key.name) return &key;
    }
    return nullptr;
}

} // namespace

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    std::size_t line_no = 0;
    for (std::string_view raw : split(text, '\n')) {
        const auto entry = parse_kv_line(raw, ++line_no);
        if (!entry) continue;
        try {
            apply_override(cfg, entry->first, entry->second);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return cfg;
}

void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
    const ConfigKey* entry = find_key(key);
    if (entry == nullptr) {
        throw ParseError("unknown config key '" + key + "'");
    }
    entry->set(cfg, value);
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const ConfigKey& key : config_keys()) {
        out += key.name;
        out += '=';
        out += key.get(cfg);
        out += '\n';
    }
    return out;
}

// ----------------------------------------------------------------- extras

std::string write_threshold(const Threshold& threshold) {
    std::string out;
    out += "model_id=" + threshold.model_id + "\n";
    out += "validation_id=" + threshold.validation_id + "\n";
    out += "q=" + format_double(threshold.q) + "\n";
    out += "value=" + format_double(threshold.value) + "\n";
    return out;
}

Threshold read_threshold(std::string_view text) {
    const auto kv = parse_kv_lines(text);
    Threshold t;
    t.model_id = require_key(kv, "model_id");
    t.validation_id = require_key(kv, "validation_id");
    t.q = to_double(require_key(kv, "q"), "q");
    t.value = to_double(require_key(kv, "value"), "value");
    return t;
}

std::string write_loss_trace(const std::vector<EpochLoss>& trace) {
    std::string out = "epoch,recon,kl,total\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out += std::to_string(i + 1);
        out += ',';
        out += format_double(trace[i].reconstruction);
        out += ',';
        out += format_double(trace[i].kl);
        out += ',';
        out += format_double(trace[i].total);
        out += '\n';
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path.string() +
                                 "' for reading");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (!in.good() && !in.eof()) {
        throw std::runtime_error("error reading '" + path.string() + "'");
    }
    return std::move(buffer).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open '" + path.string() +
                                 "' for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.good()) {
        throw std::runtime_error("error writing '" + path.string() + "'");
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

} // namespace bpad
