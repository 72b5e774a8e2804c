#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "bpad/evaluation.hpp"
#include "bpad/io.hpp"
#include "bpad/record.hpp"
#include "bpad/synth.hpp"

using namespace bpad;

namespace {

SynthSettings fast_settings() {
    SynthSettings s;
    s.record_len = 400;
    return s;
}

// Expected artifact minutes per record and the per-record variance of a
// compound Poisson sum with discrete-uniform durations.
struct RateModel {
    double mean = 0.0;
    double variance = 0.0;
};

RateModel artifact_rate_model(const SynthSettings& s) {
    auto add = [](RateModel& m, double rate_per_1000, double len,
                  std::uint64_t lo, std::uint64_t hi) {
        const double lambda = rate_per_1000 * len / 1000.0;
        const double span = static_cast<double>(hi - lo + 1);
        const double mean_dur = (static_cast<double>(lo + hi)) / 2.0;
        const double var_dur = (span * span - 1.0) / 12.0;
        const double second_moment = var_dur + mean_dur * mean_dur;
        m.mean += lambda * mean_dur;
        m.variance += lambda * second_moment;
    };
    RateModel m;
    const double len = static_cast<double>(s.record_len);
    add(m, s.flatline_rate, len, s.flatline_dur_min, s.flatline_dur_max);
    add(m, s.spike_rate, len, s.spike_dur_min, s.spike_dur_max);
    return m;
}

} // namespace

TEST_CASE("generation is deterministic in seed and index") {
    const SynthSettings s = fast_settings();
    const SynthRecord a = gen_record(s, 42, 7);
    const SynthRecord b = gen_record(s, 42, 7);
    REQUIRE(a.record.size() == b.record.size());
    for (std::size_t i = 0; i < a.record.size(); ++i) {
        CHECK(a.record.samples[i].value == b.record.samples[i].value);
    }
    REQUIRE(a.record.truth.has_value());
    CHECK(a.record.truth->labels == b.record.truth->labels);
    CHECK(a.spans.size() == b.spans.size());

    const SynthRecord c = gen_record(s, 42, 8);
    bool all_equal = a.record.size() == c.record.size();
    if (all_equal) {
        for (std::size_t i = 0; i < a.record.size(); ++i) {
            if (a.record.samples[i].value != c.record.samples[i].value) {
                all_equal = false;
                break;
            }
        }
    }
    CHECK(!all_equal);
}

TEST_CASE("zero rates produce a fully valid, fully present record") {
    SynthSettings s = fast_settings();
    s.flatline_rate = 0.0;
    s.spike_rate = 0.0;
    s.missing_rate = 0.0;
    const SynthRecord r = gen_record(s, 5, 0);
    REQUIRE(r.record.truth.has_value());
    CHECK(r.record.count_present() == r.record.size());
    for (Label l : r.record.truth->labels) CHECK(l == Label::Valid);
    CHECK(r.spans.empty());
    CHECK(r.skipped_events == 0);
}

TEST_CASE("spans account exactly for every non-valid sample") {
    const SynthSettings s = fast_settings();
    for (std::uint64_t index : {0ull, 3ull, 11ull}) {
        const SynthRecord r = gen_record(s, 42, index);
        REQUIRE(r.record.truth.has_value());
        std::vector<char> expect(r.record.size(), 'V');
        for (const SynthSpan& span : r.spans) {
            REQUIRE(span.start + span.length <= r.record.size());
            const char mark = span.kind == "missing" ? 'U'
                              : span.kind == "flatline" || span.kind == "spike"
                                  ? 'A'
                                  : '?';
            REQUIRE(mark != '?');
            for (std::size_t i = span.start; i < span.start + span.length; ++i) {
                // Events never overlap (2-sample margins).
                REQUIRE(expect[i] == 'V');
                expect[i] = mark;
            }
        }
        for (std::size_t i = 0; i < r.record.size(); ++i) {
            const Label l = r.record.truth->labels[i];
            if (expect[i] == 'U') {
                CHECK(r.record.missing(i));
                CHECK(l == Label::Unknown);
            } else if (expect[i] == 'A') {
                CHECK(!r.record.missing(i));
                CHECK(l == Label::Artifact);
            } else {
                CHECK(!r.record.missing(i));
                CHECK(l == Label::Valid);
            }
        }
    }
}

TEST_CASE("flatline spans hold one bit-identical value") {
    const SynthSettings s = fast_settings();
    std::size_t checked = 0;
    for (std::uint64_t index = 0; index < 20; ++index) {
        const SynthRecord r = gen_record(s, 12, index);
        for (const SynthSpan& span : r.spans) {
            if (span.kind != "flatline") continue;
            ++checked;
            for (std::size_t i = span.start; i < span.start + span.length;
                 ++i) {
                REQUIRE(!r.record.missing(i));
                REQUIRE(r.record.value(i) == span.value);
            }
        }
    }
    CHECK(checked > 5); // the configuration must actually exercise flatlines
}

TEST_CASE("generated records pass admission validation") {
    const SynthSettings s = fast_settings();
    for (std::uint64_t index = 0; index < 10; ++index) {
        const SynthRecord r = gen_record(s, 77, index);
        const ValidationResult v = validate_record(r.record);
        CHECK(v.accepted);
    }
}

TEST_CASE("clean segments stay clear of accidental flatlines") {
    const SynthSettings s = fast_settings();
    for (std::uint64_t index = 0; index < 10; ++index) {
        const SynthRecord r = gen_record(s, 77, index);
        CHECK(r.longest_clean_constant_run < 10);
    }
}

TEST_CASE("realized artifact minutes respect the configured rates") {
    SynthSettings s;
    s.record_len = 1000;
    s.flatline_rate = 1.0;
    s.flatline_dur_min = 5;
    s.flatline_dur_max = 40;
    s.spike_rate = 3.0;
    s.missing_rate = 0.5;
    const std::size_t n_records = 40;
    const RateModel model = artifact_rate_model(s);

    double artifact_minutes = 0.0;
    std::size_t spans = 0, skipped = 0;
    for (std::uint64_t index = 0; index < n_records; ++index) {
        const SynthRecord r = gen_record(s, 2024, index);
        for (Label l : r.record.truth->labels) {
            if (l == Label::Artifact) artifact_minutes += 1.0;
        }
        spans += r.spans.size();
        skipped += r.skipped_events;
    }
    const double expected = model.mean * static_cast<double>(n_records);
    const double sigma =
        std::sqrt(model.variance * static_cast<double>(n_records));
    CHECK(artifact_minutes > expected - 3.0 * sigma);
    CHECK(artifact_minutes < expected + 3.0 * sigma);
    // Placement rarely fails at these densities.
    CHECK(skipped * 20 <= spans);
}

TEST_CASE("dataset generation writes records, manifest, and spans") {
    ExperimentConfig cfg;
    cfg.synth.n_records = 20;
    cfg.synth.record_len = 120;
    const auto dir = std::filesystem::current_path() / "tmp_synth_dataset";
    std::filesystem::remove_all(dir);
    const SynthDatasetResult res = gen_dataset(cfg, dir);

    REQUIRE(res.record_ids.size() == 20);
    CHECK(res.split.train.size() == 12);
    CHECK(res.split.validation.size() == 4);
    CHECK(res.split.test.size() == 4);

    const std::string manifest = read_file(dir / "manifest.csv");
    CHECK(std::count(manifest.begin(), manifest.end(), '\n') == 21);
    CHECK(manifest.rfind("record_id,split,seed,index\n", 0) == 0);

    const std::string spans = read_file(dir / "spans.csv");
    CHECK(std::count(spans.begin(), spans.end(), '\n') ==
          static_cast<long>(res.total_spans) + 1);
    CHECK(spans.rfind("record_id,kind,start,length,value\n", 0) == 0);

    // Loading reproduces the direct generator output bit-for-bit.
    const Dataset data = load_dataset(dir);
    REQUIRE(data.records.size() == 20);
    for (std::uint64_t index : {0ull, 13ull}) {
        const SynthRecord direct = gen_record(cfg.synth, cfg.seed, index);
        char id[8];
        std::snprintf(id, sizeof id, "r%03llu",
                      static_cast<unsigned long long>(index));
        const Record& loaded = data.by_id(id);
        REQUIRE(loaded.size() == direct.record.size());
        for (std::size_t i = 0; i < loaded.size(); ++i) {
            CHECK(loaded.samples[i].value == direct.record.samples[i].value);
            CHECK(loaded.samples[i].minute == direct.record.samples[i].minute);
        }
        REQUIRE(loaded.truth.has_value());
        CHECK(loaded.truth->labels == direct.record.truth->labels);
    }

    // Rerunning the generator reproduces every file byte-for-byte.
    const auto dir2 = std::filesystem::current_path() / "tmp_synth_dataset_2";
    std::filesystem::remove_all(dir2);
    gen_dataset(cfg, dir2);
    CHECK(read_file(dir2 / "manifest.csv") == manifest);
    CHECK(read_file(dir2 / "spans.csv") == spans);
    for (const std::string& id : res.record_ids) {
        CHECK(read_file(dir2 / "records" / (id + ".csv")) ==
              read_file(dir / "records" / (id + ".csv")));
    }
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(dir2);
}

TEST_CASE("the paper-scale record count splits 53/15/17") {
    ExperimentConfig cfg;
    cfg.synth.n_records = 85;
    cfg.synth.record_len = 60; // keep generation cheap; splits only need ids
    const auto dir = std::filesystem::current_path() / "tmp_synth_85";
    std::filesystem::remove_all(dir);
    const SynthDatasetResult res = gen_dataset(cfg, dir);
    CHECK(res.split.train.size() == 53);
    CHECK(res.split.validation.size() == 15);
    CHECK(res.split.test.size() == 17);
    std::filesystem::remove_all(dir);
}
