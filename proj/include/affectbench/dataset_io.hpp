// On-disk dataset format: meta.json + clips.csv at the root, one
// P<participant>/C<clip>/ directory per trial holding eeg.csv, eda.csv,
// bvp.csv, temp.csv and assessment.json.
#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "affectbench/core.hpp"
#include "affectbench/csv.hpp"
#include "affectbench/jsonio.hpp"

namespace afb {

namespace fs = std::filesystem;

struct SampleRates {
    double eeg = 250.0, eda = 4.0, bvp = 64.0, temp = 4.0;
};

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline std::string signal_csv(const SignalTrace& t) {
    std::string out = "t";
    for (const auto& name : t.channel_names) out += "," + name;
    out += '\n';
    for (std::size_t i = 0; i < t.length(); ++i) {
        out += fmt_double(static_cast<double>(i) / t.sample_rate_hz);
        for (std::size_t c = 0; c < t.channels(); ++c) out += "," + fmt_double(t.samples[c][i]);
        out += '\n';
    }
    return out;
}

inline SignalTrace parse_signal_csv(const std::string& path, double sample_rate,
                                    const std::vector<std::string>& expect_channels,
                                    const std::string& trial_ctx) {
    const auto rows = csv_parse(read_text_file(path), path);
    if (rows.empty()) throw validation_error(trial_ctx + ": empty signal file " + path);
    const auto& header = rows[0];
    if (header.size() != expect_channels.size() + 1 || header[0] != "t")
        throw validation_error(trial_ctx + ": unexpected header in " + path);
    for (std::size_t c = 0; c < expect_channels.size(); ++c)
        if (header[c + 1] != expect_channels[c])
            throw validation_error(trial_ctx + ": channel mismatch in " + path + " (got '" +
                                   header[c + 1] + "', want '" + expect_channels[c] + "')");
    SignalTrace t;
    t.sample_rate_hz = sample_rate;
    t.channel_names = expect_channels;
    t.samples.assign(expect_channels.size(), {});
    for (auto& ch : t.samples) ch.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size())
            throw validation_error(trial_ctx + ": ragged row in " + path);
        for (std::size_t c = 0; c < expect_channels.size(); ++c) {
            const double v = parse_double(rows[r][c + 1], trial_ctx + " " + path);
            if (!std::isfinite(v))
                throw validation_error(trial_ctx + ": non-finite sample in " + path);
            t.samples[c].push_back(v);
        }
    }
    return t;
}

}  // namespace detail

inline void save_dataset(const Dataset& ds, const std::string& root) {
    ds.validate();
    SampleRates rates;
    if (!ds.trials.empty()) {
        rates.eeg = ds.trials[0].eeg.sample_rate_hz;
        rates.eda = ds.trials[0].eda.sample_rate_hz;
        rates.bvp = ds.trials[0].bvp.sample_rate_hz;
        rates.temp = ds.trials[0].temp.sample_rate_hz;
        for (const auto& t : ds.trials)
            if (t.eeg.sample_rate_hz != rates.eeg || t.eda.sample_rate_hz != rates.eda ||
                t.bvp.sample_rate_hz != rates.bvp || t.temp.sample_rate_hz != rates.temp)
                throw validation_error("save_dataset: trials disagree on sample rates");
    }
    fs::create_directories(root);
    json meta;
    meta["schema_version"] = kSchemaVersion;
    meta["sample_rates"] = {{"eeg_hz", rates.eeg},
                            {"eda_hz", rates.eda},
                            {"bvp_hz", rates.bvp},
                            {"temp_hz", rates.temp}};
    write_json_file((fs::path(root) / "meta.json").string(), meta);

    std::string clips = "clip_id,title,tags\n";
    for (const auto& [id, info] : ds.clip_catalog)
        clips += csv_join({id, info.title, info.tags}) + "\n";
    write_text_file((fs::path(root) / "clips.csv").string(), clips);

    for (const auto& t : ds.trials) {
        const fs::path dir = fs::path(root) / ("P" + t.participant_id) / ("C" + t.clip_id);
        fs::create_directories(dir);
        write_text_file((dir / "eeg.csv").string(), detail::signal_csv(t.eeg));
        write_text_file((dir / "eda.csv").string(), detail::signal_csv(t.eda));
        write_text_file((dir / "bvp.csv").string(), detail::signal_csv(t.bvp));
        write_text_file((dir / "temp.csv").string(), detail::signal_csv(t.temp));
        json a;
        a["valence"] = t.assessment.valence;
        a["arousal"] = t.assessment.arousal;
        a["happiness"] = t.assessment.happiness;
        a["fear"] = t.assessment.fear;
        a["excitement"] = t.assessment.excitement;
        a["is_common_clip"] = t.is_common_clip;
        write_json_file((dir / "assessment.json").string(), a);
    }
}

inline Dataset load_dataset(const std::string& root) {
    if (!fs::is_directory(root)) throw structural_error("missing dataset directory: " + root);
    const fs::path meta_path = fs::path(root) / "meta.json";
    if (!fs::exists(meta_path)) throw structural_error("missing file: " + meta_path.string());
    const json meta = read_json_file(meta_path.string());
    if (!meta.contains("sample_rates"))
        throw structural_error("meta.json lacks sample_rates: " + meta_path.string());
    SampleRates rates;
    rates.eeg = meta["sample_rates"].value("eeg_hz", rates.eeg);
    rates.eda = meta["sample_rates"].value("eda_hz", rates.eda);
    rates.bvp = meta["sample_rates"].value("bvp_hz", rates.bvp);
    rates.temp = meta["sample_rates"].value("temp_hz", rates.temp);

    Dataset ds;
    const fs::path clips_path = fs::path(root) / "clips.csv";
    if (!fs::exists(clips_path)) throw structural_error("missing file: " + clips_path.string());
    const auto clip_rows = csv_parse(read_text_file(clips_path.string()), clips_path.string());
    for (std::size_t r = 1; r < clip_rows.size(); ++r) {
        if (clip_rows[r].size() < 3)
            throw validation_error("clips.csv row " + std::to_string(r) + " needs 3 fields");
        ds.clip_catalog[clip_rows[r][0]] = ClipInfo{clip_rows[r][1], clip_rows[r][2]};
    }

    std::vector<fs::path> participant_dirs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory() && e.path().filename().string().rfind("P", 0) == 0)
            participant_dirs.push_back(e.path());
    }
    std::sort(participant_dirs.begin(), participant_dirs.end());
    for (const auto& pdir : participant_dirs) {
        const std::string pid = pdir.filename().string().substr(1);
        std::vector<fs::path> clip_dirs;
        for (const auto& e : fs::directory_iterator(pdir))
            if (e.is_directory() && e.path().filename().string().rfind("C", 0) == 0)
                clip_dirs.push_back(e.path());
        std::sort(clip_dirs.begin(), clip_dirs.end());
        for (const auto& cdir : clip_dirs) {
            Trial t;
            t.participant_id = pid;
            t.clip_id = cdir.filename().string().substr(1);
            const std::string ctx = "trial " + pid + "/" + t.clip_id;
            for (const char* f : {"eeg.csv", "eda.csv", "bvp.csv", "temp.csv",
                                  "assessment.json"})
                if (!fs::exists(cdir / f))
                    throw structural_error("missing file: " + (cdir / f).string());
            t.eeg = detail::parse_signal_csv((cdir / "eeg.csv").string(), rates.eeg,
                                             eeg_montage(), ctx);
            const std::vector<std::string> value_col = {"value"};
            t.eda = detail::parse_signal_csv((cdir / "eda.csv").string(), rates.eda, value_col,
                                             ctx);
            t.bvp = detail::parse_signal_csv((cdir / "bvp.csv").string(), rates.bvp, value_col,
                                             ctx);
            t.temp = detail::parse_signal_csv((cdir / "temp.csv").string(), rates.temp,
                                              value_col, ctx);
            const json a = read_json_file((cdir / "assessment.json").string());
            for (const char* key :
                 {"valence", "arousal", "happiness", "fear", "excitement", "is_common_clip"})
                if (!a.contains(key))
                    throw validation_error(ctx + ": assessment.json lacks '" + key + "'");
            t.assessment.valence = a["valence"].get<double>();
            t.assessment.arousal = a["arousal"].get<double>();
            t.assessment.happiness = a["happiness"].get<double>();
            t.assessment.fear = a["fear"].get<double>();
            t.assessment.excitement = a["excitement"].get<double>();
            t.is_common_clip = a["is_common_clip"].get<bool>();
            ds.trials.push_back(std::move(t));
        }
    }
    ds.validate();
    return ds;
}

inline bool traces_equal(const SignalTrace& a, const SignalTrace& b) {
    return a.sample_rate_hz == b.sample_rate_hz && a.channel_names == b.channel_names &&
           a.samples == b.samples;
}

inline bool datasets_equal(const Dataset& a, const Dataset& b) {
    if (a.trials.size() != b.trials.size()) return false;
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
        const auto& x = a.trials[i];
        const auto& y = b.trials[i];
        if (x.participant_id != y.participant_id || x.clip_id != y.clip_id) return false;
        if (!traces_equal(x.eeg, y.eeg) || !traces_equal(x.eda, y.eda) ||
            !traces_equal(x.bvp, y.bvp) || !traces_equal(x.temp, y.temp))
            return false;
        if (x.assessment.valence != y.assessment.valence ||
            x.assessment.arousal != y.assessment.arousal ||
            x.assessment.happiness != y.assessment.happiness ||
            x.assessment.fear != y.assessment.fear ||
            x.assessment.excitement != y.assessment.excitement ||
            x.is_common_clip != y.is_common_clip)
            return false;
    }
    std::vector<std::pair<std::string, std::pair<std::string, std::string>>> ca, cb;
    for (const auto& [id, info] : a.clip_catalog) ca.push_back({id, {info.title, info.tags}});
    for (const auto& [id, info] : b.clip_catalog) cb.push_back({id, {info.title, info.tags}});
    return ca == cb;
}

}  // namespace afb
