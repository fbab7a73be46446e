// Batch front end. Every subcommand performs one pipeline stage on plain
// files and writes its results plus run_config.json into the output
// directory; identical flags and seed reproduce identical bytes.
// Exit codes: 0 success, 1 validation/domain error, 2 usage error.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "affectbench/cluster.hpp"
#include "affectbench/dataset_io.hpp"
#include "affectbench/eval.hpp"
#include "affectbench/jsonio.hpp"
#include "affectbench/stats.hpp"
#include "affectbench/synth.hpp"

namespace fs = std::filesystem;
using afb::json;

namespace {

// Shortest round-trip decimal text; used for every number written to CSV
// so reruns are byte-identical.
std::string num(double v) { return json(v).dump(); }

std::string path_join(const std::string& dir, const char* name) {
    return (fs::path(dir) / name).string();
}

void write_output(const std::string& dir, const char* name, const json& j) {
    afb::write_json_file(path_join(dir, name), j);
}

// ---- shared flag groups ----------------------------------------------

struct PreFlags {
    double trim_head = 2.0, trim_tail = 2.0;
    bool no_notch = false;
    double notch_f0 = 50.0, notch_q = 30.0;
    bool no_car = false;
    std::string ica = "none";
    std::size_t ica_components = 0;
};

void add_pre_flags(CLI::App* sc, PreFlags& p) {
    sc->add_option("--trim-head", p.trim_head, "Seconds trimmed from the start of every trace")
        ->capture_default_str();
    sc->add_option("--trim-tail", p.trim_tail, "Seconds trimmed from the end of every trace")
        ->capture_default_str();
    sc->add_flag("--no-notch", p.no_notch, "Disable the mains notch filter");
    sc->add_option("--notch-f0", p.notch_f0, "Mains notch center frequency, Hz")
        ->capture_default_str();
    sc->add_option("--notch-q", p.notch_q, "Mains notch quality factor")->capture_default_str();
    sc->add_flag("--no-car", p.no_car, "Disable the common average reference");
    sc->add_option("--ica", p.ica, "Artifact removal: none, auto:1 or manual:i,j,...")
        ->capture_default_str();
    sc->add_option("--ica-components", p.ica_components,
                   "Number of independent components (0 = all channels)")
        ->capture_default_str();
}

afb::PreprocessConfig pre_config(const PreFlags& p, std::uint64_t seed) {
    afb::PreprocessConfig c;
    c.trim_head_s = p.trim_head;
    c.trim_tail_s = p.trim_tail;
    c.notch = !p.no_notch;
    c.notch_f0_hz = p.notch_f0;
    c.notch_q = p.notch_q;
    c.car = !p.no_car;
    c.ica = afb::parse_ica_removal(p.ica);
    c.ica_components = p.ica_components;
    c.ica_seed = afb::derive_seed(seed, afb::fnv1a64("ica"));
    return c;
}

json pre_flags_to_json(const PreFlags& p) {
    return json{{"trim_head_s", p.trim_head}, {"trim_tail_s", p.trim_tail},
                {"notch", !p.no_notch},       {"notch_f0_hz", p.notch_f0},
                {"notch_q", p.notch_q},       {"car", !p.no_car},
                {"ica", p.ica},               {"ica_components", p.ica_components}};
}

struct FeatureFlags {
    int eda_bands = 14;
    bool log_eeg = false;
    std::size_t welch_eeg_seg = 256, welch_low_seg = 128;
};

void add_feature_flags(CLI::App* sc, FeatureFlags& f) {
    sc->add_option("--eda-bands", f.eda_bands,
                   "EDA band-power count: 14 literal, 13 for the 70-feature compat layout")
        ->check(CLI::IsMember({13, 14}))
        ->capture_default_str();
    sc->add_flag("--log-eeg", f.log_eeg, "Emit log10 EEG band powers");
    sc->add_option("--welch-eeg-seg", f.welch_eeg_seg, "Welch segment length for EEG traces")
        ->capture_default_str();
    sc->add_option("--welch-low-seg", f.welch_low_seg,
                   "Welch segment length for low-rate traces")
        ->capture_default_str();
}

afb::FeatureOptions feature_options(const FeatureFlags& f) {
    afb::FeatureOptions o;
    o.eda_bands = f.eda_bands;
    o.log_eeg = f.log_eeg;
    o.eeg_seg_len = f.welch_eeg_seg;
    o.low_seg_len = f.welch_low_seg;
    return o;
}

json feature_flags_to_json(const FeatureFlags& f) {
    return json{{"eda_bands", f.eda_bands},
                {"log_eeg", f.log_eeg},
                {"welch", json{{"eeg_seg_len", f.welch_eeg_seg},
                               {"low_seg_len", f.welch_low_seg},
                               {"overlap", 0.5},
                               {"window", "hann"}}}};
}

struct GridFlags {
    std::vector<std::string> kernels = {"linear", "poly", "rbf", "sigmoid"};
    std::vector<double> c_values = {1.0, 10.0, 100.0};
    std::vector<int> degrees = {3, 4, 5};
    std::vector<double> coef0s = {0.0, 0.01, 0.1};
    std::vector<std::string> penalties = {"L1", "L2"};
};

void add_grid_flags(CLI::App* sc, GridFlags& g) {
    sc->add_option("--kernels", g.kernels, "Kernels searched by the inner grid")
        ->delimiter(',')
        ->capture_default_str();
    sc->add_option("--c-values", g.c_values, "Soft-margin C values searched")
        ->delimiter(',')
        ->capture_default_str();
    sc->add_option("--degrees", g.degrees, "Polynomial degrees searched")
        ->delimiter(',')
        ->capture_default_str();
    sc->add_option("--coef0s", g.coef0s, "coef0 values searched (poly/sigmoid)")
        ->delimiter(',')
        ->capture_default_str();
    sc->add_option("--penalties", g.penalties, "Penalties searched (L1 linear-only, L2)")
        ->delimiter(',')
        ->capture_default_str();
}

afb::GridSpec grid_spec(const GridFlags& g) {
    afb::GridSpec s;
    s.kernels = g.kernels;
    s.c_values = g.c_values;
    s.degrees = g.degrees;
    s.coef0s = g.coef0s;
    s.penalties = g.penalties;
    return s;
}

json grid_flags_to_json(const GridFlags& g) {
    return json{{"kernels", g.kernels},
                {"c_values", g.c_values},
                {"degrees", g.degrees},
                {"coef0s", g.coef0s},
                {"penalties", g.penalties}};
}

std::vector<afb::Band> resolve_bands(const std::vector<std::string>& names) {
    std::vector<afb::Band> out;
    for (const auto& n : names) {
        bool found = false;
        for (const auto& b : afb::eeg_bands())
            if (b.name == n) {
                out.push_back(b);
                found = true;
            }
        if (!found) throw afb::parameter_error("unknown EEG band '" + n + "'");
    }
    if (out.empty()) throw afb::parameter_error("band list is empty");
    return out;
}

// ---- synth -------------------------------------------------------------

struct SynthArgs {
    std::string out;
    afb::SynthSpec spec;
};

int run_synth(const SynthArgs& a) {
    const auto res = afb::generate_dataset(a.spec);
    fs::create_directories(a.out);
    afb::save_dataset(res.dataset, a.out);
    write_output(a.out, "manifest.json", res.manifest);
    const auto& s = a.spec;
    json cfg{{"subcommand", "synth"},
             {"out", a.out},
             {"seed", s.seed},
             {"participants", s.participants},
             {"clips", s.clips},
             {"common_clips", s.common_clips},
             {"duration_s", s.duration_s},
             {"noise_sd", s.noise_sd},
             {"va_sd", s.va_sd},
             {"effect", json{{"axis", s.effect.axis},
                             {"band", s.effect.band},
                             {"channels", s.effect.channels},
                             {"gain", s.effect.gain}}}};
    write_output(a.out, "run_config.json", cfg);
    std::cout << "synth: wrote " << res.dataset.trials.size() << " trials ("
              << s.participants << " participants x " << s.clips << " clips) to " << a.out
              << "\n";
    return 0;
}

// ---- ingest ------------------------------------------------------------

int run_ingest(const std::string& data, const std::string& out) {
    const auto ds = afb::load_dataset(data);
    std::set<std::string> participants, clips;
    std::map<std::string, std::set<std::string>> viewers;
    double dur_min = 0.0, dur_max = 0.0;
    bool first = true;
    for (const auto& t : ds.trials) {
        participants.insert(t.participant_id);
        clips.insert(t.clip_id);
        viewers[t.clip_id].insert(t.participant_id);
        const double d = t.eeg.duration_s();
        dur_min = first ? d : std::min(dur_min, d);
        dur_max = first ? d : std::max(dur_max, d);
        first = false;
    }
    std::vector<std::string> common;
    for (const auto& [cid, who] : viewers)
        if (who.size() == participants.size()) common.push_back(cid);
    json summary{{"schema", "ingest-summary/1"},
                 {"n_trials", ds.trials.size()},
                 {"participants", participants},
                 {"clips", clips},
                 {"common_clips", common},
                 {"trial_duration_s", json{{"min", dur_min}, {"max", dur_max}}}};
    if (!ds.trials.empty()) {
        const auto& t = ds.trials.front();
        summary["sample_rates"] = json{{"eeg_hz", t.eeg.sample_rate_hz},
                                       {"eda_hz", t.eda.sample_rate_hz},
                                       {"bvp_hz", t.bvp.sample_rate_hz},
                                       {"temp_hz", t.temp.sample_rate_hz}};
    }
    fs::create_directories(out);
    write_output(out, "summary.json", summary);
    write_output(out, "run_config.json",
                 json{{"subcommand", "ingest"}, {"data", data}, {"out", out}});
    std::cout << "ingest: " << ds.trials.size() << " trials, " << participants.size()
              << " participants, " << clips.size() << " clips (" << common.size()
              << " common)\n";
    return 0;
}

// ---- select-stimuli ------------------------------------------------------

struct SelectArgs {
    std::string ratings, data, out;
    std::size_t k = 3, per_cluster = 20;
    int k_min = 2, k_max = 8;
    std::uint64_t seed = 7;
};

std::vector<afb::StimulusPoint> load_rating_points(const SelectArgs& a) {
    std::vector<afb::StimulusPoint> points;
    if (!a.ratings.empty()) {
        const auto rows = afb::csv_parse(afb::read_text_file(a.ratings), a.ratings);
        const std::vector<std::string> want = {"clip_id", "happiness", "fear", "excitement"};
        if (rows.empty() || rows[0] != want)
            throw afb::structural_error(
                a.ratings + ": expected header clip_id,happiness,fear,excitement");
        for (std::size_t r = 1; r < rows.size(); ++r) {
            if (rows[r].size() != 4)
                throw afb::validation_error(a.ratings + ": row " + std::to_string(r) +
                                            " needs 4 fields");
            afb::StimulusPoint p;
            p.clip_id = rows[r][0];
            p.happiness = afb::parse_double(rows[r][1], a.ratings);
            p.fear = afb::parse_double(rows[r][2], a.ratings);
            p.excitement = afb::parse_double(rows[r][3], a.ratings);
            points.push_back(p);
        }
        return points;
    }
    const auto ds = afb::load_dataset(a.data);
    for (const auto& t : ds.trials)
        points.push_back({t.clip_id, t.assessment.happiness, t.assessment.fear,
                          t.assessment.excitement});
    return points;
}

int run_select(const SelectArgs& a) {
    if (a.ratings.empty() == a.data.empty())
        throw afb::parameter_error("select-stimuli: pass exactly one of --ratings or --data");
    const auto points = load_rating_points(a);
    const auto ranking = afb::select_stimuli(points, a.k, a.per_cluster, a.seed);

    afb::Matrix m(points.size(), 3);
    for (std::size_t i = 0; i < points.size(); ++i) {
        m(i, 0) = points[i].happiness;
        m(i, 1) = points[i].fear;
        m(i, 2) = points[i].excitement;
    }
    const int sweep_hi = std::min<int>(a.k_max, static_cast<int>(points.size()));
    std::map<int, double> sse_by_k, db_by_k;
    json sweep = json::array();
    for (int kk = a.k_min; kk <= sweep_hi; ++kk) {
        const auto km = afb::kmeans_fit(m, static_cast<std::size_t>(kk),
                                        afb::derive_seed(a.seed, static_cast<std::uint64_t>(kk)));
        sse_by_k[kk] = km.inertia;
        json row{{"k", kk}, {"sse", km.inertia}};
        if (kk >= 2) {
            const double db = afb::davies_bouldin(m, km.assignments);
            db_by_k[kk] = db;
            row["db"] = db;
        } else {
            row["db"] = nullptr;  // scatter ratios need at least two clusters
        }
        sweep.push_back(row);
    }
    const auto chosen_model = afb::kmeans_fit(m, a.k, a.seed);

    std::string table = "cluster,clip_id,distance,selected\n";
    for (std::size_t c = 0; c < ranking.per_cluster.size(); ++c)
        for (const auto& rc : ranking.per_cluster[c])
            table += afb::csv_join({std::to_string(c), rc.clip_id, num(rc.distance),
                                    rc.selected ? "1" : "0"}) +
                     "\n";
    fs::create_directories(a.out);
    afb::write_text_file(path_join(a.out, "ranking.csv"), table);

    json centroids = json::array();
    for (std::size_t c = 0; c < chosen_model.centroids.rows; ++c)
        centroids.push_back(json::array({chosen_model.centroids(c, 0),
                                         chosen_model.centroids(c, 1),
                                         chosen_model.centroids(c, 2)}));
    json clusters{{"schema", "stimulus-clusters/1"},
                  {"k", a.k},
                  {"per_cluster", a.per_cluster},
                  {"n_points", points.size()},
                  {"centroids", centroids},
                  {"sweep", sweep},
                  {"selected", ranking.selected},
                  {"warnings", ranking.warnings}};
    clusters["db_choice"] = db_by_k.empty() ? json(nullptr) : json(afb::select_k_by_db(db_by_k));
    const auto elbow = sse_by_k.size() >= 3 ? afb::elbow_knee(sse_by_k) : std::nullopt;
    clusters["elbow_choice"] = elbow ? json(*elbow) : json(nullptr);
    write_output(a.out, "clusters.json", clusters);
    write_output(a.out, "run_config.json",
                 json{{"subcommand", "select-stimuli"},
                      {"ratings", a.ratings},
                      {"data", a.data},
                      {"out", a.out},
                      {"k", a.k},
                      {"per_cluster", a.per_cluster},
                      {"k_min", a.k_min},
                      {"k_max", a.k_max},
                      {"seed", a.seed}});
    std::cout << "select-stimuli: " << points.size() << " rating points, "
              << ranking.selected.size() << " clips selected (k=" << a.k << ")\n";
    for (const auto& w : ranking.warnings) std::cout << "warning: " << w << "\n";
    return 0;
}

// ---- extract-features ----------------------------------------------------

struct ExtractArgs {
    std::string data, out, modality = "fusion";
    std::vector<std::string> channels = afb::eeg_montage();
    std::vector<std::string> bands = {"theta", "alpha", "beta", "gamma"};
    PreFlags pre;
    FeatureFlags feats;
    std::uint64_t seed = 7;
    std::size_t jobs = 1;
};

int run_extract(const ExtractArgs& a) {
    const auto ds = afb::load_dataset(a.data);
    const auto table = afb::extract_feature_table(
        ds, afb::parse_modality(a.modality), a.channels, resolve_bands(a.bands),
        pre_config(a.pre, a.seed), feature_options(a.feats), a.jobs);

    std::string header = "participant,clip,is_common,tags";
    for (const auto& slot : table.layout) header += "," + slot.name;
    std::string csv = header + "\n";
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        std::vector<std::string> fields = {table.participants[r], table.clips[r],
                                           table.is_common[r] ? "1" : "0", table.row_tags[r]};
        for (std::size_t c = 0; c < table.layout.size(); ++c)
            fields.push_back(num(table.values(r, c)));
        csv += afb::csv_join(fields) + "\n";
    }
    fs::create_directories(a.out);
    afb::write_text_file(path_join(a.out, "features.csv"), csv);

    json layout = json::array();
    for (const auto& slot : table.layout)
        layout.push_back(json{{"name", slot.name}, {"family", slot.family}, {"tag", slot.tag}});
    write_output(a.out, "layout.json",
                 json{{"schema", "feature-layout/1"}, {"slots", layout}});
    write_output(a.out, "run_config.json",
                 json{{"subcommand", "extract-features"},
                      {"data", a.data},
                      {"out", a.out},
                      {"modality", a.modality},
                      {"channels", a.channels},
                      {"bands", a.bands},
                      {"preprocess", pre_flags_to_json(a.pre)},
                      {"features", feature_flags_to_json(a.feats)},
                      {"seed", a.seed},
                      {"jobs", a.jobs}});
    std::cout << "extract-features: " << table.n_rows() << " rows x " << table.layout.size()
              << " features\n";
    return 0;
}

// ---- label ---------------------------------------------------------------

struct LabelArgs {
    std::string data, out, method = "threshold";
    double threshold = 4.5;
    std::uint64_t seed = 7;
};

int run_label(const LabelArgs& a) {
    const auto ds = afb::load_dataset(a.data);
    const auto labels =
        afb::make_labels(ds, afb::parse_label_method(a.method), a.threshold, a.seed);
    std::string csv = "participant,clip,valence,arousal\n";
    for (std::size_t i = 0; i < ds.trials.size(); ++i)
        csv += afb::csv_join({ds.trials[i].participant_id, ds.trials[i].clip_id,
                              labels.valence[i] == afb::Level::high ? "high" : "low",
                              labels.arousal[i] == afb::Level::high ? "high" : "low"}) +
               "\n";
    fs::create_directories(a.out);
    afb::write_text_file(path_join(a.out, "labels.csv"), csv);

    auto axis_summary = [](const std::vector<afb::Level>& lv) {
        std::size_t high = 0;
        for (auto v : lv) high += v == afb::Level::high;
        return json{{"n_low", lv.size() - high},
                    {"n_high", high},
                    {"class_ratio", afb::format_class_ratio(afb::labels_to_signs(lv))}};
    };
    write_output(a.out, "labels.json",
                 json{{"schema", "labels/1"},
                      {"provenance", labels.provenance},
                      {"n_trials", ds.trials.size()},
                      {"valence", axis_summary(labels.valence)},
                      {"arousal", axis_summary(labels.arousal)}});
    write_output(a.out, "run_config.json",
                 json{{"subcommand", "label"},
                      {"data", a.data},
                      {"out", a.out},
                      {"method", a.method},
                      {"threshold", a.threshold},
                      {"seed", a.seed}});
    std::cout << "label: " << ds.trials.size() << " trials via " << labels.provenance
              << "; valence "
              << afb::format_class_ratio(afb::labels_to_signs(labels.valence)) << ", arousal "
              << afb::format_class_ratio(afb::labels_to_signs(labels.arousal)) << "\n";
    return 0;
}

// ---- train-eval ------------------------------------------------------------

struct EvalArgs {
    std::string data, out, modality = "fusion", labeling = "threshold";
    double threshold = 4.5;
    std::vector<std::string> channels = afb::eeg_montage();
    std::vector<std::string> bands = {"theta", "alpha", "beta", "gamma"};
    PreFlags pre;
    FeatureFlags feats;
    GridFlags grid;
    std::uint64_t seed = 7;
    std::size_t jobs = 1;
    std::string save_model, load_model;
};

json eval_run_config(const EvalArgs& a, const char* subcommand) {
    return json{{"subcommand", subcommand},
                {"data", a.data},
                {"out", a.out},
                {"modality", a.modality},
                {"labeling", a.labeling},
                {"threshold", a.threshold},
                {"channels", a.channels},
                {"bands", a.bands},
                {"preprocess", pre_flags_to_json(a.pre)},
                {"features", feature_flags_to_json(a.feats)},
                {"grid", grid_flags_to_json(a.grid)},
                {"seed", a.seed},
                {"jobs", a.jobs},
                {"save_model", a.save_model},
                {"load_model", a.load_model}};
}

afb::EvalConfig eval_config(const EvalArgs& a) {
    afb::EvalConfig cfg;
    cfg.labeling = afb::parse_label_method(a.labeling);
    cfg.threshold = a.threshold;
    cfg.grid = grid_spec(a.grid);
    cfg.pre = pre_config(a.pre, a.seed);
    cfg.features = feature_options(a.feats);
    cfg.seed = a.seed;
    cfg.jobs = a.jobs;
    return cfg;
}

// Most frequently chosen grid point across folds; ties resolve to the
// earliest point in canonical grid order.
afb::GridPoint modal_choice(const std::vector<afb::FoldResult>& folds,
                            const std::vector<afb::GridPoint>& grid) {
    std::vector<std::size_t> counts(grid.size(), 0);
    for (const auto& f : folds) {
        const std::string key = afb::grid_point_to_json(f.chosen).dump();
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (afb::grid_point_to_json(grid[i]).dump() == key) {
                ++counts[i];
                break;
            }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (counts[i] > counts[best]) best = i;
    return grid[best];
}

afb::SVMModel train_final(const afb::FeatureTable& table, const std::vector<int>& y,
                          const afb::GridPoint& point) {
    const auto scaler = afb::scaler_fit(table.values);
    const auto x = afb::scaler_transform(scaler, table.values);
    auto model = afb::svm_train(x, y, point.kernel, point.C, point.penalty);
    model.scaler = scaler;
    return model;
}

int run_train_eval(const EvalArgs& a) {
    const auto ds = afb::load_dataset(a.data);
    const auto cfg = eval_config(a);
    const auto modality = afb::parse_modality(a.modality);
    const auto bands = resolve_bands(a.bands);
    fs::create_directories(a.out);
    write_output(a.out, "run_config.json", eval_run_config(a, "train-eval"));

    const auto labels = afb::make_labels(ds, cfg.labeling, cfg.threshold, cfg.seed);
    const auto table = afb::extract_feature_table(ds, modality, a.channels, bands, cfg.pre,
                                                  cfg.features, cfg.jobs);
    const auto y_v = afb::labels_to_signs(labels.valence);
    const auto y_a = afb::labels_to_signs(labels.arousal);

    json rep{{"schema", "train-eval/1"},
             {"modality", a.modality},
             {"labeling", a.labeling},
             {"n_features", table.layout.size()}};

    if (!a.load_model.empty()) {
        const json models = afb::read_json_file(a.load_model);
        if (models.value("schema", "") != "svm-models/1")
            throw afb::structural_error(a.load_model + " is not an svm-models/1 document");
        rep["mode"] = "loaded-model";
        auto evaluate = [&](const char* target, const std::vector<int>& y) {
            const auto model = afb::model_from_json(models.at(target));
            const auto x = afb::scaler_transform(model.scaler, table.values);
            const auto m = afb::metrics(y, afb::svm_predict(model, x));
            return json{{"target", target},
                        {"label_provenance", labels.provenance},
                        {"class_ratio", afb::format_class_ratio(y)},
                        {"mean_accuracy", m.accuracy},
                        {"mean_f1", m.f1},
                        {"folds", json::array()},
                        {"warnings",
                         json::array({"evaluated with a loaded model; no cross-validation"})}};
        };
        rep["valence"] = evaluate("valence", y_v);
        rep["arousal"] = evaluate("arousal", y_a);
        write_output(a.out, "report.json", rep);
        std::cout << "train-eval (loaded model): valence acc="
                  << rep["valence"]["mean_accuracy"].get<double>()
                  << " | arousal acc=" << rep["arousal"]["mean_accuracy"].get<double>()
                  << "\n";
        return 0;
    }

    const auto folds = afb::loco_folds(ds);
    afb::EvalRun run;
    run.valence = afb::run_cv_on_features(table, y_v, folds, cfg.grid, labels.provenance,
                                          "valence", cfg.jobs);
    run.arousal = afb::run_cv_on_features(table, y_a, folds, cfg.grid, labels.provenance,
                                          "arousal", cfg.jobs);
    rep["valence"] = afb::cv_report_to_json(run.valence);
    rep["arousal"] = afb::cv_report_to_json(run.arousal);
    write_output(a.out, "report.json", rep);

    if (!a.save_model.empty()) {
        const auto grid = afb::enumerate_grid(cfg.grid);
        json models{{"schema", "svm-models/1"},
                    {"valence", afb::model_to_json(
                                    train_final(table, y_v, modal_choice(run.valence.folds,
                                                                         grid)))},
                    {"arousal", afb::model_to_json(
                                    train_final(table, y_a, modal_choice(run.arousal.folds,
                                                                         grid)))}};
        afb::write_json_file(a.save_model, models);
    }

    std::cout << "train-eval: " << run.valence.folds.size() << " folds | valence acc="
              << run.valence.mean_accuracy << " f1=" << run.valence.mean_f1
              << " | arousal acc=" << run.arousal.mean_accuracy
              << " f1=" << run.arousal.mean_f1 << "\n";
    for (const auto& w : run.valence.warnings) std::cout << "warning: " << w << "\n";
    for (const auto& w : run.arousal.warnings) std::cout << "warning: " << w << "\n";
    return 0;
}

// ---- channel-study / band-study ---------------------------------------------

int run_study(const EvalArgs& a, bool by_channel) {
    const char* name = by_channel ? "channel-study" : "band-study";
    const auto ds = afb::load_dataset(a.data);
    const auto cfg = eval_config(a);
    fs::create_directories(a.out);
    write_output(a.out, "run_config.json", eval_run_config(a, name));

    const auto rows = by_channel ? afb::channel_study(ds, cfg) : afb::band_study(ds, cfg);

    json jrows = json::array();
    std::string csv = "name,n_features,valence_accuracy,valence_f1,arousal_accuracy,arousal_f1\n";
    for (const auto& r : rows) {
        jrows.push_back(json{{"name", r.name},
                             {"channels", r.channels},
                             {"bands", r.bands},
                             {"n_features", r.n_features},
                             {"valence", afb::cv_report_to_json(r.run.valence)},
                             {"arousal", afb::cv_report_to_json(r.run.arousal)}});
        csv += afb::csv_join({r.name, std::to_string(r.n_features),
                              num(r.run.valence.mean_accuracy), num(r.run.valence.mean_f1),
                              num(r.run.arousal.mean_accuracy), num(r.run.arousal.mean_f1)}) +
               "\n";
    }
    write_output(a.out, "study.json",
                 json{{"schema", std::string(name) + "/1"}, {"rows", jrows}});
    afb::write_text_file(path_join(a.out, "study.csv"), csv);
    std::cout << name << ": " << rows.size() << " rows -> " << a.out << "\n";
    return 0;
}

// ---- stats -----------------------------------------------------------------

struct StatsArgs {
    std::vector<std::string> inputs, names;
    std::string target, metric = "accuracy", out;
};

int run_stats(const StatsArgs& a) {
    if (a.inputs.size() < 2)
        throw afb::parameter_error("stats: need at least two --inputs report files");
    if (!a.names.empty() && a.names.size() != a.inputs.size())
        throw afb::parameter_error("stats: --names count must match --inputs count");

    const std::string key = a.metric == "f1" ? "test_f1" : "test_accuracy";
    std::vector<std::vector<double>> columns;
    std::vector<std::vector<std::string>> fold_clips;
    for (const auto& given : a.inputs) {
        const std::string path =
            fs::is_directory(given) ? path_join(given, "report.json") : given;
        const json rep = afb::read_json_file(path);
        if (!rep.contains(a.target))
            throw afb::structural_error(path + " has no '" + a.target + "' report");
        std::vector<double> col;
        std::vector<std::string> clips;
        for (const auto& f : rep.at(a.target).at("folds")) {
            col.push_back(f.at(key).get<double>());
            clips.push_back(f.at("held_out_clip").get<std::string>());
        }
        columns.push_back(std::move(col));
        fold_clips.push_back(std::move(clips));
    }
    for (std::size_t i = 1; i < columns.size(); ++i)
        if (fold_clips[i] != fold_clips[0])
            throw afb::validation_error(
                "stats: conditions disagree on outer folds; '" + a.inputs[i] + "' and '" +
                a.inputs[0] + "' hold out different clips");

    afb::Matrix m(columns[0].size(), columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c)
        for (std::size_t r = 0; r < columns[c].size(); ++r) m(r, c) = columns[c][r];
    const auto res = afb::rm_anova_gg(m);

    json out_j = afb::anova_to_json(res);
    out_j["schema"] = "stats/1";
    out_j["conditions"] = a.names.empty() ? a.inputs : a.names;
    out_j["target"] = a.target;
    out_j["metric"] = a.metric;
    out_j["n_subjects"] = columns[0].size();
    out_j["subjects"] = "outer CV folds, one per common clip";
    fs::create_directories(a.out);
    write_output(a.out, "anova.json", out_j);
    write_output(a.out, "run_config.json",
                 json{{"subcommand", "stats"},
                      {"inputs", a.inputs},
                      {"names", a.names},
                      {"target", a.target},
                      {"metric", a.metric},
                      {"out", a.out}});
    std::cout << "stats (" << a.target << " " << a.metric << "): "
              << afb::anova_summary_line(res) << "\n";
    return 0;
}

// ---- report -----------------------------------------------------------------

int run_report(const std::vector<std::string>& inputs, const std::string& out) {
    json comparison = json::array(), elbow = json::array();
    json ablation_channels = json::array(), ablation_bands = json::array();

    auto study_rows = [](const json& study, const std::string& source, json& dest) {
        for (const auto& r : study.at("rows"))
            dest.push_back(json{{"source", source},
                                {"name", r.at("name")},
                                {"n_features", r.at("n_features")},
                                {"valence_accuracy", r.at("valence").at("mean_accuracy")},
                                {"valence_f1", r.at("valence").at("mean_f1")},
                                {"arousal_accuracy", r.at("arousal").at("mean_accuracy")},
                                {"arousal_f1", r.at("arousal").at("mean_f1")}});
    };

    for (const auto& dir : inputs) {
        bool recognized = false;
        const std::string rep_path = path_join(dir, "report.json");
        if (fs::exists(rep_path)) {
            const json rep = afb::read_json_file(rep_path);
            if (rep.contains("valence") && rep.contains("arousal")) {
                comparison.push_back(json{
                    {"source", dir},
                    {"modality", rep.value("modality", "")},
                    {"labeling", rep.value("labeling", "")},
                    {"valence_class_ratio", rep.at("valence").at("class_ratio")},
                    {"valence_accuracy", rep.at("valence").at("mean_accuracy")},
                    {"valence_f1", rep.at("valence").at("mean_f1")},
                    {"arousal_class_ratio", rep.at("arousal").at("class_ratio")},
                    {"arousal_accuracy", rep.at("arousal").at("mean_accuracy")},
                    {"arousal_f1", rep.at("arousal").at("mean_f1")}});
                recognized = true;
            }
        }
        const std::string clu_path = path_join(dir, "clusters.json");
        if (fs::exists(clu_path)) {
            const json clu = afb::read_json_file(clu_path);
            for (const auto& row : clu.at("sweep"))
                elbow.push_back(json{{"source", dir},
                                     {"k", row.at("k")},
                                     {"sse", row.at("sse")},
                                     {"db", row.at("db")}});
            recognized = true;
        }
        const std::string study_path = path_join(dir, "study.json");
        if (fs::exists(study_path)) {
            const json study = afb::read_json_file(study_path);
            const std::string schema = study.value("schema", "");
            if (schema == "channel-study/1")
                study_rows(study, dir, ablation_channels);
            else if (schema == "band-study/1")
                study_rows(study, dir, ablation_bands);
            recognized = true;
        }
        if (!recognized)
            throw afb::structural_error(
                "report: no recognized outputs in '" + dir +
                "'; expected report.json, clusters.json or study.json");
    }

    fs::create_directories(out);
    auto str = [](const json& v) { return v.get<std::string>(); };
    auto dbl = [](const json& v) { return num(v.get<double>()); };
    if (!comparison.empty()) {
        std::string csv =
            "source,modality,labeling,valence_class_ratio,valence_accuracy,valence_f1,"
            "arousal_class_ratio,arousal_accuracy,arousal_f1\n";
        for (const auto& r : comparison)
            csv += afb::csv_join(
                       {str(r.at("source")), str(r.at("modality")), str(r.at("labeling")),
                        str(r.at("valence_class_ratio")), dbl(r.at("valence_accuracy")),
                        dbl(r.at("valence_f1")), str(r.at("arousal_class_ratio")),
                        dbl(r.at("arousal_accuracy")), dbl(r.at("arousal_f1"))}) +
                   "\n";
        afb::write_text_file(path_join(out, "comparison.csv"), csv);
    }
    if (!elbow.empty()) {
        std::string csv = "source,k,sse,db\n";
        for (const auto& r : elbow)
            csv += afb::csv_join({str(r.at("source")), std::to_string(r.at("k").get<int>()),
                                  dbl(r.at("sse")),
                                  r.at("db").is_null() ? "" : dbl(r.at("db"))}) +
                   "\n";
        afb::write_text_file(path_join(out, "elbow.csv"), csv);
    }
    auto write_ablation = [&](const json& rows, const char* file) {
        if (rows.empty()) return;
        std::string csv =
            "source,name,n_features,valence_accuracy,valence_f1,arousal_accuracy,arousal_f1\n";
        for (const auto& r : rows)
            csv += afb::csv_join(
                       {str(r.at("source")), str(r.at("name")),
                        std::to_string(r.at("n_features").get<std::size_t>()),
                        dbl(r.at("valence_accuracy")), dbl(r.at("valence_f1")),
                        dbl(r.at("arousal_accuracy")), dbl(r.at("arousal_f1"))}) +
                   "\n";
        afb::write_text_file(path_join(out, file), csv);
    };
    write_ablation(ablation_channels, "ablation_channels.csv");
    write_ablation(ablation_bands, "ablation_bands.csv");
    write_output(out, "tables.json",
                 json{{"schema", "report-tables/1"},
                      {"comparison", comparison},
                      {"elbow", elbow},
                      {"ablation_channels", ablation_channels},
                      {"ablation_bands", ablation_bands}});
    write_output(out, "run_config.json",
                 json{{"subcommand", "report"}, {"inputs", inputs}, {"out", out}});
    std::cout << "report: " << comparison.size() << " comparison rows, " << elbow.size()
              << " elbow points, " << ablation_channels.size() + ablation_bands.size()
              << " ablation rows -> " << out << "\n";
    return 0;
}

void add_eval_flags(CLI::App* sc, EvalArgs& a, bool with_slices) {
    sc->add_option("--data", a.data, "Dataset directory")->required();
    sc->add_option("--out", a.out, "Output directory")->required();
    if (with_slices) {
        sc->add_option("--modality", a.modality, "Feature modality")
            ->check(CLI::IsMember({"eeg", "e4", "fusion"}))
            ->capture_default_str();
        sc->add_option("--channels", a.channels, "EEG channels used")
            ->delimiter(',')
            ->capture_default_str();
        sc->add_option("--bands", a.bands, "EEG bands used")
            ->delimiter(',')
            ->capture_default_str();
    }
    sc->add_option("--labeling", a.labeling, "Label source")
        ->check(CLI::IsMember({"threshold", "kmeans"}))
        ->capture_default_str();
    sc->add_option("--threshold", a.threshold, "Score split point for threshold labeling")
        ->capture_default_str();
    add_pre_flags(sc, a.pre);
    add_feature_flags(sc, a.feats);
    add_grid_flags(sc, a.grid);
    sc->add_option("--seed", a.seed, "Root seed; all randomness derives from it")
        ->capture_default_str();
    sc->add_option("--jobs", a.jobs, "Worker threads (env AFFECTBENCH_JOBS)")
        ->envname("AFFECTBENCH_JOBS")
        ->check(CLI::Range(std::size_t{1}, std::size_t{256}))
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"affectbench: batch toolkit for biosignal affect recognition"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    SynthArgs synth;
    auto* sc_synth =
        app.add_subcommand("synth", "Generate a synthetic dataset with planted effects");
    sc_synth->add_option("--out", synth.out, "Output dataset directory")->required();
    sc_synth->add_option("--seed", synth.spec.seed, "Generator seed")->capture_default_str();
    sc_synth->add_option("--participants", synth.spec.participants, "Participant count")
        ->capture_default_str();
    sc_synth->add_option("--clips", synth.spec.clips, "Clips per participant")
        ->capture_default_str();
    sc_synth
        ->add_option("--common-clips", synth.spec.common_clips,
                     "Leading clips shared by every participant")
        ->capture_default_str();
    sc_synth->add_option("--duration", synth.spec.duration_s, "Trial duration, s")
        ->capture_default_str();
    sc_synth->add_option("--noise-sd", synth.spec.noise_sd, "EEG noise standard deviation")
        ->capture_default_str();
    sc_synth->add_option("--va-sd", synth.spec.va_sd, "Valence/arousal blob spread")
        ->capture_default_str();
    sc_synth->add_option("--effect-axis", synth.spec.effect.axis, "Planted effect axis")
        ->check(CLI::IsMember({"valence", "arousal"}))
        ->capture_default_str();
    sc_synth->add_option("--effect-band", synth.spec.effect.band, "Planted effect EEG band")
        ->check(CLI::IsMember({"theta", "alpha", "beta", "gamma"}))
        ->capture_default_str();
    sc_synth
        ->add_option("--effect-channels", synth.spec.effect.channels,
                     "Channels carrying the effect (default all)")
        ->delimiter(',');
    sc_synth->add_option("--effect-gain", synth.spec.effect.gain, "Planted amplitude gain")
        ->capture_default_str();

    std::string ingest_data, ingest_out;
    auto* sc_ingest =
        app.add_subcommand("ingest", "Validate a dataset tree and summarize its contents");
    sc_ingest->add_option("--data", ingest_data, "Dataset directory")->required();
    sc_ingest->add_option("--out", ingest_out, "Output directory")->required();

    SelectArgs sel;
    auto* sc_select = app.add_subcommand(
        "select-stimuli", "Cluster rater scores and rank clips nearest each centroid");
    sc_select->add_option("--ratings", sel.ratings,
                          "CSV of clip_id,happiness,fear,excitement rows");
    sc_select->add_option("--data", sel.data, "Dataset directory (uses trial assessments)");
    sc_select->add_option("--out", sel.out, "Output directory")->required();
    sc_select->add_option("--k", sel.k, "Cluster count")->capture_default_str();
    sc_select->add_option("--per-cluster", sel.per_cluster, "Clips kept per cluster")
        ->capture_default_str();
    sc_select->add_option("--k-min", sel.k_min, "Sweep lower bound")->capture_default_str();
    sc_select->add_option("--k-max", sel.k_max, "Sweep upper bound")->capture_default_str();
    sc_select->add_option("--seed", sel.seed, "Clustering seed")->capture_default_str();

    ExtractArgs ext;
    auto* sc_extract =
        app.add_subcommand("extract-features", "Preprocess trials and write a feature table");
    sc_extract->add_option("--data", ext.data, "Dataset directory")->required();
    sc_extract->add_option("--out", ext.out, "Output directory")->required();
    sc_extract->add_option("--modality", ext.modality, "Feature modality")
        ->check(CLI::IsMember({"eeg", "e4", "fusion"}))
        ->capture_default_str();
    sc_extract->add_option("--channels", ext.channels, "EEG channels used")
        ->delimiter(',')
        ->capture_default_str();
    sc_extract->add_option("--bands", ext.bands, "EEG bands used")
        ->delimiter(',')
        ->capture_default_str();
    add_pre_flags(sc_extract, ext.pre);
    add_feature_flags(sc_extract, ext.feats);
    sc_extract->add_option("--seed", ext.seed, "Root seed")->capture_default_str();
    sc_extract->add_option("--jobs", ext.jobs, "Worker threads (env AFFECTBENCH_JOBS)")
        ->envname("AFFECTBENCH_JOBS")
        ->check(CLI::Range(std::size_t{1}, std::size_t{256}))
        ->capture_default_str();

    LabelArgs lab;
    auto* sc_label =
        app.add_subcommand("label", "Derive binary valence/arousal labels from assessments");
    sc_label->add_option("--data", lab.data, "Dataset directory")->required();
    sc_label->add_option("--out", lab.out, "Output directory")->required();
    sc_label->add_option("--method", lab.method, "threshold or kmeans")
        ->check(CLI::IsMember({"threshold", "kmeans"}))
        ->capture_default_str();
    sc_label->add_option("--threshold", lab.threshold, "Score split point")
        ->capture_default_str();
    sc_label->add_option("--seed", lab.seed, "Clustering seed (kmeans method)")
        ->capture_default_str();

    EvalArgs ev;
    auto* sc_eval = app.add_subcommand(
        "train-eval", "Nested leave-one-clip-out SVM evaluation on both targets");
    add_eval_flags(sc_eval, ev, true);
    sc_eval->add_option("--save-model", ev.save_model,
                        "Write final models (refit on all rows) to this JSON file");
    sc_eval->add_option("--load-model", ev.load_model,
                        "Evaluate a saved svm-models/1 file instead of training");

    EvalArgs ch;
    auto* sc_channels = app.add_subcommand(
        "channel-study", "Evaluate fixed EEG channel subsets with the full protocol");
    add_eval_flags(sc_channels, ch, false);

    EvalArgs bd;
    auto* sc_bands = app.add_subcommand(
        "band-study", "Evaluate single EEG frequency bands with the full protocol");
    add_eval_flags(sc_bands, bd, false);

    StatsArgs st;
    auto* sc_stats = app.add_subcommand(
        "stats", "Repeated-measures ANOVA across evaluation runs (folds are subjects)");
    sc_stats->add_option("--inputs", st.inputs, "report.json files or their directories")
        ->required();
    sc_stats->add_option("--names", st.names, "Condition names (default: input paths)")
        ->delimiter(',');
    sc_stats->add_option("--target", st.target, "valence or arousal")
        ->check(CLI::IsMember({"valence", "arousal"}))
        ->required();
    sc_stats->add_option("--metric", st.metric, "Per-fold metric compared")
        ->check(CLI::IsMember({"accuracy", "f1"}))
        ->capture_default_str();
    sc_stats->add_option("--out", st.out, "Output directory")->required();

    std::vector<std::string> rep_inputs;
    std::string rep_out;
    auto* sc_report = app.add_subcommand(
        "report", "Reshape existing run outputs into comparison/elbow/ablation tables");
    sc_report->add_option("--inputs", rep_inputs, "Run output directories")->required();
    sc_report->add_option("--out", rep_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sc_synth->parsed()) return run_synth(synth);
        if (sc_ingest->parsed()) return run_ingest(ingest_data, ingest_out);
        if (sc_select->parsed()) return run_select(sel);
        if (sc_extract->parsed()) return run_extract(ext);
        if (sc_label->parsed()) return run_label(lab);
        if (sc_eval->parsed()) return run_train_eval(ev);
        if (sc_channels->parsed()) return run_study(ch, true);
        if (sc_bands->parsed()) return run_study(bd, false);
        if (sc_stats->parsed()) return run_stats(st);
        if (sc_report->parsed()) return run_report(rep_inputs, rep_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
