// Nested leave-one-clip-out evaluation: outer folds per common clip,
// inner grid search on mean F1, plus the channel-subset and band
// ablation studies over a shared feature table.
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "affectbench/cluster.hpp"
#include "affectbench/core.hpp"
#include "affectbench/features.hpp"
#include "affectbench/jsonio.hpp"
#include "affectbench/parallel.hpp"
#include "affectbench/svm.hpp"

namespace afb {

struct GridSpec {
    std::vector<std::string> kernels = {"linear", "poly", "rbf", "sigmoid"};
    std::vector<double> c_values = {1.0, 10.0, 100.0};
    std::vector<int> degrees = {3, 4, 5};
    std::vector<double> coef0s = {0.0, 0.01, 0.1};
    std::vector<std::string> penalties = {"L1", "L2"};
};

struct GridPoint {
    KernelSpec kernel;
    double C = 1.0;
    std::string penalty = "L2";
};

inline json grid_point_to_json(const GridPoint& p) {
    return json{{"kernel", kernel_kind_name(p.kernel.kind)},
                {"C", p.C},
                {"degree", p.kernel.degree},
                {"coef0", p.kernel.coef0},
                {"penalty", p.penalty}};
}

// Canonical pruned enumeration: degree varies only for poly, coef0 only
// for poly/sigmoid, L1 only for linear. The flat paper grid collapses to
// 45 distinct points.
inline std::vector<GridPoint> enumerate_grid(const GridSpec& g) {
    if (g.kernels.empty() || g.c_values.empty())
        throw parameter_error("enumerate_grid: kernels and C sets must be nonempty");
    const bool has_l2 =
        std::find(g.penalties.begin(), g.penalties.end(), "L2") != g.penalties.end();
    std::vector<GridPoint> out;
    for (const auto& kname : g.kernels) {
        const KernelKind kind = parse_kernel_kind(kname);
        if (kind == KernelKind::linear) {
            for (const auto& pen : g.penalties)
                for (double c : g.c_values) {
                    GridPoint p;
                    p.kernel.kind = kind;
                    p.C = c;
                    p.penalty = pen;
                    out.push_back(p);
                }
        } else if (!has_l2) {
            continue;  // nonlinear kernels exist only in L2 form
        } else if (kind == KernelKind::poly) {
            for (double c : g.c_values)
                for (int deg : g.degrees)
                    for (double c0 : g.coef0s) {
                        GridPoint p;
                        p.kernel.kind = kind;
                        p.kernel.degree = deg;
                        p.kernel.coef0 = c0;
                        p.C = c;
                        out.push_back(p);
                    }
        } else if (kind == KernelKind::rbf) {
            for (double c : g.c_values) {
                GridPoint p;
                p.kernel.kind = kind;
                p.C = c;
                out.push_back(p);
            }
        } else {
            for (double c : g.c_values)
                for (double c0 : g.coef0s) {
                    GridPoint p;
                    p.kernel.kind = kind;
                    p.kernel.coef0 = c0;
                    p.C = c;
                    out.push_back(p);
                }
        }
    }
    if (out.empty()) throw parameter_error("enumerate_grid: grid is empty after pruning");
    return out;
}

struct Fold {
    std::string clip_id;                 // held out
    std::vector<std::size_t> train_rows; // indices into ds.trials / table rows
    std::vector<std::size_t> test_rows;
};

// One fold per common clip; the training side keeps every other trial,
// non-common clips included. Depends only on clip structure.
inline std::vector<Fold> loco_folds(const Dataset& ds) {
    const auto common = validate_cv_readiness(ds);
    std::vector<Fold> folds;
    for (const auto& clip : common) {
        Fold f;
        f.clip_id = clip;
        for (std::size_t i = 0; i < ds.trials.size(); ++i) {
            if (ds.trials[i].clip_id == clip)
                f.test_rows.push_back(i);
            else
                f.train_rows.push_back(i);
        }
        folds.push_back(std::move(f));
    }
    return folds;
}

namespace detail {

inline Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), m.cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < m.cols; ++j) out(i, j) = m(rows[i], j);
    return out;
}

template <typename T>
std::vector<T> take(const std::vector<T>& v, const std::vector<std::size_t>& rows) {
    std::vector<T> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(v[r]);
    return out;
}

inline bool single_class(const std::vector<int>& y) {
    for (int v : y)
        if (v != y.front()) return false;
    return true;
}

}  // namespace detail

struct GridSearchResult {
    GridPoint chosen;
    double inner_f1 = 0.0;
    std::vector<std::string> warnings;
};

// Inner leave-one-clip-out over the training rows' common clips; every
// grid point is scored by mean F1 and ties keep the earlier point.
inline GridSearchResult grid_search(const FeatureTable& table, const std::vector<int>& y,
                                    const std::vector<std::size_t>& train_rows,
                                    const GridSpec& grid) {
    std::vector<std::string> inner_clips;
    {
        std::set<std::string> seen;
        for (std::size_t r : train_rows)
            if (table.is_common[r] && seen.insert(table.clips[r]).second)
                inner_clips.push_back(table.clips[r]);
        std::sort(inner_clips.begin(), inner_clips.end());
    }
    if (inner_clips.size() < 2)
        throw parameter_error("grid_search: need at least 2 common clips in the training fold");

    struct InnerFold {
        Matrix x_train, x_test;
        std::vector<int> y_train, y_test;
    };
    std::vector<InnerFold> inner;
    for (const auto& clip : inner_clips) {
        std::vector<std::size_t> tr, te;
        for (std::size_t r : train_rows)
            (table.clips[r] == clip ? te : tr).push_back(r);
        InnerFold f;
        const Matrix raw_train = detail::take_rows(table.values, tr);
        const auto scaler = scaler_fit(raw_train);
        f.x_train = scaler_transform(scaler, raw_train);
        f.x_test = scaler_transform(scaler, detail::take_rows(table.values, te));
        f.y_train = detail::take(y, tr);
        f.y_test = detail::take(y, te);
        inner.push_back(std::move(f));
    }

    const auto points = enumerate_grid(grid);
    GridSearchResult best;
    bool first = true;
    for (std::size_t p = 0; p < points.size(); ++p) {
        double score = 0.0;
        bool degenerate = false;
        for (const auto& f : inner) {
            if (detail::single_class(f.y_train)) {
                degenerate = true;
                break;
            }
            const auto model = svm_train(f.x_train, f.y_train, points[p].kernel, points[p].C,
                                         points[p].penalty);
            score += metrics(f.y_test, svm_predict(model, f.x_test)).f1;
        }
        if (degenerate) {
            best.warnings.push_back("grid point " + std::to_string(p) +
                                    " skipped: single-class inner training fold");
            score = 0.0;
        } else {
            score /= static_cast<double>(inner.size());
        }
        if (first || score > best.inner_f1) {
            best.chosen = points[p];
            best.inner_f1 = score;
            first = false;
        }
    }
    return best;
}

struct FoldResult {
    std::string held_out_clip;
    GridPoint chosen;
    double inner_f1 = 0.0;
    double test_accuracy = 0.0;
    double test_f1 = 0.0;
    std::size_t n_train = 0, n_test = 0;
    MinMaxScaler scaler;  // outer fold scaler, exposed for leakage probes
};

struct CVReport {
    std::string target;  // valence | arousal
    std::string label_provenance;
    std::string class_ratio;  // "low:high" rendered as "<ratio>:1"
    std::vector<FoldResult> folds;
    double mean_accuracy = 0.0;
    double mean_f1 = 0.0;
    std::vector<std::string> warnings;
};

inline std::string format_class_ratio(const std::vector<int>& y) {
    double low = 0.0, high = 0.0;
    for (int v : y) (v == 1 ? high : low) += 1.0;
    if (high == 0.0) return "inf:1";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f:1", low / high);
    return buf;
}

// Outer CV over prebuilt folds and labels: per fold, fit the scaler on
// the training rows, grid-search inside them, retrain with the winner,
// evaluate on the held-out clip.
inline CVReport run_cv_on_features(const FeatureTable& table, const std::vector<int>& y,
                                   const std::vector<Fold>& folds, const GridSpec& grid,
                                   const std::string& provenance, const std::string& target,
                                   std::size_t jobs = 1) {
    if (y.size() != table.n_rows())
        throw parameter_error("run_cv_on_features: label/row count mismatch");
    if (folds.empty()) throw parameter_error("run_cv_on_features: no folds");
    if (detail::single_class(y))
        throw validation_error("degenerate labeling: only one class present overall");

    CVReport report;
    report.target = target;
    report.label_provenance = provenance;
    report.class_ratio = format_class_ratio(y);
    report.folds.resize(folds.size());
    std::vector<std::vector<std::string>> fold_warnings(folds.size());

    parallel_for(folds.size(), jobs, [&](std::size_t fi) {
        const auto& fold = folds[fi];
        FoldResult res;
        res.held_out_clip = fold.clip_id;
        res.n_train = fold.train_rows.size();
        res.n_test = fold.test_rows.size();

        const auto search = grid_search(table, y, fold.train_rows, grid);
        res.chosen = search.chosen;
        res.inner_f1 = search.inner_f1;
        for (const auto& w : search.warnings)
            fold_warnings[fi].push_back("fold " + fold.clip_id + ": " + w);

        const Matrix raw_train = detail::take_rows(table.values, fold.train_rows);
        res.scaler = scaler_fit(raw_train);
        const Matrix x_train = scaler_transform(res.scaler, raw_train);
        const Matrix x_test =
            scaler_transform(res.scaler, detail::take_rows(table.values, fold.test_rows));
        const auto y_train = detail::take(y, fold.train_rows);
        const auto y_test = detail::take(y, fold.test_rows);
        auto model = svm_train(x_train, y_train, search.chosen.kernel, search.chosen.C,
                               search.chosen.penalty);
        model.scaler = res.scaler;
        const auto m = metrics(y_test, svm_predict(model, x_test));
        res.test_accuracy = m.accuracy;
        res.test_f1 = m.f1;
        report.folds[fi] = std::move(res);
    });

    for (const auto& ws : fold_warnings)
        for (const auto& w : ws) report.warnings.push_back(w);
    for (const auto& f : report.folds) {
        report.mean_accuracy += f.test_accuracy;
        report.mean_f1 += f.test_f1;
    }
    report.mean_accuracy /= static_cast<double>(report.folds.size());
    report.mean_f1 /= static_cast<double>(report.folds.size());
    return report;
}

enum class LabelMethod { threshold, kmeans };

inline LabelMethod parse_label_method(const std::string& s) {
    if (s == "threshold") return LabelMethod::threshold;
    if (s == "kmeans") return LabelMethod::kmeans;
    throw parameter_error("unknown labeling method '" + s + "' (expected threshold or kmeans)");
}

// Ground-truth labels for every trial, derived from self-assessments
// before any CV split (labels are targets, not features).
inline BinaryLabels make_labels(const Dataset& ds, LabelMethod method, double threshold,
                                std::uint64_t seed) {
    std::vector<std::pair<double, double>> va;
    for (const auto& t : ds.trials) va.push_back({t.assessment.valence, t.assessment.arousal});
    if (method == LabelMethod::threshold) return label_by_threshold(va, threshold);
    return label_by_quadrant(va, derive_seed(seed, 0x6c6162656cULL)).first;
}

inline std::vector<int> labels_to_signs(const std::vector<Level>& levels) {
    std::vector<int> out;
    out.reserve(levels.size());
    for (Level l : levels) out.push_back(l == Level::high ? 1 : -1);
    return out;
}

struct EvalRun {
    CVReport valence;
    CVReport arousal;
};

struct EvalConfig {
    LabelMethod labeling = LabelMethod::threshold;
    double threshold = 4.5;
    GridSpec grid;
    PreprocessConfig pre;
    FeatureOptions features;
    std::uint64_t seed = 7;
    std::size_t jobs = 1;
};

// Full pipeline for one modality: features, labels, folds, nested CV on
// both targets.
inline EvalRun run_cv(const Dataset& ds, Modality modality,
                      const std::vector<std::string>& channels, const std::vector<Band>& bands,
                      const EvalConfig& cfg) {
    const auto folds = loco_folds(ds);
    const auto labels = make_labels(ds, cfg.labeling, cfg.threshold, cfg.seed);
    const auto table =
        extract_feature_table(ds, modality, channels, bands, cfg.pre, cfg.features, cfg.jobs);
    EvalRun run;
    run.valence = run_cv_on_features(table, labels_to_signs(labels.valence), folds, cfg.grid,
                                     labels.provenance, "valence", cfg.jobs);
    run.arousal = run_cv_on_features(table, labels_to_signs(labels.arousal), folds, cfg.grid,
                                     labels.provenance, "arousal", cfg.jobs);
    return run;
}

inline const std::vector<std::pair<std::string, std::vector<std::string>>>&
channel_study_sets() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> sets = {
        {"Fp1,Fp2,Fz", {"Fp1", "Fp2", "Fz"}}, {"Fp1,Fp2,Cz", {"Fp1", "Fp2", "Cz"}},
        {"Fp1,Fp2,Pz", {"Fp1", "Fp2", "Pz"}}, {"Fp1,Fp2,Oz", {"Fp1", "Fp2", "Oz"}},
        {"T3,T4,Fz", {"T3", "T4", "Fz"}},     {"T3,T4,Cz", {"T3", "T4", "Cz"}},
        {"T3,T4,Pz", {"T3", "T4", "Pz"}},     {"T3,T4,Oz", {"T3", "T4", "Oz"}},
        {"Fz,Cz,Pz,Oz", {"Fz", "Cz", "Pz", "Oz"}}};
    return sets;
}

struct StudyRow {
    std::string name;
    std::vector<std::string> channels;
    std::vector<std::string> bands;
    std::size_t n_features = 0;
    EvalRun run;
};

namespace detail {

inline std::vector<std::string> band_names() {
    std::vector<std::string> names;
    for (const auto& b : eeg_bands()) names.push_back(b.name);
    return names;
}

}  // namespace detail

// Both studies share one full EEG feature table and slice columns per
// row, so per-row work is only the CV itself.
inline std::vector<StudyRow> channel_study(const Dataset& ds, const EvalConfig& cfg) {
    const auto folds = loco_folds(ds);
    const auto labels = make_labels(ds, cfg.labeling, cfg.threshold, cfg.seed);
    const auto table = extract_feature_table(ds, Modality::eeg, eeg_montage(), eeg_bands(),
                                             cfg.pre, cfg.features, cfg.jobs);
    const auto y_v = labels_to_signs(labels.valence);
    const auto y_a = labels_to_signs(labels.arousal);
    std::vector<StudyRow> rows;
    for (const auto& [name, channels] : channel_study_sets()) {
        StudyRow row;
        row.name = name;
        row.channels = channels;
        row.bands = detail::band_names();
        const auto sliced =
            select_columns(table, eeg_column_indices(table, channels, row.bands));
        row.n_features = sliced.layout.size();
        row.run.valence = run_cv_on_features(sliced, y_v, folds, cfg.grid, labels.provenance,
                                             "valence", cfg.jobs);
        row.run.arousal = run_cv_on_features(sliced, y_a, folds, cfg.grid, labels.provenance,
                                             "arousal", cfg.jobs);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<StudyRow> band_study(const Dataset& ds, const EvalConfig& cfg) {
    const auto folds = loco_folds(ds);
    const auto labels = make_labels(ds, cfg.labeling, cfg.threshold, cfg.seed);
    const auto table = extract_feature_table(ds, Modality::eeg, eeg_montage(), eeg_bands(),
                                             cfg.pre, cfg.features, cfg.jobs);
    const auto y_v = labels_to_signs(labels.valence);
    const auto y_a = labels_to_signs(labels.arousal);
    std::vector<StudyRow> rows;
    for (const auto& band : detail::band_names()) {
        StudyRow row;
        row.name = band;
        row.channels = eeg_montage();
        row.bands = {band};
        const auto sliced =
            select_columns(table, eeg_column_indices(table, eeg_montage(), row.bands));
        row.n_features = sliced.layout.size();
        row.run.valence = run_cv_on_features(sliced, y_v, folds, cfg.grid, labels.provenance,
                                             "valence", cfg.jobs);
        row.run.arousal = run_cv_on_features(sliced, y_a, folds, cfg.grid, labels.provenance,
                                             "arousal", cfg.jobs);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json cv_report_to_json(const CVReport& r) {
    json folds = json::array();
    for (const auto& f : r.folds)
        folds.push_back(json{{"held_out_clip", f.held_out_clip},
                             {"hyperparams", grid_point_to_json(f.chosen)},
                             {"inner_f1", f.inner_f1},
                             {"test_accuracy", f.test_accuracy},
                             {"test_f1", f.test_f1},
                             {"n_train", f.n_train},
                             {"n_test", f.n_test}});
    return json{{"target", r.target},
                {"label_provenance", r.label_provenance},
                {"class_ratio", r.class_ratio},
                {"mean_accuracy", r.mean_accuracy},
                {"mean_f1", r.mean_f1},
                {"folds", folds},
                {"warnings", r.warnings}};
}

inline json eval_run_to_json(const EvalRun& run) {
    return json{{"valence", cv_report_to_json(run.valence)},
                {"arousal", cv_report_to_json(run.arousal)}};
}

}  // namespace afb
