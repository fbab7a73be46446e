// Feature families: EEG band powers, electrodermal activity statistics,
// pulse-derived cardiac features, skin temperature summaries, and the
// fused fixed-layout feature vector.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "affectbench/core.hpp"
#include "affectbench/dsp.hpp"
#include "affectbench/parallel.hpp"
#include "affectbench/preprocess.hpp"

namespace afb {

struct FeatureSlot {
    std::string name;
    std::string family;  // eeg | eda | bvp | temp
    std::string tag;     // definition tag, also carries quality flags
};

struct FeatureVector {
    std::vector<double> values;
    std::vector<FeatureSlot> layout;

    void append(const FeatureVector& other) {
        values.insert(values.end(), other.values.begin(), other.values.end());
        layout.insert(layout.end(), other.layout.begin(), other.layout.end());
    }
};

struct Band {
    std::string name;
    double lo_hz, hi_hz;
};

inline const std::vector<Band>& eeg_bands() {
    static const std::vector<Band> bands = {
        {"theta", 3.0, 7.0}, {"alpha", 8.0, 13.0}, {"beta", 14.0, 29.0}, {"gamma", 30.0, 47.0}};
    return bands;
}

namespace detail {

inline std::size_t even_floor(std::size_t n) { return n - (n % 2); }

inline Spectrum trace_psd(const std::vector<double>& x, double fs, std::size_t max_seg) {
    const std::size_t seg = std::min(max_seg, even_floor(x.size()));
    return welch_psd(x, fs, seg, 0.5, "hann");
}

// Band integral clipped at Nyquist; bands entirely above Nyquist are 0.
inline double clipped_band_power(const Spectrum& s, double lo, double hi) {
    const double nyq = s.freqs_hz.back();
    if (lo >= nyq) return 0.0;
    return band_power(s, lo, std::min(hi, nyq));
}

inline double vec_mean(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    return v.empty() ? 0.0 : m / static_cast<double>(v.size());
}

inline double vec_sd(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double m = vec_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace detail

// One Welch band power per (channel, band), channel-major order.
inline FeatureVector eeg_band_features(const SignalTrace& eeg,
                                       const std::vector<std::string>& channels,
                                       const std::vector<Band>& bands,
                                       bool log_power = false,
                                       std::size_t seg_len = 256) {
    FeatureVector out;
    for (const auto& ch : channels) {
        std::size_t idx = eeg.channels();
        for (std::size_t c = 0; c < eeg.channels(); ++c)
            if (eeg.channel_names[c] == ch) idx = c;
        if (idx == eeg.channels())
            throw parameter_error("eeg_band_features: unknown channel '" + ch + "'");
        const auto spec = detail::trace_psd(eeg.samples[idx], eeg.sample_rate_hz, seg_len);
        for (const auto& b : bands) {
            const double p = detail::clipped_band_power(spec, b.lo_hz, b.hi_hz);
            out.values.push_back(log_power ? std::log10(std::max(p, 1e-300)) : p);
            out.layout.push_back({"eeg_" + ch + "_" + b.name, "eeg",
                                  "ch=" + ch + ";band=" + b.name});
        }
    }
    return out;
}

// Electrodermal features in enumeration order: mean level, derivative
// statistics, trough count, mean rising time, n equal-width band powers
// over [0, 2.4] Hz, and zero-crossing rates of the 0.2 Hz and 0.08 Hz
// slow responses. n_bands is 14 (literal) or 13 (compat).
inline FeatureVector eda_features(const SignalTrace& eda, int n_bands = 14,
                                  std::size_t seg_len = 128) {
    if (eda.channels() != 1) throw parameter_error("eda_features: expected 1 channel");
    if (eda.duration_s() < 8.0)
        throw parameter_error("eda_features: trace too short for the lowest band (need 8 s)");
    if (n_bands < 1) throw parameter_error("eda_features: n_bands must be positive");
    const auto& x = eda.samples[0];
    const double fs = eda.sample_rate_hz;
    const std::size_t n = x.size();
    FeatureVector out;
    auto push = [&out](const std::string& name, double v, const std::string& tag) {
        out.values.push_back(v);
        out.layout.push_back({"eda_" + name, "eda", tag});
    };

    push("mean", detail::vec_mean(x), "mean level");

    std::vector<double> deriv(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) deriv[i] = (x[i + 1] - x[i]) * fs;
    push("deriv_mean", detail::vec_mean(deriv), "mean first derivative");
    double neg_sum = 0.0;
    std::size_t neg_count = 0;
    for (double d : deriv)
        if (d < 0.0) {
            neg_sum += d;
            ++neg_count;
        }
    push("deriv_neg_mean", neg_count ? neg_sum / static_cast<double>(neg_count) : 0.0,
         "mean of negative derivative values");
    push("deriv_neg_frac", static_cast<double>(neg_count) / static_cast<double>(n - 1),
         "fraction of negative derivative samples");

    std::vector<std::size_t> minima, maxima;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (x[i] < x[i - 1] && x[i] < x[i + 1]) minima.push_back(i);
        if (x[i] > x[i - 1] && x[i] > x[i + 1]) maxima.push_back(i);
    }
    push("n_minima", static_cast<double>(minima.size()), "count of local minima");
    double rise_sum = 0.0;
    std::size_t rise_count = 0;
    for (std::size_t m : minima) {
        const auto it = std::upper_bound(maxima.begin(), maxima.end(), m);
        if (it != maxima.end()) {
            rise_sum += static_cast<double>(*it - m) / fs;
            ++rise_count;
        }
    }
    push("rise_time_mean", rise_count ? rise_sum / static_cast<double>(rise_count) : 0.0,
         "mean local-minimum-to-next-maximum time, s");

    const auto spec = detail::trace_psd(x, fs, seg_len);
    const double width = 2.4 / static_cast<double>(n_bands);
    for (int b = 0; b < n_bands; ++b) {
        char name[32];
        std::snprintf(name, sizeof(name), "bp_%02d", b);
        const double lo = width * b, hi = width * (b + 1);
        char tag[64];
        std::snprintf(tag, sizeof(tag), "band power %.4f-%.4f Hz", lo, hi);
        push(name, detail::clipped_band_power(spec, lo, hi), tag);
    }

    for (const auto& [suffix, cutoff] :
         std::vector<std::pair<std::string, double>>{{"slow", 0.2}, {"vslow", 0.08}}) {
        const auto lp = design_lowpass(cutoff, 4, fs);
        const auto filtered = filter_apply_steady(lp, x);
        // numerically flat output has no crossings, whatever rounding left behind
        const auto [mn, mx] = std::minmax_element(filtered.begin(), filtered.end());
        const bool flat = *mx - *mn <= 1e-9 * (std::fabs(*mx) + std::fabs(*mn) + 1.0);
        push("zcr_" + suffix, flat ? 0.0 : zero_crossing_rate(filtered, fs),
             "zero crossings of the " + std::to_string(cutoff) + " Hz lowpassed signal");
    }
    return out;
}

struct IBISeries {
    std::vector<double> peak_times_s;
    std::vector<double> ibis_s;
    bool valid = false;
};

// Adaptive pulse detection: local maxima above rolling median + k*MAD,
// 0.3 s refractory resolved greedily by amplitude, parabolic sub-sample
// peak interpolation. Fewer than 4 peaks marks the series invalid.
inline IBISeries detect_pulses(const SignalTrace& bvp, double k_mad = 3.0,
                               double window_s = 2.0) {
    if (bvp.channels() != 1) throw parameter_error("detect_pulses: expected 1 channel");
    if (bvp.duration_s() < 10.0)
        throw parameter_error("detect_pulses: trace shorter than 10 s");
    const auto& x = bvp.samples[0];
    const double fs = bvp.sample_rate_hz;
    const std::size_t n = x.size();
    const std::size_t half = static_cast<std::size_t>(std::lround(window_s * fs / 2.0));

    auto local_median = [](std::vector<double>& buf) {
        std::sort(buf.begin(), buf.end());
        const std::size_t m = buf.size();
        return m % 2 ? buf[m / 2] : 0.5 * (buf[m / 2 - 1] + buf[m / 2]);
    };

    std::vector<std::size_t> candidates;
    std::vector<double> buf;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(x[i] > x[i - 1] && x[i] > x[i + 1])) continue;
        const std::size_t lo = i > half ? i - half : 0;
        const std::size_t hi = std::min(n, i + half + 1);
        buf.assign(x.begin() + static_cast<std::ptrdiff_t>(lo),
                   x.begin() + static_cast<std::ptrdiff_t>(hi));
        const double med = local_median(buf);
        for (auto& v : buf) v = std::fabs(v - med);
        const double mad = local_median(buf);
        if (x[i] > med + k_mad * mad) candidates.push_back(i);
    }

    std::sort(candidates.begin(), candidates.end(), [&x](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] > x[b];
        return a < b;
    });
    const double refractory = 0.3 * fs;
    std::vector<std::size_t> accepted;
    for (std::size_t c : candidates) {
        bool blocked = false;
        for (std::size_t a : accepted)
            if (std::fabs(static_cast<double>(c) - static_cast<double>(a)) < refractory)
                blocked = true;
        if (!blocked) accepted.push_back(c);
    }
    std::sort(accepted.begin(), accepted.end());

    IBISeries out;
    for (std::size_t i : accepted) {
        double delta = 0.0;
        const double denom = x[i - 1] - 2.0 * x[i] + x[i + 1];
        if (denom != 0.0) delta = std::clamp(0.5 * (x[i - 1] - x[i + 1]) / denom, -0.5, 0.5);
        out.peak_times_s.push_back((static_cast<double>(i) + delta) / fs);
    }
    for (std::size_t i = 0; i + 1 < out.peak_times_s.size(); ++i)
        out.ibis_s.push_back(out.peak_times_s[i + 1] - out.peak_times_s[i]);
    out.valid = out.peak_times_s.size() >= 4;
    for (double d : out.ibis_s)
        if (d <= 0.0) out.valid = false;
    return out;
}

// 13 cardiac features: mean/sd of HR, HRV and IBI, the LF/HF energy
// ratio, three fixed band powers and LF/MF/HF powers, all spectral values
// from the 4 Hz interpolated tachogram. An invalid pulse series yields
// zeros plus a quality tag instead of aborting the trial.
inline FeatureVector bvp_features(const SignalTrace& bvp, std::size_t seg_len = 128) {
    const IBISeries series = detect_pulses(bvp);
    FeatureVector out;
    const std::string quality = series.valid ? "" : ";quality=invalid";
    auto push = [&out, &quality](const std::string& name, double v, const std::string& tag) {
        out.values.push_back(v);
        out.layout.push_back({"bvp_" + name, "bvp", tag + quality});
    };
    if (!series.valid) {
        for (const char* name : {"hr_mean", "hr_sd", "hrv_mean", "hrv_sd", "ibi_mean", "ibi_sd",
                                 "lf_hf_ratio", "bp_010_020", "bp_020_030", "bp_030_040", "lf",
                                 "mf", "hf"})
            push(name, 0.0, "pulse series invalid");
        return out;
    }

    std::vector<double> hr;
    for (double ibi : series.ibis_s) hr.push_back(60.0 / ibi);
    std::vector<double> hrv;
    for (std::size_t i = 0; i + 1 < series.ibis_s.size(); ++i)
        hrv.push_back(series.ibis_s[i + 1] - series.ibis_s[i]);
    push("hr_mean", detail::vec_mean(hr), "mean 60/IBI, bpm");
    push("hr_sd", detail::vec_sd(hr), "sd of 60/IBI, bpm");
    push("hrv_mean", detail::vec_mean(hrv), "mean successive IBI difference, s");
    push("hrv_sd", detail::vec_sd(hrv), "sd of successive IBI differences, s");
    push("ibi_mean", detail::vec_mean(series.ibis_s), "mean inter-beat interval, s");
    push("ibi_sd", detail::vec_sd(series.ibis_s), "sd of inter-beat intervals, s");

    // tachogram: IBI as a function of the closing peak time, resampled
    const double tach_fs = 4.0;
    const double t0 = series.peak_times_s[1];
    const double t1 = series.peak_times_s.back();
    const auto m = static_cast<std::size_t>(std::floor((t1 - t0) * tach_fs)) + 1;
    bool spectral_ok = m >= 8;
    Spectrum spec;
    if (spectral_ok) {
        std::vector<double> tach(m);
        std::size_t seg = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const double t = t0 + static_cast<double>(i) / tach_fs;
            while (seg + 2 < series.peak_times_s.size() && series.peak_times_s[seg + 2] < t)
                ++seg;
            const double ta = series.peak_times_s[seg + 1];
            const double tb = series.peak_times_s[std::min(seg + 2,
                                                           series.peak_times_s.size() - 1)];
            if (tb > ta) {
                const double u = std::clamp((t - ta) / (tb - ta), 0.0, 1.0);
                tach[i] = series.ibis_s[seg] +
                          u * (series.ibis_s[std::min(seg + 1, series.ibis_s.size() - 1)] -
                               series.ibis_s[seg]);
            } else {
                tach[i] = series.ibis_s[seg];
            }
        }
        spec = detail::trace_psd(tach, tach_fs, seg_len);
    }
    auto bp = [&](double lo, double hi) {
        return spectral_ok ? detail::clipped_band_power(spec, lo, hi) : 0.0;
    };
    const double lf_energy = bp(0.04, 0.15);
    const double hf_energy = bp(0.15, 0.5);
    push("lf_hf_ratio", hf_energy > 0.0 ? lf_energy / hf_energy : 0.0,
         "tachogram energy ratio 0.04-0.15 over 0.15-0.5 Hz");
    push("bp_010_020", bp(0.10, 0.20), "tachogram band power 0.1-0.2 Hz");
    push("bp_020_030", bp(0.20, 0.30), "tachogram band power 0.2-0.3 Hz");
    push("bp_030_040", bp(0.30, 0.40), "tachogram band power 0.3-0.4 Hz");
    push("lf", bp(0.01, 0.08), "tachogram low frequency 0.01-0.08 Hz");
    push("mf", bp(0.08, 0.15), "tachogram medium frequency 0.08-0.15 Hz");
    push("hf", bp(0.15, 0.50), "tachogram high frequency 0.15-0.5 Hz");
    return out;
}

// Temperature block: mean, mean derivative, band powers 0-0.1 Hz and
// 0.1-0.2 Hz.
inline FeatureVector temp_features(const SignalTrace& temp, std::size_t seg_len = 128) {
    if (temp.channels() != 1) throw parameter_error("temp_features: expected 1 channel");
    if (temp.duration_s() < 20.0)
        throw parameter_error("temp_features: trace shorter than 20 s");
    const auto& x = temp.samples[0];
    const double fs = temp.sample_rate_hz;
    FeatureVector out;
    auto push = [&out](const std::string& name, double v, const std::string& tag) {
        out.values.push_back(v);
        out.layout.push_back({"temp_" + name, "temp", tag});
    };
    push("mean", detail::vec_mean(x), "mean level");
    std::vector<double> deriv(x.size() - 1);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) deriv[i] = (x[i + 1] - x[i]) * fs;
    push("deriv_mean", detail::vec_mean(deriv), "mean first derivative");
    const auto spec = detail::trace_psd(x, fs, seg_len);
    push("bp_000_010", detail::clipped_band_power(spec, 0.0, 0.1), "band power 0-0.1 Hz");
    push("bp_010_020", detail::clipped_band_power(spec, 0.1, 0.2), "band power 0.1-0.2 Hz");
    return out;
}

enum class Modality { eeg, e4, fusion };

inline Modality parse_modality(const std::string& s) {
    if (s == "eeg") return Modality::eeg;
    if (s == "e4") return Modality::e4;
    if (s == "fusion") return Modality::fusion;
    throw parameter_error("unknown modality '" + s + "' (expected eeg, e4 or fusion)");
}

struct FeatureOptions {
    int eda_bands = 14;      // 14 literal, 13 reproduces the published total
    bool log_eeg = false;
    std::size_t eeg_seg_len = 256;  // Welch segment for EEG traces
    std::size_t low_seg_len = 128;  // Welch segment for low-rate traces
};

// Fused feature vector. channels/bands restrict the EEG block and are
// rejected for the e4 modality, where no EEG features exist.
inline FeatureVector assemble_features(const Trial& t, Modality modality,
                                       const std::vector<std::string>& channels,
                                       const std::vector<Band>& bands,
                                       const FeatureOptions& opts = {}) {
    const bool eeg_subset =
        channels != eeg_montage() || bands.size() != eeg_bands().size();
    if (modality == Modality::e4 && eeg_subset)
        throw parameter_error(
            "assemble_features: channel/band subsets do not apply to the e4 modality");
    FeatureVector out;
    if (modality == Modality::eeg || modality == Modality::fusion)
        out.append(eeg_band_features(t.eeg, channels, bands, opts.log_eeg, opts.eeg_seg_len));
    if (modality == Modality::e4 || modality == Modality::fusion) {
        out.append(eda_features(t.eda, opts.eda_bands, opts.low_seg_len));
        out.append(bvp_features(t.bvp, opts.low_seg_len));
        out.append(temp_features(t.temp, opts.low_seg_len));
    }
    for (double v : out.values)
        if (!std::isfinite(v)) throw validation_error("assemble_features: non-finite feature");
    return out;
}

struct FeatureTable {
    std::vector<std::string> participants;  // one entry per row
    std::vector<std::string> clips;
    std::vector<char> is_common;
    std::vector<std::string> row_tags;  // per-row quality notes, usually empty
    std::vector<FeatureSlot> layout;
    Matrix values;  // rows x layout.size()

    std::size_t n_rows() const { return participants.size(); }
};

// Preprocesses every trial and assembles its feature vector. Row order
// follows ds.trials; rows are independent tasks.
inline FeatureTable extract_feature_table(const Dataset& ds, Modality modality,
                                          const std::vector<std::string>& channels,
                                          const std::vector<Band>& bands,
                                          const PreprocessConfig& pre = {},
                                          const FeatureOptions& opts = {},
                                          std::size_t jobs = 1) {
    if (ds.trials.empty()) throw validation_error("extract_feature_table: empty dataset");
    const std::size_t n = ds.trials.size();
    std::vector<FeatureVector> rows(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        const Trial t = preprocess_trial(ds.trials[i], pre);
        rows[i] = assemble_features(t, modality, channels, bands, opts);
    });

    FeatureTable table;
    table.layout = rows[0].layout;
    for (auto& slot : table.layout) {
        const auto pos = slot.tag.find(";quality=");
        if (pos != std::string::npos) slot.tag.resize(pos);  // quality is per row
    }
    table.values = Matrix(n, table.layout.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].layout.size() != table.layout.size())
            throw validation_error("extract_feature_table: inconsistent feature layout");
        std::string tag;
        for (std::size_t j = 0; j < table.layout.size(); ++j) {
            if (rows[i].layout[j].name != table.layout[j].name)
                throw validation_error("extract_feature_table: inconsistent feature layout");
            if (rows[i].layout[j].tag.find(";quality=invalid") != std::string::npos)
                tag = "bvp:quality=invalid";
            table.values(i, j) = rows[i].values[j];
        }
        table.participants.push_back(ds.trials[i].participant_id);
        table.clips.push_back(ds.trials[i].clip_id);
        table.is_common.push_back(ds.trials[i].is_common_clip ? 1 : 0);
        table.row_tags.push_back(tag);
    }
    return table;
}

inline FeatureTable select_columns(const FeatureTable& t, const std::vector<std::size_t>& cols) {
    for (std::size_t c : cols)
        if (c >= t.layout.size()) throw parameter_error("select_columns: index out of range");
    FeatureTable out;
    out.participants = t.participants;
    out.clips = t.clips;
    out.is_common = t.is_common;
    out.row_tags = t.row_tags;
    for (std::size_t c : cols) out.layout.push_back(t.layout[c]);
    out.values = Matrix(t.n_rows(), cols.size());
    for (std::size_t i = 0; i < t.n_rows(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out.values(i, j) = t.values(i, cols[j]);
    return out;
}

// Column indices of the EEG band-power slots for a channel/band subset,
// in channel-major subset order.
inline std::vector<std::size_t> eeg_column_indices(const FeatureTable& t,
                                                   const std::vector<std::string>& channels,
                                                   const std::vector<std::string>& band_names) {
    std::vector<std::size_t> out;
    for (const auto& ch : channels)
        for (const auto& b : band_names) {
            const std::string tag = "ch=" + ch + ";band=" + b;
            bool found = false;
            for (std::size_t j = 0; j < t.layout.size(); ++j)
                if (t.layout[j].family == "eeg" && t.layout[j].tag == tag) {
                    out.push_back(j);
                    found = true;
                    break;
                }
            if (!found)
                throw parameter_error("feature table has no EEG column for " + tag);
        }
    return out;
}

}  // namespace afb
