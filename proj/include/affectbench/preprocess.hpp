// Trial conditioning: duration trimming, common average reference,
// FastICA decomposition and artifact-component removal. Pipeline order
// is trim, notch, CAR, ICA, then the per-feature filters.
#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "affectbench/core.hpp"
#include "affectbench/dsp.hpp"
#include "affectbench/linalg.hpp"
#include "affectbench/rng.hpp"

namespace afb {

inline SignalTrace trim_trace(const SignalTrace& t, double head_s, double tail_s,
                              const std::string& name) {
    const auto head = static_cast<std::size_t>(std::lround(head_s * t.sample_rate_hz));
    const auto tail = static_cast<std::size_t>(std::lround(tail_s * t.sample_rate_hz));
    if (head + tail >= t.length())
        throw parameter_error("trim: trace '" + name + "' too short for requested trim");
    SignalTrace out;
    out.sample_rate_hz = t.sample_rate_hz;
    out.channel_names = t.channel_names;
    for (const auto& ch : t.samples)
        out.samples.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(head),
                                 ch.end() - static_cast<std::ptrdiff_t>(tail));
    return out;
}

// Drops round(head*fs) leading and round(tail*fs) trailing samples from
// every trace. Trimming is duration based because the traces have
// different sample rates.
inline Trial trim_trial(const Trial& t, double head_s, double tail_s) {
    if (head_s < 0 || tail_s < 0) throw parameter_error("trim: negative trim duration");
    Trial out = t;
    out.eeg = trim_trace(t.eeg, head_s, tail_s, "eeg");
    out.eda = trim_trace(t.eda, head_s, tail_s, "eda");
    out.bvp = trim_trace(t.bvp, head_s, tail_s, "bvp");
    out.temp = trim_trace(t.temp, head_s, tail_s, "temp");
    return out;
}

// Subtracts the instantaneous cross-channel mean from every channel.
inline SignalTrace common_average_reference(const SignalTrace& eeg) {
    if (eeg.channels() < 2)
        throw parameter_error("common_average_reference: need at least 2 channels");
    SignalTrace out = eeg;
    const std::size_t n = eeg.length();
    const double k = static_cast<double>(eeg.channels());
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (std::size_t c = 0; c < eeg.channels(); ++c) mean += eeg.samples[c][i];
        mean /= k;
        for (std::size_t c = 0; c < eeg.channels(); ++c) out.samples[c][i] -= mean;
    }
    return out;
}

struct ICADecomposition {
    Matrix unmixing;                  // components x channels, applied to centered input
    Matrix mixing;                    // channels x components, pseudoinverse of unmixing
    Matrix sources;                   // components x time
    std::vector<double> channel_means;
    double sample_rate_hz = 0.0;
    std::vector<std::string> channel_names;
    bool converged = false;
    int iterations = 0;
};

namespace detail {

// W <- (W W^T)^{-1/2} W, the symmetric decorrelation step.
inline Matrix symmetric_decorrelate(const Matrix& w) {
    const auto eig = eigen_symmetric(matmul(w, w.transposed()));
    const std::size_t n = w.rows;
    Matrix inv_sqrt(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (eig.values[i] <= 1e-15)
            throw parameter_error("fast_ica: degenerate unmixing estimate");
        const double s = 1.0 / std::sqrt(eig.values[i]);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                inv_sqrt(r, c) += eig.vectors(r, i) * s * eig.vectors(c, i);
    }
    return matmul(inv_sqrt, w);
}

}  // namespace detail

// FastICA with tanh nonlinearity and symmetric decorrelation. Whitening
// uses the eigen-decomposition of the channel covariance; the stored
// unmixing matrix maps centered channel data straight to sources.
inline ICADecomposition fast_ica(const SignalTrace& eeg, std::size_t n_components,
                                 std::uint64_t seed, int max_iter = 200, double tol = 1e-4) {
    const std::size_t nch = eeg.channels();
    const std::size_t nt = eeg.length();
    if (n_components == 0 || n_components > nch)
        throw parameter_error("fast_ica: n_components must lie in [1, channels]");
    if (nt < 10 * nch) throw parameter_error("fast_ica: too few samples for a stable estimate");

    std::vector<double> means(nch, 0.0);
    Matrix xc(nch, nt);
    for (std::size_t c = 0; c < nch; ++c) {
        double m = 0.0;
        for (double v : eeg.samples[c]) m += v;
        m /= static_cast<double>(nt);
        means[c] = m;
        for (std::size_t i = 0; i < nt; ++i) xc(c, i) = eeg.samples[c][i] - m;
    }

    Matrix cov(nch, nch);
    for (std::size_t a = 0; a < nch; ++a)
        for (std::size_t b = a; b < nch; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < nt; ++i) s += xc(a, i) * xc(b, i);
            cov(a, b) = cov(b, a) = s / static_cast<double>(nt - 1);
        }
    const auto eig = eigen_symmetric(cov);
    // top n_components eigenvalues (eigenvalues come back ascending)
    const double lead = eig.values.back();
    Matrix whiten(n_components, nch);  // K: whitened = K * centered
    for (std::size_t k = 0; k < n_components; ++k) {
        const std::size_t idx = nch - 1 - k;
        if (eig.values[idx] <= 1e-12 * std::max(lead, 1e-300))
            throw parameter_error(
                "fast_ica: rank-deficient covariance, try fewer components");
        const double s = 1.0 / std::sqrt(eig.values[idx]);
        for (std::size_t c = 0; c < nch; ++c) whiten(k, c) = s * eig.vectors(c, idx);
    }
    Matrix xw = matmul(whiten, xc);  // components x time

    Rng rng(seed);
    Matrix w(n_components, n_components);
    for (auto& v : w.data) v = rng.normal();
    w = detail::symmetric_decorrelate(w);

    ICADecomposition out;
    const double inv_nt = 1.0 / static_cast<double>(nt);
    for (int iter = 1; iter <= max_iter; ++iter) {
        // w_new rows: E[g(w x) x] - E[g'(w x)] w,  g = tanh
        Matrix wx = matmul(w, xw);
        Matrix wn(n_components, n_components);
        for (std::size_t r = 0; r < n_components; ++r) {
            double gprime = 0.0;
            for (std::size_t i = 0; i < nt; ++i) {
                const double g = std::tanh(wx(r, i));
                gprime += 1.0 - g * g;
                wx(r, i) = g;
            }
            gprime *= inv_nt;
            for (std::size_t c = 0; c < n_components; ++c) {
                double s = 0.0;
                for (std::size_t i = 0; i < nt; ++i) s += wx(r, i) * xw(c, i);
                wn(r, c) = s * inv_nt - gprime * w(r, c);
            }
        }
        wn = detail::symmetric_decorrelate(wn);
        double delta = 0.0;
        for (std::size_t r = 0; r < n_components; ++r) {
            double d = 0.0;
            for (std::size_t c = 0; c < n_components; ++c) d += wn(r, c) * w(r, c);
            delta = std::max(delta, std::fabs(std::fabs(d) - 1.0));
        }
        w = wn;
        out.iterations = iter;
        if (delta < tol) {
            out.converged = true;
            break;
        }
    }

    out.unmixing = matmul(w, whiten);
    out.mixing = pinv_full_row_rank(out.unmixing);
    out.sources = matmul(out.unmixing, xc);
    out.channel_means = means;
    out.sample_rate_hz = eeg.sample_rate_hz;
    out.channel_names = eeg.channel_names;
    return out;
}

// Ranks components by blink likeness: |correlation| with the frontal
// average plus low-frequency (<4 Hz) power fraction, each rank-normalized
// to [0,1] and averaged. Sorted descending by score.
inline std::vector<std::pair<std::size_t, double>> eog_component_scores(
    const ICADecomposition& d, const SignalTrace& eeg) {
    const std::size_t nc = d.sources.rows;
    const std::size_t nt = d.sources.cols;
    if (nt != eeg.length())
        throw parameter_error("eog_component_scores: decomposition does not match trace");
    std::size_t fp1 = 0, fp2 = 1;
    for (std::size_t c = 0; c < eeg.channels(); ++c) {
        if (eeg.channel_names[c] == "Fp1") fp1 = c;
        if (eeg.channel_names[c] == "Fp2") fp2 = c;
    }
    std::vector<double> frontal(nt);
    for (std::size_t i = 0; i < nt; ++i)
        frontal[i] = 0.5 * (eeg.samples[fp1][i] + eeg.samples[fp2][i]);
    double fmean = 0.0;
    for (double v : frontal) fmean += v;
    fmean /= static_cast<double>(nt);
    double fvar = 0.0;
    for (double v : frontal) fvar += (v - fmean) * (v - fmean);

    std::vector<double> corr(nc, 0.0), lowfrac(nc, 0.0);
    for (std::size_t r = 0; r < nc; ++r) {
        std::vector<double> src(nt);
        for (std::size_t i = 0; i < nt; ++i) src[i] = d.sources(r, i);
        double smean = 0.0;
        for (double v : src) smean += v;
        smean /= static_cast<double>(nt);
        double svar = 0.0, cross = 0.0;
        for (std::size_t i = 0; i < nt; ++i) {
            svar += (src[i] - smean) * (src[i] - smean);
            cross += (src[i] - smean) * (frontal[i] - fmean);
        }
        corr[r] = (svar > 0 && fvar > 0) ? std::fabs(cross / std::sqrt(svar * fvar)) : 0.0;
        std::size_t seg = std::min<std::size_t>(256, nt - (nt % 2));
        if (seg >= 8) {
            const auto spec = welch_psd(src, eeg.sample_rate_hz, seg, 0.5);
            const double total = band_power(spec, 0.0, eeg.sample_rate_hz / 2);
            lowfrac[r] = total > 0 ? band_power(spec, 0.0, 4.0) / total : 0.0;
        }
    }
    // average rank with ties -> same rank value; ranks scaled to [0,1]
    auto rank01 = [nc](const std::vector<double>& v) {
        std::vector<double> rank(nc, 0.0);
        if (nc == 1) {
            rank[0] = 1.0;
            return rank;
        }
        for (std::size_t i = 0; i < nc; ++i) {
            double below = 0.0, equal = -1.0;  // exclude self
            for (std::size_t j = 0; j < nc; ++j) {
                if (v[j] < v[i]) below += 1.0;
                if (v[j] == v[i]) equal += 1.0;
            }
            rank[i] = (below + equal / 2.0) / static_cast<double>(nc - 1);
        }
        return rank;
    };
    const auto rc = rank01(corr);
    const auto rl = rank01(lowfrac);
    std::vector<std::pair<std::size_t, double>> scored;
    for (std::size_t r = 0; r < nc; ++r) scored.push_back({r, 0.5 * (rc[r] + rl[r])});
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return scored;
}

// Maps sources back to channel space with the selected source rows
// zeroed, then restores the channel means.
inline SignalTrace remove_components(const ICADecomposition& d,
                                     const std::set<std::size_t>& indices) {
    for (std::size_t idx : indices)
        if (idx >= d.sources.rows)
            throw parameter_error("remove_components: component index out of range");
    Matrix kept = d.sources;
    for (std::size_t idx : indices)
        for (std::size_t i = 0; i < kept.cols; ++i) kept(idx, i) = 0.0;
    const Matrix recon = matmul(d.mixing, kept);
    SignalTrace out;
    out.sample_rate_hz = d.sample_rate_hz;
    out.channel_names = d.channel_names;
    out.samples.assign(recon.rows, std::vector<double>(recon.cols, 0.0));
    for (std::size_t c = 0; c < recon.rows; ++c)
        for (std::size_t i = 0; i < recon.cols; ++i)
            out.samples[c][i] = recon(c, i) + d.channel_means[c];
    return out;
}

struct IcaRemoval {
    enum class Mode { none, auto_top1, manual };
    Mode mode = Mode::none;
    double auto_threshold = 0.6;  // top component removed only at/above this score
    std::set<std::size_t> manual_indices;
};

// Accepts "none", "auto:1" or "manual:i,j,...".
inline IcaRemoval parse_ica_removal(const std::string& s) {
    IcaRemoval r;
    if (s == "none") return r;
    if (s == "auto:1") {
        r.mode = IcaRemoval::Mode::auto_top1;
        return r;
    }
    if (s.rfind("manual:", 0) == 0) {
        r.mode = IcaRemoval::Mode::manual;
        std::size_t pos = 7;
        while (pos < s.size()) {
            std::size_t next = s.find(',', pos);
            if (next == std::string::npos) next = s.size();
            const std::string tok = s.substr(pos, next - pos);
            try {
                r.manual_indices.insert(static_cast<std::size_t>(std::stoul(tok)));
            } catch (const std::exception&) {
                throw parameter_error("bad ICA component index '" + tok + "'");
            }
            pos = next + 1;
        }
        if (r.manual_indices.empty())
            throw parameter_error("manual ICA removal needs at least one index");
        return r;
    }
    throw parameter_error("bad --ica-remove value '" + s +
                          "' (expected none, auto:1 or manual:i,j,...)");
}

struct PreprocessConfig {
    double trim_head_s = 2.0;
    double trim_tail_s = 2.0;
    bool notch = true;
    double notch_f0_hz = 50.0;
    double notch_q = 30.0;
    bool car = true;
    IcaRemoval ica;
    std::size_t ica_components = 0;  // 0 means all channels
    std::uint64_t ica_seed = 1;
};

namespace detail {

inline std::uint64_t trial_tag(const Trial& t) {
    return fnv1a64(t.participant_id + "/" + t.clip_id);
}

}  // namespace detail

// Full conditioning chain: trim, mains notch on EEG, common average
// reference, then the configured ICA removal. E4 traces are only
// trimmed; their sample rates cannot carry mains interference.
inline Trial preprocess_trial(const Trial& t, const PreprocessConfig& cfg) {
    Trial out = (cfg.trim_head_s != 0.0 || cfg.trim_tail_s != 0.0)
                    ? trim_trial(t, cfg.trim_head_s, cfg.trim_tail_s)
                    : t;
    if (cfg.notch) {
        const auto notch = design_notch(cfg.notch_f0_hz, cfg.notch_q, out.eeg.sample_rate_hz);
        for (auto& ch : out.eeg.samples) ch = filter_apply(notch, ch);
    }
    if (cfg.car) out.eeg = common_average_reference(out.eeg);
    if (cfg.ica.mode != IcaRemoval::Mode::none) {
        // CAR removes one dimension, so the default component count drops by one
        const std::size_t full_rank = out.eeg.channels() - (cfg.car ? 1 : 0);
        const std::size_t nc =
            cfg.ica_components ? std::min(cfg.ica_components, out.eeg.channels()) : full_rank;
        const auto d = fast_ica(out.eeg, nc, derive_seed(cfg.ica_seed, detail::trial_tag(t)));
        std::set<std::size_t> remove;
        if (cfg.ica.mode == IcaRemoval::Mode::manual) {
            remove = cfg.ica.manual_indices;
        } else {
            const auto scores = eog_component_scores(d, out.eeg);
            if (!scores.empty() && scores.front().second >= cfg.ica.auto_threshold)
                remove.insert(scores.front().first);
        }
        if (!remove.empty()) out.eeg = remove_components(d, remove);
    }
    return out;
}

}  // namespace afb
