// Seeded synthetic dataset generator with a ground-truth manifest. Every
// trial draws a latent affect quadrant; signals carry a plantable,
// class-dependent EEG band-power effect so downstream pipelines can be
// checked against known answers.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "affectbench/core.hpp"
#include "affectbench/dsp.hpp"
#include "affectbench/features.hpp"
#include "affectbench/jsonio.hpp"
#include "affectbench/rng.hpp"

namespace afb {

// Class-dependent EEG amplitude boost: trials whose latent class is high
// on `axis` get the named band's sinusoid scaled by (1 + gain) on the
// chosen channels (empty = whole montage).
struct ClassEffect {
    std::string axis = "valence";  // valence | arousal
    std::string band = "alpha";
    std::vector<std::string> channels;  // empty = all
    double gain = 0.0;                  // 0 = no planted signal
};

struct SynthSpec {
    std::size_t participants = 20;
    std::size_t clips = 8;
    std::size_t common_clips = 5;
    double duration_s = 30.0;
    double noise_sd = 4.0;
    double va_sd = 0.6;  // isotropic blob sd, clamped to the 1..9 scale
    std::array<std::array<double, 2>, 4> va_centers = {
        {{{3.0, 3.0}}, {{3.0, 7.0}}, {{7.0, 3.0}}, {{7.0, 7.0}}}};
    ClassEffect effect;
    std::uint64_t seed = 1;
};

struct SynthTrialTruth {
    std::string participant_id, clip_id;
    std::size_t class_index = 0;  // quadrant: bit1 = high valence, bit0 = high arousal
    bool valence_high = false, arousal_high = false;
    double valence = 0.0, arousal = 0.0;
    double heart_rate = 0.0;
};

struct SynthResult {
    Dataset dataset;
    json manifest;
    std::vector<SynthTrialTruth> truth;
};

namespace detail {

inline double band_center_hz(const std::string& band) {
    if (band == "theta") return 5.0;
    if (band == "alpha") return 10.5;
    if (band == "beta") return 21.5;
    if (band == "gamma") return 38.5;
    throw parameter_error("unknown band '" + band + "'");
}

inline void validate_synth_spec(const SynthSpec& s) {
    if (s.participants == 0 || s.participants > 99)
        throw parameter_error("synth: participants must be in 1..99");
    if (s.clips == 0 || s.clips > 99) throw parameter_error("synth: clips must be in 1..99");
    if (s.common_clips > s.clips)
        throw parameter_error("synth: common_clips must not exceed clips");
    if (s.duration_s < 25.0)
        throw parameter_error("synth: duration must be >= 25 s (temperature features "
                              "need 20 s after the 4 s trim)");
    if (!(s.noise_sd > 0.0)) throw parameter_error("synth: noise_sd must be positive");
    if (!(s.va_sd > 0.0)) throw parameter_error("synth: va_sd must be positive");
    if (s.effect.axis != "valence" && s.effect.axis != "arousal")
        throw parameter_error("synth: effect axis must be valence or arousal");
    band_center_hz(s.effect.band);
    for (const auto& ch : s.effect.channels) {
        const auto& montage = eeg_montage();
        if (std::find(montage.begin(), montage.end(), ch) == montage.end())
            throw parameter_error("synth: unknown effect channel '" + ch + "'");
    }
    if (s.effect.gain < 0.0) throw parameter_error("synth: effect gain must be >= 0");
}

inline double clamp_scale(double v) { return std::clamp(v, 1.0, 9.0); }

// Difference of exponentials (1 s rise, 4 s decay), zero before onset.
inline double scr_bump(double t_since_onset) {
    if (t_since_onset <= 0.0) return 0.0;
    return std::exp(-t_since_onset / 4.0) - std::exp(-t_since_onset / 1.0);
}

}  // namespace detail

inline SynthResult generate_dataset(const SynthSpec& spec) {
    detail::validate_synth_spec(spec);
    const auto& montage = eeg_montage();
    const double fs_eeg = 250.0, fs_eda = 4.0, fs_bvp = 64.0, fs_temp = 4.0;
    const std::array<std::string, 4> band_names = {"theta", "alpha", "beta", "gamma"};
    const std::vector<std::string>& effect_channels =
        spec.effect.channels.empty() ? montage : spec.effect.channels;

    SynthResult result;
    json manifest_trials = json::array();

    for (std::size_t p = 0; p < spec.participants; ++p) {
        char pid[8];
        std::snprintf(pid, sizeof(pid), "P%02zu", p + 1);
        for (std::size_t c = 0; c < spec.clips; ++c) {
            const bool common = c < spec.common_clips;
            std::string cid;
            if (common) {
                char buf[8];
                std::snprintf(buf, sizeof(buf), "C%02zu", c + 1);
                cid = buf;
            } else {
                // participant-private clips get globally unique ids
                cid = "C" + std::to_string(100 + p * 100 + (c - spec.common_clips + 1));
            }
            const std::uint64_t trial_seed =
                derive_seed(spec.seed, fnv1a64(std::string(pid) + "/" + cid));

            SynthTrialTruth truth;
            truth.participant_id = pid;
            truth.clip_id = cid;

            // latent class and self-assessment scores
            Rng rng_va(derive_seed(trial_seed, 100));
            truth.class_index = static_cast<std::size_t>(rng_va.uniform_index(4));
            truth.valence_high = truth.class_index >= 2;
            truth.arousal_high = (truth.class_index & 1) != 0;
            const auto& center = spec.va_centers[truth.class_index];
            truth.valence = detail::clamp_scale(center[0] + spec.va_sd * rng_va.normal());
            truth.arousal = detail::clamp_scale(center[1] + spec.va_sd * rng_va.normal());

            Trial trial;
            trial.participant_id = pid;
            trial.clip_id = cid;
            trial.is_common_clip = common;
            trial.assessment.valence = truth.valence;
            trial.assessment.arousal = truth.arousal;
            trial.assessment.happiness =
                detail::clamp_scale(truth.valence + 0.5 * rng_va.normal());
            trial.assessment.fear =
                detail::clamp_scale(10.0 - truth.valence + 0.5 * rng_va.normal());
            trial.assessment.excitement =
                detail::clamp_scale(truth.arousal + 0.5 * rng_va.normal());

            const bool boosted = spec.effect.axis == "valence" ? truth.valence_high
                                                               : truth.arousal_high;

            // EEG: white noise + one sinusoid per band + mains interference
            {
                Rng rng(derive_seed(trial_seed, 101));
                const std::size_t n = static_cast<std::size_t>(spec.duration_s * fs_eeg);
                trial.eeg.sample_rate_hz = fs_eeg;
                trial.eeg.channel_names = montage;
                trial.eeg.samples.assign(montage.size(), std::vector<double>(n));
                for (std::size_t ch = 0; ch < montage.size(); ++ch) {
                    std::array<double, 4> amp, phase;
                    for (std::size_t b = 0; b < 4; ++b) {
                        amp[b] = 3.0;
                        phase[b] = rng.uniform(0.0, 2.0 * kPi);
                        const bool on_channel =
                            std::find(effect_channels.begin(), effect_channels.end(),
                                      montage[ch]) != effect_channels.end();
                        if (boosted && on_channel && band_names[b] == spec.effect.band)
                            amp[b] *= 1.0 + spec.effect.gain;
                    }
                    const double mains_amp = 10.0 * spec.noise_sd * rng.uniform(0.8, 1.2);
                    const double mains_phase = rng.uniform(0.0, 2.0 * kPi);
                    auto& x = trial.eeg.samples[ch];
                    for (std::size_t i = 0; i < n; ++i) {
                        const double t = static_cast<double>(i) / fs_eeg;
                        double v = spec.noise_sd * rng.normal();
                        for (std::size_t b = 0; b < 4; ++b)
                            v += amp[b] * std::sin(2.0 * kPi *
                                                       detail::band_center_hz(band_names[b]) *
                                                       t +
                                                   phase[b]);
                        v += mains_amp * std::sin(2.0 * kPi * 50.0 * t + mains_phase);
                        x[i] = v;
                    }
                }
            }

            // EDA: tonic drift + a few skin-conductance responses
            {
                Rng rng(derive_seed(trial_seed, 102));
                const std::size_t n = static_cast<std::size_t>(spec.duration_s * fs_eda);
                trial.eda.sample_rate_hz = fs_eda;
                trial.eda.channel_names = {"value"};
                trial.eda.samples.assign(1, std::vector<double>(n));
                const double tonic = rng.uniform(1.5, 3.0);
                const double drift_phase = rng.uniform(0.0, 2.0 * kPi);
                const std::size_t n_scr = 2 + rng.uniform_index(3);
                std::vector<double> onset(n_scr), scr_amp(n_scr);
                for (std::size_t k = 0; k < n_scr; ++k) {
                    onset[k] = rng.uniform(2.0, std::max(3.0, spec.duration_s - 8.0));
                    scr_amp[k] = rng.uniform(0.3, 0.8);
                }
                auto& x = trial.eda.samples[0];
                for (std::size_t i = 0; i < n; ++i) {
                    const double t = static_cast<double>(i) / fs_eda;
                    double v = tonic + 0.25 * std::sin(2.0 * kPi * 0.015 * t + drift_phase) +
                               0.01 * rng.normal();
                    for (std::size_t k = 0; k < n_scr; ++k)
                        v += scr_amp[k] * detail::scr_bump(t - onset[k]);
                    x[i] = v;
                }
            }

            // BVP: class-modulated pulse train with mild rate variability
            {
                Rng rng(derive_seed(trial_seed, 103));
                const std::size_t n = static_cast<std::size_t>(spec.duration_s * fs_bvp);
                trial.bvp.sample_rate_hz = fs_bvp;
                trial.bvp.channel_names = {"value"};
                trial.bvp.samples.assign(1, std::vector<double>(n));
                truth.heart_rate =
                    64.0 + (truth.arousal_high ? 12.0 : 0.0) + 2.0 * rng.uniform();
                std::vector<double> beats;
                double t_beat = rng.uniform(0.0, 0.5);
                while (t_beat < spec.duration_s) {
                    beats.push_back(t_beat);
                    const double ibi = 60.0 / truth.heart_rate *
                                       (1.0 + 0.04 * std::sin(2.0 * kPi * 0.1 * t_beat));
                    t_beat += ibi;
                }
                auto& x = trial.bvp.samples[0];
                for (std::size_t i = 0; i < n; ++i) x[i] = 0.01 * rng.normal();
                // wide bumps keep the waveform elevated most of the beat cycle, so a
                // rolling median+MAD threshold sits well above the noise floor
                const double sigma = 0.09;
                for (double b : beats) {
                    const auto lo = static_cast<std::ptrdiff_t>((b - 4.0 * sigma) * fs_bvp);
                    const auto hi = static_cast<std::ptrdiff_t>((b + 4.0 * sigma) * fs_bvp);
                    for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, lo);
                         i <= hi && i < static_cast<std::ptrdiff_t>(n); ++i) {
                        const double dt = static_cast<double>(i) / fs_bvp - b;
                        x[static_cast<std::size_t>(i)] +=
                            std::exp(-dt * dt / (2.0 * sigma * sigma));
                    }
                }
            }

            // Temp: slow ramp with a gentle oscillation
            {
                Rng rng(derive_seed(trial_seed, 104));
                const std::size_t n = static_cast<std::size_t>(spec.duration_s * fs_temp);
                trial.temp.sample_rate_hz = fs_temp;
                trial.temp.channel_names = {"value"};
                trial.temp.samples.assign(1, std::vector<double>(n));
                const double base = rng.uniform(32.5, 34.0);
                const double slope = rng.uniform(0.001, 0.004);
                const double phase = rng.uniform(0.0, 2.0 * kPi);
                auto& x = trial.temp.samples[0];
                for (std::size_t i = 0; i < n; ++i) {
                    const double t = static_cast<double>(i) / fs_temp;
                    x[i] = base + slope * t + 0.05 * std::sin(2.0 * kPi * t / 120.0 + phase) +
                           0.005 * rng.normal();
                }
            }

            manifest_trials.push_back(json{{"participant", truth.participant_id},
                                           {"clip", truth.clip_id},
                                           {"class_index", truth.class_index},
                                           {"valence_high", truth.valence_high},
                                           {"arousal_high", truth.arousal_high},
                                           {"valence", truth.valence},
                                           {"arousal", truth.arousal},
                                           {"heart_rate", truth.heart_rate},
                                           {"common", common}});
            result.truth.push_back(std::move(truth));
            result.dataset.trials.push_back(std::move(trial));
        }
    }

    json centers = json::array();
    for (const auto& c : spec.va_centers) centers.push_back(json::array({c[0], c[1]}));
    result.manifest = json{
        {"schema", "synth-manifest/1"},
        {"spec",
         json{{"participants", spec.participants},
              {"clips", spec.clips},
              {"common_clips", spec.common_clips},
              {"duration_s", spec.duration_s},
              {"noise_sd", spec.noise_sd},
              {"va_sd", spec.va_sd},
              {"va_centers", centers},
              {"seed", spec.seed},
              {"effect",
               json{{"axis", spec.effect.axis},
                    {"band", spec.effect.band},
                    {"channels", spec.effect.channels},
                    {"gain", spec.effect.gain}}}}},
        {"trials", manifest_trials}};
    return result;
}

}  // namespace afb
