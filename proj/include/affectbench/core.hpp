// Core data model: signals, trials, datasets, and the error taxonomy.
#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace afb {

// Error taxonomy. parameter_error: bad arguments to an operation.
// validation_error: data violates a model invariant. structural_error:
// missing or malformed files on disk. CLI maps all three to exit code 1;
// usage problems exit 2.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct parameter_error : error {
    using error::error;
};
struct validation_error : error {
    using error::error;
};
struct structural_error : error {
    using error::error;
};

// Uniformly sampled multichannel signal. Rows are channels.
struct SignalTrace {
    std::vector<std::vector<double>> samples;  // channels x time
    double sample_rate_hz = 0.0;
    std::vector<std::string> channel_names;

    std::size_t channels() const { return samples.size(); }
    std::size_t length() const { return samples.empty() ? 0 : samples[0].size(); }
    double duration_s() const {
        return sample_rate_hz > 0 ? static_cast<double>(length()) / sample_rate_hz : 0.0;
    }

    void validate(const std::string& context) const {
        if (sample_rate_hz <= 0)
            throw validation_error(context + ": sample rate must be positive");
        if (samples.size() != channel_names.size())
            throw validation_error(context + ": channel count does not match channel names");
        for (std::size_t c = 0; c < samples.size(); ++c) {
            if (samples[c].size() != length())
                throw validation_error(context + ": ragged channel lengths");
            for (double v : samples[c])
                if (!std::isfinite(v))
                    throw validation_error(context + ": non-finite sample in channel " +
                                           channel_names[c]);
        }
    }
};

// Self-reported affect scores, each on the 1..9 scale.
struct SelfAssessment {
    double valence = 5, arousal = 5, happiness = 5, fear = 5, excitement = 5;

    void validate(const std::string& context) const {
        const std::pair<const char*, double> fields[] = {
            {"valence", valence}, {"arousal", arousal}, {"happiness", happiness},
            {"fear", fear},       {"excitement", excitement}};
        for (auto& [name, v] : fields)
            if (!(v >= 1.0 && v <= 9.0))
                throw validation_error(context + ": score " + name + " outside [1,9]");
    }
};

inline const std::vector<std::string>& eeg_montage() {
    static const std::vector<std::string> names = {"Fp1", "Fp2", "Fz", "Cz",
                                                   "T3",  "T4",  "Pz", "Oz"};
    return names;
}

// One participant watching one clip: four traces plus the assessment.
struct Trial {
    std::string participant_id;
    std::string clip_id;
    SignalTrace eeg, eda, bvp, temp;
    SelfAssessment assessment;
    bool is_common_clip = false;

    void validate() const {
        const std::string ctx = "trial " + participant_id + "/" + clip_id;
        eeg.validate(ctx + " eeg");
        eda.validate(ctx + " eda");
        bvp.validate(ctx + " bvp");
        temp.validate(ctx + " temp");
        if (eeg.channels() != 8)
            throw validation_error(ctx + ": eeg must have exactly 8 channels, got " +
                                   std::to_string(eeg.channels()));
        if (eda.channels() != 1 || bvp.channels() != 1 || temp.channels() != 1)
            throw validation_error(ctx + ": eda/bvp/temp must each have 1 channel");
        assessment.validate(ctx);
    }
};

struct ClipInfo {
    std::string title;
    std::string tags;  // free-form, comma-joined genre strings
};

struct Dataset {
    std::vector<Trial> trials;
    std::map<std::string, ClipInfo> clip_catalog;

    void validate() const {
        std::map<std::pair<std::string, std::string>, int> seen;
        for (const auto& t : trials) {
            t.validate();
            if (++seen[{t.participant_id, t.clip_id}] > 1)
                throw validation_error("duplicate trial " + t.participant_id + "/" + t.clip_id);
        }
    }
};

// Clip ids every participant saw, sorted; these become the CV folds.
inline std::vector<std::string> validate_cv_readiness(const Dataset& ds) {
    std::map<std::string, std::vector<std::string>> by_participant;
    for (const auto& t : ds.trials) by_participant[t.participant_id].push_back(t.clip_id);
    if (by_participant.empty()) throw validation_error("no common clips: dataset is empty");
    std::map<std::string, std::size_t> clip_count;
    for (auto& [pid, clips] : by_participant) {
        std::map<std::string, bool> uniq;
        for (auto& c : clips) uniq[c] = true;
        for (auto& [c, _] : uniq) clip_count[c]++;
    }
    std::vector<std::string> common;
    for (auto& [clip, n] : clip_count)
        if (n == by_participant.size()) common.push_back(clip);
    if (common.empty()) throw validation_error("no common clips");
    return common;  // std::map iteration is already sorted
}

}  // namespace afb
