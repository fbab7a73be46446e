// Shared test utilities: synthetic trial construction, scratch
// directories, directory-tree fingerprinting.
#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "affectbench/core.hpp"
#include "affectbench/rng.hpp"

namespace testutil {

namespace fs = std::filesystem;

class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = fs::temp_directory_path() / ("afb_" + tag + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    std::string str() const { return path_.string(); }
    fs::path path() const { return path_; }

  private:
    fs::path path_;
};

inline afb::SignalTrace make_trace(afb::Rng& rng, const std::vector<std::string>& names,
                                   double fs_hz, double duration_s) {
    afb::SignalTrace t;
    t.sample_rate_hz = fs_hz;
    t.channel_names = names;
    const auto n = static_cast<std::size_t>(duration_s * fs_hz);
    for (std::size_t c = 0; c < names.size(); ++c) t.samples.push_back(rng.normals(n));
    return t;
}

inline afb::Trial make_trial(afb::Rng& rng, const std::string& pid, const std::string& cid,
                             bool common = true, double duration_s = 12.0) {
    afb::Trial t;
    t.participant_id = pid;
    t.clip_id = cid;
    t.eeg = make_trace(rng, afb::eeg_montage(), 250.0, duration_s);
    t.eda = make_trace(rng, {"value"}, 4.0, duration_s);
    t.bvp = make_trace(rng, {"value"}, 64.0, duration_s);
    t.temp = make_trace(rng, {"value"}, 4.0, duration_s);
    t.assessment.valence = rng.uniform(1.0, 9.0);
    t.assessment.arousal = rng.uniform(1.0, 9.0);
    t.assessment.happiness = rng.uniform(1.0, 9.0);
    t.assessment.fear = rng.uniform(1.0, 9.0);
    t.assessment.excitement = rng.uniform(1.0, 9.0);
    t.is_common_clip = common;
    return t;
}

// Concatenated (path, bytes) fingerprint of a directory tree.
inline std::string tree_bytes(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string out;
    for (const auto& f : files) {
        out += fs::relative(f, root).generic_string();
        out += '\0';
        std::ifstream in(f, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        out += ss.str();
        out += '\0';
    }
    return out;
}

}  // namespace testutil
