// JSON file helpers. nlohmann::json keeps object keys sorted, which makes
// every emitted document canonical and reruns byte-identical.
#pragma once

#include <json.hpp>

#include "affectbench/csv.hpp"
#include "affectbench/core.hpp"

namespace afb {

using json = nlohmann::json;

inline json read_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw structural_error("malformed JSON: " + path);
    return j;
}

inline void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace afb
