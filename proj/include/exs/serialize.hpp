#pragma once

#include <string>

#include <json.hpp>

#include "exs/explainer.hpp"
#include "exs/ranked_list.hpp"

namespace exs {

using ojson = nlohmann::ordered_json;

inline ojson entries_json(const std::vector<ExplanationEntry>& entries) {
    ojson arr = ojson::array();
    for (const auto& e : entries) {
        arr.push_back({{"term", e.term}, {"weight", e.weight}, {"class", to_wire(e.class_label)}});
    }
    return arr;
}

inline ojson to_json(const Explanation& ex) {
    ojson j;
    j["doc_id"] = ex.doc_id;
    if (ex.compared_to) j["compared_to"] = *ex.compared_to;
    j["query"] = ex.query;
    j["converter"] = to_wire(ex.converter);
    j["fit_r2"] = ex.fit_r2;
    j["seed"] = ex.seed;
    j["entries"] = entries_json(ex.entries);
    return j;
}

inline ojson to_json(const IntentExplanation& ex) {
    ojson j;
    j["query"] = ex.query;
    j["converter"] = to_wire(ex.converter);
    j["seed"] = ex.seed;
    j["docs_aggregated"] = ex.docs_aggregated;
    j["entries"] = entries_json(ex.entries);
    return j;
}

inline ojson error_json(ErrorKind kind, const std::string& message) {
    return {{"error", {{"code", to_string(kind)}, {"message", message}}}};
}

}  // namespace exs
