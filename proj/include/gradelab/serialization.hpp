#pragma once

// JSON forms of model descriptions. Needs vendor/json.hpp (nlohmann) on the
// include path.

#include <json.hpp>

#include "gradelab/interaction.hpp"

namespace gradelab {

inline void to_json(nlohmann::ordered_json& j, const TermRecord& t) {
  j = nlohmann::ordered_json{{"sites", t.sites}, {"coefficient", t.coefficient}, {"term", t.name}};
}

inline void from_json(const nlohmann::ordered_json& j, TermRecord& t) {
  j.at("sites").get_to(t.sites);
  j.at("coefficient").get_to(t.coefficient);
  j.at("term").get_to(t.name);
}

inline void to_json(nlohmann::ordered_json& j, const ModelSpec& m) {
  j = nlohmann::ordered_json{{"lattice_size", m.lattice_size}, {"terms", m.terms}};
}

inline void from_json(const nlohmann::ordered_json& j, ModelSpec& m) {
  j.at("lattice_size").get_to(m.lattice_size);
  m.terms = j.at("terms").get<std::vector<TermRecord>>();
}

inline std::string model_to_json(const ModelSpec& m, int indent = 2) { return nlohmann::ordered_json(m).dump(indent); }

inline ModelSpec model_from_json(const std::string& text) {
  try {
    return nlohmann::ordered_json::parse(text).get<ModelSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("malformed model description: ") + e.what());
  }
}

}  // namespace gradelab
