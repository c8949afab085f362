#pragma once

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <string>

#include "domcert/cocycle.hpp"
#include "domcert/group.hpp"
#include "domcert/morse.hpp"
#include "domcert/multicone.hpp"
#include "domcert/reprcheck.hpp"

// JSON schemas:
//   matrix            row-major array of arrays of finite doubles
//   subspace          {"dim": p, "basis": d x p array}
//   presentation      {"family": "free|free_product|surface|automaton",
//                      "params": {...}, "automaton_file": optional path}
//   automaton         {"vertices": [ids], "start": id,
//                      "edges": [[tail, "label", head]], "labels": [...],
//                      "certified": bool}
//   representation    {"presentation": {...}, "d": d,
//                      "images": {"a": matrix, ...}, "unimodular": bool}
//   sequence          {"index_origin": n0, "matrices": [matrix, ...]}
//   cone family       {"p": p, "classification_radius": R,
//                      "vertices": {"id": [{"form": matrix}, ...]}}
//   ray               {"u": [tokens], "v": [tokens]}
//   orbit             {"matrices": [...]} or
//                     {"representation": {...}, "word": [tokens]}

namespace domcert::io {

using json = nlohmann::json;

json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const json& j);

json subspace_to_json(const matgeo::Subspace& S);
matgeo::Subspace subspace_from_json(const json& j);

json presentation_to_json(const group::GroupPresentation& pres);
group::GroupPresentation presentation_from_json(const json& j,
                                                const std::filesystem::path& base_dir = {});

json automaton_to_json(const group::GeodesicAutomaton& a,
                       const group::GroupPresentation& pres);
group::GeodesicAutomaton automaton_from_json(const json& j,
                                             const group::GroupPresentation& pres);

json representation_to_json(const reprcheck::Representation& rep);
reprcheck::Representation representation_from_json(const json& j,
                                                   const std::filesystem::path& base_dir = {});

json sequence_to_json(const cocycle::MatrixSequence& seq);
cocycle::MatrixSequence sequence_from_json(const json& j);

json fit_report_to_json(const cocycle::DominationFit& fit,
                        const std::string& pair_table_csv_path);

json cone_family_to_json(const multicone::ConeFamily& fam,
                         const group::GroupPresentation& pres);
multicone::ConeFamily cone_family_from_json(const json& j,
                                            const group::GroupPresentation& pres,
                                            int R_automaton = 8);

reprcheck::BoundaryRay ray_from_json(const json& j,
                                     const group::GroupPresentation& pres);

/// Atomic write: write to a temp file then rename into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_json_atomic(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

}  // namespace domcert::io
