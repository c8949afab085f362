#include "domcert/io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace domcert::io {

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    fail("BadInput", "matrix must be an array of arrays");
  }
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Matrix M(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols) fail("BadInput", "ragged matrix rows");
    for (int c = 0; c < cols; ++c) {
      const double v = j[i][c].get<double>();
      if (!std::isfinite(v)) fail("BadInput", "non-finite matrix entry");
      M(i, c) = v;
    }
  }
  return M;
}

json subspace_to_json(const matgeo::Subspace& S) {
  return json{{"dim", S.dim()}, {"basis", matrix_to_json(S.basis())}};
}

matgeo::Subspace subspace_from_json(const json& j) {
  Matrix B = matrix_from_json(j.at("basis"));
  if (j.contains("dim") && j.at("dim").get<int>() != B.cols()) {
    fail("BadInput", "subspace dim does not match basis");
  }
  return matgeo::Subspace(B);
}

json presentation_to_json(const group::GroupPresentation& pres) {
  json j;
  switch (pres.family()) {
    case group::Family::Free:
      j["family"] = "free";
      j["params"] = {{"rank", pres.free_rank()}};
      break;
    case group::Family::FreeProduct:
      j["family"] = "free_product";
      j["params"] = {{"m", pres.factor_m()}, {"n", pres.factor_n()}};
      break;
    case group::Family::Surface:
      j["family"] = "surface";
      j["params"] = {{"genus", pres.genus()}};
      break;
    case group::Family::Automaton:
      j["family"] = "automaton";
      j["automaton"] = automaton_to_json(*pres.supplied_automaton(), pres);
      break;
  }
  return j;
}

group::GroupPresentation presentation_from_json(const json& j,
                                                const std::filesystem::path& base_dir) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "free") {
    return group::GroupPresentation::free_group(j.at("params").at("rank").get<int>());
  }
  if (family == "free_product") {
    return group::GroupPresentation::free_product(j.at("params").at("m").get<int>(),
                                                  j.at("params").at("n").get<int>());
  }
  if (family == "surface") {
    return group::GroupPresentation::surface(j.at("params").at("genus").get<int>());
  }
  if (family == "automaton") {
    json aj;
    if (j.contains("automaton")) {
      aj = j.at("automaton");
    } else if (j.contains("automaton_file")) {
      aj = read_json(base_dir / j.at("automaton_file").get<std::string>());
    } else {
      fail("BadInput", "automaton presentation needs automaton or automaton_file");
    }
    // labels: explicit list or derived from the edges
    std::vector<std::string> labels;
    if (aj.contains("labels")) {
      for (const auto& l : aj.at("labels")) labels.push_back(l.get<std::string>());
    } else {
      for (const auto& e : aj.at("edges")) {
        const std::string l = e.at(1).get<std::string>();
        if (std::find(labels.begin(), labels.end(), l) == labels.end()) {
          labels.push_back(l);
        }
      }
    }
    group::GeodesicAutomaton autom;
    for (const auto& v : aj.at("vertices")) autom.vertex_ids.push_back(v.get<int>());
    autom.start = aj.at("start").get<int>();
    autom.certified = aj.value("certified", true);
    for (const auto& e : aj.at("edges")) {
      const std::string l = e.at(1).get<std::string>();
      const int li = static_cast<int>(
          std::find(labels.begin(), labels.end(), l) - labels.begin());
      autom.edges.push_back({e.at(0).get<int>(), li, e.at(2).get<int>()});
    }
    return group::GroupPresentation::from_automaton(std::move(autom), labels);
  }
  fail("BadInput", "unknown family '" + family + "'");
}

json automaton_to_json(const group::GeodesicAutomaton& a,
                       const group::GroupPresentation& pres) {
  json j;
  j["vertices"] = a.vertex_ids;
  j["start"] = a.start;
  j["certified"] = a.certified;
  j["labels"] = pres.names();
  json edges = json::array();
  for (const auto& e : a.edges) {
    edges.push_back(json::array({e.tail, pres.name(e.label), e.head}));
  }
  j["edges"] = std::move(edges);
  return j;
}

group::GeodesicAutomaton automaton_from_json(const json& j,
                                             const group::GroupPresentation& pres) {
  group::GeodesicAutomaton autom;
  for (const auto& v : j.at("vertices")) autom.vertex_ids.push_back(v.get<int>());
  autom.start = j.at("start").get<int>();
  autom.certified = j.value("certified", false);
  for (const auto& e : j.at("edges")) {
    autom.edges.push_back({e.at(0).get<int>(),
                           pres.generator_index(e.at(1).get<std::string>()),
                           e.at(2).get<int>()});
  }
  return autom;
}

json representation_to_json(const reprcheck::Representation& rep) {
  json images;
  const auto& pres = rep.presentation();
  for (int g = 0; g < pres.num_generators(); ++g) {
    images[pres.name(g)] = matrix_to_json(rep.image(g));
  }
  return json{{"presentation", presentation_to_json(pres)},
              {"d", rep.dim()},
              {"images", std::move(images)},
              {"unimodular", rep.unimodular()}};
}

reprcheck::Representation representation_from_json(const json& j,
                                                   const std::filesystem::path& base_dir) {
  auto pres = presentation_from_json(j.at("presentation"), base_dir);
  std::map<std::string, Matrix> images;
  for (const auto& [name, mj] : j.at("images").items()) {
    Matrix M = matrix_from_json(mj);
    if (j.contains("d") && M.rows() != j.at("d").get<int>()) {
      fail("BadInput", "image dimension disagrees with d");
    }
    images.emplace(name, std::move(M));
  }
  return reprcheck::Representation::from_images(std::move(pres), images,
                                                j.value("unimodular", true));
}

json sequence_to_json(const cocycle::MatrixSequence& seq) {
  json matrices = json::array();
  for (const auto& M : seq.items) matrices.push_back(matrix_to_json(M));
  return json{{"index_origin", seq.origin}, {"matrices", std::move(matrices)}};
}

cocycle::MatrixSequence sequence_from_json(const json& j) {
  cocycle::MatrixSequence seq;
  seq.origin = j.value("index_origin", 0);
  for (const auto& mj : j.at("matrices")) seq.items.push_back(matrix_from_json(mj));
  if (seq.items.empty()) fail("BadInput", "empty sequence");
  return seq;
}

json fit_report_to_json(const cocycle::DominationFit& fit,
                        const std::string& pair_table_csv_path) {
  return json{{"p", fit.p},
              {"mu_hat", fit.mu_hat},
              {"c_hat", fit.c_hat},
              {"min_margin", fit.min_margin},
              {"verdict", cocycle::to_string(fit.verdict)},
              {"pair_table_csv_path", pair_table_csv_path}};
}

json cone_family_to_json(const multicone::ConeFamily& fam,
                         const group::GroupPresentation& pres) {
  json vertices;
  int p = 0;
  for (const auto& [v, mc] : fam.assignment) {
    p = mc.index();
    json comps = json::array();
    for (const auto& c : mc.components()) {
      comps.push_back(json{{"form", matrix_to_json(c.form())}});
    }
    vertices[std::to_string(v)] = std::move(comps);
  }
  return json{{"p", p},
              {"classification_radius", fam.classification_radius},
              {"automaton", automaton_to_json(fam.automaton, pres)},
              {"vertices", std::move(vertices)}};
}

multicone::ConeFamily cone_family_from_json(const json& j,
                                            const group::GroupPresentation& pres,
                                            int R_automaton) {
  multicone::ConeFamily fam;
  fam.classification_radius = j.value("classification_radius", R_automaton);
  if (j.contains("automaton")) {
    fam.automaton = automaton_from_json(j.at("automaton"), pres);
  } else {
    fam.automaton =
        group::recurrent_subgraph(group::geodesic_automaton(pres, fam.classification_radius));
  }
  const int p = j.at("p").get<int>();
  for (const auto& [key, comps] : j.at("vertices").items()) {
    std::vector<multicone::QuadraticCone> cones;
    for (const auto& cj : comps) {
      cones.emplace_back(matrix_from_json(cj.at("form")), p);
    }
    fam.assignment.emplace(std::stoi(key), multicone::Multicone(std::move(cones)));
  }
  return fam;
}

reprcheck::BoundaryRay ray_from_json(const json& j,
                                     const group::GroupPresentation& pres) {
  auto tokens = [&](const json& arr) {
    std::vector<std::string> out;
    for (const auto& t : arr) out.push_back(t.get<std::string>());
    return out;
  };
  reprcheck::BoundaryRay ray;
  if (j.contains("u")) ray.u = group::parse_word(pres, tokens(j.at("u")));
  ray.v = group::parse_word(pres, tokens(j.at("v")));
  return ray;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) fail("BadInput", "cannot open " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

void write_json_atomic(const std::filesystem::path& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("BadInput", "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail("BadInput", std::string("malformed JSON: ") + e.what());
  }
  return j;
}

}  // namespace domcert::io
