#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "domcert/io.hpp"
#include "support.hpp"

using namespace domcert;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Matrix rot(double t) { return testsupport::rotation2(t); }

json modular_rep_json(double lambda) {
  Matrix D = Matrix::Zero(2, 2);
  D.diagonal() << lambda, 1.0 / lambda;
  Matrix A = D.inverse() * rot(M_PI / 3) * D;
  json j;
  j["presentation"] = {{"family", "free_product"}, {"params", {{"m", 3}, {"n", 2}}}};
  j["d"] = 2;
  j["images"] = {{"a", io::matrix_to_json(A)}, {"b", io::matrix_to_json(rot(M_PI / 2))}};
  j["unimodular"] = true;
  return j;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("domcert_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DOMCERT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("matrix and subspace round trips") {
  std::mt19937_64 rng(1);
  Matrix M = testsupport::random_matrix(rng, 3, 3);
  CHECK((io::matrix_from_json(io::matrix_to_json(M)) - M).norm() == 0.0);

  auto S = testsupport::random_subspace(rng, 4, 2);
  auto S2 = io::subspace_from_json(io::subspace_to_json(S));
  CHECK(matgeo::grassmann_distance(S, S2) < 1e-14);

  json bad = json::array({json::array({1.0, 2.0}), json::array({3.0})});
  CHECK_THROWS_AS(io::matrix_from_json(bad), Error);
  json inf_entry =
      json::array({json::array({1.0, std::numeric_limits<double>::infinity()}),
                   json::array({0.0, 1.0})});
  CHECK_THROWS_AS(io::matrix_from_json(inf_entry), Error);
}

TEST_CASE("presentation and automaton round trips") {
  for (auto pres : {group::GroupPresentation::free_group(2),
                    group::GroupPresentation::free_product(3, 2),
                    group::GroupPresentation::surface(2)}) {
    auto j = io::presentation_to_json(pres);
    auto back = io::presentation_from_json(j);
    CHECK(back.family() == pres.family());
    CHECK(back.num_generators() == pres.num_generators());
  }
  auto pres = group::GroupPresentation::free_product(3, 2);
  auto autom = group::geodesic_automaton(pres, 8);
  auto j = io::automaton_to_json(autom, pres);
  auto back = io::automaton_from_json(j, pres);
  CHECK(back.vertex_ids == autom.vertex_ids);
  CHECK(back.edges.size() == autom.edges.size());
  CHECK(back.count_walks(6) == autom.count_walks(6));

  // automaton-family presentation from inline JSON
  json pj;
  pj["family"] = "automaton";
  pj["automaton"] = {{"vertices", {0}},
                     {"start", 0},
                     {"edges", {json::array({0, "x", 0}), json::array({0, "y", 0})}}};
  auto ap = io::presentation_from_json(pj);
  CHECK(ap.family() == group::Family::Automaton);
  CHECK(ap.num_generators() == 2);
}

TEST_CASE("representation round trip") {
  auto rep = io::representation_from_json(modular_rep_json(2.0));
  CHECK(rep.dim() == 2);
  auto j = io::representation_to_json(rep);
  auto back = io::representation_from_json(j);
  for (int g = 0; g < rep.presentation().num_generators(); ++g) {
    CHECK((back.image(g) - rep.image(g)).norm() < 1e-12);
  }
  // inverse images are derived when omitted
  const int a = rep.presentation().generator_index("a");
  const int A = rep.presentation().inverse(a);
  CHECK((rep.image(a) * rep.image(A) - Matrix::Identity(2, 2)).norm() < 1e-10);
}

TEST_CASE("sequence round trip and fit report schema") {
  cocycle::MatrixSequence seq;
  seq.origin = -2;
  Matrix D = Matrix::Zero(2, 2);
  D.diagonal() << 2.0, 0.5;
  seq.items.assign(12, D);
  auto back = io::sequence_from_json(io::sequence_to_json(seq));
  CHECK(back.origin == -2);
  CHECK(back.size() == 12);
  auto fit = cocycle::fit_domination(back, 1);
  json rj = io::fit_report_to_json(fit, "pairs.csv");
  CHECK(rj.at("verdict") == "Dominated");
  CHECK(rj.at("p") == 1);
  CHECK(rj.contains("mu_hat"));
  CHECK(rj.contains("c_hat"));
  CHECK(rj.contains("min_margin"));
  CHECK(rj.at("pair_table_csv_path") == "pairs.csv");
}

TEST_CASE("cone family round trip preserves margins") {
  auto rep = io::representation_from_json(modular_rep_json(2.0));
  const auto& pres = rep.presentation();
  auto rec = group::recurrent_subgraph(group::geodesic_automaton(pres, 8));
  auto out = multicone::synthesize_family(rep, 1, rec, 10);
  REQUIRE(out.family.has_value());
  auto j = io::cone_family_to_json(*out.family, pres);
  auto back = io::cone_family_from_json(j, pres);
  auto vr1 = multicone::verify_family(rep, *out.family);
  auto vr2 = multicone::verify_family(rep, back);
  CHECK(vr2.verdict == multicone::CertVerdict::Certified);
  CHECK(vr2.min_margin == doctest::Approx(vr1.min_margin).epsilon(1e-12));
}

TEST_CASE("atomic write and read") {
  TempDir dir;
  const auto p = dir.path / "sub" / "x.json";
  io::write_json_atomic(p, json{{"k", 1}});
  CHECK(io::read_json(p).at("k") == 1);
  CHECK(!fs::exists(dir.path / "sub" / "x.json.tmp"));
}

TEST_CASE("cli exit codes") {
  TempDir dir;
  const auto rep2 = dir.path / "rep2.json";
  const auto rep1 = dir.path / "rep1.json";
  io::write_json_atomic(rep2, modular_rep_json(2.0));
  io::write_json_atomic(rep1, modular_rep_json(1.0));
  {
    std::ofstream bad(dir.path / "bad.json");
    bad << "{nope";
  }
  const std::string out = (dir.path / "out").string();

  SUBCASE("domcheck verdict codes") {
    CHECK(run_cli("domcheck --input " + rep2.string() + " --p 1 --radius 10 --out " +
                  out) == 0);
    CHECK(run_cli("domcheck --input " + rep1.string() + " --p 1 --radius 8 --out " +
                  out) == 2);
    CHECK(run_cli("domcheck --input " + (dir.path / "bad.json").string() + " --out " +
                  out) == 1);
    CHECK(fs::exists(fs::path(out) / "domcheck_report.json"));
    CHECK(fs::exists(fs::path(out) / "domcheck_gaps.csv"));
    // reports carry the seed
    auto rj = io::read_json(fs::path(out) / "domcheck_report.json");
    CHECK(rj.contains("seed"));
  }
  SUBCASE("multicone synth and verify") {
    CHECK(run_cli("multicone synth --input " + rep2.string() +
                  " --p 1 --radius 10 --out " + out) == 0);
    CHECK(fs::exists(fs::path(out) / "multicone_family.json"));
    CHECK(run_cli("multicone verify --input " + rep2.string() + " --family " +
                  (fs::path(out) / "multicone_family.json").string() + " --out " + out) ==
          0);
    CHECK(run_cli("multicone verify --input " + rep1.string() + " --family " +
                  (fs::path(out) / "multicone_family.json").string() + " --out " + out) ==
          2);
    CHECK(run_cli("multicone synth --input " + rep1.string() +
                  " --p 1 --radius 8 --out " + out) == 2);
    CHECK(fs::exists(fs::path(out) / "multicone_margins.csv"));
  }
  SUBCASE("limitmap") {
    CHECK(run_cli("limitmap --input " + rep2.string() +
                  " --p 1 --radius 8 --depth 60 --ray-length 4 --out " + out) == 0);
    auto rj = io::read_json(fs::path(out) / "limitmap_report.json");
    CHECK(rj.at("rays").size() > 0);
    // not dominated: exit 1
    CHECK(run_cli("limitmap --input " + rep1.string() + " --p 1 --radius 8 --out " +
                  out) == 1);
  }
  SUBCASE("morse") {
    json orbit;
    orbit["representation"] = modular_rep_json(2.0);
    json word = json::array();
    for (int i = 0; i < 20; ++i) {
      word.push_back("a");
      word.push_back("b");
    }
    orbit["word"] = word;
    io::write_json_atomic(dir.path / "orbit.json", orbit);
    CHECK(run_cli("morse --input " + (dir.path / "orbit.json").string() +
                  " --theta 1 --c-target 3.0 --out " + out) == 0);
    CHECK(run_cli("morse --input " + (dir.path / "orbit.json").string() +
                  " --theta 1 --c-target 0.0001 --out " + out) == 2);
    CHECK(fs::exists(fs::path(out) / "morse_audit.csv"));
    // rotation orbit: not regular -> exit 1
    json rotor;
    rotor["representation"] = modular_rep_json(1.0);
    rotor["word"] = json::array({"b", "b", "b", "b"});
    io::write_json_atomic(dir.path / "rotor.json", rotor);
    CHECK(run_cli("morse --input " + (dir.path / "rotor.json").string() + " --out " +
                  out) == 1);
  }
  SUBCASE("conetypes") {
    json pj = {{"family", "free_product"}, {"params", {{"m", 3}, {"n", 2}}}};
    io::write_json_atomic(dir.path / "pres.json", pj);
    CHECK(run_cli("conetypes --input " + (dir.path / "pres.json").string() +
                  " --radius 8 --out " + out) == 0);
    auto aj = io::read_json(fs::path(out) / "automaton_recurrent.json");
    CHECK(aj.at("vertices").size() == 2);
    CHECK(aj.at("edges").size() == 3);
    // a DAG-only automaton presentation has an empty recurrent part
    json dag;
    dag["family"] = "automaton";
    dag["automaton"] = {{"vertices", {0, 1}},
                        {"start", 0},
                        {"edges", {json::array({0, "x", 1})}}};
    io::write_json_atomic(dir.path / "dag.json", dag);
    CHECK(run_cli("conetypes --input " + (dir.path / "dag.json").string() + " --out " +
                  out) == 1);
  }
  SUBCASE("config file with flag override") {
    json cfgj = {{"input", rep2.string()}, {"p", 1}, {"radius", 10}, {"out", out}};
    io::write_json_atomic(dir.path / "cfg.json", cfgj);
    CHECK(run_cli("domcheck --config " + (dir.path / "cfg.json").string()) == 0);
    // flag wins over the config's input
    CHECK(run_cli("domcheck --config " + (dir.path / "cfg.json").string() + " --input " +
                  rep1.string() + " --radius 8") == 2);
  }
}
