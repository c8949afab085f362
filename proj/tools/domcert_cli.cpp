// domcert: certify or refute singular-value domination for finitely
// generated matrix groups, verify/synthesize invariant cone families, chase
// boundary limit maps, and audit quasi-geodesics in the PSL(d,R) symmetric
// space.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "domcert/io.hpp"

using namespace domcert;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string input;
  std::string family_file;
  std::string config_file;
  std::string out_dir = ".";
  int p = 1;
  int radius = 8;
  int depth = 60;
  int workers = 1;
  std::uint64_t seed = 1;
  double tol_gap = defaults::tol_gap;
  double margin_floor = defaults::margin_floor;
  double c_target = 1.0;
  int ray_length = 4;
  std::string theta = "1";
};

std::vector<int> parse_theta(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  if (out.empty()) fail("BadInput", "empty theta");
  return out;
}

json provenance(double value, const std::string& tag) {
  return json{{"value", value}, {"provenance", tag}};
}

json run_header(const RunConfig& cfg, const std::string& command) {
  return json{{"command", command},
              {"seed", cfg.seed},
              {"p", cfg.p},
              {"radius", cfg.radius},
              {"tol_gap", cfg.tol_gap},
              {"margin_floor", cfg.margin_floor},
              {"workers", cfg.workers}};
}

// flags override config-file fields: apply file values only where the flag
// was not passed
void merge_config(const CLI::App& app, RunConfig& cfg) {
  if (cfg.config_file.empty()) return;
  json j = io::read_json(cfg.config_file);
  auto unset = [&](const std::string& flag) {
    auto* opt = app.get_option_no_throw(flag);
    return opt != nullptr && opt->count() == 0;
  };
  if (j.contains("input") && unset("--input")) cfg.input = j["input"].get<std::string>();
  if (j.contains("family") && unset("--family"))
    cfg.family_file = j["family"].get<std::string>();
  if (j.contains("p") && unset("--p")) cfg.p = j["p"].get<int>();
  if (j.contains("radius") && unset("--radius")) cfg.radius = j["radius"].get<int>();
  if (j.contains("depth") && unset("--depth")) cfg.depth = j["depth"].get<int>();
  if (j.contains("out") && unset("--out")) cfg.out_dir = j["out"].get<std::string>();
  if (j.contains("workers") && unset("--workers")) cfg.workers = j["workers"].get<int>();
  if (j.contains("seed") && unset("--seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("tol_gap") && unset("--tol-gap")) cfg.tol_gap = j["tol_gap"].get<double>();
  if (j.contains("margin_floor") && unset("--margin-floor"))
    cfg.margin_floor = j["margin_floor"].get<double>();
  if (j.contains("c_target") && unset("--c-target"))
    cfg.c_target = j["c_target"].get<double>();
  if (j.contains("theta") && unset("--theta")) cfg.theta = j["theta"].get<std::string>();
  if (j.contains("ray_length") && unset("--ray-length"))
    cfg.ray_length = j["ray_length"].get<int>();
}

int cmd_domcheck(const RunConfig& cfg) {
  auto rep = io::representation_from_json(io::read_json(cfg.input),
                                          fs::path(cfg.input).parent_path());
  reprcheck::ReportOptions opts;
  opts.workers = cfg.workers;
  auto report = reprcheck::domination_report(rep, cfg.p, cfg.radius, opts);

  std::ostringstream csv;
  csv << "length,min_gap,mean_gap\n";
  for (const auto& row : report.gap_rows) {
    csv << int(row[0]) << "," << row[1] << "," << row[2] << "\n";
  }
  const fs::path csv_path = fs::path(cfg.out_dir) / "domcheck_gaps.csv";
  io::write_text_atomic(csv_path, csv.str());

  json j = run_header(cfg, "domcheck");
  j["verdict"] = cocycle::to_string(report.verdict);
  j["lambda_hat"] = provenance(report.lambda_hat, "fitted");
  j["C_hat"] = provenance(report.C_hat, "fitted");
  j["min_margin"] = report.min_margin;
  j["burn_in"] = report.burn_in;
  j["dual_symmetry_residual"] = report.dual_symmetry_residual;
  j["worst_element"] = group::format_word(rep.presentation(), report.worst_element);
  j["per_length_min_gap"] = report.per_length_min_gap;
  j["gap_csv"] = csv_path.string();
  io::write_json_atomic(fs::path(cfg.out_dir) / "domcheck_report.json", j);

  std::cout << "domcheck: " << cocycle::to_string(report.verdict)
            << " (lambda_hat = " << report.lambda_hat << ")\n";
  switch (report.verdict) {
    case cocycle::Verdict::Dominated: return 0;
    case cocycle::Verdict::NotDominated: return 2;
    case cocycle::Verdict::Inconclusive: return 3;
  }
  return 1;
}

int cmd_multicone(const RunConfig& cfg, bool synth) {
  auto rep = io::representation_from_json(io::read_json(cfg.input),
                                          fs::path(cfg.input).parent_path());
  const auto& pres = rep.presentation();

  auto write_margins = [&](const multicone::VerifyResult& vr,
                           const multicone::ConeFamily& fam) {
    std::ostringstream csv;
    csv << "edge,component,margin\n";
    for (const auto& row : vr.table) {
      const auto& e = fam.automaton.edges[row.edge];
      csv << e.tail << "-" << pres.name(e.label) << "->" << e.head << ","
          << row.component << "," << row.margin << "\n";
    }
    io::write_text_atomic(fs::path(cfg.out_dir) / "multicone_margins.csv", csv.str());
  };

  if (!synth) {
    if (cfg.family_file.empty()) fail("BadInput", "verify needs --family");
    auto fam = io::cone_family_from_json(io::read_json(cfg.family_file), pres, cfg.radius);
    auto vr = multicone::verify_family(rep, fam, cfg.margin_floor);
    write_margins(vr, fam);
    json j = run_header(cfg, "multicone verify");
    j["verdict"] = vr.verdict == multicone::CertVerdict::Certified ? "Certified"
                                                                   : "NotCertified";
    j["min_margin"] = vr.min_margin;
    j["margin_csv"] = (fs::path(cfg.out_dir) / "multicone_margins.csv").string();
    io::write_json_atomic(fs::path(cfg.out_dir) / "multicone_report.json", j);
    std::cout << "multicone verify: " << j["verdict"].get<std::string>()
              << " (min margin " << vr.min_margin << ")\n";
    return vr.verdict == multicone::CertVerdict::Certified ? 0 : 2;
  }

  auto rec = group::recurrent_subgraph(group::geodesic_automaton(pres, cfg.radius));
  multicone::SynthesisOptions opts;
  opts.seed = cfg.seed;
  opts.margin_floor = cfg.margin_floor;
  auto out = multicone::synthesize_family(rep, cfg.p, rec, cfg.radius, opts, false);
  json j = run_header(cfg, "multicone synth");
  j["best_margin"] = out.best.min_margin;
  j["best_slope"] = out.best_slope;
  if (out.family) {
    out.family->classification_radius = cfg.radius;
    write_margins(out.best, *out.family);
    io::write_json_atomic(fs::path(cfg.out_dir) / "multicone_family.json",
                          io::cone_family_to_json(*out.family, pres));
    j["verdict"] = "Certified";
    j["family_file"] = (fs::path(cfg.out_dir) / "multicone_family.json").string();
    io::write_json_atomic(fs::path(cfg.out_dir) / "multicone_report.json", j);
    std::cout << "multicone synth: Certified (margin " << out.best.min_margin << ")\n";
    return 0;
  }
  j["verdict"] = "NoCandidateCertified";
  io::write_json_atomic(fs::path(cfg.out_dir) / "multicone_report.json", j);
  std::cout << "multicone synth: NoCandidateCertified (best margin "
            << out.best.min_margin << ")\n";
  return 2;
}

int cmd_limitmap(const RunConfig& cfg) {
  json input = io::read_json(cfg.input);
  auto rep = io::representation_from_json(
      input.contains("representation") ? input.at("representation") : input,
      fs::path(cfg.input).parent_path());
  const auto& pres = rep.presentation();

  reprcheck::ReportOptions ropts;
  ropts.workers = cfg.workers;
  auto dom = reprcheck::domination_report(rep, cfg.p, cfg.radius, ropts);
  if (dom.verdict != cocycle::Verdict::Dominated) {
    std::cerr << "limitmap: representation is " << cocycle::to_string(dom.verdict)
              << "\n";
    return 1;
  }

  std::vector<reprcheck::BoundaryRay> rays;
  if (input.contains("rays")) {
    for (const auto& rj : input.at("rays")) rays.push_back(io::ray_from_json(rj, pres));
  } else {
    // all periodic rays with cyclic words up to the configured length
    for (const auto& e : group::ball(pres, cfg.ray_length)) {
      if (e.length == 0) continue;
      reprcheck::BoundaryRay ray{{}, e.word};
      try {
        reprcheck::validate_ray(pres, ray);
      } catch (const Error&) {
        continue;
      }
      rays.push_back(ray);
    }
  }

  json points = json::array();
  bool all_converged = true;
  for (const auto& ray : rays) {
    json pj;
    pj["u"] = group::format_word(pres, ray.u);
    pj["v"] = group::format_word(pres, ray.v);
    try {
      auto lp = reprcheck::limit_map(rep, cfg.p, ray, cfg.depth);
      pj["subspace"] = io::subspace_to_json(lp.space);
      pj["residual"] = lp.residual;
      pj["depth_used"] = lp.depth_used;
    } catch (const Error& e) {
      pj["error"] = e.code();
      all_converged = false;
    }
    points.push_back(std::move(pj));
  }
  json j = run_header(cfg, "limitmap");
  j["depth"] = cfg.depth;
  j["rays"] = std::move(points);
  io::write_json_atomic(fs::path(cfg.out_dir) / "limitmap_report.json", j);
  std::cout << "limitmap: " << rays.size() << " rays, "
            << (all_converged ? "all converged" : "some failed") << "\n";
  return all_converged ? 0 : 2;
}

int cmd_morse(const RunConfig& cfg) {
  json input = io::read_json(cfg.input);
  std::vector<Matrix> increments;
  if (input.contains("matrices")) {
    std::vector<Matrix> points;
    for (const auto& mj : input.at("matrices")) {
      points.push_back(io::matrix_from_json(mj));
    }
    auto orbit = morse::Orbit::from_points(points);
    increments = orbit.increments();
  } else if (input.contains("representation") && input.contains("word")) {
    auto rep = io::representation_from_json(input.at("representation"),
                                            fs::path(cfg.input).parent_path());
    std::vector<std::string> tokens;
    for (const auto& t : input.at("word")) tokens.push_back(t.get<std::string>());
    auto word = group::parse_word(rep.presentation(), tokens);
    for (int g : word) increments.push_back(rep.image(g));
  } else {
    fail("BadInput", "orbit needs matrices or (representation, word)");
  }

  morse::Orbit orbit(increments);
  auto theta = parse_theta(cfg.theta);
  morse::MorseAuditReport report;
  try {
    report = morse::morse_audit(orbit, theta);
  } catch (const Error& e) {
    std::cerr << "morse: " << e.what() << "\n";
    return 1;
  }

  std::ostringstream csv;
  csv << "k,lower_k,upper_k,sidedness_margin_k\n";
  for (const auto& row : report.rows) {
    csv << row.k << "," << row.lower << "," << row.upper << ","
        << row.sidedness_margin << "\n";
  }
  io::write_text_atomic(fs::path(cfg.out_dir) / "morse_audit.csv", csv.str());

  json j = run_header(cfg, "morse");
  j["mu"] = report.constants.mu;
  j["c"] = report.constants.c;
  j["regularity_margin"] = report.regularity;
  j["max_lower"] = provenance(report.max_lower, "weakened-lower");
  j["max_upper"] = provenance(report.max_upper, "constructive-upper");
  j["c_target"] = cfg.c_target;
  j["audit_csv"] = (fs::path(cfg.out_dir) / "morse_audit.csv").string();
  io::write_json_atomic(fs::path(cfg.out_dir) / "morse_report.json", j);
  std::cout << "morse: max upper bound " << report.max_upper << " (target "
            << cfg.c_target << ")\n";
  return report.max_upper <= cfg.c_target ? 0 : 2;
}

int cmd_conetypes(const RunConfig& cfg) {
  auto pres = io::presentation_from_json(io::read_json(cfg.input),
                                         fs::path(cfg.input).parent_path());
  auto ct = group::cone_types(pres, cfg.radius);
  json j = run_header(cfg, "conetypes");
  j["num_cone_types"] = ct.types.size();
  j["stabilized"] = ct.stabilized;
  j["certified"] = ct.certified;
  if (!ct.certified) {
    j["note"] =
        "stabilization at the probe radius is evidence, not a proof, that the "
        "cone type partition is exact";
  }
  json witnesses = json::array();
  for (const auto& t : ct.types) {
    witnesses.push_back(
        json{{"id", t.id}, {"witness", group::format_word(pres, t.witness)}});
  }
  j["types"] = std::move(witnesses);

  int status = 0;
  if (ct.stabilized) {
    auto autom = group::geodesic_automaton(pres, cfg.radius);
    io::write_json_atomic(fs::path(cfg.out_dir) / "automaton.json",
                          io::automaton_to_json(autom, pres));
    auto rec = group::recurrent_subgraph(autom);  // throws on DAG input
    io::write_json_atomic(fs::path(cfg.out_dir) / "automaton_recurrent.json",
                          io::automaton_to_json(rec, pres));
    j["automaton_file"] = (fs::path(cfg.out_dir) / "automaton.json").string();
    j["recurrent_file"] = (fs::path(cfg.out_dir) / "automaton_recurrent.json").string();
  } else {
    status = 3;
  }
  io::write_json_atomic(fs::path(cfg.out_dir) / "conetypes_report.json", j);
  std::cout << "conetypes: " << ct.types.size() << " types"
            << (ct.stabilized ? "" : " (not stabilized)") << "\n";
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"domination certificates for matrix representations"};
  app.require_subcommand(1);

  RunConfig cfg;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--input", cfg.input, "input JSON file");
    sub->add_option("--config", cfg.config_file, "flat JSON config; flags override");
    sub->add_option("--p", cfg.p, "gap index");
    sub->add_option("--radius", cfg.radius, "ball / automaton radius");
    sub->add_option("--depth", cfg.depth, "iteration depth");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--workers", cfg.workers, "worker threads");
    sub->add_option("--seed", cfg.seed, "random seed (recorded in reports)");
    sub->add_option("--tol-gap", cfg.tol_gap, "relative gap tolerance");
    sub->add_option("--margin-floor", cfg.margin_floor, "certification margin floor");
    sub->add_option("--c-target", cfg.c_target, "morse distance target");
    sub->add_option("--theta", cfg.theta, "comma separated root indices");
    sub->add_option("--ray-length", cfg.ray_length, "cyclic word length for rays");
    return sub;
  };

  auto* domcheck = add_common(app.add_subcommand("domcheck", "fit the domination gap"));
  auto* mc = app.add_subcommand("multicone", "invariant cone families");
  mc->require_subcommand(1);
  auto* verify = add_common(mc->add_subcommand("verify", "check a family file"));
  verify->add_option("--family", cfg.family_file, "cone family JSON");
  auto* synth = add_common(mc->add_subcommand("synth", "search for a family"));
  auto* limitmap = add_common(app.add_subcommand("limitmap", "boundary limit maps"));
  auto* morse_cmd = add_common(app.add_subcommand("morse", "quasi-geodesic audit"));
  auto* conetypes = add_common(app.add_subcommand("conetypes", "geodesic automaton"));

  CLI11_PARSE(app, argc, argv);

  try {
    if (domcheck->parsed()) {
      merge_config(*domcheck, cfg);
      return cmd_domcheck(cfg);
    }
    if (verify->parsed()) {
      merge_config(*verify, cfg);
      return cmd_multicone(cfg, false);
    }
    if (synth->parsed()) {
      merge_config(*synth, cfg);
      return cmd_multicone(cfg, true);
    }
    if (limitmap->parsed()) {
      merge_config(*limitmap, cfg);
      return cmd_limitmap(cfg);
    }
    if (morse_cmd->parsed()) {
      merge_config(*morse_cmd, cfg);
      return cmd_morse(cfg);
    }
    if (conetypes->parsed()) {
      merge_config(*conetypes, cfg);
      return cmd_conetypes(cfg);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
