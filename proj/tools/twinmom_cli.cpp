// Command-line front end: simulate twin-beam photocount histograms, run
// reconstruction (EM or calibration fit), evaluate the criterion catalog,
// and render reports.
//
// Exit codes: 0 success, 2 validation/usage error, 3 numerical-convergence
// failure.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <twinmom/twinmom.hpp>

namespace tw = twinmom;

namespace {

std::string stem_of(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  std::size_t dot = name.find_last_of('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

bool has_suffix(const std::string& s, const std::string& sfx) {
  return s.size() >= sfx.size() && s.compare(s.size() - sfx.size(), sfx.size(), sfx) == 0;
}

std::vector<tw::Family> parse_families(const std::string& csv) {
  std::vector<tw::Family> fams;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t comma = csv.find(',', pos);
    std::string tok = csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!tok.empty()) fams.push_back(tw::family_from_string(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return fams;
}

struct CliState {
  // global
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned threads = 1;
  int k_order = 5;

  // simulate
  std::string sim_scenario, sim_out, sim_out_photon, sim_out_photocount;
  long long sim_frames = 0;

  // reconstruct em
  std::string em_hist, em_scenario, em_det_s, em_det_i, em_out;
  int em_n_max = -1;
  long long em_max_iter = 100000;
  double em_tol = 1e-9, em_ll_tol = 1e-12;

  // reconstruct calibrate
  std::string cal_hist, cal_scenario, cal_out, cal_out_dist, cal_fix;
  int cal_starts = 8, cal_max_evals = 2500, cal_n_max = 0;
  bool cal_weighted = false;

  // analyze
  std::string an_input, an_out, an_out_csv, an_scenario, an_det_s, an_det_i;
  std::string an_families, an_pipeline = "direct", an_ordering = "exponential";
  int an_bootstrap = -1;  // -1: flag given without a value (use the default 200)
  int an_bootstrap_count = 0;
  bool an_no_ncd = false, an_no_f = false;

  // report
  std::string rep_input, rep_dir = ".", rep_prefix;
  bool rep_no_svg = false;

  // criteria list
  std::string list_family;

  // selftest
  int st_tables = 200;
};

tw::DetectorModel load_detector_file(const std::string& path) {
  return tw::detector_from_json(
      nlohmann::json::parse(tw::detail::read_file(path), nullptr, true, true));
}

int run_simulate(const CliState& st) {
  tw::Scenario sc = tw::load_scenario(st.sim_scenario);
  if (st.seed_given) sc.seed = st.seed;
  if (st.sim_frames > 0) sc.frames = st.sim_frames;

  tw::JointDistribution photon = tw::twinbeam_distribution(sc.source, sc.n_max);
  tw::JointDistribution counts = tw::detect(photon, sc.det_s, sc.det_i);
  tw::JointHistogram hist = tw::sample_histogram(counts, sc.frames, sc.seed);
  tw::save_histogram(st.sim_out, hist);

  nlohmann::json prov{{"tool", "twinmom simulate"},
                      {"scenario", tw::scenario_to_json(sc)},
                      {"photon_grid", {photon.probs.rows(), photon.probs.cols()}},
                      {"photocount_grid", {hist.rows(), hist.cols()}},
                      {"mean_pairs", sc.source.mean_pairs()},
                      {"histogram", st.sim_out}};
  tw::detail::write_file(st.sim_out + ".provenance.json", prov.dump(2) + "\n");

  if (!st.sim_out_photon.empty()) tw::save_distribution(st.sim_out_photon, photon);
  if (!st.sim_out_photocount.empty()) tw::save_distribution(st.sim_out_photocount, counts);

  std::printf("simulated %lld frames on a %zux%zu photocount grid (photon grid %zux%zu)\n",
              sc.frames, hist.rows(), hist.cols(), photon.probs.rows(), photon.probs.cols());
  std::printf("histogram: %s\nprovenance: %s\n", st.sim_out.c_str(),
              (st.sim_out + ".provenance.json").c_str());
  return 0;
}

int run_reconstruct_em(const CliState& st) {
  tw::JointHistogram hist = tw::load_histogram(st.em_hist);
  tw::DetectorModel ds, di;
  if (!st.em_scenario.empty()) {
    tw::Scenario sc = tw::load_scenario(st.em_scenario);
    ds = sc.det_s;
    di = sc.det_i;
  } else if (!st.em_det_s.empty() && !st.em_det_i.empty()) {
    ds = load_detector_file(st.em_det_s);
    di = load_detector_file(st.em_det_i);
  } else {
    throw tw::ValidationError(
        "reconstruct em: provide --scenario or both --detector-s and --detector-i");
  }

  tw::EmOptions opt;
  opt.n_max = st.em_n_max;
  opt.max_iter = st.em_max_iter;
  opt.tol = st.em_tol;
  opt.ll_rel_tol = st.em_ll_tol;
  tw::EmResult res = tw::em_reconstruct(hist, ds, di, opt);

  tw::save_distribution(st.em_out, res.p);
  nlohmann::json meta{{"iterations", res.iterations},
                      {"converged", res.converged},
                      {"hit_iteration_cap", res.hit_iteration_cap},
                      {"log_likelihood", res.log_likelihood},
                      {"n_max_s", res.n_max_s},
                      {"n_max_i", res.n_max_i}};
  tw::detail::write_file(st.em_out + ".meta.json", meta.dump(2) + "\n");

  if (res.hit_iteration_cap)
    std::fprintf(stderr,
                 "warning: iteration cap (%lld) reached before the stopping rule; "
                 "result is the last iterate\n",
                 st.em_max_iter);
  std::printf("reconstructed photon grid %dx%d in %lld iterations (per-frame logL %.9f)\n",
              res.n_max_s + 1, res.n_max_i + 1, res.iterations, res.log_likelihood);
  std::printf("distribution: %s\n", st.em_out.c_str());
  return 0;
}

int run_reconstruct_calibrate(const CliState& st) {
  tw::JointHistogram hist = tw::load_histogram(st.cal_hist);
  tw::Scenario sc = tw::load_scenario(st.cal_scenario);

  tw::CalibrationInit init;
  init.source = sc.source;
  init.eta_s = sc.det_s.efficiency;
  init.eta_i = sc.det_i.efficiency;

  tw::CalibrationOptions opt;
  opt.starts = st.cal_starts;
  opt.max_evals = st.cal_max_evals;
  opt.n_max = st.cal_n_max;
  opt.weighted = st.cal_weighted;
  opt.threads = st.threads;
  opt.seed = st.seed_given ? st.seed : 1;
  if (!st.cal_fix.empty()) {
    std::size_t pos = 0;
    while (pos <= st.cal_fix.size()) {
      std::size_t comma = st.cal_fix.find(',', pos);
      std::string tok = st.cal_fix.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      if (!tok.empty()) {
        bool found = false;
        for (int i = 0; i < 8; ++i)
          if (tok == tw::cal_param_names()[i]) {
            opt.free[i] = false;
            found = true;
          }
        if (!found) throw tw::ValidationError("calibrate: unknown parameter name: " + tok);
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }

  tw::CalibrationResult res = tw::calibrate(hist, init, sc.det_s, sc.det_i, opt);

  nlohmann::json fit{{"eta_s", res.eta_s},
                     {"eta_i", res.eta_i},
                     {"twinbeam", tw::twinbeam_to_json(res.source)},
                     {"mean_pairs", res.source.mean_pairs()},
                     {"residual", res.residual},
                     {"evaluations", res.evaluations},
                     {"at_bounds", res.at_bounds},
                     {"best_start", res.best_start},
                     {"start_residuals", res.start_residuals}};
  tw::detail::write_file(st.cal_out, fit.dump(2) + "\n");
  if (!st.cal_out_dist.empty()) tw::save_distribution(st.cal_out_dist, res.implied);

  std::printf("fit: eta_s=%.4f eta_i=%.4f mean_pairs=%.4f residual=%.3e%s\n", res.eta_s,
              res.eta_i, res.source.mean_pairs(), res.residual,
              res.at_bounds ? " (at parameter bounds)" : "");
  std::printf("parameters: %s\n", st.cal_out.c_str());
  return 0;
}

int run_analyze(const CliState& st) {
  tw::AnalysisOptions opt;
  opt.k_order = st.k_order;
  if (!st.an_families.empty()) opt.families = parse_families(st.an_families);
  opt.with_f = !st.an_no_f;
  opt.with_ncd = !st.an_no_ncd;
  opt.bootstrap_replicas =
      st.an_bootstrap_count == 0 ? 0 : (st.an_bootstrap >= 0 ? st.an_bootstrap : 200);
  opt.seed = st.seed;
  opt.threads = st.threads;
  if (st.an_ordering == "exponential")
    opt.form = tw::SOrderingForm::exponential_noise;
  else if (st.an_ordering == "laguerre")
    opt.form = tw::SOrderingForm::laguerre_kernel;
  else
    throw tw::ValidationError("analyze: --ordering must be 'exponential' or 'laguerre'");

  if (st.an_pipeline == "em") {
    opt.pipeline = tw::AnalysisPipeline::em;
    if (!st.an_scenario.empty()) {
      tw::Scenario sc = tw::load_scenario(st.an_scenario);
      opt.det_s = sc.det_s;
      opt.det_i = sc.det_i;
    } else if (!st.an_det_s.empty() && !st.an_det_i.empty()) {
      opt.det_s = load_detector_file(st.an_det_s);
      opt.det_i = load_detector_file(st.an_det_i);
    } else {
      throw tw::ValidationError(
          "analyze: the em pipeline needs --scenario or both --detector-s and --detector-i");
    }
  } else if (st.an_pipeline != "direct") {
    throw tw::ValidationError("analyze: --pipeline must be 'direct' or 'em'");
  }

  // Histograms come as CSV or JSON with a counts field; distributions as
  // JSON with a probs field.
  tw::AnalysisReport rep;
  bool is_histogram;
  if (has_suffix(st.an_input, ".json")) {
    nlohmann::json j =
        nlohmann::json::parse(tw::detail::read_file(st.an_input), nullptr, true, true);
    is_histogram = j.contains("counts");
    if (is_histogram) {
      rep = tw::analyze_histogram(tw::histogram_from_json(j), opt);
    } else {
      if (opt.bootstrap_replicas > 0)
        throw tw::ValidationError("analyze: bootstrap needs a histogram input, not an exact distribution");
      if (opt.pipeline == tw::AnalysisPipeline::em)
        throw tw::ValidationError("analyze: the em pipeline needs a histogram input");
      rep = tw::analyze_distribution(tw::distribution_from_json(j), opt);
    }
  } else {
    is_histogram = true;
    rep = tw::analyze_histogram(tw::load_histogram(st.an_input), opt);
  }
  rep.provenance["input"] = st.an_input;

  tw::detail::write_file(st.an_out, tw::report_to_json(rep).dump(2) + "\n");
  if (!st.an_out_csv.empty()) tw::detail::write_file(st.an_out_csv, tw::report_to_csv(rep));

  int violated = 0, significant = 0;
  for (const tw::CriterionOutcome& o : rep.criteria) {
    violated += o.violated;
    significant += o.significant;
  }
  std::printf("analyzed %zu criteria: %d violated, %d significant\n", rep.criteria.size(),
              violated, significant);
  std::printf("report: %s\n", st.an_out.c_str());
  return 0;
}

int run_report(const CliState& st) {
  nlohmann::json j =
      nlohmann::json::parse(tw::detail::read_file(st.rep_input), nullptr, true, true);
  tw::AnalysisReport rep = tw::report_from_json(j);
  std::string prefix = st.rep_prefix.empty() ? stem_of(st.rep_input) + "_" : st.rep_prefix;
  std::vector<std::string> files =
      tw::write_report_series(rep, st.rep_dir, prefix, !st.rep_no_svg);
  for (const std::string& f : files) std::printf("%s\n", f.c_str());
  return 0;
}

int run_criteria_list(const CliState& st) {
  int shown = 0;
  for (const tw::CriterionSpec& c : tw::criterion_catalog()) {
    if (!st.list_family.empty() && tw::to_string(c.family) != st.list_family) continue;
    std::printf("%-18s %-9s order=%d %-9s %s%s\n", c.id.c_str(),
                tw::to_string(c.family).c_str(), c.order,
                c.basis == tw::MomentKind::photon ? "photon" : "intensity",
                c.redundant ? "[redundant] " : "", c.formula.c_str());
    ++shown;
  }
  if (st.list_family.empty() || st.list_family == "F") {
    std::printf("%-18s %-9s order=k+l+2 %-7s %s\n", "F_<k>_<l>_1", "F", "elements",
                "q(k+2,l) + q(k,l+2) - 2 q(k+1,l+1),  q(a,b) = a! b! p(a,b) / p(0,0)");
    ++shown;
  }
  std::printf("%d entries\n", shown);
  return 0;
}

int run_selftest(const CliState& st) {
  tw::IdentitySuiteResult res =
      tw::run_identity_suite(st.st_tables, st.seed_given ? st.seed : 12345);
  for (const tw::IdentityCheck& c : res.checks)
    if (c.max_rel_err > res.tolerance)
      std::printf("FAIL  %-70s max rel err %.3e\n", c.name.c_str(), c.max_rel_err);
  std::printf("identity suite: %zu relations x %d tables, worst relative error %.3e (%s)\n",
              res.checks.size(), res.tables, res.worst, res.worst_name.c_str());
  if (!res.passed)
    throw tw::ConvergenceError("selftest: identity suite failed");
  std::printf("selftest passed\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CliState st;
  CLI::App app{"twin-beam photocount nonclassicality & entanglement toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  auto* seed_opt =
      app.add_option("--seed", st.seed, "RNG seed (simulation, bootstrap, calibration starts)");
  app.add_option("--threads", st.threads, "worker threads for bootstrap/calibration")
      ->check(CLI::Range(1u, 256u));
  app.add_option("--k-order", st.k_order, "moment truncation order K")
      ->check(CLI::Range(2, 8));

  CLI::App* sim = app.add_subcommand("simulate", "forward-simulate a photocount histogram");
  sim->add_option("scenario", st.sim_scenario, "scenario JSON path")->required();
  sim->add_option("-o,--out", st.sim_out, "output histogram (.csv or .json)")->required();
  sim->add_option("--out-photon", st.sim_out_photon, "also write the exact photon distribution");
  sim->add_option("--out-photocount", st.sim_out_photocount,
                  "also write the exact photocount distribution");
  sim->add_option("--frames", st.sim_frames, "override the scenario frame count");

  CLI::App* rec = app.add_subcommand("reconstruct", "invert the detector model");
  rec->require_subcommand(1);
  CLI::App* em = rec->add_subcommand("em", "expectation-maximization photon-number reconstruction");
  em->add_option("histogram", st.em_hist, "measured histogram (.csv or .json)")->required();
  em->add_option("-o,--out", st.em_out, "output distribution JSON")->required();
  em->add_option("--scenario", st.em_scenario, "scenario JSON providing the detector models");
  em->add_option("--detector-s", st.em_det_s, "signal detector JSON");
  em->add_option("--detector-i", st.em_det_i, "idler detector JSON");
  em->add_option("--n-max", st.em_n_max, "photon grid edge (-1 = automatic)");
  em->add_option("--max-iter", st.em_max_iter, "iteration cap");
  em->add_option("--tol", st.em_tol, "elementwise stopping tolerance");
  em->add_option("--ll-tol", st.em_ll_tol, "relative log-likelihood stopping tolerance");

  CLI::App* cal = rec->add_subcommand("calibrate", "fit the twin-beam source model");
  cal->add_option("histogram", st.cal_hist, "measured histogram (.csv or .json)")->required();
  cal->add_option("--scenario", st.cal_scenario,
                  "scenario JSON: initial source guess + fixed detector geometry")
      ->required();
  cal->add_option("-o,--out", st.cal_out, "output fit JSON")->required();
  cal->add_option("--out-distribution", st.cal_out_dist,
                  "also write the fitted photon distribution");
  cal->add_option("--fix", st.cal_fix,
                  "comma-separated parameters to hold fixed (eta_s,eta_i,M_p,B_p,M_s,B_s,M_i,B_i)");
  cal->add_option("--starts", st.cal_starts, "multi-start count");
  cal->add_option("--max-evals", st.cal_max_evals, "objective evaluations per start");
  cal->add_option("--n-max", st.cal_n_max, "photon grid edge (0 = automatic)");
  cal->add_flag("--weighted", st.cal_weighted, "weight residuals by inverse counts");

  CLI::App* an = app.add_subcommand("analyze", "evaluate the criterion catalog");
  an->add_option("input", st.an_input, "histogram (.csv/.json) or distribution (.json)")
      ->required();
  an->add_option("-o,--out", st.an_out, "output report JSON")->required();
  an->add_option("--out-csv", st.an_out_csv, "also write a flat CSV table");
  auto* boot_opt = an->add_option("--bootstrap", st.an_bootstrap,
                                  "bootstrap replicas for standard errors (histogram "
                                  "inputs; bare flag = 200)")
                       ->expected(0, 1);
  an->add_option("--families", st.an_families, "comma-separated family filter (e.g. E,B,D)");
  an->add_flag("--no-ncd", st.an_no_ncd, "skip noise-depth computation");
  an->add_flag("--no-f", st.an_no_f, "skip distribution-element criteria");
  an->add_option("--pipeline", st.an_pipeline, "direct | em (default direct)");
  an->add_option("--ordering", st.an_ordering,
                 "ordering-noise form for noise depth: exponential | laguerre");
  an->add_option("--scenario", st.an_scenario, "scenario JSON with detector models (em pipeline)");
  an->add_option("--detector-s", st.an_det_s, "signal detector JSON (em pipeline)");
  an->add_option("--detector-i", st.an_det_i, "idler detector JSON (em pipeline)");

  CLI::App* rep = app.add_subcommand("report", "render per-family series from a report JSON");
  rep->add_option("report", st.rep_input, "report JSON from analyze")->required();
  rep->add_option("--out-dir", st.rep_dir, "output directory (default .)");
  rep->add_option("--prefix", st.rep_prefix, "output file prefix");
  rep->add_flag("--no-svg", st.rep_no_svg, "write CSV series only");

  CLI::App* cri = app.add_subcommand("criteria", "criterion catalog utilities");
  cri->require_subcommand(1);
  CLI::App* lst = cri->add_subcommand("list", "print the catalog");
  lst->add_option("--family", st.list_family, "only this family");

  CLI::App* selftest = app.add_subcommand("selftest", "run the decomposition-identity suite");
  selftest->add_option("--tables", st.st_tables, "random tables to try")
      ->check(CLI::Range(1, 100000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  st.seed_given = seed_opt->count() > 0;
  st.an_bootstrap_count = static_cast<int>(boot_opt->count());

  try {
    if (sim->parsed()) return run_simulate(st);
    if (rec->parsed()) {
      if (em->parsed()) return run_reconstruct_em(st);
      if (cal->parsed()) return run_reconstruct_calibrate(st);
    }
    if (an->parsed()) return run_analyze(st);
    if (rep->parsed()) return run_report(st);
    if (cri->parsed() && lst->parsed()) return run_criteria_list(st);
    if (selftest->parsed()) return run_selftest(st);
    std::fprintf(stderr, "error: no subcommand\n");
    return 2;
  } catch (const tw::ConvergenceError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const tw::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
