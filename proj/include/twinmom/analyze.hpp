#pragma once

// End-to-end analysis of a joint distribution or photocount histogram:
// evaluates the criterion catalog, the distribution-element criteria,
// noise-robustness depths, and bootstrap standard errors, and renders the
// results as JSON / CSV / SVG reports.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bootstrap.hpp"
#include "core.hpp"
#include "criteria.hpp"
#include "data.hpp"
#include "moments.hpp"
#include "ncd.hpp"
#include "reconstruct.hpp"

namespace twinmom {

// ---------------------------------------------------------------- options

enum class AnalysisPipeline { direct, em };

inline std::string to_string(AnalysisPipeline p) {
  return p == AnalysisPipeline::direct ? "direct" : "em";
}

struct AnalysisOptions {
  int k_order = 5;
  std::vector<Family> families;  // empty = every catalog family
  bool with_f = true;            // distribution-element criteria
  int f_k_cap = 40;
  bool with_ncd = true;
  SOrderingForm form = SOrderingForm::exponential_noise;
  double ncd_s_tol = 1e-6;
  int bootstrap_replicas = 0;  // 0 = no bootstrap
  std::uint64_t seed = 0;
  unsigned threads = 1;

  // histogram entry point only:
  AnalysisPipeline pipeline = AnalysisPipeline::direct;
  EmOptions em;
  DetectorModel det_s, det_i;  // required for the em pipeline

  bool family_selected(Family f) const {
    if (families.empty()) return true;
    for (Family g : families)
      if (g == f) return true;
    return false;
  }
};

struct NcdOutcome {
  bool present = false;
  double tau = std::numeric_limits<double>::quiet_NaN();
  double s_threshold = std::numeric_limits<double>::quiet_NaN();
  bool bracketed = false;
};

struct CriterionOutcome {
  std::string id;
  Family family = Family::E;
  MomentKind basis = MomentKind::intensity;
  int order = 0;
  double value = std::numeric_limits<double>::quiet_NaN();
  double normalized = std::numeric_limits<double>::quiet_NaN();
  double stderr_value = std::numeric_limits<double>::quiet_NaN();
  bool evaluable = true;
  bool violated = false;    // value < 0
  bool significant = false;  // violated and beyond 3 standard errors (when known)
  NcdOutcome ncd;
};

struct AnalysisReport {
  std::vector<CriterionOutcome> criteria;
  nlohmann::json provenance = nlohmann::json::object();
};

// ------------------------------------------------------------ evaluation

namespace detail {

/// Raw criterion values in report row order (catalog selection, then the
/// distribution-element cells). Shared by the main pass and the bootstrap so
/// replica vectors stay aligned with the report.
inline std::vector<double> analysis_values(const JointDistribution& p, const AnalysisOptions& opt,
                                           const std::vector<std::pair<int, int>>& f_cells) {
  MomentTable mi = factorial_moments(p, opt.k_order);
  bool need_photon = opt.family_selected(Family::N);
  MomentTable mp = need_photon ? photon_number_moments(p, opt.k_order) : MomentTable{};

  std::vector<double> vals;
  for (const CriterionSpec& c : criterion_catalog()) {
    if (c.order > opt.k_order || !opt.family_selected(c.family)) continue;
    const MomentTable& t = c.basis == MomentKind::photon ? mp : mi;
    vals.push_back(eval_criterion(c, t));
  }
  if (opt.with_f && opt.family_selected(Family::F))
    for (const FResult& fr : eval_f_criteria(p, f_cells))
      vals.push_back(fr.value);
  return vals;
}

}  // namespace detail

/// Full analysis of an exact or empirical joint distribution.
inline AnalysisReport analyze_distribution(const JointDistribution& p,
                                           const AnalysisOptions& opt = {}) {
  p.validate();
  detail::check_order(opt.k_order);

  AnalysisReport rep;
  MomentTable mi = factorial_moments(p, opt.k_order);
  bool need_photon = opt.family_selected(Family::N);
  MomentTable mp = need_photon ? photon_number_moments(p, opt.k_order) : MomentTable{};

  for (const CriterionSpec& c : criterion_catalog()) {
    if (c.order > opt.k_order || !opt.family_selected(c.family)) continue;
    const MomentTable& t = c.basis == MomentKind::photon ? mp : mi;
    CriterionOutcome o;
    o.id = c.id;
    o.family = c.family;
    o.basis = c.basis;
    o.order = c.order;
    o.value = eval_criterion(c, t);
    o.normalized = normalized_criterion(c, o.value, mi, mp);
    o.violated = o.value < 0.0;
    o.significant = o.violated;  // refined when bootstrap errors are attached
    if (o.violated && opt.with_ncd && c.basis == MomentKind::intensity) {
      NcdResult nr = compute_ncd(c, mi, opt.form, opt.ncd_s_tol);
      o.ncd.present = true;
      o.ncd.tau = nr.tau;
      o.ncd.s_threshold = nr.s_threshold;
      o.ncd.bracketed = nr.bracketed;
    }
    rep.criteria.push_back(std::move(o));
  }

  if (opt.with_f && opt.family_selected(Family::F)) {
    for (const FResult& fr : eval_f_criteria(p, default_f_region(p, opt.f_k_cap))) {
      CriterionOutcome o;
      o.id = fr.id;
      o.family = Family::F;
      o.basis = MomentKind::intensity;
      o.order = fr.k + fr.l + 2;
      o.value = fr.value;
      o.normalized = fr.normalized;
      o.evaluable = fr.evaluable;
      o.violated = fr.violated;
      o.significant = fr.violated;
      rep.criteria.push_back(std::move(o));
    }
  }

  rep.provenance["kind"] = to_string(p.kind);
  rep.provenance["k_order"] = opt.k_order;
  rep.provenance["ordering_form"] =
      opt.form == SOrderingForm::exponential_noise ? "exponential_noise" : "laguerre_kernel";
  rep.provenance["ncd"] = opt.with_ncd;
  return rep;
}

/// Analysis of a photocount histogram: either directly on the empirical
/// photocount distribution, or on the EM-reconstructed photon-number
/// distribution. Optionally attaches bootstrap standard errors obtained by
/// re-running the same pipeline on multinomial resamples.
inline AnalysisReport analyze_histogram(const JointHistogram& hist,
                                        const AnalysisOptions& opt = {}) {
  hist.validate();
  if (opt.pipeline == AnalysisPipeline::em) {
    opt.det_s.validate();
    opt.det_i.validate();
  }

  EmOptions em_opt = opt.em;
  EmResult em_base;
  JointDistribution base;
  if (opt.pipeline == AnalysisPipeline::direct) {
    base = histogram_to_distribution(hist);
  } else {
    em_base = em_reconstruct(hist, opt.det_s, opt.det_i, em_opt);
    base = em_base.p;
    // Freeze the photon grid so bootstrap replicas with shorter photocount
    // tails reconstruct onto the same support.
    em_opt.n_max = std::max(em_base.n_max_s, em_base.n_max_i);
  }

  AnalysisReport rep = analyze_distribution(base, opt);
  rep.provenance["frames"] = hist.frames;
  rep.provenance["pipeline"] = to_string(opt.pipeline);
  if (opt.pipeline == AnalysisPipeline::em) {
    rep.provenance["em_iterations"] = em_base.iterations;
    rep.provenance["em_converged"] = em_base.converged;
    rep.provenance["em_hit_iteration_cap"] = em_base.hit_iteration_cap;
    rep.provenance["em_log_likelihood"] = em_base.log_likelihood;
  }

  if (opt.bootstrap_replicas > 0) {
    std::vector<std::pair<int, int>> f_cells =
        (opt.with_f && opt.family_selected(Family::F)) ? default_f_region(base, opt.f_k_cap)
                                                       : std::vector<std::pair<int, int>>{};
    auto statistic = [&](const JointHistogram& h) -> std::vector<double> {
      JointDistribution q = opt.pipeline == AnalysisPipeline::direct
                                ? histogram_to_distribution(h)
                                : em_reconstruct(h, opt.det_s, opt.det_i, em_opt).p;
      return detail::analysis_values(q, opt, f_cells);
    };
    BootstrapOptions bopt;
    bopt.replicas = opt.bootstrap_replicas;
    bopt.seed = opt.seed;
    bopt.threads = opt.threads;
    BootstrapSummary bs = bootstrap_stderr(hist, statistic, bopt);
    if (bs.stderrs.size() != rep.criteria.size())
      throw ConvergenceError("analyze_histogram: bootstrap row misalignment");
    for (std::size_t i = 0; i < bs.stderrs.size(); ++i) {
      CriterionOutcome& o = rep.criteria[i];
      o.stderr_value = bs.stderrs[i];
      if (std::isfinite(o.stderr_value))
        o.significant = o.value < -3.0 * o.stderr_value;
    }
    rep.provenance["bootstrap_replicas"] = opt.bootstrap_replicas;
    rep.provenance["bootstrap_used"] = bs.used;
    rep.provenance["bootstrap_failures"] = bs.failures;
    rep.provenance["seed"] = opt.seed;
  }
  return rep;
}

// --------------------------------------------------------------- reports

namespace detail {

inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;  // NaN/inf rendered as null
}

inline double number_or_nan(const nlohmann::json& j) {
  return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

inline std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline nlohmann::json report_to_json(const AnalysisReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const CriterionOutcome& o : rep.criteria) {
    nlohmann::json r{{"id", o.id},
                     {"family", to_string(o.family)},
                     {"basis", to_string(o.basis)},
                     {"order", o.order},
                     {"value", detail::json_number(o.value)},
                     {"normalized", detail::json_number(o.normalized)},
                     {"stderr", detail::json_number(o.stderr_value)},
                     {"evaluable", o.evaluable},
                     {"violated", o.violated},
                     {"significant", o.significant}};
    if (o.ncd.present)
      r["ncd"] = nlohmann::json{{"tau", detail::json_number(o.ncd.tau)},
                                {"s_threshold", detail::json_number(o.ncd.s_threshold)},
                                {"bracketed", o.ncd.bracketed}};
    else
      r["ncd"] = nullptr;
    rows.push_back(std::move(r));
  }
  return nlohmann::json{{"criteria", std::move(rows)}, {"provenance", rep.provenance}};
}

inline AnalysisReport report_from_json(const nlohmann::json& j) {
  AnalysisReport rep;
  try {
    for (const nlohmann::json& r : j.at("criteria")) {
      CriterionOutcome o;
      o.id = r.at("id").get<std::string>();
      o.family = family_from_string(r.at("family").get<std::string>());
      o.basis = r.at("basis").get<std::string>() == "photon" ? MomentKind::photon
                                                             : MomentKind::intensity;
      o.order = r.at("order").get<int>();
      o.value = detail::number_or_nan(r.at("value"));
      o.normalized = detail::number_or_nan(r.at("normalized"));
      o.stderr_value = detail::number_or_nan(r.at("stderr"));
      o.evaluable = r.at("evaluable").get<bool>();
      o.violated = r.at("violated").get<bool>();
      o.significant = r.at("significant").get<bool>();
      if (r.contains("ncd") && r.at("ncd").is_object()) {
        o.ncd.present = true;
        o.ncd.tau = detail::number_or_nan(r.at("ncd").at("tau"));
        o.ncd.s_threshold = detail::number_or_nan(r.at("ncd").at("s_threshold"));
        o.ncd.bracketed = r.at("ncd").at("bracketed").get<bool>();
      }
      rep.criteria.push_back(std::move(o));
    }
    if (j.contains("provenance")) rep.provenance = j.at("provenance");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("report JSON: ") + e.what());
  }
  return rep;
}

/// Flat table, one row per criterion.
inline std::string report_to_csv(const AnalysisReport& rep) {
  std::string out =
      "id,family,basis,order,value,normalized,stderr,evaluable,violated,significant,"
      "ncd_tau,ncd_s_threshold,ncd_bracketed\n";
  for (const CriterionOutcome& o : rep.criteria) {
    out += o.id;
    out += ',';
    out += to_string(o.family);
    out += ',';
    out += to_string(o.basis);
    out += ',';
    out += std::to_string(o.order);
    out += ',';
    out += detail::csv_number(o.value);
    out += ',';
    out += detail::csv_number(o.normalized);
    out += ',';
    out += detail::csv_number(o.stderr_value);
    out += ',';
    out += o.evaluable ? '1' : '0';
    out += ',';
    out += o.violated ? '1' : '0';
    out += ',';
    out += o.significant ? '1' : '0';
    out += ',';
    if (o.ncd.present) {
      out += detail::csv_number(o.ncd.tau);
      out += ',';
      out += detail::csv_number(o.ncd.s_threshold);
      out += ',';
      out += o.ncd.bracketed ? '1' : '0';
    } else {
      out += ",,";
    }
    out += '\n';
  }
  return out;
}

// ----------------------------------------------------- per-family series

namespace detail {

struct SeriesPoint {
  std::string label;
  double x = 0.0;
  double y = 0.0;      // normalized value
  double err = 0.0;    // stderr (0 when unknown)
  int line = 0;        // polyline index (used by the F scan lines)
  bool violated = false;
};

inline std::string fmt_svg(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Minimal static scatter/line plot; deterministic output.
inline std::string render_svg(const std::string& title,
                              const std::vector<std::string>& line_names,
                              const std::vector<SeriesPoint>& pts) {
  const double W = 760, H = 420, ml = 70, mr = 20, mt = 40, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const SeriesPoint& p : pts) {
    if (!std::isfinite(p.y)) continue;
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y - p.err);
    ymax = std::max(ymax, p.y + p.err);
  }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = -1;
    ymax = 1;
  }
  if (xmax - xmin < 1e-12) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  ymin = std::min(ymin, 0.0);
  ymax = std::max(ymax, 0.0);
  double ypad = 0.08 * (ymax - ymin + 1e-12);
  ymin -= ypad;
  ymax += ypad;
  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto sy = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

  static const char* palette[] = {"#1f6fb2", "#c23b22", "#3a923a", "#8a51a5", "#b8860b"};
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_svg(W) + "\" height=\"" +
       fmt_svg(H) + "\" viewBox=\"0 0 " + fmt_svg(W) + " " + fmt_svg(H) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt_svg(W / 2) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
       "text-anchor=\"middle\">" + title + "</text>\n";
  // axes and zero line
  s += "<line x1=\"" + fmt_svg(ml) + "\" y1=\"" + fmt_svg(H - mb) + "\" x2=\"" + fmt_svg(W - mr) +
       "\" y2=\"" + fmt_svg(H - mb) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + fmt_svg(ml) + "\" y1=\"" + fmt_svg(mt) + "\" x2=\"" + fmt_svg(ml) +
       "\" y2=\"" + fmt_svg(H - mb) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + fmt_svg(ml) + "\" y1=\"" + fmt_svg(sy(0.0)) + "\" x2=\"" + fmt_svg(W - mr) +
       "\" y2=\"" + fmt_svg(sy(0.0)) + "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    double yv = ymin + k * (ymax - ymin) / 4;
    s += "<text x=\"" + fmt_svg(ml - 8) + "\" y=\"" + fmt_svg(sy(yv) + 4) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" + fmt_svg(yv) +
         "</text>\n";
  }

  for (std::size_t li = 0; li < std::max<std::size_t>(line_names.size(), 1); ++li) {
    const char* col = palette[li % 5];
    std::string poly;
    for (const SeriesPoint& p : pts) {
      if (static_cast<std::size_t>(p.line) != li || !std::isfinite(p.y)) continue;
      poly += fmt_svg(sx(p.x)) + "," + fmt_svg(sy(p.y)) + " ";
    }
    if (!poly.empty())
      s += "<polyline fill=\"none\" stroke=\"" + std::string(col) + "\" points=\"" + poly +
           "\"/>\n";
    for (const SeriesPoint& p : pts) {
      if (static_cast<std::size_t>(p.line) != li || !std::isfinite(p.y)) continue;
      if (p.err > 0.0)
        s += "<line x1=\"" + fmt_svg(sx(p.x)) + "\" y1=\"" + fmt_svg(sy(p.y - p.err)) +
             "\" x2=\"" + fmt_svg(sx(p.x)) + "\" y2=\"" + fmt_svg(sy(p.y + p.err)) +
             "\" stroke=\"" + col + "\"/>\n";
      s += "<circle cx=\"" + fmt_svg(sx(p.x)) + "\" cy=\"" + fmt_svg(sy(p.y)) + "\" r=\"3\" fill=\"" +
           (p.violated ? std::string("#c23b22") : std::string(col)) + "\"/>\n";
    }
    if (li < line_names.size() && line_names.size() > 1) {
      double lx = ml + 10 + 130.0 * static_cast<double>(li);
      s += "<rect x=\"" + fmt_svg(lx) + "\" y=\"" + fmt_svg(mt - 8) +
           "\" width=\"10\" height=\"10\" fill=\"" + col + "\"/>\n";
      s += "<text x=\"" + fmt_svg(lx + 14) + "\" y=\"" + fmt_svg(mt + 1) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + line_names[li] + "</text>\n";
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace detail

/// Writes per-family series (CSV and optionally SVG) for a report; returns
/// the list of files created. The F family is rendered as its five scan
/// lines against the cell index k; other families against catalog position.
inline std::vector<std::string> write_report_series(const AnalysisReport& rep,
                                                    const std::string& dir,
                                                    const std::string& prefix,
                                                    bool with_svg = true) {
  std::map<std::string, std::vector<const CriterionOutcome*>> by_family;
  for (const CriterionOutcome& o : rep.criteria) by_family[to_string(o.family)].push_back(&o);

  std::vector<std::string> written;
  const std::string base = dir.empty() ? prefix : dir + "/" + prefix;

  for (const auto& [fam, rows] : by_family) {
    std::string csv;
    std::vector<detail::SeriesPoint> pts;
    std::vector<std::string> line_names;
    if (fam == "F") {
      csv = "line,k,l,id,value,normalized\n";
      line_names = {"(k,k)", "(k+1,k)", "(k+2,k)", "(k,k+1)", "(k,k+2)"};
      for (const CriterionOutcome* o : rows) {
        int k = 0, l = 0;
        std::sscanf(o->id.c_str(), "F_%d_%d_1", &k, &l);
        int line = k == l ? 0 : (k == l + 1 ? 1 : (k == l + 2 ? 2 : (l == k + 1 ? 3 : 4)));
        csv += line_names[line] + "," + std::to_string(k) + "," + std::to_string(l) + "," +
               o->id + "," + detail::csv_number(o->value) + "," +
               detail::csv_number(o->normalized) + "\n";
        detail::SeriesPoint p;
        p.label = o->id;
        p.x = std::min(k, l);
        p.y = o->normalized;
        p.err = 0.0;
        p.line = line;
        p.violated = o->violated;
        pts.push_back(p);
      }
    } else {
      csv = "index,id,order,value,normalized,stderr,ncd_tau\n";
      line_names = {fam};
      int idx = 0;
      for (const CriterionOutcome* o : rows) {
        csv += std::to_string(idx) + "," + o->id + "," + std::to_string(o->order) + "," +
               detail::csv_number(o->value) + "," + detail::csv_number(o->normalized) + "," +
               detail::csv_number(o->stderr_value) + "," +
               (o->ncd.present ? detail::csv_number(o->ncd.tau) : "") + "\n";
        detail::SeriesPoint p;
        p.label = o->id;
        p.x = idx++;
        p.y = o->normalized;
        p.err = std::isfinite(o->stderr_value) ? o->stderr_value : 0.0;
        p.line = 0;
        p.violated = o->violated;
        pts.push_back(p);
      }
    }
    std::string csv_path = base + fam + ".csv";
    detail::write_file(csv_path, csv);
    written.push_back(csv_path);
    if (with_svg) {
      std::string svg_path = base + fam + ".svg";
      std::string title = fam == "F" ? "F family, normalized, by scan line"
                                     : fam + " family, normalized values";
      detail::write_file(svg_path, detail::render_svg(title, line_names, pts));
      written.push_back(svg_path);
    }
  }
  return written;
}

}  // namespace twinmom
