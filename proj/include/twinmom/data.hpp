#pragma once

// Data model: joint click histograms, joint probability distributions,
// detector and source parameter bundles, and their file formats
// (CSV for histograms, JSON for everything).

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"

namespace twinmom {

// ------------------------------------------------------------------ types

/// What the axes of a joint distribution count.
enum class DistKind { photon_number, photocount };

inline std::string to_string(DistKind k) {
  return k == DistKind::photon_number ? "photon_number" : "photocount";
}
inline DistKind dist_kind_from_string(const std::string& s) {
  if (s == "photon_number") return DistKind::photon_number;
  if (s == "photocount") return DistKind::photocount;
  throw ValidationError("unknown distribution kind: " + s);
}

/// Raw joint photocount histogram: counts[c_s][c_i] over a fixed number of
/// acquisition frames. Trailing all-zero rows/columns are preserved.
struct JointHistogram {
  long long frames = 0;
  std::vector<std::vector<long long>> counts;

  std::size_t rows() const { return counts.size(); }
  std::size_t cols() const { return counts.empty() ? 0 : counts[0].size(); }

  long long total() const {
    long long t = 0;
    for (const auto& row : counts)
      for (long long c : row) t += c;
    return t;
  }

  void validate() const {
    if (frames <= 0) throw ValidationError("histogram: frames must be positive");
    if (counts.empty() || counts[0].empty())
      throw ValidationError("histogram: empty count matrix");
    for (const auto& row : counts) {
      if (row.size() != counts[0].size())
        throw ValidationError("histogram: ragged count matrix");
      for (long long c : row)
        if (c < 0) throw ValidationError("histogram: negative count");
    }
    if (total() > frames)
      throw ValidationError("histogram: total counts exceed frames");
  }
};

/// Normalized joint distribution p[n_s][n_i] (photon number or photocount).
struct JointDistribution {
  DistKind kind = DistKind::photocount;
  Matrix probs;

  void validate(double tol = 1e-9) const {
    if (probs.rows() == 0 || probs.cols() == 0)
      throw ValidationError("distribution: empty");
    for (std::size_t r = 0; r < probs.rows(); ++r)
      for (std::size_t c = 0; c < probs.cols(); ++c)
        if (probs(r, c) < 0.0)
          throw ValidationError("distribution: negative probability");
    double s = probs.sum();
    if (std::abs(s - 1.0) > tol)
      throw ValidationError("distribution: probabilities sum to " + std::to_string(s));
  }

  /// Clamps tiny negative round-off to zero and rescales to exact unit sum.
  void renormalize() {
    double s = 0.0;
    for (std::size_t r = 0; r < probs.rows(); ++r)
      for (std::size_t c = 0; c < probs.cols(); ++c) {
        if (probs(r, c) < 0.0) probs(r, c) = 0.0;
        s += probs(r, c);
      }
    if (s <= 0.0) throw ValidationError("distribution: zero total mass");
    probs.scale(1.0 / s);
  }
};

/// Multi-pixel on/off detector: pixel count, per-photon detection
/// efficiency, and mean dark-count probability per pixel per frame.
struct DetectorModel {
  long long pixels = 0;
  double efficiency = 0.0;
  double dark_mean_per_pixel = 0.0;

  void validate() const {
    if (pixels <= 0) throw ValidationError("detector: pixels must be positive");
    if (!(efficiency >= 0.0 && efficiency <= 1.0))
      throw ValidationError("detector: efficiency must be in [0,1]");
    if (!(dark_mean_per_pixel >= 0.0 && dark_mean_per_pixel < 1.0))
      throw ValidationError("detector: dark mean per pixel must be in [0,1)");
  }
};

/// Twin-beam source: paired component plus independent per-arm noise, each
/// a multimode thermal field with mode count M and mean photons per mode B.
struct TwinBeamModel {
  double M_p = 1.0, B_p = 0.0;  // paired component
  double M_s = 1.0, B_s = 0.0;  // signal-arm noise
  double M_i = 1.0, B_i = 0.0;  // idler-arm noise

  void validate() const {
    for (double m : {M_p, M_s, M_i})
      if (!(m > 0.0)) throw ValidationError("twin beam: mode counts must be positive");
    for (double b : {B_p, B_s, B_i})
      if (!(b >= 0.0)) throw ValidationError("twin beam: mean photons per mode must be >= 0");
  }

  double mean_pairs() const { return M_p * B_p; }
  double mean_noise_s() const { return M_s * B_s; }
  double mean_noise_i() const { return M_i * B_i; }
};

// ---------------------------------------------------------------- helpers

/// counts/frames, renormalized to unit sum; *deficit (optional) receives the
/// fraction of frames not accounted for by the count matrix.
inline JointDistribution histogram_to_distribution(const JointHistogram& h,
                                                   double* deficit = nullptr) {
  h.validate();
  JointDistribution d;
  d.kind = DistKind::photocount;
  d.probs = Matrix(h.rows(), h.cols());
  long long tot = h.total();
  if (tot <= 0) throw ValidationError("histogram: no counts");
  if (deficit) *deficit = 1.0 - static_cast<double>(tot) / static_cast<double>(h.frames);
  for (std::size_t r = 0; r < h.rows(); ++r)
    for (std::size_t c = 0; c < h.cols(); ++c)
      d.probs(r, c) = static_cast<double>(h.counts[r][c]) / static_cast<double>(tot);
  return d;
}

// --------------------------------------------------------------------- IO

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << body;
  if (!out) throw ValidationError("write failed: " + path);
}

inline long long parse_ll(std::string_view tok, const std::string& ctx) {
  long long v = 0;
  // trim spaces and a possible trailing '\r'
  std::size_t b = tok.find_first_not_of(" \t\r");
  std::size_t e = tok.find_last_not_of(" \t\r");
  if (b == std::string_view::npos) throw ValidationError("empty field in " + ctx);
  tok = tok.substr(b, e - b + 1);
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ValidationError("bad integer '" + std::string(tok) + "' in " + ctx);
  return v;
}

inline bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace detail

/// CSV layout: header line "frames,<N>"; then one line per signal
/// photocount c_s with comma-separated counts over idler photocounts c_i.
inline std::string histogram_to_csv(const JointHistogram& h) {
  std::ostringstream out;
  out << "frames," << h.frames << "\n";
  for (const auto& row : h.counts) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
  return out.str();
}

inline JointHistogram histogram_from_csv(const std::string& body) {
  JointHistogram h;
  std::istringstream in(body);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("histogram CSV: empty file");
  {
    auto comma = line.find(',');
    std::string key = line.substr(0, comma == std::string::npos ? line.size() : comma);
    if (key != "frames" || comma == std::string::npos)
      throw ValidationError("histogram CSV: first line must be 'frames,<count>'");
    h.frames = detail::parse_ll(line.substr(comma + 1), "frames header");
  }
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<long long> row;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      std::string_view tok(line.data() + pos,
                           (comma == std::string::npos ? line.size() : comma) - pos);
      row.push_back(detail::parse_ll(tok, "count row"));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    h.counts.push_back(std::move(row));
  }
  h.validate();
  return h;
}

inline nlohmann::json histogram_to_json(const JointHistogram& h) {
  return nlohmann::json{{"frames", h.frames}, {"counts", h.counts}};
}

inline JointHistogram histogram_from_json(const nlohmann::json& j) {
  JointHistogram h;
  try {
    h.frames = j.at("frames").get<long long>();
    h.counts = j.at("counts").get<std::vector<std::vector<long long>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("histogram JSON: ") + e.what());
  }
  h.validate();
  return h;
}

/// Loads a histogram from .json or CSV (decided by file extension).
inline JointHistogram load_histogram(const std::string& path) {
  std::string body = detail::read_file(path);
  if (detail::ends_with(path, ".json")) {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, true, true);
    return histogram_from_json(j);
  }
  return histogram_from_csv(body);
}

inline void save_histogram(const std::string& path, const JointHistogram& h) {
  h.validate();
  if (detail::ends_with(path, ".json"))
    detail::write_file(path, histogram_to_json(h).dump(2) + "\n");
  else
    detail::write_file(path, histogram_to_csv(h));
}

inline nlohmann::json distribution_to_json(const JointDistribution& d) {
  std::vector<std::vector<double>> rows(d.probs.rows(), std::vector<double>(d.probs.cols()));
  for (std::size_t r = 0; r < d.probs.rows(); ++r)
    for (std::size_t c = 0; c < d.probs.cols(); ++c) rows[r][c] = d.probs(r, c);
  return nlohmann::json{{"kind", to_string(d.kind)}, {"probs", rows}};
}

inline JointDistribution distribution_from_json(const nlohmann::json& j) {
  JointDistribution d;
  try {
    d.kind = dist_kind_from_string(j.at("kind").get<std::string>());
    auto rows = j.at("probs").get<std::vector<std::vector<double>>>();
    if (rows.empty() || rows[0].empty())
      throw ValidationError("distribution JSON: empty probs");
    d.probs = Matrix(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows[0].size())
        throw ValidationError("distribution JSON: ragged probs");
      for (std::size_t c = 0; c < rows[r].size(); ++c) d.probs(r, c) = rows[r][c];
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("distribution JSON: ") + e.what());
  }
  d.validate();
  return d;
}

inline JointDistribution load_distribution(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(detail::read_file(path), nullptr, true, true);
  return distribution_from_json(j);
}

inline void save_distribution(const std::string& path, const JointDistribution& d) {
  d.validate();
  detail::write_file(path, distribution_to_json(d).dump(2) + "\n");
}

inline DetectorModel detector_from_json(const nlohmann::json& j) {
  DetectorModel m;
  try {
    m.pixels = j.at("pixels").get<long long>();
    m.efficiency = j.at("efficiency").get<double>();
    m.dark_mean_per_pixel = j.at("dark_mean_per_pixel").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("detector JSON: ") + e.what());
  }
  m.validate();
  return m;
}

inline nlohmann::json detector_to_json(const DetectorModel& m) {
  return nlohmann::json{{"pixels", m.pixels},
                        {"efficiency", m.efficiency},
                        {"dark_mean_per_pixel", m.dark_mean_per_pixel}};
}

inline TwinBeamModel twinbeam_from_json(const nlohmann::json& j) {
  TwinBeamModel m;
  try {
    m.M_p = j.at("M_p").get<double>();
    m.B_p = j.at("B_p").get<double>();
    m.M_s = j.at("M_s").get<double>();
    m.B_s = j.at("B_s").get<double>();
    m.M_i = j.at("M_i").get<double>();
    m.B_i = j.at("B_i").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("twin beam JSON: ") + e.what());
  }
  m.validate();
  return m;
}

inline nlohmann::json twinbeam_to_json(const TwinBeamModel& m) {
  return nlohmann::json{{"M_p", m.M_p}, {"B_p", m.B_p}, {"M_s", m.M_s},
                        {"B_s", m.B_s}, {"M_i", m.M_i}, {"B_i", m.B_i}};
}

}  // namespace twinmom
