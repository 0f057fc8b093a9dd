#include "ntt/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ntt/assignment.hpp"
#include "ntt/kernels.hpp"

namespace ntt {

using nlohmann::json;

namespace {

std::string fmtd(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s, int line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::runtime_error("malformed number '" + s + "' at line " +
                             std::to_string(line_no));
  }
  return v;
}

int to_int(const std::string& s, int line_no) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::runtime_error("malformed integer '" + s + "' at line " +
                             std::to_string(line_no));
  }
  return static_cast<int>(v);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok |= item.key() == a;
    if (!ok) {
      throw std::runtime_error("config: unknown key '" + item.key() + "' in " +
                               where);
    }
  }
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["n_types"] = s.n_types;
  j["frame_count"] = s.frame_count;
  j["region"] = {{"width", s.region.width},   {"height", s.region.height},
                 {"w_min", s.region.w_min},   {"w_max", s.region.w_max},
                 {"h_min", s.region.h_min},   {"h_max", s.region.h_max}};
  j["sigma_v"] = s.sigma_v;
  j["sigma_r"] = s.sigma_r;
  j["p_detect"] = s.p_detect;
  j["clutter_rate"] = s.clutter_rate;
  j["rng_seed"] = s.rng_seed;
  json sched = json::array();
  for (const auto& per_type : s.schedule) {
    json lst = json::array();
    for (const auto& b : per_type) {
      std::vector<double> st(b.state0.data(), b.state0.data() + b.state0.size());
      lst.push_back({{"frame_birth", b.frame_birth},
                     {"frame_death", b.frame_death},
                     {"state", st}});
    }
    sched.push_back(lst);
  }
  j["schedule"] = sched;
  return j;
}

Scenario scenario_from_json(const json& j, const std::string& where) {
  check_keys(j,
             {"name", "n_types", "frame_count", "region", "sigma_v", "sigma_r",
              "p_detect", "clutter_rate", "rng_seed", "schedule"},
             where);
  Scenario s;
  if (j.contains("name")) s.name = j.at("name").get<std::string>();
  s.n_types = j.at("n_types").get<int>();
  s.frame_count = j.at("frame_count").get<int>();
  const json& rg = j.at("region");
  check_keys(rg, {"width", "height", "w_min", "w_max", "h_min", "h_max"},
             where + ".region");
  s.region.width = rg.at("width").get<double>();
  s.region.height = rg.at("height").get<double>();
  s.region.w_min = rg.at("w_min").get<double>();
  s.region.w_max = rg.at("w_max").get<double>();
  s.region.h_min = rg.at("h_min").get<double>();
  s.region.h_max = rg.at("h_max").get<double>();
  s.sigma_v = j.at("sigma_v").get<std::vector<double>>();
  s.sigma_r = j.at("sigma_r").get<std::vector<std::vector<double>>>();
  s.p_detect = j.at("p_detect").get<std::vector<std::vector<double>>>();
  s.clutter_rate = j.at("clutter_rate").get<std::vector<double>>();
  if (j.contains("rng_seed")) s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  for (const auto& per_type : j.at("schedule")) {
    std::vector<BirthSpec> lst;
    for (const auto& bj : per_type) {
      check_keys(bj, {"frame_birth", "frame_death", "state"},
                 where + ".schedule entry");
      BirthSpec b;
      b.frame_birth = bj.at("frame_birth").get<int>();
      b.frame_death = bj.at("frame_death").get<int>();
      const auto st = bj.at("state").get<std::vector<double>>();
      b.state0 = Eigen::Map<const Eigen::VectorXd>(st.data(), long(st.size()));
      lst.push_back(std::move(b));
    }
    s.schedule.push_back(std::move(lst));
  }
  s.validate();
  return s;
}

}  // namespace

DetectionFormat parse_detection_format(const std::string& name) {
  if (name == "sim_csv") return DetectionFormat::sim_csv;
  if (name == "mot") return DetectionFormat::mot;
  throw std::invalid_argument("unknown detection format: " + name +
                              " (expected sim_csv or mot)");
}

const char* detection_format_name(DetectionFormat f) {
  return f == DetectionFormat::mot ? "mot" : "sim_csv";
}

void RunConfig::validate() const {
  if (mode != "ntype" && mode != "independent" && mode != "detections" &&
      mode != "compare") {
    throw std::invalid_argument(
        "config: mode must be one of ntype, independent, detections, compare");
  }
  if (replicates < 1) {
    throw std::invalid_argument("config: replicates must be >= 1");
  }
  if (preset && scenario) {
    throw std::invalid_argument("config: give either preset or scenario, not both");
  }
  if (!preset && !scenario) {
    throw std::invalid_argument(
        "config: a preset or scenario is required for the tracking model");
  }
  if (!(filter.p_survival >= 0.0 && filter.p_survival <= 1.0)) {
    throw std::invalid_argument("config: filter.p_survival outside [0,1]");
  }
  if (!(filter.birth_weight >= 0.0)) {
    throw std::invalid_argument("config: filter.birth_weight must be >= 0");
  }
  if (!(filter.prune_threshold > 0.0)) {
    throw std::invalid_argument("config: filter.prune_threshold must be > 0");
  }
  if (!(filter.merge_threshold > 0.0)) {
    throw std::invalid_argument("config: filter.merge_threshold must be > 0");
  }
  if (!(filter.extract_threshold >= 0.0)) {
    throw std::invalid_argument("config: filter.extract_threshold must be >= 0");
  }
  if (filter.max_components < 1) {
    throw std::invalid_argument("config: filter.max_components must be >= 1");
  }
  if (!(metrics.ospa_p >= 1.0)) {
    throw std::invalid_argument("config: metrics.ospa_p must be >= 1");
  }
  if (!(metrics.ospa_c > 0.0)) {
    throw std::invalid_argument("config: metrics.ospa_c must be > 0");
  }
  if (!(metrics.gate > 0.0)) {
    throw std::invalid_argument("config: metrics.gate must be > 0");
  }
  resolved_scenario();  // validates scenario fields, names offenders
}

Scenario RunConfig::resolved_scenario() const {
  Scenario s = preset ? preset_scenario(*preset) : scenario.value();
  s.rng_seed = seed;
  s.validate();
  return s;
}

RunConfig parse_config(const std::string& text, const std::string& where) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error("config " + where + ": " + e.what());
  }
  check_keys(j,
             {"preset", "scenario", "detections", "truth", "seed", "mode",
              "replicates", "out_dir", "filter", "metrics"},
             where);
  RunConfig cfg;
  try {
    if (j.contains("preset")) cfg.preset = j.at("preset").get<std::string>();
    if (j.contains("scenario")) {
      cfg.scenario = scenario_from_json(j.at("scenario"), where + ".scenario");
    }
    if (j.contains("detections")) {
      const json& d = j.at("detections");
      check_keys(d, {"path", "format"}, where + ".detections");
      cfg.detections_path = d.at("path").get<std::string>();
      if (d.contains("format")) {
        cfg.detections_format =
            parse_detection_format(d.at("format").get<std::string>());
      }
    }
    if (j.contains("truth")) cfg.truth_path = j.at("truth").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("mode")) cfg.mode = j.at("mode").get<std::string>();
    if (j.contains("replicates")) cfg.replicates = j.at("replicates").get<int>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("filter")) {
      const json& f = j.at("filter");
      check_keys(f,
                 {"p_survival", "birth_weight", "prune_threshold",
                  "merge_threshold", "extract_threshold", "max_components"},
                 where + ".filter");
      if (f.contains("p_survival")) cfg.filter.p_survival = f.at("p_survival").get<double>();
      if (f.contains("birth_weight")) cfg.filter.birth_weight = f.at("birth_weight").get<double>();
      if (f.contains("prune_threshold")) cfg.filter.prune_threshold = f.at("prune_threshold").get<double>();
      if (f.contains("merge_threshold")) cfg.filter.merge_threshold = f.at("merge_threshold").get<double>();
      if (f.contains("extract_threshold")) cfg.filter.extract_threshold = f.at("extract_threshold").get<double>();
      if (f.contains("max_components")) cfg.filter.max_components = f.at("max_components").get<int>();
    }
    if (j.contains("metrics")) {
      const json& m = j.at("metrics");
      check_keys(m, {"ospa_p", "ospa_c", "gate"}, where + ".metrics");
      if (m.contains("ospa_p")) cfg.metrics.ospa_p = m.at("ospa_p").get<double>();
      if (m.contains("ospa_c")) cfg.metrics.ospa_c = m.at("ospa_c").get<double>();
      if (m.contains("gate")) cfg.metrics.gate = m.at("gate").get<double>();
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("config " + where + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.string());
}

std::string serialize_config(const RunConfig& cfg) {
  json j;
  if (cfg.preset) j["preset"] = *cfg.preset;
  if (cfg.scenario) j["scenario"] = scenario_to_json(*cfg.scenario);
  if (cfg.detections_path) {
    j["detections"] = {{"path", *cfg.detections_path},
                       {"format", detection_format_name(cfg.detections_format)}};
  }
  if (cfg.truth_path) j["truth"] = *cfg.truth_path;
  j["seed"] = cfg.seed;
  j["mode"] = cfg.mode;
  j["replicates"] = cfg.replicates;
  j["out_dir"] = cfg.out_dir;
  j["filter"] = {{"p_survival", cfg.filter.p_survival},
                 {"birth_weight", cfg.filter.birth_weight},
                 {"prune_threshold", cfg.filter.prune_threshold},
                 {"merge_threshold", cfg.filter.merge_threshold},
                 {"extract_threshold", cfg.filter.extract_threshold},
                 {"max_components", cfg.filter.max_components}};
  j["metrics"] = {{"ospa_p", cfg.metrics.ospa_p},
                  {"ospa_c", cfg.metrics.ospa_c},
                  {"gate", cfg.metrics.gate}};
  return j.dump(2) + "\n";
}

std::string serialize_scenario(const Scenario& scn) {
  return scenario_to_json(scn).dump(2) + "\n";
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("scenario: ") + e.what());
  }
  return scenario_from_json(j, "scenario");
}

void atomic_write_file(const std::filesystem::path& path,
                       const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open for writing: " + tmp.string());
    }
    out << content;
    out.flush();
    if (!out.good()) {
      out.close();
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string format_truth_csv(const std::vector<GroundTruthFrame>& frames) {
  std::string out = "frame,truth_id,type,cx,cy,vx,vy,w,h\n";
  for (const auto& f : frames) {
    for (const auto& t : f.targets) {
      out += std::to_string(f.frame) + "," + std::to_string(t.id) + "," +
             std::to_string(t.type);
      for (int k = 0; k < 6; ++k) out += "," + fmtd(t.state(k));
      out += "\n";
    }
  }
  return out;
}

std::vector<GroundTruthFrame> parse_truth_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "frame,truth_id,type,cx,cy,vx,vy,w,h") {
    throw std::runtime_error("truth csv: missing or wrong header");
  }
  std::vector<GroundTruthFrame> frames;
  int line_no = 1;
  int last_frame = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 9) {
      throw std::runtime_error("truth csv: expected 9 columns at line " +
                               std::to_string(line_no));
    }
    const int frame = to_int(f[0], line_no);
    if (frame < last_frame) {
      throw std::runtime_error("truth csv: non-monotone frame numbers at line " +
                               std::to_string(line_no));
    }
    if (frames.empty()) {
      frames.push_back({frame, {}});
    }
    while (frames.back().frame < frame) {
      frames.push_back({frames.back().frame + 1, {}});
    }
    TruthTarget t;
    t.id = to_int(f[1], line_no);
    t.type = to_int(f[2], line_no);
    t.state = Eigen::VectorXd(6);
    for (int k = 0; k < 6; ++k) t.state(k) = to_double(f[3 + k], line_no);
    frames.back().targets.push_back(std::move(t));
    last_frame = frame;
  }
  return frames;
}

std::vector<GroundTruthFrame> load_truth_csv(const std::filesystem::path& path) {
  try {
    return parse_truth_csv(read_file(path));
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string format_detections_csv(
    const std::vector<std::vector<DetectionFrame>>& frames,
    bool with_provenance) {
  std::string out = with_provenance
                        ? "frame,detector,cx,cy,w,h,provenance\n"
                        : "frame,detector,cx,cy,w,h\n";
  for (const auto& per_detector : frames) {
    for (const auto& d : per_detector) {
      for (std::size_t k = 0; k < d.measurements.size(); ++k) {
        const auto& z = d.measurements[k];
        out += std::to_string(d.frame) + "," + std::to_string(d.detector);
        for (int c = 0; c < 4; ++c) out += "," + fmtd(z(c));
        if (with_provenance) {
          if (k < d.provenance.size()) {
            const auto& p = d.provenance[k];
            switch (p.kind) {
              case Provenance::Kind::True:
                out += ",truth:" + std::to_string(p.truth_id);
                break;
              case Provenance::Kind::Confusion:
                out += ",confusion:" + std::to_string(p.source_type) + ":" +
                       std::to_string(p.truth_id);
                break;
              default:
                out += ",clutter";
            }
          } else {
            out += ",clutter";
          }
        }
        out += "\n";
      }
    }
  }
  return out;
}

std::vector<std::vector<DetectionFrame>> parse_detections_csv(
    const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("detections csv: missing header");
  }
  bool with_prov;
  if (line == "frame,detector,cx,cy,w,h") {
    with_prov = false;
  } else if (line == "frame,detector,cx,cy,w,h,provenance") {
    with_prov = true;
  } else {
    throw std::runtime_error("detections csv: wrong header");
  }

  struct Row {
    int frame;
    int detector;
    Eigen::VectorXd z;
    Provenance prov;
  };
  std::vector<Row> rows;
  int line_no = 1;
  int last_frame = -1;
  int max_detector = -1;
  const std::size_t want = with_prov ? 7 : 6;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != want) {
      throw std::runtime_error("detections csv: expected " +
                               std::to_string(want) + " columns at line " +
                               std::to_string(line_no));
    }
    Row r;
    r.frame = to_int(f[0], line_no);
    if (r.frame < last_frame) {
      throw std::runtime_error(
          "detections csv: non-monotone frame numbers at line " +
          std::to_string(line_no));
    }
    last_frame = r.frame;
    r.detector = to_int(f[1], line_no);
    if (r.detector < 0) {
      throw std::runtime_error("detections csv: negative detector at line " +
                               std::to_string(line_no));
    }
    max_detector = std::max(max_detector, r.detector);
    r.z = Eigen::VectorXd(4);
    for (int k = 0; k < 4; ++k) r.z(k) = to_double(f[2 + k], line_no);
    if (with_prov) {
      const std::string& p = f[6];
      if (p == "clutter") {
        r.prov = {Provenance::Kind::Clutter, -1, -1};
      } else if (p.rfind("truth:", 0) == 0) {
        r.prov = {Provenance::Kind::True, to_int(p.substr(6), line_no), -1};
      } else if (p.rfind("confusion:", 0) == 0) {
        const auto rest = p.substr(10);
        const auto colon = rest.find(':');
        if (colon == std::string::npos) {
          throw std::runtime_error("detections csv: bad provenance at line " +
                                   std::to_string(line_no));
        }
        r.prov = {Provenance::Kind::Confusion,
                  to_int(rest.substr(colon + 1), line_no),
                  to_int(rest.substr(0, colon), line_no)};
      } else {
        throw std::runtime_error("detections csv: bad provenance at line " +
                                 std::to_string(line_no));
      }
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) return {};

  const int first = rows.front().frame;
  const int last = rows.back().frame;
  const int n_det = std::max(max_detector + 1, 1);
  std::vector<std::vector<DetectionFrame>> out(
      static_cast<std::size_t>(last - first + 1));
  for (int fr = first; fr <= last; ++fr) {
    auto& per = out[static_cast<std::size_t>(fr - first)];
    per.resize(static_cast<std::size_t>(n_det));
    for (int j = 0; j < n_det; ++j) {
      per[static_cast<std::size_t>(j)].frame = fr;
      per[static_cast<std::size_t>(j)].detector = j;
    }
  }
  for (auto& r : rows) {
    auto& d = out[static_cast<std::size_t>(r.frame - first)]
                 [static_cast<std::size_t>(r.detector)];
    d.measurements.push_back(std::move(r.z));
    if (with_prov) d.provenance.push_back(r.prov);
  }
  return out;
}

std::vector<std::vector<DetectionFrame>> parse_mot(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  struct Row {
    int frame;
    Eigen::VectorXd z;
  };
  std::vector<Row> rows;
  int line_no = 0;
  int last_frame = std::numeric_limits<int>::min();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < 7) {
      throw std::runtime_error("mot: expected at least 7 columns at line " +
                               std::to_string(line_no));
    }
    Row r;
    r.frame = to_int(f[0], line_no);
    if (r.frame < last_frame) {
      throw std::runtime_error("mot: non-monotone frame numbers at line " +
                               std::to_string(line_no));
    }
    last_frame = r.frame;
    const double left = to_double(f[2], line_no);
    const double top = to_double(f[3], line_no);
    const double w = to_double(f[4], line_no);
    const double h = to_double(f[5], line_no);
    to_double(f[6], line_no);  // confidence, validated but unused
    r.z = Eigen::VectorXd(4);
    r.z << left + 0.5 * w, top + 0.5 * h, w, h;
    rows.push_back(std::move(r));
  }
  if (rows.empty()) return {};

  const int first = rows.front().frame;
  const int last = rows.back().frame;
  std::vector<std::vector<DetectionFrame>> out(
      static_cast<std::size_t>(last - first + 1));
  for (int fr = first; fr <= last; ++fr) {
    auto& per = out[static_cast<std::size_t>(fr - first)];
    per.resize(1);
    per[0].frame = fr;
    per[0].detector = 0;
  }
  for (auto& r : rows) {
    out[static_cast<std::size_t>(r.frame - first)][0].measurements.push_back(
        std::move(r.z));
  }
  return out;
}

std::vector<std::vector<DetectionFrame>> ingest_detections(
    const std::filesystem::path& path, DetectionFormat format) {
  const std::string text = read_file(path);
  try {
    return format == DetectionFormat::mot ? parse_mot(text)
                                          : parse_detections_csv(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string format_estimates_csv(const std::vector<EstimateRow>& rows) {
  std::string out = "frame,type,label,cx,cy,vx,vy,w,h,weight\n";
  for (const auto& r : rows) {
    out += std::to_string(r.frame) + "," + std::to_string(r.type) + "," +
           std::to_string(r.label);
    for (int k = 0; k < 6; ++k) out += "," + fmtd(r.state(k));
    out += "," + fmtd(r.weight) + "\n";
  }
  return out;
}

std::vector<EstimateRow> parse_estimates_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "frame,type,label,cx,cy,vx,vy,w,h,weight") {
    throw std::runtime_error("estimates csv: missing or wrong header");
  }
  std::vector<EstimateRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 10) {
      throw std::runtime_error("estimates csv: expected 10 columns at line " +
                               std::to_string(line_no));
    }
    EstimateRow r;
    r.frame = to_int(f[0], line_no);
    r.type = to_int(f[1], line_no);
    r.label = to_int(f[2], line_no);
    r.state = Eigen::VectorXd(6);
    for (int k = 0; k < 6; ++k) r.state(k) = to_double(f[3 + k], line_no);
    r.weight = to_double(f[9], line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<EstimateRow> load_estimates_csv(const std::filesystem::path& path) {
  try {
    return parse_estimates_csv(read_file(path));
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

double sign_test_p_value(int wins, int trials) {
  if (trials <= 0) return 1.0;
  if (wins < 0) wins = 0;
  if (wins > trials) return 0.0;
  double p = 0.0;
  for (int k = wins; k <= trials; ++k) {
    p += std::exp(std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) -
                  std::lgamma(trials - k + 1.0) -
                  trials * std::log(2.0));
  }
  return std::min(p, 1.0);
}

namespace {

struct FrameData {
  std::vector<std::vector<DetectionFrame>> detections;  // [frame][detector]
  std::vector<GroundTruthFrame> truth;
  bool has_truth = false;
};

FilterConfig make_filter_config(const Scenario& scn, const FilterSettings& fs) {
  FilterConfig fc = filter_config_for(scn, fs.p_survival);
  for (auto& t : fc.types) t.birth_weight = fs.birth_weight;
  fc.prune_threshold = fs.prune_threshold;
  fc.merge_threshold = fs.merge_threshold;
  fc.extract_threshold = fs.extract_threshold;
  fc.max_components = fs.max_components;
  return fc;
}

FrameData gather_frames(const RunConfig& cfg, const Scenario& scn) {
  FrameData fd;
  if (cfg.detections_path) {
    fd.detections = ingest_detections(*cfg.detections_path, cfg.detections_format);
    for (auto& per : fd.detections) {
      if (int(per.size()) > scn.n_types) {
        throw std::runtime_error(
            "detections file has more detector streams than the model has types");
      }
      const int frame = per.empty() ? 0 : per[0].frame;
      while (int(per.size()) < scn.n_types) {
        DetectionFrame d;
        d.frame = frame;
        d.detector = int(per.size());
        per.push_back(std::move(d));
      }
    }
    if (cfg.truth_path) {
      fd.truth = load_truth_csv(*cfg.truth_path);
      fd.has_truth = true;
    }
  } else {
    fd.truth = generate_truth(scn);
    fd.detections.reserve(fd.truth.size());
    for (const auto& tf : fd.truth) {
      fd.detections.push_back(simulate_detections(tf, scn));
    }
    fd.has_truth = true;
    if (cfg.truth_path) fd.truth = load_truth_csv(*cfg.truth_path);
  }
  return fd;
}

struct EngineResult {
  std::vector<EstimateRow> rows;
  MetricSeries series;
  RunSummary summary;
};

// Shared tracking/scoring loop used by run_tracking and compare_methods.
EngineResult run_engine(const FilterConfig& base_fc, const FrameData& fd,
                        const std::string& mode, const MetricSettings& ms) {
  const int n = base_fc.n_types;
  const bool raw = mode == "detections";
  std::optional<NTypeFilter> filter;
  if (!raw) {
    filter.emplace(mode == "independent" ? zero_confusion(base_fc) : base_fc);
  }
  std::vector<TrackLabeler> labelers;
  labelers.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labelers.emplace_back(i, ms.gate);

  std::map<int, const GroundTruthFrame*> truth_by_frame;
  for (const auto& tf : fd.truth) truth_by_frame[tf.frame] = &tf;

  EngineResult er;
  er.summary.mode = mode;
  er.summary.has_metrics = fd.has_truth;
  std::vector<std::vector<TruthPoint>> truth_pts;
  std::vector<std::vector<LabeledPoint>> labeled_pts;
  long long wall_ns = 0;
  int disc_correct = 0;
  int disc_considered = 0;
  double ospa_sum = 0.0;
  double card_sum = 0.0;
  int metric_frames = 0;

  for (const auto& per_detector : fd.detections) {
    const int frame_no = per_detector.empty() ? 0 : per_detector[0].frame;
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<std::vector<TypedEstimate>> ests;
    if (raw) {
      ests.resize(static_cast<std::size_t>(n));
      for (const auto& d : per_detector) {
        auto& lst = ests[static_cast<std::size_t>(d.detector)];
        for (const auto& z : d.measurements) {
          TypedEstimate e;
          e.type_index = d.detector;
          e.mean = Eigen::VectorXd::Zero(6);
          e.mean(0) = z(0);
          e.mean(1) = z(1);
          e.mean(4) = z(2);
          e.mean(5) = z(3);
          e.weight = 1.0;
          lst.push_back(std::move(e));
        }
        for (auto& e : lst) e.extracted_count = int(lst.size());
      }
    } else {
      ests = filter->step(per_detector);
    }

    std::vector<LabeledPoint> frame_labeled;
    std::vector<TypedPoint> est_typed;
    for (int i = 0; i < n; ++i) {
      const auto labeled =
          labelers[static_cast<std::size_t>(i)].update(
              ests[static_cast<std::size_t>(i)], frame_no);
      for (const auto& le : labeled) {
        EstimateRow row;
        row.frame = frame_no;
        row.type = i;
        row.label = le.label;
        row.state = le.estimate.mean;
        row.weight = le.estimate.weight;
        er.rows.push_back(std::move(row));
        frame_labeled.push_back(
            {le.label, le.estimate.mean.head<2>()});
        est_typed.push_back({i, le.estimate.mean.head<2>()});
      }
    }
    wall_ns += std::chrono::duration_cast<std::chrono::nanoseconds>(
                   std::chrono::steady_clock::now() - t0)
                   .count();

    if (fd.has_truth) {
      const auto it = truth_by_frame.find(frame_no);
      std::vector<TypedPoint> truth_typed;
      std::vector<TruthPoint> frame_truth;
      PointSet truth_pool, est_pool;
      if (it != truth_by_frame.end()) {
        for (const auto& t : it->second->targets) {
          const Eigen::Vector2d pos = t.state.head<2>();
          truth_typed.push_back({t.type, pos});
          frame_truth.push_back({t.id, pos});
          truth_pool.push_back(pos);
        }
      }
      for (const auto& e : est_typed) est_pool.push_back(e.pos);

      MetricRecord rec;
      rec.frame = frame_no;
      rec.ospa = ospa(truth_pool, est_pool, ms.ospa_p, ms.ospa_c);
      rec.card_truth = int(truth_pool.size());
      rec.card_est = int(est_pool.size());
      rec.card_err = cardinality_error(rec.card_truth, rec.card_est);
      const auto disc = discrimination_rate(est_typed, truth_typed, ms.gate);
      rec.disc_rate = disc.rate;
      er.series.push_back(rec);

      disc_correct += disc.correct;
      disc_considered += disc.considered;
      ospa_sum += rec.ospa;
      card_sum += rec.card_err;
      ++metric_frames;
      truth_pts.push_back(std::move(frame_truth));
      labeled_pts.push_back(std::move(frame_labeled));
    }
  }

  er.summary.frames = int(fd.detections.size());
  if (metric_frames > 0) {
    er.summary.mean_ospa = ospa_sum / metric_frames;
    er.summary.mean_card_error = card_sum / metric_frames;
  }
  er.summary.discrimination =
      disc_considered > 0 ? double(disc_correct) / disc_considered : 1.0;
  if (fd.has_truth) {
    er.summary.label_switch = label_switch_rate(truth_pts, labeled_pts, ms.gate);
  }
  if (!fd.detections.empty()) {
    er.summary.wall_ms_per_frame =
        double(wall_ns) * 1e-6 / double(fd.detections.size());
  }
  return er;
}

json summary_to_json(const RunSummary& s) {
  json j;
  j["mode"] = s.mode;
  j["frames"] = s.frames;
  j["has_metrics"] = s.has_metrics;
  j["mean_ospa"] = s.mean_ospa;
  j["mean_card_error"] = s.mean_card_error;
  j["discrimination"] = s.discrimination;
  j["label_switch"] = s.label_switch;
  j["wall_ms_per_frame"] = s.wall_ms_per_frame;
  j["kernel_backend"] = kernels::backend_name(kernels::active_backend());
  return j;
}

}  // namespace

RunArtifacts run_tracking(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.mode == "compare") {
    throw std::invalid_argument(
        "run_tracking: compare mode is handled by compare_methods");
  }
  const Scenario scn = cfg.resolved_scenario();
  const FilterConfig fc = make_filter_config(scn, cfg.filter);
  const FrameData fd = gather_frames(cfg, scn);
  EngineResult er = run_engine(fc, fd, cfg.mode, cfg.metrics);

  const std::filesystem::path out_dir(cfg.out_dir);
  RunArtifacts art;
  art.summary = er.summary;
  art.series = std::move(er.series);
  art.estimates_path = out_dir / "estimates.csv";
  atomic_write_file(art.estimates_path, format_estimates_csv(er.rows));
  if (fd.has_truth) {
    art.metrics_path = out_dir / "metrics.csv";
    atomic_write_file(art.metrics_path, format_metrics_csv(art.series));
  }
  art.summary_path = out_dir / "summary.json";
  atomic_write_file(art.summary_path, summary_to_json(art.summary).dump(2) + "\n");
  return art;
}

RunArtifacts evaluate_estimates(const std::filesystem::path& estimates_path,
                                const std::filesystem::path& truth_path,
                                const MetricSettings& ms,
                                const std::filesystem::path& out_dir) {
  const auto rows = load_estimates_csv(estimates_path);
  const auto truth = load_truth_csv(truth_path);

  std::map<int, std::vector<const EstimateRow*>> est_by_frame;
  for (const auto& r : rows) est_by_frame[r.frame].push_back(&r);
  std::map<int, const GroundTruthFrame*> truth_by_frame;
  for (const auto& tf : truth) truth_by_frame[tf.frame] = &tf;

  std::vector<int> frames;
  for (const auto& [f, unused] : truth_by_frame) frames.push_back(f);
  for (const auto& [f, unused] : est_by_frame) {
    if (!truth_by_frame.count(f)) frames.push_back(f);
  }
  std::sort(frames.begin(), frames.end());

  RunArtifacts art;
  art.summary.mode = "evaluate";
  art.summary.has_metrics = true;
  double ospa_sum = 0.0, card_sum = 0.0;
  int disc_correct = 0, disc_considered = 0;
  for (int f : frames) {
    PointSet truth_pool, est_pool;
    std::vector<TypedPoint> truth_typed, est_typed;
    if (const auto it = truth_by_frame.find(f); it != truth_by_frame.end()) {
      for (const auto& t : it->second->targets) {
        const Eigen::Vector2d pos = t.state.head<2>();
        truth_pool.push_back(pos);
        truth_typed.push_back({t.type, pos});
      }
    }
    if (const auto it = est_by_frame.find(f); it != est_by_frame.end()) {
      for (const auto* r : it->second) {
        const Eigen::Vector2d pos = r->state.head<2>();
        est_pool.push_back(pos);
        est_typed.push_back({r->type, pos});
      }
    }
    MetricRecord rec;
    rec.frame = f;
    rec.ospa = ospa(truth_pool, est_pool, ms.ospa_p, ms.ospa_c);
    rec.card_truth = int(truth_pool.size());
    rec.card_est = int(est_pool.size());
    rec.card_err = cardinality_error(rec.card_truth, rec.card_est);
    const auto disc = discrimination_rate(est_typed, truth_typed, ms.gate);
    rec.disc_rate = disc.rate;
    art.series.push_back(rec);
    ospa_sum += rec.ospa;
    card_sum += rec.card_err;
    disc_correct += disc.correct;
    disc_considered += disc.considered;
  }
  art.summary.frames = int(frames.size());
  if (!frames.empty()) {
    art.summary.mean_ospa = ospa_sum / double(frames.size());
    art.summary.mean_card_error = card_sum / double(frames.size());
  }
  art.summary.discrimination =
      disc_considered > 0 ? double(disc_correct) / disc_considered : 1.0;

  art.metrics_path = out_dir / "metrics.csv";
  atomic_write_file(art.metrics_path, format_metrics_csv(art.series));
  art.summary_path = out_dir / "summary.json";
  atomic_write_file(art.summary_path, summary_to_json(art.summary).dump(2) + "\n");
  return art;
}

CompareResult compare_methods(const RunConfig& cfg) {
  cfg.validate();
  const Scenario base = cfg.resolved_scenario();
  const FilterConfig fc = make_filter_config(base, cfg.filter);

  CompareResult res;
  const std::vector<std::string> modes = {"ntype", "independent", "detections"};
  for (const auto& m : modes) {
    MethodStats st;
    st.mode = m;
    res.methods.push_back(st);
  }

  std::vector<double> disc_sum(modes.size(), 0.0), wall_sum(modes.size(), 0.0);
  std::string table = "replicate,mode,mean_ospa,mean_card_err,discrimination\n";
  for (int rep = 0; rep < cfg.replicates; ++rep) {
    Scenario scn = base;
    scn.rng_seed = derive_seed(cfg.seed, 4, static_cast<std::uint64_t>(rep));
    FrameData fd;
    fd.truth = generate_truth(scn);
    fd.detections.reserve(fd.truth.size());
    for (const auto& tf : fd.truth) {
      fd.detections.push_back(simulate_detections(tf, scn));
    }
    fd.has_truth = true;

    for (std::size_t mi = 0; mi < modes.size(); ++mi) {
      const auto er = run_engine(fc, fd, modes[mi], cfg.metrics);
      auto& st = res.methods[mi];
      st.ospa.push_back(er.summary.mean_ospa);
      st.card_err.push_back(er.summary.mean_card_error);
      disc_sum[mi] += er.summary.discrimination;
      wall_sum[mi] += er.summary.wall_ms_per_frame;
      table += std::to_string(rep) + "," + modes[mi] + "," +
               fmtd(er.summary.mean_ospa) + "," +
               fmtd(er.summary.mean_card_error) + "," +
               fmtd(er.summary.discrimination) + "\n";
    }
  }

  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    auto& st = res.methods[mi];
    st.mean_ospa =
        std::accumulate(st.ospa.begin(), st.ospa.end(), 0.0) / cfg.replicates;
    st.mean_card_error =
        std::accumulate(st.card_err.begin(), st.card_err.end(), 0.0) /
        cfg.replicates;
    st.discrimination = disc_sum[mi] / cfg.replicates;
    st.wall_ms_per_frame = wall_sum[mi] / cfg.replicates;
  }

  auto paired = [&](const std::vector<double>& a, const std::vector<double>& b) {
    int wins = 0, trials = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k] == b[k]) continue;
      ++trials;
      if (a[k] < b[k]) ++wins;
    }
    return sign_test_p_value(wins, trials);
  };
  res.p_ospa_ntype_vs_independent =
      paired(res.methods[0].ospa, res.methods[1].ospa);
  res.p_ospa_independent_vs_detections =
      paired(res.methods[1].ospa, res.methods[2].ospa);
  res.p_card_ntype_vs_independent =
      paired(res.methods[0].card_err, res.methods[1].card_err);
  res.p_card_independent_vs_detections =
      paired(res.methods[1].card_err, res.methods[2].card_err);

  const std::filesystem::path out_dir(cfg.out_dir);
  res.table_path = out_dir / "comparison.csv";
  atomic_write_file(res.table_path, table);

  json j;
  j["replicates"] = cfg.replicates;
  json methods = json::array();
  for (const auto& st : res.methods) {
    methods.push_back({{"mode", st.mode},
                       {"mean_ospa", st.mean_ospa},
                       {"mean_card_error", st.mean_card_error},
                       {"discrimination", st.discrimination},
                       {"wall_ms_per_frame", st.wall_ms_per_frame}});
  }
  j["methods"] = methods;
  j["sign_tests"] = {
      {"ospa_ntype_vs_independent", res.p_ospa_ntype_vs_independent},
      {"ospa_independent_vs_detections", res.p_ospa_independent_vs_detections},
      {"card_ntype_vs_independent", res.p_card_ntype_vs_independent},
      {"card_independent_vs_detections", res.p_card_independent_vs_detections}};
  res.summary_path = out_dir / "comparison_summary.json";
  atomic_write_file(res.summary_path, j.dump(2) + "\n");
  return res;
}

}  // namespace ntt
