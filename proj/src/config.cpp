#include "nvpol/config.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nvpol/io.hpp"
#include "nvpol/parallel.hpp"
#include "nvpol/unitary.hpp"

namespace nvpol {

using nlohmann::json;

const char* version_string() { return "nvpol 1.0.0"; }

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error([&] {
        std::string all = "configuration invalid:";
        for (const auto& e : errors) all += "\n  - " + e;
        return all;
      }()),
      errors_(std::move(errors)) {}

namespace {

// ---------------------------------------------------------------------
// INI-style text -> json
// ---------------------------------------------------------------------

json parse_scalar(const std::string& raw) {
  std::string s = raw;
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
  s = s.substr(b);
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.find(',') != std::string::npos) {
    json arr = json::array();
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) arr.push_back(parse_scalar(item));
    return arr;
  }
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end && *end == '\0' && end != s.c_str()) return v;
  return s;
}

json ini_to_json(const std::string& text) {
  json root = json::object();
  json* section = &root;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  std::vector<std::string> errors;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back("line " + std::to_string(lineno) +
                         ": unterminated section header");
        continue;
      }
      const std::string name = line.substr(1, line.size() - 2);
      root[name] = json::object();
      section = &root[name];
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) +
                       ": expected key = value");
      continue;
    }
    std::string key = line.substr(0, eq);
    key = key.substr(0, key.find_last_not_of(" \t") + 1);
    (*section)[key] = parse_scalar(line.substr(eq + 1));
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return root;
}

// ---------------------------------------------------------------------
// json -> RunConfig with strict validation
// ---------------------------------------------------------------------

class Extractor {
 public:
  Extractor(const json& j, std::string section, std::vector<std::string>& err)
      : obj_(j), section_(std::move(section)), errors_(err) {}

  ~Extractor() {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!taken_.count(it.key()))
        errors_.push_back(section_ + ": unknown key '" + it.key() + "'");
  }

  bool has(const std::string& key) {
    return obj_.contains(key);
  }

  // Marks a nested section as consumed; content is validated separately.
  void subsection(const std::string& key) {
    taken_.insert(key);
    if (obj_.contains(key) && !obj_.at(key).is_object())
      errors_.push_back(section_ + "." + key + ": expected a section");
  }

  double num(const std::string& key, double fallback,
             double lo = -std::numeric_limits<double>::infinity(),
             double hi = std::numeric_limits<double>::infinity()) {
    taken_.insert(key);
    if (!obj_.contains(key)) return fallback;
    const json& v = obj_.at(key);
    double x = 0;
    if (v.is_number()) {
      x = v.get<double>();
    } else if (v.is_string() && v.get<std::string>() == "inf") {
      x = std::numeric_limits<double>::infinity();
    } else {
      errors_.push_back(section_ + "." + key + ": expected a number");
      return fallback;
    }
    if (x < lo || x > hi) {
      std::ostringstream os;
      os << section_ << "." << key << ": value " << x << " outside ["
         << lo << ", " << hi << "]";
      errors_.push_back(os.str());
      return fallback;
    }
    return x;
  }

  int integer(const std::string& key, int fallback, int lo, int hi) {
    const double x = num(key, fallback, lo, hi);
    if (x != std::floor(x)) {
      errors_.push_back(section_ + "." + key + ": expected an integer");
      return fallback;
    }
    return static_cast<int>(x);
  }

  bool flag(const std::string& key, bool fallback) {
    taken_.insert(key);
    if (!obj_.contains(key)) return fallback;
    const json& v = obj_.at(key);
    if (v.is_boolean()) return v.get<bool>();
    errors_.push_back(section_ + "." + key + ": expected true or false");
    return fallback;
  }

  std::string str(const std::string& key, const std::string& fallback) {
    taken_.insert(key);
    if (!obj_.contains(key)) return fallback;
    const json& v = obj_.at(key);
    if (v.is_string()) return v.get<std::string>();
    errors_.push_back(section_ + "." + key + ": expected a string");
    return fallback;
  }

  std::vector<double> numbers(const std::string& key,
                              std::vector<double> fallback, double lo,
                              double hi) {
    taken_.insert(key);
    if (!obj_.contains(key)) return fallback;
    const json& v = obj_.at(key);
    json arr = v.is_array() ? v : json::array({v});
    std::vector<double> out;
    for (const auto& item : arr) {
      if (!item.is_number()) {
        errors_.push_back(section_ + "." + key + ": expected numbers");
        return fallback;
      }
      const double x = item.get<double>();
      if (x < lo || x > hi) {
        errors_.push_back(section_ + "." + key + ": entry outside bounds");
        return fallback;
      }
      out.push_back(x);
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key,
                                   std::vector<std::string> fallback) {
    taken_.insert(key);
    if (!obj_.contains(key)) return fallback;
    const json& v = obj_.at(key);
    json arr = v.is_array() ? v : json::array({v});
    std::vector<std::string> out;
    for (const auto& item : arr) {
      if (!item.is_string()) {
        errors_.push_back(section_ + "." + key + ": expected names");
        return fallback;
      }
      out.push_back(item.get<std::string>());
    }
    return out;
  }

 private:
  const json& obj_;
  std::string section_;
  std::vector<std::string>& errors_;
  std::set<std::string> taken_;
};

const json& section(const json& root, const char* name) {
  static const json empty = json::object();
  if (!root.contains(name)) return empty;
  return root.at(name);
}

Study parse_study(const std::string& s, std::vector<std::string>& errors) {
  if (s == "evolve") return Study::Evolve;
  if (s == "steady") return Study::Steady;
  if (s == "sweep") return Study::Sweep;
  if (s == "matchfield") return Study::Matchfield;
  if (s == "pumpscan") return Study::Pumpscan;
  if (s == "couplingscan") return Study::Couplingscan;
  if (s == "illum") return Study::Illum;
  errors.push_back(
      "study: '" + s +
      "' is not one of evolve|steady|sweep|matchfield|pumpscan|"
      "couplingscan|illum");
  return Study::Sweep;
}

std::optional<Site> parse_site(const std::string& s) {
  if (s == "nv") return Site::Nv;
  if (s == "n_nv") return Site::NvNitrogen;
  if (s == "p1") return Site::P1;
  if (s == "n_p1") return Site::P1Nitrogen;
  if (s == "c13") return Site::Carbon;
  return std::nullopt;
}

const char* site_token(Site s) {
  switch (s) {
    case Site::Nv: return "nv";
    case Site::NvNitrogen: return "n_nv";
    case Site::P1: return "p1";
    case Site::P1Nitrogen: return "n_p1";
    case Site::Carbon: return "c13";
  }
  return "?";
}

}  // namespace

RunConfig config_from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError({std::string("json parse error: ") + e.what()});
  }
  if (!root.is_object()) throw ConfigError({"top level must be an object"});

  std::vector<std::string> errors;
  RunConfig cfg;
  {
    Extractor top(root, "top-level", errors);
    cfg.study = parse_study(top.str("study", ""), errors);
    const std::string var = top.str("variant", "nv-carbon");
    if (var == "nv-carbon") {
      cfg.variant = ModelVariant::NvCoupledCarbon;
    } else if (var == "p1-carbon") {
      cfg.variant = ModelVariant::P1CoupledCarbon;
    } else {
      errors.push_back("variant: expected nv-carbon or p1-carbon");
    }
    cfg.out_dir = top.str("out_dir", "out");
    const auto tokens =
        top.strings("register", {"nv", "n_nv", "p1", "n_p1", "c13"});
    for (const auto& t : tokens) {
      const auto site = parse_site(t);
      if (!site) {
        errors.push_back("register: unknown site '" + t + "'");
      } else {
        cfg.sites.push_back(*site);
      }
    }
    for (const char* name : {"params", "t1", "sweep", "evolve", "steady",
                             "matchfield", "pumpscan", "couplingscan",
                             "illum"})
      top.subsection(name);
  }

  {
    Extractor p(section(root, "params"), "params", errors);
    ModelParams& m = cfg.params;
    m.D = p.num("D_MHz", m.D, 1.0, 1e5);
    m.gamma_e = p.num("gamma_e_MHz_per_mT", m.gamma_e, 0.1, 100.0);
    m.gamma_C = p.num("gamma_C_MHz_per_mT", m.gamma_C, -1.0, 1.0);
    m.gamma_N = p.num("gamma_N_MHz_per_mT", m.gamma_N, -1.0, 1.0);
    m.Q_nv = p.num("Q_nv_MHz", m.Q_nv, -100.0, 100.0);
    m.Q_p1 = p.num("Q_p1_MHz", m.Q_p1, -100.0, 100.0);
    const double ac_zz = p.num("A_C_zz_MHz", m.A_C(2, 2), -500.0, 500.0);
    const double ac_zx = p.num("A_C_zx_MHz", ac_zz / 4.0, -500.0, 500.0);
    const double ac_perp = p.num("A_C_perp_MHz", 0.0, -500.0, 500.0);
    m.A_C = ModelParams::axial_tensor(ac_perp, ac_zz);
    m.A_C(0, 2) = m.A_C(2, 0) = ac_zx;
    const double an_zz = p.num("A_N_zz_MHz", m.A_N(2, 2), -500.0, 500.0);
    const double an_perp = p.num("A_N_perp_MHz", m.A_N(0, 0), -500.0, 500.0);
    m.A_N = ModelParams::axial_tensor(an_perp, an_zz);
    const double an1_par = p.num("A_N1_par_MHz", m.A_N1(2, 2), -500.0, 500.0);
    const double an1_perp =
        p.num("A_N1_perp_MHz", m.A_N1(0, 0), -500.0, 500.0);
    m.A_N1 = ModelParams::axial_tensor(an1_perp, an1_par);
    const double ac1_zz = p.num("A_C1_zz_MHz", m.A_C1(2, 2), -500.0, 500.0);
    const double ac1_perp =
        p.num("A_C1_perp_MHz", m.A_C1(0, 0), -500.0, 500.0);
    const double ac1_zx = p.num("A_C1_zx_MHz", m.A_C1(0, 2), -500.0, 500.0);
    m.A_C1 = ModelParams::axial_tensor(ac1_perp, ac1_zz);
    m.A_C1(0, 2) = m.A_C1(2, 0) = ac1_zx;
    m.d_nvp1 = p.num("d_nvp1_MHz", m.d_nvp1, 0.0, 100.0);
    const std::string form = p.str("nvp1_form", "cross-flip");
    if (form == "ising") {
      m.nvp1_form = DipolarForm::Ising;
    } else if (form == "cross-flip") {
      m.nvp1_form = DipolarForm::SecularCrossFlip;
    } else if (form == "point-dipole") {
      m.nvp1_form = DipolarForm::PointDipole;
    } else {
      errors.push_back(
          "params.nvp1_form: expected ising|cross-flip|point-dipole");
    }
    m.dipole_zenith_deg = p.num("dipole_zenith_deg", m.dipole_zenith_deg,
                                0.0, 180.0);
    m.dipole_azimuth_deg = p.num("dipole_azimuth_deg", m.dipole_azimuth_deg,
                                 -360.0, 360.0);
    m.B = p.num("B_mT", m.B, 0.0, 1e4);
    m.theta_deg = p.num("theta_deg", m.theta_deg, 0.0, 90.0);
    m.p1_zenith_deg = p.num("p1_zenith_deg", m.p1_zenith_deg, 0.0, 180.0);
    m.p1_azimuth_deg = p.num("p1_azimuth_deg", m.p1_azimuth_deg, -360.0,
                             360.0);
    m.deltaT = p.num("deltaT_K", m.deltaT, -300.0, 1000.0);
    m.dD_dT = p.num("dD_dT_MHz_per_K", m.dD_dT, -10.0, 10.0);
  }
  {
    Extractor t(section(root, "t1"), "t1", errors);
    cfg.t1.nv = t.num("nv_us", cfg.t1.nv, 1e-6);
    cfg.t1.p1 = t.num("p1_us", cfg.t1.p1, 1e-6);
    cfg.t1.carbon = t.num("c_us", cfg.t1.carbon, 1e-6);
    cfg.t1.n_nv = t.num("n_nv_us", cfg.t1.n_nv, 1e-6);
    cfg.t1.n_p1 = t.num("n_p1_us", cfg.t1.n_p1, 1e-6);
  }
  {
    Extractor s(section(root, "sweep"), "sweep", errors);
    SweepConfig& w = cfg.sweep;
    w.B_min_mT = s.num("B_min_mT", w.B_min_mT, 0.0, 1e4);
    w.B_max_mT = s.num("B_max_mT", w.B_max_mT, 0.0, 1e4);
    w.n_points = s.integer("n_points", w.n_points, 2, 2000000);
    w.t_proj_us = s.num("t_proj_us", w.t_proj_us, 1e-3, 1e7);
    w.adaptive_t_proj = s.flag("adaptive_t_proj", w.adaptive_t_proj);
    w.max_t_proj_us = s.num("max_t_proj_us", w.max_t_proj_us, 1e-3, 1e8);
    w.conv_width_mT = s.num("conv_width_mT", w.conv_width_mT, 0.0, 100.0);
    w.weight_parallel = s.num("weight_parallel", w.weight_parallel, 0.0,
                              1e3);
    w.weight_misaligned = s.num("weight_misaligned", w.weight_misaligned,
                                0.0, 1e3);
    w.curve_points = s.integer("curve_points", w.curve_points, 0, 2000000);
    w.n_nv_level0 = s.flag("n_nv_level0", w.n_nv_level0);
    if (w.B_min_mT >= w.B_max_mT)
      errors.push_back("sweep: B_min_mT must be below B_max_mT");
  }
  {
    Extractor e(section(root, "evolve"), "evolve", errors);
    EvolveConfig& v = cfg.evolve;
    v.t_max_us = e.num("t_max_us", v.t_max_us, 1e-6, 1e9);
    v.n_times = e.integer("n_times", v.n_times, 2, 1000000);
    v.log_times = e.flag("log_times", v.log_times);
    v.lindblad = e.flag("lindblad", v.lindblad);
    v.pump_rate_mhz = e.num("pump_rate_MHz", v.pump_rate_mhz, 0.0, 1e3);
    v.use_t1 = e.flag("use_t1", v.use_t1);
    v.fields_mT = e.numbers("fields_mT", v.fields_mT, 0.0, 1e4);
    v.n_nv_level0 = e.flag("n_nv_level0", v.n_nv_level0);
  }
  {
    Extractor s(section(root, "steady"), "steady", errors);
    cfg.steady.pump_rate_mhz =
        s.num("pump_rate_MHz", cfg.steady.pump_rate_mhz, 0.0, 1e3);
  }
  {
    Extractor m(section(root, "matchfield"), "matchfield", errors);
    MatchfieldConfig& f = cfg.matchfield;
    f.theta_min_deg = m.num("theta_min_deg", f.theta_min_deg, 0.0, 90.0);
    f.theta_max_deg = m.num("theta_max_deg", f.theta_max_deg, 0.0, 90.0);
    f.n_theta = m.integer("n_theta", f.n_theta, 1, 100000);
    f.emit_cluster_table = m.flag("cluster_table", f.emit_cluster_table);
    if (f.theta_min_deg > f.theta_max_deg)
      errors.push_back("matchfield: theta_min_deg above theta_max_deg");
  }
  {
    Extractor p(section(root, "pumpscan"), "pumpscan", errors);
    PumpscanConfig& s = cfg.pumpscan;
    s.rate_min_mhz = p.num("rate_min_MHz", s.rate_min_mhz, 1e-9, 1e3);
    s.rate_max_mhz = p.num("rate_max_MHz", s.rate_max_mhz, 1e-9, 1e3);
    s.n_rates = p.integer("n_rates", s.n_rates, 1, 10000);
    s.rates_mhz = p.numbers("rates_MHz", s.rates_mhz, 1e-9, 1e3);
    s.auto_field = p.flag("auto_field", s.auto_field);
    if (s.rate_min_mhz > s.rate_max_mhz)
      errors.push_back("pumpscan: rate_min_MHz above rate_max_MHz");
  }
  {
    Extractor c(section(root, "couplingscan"), "couplingscan", errors);
    CouplingscanConfig& s = cfg.couplingscan;
    s.couplings_mhz = c.numbers("couplings_MHz", s.couplings_mhz, 0.0,
                                500.0);
    s.window.field_halfwidth_mT =
        c.num("field_halfwidth_mT", s.window.field_halfwidth_mT, 1e-4, 10.0);
    s.window.field_points =
        c.integer("field_points", s.window.field_points, 3, 1000000);
    s.window.t_max_us = c.num("t_max_us", s.window.t_max_us, 1e-3, 1e6);
    s.window.t_points = c.integer("t_points", s.window.t_points, 2, 100000);
  }
  {
    Extractor i(section(root, "illum"), "illum", errors);
    IllumConfig& s = cfg.illum;
    s.radii_mm = i.numbers("radii_mm", s.radii_mm, 1e-3, 100.0);
    s.power_min_W = i.num("power_min_W", s.power_min_W, 0.0, 1e4);
    s.power_max_W = i.num("power_max_W", s.power_max_W, 0.0, 1e4);
    s.n_powers = i.integer("n_powers", s.n_powers, 1, 100000);
    s.p_nv_max = i.num("p_nv_max", s.p_nv_max, 0.0, 1.0);
    s.i_sat = i.num("i_sat_uW_um2", s.i_sat, 1e-6, 1e6);
    s.kappa = i.num("kappa_MHz_per_uW_um2", s.kappa, 0.0, 1e3);
    s.n_map_rates = i.integer("n_map_rates", s.n_map_rates, 3, 1000);
    if (s.power_min_W > s.power_max_W)
      errors.push_back("illum: power_min_W above power_max_W");
  }

  if (cfg.sites.empty()) errors.push_back("register: no valid sites");
  if (!errors.empty()) throw ConfigError(std::move(errors));
  try {
    cfg.params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError({e.what()});
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError({"cannot open config file " + file.string()});
  std::stringstream buf;
  buf << in.rdbuf();
  if (file.extension() == ".json") return config_from_json_text(buf.str());
  const json j = ini_to_json(buf.str());
  return config_from_json_text(j.dump());
}

std::string config_to_json_text(const RunConfig& cfg) {
  json root;
  switch (cfg.study) {
    case Study::Evolve: root["study"] = "evolve"; break;
    case Study::Steady: root["study"] = "steady"; break;
    case Study::Sweep: root["study"] = "sweep"; break;
    case Study::Matchfield: root["study"] = "matchfield"; break;
    case Study::Pumpscan: root["study"] = "pumpscan"; break;
    case Study::Couplingscan: root["study"] = "couplingscan"; break;
    case Study::Illum: root["study"] = "illum"; break;
  }
  root["variant"] = cfg.variant == ModelVariant::NvCoupledCarbon
                        ? "nv-carbon"
                        : "p1-carbon";
  root["out_dir"] = cfg.out_dir.string();
  json reg = json::array();
  for (Site s : cfg.sites) reg.push_back(site_token(s));
  root["register"] = reg;

  const ModelParams& m = cfg.params;
  json p;
  p["D_MHz"] = m.D;
  p["gamma_e_MHz_per_mT"] = m.gamma_e;
  p["gamma_C_MHz_per_mT"] = m.gamma_C;
  p["gamma_N_MHz_per_mT"] = m.gamma_N;
  p["Q_nv_MHz"] = m.Q_nv;
  p["Q_p1_MHz"] = m.Q_p1;
  p["A_C_zz_MHz"] = m.A_C(2, 2);
  p["A_C_zx_MHz"] = m.A_C(0, 2);
  p["A_C_perp_MHz"] = m.A_C(0, 0);
  p["A_N_zz_MHz"] = m.A_N(2, 2);
  p["A_N_perp_MHz"] = m.A_N(0, 0);
  p["A_N1_par_MHz"] = m.A_N1(2, 2);
  p["A_N1_perp_MHz"] = m.A_N1(0, 0);
  p["A_C1_zz_MHz"] = m.A_C1(2, 2);
  p["A_C1_perp_MHz"] = m.A_C1(0, 0);
  p["A_C1_zx_MHz"] = m.A_C1(0, 2);
  p["d_nvp1_MHz"] = m.d_nvp1;
  p["nvp1_form"] = m.nvp1_form == DipolarForm::Ising ? "ising"
                   : m.nvp1_form == DipolarForm::SecularCrossFlip
                       ? "cross-flip"
                       : "point-dipole";
  p["dipole_zenith_deg"] = m.dipole_zenith_deg;
  p["dipole_azimuth_deg"] = m.dipole_azimuth_deg;
  p["B_mT"] = m.B;
  p["theta_deg"] = m.theta_deg;
  p["p1_zenith_deg"] = m.p1_zenith_deg;
  p["p1_azimuth_deg"] = m.p1_azimuth_deg;
  p["deltaT_K"] = m.deltaT;
  p["dD_dT_MHz_per_K"] = m.dD_dT;
  root["params"] = p;

  auto t1val = [](double v) -> json {
    if (std::isinf(v)) return "inf";
    return v;
  };
  root["t1"] = {{"nv_us", t1val(cfg.t1.nv)},
                {"p1_us", t1val(cfg.t1.p1)},
                {"c_us", t1val(cfg.t1.carbon)},
                {"n_nv_us", t1val(cfg.t1.n_nv)},
                {"n_p1_us", t1val(cfg.t1.n_p1)}};

  root["sweep"] = {{"B_min_mT", cfg.sweep.B_min_mT},
                   {"B_max_mT", cfg.sweep.B_max_mT},
                   {"n_points", cfg.sweep.n_points},
                   {"t_proj_us", cfg.sweep.t_proj_us},
                   {"adaptive_t_proj", cfg.sweep.adaptive_t_proj},
                   {"max_t_proj_us", cfg.sweep.max_t_proj_us},
                   {"conv_width_mT", cfg.sweep.conv_width_mT},
                   {"weight_parallel", cfg.sweep.weight_parallel},
                   {"weight_misaligned", cfg.sweep.weight_misaligned},
                   {"curve_points", cfg.sweep.curve_points},
                   {"n_nv_level0", cfg.sweep.n_nv_level0}};
  root["evolve"] = {{"t_max_us", cfg.evolve.t_max_us},
                    {"n_times", cfg.evolve.n_times},
                    {"log_times", cfg.evolve.log_times},
                    {"lindblad", cfg.evolve.lindblad},
                    {"pump_rate_MHz", cfg.evolve.pump_rate_mhz},
                    {"use_t1", cfg.evolve.use_t1},
                    {"fields_mT", cfg.evolve.fields_mT},
                    {"n_nv_level0", cfg.evolve.n_nv_level0}};
  root["steady"] = {{"pump_rate_MHz", cfg.steady.pump_rate_mhz}};
  root["matchfield"] = {{"theta_min_deg", cfg.matchfield.theta_min_deg},
                        {"theta_max_deg", cfg.matchfield.theta_max_deg},
                        {"n_theta", cfg.matchfield.n_theta},
                        {"cluster_table", cfg.matchfield.emit_cluster_table}};
  root["pumpscan"] = {{"rate_min_MHz", cfg.pumpscan.rate_min_mhz},
                      {"rate_max_MHz", cfg.pumpscan.rate_max_mhz},
                      {"n_rates", cfg.pumpscan.n_rates},
                      {"rates_MHz", cfg.pumpscan.rates_mhz},
                      {"auto_field", cfg.pumpscan.auto_field}};
  root["couplingscan"] = {
      {"couplings_MHz", cfg.couplingscan.couplings_mhz},
      {"field_halfwidth_mT", cfg.couplingscan.window.field_halfwidth_mT},
      {"field_points", cfg.couplingscan.window.field_points},
      {"t_max_us", cfg.couplingscan.window.t_max_us},
      {"t_points", cfg.couplingscan.window.t_points}};
  root["illum"] = {{"radii_mm", cfg.illum.radii_mm},
                   {"power_min_W", cfg.illum.power_min_W},
                   {"power_max_W", cfg.illum.power_max_W},
                   {"n_powers", cfg.illum.n_powers},
                   {"p_nv_max", cfg.illum.p_nv_max},
                   {"i_sat_uW_um2", cfg.illum.i_sat},
                   {"kappa_MHz_per_uW_um2", cfg.illum.kappa},
                   {"n_map_rates", cfg.illum.n_map_rates}};
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------
// Study runners
// ---------------------------------------------------------------------

namespace {

struct RunOutput {
  std::vector<std::string> artifacts;
  std::map<std::string, double> metrics;
};

std::string fnum(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

Eigen::VectorXd time_grid(const EvolveConfig& e) {
  if (!e.log_times)
    return Eigen::VectorXd::LinSpaced(e.n_times, 0.0, e.t_max_us);
  Eigen::VectorXd t(e.n_times);
  t[0] = 0.0;
  const double lo = std::log10(e.t_max_us) - 4.0;
  for (int i = 1; i < e.n_times; ++i)
    t[i] = std::pow(10.0, lo + (std::log10(e.t_max_us) - lo) * (i - 1) /
                              std::max(1, e.n_times - 2));
  return t;
}

double first_peak_time(const Eigen::VectorXd& t, const Eigen::VectorXd& y) {
  const double global = y.cwiseAbs().maxCoeff();
  if (global <= 0) return 0.0;
  for (int i = 1; i + 1 < t.size(); ++i) {
    const double a = std::abs(y[i]);
    if (a >= 0.8 * global && a >= std::abs(y[i - 1]) &&
        a >= std::abs(y[i + 1]))
      return t[i];
  }
  int idx = 0;
  y.cwiseAbs().maxCoeff(&idx);
  return t[idx];
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& tr) {
  write_csv(path, {{"t_us", to_std(tr.times)},
                   {"P_S", to_std(tr.P_S)},
                   {"P_S1", to_std(tr.P_S1)},
                   {"P_C", to_std(tr.P_C)},
                   {"P_J", to_std(tr.P_J)},
                   {"P_J1", to_std(tr.P_J1)}});
}

RunOutput run_evolve(const RunConfig& cfg) {
  RunOutput out;
  const SpinRegister reg = cfg.make_register();
  InitialState init = InitialState::nv_polarized(reg);
  if (cfg.evolve.n_nv_level0 && reg.has(Site::NvNitrogen))
    init.set(reg, Site::NvNitrogen, LevelSpec::pure(0.0));
  const Matrix rho0 = initial_state(init, reg);
  const Eigen::VectorXd times = time_grid(cfg.evolve);
  std::vector<double> fields = cfg.evolve.fields_mT;
  if (fields.empty()) fields.push_back(cfg.params.B);

  for (size_t i = 0; i < fields.size(); ++i) {
    ModelParams p = cfg.params;
    p.B = fields[i];
    const Matrix h = build_hamiltonian(p, cfg.variant, reg);
    Trajectory tr;
    if (!cfg.evolve.lindblad) {
      tr = evolve_unitary(rho0, h, times, reg);
    } else {
      std::vector<CollapseSpec> collapses =
          pump_operators(cfg.evolve.pump_rate_mhz, reg);
      if (cfg.evolve.use_t1) {
        const auto relax = t1_operators(cfg.t1, reg);
        collapses.insert(collapses.end(), relax.begin(), relax.end());
      }
      const Liouvillian liou = build_liouvillian(h, collapses, reg);
      const LindbladResult res = evolve_lindblad(rho0, liou, times, reg);
      tr = res.trajectory;
      out.metrics["f" + std::to_string(i) + ".max_trace_error"] =
          res.trace_error.maxCoeff();
      out.metrics["f" + std::to_string(i) + ".min_eigenvalue"] =
          res.min_eigenvalue.minCoeff();
    }
    const std::string name = "trajectory_" + std::to_string(i) + ".csv";
    write_trajectory_csv(cfg.out_dir / name, tr);
    out.artifacts.push_back(name);
    const std::string key = "f" + std::to_string(i);
    out.metrics[key + ".B_mT"] = fields[i];
    out.metrics[key + ".max_abs_P_C"] = tr.P_C.cwiseAbs().maxCoeff();
    out.metrics[key + ".max_abs_P_S1"] = tr.P_S1.cwiseAbs().maxCoeff();
    out.metrics[key + ".mean_P_C"] = tr.P_C.mean();
    out.metrics[key + ".final_P_C"] = tr.P_C[tr.P_C.size() - 1];
    const int tail = std::max<int>(1, tr.P_C.size() / 5);
    out.metrics[key + ".tail_mean_P_C"] =
        tr.P_C.tail(tail).mean();
    out.metrics[key + ".t_peak_us"] = first_peak_time(times, tr.P_C);
  }
  return out;
}

RunOutput run_steady(const RunConfig& cfg) {
  RunOutput out;
  const SpinRegister reg = cfg.make_register();
  const Matrix h = build_hamiltonian(cfg.params, cfg.variant, reg);
  std::vector<CollapseSpec> collapses =
      pump_operators(cfg.steady.pump_rate_mhz, reg);
  const auto relax = t1_operators(cfg.t1, reg);
  collapses.insert(collapses.end(), relax.begin(), relax.end());
  const Liouvillian liou = build_liouvillian(h, collapses, reg);
  const Matrix rho = steady_state(liou);
  const Polarizations p = polarizations(rho, reg);
  const double res = steady_state_residual(liou, rho);
  write_csv(cfg.out_dir / "steady.csv",
            {{"R_MHz", {cfg.steady.pump_rate_mhz}},
             {"P_C", {p.C}},
             {"P_S1", {p.S1}},
             {"P_S", {p.S}},
             {"residual", {res}}});
  out.artifacts.push_back("steady.csv");
  out.metrics["P_C"] = p.C;
  out.metrics["P_S1"] = p.S1;
  out.metrics["P_S"] = p.S;
  out.metrics["residual"] = res;
  return out;
}

RunOutput run_sweep(const RunConfig& cfg) {
  RunOutput out;
  const SpinRegister reg = cfg.make_register();
  const LinePattern pat = sweep(cfg.sweep, cfg.params, cfg.variant, reg);
  if (pat.curve_field_mT.size() == pat.field_mT.size()) {
    write_csv(cfg.out_dir / "pattern.csv",
              {{"B_mT", to_std(pat.field_mT)},
               {"amplitude_sticks", to_std(pat.sticks)},
               {"amplitude_convolved", to_std(pat.curve)}});
    out.artifacts.push_back("pattern.csv");
  } else {
    write_csv(cfg.out_dir / "pattern.csv",
              {{"B_mT", to_std(pat.field_mT)},
               {"amplitude_sticks", to_std(pat.sticks)}});
    write_csv(cfg.out_dir / "curve.csv",
              {{"B_mT", to_std(pat.curve_field_mT)},
               {"amplitude_convolved", to_std(pat.curve)}});
    out.artifacts.push_back("pattern.csv");
    out.artifacts.push_back("curve.csv");
  }
  json meta;
  meta["variant"] = cfg.variant == ModelVariant::NvCoupledCarbon
                        ? "nv-carbon"
                        : "p1-carbon";
  meta["theta_deg"] = pat.theta_deg;
  meta["weight_parallel"] = cfg.sweep.weight_parallel;
  meta["weight_misaligned"] = cfg.sweep.weight_misaligned;
  meta["conv_width_mT"] = pat.conv_width_mT;
  meta["t_proj_us"] = pat.t_proj_us;
  write_text_atomic(cfg.out_dir / "pattern_meta.json", meta.dump(2) + "\n");
  out.artifacts.push_back("pattern_meta.json");
  out.metrics["t_proj_us"] = pat.t_proj_us;
  out.metrics["max_abs_stick"] = pat.sticks.cwiseAbs().maxCoeff();
  out.metrics["max_abs_curve"] = pat.curve.cwiseAbs().maxCoeff();
  return out;
}

RunOutput run_matchfield(const RunConfig& cfg) {
  RunOutput out;
  const MatchfieldConfig& f = cfg.matchfield;
  std::vector<double> thetas(f.n_theta);
  for (int i = 0; i < f.n_theta; ++i)
    thetas[i] = f.theta_min_deg +
                (f.theta_max_deg - f.theta_min_deg) * i /
                    std::max(1, f.n_theta - 1);
  const auto curve = matching_field_curve(thetas, cfg.params);
  std::vector<double> th, bb;
  for (const auto& [t, b] : curve) {
    th.push_back(t);
    bb.push_back(b);
  }
  write_csv(cfg.out_dir / "matchfield_curve.csv",
            {{"theta_deg", th}, {"B0_mT", bb}});
  out.artifacts.push_back("matchfield_curve.csv");
  out.metrics["B0_at_theta_min_mT"] = bb.front();
  out.metrics["B0_at_theta_max_mT"] = bb.back();
  bool increasing = true;
  for (size_t i = 1; i < bb.size(); ++i)
    if (bb[i] <= bb[i - 1]) increasing = false;
  out.metrics["strictly_increasing"] = increasing ? 1.0 : 0.0;

  if (f.emit_cluster_table) {
    std::vector<double> tcol, jcol, bcol;
    for (double theta : thetas) {
      // five conditions of the parallel family, labeled by field order
      std::vector<std::pair<double, double>> fields;  // (B, tag)
      for (int mj : {-1, 0, 1}) {
        MatchSpec s{theta, mj, P1Subset::Parallel, false};
        if (auto b = matching_field(s, cfg.params)) fields.push_back({*b, 0});
      }
      for (int mj : {-1, 1}) {
        MatchSpec s{theta, mj, P1Subset::Parallel, true};
        if (auto b = matching_field(s, cfg.params)) fields.push_back({*b, 1});
      }
      std::sort(fields.begin(), fields.end());
      if (fields.size() == 5) {
        const int jorder[5] = {-1, -2, 0, 2, 1};  // ascending-field labels
        for (int k = 0; k < 5; ++k) {
          tcol.push_back(theta);
          jcol.push_back(jorder[k]);
          bcol.push_back(fields[k].first);
        }
      }
    }
    write_csv(cfg.out_dir / "matchfield_clusters.csv",
              {{"theta_deg", tcol}, {"j", jcol}, {"B_mT", bcol}});
    out.artifacts.push_back("matchfield_clusters.csv");
  }
  return out;
}

RunOutput run_pumpscan(const RunConfig& cfg) {
  RunOutput out;
  const SpinRegister reg = cfg.make_register();
  ModelParams p = cfg.params;
  if (cfg.pumpscan.auto_field) {
    MatchSpec center{p.theta_deg, 0, P1Subset::Parallel, false};
    const auto b0 = matching_field(center, p);
    if (!b0) throw SolverError("pumpscan: no central matching field");
    const Matrix rho0 =
        initial_state(InitialState::nv_polarized(reg), reg);
    p.B = peak_amplitude_field(p, cfg.variant, reg, rho0, *b0);
  }
  std::vector<double> rates = cfg.pumpscan.rates_mhz;
  if (rates.empty()) {
    rates.resize(cfg.pumpscan.n_rates);
    const double llo = std::log10(cfg.pumpscan.rate_min_mhz);
    const double lhi = std::log10(cfg.pumpscan.rate_max_mhz);
    for (int i = 0; i < cfg.pumpscan.n_rates; ++i)
      rates[i] = std::pow(
          10.0, llo + (lhi - llo) * i / std::max(1, cfg.pumpscan.n_rates - 1));
  }
  const auto scan = pump_rate_scan(rates, p, cfg.t1, reg, cfg.variant);
  std::vector<double> r, pc, ps1, ps, res;
  int nonmono = 0;
  for (size_t i = 0; i < scan.size(); ++i) {
    r.push_back(scan[i].rate_mhz);
    pc.push_back(scan[i].P_C);
    ps1.push_back(scan[i].P_S1);
    ps.push_back(scan[i].P_S);
    res.push_back(scan[i].residual);
    if (i > 0 && std::abs(scan[i].P_C) < std::abs(scan[i - 1].P_C)) ++nonmono;
  }
  write_csv(cfg.out_dir / "pumpscan.csv", {{"R_MHz", r},
                                           {"P_C", pc},
                                           {"P_S1", ps1},
                                           {"P_S", ps},
                                           {"residual", res}});
  out.artifacts.push_back("pumpscan.csv");
  out.metrics["B_mT"] = p.B;
  out.metrics["nonmonotone_steps"] = nonmono;
  out.metrics["max_residual"] = *std::max_element(res.begin(), res.end());
  for (size_t i = 0; i < scan.size(); ++i)
    out.metrics["P_C_at_R" + fnum(scan[i].rate_mhz)] = scan[i].P_C;
  return out;
}

RunOutput run_couplingscan(const RunConfig& cfg) {
  RunOutput out;
  const SpinRegister reg = cfg.make_register();
  MatchSpec center{cfg.params.theta_deg, 0, P1Subset::Parallel, false};
  const auto b0 = matching_field(center, cfg.params);
  if (!b0) throw SolverError("couplingscan: no central matching field");
  const auto scan =
      unitary_limit_scan(cfg.couplingscan.couplings_mhz, cfg.params, reg,
                         *b0, cfg.couplingscan.window);
  std::vector<double> a, c, p1;
  for (const auto& pt : scan) {
    a.push_back(pt.a_zz);
    c.push_back(pt.max_abs_PC);
    p1.push_back(pt.max_abs_PS1);
  }
  write_csv(cfg.out_dir / "couplingscan.csv",
            {{"A_C_zz_MHz", a}, {"max_abs_P_C", c}, {"max_abs_P_S1", p1}});
  out.artifacts.push_back("couplingscan.csv");
  for (const auto& pt : scan) {
    out.metrics["P_C_at_A" + fnum(pt.a_zz)] = pt.max_abs_PC;
    out.metrics["P_S1_at_A" + fnum(pt.a_zz)] = pt.max_abs_PS1;
  }
  out.metrics["B0_mT"] = *b0;
  return out;
}

RunOutput run_illum(const RunConfig& cfg) {
  RunOutput out;
  const SpinRegister reg = cfg.make_register();
  ModelParams p = cfg.params;
  MatchSpec center{p.theta_deg, 0, P1Subset::Parallel, false};
  const auto b0 = matching_field(center, p);
  if (!b0) throw SolverError("illum: no central matching field");
  const Matrix rho0 = initial_state(InitialState::nv_polarized(reg), reg);
  p.B = peak_amplitude_field(p, cfg.variant, reg, rho0, *b0);

  // P_C(R) lookup from the steady-state solver
  std::vector<double> rates(cfg.illum.n_map_rates);
  const double llo = -4.0, lhi = std::log10(2.0);
  for (int i = 0; i < cfg.illum.n_map_rates; ++i)
    rates[i] = std::pow(10.0, llo + (lhi - llo) * i /
                                  std::max(1, cfg.illum.n_map_rates - 1));
  const auto scan = pump_rate_scan(rates, p, cfg.t1, reg, cfg.variant);
  std::vector<double> rx = {0.0}, ry = {0.0};
  for (const auto& pt : scan) {
    rx.push_back(pt.rate_mhz);
    ry.push_back(std::abs(pt.P_C));
  }
  ResponseMaps maps;
  maps.p_nv_max = cfg.illum.p_nv_max;
  maps.i_sat = cfg.illum.i_sat;
  maps.kappa = cfg.illum.kappa;
  maps.p_c_of_rate = LinearInterp(rx, ry);

  CrystalSurface surf;
  std::vector<BeamProfile> beams;
  for (double radius : cfg.illum.radii_mm)
    beams.push_back({radius, 0.0, 0.0, 1.0});

  std::vector<double> powers(cfg.illum.n_powers);
  const double plo = std::log10(std::max(cfg.illum.power_min_W, 1e-6));
  const double phi = std::log10(cfg.illum.power_max_W);
  for (int i = 0; i < cfg.illum.n_powers; ++i)
    powers[i] = std::pow(
        10.0, plo + (phi - plo) * i / std::max(1, cfg.illum.n_powers - 1));
  const PowerScanResult res = power_scan(beams, powers, surf, maps);

  std::vector<CsvColumn> cols = {{"W_watts", res.power_W}};
  const char* names[] = {"s_i", "s_ii", "s_iii", "s_iv", "s_v"};
  for (size_t b = 0; b < beams.size(); ++b) {
    std::vector<double> col;
    for (size_t i = 0; i < powers.size(); ++i) col.push_back(res.signal[i][b]);
    cols.push_back({b < 5 ? names[b] : "s_" + std::to_string(b), col});
  }
  write_csv(cfg.out_dir / "power_scan.csv", cols);
  out.artifacts.push_back("power_scan.csv");

  // intensity cross-sections at 1.5 W along y = 0
  const int nx = 321;
  std::vector<CsvColumn> prof = {{"x_mm", {}}};
  for (size_t b = 0; b < beams.size(); ++b)
    prof.push_back(
        {std::string("I_") + (b < 5 ? names[b] : "s") + "_uW_um2", {}});
  for (int i = 0; i < nx; ++i) {
    const double x = -0.5 * surf.width_mm +
                     surf.width_mm * i / static_cast<double>(nx - 1);
    prof[0].values.push_back(x);
    for (size_t b = 0; b < beams.size(); ++b) {
      BeamProfile bp = beams[b];
      bp.power_W = 1.5;
      prof[b + 1].values.push_back(intensity_profile(bp, surf, x, 0.0));
    }
  }
  write_csv(cfg.out_dir / "intensity_profiles.csv", prof);
  out.artifacts.push_back("intensity_profiles.csv");

  // headline metrics at ~1 W
  size_t iw = 0;
  for (size_t i = 0; i < powers.size(); ++i)
    if (std::abs(powers[i] - 1.0) < std::abs(powers[iw] - 1.0)) iw = i;
  if (beams.size() >= 3 && res.signal[iw][0] > 0)
    out.metrics["ratio_wide_narrow_at_1W"] =
        res.signal[iw][2] / res.signal[iw][0];
  bool monotone = true;
  for (size_t b = 0; b < beams.size(); ++b)
    for (size_t i = 1; i < powers.size(); ++i)
      if (res.signal[i][b] < res.signal[i - 1][b] * (1.0 - 1e-9))
        monotone = false;
  out.metrics["all_monotone"] = monotone ? 1.0 : 0.0;
  out.metrics["B_mT"] = p.B;
  return out;
}

}  // namespace

std::string RunManifest::to_json() const {
  json j;
  j["study"] = study;
  j["version"] = version;
  j["wall_clock_s"] = wall_clock_s;
  j["artifacts"] = artifacts;
  j["metrics"] = metrics;
  if (!checks.empty()) {
    json arr = json::array();
    for (const auto& [name, ok] : checks)
      arr.push_back({{"check", name}, {"pass", ok}});
    j["checks"] = arr;
  }
  return j.dump(2) + "\n";
}

RunManifest run(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(cfg.out_dir);
  RunOutput out;
  switch (cfg.study) {
    case Study::Evolve: out = run_evolve(cfg); break;
    case Study::Steady: out = run_steady(cfg); break;
    case Study::Sweep: out = run_sweep(cfg); break;
    case Study::Matchfield: out = run_matchfield(cfg); break;
    case Study::Pumpscan: out = run_pumpscan(cfg); break;
    case Study::Couplingscan: out = run_couplingscan(cfg); break;
    case Study::Illum: out = run_illum(cfg); break;
  }
  RunManifest m;
  switch (cfg.study) {
    case Study::Evolve: m.study = "evolve"; break;
    case Study::Steady: m.study = "steady"; break;
    case Study::Sweep: m.study = "sweep"; break;
    case Study::Matchfield: m.study = "matchfield"; break;
    case Study::Pumpscan: m.study = "pumpscan"; break;
    case Study::Couplingscan: m.study = "couplingscan"; break;
    case Study::Illum: m.study = "illum"; break;
  }
  m.version = version_string();
  m.artifacts = out.artifacts;
  m.metrics = out.metrics;
  m.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_text_atomic(cfg.out_dir / "resolved_config.json",
                    config_to_json_text(cfg));
  m.artifacts.push_back("resolved_config.json");
  write_text_atomic(cfg.out_dir / "manifest.json", m.to_json());
  return m;
}

}  // namespace nvpol
