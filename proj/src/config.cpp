#include "cvmdi/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cvmdi {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError("invalid numeric value for key '" + key + "': " + value);
  }
  if (pos != value.size())
    throw ConfigError("invalid numeric value for key '" + key + "': " + value);
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  std::uint64_t v;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError("invalid integer value for key '" + key + "': " + value);
  }
  if (pos != value.size())
    throw ConfigError("invalid integer value for key '" + key + "': " + value);
  return v;
}

}  // namespace

const char* geometry_name(Geometry g) {
  return g == Geometry::Symmetric ? "symmetric" : "asymmetric";
}

Geometry geometry_from_name(const std::string& name) {
  if (name == "symmetric") return Geometry::Symmetric;
  if (name == "asymmetric") return Geometry::Asymmetric;
  throw ConfigError("unknown geometry: " + name + " (expected symmetric|asymmetric)");
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "v_mod") v_mod = parse_double(key, value);
  else if (key == "epsilon_1") epsilon_1 = parse_double(key, value);
  else if (key == "epsilon_2") epsilon_2 = parse_double(key, value);
  else if (key == "t_s") t_s = parse_double(key, value);
  else if (key == "v_s") v_s = parse_double(key, value);
  else if (key == "eps_s") {
    double eps = parse_double(key, value);
    if (eps < 0.0) throw ConfigError("eps_s must be >= 0");
    if (t_s >= 1.0 && eps > 0.0)
      throw ConfigError("eps_s > 0 is inconsistent with t_s = 1");
    v_s = t_s >= 1.0 ? 1.0 : 1.0 + t_s * eps / (1.0 - t_s);
  } else if (key == "eta_m_alice") eta_m_alice = parse_double(key, value);
  else if (key == "eta_m_bob") eta_m_bob = parse_double(key, value);
  else if (key == "eta_d") eta_d = parse_double(key, value);
  else if (key == "v_el") v_el = parse_double(key, value);
  else if (key == "v_rin") v_rin = parse_double(key, value);
  else if (key == "alpha_db_per_km") alpha_db_per_km = parse_double(key, value);
  else if (key == "xi") xi = parse_double(key, value);
  else if (key == "block_n") block_n = parse_double(key, value);
  else if (key == "key_fraction") key_fraction = parse_double(key, value);
  else if (key == "eps_smooth") eps_smooth = parse_double(key, value);
  else if (key == "eps_pa") eps_pa = parse_double(key, value);
  else if (key == "eps_pe") eps_pe = parse_double(key, value);
  else if (key == "pe_mode" || key == "geometry" || key == "case") {
    try {
      if (key == "pe_mode") pe_mode = pe_mode_from_name(value);
      else if (key == "geometry") geometry = geometry_from_name(value);
      else case_id = case_from_name(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "seed") seed = parse_u64(key, value);
  else throw ConfigError("unknown config key: " + key);
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  bool saw_v_s = false, saw_eps_s = false;
  std::string pending_eps_s;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream os;
      os << "config line " << lineno << " is not key=value: " << line;
      throw ConfigError(os.str());
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      std::ostringstream os;
      os << "config line " << lineno << " has an empty key or value";
      throw ConfigError(os.str());
    }
    if (key == "v_s") saw_v_s = true;
    if (key == "eps_s") {
      // Defer so the conversion sees the configured t_s regardless of order.
      saw_eps_s = true;
      pending_eps_s = value;
      continue;
    }
    cfg.set(key, value);
  }
  if (saw_v_s && saw_eps_s)
    throw ConfigError("v_s and eps_s are mutually exclusive; set only one");
  if (saw_eps_s) cfg.set("eps_s", pending_eps_s);
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

void RunConfig::validate() const {
  protocol().validate();
  finite_size().validate();
  if (epsilon_1 < 0.0 || epsilon_2 < 0.0) throw ConfigError("channel excess noise must be >= 0");
  if (alpha_db_per_km < 0.0) throw ConfigError("alpha_db_per_km must be >= 0");
  if (!(eta_m_alice > 0.0 && eta_m_alice <= 1.0) || !(eta_m_bob > 0.0 && eta_m_bob <= 1.0))
    throw ConfigError("eta_m values must lie in (0,1]");
  if (v_rin < 0.0) throw ConfigError("v_rin must be >= 0");
  if (v_el < 0.0) throw ConfigError("v_el must be >= 0");
}

SourceModelInputs RunConfig::source_inputs() const {
  SourceModelInputs in;
  in.v_mod = v_mod;
  in.t_s = t_s;
  in.v_s_base = v_s;
  in.t_m = eta_m_alice;
  in.t_k = eta_m_bob;
  in.eta_d = eta_d;
  in.v_el = v_el;
  in.v_rin = v_rin;
  in.xi = xi;
  return in;
}

ProtocolParams RunConfig::protocol(RinMode) const { return realistic_params(source_inputs()); }

ProtocolParams RunConfig::protocol_estimated() const { return estimated_params(source_inputs()); }

ChannelParams RunConfig::channel_at(double l_ab_km) const {
  return ChannelParams::for_geometry(geometry, l_ab_km, epsilon_1, epsilon_2, alpha_db_per_km);
}

FiniteSizeParams RunConfig::finite_size() const {
  FiniteSizeParams fs;
  fs.block_n = block_n;
  fs.key_fraction = key_fraction;
  fs.eps_smooth = eps_smooth;
  fs.eps_pa = eps_pa;
  fs.eps_pe = eps_pe;
  return fs;
}

double RunConfig::reported_eta_m() const {
  switch (case_id) {
    case CaseId::Untrusted: return 1.0;
    case CaseId::AliceOnly: return eta_m_alice;
    case CaseId::BobOnly: return eta_m_bob;
    case CaseId::Both: return eta_m_alice;
  }
  return 1.0;
}

std::string sweep_csv_header() {
  return "case,l_ac_km,l_bc_km,eta_m,v_rin,mode,i_ab,chi_ae,delta_n,rate_bits_per_use,status";
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::string to_csv(const SweepRow& r) {
  std::ostringstream os;
  os << r.case_name << ',' << fmt(r.l_ac_km) << ',' << fmt(r.l_bc_km) << ',' << fmt(r.eta_m)
     << ',' << fmt(r.v_rin) << ',' << r.mode << ',' << fmt(r.i_ab) << ',' << fmt(r.chi_ae) << ','
     << fmt(r.delta_n) << ',' << fmt(r.rate) << ',' << r.status;
  return os.str();
}

SweepRow make_row(const RunConfig& cfg, double l_ac, double l_bc, const KeyRateBreakdown& kr,
                  const std::string& mode) {
  SweepRow r;
  r.case_name = case_name(cfg.case_id);
  r.l_ac_km = l_ac;
  r.l_bc_km = l_bc;
  r.eta_m = cfg.reported_eta_m();
  r.v_rin = mode == "estimated" ? 0.0 : cfg.v_rin;
  r.mode = mode;
  r.i_ab = kr.i_ab;
  r.chi_ae = kr.chi_ae;
  r.delta_n = kr.delta_n;
  r.rate = kr.rate;
  r.status = kr.rate > 0.0 ? "ok" : "nonpositive";
  return r;
}

SweepRow skipped_row(const RunConfig& cfg, double l_ac, double l_bc, const std::string& mode) {
  SweepRow r;
  r.case_name = case_name(cfg.case_id);
  r.l_ac_km = l_ac;
  r.l_bc_km = l_bc;
  r.eta_m = cfg.reported_eta_m();
  r.v_rin = mode == "estimated" ? 0.0 : cfg.v_rin;
  r.mode = mode;
  r.i_ab = r.chi_ae = r.delta_n = r.rate = std::nan("");
  r.status = "skipped";
  return r;
}

}  // namespace cvmdi
