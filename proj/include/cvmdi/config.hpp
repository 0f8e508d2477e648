#pragma once

#include <cstdint>
#include <string>

#include "cvmdi/calibration.hpp"

namespace cvmdi {

// Flat key=value run configuration. Missing keys fall back to the defaults
// below; unknown keys are rejected with the offending key named.
struct RunConfig {
  double v_mod = 60.0;
  double epsilon_1 = 0.01;
  double epsilon_2 = 0.01;
  double t_s = 0.99;
  double v_s = 3.0;
  double eta_m_alice = 0.9;
  double eta_m_bob = 0.9;
  double eta_d = 0.6;
  double v_el = 0.01;
  double v_rin = 0.0;
  double alpha_db_per_km = 0.2;
  double xi = 1.0;
  double block_n = 1e8;
  double key_fraction = 0.5;
  double eps_smooth = 1e-10;
  double eps_pa = 1e-10;
  double eps_pe = 1e-10;
  PeMode pe_mode = PeMode::Ideal;
  Geometry geometry = Geometry::Symmetric;
  CaseId case_id = CaseId::Both;
  std::uint64_t seed = 1;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_text(const std::string& text);
  // Applies one key=value assignment (same keys as the file format).
  void set(const std::string& key, const std::string& value);
  void validate() const;

  SourceModelInputs source_inputs() const;
  ProtocolParams protocol(RinMode which = RinMode::Substitution) const;  // realistic model
  ProtocolParams protocol_estimated() const;
  ChannelParams channel_at(double l_ab_km) const;
  FiniteSizeParams finite_size() const;
  // Monitor transmittance reported in sweep rows for this case.
  double reported_eta_m() const;
};

const char* geometry_name(Geometry g);
Geometry geometry_from_name(const std::string& name);

// One evaluated grid point. Column order is fixed.
struct SweepRow {
  std::string case_name;
  double l_ac_km = 0;
  double l_bc_km = 0;
  double eta_m = 1;
  double v_rin = 0;
  std::string mode = "realistic";  // estimated | realistic
  double i_ab = 0;
  double chi_ae = 0;
  double delta_n = 0;
  double rate = 0;
  std::string status = "ok";  // ok | nonpositive | skipped
};

std::string sweep_csv_header();
std::string to_csv(const SweepRow& row);

SweepRow make_row(const RunConfig& cfg, double l_ac, double l_bc, const KeyRateBreakdown& kr,
                  const std::string& mode);
SweepRow skipped_row(const RunConfig& cfg, double l_ac, double l_bc, const std::string& mode);

}  // namespace cvmdi
