#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lod2s/lod.hpp"

namespace lod2s {

enum class StudyKind { decay, quasiopt, sweep, single };

StudyKind parse_study(const std::string& name);
std::string study_name(StudyKind s);

/// Flat INI configuration. See README for the keys and their defaults.
struct ExperimentConfig {
  // geometry
  double g_side = 1.0;
  double omega_side = 0.5;
  double d_side = 0.5;
  // parameters
  Complex eps_e{1.0, 0.0};
  Complex eps_i = Complex(1.0, 0.0) / Complex(10.0, 1.0);
  std::vector<double> k_list{8.0};
  bool zero_datum = false;  // g = 0 instead of the plane wave datum
  // meshes
  int macro_n = 8;
  int cell_n = 8;
  int macro_levels = 2;
  int cell_levels = 2;
  std::vector<int> coarse_sweep{8, 16, 32};
  bool sweep_cell = true;   // quasiopt sweeps the Y mesh together with G
  double kh = 1.0;          // pollution sweep: coarse G mesh with k H_c = kh
  // method
  int m = -1;               // -1: auto
  int decay_mmax = 4;
  int decay_seeds = 3;
  // run
  StudyKind study = StudyKind::single;
  std::string out = "out";
  std::uint64_t seed = 1;
  int threads = 1;
  int dump_grid = 64;
  bool single_reference = true;  // single solve also computes the fine reference
  int infsup_max_dim = 2000;     // dense inf-sup estimates only up to this size

  /// Throws ConfigurationError on invalid values.
  void validate() const;
  ProblemParams params(double k) const;
  HierarchySpec hierarchy(int macro_n, int cell_n) const;
  /// Canonical key = value text, used for hashing and provenance.
  std::string canonical() const;
  /// FNV-1a hash of canonical(), hex encoded.
  std::string hash() const;
};

ExperimentConfig load_config(const std::string& path);
/// Applies `section.key = value` overrides (same keys as the INI file).
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct StudyResult {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, double>> fitted;
  std::string provenance;

  double fitted_value(const std::string& key) const;
};

/// Writes <out>/<name>.csv, <out>/<name>.dat (gnuplot columns) and
/// <out>/<name>.meta (fitted constants and provenance).
void write_result(const StudyResult& r, const std::string& out_dir);

/// Largest fitted beta over the three component kinds for one seed per kind
/// on the given hierarchy.
double calibrate_beta(const Hierarchy& h, const ProblemParams& p, int m_max = 4);

StudyResult run_decay_study(const ExperimentConfig& cfg);
StudyResult run_quasiopt_study(const ExperimentConfig& cfg);
StudyResult run_pollution_sweep(const ExperimentConfig& cfg);
/// Single LOD solve with corrector cache, solution export and field dump.
StudyResult run_single(const ExperimentConfig& cfg);

StudyResult run_study(const ExperimentConfig& cfg);

/// Version string recorded in the provenance.
const char* version();

}  // namespace lod2s
