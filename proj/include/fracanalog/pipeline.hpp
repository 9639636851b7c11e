#pragma once

#include <fftw3.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracanalog/analogues.hpp"
#include "fracanalog/config.hpp"
#include "fracanalog/embedding.hpp"
#include "fracanalog/series_io.hpp"
#include "fracanalog/statistics.hpp"
#include "fracanalog/structure_functions.hpp"
#include "fracanalog/synthesis.hpp"
#include "fracanalog/volumes.hpp"

#ifndef FRACANALOG_VERSION
#define FRACANALOG_VERSION "unknown"
#endif

namespace fracanalog {

inline constexpr const char* kVersion = FRACANALOG_VERSION;

/// A pipeline stage failed; stage() names it.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct PipelineResult {
  RunConfig config;
  StructureFunctionTable structure;
  std::vector<ScalingExponent> zeta;
  VolumeRecords volumes;
  LogVolumePdf pdf;
  LogVolumePdf pdf_rescaled;
  DispersionCurve dispersion;
  DomainFits fits;
  GammaSums gamma;
  std::vector<StageTiming> timings;
  std::vector<std::string> warnings;
};

namespace detail {

template <typename F>
auto timed_stage(std::vector<StageTiming>& timings, const std::string& name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&] {
    timings.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
  };
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      finish();
    } else {
      auto out = body();
      finish();
      return out;
    }
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(name, e.what());
  }
}

}  // namespace detail

/// Structure-function lags: log-uniform from 1 to min(4 T, n / 10).
inline std::vector<std::size_t> structure_lags(const RunConfig& c) {
  const double hi = std::min(4.0 * c.big_t, static_cast<double>(c.n_database) / 10.0);
  return log_uniform_grid(1.0, std::max(hi, 2.0), c.sf_per_decade);
}

/// Runs every stage in memory. Outputs depend only on the configuration,
/// never on the thread count.
inline PipelineResult execute_pipeline(const RunConfig& config) {
  try {
    validate(config);
  } catch (const ConfigError& e) {
    throw PipelineError("config", e.what());
  }
  PipelineResult r;
  r.config = config;
  r.warnings = config_warnings(config);
  auto& t = r.timings;

  auto [database, measure] = detail::timed_stage(t, "synthesis", [&] {
    return std::pair{synthesize(config.database_params()), synthesize(config.measure_params())};
  });

  detail::timed_stage(t, "structure_functions", [&] {
    const auto lags = structure_lags(config);
    r.structure = structure_functions(database, lags, config.sf_orders);
    r.zeta = scaling_exponents(r.structure, config.windows.inertial_lo_factor * config.tau_k,
                               config.windows.inertial_hi_fraction * config.big_t);
  });

  auto [db_embedded, ms_embedded] = detail::timed_stage(t, "embedding", [&] {
    return std::pair{takens_embed(database, config.embed_params()), takens_embed(measure, config.embed_params())};
  });
  database = {};
  measure = {};

  const auto taus = config.tau_grid();
  const NeighborIndex index =
      detail::timed_stage(t, "index", [&] { return NeighborIndex(db_embedded, taus.back()); });

  r.volumes = detail::timed_stage(t, "volumes", [&] {
    return compute_volume_records(index, db_embedded, ms_embedded, config.k, taus, config.threads);
  });

  detail::timed_stage(t, "statistics", [&] {
    r.pdf = log_volume_pdf(r.volumes, config.bins);
    if (r.pdf.dropped > 0) {
      r.warnings.push_back(std::to_string(r.pdf.dropped) + " zero analogue volumes excluded from the log pdf");
    }
    r.pdf_rescaled = rescaled_pdf(r.pdf);
    r.dispersion = dispersion_curve(r.volumes, config.alpha_method);
    if (r.dispersion.skipped_targets > 0) {
      r.warnings.push_back(std::to_string(r.dispersion.skipped_targets) + " targets with zero analogue volume");
    }
    for (std::size_t tau : r.dispersion.rejected_taus) {
      r.warnings.push_back("tau " + std::to_string(tau) + " has zero or non-finite successor volumes");
    }
    r.fits = fit_domain_slopes(r.dispersion, config.tau_k, config.big_t, config.windows);
    r.gamma = gamma_sums(r.dispersion, config.c2, config.tau_k, config.big_t, config.windows);
  });
  return r;
}

// ---------------------------------------------------------------------------
// Exports

/// Accumulates CSV text with shortest round-trip number formatting.
class CsvBuffer {
 public:
  explicit CsvBuffer(std::string_view header) {
    text_ += header;
    text_ += '\n';
  }

  CsvBuffer& num(double v) {
    sep();
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    text_.append(buf, res.ptr);
    return *this;
  }
  CsvBuffer& num(std::size_t v) {
    sep();
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    text_.append(buf, res.ptr);
    return *this;
  }
  CsvBuffer& end_row() {
    text_ += '\n';
    fresh_ = true;
    return *this;
  }

  const std::string& text() const noexcept { return text_; }
  void reserve(std::size_t bytes) { text_.reserve(bytes); }

 private:
  void sep() {
    if (!fresh_) text_ += ',';
    fresh_ = false;
  }
  std::string text_;
  bool fresh_ = true;
};

struct OutputFile {
  std::string name;
  std::uint32_t crc32 = 0;
  std::size_t bytes = 0;
};

inline std::uint32_t crc32_of(std::string_view data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < data.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - off, 1u << 30));
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(data.data() + off), chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

inline OutputFile write_text_file(const std::filesystem::path& dir, const std::string& name, std::string_view text) {
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
  return {name, crc32_of(text), text.size()};
}

inline std::string structure_functions_csv(const StructureFunctionTable& s) {
  CsvBuffer csv("tau,q,value");
  for (std::size_t li = 0; li < s.lags.size(); ++li) {
    for (std::size_t qi = 0; qi < s.orders.size(); ++qi) {
      csv.num(s.lags[li]).num(s.orders[qi]).num(s.at(li, qi)).end_row();
    }
  }
  return csv.text();
}

inline std::string zeta_csv(const std::vector<ScalingExponent>& zeta) {
  CsvBuffer csv("q,zeta,stderr");
  for (const auto& z : zeta) csv.num(z.order).num(z.zeta).num(z.std_error).end_row();
  return csv.text();
}

inline std::string volumes_csv(const VolumeRecords& v) {
  CsvBuffer csv("target_index,delta_a");
  csv.reserve(v.records.size() * 32);
  for (const auto& r : v.records) csv.num(r.target_time_index).num(r.delta_a).end_row();
  return csv.text();
}

inline std::string successor_volumes_csv(const VolumeRecords& v) {
  CsvBuffer csv("target_index,tau,delta_s");
  csv.reserve(v.records.size() * v.taus.size() * 36);
  for (const auto& r : v.records) {
    for (std::size_t i = 0; i < v.taus.size(); ++i) {
      csv.num(r.target_time_index).num(v.taus[i]).num(r.delta_s[i]).end_row();
    }
  }
  return csv.text();
}

inline std::string pdf_csv(const LogVolumePdf& pdf) {
  CsvBuffer csv("bin_center,density");
  for (std::size_t i = 0; i < pdf.bin_centers.size(); ++i) csv.num(pdf.bin_centers[i]).num(pdf.densities[i]).end_row();
  return csv.text();
}

/// mean_log_delta_s is appended after the four declared columns.
inline std::string dispersion_csv(const DispersionCurve& d) {
  CsvBuffer csv("tau,mean_delta_s,alpha,alpha_stderr,mean_log_delta_s");
  for (std::size_t i = 0; i < d.taus.size(); ++i) {
    csv.num(d.taus[i]).num(d.mean_delta_s[i]).num(d.alpha[i]).num(d.alpha_stderr[i]);
    csv.num(d.mean_log_delta_s[i]).end_row();
  }
  return csv.text();
}

/// Single-curve gamma estimate, NaN when the design is degenerate (c2 = 0).
inline double single_gamma(const GammaSums& s) {
  return s.n >= 2 && s.sxx > 0.0 ? s.sxy / s.sxx : std::numeric_limits<double>::quiet_NaN();
}

inline std::string fits_text(const PipelineResult& r) {
  std::ostringstream o;
  auto kv = [&](std::string_view key, const std::string& v) { o << key << " = " << v << '\n'; };
  auto num = [&](std::string_view key, double v) { kv(key, format_double(v)); };
  auto fit = [&](std::string_view prefix, const ScalingFit& f) {
    const std::string p(prefix);
    num(p + ".slope", f.slope);
    num(p + ".intercept", f.intercept);
    num(p + ".stderr_slope", f.stderr_slope);
    num(p + ".tau_lo", f.tau_lo);
    num(p + ".tau_hi", f.tau_hi);
    kv(p + ".n_points", std::to_string(f.n_points));
  };
  const auto& c = r.config;
  num("hurst", c.hurst);
  num("c2", c.c2);
  num("tau_k", c.tau_k);
  num("big_t", c.big_t);
  kv("p", std::to_string(c.p));
  kv("k", std::to_string(c.k));
  num("log_delta_a.mean", r.pdf.mean);
  num("log_delta_a.std", r.pdf.stddev);
  kv("log_delta_a.n_samples", std::to_string(r.pdf.n_samples));
  kv("log_delta_a.dropped", std::to_string(r.pdf.dropped));
  fit("dissipative", r.fits.dissipative);
  fit("inertial", r.fits.inertial);
  const double s = r.fits.inertial.slope;
  num("inertial.minus_h", s - c.hurst);
  num("inertial.minus_2h", s - 2.0 * c.hurst);
  kv("inertial.closer_to", std::abs(s - c.hurst) <= std::abs(s - 2.0 * c.hurst) ? "H" : "2H");
  num("plateau.level", r.fits.plateau_level);
  kv("plateau.n_points", std::to_string(r.fits.plateau_points));
  num("plateau.ratio_to_2p", r.fits.plateau_level / (2.0 * static_cast<double>(c.p)));
  num("gamma.sxy", r.gamma.sxy);
  num("gamma.sxx", r.gamma.sxx);
  num("gamma.syy", r.gamma.syy);
  kv("gamma.n", std::to_string(r.gamma.n));
  num("gamma.estimate", single_gamma(r.gamma));
  for (const auto& z : r.zeta) {
    const std::string p = "zeta.q" + format_double(z.order);
    num(p, z.zeta);
    num(p + ".stderr", z.std_error);
  }
  return o.str();
}

inline std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

inline std::string manifest_text(const PipelineResult& r, const std::vector<OutputFile>& files) {
  std::ostringstream o;
  o << "fracanalog " << kVersion << '\n';
  o << "fftw " << fftw_version << '\n';
  o << "zlib " << zlibVersion() << "\n\n[config]\n" << render_config(r.config) << "\n[stages]\n";
  for (const auto& s : r.timings) o << s.stage << " " << format_double(s.seconds) << " s\n";
  o << "\n[outputs]\n";
  for (const auto& f : files) o << f.name << " crc32=" << hex32(f.crc32) << " bytes=" << f.bytes << '\n';
  o << "\n[warnings]\n";
  for (const auto& w : r.warnings) o << w << '\n';
  return o.str();
}

/// Writes the CSV exports, fits.txt and manifest.txt into `dir`.
inline std::vector<OutputFile> write_outputs(const PipelineResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<OutputFile> files;
  files.push_back(write_text_file(dir, "structure_functions.csv", structure_functions_csv(r.structure)));
  files.push_back(write_text_file(dir, "zeta.csv", zeta_csv(r.zeta)));
  files.push_back(write_text_file(dir, "volumes.csv", volumes_csv(r.volumes)));
  if (r.config.write_successor_volumes) {
    files.push_back(write_text_file(dir, "successor_volumes.csv", successor_volumes_csv(r.volumes)));
  }
  files.push_back(write_text_file(dir, "pdf.csv", pdf_csv(r.pdf)));
  files.push_back(write_text_file(dir, "pdf_rescaled.csv", pdf_csv(r.pdf_rescaled)));
  files.push_back(write_text_file(dir, "dispersion.csv", dispersion_csv(r.dispersion)));
  files.push_back(write_text_file(dir, "fits.txt", fits_text(r)));
  write_text_file(dir, "manifest.txt", manifest_text(r, files));
  return files;
}

/// Executes the pipeline and writes its output tree to config.output_dir.
inline PipelineResult run_pipeline(const RunConfig& config) {
  PipelineResult r = execute_pipeline(config);
  try {
    write_outputs(r, config.output_dir);
  } catch (const std::exception& e) {
    throw PipelineError("output", e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  double hurst = 0.0;
  double c2 = 0.0;
  std::string directory;
  std::string status = "ok";  // "ok" or "failed:<stage>"
  std::string error;
  double mean_log_delta_a = std::numeric_limits<double>::quiet_NaN();
  double std_log_delta_a = std::numeric_limits<double>::quiet_NaN();
  double dissipative_slope = std::numeric_limits<double>::quiet_NaN();
  double inertial_slope = std::numeric_limits<double>::quiet_NaN();
  double plateau = std::numeric_limits<double>::quiet_NaN();
  GammaSums gamma;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<GammaFit> pooled_gamma;
  std::string pooled_gamma_error;
};

inline std::string sweep_directory_name(double hurst, double c2) {
  return "H" + format_double(hurst) + "_c2" + format_double(c2);
}

inline SweepRow sweep_row(const PipelineResult& r) {
  SweepRow row;
  row.hurst = r.config.hurst;
  row.c2 = r.config.c2;
  row.mean_log_delta_a = r.pdf.mean;
  row.std_log_delta_a = r.pdf.stddev;
  row.dissipative_slope = r.fits.dissipative.slope;
  row.inertial_slope = r.fits.inertial.slope;
  row.plateau = r.fits.plateau_level;
  row.gamma = r.gamma;
  return row;
}

/// Pools the gamma sums of successful rows with c2 > 0; needs two distinct c2.
inline SweepResult pool_gamma(std::vector<SweepRow> rows) {
  SweepResult out;
  out.rows = std::move(rows);
  GammaSums total;
  std::set<double> distinct;
  std::size_t curves = 0;
  for (const auto& row : out.rows) {
    if (row.status != "ok" || !(row.c2 > 0.0)) continue;
    total += row.gamma;
    distinct.insert(row.c2);
    ++curves;
  }
  if (distinct.size() < 2) {
    out.pooled_gamma_error = "need successful points at two or more distinct c2 > 0";
    return out;
  }
  try {
    GammaFit g = gamma_from_sums(total);
    g.n_curves = curves;
    out.pooled_gamma = g;
  } catch (const std::exception& e) {
    out.pooled_gamma_error = e.what();
  }
  return out;
}

inline std::string summary_csv(const std::vector<SweepRow>& rows) {
  std::string text =
      "hurst,c2,mean_log_delta_a,std_log_delta_a,dissipative_slope,inertial_slope,plateau,"
      "gamma_sxy,gamma_sxx,gamma_syy,gamma_n,status\n";
  for (const auto& r : rows) {
    for (double v : {r.hurst, r.c2, r.mean_log_delta_a, r.std_log_delta_a, r.dissipative_slope, r.inertial_slope,
                     r.plateau, r.gamma.sxy, r.gamma.sxx, r.gamma.syy}) {
      text += format_double(v);
      text += ',';
    }
    text += std::to_string(r.gamma.n);
    text += ',';
    text += r.status;
    text += '\n';
  }
  return text;
}

inline std::string sweep_fits_text(const SweepResult& s) {
  std::ostringstream o;
  if (s.pooled_gamma) {
    o << "gamma = " << format_double(s.pooled_gamma->gamma) << '\n';
    o << "gamma.stderr = " << format_double(s.pooled_gamma->stderr_gamma) << '\n';
    o << "gamma.n_points = " << s.pooled_gamma->n_points << '\n';
    o << "gamma.n_curves = " << s.pooled_gamma->n_curves << '\n';
  } else {
    o << "gamma = nan\n";
    o << "gamma.error = " << s.pooled_gamma_error << '\n';
  }
  for (const auto& r : s.rows) {
    if (r.status != "ok") o << "failed " << r.directory << " " << r.status << ": " << r.error << '\n';
  }
  return o.str();
}

/// Runs every (H, c2) point of the grid into its own subdirectory and writes
/// summary.csv and sweep_fits.txt. A failing point is recorded and skipped.
inline SweepResult run_sweep(const RunConfig& config) {
  const std::vector<double> hs = config.hurst_grid.empty() ? std::vector<double>{config.hurst} : config.hurst_grid;
  const std::vector<double> cs = config.c2_grid.empty() ? std::vector<double>{config.c2} : config.c2_grid;
  std::filesystem::create_directories(config.output_dir);
  std::vector<SweepRow> rows;
  for (double h : hs) {
    for (double c2 : cs) {
      RunConfig point = config;
      point.hurst = h;
      point.c2 = c2;
      point.hurst_grid.clear();
      point.c2_grid.clear();
      const std::string name = sweep_directory_name(h, c2);
      point.output_dir = config.output_dir / name;
      SweepRow row;
      try {
        row = sweep_row(run_pipeline(point));
      } catch (const PipelineError& e) {
        row.status = "failed:" + e.stage();
        row.error = e.what();
      } catch (const std::exception& e) {
        row.status = "failed:unknown";
        row.error = e.what();
      }
      row.hurst = h;
      row.c2 = c2;
      row.directory = name;
      rows.push_back(std::move(row));
    }
  }
  SweepResult out = pool_gamma(std::move(rows));
  write_text_file(config.output_dir, "summary.csv", summary_csv(out.rows));
  write_text_file(config.output_dir, "sweep_fits.txt", sweep_fits_text(out));
  return out;
}

}  // namespace fracanalog
