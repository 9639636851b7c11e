#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fracanalog/embedding.hpp"
#include "fracanalog/numeric.hpp"
#include "fracanalog/series.hpp"
#include "fracanalog/series_io.hpp"
#include "fracanalog/statistics.hpp"

namespace fracanalog {

/// Configuration problem; line() is 0 when it does not come from a specific line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct RunConfig {
  std::string preset = "desk";

  // process
  double hurst = 0.5;
  double c2 = 0.0;
  double tau_k = 5.0;
  double big_t = 512.0;
  double dt = 1.0;

  std::size_t n_database = std::size_t{1} << 20;
  std::size_t n_measure = std::size_t{1} << 18;

  std::size_t p = 3;
  std::size_t m = 1;

  std::size_t k = 50;
  double tau_min = 1.0;
  double tau_max = 0.0;  // 0 selects 4 T
  int tau_per_decade = 10;

  std::size_t bins = 100;
  DomainWindows windows;
  AlphaMethod alpha_method = AlphaMethod::kOls;

  std::vector<double> sf_orders{1, 2, 3, 4, 5, 6};
  int sf_per_decade = 12;

  std::uint64_t seed_database = 1;
  std::uint64_t seed_measure = 2;

  std::filesystem::path output_dir = "fracanalog_out";
  unsigned threads = 0;  // 0 = hardware concurrency
  bool write_successor_volumes = true;

  // sweep axes; empty means the single value above
  std::vector<double> hurst_grid;
  std::vector<double> c2_grid;

  double effective_tau_max() const { return tau_max > 0.0 ? tau_max : 4.0 * big_t; }

  std::vector<std::size_t> tau_grid() const {
    return log_uniform_grid(tau_min, effective_tau_max(), tau_per_decade);
  }

  ProcessParams process(std::size_t n, std::uint64_t seed) const {
    ProcessParams pp;
    pp.hurst = hurst;
    pp.c2 = c2;
    pp.tau_k = tau_k;
    pp.big_t = big_t;
    pp.n = n;
    pp.dt = dt;
    pp.seed = seed;
    return pp;
  }
  ProcessParams database_params() const { return process(n_database, seed_database); }
  ProcessParams measure_params() const { return process(n_measure, seed_measure); }
  EmbedParams embed_params() const { return {p, m}; }
};

inline void apply_preset(RunConfig& c, std::string_view name) {
  if (name == "desk") {
    c.n_database = std::size_t{1} << 20;
    c.n_measure = std::size_t{1} << 18;
    c.big_t = 512.0;
  } else if (name == "paper") {
    c.n_database = 5 * (std::size_t{1} << 21);
    c.n_measure = std::size_t{1} << 21;
    c.big_t = 2350.0;
  } else {
    throw ConfigError(0, "unknown preset '" + std::string(name) + "' (expected desk or paper)");
  }
  c.tau_k = 5.0;
  c.k = 50;
  c.preset = std::string(name);
}

inline RunConfig preset_config(std::string_view name) {
  RunConfig c;
  apply_preset(c, name);
  return c;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view v, const char* type_name) {
  T out{};
  const char* first = v.data();
  const char* last = v.data() + v.size();
  if (!v.empty() && v.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last || v.empty()) {
    throw std::invalid_argument("expected " + std::string(type_name) + ", got '" + std::string(v) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) throw std::invalid_argument("expected a finite number, got '" + std::string(v) + "'");
  }
  return out;
}

inline bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + std::string(v) + "'");
}

inline std::vector<double> parse_list(std::string_view v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = v.find(',', start);
    out.push_back(parse_number<double>(trim(v.substr(start, comma - start)), "a number list"));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

inline const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto real = [](double RunConfig::*f) {
      return [f](RunConfig& c, std::string_view v) { c.*f = parse_number<double>(v, "a number"); };
    };
    auto size = [](std::size_t RunConfig::*f) {
      return [f](RunConfig& c, std::string_view v) {
        c.*f = static_cast<std::size_t>(parse_number<std::uint64_t>(v, "a non-negative integer"));
      };
    };
    auto seed = [](std::uint64_t RunConfig::*f) {
      return [f](RunConfig& c, std::string_view v) { c.*f = parse_number<std::uint64_t>(v, "an unsigned integer"); };
    };
    auto integer = [](int RunConfig::*f) {
      return [f](RunConfig& c, std::string_view v) { c.*f = parse_number<int>(v, "an integer"); };
    };
    auto window = [](double DomainWindows::*f) {
      return [f](RunConfig& c, std::string_view v) { c.windows.*f = parse_number<double>(v, "a number"); };
    };
    auto list = [](std::vector<double> RunConfig::*f) {
      return [f](RunConfig& c, std::string_view v) { c.*f = parse_list(v); };
    };
    t["hurst"] = real(&RunConfig::hurst);
    t["c2"] = real(&RunConfig::c2);
    t["tau_k"] = real(&RunConfig::tau_k);
    t["big_t"] = real(&RunConfig::big_t);
    t["dt"] = real(&RunConfig::dt);
    t["n_database"] = size(&RunConfig::n_database);
    t["n_measure"] = size(&RunConfig::n_measure);
    t["p"] = size(&RunConfig::p);
    t["m"] = size(&RunConfig::m);
    t["k"] = size(&RunConfig::k);
    t["tau_min"] = real(&RunConfig::tau_min);
    t["tau_max"] = real(&RunConfig::tau_max);
    t["tau_per_decade"] = integer(&RunConfig::tau_per_decade);
    t["bins"] = size(&RunConfig::bins);
    t["inertial_lo_factor"] = window(&DomainWindows::inertial_lo_factor);
    t["inertial_hi_fraction"] = window(&DomainWindows::inertial_hi_fraction);
    t["plateau_factor"] = window(&DomainWindows::plateau_factor);
    t["alpha_method"] = [](RunConfig& c, std::string_view v) {
      if (v == "ols") c.alpha_method = AlphaMethod::kOls;
      else if (v == "theil_sen") c.alpha_method = AlphaMethod::kTheilSen;
      else throw std::invalid_argument("expected ols or theil_sen, got '" + std::string(v) + "'");
    };
    t["sf_orders"] = list(&RunConfig::sf_orders);
    t["sf_per_decade"] = integer(&RunConfig::sf_per_decade);
    t["seed_database"] = seed(&RunConfig::seed_database);
    t["seed_measure"] = seed(&RunConfig::seed_measure);
    t["output_dir"] = [](RunConfig& c, std::string_view v) {
      if (v.empty()) throw std::invalid_argument("output_dir must not be empty");
      c.output_dir = std::filesystem::path(std::string(v));
    };
    t["threads"] = [](RunConfig& c, std::string_view v) {
      c.threads = static_cast<unsigned>(parse_number<std::uint32_t>(v, "a non-negative integer"));
    };
    t["write_successor_volumes"] = [](RunConfig& c, std::string_view v) { c.write_successor_volumes = parse_bool(v); };
    t["hurst_grid"] = list(&RunConfig::hurst_grid);
    t["c2_grid"] = list(&RunConfig::c2_grid);
    return t;
  }();
  return table;
}

}  // namespace detail

/// Checks cross-field invariants. `line_of` maps a key to the line that set
/// it so errors point at the offending line.
inline void validate(const RunConfig& c, const std::map<std::string, std::size_t, std::less<>>& line_of = {}) {
  // Cross-field errors point at the latest line among the keys involved.
  auto fail = [&](std::initializer_list<std::string_view> keys, const std::string& msg) {
    std::size_t line = 0;
    for (auto key : keys) {
      if (const auto it = line_of.find(key); it != line_of.end()) line = std::max(line, it->second);
    }
    throw ConfigError(line, std::string(*keys.begin()) + ": " + msg);
  };
  auto check_hurst = [&](std::string_view key, double h) {
    if (!(h > 0.0 && h < 1.0)) fail({key}, "Hurst exponent " + format_double(h) + " violates 0 < H < 1");
  };
  auto check_c2 = [&](std::string_view key, double v) {
    if (!(v >= 0.0)) fail({key}, "intermittency " + format_double(v) + " violates c2 >= 0");
  };
  check_hurst("hurst", c.hurst);
  for (double h : c.hurst_grid) check_hurst("hurst_grid", h);
  check_c2("c2", c.c2);
  for (double v : c.c2_grid) check_c2("c2_grid", v);
  if (!(c.tau_k > 0.0)) fail({"tau_k"}, "must be > 0");
  if (!(c.big_t > c.tau_k)) fail({"big_t", "tau_k"}, "must exceed tau_k");
  if (!(c.dt > 0.0)) fail({"dt"}, "must be > 0");
  if (c.n_measure <= c.big_t) fail({"n_measure", "big_t"}, "must exceed big_t");
  if (c.n_database <= c.big_t) fail({"n_database", "big_t"}, "must exceed big_t");
  if (c.p < 1) fail({"p"}, "must be >= 1");
  if (c.m < 1) fail({"m"}, "must be >= 1");
  if (c.k < 2) fail({"k"}, "must be >= 2");
  if (c.tau_per_decade < 1) fail({"tau_per_decade"}, "must be >= 1");
  if (c.sf_per_decade < 1) fail({"sf_per_decade"}, "must be >= 1");
  if (!(c.tau_min >= 1.0)) fail({"tau_min"}, "must be >= 1");
  if (c.tau_max != 0.0 && !(c.tau_max >= c.tau_min)) {
    fail({"tau_max", "tau_min"}, "must be >= tau_min (or 0 for 4 big_t)");
  }
  if (c.bins < 1) fail({"bins"}, "must be >= 1");
  if (c.sf_orders.empty()) fail({"sf_orders"}, "must list at least one order");
  for (double q : c.sf_orders) {
    if (!(q > 0.0)) fail({"sf_orders"}, "orders must be > 0");
  }
  if (!(c.windows.inertial_lo_factor > 0.0)) fail({"inertial_lo_factor"}, "must be > 0");
  if (!(c.windows.inertial_hi_fraction > 0.0)) fail({"inertial_hi_fraction"}, "must be > 0");
  if (!(c.windows.plateau_factor > 0.0)) fail({"plateau_factor"}, "must be > 0");
  if (c.seed_database == c.seed_measure) {
    fail({"seed_measure", "seed_database"},
         "seed_database and seed_measure must differ (the two realizations are independent)");
  }
  const std::size_t span = (c.p - 1) * c.m;
  const auto tmax = static_cast<std::size_t>(std::round(c.effective_tau_max()));
  if (c.n_database <= span + tmax || c.n_database - span - tmax < c.k) {
    fail({"n_database", "k", "tau_max", "big_t", "p", "m"},
         "too short for k=" + std::to_string(c.k) + " analogues with tau up to " + std::to_string(tmax));
  }
  if (c.n_measure <= span) fail({"n_measure", "p", "m"}, "shorter than the embedding window");
}

/// Non-fatal observations about a valid configuration.
inline std::vector<std::string> config_warnings(const RunConfig& c) {
  std::vector<std::string> w;
  if (c.n_database < 10 * c.n_measure) {
    w.push_back("n_database < 10 n_measure: analogue density is limited relative to the number of targets");
  }
  for (auto [name, n] : {std::pair{"n_database", c.n_database}, std::pair{"n_measure", c.n_measure}}) {
    if (static_cast<double>(n) < 8.0 * c.big_t) {
      w.push_back(std::string(name) + " < 8 big_t: large-scale statistics are poorly sampled");
    }
  }
  return w;
}

/// Parses key=value lines ('#' starts a comment). A `preset` key is applied
/// before all other keys regardless of its position; `preset_override`, when
/// given, replaces it. Absent keys keep the preset defaults.
inline RunConfig parse_config(std::string_view text, std::optional<std::string> preset_override = std::nullopt) {
  struct Entry {
    std::size_t line;
    std::string key, value;
  };
  std::vector<Entry> entries;
  std::map<std::string, std::size_t, std::less<>> line_of;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected key=value, got '" + std::string(line) + "'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(line_no, "missing key before '='");
    if (key != "preset" && !detail::setters().count(key)) throw ConfigError(line_no, "unknown key '" + key + "'");
    if (auto [it, fresh] = line_of.emplace(key, line_no); !fresh) {
      throw ConfigError(line_no, "duplicate key '" + key + "' (first set on line " + std::to_string(it->second) + ")");
    }
    entries.push_back({line_no, key, value});
  }

  RunConfig c;
  std::string preset = "desk";
  std::size_t preset_line = 0;
  for (const auto& e : entries) {
    if (e.key == "preset") {
      preset = e.value;
      preset_line = e.line;
    }
  }
  if (preset_override) {
    preset = *preset_override;
    preset_line = 0;
  }
  try {
    apply_preset(c, preset);
  } catch (const ConfigError& err) {
    throw ConfigError(preset_line, err.what());
  }
  for (const auto& e : entries) {
    if (e.key == "preset") continue;
    try {
      detail::setters().at(e.key)(c, e.value);
    } catch (const std::invalid_argument& err) {
      throw ConfigError(e.line, e.key + ": " + err.what());
    }
  }
  validate(c, line_of);
  return c;
}

/// Renders every key; parse_config(render_config(c)) == c field for field.
inline std::string render_config(const RunConfig& c) {
  std::ostringstream o;
  auto line = [&](std::string_view key, const std::string& v) { o << key << " = " << v << '\n'; };
  line("preset", c.preset);
  line("hurst", format_double(c.hurst));
  line("c2", format_double(c.c2));
  line("tau_k", format_double(c.tau_k));
  line("big_t", format_double(c.big_t));
  line("dt", format_double(c.dt));
  line("n_database", std::to_string(c.n_database));
  line("n_measure", std::to_string(c.n_measure));
  line("p", std::to_string(c.p));
  line("m", std::to_string(c.m));
  line("k", std::to_string(c.k));
  line("tau_min", format_double(c.tau_min));
  line("tau_max", format_double(c.tau_max));
  line("tau_per_decade", std::to_string(c.tau_per_decade));
  line("bins", std::to_string(c.bins));
  line("inertial_lo_factor", format_double(c.windows.inertial_lo_factor));
  line("inertial_hi_fraction", format_double(c.windows.inertial_hi_fraction));
  line("plateau_factor", format_double(c.windows.plateau_factor));
  line("alpha_method", c.alpha_method == AlphaMethod::kOls ? "ols" : "theil_sen");
  line("sf_orders", detail::join(c.sf_orders));
  line("sf_per_decade", std::to_string(c.sf_per_decade));
  line("seed_database", std::to_string(c.seed_database));
  line("seed_measure", std::to_string(c.seed_measure));
  line("output_dir", c.output_dir.string());
  line("threads", std::to_string(c.threads));
  line("write_successor_volumes", c.write_successor_volumes ? "true" : "false");
  line("hurst_grid", detail::join(c.hurst_grid));
  line("c2_grid", detail::join(c.c2_grid));
  return o.str();
}

}  // namespace fracanalog
