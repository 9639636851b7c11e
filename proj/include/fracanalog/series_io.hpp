#pragma once

// Binary series format, little-endian throughout:
//
//   offset  size  field
//        0     4  magic "FRAC"
//        4     4  version (uint32, currently 1)
//        8     8  n (uint64)
//       16     8  dt (float64)
//       24     8  hurst (float64, NaN when the series has no generation params)
//       32     8  c2 (float64)
//       40     8  tau_k (float64)
//       48     8  big_t (float64)
//       56     8  seed (uint64)
//       64  8*n  values (float64)

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <system_error>

#include "fracanalog/series.hpp"

namespace fracanalog {

inline constexpr std::uint32_t kSeriesFormatVersion = 1;
inline constexpr std::size_t kSeriesHeaderBytes = 64;

namespace detail {

inline void put_u64(unsigned char* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}
inline void put_u32(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}
inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}
inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
inline void put_f64(unsigned char* p, double v) { put_u64(p, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64(p)); }

}  // namespace detail

/// Shortest decimal form that round-trips, '.' separator regardless of locale.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf.data(), end);
}

inline void write_series_binary(const std::filesystem::path& path, const TimeSeries& series) {
  std::array<unsigned char, kSeriesHeaderBytes> header{};
  std::memcpy(header.data(), "FRAC", 4);
  detail::put_u32(header.data() + 4, kSeriesFormatVersion);
  detail::put_u64(header.data() + 8, series.size());
  detail::put_f64(header.data() + 16, series.dt);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto& p = series.params;
  detail::put_f64(header.data() + 24, p ? p->hurst : nan);
  detail::put_f64(header.data() + 32, p ? p->c2 : nan);
  detail::put_f64(header.data() + 40, p ? p->tau_k : nan);
  detail::put_f64(header.data() + 48, p ? p->big_t : nan);
  detail::put_u64(header.data() + 56, p ? p->seed : 0);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(header.data()), header.size());
  std::array<unsigned char, 8> word{};
  for (double v : series.values) {
    detail::put_f64(word.data(), v);
    out.write(reinterpret_cast<const char*>(word.data()), word.size());
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline TimeSeries read_series_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::array<unsigned char, kSeriesHeaderBytes> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != static_cast<std::streamsize>(header.size())) {
    throw std::runtime_error(path.string() + ": truncated header");
  }
  if (std::memcmp(header.data(), "FRAC", 4) != 0) {
    throw std::runtime_error(path.string() + ": bad magic, not a FRAC series file");
  }
  const auto version = detail::get_u32(header.data() + 4);
  if (version != kSeriesFormatVersion) {
    throw std::runtime_error(path.string() + ": unsupported version " + std::to_string(version));
  }
  const auto n = detail::get_u64(header.data() + 8);
  TimeSeries ts;
  ts.dt = detail::get_f64(header.data() + 16);
  const double hurst = detail::get_f64(header.data() + 24);
  if (!std::isnan(hurst)) {
    ProcessParams p;
    p.hurst = hurst;
    p.c2 = detail::get_f64(header.data() + 32);
    p.tau_k = detail::get_f64(header.data() + 40);
    p.big_t = detail::get_f64(header.data() + 48);
    p.seed = detail::get_u64(header.data() + 56);
    p.n = static_cast<std::size_t>(n);
    p.dt = ts.dt;
    ts.params = p;
  }
  ts.values.resize(static_cast<std::size_t>(n));
  std::array<unsigned char, 8> word{};
  for (auto& v : ts.values) {
    in.read(reinterpret_cast<char*>(word.data()), word.size());
    if (in.gcount() != 8) throw std::runtime_error(path.string() + ": truncated data section");
    v = detail::get_f64(word.data());
  }
  return ts;
}

/// One value per line under a `value` header.
inline void write_series_csv(std::ostream& out, const TimeSeries& series) {
  out << "value\n";
  for (double v : series.values) out << format_double(v) << '\n';
}

inline void write_series_csv(const std::filesystem::path& path, const TimeSeries& series) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_series_csv(out, series);
}

}  // namespace fracanalog
