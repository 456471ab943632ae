#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "seqmix/experiments.hpp"

#ifndef SEQMIX_VERSION
#define SEQMIX_VERSION "0.0.0"
#endif
#ifndef SEQMIX_GIT_DESCRIBE
#define SEQMIX_GIT_DESCRIBE "unknown"
#endif

namespace seqmix::exp {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string metadata_line(const Config& config, std::uint64_t seed) {
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(config.hash()));
  return std::string("# seqmix ") + SEQMIX_VERSION + ", git-describe=" +
         SEQMIX_GIT_DESCRIBE + ", config-hash=" + hash +
         ", seed=" + std::to_string(seed);
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::string& metadata,
                     const std::vector<std::string>& header)
    : path_(path) {
  buffer_ = metadata;
  buffer_ += '\n';
  for (const auto& h : header) field(h);
  end_row();
}

CsvWriter::~CsvWriter() {
  if (!closed_) {
    try {
      close();
    } catch (...) {
    }
  }
}

CsvWriter& CsvWriter::field(std::string_view s) {
  if (row_started_) buffer_ += ',';
  row_started_ = true;
  if (s.find_first_of(",\"\n") != std::string_view::npos) {
    buffer_ += '"';
    for (char c : s) {
      if (c == '"') buffer_ += '"';
      buffer_ += c;
    }
    buffer_ += '"';
  } else {
    buffer_ += s;
  }
  return *this;
}

CsvWriter& CsvWriter::field(double v) { return field(std::string_view(format_double(v))); }

CsvWriter& CsvWriter::field(long long v) {
  return field(std::string_view(std::to_string(v)));
}

void CsvWriter::end_row() {
  buffer_ += '\n';
  row_started_ = false;
}

void CsvWriter::close() {
  closed_ = true;
  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path_.string() + " for writing");
  out.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  out.close();
  if (!out) throw IoError("failed writing " + path_.string());
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace seqmix::exp
