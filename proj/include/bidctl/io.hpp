#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bidctl/domain.hpp"

namespace bidctl {

// ---------------------------------------------------------------------------
// Synthetic inventory
// ---------------------------------------------------------------------------

class InvalidDistributionParamsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Joint model for synthesized impression logs. Predicted CTR is log-normal,
/// the latent view probability is beta, and the clearing price couples
/// positively to both so that tightening a quality filter raises average
/// cost. Outcomes are drawn consistently with the predictions: clicked ~
/// Bernoulli(pCTR), viewable ~ Bernoulli(pView), converted ~
/// Bernoulli(pCTR * conversion_rate). A missing-rate fraction of records
/// carries no view-probability prediction; the latent value still drives the
/// viewable outcome and the price.
struct SynthesisParams {
  std::size_t count = 10000;
  std::uint64_t seed = 1;

  double ctr_median = 0.002;
  double ctr_dispersion = 0.5;  // sigma of log(pCTR)

  double view_prob_mean = 0.45;
  double view_prob_concentration = 8.0;  // alpha + beta of the beta law
  double missing_view_prob_rate = 0.05;

  double base_price_cpm = 1.0;
  double price_ctr_coupling = 200.0;  // CPM added per unit of pCTR
  double price_view_coupling = 2.0;   // CPM added per unit of pView
  double price_noise = 0.25;          // sigma of the log-normal price factor

  double conversion_rate = 0.3;
};

inline void validate_params(const SynthesisParams& p) {
  auto fail = [](const char* what) {
    throw InvalidDistributionParamsError(what);
  };
  if (p.count < 1) fail("count must be >= 1");
  if (!(p.ctr_median > 0.0) || p.ctr_median > 1.0)
    fail("ctr_median must be in (0, 1]");
  if (!(p.ctr_dispersion >= 0.0) || !std::isfinite(p.ctr_dispersion))
    fail("ctr_dispersion must be finite and >= 0");
  if (!(p.view_prob_mean > 0.0) || !(p.view_prob_mean < 1.0))
    fail("view_prob_mean must be in (0, 1)");
  if (!(p.view_prob_concentration > 0.0))
    fail("view_prob_concentration must be > 0");
  if (p.missing_view_prob_rate < 0.0 || p.missing_view_prob_rate > 1.0)
    fail("missing_view_prob_rate must be in [0, 1]");
  if (!(p.base_price_cpm >= 0.0) || !std::isfinite(p.base_price_cpm))
    fail("base_price_cpm must be finite and >= 0");
  if (!std::isfinite(p.price_ctr_coupling) ||
      !std::isfinite(p.price_view_coupling))
    fail("price couplings must be finite");
  if (!(p.price_noise >= 0.0) || !std::isfinite(p.price_noise))
    fail("price_noise must be finite and >= 0");
  if (p.conversion_rate < 0.0 || p.conversion_rate > 1.0)
    fail("conversion_rate must be in [0, 1]");
}

/// Deterministic given params + seed; the same call always yields the same
/// record list byte for byte.
inline std::vector<ImpressionRecord> generate_inventory(
    const SynthesisParams& p) {
  validate_params(p);

  std::mt19937_64 rng(p.seed);
  std::lognormal_distribution<double> ctr_dist(std::log(p.ctr_median),
                                               p.ctr_dispersion);
  const double alpha = p.view_prob_mean * p.view_prob_concentration;
  const double beta = (1.0 - p.view_prob_mean) * p.view_prob_concentration;
  std::gamma_distribution<double> gamma_a(alpha, 1.0);
  std::gamma_distribution<double> gamma_b(beta, 1.0);
  std::normal_distribution<double> price_log_noise(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<ImpressionRecord> out;
  out.reserve(p.count);
  for (std::size_t i = 0; i < p.count; ++i) {
    ImpressionRecord rec;
    rec.predicted_ctr = std::min(ctr_dist(rng), 1.0);

    const double a = gamma_a(rng);
    const double b = gamma_b(rng);
    const double view_prob =
        (a + b) > 0.0 ? a / (a + b) : p.view_prob_mean;

    const double noise = std::exp(p.price_noise * price_log_noise(rng));
    rec.clearing_price_cpm =
        std::max(0.01, (p.base_price_cpm +
                        p.price_ctr_coupling * rec.predicted_ctr +
                        p.price_view_coupling * view_prob) *
                           noise);

    const bool missing = uniform(rng) < p.missing_view_prob_rate;
    if (!missing) rec.predicted_view_prob = view_prob;

    rec.clicked = uniform(rng) < rec.predicted_ctr;
    rec.viewable = uniform(rng) < view_prob;
    rec.converted = uniform(rng) < rec.predicted_ctr * p.conversion_rate;
    out.push_back(rec);
  }
  return out;
}

/// Seeded random draw from a base inventory, with or without replacement.
/// Without replacement, count is capped at the base size.
inline std::vector<ImpressionRecord> sample_inventory(
    std::span<const ImpressionRecord> base, std::size_t count,
    std::uint64_t seed, bool with_replacement) {
  if (base.empty())
    throw std::invalid_argument("cannot sample from an empty inventory");
  std::mt19937_64 rng(seed);
  std::vector<ImpressionRecord> out;
  if (with_replacement) {
    std::uniform_int_distribution<std::size_t> pick(0, base.size() - 1);
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(base[pick(rng)]);
    return out;
  }
  count = std::min(count, base.size());
  std::vector<std::size_t> indices(base.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, indices.size() - 1);
    std::swap(indices[i], indices[pick(rng)]);
  }
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(base[indices[i]]);
  return out;
}

// ---------------------------------------------------------------------------
// CSV log format
// ---------------------------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "predicted_ctr,predicted_view_prob,clearing_price_cpm,clicked,viewable,"
    "converted";

class CsvError : public std::runtime_error {
 public:
  CsvError(std::string message, std::size_t line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " +
                                          message
                                    : std::move(message)),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string to_csv(std::span<const ImpressionRecord> records) {
  std::string out;
  out.reserve(records.size() * 40 + 80);
  out += kCsvHeader;
  out += '\n';
  for (const auto& r : records) {
    out += format_double(r.predicted_ctr);
    out += ',';
    if (r.predicted_view_prob) out += format_double(*r.predicted_view_prob);
    out += ',';
    out += format_double(r.clearing_price_cpm);
    out += ',';
    out += r.clicked ? '1' : '0';
    out += ',';
    out += r.viewable ? '1' : '0';
    out += ',';
    out += r.converted ? '1' : '0';
    out += '\n';
  }
  return out;
}

namespace detail {

inline double parse_field_double(std::string_view field, const char* name,
                                 std::size_t line) {
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw CsvError(std::string(name) + " is not a number: '" +
                       std::string(field) + "'",
                   line);
  return value;
}

inline bool parse_field_bool(std::string_view field, const char* name,
                             std::size_t line) {
  if (field == "0") return false;
  if (field == "1") return true;
  throw CsvError(std::string(name) + " must be 0 or 1, got '" +
                     std::string(field) + "'",
                 line);
}

inline std::vector<std::string_view> split_fields(std::string_view row) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = row.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(row.substr(start));
      return fields;
    }
    fields.push_back(row.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace detail

/// Parses a whole CSV document. Any malformed row aborts the load with its
/// line number; nothing is returned partially.
inline std::vector<ImpressionRecord> parse_csv(std::string_view text) {
  if (text.empty()) throw CsvError("empty file");

  std::vector<ImpressionRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view row = (eol == std::string_view::npos)
                               ? text.substr(pos)
                               : text.substr(pos, eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    ++line_no;

    if (line_no == 1) {
      if (row != kCsvHeader)
        throw CsvError("header mismatch, expected '" +
                           std::string(kCsvHeader) + "'",
                       1);
      continue;
    }
    if (row.empty()) continue;  // tolerate a trailing newline

    const auto fields = detail::split_fields(row);
    if (fields.size() != 6)
      throw CsvError("expected 6 fields, got " +
                         std::to_string(fields.size()),
                     line_no);

    ImpressionRecord rec;
    rec.predicted_ctr =
        detail::parse_field_double(fields[0], "predicted_ctr", line_no);
    if (rec.predicted_ctr < 0.0 || rec.predicted_ctr > 1.0)
      throw CsvError("predicted_ctr must be in [0, 1]", line_no);

    if (!fields[1].empty()) {
      const double v = detail::parse_field_double(
          fields[1], "predicted_view_prob", line_no);
      if (v < 0.0 || v > 1.0)
        throw CsvError("predicted_view_prob must be in [0, 1]", line_no);
      rec.predicted_view_prob = v;
    }

    rec.clearing_price_cpm =
        detail::parse_field_double(fields[2], "clearing_price_cpm", line_no);
    if (rec.clearing_price_cpm < 0.0 ||
        !std::isfinite(rec.clearing_price_cpm))
      throw CsvError("clearing_price_cpm must be finite and >= 0", line_no);

    rec.clicked = detail::parse_field_bool(fields[3], "clicked", line_no);
    rec.viewable = detail::parse_field_bool(fields[4], "viewable", line_no);
    rec.converted = detail::parse_field_bool(fields[5], "converted", line_no);
    out.push_back(rec);
  }
  return out;
}

inline std::vector<ImpressionRecord> load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

inline void write_csv(std::span<const ImpressionRecord> records,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CsvError("cannot open '" + path + "' for writing");
  out << to_csv(records);
  if (!out) throw CsvError("failed writing '" + path + "'");
}

}  // namespace bidctl
