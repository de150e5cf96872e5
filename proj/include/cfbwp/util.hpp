#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace cfbwp::util {

/// Shortest round-trip decimal form of v (std::to_chars).
std::string format_double(double v);

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// splitmix64 step; used to derive independent RNG streams from one seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Standard normal quantile (Acklam's rational approximation, |err| < 1e-8).
double normal_quantile(double p);

double mean(std::span<const double> xs);
double sample_sd(std::span<const double> xs);  // n-1 denominator

}  // namespace cfbwp::util
