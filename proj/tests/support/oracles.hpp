#pragma once

// Reference implementations written independently of the library, used as
// test oracles. They favour the most literal formula over speed.

#include <cstdint>
#include <string>
#include <vector>

namespace t2ia::testing {

using Matrix = std::vector<std::vector<double>>;

/// Biased MMD^2 with the cosine kernel as a literal double sum over raw
/// (not necessarily normalized) rows.
double mmd2_double_sum(const Matrix& x, const Matrix& y);

/// Welch t, (mean(a) - mean(b)) / sqrt(var(a)/n + var(b)/m), in long double.
double welch_t_reference(const std::vector<double>& a, const std::vector<double>& b);

/// sup |F_b - F_a| evaluated at every sample point, O(n^2).
double ks_reference(const std::vector<double>& a, const std::vector<double>& b);

/// mean_i [ log sum_c exp(alpha x_i . t_c) - alpha x_i . t ] without any
/// stabilization.
double kl2_naive(const Matrix& images, const Matrix& corpus, const std::vector<double>& text,
                 double alpha);

/// Full-matrix Wagner-Fischer over bytes.
std::size_t levenshtein_matrix(const std::string& a, const std::string& b);

/// Every string of length <= max_len over the alphabet, shortest first.
std::vector<std::string> all_strings(const std::string& alphabet, std::size_t max_len);

/// Seeded rows of Gaussian entries, each normalized to unit length.
Matrix random_unit_rows(std::uint64_t seed, std::size_t rows, std::size_t dim);

}  // namespace t2ia::testing
