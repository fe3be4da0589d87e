#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace t2ia::testing {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  return dot(a, b) / (std::sqrt(dot(a, a)) * std::sqrt(dot(b, b)));
}

}  // namespace

double mmd2_double_sum(const Matrix& x, const Matrix& y) {
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  double xx = 0.0, xy = 0.0, yy = 0.0;
  for (const auto& a : x) {
    for (const auto& b : x) xx += cosine(a, b);
  }
  for (const auto& a : x) {
    for (const auto& b : y) xy += cosine(a, b);
  }
  for (const auto& a : y) {
    for (const auto& b : y) yy += cosine(a, b);
  }
  return xx / (n * n) - 2.0 * xy / (n * m) + yy / (m * m);
}

double welch_t_reference(const std::vector<double>& a, const std::vector<double>& b) {
  auto moments = [](const std::vector<double>& v) {
    long double sum = 0.0L;
    for (double x : v) sum += x;
    const long double mean = sum / static_cast<long double>(v.size());
    long double ss = 0.0L;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::pair{mean, ss / static_cast<long double>(v.size() - 1)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const long double se = std::sqrt(va / a.size() + vb / b.size());
  return static_cast<double>((ma - mb) / se);
}

double ks_reference(const std::vector<double>& a, const std::vector<double>& b) {
  auto ecdf = [](const std::vector<double>& v, double t) {
    std::size_t c = 0;
    for (double x : v) c += x <= t ? 1 : 0;
    return static_cast<double>(c) / static_cast<double>(v.size());
  };
  double best = 0.0;
  for (const auto* set : {&a, &b}) {
    for (double t : *set) best = std::max(best, std::abs(ecdf(b, t) - ecdf(a, t)));
  }
  return best;
}

double kl2_naive(const Matrix& images, const Matrix& corpus, const std::vector<double>& text,
                 double alpha) {
  double total = 0.0;
  for (const auto& x : images) {
    double z = 0.0;
    for (const auto& c : corpus) z += std::exp(alpha * dot(x, c));
    total += std::log(z) - alpha * dot(x, text);
  }
  return total / static_cast<double>(images.size());
}

std::size_t levenshtein_matrix(const std::string& a, const std::string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  }
  return d[a.size()][b.size()];
}

std::vector<std::string> all_strings(const std::string& alphabet, std::size_t max_len) {
  std::vector<std::string> out{""};
  std::size_t layer_begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t layer_end = out.size();
    for (std::size_t i = layer_begin; i < layer_end; ++i) {
      for (char c : alphabet) out.push_back(out[i] + c);
    }
    layer_begin = layer_end;
  }
  return out;
}

Matrix random_unit_rows(std::uint64_t seed, std::size_t rows, std::size_t dim) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, std::vector<double>(dim));
  for (auto& row : out) {
    for (auto& v : row) v = normal(gen);
    const double n = std::sqrt(dot(row, row));
    for (auto& v : row) v /= n;
  }
  return out;
}

}  // namespace t2ia::testing
