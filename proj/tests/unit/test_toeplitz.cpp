#include <map>
#include <random>

#include "doctest.h"
#include "motjvie/toeplitz.hpp"

using namespace motjvie;

TEST_CASE("smooth sizes") {
  CHECK(smooth_size(1) == 1);
  CHECK(smooth_size(11) == 12);
  CHECK(smooth_size(13) == 14);
  CHECK(smooth_size(17) == 18);
  CHECK(smooth_size(97) == 98);
  CHECK(smooth_size(121) == 125);
}

TEST_CASE("one-dimensional Toeplitz product against explicit sums") {
  const int R = 5, C = 7;
  std::vector<double> t(R + C - 1), x(C);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& v : t) v = u(rng);
  for (double& v : x) v = u(rng);
  auto gen = [&](const int* d) { return t[d[0] + C - 1]; };
  CirculantEmbedding emb({R}, {C});
  CHECK(emb.sizes()[0] >= R + C - 1);
  const auto spec = emb.spectrum(gen);
  std::vector<double> y(R);
  emb.apply(spec.data(), x.data(), y.data());
  for (int i = 0; i < R; ++i) {
    double ref = 0;
    for (int j = 0; j < C; ++j) ref += t[i - j + C - 1] * x[j];
    CHECK(y[i] == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("three-level Toeplitz product with rectangular blocks") {
  const std::vector<int> rows{3, 4, 2}, cols{2, 4, 3};
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  std::map<std::array<int, 3>, double> table;
  int calls = 0;
  auto gen = [&](const int* d) {
    ++calls;
    auto& v = table[{d[0], d[1], d[2]}];
    if (v == 0) v = u(rng);
    return v;
  };
  CirculantEmbedding emb(rows, cols);
  const auto spec = emb.spectrum(gen);
  CHECK(calls == (3 + 2 - 1) * (4 + 4 - 1) * (2 + 3 - 1));
  std::vector<double> x(2 * 4 * 3), y(3 * 4 * 2);
  for (double& v : x) v = u(rng);
  emb.apply(spec.data(), x.data(), y.data());
  double worst = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 2; ++c) {
        double ref = 0;
        for (int p = 0; p < 2; ++p)
          for (int q = 0; q < 4; ++q)
            for (int r = 0; r < 3; ++r) ref += table.at({a - p, b - q, c - r}) * x[(p * 4 + q) * 3 + r];
        worst = std::max(worst, std::abs(y[(a * 4 + b) * 2 + c] - ref));
      }
  CHECK(worst < 1e-13);

  // split path: forward, accumulate two spectra, one inverse
  std::vector<Complex> X(emb.spectrum_size()), acc(emb.spectrum_size());
  emb.forward(x.data(), X.data());
  multiply_accumulate(spec.data(), X.data(), acc.data(), acc.size());
  multiply_accumulate(spec.data(), X.data(), acc.data(), acc.size());
  std::vector<double> y2(y.size(), 1.0);
  emb.inverse(acc.data(), y2.data(), 0.5, true);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y2[i] == doctest::Approx(y[i] + 1.0).epsilon(1e-13));
}
