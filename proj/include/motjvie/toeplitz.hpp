#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace motjvie {

using Complex = std::complex<double>;

// Smallest 2^a 3^b 5^c 7^d that is >= n.
int smooth_size(int n);

// Multilevel Toeplitz operator y[i] = sum_j T[i - j] x[j] with i in
// [0, rows) and j in [0, cols) per axis, embedded in a circulant of size
// n >= rows + cols - 1 per axis. Axes are ordered slowest first; the real
// to complex transform halves the last axis.
class CirculantEmbedding {
 public:
  CirculantEmbedding(std::vector<int> rows, std::vector<int> cols);
  ~CirculantEmbedding();
  CirculantEmbedding(const CirculantEmbedding&) = delete;
  CirculantEmbedding& operator=(const CirculantEmbedding&) = delete;

  int rank() const { return static_cast<int>(n_.size()); }
  const std::vector<int>& rows() const { return rows_; }
  const std::vector<int>& cols() const { return cols_; }
  const std::vector<int>& sizes() const { return n_; }
  std::size_t real_size() const { return real_size_; }
  std::size_t spectrum_size() const { return spectrum_size_; }
  std::size_t row_count() const;
  std::size_t col_count() const;

  // Spectrum of the generator. gen receives the signed offset d per axis,
  // with -(cols-1) <= d <= rows-1, and is called once per offset.
  std::vector<Complex> spectrum(const std::function<double(const int* d)>& gen);
  void spectrum(const std::function<double(const int* d)>& gen, Complex* out);

  // Zero-padded forward transform of x laid out on the cols box.
  void forward(const double* x, Complex* out);
  // Inverse transform of in (overwritten) restricted to the rows box:
  // y = scale * result, or y += scale * result when accumulate is set.
  void inverse(Complex* in, double* y, double scale = 1.0, bool accumulate = false);

  // y = T x using a precomputed spectrum.
  void apply(const Complex* spec, const double* x, double* y);

  // 1/N of the unnormalised inverse; inverse() already applies it.
  double inverse_scale() const { return 1.0 / static_cast<double>(real_size_); }

 private:
  std::vector<int> rows_, cols_, n_;
  std::size_t real_size_ = 0, spectrum_size_ = 0;
  double* real_ = nullptr;
  Complex* freq_ = nullptr;
  void* fwd_ = nullptr;
  void* inv_ = nullptr;
};

// Unpadded real transform of a box with the given sizes (slowest first).
// Used for circulant approximations, where wrap-around is intended.
class CyclicTransform {
 public:
  explicit CyclicTransform(std::vector<int> sizes);
  ~CyclicTransform();
  CyclicTransform(const CyclicTransform&) = delete;
  CyclicTransform& operator=(const CyclicTransform&) = delete;

  std::size_t real_size() const { return real_size_; }
  std::size_t spectrum_size() const { return spectrum_size_; }
  void forward(const double* x, Complex* out);
  // normalised: inverse(forward(x)) == x
  void inverse(const Complex* in, double* y);

 private:
  std::vector<int> n_;
  std::size_t real_size_ = 0, spectrum_size_ = 0;
  double* real_ = nullptr;
  Complex* freq_ = nullptr;
  void* fwd_ = nullptr;
  void* inv_ = nullptr;
};

// acc[i] += a[i] * b[i]
void multiply_accumulate(const Complex* a, const Complex* b, Complex* acc, std::size_t n);

// Dense reference for tests and small problems.
std::vector<double> toeplitz_dense_apply(const std::vector<int>& rows, const std::vector<int>& cols,
                                         const std::function<double(const int* d)>& gen,
                                         const std::vector<double>& x);

}  // namespace motjvie
