#include "motjvie/toeplitz.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <utility>

#include "motjvie/common.hpp"

namespace motjvie {

namespace {

// FFTW planning is not thread safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void init_threads_once() {
  static const bool done = [] {
    fftw_init_threads();
    return true;
  }();
  (void)done;
}

// Walks a multi-index over box extents, last axis fastest.
bool advance(std::vector<int>& idx, const std::vector<int>& lo, const std::vector<int>& hi) {
  for (int a = static_cast<int>(idx.size()) - 1; a >= 0; --a) {
    if (++idx[a] < hi[a]) return true;
    idx[a] = lo[a];
  }
  return false;
}

}  // namespace

int smooth_size(int n) {
  if (n <= 1) return 1;
  for (int m = n;; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

CirculantEmbedding::CirculantEmbedding(std::vector<int> rows, std::vector<int> cols)
    : rows_(std::move(rows)), cols_(std::move(cols)) {
  if (rows_.empty() || rows_.size() != cols_.size())
    throw ConfigError("toeplitz: rows and cols must have the same nonzero rank");
  for (std::size_t a = 0; a < rows_.size(); ++a) {
    if (rows_[a] < 1 || cols_[a] < 1) throw ConfigError("toeplitz: empty axis");
    n_.push_back(smooth_size(rows_[a] + cols_[a] - 1));
  }
  real_size_ = 1;
  for (int n : n_) real_size_ *= static_cast<std::size_t>(n);
  spectrum_size_ = real_size_ / n_.back() * (n_.back() / 2 + 1);

  init_threads_once();
  std::lock_guard<std::mutex> lock(planner_mutex());
  real_ = static_cast<double*>(fftw_malloc(sizeof(double) * real_size_));
  freq_ = reinterpret_cast<Complex*>(fftw_malloc(sizeof(fftw_complex) * spectrum_size_));
  if (!real_ || !freq_) throw NumericalError("toeplitz: FFT buffer allocation failed");
  fftw_plan_with_nthreads(real_size_ >= 32768 ? thread_count() : 1);
  // Estimate mode keeps plans, and therefore rounding, reproducible.
  fwd_ = fftw_plan_dft_r2c(rank(), n_.data(), real_, reinterpret_cast<fftw_complex*>(freq_),
                           FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r(rank(), n_.data(), reinterpret_cast<fftw_complex*>(freq_), real_,
                           FFTW_ESTIMATE);
  if (!fwd_ || !inv_) throw NumericalError("toeplitz: FFT planning failed");
}

CirculantEmbedding::~CirculantEmbedding() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  if (inv_) fftw_destroy_plan(static_cast<fftw_plan>(inv_));
  fftw_free(real_);
  fftw_free(freq_);
}

CyclicTransform::CyclicTransform(std::vector<int> sizes) : n_(std::move(sizes)) {
  if (n_.empty()) throw ConfigError("cyclic transform needs at least one axis");
  real_size_ = 1;
  for (int n : n_) {
    if (n < 1) throw ConfigError("cyclic transform sizes must be positive");
    real_size_ *= static_cast<std::size_t>(n);
  }
  spectrum_size_ = real_size_ / n_.back() * (n_.back() / 2 + 1);
  init_threads_once();
  std::lock_guard<std::mutex> lock(planner_mutex());
  real_ = static_cast<double*>(fftw_malloc(sizeof(double) * real_size_));
  freq_ = reinterpret_cast<Complex*>(fftw_malloc(sizeof(fftw_complex) * spectrum_size_));
  if (!real_ || !freq_) throw NumericalError("cyclic transform: buffer allocation failed");
  fftw_plan_with_nthreads(1);
  const int r = static_cast<int>(n_.size());
  fwd_ = fftw_plan_dft_r2c(r, n_.data(), real_, reinterpret_cast<fftw_complex*>(freq_), FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r(r, n_.data(), reinterpret_cast<fftw_complex*>(freq_), real_, FFTW_ESTIMATE);
  if (!fwd_ || !inv_) throw NumericalError("cyclic transform: FFT planning failed");
}

CyclicTransform::~CyclicTransform() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  if (inv_) fftw_destroy_plan(static_cast<fftw_plan>(inv_));
  fftw_free(real_);
  fftw_free(freq_);
}

void CyclicTransform::forward(const double* x, Complex* out) {
  std::copy(x, x + real_size_, real_);
  fftw_execute(static_cast<fftw_plan>(fwd_));
  std::copy(freq_, freq_ + spectrum_size_, out);
}

void CyclicTransform::inverse(const Complex* in, double* y) {
  std::copy(in, in + spectrum_size_, freq_);
  fftw_execute(static_cast<fftw_plan>(inv_));
  const double s = 1.0 / static_cast<double>(real_size_);
  for (std::size_t i = 0; i < real_size_; ++i) y[i] = s * real_[i];
}

std::size_t CirculantEmbedding::row_count() const {
  std::size_t n = 1;
  for (int r : rows_) n *= r;
  return n;
}

std::size_t CirculantEmbedding::col_count() const {
  std::size_t n = 1;
  for (int c : cols_) n *= c;
  return n;
}

std::vector<Complex> CirculantEmbedding::spectrum(const std::function<double(const int* d)>& gen) {
  std::vector<Complex> out(spectrum_size_);
  spectrum(gen, out.data());
  return out;
}

void CirculantEmbedding::spectrum(const std::function<double(const int* d)>& gen, Complex* out) {
  std::fill(real_, real_ + real_size_, 0.0);
  const int r = rank();
  std::vector<int> lo(r), hi(r), d(r);
  for (int a = 0; a < r; ++a) {
    lo[a] = -(cols_[a] - 1);
    hi[a] = rows_[a];
  }
  d = lo;
  do {
    std::size_t pos = 0;
    for (int a = 0; a < r; ++a) pos = pos * n_[a] + (d[a] >= 0 ? d[a] : d[a] + n_[a]);
    real_[pos] = gen(d.data());
  } while (advance(d, lo, hi));
  fftw_execute(static_cast<fftw_plan>(fwd_));
  std::copy(freq_, freq_ + spectrum_size_, out);
}

void CirculantEmbedding::forward(const double* x, Complex* out) {
  std::fill(real_, real_ + real_size_, 0.0);
  const int r = rank();
  const int inner = cols_.back();
  const std::size_t outer = col_count() / inner;
  std::vector<int> idx(r, 0);
  for (std::size_t o = 0; o < outer; ++o) {
    // idx holds the outer coordinates of the current contiguous run
    std::size_t pos = 0;
    for (int a = 0; a < r - 1; ++a) pos = pos * n_[a] + idx[a];
    pos *= n_.back();
    std::copy(x + o * inner, x + (o + 1) * inner, real_ + pos);
    for (int a = r - 2; a >= 0; --a) {
      if (++idx[a] < cols_[a]) break;
      idx[a] = 0;
    }
  }
  fftw_execute(static_cast<fftw_plan>(fwd_));
  std::copy(freq_, freq_ + spectrum_size_, out);
}

void CirculantEmbedding::inverse(Complex* in, double* y, double scale, bool accumulate) {
  std::copy(in, in + spectrum_size_, freq_);
  fftw_execute(static_cast<fftw_plan>(inv_));
  const int r = rank();
  const int inner = rows_.back();
  const std::size_t outer = row_count() / inner;
  const double s = scale * inverse_scale();
  std::vector<int> idx(r, 0);
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t pos = 0;
    for (int a = 0; a < r - 1; ++a) pos = pos * n_[a] + idx[a];
    pos *= n_.back();
    double* dst = y + o * inner;
    const double* src = real_ + pos;
    if (accumulate)
      for (int i = 0; i < inner; ++i) dst[i] += s * src[i];
    else
      for (int i = 0; i < inner; ++i) dst[i] = s * src[i];
    for (int a = r - 2; a >= 0; --a) {
      if (++idx[a] < rows_[a]) break;
      idx[a] = 0;
    }
  }
}

void CirculantEmbedding::apply(const Complex* spec, const double* x, double* y) {
  std::vector<Complex> buf(spectrum_size_);
  forward(x, buf.data());
  for (std::size_t i = 0; i < spectrum_size_; ++i) buf[i] *= spec[i];
  inverse(buf.data(), y);
}

void multiply_accumulate(const Complex* a, const Complex* b, Complex* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += a[i] * b[i];
}

std::vector<double> toeplitz_dense_apply(const std::vector<int>& rows, const std::vector<int>& cols,
                                         const std::function<double(const int* d)>& gen,
                                         const std::vector<double>& x) {
  const int r = static_cast<int>(rows.size());
  std::size_t nr = 1;
  for (int v : rows) nr *= v;
  std::vector<double> y(nr, 0.0);
  std::vector<int> zero(r, 0), i(r, 0), j(r, 0), d(r);
  std::size_t yi = 0;
  do {
    std::size_t xj = 0;
    j = zero;
    do {
      for (int a = 0; a < r; ++a) d[a] = i[a] - j[a];
      y[yi] += gen(d.data()) * x[xj];
      ++xj;
    } while (advance(j, zero, cols));
    ++yi;
  } while (advance(i, zero, rows));
  return y;
}

}  // namespace motjvie
