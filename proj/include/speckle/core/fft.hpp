#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "speckle/core/types.hpp"

namespace speckle::fft {

static_assert(sizeof(fftw_complex) == sizeof(std::complex<double>));

namespace detail {
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
struct FftwFree {
  void operator()(std::complex<double>* p) const { fftw_free(p); }
};
}  // namespace detail

/// SIMD-aligned complex buffer allocated with fftw_malloc.
class Buffer {
 public:
  Buffer() = default;
  explicit Buffer(std::size_t n)
      : n_(n), data_(static_cast<std::complex<double>*>(fftw_malloc(n * sizeof(std::complex<double>)))) {
    if (n > 0 && !data_) throw ResourceError("fftw_malloc failed");
    for (std::size_t i = 0; i < n; ++i) data_.get()[i] = 0.0;
  }

  std::complex<double>* data() { return data_.get(); }
  const std::complex<double>* data() const { return data_.get(); }
  std::size_t size() const { return n_; }
  std::complex<double>& operator[](std::size_t i) { return data_.get()[i]; }
  const std::complex<double>& operator[](std::size_t i) const { return data_.get()[i]; }
  std::span<std::complex<double>> span() { return {data(), n_}; }

  fftw_complex* raw() { return reinterpret_cast<fftw_complex*>(data()); }

 private:
  std::size_t n_ = 0;
  std::unique_ptr<std::complex<double>, detail::FftwFree> data_;
};

/// 1-D complex FFT plan of fixed size and sign. Executable from any thread on
/// any pair of fftw_malloc'd buffers of the planned size.
class Plan {
 public:
  Plan(std::size_t n, int sign) : n_(n) {
    Buffer in(n), out(n);
    std::lock_guard lock(detail::planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), in.raw(), out.raw(), sign, FFTW_ESTIMATE);
    if (!plan_) throw ResourceError("FFTW could not create a plan");
  }
  ~Plan() {
    if (plan_) {
      std::lock_guard lock(detail::planner_mutex());
      fftw_destroy_plan(plan_);
    }
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;

  std::size_t size() const { return n_; }

  void execute(Buffer& in, Buffer& out) const {
    if (in.size() != n_ || out.size() != n_) throw InvalidArgument("buffer size does not match plan");
    fftw_execute_dft(plan_, in.raw(), out.raw());
  }

 private:
  std::size_t n_ = 0;
  fftw_plan plan_ = nullptr;
};

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Chirp-z transform out[p] = sum_m in[m] exp(i theta m p), m < M, p < P,
/// evaluated by Bluestein's convolution.
class ChirpZ {
 public:
  struct Workspace {
    Buffer a, fa;
    explicit Workspace(std::size_t n) : a(n), fa(n) {}
  };

  ChirpZ(std::size_t in_len, std::size_t out_len, double theta)
      : m_(in_len), p_(out_len), theta_(theta) {
    if (in_len == 0 || out_len == 0) throw InvalidArgument("chirp-z lengths must be positive");
    n_ = next_pow2(std::max(m_ + p_ - 1, 2 * m_));
    forward_ = std::make_shared<Plan>(n_, FFTW_FORWARD);
    backward_ = std::make_shared<Plan>(n_, FFTW_BACKWARD);

    in_chirp_.resize(m_);
    for (std::size_t m = 0; m < m_; ++m) in_chirp_[m] = chirp(static_cast<double>(m), +1);
    out_chirp_.resize(p_);
    for (std::size_t p = 0; p < p_; ++p) out_chirp_[p] = chirp(static_cast<double>(p), +1) / static_cast<double>(n_);

    Buffer b(n_);
    for (std::size_t k = 0; k < p_; ++k) b[k] = chirp(static_cast<double>(k), -1);
    for (std::size_t k = 1; k < m_; ++k) b[n_ - k] = chirp(static_cast<double>(k), -1);
    kernel_ = Buffer(n_);
    forward_->execute(b, kernel_);
  }

  std::size_t input_size() const { return m_; }
  std::size_t output_size() const { return p_; }
  std::size_t fft_size() const { return n_; }
  double theta() const { return theta_; }

  Workspace workspace() const { return Workspace(n_); }

  /// Bytes held by one workspace plus the shared kernel.
  static std::size_t footprint(std::size_t in_len, std::size_t out_len) {
    const std::size_t n = next_pow2(std::max(in_len + out_len - 1, 2 * in_len));
    return 3 * n * sizeof(std::complex<double>);
  }

  void apply(std::span<const std::complex<double>> in, std::span<std::complex<double>> out,
             Workspace& ws) const {
    if (in.size() != m_ || out.size() != p_) throw InvalidArgument("chirp-z span size mismatch");
    for (std::size_t m = 0; m < m_; ++m) ws.a[m] = in[m] * in_chirp_[m];
    for (std::size_t m = m_; m < n_; ++m) ws.a[m] = 0.0;
    forward_->execute(ws.a, ws.fa);
    for (std::size_t i = 0; i < n_; ++i) ws.fa[i] *= kernel_[i];
    backward_->execute(ws.fa, ws.a);
    for (std::size_t p = 0; p < p_; ++p) out[p] = ws.a[p] * out_chirp_[p];
  }

 private:
  std::complex<double> chirp(double k, int sign) const {
    const double arg = std::fmod(0.5 * theta_ * k * k, 2.0 * 3.14159265358979323846);
    return std::polar(1.0, sign * arg);
  }

  std::size_t m_ = 0, p_ = 0, n_ = 0;
  double theta_ = 0.0;
  std::shared_ptr<Plan> forward_, backward_;
  std::vector<std::complex<double>> in_chirp_, out_chirp_;
  Buffer kernel_;
};

}  // namespace speckle::fft
