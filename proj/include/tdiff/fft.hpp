#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>

#include <fftw3.h>

#include "tdiff/errors.hpp"

namespace tdiff {

/// In-place complex FFT of a fixed length. FFTW planning is serialized
/// through a process-wide mutex; execution is reentrant. Plans are made with
/// FFTW_ESTIMATE so the chosen algorithm (and the rounding) does not depend
/// on timing.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    if (n == 0) throw ContractError("FFT length must be positive");
    std::lock_guard lock(planner_mutex());
    auto* scratch = fftw_alloc_complex(n);
    forward_ = fftw_plan_dft_1d(static_cast<int>(n), scratch, scratch, FFTW_FORWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward_ = fftw_plan_dft_1d(static_cast<int>(n), scratch, scratch, FFTW_BACKWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (forward_ == nullptr || backward_ == nullptr) throw Error("FFTW planning failed");
  }

  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  ~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  std::size_t size() const { return n_; }

  /// Unnormalized forward transform, sum_j x_j exp(-2 pi i j m / n).
  void forward(std::span<std::complex<double>> data) const { execute(forward_, data); }

  /// Inverse transform including the 1/n factor.
  void backward(std::span<std::complex<double>> data) const {
    execute(backward_, data);
    const double scale = 1.0 / static_cast<double>(n_);
    for (auto& v : data) v *= scale;
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  void execute(fftw_plan plan, std::span<std::complex<double>> data) const {
    if (data.size() != n_) throw ContractError("FFT buffer length does not match the plan");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, p, p);
  }

  std::size_t n_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace tdiff
