#pragma once

// Adaptive explicit Runge-Kutta integration (Dormand-Prince 8(5,3)) with a
// 7th-order continuous extension for output between steps.
//
// The integrator is generic over the Eigen dense vector type; callers supply
// rhs(t, y, dy) and an observer(sample_index, t, y). Integration restarts at
// every knot so that derivative discontinuities of the right-hand side (pulse
// segment boundaries) never fall inside a step.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qst {

struct IntegratorConfig {
  double rtol = 1e-10;
  double atol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  /// Uniform output samples over [0, t_final], endpoints included (>= 2).
  int samples = 2001;
  long max_steps = 20'000'000;
};

struct IntegratorStats {
  long steps = 0;
  long rejected = 0;
  long evaluations = 0;
};

class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double time)
      : std::runtime_error(what + " at t = " + std::to_string(time)),
        time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// `count` uniformly spaced points on [t0, t1], endpoints exact.
std::vector<double> uniform_samples(double t0, double t1, int count);

namespace dop853 {
#include "qst/detail/dop853_tableau.inc"
}  // namespace dop853

template <class Vector>
class Dop853 {
 public:
  using Real = typename Vector::RealScalar;

  explicit Dop853(const IntegratorConfig& cfg) : cfg_(cfg) {
    if (!(cfg.rtol > 0.0) || !(cfg.atol > 0.0)) {
      throw std::invalid_argument("integrator tolerances must be positive");
    }
  }

  /// Integrates y from knots.front() to knots.back(). Each sample time in
  /// `samples` (sorted, inside the knot range) is reported exactly once.
  template <class Rhs, class Observer>
  IntegratorStats run(Rhs&& rhs, Vector& y, std::span<const double> knots,
                      std::span<const double> samples, Observer&& observe) {
    stats_ = {};
    if (knots.size() < 2) throw std::invalid_argument("need at least two knots");
    next_sample_ = 0;
    samples_ = samples;
    emit_until(knots.front(), y, observe);
    double h = 0.0;
    for (std::size_t seg = 0; seg + 1 < knots.size(); ++seg) {
      const double t0 = knots[seg];
      const double t1 = knots[seg + 1];
      if (!(t1 > t0)) continue;
      integrate_segment(rhs, y, t0, t1, h, observe);
    }
    emit_until(knots.back(), y, observe);
    return stats_;
  }

 private:
  static constexpr int n_stages = 12;
  static constexpr double safety = 0.9;
  static constexpr double min_factor = 0.2;
  static constexpr double max_factor = 10.0;
  static constexpr double error_exponent = -1.0 / 8.0;

  template <class Observer>
  void emit_until(double t, const Vector& y, Observer& observe) {
    while (next_sample_ < samples_.size() && samples_[next_sample_] <= t) {
      observe(next_sample_, samples_[next_sample_], y);
      ++next_sample_;
    }
  }

  Real rms(const Vector& v) const {
    return std::sqrt(v.squaredNorm() / static_cast<Real>(v.size()));
  }

  template <class Rhs>
  double initial_step(Rhs& rhs, double t0, const Vector& y0, const Vector& f0,
                      double span) {
    const Vector scale_inv =
        (cfg_.atol + y0.cwiseAbs().array() * cfg_.rtol).inverse().matrix().template cast<typename Vector::Scalar>();
    const double d0 = rms(y0.cwiseProduct(scale_inv));
    const double d1 = rms(f0.cwiseProduct(scale_inv));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    Vector y1 = y0 + h0 * f0;
    Vector f1(y0.size());
    rhs(t0 + h0, y1, f1);
    ++stats_.evaluations;
    const double d2 = rms((f1 - f0).cwiseProduct(scale_inv)) / h0;
    double h1;
    if (d1 <= 1e-15 && d2 <= 1e-15) {
      h1 = std::max(1e-6, h0 * 1e-3);
    } else {
      h1 = std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
    }
    return std::min({100.0 * h0, h1, span});
  }

  template <class Rhs, class Observer>
  void integrate_segment(Rhs& rhs, Vector& y, double t0, double t1, double& h,
                         Observer& observe) {
    using dop853::a;
    using dop853::c;
    const auto n = y.size();
    for (auto& k : k_) k.resize(n);
    Vector y_new(n), tmp(n), err5(n), err3(n);
    rhs(t0, y, k_[0]);
    ++stats_.evaluations;
    const double span = t1 - t0;
    if (h <= 0.0) h = initial_step(rhs, t0, y, k_[0], span);
    h = std::min({h, span, cfg_.max_step});

    double t = t0;
    while (t < t1) {
      const double min_step = 10.0 * std::numeric_limits<double>::epsilon() *
                              std::max(1.0, std::abs(t));
      bool rejected_once = false;
      while (true) {
        if (++stats_.steps > cfg_.max_steps) {
          throw NumericalError("step budget exhausted", t);
        }
        if (h < min_step) throw NumericalError("step size underflow", t);
        double t_new = t + h;
        if (t_new >= t1 || t1 - t_new < min_step) {
          t_new = t1;
        }
        const double step = t_new - t;

        for (int s = 1; s < n_stages; ++s) {
          tmp = y;
          for (int j = 0; j < s; ++j) {
            if (a[s][j] != 0.0) tmp.noalias() += (step * a[s][j]) * k_[j];
          }
          rhs(t + c[s] * step, tmp, k_[s]);
        }
        y_new = y;
        for (int j = 0; j < n_stages; ++j) {
          if (a[n_stages][j] != 0.0) y_new.noalias() += (step * a[n_stages][j]) * k_[j];
        }
        rhs(t_new, y_new, k_[n_stages]);
        stats_.evaluations += n_stages;

        err5.setZero();
        err3.setZero();
        for (int j = 0; j <= n_stages; ++j) {
          if (dop853::e5[j] != 0.0) err5.noalias() += dop853::e5[j] * k_[j];
          if (dop853::e3[j] != 0.0) err3.noalias() += dop853::e3[j] * k_[j];
        }
        const auto scale =
            (cfg_.atol + y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array() * cfg_.rtol)
                .eval();
        const Real e5n = (err5.cwiseAbs().array() / scale).matrix().squaredNorm();
        const Real e3n = (err3.cwiseAbs().array() / scale).matrix().squaredNorm();
        double error_norm = 0.0;
        if (e5n != 0.0 || e3n != 0.0) {
          error_norm = std::abs(step) * e5n /
                       std::sqrt((e5n + 0.01 * e3n) * static_cast<Real>(n));
        }
        if (!std::isfinite(error_norm)) {
          throw NumericalError("non-finite error estimate", t);
        }

        if (error_norm < 1.0) {
          double factor = error_norm == 0.0
                              ? max_factor
                              : std::min(max_factor,
                                         safety * std::pow(error_norm, error_exponent));
          if (rejected_once) factor = std::min(1.0, factor);
          emit_dense(rhs, t, step, y, y_new, observe);
          y.swap(y_new);
          std::swap(k_[0], k_[n_stages]);
          t = t_new;
          // A step clipped by the segment end says little about the next one.
          if (step >= h) h = std::min(h * factor, cfg_.max_step);
          break;
        }
        ++stats_.rejected;
        rejected_once = true;
        h *= std::max(min_factor, safety * std::pow(error_norm, error_exponent));
      }
    }
  }

  // Reports samples inside (t, t + step]; builds the continuous extension
  // only when a sample falls strictly inside the step.
  template <class Rhs, class Observer>
  void emit_dense(Rhs& rhs, double t, double step, const Vector& y_old,
                  const Vector& y_new, Observer& observe) {
    using dop853::a;
    using dop853::c;
    const double t_new = t + step;
    bool built = false;
    while (next_sample_ < samples_.size() && samples_[next_sample_] <= t_new) {
      const double ts = samples_[next_sample_];
      if (ts >= t_new || ts <= t) {
        observe(next_sample_, ts, ts <= t ? y_old : y_new);
      } else {
        if (!built) {
          Vector tmp(y_old.size());
          for (int s = n_stages + 1; s < 16; ++s) {
            tmp = y_old;
            for (int j = 0; j < s; ++j) {
              if (a[s][j] != 0.0) tmp.noalias() += (step * a[s][j]) * k_[j];
            }
            k_[s].resize(y_old.size());
            rhs(t + c[s] * step, tmp, k_[s]);
          }
          stats_.evaluations += 3;
          const Vector delta = y_new - y_old;
          f_[0] = delta;
          f_[1] = step * k_[0] - delta;
          f_[2] = 2.0 * delta - step * (k_[n_stages] + k_[0]);
          for (int r = 0; r < 4; ++r) {
            f_[3 + r].setZero(y_old.size());
            for (int j = 0; j < 16; ++j) {
              if (dop853::d[r][j] != 0.0) f_[3 + r].noalias() += (step * dop853::d[r][j]) * k_[j];
            }
          }
          built = true;
        }
        const double x = (ts - t) / step;
        Vector v = f_[6];
        for (int i = 5; i >= 0; --i) {
          v *= ((6 - i) % 2 == 1) ? x : (1.0 - x);
          v += f_[i];
        }
        v *= x;
        v += y_old;
        observe(next_sample_, ts, v);
      }
      ++next_sample_;
    }
  }

  IntegratorConfig cfg_;
  IntegratorStats stats_;
  std::array<Vector, 16> k_;
  std::array<Vector, 7> f_;
  std::span<const double> samples_;
  std::size_t next_sample_ = 0;
};

/// Convenience wrapper: integrate with the given knots and sample times.
template <class Vector, class Rhs, class Observer>
IntegratorStats integrate(Rhs&& rhs, Vector& y, std::span<const double> knots,
                          std::span<const double> samples, Observer&& observe,
                          const IntegratorConfig& cfg) {
  Dop853<Vector> solver(cfg);
  return solver.run(rhs, y, knots, samples, observe);
}

}  // namespace qst
