#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "etp/errors.hpp"

namespace etp {

using cplx = std::complex<double>;

struct OdeOptions {
  double abs_tol = 1e-11;
  double rel_tol = 1e-9;
  double h_init = 0.0;           // 0: choose automatically
  long max_steps = 4'000'000;
  double rescale_above = 1e140;  // renormalize state magnitude past this
  double rescale_below = 1e-140;
};

/// State of the second-order complex ODE written as a first-order pair.
struct OdeState {
  std::array<cplx, 2> y{};   // (y, y')
  double log_scale = 0.0;    // actual values are y * exp(log_scale)
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct Dopri5Tab {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // embedded 4th-order weights
  static constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                          e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;
};

}  // namespace detail

/// Integrates y'' = c(r) y (given as rhs filling (y', c(r) y)) from r0 to r1,
/// splitting exactly at the sorted interior breakpoints so the coefficient is
/// smooth within every step. `segment_cb(a, b)` is invoked when integration
/// enters segment (a,b) so the caller can rebind coefficient lookups;
/// `on_accept(r, state)` fires after every accepted step (and at r0).
///
/// Direction is inferred from r0/r1; breakpoints may be in any order.
/// The state magnitude is renormalized into log_scale when it leaves
/// [rescale_below, rescale_above]; all recorded values share that convention.
template <class Rhs, class SegmentCb, class Accept>
OdeState integrate_second_order(Rhs&& rhs, SegmentCb&& segment_cb, Accept&& on_accept,
                                std::array<cplx, 2> y0, double r0, double r1,
                                std::span<const double> breakpoints,
                                const OdeOptions& opt = {}) {
  using Tab = detail::Dopri5Tab;
  const double dir = (r1 >= r0) ? 1.0 : -1.0;

  std::vector<double> stops;
  for (double b : breakpoints)
    if ((b - r0) * dir > 1e-14 && (r1 - b) * dir > 1e-14) stops.push_back(b);
  stops.push_back(r1);
  std::sort(stops.begin(), stops.end());
  if (dir < 0) std::reverse(stops.begin(), stops.end());

  OdeState st;
  st.y = y0;
  double r = r0;
  on_accept(r, st);

  auto renorm = [&](OdeState& s) -> bool {
    const double m = std::max(std::abs(s.y[0]), std::abs(s.y[1]));
    if (m > opt.rescale_above || (m < opt.rescale_below && m > 0.0)) {
      const double lg = std::log(m);
      const double inv = std::exp(-lg);
      s.y[0] *= inv;
      s.y[1] *= inv;
      s.log_scale += lg;
      return true;
    }
    return false;
  };

  long steps = 0;
  double prev_seg = r0;
  for (double seg_end : stops) {
    segment_cb(prev_seg, seg_end);
    double h = opt.h_init != 0.0 ? std::abs(opt.h_init) : 1e-4 * (1.0 + std::abs(r));
    h = std::min(h, std::abs(seg_end - r));
    std::array<cplx, 2> k1;
    rhs(r, st.y, k1);
    bool k1_fresh = true;

    while ((seg_end - r) * dir > 1e-14 * (1.0 + std::abs(seg_end))) {
      if (++steps > opt.max_steps)
        throw StiffnessFailure("ode: max step count exceeded");
      h = std::min(h, std::abs(seg_end - r));
      const double hs = dir * h;
      if (h < 1e-14 * (1.0 + std::abs(r)))
        throw StiffnessFailure("ode: step size underflow");

      if (!k1_fresh) rhs(r, st.y, k1);

      std::array<cplx, 2> k2, k3, k4, k5, k6, k7, yt, y5;
      for (int i = 0; i < 2; ++i) yt[i] = st.y[i] + hs * (Tab::a21 * k1[i]);
      rhs(r + Tab::c2 * hs, yt, k2);
      for (int i = 0; i < 2; ++i)
        yt[i] = st.y[i] + hs * (Tab::a31 * k1[i] + Tab::a32 * k2[i]);
      rhs(r + Tab::c3 * hs, yt, k3);
      for (int i = 0; i < 2; ++i)
        yt[i] = st.y[i] + hs * (Tab::a41 * k1[i] + Tab::a42 * k2[i] + Tab::a43 * k3[i]);
      rhs(r + Tab::c4 * hs, yt, k4);
      for (int i = 0; i < 2; ++i)
        yt[i] = st.y[i] + hs * (Tab::a51 * k1[i] + Tab::a52 * k2[i] + Tab::a53 * k3[i] +
                                Tab::a54 * k4[i]);
      rhs(r + Tab::c5 * hs, yt, k5);
      for (int i = 0; i < 2; ++i)
        yt[i] = st.y[i] + hs * (Tab::a61 * k1[i] + Tab::a62 * k2[i] + Tab::a63 * k3[i] +
                                Tab::a64 * k4[i] + Tab::a65 * k5[i]);
      rhs(r + hs, yt, k6);
      for (int i = 0; i < 2; ++i)
        y5[i] = st.y[i] + hs * (Tab::b1 * k1[i] + Tab::b3 * k3[i] + Tab::b4 * k4[i] +
                                Tab::b5 * k5[i] + Tab::b6 * k6[i]);
      rhs(r + hs, y5, k7);

      double err = 0.0;
      for (int i = 0; i < 2; ++i) {
        const cplx e = hs * ((Tab::b1 - Tab::e1) * k1[i] + (Tab::b3 - Tab::e3) * k3[i] +
                             (Tab::b4 - Tab::e4) * k4[i] + (Tab::b5 - Tab::e5) * k5[i] +
                             (Tab::b6 - Tab::e6) * k6[i] + (0.0 - Tab::e7) * k7[i]);
        const double sc =
            opt.abs_tol + opt.rel_tol * std::max(std::abs(st.y[i]), std::abs(y5[i]));
        const double q = std::abs(e) / sc;
        err = std::max(err, q);
      }

      if (err <= 1.0) {
        r += hs;
        st.y = y5;
        k1 = k7;  // FSAL
        k1_fresh = true;
        if (renorm(st)) k1_fresh = false;  // state rescaled; k1 is stale
        on_accept(r, st);
      }
      // on rejection k1 is still the RHS at the unchanged (r, y)
      const double fac =
          (err == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h *= fac;
    }
    r = seg_end;
    prev_seg = seg_end;
  }
  return st;
}

}  // namespace etp
