#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "etp/errors.hpp"

namespace etp {

using cplx = std::complex<double>;

/// Hard cap on the Bessel/harmonic order this library is audited for.
inline constexpr int kMaxOrder = 40;

/// (l, m) index of a spherical harmonic, |m| <= l.
struct SphericalOrder {
  int l = 0;
  int m = 0;
  SphericalOrder(int l_, int m_) : l(l_), m(m_) {
    if (l < 0 || std::abs(m) > l)
      throw ValidationError("SphericalOrder: require l >= 0 and |m| <= l");
  }
};

/// Value pair (j_l, j_l') together with a log-magnitude offset:
/// the actual function values are j * exp(log_scale), jp * exp(log_scale).
/// log_scale equals |Im z|, which keeps the stored parts O(1/|z|) even when
/// the true values overflow double range.
struct ScaledBessel {
  cplx j;
  cplx jp;
  double log_scale = 0.0;
};

namespace detail {

// sin(z)*exp(-|Im z|) and cos(z)*exp(-|Im z|), stable for any Im z.
inline void scaled_trig(cplx z, cplx& sin_s, cplx& cos_s) {
  const double x = z.real(), y = z.imag();
  const cplx eip = std::polar(1.0, x);   // e^{ix}
  const cplx eim = std::conj(eip);       // e^{-ix}
  const double t = std::exp(-2.0 * std::abs(y));
  const cplx i(0.0, 1.0);
  if (y >= 0.0) {
    sin_s = (eip * t - eim) / (2.0 * i);
    cos_s = (eip * t + eim) * 0.5;
  } else {
    sin_s = (eip - eim * t) / (2.0 * i);
    cos_s = (eip + eim * t) * 0.5;
  }
}

// Taylor series of j_l near z = 0 (25 terms); returns unscaled value.
inline cplx sph_j_taylor(int l, cplx z) {
  // j_l(z) = z^l sum_m (-z^2/2)^m / (m! (2l+2m+1)!!)
  double dfact = 1.0;  // (2l+1)!!
  for (int i = 1; i <= 2 * l + 1; i += 2) dfact *= i;
  const cplx z2 = -0.5 * z * z;
  cplx term = 1.0 / dfact;
  cplx sum = term;
  for (int m = 1; m <= 25; ++m) {
    term *= z2 / (static_cast<double>(m) * (2.0 * l + 2.0 * m + 1.0));
    sum += term;
  }
  cplx zl = 1.0;
  for (int i = 0; i < l; ++i) zl *= z;
  return zl * sum;
}

// j_0..j_2 on pre-scaled trig values; all entries share the caller's scale.
inline cplx sph_j_low(int l, cplx z, cplx sin_s, cplx cos_s) {
  const cplx iz = 1.0 / z;
  switch (l) {
    case 0: return sin_s * iz;
    case 1: return sin_s * iz * iz - cos_s * iz;
    default: return (3.0 * iz * iz - 1.0) * sin_s * iz - 3.0 * iz * iz * cos_s;
  }
}

}  // namespace detail

/// Spherical Bessel function of the first kind with its derivative, computed
/// with the magnitude factor exp(|Im z|) split off. Relative accuracy audited
/// to ~1e-12 for |z| <= 200, l <= kMaxOrder.
inline ScaledBessel sph_bessel_j_scaled(int l, cplx z) {
  if (l < 0 || l > kMaxOrder)
    throw OutOfRange("sph_bessel_j_scaled: order outside [0, 40]");
  const double az = std::abs(z);
  ScaledBessel out;
  out.log_scale = std::abs(z.imag());

  if (az < 0.5) {
    // Taylor regime; the scale factor is benign here.
    const double s = std::exp(-out.log_scale);
    if (az == 0.0) {
      out.j = (l == 0) ? 1.0 : 0.0;
      out.jp = (l == 1) ? 1.0 / 3.0 : 0.0;
      out.log_scale = 0.0;
      return out;
    }
    const cplx jl = detail::sph_j_taylor(l, z);
    const cplx jlp1 = detail::sph_j_taylor(l + 1, z);
    out.j = jl * s;
    out.jp = (static_cast<double>(l) / z * jl - jlp1) * s;
    return out;
  }

  cplx sin_s, cos_s;
  detail::scaled_trig(z, sin_s, cos_s);

  if (l <= 2) {
    out.j = detail::sph_j_low(l, z, sin_s, cos_s);
    const cplx jm1 = (l == 0) ? cos_s / z  // j_{-1}(z) = cos z / z
                              : detail::sph_j_low(l - 1, z, sin_s, cos_s);
    out.jp = jm1 - (static_cast<double>(l) + 1.0) / z * out.j;
    return out;
  }

  if (static_cast<double>(l) <= az + 2.0) {
    // Upward recurrence is stable in the oscillatory regime l <~ |z|.
    cplx jm = sin_s / z;                    // j_0
    cplx jc = sin_s / (z * z) - cos_s / z;  // j_1
    for (int n = 1; n < l; ++n) {
      const cplx jn = (2.0 * n + 1.0) / z * jc - jm;
      jm = jc;
      jc = jn;
    }
    out.j = jc;
    out.jp = jm - (static_cast<double>(l) + 1.0) / z * jc;
    return out;
  }

  // Miller's downward recurrence, normalized against j_0 or j_1.
  const int nstart = l + 16 + static_cast<int>(std::sqrt(42.0 * l) + 0.5 * az);
  cplx jp1 = 0.0, jc = 1e-30;
  cplx jl_un = 0.0, jlm1_un = 0.0, j1_un = 0.0, j0_un = 0.0;
  for (int n = nstart; n >= 0; --n) {
    const cplx jm1 = (2.0 * n + 1.0) / z * jc - jp1;
    jp1 = jc;
    jc = jm1;
    if (n - 1 == l) jl_un = jc;          // after the update jc holds j_{n-1}
    if (n - 1 == l - 1) jlm1_un = jc;
    if (n - 1 == 1) j1_un = jc;
    if (n - 1 == 0) j0_un = jc;
    // Renormalize to avoid overflow of the recurrence itself.
    const double m = std::max(std::abs(jc.real()), std::abs(jc.imag()));
    if (m > 1e250) {
      const double inv = 1e-250;
      jc *= inv;
      jp1 *= inv;
      jl_un *= inv;
      jlm1_un *= inv;
      j1_un *= inv;
      j0_un *= inv;
    }
  }
  const cplx j0_true = sin_s / z;
  const cplx j1_true = sin_s / (z * z) - cos_s / z;
  // Normalize with whichever reference is larger to dodge its zeros.
  const cplx ratio = (std::abs(j0_true) >= std::abs(j1_true)) ? j0_true / j0_un
                                                              : j1_true / j1_un;
  out.j = jl_un * ratio;
  out.jp = jlm1_un * ratio - (static_cast<double>(l) + 1.0) / z * out.j;
  return out;
}

/// j_l(z), entire in z. Overflows double range once |Im z| R exceeds ~700;
/// use sph_bessel_j_scaled for large imaginary arguments.
inline cplx sph_bessel_j(int l, cplx z) {
  const ScaledBessel s = sph_bessel_j_scaled(l, z);
  return s.j * std::exp(s.log_scale);
}

/// d/dz j_l(z).
inline cplx sph_bessel_j_prime(int l, cplx z) {
  const ScaledBessel s = sph_bessel_j_scaled(l, z);
  return s.jp * std::exp(s.log_scale);
}

/// Associated Legendre P_l^m(x) = (1-x^2)^{m/2} d^m/dx^m P_l(x), m >= 0,
/// without the Condon-Shortley sign.
inline double legendre_p(int l, int m, double x) {
  if (m < 0 || m > l || l > kMaxOrder)
    throw OutOfRange("legendre_p: require 0 <= m <= l <= 40");
  if (std::abs(x) > 1.0) throw OutOfRange("legendre_p: |x| > 1");
  double pmm = 1.0;
  if (m > 0) {
    const double s = std::sqrt((1.0 - x) * (1.0 + x));
    double fact = 1.0;
    for (int i = 0; i < m; ++i) {
      pmm *= fact * s;
      fact += 2.0;
    }
  }
  if (l == m) return pmm;
  double pm1 = x * (2.0 * m + 1.0) * pmm;
  if (l == m + 1) return pm1;
  double pl = 0.0;
  for (int ll = m + 2; ll <= l; ++ll) {
    pl = ((2.0 * ll - 1.0) * x * pm1 - (ll + m - 1.0) * pmm) / (ll - m);
    pmm = pm1;
    pm1 = pl;
  }
  return pl;
}

/// Orthonormal spherical harmonic Y_l^m(theta, phi),
/// Y = sqrt((2l+1)/(4pi) (l-|m|)!/(l+|m|)!) P_l^{|m|}(cos theta) e^{im phi}.
inline cplx sph_harmonic(SphericalOrder lm, double theta, double phi) {
  if (theta < 0.0 || theta > 3.14159265358979323846 + 1e-12)
    throw OutOfRange("sph_harmonic: theta outside [0, pi]");
  const int am = std::abs(lm.m);
  const double lognorm =
      0.5 * (std::log((2.0 * lm.l + 1.0) / (4.0 * 3.14159265358979323846)) +
             std::lgamma(lm.l - am + 1.0) - std::lgamma(lm.l + am + 1.0));
  const double p = legendre_p(lm.l, am, std::cos(theta));
  return std::exp(lognorm) * p * std::polar(1.0, lm.m * phi);
}

}  // namespace etp
