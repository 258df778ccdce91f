#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "etp/errors.hpp"
#include "etp/quadrature.hpp"

#include "json.hpp"

namespace etp {

/// One polynomial piece of the refractive index, n(r) = sum_i c[i] (r-from)^i
/// on [from, to). Degree at most 5.
struct PiecePoly {
  double from = 0.0;
  double to = 0.0;
  std::array<double, 6> c{};
  int degree = 0;

  double eval(double r) const {
    const double x = r - from;
    double v = c[degree];
    for (int i = degree - 1; i >= 0; --i) v = v * x + c[i];
    return v;
  }
  double deriv1(double r) const {
    const double x = r - from;
    double v = degree * c[degree];
    for (int i = degree - 1; i >= 1; --i) v = v * x + i * c[i];
    return degree >= 1 ? v : 0.0;
  }
  double deriv2(double r) const {
    const double x = r - from;
    double v = degree * (degree - 1.0) * c[degree];
    for (int i = degree - 1; i >= 2; --i) v = v * x + i * (i - 1.0) * c[i];
    return degree >= 2 ? v : 0.0;
  }
};

namespace detail {

// Quintic Hermite blend matching value/1st/2nd derivative at both ends.
inline PiecePoly quintic_blend(double x0, double x1, double v0, double d0, double s0,
                               double v1, double d1, double s1) {
  const double w = x1 - x0;
  // Coefficients in u = (x-x0)/w of the six quintic Hermite basis functions.
  // p(u) = v0 H0 + d0 w H1 + s0 w^2 H2 + v1 H3 + d1 w H4 + s1 w^2 H5
  const double a0 = v0;
  const double a1 = d0 * w;
  const double a2 = 0.5 * s0 * w * w;
  const double a3 = 10.0 * (v1 - v0) - 6.0 * d0 * w - 4.0 * d1 * w - 1.5 * s0 * w * w +
                    0.5 * s1 * w * w;
  const double a4 = -15.0 * (v1 - v0) + 8.0 * d0 * w + 7.0 * d1 * w + 1.5 * s0 * w * w -
                    1.0 * s1 * w * w;
  const double a5 = 6.0 * (v1 - v0) - 3.0 * d0 * w - 3.0 * d1 * w - 0.5 * s0 * w * w +
                    0.5 * s1 * w * w;
  PiecePoly p;
  p.from = x0;
  p.to = x1;
  p.degree = 5;
  const double iw = 1.0 / w;
  double pw = 1.0;
  const double a[6] = {a0, a1, a2, a3, a4, a5};
  for (int i = 0; i < 6; ++i) {
    p.c[i] = a[i] * pw;
    pw *= iw;
  }
  return p;
}

struct EndData {
  double v, d1, d2;
};

}  // namespace detail

/// Raw user-facing piece description before blending.
struct RawPiece {
  double from = 0.0;
  double to = 0.0;
  std::vector<double> coeffs;  // in powers of (r - from), degree <= 5
};

/// Piecewise-polynomial refractive index n(r) along one fixed direction.
/// n == 1 outside the declared pieces; supp(1-n) must lie outside the cavity
/// radius R and inside the outer radius R0.
class RadialProfile {
 public:
  /// Build from raw pieces. blend_width > 0 inserts quintic C^2 blends:
  /// at a piece edge that meets the n == 1 background the blend is placed
  /// inside the piece (the declared support is exact); at an interior knot
  /// between two pieces the blend is centered. blend_width == 0 constructs a
  /// sharp (possibly discontinuous) profile; the C^2 invariant check is then
  /// skipped and is_smooth() reports false.
  static RadialProfile from_config(double R, double R0, std::vector<RawPiece> pieces,
                                   double blend_width) {
    return RadialProfile(R, R0, std::move(pieces), blend_width, /*checked=*/true);
  }

  /// Expert/test constructor: skips the support-location and positivity
  /// validations. Never use for production configs.
  static RadialProfile unchecked(double R, double R0, std::vector<RawPiece> pieces,
                                 double blend_width) {
    return RadialProfile(R, R0, std::move(pieces), blend_width, /*checked=*/false);
  }

  static RadialProfile from_json(const nlohmann::json& j);
  static RadialProfile from_json_file(const std::string& path);

  double n(double r) const {
    const PiecePoly* p = find_piece(r);
    return p ? p->eval(r) : 1.0;
  }
  double dn(double r) const {
    const PiecePoly* p = find_piece(r);
    return p ? p->deriv1(r) : 0.0;
  }
  double d2n(double r) const {
    const PiecePoly* p = find_piece(r);
    return p ? p->deriv2(r) : 0.0;
  }

  double cavity_radius() const { return R_; }
  double outer_radius() const { return R0_; }
  double support_lo() const { return support_lo_; }
  double support_hi() const { return support_hi_; }
  bool is_trivial() const { return pieces_.empty(); }
  bool is_smooth() const { return smooth_; }

  /// Knot radii (piece boundaries) in increasing order.
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<PiecePoly>& pieces() const { return pieces_; }

  /// Piece covering the open interval (a,b), or nullptr for background;
  /// (a,b) must not straddle a knot.
  const PiecePoly* piece_for_interval(double a, double b) const {
    return find_piece(0.5 * (a + b));
  }

 private:
  RadialProfile(double R, double R0, std::vector<RawPiece> raw, double blend_width,
                bool checked) {
    R_ = R;
    R0_ = R0;
    if (!(R > 0.0)) throw ValidationError("R: must be positive");
    if (!(R0 > R)) throw ValidationError("R0: must exceed R");
    if (blend_width < 0.0) throw ValidationError("blend_width: must be >= 0");

    std::sort(raw.begin(), raw.end(),
              [](const RawPiece& a, const RawPiece& b) { return a.from < b.from; });
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const std::string tag = "pieces[" + std::to_string(i) + "]";
      if (!(raw[i].to > raw[i].from))
        throw ValidationError(tag + ".to: must exceed .from");
      if (raw[i].coeffs.empty() || raw[i].coeffs.size() > 6)
        throw ValidationError(tag + ".coeffs: need 1..6 coefficients");
      if (i + 1 < raw.size() && raw[i].to > raw[i + 1].from + 1e-15)
        throw ValidationError(tag + ".to: overlaps pieces[" + std::to_string(i + 1) +
                              "].from");
      if (checked) {
        if (raw[i].from < R - 1e-12)
          throw ValidationError(tag + ".from: support must not enter the cavity r < R");
        if (raw[i].to > R0 + 1e-12)
          throw ValidationError(tag + ".to: support must stay inside R0");
      }
      if (blend_width > 0.0 && raw[i].to - raw[i].from < 2.0 * blend_width - 1e-15)
        throw ValidationError(tag + ": piece narrower than two blend widths");
    }

    smooth_ = blend_width > 0.0 || raw.empty();
    build_pieces(raw, blend_width);

    if (!pieces_.empty()) {
      support_lo_ = pieces_.front().from;
      support_hi_ = pieces_.back().to;
    } else {
      support_lo_ = support_hi_ = R_;
    }

    knots_.clear();
    for (const auto& p : pieces_) {
      knots_.push_back(p.from);
      knots_.push_back(p.to);
    }
    std::sort(knots_.begin(), knots_.end());
    knots_.erase(std::unique(knots_.begin(), knots_.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-14; }),
                 knots_.end());

    if (checked) {
      check_positive();
      if (smooth_ && !pieces_.empty()) check_c2();
    }
  }

  void build_pieces(const std::vector<RawPiece>& raw, double w) {
    pieces_.clear();
    if (raw.empty()) return;

    std::vector<PiecePoly> body;
    for (const auto& rp : raw) {
      PiecePoly p;
      p.from = rp.from;
      p.to = rp.to;
      p.degree = static_cast<int>(rp.coeffs.size()) - 1;
      for (std::size_t i = 0; i < rp.coeffs.size(); ++i) p.c[i] = rp.coeffs[i];
      body.push_back(p);
    }
    if (w <= 0.0) {
      pieces_ = std::move(body);
      return;
    }

    auto data_at = [](const PiecePoly& p, double r) {
      return detail::EndData{p.eval(r), p.deriv1(r), p.deriv2(r)};
    };
    const detail::EndData bg{1.0, 0.0, 0.0};

    for (std::size_t i = 0; i < body.size(); ++i) {
      PiecePoly p = body[i];
      const bool left_bg =
          (i == 0) || (body[i - 1].to < p.from - 1e-14);
      const bool right_bg =
          (i + 1 == body.size()) || (body[i + 1].from > p.to + 1e-14);

      double lo = p.from, hi = p.to;
      if (left_bg) {
        const detail::EndData d = data_at(p, p.from + w);
        if (std::abs(d.v - 1.0) + std::abs(d.d1) + std::abs(d.d2) > 1e-12) {
          pieces_.push_back(
              detail::quintic_blend(p.from, p.from + w, bg.v, bg.d1, bg.d2, d.v, d.d1, d.d2));
          lo = p.from + w;
        }
      } else {
        // centered blend across the interior knot with the previous piece
        const detail::EndData dl = data_at(body[i - 1], p.from - 0.5 * w);
        const detail::EndData dr = data_at(p, p.from + 0.5 * w);
        pieces_.back().to = p.from - 0.5 * w;
        pieces_.push_back(detail::quintic_blend(p.from - 0.5 * w, p.from + 0.5 * w, dl.v,
                                                dl.d1, dl.d2, dr.v, dr.d1, dr.d2));
        lo = p.from + 0.5 * w;
      }
      if (right_bg) {
        const detail::EndData d = data_at(p, p.to - w);
        if (std::abs(d.v - 1.0) + std::abs(d.d1) + std::abs(d.d2) > 1e-12) {
          pieces_.push_back(reanchor(p, lo, p.to - w));
          pieces_.push_back(
              detail::quintic_blend(p.to - w, p.to, d.v, d.d1, d.d2, bg.v, bg.d1, bg.d2));
          continue;
        }
      }
      pieces_.push_back(reanchor(p, lo, hi));
    }
  }

  // Same polynomial restricted to [lo,hi]; coefficients stay in powers of
  // (r - original from), so just adjust the interval. eval uses p.from, so we
  // must genuinely re-expand around the new origin.
  static PiecePoly reanchor(const PiecePoly& p, double lo, double hi) {
    PiecePoly q;
    q.from = lo;
    q.to = hi;
    q.degree = p.degree;
    // Taylor-shift: q's coefficients are those of p(x + s), s = lo - p.from.
    std::array<double, 6> a = p.c;
    const double s = lo - p.from;
    for (int i = 0; i < p.degree; ++i)
      for (int k = p.degree - 1; k >= i; --k) a[k] += s * a[k + 1];
    q.c = a;
    return q;
  }

  void check_positive() const {
    for (const auto& p : pieces_) {
      const int samples = 200;
      for (int i = 0; i <= samples; ++i) {
        const double r = p.from + (p.to - p.from) * i / samples;
        if (!(p.eval(r) > 0.0))
          throw ValidationError("pieces: n(r) must stay positive (violated near r = " +
                                std::to_string(r) + ")");
      }
    }
  }

  void check_c2() const {
    auto side = [&](double r, double eps) {
      const double v = n(r + eps), d1 = dn(r + eps), d2 = d2n(r + eps);
      return detail::EndData{v, d1, d2};
    };
    for (double kn : knots_) {
      const detail::EndData L = side(kn, -1e-12), Rr = side(kn, +1e-12);
      auto rel = [](double a, double b) {
        return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
      };
      if (rel(L.v, Rr.v) > 1e-9 || rel(L.d1, Rr.d1) > 1e-9 || rel(L.d2, Rr.d2) > 1e-9)
        throw ValidationError("pieces: profile not C^2 at knot r = " + std::to_string(kn));
    }
  }

  const PiecePoly* find_piece(double r) const {
    if (pieces_.empty() || r < pieces_.front().from || r >= pieces_.back().to)
      return nullptr;
    // piece counts are small; a linear scan keeps this lock-free and reentrant
    for (const auto& p : pieces_)
      if (r >= p.from && r < p.to) return &p;
    return nullptr;
  }

  double R_ = 1.0, R0_ = 3.0;
  double support_lo_ = 1.0, support_hi_ = 1.0;
  bool smooth_ = true;
  std::vector<PiecePoly> pieces_;
  std::vector<double> knots_;
};

inline RadialProfile RadialProfile::from_json(const nlohmann::json& j) {
  auto need = [&](const char* key) {
    if (!j.contains(key)) throw ValidationError(std::string(key) + ": missing field");
  };
  need("R");
  need("R0");
  need("pieces");
  if (!j["R"].is_number()) throw ValidationError("R: must be a number");
  if (!j["R0"].is_number()) throw ValidationError("R0: must be a number");
  if (!j["pieces"].is_array()) throw ValidationError("pieces: must be an array");
  std::vector<RawPiece> pieces;
  std::size_t idx = 0;
  for (const auto& pj : j["pieces"]) {
    const std::string tag = "pieces[" + std::to_string(idx++) + "]";
    if (!pj.contains("from") || !pj["from"].is_number())
      throw ValidationError(tag + ".from: missing or not a number");
    if (!pj.contains("to") || !pj["to"].is_number())
      throw ValidationError(tag + ".to: missing or not a number");
    if (!pj.contains("coeffs") || !pj["coeffs"].is_array())
      throw ValidationError(tag + ".coeffs: missing or not an array");
    RawPiece rp;
    rp.from = pj["from"].get<double>();
    rp.to = pj["to"].get<double>();
    for (const auto& c : pj["coeffs"]) {
      if (!c.is_number()) throw ValidationError(tag + ".coeffs: entries must be numbers");
      rp.coeffs.push_back(c.get<double>());
    }
    pieces.push_back(std::move(rp));
  }
  const double bw = j.value("blend_width", 0.0);
  return from_config(j["R"].get<double>(), j["R0"].get<double>(), std::move(pieces), bw);
}

inline RadialProfile RadialProfile::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("profile file: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("profile file: invalid JSON: " + std::string(e.what()));
  }
  return from_json(j);
}

/// The transformed radius xi(r) = int_0^r sqrt(n), cached at knots and
/// integrated adaptively in between. xi - r is computed directly (integrand
/// sqrt(n) - 1 vanishes off the support), so xi(r) = r holds exactly wherever
/// n == 1 below r's piece stack.
class LiouvilleMap {
 public:
  explicit LiouvilleMap(std::shared_ptr<const RadialProfile> prof, double quad_tol = 1e-10,
                        double r_max = -1.0)
      : prof_(std::move(prof)), tol_(quad_tol) {
    r_max_ = r_max > 0 ? r_max : prof_->outer_radius() + 8.0;
    cum_.push_back(0.0);
    const auto& kn = prof_->knots();
    for (std::size_t i = 0; i < kn.size(); ++i) {
      const double a = (i == 0) ? 0.0 : kn[i - 1];
      cum_.push_back(cum_.back() + segment_integral(a, kn[i]));
    }
  }

  const RadialProfile& profile() const { return *prof_; }
  double quad_tol() const { return tol_; }
  double r_max() const { return r_max_; }

  /// xi(r); total for r >= 0.
  double xi(double r) const {
    if (r < 0.0) throw OutOfRange("xi: r must be >= 0");
    const auto& kn = prof_->knots();
    std::size_t i = std::upper_bound(kn.begin(), kn.end(), r) - kn.begin();
    const double base = (i == 0) ? 0.0 : cum_[i];
    const double a = (i == 0) ? 0.0 : kn[i - 1];
    return r + base + segment_integral(a, r);
  }

  /// Inverse map; requires 0 <= x <= xi(r_max).
  double r_of_xi(double x) const {
    if (x < 0.0 || x > xi(r_max_) + 1e-12)
      throw OutOfRange("r_of_xi: xi outside [0, xi(r_max)]");
    // bisection on the monotone map, then Newton polish with xi' = sqrt(n)
    double lo = 0.0, hi = r_max_;
    for (int it = 0; it < 60 && hi - lo > 1e-13 * (1.0 + hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (xi(mid) < x ? lo : hi) = mid;
    }
    double r = 0.5 * (lo + hi);
    for (int it = 0; it < 4; ++it) {
      const double f = xi(r) - x;
      r -= f / std::sqrt(prof_->n(r));
      r = std::clamp(r, 0.0, r_max_);
    }
    return r;
  }

  /// xi(r) - r, constant (== int (sqrt n - 1) over the support) for
  /// r >= support_hi.
  double xi_shift(double r) const { return xi(r) - r; }

 private:
  double segment_integral(double a, double b) const {
    if (b <= a) return 0.0;
    const PiecePoly* p = prof_->piece_for_interval(a, b);
    if (!p) return 0.0;  // background: integrand sqrt(1) - 1 == 0
    if (p->degree == 0) {
      return (std::sqrt(p->c[0]) - 1.0) * (b - a);
    }
    return adaptive_simpson([p](double r) { return std::sqrt(p->eval(r)) - 1.0; }, a, b,
                            tol_);
  }

  std::shared_ptr<const RadialProfile> prof_;
  double tol_;
  double r_max_;
  std::vector<double> cum_;  // xi - r at each knot
};

/// The potential of the transformed radial equation,
///   q = n''/(4 n^2) - (5/16) n'^2 / n^3 + l(l+1)/(r^2 n) - l(l+1)/xi^2,
/// with n-derivatives taken with respect to r (the source text leaves the
/// differentiation variable at the transformed point implicit; we evaluate
/// d/dr at r = r(xi)) and evaluated analytically from the piece polynomials.
class TransformedPotential {
 public:
  TransformedPotential(std::shared_ptr<const RadialProfile> prof,
                       std::shared_ptr<const LiouvilleMap> map, int l)
      : prof_(std::move(prof)), map_(std::move(map)), l_(l) {
    if (l < 0) throw OutOfRange("TransformedPotential: l must be >= 0");
  }

  int order() const { return l_; }

  /// q as a function of r (the centrifugal difference uses xi(r)).
  double q_of_r(double r) const {
    if (r <= 0.0) throw OutOfRange("q_of_r: r must be > 0");
    const double n = prof_->n(r);
    const double n1 = prof_->dn(r);
    const double n2 = prof_->d2n(r);
    double q = n2 / (4.0 * n * n) - (5.0 / 16.0) * n1 * n1 / (n * n * n);
    if (l_ > 0) {
      const double xi = map_->xi(r);
      const double ll1 = static_cast<double>(l_) * (l_ + 1.0);
      q += ll1 / (r * r * n) - ll1 / (xi * xi);
    }
    return q;
  }

  /// q(xi); inverts the Liouville map.
  double q(double xi) const {
    if (xi <= 0.0) throw OutOfRange("q: xi must be > 0");
    return q_of_r(map_->r_of_xi(xi));
  }

  /// Combined coefficient q(xi) + l(l+1)/xi^2 expressed in r. The xi-
  /// centrifugal terms cancel, leaving
  ///   n''/(4 n^2) - (5/16) n'^2/n^3 + l(l+1)/(r^2 n),
  /// which is what the transformed ODE integrator needs.
  double q_plus_centrifugal_of_r(double r) const {
    const double n = prof_->n(r);
    const double n1 = prof_->dn(r);
    const double n2 = prof_->d2n(r);
    double v = n2 / (4.0 * n * n) - (5.0 / 16.0) * n1 * n1 / (n * n * n);
    if (l_ > 0) v += static_cast<double>(l_) * (l_ + 1.0) / (r * r * n);
    return v;
  }

  const LiouvilleMap& map() const { return *map_; }
  const RadialProfile& profile() const { return *prof_; }

 private:
  std::shared_ptr<const RadialProfile> prof_;
  std::shared_ptr<const LiouvilleMap> map_;
  int l_;
};

}  // namespace etp
