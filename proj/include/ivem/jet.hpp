#pragma once

#include "core.hpp"

namespace ivem {

// Second-order forward-mode jet in three variables: value, gradient, Hessian.
// Benchmark fields are written once as templates and evaluated on Jet to get
// exact derivatives for sources, curls and jump checks.
struct Jet {
    double v = 0.0;
    Vec3 g = Vec3::Zero();
    Mat3 H = Mat3::Zero();

    Jet() = default;
    Jet(double c) : v(c) {}
    Jet(double c, const Vec3& gr, const Mat3& h) : v(c), g(gr), H(h) {}

    static Jet variable(double x, int i) {
        Jet j(x);
        j.g[i] = 1.0;
        return j;
    }
};

inline std::array<Jet, 3> jet_point(const Vec3& x) {
    return {Jet::variable(x[0], 0), Jet::variable(x[1], 1), Jet::variable(x[2], 2)};
}

// Chain rule for a scalar map with derivatives f0, f1, f2 at a.v.
inline Jet jet_apply(const Jet& a, double f0, double f1, double f2) {
    return Jet(f0, f1 * a.g, f1 * a.H + f2 * a.g * a.g.transpose());
}

inline Jet operator+(const Jet& a, const Jet& b) { return Jet(a.v + b.v, a.g + b.g, a.H + b.H); }
inline Jet operator-(const Jet& a, const Jet& b) { return Jet(a.v - b.v, a.g - b.g, a.H - b.H); }
inline Jet operator-(const Jet& a) { return Jet(-a.v, -a.g, -a.H); }
inline Jet operator*(const Jet& a, const Jet& b) {
    return Jet(a.v * b.v, a.v * b.g + b.v * a.g,
               a.v * b.H + b.v * a.H + a.g * b.g.transpose() + b.g * a.g.transpose());
}
inline Jet operator/(const Jet& a, const Jet& b) {
    double r = 1.0 / b.v;
    return a * jet_apply(b, r, -r * r, 2 * r * r * r);
}
inline Jet operator+(const Jet& a, double c) { return Jet(a.v + c, a.g, a.H); }
inline Jet operator+(double c, const Jet& a) { return a + c; }
inline Jet operator-(const Jet& a, double c) { return Jet(a.v - c, a.g, a.H); }
inline Jet operator-(double c, const Jet& a) { return Jet(c - a.v, -a.g, -a.H); }
inline Jet operator*(const Jet& a, double c) { return Jet(a.v * c, a.g * c, a.H * c); }
inline Jet operator*(double c, const Jet& a) { return a * c; }
inline Jet operator/(const Jet& a, double c) { return a * (1.0 / c); }

inline Jet sin(const Jet& a) { return jet_apply(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
inline Jet cos(const Jet& a) { return jet_apply(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
inline Jet exp(const Jet& a) {
    double e = std::exp(a.v);
    return jet_apply(a, e, e, e);
}
inline Jet sqrt(const Jet& a) {
    double s = std::sqrt(a.v);
    return jet_apply(a, s, 0.5 / s, -0.25 / (s * a.v));
}

inline double value(double x) { return x; }
inline double value(const Jet& x) { return x.v; }

} // namespace ivem
