#pragma once

#include "core.hpp"

namespace ivem::quad {

// Rules store barycentric points and weights that sum to 1; callers scale by measure.

struct Rule1 {
    std::vector<double> t;  // in [0,1]
    std::vector<double> w;
};

struct Rule2 {
    std::vector<std::array<double, 3>> bary;
    std::vector<double> w;
};

struct Rule3 {
    std::vector<std::array<double, 4>> bary;
    std::vector<double> w;
};

// Gauss-Legendre on [0,1] by Newton iteration on P_n.
inline Rule1 gauss_legendre(int n) {
    if (n < 1) throw InvalidArgument("gauss_legendre: n < 1");
    Rule1 r;
    r.t.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        r.t[i] = 0.5 * (1.0 - x);
        r.w[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

// Three-point edge-midpoint rule, exact for degree 2.
inline const Rule2& tri_deg2() {
    static const Rule2 r{{{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}}, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
    return r;
}

// Seven-point rule, exact for degree 5.
inline const Rule2& tri_deg5() {
    static const Rule2 r = [] {
        Rule2 q;
        const double a1 = 0.059715871789770, b1 = 0.470142064105115;
        const double a2 = 0.797426985353087, b2 = 0.101286507323456;
        const double w0 = 0.225, w1 = 0.132394152788506, w2 = 0.125939180544827;
        q.bary = {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1},
                  {a2, b2, b2}, {b2, a2, b2}, {b2, b2, a2}};
        q.w = {w0, w1, w1, w1, w2, w2, w2};
        double s = 0;
        for (double w : q.w) s += w;
        for (double& w : q.w) w /= s;
        return q;
    }();
    return r;
}

// Four-point rule, exact for degree 2.
inline const Rule3& tet_deg2() {
    static const Rule3 r = [] {
        const double a = 0.5854101966249685, b = 0.1381966011250105;
        Rule3 q;
        q.bary = {{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}};
        q.w = {0.25, 0.25, 0.25, 0.25};
        return q;
    }();
    return r;
}

// Collapsed-coordinate tensor Gauss rule; exact for degree 2n-3.
inline Rule3 tet_duffy(int n) {
    Rule1 g = gauss_legendre(n);
    Rule3 q;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double u = g.t[i], v = g.t[j], w = g.t[k];
                double x = u, y = v * (1 - u), z = w * (1 - u) * (1 - v);
                q.bary.push_back({1 - x - y - z, x, y, z});
                q.w.push_back(6.0 * g.w[i] * g.w[j] * g.w[k] * (1 - u) * (1 - u) * (1 - v));
            }
    return q;
}

inline const Rule3& tet_deg5() {
    static const Rule3 r = tet_duffy(4);
    return r;
}

inline const Rule1& gauss3() {
    static const Rule1 r = gauss_legendre(3);
    return r;
}

template <class P>
inline Vec3 bary_point(const P& b, const Vec3& x0, const Vec3& x1, const Vec3& x2) {
    return b[0] * x0 + b[1] * x1 + b[2] * x2;
}

template <class P>
inline Vec3 bary_point(const P& b, const Vec3& x0, const Vec3& x1, const Vec3& x2, const Vec3& x3) {
    return b[0] * x0 + b[1] * x1 + b[2] * x2 + b[3] * x3;
}

} // namespace ivem::quad
