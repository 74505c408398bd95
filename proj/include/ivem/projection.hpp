#pragma once

#include "ifespace.hpp"
#include "quadrature.hpp"

#include <optional>

namespace ivem {

using Mat3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;

// Gram matrix of P^kind_0(w) in the seed basis: sum_m w_m |K_m| chain_m^T chain_m.
inline Mat3 gram_matrix(const CutElement& c, Kind kind, const std::vector<double>& w) {
    auto ch = chain_matrices(c, kind, w);
    Mat3 G = Mat3::Zero();
    for (int m = 0; m < c.num_regions(); ++m) G += w[m] * c.volumes[m] * ch[m].transpose() * ch[m];
    return G;
}

inline double condition_number(const Mat3& G) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(G);
    return es.eigenvalues()[2] / es.eigenvalues()[0];
}

struct ProjectionResult {
    PiecewiseConstant constant_part;
    std::optional<IFEFunction> lifted;
    Vec3 seed = Vec3::Zero();
    double gram_condition = 1.0;
};

namespace detail {

// Surface gradients of the barycentric functions of a counter-clockwise triangle.
inline std::array<Vec3, 3> tri_grad_bary(const Vec3& x0, const Vec3& x1, const Vec3& x2, const Vec3& n, double area) {
    return {n.cross(x2 - x1) / (2 * area), n.cross(x0 - x2) / (2 * area), n.cross(x1 - x0) / (2 * area)};
}

// Whitney function of edge k (nodes k -> k+1, times sign) at barycentric point lam.
inline Vec3 tri_whitney(const std::array<Vec3, 3>& gl, const std::array<double, 3>& lam, int k, int sign) {
    int p = k, q = (k + 1) % 3;
    if (sign < 0) std::swap(p, q);
    return lam[p] * gl[q] - lam[q] * gl[p];
}

inline ProjectionResult make_result(const CutElement& c, Kind kind, const std::vector<double>& w, const Mat3& G, const Vec3& seed) {
    ProjectionResult r;
    r.seed = seed;
    r.constant_part = extend_constant(c, kind, w, seed);
    r.gram_condition = condition_number(G);
    return r;
}

// Region of a local node / local edge, taken from an adjacent boundary triangle.
inline std::vector<int> node_regions(const CutElement& c) {
    std::vector<int> r(c.num_nodes(), -1);
    for (const auto& t : c.tris)
        for (int i : t.nodes)
            if (r[i] < 0) r[i] = t.region;
    return r;
}
inline std::vector<int> edge_regions(const CutElement& c) {
    std::vector<int> r(c.num_edges(), -1);
    for (int t = 0; t < c.num_tris(); ++t)
        for (int e : c.tri_edges[t])
            if (r[e] < 0) r[e] = c.tris[t].region;
    return r;
}

} // namespace detail

// Right-hand sides of the projections as 3 x (local DoFs) matrices.

// H1 gradient: rhs_l = int_dK v (w p_l . n).
inline Mat3X h1_gradient_rhs(const CutElement& c, const std::vector<double>& w) {
    auto ch = chain_matrices(c, Kind::Edge, w);
    Mat3X R = Mat3X::Zero(3, c.num_nodes());
    for (const auto& t : c.tris) {
        Vec3 col = w[t.region] * t.area / 3.0 * ch[t.region].transpose() * t.normal;
        for (int i : t.nodes) R.col(i) += col;
    }
    return R;
}

// Curl: rhs_l = int_dK (n x v) . (w p_l), p_l in P^f_0(w).
inline Mat3X curl_rhs(const CutElement& c, const std::vector<double>& w) {
    auto ch = chain_matrices(c, Kind::Face, w);
    Mat3X R = Mat3X::Zero(3, c.num_edges());
    for (int ti = 0; ti < c.num_tris(); ++ti) {
        const auto& t = c.tris[ti];
        auto X = c.tri_coords(ti);
        auto gl = detail::tri_grad_bary(X[0], X[1], X[2], t.normal, t.area);
        for (int k = 0; k < 3; ++k) {
            int s = c.tri_edge_sign[ti][k];
            int p = k, q = (k + 1) % 3;
            Vec3 intphi = s * t.area / 3.0 * (gl[q] - gl[p]);
            R.col(c.tri_edges[ti][k]) += w[t.region] * ch[t.region].transpose() * t.normal.cross(intphi);
        }
    }
    return R;
}

// Edge value: rhs_l = -int_dK v^tau . (w_l x n), w_l the edge IFE built from (w p_l)/2.
inline Mat3X edge_value_rhs(const CutElement& c, const std::vector<double>& w) {
    std::array<IFEFunction, 3> wl;
    PiecewiseConstant zero = extend_constant(c, Kind::Edge, inverse(w), Vec3::Zero());
    for (int l = 0; l < 3; ++l) {
        PiecewiseConstant a = extend_constant(c, Kind::Edge, w, Vec3::Unit(l)).scaled(w);
        for (auto& v : a.values) v *= 0.5;
        a.kind = Kind::Face;
        a.weight = inverse(w);
        wl[l] = make_edge_ife(c, a, zero);
    }
    const auto& q = quad::tri_deg2();
    Mat3X R = Mat3X::Zero(3, c.num_edges());
    for (int ti = 0; ti < c.num_tris(); ++ti) {
        const auto& t = c.tris[ti];
        auto X = c.tri_coords(ti);
        auto gl = detail::tri_grad_bary(X[0], X[1], X[2], t.normal, t.area);
        for (size_t iq = 0; iq < q.w.size(); ++iq) {
            Vec3 x = quad::bary_point(q.bary[iq], X[0], X[1], X[2]);
            Mat3 W;
            for (int l = 0; l < 3; ++l) W.col(l) = ife_eval_vector(wl[l], x, t.region).cross(t.normal);
            for (int k = 0; k < 3; ++k) {
                Vec3 phi = detail::tri_whitney(gl, q.bary[iq], k, c.tri_edge_sign[ti][k]);
                R.col(c.tri_edges[ti][k]) -= q.w[iq] * t.area * W.transpose() * phi;
            }
        }
    }
    return R;
}

// Extra term of the alternative edge-value projection: int_K Pi^{f,w} curl v . w_l.
inline Mat3X edge_value_alt_term(const CutElement& c, const std::vector<double>& w) {
    Mat3 Gf = gram_matrix(c, Kind::Face, w);
    Mat3X Xc = Gf.ldlt().solve(curl_rhs(c, w));
    auto chf = chain_matrices(c, Kind::Face, w);
    PiecewiseConstant zero = extend_constant(c, Kind::Edge, inverse(w), Vec3::Zero());
    Mat3X T = Mat3X::Zero(3, c.num_edges());
    for (int l = 0; l < 3; ++l) {
        PiecewiseConstant a = extend_constant(c, Kind::Edge, w, Vec3::Unit(l)).scaled(w);
        for (auto& v : a.values) v *= 0.5;
        a.kind = Kind::Face;
        a.weight = inverse(w);
        IFEFunction wl = make_edge_ife(c, a, zero);
        for (int m = 0; m < c.num_regions(); ++m) {
            Vec3 wv = ife_eval_vector(wl, c.centroids[m], m);
            T.row(l) += c.volumes[m] * wv.transpose() * chf[m] * Xc;
        }
    }
    return T;
}

// Face value: rhs_l = -div(v) int_K psi_l + int_dK (v.n) psi_l, psi_l the nodal IFE of w p_l.
inline Mat3X face_value_rhs(const CutElement& c, const std::vector<double>& w) {
    Mat3X R = Mat3X::Zero(3, c.num_tris());
    for (int l = 0; l < 3; ++l) {
        PiecewiseConstant b = extend_constant(c, Kind::Face, w, Vec3::Unit(l)).scaled(w);
        b.kind = Kind::Edge;
        b.weight = inverse(w);
        IFEFunction psi = make_nodal_ife(c, b, 0.0);
        double ipsi = 0;
        for (int m = 0; m < c.num_regions(); ++m) ipsi += c.volumes[m] * ife_eval_scalar(psi, c.centroids[m], m);
        for (int ti = 0; ti < c.num_tris(); ++ti) {
            auto X = c.tri_coords(ti);
            Vec3 g = (X[0] + X[1] + X[2]) / 3.0;
            R(l, ti) = c.tri_face_sign[ti] * (ife_eval_scalar(psi, g, c.tris[ti].region) - ipsi / c.volume);
        }
    }
    return R;
}

// Public projections.

inline ProjectionResult project_h1_gradient(const CutElement& c, const VecX& dofs, const std::vector<double>& beta) {
    if (dofs.size() != c.num_nodes()) throw InvalidArgument("project_h1_gradient: wrong DoF count");
    Mat3 G = gram_matrix(c, Kind::Edge, beta);
    Vec3 s = G.ldlt().solve(h1_gradient_rhs(c, beta) * dofs);
    return detail::make_result(c, Kind::Edge, beta, G, s);
}

inline IFEFunction lift_h1(const CutElement& c, const ProjectionResult& grad, const VecX& dofs) {
    IFEFunction f = make_nodal_ife(c, grad.constant_part, 0.0);
    double bd = 0, bl = 0, area = 0;
    for (int ti = 0; ti < c.num_tris(); ++ti) {
        const auto& t = c.tris[ti];
        auto X = c.tri_coords(ti);
        bd += t.area * (dofs[t.nodes[0]] + dofs[t.nodes[1]] + dofs[t.nodes[2]]) / 3.0;
        bl += t.area * ife_eval_scalar(f, (X[0] + X[1] + X[2]) / 3.0, t.region);
        area += t.area;
    }
    return make_nodal_ife(c, grad.constant_part, (bd - bl) / area);
}

inline ProjectionResult project_curl(const CutElement& c, const VecX& dofs, const std::vector<double>& a) {
    if (dofs.size() != c.num_edges()) throw InvalidArgument("project_curl: wrong DoF count");
    Mat3 G = gram_matrix(c, Kind::Face, a);
    Vec3 s = G.ldlt().solve(curl_rhs(c, a) * dofs);
    return detail::make_result(c, Kind::Face, a, G, s);
}

inline ProjectionResult project_value_edge(const CutElement& c, const VecX& dofs, const std::vector<double>& beta,
                                           bool alternative = false) {
    if (dofs.size() != c.num_edges()) throw InvalidArgument("project_value_edge: wrong DoF count");
    Mat3 G = gram_matrix(c, Kind::Edge, beta);
    Mat3X R = edge_value_rhs(c, beta);
    if (alternative) R += edge_value_alt_term(c, beta);
    Vec3 s = G.ldlt().solve(R * dofs);
    return detail::make_result(c, Kind::Edge, beta, G, s);
}

inline double div_const(const CutElement& c, const VecX& fluxes) {
    if (fluxes.size() != c.num_tris()) throw InvalidArgument("div_const: wrong DoF count");
    double s = 0;
    for (int t = 0; t < c.num_tris(); ++t) s += c.tri_face_sign[t] * fluxes[t];
    return s / c.volume;
}

inline ProjectionResult project_value_face(const CutElement& c, const VecX& fluxes, const std::vector<double>& alpha) {
    if (fluxes.size() != c.num_tris()) throw InvalidArgument("project_value_face: wrong DoF count");
    Mat3 G = gram_matrix(c, Kind::Face, alpha);
    Vec3 s = G.ldlt().solve(face_value_rhs(c, alpha) * fluxes);
    ProjectionResult r = detail::make_result(c, Kind::Face, alpha, G, s);
    r.lifted = make_face_ife(c, div_const(c, fluxes) / 3.0, r.constant_part);
    return r;
}

// int_K w f . p_l for a vector IFE function, exact since f is linear per region.
inline Vec3 weighted_moments(const CutElement& c, const IFEFunction& f, Kind kind, const std::vector<double>& w) {
    auto ch = chain_matrices(c, kind, w);
    Vec3 r = Vec3::Zero();
    for (int m = 0; m < c.num_regions(); ++m) r += w[m] * c.volumes[m] * ch[m].transpose() * ife_eval_vector(f, c.centroids[m], m);
    return r;
}

// Local DoFs of fields given per region (boundary traces).

inline VecX nodal_dofs(const CutElement& c, const std::function<double(const Vec3&, int)>& u) {
    auto reg = detail::node_regions(c);
    VecX d(c.num_nodes());
    for (int i = 0; i < c.num_nodes(); ++i) d[i] = u(c.nodes[i], reg[i]);
    return d;
}

inline VecX edge_dofs(const CutElement& c, const std::function<Vec3(const Vec3&, int)>& u) {
    auto reg = detail::edge_regions(c);
    const auto& g = quad::gauss3();
    VecX d(c.num_edges());
    for (int e = 0; e < c.num_edges(); ++e) {
        const Vec3 &a = c.nodes[c.edges[e][0]], &b = c.nodes[c.edges[e][1]];
        double s = 0;
        for (size_t q = 0; q < g.t.size(); ++q) s += g.w[q] * u(a + g.t[q] * (b - a), reg[e]).dot(b - a);
        d[e] = s;
    }
    return d;
}

// Fluxes in the ascending-key orientation of each triangle.
inline VecX face_dofs(const CutElement& c, const std::function<Vec3(const Vec3&, int)>& u) {
    const auto& q = quad::tri_deg5();
    VecX d(c.num_tris());
    for (int t = 0; t < c.num_tris(); ++t) {
        auto X = c.tri_coords(t);
        double s = 0;
        for (size_t i = 0; i < q.w.size(); ++i) s += q.w[i] * u(quad::bary_point(q.bary[i], X[0], X[1], X[2]), c.tris[t].region).dot(c.tris[t].normal);
        d[t] = c.tri_face_sign[t] * s * c.tris[t].area;
    }
    return d;
}

inline VecX nodal_dofs(const CutElement& c, const IFEFunction& f) {
    return nodal_dofs(c, [&](const Vec3& x, int m) { return ife_eval_scalar(f, x, m); });
}
inline VecX edge_dofs(const CutElement& c, const IFEFunction& f) {
    return edge_dofs(c, [&](const Vec3& x, int m) { return ife_eval_vector(f, x, m); });
}
inline VecX face_dofs(const CutElement& c, const IFEFunction& f) {
    return face_dofs(c, [&](const Vec3& x, int m) { return ife_eval_vector(f, x, m); });
}

} // namespace ivem
