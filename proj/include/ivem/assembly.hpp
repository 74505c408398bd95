#pragma once

#include "projection.hpp"
#include "topology.hpp"

#include <Eigen/Sparse>

#include <fstream>

namespace ivem {

using SpMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;
using ScalarField = std::function<double(const Vec3&, int)>;  // (x, side); side 0 = on the interface
using VectorField = std::function<Vec3(const Vec3&, int)>;

enum class ProblemKind { H1, HCurl };

struct SchemeConfig {
    double gamma = 1.0, gamma0 = 1.0, gamma1 = 1.0;
    ProblemKind problem = ProblemKind::H1;
    Coefficients coef;
    bool alt_value_projection = false;

    void validate() const {
        if (!(gamma > 0 && gamma0 > 0 && gamma1 > 0)) throw ConfigError("stabilization weights must be positive");
        coef.validate();
    }
};

struct LocalMatrices {
    MatX consistency, stabilization;
    VecX load;
    std::vector<Index> dofs;

    MatX total() const { return consistency + stabilization; }
};

namespace detail {

// Gradients of the barycentric coordinates of a tet.
inline std::array<Vec3, 4> tet_grads(const std::array<Vec3, 4>& X) {
    Mat3 J;
    J << X[1] - X[0], X[2] - X[0], X[3] - X[0];
    Mat3 Ji = J.inverse();
    std::array<Vec3, 4> g;
    for (int k = 1; k < 4; ++k) g[k] = Ji.row(k - 1).transpose();
    g[0] = -(g[1] + g[2] + g[3]);
    return g;
}

// Local edge k of a plain tet oriented from the lower to the higher key.
inline std::array<int, 2> oriented_edge(const std::array<Index, 4>& keys, int k) {
    int p = kTetEdges[k][0], q = kTetEdges[k][1];
    if (keys[p] > keys[q]) std::swap(p, q);
    return {p, q};
}

inline Vec3 whitney(const std::array<Vec3, 4>& g, const std::array<double, 4>& lam, std::array<int, 2> e) {
    return lam[e[0]] * g[e[1]] - lam[e[1]] * g[e[0]];
}

// Per-region quadrature points (x, weight) of a cut element.
template <class F>
void for_region_points(const CutElement& c, int m, F&& f) {
    const auto& q = quad::tet_deg2();
    for (const auto& st : c.region_subtets(m)) {
        double v = tet_signed_volume(st[0], st[1], st[2], st[3]);
        for (size_t i = 0; i < q.w.size(); ++i) f(quad::bary_point(q.bary[i], st[0], st[1], st[2], st[3]), q.w[i] * v);
    }
}

// Maps kTetEdges order to the ascending-key edge list of a single-region element.
inline MatX tet_edge_permutation(const CutElement& c) {
    MatX P = MatX::Zero(c.num_edges(), 6);
    for (int k = 0; k < 6; ++k)
        for (int e = 0; e < c.num_edges(); ++e) {
            auto a = c.edges[e];
            if ((a[0] == kTetEdges[k][0] && a[1] == kTetEdges[k][1]) || (a[0] == kTetEdges[k][1] && a[1] == kTetEdges[k][0])) P(e, k) = 1;
        }
    return P;
}

}  // namespace detail

// Plain elements: exact P1 and lowest-order Nedelec matrices.

inline MatX p1_stiffness(const std::array<Vec3, 4>& X, double w) {
    auto g = detail::tet_grads(X);
    double v = tet_signed_volume(X[0], X[1], X[2], X[3]);
    MatX K(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) K(i, j) = w * v * g[i].dot(g[j]);
    return K;
}

inline MatX p1_mass(const std::array<Vec3, 4>& X, double w) {
    double v = tet_signed_volume(X[0], X[1], X[2], X[3]);
    MatX M = MatX::Constant(4, 4, w * v / 20);
    M.diagonal() *= 2.0;
    return M;
}

inline MatX nd0_stiffness(const std::array<Vec3, 4>& X, const std::array<Index, 4>& keys, double w) {
    auto g = detail::tet_grads(X);
    double v = tet_signed_volume(X[0], X[1], X[2], X[3]);
    std::array<Vec3, 6> cu;
    for (int k = 0; k < 6; ++k) {
        auto e = detail::oriented_edge(keys, k);
        cu[k] = 2.0 * g[e[0]].cross(g[e[1]]);
    }
    MatX K(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) K(i, j) = w * v * cu[i].dot(cu[j]);
    return K;
}

inline MatX nd0_mass(const std::array<Vec3, 4>& X, const std::array<Index, 4>& keys, double w) {
    auto g = detail::tet_grads(X);
    double v = tet_signed_volume(X[0], X[1], X[2], X[3]);
    auto M = [v](int p, int q) { return v * (p == q ? 2.0 : 1.0) / 20; };
    MatX K(6, 6);
    for (int i = 0; i < 6; ++i) {
        auto [a, b] = detail::oriented_edge(keys, i);
        for (int j = 0; j < 6; ++j) {
            auto [c, d] = detail::oriented_edge(keys, j);
            K(i, j) = w * (M(a, c) * g[b].dot(g[d]) - M(a, d) * g[b].dot(g[c]) - M(b, c) * g[a].dot(g[d]) + M(b, d) * g[a].dot(g[c]));
        }
    }
    return K;
}

inline VecX p1_load(const std::array<Vec3, 4>& X, const std::function<double(const Vec3&)>& f) {
    const auto& q = quad::tet_deg5();
    double v = tet_signed_volume(X[0], X[1], X[2], X[3]);
    VecX b = VecX::Zero(4);
    for (size_t i = 0; i < q.w.size(); ++i) {
        double fx = f(quad::bary_point(q.bary[i], X[0], X[1], X[2], X[3])) * q.w[i] * v;
        for (int k = 0; k < 4; ++k) b[k] += fx * q.bary[i][k];
    }
    return b;
}

inline VecX nd0_load(const std::array<Vec3, 4>& X, const std::array<Index, 4>& keys, const std::function<Vec3(const Vec3&)>& f) {
    const auto& q = quad::tet_deg5();
    auto g = detail::tet_grads(X);
    double v = tet_signed_volume(X[0], X[1], X[2], X[3]);
    VecX b = VecX::Zero(6);
    for (size_t i = 0; i < q.w.size(); ++i) {
        Vec3 fx = f(quad::bary_point(q.bary[i], X[0], X[1], X[2], X[3])) * (q.w[i] * v);
        for (int k = 0; k < 6; ++k) b[k] += fx.dot(detail::whitney(g, q.bary[i], detail::oriented_edge(keys, k)));
    }
    return b;
}

// Cut elements: projections of all local basis functions at once.

struct H1Basis {
    Mat3X X;                       // seeds of the gradient projections, one column per node
    std::vector<IFEFunction> lift;  // the lifted projections
};

inline H1Basis h1_basis(const CutElement& c, const std::vector<double>& w) {
    H1Basis B;
    Mat3 G = gram_matrix(c, Kind::Edge, w);
    B.X = G.ldlt().solve(h1_gradient_rhs(c, w));
    for (int i = 0; i < c.num_nodes(); ++i) {
        VecX d = VecX::Unit(c.num_nodes(), i);
        B.lift.push_back(lift_h1(c, detail::make_result(c, Kind::Edge, w, G, B.X.col(i)), d));
    }
    return B;
}

inline Mat3X curl_basis(const CutElement& c, const std::vector<double>& w) {
    return gram_matrix(c, Kind::Face, w).ldlt().solve(curl_rhs(c, w));
}

inline Mat3X value_basis(const CutElement& c, const std::vector<double>& w, bool alternative) {
    Mat3X R = edge_value_rhs(c, w);
    if (alternative) R += edge_value_alt_term(c, w);
    return gram_matrix(c, Kind::Edge, w).ldlt().solve(R);
}

inline LocalMatrices local_h1(const CutElement& c, const std::vector<double>& w, double gamma) {
    LocalMatrices L;
    L.dofs = c.node_keys;
    const int nn = c.num_nodes();
    if (!c.is_cut()) {
        L.consistency = p1_stiffness(c.verts, w[0]);
        L.stabilization = MatX::Zero(nn, nn);
        return L;
    }
    Mat3 G = gram_matrix(c, Kind::Edge, w);
    Mat3X X = G.ldlt().solve(h1_gradient_rhs(c, w));
    L.consistency = X.transpose() * G * X;
    auto ch = chain_matrices(c, Kind::Edge, w);
    L.stabilization = MatX::Zero(nn, nn);
    for (int ti = 0; ti < c.num_tris(); ++ti) {
        const auto& t = c.tris[ti];
        auto P = c.tri_coords(ti);
        auto gl = detail::tri_grad_bary(P[0], P[1], P[2], t.normal, t.area);
        Mat3 Pt = Mat3::Identity() - t.normal * t.normal.transpose();
        Mat3X D = -Pt * ch[t.region] * X;
        for (int k = 0; k < 3; ++k) D.col(t.nodes[k]) += gl[k];
        L.stabilization += t.area * D.transpose() * D;
    }
    L.stabilization *= gamma * c.hK;
    return L;
}

inline LocalMatrices local_curl_stiff(const CutElement& c, const std::vector<double>& w, double gamma1) {
    LocalMatrices L;
    const int ne = c.num_edges();
    if (!c.is_cut()) {
        std::array<Index, 4> keys{c.node_keys[0], c.node_keys[1], c.node_keys[2], c.node_keys[3]};
        L.consistency = nd0_stiffness(c.verts, keys, w[0]);
        MatX P = detail::tet_edge_permutation(c);
        L.consistency = P * L.consistency * P.transpose();
        L.stabilization = MatX::Zero(ne, ne);
        return L;
    }
    Mat3 G = gram_matrix(c, Kind::Face, w);
    Mat3X X = G.ldlt().solve(curl_rhs(c, w));
    L.consistency = X.transpose() * G * X;
    auto ch = chain_matrices(c, Kind::Face, w);
    L.stabilization = MatX::Zero(ne, ne);
    for (int ti = 0; ti < c.num_tris(); ++ti) {
        const auto& t = c.tris[ti];
        VecX d = -(t.normal.transpose() * ch[t.region] * X).transpose();
        for (int k = 0; k < 3; ++k) d[c.tri_edges[ti][k]] += c.tri_edge_sign[ti][k] / t.area;
        L.stabilization += t.area * d * d.transpose();
    }
    L.stabilization *= gamma1 * c.hK;
    return L;
}

inline LocalMatrices local_curl_mass(const CutElement& c, const std::vector<double>& w, double gamma0, bool alternative = false) {
    LocalMatrices L;
    const int ne = c.num_edges();
    if (!c.is_cut()) {
        std::array<Index, 4> keys{c.node_keys[0], c.node_keys[1], c.node_keys[2], c.node_keys[3]};
        L.consistency = nd0_mass(c.verts, keys, w[0]);
        MatX P = detail::tet_edge_permutation(c);
        L.consistency = P * L.consistency * P.transpose();
        L.stabilization = MatX::Zero(ne, ne);
        return L;
    }
    Mat3 G = gram_matrix(c, Kind::Edge, w);
    Mat3X R = edge_value_rhs(c, w);
    if (alternative) R += edge_value_alt_term(c, w);
    Mat3X X = G.ldlt().solve(R);
    L.consistency = X.transpose() * G * X;
    auto ch = chain_matrices(c, Kind::Edge, w);
    const auto& q = quad::tri_deg2();
    L.stabilization = MatX::Zero(ne, ne);
    for (int ti = 0; ti < c.num_tris(); ++ti) {
        const auto& t = c.tris[ti];
        auto P = c.tri_coords(ti);
        auto gl = detail::tri_grad_bary(P[0], P[1], P[2], t.normal, t.area);
        Mat3 Pt = Mat3::Identity() - t.normal * t.normal.transpose();
        Mat3X PX = Pt * ch[t.region] * X;
        for (size_t iq = 0; iq < q.w.size(); ++iq) {
            Mat3X D = -PX;
            for (int k = 0; k < 3; ++k) D.col(c.tri_edges[ti][k]) += detail::tri_whitney(gl, q.bary[iq], k, c.tri_edge_sign[ti][k]);
            L.stabilization += q.w[iq] * t.area * D.transpose() * D;
        }
    }
    L.stabilization *= gamma0;
    return L;
}

// int_K w (Pi~ phi_i)(Pi~ phi_j), exact for the piecewise-linear lifts.
inline MatX local_h1_mass(const CutElement& c, const std::vector<double>& w) {
    if (!c.is_cut()) return p1_mass(c.verts, w[0]);
    auto lifts = h1_basis(c, w).lift;
    const int nn = c.num_nodes();
    MatX M = MatX::Zero(nn, nn);
    for (int m = 0; m < c.num_regions(); ++m)
        detail::for_region_points(c, m, [&](const Vec3& x, double wq) {
            VecX v(nn);
            for (int i = 0; i < nn; ++i) v[i] = ife_eval_scalar(lifts[i], x, m);
            M += w[m] * wq * v * v.transpose();
        });
    return M;
}

inline VecX local_load_h1(const CutElement& c, const std::vector<double>& beta, const ScalarField& f) {
    if (!c.is_cut()) return p1_load(c.verts, [&](const Vec3& x) { return f(x, c.region_sign[0]); });
    auto lifts = h1_basis(c, beta).lift;
    VecX b = VecX::Zero(c.num_nodes());
    for (int m = 0; m < c.num_regions(); ++m)
        detail::for_region_points(c, m, [&](const Vec3& x, double wq) {
            double fx = f(x, c.region_sign[m]) * wq;
            for (int i = 0; i < c.num_nodes(); ++i) b[i] += fx * ife_eval_scalar(lifts[i], x, m);
        });
    return b;
}

inline VecX local_load_hcurl(const CutElement& c, const std::vector<double>& beta, const VectorField& f, bool alternative = false) {
    const int ne = c.num_edges();
    if (!c.is_cut()) {
        std::array<Index, 4> keys{c.node_keys[0], c.node_keys[1], c.node_keys[2], c.node_keys[3]};
        VecX b6 = nd0_load(c.verts, keys, [&](const Vec3& x) { return f(x, c.region_sign[0]); });
        return detail::tet_edge_permutation(c) * b6;
    }
    Mat3X X = value_basis(c, beta, alternative);
    auto ch = chain_matrices(c, Kind::Edge, beta);
    VecX b = VecX::Zero(ne);
    for (int m = 0; m < c.num_regions(); ++m) {
        Vec3 F = Vec3::Zero();
        detail::for_region_points(c, m, [&](const Vec3& x, double wq) { F += wq * f(x, c.region_sign[m]); });
        b += (F.transpose() * ch[m] * X).transpose();
    }
    return b;
}

// Global system.

enum class DofKind { Node, Edge };

struct LinearSystem {
    DofKind kind = DofKind::Node;
    SpMat A_full;  // before boundary conditions
    VecX b_full;
    SpMat A;       // free block
    VecX b;
    std::vector<Index> free_dofs, fixed_dofs;
    std::vector<Index> free_index;  // global -> position in free_dofs, or -1
    VecX fixed_values;

    Index num_dofs() const { return A_full.rows(); }
    Index num_free() const { return static_cast<Index>(free_dofs.size()); }

    VecX expand(const VecX& xf) const {
        VecX x(num_dofs());
        for (size_t i = 0; i < free_dofs.size(); ++i) x[free_dofs[i]] = xf[i];
        for (size_t i = 0; i < fixed_dofs.size(); ++i) x[fixed_dofs[i]] = fixed_values[i];
        return x;
    }

    // Full-size matrix with fixed rows and columns replaced by identity.
    SpMat pinned() const {
        Triplets tr;
        for (int k = 0; k < A_full.outerSize(); ++k)
            for (SpMat::InnerIterator it(A_full, k); it; ++it)
                if (free_index[it.row()] >= 0 && free_index[it.col()] >= 0) tr.emplace_back(it.row(), it.col(), it.value());
        for (Index i : fixed_dofs) tr.emplace_back(i, i, 1.0);
        SpMat P(num_dofs(), num_dofs());
        P.setFromTriplets(tr.begin(), tr.end());
        return P;
    }
};

namespace detail {

inline std::array<Index, 4> element_keys(const BackgroundMesh& m, Index e) {
    const auto& el = m.elements[e];
    return {el[0], el[1], el[2], el[3]};
}

// Symmetrized scatter so the assembled matrix is exactly symmetric.
inline void scatter(Triplets& tr, const MatX& K, const std::vector<Index>& dofs) {
    for (int i = 0; i < K.rows(); ++i)
        for (int j = 0; j < K.cols(); ++j) {
            double v = i == j ? K(i, i) : 0.5 * (K(i, j) + K(j, i));
            if (v != 0) tr.emplace_back(dofs[i], dofs[j], v);
        }
}

inline LinearSystem finish_system(DofKind kind, SpMat A, VecX b, const std::vector<char>& fixed, const VecX& g) {
    LinearSystem S;
    S.kind = kind;
    const Index N = A.rows();
    S.free_index.assign(N, -1);
    for (Index i = 0; i < N; ++i) {
        if (fixed[i]) {
            S.fixed_dofs.push_back(i);
        } else {
            S.free_index[i] = static_cast<Index>(S.free_dofs.size());
            S.free_dofs.push_back(i);
        }
    }
    S.fixed_values.resize(S.fixed_dofs.size());
    for (size_t i = 0; i < S.fixed_dofs.size(); ++i) S.fixed_values[i] = g[S.fixed_dofs[i]];
    VecX gfull = VecX::Zero(N);
    for (Index i : S.fixed_dofs) gfull[i] = g[i];
    VecX r = b - A * gfull;
    Triplets tr;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it) {
            Index fi = S.free_index[it.row()], fj = S.free_index[it.col()];
            if (fi >= 0 && fj >= 0) tr.emplace_back(fi, fj, it.value());
        }
    S.A.resize(S.num_free(), S.num_free());
    S.A.setFromTriplets(tr.begin(), tr.end());
    S.b.resize(S.num_free());
    for (Index i = 0; i < S.num_free(); ++i) S.b[i] = r[S.free_dofs[i]];
    S.A_full = std::move(A);
    S.b_full = std::move(b);
    return S;
}

}  // namespace detail

inline VecX nodal_interpolant(const Topology& T, const ScalarField& u) {
    VecX v(T.num_nodes());
    for (Index i = 0; i < T.num_nodes(); ++i) v[i] = u(T.nodes[i], T.node_sign[i]);
    return v;
}

inline VecX edge_interpolant(const Topology& T, const VectorField& u) {
    const auto& g = quad::gauss3();
    VecX v(T.num_edges());
    for (Index e = 0; e < T.num_edges(); ++e) {
        const Vec3 &a = T.nodes[T.edges[e][0]], &b = T.nodes[T.edges[e][1]];
        double s = 0;
        for (size_t q = 0; q < g.t.size(); ++q) s += g.w[q] * u(a + g.t[q] * (b - a), T.edge_sign[e]).dot(b - a);
        v[e] = s;
    }
    return v;
}

// Scalar operator int a grad.grad + int b u v (IVE forms on interface elements), no boundary conditions.
inline SpMat assemble_scalar(const Topology& T, double a_minus, double a_plus, double b_minus, double b_plus, double gamma) {
    const auto& mesh = *T.mesh;
    Triplets tr;
    tr.reserve(16 * T.num_elements());
    for (Index e = 0; e < T.num_elements(); ++e) {
        if (!T.is_interface(e)) {
            auto X = mesh.element_coords(e);
            int s = T.elem_sign(e);
            MatX K = p1_stiffness(X, s > 0 ? a_plus : a_minus);
            if (b_minus != 0 || b_plus != 0) K += p1_mass(X, s > 0 ? b_plus : b_minus);
            detail::scatter(tr, K, T.elem_nodes[e]);
        } else {
            const auto& c = T.cut_element(e);
            MatX K = local_h1(c, region_coef(c, a_minus, a_plus), gamma).total();
            if (b_minus != 0 || b_plus != 0) K += local_h1_mass(c, region_coef(c, b_minus, b_plus));
            detail::scatter(tr, K, T.elem_nodes[e]);
        }
    }
    SpMat A(T.num_nodes(), T.num_nodes());
    A.setFromTriplets(tr.begin(), tr.end());
    A.prune(0.0);
    return A;
}

inline LinearSystem assemble_h1(const Topology& T, const SchemeConfig& cfg, const ScalarField& f, const ScalarField& g) {
    cfg.validate();
    const auto& mesh = *T.mesh;
    const auto& k = cfg.coef;
    Triplets tr;
    tr.reserve(16 * T.num_elements());
    VecX b = VecX::Zero(T.num_nodes());
    for (Index e = 0; e < T.num_elements(); ++e) {
        const auto& dofs = T.elem_nodes[e];
        if (!T.is_interface(e)) {
            auto X = mesh.element_coords(e);
            int s = T.elem_sign(e);
            detail::scatter(tr, p1_stiffness(X, k.beta(s)), dofs);
            VecX be = p1_load(X, [&](const Vec3& x) { return f(x, s); });
            for (int i = 0; i < 4; ++i) b[dofs[i]] += be[i];
        } else {
            const auto& c = T.cut_element(e);
            auto w = region_beta(c, k);
            if (static_cast<int>(dofs.size()) != c.num_nodes()) throw Error("assemble_h1: inconsistent DoF count");
            detail::scatter(tr, local_h1(c, w, cfg.gamma).total(), dofs);
            VecX be = local_load_h1(c, w, f);
            for (size_t i = 0; i < dofs.size(); ++i) b[dofs[i]] += be[i];
        }
    }
    SpMat A(T.num_nodes(), T.num_nodes());
    A.setFromTriplets(tr.begin(), tr.end());
    A.prune(0.0);
    return detail::finish_system(DofKind::Node, std::move(A), std::move(b), T.node_boundary, nodal_interpolant(T, g));
}

inline LinearSystem assemble_hcurl(const Topology& T, const SchemeConfig& cfg, const VectorField& f, const VectorField& g) {
    cfg.validate();
    const auto& mesh = *T.mesh;
    const auto& k = cfg.coef;
    Triplets tr;
    tr.reserve(36 * T.num_elements());
    VecX b = VecX::Zero(T.num_edges());
    for (Index e = 0; e < T.num_elements(); ++e) {
        const auto& dofs = T.elem_edges[e];
        if (!T.is_interface(e)) {
            auto X = mesh.element_coords(e);
            auto keys = detail::element_keys(mesh, e);
            int s = T.elem_sign(e);
            MatX K = nd0_stiffness(X, keys, k.alpha(s)) + nd0_mass(X, keys, k.beta(s));
            detail::scatter(tr, K, dofs);
            VecX be = nd0_load(X, keys, [&](const Vec3& x) { return f(x, s); });
            for (int i = 0; i < 6; ++i) b[dofs[i]] += be[i];
        } else {
            const auto& c = T.cut_element(e);
            if (static_cast<int>(dofs.size()) != c.num_edges()) throw Error("assemble_hcurl: inconsistent DoF count");
            auto al = region_alpha(c, k), be = region_beta(c, k);
            MatX K = local_curl_stiff(c, al, cfg.gamma1).total() + local_curl_mass(c, be, cfg.gamma0, cfg.alt_value_projection).total();
            detail::scatter(tr, K, dofs);
            VecX le = local_load_hcurl(c, be, f, cfg.alt_value_projection);
            for (size_t i = 0; i < dofs.size(); ++i) b[dofs[i]] += le[i];
        }
    }
    SpMat A(T.num_edges(), T.num_edges());
    A.setFromTriplets(tr.begin(), tr.end());
    A.prune(0.0);
    return detail::finish_system(DofKind::Edge, std::move(A), std::move(b), T.edge_boundary, edge_interpolant(T, g));
}

// Incidence and transfer matrices.

struct TransferOperators {
    SpMat G;  // edges x nodes
    SpMat P;  // edges x 3 nodes, component-blocked
    SpMat C;  // faces x edges
    SpMat D;  // elements x faces
};

inline TransferOperators build_transfers(const Topology& T) {
    TransferOperators R;
    const Index N = T.num_nodes(), E = T.num_edges(), F = T.num_faces();
    Triplets g, p, c, d;
    for (Index e = 0; e < E; ++e) {
        auto [a, b] = T.edges[e];
        g.emplace_back(e, a, -1.0);
        g.emplace_back(e, b, 1.0);
        Vec3 t = T.nodes[b] - T.nodes[a];
        for (int k = 0; k < 3; ++k) {
            if (t[k] == 0) continue;
            p.emplace_back(e, k * N + a, 0.5 * t[k]);
            p.emplace_back(e, k * N + b, 0.5 * t[k]);
        }
    }
    for (Index f = 0; f < F; ++f) {
        auto [a, b, cc] = T.faces[f];
        c.emplace_back(f, T.find_edge(a, b), 1.0);
        c.emplace_back(f, T.find_edge(b, cc), 1.0);
        c.emplace_back(f, T.find_edge(a, cc), -1.0);
    }
    for (Index e = 0; e < T.num_elements(); ++e)
        for (size_t i = 0; i < T.elem_faces[e].size(); ++i) d.emplace_back(e, T.elem_faces[e][i], static_cast<double>(T.elem_face_sign[e][i]));
    R.G.resize(E, N);
    R.G.setFromTriplets(g.begin(), g.end());
    R.P.resize(E, 3 * N);
    R.P.setFromTriplets(p.begin(), p.end());
    R.C.resize(F, E);
    R.C.setFromTriplets(c.begin(), c.end());
    R.D.resize(T.num_elements(), F);
    R.D.setFromTriplets(d.begin(), d.end());
    return R;
}

// MatrixMarket coordinate export (general, 1-based).
inline void write_matrix_market(const std::string& path, const SpMat& A) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path);
    os << "%%MatrixMarket matrix coordinate real general\n" << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
    os.precision(17);
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it) os << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
}

inline void write_vector(const std::string& path, const VecX& b) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path);
    os.precision(17);
    for (Index i = 0; i < b.size(); ++i) os << b[i] << "\n";
}

}  // namespace ivem
