#pragma once

#include "assembly.hpp"

#include <Eigen/QR>

namespace ivem {

// Interpolation onto the discrete spaces of the cut mesh.

inline int face_sign(const Topology& T, Index f) {
    for (Index v : T.faces[f])
        if (T.node_sign[v] != 0) return T.node_sign[v];
    return 0;
}

// Face fluxes int_F v.n with n following the ascending node order.
inline VecX face_interpolant(const Topology& T, const VectorField& v, int order = 2) {
    const auto& q = order <= 2 ? quad::tri_deg2() : quad::tri_deg5();
    VecX r(T.num_faces());
    for (Index f = 0; f < T.num_faces(); ++f) {
        const Vec3 &a = T.nodes[T.faces[f][0]], &b = T.nodes[T.faces[f][1]], &c = T.nodes[T.faces[f][2]];
        Vec3 an = 0.5 * (b - a).cross(c - a);
        int s = face_sign(T, f);
        double sum = 0;
        for (size_t i = 0; i < q.w.size(); ++i) sum += q.w[i] * v(quad::bary_point(q.bary[i], a, b, c), s).dot(an);
        r[f] = sum;
    }
    return r;
}

// Element averages (1/|K|) int_K u, region by region on interface elements.
inline VecX element_average(const Topology& T, const ScalarField& u) {
    const auto& q = quad::tet_deg5();
    VecX r(T.num_elements());
    auto integrate = [&](const std::array<Vec3, 4>& X, int s) {
        double v = tet_signed_volume(X[0], X[1], X[2], X[3]), sum = 0;
        for (size_t i = 0; i < q.w.size(); ++i) sum += q.w[i] * u(quad::bary_point(q.bary[i], X[0], X[1], X[2], X[3]), s);
        return sum * v;
    };
    for (Index e = 0; e < T.num_elements(); ++e) {
        auto X = T.mesh->element_coords(e);
        if (!T.is_interface(e)) {
            r[e] = integrate(X, T.elem_sign(e)) / tet_signed_volume(X[0], X[1], X[2], X[3]);
            continue;
        }
        const auto& c = T.cut_element(e);
        double sum = 0;
        for (int m = 0; m < c.num_regions(); ++m)
            for (const auto& st : c.region_subtets(m)) sum += integrate(st, c.region_sign[m]);
        r[e] = sum / c.volume;
    }
    return r;
}

enum class Target { Nodal, Edge, Face, Zero };

struct InterpolantRequest {
    Target target = Target::Nodal;
    ScalarField scalar;
    VectorField vector;
    int order = 2;
};

inline VecX interpolate(const InterpolantRequest& req, const Topology& T) {
    switch (req.target) {
        case Target::Nodal: return nodal_interpolant(T, req.scalar);
        case Target::Edge: return edge_interpolant(T, req.vector);
        case Target::Face: return face_interpolant(T, req.vector, req.order);
        case Target::Zero: return element_average(T, req.scalar);
    }
    throw InvalidArgument("interpolate: unknown target");
}

// Exactness of the incidence chain.

struct ExactnessReport {
    double cg_max = 0, dc_max = 0;  // largest entry of C*G and D*C
    bool ranks_checked = false;
    Index rank_G = -1, rank_C = -1, rank_D = -1;
    Index expect_G = 0, expect_C = 0, expect_D = 0;
    Index euler = 0;
    std::vector<std::string> failures;

    bool ok() const { return failures.empty(); }
};

namespace detail {
inline Index dense_rank(const SpMat& A) {
    MatX M(A);
    Eigen::ColPivHouseholderQR<MatX> qr(M);
    qr.setThreshold(1e-10);
    return qr.rank();
}
inline double max_abs(const SpMat& A) {
    double m = 0;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
}
}  // namespace detail

inline ExactnessReport check_exactness(const Topology& T, const TransferOperators& R, Index rank_threshold = 5000) {
    ExactnessReport r;
    const Index N = T.num_nodes(), E = T.num_edges(), F = T.num_faces(), K = T.num_elements();
    r.cg_max = detail::max_abs(SpMat(R.C * R.G));
    r.dc_max = detail::max_abs(SpMat(R.D * R.C));
    if (r.cg_max != 0) r.failures.push_back("C*G != 0");
    if (r.dc_max != 0) r.failures.push_back("D*C != 0");
    r.euler = N - E + F - K;
    if (r.euler != 1) r.failures.push_back("Euler characteristic " + std::to_string(r.euler) + " != 1");
    std::vector<int> row_nnz(R.G.rows(), 0);
    for (int k = 0; k < R.G.outerSize(); ++k)
        for (SpMat::InnerIterator it(R.G, k); it; ++it) ++row_nnz[it.row()];
    if (std::any_of(row_nnz.begin(), row_nnz.end(), [](int c) { return c != 2; })) r.failures.push_back("G row without two nonzeros");
    r.expect_G = N - 1;
    r.expect_C = E - N + 1;
    r.expect_D = F - E + N - 1;
    if (std::max({N, E, F, K}) <= rank_threshold) {
        r.ranks_checked = true;
        r.rank_G = detail::dense_rank(R.G);
        r.rank_C = detail::dense_rank(R.C);
        r.rank_D = detail::dense_rank(R.D);
        if (r.rank_G != r.expect_G) r.failures.push_back("rank G");
        if (r.rank_C != r.expect_C) r.failures.push_back("rank C");
        if (r.rank_D != r.expect_D) r.failures.push_back("rank D");
        if (r.rank_D != K) r.failures.push_back("D is not onto the element constants");
    }
    return r;
}

// Commuting diagram residuals for smooth fields.
struct CommutingReport {
    double grad = 0, curl = 0, div = 0;
};

struct SmoothScalar {
    std::function<double(const Vec3&)> u;
    std::function<Vec3(const Vec3&)> grad;
};
struct SmoothVector {
    std::function<Vec3(const Vec3&)> v;
    std::function<Vec3(const Vec3&)> curl;
    std::function<double(const Vec3&)> div;
};

inline CommutingReport check_commuting(const Topology& T, const TransferOperators& R, const SmoothScalar& u, const SmoothVector& v) {
    CommutingReport r;
    auto su = [&](const Vec3& x, int) { return u.u(x); };
    auto sg = [&](const Vec3& x, int) { return u.grad(x); };
    auto sv = [&](const Vec3& x, int) { return v.v(x); };
    auto sc = [&](const Vec3& x, int) { return v.curl(x); };
    auto sd = [&](const Vec3& x, int) { return v.div(x); };
    r.grad = (R.G * nodal_interpolant(T, su) - edge_interpolant(T, sg)).lpNorm<Eigen::Infinity>();
    r.curl = (R.C * edge_interpolant(T, sv) - face_interpolant(T, sc)).lpNorm<Eigen::Infinity>();
    VecX vol(T.num_elements());
    for (Index e = 0; e < T.num_elements(); ++e) {
        if (T.is_interface(e)) {
            vol[e] = T.cut_element(e).volume;
        } else {
            auto X = T.mesh->element_coords(e);
            vol[e] = tet_signed_volume(X[0], X[1], X[2], X[3]);
        }
    }
    r.div = (R.D * face_interpolant(T, sv) - vol.cwiseProduct(element_average(T, sd))).lpNorm<Eigen::Infinity>();
    return r;
}

}  // namespace ivem
