#include <gtest/gtest.h>

#include "ivem/derham.hpp"

#include <Eigen/SparseCholesky>

#include <random>

using namespace ivem;

namespace {

const Box kCube{Vec3(-1, -1, -1), Vec3(1, 1, 1)};

std::array<Vec3, 4> ref_tet(double s = 1.0) { return {Vec3(0, 0, 0), Vec3(s, 0, 0), Vec3(0, s, 0), Vec3(0, 0, s)}; }

Coefficients coef(double am, double ap, double bm, double bp) {
    Coefficients k;
    k.alpha_minus = am, k.alpha_plus = ap, k.beta_minus = bm, k.beta_plus = bp;
    return k;
}

std::vector<CutElement> sample_cuts() {
    std::vector<CutElement> v;
    v.push_back(cut_single_tet(ref_tet(), levelset::plane(Vec3(1, 0, 0), 0.3)));
    v.push_back(cut_single_tet(ref_tet(), levelset::plane(Vec3(1, 1, 0.2), 0.5)));
    v.push_back(cut_single_tet(ref_tet(), levelset::sphere(Vec3(0.1, 0.2, 0.1), 0.45)));
    v.push_back(slice_tet(ref_tet(), {{Vec3(1, 0.2, 0.1), 0.15}, {Vec3(1, 0.1, -0.2), 0.5}}));
    auto m = build_background_mesh(4, kCube);
    auto cm = classify_and_cut(m, levelset::sphere(Vec3::Zero(), M_PI / 5));
    for (size_t i = 0; i < cm.cuts.size(); i += 7) v.push_back(cm.cuts[i]);
    return v;
}

Vec3 rand_vec(std::mt19937& rng) {
    std::uniform_real_distribution<double> U(-1, 1);
    return Vec3(U(rng), U(rng), U(rng));
}

// Local discrete gradient of the element's ascending-key edges.
MatX local_grad(const CutElement& c) {
    MatX G = MatX::Zero(c.num_edges(), c.num_nodes());
    for (int e = 0; e < c.num_edges(); ++e) {
        G(e, c.edges[e][0]) = -1;
        G(e, c.edges[e][1]) = 1;
    }
    return G;
}

int count_small_eigs(const MatX& K, double rel) {
    Eigen::SelfAdjointEigenSolver<MatX> es(K);
    double mx = es.eigenvalues().cwiseAbs().maxCoeff();
    int n = 0;
    for (int i = 0; i < K.rows(); ++i) {
        EXPECT_GT(es.eigenvalues()[i], -rel * mx);
        n += es.eigenvalues()[i] < rel * mx;
    }
    return n;
}

}  // namespace

TEST(Local, PlainElementsAreClassical) {
    auto X = ref_tet();
    // P1 stiffness of the reference tet
    MatX K = p1_stiffness(X, 1.0);
    MatX ref(4, 4);
    ref << 3, -1, -1, -1, -1, 1, 0, 0, -1, 0, 1, 0, -1, 0, 0, 1;
    EXPECT_NEAR((K - ref / 6.0).norm(), 0, 1e-15);
    auto c = make_uncut_element(X, {0, 1, 2, 3});
    EXPECT_NEAR((local_h1(c, {1.0}, 1.0).total() - K).norm(), 0, 1e-15);

    // Nedelec matrices against quadrature of the Whitney functions
    std::array<Index, 4> keys{3, 0, 2, 1};
    auto g = detail::tet_grads(X);
    const auto& q = quad::tet_deg5();
    MatX M = MatX::Zero(6, 6);
    for (size_t i = 0; i < q.w.size(); ++i)
        for (int a = 0; a < 6; ++a)
            for (int b = 0; b < 6; ++b)
                M(a, b) += q.w[i] / 6.0 * detail::whitney(g, q.bary[i], detail::oriented_edge(keys, a)).dot(detail::whitney(g, q.bary[i], detail::oriented_edge(keys, b)));
    EXPECT_NEAR((nd0_mass(X, keys, 1.0) - M).norm(), 0, 1e-15);
    MatX S = nd0_stiffness(X, keys, 1.0);
    EXPECT_NEAR((S - S.transpose()).norm(), 0, 1e-15);
    // gradients are in the kernel of the curl-curl matrix
    MatX G = MatX::Zero(6, 4);
    for (int k = 0; k < 6; ++k) {
        auto e = detail::oriented_edge(keys, k);
        G(k, e[0]) = -1;
        G(k, e[1]) = 1;
    }
    EXPECT_NEAR((S * G).norm(), 0, 1e-14);
    // tangential component of a Whitney function at the centroid
    for (int k = 0; k < 6; ++k) {
        auto e = detail::oriented_edge(keys, k);
        Vec3 t = X[e[1]] - X[e[0]];
        EXPECT_NEAR(detail::whitney(g, {0.25, 0.25, 0.25, 0.25}, e).dot(t), 0.5, 1e-15);
    }
}

TEST(Local, H1KernelAndZeroConsistency) {
    std::mt19937 rng(1);
    for (const auto& c : sample_cuts()) {
        auto k = coef(1, 1, 1, 10);
        auto w = region_beta(c, k);
        auto L = local_h1(c, w, 1.0);
        MatX K = L.total();
        EXPECT_LE(K.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12 * K.norm());
        EXPECT_EQ(count_small_eigs(K, 1e-10), 1);
        EXPECT_NEAR((L.stabilization - L.stabilization.transpose()).norm(), 0, 1e-13 * K.norm());
        // stabilization vanishes on traces of nodal IFE functions
        auto nod = make_nodal_ife(c, extend_constant(c, Kind::Edge, w, rand_vec(rng)), 0.2);
        VecX d = nodal_dofs(c, nod);
        EXPECT_LE((L.stabilization * d).norm(), 1e-11 * L.consistency.norm() * d.norm());
    }
}

TEST(Local, CurlStiffnessKernelIsGradients) {
    std::mt19937 rng(2);
    for (const auto& c : sample_cuts()) {
        auto a = region_alpha(c, coef(1, 100, 1, 1));
        auto L = local_curl_stiff(c, a, 1.0);
        MatX K = L.total();
        MatX G = local_grad(c);
        EXPECT_LE((L.consistency * G).norm(), 1e-11 * K.norm());
        EXPECT_LE((L.stabilization * G).norm(), 1e-11 * K.norm());
        EXPECT_EQ(count_small_eigs(K, 1e-10), c.num_nodes() - 1);
        // edge IFE traces are not touched by the stabilization
        auto be = region_beta(c, coef(1, 100, 1, 10));
        auto f = make_edge_ife(c, extend_constant(c, Kind::Face, a, rand_vec(rng)), extend_constant(c, Kind::Edge, be, rand_vec(rng)));
        VecX d = edge_dofs(c, f);
        EXPECT_LE((L.stabilization * d).norm(), 1e-11 * L.consistency.norm() * d.norm());
    }
}

TEST(Local, CurlMassOnConstantTraces) {
    std::mt19937 rng(3);
    for (const auto& c : sample_cuts()) {
        auto be = region_beta(c, coef(1, 1, 1, 10));
        auto L = local_curl_mass(c, be, 1.0);
        MatX K = L.total();
        EXPECT_EQ(count_small_eigs(K, 1e-12), 0);
        Eigen::SelfAdjointEigenSolver<MatX> es(K);
        EXPECT_GT(es.eigenvalues()[0], 0);
        Vec3 s = rand_vec(rng);
        auto b = extend_constant(c, Kind::Edge, be, s);
        auto f = make_edge_ife(c, extend_constant(c, Kind::Face, be, Vec3::Zero()), b);
        VecX d = edge_dofs(c, f);
        EXPECT_LE((L.stabilization * d).norm(), 1e-11 * K.norm() * d.norm());
        double gram = s.dot(gram_matrix(c, Kind::Edge, be) * s);
        EXPECT_NEAR(d.dot(L.consistency * d), gram, 1e-11 * gram);
    }
}

TEST(Local, StabilizationScaling) {
    auto pl = [](double s) { return levelset::plane(Vec3(1, 0.3, 0.1), 0.3 * s); };
    auto c1 = cut_single_tet(ref_tet(1.0), pl(1.0));
    auto c2 = cut_single_tet(ref_tet(0.5), pl(0.5));
    auto w = region_coef(c1, 1.0, 10.0);
    // face weight x area gives h^2 (mass) and h^3 (stiffness); basis functions scale like 1/h
    MatX s0a = local_curl_mass(c1, w, 1.0).stabilization, s0b = local_curl_mass(c2, w, 1.0).stabilization;
    MatX s1a = local_curl_stiff(c1, w, 1.0).stabilization, s1b = local_curl_stiff(c2, w, 1.0).stabilization;
    MatX ma = local_curl_mass(c1, w, 1.0).consistency, mb = local_curl_mass(c2, w, 1.0).consistency;
    EXPECT_NEAR((s0b - s0a).norm(), 0, 1e-12 * s0a.norm());
    EXPECT_NEAR((s1b - 2.0 * s1a).norm(), 0, 1e-12 * s1a.norm());
    EXPECT_NEAR((mb - 0.5 * ma).norm(), 0, 1e-12 * ma.norm());
    MatX sh_a = local_h1(c1, w, 1.0).stabilization, sh_b = local_h1(c2, w, 1.0).stabilization;
    EXPECT_NEAR((sh_b - 0.5 * sh_a).norm(), 0, 1e-12 * sh_a.norm());
}

TEST(Local, Loads) {
    auto c = cut_single_tet(ref_tet(), levelset::plane(Vec3(1, 0, 0), 0.3));
    auto be = region_coef(c, 1.0, 10.0);
    EXPECT_EQ(local_load_h1(c, be, [](const Vec3&, int) { return 0.0; }).norm(), 0.0);
    // constant load on a plain tet: int phi_e = |K|/4 (grad l_b - grad l_a)
    std::array<Index, 4> keys{0, 1, 2, 3};
    Vec3 f(0.4, -1.0, 2.0);
    VecX b = nd0_load(ref_tet(), keys, [&](const Vec3&) { return f; });
    auto g = detail::tet_grads(ref_tet());
    for (int k = 0; k < 6; ++k) {
        auto e = detail::oriented_edge(keys, k);
        EXPECT_NEAR(b[k], f.dot(g[e[1]] - g[e[0]]) / 24.0, 1e-15);
    }
    // flat cut, constant f: closed-form slab volumes give int_K f.Pi phi_i
    VecX lc = local_load_hcurl(c, be, [&](const Vec3&, int) { return f; });
    double v0 = std::pow(0.7, 3) / 6, v1 = 1.0 / 6 - v0;  // region 0 is x > 0.3
    Mat3X X = value_basis(c, be, false);
    auto ch = chain_matrices(c, Kind::Edge, be);
    VecX oracle = (f.transpose() * (v0 * ch[0] + v1 * ch[1]) * X).transpose();
    EXPECT_NEAR((lc - oracle).norm(), 0, 1e-6 * oracle.norm());
}

TEST(Global, H1PatchTest) {
    auto m = build_background_mesh(8, kCube);
    auto cm = classify_and_cut(m, levelset::plane(Vec3(1, 0, 0), 0.3));
    auto T = build_topology(m, cm);
    SchemeConfig cfg;
    cfg.coef = coef(1, 1, 1, 10);
    Vec3 bm(1, 0.5, -0.2), bp(0.1, 0.5, -0.2), x0(0.3, 0, 0);
    ScalarField u = [&](const Vec3& x, int s) { return (s < 0 ? bm : bp).dot(x - x0) + 0.25; };
    auto S = assemble_h1(T, cfg, [](const Vec3&, int) { return 0.0; }, u);
    Eigen::SimplicialLDLT<SpMat> ldlt(S.A);
    VecX x = S.expand(ldlt.solve(S.b));
    VecX ex = nodal_interpolant(T, u);
    EXPECT_LE((x - ex).lpNorm<Eigen::Infinity>(), 1e-10);
    EXPECT_EQ(detail::max_abs(SpMat(S.A_full - SpMat(S.A_full.transpose()))), 0.0);
}

TEST(Global, HCurlPatchTest) {
    auto m = build_background_mesh(8, kCube);
    auto cm = classify_and_cut(m, levelset::plane(Vec3(1, 0, 0), 0.3));
    auto T = build_topology(m, cm);
    SchemeConfig cfg;
    cfg.problem = ProblemKind::HCurl;
    cfg.coef = coef(1, 10, 1, 10);
    Vec3 bm(1, 0.5, -0.2), bp(0.1, 0.5, -0.2);
    VectorField u = [&](const Vec3&, int s) { return s < 0 ? bm : bp; };
    VectorField f = [&](const Vec3&, int s) -> Vec3 { return s < 0 ? bm : Vec3(10.0 * bp); };
    auto S = assemble_hcurl(T, cfg, f, u);
    Eigen::SimplicialLDLT<SpMat> ldlt(S.A);
    VecX x = S.expand(ldlt.solve(S.b));
    VecX ex = edge_interpolant(T, u);
    EXPECT_LE((x - ex).lpNorm<Eigen::Infinity>(), 1e-10);
    EXPECT_EQ(detail::max_abs(SpMat(S.A_full - SpMat(S.A_full.transpose()))), 0.0);
}

TEST(Global, FreeBlockIsSPD) {
    auto m = build_background_mesh(4, kCube);
    auto cm = classify_and_cut(m, levelset::sphere(Vec3::Zero(), M_PI / 5));
    auto T = build_topology(m, cm);
    SchemeConfig cfg;
    cfg.coef = coef(1, 100, 1, 10);
    auto zero_s = [](const Vec3&, int) { return 0.0; };
    auto zero_v = [](const Vec3&, int) { return Vec3(Vec3::Zero()); };
    auto H = assemble_h1(T, cfg, zero_s, zero_s);
    auto C = assemble_hcurl(T, cfg, zero_v, zero_v);
    for (const auto* S : {&H, &C}) {
        Eigen::SelfAdjointEigenSolver<MatX> es{MatX(S->A)};
        EXPECT_GT(es.eigenvalues()[0], 0);
    }
}

TEST(Transfers, IncidenceIdentities) {
    auto m = build_background_mesh(4, kCube);
    auto cm = classify_and_cut(m, levelset::sphere(Vec3::Zero(), M_PI / 5));
    auto T = build_topology(m, cm);
    auto R = build_transfers(T);
    EXPECT_EQ(detail::max_abs(SpMat(R.C * R.G)), 0.0);
    EXPECT_EQ(detail::max_abs(SpMat(R.D * R.C)), 0.0);
    // fundamental theorem of calculus along edges
    auto u = [](const Vec3& x, int) { return x[0] * x[1] * x[2] + x[0] * x[0] * x[0] - 2 * x[1]; };
    auto gu = [](const Vec3& x, int) { return Vec3(x[1] * x[2] + 3 * x[0] * x[0], x[0] * x[2] - 2, x[0] * x[1]); };
    EXPECT_LE((R.G * nodal_interpolant(T, u) - edge_interpolant(T, gu)).lpNorm<Eigen::Infinity>(), 1e-13);
    // node-to-edge transfer is exact for linear vector fields
    Mat3 A;
    A << 1, 2, 0, -1, 0.5, 3, 0.2, 0, -1;
    VecX nv(3 * T.num_nodes());
    for (Index i = 0; i < T.num_nodes(); ++i)
        for (int d = 0; d < 3; ++d) nv[d * T.num_nodes() + i] = (A * T.nodes[i])[d];
    auto lin = [&](const Vec3& x, int) { return Vec3(A * x); };
    EXPECT_LE((R.P * nv - edge_interpolant(T, lin)).lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(DeRham, InterpolationExamples) {
    auto m = build_background_mesh(2, kCube);
    auto cm = classify_and_cut(m, levelset::plane(Vec3(1, 0.2, 0), 0.1));
    auto T = build_topology(m, cm);
    InterpolantRequest rq;
    rq.target = Target::Nodal;
    rq.scalar = [](const Vec3& x, int) { return x[0]; };
    VecX n = interpolate(rq, T);
    for (Index i = 0; i < T.num_nodes(); ++i) EXPECT_EQ(n[i], T.nodes[i][0]);
    rq.target = Target::Edge;
    rq.vector = [](const Vec3& x, int) { return Vec3(x[1], x[0], 0); };
    VecX e = interpolate(rq, T);
    for (Index k = 0; k < T.num_edges(); ++k) {
        const Vec3 &a = T.nodes[T.edges[k][0]], &b = T.nodes[T.edges[k][1]];
        EXPECT_NEAR(e[k], b[0] * b[1] - a[0] * a[1], 1e-15);
    }
    // curl of the rotation is 2 e3: face flux of it equals C applied to the edge moments
    auto R = build_transfers(T);
    rq.vector = [](const Vec3& x, int) { return Vec3(-x[1], x[0], 0); };
    VecX er = interpolate(rq, T);
    VecX cf = R.C * er;
    for (Index f = 0; f < T.num_faces(); ++f) {
        const Vec3 &a = T.nodes[T.faces[f][0]], &b = T.nodes[T.faces[f][1]], &c = T.nodes[T.faces[f][2]];
        EXPECT_NEAR(cf[f], (b - a).cross(c - a)[2], 1e-14);
    }
}

TEST(DeRham, ExactnessRanks) {
    struct Case {
        int n;
        std::optional<LevelSet> ls;
    };
    std::vector<Case> cases{{2, levelset::plane(Vec3(1, 0, 0), 5.0)},
                            {4, levelset::plane(Vec3(1, 0, 0), 5.0)},
                            {2, levelset::plane(Vec3(1, 0, 0), 0.05)},
                            {4, levelset::plane(Vec3(1, 0, 0), 0.05)},
                            {2, levelset::sphere(Vec3::Zero(), M_PI / 5)},
                            {4, levelset::sphere(Vec3::Zero(), M_PI / 5)}};
    for (const auto& cs : cases) {
        auto m = build_background_mesh(cs.n, kCube);
        auto cm = classify_and_cut(m, *cs.ls);
        auto T = build_topology(m, cm);
        auto r = check_exactness(T, build_transfers(T));
        EXPECT_TRUE(r.ranks_checked);
        EXPECT_TRUE(r.ok()) << "n=" << cs.n << " " << (r.failures.empty() ? "" : r.failures[0]);
    }
}

TEST(DeRham, CommutingDiagram) {
    for (auto ls : {levelset::plane(Vec3(1, 0, 0), 0.05), levelset::sphere(Vec3::Zero(), M_PI / 5)}) {
        auto m = build_background_mesh(4, kCube);
        auto cm = classify_and_cut(m, ls);
        auto T = build_topology(m, cm);
        auto R = build_transfers(T);
        SmoothScalar u{[](const Vec3& x) { return x[0] * x[1] * x[1] - x[2] * x[2] * x[2] + x[0]; },
                       [](const Vec3& x) { return Vec3(x[1] * x[1] + 1, 2 * x[0] * x[1], -3 * x[2] * x[2]); }};
        SmoothVector v{[](const Vec3& x) { return Vec3(x[1] * x[2], -x[0] * x[0], x[0] + x[1] * x[1]); },
                       [](const Vec3& x) { return Vec3(2 * x[1], x[1] - 1, -2 * x[0] - x[2]); },
                       [](const Vec3&) { return 0.0; }};
        auto r = check_commuting(T, R, u, v);
        EXPECT_LE(r.grad, 1e-12);
        EXPECT_LE(r.curl, 1e-12);
        EXPECT_LE(r.div, 1e-12);
        SmoothVector w{[](const Vec3& x) { return Vec3(x[0] * x[0], x[1] * x[2], x[2]); },
                       [](const Vec3& x) { return Vec3(-x[1], 0, 0); },
                       [](const Vec3& x) { return 2 * x[0] + x[2] + 1; }};
        auto r2 = check_commuting(T, R, u, w);
        EXPECT_LE(r2.curl, 1e-12);
        EXPECT_LE(r2.div, 1e-12);
        SmoothVector k{[](const Vec3&) { return Vec3(1, 2, 3); }, [](const Vec3&) { return Vec3(0, 0, 0); }, [](const Vec3&) { return 0.0; }};
        auto r3 = check_commuting(T, R, SmoothScalar{[](const Vec3&) { return 1.0; }, [](const Vec3&) { return Vec3(0, 0, 0); }}, k);
        EXPECT_LE(std::max({r3.grad, r3.curl, r3.div}), 1e-14);
    }
}
