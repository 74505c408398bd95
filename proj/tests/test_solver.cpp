#include <gtest/gtest.h>

#include "ivem/solver.hpp"

#include <random>

using namespace ivem;

namespace {

SpMat laplacian_1d(Index n) {
    Triplets tr;
    for (Index i = 0; i < n; ++i) {
        tr.emplace_back(i, i, 2.0);
        if (i + 1 < n) {
            tr.emplace_back(i, i + 1, -1.0);
            tr.emplace_back(i + 1, i, -1.0);
        }
    }
    SpMat A(n, n);
    A.setFromTriplets(tr.begin(), tr.end());
    return A;
}

SpMat laplacian_2d(Index m) {
    Triplets tr;
    auto id = [m](Index i, Index j) { return i * m + j; };
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j) {
            tr.emplace_back(id(i, j), id(i, j), 4.0);
            if (i + 1 < m) tr.emplace_back(id(i, j), id(i + 1, j), -1.0), tr.emplace_back(id(i + 1, j), id(i, j), -1.0);
            if (j + 1 < m) tr.emplace_back(id(i, j), id(i, j + 1), -1.0), tr.emplace_back(id(i, j + 1), id(i, j), -1.0);
        }
    SpMat A(m * m, m * m);
    A.setFromTriplets(tr.begin(), tr.end());
    return A;
}

VecX random_vec(Index n, std::mt19937& rng) {
    std::normal_distribution<double> N;
    VecX v(n);
    for (Index i = 0; i < n; ++i) v[i] = N(rng);
    return v;
}

struct FlatCase {
    BackgroundMesh mesh;
    CutMesh cut;
    Topology T;
    SchemeConfig cfg;
    LinearSystem S;
};

// H(curl) system with a flat interface x1 = x0 and u = (g/beta, 0, 0) data.
std::unique_ptr<FlatCase> flat_case(int n, double x0, bool with_interface = true) {
    auto c = std::make_unique<FlatCase>();
    c->mesh = build_background_mesh(n, Box{Vec3(-1, -1, -1), Vec3(1, 1, 1)});
    // a plane outside the box leaves every element uncut
    c->cut = classify_and_cut(c->mesh, levelset::plane(Vec3(1, 0, 0), with_interface ? x0 : 5.0));
    c->T = build_topology(c->mesh, c->cut);
    c->cfg.problem = ProblemKind::HCurl;
    c->cfg.coef.alpha_minus = 1, c->cfg.coef.alpha_plus = with_interface ? 10 : 1;
    c->cfg.coef.beta_minus = 1, c->cfg.coef.beta_plus = with_interface ? 10 : 1;
    auto f = [](const Vec3& x, int) { return Vec3(std::sin(x[1]) + 1, std::cos(x[2]), x[0]); };
    auto g = [](const Vec3&, int) { return Vec3::Zero().eval(); };
    c->S = assemble_hcurl(c->T, c->cfg, f, g);
    return c;
}

}  // namespace

TEST(CG, IdentityConvergesInOneIteration) {
    SpMat I(20, 20);
    I.setIdentity();
    VecX b = VecX::LinSpaced(20, 1, 2);
    auto r = pcg(I, b);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_LT((r.x - b).norm(), 1e-14);
}

TEST(CG, Laplacian1D) {
    const Index n = 100;
    SpMat A = laplacian_1d(n);
    VecX b = VecX::Ones(n);
    CGOptions opt;
    opt.max_iter = 1000;
    auto plain = pcg(A, b, nullptr, opt);
    EXPECT_TRUE(plain.converged);
    // Krylov dimension of a symmetric right-hand side is about n/2
    EXPECT_GE(plain.iterations, n / 2 - 5);
    EXPECT_LE(plain.iterations, n);

    DirectSolver exact(A);
    auto pre = pcg(A, b, [&](const VecX& r) { return exact.solve(r); }, opt);
    EXPECT_EQ(pre.iterations, 1);
    EXPECT_LT((A * pre.x - b).norm(), 1e-10);
}

TEST(CG, RandomSPDAgainstDenseOracle) {
    std::mt19937 rng(7);
    const Index n = 50;
    MatX B(n, n);
    for (Index i = 0; i < n; ++i) B.col(i) = random_vec(n, rng);
    MatX M = B * B.transpose() + n * MatX::Identity(n, n);
    SpMat A = M.sparseView();
    VecX b = random_vec(n, rng);
    CGOptions opt;
    opt.rel_tol = 1e-12;
    auto r = pcg(A, b, jacobi_precond(A), opt);
    VecX oracle = M.llt().solve(b);
    EXPECT_LT((r.x - oracle).norm() / oracle.norm(), 1e-10);

    // Ritz values lie inside the spectrum of the preconditioned matrix and approach its ends
    VecX d = M.diagonal().cwiseInverse().cwiseSqrt();
    MatX Mp = d.asDiagonal() * M * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatX> es(Mp);
    auto [lo, hi] = r.ritz_extremes();
    EXPECT_LE(hi, es.eigenvalues()[n - 1] * (1 + 1e-12));
    EXPECT_GE(lo, es.eigenvalues()[0] * (1 - 1e-12));
    EXPECT_NEAR(hi, es.eigenvalues()[n - 1], 1e-6 * hi);
    EXPECT_NEAR(lo, es.eigenvalues()[0], 1e-2 * lo);
}

TEST(CG, NonFiniteRaises) {
    SpMat A = laplacian_1d(5);
    VecX b = VecX::Ones(5);
    b[2] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(pcg(A, b), SolverError);
}

TEST(CG, MaxIterReachedIsReported) {
    SpMat A = laplacian_1d(200);
    CGOptions opt;
    opt.max_iter = 5;
    auto r = pcg(A, VecX::Ones(200), nullptr, opt);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.iterations, 5);
    EXPECT_EQ(r.residuals.size(), 5u);
}

TEST(Smoothers, SGSIsSymmetricAndReducesError) {
    SpMat A = laplacian_2d(12);
    VecX dinv = inverse_diagonal(A);
    std::mt19937 rng(3);
    VecX u = random_vec(A.rows(), rng), v = random_vec(A.rows(), rng);
    EXPECT_NEAR(sgs_apply(A, dinv, u).dot(v), u.dot(sgs_apply(A, dinv, v)), 1e-12 * u.norm() * v.norm());
    VecX b = random_vec(A.rows(), rng);
    double prev = b.norm();
    for (int k = 1; k <= 6; ++k) {
        double res = (b - A * sgs_apply(A, dinv, b, k)).norm();
        EXPECT_LT(res, prev);
        prev = res;
    }
}

TEST(Smoothers, AMGIsSymmetricPositiveAndEffective) {
    SpMat A = laplacian_2d(40);
    SmoothedAggregationAMG amg(A);
    EXPECT_GE(amg.num_levels(), 2);
    std::mt19937 rng(11);
    for (int k = 0; k < 5; ++k) {
        VecX u = random_vec(A.rows(), rng), v = random_vec(A.rows(), rng);
        EXPECT_NEAR(amg.apply(u).dot(v), u.dot(amg.apply(v)), 1e-10 * u.norm() * v.norm());
        EXPECT_GT(amg.apply(u).dot(u), 0);
    }
    VecX b = VecX::Ones(A.rows());
    auto plain = pcg(A, b);
    auto pre = pcg(A, b, [&](const VecX& r) { return amg.apply(r); });
    EXPECT_TRUE(pre.converged);
    EXPECT_LT(pre.iterations * 3, plain.iterations);
}

TEST(Smoothers, DirectBackendIsExact) {
    SpMat A = laplacian_2d(8);
    AuxSolver s(A, AuxBackend::Direct);
    VecX b = VecX::LinSpaced(64, -1, 1);
    EXPECT_LT((A * s.solve(b) - b).norm(), 1e-12);
    EXPECT_THROW(parse_backend("cholmod"), ConfigError);
}

TEST(InterfaceBlock, NoInterfaceMeansEmpty) {
    auto c = flat_case(4, 0, false);
    std::vector<char> fr(c->T.num_edges(), 1);
    EXPECT_TRUE(interface_edge_set(c->T, fr, 1).empty());
    EXPECT_TRUE(interface_edge_set(c->T, fr, 3).empty());
}

TEST(InterfaceBlock, GrowthAndRelativeSize) {
    double prev_ratio = 1.0;
    for (int n : {6, 10, 14}) {
        auto c = flat_case(n, 0.05);
        std::vector<char> fr(c->T.num_edges(), 0);
        for (Index e : c->S.free_dofs) fr[e] = 1;
        auto d0 = interface_edge_set(c->T, fr, 0);
        auto d1 = interface_edge_set(c->T, fr, 1);
        auto d2 = interface_edge_set(c->T, fr, 2);
        EXPECT_TRUE(d0.empty());
        EXPECT_LT(d1.size(), d2.size());
        EXPECT_TRUE(std::includes(d2.begin(), d2.end(), d1.begin(), d1.end()));
        double ratio = static_cast<double>(d1.size()) / c->S.num_free();
        EXPECT_LT(ratio, prev_ratio);
        prev_ratio = ratio;
    }
}

TEST(InterfaceBlock, FullBlockIsDirectSolve) {
    auto c = flat_case(4, 0.05);
    std::vector<Index> all(c->S.num_free());
    std::iota(all.begin(), all.end(), 0);
    BlockSmoother bs(c->S.A, all, {});
    auto r = pcg(c->S.A, c->S.b, [&](const VecX& x) { return bs.apply(x); });
    EXPECT_EQ(r.iterations, 1);
}

TEST(HX, LinearSymmetricPositive) {
    auto c = flat_case(5, 0.05);
    for (int l : {0, 1, 2}) {
        HXConfig hx;
        hx.smoother.l = l;
        HXPreconditioner B(c->S, c->T, c->cfg, hx);
        const Index n = c->S.num_free();
        EXPECT_EQ(B.apply(VecX::Zero(n)).norm(), 0.0);
        std::mt19937 rng(100 + l);
        for (int k = 0; k < 100; ++k) {
            VecX u = random_vec(n, rng), v = random_vec(n, rng);
            VecX Bu = B.apply(u), Bv = B.apply(v);
            EXPECT_NEAR(Bu.dot(v), u.dot(Bv), 1e-10 * Bu.norm() * v.norm());
            EXPECT_GT(Bu.dot(u), 0);
        }
    }
}

TEST(HX, GradientOperatorStructure) {
    auto c = flat_case(4, 0.05);
    HXPreconditioner B(c->S, c->T, c->cfg);
    const SpMat& Ag = B.grad_operator();
    EXPECT_LT(SpMat(Ag - SpMat(Ag.transpose())).norm(), 1e-12 * Ag.norm());
    // mass-free toy without Dirichlet rows: G^T A G annihilates constants
    auto R = build_transfers(c->T);
    SpMat K(c->T.num_edges(), c->T.num_edges());
    {
        Triplets tr;
        for (Index e = 0; e < c->T.num_elements(); ++e) {
            const auto& el = c->T.elem_edges[e];
            for (Index i : el) tr.emplace_back(i, i, 1.0);
        }
        K.setFromTriplets(tr.begin(), tr.end());
    }
    SpMat Kc = SpMat(R.C.transpose() * R.C);
    SpMat toy = SpMat(R.G.transpose() * Kc * R.G);
    EXPECT_LT((toy * VecX::Ones(c->T.num_nodes())).norm(), 1e-12);
    SpMat toy_mass = SpMat(R.G.transpose() * K * R.G);
    EXPECT_LT((toy_mass * VecX::Ones(c->T.num_nodes())).norm(), 1e-12);
}

TEST(HX, MeshIndependentWithoutInterface) {
    std::vector<int> its;
    for (int n : {8, 12, 16}) {
        auto c = flat_case(n, 0, false);
        HXPreconditioner B(c->S, c->T, c->cfg);
        auto r = pcg(c->S.A, c->S.b, B.as_precond());
        EXPECT_TRUE(r.converged);
        EXPECT_LE(r.iterations, 60) << "n=" << n;
        its.push_back(r.iterations);
    }
}

TEST(HX, BackendsAgree) {
    auto c = flat_case(6, 0.05);
    CGOptions opt;
    opt.rel_tol = 1e-10;
    opt.max_iter = 2000;
    DirectSolver ref(c->S.A);
    VecX x = ref.solve(c->S.b);
    for (auto be : {AuxBackend::Direct, AuxBackend::SGS, AuxBackend::AMG}) {
        HXConfig hx;
        hx.backend = be;
        HXPreconditioner B(c->S, c->T, c->cfg, hx);
        auto r = pcg(c->S.A, c->S.b, B.as_precond(), opt);
        EXPECT_TRUE(r.converged) << to_string(be);
        EXPECT_LT((r.x - x).norm() / x.norm(), 1e-7) << to_string(be);
    }
    auto plain = pcg(c->S.A, c->S.b, nullptr, opt);
    EXPECT_LT((plain.x - x).norm() / x.norm(), 1e-7);
}

TEST(HX, GradientBranchDominatesForLargeBeta) {
    auto c = flat_case(6, 0.05);
    HXPreconditioner B(c->S, c->T, c->cfg);
    // residual of a discrete gradient field
    auto R = build_transfers(c->T);
    VecX phi = VecX::Zero(c->T.num_nodes());
    for (Index v = 0; v < c->T.num_nodes(); ++v)
        if (!c->T.node_boundary[v]) phi[v] = std::sin(3 * c->T.nodes[v][0]) * std::cos(2 * c->T.nodes[v][1]);
    VecX ge = R.G * phi, gf(c->S.num_free());
    for (Index i = 0; i < c->S.num_free(); ++i) gf[i] = ge[c->S.free_dofs[i]];
    SchemeConfig heavy = c->cfg;
    heavy.coef.beta_minus = heavy.coef.beta_plus = 1e4;
    auto f = [](const Vec3&, int) { return Vec3::Zero().eval(); };
    auto S = assemble_hcurl(c->T, heavy, f, f);
    HXPreconditioner Bh(S, c->T, heavy);
    Bh.apply(S.A * gf);
    const auto& d = Bh.diagnostics();
    EXPECT_GT(d.grad, d.vec);
    EXPECT_GT(d.grad, d.smoother);
}

TEST(IO, IterationLog) {
    auto r = pcg(laplacian_1d(10), VecX::Ones(10));
    std::string path = ::testing::TempDir() + "cg_log.csv";
    write_iteration_log(path, r);
    std::ifstream is(path);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "iter,residual");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, r.iterations);
}
