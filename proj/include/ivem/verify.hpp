#pragma once

// Self-checks shared by the CLI `verify` command and the acceptance binary.

#include "bench.hpp"
#include "derham.hpp"

#include <random>

namespace ivem {

// Randomized projection checks on sphere-cut elements.
struct ProjectionSuite {
    int tests = 0;
    double reproduction = 0;   // worst relative defect on the target spaces
    double orthogonality = 0;  // worst relative weighted-orthogonality defect
    bool ok(double rep_tol = 1e-11, double orth_tol = 1e-10) const { return tests > 0 && reproduction <= rep_tol && orthogonality <= orth_tol; }
};

namespace verify_detail {

inline Vec3 rand_vec(std::mt19937& rng) {
    std::uniform_real_distribution<double> U(-1, 1);
    return Vec3(U(rng), U(rng), U(rng));
}

inline double rel(double err, double scale) { return err / std::max(scale, 1e-300); }

// Cut elements of spheres with jittered centers and radii.
inline std::vector<CutElement> sphere_cuts(std::mt19937& rng) {
    std::vector<CutElement> out;
    std::uniform_real_distribution<double> J(-0.05, 0.05);
    const Box box{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
    for (int n : {4, 6, 8}) {
        auto m = build_background_mesh(n, box);
        for (int k = 0; k < 2; ++k) {
            auto cm = classify_and_cut(m, levelset::sphere(Vec3(J(rng), J(rng), J(rng)), M_PI / 5 + J(rng)));
            for (auto& c : cm.cuts) out.push_back(std::move(c));
        }
    }
    return out;
}

}  // namespace verify_detail

// One test = one random element, one benchmark coefficient pair, and every projection applied to random IFE data.
inline ProjectionSuite run_projection_suite(int tests = 1000, unsigned seed = 7) {
    using namespace verify_detail;
    std::mt19937 rng(seed);
    auto cuts = sphere_cuts(rng);
    if (cuts.empty()) throw Error("no cut elements");
    std::uniform_int_distribution<size_t> pick(0, cuts.size() - 1);
    // coefficient pairs of the sphere benchmarks
    std::vector<Coefficients> sets;
    for (auto [a, b] : std::vector<std::pair<double, double>>{{10, 10}, {100, 100}, {100, 200}}) {
        Coefficients k;
        k.alpha_minus = 1, k.alpha_plus = a, k.beta_minus = 1, k.beta_plus = b;
        sets.push_back(k);
    }
    std::uniform_int_distribution<size_t> pick_set(0, sets.size() - 1);
    ProjectionSuite s;
    auto worst_pc = [](const PiecewiseConstant& a, const PiecewiseConstant& b) {
        double e = 0, m = 0;
        for (size_t i = 0; i < a.values.size(); ++i) e = std::max(e, (a.values[i] - b.values[i]).norm()), m = std::max(m, b.values[i].norm());
        return rel(e, m);
    };
    for (int t = 0; t < tests; ++t) {
        const auto& c = cuts[pick(rng)];
        const auto& k = sets[pick_set(rng)];
        auto al = region_alpha(c, k), be = region_beta(c, k);
        double rep = 0, orth = 0;

        // gradient projection: reproduces nodal IFE functions (and the lift returns their DoFs)
        auto b = extend_constant(c, Kind::Edge, be, rand_vec(rng));
        auto nod = make_nodal_ife(c, b, rand_vec(rng)[0]);
        VecX dn = nodal_dofs(c, nod);
        auto g = project_h1_gradient(c, dn, be);
        rep = std::max(rep, worst_pc(g.constant_part, b));
        rep = std::max(rep, rel((nodal_dofs(c, lift_h1(c, g, dn)) - dn).norm(), dn.norm()));

        // ... and is the beta-weighted L2 projection of the gradient of a global linear function
        Vec3 gl = rand_vec(rng);
        auto lin = [&](const Vec3& x, int) { return gl.dot(x) + 0.5; };
        auto gp = project_h1_gradient(c, nodal_dofs(c, lin), be);
        {
            auto ch = chain_matrices(c, Kind::Edge, be);
            Vec3 mom = Vec3::Zero();
            for (int m = 0; m < c.num_regions(); ++m) mom += be[m] * c.volumes[m] * ch[m].transpose() * gl;
            Vec3 lhs = gram_matrix(c, Kind::Edge, be) * gp.seed;
            orth = std::max(orth, rel((lhs - mom).norm(), mom.norm()));
        }

        // curl projection of edge IFE functions
        auto a = extend_constant(c, Kind::Face, al, rand_vec(rng));
        auto eb = extend_constant(c, Kind::Edge, be, rand_vec(rng));
        auto edg = make_edge_ife(c, a, eb);
        auto pc = project_curl(c, edge_dofs(c, edg), al);
        rep = std::max(rep, worst_pc(pc.constant_part, ife_curl(edg)));

        // edge value projection reproduces P^e_0(beta); both forms agree there
        VecX de0 = edge_dofs(c, make_edge_ife(c, extend_constant(c, Kind::Face, al, Vec3::Zero()), eb));
        auto pv = project_value_edge(c, de0, be);
        auto pva = project_value_edge(c, de0, be, true);
        rep = std::max(rep, worst_pc(pv.constant_part, eb));
        rep = std::max(rep, worst_pc(pva.constant_part, eb));

        // the alternative form is orthogonal when the curl lies in P^f_0(beta)
        auto edb = make_edge_ife(c, extend_constant(c, Kind::Face, be, rand_vec(rng)), eb);
        auto pal = project_value_edge(c, edge_dofs(c, edb), be, true);
        {
            Vec3 lhs = gram_matrix(c, Kind::Edge, be) * pal.seed, r = weighted_moments(c, edb, Kind::Edge, be);
            orth = std::max(orth, rel((lhs - r).norm(), r.norm()));
        }

        // face value projection: reproduces P^f_0(alpha), orthogonal for every face IFE, keeps the divergence
        const double cdiv = rand_vec(rng)[0];
        auto fa = extend_constant(c, Kind::Face, al, rand_vec(rng));
        auto fac = make_face_ife(c, cdiv, fa);
        VecX df = face_dofs(c, fac);
        auto pf = project_value_face(c, df, al);
        {
            Vec3 lhs = gram_matrix(c, Kind::Face, al) * pf.seed, r = weighted_moments(c, fac, Kind::Face, al);
            orth = std::max(orth, rel((lhs - r).norm(), r.norm()));
        }
        rep = std::max(rep, rel(std::abs(ife_div(*pf.lifted) - 3 * cdiv), std::max(1.0, std::abs(3 * cdiv))));
        auto pf0 = project_value_face(c, face_dofs(c, make_face_ife(c, 0.0, fa)), al);
        rep = std::max(rep, worst_pc(pf0.constant_part, fa));

        s.reproduction = std::max(s.reproduction, rep);
        s.orthogonality = std::max(s.orthogonality, orth);
        ++s.tests;
    }
    return s;
}

// Discrete de Rham checks on cut and uncut meshes of the cube.
struct DerhamSuite {
    int meshes = 0;
    bool exact = true;        // C G = 0, D C = 0, ranks, Euler
    double commuting = 0;     // worst commuting-diagram residual
    std::vector<std::string> failures;
    bool ok(double tol = 1e-10) const { return meshes > 0 && exact && commuting <= tol; }
};

inline DerhamSuite run_derham_suite(const std::vector<int>& ns = {2, 4}) {
    DerhamSuite s;
    const Box box{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
    const std::vector<std::pair<std::string, LevelSet>> sets{{"uncut", levelset::plane(Vec3(1, 0, 0), 5.0)},
                                                             {"flat", levelset::plane(Vec3(1, 0, 0), 0.05)},
                                                             {"oblique", levelset::plane(Vec3(1, 0.3, -0.2), 0.1)},
                                                             {"sphere", levelset::sphere(Vec3::Zero(), M_PI / 5)}};
    const SmoothScalar u{[](const Vec3& x) { return x[0] * x[1] * x[1] - x[2] * x[2] * x[2] + x[0]; },
                         [](const Vec3& x) { return Vec3(x[1] * x[1] + 1, 2 * x[0] * x[1], -3 * x[2] * x[2]); }};
    const SmoothVector v{[](const Vec3& x) { return Vec3(x[0] * x[0], x[1] * x[2], x[2]); },
                         [](const Vec3& x) { return Vec3(-x[1], 0, 0); },
                         [](const Vec3& x) { return 2 * x[0] + x[2] + 1; }};
    for (int n : ns) {
        auto m = build_background_mesh(n, box);
        for (const auto& [name, ls] : sets) {
            auto cm = classify_and_cut(m, ls);
            auto T = build_topology(m, cm);
            auto R = build_transfers(T);
            auto ex = check_exactness(T, R);
            ++s.meshes;
            if (!ex.ok() || !ex.ranks_checked) {
                s.exact = false;
                s.failures.push_back(name + " n=" + std::to_string(n) + ": " + (ex.failures.empty() ? "ranks not checked" : ex.failures[0]));
            }
            auto cr = check_commuting(T, R, u, v);
            s.commuting = std::max({s.commuting, cr.grad, cr.curl, cr.div});
        }
    }
    return s;
}

// C G = 0 and D C = 0 on one mesh, without the dense rank checks.
inline bool incidence_exact(const Topology& T) {
    auto R = build_transfers(T);
    return detail::max_abs(SpMat(R.C * R.G)) == 0.0 && detail::max_abs(SpMat(R.D * R.C)) == 0.0;
}

}  // namespace ivem
