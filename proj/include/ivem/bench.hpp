#pragma once

#include "derham.hpp"
#include "io.hpp"
#include "jet.hpp"
#include "solver.hpp"

#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

namespace ivem {

using JetPoint = std::array<Jet, 3>;
using JetScalar = std::function<Jet(const JetPoint&, int)>;
using JetVector = std::function<std::array<Jet, 3>(const JetPoint&, int)>;

inline int side(int s) { return s > 0 ? 1 : -1; }

// Exact solution, coefficients and geometry of one test problem. Fields take the side
// (+1 or -1; 0 counts as -1, used for entities on the interface where both agree).
// H1 problems use u; H(curl) problems use u = grad p + w.
struct Benchmark {
    std::string name;
    ProblemKind problem = ProblemKind::H1;
    LevelSet ls;
    std::function<Jet(const JetPoint&)> phi;
    Box box{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
    Coefficients coef;
    JetScalar u, p;
    JetVector w;
    std::function<Vec3(std::mt19937&)> sample_interface;
    std::vector<std::pair<std::string, double>> params;
    std::optional<double> gamma0;  // recommended mass stabilization weight, unless configured

    double alpha(int s) const { return coef.alpha(side(s)); }
    double beta(int s) const { return coef.beta(side(s)); }

    double value(const Vec3& x, int s) const { return u(jet_point(x), side(s)).v; }
    Vec3 gradient(const Vec3& x, int s) const { return u(jet_point(x), side(s)).g; }
    // -div(beta grad u)
    double source(const Vec3& x, int s) const { return -beta(s) * u(jet_point(x), side(s)).H.trace(); }

    Vec3 field(const Vec3& x, int s) const {
        auto X = jet_point(x);
        auto W = w(X, side(s));
        Vec3 r(W[0].v, W[1].v, W[2].v);
        if (p) r += p(X, side(s)).g;
        return r;
    }
    Vec3 curl(const Vec3& x, int s) const {
        auto W = w(jet_point(x), side(s));
        return Vec3(W[2].g[1] - W[1].g[2], W[0].g[2] - W[2].g[0], W[1].g[0] - W[0].g[1]);
    }
    // curl(alpha curl u) + beta u, with curl curl w = grad div w - lap w
    Vec3 vector_source(const Vec3& x, int s) const {
        auto W = w(jet_point(x), side(s));
        Vec3 r;
        for (int i = 0; i < 3; ++i) r[i] = W[0].H(i, 0) + W[1].H(i, 1) + W[2].H(i, 2) - W[i].H.trace();
        return alpha(s) * r + beta(s) * field(x, s);
    }

    ScalarField scalar_solution() const {
        return [this](const Vec3& x, int s) { return value(x, s); };
    }
    ScalarField scalar_source() const {
        return [this](const Vec3& x, int s) { return source(x, s); };
    }
    VectorField vector_solution() const {
        return [this](const Vec3& x, int s) { return field(x, s); };
    }
    VectorField vector_source_field() const {
        return [this](const Vec3& x, int s) { return vector_source(x, s); };
    }

    Vec3 normal(const Vec3& x) const { return phi(jet_point(x)).g.normalized(); }
};

namespace bench_detail {

inline JetScalar radial_sq() {
    return [](const JetPoint& X, int) { return X[0] * X[0] + X[1] * X[1] + X[2] * X[2]; };
}

inline std::function<Vec3(std::mt19937&)> sphere_sampler(double r) {
    return [r](std::mt19937& rng) {
        std::normal_distribution<double> N;
        Vec3 d(N(rng), N(rng), N(rng));
        return Vec3(r * d.normalized());
    };
}

inline std::function<Vec3(std::mt19937&)> plane_sampler(double x0, const Box& b) {
    return [x0, b](std::mt19937& rng) {
        std::uniform_real_distribution<double> U(0, 1);
        return Vec3(x0, b.lo[1] + U(rng) * (b.hi[1] - b.lo[1]), b.lo[2] + U(rng) * (b.hi[2] - b.lo[2]));
    };
}

// Newton projection of random box points onto the zero set.
inline std::function<Vec3(std::mt19937&)> newton_sampler(std::function<Jet(const JetPoint&)> phi, Box b) {
    return [phi, b](std::mt19937& rng) {
        std::uniform_real_distribution<double> U(0, 1);
        for (;;) {
            Vec3 x;
            for (int d = 0; d < 3; ++d) x[d] = b.lo[d] + U(rng) * (b.hi[d] - b.lo[d]);
            for (int it = 0; it < 60; ++it) {
                Jet f = phi(jet_point(x));
                if (std::abs(f.v) < 1e-15) break;
                x -= f.v / f.g.squaredNorm() * f.g;
            }
            if (std::abs(phi(jet_point(x)).v) < 1e-13 && b.contains(x)) return x;
        }
    };
}

template <class T>
T tori_min(const T& x, const T& y, const T& z) {
    T a = levelset::tori_phi1(x, y, z), b = levelset::tori_phi2(x, y, z);
    return value(a) < value(b) ? a : b;
}

}  // namespace bench_detail

inline const std::vector<std::string>& benchmark_names() {
    static const std::vector<std::string> n{"h1-sphere", "h1-tori", "h1-patch", "hcurl-sphere", "hcurl-tori", "hcurl-flat", "hcurl-patch"};
    return n;
}

// Catalog. `param` selects beta+ for the H1 problems (10 or 100) and r for hcurl-flat.
inline Benchmark make_benchmark(const std::string& name, double param = std::numeric_limits<double>::quiet_NaN()) {
    using namespace bench_detail;
    Benchmark B;
    B.name = name;
    const double r = M_PI / 5;
    auto set_coef = [&](double am, double ap, double bm, double bp) {
        B.coef.alpha_minus = am, B.coef.alpha_plus = ap, B.coef.beta_minus = bm, B.coef.beta_plus = bp;
    };
    auto sphere_phi = [r](const JetPoint& X) { return X[0] * X[0] + X[1] * X[1] + X[2] * X[2] - r * r; };
    const Box tori_box{Vec3(-1.3, -1.3, -1.3), Vec3(1.3, 1.3, 1.3)};
    auto tori_phi = [](const JetPoint& X) { return tori_min(X[0], X[1], X[2]); };

    if (name == "h1-sphere") {
        double bp = std::isnan(param) ? 10.0 : param;
        set_coef(1, bp, 1, bp);
        B.ls = levelset::sphere(Vec3::Zero(), r);
        B.phi = sphere_phi;
        B.u = [r, bp](const JetPoint& X, int s) {
            Jet q = X[0] * X[0] + X[1] * X[1] + X[2] * X[2] - r * r;
            return s < 0 ? exp(q / 1.0) : sin(q / bp) + 1.0;
        };
        B.sample_interface = sphere_sampler(r);
        B.params = {{"r", r}, {"beta_plus", bp}};
    } else if (name == "h1-tori") {
        double bp = std::isnan(param) ? 10.0 : param;
        set_coef(1, bp, 1, bp);
        B.box = tori_box;
        B.ls = levelset::tori();
        B.phi = tori_phi;
        B.u = [](const JetPoint& X, int s) {
            if (s < 0) return Jet(1.0);
            return cos(levelset::tori_phi1(X[0], X[1], X[2]) * levelset::tori_phi2(X[0], X[1], X[2]));
        };
        B.sample_interface = newton_sampler(B.phi, B.box);
        B.params = {{"beta_plus", bp}};
    } else if (name == "h1-patch") {
        const double x0 = 0.3;
        set_coef(1, 10, 1, 10);
        B.ls = levelset::plane(Vec3(1, 0, 0), x0);
        B.phi = [x0](const JetPoint& X) { return X[0] - x0; };
        // beta- b- . n = beta+ b+ . n with continuous tangential part
        B.u = [x0](const JetPoint& X, int s) {
            Vec3 b = s < 0 ? Vec3(1, 0.5, -0.2) : Vec3(0.1, 0.5, -0.2);
            return b[0] * (X[0] - x0) + b[1] * X[1] + b[2] * X[2] + 0.25;
        };
        B.sample_interface = plane_sampler(x0, B.box);
        B.params = {{"x0", x0}};
    } else if (name == "hcurl-sphere") {
        B.problem = ProblemKind::HCurl;
        set_coef(1, 100, 1, 200);
        const double r2sq = 3.3, n2 = 1.0, n1 = n2 * (r2sq - r * r);
        B.ls = levelset::sphere(Vec3::Zero(), r);
        B.phi = sphere_phi;
        const double am = B.coef.alpha_minus, ap = B.coef.alpha_plus, bm = B.coef.beta_minus, bpl = B.coef.beta_plus;
        B.p = [bm, bpl](const JetPoint& X, int s) { return (X[0] * X[0] + X[1] * X[1] + X[2] * X[2]) / (2.0 * (s < 0 ? bm : bpl)); };
        B.w = [=](const JetPoint& X, int s) {
            Jet q = X[0] * X[0] + X[1] * X[1] + X[2] * X[2];
            Jet R1 = r * r - q, R2 = r2sq - q;
            Jet g = s < 0 ? n1 * R1 / am : n2 * R1 * R2 / ap;
            return std::array<Jet, 3>{g * (X[1] - X[2]), g * (X[2] - X[0]), g * (X[0] - X[1])};
        };
        B.sample_interface = sphere_sampler(r);
        // with beta+ h >> 1 at desk scale the unit weight is too weak against the beta-weighted mass
        B.gamma0 = 10.0;
        B.params = {{"r1", r}, {"r2_sq", r2sq}, {"n1", n1}, {"n2", n2}, {"gamma0", 10.0}};
    } else if (name == "hcurl-tori") {
        B.problem = ProblemKind::HCurl;
        // equal alpha keeps [u x n] = 0 for the cos(f) v0 / alpha part
        set_coef(1, 1, 1, 10);
        B.box = tori_box;
        B.ls = levelset::tori();
        B.phi = tori_phi;
        auto f = [](const JetPoint& X) {
            Jet p1 = levelset::tori_phi1(X[0], X[1], X[2]), p2 = levelset::tori_phi2(X[0], X[1], X[2]);
            return p1 * p2 * ((X[0] + 0.3) * (X[0] + 0.3) + X[1] * X[1]) * ((X[0] - 0.3) * (X[0] - 0.3) + X[2] * X[2]);
        };
        const Coefficients k = B.coef;
        B.p = [f, k](const JetPoint& X, int s) { return f(X) / k.beta(s); };
        B.w = [f, k](const JetPoint& X, int s) { return std::array<Jet, 3>{Jet(0.0), Jet(0.0), cos(f(X)) / k.alpha(s)}; };
        B.sample_interface = newton_sampler(B.phi, B.box);
    } else if (name == "hcurl-flat") {
        B.problem = ProblemKind::HCurl;
        double rr = std::isnan(param) ? 0.0 : param;
        const double x0 = 5.0 * std::pow(10.0, -2.0 - rr);
        set_coef(1, 10, 1, 10);
        B.ls = levelset::plane(Vec3(1, 0, 0), x0);
        B.phi = [x0](const JetPoint& X) { return X[0] - x0; };
        const Coefficients k = B.coef;
        B.w = [k](const JetPoint& X, int s) {
            Jet g = sin(M_PI * X[1]) * sin(M_PI * X[2]) + 1.0;
            return std::array<Jet, 3>{g / k.beta(s), Jet(0.0), Jet(0.0)};
        };
        B.sample_interface = plane_sampler(x0, B.box);
        B.params = {{"r", rr}, {"x0", x0}};
    } else if (name == "hcurl-patch") {
        B.problem = ProblemKind::HCurl;
        const double x0 = 0.3;
        set_coef(1, 10, 1, 10);
        B.ls = levelset::plane(Vec3(1, 0, 0), x0);
        B.phi = [x0](const JetPoint& X) { return X[0] - x0; };
        B.w = [](const JetPoint&, int s) {
            Vec3 b = s < 0 ? Vec3(1, 0.5, -0.2) : Vec3(0.1, 0.5, -0.2);
            return std::array<Jet, 3>{Jet(b[0]), Jet(b[1]), Jet(b[2])};
        };
        B.sample_interface = plane_sampler(x0, B.box);
        B.params = {{"x0", x0}};
    } else {
        throw ConfigError("unknown problem: " + name);
    }
    return B;
}

// Self-checks of the analytic data.

// Largest relative violation of the interface conditions over sampled points of Gamma.
inline double check_jumps(const Benchmark& B, int npts = 200, unsigned seed = 1) {
    std::mt19937 rng(seed);
    double worst = 0;
    for (int i = 0; i < npts; ++i) {
        Vec3 x = B.sample_interface(rng), n = B.normal(x);
        if (B.problem == ProblemKind::H1) {
            double up = B.value(x, 1), um = B.value(x, -1);
            double fp = B.beta(1) * B.gradient(x, 1).dot(n), fm = B.beta(-1) * B.gradient(x, -1).dot(n);
            worst = std::max(worst, std::abs(up - um) / std::max(1.0, std::abs(up)));
            worst = std::max(worst, std::abs(fp - fm) / std::max(1.0, std::abs(fp)));
        } else {
            Vec3 tp = n.cross(B.field(x, 1)), tm = n.cross(B.field(x, -1));
            Vec3 cp = n.cross(B.alpha(1) * B.curl(x, 1)), cm = n.cross(B.alpha(-1) * B.curl(x, -1));
            worst = std::max(worst, (tp - tm).norm() / std::max(1.0, tp.norm()));
            worst = std::max(worst, (cp - cm).norm() / std::max(1.0, cp.norm()));
        }
    }
    return worst;
}

// Largest relative finite-difference residual of the PDE at random points away from Gamma.
inline double check_residual(const Benchmark& B, int npts = 200, unsigned seed = 2, double step = 1e-5) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(0, 1);
    double worst = 0;
    auto rel = [](double err, double scale) { return err / std::max(1.0, std::abs(scale)); };
    int done = 0;
    while (done < npts) {
        Vec3 x;
        for (int d = 0; d < 3; ++d) x[d] = B.box.lo[d] + U(rng) * (B.box.hi[d] - B.box.lo[d]);
        double ph = B.phi(jet_point(x)).v;
        if (std::abs(ph) < 1e-3) continue;
        int s = ph > 0 ? 1 : -1;
        ++done;
        auto e = [](int i) { return Vec3(Vec3::Unit(i)); };
        if (B.problem == ProblemKind::H1) {
            double div = 0;
            Vec3 g = B.gradient(x, s);
            for (int i = 0; i < 3; ++i) {
                double du = (B.value(x + step * e(i), s) - B.value(x - step * e(i), s)) / (2 * step);
                worst = std::max(worst, rel(std::abs(du - g[i]), g.norm()));
                div += (B.gradient(x + step * e(i), s)[i] - B.gradient(x - step * e(i), s)[i]) / (2 * step);
            }
            double f = B.source(x, s);
            worst = std::max(worst, rel(std::abs(-B.beta(s) * div - f), f));
        } else {
            auto fd_curl = [&](const std::function<Vec3(const Vec3&)>& v) {
                Mat3 J;
                for (int i = 0; i < 3; ++i) J.col(i) = (v(x + step * e(i)) - v(x - step * e(i))) / (2 * step);
                return Vec3(J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1));
            };
            Vec3 c = B.curl(x, s);
            Vec3 cfd = fd_curl([&](const Vec3& y) { return B.field(y, s); });
            worst = std::max(worst, rel((cfd - c).norm(), c.norm()));
            Vec3 cc = fd_curl([&](const Vec3& y) { return B.curl(y, s); });
            Vec3 f = B.vector_source(x, s);
            worst = std::max(worst, rel((B.alpha(s) * cc + B.beta(s) * B.field(x, s) - f).norm(), f.norm()));
        }
    }
    return worst;
}

// Geometry invariants of every cut element.
struct GeometryReport {
    Index elements = 0;
    double volume_rel = 0, area_rel = 0;  // worst relative partition defects
    double planar_residual = 0;           // worst distance of cut points from their fitted plane
    double max_angle = 0;
};

inline GeometryReport check_geometry(const CutMesh& cm) {
    GeometryReport g;
    for (const auto& c : cm.cuts) {
        ++g.elements;
        double a = 0, af = 0, v = 0;
        for (const auto& t : c.tris) a += t.area;
        for (const auto& f : kTetFaces) af += tri_area(c.verts[f[0]], c.verts[f[1]], c.verts[f[2]]);
        for (double x : c.volumes) v += x;
        g.area_rel = std::max(g.area_rel, std::abs(a - af) / af);
        g.volume_rel = std::max(g.volume_rel, std::abs(v - c.volume) / c.volume);
        for (const auto& p : c.interfaces) g.planar_residual = std::max(g.planar_residual, p.residual);
        g.max_angle = std::max(g.max_angle, c.max_angle);
    }
    return g;
}

// Run configuration and the key=value config file.

enum class SolverKind { Auto, Direct, CG, Jacobi, AMG, HX };

inline SolverKind parse_solver(const std::string& s) {
    static const std::map<std::string, SolverKind> m{{"auto", SolverKind::Auto}, {"direct", SolverKind::Direct}, {"cg", SolverKind::CG},
                                                      {"jacobi", SolverKind::Jacobi}, {"amg", SolverKind::AMG}, {"hx", SolverKind::HX}};
    auto it = m.find(s);
    if (it == m.end()) throw ConfigError("unknown solver: " + s);
    return it->second;
}

struct RunConfig {
    SchemeConfig scheme;
    double rel_tol = 1e-8;
    int max_iter = 0;
    double snap_tol = 1e-8;
    AuxBackend backend = AuxBackend::Direct;
    SolverKind solver = SolverKind::Auto;
    int l = 1;
    int sweeps = 1;
    bool timing = true;  // false writes 0 seconds so CSV output is reproducible
    std::set<std::string> explicit_keys;

    void validate() const {
        scheme.validate();
        if (!(rel_tol > 0)) throw ConfigError("rel_tol must be positive");
        if (!(snap_tol >= 0)) throw ConfigError("snap_tol must be non-negative");
        if (l < 0) throw ConfigError("l must be non-negative");
    }
};

inline void apply_setting(RunConfig& rc, const std::string& key, const std::string& val) {
    rc.explicit_keys.insert(key);
    auto num = [&]() {
        try {
            size_t pos = 0;
            double v = std::stod(val, &pos);
            if (pos != val.size()) throw std::invalid_argument(val);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("bad value for " + key + ": " + val);
        }
    };
    if (key == "gamma") rc.scheme.gamma = num();
    else if (key == "gamma0") rc.scheme.gamma0 = num();
    else if (key == "gamma1") rc.scheme.gamma1 = num();
    else if (key == "rel_tol") rc.rel_tol = num();
    else if (key == "snap_tol") rc.snap_tol = num();
    else if (key == "max_iter") rc.max_iter = static_cast<int>(num());
    else if (key == "l") rc.l = static_cast<int>(num());
    else if (key == "sweeps") rc.sweeps = static_cast<int>(num());
    else if (key == "backend") rc.backend = parse_backend(val);
    else if (key == "solver") rc.solver = parse_solver(val);
    else throw ConfigError("unknown config key: " + key);
}

inline std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Lines "key = value"; '#' starts a comment.
inline void load_config(RunConfig& rc, std::istream& is) {
    std::string line;
    int no = 0;
    while (std::getline(is, line)) {
        ++no;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(no) + ": expected key=value");
        apply_setting(rc, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

inline void load_config_file(RunConfig& rc, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path);
    load_config(rc, is);
}

// One mesh, cut and topology; heap-held because the topology points into the other two.
struct Case {
    Benchmark bench;
    BackgroundMesh mesh;
    CutMesh cut;
    Topology T;
    SchemeConfig scheme;
};

inline std::unique_ptr<Case> build_case(const Benchmark& B, int n, const RunConfig& rc) {
    auto c = std::make_unique<Case>();
    c->bench = B;
    c->mesh = build_background_mesh(n, B.box);
    CutOptions opt;
    opt.snap_tol = rc.snap_tol;
    c->cut = classify_and_cut(c->mesh, B.ls, opt);
    c->T = build_topology(c->mesh, c->cut);
    c->scheme = rc.scheme;
    c->scheme.problem = B.problem;
    c->scheme.coef = B.coef;
    if (B.gamma0 && !rc.explicit_keys.count("gamma0")) c->scheme.gamma0 = *B.gamma0;
    return c;
}

inline LinearSystem assemble_case(const Case& c) {
    const auto& B = c.bench;
    if (B.problem == ProblemKind::H1) return assemble_h1(c.T, c.scheme, B.scalar_source(), B.scalar_solution());
    return assemble_hcurl(c.T, c.scheme, B.vector_source_field(), B.vector_solution());
}

struct SolveResult {
    VecX x;  // full DoF vector
    int iterations = 0;
    bool converged = false;
    double seconds = 0;
    CGResult cg;
};

inline SolveResult solve_case(const Case& c, const LinearSystem& S, const RunConfig& rc) {
    const auto t0 = std::chrono::steady_clock::now();
    SolverKind kind = rc.solver;
    if (kind == SolverKind::Auto) kind = c.bench.problem == ProblemKind::H1 ? SolverKind::AMG : SolverKind::HX;
    CGOptions opt;
    opt.rel_tol = rc.rel_tol;
    opt.max_iter = rc.max_iter;
    SolveResult r;
    if (S.num_free() == 0) {
        r.x = S.expand(VecX());
        r.converged = true;
        return r;
    }
    if (kind == SolverKind::Direct) {
        DirectSolver d(S.A);
        r.x = S.expand(d.solve(S.b));
        r.iterations = 1;
        r.converged = true;
    } else {
        if (kind == SolverKind::HX && c.bench.problem != ProblemKind::HCurl) throw ConfigError("the HX preconditioner needs an H(curl) problem");
        std::unique_ptr<HXPreconditioner> hx;
        std::unique_ptr<SmoothedAggregationAMG> amg;
        Precond M;
        switch (kind) {
            case SolverKind::CG: break;
            case SolverKind::Jacobi: M = jacobi_precond(S.A); break;
            case SolverKind::AMG:
                amg = std::make_unique<SmoothedAggregationAMG>(S.A);
                M = [&](const VecX& v) { return amg->apply(v); };
                break;
            case SolverKind::HX: {
                HXConfig cfg;
                cfg.smoother.l = rc.l;
                cfg.smoother.sweeps = rc.sweeps;
                cfg.backend = rc.backend;
                hx = std::make_unique<HXPreconditioner>(S, c.T, c.scheme, cfg);
                M = hx->as_precond();
                break;
            }
            default: break;
        }
        r.cg = pcg(S.A, S.b, M, opt);
        r.x = S.expand(r.cg.x);
        r.iterations = r.cg.iterations;
        r.converged = r.cg.converged;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

// Error norms.

struct ErrorReport {
    int n = 0;
    double h = 0;
    Index dof_total = 0, dof_interface = 0;
    double err_L2 = 0;
    double err_Linf = std::numeric_limits<double>::quiet_NaN();  // H1 problems only
    double err_energy = 0;                                       // H1 or curl seminorm
    int iters = 0;
    bool converged = true;
    double seconds = 0;
};

// Plain elements use the P1 / lowest Nedelec reconstruction; interface elements the computable
// projections (value and gradient, or value and curl) integrated region by region.
inline ErrorReport compute_errors(const Topology& T, const VecX& x, const Benchmark& B) {
    ErrorReport r;
    const auto& mesh = *T.mesh;
    r.n = mesh.n;
    r.h = mesh.h;
    const bool h1 = B.problem == ProblemKind::H1;
    r.dof_total = h1 ? T.num_nodes() : T.num_edges();
    r.dof_interface = h1 ? T.num_interface_nodes() : T.num_interface_edges();
    if (x.size() != r.dof_total) throw InvalidArgument("compute_errors: wrong DoF count");
    const auto& q = quad::tet_deg5();
    double l2 = 0, en = 0;
    for (Index e = 0; e < T.num_elements(); ++e) {
        if (!T.is_interface(e)) {
            auto X = mesh.element_coords(e);
            auto g = detail::tet_grads(X);
            int s = T.elem_sign(e);
            double vol = tet_signed_volume(X[0], X[1], X[2], X[3]);
            if (h1) {
                const auto& dn = T.elem_nodes[e];
                Vec3 gh = Vec3::Zero();
                for (int i = 0; i < 4; ++i) gh += x[dn[i]] * g[i];
                for (size_t k = 0; k < q.w.size(); ++k) {
                    Vec3 y = quad::bary_point(q.bary[k], X[0], X[1], X[2], X[3]);
                    double uh = 0;
                    for (int i = 0; i < 4; ++i) uh += q.bary[k][i] * x[dn[i]];
                    l2 += q.w[k] * vol * std::pow(B.value(y, s) - uh, 2);
                    en += q.w[k] * vol * (B.gradient(y, s) - gh).squaredNorm();
                }
            } else {
                auto keys = detail::element_keys(mesh, e);
                const auto& de = T.elem_edges[e];
                Vec3 ch = Vec3::Zero();
                for (int k = 0; k < 6; ++k) {
                    auto pq = detail::oriented_edge(keys, k);
                    ch += 2.0 * x[de[k]] * g[pq[0]].cross(g[pq[1]]);
                }
                for (size_t k = 0; k < q.w.size(); ++k) {
                    Vec3 y = quad::bary_point(q.bary[k], X[0], X[1], X[2], X[3]);
                    Vec3 vh = Vec3::Zero();
                    for (int j = 0; j < 6; ++j) vh += x[de[j]] * detail::whitney(g, q.bary[k], detail::oriented_edge(keys, j));
                    l2 += q.w[k] * vol * (B.field(y, s) - vh).squaredNorm();
                    en += q.w[k] * vol * (B.curl(y, s) - ch).squaredNorm();
                }
            }
            continue;
        }
        const auto& c = T.cut_element(e);
        if (h1) {
            const auto& dn = T.elem_nodes[e];
            VecX d(dn.size());
            for (size_t i = 0; i < dn.size(); ++i) d[i] = x[dn[i]];
            auto w = region_beta(c, B.coef);
            auto gp = project_h1_gradient(c, d, w);
            auto lift = lift_h1(c, gp, d);
            for (int m = 0; m < c.num_regions(); ++m) {
                int s = c.region_sign[m];
                Vec3 gm = gp.constant_part.values[m];
                detail::for_region_points(c, m, [&](const Vec3& y, double wq) {
                    l2 += wq * std::pow(B.value(y, s) - ife_eval_scalar(lift, y, m), 2);
                    en += wq * (B.gradient(y, s) - gm).squaredNorm();
                });
            }
        } else {
            const auto& de = T.elem_edges[e];
            VecX d(de.size());
            for (size_t i = 0; i < de.size(); ++i) d[i] = x[de[i]];
            auto vp = project_value_edge(c, d, region_beta(c, B.coef));
            auto cp = project_curl(c, d, region_alpha(c, B.coef));
            for (int m = 0; m < c.num_regions(); ++m) {
                int s = c.region_sign[m];
                Vec3 vm = vp.constant_part.values[m], cm = cp.constant_part.values[m];
                detail::for_region_points(c, m, [&](const Vec3& y, double wq) {
                    l2 += wq * (B.field(y, s) - vm).squaredNorm();
                    en += wq * (B.curl(y, s) - cm).squaredNorm();
                });
            }
        }
    }
    r.err_L2 = std::sqrt(l2);
    r.err_energy = std::sqrt(en);
    if (h1) {
        double mx = 0;
        for (Index i = 0; i < T.num_nodes(); ++i) mx = std::max(mx, std::abs(B.value(T.nodes[i], T.node_sign[i]) - x[i]));
        r.err_Linf = mx;
    }
    return r;
}

inline ErrorReport run_case(const Benchmark& B, int n, const RunConfig& rc, SolveResult* out = nullptr) {
    rc.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto c = build_case(B, n, rc);
    auto S = assemble_case(*c);
    auto sol = solve_case(*c, S, rc);
    ErrorReport r = compute_errors(c->T, sol.x, B);
    r.iters = sol.iterations;
    r.converged = sol.converged;
    r.seconds = rc.timing ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() : 0.0;
    if (out) *out = std::move(sol);
    return r;
}

// Convergence orders.

// Least-squares slope of log(err) against log(h) over the last k entries (finest meshes).
// NaN when the errors are at round-off level.
inline double fit_slope(const std::vector<double>& h, const std::vector<double>& err, size_t k) {
    if (h.size() != err.size() || h.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    k = std::clamp<size_t>(k, 2, h.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = h.size() - k; i < h.size(); ++i) {
        if (!(err[i] > 1e-12)) return std::numeric_limits<double>::quiet_NaN();
        double a = std::log(h[i]), b = std::log(err[i]);
        sx += a, sy += b, sxx += a * a, sxy += a * b;
    }
    double d = k * sxx - sx * sx;
    return (k * sxy - sx * sy) / d;
}

struct ConvergenceTable {
    std::string problem;
    std::vector<ErrorReport> rows;
    double slope_L2 = 0, slope_Linf = 0, slope_energy = 0;
    bool exact = false;  // every error at round-off: slopes undefined
};

inline ConvergenceTable run_convergence(const Benchmark& B, const std::vector<int>& nlist, const RunConfig& rc, std::ostream* log = nullptr) {
    if (nlist.empty()) throw ConfigError("empty mesh list");
    ConvergenceTable t;
    t.problem = B.name;
    for (int n : nlist) {
        t.rows.push_back(run_case(B, n, rc));
        const auto& r = t.rows.back();
        if (log)
            *log << B.name << " n=" << n << " dofs=" << r.dof_total << " L2=" << r.err_L2 << " energy=" << r.err_energy << " iters=" << r.iters
                 << (r.converged ? "" : " (not converged)") << "\n";
    }
    std::vector<double> h, a, b, c;
    for (const auto& r : t.rows) {
        h.push_back(r.h);
        a.push_back(r.err_L2);
        b.push_back(r.err_Linf);
        c.push_back(r.err_energy);
    }
    const size_t k = (nlist.size() + 1) / 2;
    t.slope_L2 = fit_slope(h, a, k);
    t.slope_Linf = B.problem == ProblemKind::H1 ? fit_slope(h, b, k) : std::numeric_limits<double>::quiet_NaN();
    t.slope_energy = fit_slope(h, c, k);
    t.exact = std::all_of(t.rows.begin(), t.rows.end(), [](const ErrorReport& r) {
        return r.err_L2 <= 1e-12 && r.err_energy <= 1e-12 && !(r.err_Linf > 1e-12);
    });
    return t;
}

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceTable& t) {
    os << "n,h,dof_total,dof_interface,err_L2,err_Linf,err_energy,iters,seconds\n";
    for (const auto& r : t.rows)
        os << r.n << "," << fmt(r.h) << "," << r.dof_total << "," << r.dof_interface << "," << fmt(r.err_L2) << "," << fmt(r.err_Linf) << ","
           << fmt(r.err_energy) << "," << r.iters << "," << fmt(r.seconds) << "\n";
    if (t.exact)
        os << "# slopes exact\n";
    else
        os << "# slopes err_L2=" << fmt(t.slope_L2) << " err_Linf=" << fmt(t.slope_Linf) << " err_energy=" << fmt(t.slope_energy) << "\n";
}

// Preconditioner studies.

// Condition estimate of a matrix from the Lanczos coefficients of plain CG.
inline double lanczos_condition(const SpMat& A, const VecX& b, int iterations = 400) {
    CGOptions opt;
    opt.rel_tol = 1e-14;
    opt.max_iter = iterations;
    opt.keep_history = false;
    return pcg(A, b, nullptr, opt).condition_estimate();
}

struct PrecondRow {
    int r = 0, l = 0, n = 0, iters = 0;
    double cond_est = 0, seconds = 0;
    bool converged = true;
};

// Flat interfaces x1 = 5 10^(-2-r): HX(l) iteration counts and the condition estimate of A.
inline std::vector<PrecondRow> run_precond_study(const std::vector<int>& rlist, const std::vector<int>& llist, int n, const RunConfig& rc,
                                                 std::ostream* log = nullptr) {
    rc.validate();
    std::vector<PrecondRow> out;
    for (int r : rlist) {
        auto c = build_case(make_benchmark("hcurl-flat", r), n, rc);
        auto S = assemble_case(*c);
        double cond = lanczos_condition(S.A, S.b);
        for (int l : llist) {
            RunConfig rl = rc;
            rl.l = l;
            rl.solver = SolverKind::HX;
            auto sol = solve_case(*c, S, rl);
            PrecondRow row{r, l, n, sol.iterations, cond, rc.timing ? sol.seconds : 0.0, sol.converged};
            if (log) *log << "r=" << r << " l=" << l << " iters=" << row.iters << " cond~" << cond << "\n";
            out.push_back(row);
        }
    }
    return out;
}

inline void write_precond_csv(std::ostream& os, const std::vector<PrecondRow>& rows) {
    os << "r,l,n,iters,cond_est,seconds\n";
    for (const auto& r : rows) os << r.r << "," << r.l << "," << r.n << "," << r.iters << "," << fmt(r.cond_est) << "," << fmt(r.seconds) << "\n";
}

struct SolverComparison {
    int n = 0;
    Index dofs = 0;
    int hx1 = 0, hx0 = 0, jacobi = 0;
    bool converged = true;
};

// Iteration counts of HX(l=1), HX(l=0) and diagonal PCG on one H(curl) problem.
inline SolverComparison compare_solvers(const Benchmark& B, int n, const RunConfig& rc) {
    auto c = build_case(B, n, rc);
    auto S = assemble_case(*c);
    SolverComparison out;
    out.n = n;
    out.dofs = S.num_free();
    RunConfig r = rc;
    r.max_iter = std::max(rc.max_iter, 100000);
    auto run = [&](SolverKind k, int l) {
        r.solver = k;
        r.l = l;
        auto s = solve_case(*c, S, r);
        out.converged = out.converged && s.converged;
        return s.iterations;
    };
    out.hx1 = run(SolverKind::HX, 1);
    out.hx0 = run(SolverKind::HX, 0);
    out.jacobi = run(SolverKind::Jacobi, 0);
    return out;
}

// Parses "8,16,24" or "0..4".
inline std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> v;
    auto dots = s.find("..");
    try {
        if (dots != std::string::npos) {
            int a = std::stoi(s.substr(0, dots)), b = std::stoi(s.substr(dots + 2));
            for (int i = a; i <= b; ++i) v.push_back(i);
        } else {
            std::stringstream ss(s);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!trim(tok).empty()) v.push_back(std::stoi(trim(tok)));
        }
    } catch (const std::exception&) {
        throw ConfigError("bad integer list: " + s);
    }
    if (v.empty()) throw ConfigError("empty integer list: " + s);
    return v;
}

}  // namespace ivem
