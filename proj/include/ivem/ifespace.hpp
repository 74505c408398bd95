#pragma once

#include "cut.hpp"

#include <Eigen/SVD>

namespace ivem {

struct Coefficients {
    double alpha_minus = 1.0, alpha_plus = 1.0;
    double beta_minus = 1.0, beta_plus = 1.0;

    void validate() const {
        if (!(alpha_minus > 0 && alpha_plus > 0 && beta_minus > 0 && beta_plus > 0))
            throw InvalidArgument("coefficients must be positive");
    }
    double alpha(int sign) const { return sign > 0 ? alpha_plus : alpha_minus; }
    double beta(int sign) const { return sign > 0 ? beta_plus : beta_minus; }
};

// Per-region values of a piecewise coefficient.
inline std::vector<double> region_coef(const CutElement& c, double minus, double plus) {
    std::vector<double> w;
    for (int s : c.region_sign) w.push_back(s > 0 ? plus : minus);
    return w;
}
inline std::vector<double> region_alpha(const CutElement& c, const Coefficients& k) { return region_coef(c, k.alpha_minus, k.alpha_plus); }
inline std::vector<double> region_beta(const CutElement& c, const Coefficients& k) { return region_coef(c, k.beta_minus, k.beta_plus); }
inline std::vector<double> inverse(std::vector<double> w) {
    for (double& x : w) x = 1.0 / x;
    return w;
}

// Edge kind: tangential components continuous. Face kind: normal component continuous.
enum class Kind { Edge, Face };

struct JumpMatrix {
    Kind kind = Kind::Edge;
    Vec3 normal = Vec3::UnitX();
    double ratio = 1.0;
    Mat3 M = Mat3::Identity();
};

// Orthonormal frame [n, t1, t2]; t1 from the least-aligned coordinate axis.
inline Mat3 normal_frame(const Vec3& n) {
    int k = 0;
    for (int d = 1; d < 3; ++d)
        if (std::abs(n[d]) < std::abs(n[k])) k = d;
    Vec3 a = Vec3::Unit(k);
    Vec3 t1 = (a - a.dot(n) * n).normalized();
    Vec3 t2 = n.cross(t1);
    Mat3 T;
    T << n, t1, t2;
    return T;
}

inline JumpMatrix jump_matrix(Kind kind, const Vec3& normal, double c_from, double c_to) {
    double len = normal.norm();
    if (!(len > 0)) throw InvalidArgument("jump_matrix: zero normal");
    if (std::abs(len - 1.0) > 1e-12) throw InvalidArgument("jump_matrix: normal is not unit");
    if (!(c_from > 0 && c_to > 0)) throw InvalidArgument("jump_matrix: coefficients must be positive");
    JumpMatrix J;
    J.kind = kind;
    J.normal = normal;
    J.ratio = c_from / c_to;
    Mat3 T = normal_frame(normal);
    Vec3 d = kind == Kind::Edge ? Vec3(J.ratio, 1, 1) : Vec3(1, J.ratio, J.ratio);
    J.M = T * d.asDiagonal() * T.transpose();
    return J;
}

// chain[m] maps the region-0 seed to region m.
inline std::vector<Mat3> chain_matrices(const CutElement& c, Kind kind, const std::vector<double>& w) {
    std::vector<Mat3> ch{Mat3::Identity()};
    for (int m = 0; m + 1 < c.num_regions(); ++m)
        ch.push_back(jump_matrix(kind, c.interfaces[m].normal, w[m], w[m + 1]).M * ch.back());
    return ch;
}

struct PiecewiseConstant {
    Kind kind = Kind::Edge;
    std::vector<double> weight;  // coefficient per region
    std::vector<Vec3> values;    // one vector per region

    PiecewiseConstant scaled(const std::vector<double>& s) const {
        PiecewiseConstant p = *this;
        for (size_t m = 0; m < values.size(); ++m) p.values[m] *= s[m];
        return p;
    }
};

inline PiecewiseConstant extend_constant(const CutElement& c, Kind kind, const std::vector<double>& w, const Vec3& seed) {
    PiecewiseConstant p;
    p.kind = kind;
    p.weight = w;
    for (const auto& M : chain_matrices(c, kind, w)) p.values.push_back(M * seed);
    return p;
}

// Evaluation anchor of region m: x_{K,0} for m = 0, otherwise the plane it was entered through.
inline Vec3 region_anchor(const CutElement& c, int m) {
    if (c.interfaces.empty()) return c.center;
    return c.interfaces[std::max(m - 1, 0)].anchor;
}

enum class Space { Nodal, Edge, Face };

// IFE function on one element. Per region m:
//  nodal: lin[m].(x - anchor[m]) + sc[m]
//  edge:  lin[m] x (x - anchor[m]) + cst[m]
//  face:  c (x - anchor[m]) + cst[m]
struct IFEFunction {
    Space space = Space::Nodal;
    std::vector<Vec3> anchor;
    std::vector<Vec3> lin;
    std::vector<Vec3> cst;
    std::vector<double> sc;
    double c = 0.0;
    PiecewiseConstant a, b;  // the defining constant parts

    int num_regions() const { return static_cast<int>(anchor.size()); }
};

// Nodal IFE b.(x - x_K) + c with b in P^e_0; scalar offsets keep continuity across every plane.
inline IFEFunction make_nodal_ife(const CutElement& k, const PiecewiseConstant& b, double c) {
    IFEFunction f;
    f.space = Space::Nodal;
    f.b = b;
    f.c = c;
    const int M = k.num_regions();
    double off = c;
    for (int m = 0; m < M; ++m) {
        f.anchor.push_back(region_anchor(k, m));
        f.lin.push_back(b.values[m]);
        f.sc.push_back(off);
        if (m + 1 < M) off += b.values[m].dot(k.interfaces[m].anchor - f.anchor[m]);
    }
    return f;
}

// Edge IFE a x (x - x_K) + b; xi offsets carried by the edge jump matrices of b's weight.
inline IFEFunction make_edge_ife(const CutElement& k, const PiecewiseConstant& a, const PiecewiseConstant& b) {
    IFEFunction f;
    f.space = Space::Edge;
    f.a = a;
    f.b = b;
    const int M = k.num_regions();
    Vec3 xi = Vec3::Zero();
    for (int m = 0; m < M; ++m) {
        f.anchor.push_back(region_anchor(k, m));
        f.lin.push_back(a.values[m]);
        f.cst.push_back(b.values[m] + xi);
        if (m + 1 < M) {
            Mat3 J = jump_matrix(Kind::Edge, k.interfaces[m].normal, b.weight[m], b.weight[m + 1]).M;
            xi = J * (xi + a.values[m].cross(k.interfaces[m].anchor - f.anchor[m]));
        }
    }
    return f;
}

// Face IFE c (x - x_K) + a; eta offsets carried by the face jump matrices of a's weight.
inline IFEFunction make_face_ife(const CutElement& k, double c, const PiecewiseConstant& a) {
    IFEFunction f;
    f.space = Space::Face;
    f.a = a;
    f.c = c;
    const int M = k.num_regions();
    Vec3 eta = Vec3::Zero();
    for (int m = 0; m < M; ++m) {
        f.anchor.push_back(region_anchor(k, m));
        f.cst.push_back(a.values[m] + eta);
        if (m + 1 < M) {
            Mat3 J = jump_matrix(Kind::Face, k.interfaces[m].normal, a.weight[m], a.weight[m + 1]).M;
            eta = J * (eta + c * (k.interfaces[m].anchor - f.anchor[m]));
        }
    }
    return f;
}

inline double ife_eval_scalar(const IFEFunction& f, const Vec3& x, int m) {
    if (m < 0 || m >= f.num_regions()) throw InvalidArgument("ife_eval: region out of range");
    if (f.space != Space::Nodal) throw InvalidArgument("ife_eval_scalar: not a nodal function");
    return f.lin[m].dot(x - f.anchor[m]) + f.sc[m];
}

inline Vec3 ife_eval_vector(const IFEFunction& f, const Vec3& x, int m) {
    if (m < 0 || m >= f.num_regions()) throw InvalidArgument("ife_eval: region out of range");
    if (f.space == Space::Edge) return f.lin[m].cross(x - f.anchor[m]) + f.cst[m];
    if (f.space == Space::Face) return f.c * (x - f.anchor[m]) + f.cst[m];
    throw InvalidArgument("ife_eval_vector: not a vector function");
}

inline PiecewiseConstant ife_grad(const IFEFunction& f) { return f.b; }

inline PiecewiseConstant ife_curl(const IFEFunction& f) {
    PiecewiseConstant p = f.a;
    for (auto& v : p.values) v *= 2.0;
    return p;
}

inline double ife_div(const IFEFunction& f) { return 3.0 * f.c; }

struct ComplexReport {
    int dim_n = 0, dim_e = 0, dim_f = 0, dim_0 = 1;
    int rank_grad = 0, rank_curl = 0, rank_div = 0;
    double grad_inclusion = 0;  // max defect of grad(S^n) in ker(curl) and S^e
    double curl_inclusion = 0;  // max defect of curl(S^e) in ker(div) and S^f
    bool ok = false;
};

namespace detail {
inline int numerical_rank(const MatX& A, double rel = 1e-10) {
    if (A.size() == 0) return 0;
    Eigen::JacobiSVD<MatX> svd(A);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0) return 0;
    int r = 0;
    for (int i = 0; i < s.size(); ++i) r += s[i] > rel * s[0];
    return r;
}
}  // namespace detail

// Checks the local sequence S^n -> S^e -> S^f -> P0 on a basis, using sample points per region.
inline ComplexReport local_complex_check(const CutElement& k, const Coefficients& coef) {
    const auto beta = region_beta(k, coef), alpha = region_alpha(k, coef);
    const int M = k.num_regions();
    std::vector<std::pair<Vec3, int>> pts;
    for (int m = 0; m < M; ++m)
        for (const auto& st : k.region_subtets(m)) pts.push_back({0.25 * (st[0] + st[1] + st[2] + st[3]), m});
    const int P = static_cast<int>(pts.size());

    std::vector<IFEFunction> Sn, Se, Sf;
    PiecewiseConstant zb = extend_constant(k, Kind::Edge, beta, Vec3::Zero());
    PiecewiseConstant za = extend_constant(k, Kind::Face, alpha, Vec3::Zero());
    for (int l = 0; l < 3; ++l) Sn.push_back(make_nodal_ife(k, extend_constant(k, Kind::Edge, beta, Vec3::Unit(l)), 0.0));
    Sn.push_back(make_nodal_ife(k, zb, 1.0));
    for (int l = 0; l < 3; ++l) Se.push_back(make_edge_ife(k, extend_constant(k, Kind::Face, alpha, Vec3::Unit(l)), zb));
    for (int l = 0; l < 3; ++l) Se.push_back(make_edge_ife(k, za, extend_constant(k, Kind::Edge, beta, Vec3::Unit(l))));
    Sf.push_back(make_face_ife(k, 1.0, za));
    for (int l = 0; l < 3; ++l) Sf.push_back(make_face_ife(k, 0.0, extend_constant(k, Kind::Face, alpha, Vec3::Unit(l))));

    auto eval_mat = [&](const std::vector<IFEFunction>& fs) {
        bool scalar = fs[0].space == Space::Nodal;
        MatX E((scalar ? 1 : 3) * P, fs.size());
        for (size_t j = 0; j < fs.size(); ++j)
            for (int i = 0; i < P; ++i) {
                if (scalar)
                    E(i, j) = ife_eval_scalar(fs[j], pts[i].first, pts[i].second);
                else
                    E.block<3, 1>(3 * i, j) = ife_eval_vector(fs[j], pts[i].first, pts[i].second);
            }
        return E;
    };
    ComplexReport r;
    r.dim_n = detail::numerical_rank(eval_mat(Sn));
    r.dim_e = detail::numerical_rank(eval_mat(Se));
    r.dim_f = detail::numerical_rank(eval_mat(Sf));

    // grad of each nodal basis function is an edge IFE with a = 0; its curl is 0.
    MatX G(3 * M, 4), C(3 * M, 6), D(1, 4);
    for (int j = 0; j < 4; ++j) {
        IFEFunction g = make_edge_ife(k, za, ife_grad(Sn[j]));
        for (int m = 0; m < M; ++m) {
            G.block<3, 1>(3 * m, j) = g.cst[m];
            r.grad_inclusion = std::max(r.grad_inclusion, ife_curl(g).values[m].norm());
            // the edge IFE built from grad must agree with the derivative of the nodal function
            r.grad_inclusion = std::max(r.grad_inclusion, (g.cst[m] - Sn[j].lin[m]).norm());
        }
    }
    for (int j = 0; j < 6; ++j) {
        IFEFunction cf = make_face_ife(k, 0.0, ife_curl(Se[j]));
        for (int m = 0; m < M; ++m) C.block<3, 1>(3 * m, j) = ife_curl(Se[j]).values[m];
        r.curl_inclusion = std::max(r.curl_inclusion, std::abs(ife_div(cf)));
        // membership in S^f: the curl field keeps the face-kind chain of alpha
        PiecewiseConstant re = extend_constant(k, Kind::Face, alpha, ife_curl(Se[j]).values[0]);
        for (int m = 0; m < M; ++m) r.curl_inclusion = std::max(r.curl_inclusion, (re.values[m] - ife_curl(Se[j]).values[m]).norm());
    }
    for (int j = 0; j < 4; ++j) D(0, j) = ife_div(Sf[j]);
    r.rank_grad = detail::numerical_rank(G);
    r.rank_curl = detail::numerical_rank(C);
    r.rank_div = detail::numerical_rank(D);
    r.ok = r.dim_n == 4 && r.dim_e == 6 && r.dim_f == 4 && r.rank_grad == 3 && r.rank_curl == 3 && r.rank_div == 1 &&
           r.grad_inclusion < 1e-12 && r.curl_inclusion < 1e-12 * std::max(1.0, *std::max_element(alpha.begin(), alpha.end()));
    return r;
}

} // namespace ivem
