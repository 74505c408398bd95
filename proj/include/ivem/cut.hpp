#pragma once

#include "mesh.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <optional>

namespace ivem {

// How the cut point on a sign-changing edge is located.
//  Linear: root of the vertex-linear interpolant of phi (cut points of one tet are coplanar).
//  Bisection: root of phi itself, bisected to a relative tolerance.
enum class CutRule { Linear, Bisection };

struct CutOptions {
    double snap_tol = 1e-8;
    CutRule rule = CutRule::Linear;
    double bisect_tol = 1e-12;
};

struct CutPoint {
    Index id = -1;    // global cut point number; the node key is num_vertices + id
    Index edge = -1;
    Vec3 x = Vec3::Zero();
    double t = 0.0;  // parameter from the lower-index endpoint
};

struct BoundaryTri {
    std::array<int, 3> nodes{};  // counter-clockwise seen from outside
    int region = 0;
    int parent = 0;  // local tet face
    Vec3 normal = Vec3::Zero();
    double area = 0.0;
};

struct InterfacePatch {
    Vec3 normal = Vec3::Zero();  // from region m to region m+1
    Vec3 anchor = Vec3::Zero();
    std::vector<Vec3> polygon;
    std::vector<std::array<Vec3, 3>> tris;  // oriented along normal
    double residual = 0.0;
};

struct CutElement {
    Index element = -1;
    std::array<Vec3, 4> verts;
    std::vector<Vec3> nodes;       // element vertices first, then cut points
    std::vector<Index> node_keys;  // global node numbers (local numbers for synthetic elements)
    std::vector<CutPoint> cut_points;
    std::vector<int> region_sign;
    std::vector<BoundaryTri> tris;
    std::vector<InterfacePatch> interfaces;  // interfaces[m] separates regions m and m+1

    // filled by finalize()
    std::vector<double> volumes;
    std::vector<Vec3> centroids;
    std::vector<std::array<int, 2>> edges;  // local node pairs, ascending key
    std::vector<std::array<int, 3>> tri_edges;
    std::vector<std::array<int, 3>> tri_edge_sign;  // +1 if edge k of tri runs nodes[k] -> nodes[k+1]
    std::vector<int> tri_face_sign;                 // +1 if the ascending-key normal is outward
    double hK = 0.0;
    double volume = 0.0;
    Vec3 center = Vec3::Zero();
    double max_angle = 0.0;

    int num_regions() const { return static_cast<int>(region_sign.size()); }
    bool is_cut() const { return num_regions() > 1; }
    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_edges() const { return static_cast<int>(edges.size()); }
    int num_tris() const { return static_cast<int>(tris.size()); }
    Vec3 x_K() const { return interfaces.empty() ? center : interfaces.front().anchor; }

    std::array<Vec3, 3> tri_coords(int t) const {
        const auto& n = tris[t].nodes;
        return {nodes[n[0]], nodes[n[1]], nodes[n[2]]};
    }

    // Closed oriented triangle set of region m.
    std::vector<std::array<Vec3, 3>> region_surface(int m) const {
        std::vector<std::array<Vec3, 3>> s;
        for (int t = 0; t < num_tris(); ++t)
            if (tris[t].region == m) s.push_back(tri_coords(t));
        if (m < static_cast<int>(interfaces.size()))
            for (const auto& g : interfaces[m].tris) s.push_back(g);
        if (m > 0)
            for (const auto& g : interfaces[m - 1].tris) s.push_back({g[0], g[2], g[1]});
        return s;
    }

    // Fan sub-tetrahedra of region m from its centroid (quadrature only).
    std::vector<std::array<Vec3, 4>> region_subtets(int m) const {
        std::vector<std::array<Vec3, 4>> out;
        for (const auto& t : region_surface(m)) out.push_back({centroids[m], t[0], t[1], t[2]});
        return out;
    }
};

namespace detail {

inline double tet_diameter(const std::array<Vec3, 4>& X) {
    double d = 0;
    for (const auto& e : kTetEdges) d = std::max(d, (X[e[0]] - X[e[1]]).norm());
    return d;
}

// Sign of a tiny or zero vertex value from the nearest non-degenerate evaluation.
inline int resolve_sign(const std::function<double(const Vec3&)>& phi, const Vec3& x, double v, double h, double snap_tol) {
    if (v > 0) return 1;
    if (v < 0) return -1;
    for (double eps = std::max(snap_tol, 1e-14) * h; eps <= h; eps *= 2) {
        double best = 0;
        for (int d = 0; d < 3; ++d)
            for (double s : {1.0, -1.0}) {
                Vec3 y = x;
                y[d] += s * eps;
                double w = phi(y);
                if (std::abs(w) > std::abs(best)) best = w;
            }
        if (best != 0) return best > 0 ? 1 : -1;
    }
    throw DegenerateGeometry("level set vanishes identically near a vertex");
}

} // namespace detail

// Snapped vertex value: |phi| < snap_tol*h is replaced by +-snap_tol*h.
inline double snapped_phi(const LevelSet& ls, const Vec3& x, double h, Index* snap_events = nullptr) {
    double v = ls.phi(x);
    if (!std::isfinite(v)) throw DegenerateGeometry("level set is not finite at a vertex");
    double tol = ls.snap_tol * h;
    if (std::abs(v) < tol) {
        int s = detail::resolve_sign(ls.phi, x, v, h, ls.snap_tol);
        if (snap_events) ++*snap_events;
        v = s * tol;
    }
    return v;
}

// Cut point on the segment a->b where phi changes sign; a is the lower-index endpoint.
inline CutPoint compute_cut_point(const Vec3& xa, const Vec3& xb, double pa, double pb,
                                  const std::function<double(const Vec3&)>& phi, const CutOptions& opt) {
    if ((pa > 0) == (pb > 0)) throw InvalidArgument("compute_cut_point: no sign change");
    double t;
    if (opt.rule == CutRule::Linear || !phi) {
        t = pa / (pa - pb);
    } else {
        double lo = 0, hi = 1, flo = pa, fhi = pb;
        while (hi - lo > opt.bisect_tol) {
            double mid = 0.5 * (lo + hi);
            double fm = phi(xa + mid * (xb - xa));
            if (fm == 0) {
                lo = hi = mid;
                flo = fhi = 0;
                break;
            }
            if ((fm > 0) == (flo > 0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
                fhi = fm;
            }
        }
        t = (flo == fhi) ? lo : lo + (hi - lo) * flo / (flo - fhi);
    }
    CutPoint c;
    c.t = t;
    c.x = xa + t * (xb - xa);
    return c;
}

// Plane through 3 points, or least-squares plane through 4 or more.
inline InterfacePatch fit_plane(const std::vector<Vec3>& pts, double h) {
    if (pts.size() < 3) throw DegenerateGeometry("fewer than three cut points");
    InterfacePatch p;
    // mean taken relative to the first point keeps coplanar coordinates exact
    Vec3 c = Vec3::Zero();
    for (const auto& x : pts) c += x - pts[0];
    c = pts[0] + c / static_cast<double>(pts.size());
    Vec3 n;
    if (pts.size() == 3) {
        n = (pts[1] - pts[0]).cross(pts[2] - pts[0]);
        if (n.norm() < 1e-14 * h * h) throw DegenerateGeometry("collinear cut points");
        n.normalize();
    } else {
        Mat3 C = Mat3::Zero();
        for (const auto& x : pts) C += (x - c) * (x - c).transpose();
        Eigen::SelfAdjointEigenSolver<Mat3> es(C);
        if (es.eigenvalues()[1] < 1e-28 * h * h * h * h) throw DegenerateGeometry("collinear cut points");
        n = es.eigenvectors().col(0).normalized();
    }
    p.normal = n;
    p.anchor = c;
    for (const auto& x : pts) p.residual = std::max(p.residual, std::abs(n.dot(x - c)));
    return p;
}

// Orders the polygon around the anchor and builds the fan oriented along the normal.
inline void build_patch_fan(InterfacePatch& p, std::vector<Vec3> pts) {
    const Vec3& n = p.normal;
    Vec3 a = std::abs(n[0]) <= std::abs(n[1]) && std::abs(n[0]) <= std::abs(n[2]) ? Vec3::UnitX()
             : std::abs(n[1]) <= std::abs(n[2])                                    ? Vec3::UnitY()
                                                                                   : Vec3::UnitZ();
    Vec3 t1 = (a - a.dot(n) * n).normalized();
    Vec3 t2 = n.cross(t1);
    std::sort(pts.begin(), pts.end(), [&](const Vec3& u, const Vec3& v) {
        return std::atan2(t2.dot(u - p.anchor), t1.dot(u - p.anchor)) < std::atan2(t2.dot(v - p.anchor), t1.dot(v - p.anchor));
    });
    p.polygon = pts;
    p.tris.clear();
    const int k = static_cast<int>(pts.size());
    for (int i = 0; i < k; ++i) p.tris.push_back({p.anchor, pts[i], pts[(i + 1) % k]});
}

// Computes normals, areas, local edges, volumes and checks closure.
inline void finalize(CutElement& c) {
    const auto& X = c.verts;
    c.hK = detail::tet_diameter(X);
    c.volume = tet_signed_volume(X[0], X[1], X[2], X[3]);
    if (!(c.volume > 0)) throw DegenerateGeometry("element with non-positive volume");
    c.center = 0.25 * (X[0] + X[1] + X[2] + X[3]);
    const double h2 = c.hK * c.hK;

    c.max_angle = 0;
    for (auto& t : c.tris) {
        const Vec3 &a = c.nodes[t.nodes[0]], &b = c.nodes[t.nodes[1]], &d = c.nodes[t.nodes[2]];
        Vec3 cr = (b - a).cross(d - a);
        t.area = 0.5 * cr.norm();
        if (!(t.area > 0)) throw DegenerateGeometry("zero-area boundary triangle");
        t.normal = cr.normalized();
        c.max_angle = std::max(c.max_angle, tri_max_angle(a, b, d));
    }

    // boundary partition
    double atot = 0, aface = 0;
    for (const auto& t : c.tris) atot += t.area;
    for (const auto& f : kTetFaces) aface += tri_area(X[f[0]], X[f[1]], X[f[2]]);
    if (std::abs(atot - aface) > 1e-12 * aface) throw TopologyError("boundary triangles do not partition the element boundary");

    const int M = c.num_regions();
    c.volumes.assign(M, 0.0);
    c.centroids.assign(M, c.center);
    double vsum = 0;
    for (int m = 0; m < M; ++m) {
        Vec3 flux = Vec3::Zero(), mom = Vec3::Zero();
        double vol = 0;
        for (const auto& t : c.region_surface(m)) {
            flux += 0.5 * (t[1] - t[0]).cross(t[2] - t[0]);
            double v = tet_signed_volume(c.center, t[0], t[1], t[2]);
            vol += v;
            mom += v * 0.25 * (c.center + t[0] + t[1] + t[2]);
        }
        if (flux.norm() > 1e-10 * h2) throw TopologyError("region boundary is not closed");
        if (!(vol > 0)) throw DegenerateGeometry("region with non-positive volume");
        c.volumes[m] = vol;
        c.centroids[m] = mom / vol;
        vsum += vol;
    }
    if (std::abs(vsum - c.volume) > 1e-12 * c.volume) throw TopologyError("region volumes do not sum to the element volume");

    // local edges oriented by ascending key
    std::map<std::pair<Index, Index>, std::array<int, 2>> emap;
    for (const auto& t : c.tris)
        for (int k = 0; k < 3; ++k) {
            int a = t.nodes[k], b = t.nodes[(k + 1) % 3];
            if (c.node_keys[a] > c.node_keys[b]) std::swap(a, b);
            emap[{c.node_keys[a], c.node_keys[b]}] = {a, b};
        }
    c.edges.clear();
    std::map<std::pair<Index, Index>, int> eid;
    for (const auto& [k, v] : emap) {
        eid[k] = static_cast<int>(c.edges.size());
        c.edges.push_back(v);
    }
    c.tri_edges.assign(c.tris.size(), {});
    c.tri_edge_sign.assign(c.tris.size(), {});
    c.tri_face_sign.assign(c.tris.size(), 1);
    for (size_t i = 0; i < c.tris.size(); ++i) {
        const auto& t = c.tris[i];
        for (int k = 0; k < 3; ++k) {
            Index ka = c.node_keys[t.nodes[k]], kb = c.node_keys[t.nodes[(k + 1) % 3]];
            c.tri_edges[i][k] = eid.at({std::min(ka, kb), std::max(ka, kb)});
            c.tri_edge_sign[i][k] = ka < kb ? 1 : -1;
        }
        // parity of the permutation to ascending keys
        std::array<Index, 3> k{c.node_keys[t.nodes[0]], c.node_keys[t.nodes[1]], c.node_keys[t.nodes[2]]};
        int inv = (k[0] > k[1]) + (k[0] > k[2]) + (k[1] > k[2]);
        c.tri_face_sign[i] = inv % 2 == 0 ? 1 : -1;
    }
}

namespace detail {

// Outward unit normal of local tet face f.
inline Vec3 face_outward(const std::array<Vec3, 4>& X, int f) {
    const auto& lf = kTetFaces[f];
    Vec3 n = (X[lf[1]] - X[lf[0]]).cross(X[lf[2]] - X[lf[0]]);
    if (n.dot(X[f] - X[lf[0]]) > 0) n = -n;
    return n.normalized();
}

inline void add_outward_tri(CutElement& c, std::array<int, 3> t, int region, int parent) {
    const Vec3 no = face_outward(c.verts, parent);
    Vec3 n = (c.nodes[t[1]] - c.nodes[t[0]]).cross(c.nodes[t[2]] - c.nodes[t[0]]);
    if (n.dot(no) < 0) std::swap(t[1], t[2]);
    BoundaryTri b;
    b.nodes = t;
    b.region = region;
    b.parent = parent;
    c.tris.push_back(b);
}

} // namespace detail

// Single-region element (non-interface element viewed through the cut-element interface).
inline CutElement make_uncut_element(const std::array<Vec3, 4>& X, const std::array<Index, 4>& keys, int sign = 1, Index element = -1) {
    CutElement c;
    c.element = element;
    c.verts = X;
    c.nodes.assign(X.begin(), X.end());
    c.node_keys.assign(keys.begin(), keys.end());
    c.region_sign = {sign};
    for (int f = 0; f < 4; ++f) detail::add_outward_tri(c, kTetFaces[f], 0, f);
    finalize(c);
    return c;
}

// Single-cut element from snapped vertex values and cut points on sign-changing edges.
// Region 0 is the '+' side, region 1 the '-' side.
inline CutElement cut_tet(const std::array<Vec3, 4>& X, const std::array<Index, 4>& ids, const std::array<double, 4>& phiv,
                          const std::array<std::optional<CutPoint>, 6>& cps, Index num_vertices, Index element = -1) {
    std::array<int, 4> s;
    for (int i = 0; i < 4; ++i) s[i] = phiv[i] > 0 ? 1 : -1;
    CutElement c;
    c.element = element;
    c.verts = X;
    c.nodes.assign(X.begin(), X.end());
    c.node_keys.assign(ids.begin(), ids.end());
    std::array<int, 6> local_cp;
    local_cp.fill(-1);
    std::vector<Vec3> pts;
    for (int k = 0; k < 6; ++k) {
        int a = kTetEdges[k][0], b = kTetEdges[k][1];
        if (s[a] == s[b]) continue;
        if (!cps[k]) throw DegenerateGeometry("sign-changing edge without a cut point");
        local_cp[k] = c.num_nodes();
        c.nodes.push_back(cps[k]->x);
        c.node_keys.push_back(num_vertices + cps[k]->id);
        c.cut_points.push_back(*cps[k]);
        pts.push_back(cps[k]->x);
    }
    if (pts.empty()) throw InvalidArgument("cut_tet: element is not cut");
    if (pts.size() < 3) throw DegenerateGeometry("cut element with fewer than three cut edges");
    c.region_sign = {1, -1};

    auto edge_of = [](int a, int b) {
        for (int k = 0; k < 6; ++k)
            if ((kTetEdges[k][0] == a && kTetEdges[k][1] == b) || (kTetEdges[k][0] == b && kTetEdges[k][1] == a)) return k;
        return -1;
    };
    auto region_of = [&](int v) { return s[v] > 0 ? 0 : 1; };

    for (int f = 0; f < 4; ++f) {
        std::array<int, 3> v = kTetFaces[f];
        std::sort(v.begin(), v.end(), [&](int a, int b) { return ids[a] < ids[b]; });
        if (s[v[0]] == s[v[1]] && s[v[1]] == s[v[2]]) {
            detail::add_outward_tri(c, v, region_of(v[0]), f);
            continue;
        }
        int iso, x, y;
        if (s[v[0]] == s[v[1]]) iso = v[2], x = v[0], y = v[1];
        else if (s[v[0]] == s[v[2]]) iso = v[1], x = v[0], y = v[2];
        else iso = v[0], x = v[1], y = v[2];
        // x has the lower global index of the pair
        int p = local_cp[edge_of(iso, x)], q = local_cp[edge_of(iso, y)];
        detail::add_outward_tri(c, {iso, p, q}, region_of(iso), f);
        double d1 = (c.nodes[p] - c.nodes[y]).norm();  // diagonal p-y
        double d2 = (c.nodes[q] - c.nodes[x]).norm();  // diagonal q-x
        bool use_qx = d2 < d1 || std::abs(d1 - d2) <= 1e-12 * std::max(d1, d2);
        if (use_qx) {
            detail::add_outward_tri(c, {q, p, x}, region_of(x), f);
            detail::add_outward_tri(c, {q, x, y}, region_of(x), f);
        } else {
            detail::add_outward_tri(c, {p, x, y}, region_of(x), f);
            detail::add_outward_tri(c, {p, y, q}, region_of(x), f);
        }
    }

    InterfacePatch patch = fit_plane(pts, detail::tet_diameter(X));
    Vec3 dm = Vec3::Zero(), dp = Vec3::Zero();
    int nm = 0, np = 0;
    for (int i = 0; i < 4; ++i) (s[i] < 0 ? (++nm, dm) : (++np, dp)) += X[i];
    if (patch.normal.dot(dm / nm - dp / np) < 0) patch.normal = -patch.normal;
    build_patch_fan(patch, pts);
    c.interfaces = {patch};
    finalize(c);
    return c;
}

// Convenience: cut one tet by a level set (element-local numbering).
inline CutElement cut_single_tet(const std::array<Vec3, 4>& X, const LevelSet& ls, const CutOptions& opt = {}) {
    double h = detail::tet_diameter(X);
    LevelSet l2 = ls;
    l2.snap_tol = opt.snap_tol;
    std::array<double, 4> phiv;
    for (int i = 0; i < 4; ++i) phiv[i] = snapped_phi(l2, X[i], h);
    std::array<std::optional<CutPoint>, 6> cps;
    for (int k = 0; k < 6; ++k) {
        int a = kTetEdges[k][0], b = kTetEdges[k][1];
        if ((phiv[a] > 0) == (phiv[b] > 0)) continue;
        CutPoint p = compute_cut_point(X[a], X[b], phiv[a], phiv[b], ls.phi, opt);
        p.edge = k;
        p.id = k;
        cps[k] = p;
    }
    bool all_same = true;
    for (int i = 1; i < 4; ++i) all_same &= (phiv[i] > 0) == (phiv[0] > 0);
    if (all_same) return make_uncut_element(X, {0, 1, 2, 3}, phiv[0] > 0 ? 1 : -1);
    return cut_tet(X, {0, 1, 2, 3}, phiv, cps, 4);
}

// Synthetic multi-cut element: the tet sliced by planes n_k.x = d_k that do not meet inside it.
// Region m lies on the positive side of planes 0..m-1 and the negative side of the rest.
inline CutElement slice_tet(const std::array<Vec3, 4>& X, const std::vector<std::pair<Vec3, double>>& planes, int first_sign = 1) {
    CutElement c;
    c.verts = X;
    c.nodes.assign(X.begin(), X.end());
    const double h = detail::tet_diameter(X);
    const int P = static_cast<int>(planes.size());
    auto lev = [&](int k, const Vec3& x) { return planes[k].first.normalized().dot(x) - planes[k].second / planes[k].first.norm(); };
    auto region_at = [&](const Vec3& x) {
        int r = 0;
        for (int k = 0; k < P; ++k) r += lev(k, x) > 0;
        return r;
    };
    auto node_at = [&](const Vec3& x) {
        for (int i = 0; i < c.num_nodes(); ++i)
            if ((c.nodes[i] - x).norm() <= 1e-12 * h) return i;
        c.nodes.push_back(x);
        return c.num_nodes() - 1;
    };
    std::vector<std::vector<int>> plane_nodes(P);
    for (int k = 0; k < P; ++k)
        for (const auto& e : kTetEdges) {
            double sa = lev(k, X[e[0]]), sb = lev(k, X[e[1]]);
            if ((sa > 0) == (sb > 0)) continue;
            plane_nodes[k].push_back(node_at(X[e[0]] + sa / (sa - sb) * (X[e[1]] - X[e[0]])));
        }
    for (int f = 0; f < 4; ++f) {
        std::vector<std::vector<int>> polys{{kTetFaces[f][0], kTetFaces[f][1], kTetFaces[f][2]}};
        for (int k = 0; k < P; ++k) {
            std::vector<std::vector<int>> next;
            for (const auto& poly : polys) {
                std::vector<int> neg, pos;
                const int m = static_cast<int>(poly.size());
                for (int i = 0; i < m; ++i) {
                    int u = poly[i], v = poly[(i + 1) % m];
                    double su = lev(k, c.nodes[u]), sv = lev(k, c.nodes[v]);
                    (su > 0 ? pos : neg).push_back(u);
                    if ((su > 0) != (sv > 0)) {
                        int w = node_at(c.nodes[u] + su / (su - sv) * (c.nodes[v] - c.nodes[u]));
                        neg.push_back(w);
                        pos.push_back(w);
                    }
                }
                if (neg.size() >= 3) next.push_back(neg);
                if (pos.size() >= 3) next.push_back(pos);
            }
            polys = next;
        }
        for (const auto& poly : polys) {
            Vec3 g = Vec3::Zero();
            for (int i : poly) g += c.nodes[i];
            int r = region_at(g / static_cast<double>(poly.size()));
            for (size_t i = 1; i + 1 < poly.size(); ++i) detail::add_outward_tri(c, {poly[0], poly[i], poly[i + 1]}, r, f);
        }
    }
    c.node_keys.resize(c.nodes.size());
    std::iota(c.node_keys.begin(), c.node_keys.end(), Index(0));
    for (int m = 0; m <= P; ++m) c.region_sign.push_back(m % 2 == 0 ? first_sign : -first_sign);
    for (int k = 0; k < P; ++k) {
        std::vector<Vec3> pts;
        for (int i : plane_nodes[k]) pts.push_back(c.nodes[i]);
        InterfacePatch p = fit_plane(pts, h);
        if (p.normal.dot(planes[k].first) < 0) p.normal = -p.normal;
        build_patch_fan(p, pts);
        c.interfaces.push_back(p);
    }
    finalize(c);
    return c;
}

// Classification of all background elements against a level set.
struct CutMesh {
    const BackgroundMesh* mesh = nullptr;
    CutOptions opts;
    std::vector<double> phi;         // snapped vertex values
    std::vector<Index> edge_cut;     // per background edge, index into points or -1
    std::vector<CutPoint> points;
    std::vector<Index> elem_cut;     // per element, index into cuts or -1
    std::vector<int> elem_sign;      // +-1 for non-interface elements, 0 for interface ones
    std::vector<CutElement> cuts;
    Index snap_events = 0;

    Index num_interface() const { return static_cast<Index>(cuts.size()); }
    bool is_interface(Index e) const { return elem_cut[e] >= 0; }
};

inline CutMesh classify_and_cut(const BackgroundMesh& mesh, const LevelSet& ls, const CutOptions& opt = {}) {
    CutMesh cm;
    cm.mesh = &mesh;
    cm.opts = opt;
    LevelSet l2 = ls;
    l2.snap_tol = opt.snap_tol;
    const Index V = mesh.num_nodes();
    cm.phi.resize(V);
    for (Index v = 0; v < V; ++v) cm.phi[v] = snapped_phi(l2, mesh.nodes[v], mesh.h, &cm.snap_events);

    cm.edge_cut.assign(mesh.num_edges(), -1);
    for (Index e = 0; e < mesh.num_edges(); ++e) {
        auto [a, b] = mesh.edges[e];
        if ((cm.phi[a] > 0) == (cm.phi[b] > 0)) continue;
        CutPoint p = compute_cut_point(mesh.nodes[a], mesh.nodes[b], cm.phi[a], cm.phi[b], ls.phi, opt);
        p.edge = e;
        p.id = static_cast<Index>(cm.points.size());
        cm.edge_cut[e] = p.id;
        cm.points.push_back(p);
    }

    cm.elem_cut.assign(mesh.num_elements(), -1);
    cm.elem_sign.assign(mesh.num_elements(), 0);
    for (Index e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.elements[e];
        std::array<double, 4> pv;
        bool same = true;
        for (int i = 0; i < 4; ++i) {
            pv[i] = cm.phi[el[i]];
            same &= (pv[i] > 0) == (pv[0] > 0);
        }
        if (same) {
            cm.elem_sign[e] = pv[0] > 0 ? 1 : -1;
            continue;
        }
        std::array<std::optional<CutPoint>, 6> cps;
        for (int k = 0; k < 6; ++k) {
            Index ge = mesh.elem2edge[e][k];
            if (cm.edge_cut[ge] >= 0) cps[k] = cm.points[cm.edge_cut[ge]];
        }
        std::array<Index, 4> ids{el[0], el[1], el[2], el[3]};
        cm.elem_cut[e] = static_cast<Index>(cm.cuts.size());
        cm.cuts.push_back(cut_tet(mesh.element_coords(e), ids, pv, cps, V, e));
    }
    return cm;
}

} // namespace ivem
