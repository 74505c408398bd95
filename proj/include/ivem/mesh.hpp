#pragma once

#include "core.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace ivem {

// Structured Kuhn tetrahedral mesh of a box.
struct BackgroundMesh {
    int n = 0;
    Box box;
    double h = 0.0;
    std::vector<Vec3> nodes;
    std::vector<std::array<Index, 4>> elements;
    std::vector<std::array<Index, 2>> edges;  // ascending
    std::vector<std::array<Index, 3>> faces;  // ascending
    std::vector<std::array<Index, 6>> elem2edge;
    std::vector<std::array<Index, 4>> elem2face;  // face k is opposite local vertex k
    std::vector<std::array<Index, 2>> face2elem;  // -1 for a missing neighbour

    Index num_nodes() const { return static_cast<Index>(nodes.size()); }
    Index num_edges() const { return static_cast<Index>(edges.size()); }
    Index num_faces() const { return static_cast<Index>(faces.size()); }
    Index num_elements() const { return static_cast<Index>(elements.size()); }

    std::array<Vec3, 4> element_coords(Index e) const {
        const auto& el = elements[e];
        return {nodes[el[0]], nodes[el[1]], nodes[el[2]], nodes[el[3]]};
    }

    Index find_edge(Index a, Index b) const {
        std::array<Index, 2> k{std::min(a, b), std::max(a, b)};
        auto it = std::lower_bound(edges.begin(), edges.end(), k);
        if (it == edges.end() || *it != k) return -1;
        return it - edges.begin();
    }

    Index find_face(std::array<Index, 3> k) const {
        std::sort(k.begin(), k.end());
        auto it = std::lower_bound(faces.begin(), faces.end(), k);
        if (it == faces.end() || *it != k) return -1;
        return it - faces.begin();
    }
};

// Local tet edge k joins these local vertices.
inline constexpr std::array<std::array<int, 2>, 6> kTetEdges{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
inline constexpr std::array<std::array<int, 3>, 4> kTetFaces{{{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};

inline BackgroundMesh build_background_mesh(int n, const Box& box) {
    if (n < 1) throw InvalidArgument("build_background_mesh: n must be positive");
    BackgroundMesh m;
    m.n = n;
    m.box = box;
    Vec3 d = (box.hi - box.lo) / n;
    m.h = d.maxCoeff();
    const Index np = n + 1;
    auto id = [np](Index i, Index j, Index k) { return i + np * (j + np * k); };
    m.nodes.resize(np * np * np);
    for (Index k = 0; k < np; ++k)
        for (Index j = 0; j < np; ++j)
            for (Index i = 0; i < np; ++i)
                m.nodes[id(i, j, k)] = box.lo + Vec3(i * d[0], j * d[1], k * d[2]);
    // exact upper faces
    for (Index a = 0; a < np; ++a)
        for (Index b = 0; b < np; ++b) {
            m.nodes[id(n, a, b)][0] = box.hi[0];
            m.nodes[id(a, n, b)][1] = box.hi[1];
            m.nodes[id(a, b, n)][2] = box.hi[2];
        }

    static constexpr std::array<std::array<int, 3>, 6> perms{
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    m.elements.reserve(6 * n * n * n);
    for (Index k = 0; k < n; ++k)
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < n; ++i)
                for (const auto& p : perms) {
                    std::array<Index, 3> c{i, j, k};
                    std::array<Index, 4> el;
                    el[0] = id(c[0], c[1], c[2]);
                    for (int s = 0; s < 3; ++s) {
                        ++c[p[s]];
                        el[s + 1] = id(c[0], c[1], c[2]);
                    }
                    const auto& X = m.nodes;
                    if (tet_signed_volume(X[el[0]], X[el[1]], X[el[2]], X[el[3]]) < 0) std::swap(el[2], el[3]);
                    m.elements.push_back(el);
                }

    const Index ne = m.num_elements();
    m.edges.reserve(6 * ne);
    m.faces.reserve(4 * ne);
    for (const auto& el : m.elements) {
        for (const auto& le : kTetEdges) m.edges.push_back({std::min(el[le[0]], el[le[1]]), std::max(el[le[0]], el[le[1]])});
        for (const auto& lf : kTetFaces) {
            std::array<Index, 3> f{el[lf[0]], el[lf[1]], el[lf[2]]};
            std::sort(f.begin(), f.end());
            m.faces.push_back(f);
        }
    }
    std::sort(m.edges.begin(), m.edges.end());
    m.edges.erase(std::unique(m.edges.begin(), m.edges.end()), m.edges.end());
    std::sort(m.faces.begin(), m.faces.end());
    m.faces.erase(std::unique(m.faces.begin(), m.faces.end()), m.faces.end());

    m.elem2edge.resize(ne);
    m.elem2face.resize(ne);
    m.face2elem.assign(m.faces.size(), {-1, -1});
    for (Index e = 0; e < ne; ++e) {
        const auto& el = m.elements[e];
        for (int k = 0; k < 6; ++k) m.elem2edge[e][k] = m.find_edge(el[kTetEdges[k][0]], el[kTetEdges[k][1]]);
        for (int k = 0; k < 4; ++k) {
            const auto& lf = kTetFaces[k];
            Index f = m.find_face({el[lf[0]], el[lf[1]], el[lf[2]]});
            m.elem2face[e][k] = f;
            auto& fe = m.face2elem[f];
            if (fe[0] < 0)
                fe[0] = e;
            else if (fe[1] < 0)
                fe[1] = e;
            else
                throw TopologyError("face with more than two elements");
        }
    }
    return m;
}

// Level set: Omega^- = {phi < 0}, Omega^+ = {phi > 0}.
struct LevelSet {
    std::string name;
    std::function<double(const Vec3&)> phi;
    std::function<Vec3(const Vec3&)> gradient;  // optional
    double snap_tol = 1e-8;
};

namespace levelset {

inline LevelSet plane(const Vec3& normal, double offset) {
    Vec3 nn = normal.normalized();
    LevelSet ls;
    ls.name = "plane";
    ls.phi = [nn, offset](const Vec3& x) { return nn.dot(x) - offset; };
    ls.gradient = [nn](const Vec3&) { return nn; };
    return ls;
}

inline LevelSet sphere(const Vec3& center, double r) {
    LevelSet ls;
    ls.name = "sphere";
    ls.phi = [center, r](const Vec3& x) { return (x - center).squaredNorm() - r * r; };
    ls.gradient = [center](const Vec3& x) { return Vec3(2.0 * (x - center)); };
    return ls;
}

// Two interlocked tori; phi = min(phi1, phi2).
template <class T>
T tori_phi1(const T& x, const T& y, const T& z) {
    using std::sqrt;
    T rho = sqrt((x + 0.3) * (x + 0.3) + y * y);
    return (rho - 0.2) * (rho - 0.2) + z * z - (M_PI / 5) * (M_PI / 5);
}

template <class T>
T tori_phi2(const T& x, const T& y, const T& z) {
    using std::sqrt;
    T rho = sqrt((x - 0.3) * (x - 0.3) + z * z);
    return (rho - 0.2) * (rho - 0.2) + y * y - (M_PI / 5) * (M_PI / 5);
}

inline LevelSet tori() {
    LevelSet ls;
    ls.name = "tori";
    ls.phi = [](const Vec3& p) { return std::min(tori_phi1(p[0], p[1], p[2]), tori_phi2(p[0], p[1], p[2])); };
    return ls;
}

} // namespace levelset

} // namespace ivem
