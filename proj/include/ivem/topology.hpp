#pragma once

#include "cut.hpp"

namespace ivem {

// Global cell complex of the cut mesh: background vertices plus cut points,
// sub-edges and face-internal edges, and the triangles of every boundary triangulation.
struct Topology {
    const BackgroundMesh* mesh = nullptr;
    const CutMesh* cut = nullptr;

    std::vector<Vec3> nodes;
    std::vector<std::array<Index, 2>> edges;  // ascending node ids
    std::vector<std::array<Index, 3>> faces;  // ascending node ids

    // Per element gather lists. Non-interface elements: tet vertices in element order,
    // edges in kTetEdges order, faces in kTetFaces order. Interface elements follow CutElement.
    std::vector<std::vector<Index>> elem_nodes;
    std::vector<std::vector<Index>> elem_edges;
    std::vector<std::vector<Index>> elem_faces;
    std::vector<std::vector<int>> elem_face_sign;  // +1 if the global face normal is outward

    // Element-local face rows.
    std::vector<Index> face2elem;
    std::vector<std::array<Index, 3>> face_nodes;  // outward counter-clockwise
    std::vector<std::array<Index, 3>> face_edges;  // edge k joins face_nodes k and k+1
    std::vector<Index> face_row_face;

    std::vector<char> node_boundary, edge_boundary, face_boundary;
    // Side of each node and edge: +-1, or 0 for entities on the discrete interface.
    std::vector<int> node_sign, edge_sign;
    std::vector<Index> interface_elements;

    Index num_nodes() const { return static_cast<Index>(nodes.size()); }
    Index num_edges() const { return static_cast<Index>(edges.size()); }
    Index num_faces() const { return static_cast<Index>(faces.size()); }
    Index num_elements() const { return mesh->num_elements(); }

    bool is_interface(Index e) const { return cut->elem_cut[e] >= 0; }
    const CutElement& cut_element(Index e) const { return cut->cuts[cut->elem_cut[e]]; }
    int elem_sign(Index e) const { return cut->elem_sign[e]; }

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

    // Interface DoFs: entities touching an interface element.
    Index num_interface_nodes() const {
        std::vector<char> f(num_nodes(), 0);
        for (Index e : interface_elements)
            for (Index v : elem_nodes[e]) f[v] = 1;
        return std::count(f.begin(), f.end(), 1);
    }
    Index num_interface_edges() const {
        std::vector<char> f(num_edges(), 0);
        for (Index e : interface_elements)
            for (Index v : elem_edges[e]) f[v] = 1;
        return std::count(f.begin(), f.end(), 1);
    }
};

inline Topology build_topology(const BackgroundMesh& mesh, const CutMesh& cm) {
    Topology T;
    T.mesh = &mesh;
    T.cut = &cm;
    T.nodes = mesh.nodes;
    for (const auto& p : cm.points) T.nodes.push_back(p.x);

    const Index NE = mesh.num_elements();
    // element-local faces as global node triples
    std::vector<std::vector<std::array<Index, 3>>> rows(NE);
    for (Index e = 0; e < NE; ++e) {
        if (cm.elem_cut[e] < 0) {
            const auto& el = mesh.elements[e];
            auto X = mesh.element_coords(e);
            for (int f = 0; f < 4; ++f) {
                std::array<int, 3> t = kTetFaces[f];
                Vec3 n = (X[t[1]] - X[t[0]]).cross(X[t[2]] - X[t[0]]);
                if (n.dot(X[f] - X[t[0]]) > 0) std::swap(t[1], t[2]);
                rows[e].push_back({el[t[0]], el[t[1]], el[t[2]]});
            }
        } else {
            const auto& c = cm.cuts[cm.elem_cut[e]];
            for (const auto& t : c.tris) rows[e].push_back({c.node_keys[t.nodes[0]], c.node_keys[t.nodes[1]], c.node_keys[t.nodes[2]]});
        }
    }

    for (const auto& r : rows)
        for (const auto& t : r) {
            for (int k = 0; k < 3; ++k) T.edges.push_back({std::min(t[k], t[(k + 1) % 3]), std::max(t[k], t[(k + 1) % 3])});
            std::array<Index, 3> s = t;
            std::sort(s.begin(), s.end());
            T.faces.push_back(s);
        }
    std::sort(T.edges.begin(), T.edges.end());
    T.edges.erase(std::unique(T.edges.begin(), T.edges.end()), T.edges.end());
    std::sort(T.faces.begin(), T.faces.end());
    T.faces.erase(std::unique(T.faces.begin(), T.faces.end()), T.faces.end());

    std::vector<int> face_count(T.faces.size(), 0);
    T.elem_nodes.resize(NE);
    T.elem_edges.resize(NE);
    T.elem_faces.resize(NE);
    T.elem_face_sign.resize(NE);
    for (Index e = 0; e < NE; ++e) {
        if (cm.elem_cut[e] < 0) {
            const auto& el = mesh.elements[e];
            T.elem_nodes[e].assign(el.begin(), el.end());
            for (const auto& le : kTetEdges) T.elem_edges[e].push_back(T.find_edge(el[le[0]], el[le[1]]));
        } else {
            const auto& c = cm.cuts[cm.elem_cut[e]];
            T.elem_nodes[e] = c.node_keys;
            for (const auto& le : c.edges) T.elem_edges[e].push_back(T.find_edge(c.node_keys[le[0]], c.node_keys[le[1]]));
            T.interface_elements.push_back(e);
        }
        for (const auto& t : rows[e]) {
            Index f = T.find_face(t);
            ++face_count[f];
            int inv = (t[0] > t[1]) + (t[0] > t[2]) + (t[1] > t[2]);
            int sign = inv % 2 == 0 ? 1 : -1;
            T.elem_faces[e].push_back(f);
            T.elem_face_sign[e].push_back(sign);
            T.face2elem.push_back(e);
            T.face_nodes.push_back(t);
            std::array<Index, 3> fe;
            for (int k = 0; k < 3; ++k) fe[k] = T.find_edge(t[k], t[(k + 1) % 3]);
            T.face_edges.push_back(fe);
            T.face_row_face.push_back(f);
        }
    }

    // Boundary flags: entity lies on one face of the box.
    const double tol = 1e-10 * mesh.h;
    auto side_mask = [&](const Vec3& x) {
        int m = 0;
        for (int d = 0; d < 3; ++d) {
            if (std::abs(x[d] - mesh.box.lo[d]) <= tol) m |= 1 << (2 * d);
            if (std::abs(x[d] - mesh.box.hi[d]) <= tol) m |= 1 << (2 * d + 1);
        }
        return m;
    };
    std::vector<int> nmask(T.nodes.size());
    T.node_boundary.assign(T.nodes.size(), 0);
    for (size_t i = 0; i < T.nodes.size(); ++i) {
        nmask[i] = side_mask(T.nodes[i]);
        T.node_boundary[i] = nmask[i] != 0;
    }
    T.edge_boundary.assign(T.edges.size(), 0);
    for (size_t i = 0; i < T.edges.size(); ++i) T.edge_boundary[i] = (nmask[T.edges[i][0]] & nmask[T.edges[i][1]]) != 0;
    T.face_boundary.assign(T.faces.size(), 0);
    for (size_t i = 0; i < T.faces.size(); ++i) {
        const auto& f = T.faces[i];
        T.face_boundary[i] = (nmask[f[0]] & nmask[f[1]] & nmask[f[2]]) != 0;
    }

    T.node_sign.assign(T.nodes.size(), 0);
    for (Index v = 0; v < mesh.num_nodes(); ++v) T.node_sign[v] = cm.phi[v] > 0 ? 1 : -1;
    T.edge_sign.resize(T.edges.size());
    for (size_t i = 0; i < T.edges.size(); ++i) {
        int a = T.node_sign[T.edges[i][0]], b = T.node_sign[T.edges[i][1]];
        T.edge_sign[i] = a != 0 ? a : b;
    }

    // Conformity: every interior face has exactly two mothers, boundary faces one.
    for (size_t f = 0; f < T.faces.size(); ++f) {
        int want = T.face_boundary[f] ? 1 : 2;
        if (face_count[f] != want) throw ConformityError("shared-face triangulations do not match");
    }
    return T;
}

} // namespace ivem
