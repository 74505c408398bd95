#pragma once

#include "topology.hpp"

#include <fstream>
#include <iomanip>

namespace ivem {

// Legacy ASCII VTK: background tets with their side (+1, -1, or 0 when cut).
inline void write_vtk_mesh(const std::string& path, const BackgroundMesh& m, const CutMesh& cm) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path);
    os << std::setprecision(12);
    os << "# vtk DataFile Version 3.0\nivem background mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << m.num_nodes() << " double\n";
    for (const auto& x : m.nodes) os << x[0] << " " << x[1] << " " << x[2] << "\n";
    os << "CELLS " << m.num_elements() << " " << 5 * m.num_elements() << "\n";
    for (const auto& el : m.elements) os << "4 " << el[0] << " " << el[1] << " " << el[2] << " " << el[3] << "\n";
    os << "CELL_TYPES " << m.num_elements() << "\n";
    for (Index e = 0; e < m.num_elements(); ++e) os << "10\n";
    os << "CELL_DATA " << m.num_elements() << "\nSCALARS side int 1\nLOOKUP_TABLE default\n";
    for (Index e = 0; e < m.num_elements(); ++e) os << cm.elem_sign[e] << "\n";
    os << "POINT_DATA " << m.num_nodes() << "\nSCALARS phi double 1\nLOOKUP_TABLE default\n";
    for (double p : cm.phi) os << p << "\n";
}

// Boundary triangulations of the interface elements, one cell per triangle, plus the interface patches.
inline void write_vtk_boundary(const std::string& path, const CutMesh& cm) {
    std::vector<std::array<Vec3, 3>> tris;
    std::vector<int> side, kind;
    for (const auto& c : cm.cuts) {
        for (int t = 0; t < c.num_tris(); ++t) {
            tris.push_back(c.tri_coords(t));
            side.push_back(c.region_sign[c.tris[t].region]);
            kind.push_back(0);
        }
        for (const auto& p : c.interfaces)
            for (const auto& t : p.tris) {
                tris.push_back(t);
                side.push_back(0);
                kind.push_back(1);
            }
    }
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path);
    os << std::setprecision(12);
    const size_t n = tris.size();
    os << "# vtk DataFile Version 3.0\nivem boundary triangulation\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << 3 * n << " double\n";
    for (const auto& t : tris)
        for (const auto& x : t) os << x[0] << " " << x[1] << " " << x[2] << "\n";
    os << "CELLS " << n << " " << 4 * n << "\n";
    for (size_t i = 0; i < n; ++i) os << "3 " << 3 * i << " " << 3 * i + 1 << " " << 3 * i + 2 << "\n";
    os << "CELL_TYPES " << n << "\n";
    for (size_t i = 0; i < n; ++i) os << "5\n";
    os << "CELL_DATA " << n << "\nSCALARS side int 1\nLOOKUP_TABLE default\n";
    for (int s : side) os << s << "\n";
    os << "SCALARS interface int 1\nLOOKUP_TABLE default\n";
    for (int k : kind) os << k << "\n";
}

}  // namespace ivem
