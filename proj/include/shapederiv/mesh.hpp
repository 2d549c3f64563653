#pragma once

#include "shapederiv/flow.hpp"

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace shapederiv::mesh {

using Vec2 = Eigen::Vector2d;

enum class BoundaryTag { Dirichlet, Neumann };

/// Boundary edge a→b oriented so the domain lies to its left.
struct BoundaryEdge {
    int a = 0;
    int b = 0;
    BoundaryTag tag = BoundaryTag::Dirichlet;
};

/// Conforming 2D triangulation with counterclockwise triangles and a tagged
/// boundary partitioned into Dirichlet and Neumann parts.
struct TriMesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;

    [[nodiscard]] double signed_area(std::size_t t) const;
    [[nodiscard]] double total_area() const;
    /// Unit outward normal of boundary edge e.
    [[nodiscard]] Vec2 outward_normal(std::size_t e) const;
    [[nodiscard]] std::size_t count_edges(BoundaryTag tag) const;

    /// Checks index ranges, positive orientation, conformity, and that the
    /// tagged edges cover the topological boundary exactly. Boundary edges are
    /// re-oriented to keep the domain on their left. Throws ParseError or
    /// InvertedElement.
    void validate();
};

/// Sides of the unit square that carry the Neumann tag.
struct NeumannSides {
    bool left = false;
    bool right = false;
    bool top = false;
    bool bottom = false;

    static NeumannSides parse(const std::vector<std::string>& names);
    [[nodiscard]] std::vector<std::string> names() const;
};

/// (n+1)² vertices on (0,1)², each cell split along its (0,0)-(1,1) diagonal.
TriMesh unit_square_mesh(int n, NeumannSides neumann = {});

/// Polygonal unit disk: ring k carries 6k vertices on radius k/rings. All
/// boundary edges Dirichlet.
TriMesh disk_mesh(int rings);

/// Moves every vertex by the flow φ_s; connectivity and tags are kept.
/// Throws InvertedElement if a triangle loses positive orientation.
TriMesh transport_mesh(const TriMesh& mesh, const flow::VelocityField& field, double s,
                       int steps = flow::kDefaultSteps);

/// Text format `tri-mesh v1` with V/T/E sections; coordinates use 17
/// significant digits so reading back is bit-exact.
void write_mesh(std::ostream& out, const TriMesh& mesh);
TriMesh read_mesh(std::istream& in);
void save_mesh(const std::string& path, const TriMesh& mesh);
TriMesh load_mesh(const std::string& path);

}  // namespace shapederiv::mesh
