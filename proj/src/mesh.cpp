#include "shapederiv/mesh.hpp"

#include "shapederiv/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <utility>

namespace shapederiv::mesh {

namespace {

std::pair<int, int> edge_key(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

double cross(const Vec2& u, const Vec2& v) { return u(0) * v(1) - u(1) * v(0); }

}  // namespace

double TriMesh::signed_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Vec2& p0 = vertices[static_cast<std::size_t>(tri[0])];
    const Vec2& p1 = vertices[static_cast<std::size_t>(tri[1])];
    const Vec2& p2 = vertices[static_cast<std::size_t>(tri[2])];
    return 0.5 * cross(p1 - p0, p2 - p0);
}

double TriMesh::total_area() const {
    double area = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) area += signed_area(t);
    return area;
}

Vec2 TriMesh::outward_normal(std::size_t e) const {
    const auto& edge = boundary_edges[e];
    const Vec2 d = vertices[static_cast<std::size_t>(edge.b)] - vertices[static_cast<std::size_t>(edge.a)];
    return Vec2(d(1), -d(0)).normalized();
}

std::size_t TriMesh::count_edges(BoundaryTag tag) const {
    std::size_t count = 0;
    for (const auto& e : boundary_edges) count += e.tag == tag ? 1 : 0;
    return count;
}

void TriMesh::validate() {
    const int nv = static_cast<int>(vertices.size());
    // Directed edge a→b for every triangle side, counterclockwise.
    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> sides;
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const auto& tri = triangles[t];
        for (int v : tri) {
            if (v < 0 || v >= nv) throw Error(ErrorKind::ParseError, fmt::format("triangle {} has vertex index out of range", t));
        }
        if (!(signed_area(t) > 0.0)) {
            throw Error(ErrorKind::InvertedElement, fmt::format("triangle {} has non-positive signed area", t));
        }
        for (int k = 0; k < 3; ++k) {
            const int a = tri[static_cast<std::size_t>(k)];
            const int b = tri[static_cast<std::size_t>((k + 1) % 3)];
            sides[edge_key(a, b)].emplace_back(a, b);
        }
    }
    std::map<std::pair<int, int>, std::pair<int, int>> boundary;
    for (const auto& [key, uses] : sides) {
        if (uses.size() > 2) throw Error(ErrorKind::ParseError, "non-manifold edge shared by more than two triangles");
        if (uses.size() == 2 && uses[0] == uses[1]) {
            throw Error(ErrorKind::ParseError, "inconsistently oriented neighbouring triangles");
        }
        if (uses.size() == 1) boundary.emplace(key, uses[0]);
    }
    if (boundary.size() != boundary_edges.size()) {
        throw Error(ErrorKind::ParseError, fmt::format("tagged edges ({}) do not match the topological boundary ({})",
                                                       boundary_edges.size(), boundary.size()));
    }
    std::map<std::pair<int, int>, int> seen;
    for (auto& edge : boundary_edges) {
        const auto key = edge_key(edge.a, edge.b);
        const auto it = boundary.find(key);
        if (it == boundary.end()) throw Error(ErrorKind::ParseError, "tagged edge is not on the boundary");
        if (++seen[key] > 1) throw Error(ErrorKind::ParseError, "boundary edge tagged twice");
        edge.a = it->second.first;
        edge.b = it->second.second;
    }
}

NeumannSides NeumannSides::parse(const std::vector<std::string>& names) {
    NeumannSides sides;
    for (const auto& name : names) {
        if (name == "left") sides.left = true;
        else if (name == "right") sides.right = true;
        else if (name == "top") sides.top = true;
        else if (name == "bottom") sides.bottom = true;
        else throw Error(ErrorKind::ConfigError, "unknown square side '" + name + "'");
    }
    return sides;
}

std::vector<std::string> NeumannSides::names() const {
    std::vector<std::string> out;
    if (left) out.emplace_back("left");
    if (right) out.emplace_back("right");
    if (top) out.emplace_back("top");
    if (bottom) out.emplace_back("bottom");
    return out;
}

TriMesh unit_square_mesh(int n, NeumannSides neumann) {
    if (n < 1) throw Error(ErrorKind::ConfigError, "unit_square_mesh needs n >= 1");
    TriMesh mesh;
    const auto id = [n](int i, int j) { return j * (n + 1) + i; };
    const double h = 1.0 / static_cast<double>(n);
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            // i == n hits 1.0 exactly instead of n * (1/n)
            mesh.vertices.emplace_back(i == n ? 1.0 : i * h, j == n ? 1.0 : j * h);
        }
    }
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    const auto tag = [](bool is_neumann) { return is_neumann ? BoundaryTag::Neumann : BoundaryTag::Dirichlet; };
    for (int i = 0; i < n; ++i) mesh.boundary_edges.push_back({id(i, 0), id(i + 1, 0), tag(neumann.bottom)});
    for (int j = 0; j < n; ++j) mesh.boundary_edges.push_back({id(n, j), id(n, j + 1), tag(neumann.right)});
    for (int i = n; i > 0; --i) mesh.boundary_edges.push_back({id(i, n), id(i - 1, n), tag(neumann.top)});
    for (int j = n; j > 0; --j) mesh.boundary_edges.push_back({id(0, j), id(0, j - 1), tag(neumann.left)});
    return mesh;
}

TriMesh disk_mesh(int rings) {
    if (rings < 1) throw Error(ErrorKind::ConfigError, "disk_mesh needs rings >= 1");
    TriMesh mesh;
    mesh.vertices.emplace_back(0.0, 0.0);
    std::vector<int> ring_start{0};
    for (int k = 1; k <= rings; ++k) {
        ring_start.push_back(static_cast<int>(mesh.vertices.size()));
        const double r = static_cast<double>(k) / rings;
        const int count = 6 * k;
        for (int j = 0; j < count; ++j) {
            const double angle = 2.0 * std::numbers::pi * j / count;
            mesh.vertices.emplace_back(r * std::cos(angle), r * std::sin(angle));
        }
    }
    for (int k = 1; k <= rings; ++k) {
        const int outer_count = 6 * k;
        const int inner_count = k == 1 ? 1 : 6 * (k - 1);
        const auto outer = [&](int j) { return ring_start[static_cast<std::size_t>(k)] + j % outer_count; };
        const auto inner = [&](int i) { return ring_start[static_cast<std::size_t>(k - 1)] + i % inner_count; };
        if (k == 1) {
            for (int j = 0; j < outer_count; ++j) mesh.triangles.push_back({0, outer(j), outer(j + 1)});
            continue;
        }
        // Merge the two rings by angle; next angles are (i+1)/inner and (j+1)/outer turns.
        int i = 0;
        int j = 0;
        while (i < inner_count || j < outer_count) {
            const bool advance_inner =
                j == outer_count || (i < inner_count && (i + 1) * outer_count < (j + 1) * inner_count);
            if (advance_inner) {
                mesh.triangles.push_back({inner(i), outer(j), inner(i + 1)});
                ++i;
            } else {
                mesh.triangles.push_back({inner(i), outer(j), outer(j + 1)});
                ++j;
            }
        }
    }
    const int last = ring_start.back();
    const int count = 6 * rings;
    for (int j = 0; j < count; ++j) {
        mesh.boundary_edges.push_back({last + j, last + (j + 1) % count, BoundaryTag::Dirichlet});
    }
    return mesh;
}

TriMesh transport_mesh(const TriMesh& mesh, const flow::VelocityField& field, double s, int steps) {
    TriMesh out = mesh;
    if (field.is_zero() || s == 0.0) return out;
    for (auto& v : out.vertices) v = flow::integrate_flow(field, v, s, steps).point;
    for (std::size_t t = 0; t < out.triangles.size(); ++t) {
        if (!(out.signed_area(t) > 0.0)) {
            throw Error(ErrorKind::InvertedElement,
                        fmt::format("triangle {} inverted by the flow at s = {:.6g}", t, s));
        }
    }
    return out;
}

void write_mesh(std::ostream& out, const TriMesh& mesh) {
    out << "tri-mesh v1\n";
    out << "V " << mesh.vertices.size() << '\n';
    for (const auto& v : mesh.vertices) out << fmt::format("{:.17g} {:.17g}\n", v(0), v(1));
    out << "T " << mesh.triangles.size() << '\n';
    for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    out << "E " << mesh.boundary_edges.size() << '\n';
    for (const auto& e : mesh.boundary_edges) {
        out << e.a << ' ' << e.b << ' ' << (e.tag == BoundaryTag::Dirichlet ? 'D' : 'N') << '\n';
    }
}

TriMesh read_mesh(std::istream& in) {
    const auto fail = [](const std::string& what) { return Error(ErrorKind::ParseError, "mesh file: " + what); };
    std::string magic;
    std::string version;
    if (!(in >> magic >> version) || magic != "tri-mesh" || version != "v1") throw fail("missing 'tri-mesh v1' header");
    const auto section = [&](char expected) {
        std::string label;
        long long count = -1;
        if (!(in >> label >> count) || label.size() != 1 || label[0] != expected || count < 0) {
            throw fail(std::string("expected section '") + expected + " <count>'");
        }
        return static_cast<std::size_t>(count);
    };
    TriMesh mesh;
    const std::size_t nv = section('V');
    mesh.vertices.resize(nv);
    for (auto& v : mesh.vertices) {
        if (!(in >> v(0) >> v(1))) throw fail("bad vertex line");
    }
    const std::size_t nt = section('T');
    mesh.triangles.resize(nt);
    for (auto& t : mesh.triangles) {
        if (!(in >> t[0] >> t[1] >> t[2])) throw fail("bad triangle line");
    }
    const std::size_t ne = section('E');
    mesh.boundary_edges.resize(ne);
    for (auto& e : mesh.boundary_edges) {
        std::string tag;
        if (!(in >> e.a >> e.b >> tag) || (tag != "D" && tag != "N")) throw fail("bad boundary edge line");
        e.tag = tag == "D" ? BoundaryTag::Dirichlet : BoundaryTag::Neumann;
    }
    std::string trailing;
    if (in >> trailing) throw fail("unexpected trailing content");
    mesh.validate();
    return mesh;
}

void save_mesh(const std::string& path, const TriMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::ConfigError, "cannot write mesh file " + path);
    write_mesh(out, mesh);
}

TriMesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot open mesh file " + path);
    return read_mesh(in);
}

}  // namespace shapederiv::mesh
