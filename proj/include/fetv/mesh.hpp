#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fetv {

class Mesh;

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Affine map x = B * xhat + b from the reference triangle (0,0),(1,0),(0,1).
struct CellGeometry {
    Mat2 B;
    Vec2 b;
    double det = 0.0;
    Mat2 inv_transpose;
    double area = 0.0;

    Vec2 to_reference(const Vec2& x) const;
    Vec2 to_physical(const Vec2& xhat) const { return B * xhat + b; }
};

// Local facet f of a cell is opposite local vertex f and joins
// local vertices (f+1)%3 and (f+2)%3.
struct InteriorEdge {
    std::array<int, 2> vertices;  // vertices[0] < vertices[1]
    int cell_plus = -1;           // lower cell index
    int cell_minus = -1;
    std::array<int, 2> facet{};        // local facet in plus, minus
    std::array<bool, 2> aligned{};     // local (f+1)%3 vertex == vertices[0]
    Vec2 normal;                       // unit, from plus into minus
    double length = 0.0;

    Vec2 point(const Mesh& mesh, double t) const;
};

struct BoundaryEdge {
    std::array<int, 2> vertices;
    int cell = -1;
    int facet = -1;
};

class Mesh {
public:
    // Validates, re-winds negatively oriented cells and derives edges.
    Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> cells);

    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_cells() const { return static_cast<int>(cells_.size()); }
    int num_interior_edges() const { return static_cast<int>(interior_.size()); }
    int num_boundary_edges() const { return static_cast<int>(boundary_.size()); }

    const std::vector<Vec2>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& cells() const { return cells_; }
    const std::vector<InteriorEdge>& interior_edges() const { return interior_; }
    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_; }

    const Vec2& vertex(int v) const { return vertices_[v]; }
    const std::array<int, 3>& cell(int t) const { return cells_[t]; }
    const CellGeometry& geometry(int t) const { return geometry_[t]; }
    const InteriorEdge& interior_edge(int e) const { return interior_[e]; }

    // Interior edge index per local facet, -1 on the boundary.
    const std::array<int, 3>& cell_edges(int t) const { return cell_edges_[t]; }

    Vec2 centroid(int t) const;
    double total_area() const;
    void bounding_box(Vec2& lo, Vec2& hi) const;

private:
    std::vector<Vec2> vertices_;
    std::vector<std::array<int, 3>> cells_;
    std::vector<CellGeometry> geometry_;
    std::vector<InteriorEdge> interior_;
    std::vector<BoundaryEdge> boundary_;
    std::vector<std::array<int, 3>> cell_edges_;
};

// Square (i, j) of the grid owns cells 4*(j*nx + i) + q, q = bottom, right, top, left.
// Grid vertices come first (row-major), square centers after them.
Mesh build_crossed_mesh(int nx, int ny, double width, double height);

// Unit square split along the anti-diagonal, rotated about (1/2, 1/2).
Mesh build_diagonal_square(double angle);

Mesh load_mesh(const std::string& path);
void save_mesh(const Mesh& mesh, const std::string& path);
Mesh parse_mesh(const std::string& text);
std::string format_mesh(const Mesh& mesh);

// Barycentric coordinates of x with respect to cell t.
std::array<double, 3> barycentric(const Mesh& mesh, int t, const Vec2& x);

// Lowest-index cell whose barycentric coordinates are all >= -1e-12.
std::optional<int> locate_point(const Mesh& mesh, const Vec2& x);

// Bucket grid over cell bounding boxes; same answers as locate_point.
class PointLocator {
public:
    explicit PointLocator(const Mesh& mesh);
    std::optional<int> locate(const Vec2& x) const;

private:
    const Mesh* mesh_;
    Vec2 lo_, hi_;
    int nbx_ = 1, nby_ = 1;
    std::vector<std::vector<int>> buckets_;
};

}  // namespace fetv
