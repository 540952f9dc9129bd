#include "fetv/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "fetv/error.hpp"

namespace fetv {

namespace {

constexpr double kBaryTol = 1e-12;

// Cells incident to one undirected vertex pair.
struct EdgeUse {
    int cell;
    int facet;
};

}  // namespace

Vec2 CellGeometry::to_reference(const Vec2& x) const {
    // B^{-1} = inv_transpose^T
    return inv_transpose.transpose() * (x - b);
}

Vec2 InteriorEdge::point(const Mesh& mesh, double t) const {
    const Vec2& a = mesh.vertex(vertices[0]);
    const Vec2& c = mesh.vertex(vertices[1]);
    return a + t * (c - a);
}

Mesh::Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> cells)
    : vertices_(std::move(vertices)), cells_(std::move(cells)) {
    const int nv = num_vertices();
    const int nt = num_cells();
    if (nt == 0) throw TopologyError("mesh has no cells", 0);

    Vec2 lo, hi;
    lo.setConstant(std::numeric_limits<double>::infinity());
    hi = -lo;
    for (const auto& v : vertices_) {
        if (!std::isfinite(v.x()) || !std::isfinite(v.y()))
            throw TopologyError("non-finite vertex coordinate", 0);
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    const double scale = std::max((hi - lo).maxCoeff(), 1e-300);

    geometry_.resize(nt);
    for (int t = 0; t < nt; ++t) {
        auto& c = cells_[t];
        for (int k = 0; k < 3; ++k)
            if (c[k] < 0 || c[k] >= nv) throw TopologyError("vertex index out of range", t);
        if (c[0] == c[1] || c[1] == c[2] || c[0] == c[2])
            throw TopologyError("degenerate cell (repeated vertex)", t);
        Mat2 B;
        B.col(0) = vertices_[c[1]] - vertices_[c[0]];
        B.col(1) = vertices_[c[2]] - vertices_[c[0]];
        double det = B.determinant();
        if (std::abs(det) <= 1e-14 * scale * scale) throw TopologyError("degenerate cell (zero area)", t);
        if (det < 0) {
            std::swap(c[1], c[2]);
            B.col(0).swap(B.col(1));
            det = -det;
        }
        CellGeometry& g = geometry_[t];
        g.B = B;
        g.b = vertices_[c[0]];
        g.det = det;
        g.inv_transpose = B.inverse().transpose();
        g.area = 0.5 * det;
    }

    std::map<std::pair<int, int>, std::vector<EdgeUse>> uses;
    std::vector<std::pair<int, int>> order;
    for (int t = 0; t < nt; ++t) {
        for (int f = 0; f < 3; ++f) {
            int a = cells_[t][(f + 1) % 3], b = cells_[t][(f + 2) % 3];
            auto key = std::minmax(a, b);
            auto& list = uses[key];
            if (list.empty()) order.push_back(key);
            list.push_back({t, f});
            if (list.size() > 2) throw TopologyError("edge shared by more than two cells", t);
        }
    }

    cell_edges_.assign(nt, {-1, -1, -1});
    for (const auto& key : order) {
        const auto& list = uses[key];
        if (list.size() == 1) {
            boundary_.push_back({{key.first, key.second}, list[0].cell, list[0].facet});
            continue;
        }
        EdgeUse p = list[0], m = list[1];
        if (m.cell < p.cell) std::swap(p, m);
        if (p.cell == m.cell) throw TopologyError("cell uses an edge twice", p.cell);
        // Consistently oriented neighbours traverse the shared edge in opposite directions.
        int pa = cells_[p.cell][(p.facet + 1) % 3];
        int ma = cells_[m.cell][(m.facet + 1) % 3];
        if (pa == ma) throw TopologyError("overlapping cells across an edge", m.cell);

        InteriorEdge e;
        e.vertices = {key.first, key.second};
        e.cell_plus = p.cell;
        e.cell_minus = m.cell;
        e.facet = {p.facet, m.facet};
        e.aligned = {pa == key.first, ma == key.first};
        Vec2 tang = vertices_[key.second] - vertices_[key.first];
        e.length = tang.norm();
        Vec2 n(tang.y(), -tang.x());
        n /= e.length;
        const Vec2& opp = vertices_[cells_[p.cell][p.facet]];
        if (n.dot(opp - vertices_[key.first]) > 0) n = -n;
        e.normal = n;
        const int idx = static_cast<int>(interior_.size());
        cell_edges_[p.cell][p.facet] = idx;
        cell_edges_[m.cell][m.facet] = idx;
        interior_.push_back(e);
    }

    // Hanging nodes: a vertex in the relative interior of a boundary edge.
    if (!boundary_.empty()) {
        const int nb = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(nv))));
        const Vec2 ext = (hi - lo).cwiseMax(Vec2::Constant(1e-300));
        auto bucket = [&](const Vec2& x, int& i, int& j) {
            i = std::clamp(static_cast<int>((x.x() - lo.x()) / ext.x() * nb), 0, nb - 1);
            j = std::clamp(static_cast<int>((x.y() - lo.y()) / ext.y() * nb), 0, nb - 1);
        };
        std::vector<std::vector<int>> grid(static_cast<size_t>(nb) * nb);
        for (int v = 0; v < nv; ++v) {
            int i, j;
            bucket(vertices_[v], i, j);
            grid[static_cast<size_t>(j) * nb + i].push_back(v);
        }
        for (const auto& be : boundary_) {
            const Vec2& a = vertices_[be.vertices[0]];
            const Vec2& b = vertices_[be.vertices[1]];
            const Vec2 d = b - a;
            const double len2 = d.squaredNorm();
            int i0, j0, i1, j1;
            bucket(a.cwiseMin(b), i0, j0);
            bucket(a.cwiseMax(b), i1, j1);
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i)
                    for (int v : grid[static_cast<size_t>(j) * nb + i]) {
                        if (v == be.vertices[0] || v == be.vertices[1]) continue;
                        const Vec2 w = vertices_[v] - a;
                        const double t = w.dot(d) / len2;
                        if (t <= 1e-12 || t >= 1 - 1e-12) continue;
                        const double cross = d.x() * w.y() - d.y() * w.x();
                        if (std::abs(cross) <= 1e-12 * len2) throw TopologyError("hanging node", be.cell);
                    }
        }
    }
}

Vec2 Mesh::centroid(int t) const {
    const auto& c = cells_[t];
    return (vertices_[c[0]] + vertices_[c[1]] + vertices_[c[2]]) / 3.0;
}

double Mesh::total_area() const {
    double a = 0;
    for (const auto& g : geometry_) a += g.area;
    return a;
}

void Mesh::bounding_box(Vec2& lo, Vec2& hi) const {
    lo.setConstant(std::numeric_limits<double>::infinity());
    hi = -lo;
    for (const auto& v : vertices_) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
}

Mesh build_crossed_mesh(int nx, int ny, double width, double height) {
    if (nx < 1 || ny < 1) throw ConfigError("crossed mesh needs nx, ny >= 1");
    if (!(width > 0) || !(height > 0)) throw ConfigError("crossed mesh needs positive width and height");
    const double hx = width / nx, hy = height / ny;
    std::vector<Vec2> v;
    v.reserve(static_cast<size_t>(nx + 1) * (ny + 1) + static_cast<size_t>(nx) * ny);
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) v.emplace_back(i * hx, j * hy);
    const int base = (nx + 1) * (ny + 1);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) v.emplace_back((i + 0.5) * hx, (j + 0.5) * hy);

    std::vector<std::array<int, 3>> cells;
    cells.reserve(static_cast<size_t>(4) * nx * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int v00 = j * (nx + 1) + i, v10 = v00 + 1;
            const int v01 = v00 + nx + 1, v11 = v01 + 1;
            const int c = base + j * nx + i;
            cells.push_back({v00, v10, c});
            cells.push_back({v10, v11, c});
            cells.push_back({v11, v01, c});
            cells.push_back({v01, v00, c});
        }
    return Mesh(std::move(v), std::move(cells));
}

Mesh build_diagonal_square(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    std::vector<Vec2> v;
    for (auto [x, y] : {std::pair{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}}) {
        const double dx = x - 0.5, dy = y - 0.5;
        v.emplace_back(0.5 + c * dx - s * dy, 0.5 + s * dx + c * dy);
    }
    return Mesh(std::move(v), {{0, 1, 3}, {1, 2, 3}});
}

// ---- text format -------------------------------------------------------

namespace {

struct LineReader {
    std::istringstream in;
    int line = 0;

    explicit LineReader(const std::string& text) : in(text) {}

    // Next non-blank line with comments stripped.
    bool next(std::string& out) {
        std::string raw;
        while (std::getline(in, raw)) {
            ++line;
            auto hash = raw.find('#');
            if (hash != std::string::npos) raw.resize(hash);
            auto first = raw.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            auto last = raw.find_last_not_of(" \t\r");
            out = raw.substr(first, last - first + 1);
            return true;
        }
        return false;
    }
};

std::vector<std::string_view> split(std::string_view s) {
    std::vector<std::string_view> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

template <class T>
T parse_number(std::string_view tok, int line) {
    T value{};
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw ParseError("bad number '" + std::string(tok) + "'", line);
    return value;
}

int parse_count(LineReader& r, const char* keyword) {
    std::string s;
    if (!r.next(s)) throw ParseError(std::string("missing '") + keyword + "' header", r.line + 1);
    auto toks = split(s);
    if (toks.size() != 2 || toks[0] != keyword)
        throw ParseError(std::string("expected '") + keyword + " <count>'", r.line);
    long n = parse_number<long>(toks[1], r.line);
    if (n < 0 || n > std::numeric_limits<int>::max()) throw ParseError("bad count", r.line);
    return static_cast<int>(n);
}

void append_double(std::string& out, double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    out.append(buf, res.ptr);
}

}  // namespace

Mesh parse_mesh(const std::string& text) {
    LineReader r(text);
    std::string s;
    if (!r.next(s)) throw ParseError("empty mesh file", 1);
    auto head = split(s);
    if (head.size() != 2 || head[0] != "fetv-mesh" || head[1] != "1")
        throw ParseError("expected header 'fetv-mesh 1'", r.line);

    const int nv = parse_count(r, "vertices");
    std::vector<Vec2> verts;
    verts.reserve(nv);
    for (int i = 0; i < nv; ++i) {
        if (!r.next(s)) throw ParseError("truncated vertex list", r.line + 1);
        auto toks = split(s);
        if (toks.size() != 2) throw ParseError("vertex line needs 2 coordinates", r.line);
        verts.emplace_back(parse_number<double>(toks[0], r.line), parse_number<double>(toks[1], r.line));
    }
    const int nt = parse_count(r, "cells");
    std::vector<std::array<int, 3>> cells;
    cells.reserve(nt);
    for (int i = 0; i < nt; ++i) {
        if (!r.next(s)) throw ParseError("truncated cell list", r.line + 1);
        auto toks = split(s);
        if (toks.size() != 3) throw ParseError("cell line needs 3 vertex indices", r.line);
        std::array<int, 3> c{};
        for (int k = 0; k < 3; ++k) c[k] = parse_number<int>(toks[k], r.line);
        cells.push_back(c);
    }
    if (r.next(s)) throw ParseError("trailing content", r.line);
    return Mesh(std::move(verts), std::move(cells));
}

std::string format_mesh(const Mesh& mesh) {
    std::string out = "fetv-mesh 1\nvertices " + std::to_string(mesh.num_vertices()) + "\n";
    for (const auto& v : mesh.vertices()) {
        append_double(out, v.x());
        out.push_back(' ');
        append_double(out, v.y());
        out.push_back('\n');
    }
    out += "cells " + std::to_string(mesh.num_cells()) + "\n";
    for (const auto& c : mesh.cells())
        out += std::to_string(c[0]) + " " + std::to_string(c[1]) + " " + std::to_string(c[2]) + "\n";
    return out;
}

Mesh load_mesh(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open mesh file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_mesh(ss.str());
}

void save_mesh(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write mesh file '" + path + "'");
    out << format_mesh(mesh);
    if (!out) throw Error("write failed for '" + path + "'");
}

// ---- point location ----------------------------------------------------

std::array<double, 3> barycentric(const Mesh& mesh, int t, const Vec2& x) {
    const Vec2 r = mesh.geometry(t).to_reference(x);
    return {1.0 - r.x() - r.y(), r.x(), r.y()};
}

namespace {

bool inside(const Mesh& mesh, int t, const Vec2& x) {
    auto l = barycentric(mesh, t, x);
    return l[0] >= -kBaryTol && l[1] >= -kBaryTol && l[2] >= -kBaryTol;
}

}  // namespace

std::optional<int> locate_point(const Mesh& mesh, const Vec2& x) {
    for (int t = 0; t < mesh.num_cells(); ++t)
        if (inside(mesh, t, x)) return t;
    return std::nullopt;
}

PointLocator::PointLocator(const Mesh& mesh) : mesh_(&mesh) {
    mesh.bounding_box(lo_, hi_);
    const int n = std::max(1, static_cast<int>(std::sqrt(mesh.num_cells() / 2.0)));
    nbx_ = nby_ = n;
    buckets_.resize(static_cast<size_t>(nbx_) * nby_);
    const Vec2 ext = (hi_ - lo_).cwiseMax(Vec2::Constant(1e-300));
    const double pad = 1e-9 * ext.maxCoeff();
    for (int t = 0; t < mesh.num_cells(); ++t) {
        const auto& c = mesh.cell(t);
        Vec2 a = mesh.vertex(c[0]), b = a;
        for (int k = 1; k < 3; ++k) {
            a = a.cwiseMin(mesh.vertex(c[k]));
            b = b.cwiseMax(mesh.vertex(c[k]));
        }
        a.array() -= pad;
        b.array() += pad;
        const int i0 = std::clamp(static_cast<int>((a.x() - lo_.x()) / ext.x() * nbx_), 0, nbx_ - 1);
        const int i1 = std::clamp(static_cast<int>((b.x() - lo_.x()) / ext.x() * nbx_), 0, nbx_ - 1);
        const int j0 = std::clamp(static_cast<int>((a.y() - lo_.y()) / ext.y() * nby_), 0, nby_ - 1);
        const int j1 = std::clamp(static_cast<int>((b.y() - lo_.y()) / ext.y() * nby_), 0, nby_ - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) buckets_[static_cast<size_t>(j) * nbx_ + i].push_back(t);
    }
}

std::optional<int> PointLocator::locate(const Vec2& x) const {
    const Vec2 ext = (hi_ - lo_).cwiseMax(Vec2::Constant(1e-300));
    const double pad = 1e-9 * ext.maxCoeff();
    if (x.x() < lo_.x() - pad || x.y() < lo_.y() - pad || x.x() > hi_.x() + pad || x.y() > hi_.y() + pad)
        return std::nullopt;
    const int i = std::clamp(static_cast<int>((x.x() - lo_.x()) / ext.x() * nbx_), 0, nbx_ - 1);
    const int j = std::clamp(static_cast<int>((x.y() - lo_.y()) / ext.y() * nby_), 0, nby_ - 1);
    // Buckets list cells in increasing index order.
    for (int t : buckets_[static_cast<size_t>(j) * nbx_ + i])
        if (inside(*mesh_, t, x)) return t;
    return std::nullopt;
}

}  // namespace fetv
