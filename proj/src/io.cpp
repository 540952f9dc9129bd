#include "fetv/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fetv/error.hpp"

namespace fetv {

Raster make_raster(int width, int height, double fill) {
    if (width <= 0 || height <= 0) throw ConfigError("raster dimensions must be positive");
    Raster r;
    r.width = width;
    r.height = height;
    r.values.assign(static_cast<size_t>(width) * height, fill);
    return r;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for '" + path + "'");
}

namespace {

struct PgmReader {
    const std::string& s;
    size_t pos = 0;
    int line = 1;

    void skip_space_and_comments() {
        while (pos < s.size()) {
            const char c = s[pos];
            if (c == '#') {
                while (pos < s.size() && s[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                if (c == '\n') ++line;
                ++pos;
            } else {
                break;
            }
        }
    }

    long number(const char* what) {
        skip_space_and_comments();
        long v = 0;
        const char* b = s.data() + pos;
        const char* e = s.data() + s.size();
        auto [ptr, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || ptr == b) throw ParseError(std::string("expected ") + what, line);
        if (ptr < e && !std::isspace(static_cast<unsigned char>(*ptr)) && *ptr != '#')
            throw ParseError(std::string("malformed ") + what, line);
        pos += static_cast<size_t>(ptr - b);
        return v;
    }
};

}  // namespace

Raster parse_pgm(const std::string& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
        throw ParseError("not a P2/P5 PGM file", 1);
    const bool binary = bytes[1] == '5';
    PgmReader rd{bytes, 2};
    const long w = rd.number("width");
    const long h = rd.number("height");
    const long maxval = rd.number("maxval");
    if (w <= 0 || h <= 0) throw ParseError("image dimensions must be positive", rd.line);
    if (w > (1 << 16) || h > (1 << 16)) throw ParseError("image dimensions too large", rd.line);
    if (maxval <= 0 || maxval > 65535) throw ParseError("maxval must lie in 1..65535", rd.line);
    Raster r = make_raster(static_cast<int>(w), static_cast<int>(h));
    r.maxval = static_cast<int>(maxval);
    const size_t n = r.values.size();
    auto store = [&](size_t k, long v) { r.values[k] = std::clamp(static_cast<double>(v) / maxval, 0.0, 1.0); };
    if (binary) {
        if (rd.pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[rd.pos])))
            throw ParseError("missing separator before pixel data", rd.line);
        ++rd.pos;  // exactly one whitespace byte
        const size_t bpp = maxval < 256 ? 1 : 2;
        if (bytes.size() - rd.pos < n * bpp) throw ParseError("truncated pixel data", rd.line);
        const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + rd.pos);
        for (size_t k = 0; k < n; ++k) store(k, bpp == 1 ? p[k] : (p[2 * k] << 8) | p[2 * k + 1]);
    } else {
        for (size_t k = 0; k < n; ++k) {
            rd.skip_space_and_comments();
            if (rd.pos >= bytes.size()) throw ParseError("truncated pixel data", rd.line);
            store(k, rd.number("pixel value"));
        }
    }
    return r;
}

Raster load_pgm(const std::string& path) { return parse_pgm(read_file(path)); }

std::string format_pgm(const Raster& raster, bool binary) {
    if (raster.maxval <= 0 || raster.maxval > 65535) throw ConfigError("maxval must lie in 1..65535");
    if (raster.values.size() != static_cast<size_t>(raster.width) * raster.height)
        throw ConfigError("raster size mismatch");
    std::string out = (binary ? "P5\n" : "P2\n") + std::to_string(raster.width) + " " +
                      std::to_string(raster.height) + "\n" + std::to_string(raster.maxval) + "\n";
    auto q = [&](double v) {
        if (!std::isfinite(v)) v = 0;
        return static_cast<long>(std::lround(std::clamp(v, 0.0, 1.0) * raster.maxval));
    };
    if (binary) {
        const bool wide = raster.maxval >= 256;
        for (double v : raster.values) {
            const long x = q(v);
            if (wide) out.push_back(static_cast<char>((x >> 8) & 0xff));
            out.push_back(static_cast<char>(x & 0xff));
        }
    } else {
        for (int row = 0; row < raster.height; ++row) {
            for (int col = 0; col < raster.width; ++col) {
                if (col) out.push_back(' ');
                out += std::to_string(q(raster.at(col, row)));
            }
            out.push_back('\n');
        }
    }
    return out;
}

void save_pgm(const Raster& raster, const std::string& path, bool binary) {
    write_file(path, format_pgm(raster, binary));
}

RasterImage raster_to_dg(const Raster& raster, int r, double pixel_size) {
    check_degree(r);
    if (raster.width <= 0 || raster.height <= 0) throw ConfigError("empty raster");
    const double hpx = pixel_size > 0 ? pixel_size : 1.0 / std::max(raster.width, raster.height);
    auto mesh = std::make_shared<const Mesh>(
        build_crossed_mesh(raster.width, raster.height, hpx * raster.width, hpx * raster.height));
    const int nk = num_cell_nodes(r);
    RasterImage img;
    img.mesh = mesh;
    img.u.degree = r;
    img.u.coeffs.resize(static_cast<Eigen::Index>(mesh->num_cells()) * nk);
    for (int j = 0; j < raster.height; ++j)
        for (int i = 0; i < raster.width; ++i) {
            const double v = raster.at(i, raster.height - 1 - j);
            const int first = 4 * (j * raster.width + i);
            img.u.coeffs.segment(static_cast<Eigen::Index>(first) * nk, 4 * nk).setConstant(v);
        }
    return img;
}

Raster dg_to_raster(const Discretization& disc, const DgFunction& u, int width, int height, int* outside) {
    Raster out = make_raster(width, height);
    const Mesh& mesh = disc.mesh();
    Vec2 lo, hi;
    mesh.bounding_box(lo, hi);
    const PointLocator loc(mesh);
    int miss = 0;
    for (int row = 0; row < height; ++row)
        for (int col = 0; col < width; ++col) {
            const Vec2 x(lo.x() + (col + 0.5) * (hi.x() - lo.x()) / width,
                         hi.y() - (row + 0.5) * (hi.y() - lo.y()) / height);
            const auto t = loc.locate(x);
            if (!t) {
                ++miss;
                out.at(col, row) = 0.0;
                continue;
            }
            out.at(col, row) = std::clamp(evaluate(disc, u, *t, x), 0.0, 1.0);
        }
    if (outside) *outside = miss;
    return out;
}

CellMask parse_mask_text(const std::string& text, int num_cells) {
    CellMask mask = full_mask(num_cells);
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        long idx = -1;
        const char* first = line.data() + b;
        const char* last = line.data() + e + 1;
        auto [ptr, ec] = std::from_chars(first, last, idx);
        if (ec != std::errc() || ptr != last) throw ParseError("expected a cell index", lineno);
        if (idx < 0 || idx >= num_cells)
            throw ParseError("cell index " + std::to_string(idx) + " out of range (mesh has " +
                                 std::to_string(num_cells) + " cells)",
                             lineno);
        mask[static_cast<size_t>(idx)] = 0;
    }
    return mask;
}

CellMask mask_from_raster(const Raster& raster, const Mesh& mesh) {
    if (4L * raster.width * raster.height != mesh.num_cells())
        throw ConfigError("mask image is " + std::to_string(raster.width) + "x" + std::to_string(raster.height) +
                          " but the mesh has " + std::to_string(mesh.num_cells()) + " cells");
    CellMask mask = full_mask(mesh.num_cells());
    for (int row = 0; row < raster.height; ++row)
        for (int col = 0; col < raster.width; ++col) {
            if (raster.at(col, row) >= 0.5) continue;
            const int j = raster.height - 1 - row;
            const int first = 4 * (j * raster.width + col);
            std::fill(mask.begin() + first, mask.begin() + first + 4, std::uint8_t{0});
        }
    return mask;
}

CellMask load_mask(const std::string& path, const Mesh& mesh) {
    const std::string bytes = read_file(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5'))
        return mask_from_raster(parse_pgm(bytes), mesh);
    return parse_mask_text(bytes, mesh.num_cells());
}

void save_mask(const CellMask& mask, const std::string& path) {
    std::string out;
    for (size_t t = 0; t < mask.size(); ++t)
        if (!mask[t]) out += std::to_string(t) + "\n";
    write_file(path, out);
}

std::function<double(const Vec2&)> synthetic_image(const std::string& name) {
    if (name == "ball") {
        return [](const Vec2& x) {
            const double R = 0.35;
            const Vec2 d = x - Vec2(0.5, 0.5);
            const double rho2 = d.squaredNorm();
            if (rho2 >= R * R) return 0.1;
            // Lambert shading, light from the upper left
            const Eigen::Vector3d n(d.x() / R, d.y() / R, std::sqrt(R * R - rho2) / R);
            const Eigen::Vector3d l = Eigen::Vector3d(-0.5, 0.5, 0.7).normalized();
            return 0.3 + 0.65 * std::max(0.0, n.dot(l));
        };
    }
    if (name == "step") return [](const Vec2& x) { return x.x() < 0.5 ? 0.0 : 1.0; };
    if (name == "ramp") return [](const Vec2& x) { return std::clamp(x.x(), 0.0, 1.0); };
    if (name == "constant") return [](const Vec2&) { return 0.5; };
    throw ConfigError("unknown synthetic image '" + name + "' (ball, step, ramp, constant)");
}

Raster synthetic_raster(const std::string& name, int width, int height) {
    const auto f = synthetic_image(name);
    Raster r = make_raster(width, height);
    const double h = 1.0 / std::max(width, height);
    for (int row = 0; row < height; ++row)
        for (int col = 0; col < width; ++col) r.at(col, row) = f(Vec2((col + 0.5) * h, (height - row - 0.5) * h));
    return r;
}

}  // namespace fetv
