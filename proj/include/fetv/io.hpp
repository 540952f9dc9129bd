#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fetv/operators.hpp"

namespace fetv {

// Row-major, row 0 at the top, values in [0,1].
struct Raster {
    int width = 0;
    int height = 0;
    int maxval = 255;  // bit depth used when saving
    std::vector<double> values;

    double& at(int col, int row) { return values[static_cast<size_t>(row) * width + col]; }
    double at(int col, int row) const { return values[static_cast<size_t>(row) * width + col]; }
};

Raster make_raster(int width, int height, double fill = 0.0);

Raster parse_pgm(const std::string& bytes);
Raster load_pgm(const std::string& path);
// P5 by default; samples are quantized to round(v * maxval).
std::string format_pgm(const Raster& raster, bool binary = true);
void save_pgm(const Raster& raster, const std::string& path, bool binary = true);

struct RasterImage {
    std::shared_ptr<const Mesh> mesh;
    DgFunction u;
};

// Crossed mesh with one square per pixel; every nodal value of a pixel's four cells is the pixel value.
// pixel_size <= 0 selects 1 / max(width, height).
RasterImage raster_to_dg(const Raster& raster, int r, double pixel_size = 0.0);

// Samples u at pixel centers of the mesh bounding box; centers outside the mesh give 0 and are counted.
Raster dg_to_raster(const Discretization& disc, const DgFunction& u, int width, int height, int* outside = nullptr);

// Text (one cell index per line, '#' comments) or PGM (pixels below 0.5 mask their square's four cells).
// Returns 1 for observed cells.
CellMask parse_mask_text(const std::string& text, int num_cells);
CellMask mask_from_raster(const Raster& raster, const Mesh& mesh);
CellMask load_mask(const std::string& path, const Mesh& mesh);
void save_mask(const CellMask& mask, const std::string& path);

// Synthetic test images on the unit square: "ball" (shaded sphere), "step" (dark left half),
// "ramp" (x), "constant".
std::function<double(const Vec2&)> synthetic_image(const std::string& name);
// The image sampled at pixel centers.
Raster synthetic_raster(const std::string& name, int width, int height);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace fetv
