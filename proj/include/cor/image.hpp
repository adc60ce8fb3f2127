#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cor/tensor.hpp"

namespace cor {

// 8-bit RGB raster, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> px;  // 3 bytes per pixel

    static Image filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

// 8-bit grayscale raster; nonzero = foreground.
struct MaskImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> px;

    static MaskImage zeros(int w, int h);
    bool at(int x, int y) const { return px[static_cast<std::size_t>(y) * width + x] != 0; }
    int area() const;
};

struct BoxI {
    int x = 0, y = 0, w = 0, h = 0;
    int area() const { return w * h; }
};

Image load_png_rgb(const std::filesystem::path& path);
void save_png_rgb(const Image& img, const std::filesystem::path& path);
MaskImage load_png_gray(const std::filesystem::path& path);
void save_png_gray(const MaskImage& mask, const std::filesystem::path& path);

// Serializes to in-memory PNG bytes (for VLM request payloads).
std::vector<std::uint8_t> encode_png_rgb(const Image& img);

// [h, w, 3] tensor with values in [0, 1].
TensorPtr image_to_tensor(const Image& img);
// [h, w] tensor with values in {0, 1}.
TensorPtr mask_to_tensor(const MaskImage& mask);

// Pixel bounding box of the foreground; zero-size box for an empty mask.
BoxI mask_bbox(const MaskImage& mask);

void draw_box(Image& img, const BoxI& box, std::uint8_t r, std::uint8_t g, std::uint8_t b,
              int thickness = 2);
// Mean color over the whole image.
void mean_color(const Image& img, std::uint8_t& r, std::uint8_t& g, std::uint8_t& b);
// Replaces masked pixels with the given color.
void fill_region(Image& img, const MaskImage& mask, std::uint8_t r, std::uint8_t g,
                 std::uint8_t b);
// Crops a box region, clamped to image bounds.
Image crop(const Image& img, const BoxI& box);

// Downsamples a full-resolution binary mask to a feature grid: a cell is
// foreground when at least half of its pixels are.
std::vector<double> mask_to_grid(const MaskImage& mask, int grid_h, int grid_w);
std::vector<double> mask_to_grid(const std::vector<double>& mask, int h, int w, int grid_h,
                                 int grid_w);

}  // namespace cor
