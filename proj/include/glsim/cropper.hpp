#pragma once

#include <cstdint>
#include <vector>

#include "glsim/arch.hpp"
#include "glsim/tensor.hpp"

namespace glsim {

// inclusive patch-grid rectangle
struct patch_box {
    int row_min = 0, row_max = 0;
    int col_min = 0, col_max = 0;
};

// half-open pixel rectangle [x0, x1) x [y0, y1)
struct pixel_rect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
};

// smallest grid rectangle covering the given 0-based patch indices;
// throws config_error on an empty set or out-of-range index
patch_box enclosing_box(const std::vector<int>& indices, const grid_shape& grid);

// patch-grid rectangle -> pixel rectangle under the config's stride, clamped to
// the image bounds (windows may overhang when stride < patch_size)
pixel_rect box_to_pixels(const patch_box& box, const arch_config& cfg);

// bilinear resample of `rect` to out_w x out_h. sample centers are aligned via
// s = (d + 0.5) * (src/dst) - 0.5 in rect-local coordinates, edge-clamped; a
// full-image rect at identical dims reproduces the input bit-exactly.
image_tensor crop_resize(const image_tensor& image, const pixel_rect& rect,
                         int out_w, int out_h);

// o distinct uniformly drawn patch indices (ascending); deterministic for a
// fixed seed. throws config_error unless 1 <= o <= n.
std::vector<int> random_indices(std::uint64_t seed, int o, int n);

} // namespace glsim
