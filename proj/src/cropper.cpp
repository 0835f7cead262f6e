#include "glsim/cropper.hpp"

#include <algorithm>
#include <numeric>

#include "glsim/errors.hpp"
#include "glsim/rng.hpp"

namespace glsim {

patch_box enclosing_box(const std::vector<int>& indices, const grid_shape& grid) {
    if (indices.empty()) throw config_error("cannot enclose an empty index set");
    patch_box box{grid.rows, -1, grid.cols, -1};
    for (int idx : indices) {
        if (idx < 0 || idx >= grid.patches())
            throw config_error("patch index out of range: " + std::to_string(idx));
        const int r = idx / grid.cols;
        const int c = idx % grid.cols;
        box.row_min = std::min(box.row_min, r);
        box.row_max = std::max(box.row_max, r);
        box.col_min = std::min(box.col_min, c);
        box.col_max = std::max(box.col_max, c);
    }
    return box;
}

pixel_rect box_to_pixels(const patch_box& box, const arch_config& cfg) {
    pixel_rect rect;
    rect.x0 = box.col_min * cfg.stride;
    rect.y0 = box.row_min * cfg.stride;
    // windows extend patch_size pixels past their origin and may overhang the
    // image when stride < patch_size, so clamp to the frame
    rect.x1 = std::min(box.col_max * cfg.stride + cfg.patch_size, cfg.image_w);
    rect.y1 = std::min(box.row_max * cfg.stride + cfg.patch_size, cfg.image_h);
    return rect;
}

image_tensor crop_resize(const image_tensor& image, const pixel_rect& rect,
                         int out_w, int out_h) {
    if (rect.width() < 1 || rect.height() < 1 || rect.x0 < 0 || rect.y0 < 0 ||
        rect.x1 > image.width || rect.y1 > image.height)
        throw config_error("crop rectangle outside the image");
    if (out_w < 1 || out_h < 1) throw config_error("resize target must be positive");

    image_tensor out(out_w, out_h, image.channels);
    const double sx = static_cast<double>(rect.width()) / out_w;
    const double sy = static_cast<double>(rect.height()) / out_h;

    for (int y = 0; y < out_h; ++y) {
        // half-pixel centers, edge clamped within the source rect
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(rect.height() - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, rect.height() - 1);
        const double ty = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(rect.width() - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, rect.width() - 1);
            const double tx = fx - x0;
            for (int c = 0; c < image.channels; ++c) {
                const double v00 = image.at(rect.y0 + y0, rect.x0 + x0, c);
                const double v01 = image.at(rect.y0 + y0, rect.x0 + x1, c);
                const double v10 = image.at(rect.y0 + y1, rect.x0 + x0, c);
                const double v11 = image.at(rect.y0 + y1, rect.x0 + x1, c);
                const double top = v00 + tx * (v01 - v00);
                const double bot = v10 + tx * (v11 - v10);
                out.at(y, x, c) = static_cast<float>(top + ty * (bot - top));
            }
        }
    }
    return out;
}

std::vector<int> random_indices(std::uint64_t seed, int o, int n) {
    if (o < 1 || o > n) throw config_error("selection count out of range");
    splitmix64 rng(seed);
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    // Fisher-Yates prefix: the first o slots are a uniform o-subset
    for (int i = 0; i < o; ++i) {
        const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(o);
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace glsim
