#pragma once

#include <string>

namespace glsim {

struct grid_shape {
    int rows = 0;
    int cols = 0;

    int patches() const { return rows * cols; }
};

// Everything that fixes tensor shapes for one model instance.
struct arch_config {
    int patch_size = 16;
    int stride = 16; // <= patch_size; smaller values give overlapping windows
    int depth = 12;
    int heads = 12;
    int width = 768;
    int mlp_ratio = 4;
    int image_w = 224;
    int image_h = 224;
    int num_classes = 1000;
    int top_o = 8;          // patches kept by the selector
    int cls_variants = 2;   // 0 = full image pass, 1 = crop pass

    int head_dim() const { return width / heads; }
    int seq_len() const;    // patches + 1 (CLS)

    // throws config_error when any field is out of range
    void validate() const;
};

// patch grid implied by image size, window size and stride; throws config_error
// when the image cannot hold a single window
grid_shape grid_dims(int image_w, int image_h, int patch_size, int stride);
grid_shape grid_dims(const arch_config& cfg);

// named presets: "b16", "b14", "t16" (depth/heads/width/patch only; image size,
// classes and top_o come from the caller). throws config_error on unknown name.
arch_config arch_preset(const std::string& name);

} // namespace glsim
