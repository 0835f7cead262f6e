#include "glsim/arch.hpp"

#include "glsim/errors.hpp"

namespace glsim {

grid_shape grid_dims(int image_w, int image_h, int patch_size, int stride) {
    if (patch_size < 1) throw config_error("patch size must be positive");
    if (stride < 1 || stride > patch_size)
        throw config_error("stride must be in [1, patch_size]");
    if (image_w < patch_size || image_h < patch_size)
        throw config_error("image smaller than one patch window");
    grid_shape g;
    g.cols = (image_w - patch_size) / stride + 1;
    g.rows = (image_h - patch_size) / stride + 1;
    return g;
}

grid_shape grid_dims(const arch_config& cfg) {
    return grid_dims(cfg.image_w, cfg.image_h, cfg.patch_size, cfg.stride);
}

int arch_config::seq_len() const {
    return grid_dims(*this).patches() + 1;
}

void arch_config::validate() const {
    if (depth < 1) throw config_error("depth must be positive");
    if (heads < 1) throw config_error("heads must be positive");
    if (width < 1) throw config_error("width must be positive");
    if (width % heads != 0) throw config_error("width must be divisible by heads");
    if (mlp_ratio < 1) throw config_error("mlp ratio must be positive");
    if (num_classes < 1) throw config_error("num classes must be positive");
    if (top_o < 1) throw config_error("top_o must be positive");
    if (cls_variants < 1) throw config_error("need at least one CLS variant");
    grid_dims(*this); // validates patch/stride/image dims
}

arch_config arch_preset(const std::string& name) {
    arch_config cfg;
    if (name == "b16" || name == "B-16") {
        cfg.patch_size = 16; cfg.stride = 16; cfg.depth = 12; cfg.heads = 12; cfg.width = 768;
    } else if (name == "b14" || name == "B-14") {
        cfg.patch_size = 14; cfg.stride = 14; cfg.depth = 12; cfg.heads = 12; cfg.width = 768;
    } else if (name == "t16" || name == "T-16") {
        cfg.patch_size = 16; cfg.stride = 16; cfg.depth = 12; cfg.heads = 3; cfg.width = 192;
    } else {
        throw config_error("unknown arch preset: " + name);
    }
    return cfg;
}

} // namespace glsim
