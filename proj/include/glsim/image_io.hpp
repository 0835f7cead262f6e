#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glsim/tensor.hpp"

namespace glsim {

// binary PPM (P6, maxval 255) -> floats in [0, 1]. accepts comments and any
// header whitespace; throws data_error with the offending byte offset.
image_tensor decode_ppm(const std::vector<std::uint8_t>& bytes);

// canonical P6 encoding ("P6\n<w> <h>\n255\n" + raw RGB); values are clamped
// to [0, 1] and rounded half away from zero. decode -> encode reproduces a
// canonical file byte for byte.
std::vector<std::uint8_t> encode_ppm(const image_tensor& image);

// in place [0,1] -> (v - 0.5) / 0.5, every channel
void normalize_image(image_tensor& image);

// saliency scores on a rows x cols grid -> 8-bit PGM (P5). pixels are
// round(255 * (s - min)/(max - min)); a constant map renders as all zeros.
// out_w/out_h > 0 requests nearest-neighbor upsampling to that size.
std::vector<std::uint8_t> encode_pgm_heatmap(const std::vector<double>& scores,
                                             int rows, int cols,
                                             int out_w = 0, int out_h = 0);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);
void write_file(const std::string& path, const std::string& text);

} // namespace glsim
