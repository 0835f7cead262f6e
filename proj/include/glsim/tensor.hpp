#pragma once

#include <cstddef>
#include <vector>

namespace glsim {

// row-major float matrix; the only tensor type the encoder needs
struct matrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;

    matrix() = default;
    matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0f) {}

    float* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const float* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

    float& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    float at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// interleaved RGB image, row-major (y, x, channel)
struct image_tensor {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<float> data;

    image_tensor() = default;
    image_tensor(int w, int h, int c = 3)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, 0.0f) {}

    float& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

// encoder output: token 0 is CLS, tokens 1..N are patches (post final layer norm)
struct feature_sequence {
    matrix tokens; // (N+1) x D

    int seq_len() const { return tokens.rows; }
    int dim() const { return tokens.cols; }
    const float* cls() const { return tokens.row(0); }
    const float* patch(int i) const { return tokens.row(i + 1); } // i in [0, N)
};

// post-softmax attention maps for every layer and head
struct attention_stack {
    int layers = 0;
    int heads = 0;
    int seq = 0; // N+1
    std::vector<float> data;

    attention_stack() = default;
    attention_stack(int l, int h, int s)
        : layers(l), heads(h), seq(s),
          data(static_cast<std::size_t>(l) * h * s * s, 0.0f) {}

    float* map(int layer, int head) {
        return data.data() +
               (static_cast<std::size_t>(layer) * heads + head) * seq * seq;
    }
    const float* map(int layer, int head) const {
        return data.data() +
               (static_cast<std::size_t>(layer) * heads + head) * seq * seq;
    }

    float at(int layer, int head, int i, int j) const {
        return map(layer, head)[static_cast<std::size_t>(i) * seq + j];
    }
};

} // namespace glsim
