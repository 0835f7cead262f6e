#include "glsim/encoder.hpp"

#include <cmath>
#include <cstring>

#include "glsim/errors.hpp"

namespace glsim {
namespace detail {

// dot product with 64-bit accumulation once the term count is large enough for
// f32 rounding to matter
static float dot(const float* a, const float* b, int n) {
    if (n >= 4096) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * b[i];
        return static_cast<float>(acc);
    }
    float acc = 0.0f;
    for (int i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void linear(const float* x, const float* w, const float* b, int in_dim, int out_dim,
            float* y) {
    if (in_dim >= 4096) {
        std::vector<double> acc(out_dim, 0.0);
        for (int i = 0; i < in_dim; ++i) {
            const float xi = x[i];
            const float* wr = w + static_cast<std::size_t>(i) * out_dim;
            for (int j = 0; j < out_dim; ++j) acc[j] += static_cast<double>(xi) * wr[j];
        }
        for (int j = 0; j < out_dim; ++j)
            y[j] = static_cast<float>(acc[j] + (b ? b[j] : 0.0f));
        return;
    }
    for (int j = 0; j < out_dim; ++j) y[j] = b ? b[j] : 0.0f;
    for (int i = 0; i < in_dim; ++i) {
        const float xi = x[i];
        const float* wr = w + static_cast<std::size_t>(i) * out_dim;
        for (int j = 0; j < out_dim; ++j) y[j] += xi * wr[j];
    }
}

void layer_norm(const float* x, int n, const float* scale, const float* bias, float* out) {
    constexpr float eps = 1e-6f;
    float mean = 0.0f;
    for (int i = 0; i < n; ++i) mean += x[i];
    mean /= static_cast<float>(n);
    float var = 0.0f;
    for (int i = 0; i < n; ++i) {
        float d = x[i] - mean;
        var += d * d;
    }
    var /= static_cast<float>(n);
    float inv = 1.0f / std::sqrt(var + eps);
    for (int i = 0; i < n; ++i) out[i] = (x[i] - mean) * inv * scale[i] + bias[i];
}

float gelu(float x) {
    // exact form, not the tanh approximation
    double xd = x;
    return static_cast<float>(0.5 * xd * (1.0 + std::erf(xd * 0.70710678118654752440)));
}

static void softmax_row(float* row, int n) {
    float mx = row[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, row[i]);
    float sum = 0.0f;
    for (int i = 0; i < n; ++i) {
        row[i] = std::exp(row[i] - mx);
        sum += row[i];
    }
    for (int i = 0; i < n; ++i) row[i] /= sum;
}

// multi-head self-attention over the layer-normed sequence xn (n x d);
// adds the projected result into x. attn_out, when given, receives the
// post-softmax maps laid out head-major (heads x n x n).
static void attention(matrix& x, const matrix& xn, const block_weights& bw, int heads,
                      float* attn_out) {
    const int n = xn.rows;
    const int d = xn.cols;
    const int dh = d / heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(dh));

    matrix q(n, d), k(n, d), v(n, d), ctx(n, d);
    for (int i = 0; i < n; ++i) {
        linear(xn.row(i), bw.wq.data(), bw.bq.data(), d, d, q.row(i));
        linear(xn.row(i), bw.wk.data(), bw.bk.data(), d, d, k.row(i));
        linear(xn.row(i), bw.wv.data(), bw.bv.data(), d, d, v.row(i));
    }

    std::vector<float> probs(static_cast<std::size_t>(n) * n);
    for (int h = 0; h < heads; ++h) {
        const int off = h * dh;
        for (int i = 0; i < n; ++i) {
            float* prow = probs.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j)
                prow[j] = dot(q.row(i) + off, k.row(j) + off, dh) * scale;
            softmax_row(prow, n);
        }
        if (attn_out)
            std::memcpy(attn_out + static_cast<std::size_t>(h) * n * n, probs.data(),
                        sizeof(float) * n * n);
        for (int i = 0; i < n; ++i) {
            float* crow = ctx.row(i) + off;
            for (int c = 0; c < dh; ++c) crow[c] = 0.0f;
            const float* prow = probs.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) {
                const float p = prow[j];
                const float* vrow = v.row(j) + off;
                for (int c = 0; c < dh; ++c) crow[c] += p * vrow[c];
            }
        }
    }

    std::vector<float> proj(d);
    for (int i = 0; i < n; ++i) {
        linear(ctx.row(i), bw.wo.data(), bw.bo.data(), d, d, proj.data());
        float* xr = x.row(i);
        for (int c = 0; c < d; ++c) xr[c] += proj[c];
    }
}

void block_forward(matrix& x, const block_weights& bw, int heads, int mlp_ratio,
                   float* attn_out) {
    const int n = x.rows;
    const int d = x.cols;
    const int hidden = mlp_ratio * d;

    matrix xn(n, d);
    for (int i = 0; i < n; ++i)
        layer_norm(x.row(i), d, bw.ln1_scale.data(), bw.ln1_bias.data(), xn.row(i));
    attention(x, xn, bw, heads, attn_out);

    std::vector<float> normed(d), h(hidden), out(d);
    for (int i = 0; i < n; ++i) {
        layer_norm(x.row(i), d, bw.ln2_scale.data(), bw.ln2_bias.data(), normed.data());
        linear(normed.data(), bw.w1.data(), bw.b1.data(), d, hidden, h.data());
        for (int c = 0; c < hidden; ++c) h[c] = gelu(h[c]);
        linear(h.data(), bw.w2.data(), bw.b2.data(), hidden, d, out.data());
        float* xr = x.row(i);
        for (int c = 0; c < d; ++c) xr[c] += out[c];
    }
}

static bool all_finite(const matrix& x) {
    for (float v : x.data)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace detail

matrix patchify(const image_tensor& image, const arch_config& cfg, const weight_set& w) {
    if (image.width != cfg.image_w || image.height != cfg.image_h || image.channels != 3)
        throw config_error("image dims do not match config");
    const grid_shape grid = grid_dims(cfg);
    const int p = cfg.patch_size;
    const int d = cfg.width;
    const int win = 3 * p * p;

    matrix tokens(grid.patches(), d);
    std::vector<float> window(win);
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            const int y0 = r * cfg.stride;
            const int x0 = c * cfg.stride;
            // flatten channel-major to match the kernel layout
            for (int ch = 0; ch < 3; ++ch)
                for (int py = 0; py < p; ++py)
                    for (int px = 0; px < p; ++px)
                        window[(ch * p + py) * p + px] = image.at(y0 + py, x0 + px, ch);
            float* tok = tokens.row(r * grid.cols + c);
            for (int dd = 0; dd < d; ++dd)
                tok[dd] = detail::dot(window.data(),
                                      w.patch_kernel.data() + static_cast<std::size_t>(dd) * win,
                                      win) +
                          w.patch_bias[dd];
        }
    }
    return tokens;
}

encode_result encode(const image_tensor& image, const arch_config& cfg,
                     const weight_set& w, int cls_variant) {
    cfg.validate();
    if (cls_variant < 0 || cls_variant >= cfg.cls_variants)
        throw config_error("cls variant out of range");

    const matrix patches = patchify(image, cfg, w);
    const int n = patches.rows + 1;
    const int d = cfg.width;

    matrix x(n, d);
    std::memcpy(x.row(0), w.cls_tokens.data() + static_cast<std::size_t>(cls_variant) * d,
                sizeof(float) * d);
    std::memcpy(x.row(1), patches.data.data(), sizeof(float) * patches.data.size());
    for (int i = 0; i < n; ++i) {
        float* xr = x.row(i);
        const float* pe = w.pos_embed.data() + static_cast<std::size_t>(i) * d;
        for (int c = 0; c < d; ++c) xr[c] += pe[c];
    }

    encode_result res;
    res.attention = attention_stack(cfg.depth, cfg.heads, n);
    for (int l = 0; l < cfg.depth; ++l) {
        detail::block_forward(x, w.blocks[l], cfg.heads, cfg.mlp_ratio,
                              res.attention.map(l, 0));
        if (!detail::all_finite(x))
            throw numeric_error("non-finite activation in encoder block", l);
    }

    res.features.tokens = matrix(n, d);
    for (int i = 0; i < n; ++i)
        detail::layer_norm(x.row(i), d, w.final_ln_scale.data(), w.final_ln_bias.data(),
                           res.features.tokens.row(i));
    if (!detail::all_finite(res.features.tokens))
        throw numeric_error("non-finite activation after final layer norm", cfg.depth);
    return res;
}

} // namespace glsim
