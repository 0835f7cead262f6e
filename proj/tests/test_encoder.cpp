#include <doctest.h>

#include <cmath>
#include <cstring>

#include "glsim/encoder.hpp"
#include "glsim/errors.hpp"
#include "glsim/weights.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace glsim;

namespace {

arch_config tiny_config(int patch, int image, int depth, int heads, int width) {
    arch_config cfg;
    cfg.patch_size = patch;
    cfg.stride = patch;
    cfg.depth = depth;
    cfg.heads = heads;
    cfg.width = width;
    cfg.mlp_ratio = 2;
    cfg.image_w = cfg.image_h = image;
    cfg.num_classes = 3;
    cfg.top_o = 1;
    return cfg;
}

} // namespace

TEST_CASE("grid dims for square and overlapping strides") {
    grid_shape g = grid_dims(224, 224, 16, 16);
    CHECK(g.rows == 14);
    CHECK(g.cols == 14);

    g = grid_dims(224, 224, 16, 12);
    CHECK(g.rows == 18);
    CHECK(g.cols == 18);

    g = grid_dims(32, 32, 4, 4);
    CHECK(g.patches() == 64);

    // non-square frames keep their axes apart
    g = grid_dims(48, 32, 16, 16);
    CHECK(g.cols == 3);
    CHECK(g.rows == 2);

    CHECK_THROWS_AS(grid_dims(8, 8, 16, 16), config_error);
    CHECK_THROWS_AS(grid_dims(32, 32, 16, 0), config_error);
    CHECK_THROWS_AS(grid_dims(32, 32, 16, 17), config_error);
}

TEST_CASE("patchify: zero kernel leaves only the bias") {
    arch_config cfg = tiny_config(4, 8, 1, 1, 6);
    weight_set w = alloc_weights(cfg);
    for (int d = 0; d < cfg.width; ++d) w.patch_bias[d] = 0.5f + d;

    image_tensor img = test_util::random_image(8, 8, 1);
    matrix tokens = patchify(img, cfg, w);
    REQUIRE(tokens.rows == 4);
    for (int t = 0; t < tokens.rows; ++t)
        for (int d = 0; d < cfg.width; ++d)
            CHECK(tokens.at(t, d) == 0.5f + static_cast<float>(d)); // exact: 0 + bias
}

TEST_CASE("patchify: constant image gives identical tokens") {
    arch_config cfg = tiny_config(4, 16, 1, 1, 5);
    weight_set w = init_weights(3, cfg);
    image_tensor img(16, 16);
    for (float& v : img.data) v = 0.25f;

    matrix tokens = patchify(img, cfg, w);
    for (int t = 1; t < tokens.rows; ++t)
        CHECK(std::memcmp(tokens.row(0), tokens.row(t), sizeof(float) * cfg.width) == 0);
}

TEST_CASE("patchify matches a direct convolution oracle") {
    arch_config cfg = tiny_config(4, 32, 1, 2, 8);
    weight_set w = init_weights(11, cfg);
    image_tensor img = test_util::random_image(32, 32, 7);

    matrix tokens = patchify(img, cfg, w);
    oracle::dmat ref = oracle::patchify(img, cfg, w);
    REQUIRE(tokens.rows == 64);
    for (int t = 0; t < tokens.rows; ++t)
        for (int d = 0; d < cfg.width; ++d)
            CHECK(tokens.at(t, d) == doctest::Approx(ref[t][d]).epsilon(1e-6));
}

TEST_CASE("patchify with overlapping stride matches the oracle") {
    arch_config cfg = tiny_config(4, 10, 1, 1, 4);
    cfg.stride = 2; // 4x4 windows every 2 px
    weight_set w = init_weights(5, cfg);
    image_tensor img = test_util::random_image(10, 10, 9);

    matrix tokens = patchify(img, cfg, w);
    CHECK(tokens.rows == 16);
    oracle::dmat ref = oracle::patchify(img, cfg, w);
    for (int t = 0; t < tokens.rows; ++t)
        for (int d = 0; d < cfg.width; ++d)
            CHECK(tokens.at(t, d) == doctest::Approx(ref[t][d]).epsilon(1e-6));
}

TEST_CASE("patchify rejects images that do not match the config") {
    arch_config cfg = tiny_config(4, 8, 1, 1, 4);
    weight_set w = alloc_weights(cfg);
    image_tensor img(12, 8);
    CHECK_THROWS_AS(patchify(img, cfg, w), config_error);
}

TEST_CASE("encode: output shapes and attention invariants") {
    arch_config cfg = tiny_config(4, 12, 2, 2, 8);
    weight_set w = init_weights(21, cfg);
    image_tensor img = test_util::random_image(12, 12, 4);

    encode_result res = encode(img, cfg, w, 0);
    const int seq = cfg.seq_len();
    CHECK(res.features.seq_len() == seq);
    CHECK(res.features.dim() == 8);
    CHECK(res.attention.layers == 2);
    CHECK(res.attention.heads == 2);
    CHECK(res.attention.seq == seq);

    for (int l = 0; l < 2; ++l)
        for (int h = 0; h < 2; ++h)
            for (int i = 0; i < seq; ++i) {
                double sum = 0.0;
                for (int j = 0; j < seq; ++j) {
                    const float p = res.attention.at(l, h, i, j);
                    CHECK(p >= 0.0f);
                    CHECK(p <= 1.0f);
                    sum += p;
                }
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
            }
}

TEST_CASE("encode keeps sequence length with overlapping stride") {
    arch_config cfg = tiny_config(4, 8, 1, 1, 4);
    cfg.stride = 2;
    weight_set w = init_weights(2, cfg);
    image_tensor img = test_util::random_image(8, 8, 2);
    encode_result res = encode(img, cfg, w, 0);
    CHECK(res.features.seq_len() == 3 * 3 + 1);
}

TEST_CASE("encode: single patch, single head, hand-computed attention") {
    // one 1x1 patch, D=2: small enough to carry through by hand
    arch_config cfg = tiny_config(1, 1, 1, 1, 2);
    weight_set w = alloc_weights(cfg);
    // kernel picks out the R and G channels
    w.patch_kernel = {1, 0, 0, 0, 1, 0};
    w.cls_tokens = {0.1f, 0.4f, 0.0f, 0.0f};
    // identity projections
    w.blocks[0].wq = {1, 0, 0, 1};
    w.blocks[0].wk = {1, 0, 0, 1};
    w.blocks[0].wv = {1, 0, 0, 1};
    w.blocks[0].wo = {1, 0, 0, 1};

    image_tensor img(1, 1);
    img.at(0, 0, 0) = 0.2f;
    img.at(0, 0, 1) = -0.3f;
    img.at(0, 0, 2) = 0.5f;

    encode_result res = encode(img, cfg, w, 0);

    // by hand: x0 = (0.1, 0.4), x1 = (0.2, -0.3); LN over 2 dims maps each row
    // to (+-1 ...) scaled by (x - mean)/sqrt(var + 1e-6)
    auto ln2 = [](double a, double b) {
        const double mean = (a + b) / 2.0;
        const double var = ((a - mean) * (a - mean) + (b - mean) * (b - mean)) / 2.0;
        const double inv = 1.0 / std::sqrt(var + 1e-6);
        return std::pair<double, double>{(a - mean) * inv, (b - mean) * inv};
    };
    const auto [q0a, q0b] = ln2(0.1, 0.4);
    const auto [q1a, q1b] = ln2(0.2, -0.3);
    // scores row 0: q0.q0/sqrt(2), q0.q1/sqrt(2)
    const double s00 = (q0a * q0a + q0b * q0b) / std::sqrt(2.0);
    const double s01 = (q0a * q1a + q0b * q1b) / std::sqrt(2.0);
    const double e00 = std::exp(s00), e01 = std::exp(s01);
    const double a00 = e00 / (e00 + e01);

    CHECK(res.attention.at(0, 0, 0, 0) == doctest::Approx(a00).epsilon(1e-6));
    CHECK(res.attention.at(0, 0, 0, 1) == doctest::Approx(1.0 - a00).epsilon(1e-6));

    // residual + attention-weighted values, then final LN (scale 1, bias 0)
    const double v0a = q0a, v1a = q1a, v0b = q0b, v1b = q1b;
    const double y0a = 0.1 + a00 * v0a + (1.0 - a00) * v1a;
    const double y0b = 0.4 + a00 * v0b + (1.0 - a00) * v1b;
    const auto [f0a, f0b] = ln2(y0a, y0b);
    CHECK(res.features.cls()[0] == doctest::Approx(f0a).epsilon(1e-5));
    CHECK(res.features.cls()[1] == doctest::Approx(f0b).epsilon(1e-5));
}

TEST_CASE("encode matches the double-precision oracle on small instances") {
    glsim::splitmix64 seeds(1234);
    for (int trial = 0; trial < 20; ++trial) {
        const std::uint64_t s = seeds.next();
        // width >= 4 keeps the layer norms well conditioned; fewer features
        // amplify f32 rounding past the oracle tolerance
        const int width = (trial % 2) ? 8 : 4;
        const int heads = (trial % 2) ? 2 : 1;
        const int depth = 1 + trial % 2;
        // 1x1 patches on a tiny frame: at most 3 patch tokens
        arch_config cfg = tiny_config(1, 1, depth, heads, width);
        cfg.image_w = 1 + trial % 3;
        cfg.image_h = 1;

        weight_set w = init_weights(s, cfg);
        image_tensor img = test_util::random_image(cfg.image_w, cfg.image_h, s ^ 0xabcd);

        encode_result res = encode(img, cfg, w, 0);
        oracle::encode_out ref = oracle::encode(img, cfg, w, 0);

        const int seq = res.features.seq_len();
        for (int i = 0; i < seq; ++i)
            for (int d = 0; d < width; ++d)
                CHECK(res.features.tokens.at(i, d) ==
                      doctest::Approx(ref.tokens[i][d]).epsilon(1e-6));
        for (int l = 0; l < depth; ++l)
            for (int h = 0; h < heads; ++h)
                for (int i = 0; i < seq; ++i)
                    for (int j = 0; j < seq; ++j)
                        CHECK(res.attention.at(l, h, i, j) ==
                              doctest::Approx(ref.attention[l][h * seq + i][j])
                                  .epsilon(1e-6));
    }
}

TEST_CASE("encode is deterministic bit for bit") {
    arch_config cfg = tiny_config(4, 16, 2, 2, 8);
    weight_set w = init_weights(77, cfg);
    image_tensor img = test_util::random_image(16, 16, 5);

    encode_result a = encode(img, cfg, w, 0);
    encode_result b = encode(img, cfg, w, 0);
    CHECK(std::memcmp(a.features.tokens.data.data(), b.features.tokens.data.data(),
                      a.features.tokens.data.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(a.attention.data.data(), b.attention.data.data(),
                      a.attention.data.size() * sizeof(float)) == 0);
}

TEST_CASE("encode: CLS variants are isolated parameters") {
    arch_config cfg = tiny_config(4, 8, 1, 1, 4);
    weight_set w = init_weights(9, cfg);
    image_tensor img = test_util::random_image(8, 8, 3);

    // distinct variant tokens give distinct outputs
    encode_result a = encode(img, cfg, w, 0);
    encode_result b = encode(img, cfg, w, 1);
    CHECK(std::memcmp(a.features.tokens.data.data(), b.features.tokens.data.data(),
                      a.features.tokens.data.size() * sizeof(float)) != 0);

    // equal variant tokens give bit-identical outputs
    for (int d = 0; d < cfg.width; ++d) w.cls_tokens[cfg.width + d] = w.cls_tokens[d];
    encode_result c = encode(img, cfg, w, 0);
    encode_result e = encode(img, cfg, w, 1);
    CHECK(std::memcmp(c.features.tokens.data.data(), e.features.tokens.data.data(),
                      c.features.tokens.data.size() * sizeof(float)) == 0);
}

TEST_CASE("encode flags non-finite activations with the layer index") {
    arch_config cfg = tiny_config(4, 8, 2, 1, 4);
    weight_set w = init_weights(13, cfg);
    // blow up the first block's mlp so the overflow happens at layer 0:
    // the huge bias passes gelu untouched and the product overflows f32
    for (float& v : w.blocks[0].b1) v = 1e35f;
    for (float& v : w.blocks[0].w2) v = 1e30f;

    image_tensor img = test_util::random_image(8, 8, 1);
    CHECK_THROWS_WITH_AS(encode(img, cfg, w, 0),
                         "non-finite activation in encoder block (layer 0)",
                         numeric_error);
}

TEST_CASE("encode rejects an out-of-range CLS variant") {
    arch_config cfg = tiny_config(4, 8, 1, 1, 4);
    weight_set w = init_weights(1, cfg);
    image_tensor img = test_util::random_image(8, 8, 1);
    CHECK_THROWS_AS(encode(img, cfg, w, 2), config_error);
    CHECK_THROWS_AS(encode(img, cfg, w, -1), config_error);
}
