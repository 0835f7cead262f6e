#include "glsim/weights.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "glsim/errors.hpp"
#include "glsim/rng.hpp"

namespace glsim {

using nlohmann::json;

static void size_block(block_weights& b, int d, int mlp_ratio) {
    const std::size_t dd = static_cast<std::size_t>(d) * d;
    const std::size_t dh = static_cast<std::size_t>(d) * mlp_ratio * d;
    b.ln1_scale.assign(d, 1.0f); b.ln1_bias.assign(d, 0.0f);
    b.wq.assign(dd, 0.0f); b.bq.assign(d, 0.0f);
    b.wk.assign(dd, 0.0f); b.bk.assign(d, 0.0f);
    b.wv.assign(dd, 0.0f); b.bv.assign(d, 0.0f);
    b.wo.assign(dd, 0.0f); b.bo.assign(d, 0.0f);
    b.ln2_scale.assign(d, 1.0f); b.ln2_bias.assign(d, 0.0f);
    b.w1.assign(dh, 0.0f); b.b1.assign(static_cast<std::size_t>(mlp_ratio) * d, 0.0f);
    b.w2.assign(dh, 0.0f); b.b2.assign(d, 0.0f);
}

weight_set alloc_weights(const arch_config& cfg) {
    cfg.validate();
    const int d = cfg.width;
    const int n1 = cfg.seq_len();
    weight_set w;
    w.patch_kernel.assign(static_cast<std::size_t>(d) * 3 * cfg.patch_size * cfg.patch_size, 0.0f);
    w.patch_bias.assign(d, 0.0f);
    w.pos_embed.assign(static_cast<std::size_t>(n1) * d, 0.0f);
    w.cls_tokens.assign(static_cast<std::size_t>(cfg.cls_variants) * d, 0.0f);
    w.blocks.resize(cfg.depth);
    for (auto& b : w.blocks) size_block(b, d, cfg.mlp_ratio);
    w.final_ln_scale.assign(d, 1.0f);
    w.final_ln_bias.assign(d, 0.0f);
    size_block(w.agg_block, d, cfg.mlp_ratio);
    w.agg_ln_scale.assign(d, 1.0f);
    w.agg_ln_bias.assign(d, 0.0f);
    w.classifier.assign(static_cast<std::size_t>(d) * cfg.num_classes, 0.0f);
    return w;
}

static void fill_normal(std::vector<float>& t, normal_sampler& gen) {
    for (float& v : t) v = static_cast<float>(gen.next() * 0.02);
}

weight_set init_weights(std::uint64_t seed, const arch_config& cfg) {
    weight_set w = alloc_weights(cfg);
    normal_sampler gen(seed);
    // draw order is part of the format: biases and LN params consume no draws
    fill_normal(w.patch_kernel, gen);
    fill_normal(w.pos_embed, gen);
    fill_normal(w.cls_tokens, gen);
    for (auto& b : w.blocks) {
        fill_normal(b.wq, gen);
        fill_normal(b.wk, gen);
        fill_normal(b.wv, gen);
        fill_normal(b.wo, gen);
        fill_normal(b.w1, gen);
        fill_normal(b.w2, gen);
    }
    fill_normal(w.agg_block.wq, gen);
    fill_normal(w.agg_block.wk, gen);
    fill_normal(w.agg_block.wv, gen);
    fill_normal(w.agg_block.wo, gen);
    fill_normal(w.agg_block.w1, gen);
    fill_normal(w.agg_block.w2, gen);
    fill_normal(w.classifier, gen);
    return w;
}

namespace {

struct tensor_ref {
    std::string name;
    std::vector<int> shape;
    std::vector<float>* data;
};

void block_refs(std::vector<tensor_ref>& refs, const std::string& prefix, block_weights& b,
                int d, int mlp_ratio) {
    const int h = mlp_ratio * d;
    refs.push_back({prefix + ".ln1.scale", {d}, &b.ln1_scale});
    refs.push_back({prefix + ".ln1.bias", {d}, &b.ln1_bias});
    refs.push_back({prefix + ".attn.wq", {d, d}, &b.wq});
    refs.push_back({prefix + ".attn.bq", {d}, &b.bq});
    refs.push_back({prefix + ".attn.wk", {d, d}, &b.wk});
    refs.push_back({prefix + ".attn.bk", {d}, &b.bk});
    refs.push_back({prefix + ".attn.wv", {d, d}, &b.wv});
    refs.push_back({prefix + ".attn.bv", {d}, &b.bv});
    refs.push_back({prefix + ".attn.wo", {d, d}, &b.wo});
    refs.push_back({prefix + ".attn.bo", {d}, &b.bo});
    refs.push_back({prefix + ".ln2.scale", {d}, &b.ln2_scale});
    refs.push_back({prefix + ".ln2.bias", {d}, &b.ln2_bias});
    refs.push_back({prefix + ".mlp.w1", {d, h}, &b.w1});
    refs.push_back({prefix + ".mlp.b1", {h}, &b.b1});
    refs.push_back({prefix + ".mlp.w2", {h, d}, &b.w2});
    refs.push_back({prefix + ".mlp.b2", {d}, &b.b2});
}

std::vector<tensor_ref> tensor_table(weight_set& w, const arch_config& cfg) {
    const int d = cfg.width;
    const int p = cfg.patch_size;
    std::vector<tensor_ref> refs;
    refs.push_back({"patch_kernel", {d, 3 * p * p}, &w.patch_kernel});
    refs.push_back({"patch_bias", {d}, &w.patch_bias});
    refs.push_back({"pos_embed", {cfg.seq_len(), d}, &w.pos_embed});
    refs.push_back({"cls_tokens", {cfg.cls_variants, d}, &w.cls_tokens});
    for (int i = 0; i < cfg.depth; ++i)
        block_refs(refs, "blocks." + std::to_string(i), w.blocks[i], d, cfg.mlp_ratio);
    refs.push_back({"final_ln.scale", {d}, &w.final_ln_scale});
    refs.push_back({"final_ln.bias", {d}, &w.final_ln_bias});
    block_refs(refs, "agg", w.agg_block, d, cfg.mlp_ratio);
    refs.push_back({"agg_ln.scale", {d}, &w.agg_ln_scale});
    refs.push_back({"agg_ln.bias", {d}, &w.agg_ln_bias});
    refs.push_back({"classifier", {d, cfg.num_classes}, &w.classifier});
    return refs;
}

json config_to_json(const arch_config& cfg) {
    return json{{"patch_size", cfg.patch_size}, {"stride", cfg.stride},
                {"depth", cfg.depth},           {"heads", cfg.heads},
                {"width", cfg.width},           {"mlp_ratio", cfg.mlp_ratio},
                {"image_w", cfg.image_w},       {"image_h", cfg.image_h},
                {"num_classes", cfg.num_classes}, {"top_o", cfg.top_o},
                {"cls_variants", cfg.cls_variants}};
}

arch_config config_from_json(const json& j) {
    arch_config cfg;
    cfg.patch_size = j.at("patch_size").get<int>();
    cfg.stride = j.at("stride").get<int>();
    cfg.depth = j.at("depth").get<int>();
    cfg.heads = j.at("heads").get<int>();
    cfg.width = j.at("width").get<int>();
    cfg.mlp_ratio = j.at("mlp_ratio").get<int>();
    cfg.image_w = j.at("image_w").get<int>();
    cfg.image_h = j.at("image_h").get<int>();
    cfg.num_classes = j.at("num_classes").get<int>();
    cfg.top_o = j.at("top_o").get<int>();
    cfg.cls_variants = j.at("cls_variants").get<int>();
    return cfg;
}

void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint32_t get_le32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

} // namespace

void save_weights(const std::string& path, const arch_config& cfg, const weight_set& w) {
    auto refs = tensor_table(const_cast<weight_set&>(w), cfg);

    json tensors = json::object();
    std::uint64_t offset = 0;
    for (const auto& r : refs) {
        tensors[r.name] = json{{"shape", r.shape}, {"offset", offset}};
        offset += r.data->size() * 4;
    }
    json header{{"blob_bytes", offset}, {"config", config_to_json(cfg)}, {"tensors", tensors}};
    std::string head = header.dump();
    head += '\n';

    std::ofstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open weights file for writing: " + path);
    f.write(head.data(), static_cast<std::streamsize>(head.size()));
    std::vector<std::uint8_t> buf;
    for (const auto& r : refs) {
        buf.clear();
        buf.reserve(r.data->size() * 4);
        for (float v : *r.data) put_le32(buf, std::bit_cast<std::uint32_t>(v));
        f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
    if (!f) throw data_error("short write to weights file: " + path);
}

loaded_weights load_weights(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open weights file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());

    auto nl = std::find(bytes.begin(), bytes.end(), static_cast<std::uint8_t>('\n'));
    if (nl == bytes.end()) throw data_error("weights header: no newline terminator", 0);
    const std::size_t head_len = static_cast<std::size_t>(nl - bytes.begin());

    json header;
    try {
        header = json::parse(bytes.begin(), nl);
    } catch (const json::exception& e) {
        throw data_error(std::string("weights header: ") + e.what(), 0);
    }

    loaded_weights out;
    try {
        out.config = config_from_json(header.at("config"));
    } catch (const json::exception& e) {
        throw data_error(std::string("weights header config: ") + e.what(), 0);
    }
    out.config.validate();
    out.weights = alloc_weights(out.config);

    const std::size_t blob_start = head_len + 1;
    const std::uint64_t declared = header.value("blob_bytes", std::uint64_t{0});
    const std::size_t actual = bytes.size() - blob_start;
    if (declared != actual)
        throw data_error("weights blob: declared " + std::to_string(declared) +
                             " bytes, file holds " + std::to_string(actual),
                         blob_start);

    const json& tensors = header.at("tensors");
    auto refs = tensor_table(out.weights, out.config);
    for (auto& r : refs) {
        auto it = tensors.find(r.name);
        if (it == tensors.end())
            throw data_error("weights header: missing tensor " + r.name, 0);
        std::vector<int> shape = it->at("shape").get<std::vector<int>>();
        if (shape != r.shape)
            throw data_error("weights header: shape mismatch for " + r.name, 0);
        const std::uint64_t off = it->at("offset").get<std::uint64_t>();
        const std::uint64_t need = r.data->size() * 4;
        if (off + need > declared)
            throw data_error("weights blob: tensor " + r.name + " out of bounds",
                             blob_start + off);
        const std::uint8_t* p = bytes.data() + blob_start + off;
        for (std::size_t i = 0; i < r.data->size(); ++i)
            (*r.data)[i] = std::bit_cast<float>(get_le32(p + i * 4));
    }
    return out;
}

} // namespace glsim
