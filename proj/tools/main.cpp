#include <atomic>
#include <cstdint>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "glsim/aggregator.hpp"
#include "glsim/arch.hpp"
#include "glsim/cost_model.hpp"
#include "glsim/dfsm.hpp"
#include "glsim/encoder.hpp"
#include "glsim/errors.hpp"
#include "glsim/image_io.hpp"
#include "glsim/json_writer.hpp"
#include "glsim/weights.hpp"

namespace {

using namespace glsim;

// everything the subcommands share
struct cli_options {
    std::string arch = "b16";
    int image_size = 224;
    int patch = 16;
    int stride = 0; // 0 = same as patch
    int depth = 12;
    int heads = 12;
    int width = 768;
    int mlp_ratio = 4;
    int classes = 1000;
    int top_o = 8;
    bool scale_top_o = false;
    std::string metric = "cosine";
    std::string crop_mode_name = "gls";
    std::string mode = "aggregate";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::uint64_t crop_seed = 0;
    bool crop_seed_set = false;
    std::string weights_path;
    std::string format = "text";
    int jobs = 1;
    bool upsample = false;
    bool top_o_set = false;
};

void add_arch_flags(CLI::App* cmd, cli_options& opt) {
    cmd->add_option("--arch", opt.arch, "architecture: b16, b14, t16 or custom")
        ->check(CLI::IsMember({"b16", "b14", "t16", "custom"}));
    cmd->add_option("--image-size", opt.image_size, "square input side in pixels");
    cmd->add_option("--patch", opt.patch, "custom arch: window side");
    cmd->add_option("--stride", opt.stride, "custom arch: window step (default: patch)");
    cmd->add_option("--depth", opt.depth, "custom arch: transformer blocks");
    cmd->add_option("--heads", opt.heads, "custom arch: attention heads");
    cmd->add_option("--width", opt.width, "custom arch: embedding dim");
    cmd->add_option("--mlp-ratio", opt.mlp_ratio, "custom arch: mlp expansion");
    cmd->add_option("--classes", opt.classes, "classifier output count");
}

void add_model_source_flags(CLI::App* cmd, cli_options& opt) {
    cmd->add_option("--seed", opt.seed, "deterministic weight init seed")
        ->each([&opt](const std::string&) { opt.seed_set = true; });
    cmd->add_option("--weights", opt.weights_path, "weight container path");
}

arch_config build_config(const cli_options& opt) {
    arch_config cfg;
    if (opt.arch == "custom") {
        cfg.patch_size = opt.patch;
        cfg.depth = opt.depth;
        cfg.heads = opt.heads;
        cfg.width = opt.width;
    } else {
        cfg = arch_preset(opt.arch);
    }
    cfg.stride = opt.stride > 0 ? opt.stride : cfg.patch_size;
    cfg.mlp_ratio = opt.mlp_ratio;
    cfg.image_w = cfg.image_h = opt.image_size;
    cfg.num_classes = opt.classes;
    cfg.top_o = opt.top_o;
    if (opt.scale_top_o && opt.image_size >= 448)
        cfg.top_o *= opt.image_size / 224; // larger frame, proportionally more patches
    cfg.validate();
    return cfg;
}

// resolve the model: either init from seed or load a container (exactly one)
loaded_weights resolve_model(const cli_options& opt) {
    if (opt.seed_set == !opt.weights_path.empty())
        throw config_error("need exactly one of --seed or --weights");
    if (!opt.weights_path.empty()) {
        loaded_weights lw = load_weights(opt.weights_path);
        if (opt.top_o_set) lw.config.top_o = opt.top_o;
        return lw;
    }
    loaded_weights lw;
    lw.config = build_config(opt);
    lw.weights = init_weights(opt.seed, lw.config);
    return lw;
}

similarity_metric parse_similarity(const std::string& name) {
    if (name == "cosine") return similarity_metric::cosine;
    if (name == "l1") return similarity_metric::l1;
    if (name == "l2") return similarity_metric::l2;
    throw config_error("metric must be cosine, l1 or l2 for this command");
}

image_tensor load_image(const std::string& path, const arch_config& cfg) {
    image_tensor img = decode_ppm(read_file(path));
    if (img.width != cfg.image_w || img.height != cfg.image_h)
        throw data_error("image " + path + " is " + std::to_string(img.width) + "x" +
                         std::to_string(img.height) + ", config wants " +
                         std::to_string(cfg.image_w) + "x" + std::to_string(cfg.image_h));
    return img;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty())
        std::cout << text;
    else
        write_file(out_path, text);
}

void append_rect(json_writer& j, const pixel_rect& r) {
    j.raw("{");
    j.key("x0"); j.number(r.x0); j.raw(",");
    j.key("y0"); j.number(r.y0); j.raw(",");
    j.key("x1"); j.number(r.x1); j.raw(",");
    j.key("y1"); j.number(r.y1);
    j.raw("}");
}

// ---- saliency ----------------------------------------------------------

int run_saliency(const cli_options& opt, const std::string& input,
                 const std::string& heatmap_path, const std::string& scores_path) {
    loaded_weights model = resolve_model(opt);
    const arch_config& cfg = model.config;
    image_tensor img = load_image(input, cfg);
    normalize_image(img);

    const encode_result enc = encode(img, cfg, model.weights, 0);
    saliency_map map;
    if (opt.metric == "rollout") {
        map = rollout_scores(enc.attention);
    } else if (opt.metric == "maws") {
        map = maws_scores(enc.attention);
    } else if (opt.metric == "psm") {
        map = psm_mean_scores(enc.attention);
    } else {
        map = gls_scores(enc.features, parse_similarity(opt.metric));
    }

    const grid_shape grid = grid_dims(cfg);
    const int out_w = opt.upsample ? cfg.image_w : 0;
    const int out_h = opt.upsample ? cfg.image_h : 0;
    write_file(heatmap_path, encode_pgm_heatmap(map.scores, grid.rows, grid.cols, out_w, out_h));

    json_writer j;
    j.number_array(map.scores);
    j.raw("\n");
    emit(j.out, scores_path);
    return 0;
}

// ---- classify -----------------------------------------------------------

std::string classify_one(const std::string& input, const cli_options& opt,
                         const loaded_weights& model) {
    const arch_config& cfg = model.config;
    image_tensor img = load_image(input, cfg);
    normalize_image(img);

    const crop_mode mode =
        opt.crop_mode_name == "random" ? crop_mode::random : crop_mode::gls;
    const std::uint64_t crop_seed =
        opt.crop_seed_set ? opt.crop_seed : (opt.seed_set ? opt.seed : 0);
    const forward_result res =
        glsim_forward(img, cfg, model.weights, parse_similarity(opt.metric), cfg.top_o,
                      mode, crop_seed);

    int cls;
    double prob;
    std::string branch;
    if (opt.mode == "confidence") {
        const selection sel = confidence_select(res.orig_logits, res.crop_logits);
        cls = sel.cls;
        prob = sel.prob;
        branch = sel.source == 0 ? "orig" : "crop";
    } else {
        const auto probs = softmax_probs(res.final_logits);
        cls = 0;
        for (std::size_t i = 1; i < probs.size(); ++i)
            if (probs[i] > probs[cls]) cls = static_cast<int>(i);
        prob = probs[cls];
        branch = "final";
    }

    json_writer j;
    j.raw("{");
    j.key("input"); j.string(input); j.raw(",");
    j.key("class"); j.number(cls); j.raw(",");
    j.key("prob"); j.number(prob); j.raw(",");
    j.key("selected_branch"); j.string(branch); j.raw(",");
    j.key("metric"); j.string(res.saliency.metric_tag); j.raw(",");
    j.key("crop_mode"); j.string(opt.crop_mode_name); j.raw(",");
    j.key("full_image_fallback"); j.raw(res.full_image_fallback ? "true" : "false"); j.raw(",");
    j.key("crop_rect"); append_rect(j, res.crop); j.raw(",");
    j.key("saliency_top_o"); j.number_array(res.top_indices); j.raw(",");
    j.key("branch_logits");
    j.raw("{");
    j.key("orig"); j.number_array(res.orig_logits); j.raw(",");
    j.key("crop"); j.number_array(res.crop_logits); j.raw(",");
    j.key("final"); j.number_array(res.final_logits);
    j.raw("}}");
    return j.out;
}

int run_classify(const cli_options& opt, const std::vector<std::string>& inputs,
                 const std::string& out_path) {
    loaded_weights model = resolve_model(opt);

    std::vector<std::string> results(inputs.size());
    const int jobs = std::min<int>(std::max(1, opt.jobs), static_cast<int>(inputs.size()));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < inputs.size(); ++i)
            results[i] = classify_one(inputs[i], opt, model);
    } else {
        // fan out whole images; outputs land in input order regardless of timing
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(inputs.size());
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < inputs.size();
                     i = next.fetch_add(1)) {
                    try {
                        results[i] = classify_one(inputs[i], opt, model);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    std::string out;
    if (inputs.size() == 1) {
        out = results[0] + "\n";
    } else {
        out = "[";
        for (std::size_t i = 0; i < results.size(); ++i) {
            if (i) out += ",";
            out += results[i];
        }
        out += "]\n";
    }
    emit(out, out_path);
    return 0;
}

// ---- crop ---------------------------------------------------------------

int run_crop(const cli_options& opt, const std::string& input,
             const std::string& out_image, const std::string& out_json) {
    loaded_weights model = resolve_model(opt);
    const arch_config& cfg = model.config;

    const image_tensor raw = load_image(input, cfg); // kept in [0,1] for re-encoding
    image_tensor normed = raw;
    normalize_image(normed);

    const encode_result enc = encode(normed, cfg, model.weights, 0);
    const crop_mode mode =
        opt.crop_mode_name == "random" ? crop_mode::random : crop_mode::gls;
    const std::uint64_t crop_seed =
        opt.crop_seed_set ? opt.crop_seed : (opt.seed_set ? opt.seed : 0);
    const crop_plan plan = plan_crop(enc.features, cfg, parse_similarity(opt.metric),
                                     cfg.top_o, mode, crop_seed);

    write_file(out_image,
               encode_ppm(crop_resize(raw, plan.rect, cfg.image_w, cfg.image_h)));

    json_writer j;
    j.raw("{");
    j.key("crop_rect"); append_rect(j, plan.rect); j.raw(",");
    j.key("indices"); j.number_array(plan.indices); j.raw(",");
    j.key("full_image_fallback"); j.raw(plan.full_image_fallback ? "true" : "false");
    j.raw("}\n");
    emit(j.out, out_json);
    return 0;
}

// ---- cost-table ---------------------------------------------------------

int run_cost_table(const cli_options& opt, std::vector<std::string> arch_names,
                   std::vector<int> sizes, const std::string& out_path) {
    std::vector<cost_arch> archs;
    if (arch_names.empty()) {
        archs = default_cost_archs();
    } else {
        for (const auto& name : arch_names) {
            if (name == "custom") {
                cost_arch a{"custom", opt.patch, opt.depth, opt.heads, opt.width};
                archs.push_back(a);
            } else {
                archs.push_back(cost_preset(name));
            }
        }
    }
    if (sizes.empty()) sizes = {224, 448, 768, 1024};

    const cost_report report = cost_table(archs, sizes);
    if (opt.format == "csv")
        emit(render_cost_csv(report), out_path);
    else
        emit(render_cost_text(report), out_path);
    return 0;
}

// ---- init-weights -------------------------------------------------------

int run_init_weights(const cli_options& opt, const std::string& out_path) {
    if (!opt.seed_set) throw config_error("init-weights requires --seed");
    const arch_config cfg = build_config(opt);
    save_weights(out_path, cfg, init_weights(opt.seed, cfg));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vision transformer saliency, cropping and cost analysis"};
    app.require_subcommand(1);

    cli_options opt;
    std::vector<std::string> inputs;
    std::string out_path, heatmap_path, scores_path, out_image;
    std::vector<std::string> arch_names;
    std::vector<int> sizes;

    CLI::App* sal = app.add_subcommand("saliency", "write a per-patch saliency heatmap");
    add_arch_flags(sal, opt);
    add_model_source_flags(sal, opt);
    sal->add_option("input", inputs, "PPM (P6) image")->required()->expected(1);
    sal->add_option("--metric", opt.metric, "cosine, l1, l2, rollout, maws, psm")
        ->check(CLI::IsMember({"cosine", "l1", "l2", "rollout", "maws", "psm"}));
    sal->add_option("--heatmap", heatmap_path, "output PGM path")->required();
    sal->add_option("--scores", scores_path, "output JSON path (default: stdout)");
    sal->add_flag("--upsample", opt.upsample, "upsample heatmap to the input size");

    CLI::App* cls = app.add_subcommand("classify", "run the two-pass pipeline");
    add_arch_flags(cls, opt);
    add_model_source_flags(cls, opt);
    cls->add_option("inputs", inputs, "PPM (P6) images")->required()->expected(-1);
    cls->add_option("--metric", opt.metric, "similarity: cosine, l1, l2")
        ->check(CLI::IsMember({"cosine", "l1", "l2"}));
    cls->add_option("--top-o", opt.top_o, "patches kept by the selector")
        ->each([&opt](const std::string&) { opt.top_o_set = true; });
    cls->add_flag("--scale-top-o", opt.scale_top_o, "grow the selection with image size");
    cls->add_option("--crop-mode", opt.crop_mode_name, "gls or random")
        ->check(CLI::IsMember({"gls", "random"}));
    cls->add_option("--crop-seed", opt.crop_seed, "seed for random crop mode")
        ->each([&opt](const std::string&) { opt.crop_seed_set = true; });
    cls->add_option("--mode", opt.mode, "aggregate or confidence")
        ->check(CLI::IsMember({"aggregate", "confidence"}));
    cls->add_option("--jobs", opt.jobs, "worker threads for multiple inputs");
    cls->add_option("--output", out_path, "output JSON path (default: stdout)");

    CLI::App* crp = app.add_subcommand("crop", "write the discriminative crop as PPM");
    add_arch_flags(crp, opt);
    add_model_source_flags(crp, opt);
    crp->add_option("input", inputs, "PPM (P6) image")->required()->expected(1);
    crp->add_option("--metric", opt.metric, "similarity: cosine, l1, l2")
        ->check(CLI::IsMember({"cosine", "l1", "l2"}));
    crp->add_option("--top-o", opt.top_o, "patches kept by the selector")
        ->each([&opt](const std::string&) { opt.top_o_set = true; });
    crp->add_flag("--scale-top-o", opt.scale_top_o, "grow the selection with image size");
    crp->add_option("--crop-mode", opt.crop_mode_name, "gls or random")
        ->check(CLI::IsMember({"gls", "random"}));
    crp->add_option("--crop-seed", opt.crop_seed, "seed for random crop mode")
        ->each([&opt](const std::string&) { opt.crop_seed_set = true; });
    crp->add_option("--output", out_image, "output PPM path")->required();
    crp->add_option("--json", out_path, "crop summary JSON path (default: stdout)");

    CLI::App* cost = app.add_subcommand("cost-table", "analytical selector cost model");
    cost->add_option("--arch", arch_names, "B-16, B-14, T-16 or custom (repeatable)");
    cost->add_option("--patch", opt.patch, "custom arch: window side");
    cost->add_option("--depth", opt.depth, "custom arch: transformer blocks");
    cost->add_option("--heads", opt.heads, "custom arch: attention heads");
    cost->add_option("--width", opt.width, "custom arch: embedding dim");
    cost->add_option("--sizes", sizes, "image sizes (default 224 448 768 1024)");
    cost->add_option("--format", opt.format, "text or csv")
        ->check(CLI::IsMember({"text", "csv"}));
    cost->add_option("--output", out_path, "output path (default: stdout)");

    CLI::App* init = app.add_subcommand("init-weights", "write a deterministic weight container");
    add_arch_flags(init, opt);
    init->add_option("--seed", opt.seed, "weight init seed")
        ->required()
        ->each([&opt](const std::string&) { opt.seed_set = true; });
    init->add_option("--output", out_path, "weight container path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (sal->parsed()) return run_saliency(opt, inputs[0], heatmap_path, scores_path);
        if (cls->parsed()) return run_classify(opt, inputs, out_path);
        if (crp->parsed()) return run_crop(opt, inputs[0], out_image, out_path);
        if (cost->parsed()) return run_cost_table(opt, arch_names, sizes, out_path);
        if (init->parsed()) return run_init_weights(opt, out_path);
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
