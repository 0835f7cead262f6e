#include "glsim/cost_model.hpp"

#include <cmath>
#include <cstdio>

#include "glsim/arch.hpp"
#include "glsim/errors.hpp"

namespace glsim {

const char* method_name(dfsm_method m) {
    switch (m) {
        case dfsm_method::psm: return "PSM";
        case dfsm_method::rollout: return "Rollout";
        case dfsm_method::maws: return "MAWS";
        case dfsm_method::sacm: return "SACM";
        case dfsm_method::gls: return "GLS";
    }
    return "?";
}

cost_arch cost_preset(const std::string& name) {
    if (name == "B-16" || name == "b16") return {"B-16", 16, 12, 12, 768};
    if (name == "B-14" || name == "b14") return {"B-14", 14, 12, 12, 768};
    if (name == "T-16" || name == "t16") return {"T-16", 16, 12, 3, 192};
    throw config_error("unknown cost-model preset: " + name);
}

std::vector<cost_arch> default_cost_archs() {
    return {cost_preset("B-16"), cost_preset("B-14"), cost_preset("T-16")};
}

std::uint64_t matmul_flops(std::uint64_t n) {
    return n * n * (2 * n - 1);
}

static std::uint64_t tokens_nonoverlap(const cost_arch& arch, int image_size) {
    const grid_shape g = grid_dims(image_size, image_size, arch.patch, arch.patch);
    return static_cast<std::uint64_t>(g.patches()) + 1;
}

static std::uint64_t tokens_overlap(const cost_arch& arch, int image_size) {
    // sliding-window variants step by patch-4
    const grid_shape g = grid_dims(image_size, image_size, arch.patch, arch.patch - 4);
    return static_cast<std::uint64_t>(g.patches()) + 1;
}

std::uint64_t effective_tokens(dfsm_method m, const cost_arch& arch, int image_size) {
    switch (m) {
        case dfsm_method::psm:
        case dfsm_method::sacm:
            return tokens_overlap(arch, image_size);
        case dfsm_method::rollout:
        case dfsm_method::maws:
            return tokens_nonoverlap(arch, image_size);
        case dfsm_method::gls:
            return tokens_nonoverlap(arch, image_size) - 1; // patch tokens only
    }
    return 0;
}

double dfsm_flops(dfsm_method m, const cost_arch& arch, int image_size) {
    const double L = arch.depth;
    const double H = arch.heads;
    const std::uint64_t n = effective_tokens(m, arch, image_size);
    double flops = 0.0;
    switch (m) {
        case dfsm_method::psm:
            flops = (L - 2) * H * static_cast<double>(matmul_flops(n));
            break;
        case dfsm_method::rollout:
            // chain product plus per-layer head averaging and identity mixing
            flops = (L - 1) * static_cast<double>(matmul_flops(n)) +
                    L * (H + 1) * static_cast<double>(n) * static_cast<double>(n);
            break;
        case dfsm_method::maws:
            flops = 4.5 * L * H * static_cast<double>(n);
            break;
        case dfsm_method::sacm:
            // H-1 element-wise head products per layer plus one combine pass
            flops = (L * (H - 1) + 1) * static_cast<double>(n) * static_cast<double>(n);
            break;
        case dfsm_method::gls:
            flops = 3.0 * static_cast<double>(n) * arch.width;
            break;
    }
    return flops / 1e6;
}

double backbone_flops(const cost_arch& arch, int image_size) {
    const std::uint64_t n = tokens_nonoverlap(arch, image_size); // patches + CLS
    const std::uint64_t N = n - 1;
    const std::uint64_t D = static_cast<std::uint64_t>(arch.width);
    const std::uint64_t P = static_cast<std::uint64_t>(arch.patch);
    const std::uint64_t per_layer = 12 * n * D * D + 2 * n * n * D;
    const std::uint64_t embed = 2 * N * D * 3 * P * P;
    return static_cast<double>(arch.depth * per_layer + embed) / 1e6;
}

cost_report cost_table(const std::vector<cost_arch>& archs, const std::vector<int>& sizes) {
    static constexpr dfsm_method methods[] = {dfsm_method::psm, dfsm_method::rollout,
                                              dfsm_method::maws, dfsm_method::sacm,
                                              dfsm_method::gls};
    cost_report report;
    for (const auto& arch : archs) {
        for (int size : sizes) {
            const double backbone = backbone_flops(arch, size);
            for (dfsm_method m : methods) {
                cost_entry e;
                e.arch = arch.name;
                e.image_size = size;
                e.method = m;
                e.mflops = dfsm_flops(m, arch, size);
                e.pct_backbone = 100.0 * e.mflops / backbone;
                report.entries.push_back(e);
            }
        }
    }
    return report;
}

double round_to_2sf(double x) {
    if (x == 0.0) return 0.0;
    const double e = std::floor(std::log10(std::abs(x)));
    const double scale = std::pow(10.0, e - 1.0);
    return std::round(x / scale) * scale;
}

std::string format_mflops(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1e", x);
    return buf;
}

static std::string format_pct(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.5g", x);
    return buf;
}

std::string render_cost_text(const cost_report& report) {
    static constexpr dfsm_method methods[] = {dfsm_method::psm, dfsm_method::rollout,
                                              dfsm_method::maws, dfsm_method::sacm,
                                              dfsm_method::gls};
    std::string out;
    std::string cur_arch;
    char buf[64];
    auto pad_left = [&buf](const std::string& s) {
        std::snprintf(buf, sizeof(buf), "%12s", s.c_str());
        return std::string(buf);
    };
    auto pad_right = [&buf](const std::string& s) {
        std::snprintf(buf, sizeof(buf), "%-24s", s.c_str());
        return std::string(buf);
    };
    for (std::size_t i = 0; i < report.entries.size(); ) {
        const auto& first = report.entries[i];
        if (first.arch != cur_arch) {
            cur_arch = first.arch;
            if (!out.empty()) out += '\n';
            out += "Arch " + cur_arch + "\n" + pad_right("");
            for (dfsm_method m : methods) out += pad_left(method_name(m));
            out += '\n';
        }
        std::string flops_row = pad_right("MFLOPs (IS=" + std::to_string(first.image_size) + ")");
        std::string pct_row = pad_right("  % of backbone");
        for (std::size_t k = 0; k < 5 && i < report.entries.size(); ++k, ++i) {
            flops_row += pad_left(format_mflops(report.entries[i].mflops));
            pct_row += pad_left(format_pct(report.entries[i].pct_backbone));
        }
        out += flops_row + '\n' + pct_row + '\n';
    }
    return out;
}

std::string render_cost_csv(const cost_report& report) {
    std::string out = "arch,image_size,method,mflops,pct_backbone\n";
    char buf[128];
    for (const auto& e : report.entries) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%s,%.9g,%.9g\n", e.arch.c_str(),
                      e.image_size, method_name(e.method), e.mflops, e.pct_backbone);
        out += buf;
    }
    return out;
}

double relative_error(double acc, double acc_ref) {
    if (acc_ref >= 100.0)
        throw config_error("reference accuracy must be below 100");
    return 100.0 * ((100.0 - acc) - (100.0 - acc_ref)) / (100.0 - acc_ref);
}

} // namespace glsim
