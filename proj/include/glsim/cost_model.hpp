#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace glsim {

// discriminative feature selection methods covered by the analytical cost model
enum class dfsm_method { psm, rollout, maws, sacm, gls };

const char* method_name(dfsm_method m);

// the subset of an architecture the cost model needs
struct cost_arch {
    std::string name;
    int patch = 16;
    int depth = 12;
    int heads = 12;
    int width = 768;
};

// "B-16", "B-14", "T-16"; throws config_error on unknown name
cost_arch cost_preset(const std::string& name);
std::vector<cost_arch> default_cost_archs();

// exact flop count of one n x n matrix product: n^2 * (2n - 1)
std::uint64_t matmul_flops(std::uint64_t n);

// token count each method operates on. attention-chain methods that slide the
// window (psm, sacm) use overlapping stride patch-4; gls uses patch tokens only.
std::uint64_t effective_tokens(dfsm_method m, const cost_arch& arch, int image_size);

// analytical selector cost in MFLOPs (1e6 flops):
//   psm:     (L-2) * H * matmul_flops(n_ov)
//   rollout: (L-1) * matmul_flops(n) + L*(H+1)*n^2   (head mean + identity mix)
//   maws:    4.5 * L * H * n                          (calibrated)
//   sacm:    (L*(H-1) + 1) * n_ov^2                   (per-head products + combine)
//   gls:     3 * N * D                                (dot + two norms per patch)
double dfsm_flops(dfsm_method m, const cost_arch& arch, int image_size);

// backbone forward cost in MFLOPs: L*(12*n*D^2 + 2*n^2*D) + 2*N*D*3P^2
double backbone_flops(const cost_arch& arch, int image_size);

struct cost_entry {
    std::string arch;
    int image_size = 0;
    dfsm_method method = dfsm_method::gls;
    double mflops = 0.0;       // exact value
    double pct_backbone = 0.0; // 100 * mflops / backbone
};

struct cost_report {
    std::vector<cost_entry> entries; // arch-major, then size, then method order psm..gls
};

cost_report cost_table(const std::vector<cost_arch>& archs, const std::vector<int>& sizes);

// display helpers: values are kept exact internally and rounded only for output
double round_to_2sf(double x);
std::string format_mflops(double x);             // 2 significant figures, e.g. "8.2e+03"
std::string render_cost_text(const cost_report& report);
std::string render_cost_csv(const cost_report& report);

// signed change in error rate relative to a reference accuracy (percent points
// of the reference error): 100 * ((100-acc) - (100-acc_ref)) / (100-acc_ref).
// throws config_error when acc_ref >= 100 (no reference error to compare to).
double relative_error(double acc, double acc_ref);

} // namespace glsim
