#include "glsim/dfsm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "glsim/errors.hpp"

namespace glsim {

saliency_map gls_scores(const feature_sequence& features, similarity_metric metric,
                        flop_counter* counter) {
    const int n = features.seq_len() - 1;
    const int d = features.dim();
    saliency_map map;
    map.scores.resize(n);

    const float* cls = features.cls();
    switch (metric) {
        case similarity_metric::cosine: {
            map.metric_tag = "GLS-cosine";
            for (int i = 0; i < n; ++i) {
                const float* f = features.patch(i);
                // naive per-pair kernel: dot + both norms, 3 MACs per channel
                double dot = 0.0, n0 = 0.0, ni = 0.0;
                for (int c = 0; c < d; ++c) {
                    dot += static_cast<double>(cls[c]) * f[c];
                    n0 += static_cast<double>(cls[c]) * cls[c];
                    ni += static_cast<double>(f[c]) * f[c];
                }
                if (counter) counter->flops += 3ull * d;
                if (n0 == 0.0 || ni == 0.0) {
                    map.scores[i] = 0.0;
                    map.degenerate = true;
                } else {
                    map.scores[i] =
                        std::clamp(dot / (std::sqrt(n0) * std::sqrt(ni)), -1.0, 1.0);
                }
            }
            break;
        }
        case similarity_metric::l1: {
            map.metric_tag = "GLS-L1";
            for (int i = 0; i < n; ++i) {
                const float* f = features.patch(i);
                double acc = 0.0;
                for (int c = 0; c < d; ++c)
                    acc += std::abs(static_cast<double>(cls[c]) - f[c]);
                if (counter) counter->flops += 2ull * d;
                map.scores[i] = -acc;
            }
            break;
        }
        case similarity_metric::l2: {
            map.metric_tag = "GLS-L2";
            for (int i = 0; i < n; ++i) {
                const float* f = features.patch(i);
                double acc = 0.0;
                for (int c = 0; c < d; ++c) {
                    double diff = static_cast<double>(cls[c]) - f[c];
                    acc += diff * diff;
                }
                if (counter) counter->flops += 2ull * d;
                map.scores[i] = -std::sqrt(acc);
            }
            break;
        }
    }
    return map;
}

namespace {

// head-averaged map of one layer, mixed with identity and row-renormalized:
// M = rownorm((mean_h A_h + I) / 2)
std::vector<double> mixed_layer(const attention_stack& attn, int layer) {
    const int s = attn.seq;
    std::vector<double> m(static_cast<std::size_t>(s) * s, 0.0);
    for (int h = 0; h < attn.heads; ++h) {
        const float* a = attn.map(layer, h);
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += a[i];
    }
    const double inv_h = 1.0 / attn.heads;
    for (int i = 0; i < s; ++i) {
        double* row = m.data() + static_cast<std::size_t>(i) * s;
        double sum = 0.0;
        for (int j = 0; j < s; ++j) {
            row[j] = (row[j] * inv_h + (i == j ? 1.0 : 0.0)) * 0.5;
            sum += row[j];
        }
        for (int j = 0; j < s; ++j) row[j] /= sum;
    }
    return m;
}

// c = a * b for s x s row-major doubles
std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b, int s) {
    std::vector<double> c(static_cast<std::size_t>(s) * s, 0.0);
    for (int i = 0; i < s; ++i)
        for (int k = 0; k < s; ++k) {
            const double aik = a[static_cast<std::size_t>(i) * s + k];
            const double* brow = b.data() + static_cast<std::size_t>(k) * s;
            double* crow = c.data() + static_cast<std::size_t>(i) * s;
            for (int j = 0; j < s; ++j) crow[j] += aik * brow[j];
        }
    return c;
}

} // namespace

saliency_map rollout_scores(const attention_stack& attn) {
    const int s = attn.seq;
    std::vector<double> r = mixed_layer(attn, 0);
    for (int l = 1; l < attn.layers; ++l) r = matmul(mixed_layer(attn, l), r, s);

    saliency_map map;
    map.metric_tag = "rollout";
    map.scores.assign(r.begin() + 1, r.begin() + s); // CLS row, patch columns
    return map;
}

head_selection psm_selection(const attention_stack& attn, flop_counter* counter) {
    if (attn.layers < 2)
        throw config_error("per-head chained selection needs at least 2 layers");
    const int s = attn.seq;

    head_selection sel;
    sel.patch_index.resize(attn.heads);
    sel.score.resize(attn.heads);
    for (int h = 0; h < attn.heads; ++h) {
        std::vector<double> prod(attn.map(0, h), attn.map(0, h) + static_cast<std::size_t>(s) * s);
        for (int l = 1; l < attn.layers - 1; ++l) {
            std::vector<double> a(attn.map(l, h), attn.map(l, h) + static_cast<std::size_t>(s) * s);
            prod = matmul(a, prod, s);
            if (counter) counter->matmuls += 1;
        }
        int best = 1;
        double best_v = prod[1];
        for (int j = 2; j < s; ++j)
            if (prod[j] > best_v) {
                best_v = prod[j];
                best = j;
            }
        sel.patch_index[h] = best;
        sel.score[h] = best_v;
    }
    return sel;
}

saliency_map psm_mean_scores(const attention_stack& attn) {
    if (attn.layers < 2)
        throw config_error("per-head chained selection needs at least 2 layers");
    const int s = attn.seq;

    saliency_map map;
    map.metric_tag = "PSM-mean";
    map.scores.assign(s - 1, 0.0);
    for (int h = 0; h < attn.heads; ++h) {
        std::vector<double> prod(attn.map(0, h), attn.map(0, h) + static_cast<std::size_t>(s) * s);
        for (int l = 1; l < attn.layers - 1; ++l) {
            std::vector<double> a(attn.map(l, h), attn.map(l, h) + static_cast<std::size_t>(s) * s);
            prod = matmul(a, prod, s);
        }
        for (int j = 1; j < s; ++j) map.scores[j - 1] += prod[j];
    }
    for (double& v : map.scores) v /= attn.heads;
    return map;
}

saliency_map maws_scores(const attention_stack& attn) {
    const int s = attn.seq;
    const int n = s - 1;
    const int last = attn.layers - 1;

    // head average of the last layer
    std::vector<double> row(n, 0.0), col(n, 0.0);
    for (int h = 0; h < attn.heads; ++h) {
        const float* a = attn.map(last, h);
        for (int j = 0; j < n; ++j) {
            row[j] += a[j + 1];                                   // CLS -> patch j
            col[j] += a[static_cast<std::size_t>(j + 1) * s];     // patch j -> CLS
        }
    }

    saliency_map map;
    map.metric_tag = "MAWS";
    map.scores.assign(n, 1.0 / n);

    const double row_sum = std::accumulate(row.begin(), row.end(), 0.0);
    const double col_sum = std::accumulate(col.begin(), col.end(), 0.0);
    if (row_sum == 0.0 || col_sum == 0.0) {
        map.degenerate = true;
        return map;
    }
    double joint = 0.0;
    for (int j = 0; j < n; ++j) {
        map.scores[j] = (row[j] / row_sum) * (col[j] / col_sum);
        joint += map.scores[j];
    }
    if (joint == 0.0) {
        map.degenerate = true;
        map.scores.assign(n, 1.0 / n);
        return map;
    }
    for (double& v : map.scores) v /= joint;
    return map;
}

std::vector<int> top_o(const saliency_map& map, int o) {
    const int n = static_cast<int>(map.scores.size());
    if (o < 1 || o > n) throw config_error("selection count out of range");

    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (map.scores[a] != map.scores[b]) return map.scores[a] > map.scores[b];
        return a < b; // deterministic tie-break toward the lower index
    });
    idx.resize(o);
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace glsim
