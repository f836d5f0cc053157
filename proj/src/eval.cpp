#include "finadapt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "finadapt/error.hpp"

namespace finadapt::eval {

WeightedPrfResult weighted_prf(const std::vector<int>& gold, const std::vector<int>& pred,
                               int n_classes) {
    if (gold.empty()) throw data_error("weighted_prf: empty input");
    if (gold.size() != pred.size()) throw data_error("weighted_prf: gold/pred length mismatch");
    if (n_classes < 1) throw data_error("weighted_prf: n_classes must be >= 1");

    std::vector<uint64_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0),
        support(n_classes, 0);
    for (size_t i = 0; i < gold.size(); ++i) {
        const int g = gold[i];
        const int p = pred[i];
        if (g < 0 || g >= n_classes || p < 0 || p >= n_classes) {
            throw data_error("weighted_prf: label out of range");
        }
        ++support[static_cast<size_t>(g)];
        if (g == p) {
            ++tp[static_cast<size_t>(g)];
        } else {
            ++fn[static_cast<size_t>(g)];
            ++fp[static_cast<size_t>(p)];
        }
    }

    WeightedPrfResult out;
    out.per_class.resize(static_cast<size_t>(n_classes));
    out.support = support;
    const double total = static_cast<double>(gold.size());
    for (int c = 0; c < n_classes; ++c) {
        const auto i = static_cast<size_t>(c);
        Prf& m = out.per_class[i];
        const uint64_t pred_count = tp[i] + fp[i];
        const uint64_t gold_count = tp[i] + fn[i];
        m.precision = pred_count == 0 ? 0.0 : static_cast<double>(tp[i]) / pred_count;
        m.recall = gold_count == 0 ? 0.0 : static_cast<double>(tp[i]) / gold_count;
        m.f1 = (m.precision + m.recall) == 0.0
                   ? 0.0
                   : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        const double w = support[i] / total;
        out.weighted.precision += w * m.precision;
        out.weighted.recall += w * m.recall;
        out.weighted.f1 += w * m.f1;
    }
    return out;
}

MultilabelResult multilabel_prf(const std::vector<std::vector<uint8_t>>& gold,
                                const std::vector<std::vector<double>>& probs) {
    if (gold.empty()) throw data_error("multilabel_prf: empty input");
    if (gold.size() != probs.size()) throw data_error("multilabel_prf: size mismatch");
    MultilabelResult out;
    double loss = 0.0;
    uint64_t cells = 0;
    for (size_t i = 0; i < gold.size(); ++i) {
        if (gold[i].size() != probs[i].size()) {
            throw data_error("multilabel_prf: dimension mismatch at example " + std::to_string(i));
        }
        for (size_t c = 0; c < gold[i].size(); ++c) {
            const bool g = gold[i][c] != 0;
            const double p = probs[i][c];
            if (!(p >= 0.0 && p <= 1.0)) throw data_error("multilabel_prf: probability out of [0,1]");
            const bool hit = p > 0.5;
            if (hit && g) ++out.tp;
            if (hit && !g) ++out.fp;
            if (!hit && g) ++out.fn;
            const double eps = 1e-12;
            loss -= g ? std::log(std::max(p, eps)) : std::log(std::max(1.0 - p, eps));
            ++cells;
        }
    }
    out.loss = loss / static_cast<double>(cells);
    out.micro.precision = (out.tp + out.fp) == 0 ? 0.0
                                                 : static_cast<double>(out.tp) / (out.tp + out.fp);
    out.micro.recall = (out.tp + out.fn) == 0 ? 0.0
                                              : static_cast<double>(out.tp) / (out.tp + out.fn);
    out.micro.f1 = (out.micro.precision + out.micro.recall) == 0.0
                       ? 0.0
                       : 2.0 * out.micro.precision * out.micro.recall /
                             (out.micro.precision + out.micro.recall);
    return out;
}

Prf multilabel_prf_binary(const std::vector<std::vector<uint8_t>>& gold,
                          const std::vector<std::vector<uint8_t>>& pred) {
    if (gold.size() != pred.size()) throw data_error("multilabel_prf_binary: size mismatch");
    uint64_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < gold.size(); ++i) {
        if (gold[i].size() != pred[i].size()) {
            throw data_error("multilabel_prf_binary: dimension mismatch");
        }
        for (size_t c = 0; c < gold[i].size(); ++c) {
            const bool g = gold[i][c] != 0;
            const bool h = pred[i][c] != 0;
            if (h && g) ++tp;
            if (h && !g) ++fp;
            if (!h && g) ++fn;
        }
    }
    Prf out;
    out.precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    out.recall = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
    out.f1 = (out.precision + out.recall) == 0.0
                 ? 0.0
                 : 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

SplitIndices chronological_split(const std::vector<std::pair<int64_t, std::string>>& keys,
                                 const SplitConfig& cfg) {
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
        throw data_error("test_fraction must be in (0,1)");
    }
    std::vector<size_t> order(keys.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (keys[a].first != keys[b].first) return keys[a].first < keys[b].first;
        return keys[a].second < keys[b].second;
    });
    const size_t n = keys.size();
    const size_t n_train =
        static_cast<size_t>(std::ceil((1.0 - cfg.test_fraction) * static_cast<double>(n)));
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + static_cast<ptrdiff_t>(n_train));
    out.test.assign(order.begin() + static_cast<ptrdiff_t>(n_train), order.end());
    return out;
}

McNemarResult mcnemar_from_counts(uint64_t b, uint64_t c) {
    McNemarResult out;
    out.b = b;
    out.c = c;
    const uint64_t n = b + c;
    if (n == 0) {
        out.p_value = 1.0;
        out.no_discordance = true;
        return out;
    }
    const uint64_t k_min = std::max(b, c);
    // Upper binomial tail at p=1/2, summed small-to-large for stability.
    const double log_half_n = static_cast<double>(n) * std::log(0.5);
    double tail = 0.0;
    for (uint64_t k = n; k >= k_min; --k) {
        const double log_term = std::lgamma(static_cast<double>(n) + 1.0) -
                                std::lgamma(static_cast<double>(k) + 1.0) -
                                std::lgamma(static_cast<double>(n - k) + 1.0) + log_half_n;
        tail += std::exp(log_term);
        if (k == 0) break;
    }
    out.p_value = std::min(1.0, 2.0 * tail);
    if (out.p_value < 0.001) {
        out.stars = "***";
    } else if (out.p_value < 0.01) {
        out.stars = "**";
    } else if (out.p_value < 0.05) {
        out.stars = "*";
    }
    return out;
}

McNemarResult mcnemar(const std::vector<int>& gold, const std::vector<int>& pred_a,
                      const std::vector<int>& pred_b) {
    if (gold.size() != pred_a.size() || gold.size() != pred_b.size()) {
        throw data_error("mcnemar: prediction lengths must match gold");
    }
    uint64_t b = 0, c = 0;
    for (size_t i = 0; i < gold.size(); ++i) {
        const bool a_ok = pred_a[i] == gold[i];
        const bool b_ok = pred_b[i] == gold[i];
        if (a_ok && !b_ok) ++b;
        if (!a_ok && b_ok) ++c;
    }
    return mcnemar_from_counts(b, c);
}

uint64_t ConfusionMatrix::total() const {
    uint64_t n = 0;
    for (uint64_t x : counts) n += x;
    return n;
}

ConfusionMatrix confusion(const std::vector<int>& gold, const std::vector<int>& pred,
                          int n_classes) {
    if (gold.size() != pred.size()) throw data_error("confusion: gold/pred length mismatch");
    ConfusionMatrix m;
    m.n_classes = n_classes;
    m.counts.assign(static_cast<size_t>(n_classes) * n_classes, 0);
    for (size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] < 0 || gold[i] >= n_classes || pred[i] < 0 || pred[i] >= n_classes) {
            throw data_error("confusion: label out of range");
        }
        ++m.at(gold[i], pred[i]);
    }
    return m;
}

} // namespace finadapt::eval
