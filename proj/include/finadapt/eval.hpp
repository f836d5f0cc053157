#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace finadapt::eval {

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct WeightedPrfResult {
    std::vector<Prf> per_class;
    std::vector<uint64_t> support; // gold counts per class
    Prf weighted;                  // support-weighted mean of the per-class values
};

// Per-class P/R/F1 (0 when the denominator is 0) averaged with weights
// = gold class support / total. Throws on empty input or out-of-range labels.
WeightedPrfResult weighted_prf(const std::vector<int>& gold, const std::vector<int>& pred,
                               int n_classes);

struct MultilabelResult {
    Prf micro;        // over all (example, class) pairs, threshold 0.5
    double loss = 0.0; // mean binary cross-entropy of the probabilities
    uint64_t tp = 0, fp = 0, fn = 0;
};

MultilabelResult multilabel_prf(const std::vector<std::vector<uint8_t>>& gold,
                                const std::vector<std::vector<double>>& probs);

// Micro P/R/F1 for already-thresholded predictions (no loss term).
Prf multilabel_prf_binary(const std::vector<std::vector<uint8_t>>& gold,
                          const std::vector<std::vector<uint8_t>>& pred);

struct SplitConfig {
    double test_fraction = 0.30;
};

// Sorts by (timestamp, id) ascending; the first ceil((1-f)*N) items train,
// the rest test. Returns index lists into the input order.
struct SplitIndices {
    std::vector<size_t> train;
    std::vector<size_t> test;
};
SplitIndices chronological_split(const std::vector<std::pair<int64_t, std::string>>& keys,
                                 const SplitConfig& cfg);

struct McNemarResult {
    uint64_t b = 0; // A correct, B wrong
    uint64_t c = 0; // A wrong, B correct
    double p_value = 1.0;
    std::string stars;          // "US" thresholds: * <0.05, ** <0.01, *** <0.001
    bool no_discordance = false;
};

// Exact two-sided binomial test on the discordant pairs:
// p = min(1, 2 * P[Bin(b+c, 1/2) >= max(b, c)]).
McNemarResult mcnemar(const std::vector<int>& gold, const std::vector<int>& pred_a,
                      const std::vector<int>& pred_b);
McNemarResult mcnemar_from_counts(uint64_t b, uint64_t c);

struct ConfusionMatrix {
    int n_classes = 0;
    std::vector<uint64_t> counts; // row = gold, column = predicted
    uint64_t& at(int gold, int pred) { return counts[static_cast<size_t>(gold) * n_classes + pred]; }
    uint64_t at(int gold, int pred) const {
        return counts[static_cast<size_t>(gold) * n_classes + pred];
    }
    uint64_t total() const;
};

ConfusionMatrix confusion(const std::vector<int>& gold, const std::vector<int>& pred,
                          int n_classes);

} // namespace finadapt::eval
