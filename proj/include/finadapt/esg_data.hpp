#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace finadapt::esg {

// The 20 controversy categories, integer codes in source order.
enum class EsgLabel : int {
    accounting = 0,
    anti_competition,
    business_ethics,
    consumer_complaints,
    customer_health_safety,
    diversity_opportunity,
    employee_health_safety,
    environmental,
    general_shareholder_rights,
    human_rights,
    insider_dealings,
    intellectual_property,
    management_compensation,
    management_departures,
    no_controversy,
    privacy,
    public_health,
    responsible_marketing,
    tax_fraud,
    wages_working_condition,
};

inline constexpr int kNumEsgLabels = 20;

const char* esg_label_name(EsgLabel label);
EsgLabel esg_label_from_name(const std::string& name);

// The 14 SDG ids that appear in the mapping, ascending; multi-label target
// vectors use this column order.
const std::array<int, 14>& sdg_label_space();
int sdg_column(int sdg_id); // index into the 14-dim vector, -1 if unmapped

// SDG ids (ascending) for a label; empty for the 11 unmapped categories.
const std::vector<int>& map_esg_to_sdg(EsgLabel label);

// Reference per-class article counts (defaults for synthetic proportions).
uint32_t esg_reference_count(EsgLabel label);

// Asserts: exactly 9 labels map to non-empty sets; the union holds exactly
// 14 distinct SDGs. Called once at static-init time and available to tests.
void check_mapping();

struct Provenance {
    enum class Kind { original, augmented };
    Kind kind = Kind::original;
    std::string origin_id; // augmented only
    double temperature = 0.0;
    int sample_index = 0;
};

struct LabeledArticle {
    std::string id;
    int64_t timestamp = 0; // epoch seconds; required for chronological splits
    std::string text;
    EsgLabel esg_label = EsgLabel::no_controversy;
    Provenance provenance;

    std::vector<int> sdg_labels() const { return map_esg_to_sdg(esg_label); }
};

// JSONL, sharing the corpus module's encoding plus label/provenance fields.
std::string labeled_to_json(const LabeledArticle& a);
LabeledArticle labeled_from_json(const std::string& line);
std::vector<LabeledArticle> read_labeled(const std::string& path);
void write_labeled(const std::vector<LabeledArticle>& articles, const std::string& path);

struct MultilabelExample {
    std::string id;
    int64_t timestamp = 0;
    std::string text;
    std::vector<uint8_t> targets; // 14-dim indicator, sdg_label_space() order
};

// Keeps only articles whose label maps to a non-empty SDG set.
std::vector<MultilabelExample> build_multilabel_dataset(const std::vector<LabeledArticle>& articles);

// Collapses the SDG columns {6,12,13,14,15} into a single class by logical
// OR; output columns are the 9 unmerged SDGs in ascending order followed by
// the merged environmental class (10 columns).
std::vector<uint8_t> merge_environmental_row(const std::vector<uint8_t>& row14);
void merge_environmental_sdgs(std::vector<std::vector<uint8_t>>& predictions,
                              std::vector<std::vector<uint8_t>>& gold);

// Synthetic stand-in for the proprietary labeled corpus: template articles
// with class-distinctive keyword pools, a company placeholder token, and
// interleaved timestamps. Deterministic given the seed.
struct SynthOptions {
    std::vector<double> proportions;        // per class; empty = reference counts
    std::vector<std::string> filler_words;  // empty = built-in lexicon
    std::string placeholder = "[COMPANY]";
    int64_t start_timestamp = 1325376000;   // 2012-01-01T00:00:00Z
    int64_t timestamp_step = 3600;
    int keyword_count_min = 3;
    int keyword_count_max = 6;
};

std::vector<LabeledArticle> generate_synthetic_dataset(uint64_t seed, int size,
                                                       const SynthOptions& opts = {});

// Keyword variants the generator draws from for one class; the toy synonym
// translator builds its families from the same pools.
std::vector<std::string> class_keyword_pool(EsgLabel label);

} // namespace finadapt::esg
