#include "finadapt/esg_data.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "finadapt/error.hpp"
#include "finadapt/rng.hpp"
#include "finadapt/time_util.hpp"

namespace finadapt::esg {

using nlohmann::json;

namespace {

const char* kLabelNames[kNumEsgLabels] = {
    "Accounting",
    "Anti-Competition",
    "Business Ethics",
    "Consumer Complaints",
    "Customer Health & Safety",
    "Diversity & Opportunity",
    "Employee Health & Safety",
    "Environmental",
    "General Shareholder Rights",
    "Human Rights",
    "Insider Dealings",
    "Intellectual Property",
    "Management Compensation",
    "Management Departures",
    "No Controversy",
    "Privacy",
    "Public Health",
    "Responsible Marketing",
    "Tax Fraud",
    "Wages or Working Condition",
};

const std::vector<int> kSdgMapping[kNumEsgLabels] = {
    /* Accounting */ {},
    /* Anti-Competition */ {},
    /* Business Ethics */ {16},
    /* Consumer Complaints */ {},
    /* Customer Health & Safety */ {3},
    /* Diversity & Opportunity */ {5, 9},
    /* Employee Health & Safety */ {3},
    /* Environmental */ {2, 3, 6, 11, 12, 13, 14, 15},
    /* General Shareholder Rights */ {},
    /* Human Rights */ {1, 2, 8},
    /* Insider Dealings */ {},
    /* Intellectual Property */ {},
    /* Management Compensation */ {},
    /* Management Departures */ {},
    /* No Controversy */ {},
    /* Privacy */ {},
    /* Public Health */ {3, 11},
    /* Responsible Marketing */ {1, 3, 4},
    /* Tax Fraud */ {},
    /* Wages or Working Condition */ {8},
};

const uint32_t kReferenceCounts[kNumEsgLabels] = {
    386, 2945, 4672, 1386, 1479, 904, 1427, 571, 694, 340,
    422, 1875, 398, 4082, 5501, 791, 633, 1134, 481, 1484,
};

const std::array<int, 14> kSdgSpace = {1, 2, 3, 4, 5, 6, 8, 9, 11, 12, 13, 14, 15, 16};

// Environmental sub-goals treated as one class during merged validation.
const std::set<int> kMergedEnvSdgs = {6, 12, 13, 14, 15};

const bool kMappingChecked = [] {
    check_mapping();
    return true;
}();

} // namespace

const char* esg_label_name(EsgLabel label) {
    const int i = static_cast<int>(label);
    if (i < 0 || i >= kNumEsgLabels) throw data_error("invalid ESG label code");
    return kLabelNames[i];
}

EsgLabel esg_label_from_name(const std::string& name) {
    for (int i = 0; i < kNumEsgLabels; ++i) {
        if (name == kLabelNames[i]) return static_cast<EsgLabel>(i);
    }
    throw data_error("unknown ESG label: '" + name + "'");
}

const std::array<int, 14>& sdg_label_space() { return kSdgSpace; }

int sdg_column(int sdg_id) {
    for (size_t i = 0; i < kSdgSpace.size(); ++i) {
        if (kSdgSpace[i] == sdg_id) return static_cast<int>(i);
    }
    return -1;
}

const std::vector<int>& map_esg_to_sdg(EsgLabel label) {
    const int i = static_cast<int>(label);
    if (i < 0 || i >= kNumEsgLabels) throw data_error("invalid ESG label code");
    return kSdgMapping[i];
}

uint32_t esg_reference_count(EsgLabel label) {
    return kReferenceCounts[static_cast<int>(label)];
}

void check_mapping() {
    int mapped = 0;
    std::set<int> distinct;
    for (int i = 0; i < kNumEsgLabels; ++i) {
        const auto& sdgs = kSdgMapping[i];
        if (!sdgs.empty()) ++mapped;
        if (!std::is_sorted(sdgs.begin(), sdgs.end())) {
            throw data_error("SDG mapping not in ascending order");
        }
        for (int s : sdgs) {
            if (s < 1 || s > 17) throw data_error("SDG id out of 1..17");
            distinct.insert(s);
        }
    }
    if (mapped != 9) throw data_error("expected 9 mapped ESG labels, got " + std::to_string(mapped));
    if (distinct.size() != 14) {
        throw data_error("expected 14 distinct SDGs, got " + std::to_string(distinct.size()));
    }
}

// ---- JSONL ----

std::string labeled_to_json(const LabeledArticle& a) {
    json j;
    j["id"] = a.id;
    j["timestamp"] = format_timestamp(a.timestamp);
    j["text"] = a.text;
    j["esg_label"] = esg_label_name(a.esg_label);
    if (a.provenance.kind == Provenance::Kind::original) {
        j["provenance"] = json{{"kind", "original"}};
    } else {
        j["provenance"] = json{{"kind", "augmented"},
                               {"origin", a.provenance.origin_id},
                               {"temperature", a.provenance.temperature},
                               {"sample", a.provenance.sample_index}};
    }
    return j.dump();
}

LabeledArticle labeled_from_json(const std::string& line) {
    json j = json::parse(line);
    LabeledArticle a;
    a.id = j.at("id").get<std::string>();
    a.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
    a.text = j.at("text").get<std::string>();
    a.esg_label = esg_label_from_name(j.at("esg_label").get<std::string>());
    if (j.contains("provenance")) {
        const json& p = j["provenance"];
        if (p.at("kind").get<std::string>() == "augmented") {
            a.provenance.kind = Provenance::Kind::augmented;
            a.provenance.origin_id = p.at("origin").get<std::string>();
            a.provenance.temperature = p.at("temperature").get<double>();
            a.provenance.sample_index = p.at("sample").get<int>();
        }
    }
    return a;
}

std::vector<LabeledArticle> read_labeled(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open dataset: " + path);
    std::vector<LabeledArticle> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(labeled_from_json(line));
        } catch (const std::exception& e) {
            throw data_error(path + ":" + std::to_string(lineno) + ": bad record: " + e.what());
        }
    }
    return out;
}

void write_labeled(const std::vector<LabeledArticle>& articles, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open output dataset: " + path);
    for (const auto& a : articles) out << labeled_to_json(a) << "\n";
}

// ---- multi-label construction ----

std::vector<MultilabelExample> build_multilabel_dataset(const std::vector<LabeledArticle>& articles) {
    std::vector<MultilabelExample> out;
    for (const auto& a : articles) {
        const auto& sdgs = map_esg_to_sdg(a.esg_label);
        if (sdgs.empty()) continue;
        MultilabelExample ex;
        ex.id = a.id;
        ex.timestamp = a.timestamp;
        ex.text = a.text;
        ex.targets.assign(kSdgSpace.size(), 0);
        for (int s : sdgs) ex.targets[static_cast<size_t>(sdg_column(s))] = 1;
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<uint8_t> merge_environmental_row(const std::vector<uint8_t>& row14) {
    if (row14.size() != kSdgSpace.size()) {
        throw data_error("merge expects a 14-dim label row");
    }
    std::vector<uint8_t> out;
    out.reserve(10);
    uint8_t env = 0;
    for (size_t i = 0; i < kSdgSpace.size(); ++i) {
        if (kMergedEnvSdgs.count(kSdgSpace[i])) {
            env |= row14[i];
        } else {
            out.push_back(row14[i]);
        }
    }
    out.push_back(env);
    return out;
}

void merge_environmental_sdgs(std::vector<std::vector<uint8_t>>& predictions,
                              std::vector<std::vector<uint8_t>>& gold) {
    for (auto& row : predictions) row = merge_environmental_row(row);
    for (auto& row : gold) row = merge_environmental_row(row);
}

// ---- synthetic generator ----

namespace {

// Distinct keyword roots, one per class, kept short so the subword vocabulary
// merges them back into compact units.
const char* kClassRoots[kNumEsgLabels] = {
    "ledger", "cartel",  "bribe",   "refund",  "recall",  "parity",  "hazmat",
    "spill",  "proxy",   "forced",  "tipoff",  "patent",  "bonus",   "resign",
    "steady", "leak",    "toxin",   "misad",   "evasion", "picket",
};

const std::vector<std::string> kDefaultFiller = {
    "the",     "company", "said",    "on",      "monday",  "regulators", "report",
    "after",   "a",       "probe",   "into",    "its",     "quarterly",  "results",
    "shares",  "fell",    "while",   "analysts", "expect", "further",    "review",
    "of",      "business", "units",  "this",    "year",    "according",  "to",
    "sources", "familiar", "with",   "matter",
};

std::string keyword_variant(EsgLabel label, int variant) {
    static const char* suffixes[4] = {"on", "al", "ive", "ora"};
    return std::string(kClassRoots[static_cast<int>(label)]) + suffixes[variant % 4];
}

std::string capitalized(std::string w) {
    if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
    return w;
}

} // namespace

std::vector<std::string> class_keyword_pool(EsgLabel label) {
    std::vector<std::string> pool;
    for (int v = 0; v < 4; ++v) pool.push_back(keyword_variant(label, v));
    return pool;
}

std::vector<LabeledArticle> generate_synthetic_dataset(uint64_t seed, int size,
                                                       const SynthOptions& opts) {
    if (size < 0) throw data_error("size must be >= 0");
    std::vector<double> props = opts.proportions;
    if (props.empty()) {
        double total = 0.0;
        for (int i = 0; i < kNumEsgLabels; ++i) total += kReferenceCounts[i];
        for (int i = 0; i < kNumEsgLabels; ++i) {
            props.push_back(kReferenceCounts[i] / total);
        }
    }
    if (static_cast<int>(props.size()) != kNumEsgLabels) {
        throw data_error("proportions must have one entry per ESG class");
    }
    double sum = 0.0;
    for (double p : props) {
        if (p < 0.0) throw data_error("proportions must be >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw data_error("proportions must sum to 1");

    // Largest-remainder allocation of `size` across classes.
    std::vector<int> counts(kNumEsgLabels, 0);
    std::vector<std::pair<double, int>> remainders;
    int allocated = 0;
    for (int i = 0; i < kNumEsgLabels; ++i) {
        const double exact = props[i] * size;
        counts[i] = static_cast<int>(exact);
        allocated += counts[i];
        remainders.push_back({exact - counts[i], i});
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int k = 0; k < size - allocated; ++k) counts[remainders[static_cast<size_t>(k)].second]++;

    std::vector<EsgLabel> labels;
    labels.reserve(static_cast<size_t>(size));
    for (int i = 0; i < kNumEsgLabels; ++i) {
        for (int k = 0; k < counts[i]; ++k) labels.push_back(static_cast<EsgLabel>(i));
    }
    Rng order_rng = Rng::from_key({seed, 0x4f52});
    order_rng.shuffle(labels); // decorrelates class and timestamp

    const std::vector<std::string>& filler =
        opts.filler_words.empty() ? kDefaultFiller : opts.filler_words;

    std::vector<LabeledArticle> out;
    out.reserve(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) {
        const EsgLabel label = labels[i];
        Rng rng = Rng::from_key({seed, 0x4152, i});
        const auto pool = class_keyword_pool(label);
        const int n_keywords = static_cast<int>(
            rng.uniform_int(opts.keyword_count_min, opts.keyword_count_max));

        // Two sentences: a placeholder lead and a keyword-bearing body.
        std::string text = capitalized(filler[rng.below(filler.size())]) + " " +
                           filler[rng.below(filler.size())] + " " + opts.placeholder + " " +
                           filler[rng.below(filler.size())] + " " +
                           pool[rng.below(pool.size())] + " " + filler[rng.below(filler.size())] +
                           ".";
        std::string second = capitalized(filler[rng.below(filler.size())]);
        for (int k = 1; k < n_keywords; ++k) {
            second += " " + filler[rng.below(filler.size())];
            second += " " + pool[rng.below(pool.size())];
        }
        second += " " + filler[rng.below(filler.size())] + ".";
        text += " " + second;

        LabeledArticle a;
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "synth-%06zu", i);
        a.id = idbuf;
        a.timestamp = opts.start_timestamp + static_cast<int64_t>(i) * opts.timestamp_step;
        a.text = std::move(text);
        a.esg_label = label;
        out.push_back(std::move(a));
    }
    return out;
}

} // namespace finadapt::esg
