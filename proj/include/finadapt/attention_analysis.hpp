#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "finadapt/model.hpp"

namespace finadapt::attn {

struct TextAttention {
    std::vector<std::string> pieces;
    std::vector<uint8_t> word_starts; // parallel to pieces
    model::AttentionTensor attention; // [layers][heads][L][L], L = pieces count
};

struct AttentionDump {
    std::string model_id;
    int n_layers = 0;
    int n_heads = 0;
    std::vector<TextAttention> texts;
};

// Binary dump: magic "FAAD", u16 version, model id, u16 layers/heads,
// u32 text count; per text the pieces, a word-start bitmask and the f32
// little-endian attention tensor.
inline constexpr uint16_t kDumpFormatVersion = 1;
void write_dump(const AttentionDump& dump, const std::string& path);
AttentionDump read_dump(const std::string& path);

struct HeadSimMatrix {
    int n_layers = 0;
    int n_heads = 0;
    std::vector<double> v; // [layer][head]
    double& at(int l, int h) { return v[static_cast<size_t>(l) * n_heads + h]; }
    double at(int l, int h) const { return v[static_cast<size_t>(l) * n_heads + h]; }
};

// Per (layer, head): cosine similarity of the row-major-flattened LxL
// matrices, averaged over texts. Both dumps must cover the same texts with
// identical tokenization; a mismatch names the first differing text.
HeadSimMatrix head_cosine_similarity(const AttentionDump& a, const AttentionDump& b);

// Word-level attention: attention TO a split word sums over its pieces
// (columns first), attention FROM a split word averages its rows. Row
// stochasticity is preserved. W counts [CLS]/[SEP] as singleton words.
model::AttentionTensor recombine_wordpiece_attention(const model::AttentionTensor& t,
                                                     const std::vector<uint8_t>& word_starts);

enum class TagClass { entity, pos, dep };

struct TagAlignment {
    std::vector<std::string> words; // whitespace words of the original text
    std::vector<std::string> entity, pos, dep;
};

// Alignment file: one word per line, "word<TAB>entity<TAB>pos<TAB>dep";
// blank line separates texts.
std::vector<TagAlignment> read_alignments(const std::string& path);
void write_alignments(const std::vector<TagAlignment>& alignments, const std::string& path);

struct TagFrequencyResult {
    int n_layers = 0;
    int n_heads = 0;
    std::vector<std::string> tags;    // distinct tag values, sorted
    std::vector<uint64_t> totals;     // occurrences per tag (head-independent)
    std::vector<uint64_t> attended;   // [tag][layer][head]

    uint64_t attended_at(size_t tag, int l, int h) const {
        return attended[(tag * n_layers + static_cast<size_t>(l)) * n_heads + h];
    }
    double frequency(size_t tag, int l, int h) const {
        return totals[tag] == 0 ? 0.0
                                : static_cast<double>(attended_at(tag, l, h)) /
                                      static_cast<double>(totals[tag]);
    }
};

// A word is "attended" by a head in a text when it receives the maximum
// attention mass from some source word and that mass exceeds `threshold`
// (word-level attention, computed after recombination). Frequencies are per
// (layer, head), per tag value. include_special keeps [CLS]/[SEP] in the
// argmax competition.
TagFrequencyResult tag_attention_frequency(const AttentionDump& dump,
                                           const std::vector<TagAlignment>& alignments,
                                           TagClass tag_class, double threshold = 0.3,
                                           bool include_special = true);

// Layer-major CSV with header labels; 6 decimal places.
void emit_heatmap_csv(const HeadSimMatrix& m, const std::string& path);
HeadSimMatrix read_heatmap_csv(const std::string& path);

void write_tag_frequency_csv(const TagFrequencyResult& r, const std::string& path);

} // namespace finadapt::attn
