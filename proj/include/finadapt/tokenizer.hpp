#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace finadapt::tok {

// Special token ids are fixed; everything downstream (masking, packing,
// classification inputs) relies on this order.
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr int kMaskId = 4;
inline constexpr int kNumSpecials = 5;

inline constexpr const char* kSpecialTokens[kNumSpecials] = {
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
};

// Words longer than this many codepoints become [UNK] outright.
inline constexpr size_t kMaxWordChars = 100;

class Vocab {
public:
    Vocab() = default;
    explicit Vocab(std::vector<std::string> tokens, bool cased = true);

    int size() const { return static_cast<int>(tokens_.size()); }
    const std::string& piece(int id) const;
    // -1 when absent.
    int id(std::string_view piece) const;
    bool cased() const { return cased_; }
    const std::vector<std::string>& tokens() const { return tokens_; }

    // Throws unless: tokens unique, specials at ids 0..4 in the fixed order,
    // every visible ASCII character present as a single-char token.
    void check() const;

    // One token per line, line number = id.
    void save(const std::string& path) const;
    static Vocab load(const std::string& path, bool cased = true);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    bool cased_ = true;
};

struct TokenSeq {
    std::vector<int> ids;
    std::vector<std::string> pieces;
    std::vector<uint8_t> word_starts; // 1 where a new source word begins
};

struct BuildVocabOptions {
    bool cased = true;
    // Whole-word tokens registered right after the specials (e.g. a company
    // placeholder), exempt from segmentation budgeting.
    std::vector<std::string> reserved;
};

// Frequency-based pair merging over whitespace words. Single characters seen
// in the corpus plus all visible ASCII (in both initial and "##" continuation
// form) seed the inventory; merges then fill the budget, most frequent pair
// first, ties broken by lexicographically smallest pair. Deterministic given
// the corpus.
Vocab build_vocab(const std::vector<std::string>& sentences, int target_size,
                  const BuildVocabOptions& opts = {});

// Greedy longest-match-first segmentation; unmatched or over-long words
// become a single [UNK] piece.
TokenSeq tokenize(std::string_view text, const Vocab& vocab);

std::vector<std::string> ids_to_pieces(const std::vector<int>& ids, const Vocab& vocab);
std::vector<int> pieces_to_ids(const std::vector<std::string>& pieces, const Vocab& vocab);

// Joins pieces, removing "##" and inserting a single space at word starts.
std::string pieces_to_text(const std::vector<std::string>& pieces);

// Whitespace tokenization shared with alignment handling: Unicode-space
// separated, order preserved.
std::vector<std::string> split_words(std::string_view text);

} // namespace finadapt::tok
