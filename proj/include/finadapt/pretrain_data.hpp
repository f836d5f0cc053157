#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finadapt/rng.hpp"

namespace finadapt::pretrain {

struct PretrainDataConfig {
    int max_seq_len = 128;
    int dup_factor = 10;
    double mask_prob = 0.15;
    int max_masks_per_seq = 0; // 0 -> ceil(mask_prob * max_seq_len)
    uint64_t rng_seed = 0;

    int effective_max_masks() const;
    void check() const;
};

struct PretrainExample {
    std::vector<uint32_t> input_ids;      // [max_seq_len], right-padded with [PAD]
    std::vector<uint8_t> input_mask;      // 1 exactly on non-pad positions
    std::vector<uint8_t> segment_ids;     // 0 for [CLS] A [SEP], 1 for B [SEP], 0 on pads
    std::vector<uint16_t> masked_positions; // strictly increasing
    std::vector<uint32_t> masked_label_ids; // original ids at masked positions
    uint8_t is_random_next = 0;

    int seq_len() const; // count of non-pad positions
};

// Structural invariants: layout, contiguous mask, masked positions never on
// [CLS]/[SEP]/[PAD]. vocab_size of 0 skips the id-range check. Throws on
// violation.
void validate_example(const PretrainExample& ex, int max_seq_len, int vocab_size = 0);

// One document = its sentences, each already tokenized to ids.
using TokenizedDoc = std::vector<std::vector<int>>;

struct SentencePair {
    std::vector<int> seg_a;
    std::vector<int> seg_b;
    bool random_next = false;
};

// Removes tokens from the end of the longer segment (ties: segment B) until
// the pair fits; each segment keeps at least one token.
void truncate_pair(std::vector<int>& a, std::vector<int>& b, int max_tokens);

// Packs consecutive sentences into segment A up to a random target length;
// B is the true continuation or, with probability 0.5, sentences from a
// different document. Throws "insufficient sentences for NSP" when no pair
// can be formed at all.
std::vector<SentencePair> make_sentence_pairs(const std::vector<TokenizedDoc>& docs,
                                              const PretrainDataConfig& cfg, Rng& rng);

PretrainExample apply_masking(const SentencePair& pair, const PretrainDataConfig& cfg,
                              int vocab_size, Rng& rng);

// dup_factor full passes, each with rng streams keyed (seed, duplicate_index)
// for pairing and (seed, duplicate_index, record_index) for masking.
std::vector<PretrainExample> generate(const std::vector<TokenizedDoc>& docs,
                                      const PretrainDataConfig& cfg, int vocab_size);

// Binary record file: magic "FADR", u16 format version, u16 max_seq_len;
// per record a little-endian u32 payload length followed by the fields in
// fixed order. Byte-identical across platforms.
inline constexpr uint16_t kRecordFormatVersion = 1;

void write_records(const std::vector<PretrainExample>& examples, int max_seq_len,
                   const std::string& path);
std::vector<PretrainExample> read_records(const std::string& path, int* max_seq_len_out = nullptr);

} // namespace finadapt::pretrain
