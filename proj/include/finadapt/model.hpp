#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "finadapt/rng.hpp"

namespace finadapt::model {

struct ModelConfig {
    int n_layers = 4;
    int n_heads = 4;
    int hidden = 64;
    int ffn_hidden = 256;
    int vocab_size = 0;
    int max_positions = 128;
    int n_segments = 2;
    double dropout_prob = 0.1;
    int n_classes = 0; // 0 = no classification head

    int head_dim() const { return hidden / n_heads; }
    void check() const;
    bool operator==(const ModelConfig&) const = default;
};

template <typename T>
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<T> v;

    void resize(int r, int c) {
        rows = r;
        cols = c;
        v.assign(static_cast<size_t>(r) * c, T(0));
    }
    T& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    T* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }
    const T* row(int r) const { return v.data() + static_cast<size_t>(r) * cols; }
    size_t size() const { return v.size(); }
};

template <typename T>
struct Params {
    ModelConfig cfg;

    Tensor<T> tok_emb; // [vocab, hidden]; also the (tied) MLM output weights
    Tensor<T> pos_emb; // [max_positions, hidden]
    Tensor<T> seg_emb; // [n_segments, hidden]
    Tensor<T> emb_ln_g, emb_ln_b;

    struct Layer {
        Tensor<T> wq, bq, wk, bk, wv, bv; // [H,H] / [H]
        Tensor<T> wo, bo;
        Tensor<T> ln1_g, ln1_b;
        Tensor<T> w1, b1; // [H,F] / [F]
        Tensor<T> w2, b2; // [F,H] / [H]
        Tensor<T> ln2_g, ln2_b;
    };
    std::vector<Layer> layers;

    Tensor<T> mlm_w, mlm_b;       // transform [H,H] / [H]
    Tensor<T> mlm_ln_g, mlm_ln_b; // [H]
    Tensor<T> mlm_out_b;          // [vocab]
    Tensor<T> nsp_w, nsp_b;       // [H,2] / [2]
    Tensor<T> cls_w, cls_b;       // [H,C] / [C]; empty when n_classes == 0

    void allocate(const ModelConfig& c); // zero-filled tensors of the right shapes
};

struct TensorInfo {
    std::string name;
    bool weight_decay; // false for biases and layer-norm parameters
};

// Visits every tensor in a fixed order (checkpoint layout order).
namespace detail {
template <typename P, typename F>
void visit_tensors(P& p, F&& fn) {
    fn(TensorInfo{"tok_emb", true}, p.tok_emb);
    fn(TensorInfo{"pos_emb", true}, p.pos_emb);
    fn(TensorInfo{"seg_emb", true}, p.seg_emb);
    fn(TensorInfo{"emb_ln_g", false}, p.emb_ln_g);
    fn(TensorInfo{"emb_ln_b", false}, p.emb_ln_b);
    for (size_t l = 0; l < p.layers.size(); ++l) {
        auto& ly = p.layers[l];
        const std::string pre = "layer" + std::to_string(l) + ".";
        fn(TensorInfo{pre + "wq", true}, ly.wq);
        fn(TensorInfo{pre + "bq", false}, ly.bq);
        fn(TensorInfo{pre + "wk", true}, ly.wk);
        fn(TensorInfo{pre + "bk", false}, ly.bk);
        fn(TensorInfo{pre + "wv", true}, ly.wv);
        fn(TensorInfo{pre + "bv", false}, ly.bv);
        fn(TensorInfo{pre + "wo", true}, ly.wo);
        fn(TensorInfo{pre + "bo", false}, ly.bo);
        fn(TensorInfo{pre + "ln1_g", false}, ly.ln1_g);
        fn(TensorInfo{pre + "ln1_b", false}, ly.ln1_b);
        fn(TensorInfo{pre + "w1", true}, ly.w1);
        fn(TensorInfo{pre + "b1", false}, ly.b1);
        fn(TensorInfo{pre + "w2", true}, ly.w2);
        fn(TensorInfo{pre + "b2", false}, ly.b2);
        fn(TensorInfo{pre + "ln2_g", false}, ly.ln2_g);
        fn(TensorInfo{pre + "ln2_b", false}, ly.ln2_b);
    }
    fn(TensorInfo{"mlm_w", true}, p.mlm_w);
    fn(TensorInfo{"mlm_b", false}, p.mlm_b);
    fn(TensorInfo{"mlm_ln_g", false}, p.mlm_ln_g);
    fn(TensorInfo{"mlm_ln_b", false}, p.mlm_ln_b);
    fn(TensorInfo{"mlm_out_b", false}, p.mlm_out_b);
    fn(TensorInfo{"nsp_w", true}, p.nsp_w);
    fn(TensorInfo{"nsp_b", false}, p.nsp_b);
    if (p.cfg.n_classes > 0) {
        fn(TensorInfo{"cls_w", true}, p.cls_w);
        fn(TensorInfo{"cls_b", false}, p.cls_b);
    }
}
} // namespace detail

template <typename T, typename F>
void for_each_tensor(Params<T>& p, F&& fn) {
    detail::visit_tensors(p, std::forward<F>(fn));
}
template <typename T, typename F>
void for_each_tensor(const Params<T>& p, F&& fn) {
    detail::visit_tensors(p, std::forward<F>(fn));
}

template <typename T>
Params<T> init_params(const ModelConfig& cfg, Rng& rng, double init_scale = 0.02);

// float -> double widening for gradient checks.
Params<double> to_double(const Params<float>& p);

enum class Mode { pretrain, classify_multiclass, classify_multilabel };

// One sequence, unpadded: ids[0] is [CLS]; pads never enter the model.
struct ModelInput {
    std::vector<int> ids;
    std::vector<int> segments; // same length as ids
    // pretrain supervision
    std::vector<int> masked_positions;
    std::vector<int> masked_labels;
    int nsp_label = 0;
    // classification supervision; label < 0 / empty multi_labels = predict only
    int label = -1;
    std::vector<uint8_t> multi_labels;
};

struct AttentionTensor {
    int n_layers = 0;
    int n_heads = 0;
    int seq_len = 0;
    std::vector<float> v; // [layer][head][from][to]

    void resize(int nl, int nh, int L) {
        n_layers = nl;
        n_heads = nh;
        seq_len = L;
        v.assign(static_cast<size_t>(nl) * nh * L * L, 0.0f);
    }
    float& at(int l, int h, int i, int j) {
        return v[((static_cast<size_t>(l) * n_heads + h) * seq_len + i) * seq_len + j];
    }
    float at(int l, int h, int i, int j) const {
        return v[((static_cast<size_t>(l) * n_heads + h) * seq_len + i) * seq_len + j];
    }
};

// Saved activations for backward. Dropout multipliers (0 or 1/(1-p)) are
// cached so backward replays the exact forward computation.
template <typename T>
struct Activations {
    int L = 0;
    bool training = false;
    std::vector<int> ids, segments;

    std::vector<T> emb_sum;               // [L,H] pre-LN embedding sum
    std::vector<T> emb_ln_mean, emb_ln_rstd; // [L]
    std::vector<T> x0;                    // [L,H] post-LN
    std::vector<T> emb_drop;              // [L,H] multipliers (training only)
    std::vector<T> x0d;                   // [L,H] layer-0 input

    struct LayerActs {
        std::vector<T> q, k, v;           // [L,H]
        std::vector<T> probs;             // [nh,L,L] softmax, pre-dropout
        std::vector<T> probs_drop;        // [nh,L,L] multipliers
        std::vector<T> ctx;               // [L,H]
        std::vector<T> attn_out;          // [L,H] pre-dropout
        std::vector<T> attn_drop;         // [L,H]
        std::vector<T> res1;              // [L,H]
        std::vector<T> ln1_mean, ln1_rstd; // [L]
        std::vector<T> x1;                // [L,H]
        std::vector<T> ffn_pre;           // [L,F]
        std::vector<T> ffn_gelu;          // [L,F]
        std::vector<T> ffn_out;           // [L,H] pre-dropout
        std::vector<T> ffn_drop;          // [L,H]
        std::vector<T> res2;              // [L,H]
        std::vector<T> ln2_mean, ln2_rstd; // [L]
        std::vector<T> x2;                // [L,H]
    };
    std::vector<LayerActs> layers;

    std::vector<T> mlm_t, mlm_g, mlm_n;   // [M,H]
    std::vector<T> mlm_ln_mean, mlm_ln_rstd; // [M]
    std::vector<T> mlm_probs;             // [M,V]
    std::vector<T> nsp_probs;             // [2]
    std::vector<T> head_probs;            // [C] softmax (multiclass) / sigmoid (multilabel)
};

struct ForwardOptions {
    bool training = false;  // enables dropout; needs dropout_rng
    Rng* dropout_rng = nullptr;
};

struct ForwardStats {
    double loss = 0.0;
    double mlm_loss = 0.0;
    double nsp_loss = 0.0;
    int mlm_correct = 0; // argmax == label at masked positions
    int mlm_total = 0;
    std::vector<double> logits; // NSP logits (pretrain) or class logits
};

template <typename T>
ForwardStats forward(const Params<T>& p, const ModelInput& in, Mode mode,
                     const ForwardOptions& opt = {}, Activations<T>* cache = nullptr,
                     AttentionTensor* attn_out = nullptr);

// Exact gradients of the mode's loss, scaled by `scale`, accumulated into
// `grads` (same shapes as params). Must be preceded by a cached forward.
template <typename T>
void backward(const Params<T>& p, const ModelInput& in, Mode mode,
              const Activations<T>& cache, T scale, Params<T>& grads);

// Post-softmax attention for all layers/heads; dropout off; pads excluded by
// construction (input is unpadded).
template <typename T>
AttentionTensor extract_attention(const Params<T>& p, const std::vector<int>& ids,
                                  const std::vector<int>* segments = nullptr);

// Checkpoints: two text header lines ("FACKPT 1" + a JSON object holding the
// config, tensor names/shapes, dtype and optional provenance) followed by raw
// little-endian f32 data in header order. Round-trip is bit-exact.
void save_checkpoint(const Params<float>& p, const std::string& path,
                     const std::optional<std::string>& base_hash = std::nullopt);
Params<float> load_checkpoint(const std::string& path, std::string* base_hash_out = nullptr);

// Loads a checkpoint for classification fine-tuning: a missing classification
// head is initialized fresh from `rng`; an existing one must match n_classes.
Params<float> load_for_finetune(const std::string& path, int n_classes, Rng& rng);

// FNV-1a 64 over the file bytes, hex-encoded; used for checkpoint provenance.
std::string file_hash_hex(const std::string& path);

// Throws (naming the tensor) if any parameter is non-finite.
template <typename T>
void validate_finite(const Params<T>& p);

// Explicitly instantiated for float and double.
extern template struct Params<float>;
extern template struct Params<double>;

} // namespace finadapt::model
