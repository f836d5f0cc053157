#include "finadapt/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "finadapt/binio.hpp"
#include "finadapt/error.hpp"

namespace finadapt::model {

using nlohmann::json;

void ModelConfig::check() const {
    if (n_layers < 1) throw data_error("n_layers must be >= 1");
    if (n_heads < 1) throw data_error("n_heads must be >= 1");
    if (hidden % n_heads != 0) throw data_error("hidden must be divisible by n_heads");
    if (ffn_hidden < 1) throw data_error("ffn_hidden must be >= 1");
    if (vocab_size < 5) throw data_error("vocab_size must cover the special tokens");
    if (max_positions < 1) throw data_error("max_positions must be >= 1");
    if (n_segments != 2) throw data_error("n_segments must be 2");
    if (!(dropout_prob >= 0.0 && dropout_prob < 1.0)) {
        throw data_error("dropout_prob must be in [0,1)");
    }
    if (n_classes < 0) throw data_error("n_classes must be >= 0");
}

template <typename T>
void Params<T>::allocate(const ModelConfig& c) {
    c.check();
    cfg = c;
    const int H = c.hidden;
    const int F = c.ffn_hidden;
    tok_emb.resize(c.vocab_size, H);
    pos_emb.resize(c.max_positions, H);
    seg_emb.resize(c.n_segments, H);
    emb_ln_g.resize(1, H);
    emb_ln_b.resize(1, H);
    layers.assign(static_cast<size_t>(c.n_layers), {});
    for (auto& ly : layers) {
        ly.wq.resize(H, H); ly.bq.resize(1, H);
        ly.wk.resize(H, H); ly.bk.resize(1, H);
        ly.wv.resize(H, H); ly.bv.resize(1, H);
        ly.wo.resize(H, H); ly.bo.resize(1, H);
        ly.ln1_g.resize(1, H); ly.ln1_b.resize(1, H);
        ly.w1.resize(H, F); ly.b1.resize(1, F);
        ly.w2.resize(F, H); ly.b2.resize(1, H);
        ly.ln2_g.resize(1, H); ly.ln2_b.resize(1, H);
    }
    mlm_w.resize(H, H);
    mlm_b.resize(1, H);
    mlm_ln_g.resize(1, H);
    mlm_ln_b.resize(1, H);
    mlm_out_b.resize(1, c.vocab_size);
    nsp_w.resize(H, 2);
    nsp_b.resize(1, 2);
    if (c.n_classes > 0) {
        cls_w.resize(H, c.n_classes);
        cls_b.resize(1, c.n_classes);
    } else {
        cls_w = {};
        cls_b = {};
    }
}

template <typename T>
Params<T> init_params(const ModelConfig& cfg, Rng& rng, double init_scale) {
    Params<T> p;
    p.allocate(cfg);
    const double sd = init_scale;
    for_each_tensor(p, [&](const TensorInfo& info, Tensor<T>& t) {
        if (info.weight_decay) { // weight matrices and embeddings
            for (auto& x : t.v) x = static_cast<T>(sd * rng.gaussian());
        } else if (info.name.find("ln") != std::string::npos && info.name.back() == 'g') {
            for (auto& x : t.v) x = T(1);
        } // biases and LN offsets stay zero
    });
    return p;
}

Params<double> to_double(const Params<float>& p) {
    Params<double> out;
    out.allocate(p.cfg);
    auto src = std::vector<const Tensor<float>*>{};
    for_each_tensor(p, [&](const TensorInfo&, const Tensor<float>& t) { src.push_back(&t); });
    size_t i = 0;
    for_each_tensor(out, [&](const TensorInfo&, Tensor<double>& t) {
        const Tensor<float>& s = *src[i++];
        for (size_t k = 0; k < t.v.size(); ++k) t.v[k] = static_cast<double>(s.v[k]);
    });
    return out;
}

template <typename T>
void validate_finite(const Params<T>& p) {
    for_each_tensor(p, [&](const TensorInfo& info, const Tensor<T>& t) {
        for (const T& x : t.v) {
            if (!std::isfinite(static_cast<double>(x))) {
                throw data_error("non-finite parameter in tensor " + info.name);
            }
        }
    });
}

// ---- math kernels ----

namespace {

// C[M,N] += A[M,K] * B[K,N]
template <typename T>
void mm_acc_nn(const T* A, const T* B, T* C, int M, int K, int N) {
    for (int i = 0; i < M; ++i) {
        const T* a = A + static_cast<size_t>(i) * K;
        T* c = C + static_cast<size_t>(i) * N;
        for (int k = 0; k < K; ++k) {
            const T av = a[k];
            const T* b = B + static_cast<size_t>(k) * N;
            for (int n = 0; n < N; ++n) c[n] += av * b[n];
        }
    }
}

// C[M,N] += A[M,K] * B[N,K]^T
template <typename T>
void mm_acc_nt(const T* A, const T* B, T* C, int M, int K, int N) {
    for (int i = 0; i < M; ++i) {
        const T* a = A + static_cast<size_t>(i) * K;
        T* c = C + static_cast<size_t>(i) * N;
        for (int n = 0; n < N; ++n) {
            const T* b = B + static_cast<size_t>(n) * K;
            T acc = T(0);
            for (int k = 0; k < K; ++k) acc += a[k] * b[k];
            c[n] += acc;
        }
    }
}

// C[K,N] += A[M,K]^T * B[M,N]
template <typename T>
void mm_acc_tn(const T* A, const T* B, T* C, int M, int K, int N) {
    for (int m = 0; m < M; ++m) {
        const T* a = A + static_cast<size_t>(m) * K;
        const T* b = B + static_cast<size_t>(m) * N;
        for (int k = 0; k < K; ++k) {
            const T av = a[k];
            T* c = C + static_cast<size_t>(k) * N;
            for (int n = 0; n < N; ++n) c[n] += av * b[n];
        }
    }
}

constexpr double kLnEps = 1e-12;

template <typename T>
void layer_norm_rows(const T* x, const T* g, const T* b, T* y, T* mean, T* rstd, int rows,
                     int cols) {
    for (int r = 0; r < rows; ++r) {
        const T* xr = x + static_cast<size_t>(r) * cols;
        T* yr = y + static_cast<size_t>(r) * cols;
        double mu = 0.0;
        for (int c = 0; c < cols; ++c) mu += static_cast<double>(xr[c]);
        mu /= cols;
        double var = 0.0;
        for (int c = 0; c < cols; ++c) {
            const double d = static_cast<double>(xr[c]) - mu;
            var += d * d;
        }
        var /= cols;
        const double r_ = 1.0 / std::sqrt(var + kLnEps);
        mean[r] = static_cast<T>(mu);
        rstd[r] = static_cast<T>(r_);
        for (int c = 0; c < cols; ++c) {
            yr[c] = static_cast<T>((static_cast<double>(xr[c]) - mu) * r_) * g[c] + b[c];
        }
    }
}

// dx += LN backward; dg/db accumulated.
template <typename T>
void layer_norm_backward_rows(const T* x, const T* g, const T* mean, const T* rstd, const T* dy,
                              T* dx, T* dg, T* db, int rows, int cols) {
    for (int r = 0; r < rows; ++r) {
        const T* xr = x + static_cast<size_t>(r) * cols;
        const T* dyr = dy + static_cast<size_t>(r) * cols;
        T* dxr = dx + static_cast<size_t>(r) * cols;
        const double mu = static_cast<double>(mean[r]);
        const double rs = static_cast<double>(rstd[r]);
        double mean_dyg = 0.0;
        double mean_dyg_xhat = 0.0;
        for (int c = 0; c < cols; ++c) {
            const double xhat = (static_cast<double>(xr[c]) - mu) * rs;
            const double dyg = static_cast<double>(dyr[c]) * static_cast<double>(g[c]);
            mean_dyg += dyg;
            mean_dyg_xhat += dyg * xhat;
            dg[c] += static_cast<T>(static_cast<double>(dyr[c]) * xhat);
            db[c] += dyr[c];
        }
        mean_dyg /= cols;
        mean_dyg_xhat /= cols;
        for (int c = 0; c < cols; ++c) {
            const double xhat = (static_cast<double>(xr[c]) - mu) * rs;
            const double dyg = static_cast<double>(dyr[c]) * static_cast<double>(g[c]);
            dxr[c] += static_cast<T>(rs * (dyg - mean_dyg - xhat * mean_dyg_xhat));
        }
    }
}

template <typename T>
T gelu(T x) {
    return static_cast<T>(0.5 * static_cast<double>(x) *
                          (1.0 + std::erf(static_cast<double>(x) * M_SQRT1_2)));
}

template <typename T>
T gelu_grad(T x) {
    const double xd = static_cast<double>(x);
    const double cdf = 0.5 * (1.0 + std::erf(xd * M_SQRT1_2));
    const double pdf = std::exp(-0.5 * xd * xd) / std::sqrt(2.0 * M_PI);
    return static_cast<T>(cdf + xd * pdf);
}

// softmax over `n` values in place; returns log-sum-exp for loss use.
template <typename T>
double softmax_inplace(T* z, int n) {
    double mx = -1e300;
    for (int i = 0; i < n; ++i) mx = std::max(mx, static_cast<double>(z[i]));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += std::exp(static_cast<double>(z[i]) - mx);
    const double lse = mx + std::log(sum);
    for (int i = 0; i < n; ++i) z[i] = static_cast<T>(std::exp(static_cast<double>(z[i]) - lse));
    return lse;
}

template <typename T>
void apply_dropout(std::vector<T>& values, std::vector<T>& mults, double p, Rng& rng) {
    mults.resize(values.size());
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    for (size_t i = 0; i < values.size(); ++i) {
        mults[i] = rng.bernoulli(1.0 - p) ? keep_scale : T(0);
        values[i] *= mults[i];
    }
}

} // namespace

// ---- forward ----

namespace {

template <typename T>
void encode(const Params<T>& p, const std::vector<int>& ids, const std::vector<int>& segments,
            const ForwardOptions& opt, Activations<T>& acts, AttentionTensor* attn_out) {
    const ModelConfig& cfg = p.cfg;
    const int L = static_cast<int>(ids.size());
    const int H = cfg.hidden;
    const int F = cfg.ffn_hidden;
    const int nh = cfg.n_heads;
    const int dh = cfg.head_dim();
    const double alpha = 1.0 / std::sqrt(static_cast<double>(dh));

    if (L < 1) throw data_error("shape mismatch: empty input sequence");
    if (L > cfg.max_positions) {
        throw data_error("shape mismatch: sequence length " + std::to_string(L) +
                         " exceeds max_positions " + std::to_string(cfg.max_positions));
    }
    if (segments.size() != ids.size()) {
        throw data_error("shape mismatch: segments length != ids length");
    }
    for (int i = 0; i < L; ++i) {
        if (ids[i] < 0 || ids[i] >= cfg.vocab_size) {
            throw data_error("shape mismatch: token id out of range: " + std::to_string(ids[i]));
        }
        if (segments[i] < 0 || segments[i] >= cfg.n_segments) {
            throw data_error("shape mismatch: segment id out of range");
        }
    }

    const bool dropout_on = opt.training && cfg.dropout_prob > 0.0;
    if (dropout_on && opt.dropout_rng == nullptr) {
        throw data_error("training forward requires a dropout rng");
    }

    acts.L = L;
    acts.training = dropout_on;
    acts.ids = ids;
    acts.segments = segments;
    const size_t LH = static_cast<size_t>(L) * H;

    acts.emb_sum.assign(LH, T(0));
    for (int i = 0; i < L; ++i) {
        const T* te = p.tok_emb.row(ids[i]);
        const T* pe = p.pos_emb.row(i);
        const T* se = p.seg_emb.row(segments[i]);
        T* out = acts.emb_sum.data() + static_cast<size_t>(i) * H;
        for (int h = 0; h < H; ++h) out[h] = te[h] + pe[h] + se[h];
    }
    acts.emb_ln_mean.assign(L, T(0));
    acts.emb_ln_rstd.assign(L, T(0));
    acts.x0.assign(LH, T(0));
    layer_norm_rows(acts.emb_sum.data(), p.emb_ln_g.v.data(), p.emb_ln_b.v.data(), acts.x0.data(),
                    acts.emb_ln_mean.data(), acts.emb_ln_rstd.data(), L, H);
    acts.x0d = acts.x0;
    if (dropout_on) apply_dropout(acts.x0d, acts.emb_drop, cfg.dropout_prob, *opt.dropout_rng);

    if (attn_out) attn_out->resize(cfg.n_layers, nh, L);

    acts.layers.assign(static_cast<size_t>(cfg.n_layers), {});
    const std::vector<T>* x_in = &acts.x0d;
    for (int l = 0; l < cfg.n_layers; ++l) {
        auto& a = acts.layers[static_cast<size_t>(l)];
        const auto& ly = p.layers[static_cast<size_t>(l)];
        const T* x = x_in->data();

        a.q.assign(LH, T(0));
        a.k.assign(LH, T(0));
        a.v.assign(LH, T(0));
        for (int i = 0; i < L; ++i) {
            std::memcpy(a.q.data() + static_cast<size_t>(i) * H, ly.bq.v.data(), sizeof(T) * H);
            std::memcpy(a.k.data() + static_cast<size_t>(i) * H, ly.bk.v.data(), sizeof(T) * H);
            std::memcpy(a.v.data() + static_cast<size_t>(i) * H, ly.bv.v.data(), sizeof(T) * H);
        }
        mm_acc_nn(x, ly.wq.v.data(), a.q.data(), L, H, H);
        mm_acc_nn(x, ly.wk.v.data(), a.k.data(), L, H, H);
        mm_acc_nn(x, ly.wv.v.data(), a.v.data(), L, H, H);

        a.probs.assign(static_cast<size_t>(nh) * L * L, T(0));
        for (int h = 0; h < nh; ++h) {
            for (int i = 0; i < L; ++i) {
                T* row = a.probs.data() + (static_cast<size_t>(h) * L + i) * L;
                const T* qi = a.q.data() + static_cast<size_t>(i) * H + h * dh;
                for (int j = 0; j < L; ++j) {
                    const T* kj = a.k.data() + static_cast<size_t>(j) * H + h * dh;
                    double s = 0.0;
                    for (int d = 0; d < dh; ++d) {
                        s += static_cast<double>(qi[d]) * static_cast<double>(kj[d]);
                    }
                    row[j] = static_cast<T>(s * alpha);
                }
                softmax_inplace(row, L);
                if (attn_out) {
                    for (int j = 0; j < L; ++j) {
                        attn_out->at(l, h, i, j) = static_cast<float>(row[j]);
                    }
                }
            }
        }
        std::vector<T> probs_used = a.probs;
        if (dropout_on) {
            apply_dropout(probs_used, a.probs_drop, cfg.dropout_prob, *opt.dropout_rng);
        }

        a.ctx.assign(LH, T(0));
        for (int h = 0; h < nh; ++h) {
            for (int i = 0; i < L; ++i) {
                const T* prow = probs_used.data() + (static_cast<size_t>(h) * L + i) * L;
                T* crow = a.ctx.data() + static_cast<size_t>(i) * H + h * dh;
                for (int j = 0; j < L; ++j) {
                    const T pij = prow[j];
                    if (pij == T(0)) continue;
                    const T* vj = a.v.data() + static_cast<size_t>(j) * H + h * dh;
                    for (int d = 0; d < dh; ++d) crow[d] += pij * vj[d];
                }
            }
        }

        a.attn_out.assign(LH, T(0));
        for (int i = 0; i < L; ++i) {
            std::memcpy(a.attn_out.data() + static_cast<size_t>(i) * H, ly.bo.v.data(),
                        sizeof(T) * H);
        }
        mm_acc_nn(a.ctx.data(), ly.wo.v.data(), a.attn_out.data(), L, H, H);
        std::vector<T> attn_used = a.attn_out;
        if (dropout_on) apply_dropout(attn_used, a.attn_drop, cfg.dropout_prob, *opt.dropout_rng);

        a.res1.assign(LH, T(0));
        for (size_t i = 0; i < LH; ++i) a.res1[i] = x[i] + attn_used[i];
        a.ln1_mean.assign(L, T(0));
        a.ln1_rstd.assign(L, T(0));
        a.x1.assign(LH, T(0));
        layer_norm_rows(a.res1.data(), ly.ln1_g.v.data(), ly.ln1_b.v.data(), a.x1.data(),
                        a.ln1_mean.data(), a.ln1_rstd.data(), L, H);

        const size_t LF = static_cast<size_t>(L) * F;
        a.ffn_pre.assign(LF, T(0));
        for (int i = 0; i < L; ++i) {
            std::memcpy(a.ffn_pre.data() + static_cast<size_t>(i) * F, ly.b1.v.data(),
                        sizeof(T) * F);
        }
        mm_acc_nn(a.x1.data(), ly.w1.v.data(), a.ffn_pre.data(), L, H, F);
        a.ffn_gelu.resize(LF);
        for (size_t i = 0; i < LF; ++i) a.ffn_gelu[i] = gelu(a.ffn_pre[i]);

        a.ffn_out.assign(LH, T(0));
        for (int i = 0; i < L; ++i) {
            std::memcpy(a.ffn_out.data() + static_cast<size_t>(i) * H, ly.b2.v.data(),
                        sizeof(T) * H);
        }
        mm_acc_nn(a.ffn_gelu.data(), ly.w2.v.data(), a.ffn_out.data(), L, F, H);
        std::vector<T> ffn_used = a.ffn_out;
        if (dropout_on) apply_dropout(ffn_used, a.ffn_drop, cfg.dropout_prob, *opt.dropout_rng);

        a.res2.assign(LH, T(0));
        for (size_t i = 0; i < LH; ++i) a.res2[i] = a.x1[i] + ffn_used[i];
        a.ln2_mean.assign(L, T(0));
        a.ln2_rstd.assign(L, T(0));
        a.x2.assign(LH, T(0));
        layer_norm_rows(a.res2.data(), ly.ln2_g.v.data(), ly.ln2_b.v.data(), a.x2.data(),
                        a.ln2_mean.data(), a.ln2_rstd.data(), L, H);
        x_in = &a.x2;
    }
}

} // namespace

template <typename T>
ForwardStats forward(const Params<T>& p, const ModelInput& in, Mode mode,
                     const ForwardOptions& opt, Activations<T>* cache,
                     AttentionTensor* attn_out) {
    Activations<T> local;
    Activations<T>& acts = cache ? *cache : local;
    encode(p, in.ids, in.segments, opt, acts, attn_out);

    const ModelConfig& cfg = p.cfg;
    const int H = cfg.hidden;
    const std::vector<T>& xfin = acts.layers.back().x2;
    ForwardStats stats;

    if (mode == Mode::pretrain) {
        const int M = static_cast<int>(in.masked_positions.size());
        if (M == 0) throw data_error("pretrain forward requires masked positions");
        if (in.masked_labels.size() != in.masked_positions.size()) {
            throw data_error("shape mismatch: masked labels vs positions");
        }
        const size_t MH = static_cast<size_t>(M) * H;
        acts.mlm_t.assign(MH, T(0));
        for (int m = 0; m < M; ++m) {
            const int pos = in.masked_positions[m];
            if (pos < 0 || pos >= acts.L) throw data_error("masked position out of range");
            std::memcpy(acts.mlm_t.data() + static_cast<size_t>(m) * H, p.mlm_b.v.data(),
                        sizeof(T) * H);
            mm_acc_nn(xfin.data() + static_cast<size_t>(pos) * H, p.mlm_w.v.data(),
                      acts.mlm_t.data() + static_cast<size_t>(m) * H, 1, H, H);
        }
        acts.mlm_g.resize(MH);
        for (size_t i = 0; i < MH; ++i) acts.mlm_g[i] = gelu(acts.mlm_t[i]);
        acts.mlm_n.assign(MH, T(0));
        acts.mlm_ln_mean.assign(M, T(0));
        acts.mlm_ln_rstd.assign(M, T(0));
        layer_norm_rows(acts.mlm_g.data(), p.mlm_ln_g.v.data(), p.mlm_ln_b.v.data(),
                        acts.mlm_n.data(), acts.mlm_ln_mean.data(), acts.mlm_ln_rstd.data(), M, H);

        const int V = cfg.vocab_size;
        acts.mlm_probs.assign(static_cast<size_t>(M) * V, T(0));
        double mlm_loss = 0.0;
        for (int m = 0; m < M; ++m) {
            const int label = in.masked_labels[m];
            if (label < 0 || label >= V) throw data_error("masked label out of vocab range");
            T* logits = acts.mlm_probs.data() + static_cast<size_t>(m) * V;
            std::memcpy(logits, p.mlm_out_b.v.data(), sizeof(T) * V);
            mm_acc_nt(acts.mlm_n.data() + static_cast<size_t>(m) * H, p.tok_emb.v.data(), logits,
                      1, H, V);
            int argmax = 0;
            for (int v = 1; v < V; ++v) {
                if (logits[v] > logits[argmax]) argmax = v;
            }
            if (argmax == label) ++stats.mlm_correct;
            const double label_logit = static_cast<double>(logits[label]);
            const double lse = softmax_inplace(logits, V); // logits now hold probs
            mlm_loss += lse - label_logit;
        }
        stats.mlm_total = M;
        stats.mlm_loss = mlm_loss / M;

        acts.nsp_probs.assign(2, T(0));
        T z[2] = {p.nsp_b.v[0], p.nsp_b.v[1]};
        for (int h = 0; h < H; ++h) {
            z[0] += xfin[h] * p.nsp_w.at(h, 0);
            z[1] += xfin[h] * p.nsp_w.at(h, 1);
        }
        stats.logits = {static_cast<double>(z[0]), static_cast<double>(z[1])};
        if (in.nsp_label < 0 || in.nsp_label > 1) throw data_error("nsp label must be 0 or 1");
        const double label_logit = static_cast<double>(z[in.nsp_label]);
        const double lse = softmax_inplace(z, 2);
        acts.nsp_probs[0] = z[0];
        acts.nsp_probs[1] = z[1];
        stats.nsp_loss = lse - label_logit;
        stats.loss = stats.mlm_loss + stats.nsp_loss;
    } else {
        const int C = cfg.n_classes;
        if (C <= 0) throw data_error("model has no classification head");
        std::vector<T> z(static_cast<size_t>(C));
        for (int c = 0; c < C; ++c) z[c] = p.cls_b.v[c];
        mm_acc_nn(xfin.data(), p.cls_w.v.data(), z.data(), 1, H, C);
        stats.logits.resize(C);
        for (int c = 0; c < C; ++c) stats.logits[c] = static_cast<double>(z[c]);
        acts.head_probs.assign(static_cast<size_t>(C), T(0));
        if (mode == Mode::classify_multiclass) {
            std::vector<T> probs = z;
            const double lse = softmax_inplace(probs.data(), C);
            acts.head_probs = probs;
            if (in.label >= 0) {
                if (in.label >= C) throw data_error("class label out of range");
                stats.loss = lse - static_cast<double>(z[in.label]);
            }
        } else {
            for (int c = 0; c < C; ++c) {
                acts.head_probs[c] =
                    static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(z[c]))));
            }
            if (!in.multi_labels.empty()) {
                if (static_cast<int>(in.multi_labels.size()) != C) {
                    throw data_error("shape mismatch: multilabel target size != n_classes");
                }
                double loss = 0.0;
                for (int c = 0; c < C; ++c) {
                    const double zc = static_cast<double>(z[c]);
                    const double y = in.multi_labels[c] ? 1.0 : 0.0;
                    loss += std::max(zc, 0.0) - zc * y + std::log1p(std::exp(-std::abs(zc)));
                }
                stats.loss = loss / C;
            }
        }
    }

    if (!std::isfinite(stats.loss)) throw data_error("non-finite loss");
    return stats;
}

// ---- backward ----

template <typename T>
void backward(const Params<T>& p, const ModelInput& in, Mode mode, const Activations<T>& acts,
              T scale, Params<T>& grads) {
    const ModelConfig& cfg = p.cfg;
    const int L = acts.L;
    const int H = cfg.hidden;
    const int F = cfg.ffn_hidden;
    const int nh = cfg.n_heads;
    const int dh = cfg.head_dim();
    const double alpha = 1.0 / std::sqrt(static_cast<double>(dh));
    const size_t LH = static_cast<size_t>(L) * H;

    const std::vector<T>& xfin = acts.layers.back().x2;
    std::vector<T> dxfin(LH, T(0));

    if (mode == Mode::pretrain) {
        const int M = static_cast<int>(in.masked_positions.size());
        const int V = cfg.vocab_size;
        const size_t MH = static_cast<size_t>(M) * H;
        // MLM: dlogits = (probs - onehot) * scale / M
        std::vector<T> dn(MH, T(0));
        const T mlm_scale = scale / static_cast<T>(M);
        for (int m = 0; m < M; ++m) {
            const T* probs = acts.mlm_probs.data() + static_cast<size_t>(m) * V;
            const T* nrow = acts.mlm_n.data() + static_cast<size_t>(m) * H;
            T* dnrow = dn.data() + static_cast<size_t>(m) * H;
            const int label = in.masked_labels[m];
            for (int v = 0; v < V; ++v) {
                T dl = probs[v] * mlm_scale;
                if (v == label) dl -= mlm_scale;
                if (dl == T(0)) continue;
                grads.mlm_out_b.v[v] += dl;
                const T* ev = p.tok_emb.row(v);
                T* gev = grads.tok_emb.row(v);
                for (int h = 0; h < H; ++h) {
                    dnrow[h] += dl * ev[h];
                    gev[h] += dl * nrow[h];
                }
            }
        }
        // LN -> gelu -> transform
        std::vector<T> dg(MH, T(0));
        layer_norm_backward_rows(acts.mlm_g.data(), p.mlm_ln_g.v.data(), acts.mlm_ln_mean.data(),
                                 acts.mlm_ln_rstd.data(), dn.data(), dg.data(),
                                 grads.mlm_ln_g.v.data(), grads.mlm_ln_b.v.data(), M, H);
        std::vector<T> dt(MH);
        for (size_t i = 0; i < MH; ++i) dt[i] = dg[i] * gelu_grad(acts.mlm_t[i]);
        for (int m = 0; m < M; ++m) {
            const int pos = in.masked_positions[m];
            const T* dtrow = dt.data() + static_cast<size_t>(m) * H;
            const T* xrow = xfin.data() + static_cast<size_t>(pos) * H;
            mm_acc_tn(xrow, dtrow, grads.mlm_w.v.data(), 1, H, H);
            for (int h = 0; h < H; ++h) grads.mlm_b.v[h] += dtrow[h];
            mm_acc_nt(dtrow, p.mlm_w.v.data(),
                      dxfin.data() + static_cast<size_t>(pos) * H, 1, H, H);
        }
        // NSP
        T dz[2];
        for (int c = 0; c < 2; ++c) {
            dz[c] = acts.nsp_probs[c] * scale;
            if (c == in.nsp_label) dz[c] -= scale;
        }
        for (int h = 0; h < H; ++h) {
            grads.nsp_w.at(h, 0) += xfin[h] * dz[0];
            grads.nsp_w.at(h, 1) += xfin[h] * dz[1];
            dxfin[h] += dz[0] * p.nsp_w.at(h, 0) + dz[1] * p.nsp_w.at(h, 1);
        }
        grads.nsp_b.v[0] += dz[0];
        grads.nsp_b.v[1] += dz[1];
    } else {
        const int C = cfg.n_classes;
        std::vector<T> dz(static_cast<size_t>(C), T(0));
        if (mode == Mode::classify_multiclass) {
            if (in.label < 0) throw data_error("backward requires a class label");
            for (int c = 0; c < C; ++c) {
                dz[c] = acts.head_probs[c] * scale;
                if (c == in.label) dz[c] -= scale;
            }
        } else {
            if (in.multi_labels.empty()) throw data_error("backward requires multilabel targets");
            const T cs = scale / static_cast<T>(C);
            for (int c = 0; c < C; ++c) {
                dz[c] = (acts.head_probs[c] - (in.multi_labels[c] ? T(1) : T(0))) * cs;
            }
        }
        for (int h = 0; h < H; ++h) {
            const T xh = xfin[h];
            T acc = T(0);
            for (int c = 0; c < C; ++c) {
                grads.cls_w.at(h, c) += xh * dz[c];
                acc += dz[c] * p.cls_w.at(h, c);
            }
            dxfin[h] += acc;
        }
        for (int c = 0; c < C; ++c) grads.cls_b.v[c] += dz[c];
    }

    // Transformer stack, top down.
    std::vector<T> dx = std::move(dxfin);
    for (int l = cfg.n_layers - 1; l >= 0; --l) {
        const auto& a = acts.layers[static_cast<size_t>(l)];
        const auto& ly = p.layers[static_cast<size_t>(l)];
        auto& gly = grads.layers[static_cast<size_t>(l)];
        const std::vector<T>& x_in =
            (l == 0) ? acts.x0d : acts.layers[static_cast<size_t>(l) - 1].x2;
        const size_t LF = static_cast<size_t>(L) * F;

        // x2 = LN2(res2)
        std::vector<T> dres2(LH, T(0));
        layer_norm_backward_rows(a.res2.data(), ly.ln2_g.v.data(), a.ln2_mean.data(),
                                 a.ln2_rstd.data(), dx.data(), dres2.data(), gly.ln2_g.v.data(),
                                 gly.ln2_b.v.data(), L, H);
        // res2 = x1 + dropout(ffn_out)
        std::vector<T> dx1 = dres2;
        std::vector<T> dffn_out(LH);
        if (acts.training) {
            for (size_t i = 0; i < LH; ++i) dffn_out[i] = dres2[i] * a.ffn_drop[i];
        } else {
            dffn_out = dres2;
        }
        // ffn_out = gelu(ffn_pre) * w2 + b2
        std::vector<T> dgelu(LF, T(0));
        mm_acc_tn(a.ffn_gelu.data(), dffn_out.data(), gly.w2.v.data(), L, F, H);
        for (int i = 0; i < L; ++i) {
            const T* d = dffn_out.data() + static_cast<size_t>(i) * H;
            for (int h = 0; h < H; ++h) gly.b2.v[h] += d[h];
        }
        mm_acc_nt(dffn_out.data(), ly.w2.v.data(), dgelu.data(), L, H, F);
        std::vector<T> dpre(LF);
        for (size_t i = 0; i < LF; ++i) dpre[i] = dgelu[i] * gelu_grad(a.ffn_pre[i]);
        // ffn_pre = x1 * w1 + b1
        mm_acc_tn(a.x1.data(), dpre.data(), gly.w1.v.data(), L, H, F);
        for (int i = 0; i < L; ++i) {
            const T* d = dpre.data() + static_cast<size_t>(i) * F;
            for (int f = 0; f < F; ++f) gly.b1.v[f] += d[f];
        }
        mm_acc_nt(dpre.data(), ly.w1.v.data(), dx1.data(), L, F, H);

        // x1 = LN1(res1)
        std::vector<T> dres1(LH, T(0));
        layer_norm_backward_rows(a.res1.data(), ly.ln1_g.v.data(), a.ln1_mean.data(),
                                 a.ln1_rstd.data(), dx1.data(), dres1.data(), gly.ln1_g.v.data(),
                                 gly.ln1_b.v.data(), L, H);
        // res1 = x_in + dropout(attn_out)
        std::vector<T> dx_next = dres1;
        std::vector<T> dattn(LH);
        if (acts.training) {
            for (size_t i = 0; i < LH; ++i) dattn[i] = dres1[i] * a.attn_drop[i];
        } else {
            dattn = dres1;
        }
        // attn_out = ctx * wo + bo
        std::vector<T> dctx(LH, T(0));
        mm_acc_tn(a.ctx.data(), dattn.data(), gly.wo.v.data(), L, H, H);
        for (int i = 0; i < L; ++i) {
            const T* d = dattn.data() + static_cast<size_t>(i) * H;
            for (int h = 0; h < H; ++h) gly.bo.v[h] += d[h];
        }
        mm_acc_nt(dattn.data(), ly.wo.v.data(), dctx.data(), L, H, H);

        // attention core
        std::vector<T> dq(LH, T(0)), dk(LH, T(0)), dv(LH, T(0));
        std::vector<T> dprobs(static_cast<size_t>(L) * L);
        for (int h = 0; h < nh; ++h) {
            // dprobs (post-dropout) = dctx_h * V_h^T ; dV_h += P_drop^T * dctx_h
            for (int i = 0; i < L; ++i) {
                const T* dc = dctx.data() + static_cast<size_t>(i) * H + h * dh;
                const T* prow = a.probs.data() + (static_cast<size_t>(h) * L + i) * L;
                T* dprow = dprobs.data() + static_cast<size_t>(i) * L;
                for (int j = 0; j < L; ++j) {
                    const T* vj = a.v.data() + static_cast<size_t>(j) * H + h * dh;
                    double acc = 0.0;
                    for (int d = 0; d < dh; ++d) {
                        acc += static_cast<double>(dc[d]) * static_cast<double>(vj[d]);
                    }
                    const T mult = acts.training
                                       ? a.probs_drop[(static_cast<size_t>(h) * L + i) * L + j]
                                       : T(1);
                    dprow[j] = static_cast<T>(acc) * mult;
                    const T pd = prow[j] * mult;
                    if (pd != T(0)) {
                        T* dvj = dv.data() + static_cast<size_t>(j) * H + h * dh;
                        for (int d = 0; d < dh; ++d) dvj[d] += pd * dc[d];
                    }
                }
            }
            // softmax backward then scores
            for (int i = 0; i < L; ++i) {
                const T* prow = a.probs.data() + (static_cast<size_t>(h) * L + i) * L;
                T* dprow = dprobs.data() + static_cast<size_t>(i) * L;
                double dot = 0.0;
                for (int j = 0; j < L; ++j) {
                    dot += static_cast<double>(dprow[j]) * static_cast<double>(prow[j]);
                }
                for (int j = 0; j < L; ++j) {
                    const double ds =
                        static_cast<double>(prow[j]) * (static_cast<double>(dprow[j]) - dot);
                    dprow[j] = static_cast<T>(ds * alpha); // fold in the 1/sqrt(dh)
                }
            }
            // dQ_h += dS * K_h ; dK_h += dS^T * Q_h
            for (int i = 0; i < L; ++i) {
                const T* dsrow = dprobs.data() + static_cast<size_t>(i) * L;
                T* dqi = dq.data() + static_cast<size_t>(i) * H + h * dh;
                const T* qi = a.q.data() + static_cast<size_t>(i) * H + h * dh;
                for (int j = 0; j < L; ++j) {
                    const T ds = dsrow[j];
                    if (ds == T(0)) continue;
                    const T* kj = a.k.data() + static_cast<size_t>(j) * H + h * dh;
                    T* dkj = dk.data() + static_cast<size_t>(j) * H + h * dh;
                    for (int d = 0; d < dh; ++d) {
                        dqi[d] += ds * kj[d];
                        dkj[d] += ds * qi[d];
                    }
                }
            }
        }

        // projections
        mm_acc_tn(x_in.data(), dq.data(), gly.wq.v.data(), L, H, H);
        mm_acc_tn(x_in.data(), dk.data(), gly.wk.v.data(), L, H, H);
        mm_acc_tn(x_in.data(), dv.data(), gly.wv.v.data(), L, H, H);
        for (int i = 0; i < L; ++i) {
            const T* dqi = dq.data() + static_cast<size_t>(i) * H;
            const T* dki = dk.data() + static_cast<size_t>(i) * H;
            const T* dvi = dv.data() + static_cast<size_t>(i) * H;
            for (int h = 0; h < H; ++h) {
                gly.bq.v[h] += dqi[h];
                gly.bk.v[h] += dki[h];
                gly.bv.v[h] += dvi[h];
            }
        }
        mm_acc_nt(dq.data(), ly.wq.v.data(), dx_next.data(), L, H, H);
        mm_acc_nt(dk.data(), ly.wk.v.data(), dx_next.data(), L, H, H);
        mm_acc_nt(dv.data(), ly.wv.v.data(), dx_next.data(), L, H, H);

        dx = std::move(dx_next);
    }

    // embeddings
    if (acts.training) {
        for (size_t i = 0; i < LH; ++i) dx[i] *= acts.emb_drop[i];
    }
    std::vector<T> demb(LH, T(0));
    layer_norm_backward_rows(acts.emb_sum.data(), p.emb_ln_g.v.data(), acts.emb_ln_mean.data(),
                             acts.emb_ln_rstd.data(), dx.data(), demb.data(),
                             grads.emb_ln_g.v.data(), grads.emb_ln_b.v.data(), L, H);
    for (int i = 0; i < L; ++i) {
        const T* d = demb.data() + static_cast<size_t>(i) * H;
        T* gt = grads.tok_emb.row(acts.ids[i]);
        T* gp = grads.pos_emb.row(i);
        T* gs = grads.seg_emb.row(acts.segments[i]);
        for (int h = 0; h < H; ++h) {
            gt[h] += d[h];
            gp[h] += d[h];
            gs[h] += d[h];
        }
    }

    for_each_tensor(grads, [&](const TensorInfo& info, const Tensor<T>& t) {
        for (const T& g : t.v) {
            if (!std::isfinite(static_cast<double>(g))) {
                throw data_error("non-finite gradient in tensor " + info.name);
            }
        }
    });
}

template <typename T>
AttentionTensor extract_attention(const Params<T>& p, const std::vector<int>& ids,
                                  const std::vector<int>* segments) {
    std::vector<int> segs;
    if (segments) {
        segs = *segments;
    } else {
        segs.assign(ids.size(), 0);
    }
    Activations<T> acts;
    AttentionTensor attn;
    encode(p, ids, segs, ForwardOptions{}, acts, &attn);
    return attn;
}

// ---- checkpoints ----

namespace {

constexpr const char* kCheckpointMagic = "FACKPT 1";

json config_to_json(const ModelConfig& c) {
    return json{{"n_layers", c.n_layers},       {"n_heads", c.n_heads},
                {"hidden", c.hidden},           {"ffn_hidden", c.ffn_hidden},
                {"vocab_size", c.vocab_size},   {"max_positions", c.max_positions},
                {"n_segments", c.n_segments},   {"dropout_prob", c.dropout_prob},
                {"n_classes", c.n_classes}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.ffn_hidden = j.at("ffn_hidden").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.max_positions = j.at("max_positions").get<int>();
    c.n_segments = j.at("n_segments").get<int>();
    c.dropout_prob = j.at("dropout_prob").get<double>();
    c.n_classes = j.at("n_classes").get<int>();
    return c;
}

} // namespace

void save_checkpoint(const Params<float>& p, const std::string& path,
                     const std::optional<std::string>& base_hash) {
    validate_finite(p);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open checkpoint for writing: " + path);

    json header;
    header["config"] = config_to_json(p.cfg);
    header["dtype"] = "f32";
    json tensors = json::array();
    for_each_tensor(p, [&](const TensorInfo& info, const Tensor<float>& t) {
        tensors.push_back(json{{"name", info.name}, {"rows", t.rows}, {"cols", t.cols}});
    });
    header["tensors"] = tensors;
    if (base_hash) header["provenance"] = json{{"base_hash", *base_hash}};

    out << kCheckpointMagic << "\n" << header.dump() << "\n";
    for_each_tensor(p, [&](const TensorInfo&, const Tensor<float>& t) {
        for (float x : t.v) binio::put_f32(out, x);
    });
    if (!out) throw io_error("checkpoint write failed: " + path);
}

Params<float> load_checkpoint(const std::string& path, std::string* base_hash_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open checkpoint: " + path);
    std::string magic_line;
    if (!std::getline(in, magic_line) || magic_line != kCheckpointMagic) {
        throw FileFormatError(FileFault::bad_magic, "not a checkpoint file: " + path);
    }
    std::string header_line;
    if (!std::getline(in, header_line)) {
        throw FileFormatError(FileFault::truncated, "checkpoint missing header: " + path);
    }
    json header;
    try {
        header = json::parse(header_line);
    } catch (const std::exception& e) {
        throw FileFormatError(FileFault::corrupt,
                              "checkpoint header is not valid JSON: " + std::string(e.what()));
    }
    if (header.at("dtype").get<std::string>() != "f32") {
        throw FileFormatError(FileFault::version_mismatch, "unsupported checkpoint dtype");
    }
    Params<float> p;
    p.allocate(config_from_json(header.at("config")));

    const json& tensors = header.at("tensors");
    size_t idx = 0;
    for_each_tensor(p, [&](const TensorInfo& info, Tensor<float>& t) {
        if (idx >= tensors.size()) {
            throw FileFormatError(FileFault::corrupt, "checkpoint tensor list too short");
        }
        const json& tj = tensors[idx++];
        if (tj.at("name").get<std::string>() != info.name ||
            tj.at("rows").get<int>() != t.rows || tj.at("cols").get<int>() != t.cols) {
            throw FileFormatError(FileFault::corrupt,
                                  "checkpoint tensor mismatch at " + info.name);
        }
        for (auto& x : t.v) x = binio::get_f32(in, "checkpoint tensor " + info.name);
    });
    if (idx != tensors.size()) {
        throw FileFormatError(FileFault::corrupt, "checkpoint tensor list too long");
    }
    if (in.peek() != EOF) {
        throw FileFormatError(FileFault::corrupt, "trailing bytes after checkpoint tensors");
    }
    validate_finite(p);
    if (base_hash_out) {
        *base_hash_out = "";
        if (header.contains("provenance") && header["provenance"].contains("base_hash")) {
            *base_hash_out = header["provenance"]["base_hash"].get<std::string>();
        }
    }
    return p;
}

Params<float> load_for_finetune(const std::string& path, int n_classes, Rng& rng) {
    Params<float> base = load_checkpoint(path);
    if (base.cfg.n_classes == n_classes) return base;
    if (base.cfg.n_classes != 0) {
        throw data_error("checkpoint has a " + std::to_string(base.cfg.n_classes) +
                         "-way classification head, requested " + std::to_string(n_classes));
    }
    ModelConfig cfg = base.cfg;
    cfg.n_classes = n_classes;
    Params<float> out;
    out.allocate(cfg);
    // Copy shared tensors; the classification head starts fresh.
    std::vector<const Tensor<float>*> src;
    for_each_tensor(base, [&](const TensorInfo&, const Tensor<float>& t) { src.push_back(&t); });
    size_t i = 0;
    for_each_tensor(out, [&](const TensorInfo& info, Tensor<float>& t) {
        if (info.name == "cls_w") {
            for (auto& x : t.v) x = static_cast<float>(0.02 * rng.gaussian());
        } else if (info.name == "cls_b") {
            // zeros
        } else {
            t.v = src[i++]->v;
        }
    });
    return out;
}

std::string file_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open file for hashing: " + path);
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[8192];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<uint8_t>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

// ---- explicit instantiations ----

template struct Params<float>;
template struct Params<double>;
template Params<float> init_params<float>(const ModelConfig&, Rng&, double);
template Params<double> init_params<double>(const ModelConfig&, Rng&, double);
template void validate_finite<float>(const Params<float>&);
template void validate_finite<double>(const Params<double>&);
template ForwardStats forward<float>(const Params<float>&, const ModelInput&, Mode,
                                     const ForwardOptions&, Activations<float>*, AttentionTensor*);
template ForwardStats forward<double>(const Params<double>&, const ModelInput&, Mode,
                                      const ForwardOptions&, Activations<double>*,
                                      AttentionTensor*);
template void backward<float>(const Params<float>&, const ModelInput&, Mode,
                              const Activations<float>&, float, Params<float>&);
template void backward<double>(const Params<double>&, const ModelInput&, Mode,
                               const Activations<double>&, double, Params<double>&);
template AttentionTensor extract_attention<float>(const Params<float>&, const std::vector<int>&,
                                                  const std::vector<int>*);
template AttentionTensor extract_attention<double>(const Params<double>&, const std::vector<int>&,
                                                   const std::vector<int>*);

} // namespace finadapt::model
