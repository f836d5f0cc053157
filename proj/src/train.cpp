#include "finadapt/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "finadapt/error.hpp"

namespace finadapt::train {

using model::Mode;
using model::ModelInput;
using model::Params;

namespace {
// rng stream tags
constexpr uint64_t kShuffleTag = 0x5348;
constexpr uint64_t kDropoutTag = 0x4452;
} // namespace

void TrainConfig::check() const {
    if (learning_rate <= 0.0) throw data_error("learning_rate must be > 0");
    if (batch_size < 1) throw data_error("batch_size must be >= 1");
    if (phase == Phase::finetune) {
        if (epochs < 1) throw data_error("finetune requires epochs >= 1");
    } else {
        if (steps < 0) throw data_error("steps must be >= 0");
        if (warmup_steps > steps) throw data_error("warmup_steps must be <= total steps");
    }
}

double lr_at(int64_t step, double learning_rate, int64_t warmup_steps, int64_t total_steps) {
    if (step < 0) throw data_error("lr_at: step must be >= 0");
    if (step < warmup_steps) {
        return learning_rate * static_cast<double>(step) / static_cast<double>(warmup_steps);
    }
    if (step >= total_steps) return total_steps > warmup_steps ? 0.0 : learning_rate;
    return learning_rate * static_cast<double>(total_steps - step) /
           static_cast<double>(total_steps - warmup_steps);
}

void OptimizerState::init(const model::ModelConfig& cfg) {
    step = 0;
    m.allocate(cfg);
    v.allocate(cfg);
}

void adamw_step(Params<float>& params, const Params<float>& grads, OptimizerState& st,
                double lr) {
    st.step += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));

    std::vector<const model::Tensor<float>*> gsrc;
    model::for_each_tensor(grads, [&](const model::TensorInfo&, const model::Tensor<float>& t) {
        gsrc.push_back(&t);
    });
    std::vector<model::Tensor<float>*> msrc, vsrc;
    model::for_each_tensor(st.m, [&](const model::TensorInfo&, model::Tensor<float>& t) {
        msrc.push_back(&t);
    });
    model::for_each_tensor(st.v, [&](const model::TensorInfo&, model::Tensor<float>& t) {
        vsrc.push_back(&t);
    });

    size_t idx = 0;
    model::for_each_tensor(params, [&](const model::TensorInfo& info, model::Tensor<float>& t) {
        const auto& g = gsrc[idx]->v;
        auto& m = msrc[idx]->v;
        auto& v = vsrc[idx]->v;
        ++idx;
        const bool decay = info.weight_decay;
        for (size_t i = 0; i < t.v.size(); ++i) {
            const double gi = g[i];
            const double mi = st.beta1 * m[i] + (1.0 - st.beta1) * gi;
            const double vi = st.beta2 * v[i] + (1.0 - st.beta2) * gi * gi;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            double update = (mi / bc1) / (std::sqrt(vi / bc2) + st.eps);
            if (decay) update += st.weight_decay * static_cast<double>(t.v[i]);
            t.v[i] = static_cast<float>(static_cast<double>(t.v[i]) - lr * update);
        }
    });
}

void write_metrics_csv(const MetricsLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open metrics file: " + path);
    out << "step,loss,lr\n";
    char buf[96];
    for (const auto& row : log) {
        std::snprintf(buf, sizeof(buf), "%lld,%.8g,%.8g\n", static_cast<long long>(row.step),
                      row.loss, row.lr);
        out << buf;
    }
}

model::ModelInput input_from_record(const pretrain::PretrainExample& ex) {
    ModelInput in;
    const int L = ex.seq_len();
    in.ids.reserve(L);
    in.segments.reserve(L);
    for (int i = 0; i < L; ++i) {
        in.ids.push_back(static_cast<int>(ex.input_ids[i]));
        in.segments.push_back(ex.segment_ids[i]);
    }
    for (uint16_t p : ex.masked_positions) in.masked_positions.push_back(p);
    for (uint32_t l : ex.masked_label_ids) in.masked_labels.push_back(static_cast<int>(l));
    in.nsp_label = ex.is_random_next;
    return in;
}

namespace {

// Shared step loop. `inputs` are prebuilt model inputs; total_steps batches are
// drawn by cycling a per-epoch shuffled order.
MetricsLog run_steps(Params<float>& params, const std::vector<ModelInput>& inputs, Mode mode,
                     const TrainConfig& cfg, int64_t total_steps) {
    if (inputs.empty()) throw data_error("training data is empty");
    model::validate_finite(params);

    OptimizerState opt;
    opt.init(params.cfg);
    Params<float> grads;
    grads.allocate(params.cfg);

    std::vector<size_t> order(inputs.size());
    std::iota(order.begin(), order.end(), 0);
    int64_t epoch = 0;
    Rng shuffle_rng = Rng::from_key({cfg.seed, kShuffleTag, static_cast<uint64_t>(epoch)});
    shuffle_rng.shuffle(order);
    size_t cursor = 0;

    MetricsLog log;
    double loss_accum = 0.0;
    int64_t loss_count = 0;

    for (int64_t step = 1; step <= total_steps; ++step) {
        model::for_each_tensor(grads, [](const model::TensorInfo&, model::Tensor<float>& t) {
            std::fill(t.v.begin(), t.v.end(), 0.0f);
        });

        const int64_t bsz = std::min<int64_t>(cfg.batch_size, static_cast<int64_t>(inputs.size()));
        double batch_loss = 0.0;
        for (int64_t b = 0; b < bsz; ++b) {
            if (cursor >= order.size()) {
                ++epoch;
                shuffle_rng = Rng::from_key({cfg.seed, kShuffleTag, static_cast<uint64_t>(epoch)});
                shuffle_rng.shuffle(order);
                cursor = 0;
            }
            const ModelInput& in = inputs[order[cursor++]];
            Rng dropout_rng = Rng::from_key({cfg.seed, kDropoutTag, static_cast<uint64_t>(step),
                                             static_cast<uint64_t>(b)});
            model::ForwardOptions fopt;
            fopt.training = true;
            fopt.dropout_rng = &dropout_rng;
            model::Activations<float> acts;
            try {
                const auto stats = model::forward(params, in, mode, fopt, &acts);
                batch_loss += stats.loss;
                model::backward(params, in, mode, acts, 1.0f / static_cast<float>(bsz), grads);
            } catch (const Error& e) {
                throw data_error("training aborted at step " + std::to_string(step) + ": " +
                                 e.what());
            }
        }
        batch_loss /= static_cast<double>(bsz);
        const double lr = lr_at(step, cfg.learning_rate, cfg.warmup_steps, total_steps);
        adamw_step(params, grads, opt, lr);

        loss_accum += batch_loss;
        ++loss_count;
        if (step % std::max<int64_t>(1, cfg.log_interval) == 0 || step == total_steps) {
            log.push_back({step, loss_accum / static_cast<double>(loss_count), lr});
            loss_accum = 0.0;
            loss_count = 0;
        }
    }
    return log;
}

} // namespace

MetricsLog train_pretrain(Params<float>& params,
                          const std::vector<pretrain::PretrainExample>& records,
                          const TrainConfig& cfg) {
    cfg.check();
    std::vector<ModelInput> inputs;
    inputs.reserve(records.size());
    for (const auto& r : records) {
        pretrain::validate_example(r, static_cast<int>(r.input_ids.size()), params.cfg.vocab_size);
        if (r.seq_len() > params.cfg.max_positions) {
            throw data_error("record length exceeds model max_positions");
        }
        inputs.push_back(input_from_record(r));
    }
    if (cfg.steps == 0) return {};
    return run_steps(params, inputs, Mode::pretrain, cfg, cfg.steps);
}

FurtherPretrainResult further_pretrain(const std::string& base_ckpt_path,
                                       const std::vector<pretrain::PretrainExample>& records,
                                       const TrainConfig& cfg) {
    FurtherPretrainResult out;
    out.base_hash = model::file_hash_hex(base_ckpt_path);
    out.params = model::load_checkpoint(base_ckpt_path);
    out.log = train_pretrain(out.params, records, cfg);
    return out;
}

std::vector<int> encode_classification_input(const std::string& text, const tok::Vocab& vocab,
                                             int max_seq_len) {
    if (max_seq_len < 3) throw data_error("max_seq_len too small for [CLS] and [SEP]");
    const tok::TokenSeq seq = tok::tokenize(text, vocab);
    std::vector<int> ids;
    ids.reserve(static_cast<size_t>(max_seq_len));
    ids.push_back(tok::kClsId);
    const size_t budget = static_cast<size_t>(max_seq_len) - 2;
    for (size_t i = 0; i < seq.ids.size() && i < budget; ++i) ids.push_back(seq.ids[i]);
    ids.push_back(tok::kSepId);
    return ids;
}

MetricsLog train_finetune(Params<float>& params, const std::vector<ClassifyExample>& data,
                          Mode mode, const TrainConfig& cfg) {
    cfg.check();
    if (mode == Mode::pretrain) throw data_error("train_finetune requires a classification mode");
    std::vector<ModelInput> inputs;
    inputs.reserve(data.size());
    for (const auto& ex : data) {
        ModelInput in;
        in.ids = ex.ids;
        in.segments.assign(ex.ids.size(), 0);
        in.label = ex.label;
        in.multi_labels = ex.multi_labels;
        inputs.push_back(std::move(in));
    }
    if (inputs.empty()) throw data_error("training data is empty");
    const int64_t steps_per_epoch =
        (static_cast<int64_t>(inputs.size()) + cfg.batch_size - 1) / cfg.batch_size;
    const int64_t total = cfg.epochs * steps_per_epoch;
    return run_steps(params, inputs, mode, cfg, total);
}

int predict_multiclass(const Params<float>& params, const std::vector<int>& ids) {
    ModelInput in;
    in.ids = ids;
    in.segments.assign(ids.size(), 0);
    const auto stats = model::forward(params, in, Mode::classify_multiclass);
    int best = 0;
    for (size_t c = 1; c < stats.logits.size(); ++c) {
        if (stats.logits[c] > stats.logits[best]) best = static_cast<int>(c);
    }
    return best;
}

std::vector<double> predict_multilabel_probs(const Params<float>& params,
                                             const std::vector<int>& ids) {
    ModelInput in;
    in.ids = ids;
    in.segments.assign(ids.size(), 0);
    const auto stats = model::forward(params, in, Mode::classify_multilabel);
    std::vector<double> probs(stats.logits.size());
    for (size_t c = 0; c < probs.size(); ++c) {
        probs[c] = 1.0 / (1.0 + std::exp(-stats.logits[c]));
    }
    return probs;
}

} // namespace finadapt::train
