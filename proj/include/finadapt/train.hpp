#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finadapt/model.hpp"
#include "finadapt/pretrain_data.hpp"
#include "finadapt/tokenizer.hpp"

namespace finadapt::train {

enum class Phase { pretrain, further_pretrain, finetune };

struct TrainConfig {
    Phase phase = Phase::pretrain;
    int64_t steps = 0;  // pretrain phases; finetune derives steps from epochs
    int64_t epochs = 0;
    int64_t batch_size = 32;
    double learning_rate = 1e-3;
    int64_t warmup_steps = 0;
    uint64_t seed = 0;
    int max_seq_len = 128;
    int64_t log_interval = 10;

    void check() const;
};

// Linear warmup 0 -> learning_rate over warmup_steps, then linear decay to 0
// at total_steps. Continuous and piecewise linear.
double lr_at(int64_t step, double learning_rate, int64_t warmup_steps, int64_t total_steps);

// AdamW; weight decay skipped for biases and layer-norm parameters.
struct OptimizerState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    int64_t step = 0;
    model::Params<float> m;
    model::Params<float> v;

    void init(const model::ModelConfig& cfg);
};

void adamw_step(model::Params<float>& params, const model::Params<float>& grads,
                OptimizerState& st, double lr);

struct MetricsRow {
    int64_t step = 0;
    double loss = 0.0;
    double lr = 0.0;
};
using MetricsLog = std::vector<MetricsRow>;

void write_metrics_csv(const MetricsLog& log, const std::string& path);

// MLM+NSP training over pre-generated records. Deterministic given
// (seed, records, config); batches cycle with a fresh shuffle per epoch.
MetricsLog train_pretrain(model::Params<float>& params,
                          const std::vector<pretrain::PretrainExample>& records,
                          const TrainConfig& cfg);

struct FurtherPretrainResult {
    model::Params<float> params;
    std::string base_hash; // FNV-1a of the base checkpoint file
    MetricsLog log;
};

// train_pretrain initialized from a base checkpoint; the base file hash goes
// into the new checkpoint header as provenance.
FurtherPretrainResult further_pretrain(const std::string& base_ckpt_path,
                                       const std::vector<pretrain::PretrainExample>& records,
                                       const TrainConfig& cfg);

struct ClassifyExample {
    std::vector<int> ids; // [CLS] tokens [SEP], head-truncated to max_seq_len
    int label = -1;
    std::vector<uint8_t> multi_labels;
};

// Tokenizes and truncates classification input (keeps the head of the text).
std::vector<int> encode_classification_input(const std::string& text, const tok::Vocab& vocab,
                                             int max_seq_len);

MetricsLog train_finetune(model::Params<float>& params, const std::vector<ClassifyExample>& data,
                          model::Mode mode, const TrainConfig& cfg);

// Inference helpers (dropout off).
int predict_multiclass(const model::Params<float>& params, const std::vector<int>& ids);
std::vector<double> predict_multilabel_probs(const model::Params<float>& params,
                                             const std::vector<int>& ids);

// PretrainExample -> unpadded model input.
model::ModelInput input_from_record(const pretrain::PretrainExample& ex);

} // namespace finadapt::train
