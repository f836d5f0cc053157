#include "finadapt/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "finadapt/attention_analysis.hpp"
#include "finadapt/augment.hpp"
#include "finadapt/config.hpp"
#include "finadapt/corpus.hpp"
#include "finadapt/error.hpp"
#include "finadapt/esg_data.hpp"
#include "finadapt/eval.hpp"
#include "finadapt/model.hpp"
#include "finadapt/pretrain_data.hpp"
#include "finadapt/time_util.hpp"
#include "finadapt/tokenizer.hpp"
#include "finadapt/train.hpp"

namespace finadapt::cli {

namespace {

constexpr const char* kVersion =
    "finadapt 1.0.0 (record format 1, checkpoint FACKPT 1, dump format 1)";

const Config::Schema& config_schema() {
    static const Config::Schema schema = {
        {"pipeline", {"seed", "threads"}},
        {"filter",
         {"allowed_topic_codes", "excluded_topic_codes", "excluded_headline_keywords",
          "max_non_alpha_fraction", "required_language"}},
        {"pretrain_data", {"max_seq_len", "dup_factor", "mask_prob", "max_masks_per_seq"}},
        {"model", {"n_layers", "n_heads", "hidden", "ffn_hidden", "max_positions", "dropout_prob"}},
        {"train",
         {"steps", "epochs", "batch_size", "learning_rate", "warmup_steps", "max_seq_len",
          "log_interval"}},
        {"augment", {"temperatures", "samples_per_temperature", "max_decode_len"}},
        {"split", {"test_fraction"}},
    };
    return schema;
}

Config load_config(const std::string& path) {
    Config cfg = Config::parse_file(path);
    cfg.validate(config_schema());
    return cfg;
}

uint64_t config_seed(const Config& cfg) {
    return static_cast<uint64_t>(cfg.get_i64("pipeline", "seed", 0));
}

corpus::FilterConfig filter_config_from(const Config& cfg) {
    corpus::FilterConfig fc;
    if (cfg.has("filter", "allowed_topic_codes")) {
        for (auto& c : cfg.get_list("filter", "allowed_topic_codes")) fc.allowed_topic_codes.insert(c);
    }
    if (cfg.has("filter", "excluded_topic_codes")) {
        for (auto& c : cfg.get_list("filter", "excluded_topic_codes")) {
            fc.excluded_topic_codes.insert(c);
        }
    }
    if (cfg.has("filter", "excluded_headline_keywords")) {
        for (auto& c : cfg.get_list("filter", "excluded_headline_keywords")) {
            fc.excluded_headline_keywords.insert(c);
        }
    }
    fc.max_non_alpha_fraction = cfg.get_f64("filter", "max_non_alpha_fraction", 0.1);
    fc.required_language = cfg.get_str("filter", "required_language", "en");
    fc.check();
    return fc;
}

pretrain::PretrainDataConfig pretrain_data_config_from(const Config& cfg) {
    pretrain::PretrainDataConfig pc;
    pc.max_seq_len = static_cast<int>(cfg.get_i64("pretrain_data", "max_seq_len", 128));
    pc.dup_factor = static_cast<int>(cfg.get_i64("pretrain_data", "dup_factor", 10));
    pc.mask_prob = cfg.get_f64("pretrain_data", "mask_prob", 0.15);
    pc.max_masks_per_seq = static_cast<int>(cfg.get_i64("pretrain_data", "max_masks_per_seq", 0));
    pc.rng_seed = config_seed(cfg);
    pc.check();
    return pc;
}

model::ModelConfig model_config_from(const Config& cfg, int vocab_size) {
    model::ModelConfig mc;
    mc.n_layers = static_cast<int>(cfg.get_i64("model", "n_layers", 4));
    mc.n_heads = static_cast<int>(cfg.get_i64("model", "n_heads", 4));
    mc.hidden = static_cast<int>(cfg.get_i64("model", "hidden", 64));
    mc.ffn_hidden = static_cast<int>(cfg.get_i64("model", "ffn_hidden", 256));
    mc.max_positions = static_cast<int>(cfg.get_i64("model", "max_positions", 128));
    mc.dropout_prob = cfg.get_f64("model", "dropout_prob", 0.1);
    mc.vocab_size = vocab_size;
    mc.check();
    return mc;
}

train::TrainConfig train_config_from(const Config& cfg, train::Phase phase) {
    train::TrainConfig tc;
    tc.phase = phase;
    tc.steps = cfg.get_i64("train", "steps", 0);
    tc.epochs = cfg.get_i64("train", "epochs", 0);
    tc.batch_size = cfg.get_i64("train", "batch_size", 32);
    tc.learning_rate = cfg.get_f64("train", "learning_rate", 1e-3);
    tc.warmup_steps = cfg.get_i64("train", "warmup_steps", 0);
    tc.seed = config_seed(cfg);
    tc.max_seq_len = static_cast<int>(cfg.get_i64("train", "max_seq_len", 128));
    tc.log_interval = cfg.get_i64("train", "log_interval", 10);
    tc.check();
    return tc;
}

augment::AugmentConfig augment_config_from(const Config& cfg) {
    augment::AugmentConfig ac;
    if (cfg.has("augment", "temperatures")) {
        ac.temperatures = cfg.get_f64_list("augment", "temperatures");
    }
    ac.samples_per_temperature =
        static_cast<int>(cfg.get_i64("augment", "samples_per_temperature", 3));
    ac.max_decode_len = static_cast<int>(cfg.get_i64("augment", "max_decode_len", 128));
    ac.seed = config_seed(cfg);
    ac.check();
    return ac;
}

bool looks_like_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open input: " + path);
    std::string line;
    while (std::getline(in, line)) {
        for (char c : line) {
            if (c == ' ' || c == '\t') continue;
            return c == '{';
        }
    }
    return false;
}

// Sentence-segmented documents from either JSONL articles (one document per
// article) or plain text (one sentence per line, blank line between docs).
std::vector<std::vector<std::string>> load_documents(const std::string& path) {
    std::vector<std::vector<std::string>> docs;
    if (looks_like_jsonl(path)) {
        for (const auto& a : corpus::read_articles(path)) {
            std::vector<std::string> sentences;
            for (const auto& s : corpus::split_sentences(a.body)) sentences.push_back(s.text);
            if (!sentences.empty()) docs.push_back(std::move(sentences));
        }
    } else {
        std::ifstream in(path);
        if (!in) throw io_error("cannot open input: " + path);
        std::string line;
        std::vector<std::string> current;
        while (std::getline(in, line)) {
            if (line.empty()) {
                if (!current.empty()) docs.push_back(std::move(current));
                current = {};
            } else {
                current.push_back(line);
            }
        }
        if (!current.empty()) docs.push_back(std::move(current));
    }
    if (docs.empty()) throw data_error("no documents in " + path);
    return docs;
}

std::vector<std::string> load_sentences_flat(const std::string& path) {
    std::vector<std::string> out;
    for (auto& doc : load_documents(path)) {
        for (auto& s : doc) out.push_back(std::move(s));
    }
    return out;
}

// ---- subcommand bodies ----

int cmd_filter_corpus(const std::string& config_path, const std::string& in_path,
                      const std::string& out_path, const std::string& report_path, int threads) {
    const Config cfg = load_config(config_path);
    const corpus::FilterConfig fc = filter_config_from(cfg);
    const int nthreads =
        threads > 0 ? threads : static_cast<int>(cfg.get_i64("pipeline", "threads", 1));
    const corpus::FilterReport report =
        corpus::filter_corpus_stream(in_path, out_path, fc, nthreads);
    std::ofstream rep(report_path);
    if (!rep) throw io_error("cannot open report file: " + report_path);
    report.write_csv(rep);
    std::cerr << "kept " << report.kept << " of " << report.total() << " articles\n";
    return 0;
}

int cmd_build_vocab(const std::string& in_path, int size, const std::string& out_path,
                    const std::vector<std::string>& reserved, bool uncased) {
    tok::BuildVocabOptions opts;
    opts.cased = !uncased;
    opts.reserved = reserved;
    const auto sentences = load_sentences_flat(in_path);
    const tok::Vocab vocab = tok::build_vocab(sentences, size, opts);
    vocab.save(out_path);
    std::cerr << "vocab size " << vocab.size() << "\n";
    return 0;
}

int cmd_make_pretrain_data(const std::string& vocab_path, const std::string& config_path,
                           const std::string& in_path, const std::string& out_path) {
    const Config cfg = load_config(config_path);
    const pretrain::PretrainDataConfig pc = pretrain_data_config_from(cfg);
    const tok::Vocab vocab = tok::Vocab::load(vocab_path);
    std::vector<pretrain::TokenizedDoc> docs;
    for (const auto& doc : load_documents(in_path)) {
        pretrain::TokenizedDoc tdoc;
        for (const auto& s : doc) {
            auto seq = tok::tokenize(s, vocab);
            if (!seq.ids.empty()) tdoc.push_back(std::move(seq.ids));
        }
        if (!tdoc.empty()) docs.push_back(std::move(tdoc));
    }
    const auto examples = pretrain::generate(docs, pc, vocab.size());
    pretrain::write_records(examples, pc.max_seq_len, out_path);
    std::cerr << "wrote " << examples.size() << " records\n";
    return 0;
}

int cmd_pretrain(const std::string& config_path, const std::string& records_path,
                 const std::string& vocab_path, const std::string& init_path,
                 const std::string& out_path, const std::string& metrics_path) {
    const Config cfg = load_config(config_path);
    const train::TrainConfig tc = train_config_from(cfg, init_path.empty()
                                                             ? train::Phase::pretrain
                                                             : train::Phase::further_pretrain);
    int max_seq_len = 0;
    const auto records = pretrain::read_records(records_path, &max_seq_len);

    train::MetricsLog log;
    if (init_path.empty()) {
        const tok::Vocab vocab = tok::Vocab::load(vocab_path);
        model::ModelConfig mc = model_config_from(cfg, vocab.size());
        if (max_seq_len > mc.max_positions) {
            throw data_error("record max_seq_len exceeds model max_positions");
        }
        Rng rng = Rng::from_key({tc.seed, 0x494e});
        auto params = model::init_params<float>(mc, rng);
        log = train::train_pretrain(params, records, tc);
        model::save_checkpoint(params, out_path);
    } else {
        auto result = train::further_pretrain(init_path, records, tc);
        log = std::move(result.log);
        model::save_checkpoint(result.params, out_path, result.base_hash);
    }
    if (!metrics_path.empty()) train::write_metrics_csv(log, metrics_path);
    std::cerr << "saved checkpoint " << out_path << "\n";
    return 0;
}

struct SplitDataset {
    std::vector<esg::LabeledArticle> train;
    std::vector<esg::LabeledArticle> test; // originals only
};

// Chronological split over ORIGINAL articles; augmented articles follow their
// origin into the training split and never reach the test side.
SplitDataset split_labeled(const std::vector<esg::LabeledArticle>& all, double test_fraction) {
    std::vector<const esg::LabeledArticle*> originals;
    std::vector<const esg::LabeledArticle*> augmented;
    for (const auto& a : all) {
        (a.provenance.kind == esg::Provenance::Kind::original ? originals : augmented).push_back(&a);
    }
    std::vector<std::pair<int64_t, std::string>> keys;
    keys.reserve(originals.size());
    for (const auto* a : originals) keys.push_back({a->timestamp, a->id});
    eval::SplitConfig sc;
    sc.test_fraction = test_fraction;
    const auto split = eval::chronological_split(keys, sc);

    SplitDataset out;
    std::set<std::string> train_ids;
    for (size_t i : split.train) {
        out.train.push_back(*originals[i]);
        train_ids.insert(originals[i]->id);
    }
    for (size_t i : split.test) out.test.push_back(*originals[i]);
    for (const auto* a : augmented) {
        if (train_ids.count(a->provenance.origin_id)) out.train.push_back(*a);
    }
    return out;
}

int cmd_finetune(const std::string& config_path, const std::string& dataset_path,
                 const std::string& vocab_path, const std::string& init_path,
                 const std::string& out_path, const std::string& task,
                 const std::string& test_pred_path, const std::string& metrics_path) {
    const Config cfg = load_config(config_path);
    const train::TrainConfig tc = train_config_from(cfg, train::Phase::finetune);
    const double test_fraction = cfg.get_f64("split", "test_fraction", 0.30);
    const tok::Vocab vocab = tok::Vocab::load(vocab_path);
    const auto dataset = esg::read_labeled(dataset_path);
    const SplitDataset split = split_labeled(dataset, test_fraction);
    const bool multilabel = task == "multilabel";
    if (!multilabel && task != "multiclass") {
        throw usage_error("--task must be multiclass or multilabel");
    }

    const int n_classes = multilabel ? static_cast<int>(esg::sdg_label_space().size())
                                     : esg::kNumEsgLabels;
    Rng head_rng = Rng::from_key({tc.seed, 0x4845});
    auto params = model::load_for_finetune(init_path, n_classes, head_rng);
    if (params.cfg.vocab_size != vocab.size()) {
        throw data_error("checkpoint vocab_size " + std::to_string(params.cfg.vocab_size) +
                         " != vocab file size " + std::to_string(vocab.size()));
    }

    std::vector<train::ClassifyExample> train_set;
    if (multilabel) {
        for (const auto& ex : esg::build_multilabel_dataset(split.train)) {
            train::ClassifyExample ce;
            ce.ids = train::encode_classification_input(ex.text, vocab, tc.max_seq_len);
            ce.multi_labels = ex.targets;
            train_set.push_back(std::move(ce));
        }
    } else {
        for (const auto& a : split.train) {
            train::ClassifyExample ce;
            ce.ids = train::encode_classification_input(a.text, vocab, tc.max_seq_len);
            ce.label = static_cast<int>(a.esg_label);
            train_set.push_back(std::move(ce));
        }
    }
    const auto log = train::train_finetune(
        params, train_set, multilabel ? model::Mode::classify_multilabel
                                      : model::Mode::classify_multiclass, tc);
    model::save_checkpoint(params, out_path);
    if (!metrics_path.empty()) train::write_metrics_csv(log, metrics_path);

    if (!test_pred_path.empty()) {
        std::ofstream pred(test_pred_path);
        if (!pred) throw io_error("cannot open predictions file: " + test_pred_path);
        if (multilabel) {
            for (const auto& ex : esg::build_multilabel_dataset(split.test)) {
                const auto ids = train::encode_classification_input(ex.text, vocab, tc.max_seq_len);
                const auto probs = train::predict_multilabel_probs(params, ids);
                pred << ex.id;
                char buf[24];
                for (double p : probs) {
                    std::snprintf(buf, sizeof(buf), ",%.9g", p);
                    pred << buf;
                }
                pred << "\n";
            }
        } else {
            for (const auto& a : split.test) {
                const auto ids = train::encode_classification_input(a.text, vocab, tc.max_seq_len);
                const int p = train::predict_multiclass(params, ids);
                pred << a.id << "," << esg::esg_label_name(static_cast<esg::EsgLabel>(p)) << "\n";
            }
        }
    }
    std::cerr << "saved checkpoint " << out_path << "\n";
    return 0;
}

std::pair<std::unique_ptr<augment::Translator>, std::unique_ptr<augment::Translator>>
make_translators(const std::string& kind, const std::vector<esg::LabeledArticle>& dataset) {
    std::set<std::string> words;
    for (const auto& a : dataset) {
        for (const auto& w : tok::split_words(a.text)) words.insert(w);
    }
    if (kind == "codebook") {
        auto [fwd, rev] = augment::CodebookTranslator::make_pair_from_words(
            std::vector<std::string>(words.begin(), words.end()));
        return {std::move(fwd), std::move(rev)};
    }
    if (kind == "synonym") {
        std::vector<std::vector<std::string>> families;
        for (int i = 0; i < esg::kNumEsgLabels; ++i) {
            families.push_back(esg::class_keyword_pool(static_cast<esg::EsgLabel>(i)));
        }
        return augment::SynonymTranslator::make_pair(
            families, std::vector<std::string>(words.begin(), words.end()));
    }
    throw usage_error("--translator must be codebook or synonym");
}

int cmd_augment(const std::string& dataset_path, const std::string& config_path,
                const std::string& out_path, const std::string& translator_kind) {
    const Config cfg = load_config(config_path);
    const augment::AugmentConfig ac = augment_config_from(cfg);
    const auto dataset = esg::read_labeled(dataset_path);
    auto [fwd, rev] = make_translators(translator_kind, dataset);
    const auto augmented = augment::augment_dataset(dataset, ac, *fwd, *rev);
    esg::write_labeled(augmented, out_path);
    std::cerr << "wrote " << augmented.size() << " articles (" << dataset.size()
              << " originals)\n";
    return 0;
}

int cmd_synth_dataset(uint64_t seed, int size, const std::string& out_path) {
    const auto dataset = esg::generate_synthetic_dataset(seed, size);
    esg::write_labeled(dataset, out_path);
    std::cerr << "wrote " << dataset.size() << " articles\n";
    return 0;
}

std::map<std::string, std::string> read_pred_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open predictions: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw data_error(path + ":" + std::to_string(lineno) + ": expected id,value");
        }
        out[line.substr(0, comma)] = line.substr(comma + 1);
    }
    return out;
}

int cmd_evaluate(const std::string& gold_path, const std::string& pred_path,
                 const std::string& pred_b_path, const std::string& out_path,
                 const std::string& task, bool merge_env) {
    const auto dataset = esg::read_labeled(gold_path);
    std::ofstream out(out_path);
    if (!out) throw io_error("cannot open output csv: " + out_path);

    if (task == "multilabel") {
        const auto gold_ml = esg::build_multilabel_dataset(dataset);
        std::map<std::string, const esg::MultilabelExample*> by_id;
        for (const auto& ex : gold_ml) by_id[ex.id] = &ex;
        const auto preds = read_pred_csv(pred_path);
        std::vector<std::vector<uint8_t>> gold;
        std::vector<std::vector<double>> probs;
        for (const auto& [id, value] : preds) {
            auto it = by_id.find(id);
            if (it == by_id.end()) throw data_error("prediction for unknown id: " + id);
            std::vector<double> p;
            std::istringstream ss(value);
            std::string cell;
            while (std::getline(ss, cell, ',')) p.push_back(std::stod(cell));
            if (p.size() != it->second->targets.size()) {
                throw data_error("prediction width mismatch for id " + id);
            }
            gold.push_back(it->second->targets);
            probs.push_back(std::move(p));
        }
        const auto res = eval::multilabel_prf(gold, probs);
        out << "metric,value\n";
        char buf[64];
        std::snprintf(buf, sizeof(buf), "loss,%.6f\n", res.loss);
        out << buf;
        std::snprintf(buf, sizeof(buf), "precision,%.6f\n", res.micro.precision);
        out << buf;
        std::snprintf(buf, sizeof(buf), "recall,%.6f\n", res.micro.recall);
        out << buf;
        std::snprintf(buf, sizeof(buf), "f1,%.6f\n", res.micro.f1);
        out << buf;
        if (merge_env) {
            std::vector<std::vector<uint8_t>> pred_bin;
            pred_bin.reserve(probs.size());
            for (const auto& p : probs) {
                std::vector<uint8_t> row(p.size());
                for (size_t c = 0; c < p.size(); ++c) row[c] = p[c] > 0.5 ? 1 : 0;
                pred_bin.push_back(std::move(row));
            }
            esg::merge_environmental_sdgs(pred_bin, gold);
            const auto merged = eval::multilabel_prf_binary(gold, pred_bin);
            std::snprintf(buf, sizeof(buf), "merged_env_f1,%.6f\n", merged.f1);
            out << buf;
        }
        return 0;
    }
    if (task != "multiclass") throw usage_error("--task must be multiclass or multilabel");

    std::map<std::string, int> gold_by_id;
    for (const auto& a : dataset) gold_by_id[a.id] = static_cast<int>(a.esg_label);
    auto align = [&](const std::string& path, std::vector<int>& gold, std::vector<int>& pred) {
        for (const auto& [id, value] : read_pred_csv(path)) {
            auto it = gold_by_id.find(id);
            if (it == gold_by_id.end()) throw data_error("prediction for unknown id: " + id);
            gold.push_back(it->second);
            pred.push_back(static_cast<int>(esg::esg_label_from_name(value)));
        }
    };
    std::vector<int> gold, pred_a;
    align(pred_path, gold, pred_a);
    const auto res = eval::weighted_prf(gold, pred_a, esg::kNumEsgLabels);

    out << "row,class,precision,recall,f1,support\n";
    char buf[160];
    for (int c = 0; c < esg::kNumEsgLabels; ++c) {
        const auto& m = res.per_class[static_cast<size_t>(c)];
        std::snprintf(buf, sizeof(buf), "class,%s,%.6f,%.6f,%.6f,%llu\n",
                      esg::esg_label_name(static_cast<esg::EsgLabel>(c)), m.precision, m.recall,
                      m.f1, static_cast<unsigned long long>(res.support[static_cast<size_t>(c)]));
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "weighted,all,%.6f,%.6f,%.6f,%llu\n", res.weighted.precision,
                  res.weighted.recall, res.weighted.f1,
                  static_cast<unsigned long long>(gold.size()));
    out << buf;

    if (!pred_b_path.empty()) {
        std::vector<int> gold_b, pred_b;
        align(pred_b_path, gold_b, pred_b);
        if (gold_b != gold) throw data_error("prediction files cover different test sets");
        const auto mc = eval::mcnemar(gold, pred_a, pred_b);
        std::snprintf(buf, sizeof(buf), "mcnemar,b=%llu;c=%llu,%.9g,%s,%s,%llu\n",
                      static_cast<unsigned long long>(mc.b),
                      static_cast<unsigned long long>(mc.c), mc.p_value,
                      mc.stars.empty() ? "ns" : mc.stars.c_str(),
                      mc.no_discordance ? "no-discordance" : "ok",
                      static_cast<unsigned long long>(gold.size()));
        out << buf;
    }
    return 0;
}

int cmd_dump_attention(const std::string& ckpt_path, const std::string& in_path,
                       const std::string& vocab_path, const std::string& out_path) {
    const tok::Vocab vocab = tok::Vocab::load(vocab_path);
    const auto params = model::load_checkpoint(ckpt_path);
    if (params.cfg.vocab_size != vocab.size()) {
        throw data_error("checkpoint vocab_size != vocab file size");
    }
    std::ifstream in(in_path);
    if (!in) throw io_error("cannot open texts: " + in_path);

    attn::AttentionDump dump;
    dump.model_id = model::file_hash_hex(ckpt_path);
    dump.n_layers = params.cfg.n_layers;
    dump.n_heads = params.cfg.n_heads;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const tok::TokenSeq seq = tok::tokenize(line, vocab);
        attn::TextAttention t;
        t.pieces.push_back(tok::kSpecialTokens[tok::kClsId]);
        t.word_starts.push_back(1);
        std::vector<int> ids = {tok::kClsId};
        const size_t budget = static_cast<size_t>(params.cfg.max_positions) - 2;
        for (size_t i = 0; i < seq.ids.size() && i < budget; ++i) {
            ids.push_back(seq.ids[i]);
            t.pieces.push_back(seq.pieces[i]);
            t.word_starts.push_back(seq.word_starts[i]);
        }
        ids.push_back(tok::kSepId);
        t.pieces.push_back(tok::kSpecialTokens[tok::kSepId]);
        t.word_starts.push_back(1);
        t.attention = model::extract_attention(params, ids);
        dump.texts.push_back(std::move(t));
    }
    if (dump.texts.empty()) throw data_error("no texts to dump");
    attn::write_dump(dump, out_path);
    std::cerr << "dumped " << dump.texts.size() << " texts\n";
    return 0;
}

int cmd_compare_attention(const std::string& a_path, const std::string& b_path,
                          const std::string& out_path) {
    const auto a = attn::read_dump(a_path);
    const auto b = attn::read_dump(b_path);
    const auto sim = attn::head_cosine_similarity(a, b);
    attn::emit_heatmap_csv(sim, out_path);
    return 0;
}

int cmd_tag_attention(const std::string& dump_path, const std::string& tags_path,
                      const std::string& tag_class, double threshold,
                      const std::string& out_path, bool exclude_special) {
    const auto dump = attn::read_dump(dump_path);
    const auto alignments = attn::read_alignments(tags_path);
    attn::TagClass cls;
    if (tag_class == "entity") {
        cls = attn::TagClass::entity;
    } else if (tag_class == "pos") {
        cls = attn::TagClass::pos;
    } else if (tag_class == "dep") {
        cls = attn::TagClass::dep;
    } else {
        throw usage_error("--class must be entity, pos or dep");
    }
    const auto freq = attn::tag_attention_frequency(dump, alignments, cls, threshold,
                                                    !exclude_special);
    attn::write_tag_frequency_csv(freq, out_path);
    return 0;
}

int cmd_show_sdg_map(const std::string& out_path) {
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw io_error("cannot open output: " + out_path);
        os = &file;
    }
    *os << "esg_controversy,un_sdg,count\n";
    for (int i = 0; i < esg::kNumEsgLabels; ++i) {
        const auto label = static_cast<esg::EsgLabel>(i);
        *os << "\"" << esg::esg_label_name(label) << "\",\"";
        const auto& sdgs = esg::map_esg_to_sdg(label);
        for (size_t k = 0; k < sdgs.size(); ++k) {
            if (k > 0) *os << ";";
            *os << sdgs[k];
        }
        *os << "\"," << esg::esg_reference_count(label) << "\n";
    }
    return 0;
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"finadapt: domain-adaptive pre-training, augmentation, fine-tuning and "
                 "attention analysis for news classification"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // filter-corpus
    std::string config_path, in_path, out_path, report_path;
    int threads = 0;
    auto* filter = app.add_subcommand("filter-corpus", "Filter a JSONL article corpus");
    filter->add_option("--config", config_path)->required();
    filter->add_option("--in", in_path)->required();
    filter->add_option("--out", out_path)->required();
    filter->add_option("--report", report_path)->required();
    filter->add_option("--threads", threads);

    // build-vocab
    std::string bv_in, bv_out;
    int bv_size = 0;
    std::vector<std::string> bv_reserved;
    bool bv_uncased = false;
    auto* build_vocab = app.add_subcommand("build-vocab", "Build a subword vocabulary");
    build_vocab->add_option("--in", bv_in)->required();
    build_vocab->add_option("--size", bv_size)->required();
    build_vocab->add_option("--out", bv_out)->required();
    build_vocab->add_option("--reserved", bv_reserved);
    build_vocab->add_flag("--uncased", bv_uncased);

    // make-pretrain-data
    std::string mp_vocab, mp_config, mp_in, mp_out;
    auto* make_data = app.add_subcommand("make-pretrain-data", "Generate MLM+NSP records");
    make_data->add_option("--vocab", mp_vocab)->required();
    make_data->add_option("--config", mp_config)->required();
    make_data->add_option("--in", mp_in)->required();
    make_data->add_option("--out", mp_out)->required();

    // pretrain / further-pretrain
    std::string pt_config, pt_records, pt_vocab, pt_init, pt_out, pt_metrics;
    auto* pretrain_cmd = app.add_subcommand("pretrain", "Pre-train from scratch");
    pretrain_cmd->add_option("--config", pt_config)->required();
    pretrain_cmd->add_option("--records", pt_records)->required();
    pretrain_cmd->add_option("--vocab", pt_vocab)->required();
    pretrain_cmd->add_option("--out", pt_out)->required();
    pretrain_cmd->add_option("--metrics", pt_metrics);

    std::string fp_config, fp_records, fp_init, fp_out, fp_metrics;
    auto* further_cmd =
        app.add_subcommand("further-pretrain", "Continue pre-training from a checkpoint");
    further_cmd->add_option("--config", fp_config)->required();
    further_cmd->add_option("--records", fp_records)->required();
    further_cmd->add_option("--init", fp_init)->required();
    further_cmd->add_option("--out", fp_out)->required();
    further_cmd->add_option("--metrics", fp_metrics);

    // finetune
    std::string ft_config, ft_dataset, ft_vocab, ft_init, ft_out, ft_task = "multiclass";
    std::string ft_test_pred, ft_metrics;
    auto* finetune_cmd = app.add_subcommand("finetune", "Fine-tune for classification");
    finetune_cmd->add_option("--config", ft_config)->required();
    finetune_cmd->add_option("--dataset", ft_dataset)->required();
    finetune_cmd->add_option("--vocab", ft_vocab)->required();
    finetune_cmd->add_option("--init", ft_init)->required();
    finetune_cmd->add_option("--out", ft_out)->required();
    finetune_cmd->add_option("--task", ft_task);
    finetune_cmd->add_option("--test-pred", ft_test_pred);
    finetune_cmd->add_option("--metrics", ft_metrics);

    // augment
    std::string ag_dataset, ag_config, ag_out, ag_translator = "synonym";
    auto* augment_cmd = app.add_subcommand("augment", "Back-translation augmentation");
    augment_cmd->add_option("--dataset", ag_dataset)->required();
    augment_cmd->add_option("--config", ag_config)->required();
    augment_cmd->add_option("--out", ag_out)->required();
    augment_cmd->add_option("--translator", ag_translator);

    // synth-dataset
    uint64_t sd_seed = 0;
    int sd_size = 0;
    std::string sd_out;
    auto* synth_cmd = app.add_subcommand("synth-dataset", "Generate a synthetic labeled dataset");
    synth_cmd->add_option("--seed", sd_seed)->required();
    synth_cmd->add_option("--size", sd_size)->required();
    synth_cmd->add_option("--out", sd_out)->required();

    // evaluate
    std::string ev_gold, ev_pred, ev_pred_b, ev_out, ev_task = "multiclass";
    bool ev_merge_env = false;
    auto* eval_cmd = app.add_subcommand("evaluate", "Metrics and significance");
    eval_cmd->add_option("--gold", ev_gold)->required();
    eval_cmd->add_option("--pred", ev_pred)->required();
    eval_cmd->add_option("--pred-b", ev_pred_b);
    eval_cmd->add_option("--out", ev_out)->required();
    eval_cmd->add_option("--task", ev_task);
    eval_cmd->add_flag("--merge-env", ev_merge_env);

    // dump-attention
    std::string da_ckpt, da_in, da_vocab, da_out;
    auto* dump_cmd = app.add_subcommand("dump-attention", "Extract attention tensors");
    dump_cmd->add_option("--ckpt", da_ckpt)->required();
    dump_cmd->add_option("--in", da_in)->required();
    dump_cmd->add_option("--vocab", da_vocab)->required();
    dump_cmd->add_option("--out", da_out)->required();

    // compare-attention
    std::string ca_a, ca_b, ca_out;
    auto* cmp_cmd = app.add_subcommand("compare-attention", "Head cosine-similarity map");
    cmp_cmd->add_option("--a", ca_a)->required();
    cmp_cmd->add_option("--b", ca_b)->required();
    cmp_cmd->add_option("--out", ca_out)->required();

    // tag-attention
    std::string ta_dump, ta_tags, ta_class, ta_out;
    double ta_threshold = 0.3;
    bool ta_exclude_special = false;
    auto* tag_cmd = app.add_subcommand("tag-attention", "Tag-conditioned attention frequency");
    tag_cmd->add_option("--dump", ta_dump)->required();
    tag_cmd->add_option("--tags", ta_tags)->required();
    tag_cmd->add_option("--class", ta_class)->required();
    tag_cmd->add_option("--threshold", ta_threshold);
    tag_cmd->add_option("--out", ta_out)->required();
    tag_cmd->add_flag("--exclude-special", ta_exclude_special);

    // show-sdg-map
    std::string sm_out;
    auto* sdg_cmd = app.add_subcommand("show-sdg-map", "Print the ESG -> SDG mapping");
    sdg_cmd->add_option("--out", sm_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (filter->parsed()) {
            return cmd_filter_corpus(config_path, in_path, out_path, report_path, threads);
        }
        if (build_vocab->parsed()) {
            return cmd_build_vocab(bv_in, bv_size, bv_out, bv_reserved, bv_uncased);
        }
        if (make_data->parsed()) return cmd_make_pretrain_data(mp_vocab, mp_config, mp_in, mp_out);
        if (pretrain_cmd->parsed()) {
            return cmd_pretrain(pt_config, pt_records, pt_vocab, "", pt_out, pt_metrics);
        }
        if (further_cmd->parsed()) {
            return cmd_pretrain(fp_config, fp_records, "", fp_init, fp_out, fp_metrics);
        }
        if (finetune_cmd->parsed()) {
            return cmd_finetune(ft_config, ft_dataset, ft_vocab, ft_init, ft_out, ft_task,
                                ft_test_pred, ft_metrics);
        }
        if (augment_cmd->parsed()) return cmd_augment(ag_dataset, ag_config, ag_out, ag_translator);
        if (synth_cmd->parsed()) return cmd_synth_dataset(sd_seed, sd_size, sd_out);
        if (eval_cmd->parsed()) {
            return cmd_evaluate(ev_gold, ev_pred, ev_pred_b, ev_out, ev_task, ev_merge_env);
        }
        if (dump_cmd->parsed()) return cmd_dump_attention(da_ckpt, da_in, da_vocab, da_out);
        if (cmp_cmd->parsed()) return cmd_compare_attention(ca_a, ca_b, ca_out);
        if (tag_cmd->parsed()) {
            return cmd_tag_attention(ta_dump, ta_tags, ta_class, ta_threshold, ta_out,
                                     ta_exclude_special);
        }
        if (sdg_cmd->parsed()) return cmd_show_sdg_map(sm_out);
        std::cerr << "no subcommand\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::usage ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace finadapt::cli
