// Command-line front end: dataset preparation, training, evaluation, exports.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "jointkge/checkpoint.hpp"
#include "jointkge/config.hpp"
#include "jointkge/evaluator.hpp"
#include "jointkge/trainer.hpp"

using namespace jointkge;

namespace {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("JOINTKGE_LOG");
    if (!env) return LogLevel::Info;
    const std::string v(env);
    if (v == "quiet") return LogLevel::Quiet;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Info;
}

std::ostream& info() {
    static std::ofstream null_stream;
    if (log_level() == LogLevel::Quiet) {
        if (!null_stream.is_open()) null_stream.setstate(std::ios::badbit);
        return null_stream;
    }
    return std::cerr;
}

// temp file + rename so readers never observe a half-written report
void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write report: " + tmp);
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

KeyValueConfig load_config(const std::string& path) {
    if (path.empty()) return KeyValueConfig();
    return KeyValueConfig::from_file(path);
}

void dump_config(const KeyValueConfig& kv) {
    if (log_level() != LogLevel::Debug) return;
    for (const auto& [k, v] : kv.values()) std::cerr << "config: " << k << " = " << v << "\n";
}

void check_compatible(const Checkpoint& ckpt, const Dataset& ds) {
    if (ckpt.entities.size() != ds.num_entities() || ckpt.relations.size() != ds.num_relations() ||
        ckpt.words.size() != ds.words.size())
        throw std::runtime_error(
            "checkpoint/bundle mismatch: vocabulary sizes differ (checkpoint " +
            std::to_string(ckpt.entities.size()) + "/" + std::to_string(ckpt.relations.size()) +
            "/" + std::to_string(ckpt.words.size()) + ", bundle " +
            std::to_string(ds.num_entities()) + "/" + std::to_string(ds.num_relations()) + "/" +
            std::to_string(ds.words.size()) + ")");
}

const char* category_name(int c) {
    static const char* names[] = {"1-1", "1-n", "n-1", "n-n"};
    return names[c];
}

std::string link_prediction_csv(const LinkPredReport& rep, const RelRankReport& rel) {
    std::ostringstream out;
    out << "metric,raw,filtered\n";
    out << "mean_rank," << rep.overall.mean_rank_raw() << "," << rep.overall.mean_rank_filt()
        << "\n";
    out << "hits@10," << rep.overall.hits10_raw() << "," << rep.overall.hits10_filt() << "\n";
    out << "\n";
    out << "side,category,n,mean_rank_raw,mean_rank_filtered,hits@10_raw,hits@10_filtered\n";
    const char* sides[] = {"head", "tail"};
    for (int s = 0; s < 2; ++s)
        for (int c = 0; c < 4; ++c) {
            const LinkPredCell& cell = rep.by_category[s][c];
            out << sides[s] << "," << category_name(c) << "," << cell.n << ","
                << cell.mean_rank_raw() << "," << cell.mean_rank_filt() << ","
                << cell.hits10_raw() << "," << cell.hits10_filt() << "\n";
        }
    out << "\n";
    out << "relation_metric,raw,filtered\n";
    out << "mean_rank," << rel.mean_rank_raw() << "," << rel.mean_rank_filt() << "\n";
    out << "hits@1," << rel.hits1_raw_pct() << "," << rel.hits1_filt_pct() << "\n";
    return out.str();
}

struct LoadedModel {
    Checkpoint ckpt;
    std::unique_ptr<JointModel> model;
};

LoadedModel restore(const std::string& ckpt_path, const Dataset& ds) {
    LoadedModel lm;
    lm.ckpt = load_checkpoint(ckpt_path);
    check_compatible(lm.ckpt, ds);
    lm.model = std::make_unique<JointModel>(lm.ckpt.config, ds);
    lm.model->store = lm.ckpt.store;
    return lm;
}

int cmd_prepare(const std::string& train, const std::string& valid, const std::string& test,
                const std::string& desc, const std::string& out, size_t max_len,
                size_t min_word_freq) {
    if (desc.empty())
        info() << "no descriptions file given; all entities will be structure-only\n";
    Dataset ds = prepare_dataset(train, valid, test, desc, max_len, min_word_freq);
    save_bundle(out, ds);
    size_t covered = 0;
    for (bool c : ds.descriptions.covered) covered += c ? 1 : 0;
    std::cout << "entities: " << ds.num_entities() << "\n"
              << "relations: " << ds.num_relations() << "\n"
              << "words: " << ds.words.size() << "\n"
              << "train/valid/test: " << ds.triples.train.size() << "/" << ds.triples.valid.size()
              << "/" << ds.triples.test.size() << "\n"
              << "described entities: " << covered << "\n"
              << "bundle: " << out << "\n";
    return 0;
}

int run_training(const std::string& bundle, const std::string& config_path,
                 const std::string& encoder_flag, long long seed_flag, const std::string& pretrained,
                 const std::string& out, bool use_text) {
    Dataset ds = load_bundle(bundle);
    KeyValueConfig kv = load_config(config_path);
    if (!encoder_flag.empty()) kv.set("encoder", encoder_flag);
    if (seed_flag >= 0) kv.set("seed", std::to_string(seed_flag));
    dump_config(kv);

    ModelConfig cfg = model_config_from(kv);
    cfg.use_text = use_text;
    cfg.validate();
    TrainConfig tcfg = train_config_from(kv);

    JointModel model(cfg, ds);
    std::mt19937_64 rng(tcfg.seed);
    model.init_random(rng);
    if (!pretrained.empty()) {
        const Checkpoint base = load_checkpoint(pretrained);
        check_compatible(base, ds);
        model.init_structure_from_pretrained(base.store);
        info() << "structure tables initialized from " << pretrained << "\n";
    }
    if (use_text) model.init_word_embeddings(rng);

    const TrainResult result = train(model, ds, tcfg, info());
    save_checkpoint(out, cfg, result.best_store, ds.entities, ds.relations, ds.words);
    std::cout << "epochs_run: " << result.epochs_run << "\n"
              << "best_valid_mean_rank: " << result.best_valid_mr << "\n"
              << "best_valid_hits@10: " << result.best_valid_hits10 << "\n"
              << "checkpoint: " << out << "\n";
    return 0;
}

int cmd_eval_lp(const std::string& bundle, const std::string& ckpt_path, const std::string& out,
                size_t threads) {
    Dataset ds = load_bundle(bundle);
    LoadedModel lm = restore(ckpt_path, ds);
    Evaluator eval(*lm.model, ds, threads);
    const LinkPredReport rep = eval.link_prediction(ds.triples.test);
    const RelRankReport rel = eval.relation_ranking(ds.triples.test);
    atomic_write(out, link_prediction_csv(rep, rel));
    std::cout << "mean_rank_filtered: " << rep.overall.mean_rank_filt() << "\n"
              << "hits@10_filtered: " << rep.overall.hits10_filt() << "\n"
              << "relation_hits@1_filtered: " << rel.hits1_filt_pct() << "\n"
              << "report: " << out << "\n";
    return 0;
}

int cmd_eval_tc(const std::string& bundle, const std::string& ckpt_path, const std::string& out,
                uint64_t seed) {
    Dataset ds = load_bundle(bundle);
    LoadedModel lm = restore(ckpt_path, ds);
    Evaluator eval(*lm.model, ds);
    std::mt19937_64 rng(seed);
    const auto valid_set = make_classification_negatives(ds.triples.valid, ds, rng);
    const auto test_set = make_classification_negatives(ds.triples.test, ds, rng);
    const ClassifierThresholds th = find_thresholds(valid_set, eval);
    const double accuracy = classify(test_set, th, eval);

    std::ostringstream csv;
    csv << "accuracy," << accuracy << "\n\n";
    csv << "relation,threshold\n";
    csv << "<global>," << th.global << "\n";
    for (const auto& [r, delta] : th.per_relation)
        csv << ds.relations.str(r) << "," << delta << "\n";
    atomic_write(out, csv.str());
    std::cout << "accuracy: " << accuracy << "\n"
              << "report: " << out << "\n";
    return 0;
}

std::string gates_csv(const std::vector<GateGroup>& groups) {
    std::ostringstream out;
    out << "group_index,freq_lo,freq_hi,mean_gate\n";
    for (size_t i = 0; i < groups.size(); ++i)
        out << i << "," << groups[i].freq_lo << "," << groups[i].freq_hi << ","
            << groups[i].mean_gate << "\n";
    return out.str();
}

int cmd_export_gates(const std::string& bundle, const std::string& ckpt_path,
                     const std::string& out, size_t groups) {
    Dataset ds = load_bundle(bundle);
    LoadedModel lm = restore(ckpt_path, ds);
    const size_t main_groups = std::min(groups, ds.num_entities());
    if (main_groups < groups)
        info() << "only " << ds.num_entities() << " entities; using " << main_groups
               << " groups\n";
    atomic_write(out, gates_csv(gate_report(*lm.model, ds, main_groups)));
    std::cout << "report: " << out << "\n";
    const size_t summary_groups = std::min<size_t>(10, ds.num_entities());
    if (summary_groups < main_groups) {
        const std::string summary = out + ".summary";
        atomic_write(summary, gates_csv(gate_report(*lm.model, ds, summary_groups)));
        std::cout << "summary: " << summary << "\n";
    }
    return 0;
}

int cmd_grad_check(const std::string& bundle, const std::string& config_path,
                   const std::string& encoder_flag, uint64_t seed, double tolerance,
                   const std::string& out) {
    Dataset ds;
    if (!bundle.empty()) {
        ds = load_bundle(bundle);
    } else {
        // built-in toy KG with short descriptions
        for (int e = 0; e < 3; ++e) ds.entities.add_or_get("e" + std::to_string(e));
        for (int r = 0; r < 2; ++r) ds.relations.add_or_get("r" + std::to_string(r));
        ds.entities.freeze();
        ds.relations.freeze();
        ds.words.add_or_get("<unk>");
        for (int w = 1; w < 6; ++w) ds.words.add_or_get("w" + std::to_string(w));
        ds.words.freeze();
        ds.triples.train = {{0, 0, 1}, {1, 1, 2}};
        ds.triples.build_filter_index();
        ds.descriptions.tokens = {{1, 2, 3}, {4, 5}, {2}};
        ds.descriptions.covered = {true, true, true};
        ds.stats = compute_bernoulli_stats(ds.triples.train, 2);
        ds.categories = categorize_relations(ds.stats);
    }
    if (ds.triples.train.empty()) throw std::runtime_error("grad-check: bundle has no train triples");

    KeyValueConfig kv = load_config(config_path);
    if (!encoder_flag.empty()) kv.set("encoder", encoder_flag);
    if (!kv.has("d")) kv.set("d", "8");
    if (!kv.has("dissimilarity")) kv.set("dissimilarity", "sq_l2");
    ModelConfig cfg = model_config_from(kv);

    JointModel model(cfg, ds);
    std::mt19937_64 rng(seed);
    model.init_random(rng);
    model.init_word_embeddings(rng);

    std::uniform_int_distribution<size_t> pick(0, ds.triples.train.size() - 1);
    std::uniform_int_distribution<size_t> pe(0, ds.num_entities() - 1);
    const Triple pos = ds.triples.train[pick(rng)];
    Triple neg = pos;
    neg.tail = EntityId(pe(rng));
    if (neg == pos) neg.head = EntityId((size_t(neg.head) + 1) % ds.num_entities());

    auto loss = [&] { return triple_loss(model, pos, neg, 10.0); };
    const GradCheckReport report = check_gradients(model.store, loss);

    std::ostringstream csv;
    csv << "slot,max_rel_err\n";
    for (const auto& [name, err] : report.max_rel_err) csv << name << "," << err << "\n";
    csv << "<overall>," << report.overall << "\n";
    if (!out.empty()) atomic_write(out, csv.str());
    std::cout << "max_rel_err: " << report.overall << "\n";
    if (report.overall >= tolerance) {
        std::cerr << "gradient check FAILED (tolerance " << tolerance << ")\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge graph embeddings with jointly structural and textual entity "
                 "representations"};
    app.require_subcommand(1);

    std::string train_path, valid_path, test_path, desc_path, bundle, config_path, out,
        checkpoint_path, encoder;
    long long seed = -1;  // <0 means "use the config value"
    size_t max_len = 128, min_word_freq = 2, threads = 1, groups = 50;
    double tolerance = 1e-4;

    auto* prepare = app.add_subcommand("prepare", "build a dataset bundle from triple files");
    prepare->add_option("--train", train_path, "training triples (head\\trelation\\ttail)")
        ->required();
    prepare->add_option("--valid", valid_path, "validation triples")->required();
    prepare->add_option("--test", test_path, "test triples")->required();
    prepare->add_option("--descriptions", desc_path, "entity descriptions (entity\\ttext)");
    prepare->add_option("--out", out, "output bundle path")->required();
    prepare->add_option("--max-len", max_len, "description length cap in tokens");
    prepare->add_option("--min-word-freq", min_word_freq, "words rarer than this become UNK");

    auto add_train_opts = [&](CLI::App* cmd) {
        cmd->add_option("--bundle", bundle, "dataset bundle from `prepare`")->required();
        cmd->add_option("--config", config_path, "key=value config file");
        cmd->add_option("--seed", seed, "override the config seed");
        cmd->add_option("--out", out, "output checkpoint path")->required();
    };
    auto* pretrain = app.add_subcommand("pretrain", "train the structure-only baseline");
    add_train_opts(pretrain);
    auto* train_cmd = app.add_subcommand("train", "train the joint model");
    add_train_opts(train_cmd);
    train_cmd->add_option("--checkpoint", checkpoint_path,
                          "structure-only checkpoint to initialize from");
    train_cmd->add_option("--encoder", encoder, "text encoder")
        ->check(CLI::IsMember({"nbow", "lstm", "alstm"}));

    auto* eval_lp = app.add_subcommand("eval-lp", "link prediction and relation ranking");
    eval_lp->add_option("--bundle", bundle, "dataset bundle")->required();
    eval_lp->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    eval_lp->add_option("--out", out, "report path")->required();
    eval_lp->add_option("--threads", threads, "ranking threads");

    auto* eval_tc = app.add_subcommand("eval-tc", "triplet classification");
    eval_tc->add_option("--bundle", bundle, "dataset bundle")->required();
    eval_tc->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    eval_tc->add_option("--out", out, "report path")->required();
    eval_tc->add_option("--seed", seed, "negative-sampling seed");

    auto* gates = app.add_subcommand("export-gates", "gate activation by entity frequency");
    gates->add_option("--bundle", bundle, "dataset bundle")->required();
    gates->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    gates->add_option("--out", out, "report path")->required();
    gates->add_option("--groups", groups, "number of frequency groups");

    auto* gradcheck = app.add_subcommand("grad-check", "finite-difference gradient validation");
    gradcheck->add_option("--bundle", bundle, "dataset bundle (defaults to a built-in toy KG)");
    gradcheck->add_option("--config", config_path, "key=value config file");
    gradcheck->add_option("--seed", seed, "random seed");
    gradcheck->add_option("--encoder", encoder, "text encoder")
        ->check(CLI::IsMember({"nbow", "lstm", "alstm"}));
    gradcheck->add_option("--tolerance", tolerance, "maximum allowed relative error");
    gradcheck->add_option("--out", out, "optional per-slot report path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare->parsed())
            return cmd_prepare(train_path, valid_path, test_path, desc_path, out, max_len,
                               min_word_freq);
        if (pretrain->parsed())
            return run_training(bundle, config_path, "", seed, "", out, /*use_text=*/false);
        if (train_cmd->parsed())
            return run_training(bundle, config_path, encoder, seed, checkpoint_path, out,
                                /*use_text=*/true);
        if (eval_lp->parsed()) return cmd_eval_lp(bundle, checkpoint_path, out, threads);
        if (eval_tc->parsed())
            return cmd_eval_tc(bundle, checkpoint_path, out, seed < 0 ? 42 : uint64_t(seed));
        if (gates->parsed()) return cmd_export_gates(bundle, checkpoint_path, out, groups);
        if (gradcheck->parsed())
            return cmd_grad_check(bundle, config_path, encoder, seed < 0 ? 42 : uint64_t(seed),
                                  tolerance, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
