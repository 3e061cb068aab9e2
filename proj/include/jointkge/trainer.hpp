#pragma once

#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "jointkge/dataset.hpp"
#include "jointkge/evaluator.hpp"
#include "jointkge/model.hpp"

// Max-margin training: Bernoulli-weighted head/tail corruption (optionally
// mixed with relation corruption), hinge loss per (positive, negative) pair,
// SGD with two learning-rate groups, entity renormalization per batch, and
// early stopping on filtered validation Mean Rank.

namespace jointkge {

enum class CorruptSlot : uint8_t { Head = 0, Tail = 1, Relation = 2 };

struct NegativeSample {
    Triple triple;
    CorruptSlot slot;
};

struct TrainConfig {
    size_t batch_size = 1024;
    size_t epochs = 1000;
    double p_rel = 0.0;  // probability of corrupting the relation slot
    uint64_t seed = 42;
    size_t patience = 3;     // evaluation rounds without improvement before stopping
    size_t eval_every = 50;  // epochs between validation evaluations
    size_t eval_threads = 1;

    void validate() const {
        if (batch_size == 0) throw std::invalid_argument("batch_size must be > 0");
        if (p_rel < 0.0 || p_rel > 1.0) throw std::invalid_argument("p_rel must be in [0,1]");
    }
};

// With probability p_rel corrupt the relation; otherwise corrupt the head with
// probability tph/(tph+hpt), else the tail. Replacements are uniform over the
// vocabulary; resample while the corrupted triple is a known training triple
// (bounded at 100 attempts, then accept).
inline NegativeSample sample_negative(const Triple& t, const BernoulliStats& stats, double p_rel,
                                      size_t num_entities, size_t num_relations,
                                      const FilterIndex& train_index, std::mt19937_64& rng) {
    if (!stats.covers(t.relation))
        throw std::invalid_argument("sample_negative: no stats for relation " +
                                    std::to_string(t.relation));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    CorruptSlot slot;
    if (p_rel > 0.0 && unit(rng) < p_rel) {
        slot = CorruptSlot::Relation;
    } else {
        const double tph = stats.tph[t.relation];
        const double hpt = stats.hpt[t.relation];
        slot = (unit(rng) < tph / (tph + hpt)) ? CorruptSlot::Head : CorruptSlot::Tail;
    }

    NegativeSample neg{t, slot};
    std::uniform_int_distribution<size_t> pick_entity(0, num_entities - 1);
    std::uniform_int_distribution<size_t> pick_relation(0, num_relations - 1);
    for (int attempt = 0; attempt < 100; ++attempt) {
        switch (slot) {
            case CorruptSlot::Head: {
                EntityId c;
                do c = EntityId(pick_entity(rng));
                while (c == t.head);
                neg.triple.head = c;
                break;
            }
            case CorruptSlot::Tail: {
                EntityId c;
                do c = EntityId(pick_entity(rng));
                while (c == t.tail);
                neg.triple.tail = c;
                break;
            }
            case CorruptSlot::Relation: {
                RelationId c;
                do c = RelationId(pick_relation(rng));
                while (c == t.relation);
                neg.triple.relation = c;
                break;
            }
        }
        if (!train_index.contains(neg.triple)) break;
    }
    return neg;
}

// Hinge loss max(0, margin - f(pos) + f(neg)); gradients only when active.
inline double triple_loss(JointModel& model, const Triple& pos, const Triple& neg,
                          double margin, bool* active = nullptr) {
    ScoreTrace tp, tn;
    const double fp = model.score(pos, tp);
    const double fn = model.score(neg, tn);
    const double loss = margin - (fp - fn);
    if (loss <= 0.0) {
        if (active) *active = false;
        return 0.0;
    }
    if (active) *active = true;
    model.score_backward(pos, tp, -1.0);
    model.score_backward(neg, tn, 1.0);
    return loss;
}

struct EpochStats {
    double mean_loss = 0.0;
    double active_rate = 0.0;
};

// One shuffled pass, one negative per positive, SGD step plus structure-row
// renormalization after every batch.
inline EpochStats train_epoch(JointModel& model, const Dataset& ds,
                              const FilterIndex& train_index, const TrainConfig& tcfg,
                              std::mt19937_64& rng) {
    const auto& train = ds.triples.train;
    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    double total_loss = 0.0;
    size_t active_count = 0;
    for (size_t start = 0; start < order.size(); start += tcfg.batch_size) {
        const size_t end = std::min(order.size(), start + tcfg.batch_size);
        for (size_t i = start; i < end; ++i) {
            const Triple& pos = train[order[i]];
            const NegativeSample neg =
                sample_negative(pos, ds.stats, tcfg.p_rel, ds.num_entities(), ds.num_relations(),
                                train_index, rng);
            bool active = false;
            const double loss = triple_loss(model, pos, neg.triple, model.cfg.margin, &active);
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "non-finite loss at triple (" << pos.head << "," << pos.relation << ","
                    << pos.tail << ") vs (" << neg.triple.head << "," << neg.triple.relation << ","
                    << neg.triple.tail << ")";
                throw std::runtime_error(msg.str());
            }
            total_loss += loss;
            if (active) ++active_count;
        }
        const std::set<size_t> touched_entities = model.store.slot("entity_struct").touched;
        model.store.sgd_step(model.cfg.lr_structure, model.cfg.lr_text, model.cfg.l2_weight);
        model.store.renormalize_rows("entity_struct", touched_entities);
    }
    EpochStats stats;
    stats.mean_loss = train.empty() ? 0.0 : total_loss / double(train.size());
    stats.active_rate = train.empty() ? 0.0 : double(active_count) / double(train.size());
    return stats;
}

struct TrainResult {
    ParameterStore best_store;
    double best_valid_mr = 0.0;
    double best_valid_hits10 = 0.0;
    size_t epochs_run = 0;
};

inline double filtered_valid_mean_rank(const JointModel& model, const Dataset& ds, size_t threads,
                                       double* hits10 = nullptr) {
    Evaluator eval(model, ds, threads);
    const LinkPredReport rep = eval.link_prediction(ds.triples.valid);
    if (hits10) *hits10 = rep.overall.hits10_filt();
    return rep.overall.mean_rank_filt();
}

// Full loop: every eval_every epochs evaluate filtered Mean Rank on the
// validation split, keep the best parameters, stop once `patience` consecutive
// evaluations brought no improvement. Progress lines go to `log`:
//   epoch, mean_loss, active_rate[, valid_MR, valid_Hits10]
inline TrainResult train(JointModel& model, const Dataset& ds, const TrainConfig& tcfg,
                         std::ostream& log = std::cerr) {
    tcfg.validate();
    std::mt19937_64 rng(tcfg.seed);
    FilterIndex train_index;
    for (const Triple& t : ds.triples.train) train_index.insert(t);

    TrainResult result;
    result.best_store = model.store;
    double best_mr = std::numeric_limits<double>::infinity();
    size_t evals_since_improve = 0;
    bool stopped = false;

    for (size_t epoch = 1; epoch <= tcfg.epochs && !stopped; ++epoch) {
        const EpochStats stats = train_epoch(model, ds, train_index, tcfg, rng);
        result.epochs_run = epoch;
        const bool eval_now = (epoch % tcfg.eval_every == 0) || epoch == tcfg.epochs;
        if (eval_now && !ds.triples.valid.empty()) {
            double hits10 = 0.0;
            const double mr = filtered_valid_mean_rank(model, ds, tcfg.eval_threads, &hits10);
            log << epoch << ", " << stats.mean_loss << ", " << stats.active_rate << ", " << mr
                << ", " << hits10 << "\n";
            if (mr < best_mr) {
                best_mr = mr;
                result.best_store = model.store;
                result.best_valid_mr = mr;
                result.best_valid_hits10 = hits10;
                evals_since_improve = 0;
            } else {
                ++evals_since_improve;
            }
            if (evals_since_improve >= tcfg.patience) stopped = true;
        } else {
            log << epoch << ", " << stats.mean_loss << ", " << stats.active_rate << "\n";
        }
    }
    if (!std::isfinite(best_mr)) {
        // no validation split: final parameters are the result
        result.best_store = model.store;
    }
    return result;
}

}  // namespace jointkge
