#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <thread>
#include <unordered_map>
#include <vector>

#include "jointkge/dataset.hpp"
#include "jointkge/model.hpp"

// Link prediction (raw/filtered Mean Rank, Hits@10, head/tail side and
// per-relation-category), relation ranking (Hits@1), triplet classification
// with per-relation thresholds, and gate-activation grouping by entity
// frequency.

namespace jointkge {

struct RankResult {
    size_t raw = 0;       // >= 1
    size_t filtered = 0;  // <= raw
};

struct LinkPredCell {
    size_t n = 0;
    double sum_raw = 0.0, sum_filt = 0.0;
    size_t hits_raw = 0, hits_filt = 0;

    void add(const RankResult& r) {
        ++n;
        sum_raw += double(r.raw);
        sum_filt += double(r.filtered);
        if (r.raw <= 10) ++hits_raw;
        if (r.filtered <= 10) ++hits_filt;
    }
    void merge(const LinkPredCell& o) {
        n += o.n;
        sum_raw += o.sum_raw;
        sum_filt += o.sum_filt;
        hits_raw += o.hits_raw;
        hits_filt += o.hits_filt;
    }
    double mean_rank_raw() const { return n ? sum_raw / double(n) : 0.0; }
    double mean_rank_filt() const { return n ? sum_filt / double(n) : 0.0; }
    double hits10_raw() const { return n ? 100.0 * double(hits_raw) / double(n) : 0.0; }
    double hits10_filt() const { return n ? 100.0 * double(hits_filt) / double(n) : 0.0; }
};

struct LinkPredReport {
    LinkPredCell overall, head_side, tail_side;
    LinkPredCell by_category[2][4];  // [0]=head prediction, [1]=tail prediction

    void merge(const LinkPredReport& o) {
        overall.merge(o.overall);
        head_side.merge(o.head_side);
        tail_side.merge(o.tail_side);
        for (int s = 0; s < 2; ++s)
            for (int c = 0; c < 4; ++c) by_category[s][c].merge(o.by_category[s][c]);
    }
};

struct RelRankReport {
    size_t n = 0;
    double sum_raw = 0.0, sum_filt = 0.0;
    size_t hits1_raw = 0, hits1_filt = 0;

    double mean_rank_raw() const { return n ? sum_raw / double(n) : 0.0; }
    double mean_rank_filt() const { return n ? sum_filt / double(n) : 0.0; }
    double hits1_raw_pct() const { return n ? 100.0 * double(hits1_raw) / double(n) : 0.0; }
    double hits1_filt_pct() const { return n ? 100.0 * double(hits1_filt) / double(n) : 0.0; }
};

struct ClassifierThresholds {
    std::map<RelationId, double> per_relation;
    double global = 0.0;

    double threshold_for(RelationId r) const {
        auto it = per_relation.find(r);
        return it == per_relation.end() ? global : it->second;
    }
};

struct LabeledTriple {
    Triple triple;
    bool positive;
};

// Scores every candidate against a frozen snapshot. Joint representations are
// computed once per entity (once per (entity, relation) for the attentive
// encoder) and cached for the lifetime of the evaluator.
class Evaluator {
public:
    Evaluator(const JointModel& model, const Dataset& ds, size_t threads = 1)
        : model_(model), ds_(ds), threads_(std::max<size_t>(1, threads)) {}

    // Pessimistic ties: candidates scoring equal to the true entity count as
    // ranked higher. Filtered ranking drops candidates forming known triples,
    // except the query triple itself.
    RankResult rank_entities(const Triple& query, bool predict_head) {
        const auto& reprs = reprs_for(query.relation);
        const Vec rel = model_.store.row_vec("relation", size_t(query.relation));
        const size_t ne = ds_.num_entities();
        const EntityId truth = predict_head ? query.head : query.tail;

        Vec scores(ne);
        Vec u;
        for (size_t c = 0; c < ne; ++c) {
            scores[c] = predict_head
                            ? model_.score_from_reprs(reprs[c], rel, reprs[size_t(query.tail)], u)
                            : model_.score_from_reprs(reprs[size_t(query.head)], rel, reprs[c], u);
        }
        const double true_score = scores[size_t(truth)];
        RankResult rr{1, 1};
        for (size_t c = 0; c < ne; ++c) {
            if (EntityId(c) == truth || scores[c] < true_score) continue;
            ++rr.raw;
            Triple candidate = query;
            (predict_head ? candidate.head : candidate.tail) = EntityId(c);
            if (!ds_.triples.all_known.contains(candidate)) ++rr.filtered;
        }
        return rr;
    }

    RankResult rank_relations(const Triple& query) {
        const size_t nr = ds_.num_relations();
        Vec scores(nr);
        Vec u;
        for (size_t r = 0; r < nr; ++r) {
            const auto& reprs = reprs_for(RelationId(r));
            const Vec rel = model_.store.row_vec("relation", r);
            scores[r] =
                model_.score_from_reprs(reprs[size_t(query.head)], rel, reprs[size_t(query.tail)], u);
        }
        const double true_score = scores[size_t(query.relation)];
        RankResult rr{1, 1};
        for (size_t r = 0; r < nr; ++r) {
            if (RelationId(r) == query.relation || scores[r] < true_score) continue;
            ++rr.raw;
            Triple candidate = query;
            candidate.relation = RelationId(r);
            if (!ds_.triples.all_known.contains(candidate)) ++rr.filtered;
        }
        return rr;
    }

    LinkPredReport link_prediction(const std::vector<Triple>& test) {
        warm_cache(test);
        std::vector<LinkPredReport> partial(threads_);
        auto work = [&](size_t tid) {
            for (size_t i = tid; i < test.size(); i += threads_) {
                const Triple& t = test[i];
                const int cat = static_cast<int>(ds_.categories[t.relation]);
                const RankResult rh = rank_entities(t, /*predict_head=*/true);
                const RankResult rt = rank_entities(t, /*predict_head=*/false);
                auto& rep = partial[tid];
                rep.overall.add(rh);
                rep.overall.add(rt);
                rep.head_side.add(rh);
                rep.tail_side.add(rt);
                rep.by_category[0][cat].add(rh);
                rep.by_category[1][cat].add(rt);
            }
        };
        run_parallel(work);
        LinkPredReport report;
        for (const auto& p : partial) report.merge(p);
        return report;
    }

    RelRankReport relation_ranking(const std::vector<Triple>& test) {
        for (size_t r = 0; r < ds_.num_relations(); ++r) reprs_for(RelationId(r));
        std::vector<RelRankReport> partial(threads_);
        auto work = [&](size_t tid) {
            for (size_t i = tid; i < test.size(); i += threads_) {
                const RankResult rr = rank_relations(test[i]);
                auto& rep = partial[tid];
                ++rep.n;
                rep.sum_raw += double(rr.raw);
                rep.sum_filt += double(rr.filtered);
                if (rr.raw <= 1) ++rep.hits1_raw;
                if (rr.filtered <= 1) ++rep.hits1_filt;
            }
        };
        run_parallel(work);
        RelRankReport report;
        for (const auto& p : partial) {
            report.n += p.n;
            report.sum_raw += p.sum_raw;
            report.sum_filt += p.sum_filt;
            report.hits1_raw += p.hits1_raw;
            report.hits1_filt += p.hits1_filt;
        }
        return report;
    }

    double score(const Triple& t) { return model_.score(t); }

    const JointModel& model() const { return model_; }
    const Dataset& dataset() const { return ds_; }

private:
    void warm_cache(const std::vector<Triple>& test) {
        if (model_.cfg.use_text && model_.cfg.encoder == EncoderKind::Alstm) {
            for (const Triple& t : test) reprs_for(t.relation);
        } else {
            reprs_for(0);
        }
    }

    void run_parallel(const std::function<void(size_t)>& work) {
        if (threads_ == 1) {
            work(0);
            return;
        }
        std::vector<std::thread> pool;
        for (size_t t = 0; t < threads_; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }

    const std::vector<Vec>& reprs_for(RelationId rel) {
        const bool rel_dependent = model_.cfg.use_text && model_.cfg.encoder == EncoderKind::Alstm;
        const RelationId key = rel_dependent ? rel : RelationId(-1);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        std::vector<Vec> reprs(ds_.num_entities());
        for (size_t e = 0; e < ds_.num_entities(); ++e) {
            EntityTrace tr;
            reprs[e] = model_.entity_repr(EntityId(e), rel, tr);
        }
        return cache_.emplace(key, std::move(reprs)).first->second;
    }

    const JointModel& model_;
    const Dataset& ds_;
    size_t threads_;
    std::unordered_map<RelationId, std::vector<Vec>> cache_;
};

// One negative per positive: corrupt head or tail (uniform choice) with a
// random entity not forming a known triple.
inline std::vector<LabeledTriple> make_classification_negatives(const std::vector<Triple>& triples,
                                                                const Dataset& ds,
                                                                std::mt19937_64& rng) {
    std::vector<LabeledTriple> out;
    out.reserve(triples.size() * 2);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<size_t> pick_entity(0, ds.num_entities() - 1);
    for (const Triple& t : triples) {
        out.push_back({t, true});
        const bool corrupt_head = coin(rng) == 0;
        Triple neg = t;
        for (int attempt = 0; attempt < 1000; ++attempt) {
            const EntityId cand = EntityId(pick_entity(rng));
            (corrupt_head ? neg.head : neg.tail) = cand;
            if (neg != t && !ds.triples.all_known.contains(neg)) break;
        }
        out.push_back({neg, false});
    }
    return out;
}

namespace detail {

// Best threshold for one score set under the strict-greater rule. Candidates
// are midpoints of adjacent distinct sorted scores plus below-min/above-max
// sentinels; single distinct score degenerates to that score. Ties pick the
// smallest threshold.
inline double fit_threshold(const std::vector<std::pair<double, bool>>& scored) {
    std::vector<double> distinct;
    distinct.reserve(scored.size());
    for (const auto& [s, lab] : scored) distinct.push_back(s);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<double> candidates;
    if (distinct.size() <= 1) {
        candidates.push_back(distinct.empty() ? 0.0 : distinct.front());
    } else {
        candidates.push_back(distinct.front() - 1.0);
        for (size_t i = 0; i + 1 < distinct.size(); ++i)
            candidates.push_back((distinct[i] + distinct[i + 1]) / 2.0);
        candidates.push_back(distinct.back() + 1.0);
        std::sort(candidates.begin(), candidates.end());
    }
    double best_delta = candidates.front();
    size_t best_correct = 0;
    bool first = true;
    for (double delta : candidates) {
        size_t correct = 0;
        for (const auto& [s, positive] : scored)
            if ((s > delta) == positive) ++correct;
        if (first || correct > best_correct) {
            best_correct = correct;
            best_delta = delta;
            first = false;
        }
    }
    return best_delta;
}

}  // namespace detail

// delta_r maximizing validation accuracy per relation; relations absent from
// the validation set fall back to the global-accuracy-maximizing threshold.
inline ClassifierThresholds find_thresholds(const std::vector<LabeledTriple>& valid,
                                            Evaluator& eval) {
    std::map<RelationId, std::vector<std::pair<double, bool>>> by_rel;
    std::vector<std::pair<double, bool>> all;
    for (const auto& lt : valid) {
        const double s = eval.score(lt.triple);
        by_rel[lt.triple.relation].emplace_back(s, lt.positive);
        all.emplace_back(s, lt.positive);
    }
    ClassifierThresholds th;
    for (const auto& [r, scored] : by_rel) th.per_relation[r] = detail::fit_threshold(scored);
    th.global = detail::fit_threshold(all);
    return th;
}

// Accuracy % under the strict-greater rule: score > delta_r is positive.
inline double classify(const std::vector<LabeledTriple>& test, const ClassifierThresholds& th,
                       Evaluator& eval) {
    if (test.empty()) return 0.0;
    size_t correct = 0;
    for (const auto& lt : test) {
        const bool predicted = eval.score(lt.triple) > th.threshold_for(lt.triple.relation);
        if (predicted == lt.positive) ++correct;
    }
    return 100.0 * double(correct) / double(test.size());
}

struct GateGroup {
    size_t index = 0;
    size_t freq_lo = 0, freq_hi = 0;
    double mean_gate = 1.0;
};

// Entities sorted by descending training frequency, split into `group_count`
// groups whose sizes differ by at most one; per group, mean of all effective
// gate components (structure-only entities contribute all-ones gates).
inline std::vector<GateGroup> gate_report(const JointModel& model, const Dataset& ds,
                                          size_t group_count) {
    const size_t ne = ds.num_entities();
    if (group_count == 0 || group_count > ne)
        throw std::invalid_argument("gate_report: bad group count");
    std::vector<size_t> freq(ne, 0);
    for (const Triple& t : ds.triples.train) {
        ++freq[t.head];
        ++freq[t.tail];
    }
    std::vector<EntityId> order(ne);
    for (size_t e = 0; e < ne; ++e) order[e] = EntityId(e);
    std::sort(order.begin(), order.end(), [&](EntityId a, EntityId b) {
        if (freq[a] != freq[b]) return freq[a] > freq[b];
        return a < b;
    });

    std::vector<GateGroup> groups;
    const size_t base = ne / group_count;
    const size_t rem = ne % group_count;
    size_t pos = 0;
    for (size_t g = 0; g < group_count; ++g) {
        const size_t size = base + (g < rem ? 1 : 0);
        GateGroup grp;
        grp.index = g;
        grp.freq_lo = SIZE_MAX;
        double sum = 0.0;
        size_t count = 0;
        for (size_t i = 0; i < size; ++i, ++pos) {
            const EntityId e = order[pos];
            grp.freq_lo = std::min(grp.freq_lo, freq[e]);
            grp.freq_hi = std::max(grp.freq_hi, freq[e]);
            if (model.structure_only(e)) {
                sum += double(model.cfg.d);
            } else {
                const auto g_row = model.store.row("entity_gate", size_t(e));
                for (double x : g_row) sum += sigmoid(x);
            }
            count += model.cfg.d;
        }
        grp.mean_gate = count ? sum / double(count) : 1.0;
        groups.push_back(grp);
    }
    return groups;
}

}  // namespace jointkge
