#pragma once

#include <random>
#include <string>
#include <vector>

#include "jointkge/dataset.hpp"
#include "jointkge/encoders.hpp"
#include "jointkge/params.hpp"
#include "jointkge/vecmath.hpp"

namespace jointkge {

enum class Dissim : uint8_t { L1 = 0, SqL2 = 1 };

inline const char* dissim_name(Dissim d) { return d == Dissim::L1 ? "l1" : "sq_l2"; }

struct ModelConfig {
    size_t d = 20;
    EncoderKind encoder = EncoderKind::Nbow;
    Dissim dissim = Dissim::L1;
    double margin = 2.0;
    double l2_weight = 1e-5;
    double lr_structure = 0.01;
    double lr_text = 0.1;
    bool use_text = true;  // false = plain TransE (pretraining mode)

    void validate() const {
        if (margin <= 0.0) throw std::invalid_argument("margin must be > 0");
        if (use_text && encoder != EncoderKind::Nbow && d % 2 != 0)
            throw std::invalid_argument("d must be even for the BLSTM encoders");
    }
};

struct EntityTrace {
    Vec e_s, gate, e_d, e;
    bool struct_only = false;
    EncodeTrace enc;
};

struct ScoreTrace {
    EntityTrace head, tail;
    Vec rel;
    Vec residual;  // e_h + r - e_t
};

// Structural embeddings, relation embeddings, per-entity pre-sigmoid gates and
// the configured text encoder, producing joint representations (gate-weighted
// interpolation of structure and text) and translational triple scores.
class JointModel {
public:
    ModelConfig cfg;
    ParameterStore store;
    const Dataset* data = nullptr;
    bool force_structure_only = false;  // overrides every gate to 1

    JointModel(const ModelConfig& config, const Dataset& dataset) : cfg(config), data(&dataset) {
        cfg.validate();
        const size_t d = cfg.d;
        store.add("entity_struct", dataset.num_entities(), d, LrGroup::Structure);
        store.add("relation", dataset.num_relations(), d, LrGroup::Structure);
        if (cfg.use_text) {
            store.add("entity_gate", dataset.num_entities(), d, LrGroup::Text);
            store.add("word_emb", std::max<size_t>(dataset.words.size(), 1), d, LrGroup::Text);
            if (cfg.encoder != EncoderKind::Nbow) {
                const size_t hs = d / 2;
                for (const std::string dir : {"lstm_fw", "lstm_bw"})
                    for (const std::string g : {"i", "f", "o", "g"}) {
                        store.add(dir + "_W" + g, hs, d, LrGroup::Text);
                        store.add(dir + "_U" + g, hs, hs, LrGroup::Text);
                        store.add(dir + "_b" + g, 1, hs, LrGroup::Text);
                    }
            }
            if (cfg.encoder == EncoderKind::Alstm) {
                store.add("attn_W", d, d, LrGroup::Text);
                store.add("attn_U", d, d, LrGroup::Text);
                store.add("attn_v", 1, d, LrGroup::Text);
            }
        }
    }

    // Random init: every slot uniform [-0.1, 0.1] except gates (zero, i.e. a
    // balanced 0.5 gate); entity rows then renormalized to unit L2.
    void init_random(std::mt19937_64& rng) {
        for (auto& [name, s] : store.slots()) {
            if (name == "entity_gate") continue;
            std::uniform_real_distribution<double> dist(-0.1, 0.1);
            for (auto& v : s.value) v = dist(rng);
        }
        renormalize_all_entities();
    }

    void renormalize_all_entities() {
        std::set<size_t> ids;
        for (size_t e = 0; e < data->num_entities(); ++e) ids.insert(e);
        store.renormalize_rows("entity_struct", ids);
    }

    bool structure_only(EntityId e) const {
        if (force_structure_only || !cfg.use_text) return true;
        return data->descriptions.structure_only(e);
    }

    // Gated joint representation: e = sigmoid(g~) . e_s + (1 - sigmoid(g~)) . e_d.
    // Structure-only entities return e_s untouched (gate forced to all-ones).
    const Vec& entity_repr(EntityId e, RelationId rel, EntityTrace& tr) const {
        tr.e_s = store.row_vec("entity_struct", size_t(e));
        tr.struct_only = structure_only(e);
        if (tr.struct_only) {
            tr.e = tr.e_s;
            return tr.e;
        }
        const auto& tokens = data->descriptions.tokens[e];
        switch (cfg.encoder) {
            case EncoderKind::Nbow:
                tr.e_d = encode_nbow(store, tokens);
                break;
            case EncoderKind::Lstm:
                tr.e_d = encode_blstm(store, tokens, tr.enc);
                break;
            case EncoderKind::Alstm: {
                const Vec r = store.row_vec("relation", size_t(rel));
                tr.e_d = encode_attentive(store, tokens, r, tr.enc);
                break;
            }
        }
        tr.gate = sigmoid(store.row_vec("entity_gate", size_t(e)));
        tr.e.resize(cfg.d);
        for (size_t k = 0; k < cfg.d; ++k)
            tr.e[k] = tr.gate[k] * tr.e_s[k] + (1.0 - tr.gate[k]) * tr.e_d[k];
        return tr.e;
    }

    void entity_repr_backward(EntityId e, RelationId rel, const EntityTrace& tr, const Vec& de,
                              Vec& drel) {
        if (tr.struct_only) {
            store.accumulate_grad_row("entity_struct", size_t(e), de);
            return;
        }
        Vec des(cfg.d), ded(cfg.d), dgate_pre(cfg.d);
        for (size_t k = 0; k < cfg.d; ++k) {
            des[k] = tr.gate[k] * de[k];
            ded[k] = (1.0 - tr.gate[k]) * de[k];
            const double dgate = de[k] * (tr.e_s[k] - tr.e_d[k]);
            dgate_pre[k] = dgate * tr.gate[k] * (1.0 - tr.gate[k]);
        }
        store.accumulate_grad_row("entity_struct", size_t(e), des);
        store.accumulate_grad_row("entity_gate", size_t(e), dgate_pre);
        const auto& tokens = data->descriptions.tokens[e];
        switch (cfg.encoder) {
            case EncoderKind::Nbow:
                encode_nbow_backward(store, tokens, ded);
                break;
            case EncoderKind::Lstm:
                encode_blstm_backward(store, tokens, tr.enc, ded);
                break;
            case EncoderKind::Alstm: {
                const Vec r = store.row_vec("relation", size_t(rel));
                encode_attentive_backward(store, tokens, r, tr.enc, ded, drel);
                break;
            }
        }
    }

    double dissim_of(const Vec& u) const {
        double s = 0.0;
        if (cfg.dissim == Dissim::L1) {
            for (double x : u) s += std::fabs(x);
        } else {
            for (double x : u) s += x * x;
        }
        return s;
    }

    // score = -D(e_h + r - e_t); identical arithmetic path for the baseline and
    // the joint model so the all-gates-one reduction is bit-exact.
    double score_from_reprs(const Vec& e_h, const Vec& rel, const Vec& e_t, Vec& residual) const {
        residual.resize(cfg.d);
        for (size_t k = 0; k < cfg.d; ++k) residual[k] = e_h[k] + rel[k] - e_t[k];
        return -dissim_of(residual);
    }

    double score_transe(const Triple& t) const {
        Vec u;
        return score_from_reprs(store.row_vec("entity_struct", size_t(t.head)),
                                store.row_vec("relation", size_t(t.relation)),
                                store.row_vec("entity_struct", size_t(t.tail)), u);
    }

    double score(const Triple& t, ScoreTrace& tr) const {
        tr.rel = store.row_vec("relation", size_t(t.relation));
        const Vec& eh = entity_repr(t.head, t.relation, tr.head);
        const Vec& et = entity_repr(t.tail, t.relation, tr.tail);
        return score_from_reprs(eh, tr.rel, et, tr.residual);
    }

    double score(const Triple& t) const {
        ScoreTrace tr;
        return score(t, tr);
    }

    void score_backward(const Triple& t, const ScoreTrace& tr, double dscore) {
        Vec du(cfg.d);
        if (cfg.dissim == Dissim::L1) {
            for (size_t k = 0; k < cfg.d; ++k) {
                const double s =
                    (tr.residual[k] > 0.0) ? 1.0 : (tr.residual[k] < 0.0 ? -1.0 : 0.0);
                du[k] = -dscore * s;
            }
        } else {
            for (size_t k = 0; k < cfg.d; ++k) du[k] = -dscore * 2.0 * tr.residual[k];
        }
        Vec drel = du;  // translation term
        Vec det = scale(du, -1.0);
        entity_repr_backward(t.head, t.relation, tr.head, du, drel);
        entity_repr_backward(t.tail, t.relation, tr.tail, det, drel);
        store.accumulate_grad_row("relation", size_t(t.relation), drel);
    }

    // Copies structural tables from a pretrained baseline with matching shapes.
    void init_structure_from_pretrained(const ParameterStore& pretrained) {
        for (const std::string name : {"entity_struct", "relation"}) {
            const auto& src = pretrained.slot(name);
            auto& dst = store.slot(name);
            if (src.rows != dst.rows || src.cols != dst.cols)
                throw std::runtime_error("pretrained slot " + name + " has shape " +
                                         std::to_string(src.rows) + "x" + std::to_string(src.cols) +
                                         ", expected " + std::to_string(dst.rows) + "x" +
                                         std::to_string(dst.cols));
            dst.value = src.value;
        }
    }

    // Word vector = mean of e_s over entities whose description mentions the
    // word; words mentioned nowhere get uniform [-0.1, 0.1].
    void init_word_embeddings(std::mt19937_64& rng) {
        if (!cfg.use_text) return;
        auto& emb = store.slot("word_emb");
        const size_t d = cfg.d;
        std::vector<Vec> sums(emb.rows, Vec(d, 0.0));
        std::vector<size_t> counts(emb.rows, 0);
        for (size_t e = 0; e < data->num_entities(); ++e) {
            std::unordered_set<WordId> seen(data->descriptions.tokens[e].begin(),
                                            data->descriptions.tokens[e].end());
            if (seen.empty()) continue;
            const auto es = store.row("entity_struct", e);
            for (WordId w : seen) {
                for (size_t k = 0; k < d; ++k) sums[w][k] += es[k];
                ++counts[w];
            }
        }
        std::uniform_real_distribution<double> dist(-0.1, 0.1);
        for (size_t w = 0; w < emb.rows; ++w) {
            double* row = emb.value.data() + w * d;
            if (counts[w] > 0)
                for (size_t k = 0; k < d; ++k) row[k] = sums[w][k] / double(counts[w]);
            else
                for (size_t k = 0; k < d; ++k) row[k] = dist(rng);
        }
    }
};

}  // namespace jointkge
