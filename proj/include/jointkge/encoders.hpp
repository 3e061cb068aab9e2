#pragma once

#include <string>
#include <vector>

#include "jointkge/dataset.hpp"
#include "jointkge/params.hpp"
#include "jointkge/vecmath.hpp"

// Text encoders: NBOW (sum of word embeddings), bidirectional LSTM (sum of
// concatenated directional states), and attentive BLSTM conditioned on a
// relation embedding. All parameters live in ParameterStore slots:
//   word_emb                      W x d      (Text)
//   lstm_{fw,bw}_{W,U,b}{i,f,o,g} LSTM cell  (Text), hidden size d/2
//   attn_W, attn_U (d x d), attn_v (1 x d)   (Text)

namespace jointkge {

enum class EncoderKind : uint8_t { Nbow = 0, Lstm = 1, Alstm = 2 };

inline const char* encoder_name(EncoderKind k) {
    switch (k) {
        case EncoderKind::Nbow: return "nbow";
        case EncoderKind::Lstm: return "lstm";
        case EncoderKind::Alstm: return "alstm";
    }
    return "?";
}

inline Vec encode_nbow(const ParameterStore& store, const std::vector<WordId>& tokens) {
    if (tokens.empty()) throw std::invalid_argument("encode_nbow: empty token sequence");
    const auto& emb = store.slot("word_emb");
    Vec out(emb.cols, 0.0);
    for (WordId w : tokens) {
        const double* row = emb.value.data() + size_t(w) * emb.cols;
        for (size_t k = 0; k < emb.cols; ++k) out[k] += row[k];
    }
    return out;
}

inline void encode_nbow_backward(ParameterStore& store, const std::vector<WordId>& tokens,
                                 const Vec& dout) {
    for (WordId w : tokens) store.accumulate_grad_row("word_emb", size_t(w), dout);
}

// Cell: i=s(Wi x + Ui h + bi), f=s(Wf x + Uf h + bf), o=s(Wo x + Uo h + bo),
// g=tanh(Wg x + Ug h + bg), c <- f.c + i.g, h <- o.tanh(c). No peepholes,
// zero initial state.
struct LstmDirTrace {
    // all in processing order
    std::vector<Vec> i, f, o, g, c, h, tanh_c;
};

inline LstmDirTrace lstm_direction(const ParameterStore& store, const std::string& prefix,
                                   const std::vector<Vec>& xs) {
    if (xs.empty()) throw std::invalid_argument("lstm_direction: empty sequence");
    const auto& wi = store.slot(prefix + "_Wi");
    const size_t hs = wi.rows;
    const size_t d = wi.cols;

    LstmDirTrace tr;
    Vec h_prev(hs, 0.0), c_prev(hs, 0.0);
    static const char* gates[4] = {"i", "f", "o", "g"};
    for (const Vec& x : xs) {
        Vec pre[4];
        for (int gi = 0; gi < 4; ++gi) {
            const auto& W = store.slot(prefix + "_W" + gates[gi]);
            const auto& U = store.slot(prefix + "_U" + gates[gi]);
            const auto& b = store.slot(prefix + "_b" + gates[gi]);
            pre[gi] = matvec({W.value.data(), W.value.size()}, hs, d, x);
            Vec uh = matvec({U.value.data(), U.value.size()}, hs, hs, h_prev);
            for (size_t k = 0; k < hs; ++k) pre[gi][k] += uh[k] + b.value[k];
        }
        Vec i = sigmoid(pre[0]);
        Vec f = sigmoid(pre[1]);
        Vec o = sigmoid(pre[2]);
        Vec g = tanh_vec(pre[3]);
        Vec c(hs), h(hs), tc(hs);
        for (size_t k = 0; k < hs; ++k) {
            c[k] = f[k] * c_prev[k] + i[k] * g[k];
            tc[k] = std::tanh(c[k]);
            h[k] = o[k] * tc[k];
        }
        tr.i.push_back(std::move(i));
        tr.f.push_back(std::move(f));
        tr.o.push_back(std::move(o));
        tr.g.push_back(std::move(g));
        tr.c.push_back(c);
        tr.tanh_c.push_back(std::move(tc));
        tr.h.push_back(h);
        h_prev = tr.h.back();
        c_prev = tr.c.back();
    }
    return tr;
}

// BPTT through one direction. `dh` holds the upstream gradient of each hidden
// state (processing order); gradients go to the slot accumulators and dxs.
inline void lstm_direction_backward(ParameterStore& store, const std::string& prefix,
                                    const std::vector<Vec>& xs, const LstmDirTrace& tr,
                                    const std::vector<Vec>& dh_up, std::vector<Vec>& dxs) {
    const auto& wi = store.slot(prefix + "_Wi");
    const size_t hs = wi.rows;
    const size_t d = wi.cols;
    const size_t n = xs.size();
    if (dxs.size() != n) dxs.assign(n, Vec(d, 0.0));

    static const char* gates[4] = {"i", "f", "o", "g"};
    Vec dh_next(hs, 0.0), dc_next(hs, 0.0);
    for (size_t step = n; step-- > 0;) {
        Vec dh(hs), dc(hs);
        for (size_t k = 0; k < hs; ++k) {
            dh[k] = dh_up[step][k] + dh_next[k];
            const double tc = tr.tanh_c[step][k];
            dc[k] = dc_next[k] + dh[k] * tr.o[step][k] * (1.0 - tc * tc);
        }
        const Vec zero(hs, 0.0);
        const Vec& c_prev_v = (step == 0) ? zero : tr.c[step - 1];
        const Vec& h_prev_v = (step == 0) ? zero : tr.h[step - 1];

        // gradients of the pre-activations
        Vec dpre[4];
        for (int gi = 0; gi < 4; ++gi) dpre[gi].assign(hs, 0.0);
        for (size_t k = 0; k < hs; ++k) {
            const double di = dc[k] * tr.g[step][k];
            const double df = dc[k] * c_prev_v[k];
            const double dg = dc[k] * tr.i[step][k];
            const double do_ = dh[k] * tr.tanh_c[step][k];
            dpre[0][k] = di * tr.i[step][k] * (1.0 - tr.i[step][k]);
            dpre[1][k] = df * tr.f[step][k] * (1.0 - tr.f[step][k]);
            dpre[2][k] = do_ * tr.o[step][k] * (1.0 - tr.o[step][k]);
            dpre[3][k] = dg * (1.0 - tr.g[step][k] * tr.g[step][k]);
        }

        Vec dh_prev(hs, 0.0);
        for (int gi = 0; gi < 4; ++gi) {
            const auto& W = store.slot(prefix + "_W" + gates[gi]);
            const auto& U = store.slot(prefix + "_U" + gates[gi]);
            auto dW = store.grad_all(prefix + "_W" + gates[gi]);
            auto dU = store.grad_all(prefix + "_U" + gates[gi]);
            auto db = store.grad_all(prefix + "_b" + gates[gi]);
            matvec_backward({W.value.data(), W.value.size()}, hs, d, xs[step], dpre[gi], dW,
                            dxs[step]);
            Vec dh_tmp;
            matvec_backward({U.value.data(), U.value.size()}, hs, hs, h_prev_v, dpre[gi], dU,
                            dh_tmp);
            for (size_t k = 0; k < hs; ++k) {
                db[k] += dpre[gi][k];
                dh_prev[k] += dh_tmp[k];
            }
        }
        for (size_t k = 0; k < hs; ++k) {
            dh_next[k] = dh_prev[k];
            dc_next[k] = dc[k] * tr.f[step][k];
        }
    }
}

struct EncodeTrace {
    std::vector<Vec> xs;          // token embeddings, position order
    LstmDirTrace fw, bw;          // bw in reversed processing order
    std::vector<Vec> z;           // concatenated states per position
    Vec scores, alpha;            // attentive only
    std::vector<Vec> tanh_pre;    // tanh(Wa z_i + Ua r), attentive only
    Vec out;
};

inline std::vector<Vec> lookup_tokens(const ParameterStore& store,
                                      const std::vector<WordId>& tokens) {
    std::vector<Vec> xs;
    xs.reserve(tokens.size());
    for (WordId w : tokens) xs.push_back(store.row_vec("word_emb", size_t(w)));
    return xs;
}

inline void run_blstm(const ParameterStore& store, const std::vector<WordId>& tokens,
                      EncodeTrace& tr) {
    if (tokens.empty()) throw std::invalid_argument("blstm: empty token sequence");
    tr.xs = lookup_tokens(store, tokens);
    std::vector<Vec> rev(tr.xs.rbegin(), tr.xs.rend());
    tr.fw = lstm_direction(store, "lstm_fw", tr.xs);
    tr.bw = lstm_direction(store, "lstm_bw", rev);
    const size_t n = tokens.size();
    tr.z.resize(n);
    for (size_t p = 0; p < n; ++p) tr.z[p] = concat(tr.fw.h[p], tr.bw.h[n - 1 - p]);
}

inline Vec encode_blstm(const ParameterStore& store, const std::vector<WordId>& tokens,
                        EncodeTrace& tr) {
    run_blstm(store, tokens, tr);
    tr.out = sum_rows(tr.z);
    return tr.out;
}

// dz per position -> LSTM params + word embeddings
inline void blstm_backward(ParameterStore& store, const std::vector<WordId>& tokens,
                           const EncodeTrace& tr, const std::vector<Vec>& dz) {
    const size_t n = tokens.size();
    const size_t hs = tr.fw.h[0].size();
    std::vector<Vec> dh_fw(n, Vec(hs, 0.0)), dh_bw(n, Vec(hs, 0.0));
    for (size_t p = 0; p < n; ++p) {
        for (size_t k = 0; k < hs; ++k) {
            dh_fw[p][k] = dz[p][k];
            dh_bw[n - 1 - p][k] = dz[p][hs + k];
        }
    }
    std::vector<Vec> rev_xs(tr.xs.rbegin(), tr.xs.rend());
    std::vector<Vec> dxs_fw, dxs_bw;
    lstm_direction_backward(store, "lstm_fw", tr.xs, tr.fw, dh_fw, dxs_fw);
    lstm_direction_backward(store, "lstm_bw", rev_xs, tr.bw, dh_bw, dxs_bw);
    for (size_t p = 0; p < n; ++p) {
        Vec dx = dxs_fw[p];
        const Vec& dxr = dxs_bw[n - 1 - p];
        for (size_t k = 0; k < dx.size(); ++k) dx[k] += dxr[k];
        store.accumulate_grad_row("word_emb", size_t(tokens[p]), dx);
    }
}

inline void encode_blstm_backward(ParameterStore& store, const std::vector<WordId>& tokens,
                                  const EncodeTrace& tr, const Vec& dout) {
    std::vector<Vec> dz(tokens.size(), dout);
    blstm_backward(store, tokens, tr, dz);
}

// alpha_i = softmax_i( v_a . tanh(Wa z_i + Ua r) )
inline Vec attention_weights(const ParameterStore& store, const std::vector<Vec>& states,
                             const Vec& rel, EncodeTrace& tr) {
    if (states.empty()) throw std::invalid_argument("attention_weights: no states");
    const auto& Wa = store.slot("attn_W");
    const auto& Ua = store.slot("attn_U");
    const auto& va = store.slot("attn_v");
    const size_t d = Wa.cols;
    const Vec ur = matvec({Ua.value.data(), Ua.value.size()}, d, d, rel);
    tr.tanh_pre.clear();
    tr.scores.assign(states.size(), 0.0);
    for (size_t i = 0; i < states.size(); ++i) {
        Vec pre = matvec({Wa.value.data(), Wa.value.size()}, d, d, states[i]);
        for (size_t k = 0; k < d; ++k) pre[k] = std::tanh(pre[k] + ur[k]);
        double e = 0.0;
        for (size_t k = 0; k < d; ++k) e += va.value[k] * pre[k];
        tr.scores[i] = e;
        tr.tanh_pre.push_back(std::move(pre));
    }
    tr.alpha = softmax(tr.scores);
    return tr.alpha;
}

inline Vec encode_attentive(const ParameterStore& store, const std::vector<WordId>& tokens,
                            const Vec& rel, EncodeTrace& tr) {
    run_blstm(store, tokens, tr);
    attention_weights(store, tr.z, rel, tr);
    const size_t d = tr.z[0].size();
    tr.out.assign(d, 0.0);
    for (size_t i = 0; i < tr.z.size(); ++i)
        for (size_t k = 0; k < d; ++k) tr.out[k] += tr.alpha[i] * tr.z[i][k];
    return tr.out;
}

// Backward through the attention pooling; `drel` accumulates the gradient of the
// conditioning relation vector (the caller routes it to the relation row).
inline void encode_attentive_backward(ParameterStore& store, const std::vector<WordId>& tokens,
                                      const Vec& rel, const EncodeTrace& tr, const Vec& dout,
                                      Vec& drel) {
    const size_t n = tr.z.size();
    const size_t d = tr.z[0].size();
    if (drel.empty()) drel.assign(d, 0.0);

    std::vector<Vec> dz(n, Vec(d, 0.0));
    Vec dalpha(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        for (size_t k = 0; k < d; ++k) {
            dalpha[i] += dout[k] * tr.z[i][k];
            dz[i][k] += tr.alpha[i] * dout[k];
        }
    }
    Vec dscores;
    softmax_backward(tr.alpha, dalpha, dscores);

    const auto& Wa = store.slot("attn_W");
    const auto& Ua = store.slot("attn_U");
    const auto& va = store.slot("attn_v");
    auto dWa = store.grad_all("attn_W");
    auto dUa = store.grad_all("attn_U");
    auto dva = store.grad_all("attn_v");
    for (size_t i = 0; i < n; ++i) {
        const Vec& t = tr.tanh_pre[i];
        Vec dpre(d);
        for (size_t k = 0; k < d; ++k) {
            dva[k] += dscores[i] * t[k];
            dpre[k] = dscores[i] * va.value[k] * (1.0 - t[k] * t[k]);
        }
        matvec_backward({Wa.value.data(), Wa.value.size()}, d, d, tr.z[i], dpre, dWa, dz[i]);
        matvec_backward({Ua.value.data(), Ua.value.size()}, d, d, rel, dpre, dUa, drel);
    }
    blstm_backward(store, tokens, tr, dz);
}

}  // namespace jointkge
