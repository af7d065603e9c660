#pragma once

#include <algorithm>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "slotgen/attention.hpp"
#include "slotgen/adam.hpp"
#include "slotgen/corpusprep.hpp"
#include "slotgen/gru.hpp"
#include "slotgen/lexicon.hpp"
#include "slotgen/metrics.hpp"
#include "slotgen/ops.hpp"
#include "slotgen/subword.hpp"

namespace slotgen::seq2seq {

using corpusprep::ParallelExample;
using corpusprep::Vocabulary;
using numcore::AttentionCache;
using numcore::AttentionParams;
using numcore::DropoutMode;
using numcore::GruCache;
using numcore::GruParams;
using numcore::ParamRef;
using numcore::Tensor;

struct ModelConfig {
    std::size_t embed_dim = 620;
    std::size_t hidden_dim = 1000;
    std::size_t attention_dim = 0;  // 0 -> hidden_dim
    double dropout = 0.2;
    std::size_t max_target_len = 30;
    std::size_t beam_size = 1;

    double learning_rate = 2e-4;
    double lr_decay = 0.9;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    std::uint64_t seed = 1;

    std::size_t attn_dim() const { return attention_dim == 0 ? hidden_dim : attention_dim; }

    /// CPU-friendly configuration for tests and experiments.
    static ModelConfig desk() {
        ModelConfig c;
        c.embed_dim = 32;
        c.hidden_dim = 64;
        c.learning_rate = 2e-3;
        return c;
    }

    /// The production-scale configuration (embeddings 620, hidden 1000).
    static ModelConfig paper() { return ModelConfig(); }
};

/// All trainable tensors; the same layout serves as gradient accumulator.
/// for_each order defines the checkpoint blob order.
template <typename T>
struct ParamSet {
    Tensor<T> src_embed, trg_embed;  // V x E
    GruParams<T> enc_fwd, enc_bwd;   // E -> H
    GruParams<T> dec;                // (E + H) -> H
    AttentionParams<T> attention;    // A x H
    Tensor<T> init_w, init_b;        // H x H, H
    Tensor<T> out_w, out_b;          // V x H, V

    ParamSet() = default;
    ParamSet(std::size_t vocab, std::size_t embed, std::size_t hidden, std::size_t attn)
        : src_embed(Tensor<T>::mat(vocab, embed)),
          trg_embed(Tensor<T>::mat(vocab, embed)),
          enc_fwd(embed, hidden),
          enc_bwd(embed, hidden),
          dec(embed + hidden, hidden),
          attention(attn, hidden),
          init_w(Tensor<T>::mat(hidden, hidden)),
          init_b(Tensor<T>::vec(hidden)),
          out_w(Tensor<T>::mat(vocab, hidden)),
          out_b(Tensor<T>::vec(vocab)) {}

    template <typename F>
    void for_each(F&& f) {
        f("src_embed", src_embed);
        f("trg_embed", trg_embed);
        enc_fwd.for_each("enc_fwd", f);
        enc_bwd.for_each("enc_bwd", f);
        dec.for_each("dec", f);
        attention.for_each("attention", f);
        f("init_w", init_w);
        f("init_b", init_b);
        f("out_w", out_w);
        f("out_b", out_b);
    }

    void zero() {
        for_each([](const std::string&, Tensor<T>& t) { t.zero(); });
    }

    void scale(T factor) {
        for_each([factor](const std::string&, Tensor<T>& t) {
            for (std::size_t i = 0; i < t.size(); ++i) t[i] *= factor;
        });
    }
};

template <typename T>
struct Seq2SeqModel {
    ModelConfig config;
    Vocabulary vocab;
    ParamSet<T> params;

    Seq2SeqModel() = default;
    Seq2SeqModel(ModelConfig cfg, Vocabulary v)
        : config(cfg),
          vocab(std::move(v)),
          params(vocab.size(), cfg.embed_dim, cfg.hidden_dim, cfg.attn_dim()) {}

    /// Weights uniform in [-0.1, 0.1], biases zero.
    void init_params(Rng& rng) {
        params.for_each([&rng](const std::string& name, Tensor<T>& t) {
            bool is_bias = name.find(".b_") != std::string::npos || name == "init_b" ||
                           name == "out_b";
            if (is_bias) {
                t.zero();
            } else {
                for (std::size_t i = 0; i < t.size(); ++i)
                    t[i] = static_cast<T>(rng.uniform_real(-0.1, 0.1));
            }
        });
    }

    std::vector<ParamRef<T>> param_refs(ParamSet<T>& grads) {
        std::vector<ParamRef<T>> refs;
        params.for_each([&refs](const std::string& name, Tensor<T>& t) {
            refs.push_back({name, &t, nullptr});
        });
        std::size_t i = 0;
        grads.for_each([&refs, &i](const std::string&, Tensor<T>& t) { refs[i++].grad = &t; });
        return refs;
    }
};

/// A placeholder occurrence on the source side: token position, slot type
/// ("brand" for $brand) and the entity, empty when the input was
/// train-stripped.
struct SourcePlaceholder {
    std::size_t position = 0;
    std::string slot_type;
    std::string entity;
};

/// Splits a source token into the vocabulary form and placeholder metadata:
/// "$brand|ACME" -> model token "$brand", entity "ACME" (joiners restored).
struct ParsedToken {
    std::string model_token;
    bool is_placeholder = false;
    std::string slot_type;
    std::string entity;
};

inline ParsedToken parse_source_token(const std::string& token) {
    ParsedToken p;
    p.model_token = token;
    if (token.size() < 2 || token[0] != '$') return p;
    p.is_placeholder = true;
    std::size_t bar = token.find('|');
    if (bar == std::string::npos) {
        p.slot_type = token.substr(1);
    } else {
        p.slot_type = token.substr(1, bar - 1);
        p.model_token = token.substr(0, bar);
        p.entity = lexicon::denormalize_entity(lexicon::parse_pseudo(token, "").tokens.at(0));
    }
    return p;
}

// ---- encoder ----

template <typename T>
struct EncoderCache {
    std::vector<GruCache<T>> fwd, bwd;
    Tensor<T> bwd_state0;    // h_bwd,0 feeding the decoder start state
    Tensor<T> dropout_mask;  // m x H; empty outside train mode
};

template <typename T>
struct EncoderOutput {
    std::vector<std::string> tokens;
    std::vector<int> token_ids;
    std::vector<SourcePlaceholder> placeholders;
    Tensor<T> states;       // m x H, h_fwd + h_bwd (dropout applied in train mode)
    Tensor<T> memory_proj;  // m x A, attention memory projection
    Tensor<T> init_state;   // decoder s_0
    EncoderCache<T> cache;  // filled when keep_cache is set
};

/// Bi-directional encoder pass; row i of `states` is h_fwd,i + h_bwd,i.
/// The decoder start state is tanh(Wi h_bwd,0 + bi). Set `keep_cache` for a
/// later backward pass (independent of the dropout mode, which the gradient
/// check keeps at eval).
template <typename T>
EncoderOutput<T> encode(const std::vector<std::string>& tokens, const Seq2SeqModel<T>& model,
                        DropoutMode mode = DropoutMode::eval, Rng* rng = nullptr,
                        bool keep_cache = false) {
    if (tokens.empty()) raise(Errc::empty_source, "cannot encode an empty source");
    const std::size_t m = tokens.size();
    const std::size_t embed = model.config.embed_dim;
    const std::size_t hidden = model.config.hidden_dim;
    const std::size_t attn = model.config.attn_dim();

    EncoderOutput<T> out;
    out.tokens = tokens;
    out.token_ids.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        ParsedToken p = parse_source_token(tokens[i]);
        out.token_ids.push_back(model.vocab.id(p.model_token));
        if (p.is_placeholder) out.placeholders.push_back({i, p.slot_type, p.entity});
    }

    if (keep_cache) {
        out.cache.fwd.resize(m);
        out.cache.bwd.resize(m);
    }

    Tensor<T> x = Tensor<T>::vec(embed);
    auto load_embedding = [&](std::size_t i) {
        const T* row = model.params.src_embed.row(static_cast<std::size_t>(out.token_ids[i]));
        std::copy(row, row + embed, x.data());
    };

    out.states = Tensor<T>::mat(m, hidden);
    Tensor<T> h = Tensor<T>::vec(hidden);
    for (std::size_t i = 0; i < m; ++i) {
        load_embedding(i);
        h = gru_forward(x, h, model.params.enc_fwd, keep_cache ? &out.cache.fwd[i] : nullptr);
        std::copy(h.data(), h.data() + hidden, out.states.row(i));
    }
    h.zero();
    for (std::size_t ri = 0; ri < m; ++ri) {
        const std::size_t i = m - 1 - ri;
        load_embedding(i);
        h = gru_forward(x, h, model.params.enc_bwd, keep_cache ? &out.cache.bwd[i] : nullptr);
        T* row = out.states.row(i);
        for (std::size_t k = 0; k < hidden; ++k) row[k] += h[k];
    }
    out.cache.bwd_state0 = h;  // backward chain ends at position 0

    out.init_state = Tensor<T>::vec(hidden);
    numcore::matvec(model.params.init_w, out.cache.bwd_state0.data(), out.init_state.data());
    for (std::size_t k = 0; k < hidden; ++k)
        out.init_state[k] = std::tanh(out.init_state[k] + model.params.init_b[k]);

    if (mode == DropoutMode::train) {
        require(rng != nullptr, "training encode needs an rng");
        numcore::dropout_inplace(out.states, static_cast<T>(model.config.dropout), mode, *rng,
                                 keep_cache ? &out.cache.dropout_mask : nullptr);
    }

    out.memory_proj = Tensor<T>::mat(m, attn);
    for (std::size_t i = 0; i < m; ++i)
        numcore::matvec(model.params.attention.w_memory, out.states.row(i),
                        out.memory_proj.row(i));
    return out;
}

// ---- single decode step (inference path) ----

template <typename T>
struct StepResult {
    Tensor<T> distribution;  // over V, sums to 1
    Tensor<T> attention;     // over source positions
    Tensor<T> state;         // s_j
};

template <typename T>
StepResult<T> decode_step(const Seq2SeqModel<T>& model, const EncoderOutput<T>& enc,
                          const Tensor<T>& s_prev, int prev_token_id) {
    const std::size_t embed = model.config.embed_dim;
    const std::size_t hidden = model.config.hidden_dim;
    if (prev_token_id < 0 || prev_token_id >= static_cast<int>(model.vocab.size()))
        raise(Errc::index_out_of_range, "previous token id outside the vocabulary");

    StepResult<T> r;
    r.attention = numcore::attention_forward(s_prev, enc.states, enc.memory_proj,
                                             model.params.attention);
    Tensor<T> ctx = numcore::context(r.attention, enc.states);

    Tensor<T> gru_in = Tensor<T>::vec(embed + hidden);
    const T* erow = model.params.trg_embed.row(static_cast<std::size_t>(prev_token_id));
    std::copy(erow, erow + embed, gru_in.data());
    std::copy(ctx.data(), ctx.data() + hidden, gru_in.data() + embed);

    r.state = gru_forward(gru_in, s_prev, model.params.dec);

    Tensor<T> logits = Tensor<T>::vec(model.vocab.size());
    numcore::matvec(model.params.out_w, r.state.data(), logits.data());
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += model.params.out_b[i];
    numcore::softmax_inplace(logits.data(), logits.size());
    r.distribution = std::move(logits);
    return r;
}

// ---- generation ----

template <typename T>
struct DecodeTrace {
    std::vector<std::string> tokens;  // emitted tokens, <eos> excluded
    std::vector<int> token_ids;
    Tensor<T> attention;              // steps x m, each row sums to 1
    Tensor<T> states;                 // steps x H
    double score = 0.0;               // length-normalized log probability
};

/// Greedy (beam_size 1) or beam-search decoding over a pre-encoded source;
/// stops at <eos> or max_len. Hypotheses are ranked by length-normalized
/// summed log probability; ties break toward the lower token id, so decoding
/// is deterministic.
template <typename T>
DecodeTrace<T> generate_from(const Seq2SeqModel<T>& model, const EncoderOutput<T>& enc,
                             std::size_t max_len, std::size_t beam_size) {
    if (max_len < 1) raise(Errc::config_error, "max_len must be >= 1");
    if (beam_size < 1) raise(Errc::config_error, "beam_size must be >= 1");

    struct Hyp {
        std::vector<int> ids;
        std::vector<Tensor<T>> att_rows;
        std::vector<Tensor<T>> states;
        Tensor<T> state;
        double logprob = 0.0;
    };
    auto normalized = [](const Hyp& h) {
        return h.att_rows.empty() ? -std::numeric_limits<double>::infinity()
                                  : h.logprob / static_cast<double>(h.att_rows.size());
    };

    std::vector<Hyp> beam(1);
    beam[0].state = enc.init_state;
    std::vector<Hyp> finished;

    for (std::size_t step = 0; step < max_len && !beam.empty(); ++step) {
        struct Expansion {
            double logprob;
            int token;
            std::size_t hyp;
        };
        std::vector<Expansion> expansions;
        std::vector<StepResult<T>> results(beam.size());
        for (std::size_t hi = 0; hi < beam.size(); ++hi) {
            int prev = beam[hi].ids.empty() ? Vocabulary::kBos : beam[hi].ids.back();
            results[hi] = decode_step(model, enc, beam[hi].state, prev);
            const Tensor<T>& dist = results[hi].distribution;
            const std::size_t take = std::min<std::size_t>(beam_size + 1, dist.size());
            std::vector<int> order(dist.size());
            for (std::size_t t = 0; t < dist.size(); ++t) order[t] = static_cast<int>(t);
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                              order.end(), [&dist](int a, int b) {
                                  T pa = dist[static_cast<std::size_t>(a)];
                                  T pb = dist[static_cast<std::size_t>(b)];
                                  if (pa != pb) return pa > pb;
                                  return a < b;
                              });
            for (std::size_t k = 0; k < take; ++k) {
                double lp = std::log(std::max(
                    static_cast<double>(dist[static_cast<std::size_t>(order[k])]), 1e-300));
                expansions.push_back({beam[hi].logprob + lp, order[k], hi});
            }
        }
        std::sort(expansions.begin(), expansions.end(),
                  [](const Expansion& a, const Expansion& b) {
                      if (a.logprob != b.logprob) return a.logprob > b.logprob;
                      if (a.token != b.token) return a.token < b.token;
                      return a.hyp < b.hyp;
                  });

        std::vector<Hyp> next;
        for (const auto& e : expansions) {
            if (next.size() >= beam_size) break;
            Hyp hyp = beam[e.hyp];
            hyp.logprob = e.logprob;
            hyp.att_rows.push_back(results[e.hyp].attention);
            hyp.states.push_back(results[e.hyp].state);
            hyp.state = results[e.hyp].state;
            if (e.token == Vocabulary::kEos) {
                finished.push_back(std::move(hyp));
            } else {
                hyp.ids.push_back(e.token);
                next.push_back(std::move(hyp));
            }
        }
        beam = std::move(next);
        if (finished.size() >= beam_size) break;
    }
    for (auto& hyp : beam) finished.push_back(std::move(hyp));

    std::size_t best = 0;
    for (std::size_t i = 1; i < finished.size(); ++i)
        if (normalized(finished[i]) > normalized(finished[best])) best = i;
    const Hyp& win = finished[best];

    DecodeTrace<T> trace;
    trace.token_ids = win.ids;
    for (int id : win.ids) trace.tokens.push_back(model.vocab.token(id));
    trace.score = normalized(win);
    const std::size_t emitted = win.ids.size();
    if (emitted > 0) {
        trace.attention = Tensor<T>::mat(emitted, enc.tokens.size());
        trace.states = Tensor<T>::mat(emitted, model.config.hidden_dim);
        for (std::size_t j = 0; j < emitted; ++j) {
            std::copy(win.att_rows[j].data(), win.att_rows[j].data() + enc.tokens.size(),
                      trace.attention.row(j));
            std::copy(win.states[j].data(), win.states[j].data() + model.config.hidden_dim,
                      trace.states.row(j));
        }
    }
    return trace;
}

template <typename T>
DecodeTrace<T> generate(const Seq2SeqModel<T>& model, const std::vector<std::string>& src_tokens,
                        std::size_t max_len = 0, std::size_t beam_size = 0) {
    if (max_len == 0) max_len = model.config.max_target_len;
    if (beam_size == 0) beam_size = model.config.beam_size;
    EncoderOutput<T> enc = encode(src_tokens, model);
    return generate_from(model, enc, max_len, beam_size);
}

// ---- placeholder resolution ----

struct ResolvedTitle {
    std::string text;
    bool flagged = false;  // unresolved placeholder or type fallback; never silent
    std::vector<std::string> substituted_entities;
    std::vector<std::string> notes;
};

/// Replaces emitted placeholder tokens with source entities. Each target
/// placeholder takes the not-yet-used source placeholder with the highest
/// attention weight at its emission step, preferring equal slot types; exact
/// ties go to the lowest source position. Every source placeholder is used
/// at most once. Titles with unresolved placeholders are flagged, with the
/// placeholder token kept visible.
template <typename T>
ResolvedTitle resolve_placeholders(const DecodeTrace<T>& trace, const EncoderOutput<T>& enc) {
    ResolvedTitle out;
    std::vector<bool> used(enc.placeholders.size(), false);

    std::vector<std::string> tokens;
    tokens.reserve(trace.tokens.size());
    for (std::size_t j = 0; j < trace.tokens.size(); ++j) {
        const std::string& tok = trace.tokens[j];
        ParsedToken parsed = parse_source_token(tok);
        if (!parsed.is_placeholder) {
            tokens.push_back(tok);
            continue;
        }

        auto pick = [&](bool same_type_only) -> std::optional<std::size_t> {
            std::optional<std::size_t> choice;
            T best_weight = T(0);
            for (std::size_t p = 0; p < enc.placeholders.size(); ++p) {
                if (used[p]) continue;
                if (same_type_only && enc.placeholders[p].slot_type != parsed.slot_type)
                    continue;
                T w = trace.attention.at(j, enc.placeholders[p].position);
                if (!choice.has_value() || w > best_weight) {
                    choice = p;
                    best_weight = w;
                }
            }
            return choice;
        };

        std::optional<std::size_t> choice = pick(true);
        if (!choice.has_value()) {
            choice = pick(false);
            if (choice.has_value()) {
                out.flagged = true;
                out.notes.push_back("step " + std::to_string(j) + ": no unused $" +
                                    parsed.slot_type + " on the source, used $" +
                                    enc.placeholders[*choice].slot_type);
            }
        }
        if (!choice.has_value()) {
            out.flagged = true;
            out.notes.push_back("step " + std::to_string(j) + ": unresolved " + tok);
            tokens.push_back(tok);  // kept visible, never dropped
            continue;
        }
        used[*choice] = true;
        const SourcePlaceholder& src = enc.placeholders[*choice];
        if (src.entity.empty()) {
            out.flagged = true;
            out.notes.push_back("step " + std::to_string(j) + ": source placeholder $" +
                                src.slot_type + " carries no entity");
            tokens.push_back(tok);
            continue;
        }
        tokens.push_back(src.entity);
        out.substituted_entities.push_back(src.entity);
    }

    // join subwords; a dangling marker on the last token is flagged, not fatal
    if (!tokens.empty()) {
        std::string& last = tokens.back();
        if (last.size() >= 2 && last.compare(last.size() - 2, 2, subword::kContinuation) == 0) {
            last.resize(last.size() - 2);
            out.flagged = true;
            out.notes.push_back("dangling subword marker at end of title");
        }
    }
    out.text = join(subword::bpe_decode(tokens), " ");
    return out;
}

// ---- teacher-forced loss and gradients ----

namespace detail {

template <typename T>
struct StepCache {
    AttentionCache<T> att;
    GruCache<T> gru;
    Tensor<T> context;
    Tensor<T> state;          // s_j pre-dropout
    Tensor<T> dropped_state;  // output projection input
    Tensor<T> out_mask;
    Tensor<T> dlogits;
    int input_id = 0;
};

/// Forward (and optional backward) of one example under teacher forcing.
/// Returns the summed token loss; gradients accumulate into `grads`.
template <typename T>
T teacher_forced_pass(const Seq2SeqModel<T>& model, const std::vector<std::string>& src_tokens,
                      const std::vector<int>& trg_ids, ParamSet<T>* grads, DropoutMode mode,
                      Rng* rng, std::size_t* token_count) {
    const std::size_t embed = model.config.embed_dim;
    const std::size_t hidden = model.config.hidden_dim;
    const bool backward = grads != nullptr;

    EncoderOutput<T> enc = encode(src_tokens, model, mode, rng, backward);
    const std::size_t m = enc.tokens.size();
    const std::size_t steps = trg_ids.size() + 1;  // predictions include <eos>
    if (token_count != nullptr) *token_count += steps;

    std::vector<StepCache<T>> caches(backward ? steps : 1);
    Tensor<T> s_prev = enc.init_state;
    Tensor<T> gru_in = Tensor<T>::vec(embed + hidden);
    T loss = T(0);

    for (std::size_t j = 0; j < steps; ++j) {
        StepCache<T>& sc = caches[backward ? j : 0];
        sc.input_id = (j == 0) ? Vocabulary::kBos : trg_ids[j - 1];
        int gold = (j < trg_ids.size()) ? trg_ids[j] : Vocabulary::kEos;

        Tensor<T> weights = numcore::attention_forward(s_prev, enc.states, enc.memory_proj,
                                                       model.params.attention,
                                                       backward ? &sc.att : nullptr);
        sc.context = numcore::context(weights, enc.states);

        const T* erow = model.params.trg_embed.row(static_cast<std::size_t>(sc.input_id));
        std::copy(erow, erow + embed, gru_in.data());
        std::copy(sc.context.data(), sc.context.data() + hidden, gru_in.data() + embed);

        sc.state = gru_forward(gru_in, s_prev, model.params.dec, backward ? &sc.gru : nullptr);

        sc.dropped_state = sc.state;
        if (mode == DropoutMode::train)
            numcore::dropout_inplace(sc.dropped_state, static_cast<T>(model.config.dropout),
                                     mode, *rng, backward ? &sc.out_mask : nullptr);

        Tensor<T> logits = Tensor<T>::vec(model.vocab.size());
        numcore::matvec(model.params.out_w, sc.dropped_state.data(), logits.data());
        for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += model.params.out_b[i];
        auto [step_loss, dlogits] =
            numcore::softmax_xent(logits, static_cast<std::size_t>(gold));
        loss += step_loss;
        if (backward) sc.dlogits = std::move(dlogits);
        s_prev = sc.state;
    }

    if (!backward) return loss;

    // ---- decoder backward ----
    Tensor<T> d_memory = Tensor<T>::mat(m, hidden);
    Tensor<T> ds_carry = Tensor<T>::vec(hidden);  // dL/ds_{j-1} accumulator
    Tensor<T> ds = Tensor<T>::vec(hidden);
    Tensor<T> d_gru_in = Tensor<T>::vec(embed + hidden);
    Tensor<T> d_context = Tensor<T>::vec(hidden);
    Tensor<T> d_dropped = Tensor<T>::vec(hidden);

    for (std::size_t rj = 0; rj < steps; ++rj) {
        const std::size_t j = steps - 1 - rj;
        StepCache<T>& sc = caches[j];

        numcore::matvec_transposed(model.params.out_w, sc.dlogits.data(), d_dropped.data());
        numcore::add_outer(grads->out_w, sc.dlogits.data(), sc.dropped_state.data());
        for (std::size_t i = 0; i < sc.dlogits.size(); ++i) grads->out_b[i] += sc.dlogits[i];

        ds = ds_carry;
        if (mode == DropoutMode::train) {
            for (std::size_t k = 0; k < hidden; ++k) ds[k] += d_dropped[k] * sc.out_mask[k];
        } else {
            for (std::size_t k = 0; k < hidden; ++k) ds[k] += d_dropped[k];
        }

        d_gru_in.zero();
        ds_carry.zero();
        gru_backward(model.params.dec, sc.gru, ds, grads->dec, &d_gru_in, &ds_carry);

        T* emb_grad = grads->trg_embed.row(static_cast<std::size_t>(sc.input_id));
        for (std::size_t k = 0; k < embed; ++k) emb_grad[k] += d_gru_in[k];
        for (std::size_t k = 0; k < hidden; ++k) d_context[k] = d_gru_in[embed + k];

        numcore::attention_backward(model.params.attention, enc.states, sc.att, d_context,
                                    grads->attention, d_memory, ds_carry);
    }

    // decoder start state: s_0 = tanh(Wi h_bwd,0 + bi)
    Tensor<T> d_init = Tensor<T>::vec(hidden);
    for (std::size_t k = 0; k < hidden; ++k) {
        const T s0 = enc.init_state[k];
        d_init[k] = ds_carry[k] * (T(1) - s0 * s0);
    }
    numcore::add_outer(grads->init_w, d_init.data(), enc.cache.bwd_state0.data());
    for (std::size_t k = 0; k < hidden; ++k) grads->init_b[k] += d_init[k];
    Tensor<T> d_bwd0 = Tensor<T>::vec(hidden);
    numcore::matvec_transposed(model.params.init_w, d_init.data(), d_bwd0.data());

    // ---- encoder backward ----
    if (mode == DropoutMode::train) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = 0; k < hidden; ++k)
                d_memory.at(i, k) *= enc.cache.dropout_mask.at(i, k);
    }

    Tensor<T> d_x = Tensor<T>::vec(embed);
    Tensor<T> carry = Tensor<T>::vec(hidden);
    Tensor<T> dh = Tensor<T>::vec(hidden);

    // forward chain, reversed
    for (std::size_t ri = 0; ri < m; ++ri) {
        const std::size_t i = m - 1 - ri;
        for (std::size_t k = 0; k < hidden; ++k) dh[k] = d_memory.at(i, k) + carry[k];
        carry.zero();
        d_x.zero();
        gru_backward(model.params.enc_fwd, enc.cache.fwd[i], dh, grads->enc_fwd, &d_x, &carry);
        T* emb_grad = grads->src_embed.row(static_cast<std::size_t>(enc.token_ids[i]));
        for (std::size_t k = 0; k < embed; ++k) emb_grad[k] += d_x[k];
    }

    // backward chain unrolls in source order; position 0 also feeds s_0
    carry.zero();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < hidden; ++k) dh[k] = d_memory.at(i, k) + carry[k];
        if (i == 0)
            for (std::size_t k = 0; k < hidden; ++k) dh[k] += d_bwd0[k];
        carry.zero();
        d_x.zero();
        gru_backward(model.params.enc_bwd, enc.cache.bwd[i], dh, grads->enc_bwd, &d_x, &carry);
        T* emb_grad = grads->src_embed.row(static_cast<std::size_t>(enc.token_ids[i]));
        for (std::size_t k = 0; k < embed; ++k) emb_grad[k] += d_x[k];
    }

    return loss;
}

}  // namespace detail

inline std::vector<int> lookup_ids(const Vocabulary& vocab,
                                   const std::vector<std::string>& tokens) {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(vocab.id(t));
    return ids;
}

/// Summed teacher-forced loss over examples; the forward-only path the
/// gradient check re-evaluates.
template <typename T>
T corpus_loss(const Seq2SeqModel<T>& model,
              const std::vector<std::vector<std::string>>& sources,
              const std::vector<std::vector<int>>& target_ids) {
    require(sources.size() == target_ids.size(), "corpus_loss: sources vs targets");
    T total = T(0);
    for (std::size_t i = 0; i < sources.size(); ++i)
        total += detail::teacher_forced_pass<T>(model, sources[i], target_ids[i], nullptr,
                                                DropoutMode::eval, nullptr, nullptr);
    return total;
}

/// Analytic gradient of `corpus_loss`, accumulated into `grads`.
template <typename T>
T corpus_loss_and_grad(const Seq2SeqModel<T>& model, ParamSet<T>& grads,
                       const std::vector<std::vector<std::string>>& sources,
                       const std::vector<std::vector<int>>& target_ids) {
    T total = T(0);
    for (std::size_t i = 0; i < sources.size(); ++i)
        total += detail::teacher_forced_pass<T>(model, sources[i], target_ids[i], &grads,
                                                DropoutMode::eval, nullptr, nullptr);
    return total;
}

// ---- training ----

template <typename T>
struct TrainResult {
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    double best_dev_bleu = 0.0;
    std::vector<double> dev_bleu_history;
    std::vector<double> loss_history;  // mean per-token loss per epoch
};

/// Epoch loop with seeded shuffling and length-bucketed minibatches, Adam
/// updates, per-epoch greedy dev decoding scored by BLEU after placeholder
/// resolution, plateau learning-rate decay and early stopping (patience 10).
/// The model ends up with the best epoch's parameters.
template <typename T>
TrainResult<T> train(Seq2SeqModel<T>& model, const std::vector<ParallelExample>& train_corpus,
                     const std::vector<std::vector<std::string>>& dev_sources,
                     const std::vector<std::string>& dev_references,
                     std::ostream* log = nullptr) {
    if (train_corpus.empty()) raise(Errc::config_error, "empty training corpus");
    if (dev_sources.size() != dev_references.size())
        raise(Errc::length_mismatch, "dev sources vs references");
    const ModelConfig& cfg = model.config;
    if (cfg.batch_size < 1) raise(Errc::config_error, "batch_size must be >= 1");

    Rng base_rng(cfg.seed);
    Rng dropout_rng = base_rng.fork(1);
    Rng shuffle_rng = base_rng.fork(2);

    std::vector<std::vector<int>> trg_ids(train_corpus.size());
    for (std::size_t i = 0; i < train_corpus.size(); ++i)
        trg_ids[i] = lookup_ids(model.vocab, train_corpus[i].target);

    ParamSet<T> grads(model.vocab.size(), cfg.embed_dim, cfg.hidden_dim, cfg.attn_dim());
    numcore::AdamState<T> adam;
    adam.learning_rate = static_cast<T>(cfg.learning_rate);
    adam.lr_decay = static_cast<T>(cfg.lr_decay);
    auto refs = model.param_refs(grads);
    adam.init(refs);

    TrainResult<T> result;
    result.best_dev_bleu = -1.0;
    ParamSet<T> best_params = model.params;
    std::size_t stale_epochs = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::vector<std::size_t> order(train_corpus.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        shuffle_rng.shuffle(order);
        const std::size_t bucket = cfg.batch_size * 8;
        for (std::size_t start = 0; start < order.size(); start += bucket) {
            auto begin = order.begin() + static_cast<std::ptrdiff_t>(start);
            auto end = order.begin() +
                       static_cast<std::ptrdiff_t>(std::min(start + bucket, order.size()));
            std::stable_sort(begin, end, [&train_corpus](std::size_t a, std::size_t b) {
                return train_corpus[a].source.size() < train_corpus[b].source.size();
            });
        }

        double epoch_loss = 0.0;
        std::size_t epoch_tokens = 0;
        std::size_t done = 0;
        while (done < order.size()) {
            const std::size_t batch_end = std::min(done + cfg.batch_size, order.size());
            std::size_t batch_tokens = 0;
            T batch_loss = T(0);
            for (std::size_t bi = done; bi < batch_end; ++bi) {
                const auto& ex = train_corpus[order[bi]];
                batch_loss += detail::teacher_forced_pass<T>(model, ex.source,
                                                             trg_ids[order[bi]], &grads,
                                                             DropoutMode::train, &dropout_rng,
                                                             &batch_tokens);
            }
            if (!std::isfinite(static_cast<double>(batch_loss)))
                raise(Errc::diverged_loss, "non-finite loss in epoch " + std::to_string(epoch));
            grads.scale(T(1) / static_cast<T>(batch_tokens));
            numcore::adam_step(refs, adam);
            grads.zero();
            epoch_loss += static_cast<double>(batch_loss);
            epoch_tokens += batch_tokens;
            done = batch_end;
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(epoch_tokens));

        double dev_bleu = 0.0;
        if (!dev_sources.empty()) {
            std::vector<std::string> hyps;
            hyps.reserve(dev_sources.size());
            for (const auto& src : dev_sources) {
                EncoderOutput<T> enc = encode(src, model);
                DecodeTrace<T> trace = generate_from(model, enc, cfg.max_target_len, 1);
                hyps.push_back(resolve_placeholders(trace, enc).text);
            }
            dev_bleu = metrics::bleu(hyps, dev_references);
        }
        result.dev_bleu_history.push_back(dev_bleu);
        result.epochs_run = epoch;

        const bool improved = dev_bleu > result.best_dev_bleu;
        if (improved) {
            result.best_dev_bleu = dev_bleu;
            result.best_epoch = epoch;
            best_params = model.params;
            stale_epochs = 0;
        } else {
            ++stale_epochs;
            adam.decay_learning_rate();
        }
        if (log != nullptr) {
            (*log) << "epoch " << epoch << " loss " << result.loss_history.back()
                   << " dev_bleu " << dev_bleu << (improved ? " *" : "") << std::endl;
        }
        if (stale_epochs >= cfg.patience) break;
    }

    model.params = best_params;
    return result;
}

}  // namespace slotgen::seq2seq
