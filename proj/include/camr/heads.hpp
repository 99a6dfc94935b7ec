#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "camr/common.hpp"
#include "camr/rnn.hpp"

namespace camr {

// ---------------------------------------------------------------------------
// Linear tag classifier: scores = [h;1] W with the bias folded into the
// appended row of W.

struct LinearTagHead {
    Eigen::MatrixXd weights;  // (d+1) x c

    int input_dim() const { return static_cast<int>(weights.rows()) - 1; }
    int classes() const { return static_cast<int>(weights.cols()); }

    static LinearTagHead zeros(int input_dim, int classes) {
        return {Eigen::MatrixXd::Zero(input_dim + 1, classes)};
    }
    static LinearTagHead random(int input_dim, int classes, uint64_t seed, double scale = 0.1) {
        LinearTagHead h = zeros(input_dim, classes);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> dist(-scale, scale);
        for (Eigen::Index i = 0; i < h.weights.size(); ++i) h.weights.data()[i] = dist(rng);
        return h;
    }
};

inline Eigen::VectorXd with_bias(const Eigen::VectorXd& h) {
    Eigen::VectorXd u(h.size() + 1);
    u << h, 1.0;
    return u;
}

inline Eigen::VectorXd tag_forward(const LinearTagHead& head, const Eigen::VectorXd& h) {
    if (h.size() != head.input_dim())
        throw DataError("tag_forward: input dimension " + std::to_string(h.size()) +
                        " does not match head dimension " + std::to_string(head.input_dim()));
    return head.weights.transpose() * with_bias(h);
}

// ---------------------------------------------------------------------------
// Biaffine pair classifier with an optional trainable recurrent context
// layer in front: score_k(a, b) = [a;1] W_k [b;1]^T.

struct BiaffineHead {
    std::optional<BiRnn> context;
    std::vector<Eigen::MatrixXd> weights;  // one (p+1)x(p+1) matrix per class

    int classes() const { return static_cast<int>(weights.size()); }
    int pair_dim() const { return static_cast<int>(weights.front().rows()) - 1; }
    int input_dim() const { return context ? context->input_dim() : pair_dim(); }

    static BiaffineHead zeros(int input_dim, int classes, int rnn_hidden = 0) {
        BiaffineHead h;
        int p = input_dim;
        if (rnn_hidden > 0) {
            h.context = BiRnn::zeros(input_dim, rnn_hidden);
            p = h.context->output_dim();
        }
        h.weights.assign(static_cast<size_t>(classes), Eigen::MatrixXd::Zero(p + 1, p + 1));
        return h;
    }
    static BiaffineHead random(int input_dim, int classes, int rnn_hidden, uint64_t seed,
                               double scale = 0.1) {
        BiaffineHead h = zeros(input_dim, classes, rnn_hidden);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> dist(-scale, scale);
        if (h.context) {
            h.context = BiRnn::random(input_dim, rnn_hidden, seed ^ 0xabcdef, scale);
        }
        for (auto& w : h.weights)
            for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
        return h;
    }
};

inline Eigen::VectorXd biaffine_forward(const BiaffineHead& head, const Eigen::VectorXd& a,
                                        const Eigen::VectorXd& b) {
    if (a.size() != head.pair_dim() || b.size() != head.pair_dim())
        throw DataError("biaffine_forward: inputs must have the pair dimension " +
                        std::to_string(head.pair_dim()));
    const Eigen::VectorXd ua = with_bias(a), ub = with_bias(b);
    Eigen::VectorXd scores(head.classes());
    for (int k = 0; k < head.classes(); ++k)
        scores[k] = ua.dot(head.weights[static_cast<size_t>(k)] * ub);
    return scores;
}

// Context application: items in, contextualized pair vectors out.
inline std::vector<Eigen::VectorXd> contextualize(const BiaffineHead& head,
                                                  const std::vector<Eigen::VectorXd>& items) {
    if (!head.context) return items;
    return birnn_forward(*head.context, items);
}

// ---------------------------------------------------------------------------
// Cross-entropy losses and analytic gradients.

namespace detail {

inline double log_sum_exp(const Eigen::VectorXd& s) {
    const double m = s.maxCoeff();
    return m + std::log((s.array() - m).exp().sum());
}

inline double class_weight(const std::vector<double>* w, int gold) {
    if (!w || w->empty()) return 1.0;
    if (gold < 0 || gold >= static_cast<int>(w->size()))
        throw DataError("class weight index out of range");
    return (*w)[static_cast<size_t>(gold)];
}

inline void check_gold(int gold, int classes) {
    if (gold < 0 || gold >= classes)
        throw DataError("gold label " + std::to_string(gold) + " out of range for " +
                        std::to_string(classes) + " classes");
}

}  // namespace detail

// Mean (optionally class-weighted) cross-entropy over the N tags of one
// sentence.
inline double tag_batch_loss(const LinearTagHead& head, const std::vector<Eigen::VectorXd>& items,
                             const std::vector<int>& gold,
                             const std::vector<double>* class_weights = nullptr) {
    if (items.size() != gold.size()) throw DataError("items and gold labels differ in length");
    if (items.empty()) return 0.0;
    double loss = 0.0;
    for (size_t i = 0; i < items.size(); ++i) {
        detail::check_gold(gold[i], head.classes());
        const Eigen::VectorXd s = tag_forward(head, items[i]);
        loss += detail::class_weight(class_weights, gold[i]) *
                (detail::log_sum_exp(s) - s[gold[i]]);
    }
    return loss / static_cast<double>(items.size());
}

struct TagGrad {
    Eigen::MatrixXd weights;
    double loss = 0.0;
};

inline TagGrad tag_batch_grad(const LinearTagHead& head, const std::vector<Eigen::VectorXd>& items,
                              const std::vector<int>& gold,
                              const std::vector<double>* class_weights = nullptr) {
    if (items.size() != gold.size()) throw DataError("items and gold labels differ in length");
    TagGrad g{Eigen::MatrixXd::Zero(head.weights.rows(), head.weights.cols()), 0.0};
    if (items.empty()) return g;
    const double inv_n = 1.0 / static_cast<double>(items.size());
    for (size_t i = 0; i < items.size(); ++i) {
        detail::check_gold(gold[i], head.classes());
        const Eigen::VectorXd u = with_bias(items[i]);
        const Eigen::VectorXd s = head.weights.transpose() * u;
        const double lse = detail::log_sum_exp(s);
        const double w = detail::class_weight(class_weights, gold[i]);
        g.loss += w * (lse - s[gold[i]]);
        Eigen::VectorXd p = (s.array() - lse).exp();
        p[gold[i]] -= 1.0;
        g.weights += (w * inv_n) * (u * p.transpose());
    }
    g.loss *= inv_n;
    return g;
}

// Mean cross-entropy over all N*N ordered pairs (the diagonal included, gold
// class "O" there).
inline double relation_batch_loss(const BiaffineHead& head,
                                  const std::vector<Eigen::VectorXd>& items,
                                  const std::vector<int>& gold,
                                  const std::vector<double>* class_weights = nullptr) {
    const size_t n = items.size();
    if (gold.size() != n * n) throw DataError("gold matrix must have N*N entries");
    if (n == 0) return 0.0;
    const std::vector<Eigen::VectorXd> ctx = contextualize(head, items);
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            const int y = gold[i * n + j];
            detail::check_gold(y, head.classes());
            const Eigen::VectorXd s = biaffine_forward(head, ctx[i], ctx[j]);
            loss += detail::class_weight(class_weights, y) * (detail::log_sum_exp(s) - s[y]);
        }
    }
    return loss / static_cast<double>(n * n);
}

struct BiaffineGrad {
    std::vector<Eigen::MatrixXd> weights;
    BiRnnGrad context;
    bool has_context = false;
    double loss = 0.0;
};

inline BiaffineGrad relation_batch_grad(const BiaffineHead& head,
                                        const std::vector<Eigen::VectorXd>& items,
                                        const std::vector<int>& gold,
                                        const std::vector<double>* class_weights = nullptr) {
    const size_t n = items.size();
    if (gold.size() != n * n) throw DataError("gold matrix must have N*N entries");
    BiaffineGrad g;
    g.weights.assign(static_cast<size_t>(head.classes()),
                     Eigen::MatrixXd::Zero(head.pair_dim() + 1, head.pair_dim() + 1));
    if (head.context) {
        g.context = BiRnnGrad::zeros(*head.context);
        g.has_context = true;
    }
    if (n == 0) return g;

    BiRnnStates states;
    std::vector<Eigen::VectorXd> ctx;
    if (head.context) {
        states = birnn_states(*head.context, items);
        ctx.resize(n);
        for (size_t t = 0; t < n; ++t) {
            ctx[t].resize(head.context->output_dim());
            ctx[t] << states.fwd[t], states.bwd[t];
        }
    } else {
        ctx = items;
    }

    const int p = head.pair_dim();
    std::vector<Eigen::VectorXd> u(n);
    for (size_t t = 0; t < n; ++t) u[t] = with_bias(ctx[t]);
    std::vector<Eigen::VectorXd> d_ctx(n, Eigen::VectorXd::Zero(p));

    const double inv = 1.0 / static_cast<double>(n * n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            const int y = gold[i * n + j];
            detail::check_gold(y, head.classes());
            Eigen::VectorXd s(head.classes());
            for (int k = 0; k < head.classes(); ++k)
                s[k] = u[i].dot(head.weights[static_cast<size_t>(k)] * u[j]);
            const double lse = detail::log_sum_exp(s);
            const double w = detail::class_weight(class_weights, y);
            g.loss += w * (lse - s[y]);
            Eigen::VectorXd ds = (s.array() - lse).exp();
            ds[y] -= 1.0;
            ds *= w * inv;
            for (int k = 0; k < head.classes(); ++k) {
                const double dk = ds[k];
                if (dk == 0.0) continue;
                const Eigen::MatrixXd& wk = head.weights[static_cast<size_t>(k)];
                g.weights[static_cast<size_t>(k)] += dk * (u[i] * u[j].transpose());
                d_ctx[i] += dk * (wk * u[j]).head(p);
                d_ctx[j] += dk * (wk.transpose() * u[i]).head(p);
            }
        }
    }
    g.loss *= inv;

    if (head.context) birnn_backward(*head.context, items, states, d_ctx, g.context);
    return g;
}

}  // namespace camr
