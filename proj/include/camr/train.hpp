#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "camr/common.hpp"
#include "camr/embeddings.hpp"
#include "camr/heads.hpp"

namespace camr {

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
    int batch_size = 10;
    double learning_rate = 2e-5;
    int epochs = 100;
    double warmup_fraction = 0.01;
    uint64_t seed = 42;
    std::vector<double> class_weights;  // empty = unweighted
    Optimizer optimizer = Optimizer::Sgd;

    void validate() const {
        if (learning_rate < 0) throw ConfigError("learning_rate must be >= 0");
        if (warmup_fraction < 0 || warmup_fraction >= 1)
            throw ConfigError("warmup_fraction must be in [0, 1)");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (epochs < 0) throw ConfigError("epochs must be >= 0");
    }
};

// ---------------------------------------------------------------------------
// Flat views over head parameters, shared by the optimizers and the
// finite-difference checker. Gradient structs expose blocks in the same order.

struct ParamView {
    std::vector<std::pair<double*, size_t>> blocks;

    size_t size() const {
        size_t n = 0;
        for (auto& [p, s] : blocks) n += s;
        return n;
    }
    double& at(size_t i) {
        for (auto& [p, s] : blocks) {
            if (i < s) return p[i];
            i -= s;
        }
        throw DataError("parameter index out of range");
    }
    void axpy(double alpha, const ParamView& other) {  // this += alpha * other
        for (size_t b = 0; b < blocks.size(); ++b)
            for (size_t i = 0; i < blocks[b].second; ++i)
                blocks[b].first[i] += alpha * other.blocks[b].first[i];
    }
};

inline ParamView params_of(LinearTagHead& h) {
    return {{{h.weights.data(), static_cast<size_t>(h.weights.size())}}};
}
inline ParamView params_of(TagGrad& g) {
    return {{{g.weights.data(), static_cast<size_t>(g.weights.size())}}};
}
inline ParamView params_of(BiaffineHead& h) {
    ParamView v;
    if (h.context) {
        BiRnn& r = *h.context;
        for (Eigen::MatrixXd* m : {&r.w_fwd, &r.u_fwd, &r.w_bwd, &r.u_bwd})
            v.blocks.push_back({m->data(), static_cast<size_t>(m->size())});
        for (Eigen::VectorXd* b : {&r.b_fwd, &r.b_bwd})
            v.blocks.push_back({b->data(), static_cast<size_t>(b->size())});
    }
    for (auto& w : h.weights) v.blocks.push_back({w.data(), static_cast<size_t>(w.size())});
    return v;
}
inline ParamView params_of(BiaffineGrad& g) {
    ParamView v;
    if (g.has_context) {
        BiRnnGrad& r = g.context;
        for (Eigen::MatrixXd* m : {&r.w_fwd, &r.u_fwd, &r.w_bwd, &r.u_bwd})
            v.blocks.push_back({m->data(), static_cast<size_t>(m->size())});
        for (Eigen::VectorXd* b : {&r.b_fwd, &r.b_bwd})
            v.blocks.push_back({b->data(), static_cast<size_t>(b->size())});
    }
    for (auto& w : g.weights) v.blocks.push_back({w.data(), static_cast<size_t>(w.size())});
    return v;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient verification (central differences).

namespace detail {

template <typename LossFn, typename GradFn>
double grad_check_impl(ParamView params, LossFn&& loss_fn, GradFn&& grad_fn, double eps,
                       int max_probes, uint64_t seed) {
    if (eps <= 0) throw ConfigError("grad_check epsilon must be > 0");
    const size_t n = params.size();
    if (n == 0) return 0.0;

    std::vector<double> analytic = grad_fn();
    if (analytic.size() != n) throw DataError("gradient size does not match parameter count");

    std::vector<size_t> probes(n);
    for (size_t i = 0; i < n; ++i) probes[i] = i;
    if (max_probes > 0 && static_cast<size_t>(max_probes) < n) {
        std::mt19937_64 rng(seed);
        std::shuffle(probes.begin(), probes.end(), rng);
        probes.resize(static_cast<size_t>(max_probes));
    }

    double worst = 0.0;
    for (size_t i : probes) {
        double& theta = params.at(i);
        const double orig = theta;
        theta = orig + eps;
        const double up = loss_fn();
        theta = orig - eps;
        const double down = loss_fn();
        theta = orig;
        const double numeric = (up - down) / (2.0 * eps);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-4});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

inline std::vector<double> flatten(ParamView v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (auto& [p, s] : v.blocks)
        for (size_t i = 0; i < s; ++i) out.push_back(p[i]);
    return out;
}

}  // namespace detail

inline double grad_check(LinearTagHead& head, const std::vector<Eigen::VectorXd>& items,
                         const std::vector<int>& gold, const std::vector<double>* class_weights,
                         double eps, int max_probes = -1, uint64_t seed = 0) {
    return detail::grad_check_impl(
        params_of(head), [&] { return tag_batch_loss(head, items, gold, class_weights); },
        [&] {
            TagGrad g = tag_batch_grad(head, items, gold, class_weights);
            return detail::flatten(params_of(g));
        },
        eps, max_probes, seed);
}

inline double grad_check(BiaffineHead& head, const std::vector<Eigen::VectorXd>& items,
                         const std::vector<int>& gold, const std::vector<double>* class_weights,
                         double eps, int max_probes = -1, uint64_t seed = 0) {
    return detail::grad_check_impl(
        params_of(head), [&] { return relation_batch_loss(head, items, gold, class_weights); },
        [&] {
            BiaffineGrad g = relation_batch_grad(head, items, gold, class_weights);
            return detail::flatten(params_of(g));
        },
        eps, max_probes, seed);
}

// ---------------------------------------------------------------------------
// Optimizer step with linear warmup.

class StepRule {
public:
    StepRule(const TrainConfig& cfg, long total_steps)
        : cfg_(cfg),
          warmup_steps_(static_cast<long>(std::ceil(cfg.warmup_fraction * static_cast<double>(total_steps)))) {}

    void apply(ParamView params, ParamView grads) {
        const double lr = current_lr();
        ++step_;
        if (cfg_.optimizer == Optimizer::Sgd) {
            params.axpy(-lr, grads);
            return;
        }
        // Adam
        const size_t n = params.size();
        if (m_.size() != static_cast<Eigen::Index>(n)) {
            m_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
            v_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        }
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        size_t idx = 0;
        for (size_t b = 0; b < grads.blocks.size(); ++b) {
            for (size_t i = 0; i < grads.blocks[b].second; ++i, ++idx) {
                const double g = grads.blocks[b].first[i];
                m_[static_cast<Eigen::Index>(idx)] = b1 * m_[static_cast<Eigen::Index>(idx)] + (1 - b1) * g;
                v_[static_cast<Eigen::Index>(idx)] = b2 * v_[static_cast<Eigen::Index>(idx)] + (1 - b2) * g * g;
                const double mh = m_[static_cast<Eigen::Index>(idx)] / (1 - std::pow(b1, static_cast<double>(step_)));
                const double vh = v_[static_cast<Eigen::Index>(idx)] / (1 - std::pow(b2, static_cast<double>(step_)));
                params.blocks[b].first[i] -= lr * mh / (std::sqrt(vh) + eps);
            }
        }
    }

    double current_lr() const {
        if (warmup_steps_ > 0 && step_ < warmup_steps_)
            return cfg_.learning_rate * static_cast<double>(step_ + 1) /
                   static_cast<double>(warmup_steps_);
        return cfg_.learning_rate;
    }

private:
    TrainConfig cfg_;
    long warmup_steps_ = 0;
    long step_ = 0;
    Eigen::VectorXd m_, v_;
};

// ---------------------------------------------------------------------------
// Datasets and trainers.

struct TagExample {
    std::vector<std::string> units;
    std::vector<int> gold;
};
struct TagDataset {
    std::vector<TagExample> examples;
    int classes = 0;
};

struct RelationExample {
    std::vector<std::string> units;
    std::vector<int> gold;  // N*N row-major class ids
};
struct RelationDataset {
    std::vector<RelationExample> examples;
    int classes = 0;
};

struct EvalMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

namespace detail {

struct F1Counter {
    long correct = 0, total = 0, tp = 0, fp = 0, fn = 0;

    void add(int pred, int gold) {
        ++total;
        if (pred == gold) ++correct;
        if (pred != 0 && pred == gold) ++tp;
        if (pred != 0 && pred != gold) ++fp;
        if (gold != 0 && pred != gold) ++fn;
    }
    EvalMetrics metrics() const {
        EvalMetrics m;
        m.accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
        m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(fn + tp);
        m.f1 = m.precision + m.recall == 0
                   ? 0.0
                   : 2 * m.precision * m.recall / (m.precision + m.recall);
        return m;
    }
};

inline void check_finite(double loss, const char* what, int epoch) {
    if (!std::isfinite(loss))
        throw TrainError(std::string(what) + ": non-finite loss at epoch " + std::to_string(epoch));
}

}  // namespace detail

// Mini-batch trainer for the linear tag head. Deterministic under the config
// seed; the provider is a fixed feature extractor, only the head trains.
class TagTrainer {
public:
    TagTrainer(LinearTagHead& head, const EmbeddingProvider& provider, TagDataset dataset,
               const TrainConfig& cfg)
        : head_(head), dataset_(std::move(dataset)), cfg_(cfg), rng_(cfg.seed),
          rule_(cfg, total_steps()) {
        cfg_.validate();
        for (const auto& ex : dataset_.examples) embedded_.push_back(provider.embed(ex.units));
        provider_ = &provider;
    }

    long total_steps() const {
        const long per_epoch = static_cast<long>(
            (dataset_.examples.size() + static_cast<size_t>(cfg_.batch_size) - 1) /
            static_cast<size_t>(cfg_.batch_size));
        return per_epoch * cfg_.epochs;
    }

    double run_epoch(int epoch_index) {
        std::vector<size_t> order(dataset_.examples.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng_);

        double epoch_loss = 0.0;
        long batches = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg_.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg_.batch_size));
            TagGrad acc{Eigen::MatrixXd::Zero(head_.weights.rows(), head_.weights.cols()), 0.0};
            const double inv_b = 1.0 / static_cast<double>(end - start);
            for (size_t k = start; k < end; ++k) {
                const auto& ex = dataset_.examples[order[k]];
                TagGrad g = tag_batch_grad(head_, embedded_[order[k]], ex.gold, weights());
                acc.weights += inv_b * g.weights;
                acc.loss += inv_b * g.loss;
            }
            detail::check_finite(acc.loss, "tag training", epoch_index);
            rule_.apply(params_of(head_), params_of(acc));
            epoch_loss += acc.loss;
            ++batches;
        }
        return batches == 0 ? 0.0 : epoch_loss / static_cast<double>(batches);
    }

    EvalMetrics evaluate(const TagDataset& dev) const {
        detail::F1Counter counter;
        for (const auto& ex : dev.examples) {
            const auto items = provider_->embed(ex.units);
            for (size_t i = 0; i < items.size(); ++i) {
                Eigen::Index pred;
                tag_forward(head_, items[i]).maxCoeff(&pred);
                counter.add(static_cast<int>(pred), ex.gold[i]);
            }
        }
        return counter.metrics();
    }

private:
    const std::vector<double>* weights() const {
        return cfg_.class_weights.empty() ? nullptr : &cfg_.class_weights;
    }

    LinearTagHead& head_;
    TagDataset dataset_;
    TrainConfig cfg_;
    std::mt19937_64 rng_;
    StepRule rule_;
    std::vector<std::vector<Eigen::VectorXd>> embedded_;
    const EmbeddingProvider* provider_ = nullptr;
};

class RelationTrainer {
public:
    RelationTrainer(BiaffineHead& head, const EmbeddingProvider& provider, RelationDataset dataset,
                    const TrainConfig& cfg)
        : head_(head), dataset_(std::move(dataset)), cfg_(cfg), rng_(cfg.seed),
          rule_(cfg, total_steps()) {
        cfg_.validate();
        for (const auto& ex : dataset_.examples) embedded_.push_back(provider.embed(ex.units));
        provider_ = &provider;
    }

    long total_steps() const {
        const long per_epoch = static_cast<long>(
            (dataset_.examples.size() + static_cast<size_t>(cfg_.batch_size) - 1) /
            static_cast<size_t>(cfg_.batch_size));
        return per_epoch * cfg_.epochs;
    }

    double run_epoch(int epoch_index) {
        std::vector<size_t> order(dataset_.examples.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng_);

        double epoch_loss = 0.0;
        long batches = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg_.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg_.batch_size));
            BiaffineGrad acc;
            bool first = true;
            const double inv_b = 1.0 / static_cast<double>(end - start);
            for (size_t k = start; k < end; ++k) {
                const auto& ex = dataset_.examples[order[k]];
                BiaffineGrad g = relation_batch_grad(head_, embedded_[order[k]], ex.gold, weights());
                if (first) {
                    acc = std::move(g);
                    ParamView v = params_of(acc);
                    for (auto& [p, s] : v.blocks)
                        for (size_t i = 0; i < s; ++i) p[i] *= inv_b;
                    acc.loss *= inv_b;
                    first = false;
                } else {
                    params_of(acc).axpy(inv_b, params_of(g));
                    acc.loss += inv_b * g.loss;
                }
            }
            if (first) continue;
            detail::check_finite(acc.loss, "relation training", epoch_index);
            rule_.apply(params_of(head_), params_of(acc));
            epoch_loss += acc.loss;
            ++batches;
        }
        return batches == 0 ? 0.0 : epoch_loss / static_cast<double>(batches);
    }

    EvalMetrics evaluate(const RelationDataset& dev) const {
        detail::F1Counter counter;
        for (const auto& ex : dev.examples) {
            const auto ctx = contextualize(head_, provider_->embed(ex.units));
            const size_t n = ctx.size();
            for (size_t i = 0; i < n; ++i) {
                for (size_t j = 0; j < n; ++j) {
                    Eigen::Index pred;
                    biaffine_forward(head_, ctx[i], ctx[j]).maxCoeff(&pred);
                    counter.add(static_cast<int>(pred), ex.gold[i * n + j]);
                }
            }
        }
        return counter.metrics();
    }

private:
    const std::vector<double>* weights() const {
        return cfg_.class_weights.empty() ? nullptr : &cfg_.class_weights;
    }

    BiaffineHead& head_;
    RelationDataset dataset_;
    TrainConfig cfg_;
    std::mt19937_64 rng_;
    StepRule rule_;
    std::vector<std::vector<Eigen::VectorXd>> embedded_;
    const EmbeddingProvider* provider_ = nullptr;
};

struct EpochStats {
    double train_loss = 0.0;
    EvalMetrics dev;
};
struct TrainResult {
    std::vector<EpochStats> curve;
    int best_epoch = -1;  // by dev F1 when dev given, else by train loss
};

template <typename Trainer, typename Dataset>
TrainResult run_training(Trainer& trainer, const Dataset* dev, int epochs) {
    TrainResult result;
    double best_key = -1e300;
    for (int e = 0; e < epochs; ++e) {
        EpochStats st;
        st.train_loss = trainer.run_epoch(e);
        if (dev) st.dev = trainer.evaluate(*dev);
        result.curve.push_back(st);
        const double key = dev ? st.dev.f1 : -st.train_loss;
        if (key > best_key) {
            best_key = key;
            result.best_epoch = e;
        }
    }
    return result;
}

inline TrainResult train(LinearTagHead& head, const EmbeddingProvider& provider,
                         const TagDataset& dataset, const TagDataset* dev, const TrainConfig& cfg) {
    if (dataset.examples.empty()) throw DataError("training dataset is empty");
    TagTrainer t(head, provider, dataset, cfg);
    return run_training(t, dev, cfg.epochs);
}

inline TrainResult train(BiaffineHead& head, const EmbeddingProvider& provider,
                         const RelationDataset& dataset, const RelationDataset* dev,
                         const TrainConfig& cfg) {
    if (dataset.examples.empty()) throw DataError("training dataset is empty");
    RelationTrainer t(head, provider, dataset, cfg);
    return run_training(t, dev, cfg.epochs);
}

// ---------------------------------------------------------------------------
// Checkpoints: versioned text container with shapes, seed, and a config
// echo. Values are hexfloats, so reruns are byte-identical.

namespace detail {

inline void write_matrix(std::ostream& os, const std::string& name, const Eigen::MatrixXd& m) {
    os << "matrix " << name << " " << m.rows() << " " << m.cols() << "\n";
    char buf[64];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%a", m(r, c));
            os << (c ? " " : "") << buf;
        }
        os << "\n";
    }
}

class CheckpointReader {
public:
    explicit CheckpointReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw DataError("cannot open " + path);
    }
    std::string line() {
        std::string l;
        if (!std::getline(in_, l)) throw DataError(path_ + ": truncated checkpoint");
        return l;
    }
    Eigen::MatrixXd matrix(const std::string& name) {
        auto header = str::split_ws(line());
        if (header.size() != 4 || header[0] != "matrix" || header[1] != name)
            throw DataError(path_ + ": expected matrix " + name);
        const long rows = std::stol(header[2]), cols = std::stol(header[3]);
        Eigen::MatrixXd m(rows, cols);
        for (long r = 0; r < rows; ++r) {
            auto vals = str::split_ws(line());
            if (static_cast<long>(vals.size()) != cols)
                throw DataError(path_ + ": malformed matrix row");
            for (long c = 0; c < cols; ++c) m(r, c) = std::strtod(vals[static_cast<size_t>(c)].c_str(), nullptr);
        }
        return m;
    }

private:
    std::ifstream in_;
    std::string path_;
};

}  // namespace detail

inline void save_checkpoint(const std::string& path, const LinearTagHead& head, uint64_t seed,
                            const std::string& config_echo) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path);
    os << "camr-ckpt v1\nkind tag\nseed " << seed << "\nconfig " << config_echo << "\n";
    os << "dims " << head.input_dim() << " " << head.classes() << " 0\n";
    detail::write_matrix(os, "W", head.weights);
}

inline void save_checkpoint(const std::string& path, const BiaffineHead& head, uint64_t seed,
                            const std::string& config_echo) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path);
    const int rnn_hidden = head.context ? head.context->hidden() : 0;
    os << "camr-ckpt v1\nkind biaffine\nseed " << seed << "\nconfig " << config_echo << "\n";
    os << "dims " << head.input_dim() << " " << head.classes() << " " << rnn_hidden << "\n";
    if (head.context) {
        const BiRnn& r = *head.context;
        detail::write_matrix(os, "w_fwd", r.w_fwd);
        detail::write_matrix(os, "u_fwd", r.u_fwd);
        detail::write_matrix(os, "w_bwd", r.w_bwd);
        detail::write_matrix(os, "u_bwd", r.u_bwd);
        detail::write_matrix(os, "b_fwd", r.b_fwd);
        detail::write_matrix(os, "b_bwd", r.b_bwd);
    }
    for (int k = 0; k < head.classes(); ++k)
        detail::write_matrix(os, "W" + std::to_string(k), head.weights[static_cast<size_t>(k)]);
}

struct CheckpointInfo {
    std::string kind;
    uint64_t seed = 0;
    std::string config_echo;
};

inline CheckpointInfo load_checkpoint(const std::string& path, LinearTagHead& head) {
    detail::CheckpointReader r(path);
    if (r.line() != "camr-ckpt v1") throw DataError(path + ": not a v1 checkpoint");
    CheckpointInfo info;
    info.kind = str::split_ws(r.line()).at(1);
    if (info.kind != "tag") throw DataError(path + ": expected a tag head checkpoint");
    info.seed = std::stoull(str::split_ws(r.line()).at(1));
    info.config_echo = r.line().substr(7);
    auto dims = str::split_ws(r.line());
    const int d = std::stoi(dims.at(1)), c = std::stoi(dims.at(2));
    head = LinearTagHead::zeros(d, c);
    head.weights = r.matrix("W");
    if (head.weights.rows() != d + 1 || head.weights.cols() != c)
        throw DataError(path + ": weight shape does not match dims");
    return info;
}

inline CheckpointInfo load_checkpoint(const std::string& path, BiaffineHead& head) {
    detail::CheckpointReader r(path);
    if (r.line() != "camr-ckpt v1") throw DataError(path + ": not a v1 checkpoint");
    CheckpointInfo info;
    info.kind = str::split_ws(r.line()).at(1);
    if (info.kind != "biaffine") throw DataError(path + ": expected a biaffine head checkpoint");
    info.seed = std::stoull(str::split_ws(r.line()).at(1));
    info.config_echo = r.line().substr(7);
    auto dims = str::split_ws(r.line());
    const int d = std::stoi(dims.at(1)), c = std::stoi(dims.at(2)), h = std::stoi(dims.at(3));
    head = BiaffineHead::zeros(d, c, h);
    if (head.context) {
        head.context->w_fwd = r.matrix("w_fwd");
        head.context->u_fwd = r.matrix("u_fwd");
        head.context->w_bwd = r.matrix("w_bwd");
        head.context->u_bwd = r.matrix("u_bwd");
        head.context->b_fwd = r.matrix("b_fwd");
        head.context->b_bwd = r.matrix("b_bwd");
    }
    for (int k = 0; k < c; ++k) head.weights[static_cast<size_t>(k)] = r.matrix("W" + std::to_string(k));
    return info;
}

}  // namespace camr
