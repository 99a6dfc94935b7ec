#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "camr/common.hpp"
#include "camr/rnn.hpp"

namespace camr {

// Token-embedding seam of the two-stage pipeline. Implementations must obey
// first-character pooling: a multi-character unit is represented by the
// embedding of its first character, so embed("称为") == embed("称").
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual int dim() const = 0;
    virtual std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& units) const = 0;
};

namespace detail {

inline uint64_t fnv1a(const std::string& s, uint64_t seed) {
    uint64_t h = 1469598103934665603ull ^ seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

// Deterministic feature-hash embeddings of the unit's first character.
class HashedEmbedding : public EmbeddingProvider {
public:
    explicit HashedEmbedding(int dim = 32, uint64_t seed = 1, int probes = 8)
        : dim_(dim), seed_(seed), probes_(probes) {
        if (dim < 1) throw ConfigError("embedding dimension must be positive");
    }

    int dim() const override { return dim_; }

    Eigen::VectorXd embed_unit(const std::string& unit) const {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
        const std::string fc = utf8::first_char(unit);
        if (fc.empty()) return v;
        for (int k = 0; k < probes_; ++k) {
            const uint64_t h = detail::fnv1a(fc, seed_ + 0x9e3779b97f4a7c15ull * static_cast<uint64_t>(k));
            const auto idx = static_cast<Eigen::Index>(h % static_cast<uint64_t>(dim_));
            v[idx] += ((h >> 32) & 1) ? 1.0 : -1.0;
        }
        return v / std::sqrt(static_cast<double>(probes_));
    }

    std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& units) const override {
        std::vector<Eigen::VectorXd> out;
        out.reserve(units.size());
        for (const auto& u : units) out.push_back(embed_unit(u));
        return out;
    }

private:
    int dim_;
    uint64_t seed_;
    int probes_;
};

// Lookup table from a pretrained-vector file ("token dim1 dim2 ...").
// Entries are keyed by single characters; unknown characters fall back to
// hashed embeddings so the pipeline stays total.
class TableEmbedding : public EmbeddingProvider {
public:
    TableEmbedding(std::map<std::string, Eigen::VectorXd> table, int dim, uint64_t seed = 1)
        : table_(std::move(table)), dim_(dim), fallback_(dim, seed) {}

    static TableEmbedding from_file(const std::string& path, uint64_t seed = 1) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open " + path);
        std::map<std::string, Eigen::VectorXd> table;
        int dim = -1;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto fields = str::split_ws(str::trim(line));
            if (fields.empty()) continue;
            const int d = static_cast<int>(fields.size()) - 1;
            if (dim < 0) dim = d;
            if (d != dim || d == 0)
                throw DataError(path + ":" + std::to_string(lineno) + ": inconsistent vector size");
            Eigen::VectorXd v(d);
            for (int i = 0; i < d; ++i) {
                try {
                    v[i] = std::stod(fields[static_cast<size_t>(i) + 1]);
                } catch (...) {
                    throw DataError(path + ":" + std::to_string(lineno) + ": bad number");
                }
            }
            table[fields[0]] = std::move(v);
        }
        if (dim < 0) throw DataError(path + ": empty embedding table");
        return TableEmbedding(std::move(table), dim, seed);
    }

    int dim() const override { return dim_; }

    std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& units) const override {
        std::vector<Eigen::VectorXd> out;
        out.reserve(units.size());
        for (const auto& u : units) {
            auto it = table_.find(utf8::first_char(u));
            out.push_back(it != table_.end() ? it->second : fallback_.embed_unit(u));
        }
        return out;
    }

private:
    std::map<std::string, Eigen::VectorXd> table_;
    int dim_;
    HashedEmbedding fallback_;
};

// Fixed (seeded, untrained) bidirectional recurrent encoder over a base
// provider; output dimension is twice the hidden size.
class BiRnnProvider : public EmbeddingProvider {
public:
    BiRnnProvider(std::shared_ptr<const EmbeddingProvider> base, int hidden, uint64_t seed)
        : base_(std::move(base)), rnn_(BiRnn::random(base_->dim(), hidden, seed)) {}

    int dim() const override { return rnn_.output_dim(); }

    std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& units) const override {
        return birnn_forward(rnn_, base_->embed(units));
    }

private:
    std::shared_ptr<const EmbeddingProvider> base_;
    BiRnn rnn_;
};

}  // namespace camr
