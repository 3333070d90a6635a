#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "conflictforge/text.hpp"

namespace conflictforge {

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(const std::string& sentence) = 0;
    virtual size_t dim() const = 0;
};

/// Deterministic hashed bag-of-words embedder. Not a semantic model; it
/// provides a stable ranking contract for tests and offline runs.
class HashingEmbedder : public Embedder {
public:
    explicit HashingEmbedder(size_t dim = 64) : dim_(dim) {}

    std::vector<double> embed(const std::string& sentence) override {
        std::vector<double> v(dim_, 0.0);
        for (auto& tok : text::tokens(text::normalize(sentence))) {
            uint64_t h = fnv1a(tok);
            v[h % dim_] += (h >> 32 & 1) ? 1.0 : -1.0;
        }
        return v;
    }

    size_t dim() const override { return dim_; }

private:
    static uint64_t fnv1a(const std::string& s) {
        uint64_t h = 1469598103934665603ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    }

    size_t dim_;
};

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size() && i < b.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace conflictforge
