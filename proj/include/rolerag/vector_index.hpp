#pragma once
// Exact top-k cosine-similarity store. The scoring scan is the hot loop:
// an OpenMP-parallel kernel is the default, with a serial reference kept
// for testing and benchmarking.

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rolerag/gateway.hpp"

namespace rolerag {

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct SearchHit {
    std::string key;
    double similarity = 0.0;
};

class VectorIndex {
public:
    explicit VectorIndex(std::size_t dim);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return keys_.size(); }
    bool empty() const { return keys_.empty(); }
    bool contains(const std::string& key) const;

    void insert(const std::string& key, const EmbeddingVector& vector);

    // Descending similarity, ties broken by ascending key. Exactly
    // min(k, size) results.
    std::vector<SearchHit> top_k(const EmbeddingVector& query, std::size_t k) const;
    // Serial reference implementation, identical contract.
    std::vector<SearchHit> top_k_serial(const EmbeddingVector& query, std::size_t k) const;

    const EmbeddingVector& vector_of(const std::string& key) const;
    const std::vector<std::string>& keys() const { return keys_; }

    void save_jsonl(const std::string& path) const;
    static VectorIndex load_jsonl(const std::string& path);

private:
    std::size_t dim_;
    std::vector<std::string> keys_;
    std::vector<EmbeddingVector> vectors_;
    std::vector<double> norms_;
    std::map<std::string, std::size_t> index_of_;

    std::vector<double> score_parallel(const EmbeddingVector& query) const;
    std::vector<double> score_serial(const EmbeddingVector& query) const;
    std::vector<SearchHit> select_top(std::vector<double> sims, std::size_t k) const;
};

}  // namespace rolerag
