#include "rolerag/vector_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace rolerag {
namespace {

void check_finite(const EmbeddingVector& v) {
    for (double x : v.values) {
        if (!std::isfinite(x)) throw InvalidInput("embedding contains non-finite value");
    }
}

}  // namespace

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) throw InvalidInput("cosine: dimension mismatch");
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw InvalidInput("cosine: zero vector");
    return dot(a, b) / (na * nb);
}

VectorIndex::VectorIndex(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw InvalidInput("index dim must be positive");
}

bool VectorIndex::contains(const std::string& key) const {
    return index_of_.count(key) != 0;
}

void VectorIndex::insert(const std::string& key, const EmbeddingVector& vector) {
    if (vector.dim() != dim_) {
        throw InvalidInput("insert: vector dim " + std::to_string(vector.dim()) +
                           " != index dim " + std::to_string(dim_));
    }
    if (contains(key)) throw Conflict("insert: duplicate key " + key);
    check_finite(vector);
    const double norm = vector.norm();
    if (norm == 0.0) throw InvalidInput("insert: zero vector for key " + key);
    index_of_[key] = keys_.size();
    keys_.push_back(key);
    vectors_.push_back(vector);
    norms_.push_back(norm);
}

const EmbeddingVector& VectorIndex::vector_of(const std::string& key) const {
    auto it = index_of_.find(key);
    if (it == index_of_.end()) throw NotFound("no vector for key " + key);
    return vectors_[it->second];
}

std::vector<double> VectorIndex::score_serial(const EmbeddingVector& query) const {
    const double qn = query.norm();
    std::vector<double> sims(keys_.size());
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        double s = 0.0;
        const double* a = query.values.data();
        const double* b = vectors_[i].values.data();
        for (std::size_t d = 0; d < dim_; ++d) s += a[d] * b[d];
        sims[i] = s / (qn * norms_[i]);
    }
    return sims;
}

std::vector<double> VectorIndex::score_parallel(const EmbeddingVector& query) const {
    const double qn = query.norm();
    std::vector<double> sims(keys_.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(keys_.size());
#pragma omp parallel for schedule(static) if (n > 256)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double s = 0.0;
        const double* a = query.values.data();
        const double* b = vectors_[i].values.data();
        for (std::size_t d = 0; d < dim_; ++d) s += a[d] * b[d];
        sims[i] = s / (qn * norms_[i]);
    }
    return sims;
}

std::vector<SearchHit> VectorIndex::select_top(std::vector<double> sims, std::size_t k) const {
    std::vector<std::size_t> order(sims.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t take = std::min(k, order.size());
    auto better = [&](std::size_t a, std::size_t b) {
        if (sims[a] != sims[b]) return sims[a] > sims[b];
        return keys_[a] < keys_[b];
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                      order.end(), better);
    std::vector<SearchHit> hits;
    hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        hits.push_back({keys_[order[i]], sims[order[i]]});
    }
    return hits;
}

std::vector<SearchHit> VectorIndex::top_k(const EmbeddingVector& query, std::size_t k) const {
    if (k == 0) throw InvalidInput("top_k: k must be >= 1");
    if (empty()) return {};
    if (query.dim() != dim_) throw InvalidInput("top_k: query dim mismatch");
    if (query.norm() == 0.0) throw InvalidInput("top_k: zero query vector");
    return select_top(score_parallel(query), k);
}

std::vector<SearchHit> VectorIndex::top_k_serial(const EmbeddingVector& query,
                                                 std::size_t k) const {
    if (k == 0) throw InvalidInput("top_k: k must be >= 1");
    if (empty()) return {};
    if (query.dim() != dim_) throw InvalidInput("top_k: query dim mismatch");
    if (query.norm() == 0.0) throw InvalidInput("top_k: zero query vector");
    return select_top(score_serial(query), k);
}

void VectorIndex::save_jsonl(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        nlohmann::ordered_json j = {{"key", keys_[i]},
                                    {"dim", dim_},
                                    {"values", vectors_[i].values}};
        out << j.dump() << "\n";
    }
}

VectorIndex VectorIndex::load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open " + path);
    std::string line;
    VectorIndex index(1);
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        if (first) {
            index = VectorIndex(j.at("dim").get<std::size_t>());
            first = false;
        }
        EmbeddingVector v;
        v.values = j.at("values").get<std::vector<double>>();
        index.insert(j.at("key").get<std::string>(), v);
    }
    return index;
}

}  // namespace rolerag
