#include "rolerag/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <semaphore>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace rolerag {
namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool contains_ci(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) return true;
    return lower(haystack).find(lower(needle)) != std::string::npos;
}

std::uint64_t approx_tokens(const std::string& text) {
    std::uint64_t n = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        bool ws = std::isspace(c) != 0;
        if (!ws && !in_word) ++n;
        in_word = !ws;
    }
    return n;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void check_request(const CompletionRequest& request) {
    if (request.prompt.empty()) throw InvalidInput("completion prompt must be non-empty");
    if (!std::isfinite(request.temperature))
        throw InvalidInput("completion temperature must be finite");
    if (request.max_output_tokens <= 0)
        throw InvalidInput("max_output_tokens must be positive");
}

}  // namespace

double EmbeddingVector::norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) throw InvalidInput("embedding dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
    return s;
}

std::uint64_t GatewayStats::total_completions() const {
    std::uint64_t n = 0;
    for (const auto& [tag, count] : calls_by_tag) n += count;
    return n;
}

MockGateway::MockGateway(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw ConfigError("embedding dim must be positive");
}

std::unique_ptr<MockGateway> MockGateway::from_rules_file(const std::string& path,
                                                          std::size_t default_dim) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock rules file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    std::size_t dim = j.value("dim", default_dim);
    std::uint64_t seed = j.value("seed", 0ULL);
    auto gw = std::make_unique<MockGateway>(dim, seed);
    for (const auto& r : j.value("completion_rules", nlohmann::json::array())) {
        gw->add_completion_rule({r.value("tag", std::string("*")),
                                 r.value("contains", std::string()),
                                 r.at("response").get<std::string>()});
    }
    for (const auto& r : j.value("vector_rules", nlohmann::json::array())) {
        gw->add_vector_rule({r.at("contains").get<std::string>(),
                             r.value("seed", 0ULL)});
    }
    return gw;
}

void MockGateway::add_completion_rule(MockCompletionRule rule) {
    completion_rules_.push_back(std::move(rule));
}

void MockGateway::add_vector_rule(MockVectorRule rule) {
    vector_rules_.push_back(std::move(rule));
}

void MockGateway::set_handler(Handler handler) { handler_ = std::move(handler); }

void MockGateway::register_vector(const std::string& exact_text, EmbeddingVector vec) {
    if (vec.dim() != dim_) throw ConfigError("registered vector dim mismatch");
    exact_vectors_[exact_text] = std::move(vec);
}

std::string MockGateway::complete(const CompletionRequest& request) {
    check_request(request);
    if (fail_next_ > 0) {
        --fail_next_;
        throw TransportError("scripted transport failure", 1);
    }
    last_temperature_ = request.temperature;

    std::string response;
    bool matched = false;
    if (handler_) {
        if (auto r = handler_(request)) {
            response = *r;
            matched = true;
        }
    }
    if (!matched) {
        for (const auto& rule : completion_rules_) {
            if (rule.tag != "*" && rule.tag != request.tag) continue;
            if (!contains_ci(request.prompt, rule.contains)) continue;
            response = rule.response;
            break;
        }
    }

    std::lock_guard<std::mutex> lock(mu_);
    ++stats_.calls_by_tag[request.tag];
    stats_.tokens_in += approx_tokens(request.prompt);
    stats_.tokens_out += approx_tokens(response);
    return response;
}

EmbeddingVector MockGateway::embed(const std::string& text) {
    if (text.empty()) throw InvalidInput("embed input must be non-empty");
    {
        std::lock_guard<std::mutex> lock(mu_);
        ++stats_.embed_calls;
    }
    if (auto it = exact_vectors_.find(text); it != exact_vectors_.end()) return it->second;
    for (const auto& rule : vector_rules_) {
        if (contains_ci(text, rule.contains)) return seeded_unit_vector(rule.seed);
    }
    return hash_embed(text);
}

GatewayStats MockGateway::snapshot_stats() const {
    std::lock_guard<std::mutex> lock(mu_);
    return stats_;
}

EmbeddingVector MockGateway::seeded_unit_vector(std::uint64_t seed) const {
    std::mt19937_64 rng(splitmix64(seed ^ seed_));
    std::normal_distribution<double> normal(0.0, 1.0);
    EmbeddingVector v;
    v.values.resize(dim_);
    for (auto& x : v.values) x = normal(rng);
    double n = v.norm();
    if (n == 0.0) {
        v.values[0] = 1.0;
        n = 1.0;
    }
    for (auto& x : v.values) x /= n;
    return v;
}

// Character trigrams hashed into dim buckets with signed contributions,
// then L2-normalized. Locality-free by design of the tests: fixtures that
// need semantic neighbors register explicit vectors.
EmbeddingVector MockGateway::hash_embed(const std::string& text) const {
    EmbeddingVector v;
    v.values.assign(dim_, 0.0);
    const std::size_t n = text.size();
    auto mix = [&](std::uint64_t h) {
        h = splitmix64(h ^ seed_);
        std::size_t bucket = static_cast<std::size_t>(h % dim_);
        double val = (splitmix64(h) % 2000003) / 1000001.0 - 1.0;
        v.values[bucket] += val;
    };
    if (n < 3) {
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : text) h = (h ^ c) * 1099511628211ULL;
        mix(h);
    } else {
        for (std::size_t i = 0; i + 3 <= n; ++i) {
            std::uint64_t h = 1469598103934665603ULL;
            for (std::size_t j = i; j < i + 3; ++j)
                h = (h ^ static_cast<unsigned char>(text[j])) * 1099511628211ULL;
            mix(h);
        }
    }
    double norm = v.norm();
    if (norm == 0.0) {
        v.values[0] = 1.0;
        norm = 1.0;
    }
    for (auto& x : v.values) x /= norm;
    return v;
}

struct HttpGateway::Impl {
    HttpGatewayConfig config;
    std::string api_key;
    std::counting_semaphore<64> in_flight;
    mutable std::mutex mu;
    GatewayStats stats;

    explicit Impl(HttpGatewayConfig cfg)
        : config(std::move(cfg)),
          in_flight(std::max(1, std::min(64, config.max_in_flight))) {
        if (config.base_url.empty()) throw ConfigError("chat endpoint URL not configured");
        if (const char* key = std::getenv(config.api_key_env.c_str())) api_key = key;
    }

    nlohmann::json post_json(const std::string& path, const nlohmann::json& body);
};

}  // namespace rolerag

#ifdef ROLERAG_HAS_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace rolerag {

nlohmann::json HttpGateway::Impl::post_json(const std::string& path,
                                            const nlohmann::json& body) {
    in_flight.acquire();
    struct Release {
        std::counting_semaphore<64>& sem;
        ~Release() { sem.release(); }
    } release{in_flight};

    std::string last_error;
    for (int attempt = 1; attempt <= config.max_retries; ++attempt) {
        httplib::Client client(config.base_url);
        client.set_connection_timeout(30);
        client.set_read_timeout(120);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            return nlohmann::json::parse(res->body);
        }
        last_error = res ? "http status " + std::to_string(res->status)
                         : "transport: " + httplib::to_string(res.error());
        if (res && res->status >= 400 && res->status < 500 && res->status != 429) {
            throw TransportError(last_error, attempt);  // not retriable
        }
        if (attempt < config.max_retries) {
            std::this_thread::sleep_for(std::chrono::milliseconds(250 << (attempt - 1)));
        }
    }
    throw TransportError(last_error, config.max_retries);
}

HttpGateway::HttpGateway(HttpGatewayConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpGateway::~HttpGateway() = default;

std::string HttpGateway::complete(const CompletionRequest& request) {
    check_request(request);
    nlohmann::json body = {
        {"model", impl_->config.chat_model},
        {"temperature", request.temperature},
        {"max_tokens", request.max_output_tokens},
        {"messages", {{{"role", "user"}, {"content", request.prompt}}}},
    };
    nlohmann::json reply = impl_->post_json("/v1/chat/completions", body);
    std::string text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    std::lock_guard<std::mutex> lock(impl_->mu);
    ++impl_->stats.calls_by_tag[request.tag];
    impl_->stats.tokens_in += approx_tokens(request.prompt);
    impl_->stats.tokens_out += approx_tokens(text);
    return text;
}

EmbeddingVector HttpGateway::embed(const std::string& text) {
    if (text.empty()) throw InvalidInput("embed input must be non-empty");
    nlohmann::json body = {{"model", impl_->config.embed_model}, {"input", text}};
    nlohmann::json reply = impl_->post_json("/v1/embeddings", body);
    EmbeddingVector v;
    for (const auto& x : reply.at("data").at(0).at("embedding")) {
        v.values.push_back(x.get<double>());
    }
    if (v.dim() != impl_->config.embedding_dim) {
        throw ConfigError("provider returned embedding of dim " + std::to_string(v.dim()) +
                          ", expected " + std::to_string(impl_->config.embedding_dim));
    }
    std::lock_guard<std::mutex> lock(impl_->mu);
    ++impl_->stats.embed_calls;
    return v;
}

std::size_t HttpGateway::embedding_dim() const { return impl_->config.embedding_dim; }

GatewayStats HttpGateway::snapshot_stats() const {
    std::lock_guard<std::mutex> lock(impl_->mu);
    return impl_->stats;
}

}  // namespace rolerag
