#pragma once
// Uniform chat-completion / text-embedding interface with a deterministic
// scripted mock so the whole pipeline is testable offline.

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rolerag/errors.hpp"

namespace rolerag {

struct CompletionRequest {
    std::string prompt;
    double temperature = 0.0;
    int max_output_tokens = 2048;
    std::string tag;  // extraction | normalization | summarize | hypothesize | analyze | generate | judge | ...
};

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    double norm() const;
};

double dot(const EmbeddingVector& a, const EmbeddingVector& b);

struct GatewayStats {
    std::map<std::string, std::uint64_t> calls_by_tag;
    std::uint64_t embed_calls = 0;
    std::uint64_t tokens_in = 0;
    std::uint64_t tokens_out = 0;

    std::uint64_t total_completions() const;
};

class Gateway {
public:
    virtual ~Gateway() = default;

    virtual std::string complete(const CompletionRequest& request) = 0;
    virtual EmbeddingVector embed(const std::string& text) = 0;
    virtual std::size_t embedding_dim() const = 0;
    virtual GatewayStats snapshot_stats() const = 0;
};

// One scripted completion rule: first rule whose tag matches (exact or "*")
// and whose pattern is a case-insensitive substring of the prompt wins.
struct MockCompletionRule {
    std::string tag;
    std::string contains;
    std::string response;
};

// Scripted embedding rule: texts containing the pattern all map to the same
// seeded unit vector, so tests can place entities as mutual neighbors.
struct MockVectorRule {
    std::string contains;
    std::uint64_t seed = 0;
};

class MockGateway final : public Gateway {
public:
    MockGateway(std::size_t dim, std::uint64_t seed);

    // Loads {seed, dim, completion_rules, vector_rules} from a JSON rules file.
    static std::unique_ptr<MockGateway> from_rules_file(const std::string& path,
                                                        std::size_t default_dim);

    std::string complete(const CompletionRequest& request) override;
    EmbeddingVector embed(const std::string& text) override;
    std::size_t embedding_dim() const override { return dim_; }
    GatewayStats snapshot_stats() const override;

    void add_completion_rule(MockCompletionRule rule);
    void add_vector_rule(MockVectorRule rule);
    // Programmatic hook checked before file rules; return nullopt to fall through.
    using Handler = std::function<std::optional<std::string>(const CompletionRequest&)>;
    void set_handler(Handler handler);
    void register_vector(const std::string& exact_text, EmbeddingVector vec);
    // Makes the next n completions throw, for retry-path tests.
    void fail_next(int n) { fail_next_ = n; }

    double last_temperature() const { return last_temperature_; }

private:
    std::size_t dim_;
    std::uint64_t seed_;
    std::vector<MockCompletionRule> completion_rules_;
    std::vector<MockVectorRule> vector_rules_;
    std::map<std::string, EmbeddingVector> exact_vectors_;
    Handler handler_;
    std::atomic<int> fail_next_{0};
    std::atomic<double> last_temperature_{0.0};

    mutable std::mutex mu_;
    GatewayStats stats_;

    EmbeddingVector hash_embed(const std::string& text) const;
    EmbeddingVector seeded_unit_vector(std::uint64_t seed) const;
};

struct HttpGatewayConfig {
    std::string base_url;          // e.g. https://api.example.com
    std::string chat_model;
    std::string embed_model;
    std::string api_key_env = "ROLERAG_API_KEY";
    std::size_t embedding_dim = 3072;
    int max_retries = 3;
    int max_in_flight = 4;
};

// OpenAI-style /v1/chat/completions and /v1/embeddings client with
// exponential backoff; transport failures become TransportError after
// the configured retries.
class HttpGateway final : public Gateway {
public:
    explicit HttpGateway(HttpGatewayConfig config);
    ~HttpGateway() override;

    std::string complete(const CompletionRequest& request) override;
    EmbeddingVector embed(const std::string& text) override;
    std::size_t embedding_dim() const override;
    GatewayStats snapshot_stats() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace rolerag
