#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <optional>
#include <set>

#include "rolerag/ingest.hpp"
#include "rolerag/retrieval.hpp"
#include "test_support.hpp"

using namespace rolerag;

namespace {

const char* kHypTemplate = "As {character}, imagine: {question}\nPassage:";
const char* kAnalyzeTemplate =
    "Profile:\n{profile}\nQuestion: {question}\nHypothetical: {hypothetical}\n"
    "List entities for {character}:";

EntityRecord entity(std::string name, std::string desc, std::string type = "character") {
    EntityRecord e;
    e.name = std::move(name);
    e.description = std::move(desc);
    e.entity_type = std::move(type);
    return e;
}

RelationRecord relation(std::string src, std::string dst, std::string desc, double strength) {
    RelationRecord r;
    r.source = std::move(src);
    r.target = std::move(dst);
    r.description = std::move(desc);
    r.strength = strength;
    return r;
}

// Shared scenario: HARRY (owner) with three neighbors of distinct types.
struct Scenario {
    MockGateway gw{4, 11};
    NameMapping mapping;
    KnowledgeGraph graph;
    VectorIndex index{4};

    Scenario() {
        for (const char* n : {"HARRY", "RON", "HEDWIG", "HOGWARTS"}) {
            mapping.canonical[n] = n;
            mapping.components.push_back({n});
        }
        EntityStore entities = {entity("HARRY", "the boy who lived"),
                                entity("RON", "loyal friend"),
                                entity("HEDWIG", "snowy owl", "creature"),
                                entity("HOGWARTS", "school of magic", "location")};
        RelationStore relations = {relation("HARRY", "RON", "best friends", 9),
                                   relation("HARRY", "HOGWARTS", "studies at", 8),
                                   relation("HARRY", "HEDWIG", "owl companion", 7)};
        GraphBuilder builder(gw, "Summarize {subject}: {descriptions}");
        graph = builder.build(entities, relations, mapping, "HARRY");

        index.insert("HARRY", {{1.0, 0.0, 0.0, 0.0}});
        index.insert("RON", {{0.0, 1.0, 0.0, 0.0}});
        index.insert("HEDWIG", {{0.0, 0.0, 1.0, 0.0}});
        index.insert("HOGWARTS", {{0.0, 0.0, 0.0, 1.0}});
    }

    Retriever make_retriever(RetrieverConfig cfg = {}) {
        return Retriever(gw, graph, index, mapping, kHypTemplate, kAnalyzeTemplate, cfg);
    }

    QueryAnalysis analysis_with(std::vector<EntityMention> mentions) {
        QueryAnalysis a;
        a.query = "q";
        a.character = "HARRY";
        a.mentions = std::move(mentions);
        return a;
    }
};

EntityMention mention(std::string name, std::string type, bool relevant, Specificity spec,
                      std::string rationale = "because") {
    EntityMention m;
    m.name = std::move(name);
    m.entity_type = std::move(type);
    m.relevant = relevant;
    m.specificity = spec;
    m.rationale = std::move(rationale);
    return m;
}

}  // namespace

TEST_CASE("mention records parse with relevance and specificity") {
    std::size_t skipped = 0;
    auto mentions = parse_mentions(
        "(character<|>Joseph Haydn<|>teacher of the speaker<|>Yes<|>specific)\n"
        "(event<|>Moon landing<|>occurred after his death<|>No<|>specific)\n"
        "(topic<|>hobbies<|>general interests<|>Yes<|>general)",
        &skipped);
    REQUIRE(mentions.size() == 3);
    CHECK(skipped == 0);
    CHECK(mentions[0].name == "Joseph Haydn");
    CHECK(mentions[0].relevant);
    CHECK(mentions[0].specificity == Specificity::specific);
    CHECK(!mentions[1].relevant);
    CHECK(mentions[2].specificity == Specificity::general);
    CHECK(mentions[2].entity_type == "topic");
}

TEST_CASE("malformed mention records are skipped and counted") {
    std::size_t skipped = 0;
    auto mentions = parse_mentions(
        "(character<|>A<|>r<|>Yes<|>specific)\n"
        "(character<|>B<|>r<|>maybe<|>specific)\n"      // bad relevance
        "(character<|>C<|>r<|>Yes<|>kind of specific)\n"  // bad specificity
        "(character<|>D<|>r)\n"                            // too few fields
        "not a record at all",
        &skipped);
    REQUIRE(mentions.size() == 1);
    CHECK(mentions[0].name == "A");
    CHECK(skipped == 4);
}

TEST_CASE("irrelevant mentions produce rejections and zero lookups") {
    Scenario s;
    Retriever r = s.make_retriever();
    auto ctx = r.retrieve(s.analysis_with(
        {mention("Moon landing", "event", false, Specificity::specific,
                 "happened centuries later")}));
    REQUIRE(ctx.rejections.size() == 1);
    CHECK(ctx.rejections[0].first == "Moon landing");
    CHECK(ctx.rejections[0].second == "happened centuries later");
    CHECK(ctx.entity_facts.empty());
    CHECK(ctx.neighborhood_facts.empty());
    CHECK(r.trace().vector_lookups == 0);
    CHECK(r.trace().graph_lookups == 0);
    CHECK(s.gw.snapshot_stats().embed_calls == 0);
}

TEST_CASE("specific mentions resolve through the name mapping without embeddings") {
    Scenario s;
    Retriever r = s.make_retriever();
    auto ctx = r.retrieve(s.analysis_with(
        {mention("ron", "character", true, Specificity::specific)}));
    REQUIRE(ctx.entity_facts.size() == 1);
    CHECK(ctx.entity_facts[0].key == "RON");
    CHECK(ctx.entity_facts[0].node_text.find("RON,CHARACTER") == 0);
    REQUIRE(ctx.entity_facts[0].relation_texts.size() == 1);
    CHECK(ctx.entity_facts[0].relation_texts[0].find("best friends") != std::string::npos);
    CHECK(r.trace().vector_lookups == 0);
    CHECK(r.trace().graph_lookups == 1);
    CHECK(s.gw.snapshot_stats().embed_calls == 0);
}

TEST_CASE("unmapped specific mentions fall back to vector search") {
    Scenario s;
    s.gw.register_vector("Ronald Weasley my best friend", {{0.0, 1.0, 0.0, 0.0}});
    Retriever r = s.make_retriever();
    auto ctx = r.retrieve(s.analysis_with(
        {mention("Ronald Weasley", "character", true, Specificity::specific,
                 "my best friend")}));
    REQUIRE(ctx.entity_facts.size() == 1);
    CHECK(ctx.entity_facts[0].key == "RON");
    CHECK(r.trace().vector_lookups == 1);
    CHECK(s.gw.snapshot_stats().embed_calls == 1);
}

TEST_CASE("vector fallback respects the similarity floor") {
    Scenario s;
    // Orthogonal to everything in the index: no hit survives the floor.
    s.gw.register_vector("Nobody Similar unknown figure", {{0.5, 0.5, 0.5, 0.5}});
    RetrieverConfig cfg;
    cfg.similarity_floor = 0.9;
    Retriever r = s.make_retriever(cfg);
    auto ctx = r.retrieve(s.analysis_with(
        {mention("Nobody Similar", "character", true, Specificity::specific,
                 "unknown figure")}));
    CHECK(ctx.entity_facts.empty());
    CHECK(r.trace().vector_lookups == 1);
}

TEST_CASE("duplicate resolutions produce one fact") {
    Scenario s;
    Retriever r = s.make_retriever();
    auto ctx = r.retrieve(s.analysis_with(
        {mention("RON", "character", true, Specificity::specific),
         mention("Ron", "character", true, Specificity::specific)}));
    CHECK(ctx.entity_facts.size() == 1);
}

TEST_CASE("general mentions pull the typed one-hop neighborhood") {
    Scenario s;
    Retriever r = s.make_retriever();
    auto ctx = r.retrieve(s.analysis_with(
        {mention("pets", "creature", true, Specificity::general)}));
    // Only one creature neighbor: fewer than 2 typed matches widens to all.
    REQUIRE(ctx.neighborhood_facts.size() == 3);
    CHECK(ctx.neighborhood_facts[0].find("RON") == 0);       // strength 9 first
    CHECK(ctx.neighborhood_facts[1].find("HOGWARTS") == 0);  // 8
    CHECK(ctx.neighborhood_facts[2].find("HEDWIG") == 0);    // 7
    CHECK(r.trace().graph_lookups == 1);
    CHECK(r.trace().vector_lookups == 0);
}

TEST_CASE("budget pressure drops the weakest facts first") {
    Scenario s;
    RetrieverConfig cfg;
    cfg.profile_relations = 0;
    Retriever full(s.gw, s.graph, s.index, s.mapping, kHypTemplate, kAnalyzeTemplate, cfg);
    auto both = full.retrieve(s.analysis_with(
        {mention("RON", "character", true, Specificity::specific),
         mention("HEDWIG", "creature", true, Specificity::specific)}));
    REQUIRE(both.entity_facts.size() == 2);
    std::size_t full_tokens = count_tokens(render_context(both));

    cfg.token_budget = full_tokens - 1;
    Retriever tight(s.gw, s.graph, s.index, s.mapping, kHypTemplate, kAnalyzeTemplate, cfg);
    auto trimmed = tight.retrieve(s.analysis_with(
        {mention("RON", "character", true, Specificity::specific),
         mention("HEDWIG", "creature", true, Specificity::specific)}));
    REQUIRE(trimmed.entity_facts.size() == 1);
    CHECK(trimmed.entity_facts[0].key == "RON");  // strength 9 outlives 7
    CHECK(count_tokens(render_context(trimmed)) <= cfg.token_budget);
    CHECK(trimmed.token_budget_used <= cfg.token_budget);
}

TEST_CASE("rendered context carries the section headers in order") {
    Scenario s;
    Retriever r = s.make_retriever();
    auto ctx = r.retrieve(s.analysis_with(
        {mention("RON", "character", true, Specificity::specific),
         mention("Moon landing", "event", false, Specificity::specific, "too late")}));
    std::string text = render_context(ctx);
    std::size_t p0 = text.find("---- Character Profile-----");
    std::size_t p1 = text.find("---- Out-of-scope Entities-----");
    std::size_t p2 = text.find("---- Entity Information-----");
    std::size_t p3 = text.find("---- Relation Information-----");
    REQUIRE(p0 != std::string::npos);
    REQUIRE(p1 != std::string::npos);
    REQUIRE(p2 != std::string::npos);
    REQUIRE(p3 != std::string::npos);
    CHECK(p0 < p1);
    CHECK(p1 < p2);
    CHECK(p2 < p3);
    CHECK(text.find("Moon landing: too late") != std::string::npos);
    CHECK(text.find("RON,CHARACTER,\"loyal friend\"") != std::string::npos);
}

TEST_CASE("hypothesize truncates to the token cap and degrades on failure") {
    Scenario s;
    std::string longtext;
    for (int i = 0; i < 300; ++i) longtext += "w" + std::to_string(i) + " ";
    s.gw.add_completion_rule({"hypothesize", "", longtext});
    RetrieverConfig cfg;
    cfg.hypothesis_max_tokens = 50;
    Retriever r = s.make_retriever(cfg);
    std::string hyp = r.hypothesize("a question", "HARRY");
    CHECK(count_tokens(hyp) <= 50);
    CHECK(!hyp.empty());

    s.gw.fail_next(1);
    CHECK(r.hypothesize("a question", "HARRY") == "");
}

TEST_CASE("analyze reprompts once when output is unparseable") {
    Scenario s;
    int calls = 0;
    s.gw.set_handler([&](const CompletionRequest& req) -> std::optional<std::string> {
        if (req.tag != "analyze") return std::nullopt;
        ++calls;
        if (calls == 1) return std::string("free-form chatter, no records");
        return std::string("(character<|>RON<|>friend<|>Yes<|>specific)");
    });
    Retriever r = s.make_retriever();
    QueryAnalysis a = r.analyze_query("who is your friend?", "", "profile", "HARRY");
    CHECK(calls == 2);
    REQUIRE(a.mentions.size() == 1);
    CHECK(a.mentions[0].name == "RON");
    CHECK(r.trace().unparseable_mentions == 1);
}

TEST_CASE("full run chains hypothesize, analyze, and retrieval") {
    Scenario s;
    s.gw.add_completion_rule({"hypothesize", "", "Ron is my best friend."});
    s.gw.add_completion_rule(
        {"analyze", "", "(character<|>Ron<|>closest friend<|>Yes<|>specific)"});
    Retriever r = s.make_retriever();
    auto ctx = r.run("who is your best friend?");
    REQUIRE(ctx.entity_facts.size() == 1);
    CHECK(ctx.entity_facts[0].key == "RON");
    CHECK(!ctx.profile.empty());
    auto stats = s.gw.snapshot_stats();
    CHECK(stats.calls_by_tag["hypothesize"] == 1);
    CHECK(stats.calls_by_tag["analyze"] == 1);
}
