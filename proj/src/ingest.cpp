#include "rolerag/ingest.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace rolerag {

std::string to_string(SourceKind kind) {
    switch (kind) {
        case SourceKind::profile: return "profile";
        case SourceKind::book: return "book";
        default: return "other";
    }
}

SourceKind source_kind_from_string(const std::string& s) {
    if (s == "profile") return SourceKind::profile;
    if (s == "book") return SourceKind::book;
    if (s == "other") return SourceKind::other;
    throw InvalidInput("unknown source_kind: " + s);
}

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> tokens;
    const std::size_t n = text.size();
    std::size_t i = 0;
    auto is_word_byte = [](unsigned char c) {
        return std::isalnum(c) != 0 || c >= 0x80 || c == '_';
    };
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (is_word_byte(c)) {
            std::size_t begin = i;
            while (i < n && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
            tokens.push_back({text.substr(begin, i - begin), begin, i});
        } else {
            tokens.push_back({text.substr(i, 1), i, i + 1});
            ++i;
        }
    }
    return tokens;
}

std::size_t count_tokens(const std::string& text) { return tokenize(text).size(); }

std::vector<Chunk> chunk_document(const Document& doc, std::size_t chunk_size,
                                  std::size_t overlap) {
    if (chunk_size == 0 || overlap >= chunk_size) {
        throw ConfigError("overlap must satisfy 0 <= overlap < chunk_size");
    }
    std::vector<Token> tokens = tokenize(doc.text);
    std::vector<Chunk> chunks;
    const std::size_t n = tokens.size();
    if (n == 0) return chunks;

    const std::size_t stride = chunk_size - overlap;
    for (std::size_t idx = 0;; ++idx) {
        const std::size_t start = idx * stride;
        if (idx > 0 && start + overlap >= n) break;
        const std::size_t end = std::min(start + chunk_size, n);
        Chunk c;
        c.doc_id = doc.id;
        c.index = idx;
        c.id = doc.id + "#" + std::to_string(idx);
        c.token_begin = start;
        c.token_end = end;
        c.text = doc.text.substr(tokens[start].begin,
                                 tokens[end - 1].end - tokens[start].begin);
        chunks.push_back(std::move(c));
        if (end == n) break;
    }
    return chunks;
}

Corpus load_corpus(const std::string& dir) {
    fs::path manifest_path = fs::path(dir) / "corpus.json";
    std::ifstream in(manifest_path);
    if (!in) throw NotFound("corpus manifest not found: " + manifest_path.string());
    nlohmann::json j = nlohmann::json::parse(in);

    Corpus corpus;
    corpus.character = j.at("character").get<std::string>();
    for (const auto& f : j.at("files")) {
        fs::path path = fs::path(dir) / f.at("path").get<std::string>();
        std::ifstream file(path, std::ios::binary);
        if (!file) throw NotFound("corpus file not found: " + path.string());
        std::ostringstream buf;
        buf << file.rdbuf();
        Document doc;
        doc.id = f.at("path").get<std::string>();
        doc.character = corpus.character;
        doc.text = buf.str();
        doc.source_kind = source_kind_from_string(f.value("source_kind", std::string("other")));
        if (doc.text.empty()) throw InvalidInput("empty corpus file: " + path.string());
        corpus.documents.push_back(std::move(doc));
    }
    if (corpus.documents.empty()) throw InvalidInput("no documents in corpus: " + dir);
    return corpus;
}

}  // namespace rolerag
