#pragma once
// Corpus loading and token-stride chunking.

#include <cstddef>
#include <string>
#include <vector>

#include "rolerag/errors.hpp"

namespace rolerag {

enum class SourceKind { profile, book, other };

std::string to_string(SourceKind kind);
SourceKind source_kind_from_string(const std::string& s);

struct Document {
    std::string id;
    std::string character;
    std::string text;
    SourceKind source_kind = SourceKind::other;
};

struct Token {
    std::string text;
    std::size_t begin = 0;  // byte offsets into the source text
    std::size_t end = 0;
};

struct Chunk {
    std::string id;  // "docid#index"
    std::string doc_id;
    std::size_t index = 0;
    std::string text;
    std::size_t token_begin = 0;  // half-open token offsets
    std::size_t token_end = 0;
};

// Whitespace-plus-punctuation segmentation: maximal alnum runs (non-ASCII
// bytes count as word bytes) or single punctuation characters.
std::vector<Token> tokenize(const std::string& text);

std::size_t count_tokens(const std::string& text);

std::vector<Chunk> chunk_document(const Document& doc, std::size_t chunk_size,
                                  std::size_t overlap);

struct Corpus {
    std::string character;
    std::vector<Document> documents;
};

// Reads corpus.json {character, files: [{path, source_kind}]} from a directory.
Corpus load_corpus(const std::string& dir);

}  // namespace rolerag
