#pragma once

#include <string>
#include <vector>

namespace qgen::text {

// A token with [start, end) character offsets into the original string.
// `text` is lowercased for model consumption; `raw` preserves the original
// casing so taggers can look at it before lower-casing.
struct Token {
  std::string text;
  std::string raw;
  int start = 0;
  int end = 0;
};

// Lowercase, split on whitespace and punctuation (punctuation marks become
// single-char tokens), keep digit runs intact. Offsets always map back into
// the original string. Empty input gives an empty sequence.
std::vector<Token> tokenize(const std::string& s);

std::vector<std::string> token_texts(const std::vector<Token>& toks);

// Maps a character span onto the smallest covering token span (inclusive
// indices). Spans that cross token boundaries are snapped outward and
// `snapped` is set. Returns false if the char span touches no token.
bool char_span_to_token_span(const std::vector<Token>& toks, int char_start, int char_end,
                             int* tok_start, int* tok_end, bool* snapped);

std::string join_tokens(const std::vector<std::string>& toks);

}  // namespace qgen::text
