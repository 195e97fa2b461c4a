#include "qgen/text/tokenizer.hpp"

#include <cctype>

namespace qgen::text {

namespace {
bool is_word_char(unsigned char c) {
  // Multi-byte UTF-8 continuation/lead bytes stay inside tokens.
  return std::isalnum(c) || c == '\'' || c >= 0x80;
}

std::string lower_ascii(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}
}  // namespace

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  const int n = static_cast<int>(s.size());
  int i = 0;
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(s[static_cast<size_t>(i)]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (is_word_char(c)) {
      int j = i;
      while (j < n && is_word_char(static_cast<unsigned char>(s[static_cast<size_t>(j)]))) ++j;
      std::string raw = s.substr(static_cast<size_t>(i), static_cast<size_t>(j - i));
      out.push_back({lower_ascii(raw), raw, i, j});
      i = j;
    } else {
      std::string raw = s.substr(static_cast<size_t>(i), 1);
      out.push_back({lower_ascii(raw), raw, i, i + 1});
      ++i;
    }
  }
  return out;
}

std::vector<std::string> token_texts(const std::vector<Token>& toks) {
  std::vector<std::string> out;
  out.reserve(toks.size());
  for (const Token& t : toks) out.push_back(t.text);
  return out;
}

bool char_span_to_token_span(const std::vector<Token>& toks, int char_start, int char_end,
                             int* tok_start, int* tok_end, bool* snapped) {
  int first = -1, last = -1;
  for (int t = 0; t < static_cast<int>(toks.size()); ++t) {
    const Token& tok = toks[static_cast<size_t>(t)];
    if (tok.end <= char_start || tok.start >= char_end) continue;
    if (first < 0) first = t;
    last = t;
  }
  if (first < 0) return false;
  *tok_start = first;
  *tok_end = last;
  *snapped = toks[static_cast<size_t>(first)].start != char_start ||
             toks[static_cast<size_t>(last)].end != char_end;
  return true;
}

std::string join_tokens(const std::vector<std::string>& toks) {
  std::string out;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  return out;
}

}  // namespace qgen::text
