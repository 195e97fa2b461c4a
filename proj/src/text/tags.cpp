#include "qgen/text/tags.hpp"

#include <algorithm>
#include <cctype>

#include "qgen/common.hpp"

namespace qgen::text {

std::vector<int> bio_tag(int num_tokens, int span_start, int span_end) {
  if (span_start < 0 || span_end < span_start || span_end >= num_tokens)
    throw DataError("bio_tag: span out of range");
  std::vector<int> out(static_cast<size_t>(num_tokens), tags::kBioO);
  out[static_cast<size_t>(span_start)] = tags::kBioB;
  for (int i = span_start + 1; i <= span_end; ++i) out[static_cast<size_t>(i)] = tags::kBioI;
  return out;
}

bool is_year_token(const std::string& tok) {
  if (tok.size() != 4) return false;
  for (char c : tok)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return tok[0] == '1' || tok[0] == '2';
}

namespace {
bool all_digits(const std::string& tok) {
  if (tok.empty()) return false;
  for (char c : tok)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

bool is_punct_token(const std::string& tok) {
  return tok.size() == 1 && std::ispunct(static_cast<unsigned char>(tok[0]));
}
}  // namespace

RuleTagger::RuleTagger() {
  determiners_ = {"the", "a", "an"};
  adpositions_ = {"in", "to", "of", "at", "from", "by", "on", "with", "for", "as"};
  verbs_ = {"was",   "were",   "is",      "are",   "did",   "born", "moved",
            "lived", "worked", "studied", "wrote", "found", "founded", "met",
            "became", "began", "offer", "offered", "make", "makes", "do", "does"};
  wh_words_ = {"who", "what", "when", "where", "which", "why", "how", "whom", "whose"};
  pronouns_ = {"he", "she", "it", "they", "him", "her", "them", "his", "its", "their"};
}

void RuleTagger::add_entity(const std::string& phrase, const std::string& ner_tag) {
  std::vector<Token> toks = tokenize(phrase);
  if (toks.empty()) throw DataError("tagger: empty entity phrase");
  int ner = tags::ner_id(ner_tag);
  std::vector<std::string> rest;
  for (size_t i = 1; i < toks.size(); ++i) rest.push_back(toks[i].text);
  auto& bucket = entities_[toks[0].text];
  bucket.emplace_back(std::move(rest), ner);
  std::sort(bucket.begin(), bucket.end(),
            [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
}

void RuleTagger::tag(const std::vector<Token>& toks, std::vector<int>* pos_out,
                     std::vector<int>* ner_out) const {
  const int n = static_cast<int>(toks.size());
  pos_out->assign(static_cast<size_t>(n), tags::pos_id("X"));
  ner_out->assign(static_cast<size_t>(n), tags::ner_id("O"));

  // Entity pass first: greedy longest match.
  for (int i = 0; i < n;) {
    auto it = entities_.find(toks[static_cast<size_t>(i)].text);
    bool matched = false;
    if (it != entities_.end()) {
      for (const auto& [rest, ner] : it->second) {
        const int len = 1 + static_cast<int>(rest.size());
        if (i + len > n) continue;
        bool ok = true;
        for (size_t k = 0; k < rest.size(); ++k)
          if (toks[static_cast<size_t>(i + 1 + static_cast<int>(k))].text != rest[k]) {
            ok = false;
            break;
          }
        if (!ok) continue;
        for (int k = 0; k < len; ++k) {
          (*ner_out)[static_cast<size_t>(i + k)] = ner;
          (*pos_out)[static_cast<size_t>(i + k)] = tags::pos_id("PROPN");
        }
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }

  for (int i = 0; i < n; ++i) {
    if ((*ner_out)[static_cast<size_t>(i)] != tags::ner_id("O")) continue;
    const std::string& t = toks[static_cast<size_t>(i)].text;
    const std::string& raw = toks[static_cast<size_t>(i)].raw;
    int pos;
    int ner = tags::ner_id("O");
    if (is_year_token(t)) {
      pos = tags::pos_id("NUM");
      ner = tags::ner_id("DATE");
    } else if (all_digits(t)) {
      pos = tags::pos_id("NUM");
    } else if (is_punct_token(t)) {
      pos = tags::pos_id("PUNCT");
    } else if (wh_words_.count(t)) {
      pos = tags::pos_id("WH");
    } else if (determiners_.count(t)) {
      pos = tags::pos_id("DET");
    } else if (adpositions_.count(t)) {
      pos = tags::pos_id("ADP");
    } else if (pronouns_.count(t)) {
      pos = tags::pos_id("PRON");
    } else if (verbs_.count(t)) {
      pos = tags::pos_id("VERB");
    } else if (i > 0 && !raw.empty() && std::isupper(static_cast<unsigned char>(raw[0]))) {
      // Tagging sees the original casing: mid-sentence capitalization reads
      // as a proper noun.
      pos = tags::pos_id("PROPN");
    } else {
      pos = tags::pos_id("NOUN");
    }
    (*pos_out)[static_cast<size_t>(i)] = pos;
    (*ner_out)[static_cast<size_t>(i)] = ner;
  }
}

}  // namespace qgen::text
