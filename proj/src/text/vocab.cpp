#include "qgen/text/vocab.hpp"

#include <algorithm>

namespace qgen::text {

Vocabulary::Vocabulary() {
  for (const char* t : {"[PAD]", "[UNK]", "[BOS]", "[EOS]"}) {
    index_[t] = static_cast<int>(tokens_.size());
    tokens_.emplace_back(t);
  }
}

int Vocabulary::add(const std::string& tok) {
  auto it = index_.find(tok);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(tokens_.size());
  index_[tok] = id;
  tokens_.push_back(tok);
  return id;
}

int Vocabulary::id(const std::string& tok) const {
  auto it = index_.find(tok);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw DataError("vocabulary: id out of range: " + std::to_string(id));
  return tokens_[static_cast<size_t>(id)];
}

nlohmann::json Vocabulary::to_json() const { return nlohmann::json(tokens_); }

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  Vocabulary v;
  auto toks = j.get<std::vector<std::string>>();
  if (toks.size() < 4 || toks[0] != "[PAD]" || toks[1] != "[UNK]" || toks[2] != "[BOS]" || toks[3] != "[EOS]")
    throw DataError("vocabulary: reserved ids missing or reordered");
  for (size_t i = 4; i < toks.size(); ++i) v.add(toks[i]);
  return v;
}

namespace tags {

const std::vector<std::string>& pos_names() {
  static const std::vector<std::string> names = {"X",   "DET",  "PROPN", "NOUN", "VERB",
                                                 "ADP", "NUM",  "PUNCT", "WH",   "PRON"};
  return names;
}

const std::vector<std::string>& ner_names() {
  static const std::vector<std::string> names = {"O", "PERSON", "LOC", "DATE"};
  return names;
}

namespace {
int find(const std::vector<std::string>& xs, const std::string& name, const char* what) {
  auto it = std::find(xs.begin(), xs.end(), name);
  if (it == xs.end()) throw qgen::DataError(std::string("unknown ") + what + " tag: " + name);
  return static_cast<int>(it - xs.begin());
}
}  // namespace

int pos_id(const std::string& name) { return find(pos_names(), name, "POS"); }
int ner_id(const std::string& name) { return find(ner_names(), name, "NER"); }
int pos_size() { return static_cast<int>(pos_names().size()); }
int ner_size() { return static_cast<int>(ner_names().size()); }

}  // namespace tags

}  // namespace qgen::text
