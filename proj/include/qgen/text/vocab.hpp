#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "qgen/common.hpp"

namespace qgen::text {

// Token -> id with four reserved ids. Built deterministically: tokens enter
// in first-occurrence order.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;

  Vocabulary();

  int add(const std::string& tok);  // returns existing id if present
  int id(const std::string& tok) const;  // kUnk if missing
  bool contains(const std::string& tok) const { return index_.count(tok) > 0; }
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  template <class It>
  void add_all(It begin, It end) {
    for (It it = begin; it != end; ++it) add(*it);
  }

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Closed tag sets for the three feature channels.
namespace tags {

inline constexpr int kBioO = 0;
inline constexpr int kBioB = 1;
inline constexpr int kBioI = 2;
inline constexpr int kBioSize = 3;

// POS tag names; id = position in the list.
const std::vector<std::string>& pos_names();
// NER tag names; id 0 is "O".
const std::vector<std::string>& ner_names();

int pos_id(const std::string& name);
int ner_id(const std::string& name);
int pos_size();
int ner_size();

}  // namespace tags

}  // namespace qgen::text
