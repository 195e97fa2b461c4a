#include "qgen/text/toy.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qgen/nn/rng.hpp"

namespace qgen::text {

using nn::Rng;

std::string answer_type_name(AnswerType t) {
  switch (t) {
    case AnswerType::Person: return "PERSON";
    case AnswerType::Location: return "LOC";
    case AnswerType::Date: return "DATE";
    case AnswerType::Topic: return "TOPIC";
    default: return "UNKNOWN";
  }
}

ToyLanguageSpec ToyLanguageSpec::builtin() {
  ToyLanguageSpec s;
  s.first_names = {"ada",  "ben",  "carl", "dora", "emil", "fanny", "george", "hanna",
                   "ivan", "julia", "karl", "lena", "marc", "nora",  "otto",   "paula",
                   "quinn", "rosa", "simon", "tess"};
  s.last_names = {"archer", "brandt", "cole",  "duval",  "ekberg", "fischer", "graves",
                  "holm",   "ibsen",  "jansen", "keller", "lund",   "meyer",   "novak",
                  "orsini", "petrov", "quist",  "reiner", "sordi",  "toledo"};
  s.cities = {"paris",  "berlin", "madrid", "lisbon", "vienna", "prague", "warsaw", "oslo",
              "dublin", "athens", "rome",   "turin",  "geneva", "bergen", "leiden", "ghent",
              "porto",  "sofia",  "riga",   "malmo"};
  s.subjects = {"law",     "physics", "botany",  "history", "music",    "medicine",
                "geology", "poetry",  "algebra", "logic",   "painting", "astronomy"};
  s.year_min = 1800;
  s.year_max = 1879;
  s.seed = 7;
  return s;
}

void ToyLanguageSpec::validate() const {
  if (first_names.empty() || last_names.empty() || cities.empty() || subjects.empty())
    throw DataError("toy spec: empty lexicon");
  if (year_min > year_max || year_min < 1000 || year_max > 2999)
    throw DataError("toy spec: year range invalid (must lie in [1000, 2999])");
}

ToyLanguageSpec ToyLanguageSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open toy spec file: " + path);
  ToyLanguageSpec s;
  s.first_names.clear();
  s.last_names.clear();
  s.cities.clear();
  s.subjects.clear();
  std::string line, section;
  int line_no = 0;
  auto trim = [](std::string x) {
    const char* ws = " \t\r\n";
    size_t a = x.find_first_not_of(ws);
    if (a == std::string::npos) return std::string();
    size_t b = x.find_last_not_of(ws);
    return x.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = t.substr(1, t.size() - 2);
      continue;
    }
    auto eq = t.find('=');
    if (section.empty() && eq != std::string::npos) {
      std::string key = trim(t.substr(0, eq));
      std::string val = trim(t.substr(eq + 1));
      try {
        if (key == "seed") s.seed = std::stoull(val);
        else if (key == "year_min") s.year_min = std::stoi(val);
        else if (key == "year_max") s.year_max = std::stoi(val);
        else throw DataError("unknown key: " + key);
      } catch (const std::exception& e) {
        throw DataError("toy spec line " + std::to_string(line_no) + ": " + e.what());
      }
      continue;
    }
    if (section == "first_names") s.first_names.push_back(t);
    else if (section == "last_names") s.last_names.push_back(t);
    else if (section == "cities") s.cities.push_back(t);
    else if (section == "subjects") s.subjects.push_back(t);
    else throw DataError("toy spec line " + std::to_string(line_no) + ": entry outside a known section");
  }
  s.validate();
  return s;
}

std::shared_ptr<RuleTagger> ToyLanguageSpec::make_tagger() const {
  auto tagger = std::make_shared<RuleTagger>();
  for (const std::string& f : first_names)
    for (const std::string& l : last_names) tagger->add_entity(f + " " + l, "PERSON");
  for (const std::string& f : first_names) tagger->add_entity(f, "PERSON");
  for (const std::string& l : last_names) tagger->add_entity(l, "PERSON");
  for (const std::string& c : cities) tagger->add_entity(c, "LOC");
  return tagger;
}

AnswerType ToyLanguageSpec::answer_type(const std::string& answer_text) const {
  std::vector<Token> toks = tokenize(answer_text);
  if (toks.empty()) return AnswerType::Unknown;
  const std::string& head = toks[0].text;
  if (is_year_token(head)) return AnswerType::Date;
  for (const std::string& c : cities)
    if (c == head) return AnswerType::Location;
  for (const std::string& sub : subjects)
    if (sub == head) return AnswerType::Topic;
  for (const std::string& f : first_names)
    if (f == head) return AnswerType::Person;
  for (const std::string& l : last_names)
    if (l == head) return AnswerType::Person;
  return AnswerType::Unknown;
}

namespace {

enum FactKind { kBirth = 0, kMove = 1, kStudy = 2 };
enum SlotKind { kSlotName = 0, kSlotCity = 1, kSlotYear = 2, kSlotSubject = 3 };

struct FactInstance {
  int kind;
  std::string name, city, subject;
  int year;
};

struct Rendered {
  std::string str;
  // Character offsets of the slot fillers inside `str`.
  int name_pos = -1, city_pos = -1, year_pos = -1, subject_pos = -1;
};

Rendered render_fact(const FactInstance& f) {
  Rendered r;
  std::string& s = r.str;
  auto append = [&s](const std::string& piece) {
    if (!s.empty()) s += ' ';
    int pos = static_cast<int>(s.size());
    s += piece;
    return pos;
  };
  switch (f.kind) {
    case kBirth:
      r.name_pos = append(f.name);
      append("was");
      append("born");
      append("in");
      r.city_pos = append(f.city);
      append("in");
      r.year_pos = append(std::to_string(f.year));
      append(".");
      break;
    case kMove:
      r.name_pos = append(f.name);
      append("moved");
      append("to");
      r.city_pos = append(f.city);
      append("in");
      r.year_pos = append(std::to_string(f.year));
      append(".");
      break;
    case kStudy:
      r.name_pos = append(f.name);
      append("studied");
      r.subject_pos = append(f.subject);
      append("in");
      r.city_pos = append(f.city);
      append(".");
      break;
    default:
      throw DataError("toy: unknown fact kind");
  }
  return r;
}

std::vector<SlotKind> slots_of(int kind) {
  if (kind == kStudy) return {kSlotName, kSlotSubject, kSlotCity};
  return {kSlotName, kSlotCity, kSlotYear};
}

std::string render_question(const FactInstance& f, SlotKind slot, int variant) {
  auto pick = [variant](const std::string& a, const std::string& b) { return variant == 0 ? a : b; };
  switch (f.kind) {
    case kBirth:
      switch (slot) {
        case kSlotName: return pick("who was born in " + f.city + " ?",
                                    "which person was born in " + f.city + " ?");
        case kSlotCity: return pick("where was " + f.name + " born ?",
                                    "in which city was " + f.name + " born ?");
        case kSlotYear: return pick("when was " + f.name + " born ?",
                                    "in what year was " + f.name + " born ?");
        default: break;
      }
      break;
    case kMove:
      switch (slot) {
        case kSlotName: return pick("who moved to " + f.city + " ?",
                                    "which person moved to " + f.city + " ?");
        case kSlotCity: return pick("where did " + f.name + " move ?",
                                    "to which city did " + f.name + " move ?");
        case kSlotYear: return pick("when did " + f.name + " move to " + f.city + " ?",
                                    "in what year did " + f.name + " move to " + f.city + " ?");
        default: break;
      }
      break;
    case kStudy:
      switch (slot) {
        case kSlotName: return pick("who studied " + f.subject + " ?",
                                    "which person studied " + f.subject + " ?");
        case kSlotSubject: return pick("what did " + f.name + " study ?",
                                       "which subject did " + f.name + " study ?");
        case kSlotCity: return pick("where did " + f.name + " study ?",
                                    "in which city did " + f.name + " study ?");
        default: break;
      }
      break;
    default: break;
  }
  throw DataError("toy: no question template for this (fact, slot)");
}

FactInstance draw_fact(const ToyLanguageSpec& spec, const std::string& name, int kind, Rng& rng) {
  FactInstance f;
  f.kind = kind;
  f.name = name;
  f.city = spec.cities[rng.below(spec.cities.size())];
  f.subject = spec.subjects[rng.below(spec.subjects.size())];
  f.year = spec.year_min + static_cast<int>(rng.below(static_cast<uint64_t>(spec.year_max - spec.year_min + 1)));
  return f;
}

struct ContextDraw {
  FactInstance a, b;
  Rendered ra, rb;
  std::string context;
  int rb_offset = 0;
};

ContextDraw draw_context(const ToyLanguageSpec& spec, Rng& rng) {
  ContextDraw d;
  const std::string name = spec.first_names[rng.below(spec.first_names.size())] + " " +
                           spec.last_names[rng.below(spec.last_names.size())];
  int ka = static_cast<int>(rng.below(3));
  int kb = static_cast<int>(rng.below(2));
  if (kb >= ka) ++kb;  // two distinct fact kinds
  d.a = draw_fact(spec, name, ka, rng);
  d.b = draw_fact(spec, name, kb, rng);
  while (d.b.city == d.a.city) d.b.city = spec.cities[rng.below(spec.cities.size())];
  while (d.b.year == d.a.year)
    d.b.year = spec.year_min + static_cast<int>(rng.below(static_cast<uint64_t>(spec.year_max - spec.year_min + 1)));
  d.ra = render_fact(d.a);
  d.rb = render_fact(d.b);
  d.context = d.ra.str + " " + d.rb.str;
  d.rb_offset = static_cast<int>(d.ra.str.size()) + 1;
  return d;
}

struct SlotRef {
  const FactInstance* fact;
  const Rendered* rendered;
  int base_offset;
  SlotKind slot;
};

std::pair<std::string, int> slot_answer(const SlotRef& s) {
  const FactInstance& f = *s.fact;
  const Rendered& r = *s.rendered;
  switch (s.slot) {
    case kSlotName: return {f.name, s.base_offset + r.name_pos};
    case kSlotCity: return {f.city, s.base_offset + r.city_pos};
    case kSlotYear: return {std::to_string(f.year), s.base_offset + r.year_pos};
    case kSlotSubject: return {f.subject, s.base_offset + r.subject_pos};
  }
  throw DataError("toy: bad slot");
}

}  // namespace

ToyCorpus make_toy_corpus(const ToyLanguageSpec& spec, int n_train, int n_dev, int n_unlabeled) {
  spec.validate();
  if (n_train < 0 || n_dev < 0 || n_unlabeled < 0) throw DataError("toy corpus: negative size");
  const int total = n_train + n_dev + n_unlabeled;
  Rng rng(spec.seed);
  std::set<std::string> seen_contexts;
  ToyCorpus corpus;
  const long long max_attempts = 200LL * (total + 1);
  long long attempts = 0;
  int made = 0;
  while (made < total) {
    if (++attempts > max_attempts)
      throw DataError("toy corpus: requested size exceeds template capacity");
    ContextDraw d = draw_context(spec, rng);
    if (!seen_contexts.insert(d.context).second) continue;

    // Enumerate the six answerable slots and pick one.
    std::vector<SlotRef> slots;
    for (SlotKind sk : slots_of(d.a.kind)) slots.push_back({&d.a, &d.ra, 0, sk});
    for (SlotKind sk : slots_of(d.b.kind)) slots.push_back({&d.b, &d.rb, d.rb_offset, sk});
    const SlotRef& chosen = slots[rng.below(slots.size())];
    const int variant = static_cast<int>(rng.below(2));

    auto [answer, offset] = slot_answer(chosen);
    QAExample ex;
    ex.context = d.context;
    ex.answer_text = answer;
    ex.answer_start = offset;
    ex.question = render_question(*chosen.fact, chosen.slot, variant);
    ex.validate();

    if (made < n_train) {
      ex.id = "toy-train-" + std::to_string(made);
      corpus.train.push_back(std::move(ex));
    } else if (made < n_train + n_dev) {
      ex.id = "toy-dev-" + std::to_string(made - n_train);
      corpus.dev.push_back(std::move(ex));
    } else {
      ex.id = "toy-unlabeled-" + std::to_string(made - n_train - n_dev);
      ex.question.reset();
      corpus.unlabeled.push_back(std::move(ex));
    }
    ++made;
  }
  return corpus;
}

std::vector<ParaphrasePair> make_paraphrase_pairs(const ToyLanguageSpec& spec, int n_pairs) {
  spec.validate();
  if (n_pairs < 0) throw DataError("paraphrase pairs: negative size");
  Rng rng(Rng::mix(spec.seed, 0x70617270ull));  // independent stream
  std::vector<ParaphrasePair> out;
  out.reserve(static_cast<size_t>(n_pairs));
  for (int i = 0; i < n_pairs; ++i) {
    ParaphrasePair p;
    p.id = "toy-pair-" + std::to_string(i);
    if (i % 2 == 0) {
      ContextDraw d = draw_context(spec, rng);
      std::vector<SlotKind> sl = slots_of(d.a.kind);
      SlotKind slot = sl[rng.below(sl.size())];
      p.question_a = render_question(d.a, slot, 0);
      p.question_b = render_question(d.a, slot, 1);
      p.label = 1;
    } else {
      ContextDraw d1 = draw_context(spec, rng);
      ContextDraw d2 = draw_context(spec, rng);
      std::vector<SlotKind> s1 = slots_of(d1.a.kind);
      std::vector<SlotKind> s2 = slots_of(d2.b.kind);
      p.question_a = render_question(d1.a, s1[rng.below(s1.size())], static_cast<int>(rng.below(2)));
      p.question_b = render_question(d2.b, s2[rng.below(s2.size())], static_cast<int>(rng.below(2)));
      p.label = 0;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ParaphrasePair> load_pairs_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pairs file: " + path);
  std::vector<ParaphrasePair> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("pairs line " + std::to_string(line_no) + ": " + e.what());
    }
    ParaphrasePair p;
    if (!j.contains("question_a") || !j.contains("question_b") || !j.contains("label"))
      throw DataError("pairs line " + std::to_string(line_no) + ": missing field");
    p.id = j.value("id", "pair-" + std::to_string(line_no));
    p.question_a = j["question_a"].get<std::string>();
    p.question_b = j["question_b"].get<std::string>();
    p.label = j["label"].get<int>();
    if (p.label != 0 && p.label != 1)
      throw DataError("pairs line " + std::to_string(line_no) + ": label must be 0/1");
    out.push_back(std::move(p));
  }
  return out;
}

void save_pairs_jsonl(const std::string& path, const std::vector<ParaphrasePair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write pairs file: " + path);
  for (const ParaphrasePair& p : pairs) {
    nlohmann::json j;
    j["id"] = p.id;
    j["question_a"] = p.question_a;
    j["question_b"] = p.question_b;
    j["label"] = p.label;
    out << j.dump() << '\n';
  }
}

AnswerType question_wh_type(const std::vector<std::string>& question_tokens) {
  // Type nouns take precedence over bare wh-words ("in what year" is a DATE
  // question even though it contains "what").
  auto contains = [&](const char* w) {
    for (const std::string& t : question_tokens)
      if (t == w) return true;
    return false;
  };
  if (contains("year")) return AnswerType::Date;
  if (contains("city")) return AnswerType::Location;
  if (contains("person")) return AnswerType::Person;
  if (contains("subject")) return AnswerType::Topic;
  if (contains("who")) return AnswerType::Person;
  if (contains("where")) return AnswerType::Location;
  if (contains("when")) return AnswerType::Date;
  if (contains("what")) return AnswerType::Topic;
  return AnswerType::Unknown;
}

}  // namespace qgen::text
