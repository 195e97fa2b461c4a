#include "qgen/text/data.hpp"

#include <fstream>

#include <json.hpp>

#include "qgen/common.hpp"

namespace qgen::text {

using nlohmann::json;

void QAExample::validate() const {
  if (answer_start < 0 || answer_start + answer_text.size() > context.size() ||
      context.compare(static_cast<size_t>(answer_start), answer_text.size(), answer_text) != 0)
    throw DataError("example " + id + ": answer_text does not match context at answer_start");
}

void TokenizedExample::validate() const {
  const size_t m = context_tokens.size();
  if (bio_tags.size() != m || pos_tags.size() != m || ner_tags.size() != m)
    throw DataError("tokenized example: tag sequence length mismatch");
  if (context_ids.size() != m) throw DataError("tokenized example: id sequence length mismatch");
  if (answer_tok_start < 0 || answer_tok_end < answer_tok_start ||
      answer_tok_end >= static_cast<int>(m))
    throw DataError("tokenized example: answer span out of range");
  int b_count = 0;
  for (size_t i = 0; i < m; ++i) {
    if (bio_tags[i] == tags::kBioB) ++b_count;
    if (bio_tags[i] == tags::kBioI &&
        (i == 0 || (bio_tags[i - 1] != tags::kBioB && bio_tags[i - 1] != tags::kBioI)))
      throw DataError("tokenized example: I tag not preceded by B/I");
  }
  if (b_count != 1) throw DataError("tokenized example: expected exactly one B tag");
  if (has_question && question_ids.size() != question_tokens.size())
    throw DataError("tokenized example: question id length mismatch");
}

TokenizedExample tokenize_example(const QAExample& ex, const Vocabulary& vocab, const Tagger& tagger) {
  ex.validate();
  TokenizedExample out;
  std::vector<Token> ctx = tokenize(ex.context);
  if (ctx.empty()) throw DataError("example " + ex.id + ": empty context");
  out.context_tokens = token_texts(ctx);

  int ts = 0, te = 0;
  bool snapped = false;
  if (!char_span_to_token_span(ctx, ex.answer_start,
                               ex.answer_start + static_cast<int>(ex.answer_text.size()), &ts, &te,
                               &snapped))
    throw DataError("example " + ex.id + ": answer span maps to no tokens");
  out.answer_tok_start = ts;
  out.answer_tok_end = te;
  out.span_snapped = snapped;

  out.bio_tags = bio_tag(static_cast<int>(ctx.size()), ts, te);
  tagger.tag(ctx, &out.pos_tags, &out.ner_tags);

  out.context_ids.reserve(ctx.size());
  for (const std::string& t : out.context_tokens) out.context_ids.push_back(vocab.id(t));

  if (ex.question.has_value()) {
    out.has_question = true;
    std::vector<Token> q = tokenize(*ex.question);
    out.question_tokens = token_texts(q);
    for (const std::string& t : out.question_tokens) out.question_ids.push_back(vocab.id(t));
  }
  out.validate();
  return out;
}

namespace {
QAExample example_from_json(const json& j, int line_no) {
  auto fail = [line_no](const std::string& what) {
    throw DataError("jsonl line " + std::to_string(line_no) + ": " + what);
  };
  if (!j.is_object()) fail("record is not an object");
  QAExample ex;
  if (!j.contains("id") || !j["id"].is_string()) fail("missing id");
  if (!j.contains("context") || !j["context"].is_string()) fail("missing context");
  if (!j.contains("answer_text") || !j["answer_text"].is_string()) fail("missing answer_text");
  if (!j.contains("answer_start") || !j["answer_start"].is_number_integer()) fail("missing answer_start");
  ex.id = j["id"].get<std::string>();
  ex.context = j["context"].get<std::string>();
  ex.answer_text = j["answer_text"].get<std::string>();
  ex.answer_start = j["answer_start"].get<int>();
  if (j.contains("question") && !j["question"].is_null()) {
    if (!j["question"].is_string()) fail("question must be a string");
    ex.question = j["question"].get<std::string>();
  }
  try {
    ex.validate();
  } catch (const DataError& e) {
    fail(e.what());
  }
  return ex;
}
}  // namespace

std::vector<QAExample> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);
  std::vector<QAExample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(example_from_json(j, line_no));
  }
  return out;
}

void save_jsonl(const std::string& path, const std::vector<QAExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset file: " + path);
  for (const QAExample& ex : examples) {
    json j;
    j["id"] = ex.id;
    j["context"] = ex.context;
    j["answer_text"] = ex.answer_text;
    j["answer_start"] = ex.answer_start;
    if (ex.question.has_value()) j["question"] = *ex.question;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing dataset file: " + path);
}

SquadImport import_squad(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open SQuAD file: " + path);
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw DataError(std::string("SQuAD parse error: ") + e.what());
  }
  if (!root.contains("data") || !root["data"].is_array())
    throw DataError("SQuAD file: missing top-level data array");
  SquadImport result;
  for (const json& article : root["data"]) {
    if (!article.contains("paragraphs")) continue;
    for (const json& para : article["paragraphs"]) {
      if (!para.contains("context") || !para.contains("qas")) continue;
      const std::string context = para["context"].get<std::string>();
      for (const json& qa : para["qas"]) {
        if (!qa.contains("answers") || qa["answers"].empty()) {
          ++result.warnings;
          continue;
        }
        const json& ans = qa["answers"][0];
        QAExample ex;
        ex.id = qa.value("id", "");
        ex.context = context;
        ex.question = qa.value("question", "");
        ex.answer_text = ans.value("text", "");
        ex.answer_start = ans.value("answer_start", -1);
        try {
          ex.validate();
        } catch (const DataError&) {
          ++result.warnings;
          continue;
        }
        result.examples.push_back(std::move(ex));
      }
    }
  }
  return result;
}

Vocabulary build_vocab(const std::vector<QAExample>& examples) {
  Vocabulary v;
  for (const QAExample& ex : examples) {
    for (const Token& t : tokenize(ex.context)) v.add(t.text);
    if (ex.question.has_value())
      for (const Token& t : tokenize(*ex.question)) v.add(t.text);
  }
  return v;
}

}  // namespace qgen::text
