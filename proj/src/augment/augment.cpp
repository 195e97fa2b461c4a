#include "qgen/augment/augment.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "qgen/nn/kernels.hpp"

namespace qgen::augment {

void FilterConfig::validate() const {
  if (epsilon < 0.0 || epsilon > 1.0) throw DataError("filter: epsilon must be in [0,1]");
}

nlohmann::json FilterReport::to_json() const {
  return {{"epsilon", epsilon}, {"kept", kept}, {"dropped", dropped}, {"mean_qap", mean_qap}};
}

namespace {
std::string normalize_question(const std::string& q) {
  std::string out;
  bool in_space = false;
  for (char c : q) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      in_space = !out.empty();
      continue;
    }
    if (in_space) out += ' ';
    in_space = false;
    out += static_cast<char>(std::tolower(u));
  }
  return out;
}

std::vector<SyntheticExample> decode_candidates(const model::QGModel& qg,
                                                const text::QAExample& src,
                                                const text::Tagger& tagger,
                                                const GenerateOptions& opt, int keep_k,
                                                const char* source) {
  text::QAExample stripped = src;
  stripped.question.reset();
  text::TokenizedExample tok = text::tokenize_example(stripped, qg.vocab, tagger);
  model::QGStepScorer scorer(qg, tok);
  std::vector<decode::BeamHypothesis> hyps =
      opt.decode.diversity_gamma > 0.0 ? decode::diverse_beam_search(scorer, opt.decode)
                                       : decode::beam_search(scorer, opt.decode);
  std::vector<SyntheticExample> out;
  const int k = std::min<int>(keep_k, static_cast<int>(hyps.size()));
  for (int r = 0; r < k; ++r) {
    const auto& hyp = hyps[static_cast<size_t>(r)];
    std::vector<std::string> toks = qg.token_strings(hyp.tokens, scorer.copy_map());
    if (toks.empty()) continue;
    SyntheticExample syn;
    syn.ex = src;
    syn.ex.id = src.id + "-g" + std::to_string(r + 1);
    syn.ex.question = text::join_tokens(toks);
    syn.source = source;
    syn.beam_rank = r + 1;
    syn.generator_id = opt.generator_id;
    out.push_back(std::move(syn));
  }
  return out;
}
}  // namespace

std::vector<SyntheticExample> generate_from_existing(const model::QGModel& qg,
                                                     const std::vector<text::QAExample>& labeled,
                                                     const text::Tagger& tagger,
                                                     const GenerateOptions& opt) {
  opt.decode.validate();
  std::vector<std::vector<SyntheticExample>> per_example(labeled.size());
  nn::kernels::for_each_index(static_cast<int>(labeled.size()), [&](int i) {
    per_example[static_cast<size_t>(i)] = decode_candidates(
        qg, labeled[static_cast<size_t>(i)], tagger, opt, opt.decode.beam_size, "existing");
  });

  std::vector<SyntheticExample> out;
  std::set<std::string> seen;  // (context|answer|question) triples
  for (size_t i = 0; i < labeled.size(); ++i) {
    const std::string gold = labeled[i].question.has_value()
                                 ? normalize_question(*labeled[i].question)
                                 : std::string();
    for (SyntheticExample& syn : per_example[i]) {
      if (opt.dedup) {
        const std::string qn = normalize_question(*syn.ex.question);
        if (!gold.empty() && qn == gold) continue;
        std::string key = syn.ex.context + '\x1f' + syn.ex.answer_text + '\x1f' +
                          std::to_string(syn.ex.answer_start) + '\x1f' + qn;
        if (!seen.insert(std::move(key)).second) continue;
      }
      out.push_back(std::move(syn));
    }
  }
  return out;
}

std::vector<SyntheticExample> generate_from_new(const model::QGModel& qg,
                                                const std::vector<text::QAExample>& unlabeled,
                                                const text::Tagger& tagger,
                                                const GenerateOptions& opt) {
  opt.decode.validate();
  for (const text::QAExample& ex : unlabeled)
    if (ex.question.has_value())
      throw DataError("generate_from_new: record " + ex.id +
                      " already carries a question (possible leakage)");
  std::vector<std::vector<SyntheticExample>> per_example(unlabeled.size());
  nn::kernels::for_each_index(static_cast<int>(unlabeled.size()), [&](int i) {
    per_example[static_cast<size_t>(i)] =
        decode_candidates(qg, unlabeled[static_cast<size_t>(i)], tagger, opt, opt.top_k, "new");
  });
  std::vector<SyntheticExample> out;
  for (auto& group : per_example)
    for (SyntheticExample& syn : group) out.push_back(std::move(syn));
  return out;
}

void qap_score_all(std::vector<SyntheticExample>& synthetic, const reward::QAModel& qa) {
  nn::kernels::for_each_index(static_cast<int>(synthetic.size()), [&](int i) {
    SyntheticExample& syn = synthetic[static_cast<size_t>(i)];
    std::vector<text::Token> ctx = text::tokenize(syn.ex.context);
    int ts = 0, te = 0;
    bool snapped = false;
    if (!text::char_span_to_token_span(
            ctx, syn.ex.answer_start, syn.ex.answer_start + static_cast<int>(syn.ex.answer_text.size()),
            &ts, &te, &snapped))
      throw DataError("qap scoring: unmappable span in " + syn.ex.id);
    std::vector<std::string> q_toks =
        text::token_texts(text::tokenize(syn.ex.question.value_or("")));
    if (q_toks.empty()) {
      syn.qap_score = 0.0;
      return;
    }
    syn.qap_score = qa.qap(text::token_texts(ctx), q_toks, ts, te);
  });
}

std::vector<SyntheticExample> filter(const std::vector<SyntheticExample>& synthetic,
                                     const FilterConfig& cfg,
                                     const std::vector<text::QAExample>* gold,
                                     FilterReport* report) {
  cfg.validate();
  std::set<std::pair<std::string, std::string>> gold_keys;  // (context, normalized question)
  if (gold)
    for (const text::QAExample& ex : *gold)
      if (ex.question.has_value())
        gold_keys.emplace(ex.context + '\x1f' + ex.answer_text, normalize_question(*ex.question));

  std::vector<SyntheticExample> kept;
  std::set<std::string> seen;
  double qap_sum = 0.0;
  for (const SyntheticExample& syn : synthetic) {
    if (!syn.qap_score.has_value())
      throw DataError("filter: example " + syn.ex.id + " has no QAP score");
    if (*syn.qap_score < cfg.epsilon) continue;
    if (cfg.dedup) {
      const std::string qn = normalize_question(syn.ex.question.value_or(""));
      if (gold_keys.count({syn.ex.context + '\x1f' + syn.ex.answer_text, qn})) continue;
      std::string key = syn.ex.context + '\x1f' + syn.ex.answer_text + '\x1f' +
                        std::to_string(syn.ex.answer_start) + '\x1f' + qn;
      if (!seen.insert(std::move(key)).second) continue;
    }
    qap_sum += *syn.qap_score;
    kept.push_back(syn);
  }
  if (report) {
    report->epsilon = cfg.epsilon;
    report->kept = static_cast<int>(kept.size());
    report->dropped = static_cast<int>(synthetic.size() - kept.size());
    report->mean_qap = kept.empty() ? 0.0 : qap_sum / static_cast<double>(kept.size());
  }
  return kept;
}

SemiDataset build_semi_dataset(const std::vector<text::QAExample>& ground_truth,
                               const std::vector<SyntheticExample>& kept_synthetic) {
  SemiDataset out;
  out.ground_truth = ground_truth;
  std::set<std::string> ids;
  for (const text::QAExample& ex : ground_truth)
    if (!ids.insert(ex.id).second) throw DataError("semi dataset: duplicate id " + ex.id);
  for (const SyntheticExample& syn : kept_synthetic) {
    if (!ids.insert(syn.ex.id).second)
      throw DataError("semi dataset: id collision across pools: " + syn.ex.id);
    out.synthetic.push_back(syn.ex);
  }
  return out;
}

std::vector<SyntheticExample> load_synthetic_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open synthetic dataset: " + path);
  std::vector<SyntheticExample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("synthetic line " + std::to_string(line_no) + ": " + e.what());
    }
    SyntheticExample syn;
    syn.ex.id = j.at("id").get<std::string>();
    syn.ex.context = j.at("context").get<std::string>();
    syn.ex.answer_text = j.at("answer_text").get<std::string>();
    syn.ex.answer_start = j.at("answer_start").get<int>();
    if (j.contains("question") && !j["question"].is_null())
      syn.ex.question = j["question"].get<std::string>();
    if (j.contains("qap_score") && !j["qap_score"].is_null())
      syn.qap_score = j["qap_score"].get<double>();
    syn.source = j.value("source", "existing");
    syn.beam_rank = j.value("beam_rank", 1);
    syn.generator_id = j.value("generator_id", "");
    syn.ex.validate();
    out.push_back(std::move(syn));
  }
  return out;
}

void save_synthetic_jsonl(const std::string& path, const std::vector<SyntheticExample>& synthetic) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write synthetic dataset: " + path);
  for (const SyntheticExample& syn : synthetic) {
    nlohmann::json j;
    j["id"] = syn.ex.id;
    j["context"] = syn.ex.context;
    j["answer_text"] = syn.ex.answer_text;
    j["answer_start"] = syn.ex.answer_start;
    if (syn.ex.question.has_value()) j["question"] = *syn.ex.question;
    if (syn.qap_score.has_value()) j["qap_score"] = *syn.qap_score;
    j["source"] = syn.source;
    j["beam_rank"] = syn.beam_rank;
    j["generator_id"] = syn.generator_id;
    out << j.dump() << '\n';
  }
}

}  // namespace qgen::augment
