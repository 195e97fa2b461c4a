#include "qgen/eval/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

namespace qgen::eval {

namespace {

using Counts = std::map<std::vector<std::string>, int>;

Counts ngram_counts(const std::vector<std::string>& toks, int n) {
  Counts out;
  for (int i = 0; i + n <= static_cast<int>(toks.size()); ++i)
    ++out[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)];
  return out;
}

// Clipped n-gram matches and candidate totals for one sentence pair.
void modified_precision(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
                        int n, long long* match, long long* total) {
  Counts hc = ngram_counts(hyp, n);
  Counts rc = ngram_counts(ref, n);
  long long m = 0, t = 0;
  for (const auto& [gram, count] : hc) {
    t += count;
    auto it = rc.find(gram);
    if (it != rc.end()) m += std::min(count, it->second);
  }
  *match += m;
  *total += t;
}

const std::set<std::string>& question_word_set() {
  static const std::set<std::string> s = {"who", "what", "when", "where", "which",
                                          "why", "how",  "whom", "whose"};
  return s;
}

const std::set<std::string>& function_word_set() {
  static const std::set<std::string> s = {
      "the", "a",  "an", "in", "to", "of", "at", "from", "by", "on", "with", "for",
      "as",  "is", "was", "are", "were", "did", "do", "does", "and", "or", "not"};
  return s;
}

bool default_entity_guess(const std::string& tok) {
  if (tok.empty()) return false;
  for (char c : tok)
    if (std::isdigit(static_cast<unsigned char>(c))) return true;
  return std::isupper(static_cast<unsigned char>(tok[0])) != 0;
}

double multiset_f1(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::map<std::string, int> ca, cb;
  for (const auto& t : a) ++ca[t];
  for (const auto& t : b) ++cb[t];
  int overlap = 0;
  for (const auto& [t, n] : ca) {
    auto it = cb.find(t);
    if (it != cb.end()) overlap += std::min(n, it->second);
  }
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(a.size());
  const double r = static_cast<double>(overlap) / static_cast<double>(b.size());
  return 2.0 * p * r / (p + r);
}

std::vector<std::string> whitespace_split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

BleuDetail bleu4_corpus_detail(const std::vector<std::vector<std::string>>& hyps,
                               const std::vector<std::vector<std::string>>& refs) {
  if (hyps.size() != refs.size()) throw DataError("bleu4: hypothesis/reference count mismatch");
  if (hyps.empty()) throw DataError("bleu4: empty corpus");
  for (const auto& r : refs)
    if (r.empty()) throw DataError("bleu4: empty reference");

  BleuDetail d;
  long long hyp_len = 0, ref_len = 0;
  long long match[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0};
  for (size_t i = 0; i < hyps.size(); ++i) {
    hyp_len += static_cast<long long>(hyps[i].size());
    ref_len += static_cast<long long>(refs[i].size());
    for (int n = 1; n <= 4; ++n) modified_precision(hyps[i], refs[i], n, &match[n - 1], &total[n - 1]);
  }
  d.brevity_penalty =
      hyp_len >= ref_len || hyp_len == 0
          ? (hyp_len == 0 ? 0.0 : 1.0)
          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  double log_sum = 0.0;
  bool zero = hyp_len == 0;
  for (int n = 0; n < 4; ++n) {
    d.precisions[n] = total[n] > 0 ? static_cast<double>(match[n]) / static_cast<double>(total[n]) : 0.0;
    if (d.precisions[n] <= 0.0)
      zero = true;
    else
      log_sum += 0.25 * std::log(d.precisions[n]);
  }
  d.score = zero ? 0.0 : 100.0 * d.brevity_penalty * std::exp(log_sum);
  return d;
}

double bleu4_corpus(const std::vector<std::vector<std::string>>& hyps,
                    const std::vector<std::vector<std::string>>& refs) {
  return bleu4_corpus_detail(hyps, refs).score;
}

double bleu4_sentence(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
  if (ref.empty()) throw DataError("bleu4: empty reference");
  if (hyp.empty()) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= 4; ++n) {
    long long match = 0, total = 0;
    modified_precision(hyp, ref, n, &match, &total);
    double p;
    if (n == 1) {
      p = total > 0 ? static_cast<double>(match) / static_cast<double>(total) : 0.0;
    } else {
      // add-1 smoothing on the higher orders
      p = static_cast<double>(match + 1) / static_cast<double>(total + 1);
    }
    if (p <= 0.0) return 0.0;
    log_sum += 0.25 * std::log(p);
  }
  const double bp = hyp.size() >= ref.size()
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(hyp.size()));
  return 100.0 * bp * std::exp(log_sum);
}

double bleu1_sentence(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
  if (ref.empty()) throw DataError("bleu1: empty reference");
  if (hyp.empty()) return 0.0;
  long long match = 0, total = 0;
  modified_precision(hyp, ref, 1, &match, &total);
  const double p = total > 0 ? static_cast<double>(match) / static_cast<double>(total) : 0.0;
  const double bp = hyp.size() >= ref.size()
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(hyp.size()));
  return 100.0 * bp * p;
}

double rouge_l(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
               double beta) {
  if (hyp.empty() || ref.empty()) return 0.0;
  const size_t m = hyp.size(), n = ref.size();
  std::vector<int> prev(n + 1, 0), cur(n + 1, 0);
  for (size_t i = 1; i <= m; ++i) {
    for (size_t j = 1; j <= n; ++j) {
      if (hyp[i - 1] == ref[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const int lcs = prev[n];
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(m);
  const double r = static_cast<double>(lcs) / static_cast<double>(n);
  const double b2 = beta * beta;
  return 100.0 * (1.0 + b2) * p * r / (r + b2 * p);
}

double q_bleu1(const std::vector<std::string>& hyp, const std::vector<std::string>& ref,
               const QBleuWeights& weights, double delta,
               const std::function<bool(const std::string&)>& is_entity) {
  if (delta < 0.0 || delta > 1.0) throw DataError("q_bleu1: delta must be in [0,1]");
  const double wsum =
      weights.question_words + weights.named_entities + weights.content_words + weights.function_words;
  if (std::fabs(wsum - 1.0) > 1e-9) throw DataError("q_bleu1: channel weights must sum to 1");

  auto entity = is_entity ? is_entity : std::function<bool(const std::string&)>(default_entity_guess);
  auto channels = [&entity](const std::vector<std::string>& toks) {
    std::vector<std::string> qw, ne, cw, fw;
    for (const std::string& t : toks) {
      if (question_word_set().count(t)) qw.push_back(t);
      else if (entity(t)) ne.push_back(t);
      else if (function_word_set().count(t)) fw.push_back(t);
      else cw.push_back(t);
    }
    return std::tuple{qw, ne, cw, fw};
  };
  auto [hqw, hne, hcw, hfw] = channels(hyp);
  auto [rqw, rne, rcw, rfw] = channels(ref);
  const double answerability = weights.question_words * multiset_f1(hqw, rqw) +
                               weights.named_entities * multiset_f1(hne, rne) +
                               weights.content_words * multiset_f1(hcw, rcw) +
                               weights.function_words * multiset_f1(hfw, rfw);
  return delta * answerability + (1.0 - delta) * bleu1_sentence(hyp, ref) / 100.0;
}

std::string squad_normalize(const std::string& text) {
  std::string lowered;
  lowered.reserve(text.size());
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::ispunct(u)) continue;
    lowered += static_cast<char>(std::tolower(u));
  }
  std::vector<std::string> toks = whitespace_split(lowered);
  std::string out;
  for (const std::string& t : toks) {
    if (t == "a" || t == "an" || t == "the") continue;
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::pair<double, double> em_f1(const std::string& prediction,
                                const std::vector<std::string>& gold_answers) {
  if (gold_answers.empty()) throw DataError("em_f1: no gold answers");
  const std::string pred_norm = squad_normalize(prediction);
  const std::vector<std::string> pred_toks = whitespace_split(pred_norm);
  double em = 0.0, f1 = 0.0;
  for (const std::string& gold : gold_answers) {
    const std::string gold_norm = squad_normalize(gold);
    if (pred_norm == gold_norm) em = 1.0;
    f1 = std::max(f1, multiset_f1(pred_toks, whitespace_split(gold_norm)));
  }
  return {em, f1};
}

}  // namespace qgen::eval
