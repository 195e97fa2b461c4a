#include "qgen/reward/reward.hpp"

#include "qgen/eval/metrics.hpp"

namespace qgen::reward {

std::string reward_kind_name(RewardKind k) {
  switch (k) {
    case RewardKind::QPP: return "qpp";
    case RewardKind::QAP: return "qap";
    case RewardKind::BLEU4: return "bleu4";
    case RewardKind::ROUGEL: return "rougeL";
    case RewardKind::WH_MATCH: return "wh";
  }
  return "?";
}

RewardKind reward_kind_from_name(const std::string& name) {
  if (name == "qpp") return RewardKind::QPP;
  if (name == "qap") return RewardKind::QAP;
  if (name == "bleu4") return RewardKind::BLEU4;
  if (name == "rougeL" || name == "rougel") return RewardKind::ROUGEL;
  if (name == "wh") return RewardKind::WH_MATCH;
  throw UsageError("unknown reward kind: " + name);
}

void RewardSignal::validate() const {
  const double hi = (kind == RewardKind::BLEU4 || kind == RewardKind::ROUGEL) ? 100.0 : 1.0;
  if (!(value >= 0.0 && value <= hi))
    throw NumericError("reward signal out of range for " + reward_kind_name(kind) + ": " +
                       std::to_string(value));
}

namespace {
std::vector<std::string> gold_question_tokens(const RlContext& ctx) {
  if (!ctx.tok || !ctx.tok->has_question)
    throw DataError("reward: example has no gold question");
  return ctx.tok->question_tokens;
}
}  // namespace

RewardFn make_qpp_reward(const QPCModel& qpc) {
  return [&qpc](const std::vector<std::string>& hyp, const RlContext& ctx) {
    if (hyp.empty()) return 0.0;
    return qpc.qpp(hyp, gold_question_tokens(ctx));
  };
}

RewardFn make_qap_reward(const QAModel& qa) {
  return [&qa](const std::vector<std::string>& hyp, const RlContext& ctx) {
    if (hyp.empty()) return 0.0;
    if (!ctx.tok) throw DataError("reward: missing tokenized context");
    return qa.qap(ctx.tok->context_tokens, hyp, ctx.tok->answer_tok_start, ctx.tok->answer_tok_end);
  };
}

RewardFn make_metric_reward(RewardKind kind) {
  if (kind != RewardKind::BLEU4 && kind != RewardKind::ROUGEL)
    throw UsageError("metric reward must be bleu4 or rougeL");
  return [kind](const std::vector<std::string>& hyp, const RlContext& ctx) {
    const std::vector<std::string> ref = gold_question_tokens(ctx);
    const double v = kind == RewardKind::BLEU4 ? eval::bleu4_sentence(hyp, ref)
                                               : eval::rouge_l(hyp, ref);
    return v / 100.0;  // rewards enter Eq. 5 on the [0,1] scale
  };
}

RewardFn make_wh_match_reward(const text::ToyLanguageSpec& spec) {
  return [spec](const std::vector<std::string>& hyp, const RlContext& ctx) {
    if (!ctx.raw) throw DataError("reward: missing raw example");
    const text::AnswerType want = spec.answer_type(ctx.raw->answer_text);
    return text::question_wh_type(hyp) == want && want != text::AnswerType::Unknown ? 1.0 : 0.0;
  };
}

}  // namespace qgen::reward
