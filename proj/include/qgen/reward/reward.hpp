#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qgen/reward/qa.hpp"
#include "qgen/reward/qpc.hpp"
#include "qgen/text/toy.hpp"

namespace qgen::reward {

enum class RewardKind { QPP, QAP, BLEU4, ROUGEL, WH_MATCH };

std::string reward_kind_name(RewardKind k);
RewardKind reward_kind_from_name(const std::string& name);

struct RewardSignal {
  double value = 0.0;  // [0,1] for QPP/QAP/WH, [0,100] for metric kinds
  RewardKind kind = RewardKind::QPP;
  std::string question;
  std::string example_id;

  void validate() const;
};

// Everything a reward needs to score one generated question against one
// training example. The tokenized view carries the gold span for QAP.
struct RlContext {
  const text::QAExample* raw = nullptr;
  const text::TokenizedExample* tok = nullptr;
};

// Rewards as seen by the RL loss: always on the [0,1] scale (metric rewards
// are divided by 100).
using RewardFn = std::function<double(const std::vector<std::string>& hyp_tokens, const RlContext&)>;

RewardFn make_qpp_reward(const QPCModel& qpc);
RewardFn make_qap_reward(const QAModel& qa);
RewardFn make_metric_reward(RewardKind kind);  // BLEU4 or ROUGEL, smoothed sentence level
// 1 if the generated question's wh-word matches the answer type, else 0.
RewardFn make_wh_match_reward(const text::ToyLanguageSpec& spec);

}  // namespace qgen::reward
