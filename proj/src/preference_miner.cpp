#include "sqlforge/preference_miner.hpp"

#include <set>

#include "sqlforge/error.hpp"
#include "sqlforge/parallel.hpp"
#include "sqlforge/schema_catalog.hpp"
#include "sqlforge/text.hpp"

namespace sqlforge {

namespace fs = std::filesystem;

std::string_view to_string(RejectedReason reason) noexcept {
  switch (reason) {
    case RejectedReason::ResultMismatch: return "ResultMismatch";
    case RejectedReason::ExecError: return "ExecError";
    case RejectedReason::Timeout: return "Timeout";
  }
  return "ResultMismatch";
}

std::vector<PreferencePair> mine_pairs(const Sample& sample, ModelClient& client, const fs::path& db_path,
                                       const MineOptions& options) {
  const auto gold = execute(db_path, sample.gold_sql, options.timeout);
  if (!gold.ok()) {
    throw GoldExecutionFailed("gold SQL of " + sample.sample_id + " failed on " + db_path.string() + ": " +
                              (gold.kind == OutcomeKind::Timeout ? std::string("timeout") : gold.error_message));
  }
  const auto match = match_options_for(sample.gold_sql);
  const std::string gold_text = normalize_whitespace(sample.gold_sql);

  GenerationRequest request;
  request.prompt = render_prompt(sample.schema_tables, sample.question);
  request.temperature = options.temperature;
  request.n = options.n_candidates;
  request.max_tokens = options.max_tokens;
  const auto response = client.generate(request);

  std::vector<PreferencePair> pairs;
  std::set<std::string> seen;
  for (const auto& completion : response.completions) {
    const std::string sql = extract_sql(completion);
    const std::string key = normalize_whitespace(sql);
    if (key.empty() || key == gold_text || seen.contains(key)) continue;

    const auto outcome = execute(db_path, sql, options.timeout);
    if (results_match(outcome, gold, match)) continue;
    seen.insert(key);

    PreferencePair pair;
    pair.prompt = request.prompt;
    pair.chosen = sample.gold_sql;
    pair.rejected = sql;
    pair.sample_id = sample.sample_id;
    switch (outcome.kind) {
      case OutcomeKind::Rows: pair.rejected_reason = RejectedReason::ResultMismatch; break;
      case OutcomeKind::ExecError: pair.rejected_reason = RejectedReason::ExecError; break;
      case OutcomeKind::Timeout: pair.rejected_reason = RejectedReason::Timeout; break;
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

MiningResult mine_corpus(const std::vector<Sample>& samples, ModelClient& client, const fs::path& corpus_root,
                         std::size_t jobs, const MineOptions& options) {
  for (const auto& s : samples) {
    const auto path = corpus_database_path(corpus_root, s.db_id);
    if (!fs::is_regular_file(path)) throw CorpusLayoutError("database file not found: " + path.string());
  }
  std::vector<std::vector<PreferencePair>> per_sample(samples.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    per_sample[i] = mine_pairs(samples[i], client, corpus_database_path(corpus_root, samples[i].db_id), options);
  });

  MiningResult result;
  result.stats.n_samples = samples.size();
  for (auto& pairs : per_sample) {
    if (pairs.empty()) ++result.stats.skipped_samples;
    for (auto& p : pairs) result.pairs.push_back(std::move(p));
  }
  result.stats.n_pairs = result.pairs.size();
  return result;
}

void to_json(nlohmann::json& j, const PreferencePair& p) {
  j = nlohmann::json{{"prompt", p.prompt},
                     {"chosen", p.chosen},
                     {"rejected", p.rejected},
                     {"rejected_reason", std::string(to_string(p.rejected_reason))},
                     {"sample_id", p.sample_id}};
}

void to_json(nlohmann::json& j, const MiningStats& s) {
  j = nlohmann::json{{"n_samples", s.n_samples}, {"n_pairs", s.n_pairs}, {"skipped_samples", s.skipped_samples}};
}

}  // namespace sqlforge
