#include "sqlforge/augmentation.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "sqlforge/error.hpp"
#include "sqlforge/parallel.hpp"
#include "sqlforge/sql_analysis.hpp"
#include "sqlforge/text.hpp"

namespace sqlforge {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, n), n > 0, by rejection.
  std::size_t below(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % bound);
  }

  bool chance(double p) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return u < p;
  }

 private:
  std::mt19937_64 engine_;
};

using NameSet = std::set<std::string, CaseInsensitiveLess>;

const DatabaseSchema* find_database(const std::vector<DatabaseSchema>& corpus, std::string_view db_id) {
  for (const auto& db : corpus) {
    if (db.db_id == db_id) return &db;
  }
  return nullptr;
}

std::vector<TableSchema> base_tables(const Sample& sample, const DatabaseSchema* own) {
  if (!sample.schema_tables.empty() || own == nullptr) return sample.schema_tables;
  return own->tables;
}

std::vector<std::string> sample_keys(const Sample& sample, const DatabaseSchema* own) {
  const auto tables = base_tables(sample, own);
  if (own != nullptr) return own->key_column_names(tables);
  std::vector<std::string> keys;
  for (const auto& t : tables) {
    for (const auto& c : t.columns) {
      if (c.is_primary_key) keys.push_back(c.name);
    }
  }
  return keys;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view sample_id) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](unsigned char byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(global_seed >> (8 * i)));
  for (const char c : sample_id) mix(static_cast<unsigned char>(c));
  return h;
}

std::vector<std::pair<std::string, TableSchema>> cross_db_candidates(const Sample& sample,
                                                                     const std::vector<DatabaseSchema>& corpus) {
  const DatabaseSchema* own = find_database(corpus, sample.db_id);
  const auto base = base_tables(sample, own);
  const auto keys = sample_keys(sample, own);

  std::vector<std::pair<std::string, TableSchema>> candidates;
  NameSet taken;
  for (const auto& t : base) taken.insert(t.name);
  for (const auto& db : corpus) {
    if (db.db_id == sample.db_id) continue;
    for (const auto& table : db.tables) {
      if (taken.contains(table.name)) continue;
      const bool shares_key = std::any_of(keys.begin(), keys.end(), [&](const std::string& k) { return table.has_column(k); });
      if (!shares_key) continue;
      taken.insert(table.name);
      candidates.emplace_back(db.db_id, table);
    }
  }
  return candidates;
}

AugmentedSample cross_db_augment(const Sample& sample, const std::vector<DatabaseSchema>& corpus, std::uint64_t seed) {
  AugmentedSample out;
  out.base = sample;
  out.seed = seed;
  out.schema_tables = base_tables(sample, find_database(corpus, sample.db_id));

  auto candidates = cross_db_candidates(sample, corpus);
  if (candidates.empty()) {
    out.provenance = UnchangedProvenance{"empty candidate set"};
    return out;
  }

  Rng rng(seed);
  const std::size_t n = std::min<std::size_t>(1 + rng.below(3), candidates.size());
  CrossDbProvenance provenance;
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(candidates[i], candidates[i + rng.below(candidates.size() - i)]);
    auto& [db_id, table] = candidates[i];
    const std::size_t pos = rng.below(out.schema_tables.size() + 1);
    provenance.inserted_table_names.push_back(table.name);
    provenance.source_db_ids.push_back(db_id);
    out.schema_tables.insert(out.schema_tables.begin() + static_cast<std::ptrdiff_t>(pos), table);
  }
  out.provenance = std::move(provenance);
  return out;
}

AugmentedSample inner_db_augment(const Sample& sample, const DatabaseSchema& database, std::uint64_t seed,
                                 const InnerDbOptions& options) {
  const auto check = validate(sample.gold_sql, database);
  if (check.status == ValidityStatus::WrongTableName || check.status == ValidityStatus::WrongColumnName) {
    throw GoldReferencesUnknownColumn(sample.sample_id + ": " + check.detail);
  }
  const auto refs = extract_references(sample.gold_sql, database);

  NameSet used_tables;
  std::map<std::string, NameSet, CaseInsensitiveLess> used_columns;
  for (const auto& t : refs.tables) {
    if (database.find_table(t) == nullptr) {
      throw GoldReferencesUnknownColumn(sample.sample_id + ": gold SQL references unknown table " + t);
    }
    used_tables.insert(t);
  }
  for (const auto& ref : refs.columns) {
    if (ref.table != kUnresolvedTable) {
      const TableSchema* table = database.find_table(ref.table);
      if (table == nullptr || !table->has_column(ref.column)) {
        throw GoldReferencesUnknownColumn(sample.sample_id + ": gold SQL references unknown column " + ref.table +
                                          "." + ref.column);
      }
      used_columns[ref.table].insert(ref.column);
      continue;
    }
    bool found = false;
    for (const auto& t : used_tables) {
      if (database.find_table(t)->has_column(ref.column)) {
        used_columns[t].insert(ref.column);
        found = true;
      }
    }
    if (!found) {
      throw GoldReferencesUnknownColumn(sample.sample_id + ": gold SQL references unknown column " + ref.column);
    }
  }

  auto is_used_column = [&](const std::string& table, const std::string& column) {
    const auto it = used_columns.find(table);
    return it != used_columns.end() && it->second.contains(column);
  };

  Rng rng(seed);
  std::vector<TableSchema> kept;
  InnerDbProvenance provenance;
  for (const auto& table : database.tables) {
    const bool used = used_tables.contains(table.name);
    if (!used && !rng.chance(options.p_table)) continue;
    TableSchema copy{table.name, {}};
    for (const auto& column : table.columns) {
      if (is_used_column(table.name, column.name) || rng.chance(options.p_col)) copy.columns.push_back(column);
    }
    if (copy.columns.empty() && !table.columns.empty()) copy.columns.push_back(table.columns.front());
    kept.push_back(std::move(copy));
  }

  if (used_tables.size() > options.max_tables) {
    std::erase_if(kept, [&](const TableSchema& t) { return !used_tables.contains(t.name); });
  }
  while (kept.size() > options.max_tables && kept.size() > used_tables.size()) {
    std::vector<std::size_t> unused;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (!used_tables.contains(kept[i].name)) unused.push_back(i);
    }
    const std::size_t victim = unused[rng.below(unused.size())];
    kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(victim));
  }

  for (auto& table : kept) {
    const auto& used_here = used_columns[table.name];
    if (used_here.size() > options.max_columns) {
      std::erase_if(table.columns, [&](const ColumnSchema& c) { return !used_here.contains(c.name); });
    }
    while (table.columns.size() > options.max_columns && table.columns.size() > used_here.size()) {
      std::vector<std::size_t> unused;
      for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (!used_here.contains(table.columns[i].name)) unused.push_back(i);
      }
      const std::size_t victim = unused[rng.below(unused.size())];
      table.columns.erase(table.columns.begin() + static_cast<std::ptrdiff_t>(victim));
    }
  }

  // Provenance lists follow database order.
  for (const auto& table : database.tables) {
    const auto* kept_table = [&]() -> const TableSchema* {
      for (const auto& t : kept) {
        if (t.name == table.name) return &t;
      }
      return nullptr;
    }();
    if (kept_table == nullptr) {
      provenance.removed_tables.push_back(table.name);
      continue;
    }
    if (!used_tables.contains(table.name)) provenance.added_tables.push_back(table.name);
    for (const auto& column : table.columns) {
      if (!kept_table->has_column(column.name)) provenance.removed_columns.push_back(table.name + "." + column.name);
    }
  }

  AugmentedSample out;
  out.base = sample;
  out.seed = seed;
  out.schema_tables = std::move(kept);
  out.provenance = std::move(provenance);
  return out;
}

std::vector<DatabaseSchema> load_corpus(const std::filesystem::path& corpus_root) {
  std::vector<DatabaseSchema> corpus;
  for (const auto& db_id : list_corpus_databases(corpus_root)) {
    const auto path = corpus_database_path(corpus_root, db_id);
    if (!std::filesystem::is_regular_file(path)) throw CorpusLayoutError("database file not found: " + path.string());
    corpus.push_back(introspect_database(path, db_id));
  }
  return corpus;
}

std::vector<AugmentedSample> augment_samples(const std::vector<Sample>& samples,
                                             const std::vector<DatabaseSchema>& corpus, AugmentMode mode,
                                             std::uint64_t global_seed, std::size_t jobs,
                                             const InnerDbOptions& options) {
  for (const auto& s : samples) {
    if (find_database(corpus, s.db_id) == nullptr) {
      throw CorpusLayoutError("sample " + s.sample_id + " names unknown database " + s.db_id);
    }
  }
  std::vector<AugmentedSample> out(samples.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    const auto& s = samples[i];
    const auto seed = derive_seed(global_seed, s.sample_id);
    out[i] = mode == AugmentMode::CrossDb ? cross_db_augment(s, corpus, seed)
                                          : inner_db_augment(s, *find_database(corpus, s.db_id), seed, options);
  });
  return out;
}

void to_json(nlohmann::json& j, const Provenance& p) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, CrossDbProvenance>) {
          j = {{"kind", "CrossDB"}, {"inserted_table_names", v.inserted_table_names}, {"source_db_ids", v.source_db_ids}};
        } else if constexpr (std::is_same_v<T, InnerDbProvenance>) {
          j = {{"kind", "InnerDB"},
               {"added", v.added_tables},
               {"removed_tables", v.removed_tables},
               {"removed_columns", v.removed_columns}};
        } else {
          j = {{"kind", "Unchanged"}, {"reason", v.reason}};
        }
      },
      p);
}

nlohmann::json to_training_record(const AugmentedSample& sample) {
  return {{"sample_id", sample.base.sample_id},
          {"prompt", render_prompt(sample.schema_tables, sample.base.question)},
          {"completion", sample.base.gold_sql},
          {"provenance", sample.provenance},
          {"seed", sample.seed}};
}

}  // namespace sqlforge
