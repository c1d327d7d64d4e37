#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "fixture_corpus.hpp"
#include "reference_texts.hpp"
#include "sqlforge/error.hpp"
#include "sqlforge/schema_catalog.hpp"

namespace sqlforge {
namespace {

namespace fs = std::filesystem;
using testing::shared_fixture_corpus;

std::size_t count_lines_starting_with(const std::string& text, std::string_view prefix) {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.starts_with(prefix)) ++n;
  }
  return n;
}

class ScratchDir : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = testing::make_temp_dir("sqlforge-catalog"); }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(ScratchDir, RoundTripsTablesKeysAndForeignKeys) {
  const auto path = dir_ / "shop.sqlite";
  testing::create_database(path, R"(
    CREATE TABLE customer (id INTEGER PRIMARY KEY, name TEXT NOT NULL, "home town" VARCHAR(40));
    CREATE TABLE orders (order_no INTEGER, customer_id INTEGER REFERENCES customer(id), total REAL,
                         PRIMARY KEY (order_no));
    INSERT INTO customer VALUES (1, 'Ann', 'Oslo'), (2, 'Bob', NULL), (3, 'Ann', 'Rome');
  )");

  const auto schema = introspect_database(path, "shop");
  ASSERT_EQ(schema.tables.size(), 2u);
  EXPECT_EQ(schema.db_id, "shop");
  EXPECT_EQ(schema.file_path, path);

  const auto& customer = schema.tables[0];
  EXPECT_EQ(customer.name, "customer");
  ASSERT_EQ(customer.columns.size(), 3u);
  EXPECT_EQ(customer.columns[0], (ColumnSchema{"id", "INTEGER", true, {}}));
  EXPECT_EQ(customer.columns[1], (ColumnSchema{"name", "TEXT", false, {}}));
  EXPECT_EQ(customer.columns[2], (ColumnSchema{"home town", "VARCHAR(40)", false, {}}));

  const auto& orders = schema.tables[1];
  EXPECT_EQ(orders.name, "orders");
  ASSERT_EQ(orders.columns.size(), 3u);
  EXPECT_TRUE(orders.columns[0].is_primary_key);
  EXPECT_FALSE(orders.columns[1].is_primary_key);

  ASSERT_EQ(schema.foreign_keys.size(), 1u);
  EXPECT_EQ(schema.foreign_keys[0], (ForeignKey{"orders", "customer_id", "customer", "id"}));
}

TEST_F(ScratchDir, ImplicitForeignKeyTargetResolvesToPrimaryKey) {
  const auto path = dir_ / "implicit.sqlite";
  testing::create_database(path, R"(
    CREATE TABLE parent (pk TEXT PRIMARY KEY);
    CREATE TABLE child (ref TEXT REFERENCES parent);
  )");
  const auto schema = introspect_database(path, "implicit");
  ASSERT_EQ(schema.foreign_keys.size(), 1u);
  EXPECT_EQ(schema.foreign_keys[0], (ForeignKey{"child", "ref", "parent", "pk"}));
}

TEST_F(ScratchDir, DanglingForeignKeysAreDropped) {
  const auto path = dir_ / "dangling.sqlite";
  testing::create_database(path, "CREATE TABLE t (x INTEGER REFERENCES missing(id));");
  const auto schema = introspect_database(path, "dangling");
  EXPECT_TRUE(schema.foreign_keys.empty());
}

TEST_F(ScratchDir, SampleValuesAreFirstDistinctNonNull) {
  const auto path = dir_ / "values.sqlite";
  testing::create_database(path, R"(
    CREATE TABLE t (a TEXT, b INTEGER);
    INSERT INTO t VALUES (NULL, 1), ('x', 1), ('x', 2), ('y', 3), ('z', 4);
  )");
  const auto schema = introspect_database(path, "values", 2);
  const auto& cols = schema.tables.at(0).columns;
  EXPECT_EQ(cols[0].sample_values, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(cols[1].sample_values, (std::vector<std::string>{"1", "2"}));

  const auto none = introspect_database(path, "values");
  EXPECT_TRUE(none.tables.at(0).columns[0].sample_values.empty());
}

TEST_F(ScratchDir, EmptyDatabaseHasNoTables) {
  const auto path = dir_ / "empty.sqlite";
  testing::create_database(path, "");
  EXPECT_TRUE(introspect_database(path, "empty").tables.empty());
}

TEST_F(ScratchDir, MissingFileRaisesFileNotFound) {
  EXPECT_THROW(introspect_database(dir_ / "nope.sqlite", "nope"), FileNotFound);
}

TEST_F(ScratchDir, GarbageFileRaisesNotADatabase) {
  const auto path = dir_ / "garbage.sqlite";
  std::ofstream(path) << std::string(4096, 'x');
  EXPECT_THROW(introspect_database(path, "garbage"), NotADatabase);
}

TEST(SchemaCatalog, IntrospectsFixtureConcertSinger) {
  const auto& corpus = shared_fixture_corpus();
  const auto schema = introspect_database(corpus.db_path("concert_singer"), "concert_singer");
  std::vector<std::string> names;
  for (const auto& t : schema.tables) names.push_back(t.name);
  EXPECT_EQ(names, (std::vector<std::string>{"stadium", "singer", "concert", "singer_in_concert"}));
  ASSERT_NE(schema.find_table("STADIUM"), nullptr);
  EXPECT_TRUE(schema.find_table("Stadium")->has_column("capacity"));
  EXPECT_EQ(schema.foreign_keys.size(), 3u);
}

TEST(SchemaCatalog, ListsCorpusDatabasesSorted) {
  const auto& corpus = shared_fixture_corpus();
  const auto ids = list_corpus_databases(corpus.root);
  ASSERT_EQ(ids.size(), testing::fixture_databases().size());
  EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
  EXPECT_EQ(corpus_database_path(corpus.root, "singer"), corpus.root / "database" / "singer" / "singer.sqlite");
}

TEST(SchemaCatalog, KeyColumnNamesCoverPrimaryAndForeignKeys) {
  const auto& corpus = shared_fixture_corpus();
  const auto schema = introspect_database(corpus.db_path("soccer_2"), "soccer_2");
  auto keys = schema.key_column_names();
  std::sort(keys.begin(), keys.end());
  EXPECT_EQ(keys, (std::vector<std::string>{"cname", "pid"}));
}

TEST(RenderPrompt, ReproducesConcertSingerReferencePrompt) {
  const auto& corpus = shared_fixture_corpus();
  const auto schema = introspect_database(corpus.db_path("concert_singer"), "concert_singer");
  const auto prompt = render_prompt(schema.tables, "How many singers do we have?");
  EXPECT_EQ(prompt, testing::normalize_typeset(testing::kConcertSingerPromptTypeset));
  EXPECT_NE(prompt.find("-- Using valid SQLite, answer the following questions for the tables provided above.\n"),
            std::string::npos);
}

TEST(RenderPrompt, ReproducesSoccerReferencePrompt) {
  const auto& corpus = shared_fixture_corpus();
  const auto schema = introspect_database(corpus.db_path("soccer_2"), "soccer_2");
  EXPECT_EQ(render_prompt(schema.tables, testing::kSoccerQuestion),
            testing::normalize_typeset(testing::kSoccerPromptTypeset));
}

TEST(RenderPrompt, MinimalCase) {
  const std::vector<TableSchema> tables = {{"t", {{"c", "", false, {}}}}};
  EXPECT_EQ(render_prompt(tables, "?"),
            "CREATE TABLE t(c);\n"
            "-- Using valid SQLite, answer the following questions for the tables provided above.\n"
            "-- ?\n");
}

TEST(RenderPrompt, LineCountsAndPurity) {
  const auto& corpus = shared_fixture_corpus();
  for (const auto& id : list_corpus_databases(corpus.root)) {
    const auto schema = introspect_database(corpus.db_path(id), id);
    const auto a = render_prompt(schema.tables, "Which rows?");
    const auto b = render_prompt(schema.tables, "Which rows?");
    EXPECT_EQ(a, b);
    EXPECT_EQ(count_lines_starting_with(a, "CREATE TABLE "), schema.tables.size()) << id;
    EXPECT_EQ(count_lines_starting_with(a, "-- "), 2u) << id;
  }
}

TEST(RenderPrompt, QuotesSpecialIdentifiers) {
  const std::vector<TableSchema> tables = {{"stops", {{"stop id", "", false, {}}, {"km/h", "", false, {}}}}};
  EXPECT_EQ(render_prompt(tables, "q").substr(0, 38), "CREATE TABLE stops(\"stop id\", \"km/h\");");
  EXPECT_EQ(render_identifier("plain_Name1"), "plain_Name1");
  EXPECT_EQ(render_identifier("a\"b c"), "\"a\"\"b c\"");
}

TEST(RenderPrompt, ExtendedModeAddsTypesAndValues) {
  const std::vector<TableSchema> tables = {{"t", {{"id", "INTEGER", true, {"1", "2"}}, {"name", "TEXT", false, {}}}}};
  PromptOptions options;
  options.include_types = true;
  options.include_sample_values = true;
  const auto prompt = render_prompt(tables, "q", options);
  EXPECT_NE(prompt.find("INTEGER"), std::string::npos);
  EXPECT_NE(prompt.find("PRIMARY KEY"), std::string::npos);
  EXPECT_NE(prompt.find("1, 2"), std::string::npos);
  EXPECT_EQ(count_lines_starting_with(prompt, "-- "), 2u);
}

TEST(RenderPrompt, RejectsEmptyInputs) {
  EXPECT_THROW(render_prompt({}, "q"), EmptySchemaList);
  const std::vector<TableSchema> tables = {{"t", {{"c", "", false, {}}}}};
  EXPECT_THROW(render_prompt(tables, ""), InvalidInput);
}

TEST(SchemaJson, RoundTrips) {
  const auto& corpus = shared_fixture_corpus();
  const auto schema = introspect_database(corpus.db_path("transit"), "transit", 2);
  const nlohmann::json j = schema;
  EXPECT_TRUE(j.contains("db_id"));
  EXPECT_TRUE(j.contains("tables"));
  EXPECT_TRUE(j.contains("foreign_keys"));
  EXPECT_EQ(j.get<DatabaseSchema>(), schema);
}

}  // namespace
}  // namespace sqlforge
