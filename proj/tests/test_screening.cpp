#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "fake_chat_server.hpp"
#include "schemaref/candidate_gen.hpp"
#include "schemaref/error.hpp"
#include "schemaref/screening.hpp"
#include "test_support.hpp"

using namespace schemaref;
using namespace schemaref::testing;

namespace {

struct PhaseTiny : ::testing::Test {
  TempDir dir;
  std::filesystem::path db = build_fixture_db("tiny_company", dir.path());
  SchemaModel schema = load_schema(db, "A small company.");
  DataSource data{db, schema};
  ColumnId col(const char* t, const char* c) const { return *schema.find_column(t, c); }
};

std::set<std::string> names(const SchemaModel& s, const std::vector<ColumnId>& ids) {
  std::set<std::string> out;
  for (auto id : ids) out.insert(s.qualified_name(id));
  return out;
}

ScreeningContext named(std::string column) {
  ScreeningContext ctx;
  ctx.table = "t";
  ctx.column_name = std::move(column);
  return ctx;
}

class ScriptedGenerator final : public Generator {
public:
  explicit ScriptedGenerator(std::optional<std::vector<std::string>> out) : out_(std::move(out)) {}
  std::string id() const override { return "scripted"; }
  std::optional<std::vector<std::string>> propose(const GenerationContext&, std::size_t) override { return out_; }

private:
  std::optional<std::vector<std::string>> out_;
};

}  // namespace

TEST_F(PhaseTiny, StructuralExclusionsKeepPrimaryKeys) {
  auto ex = structural_exclusions(schema);
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ex[0].column, col("employee", "dept_id"));
  EXPECT_EQ(ex[0].reason, "foreign key");
}

TEST(Screening, CrossTableHomonymsAreImplicitJoinKeys) {
  TempDir dir;
  std::ofstream(dir / "h.sql") << "CREATE TABLE a (id INTEGER PRIMARY KEY, code TEXT);"
                                  "CREATE TABLE b (id2 INTEGER PRIMARY KEY, code TEXT, n INTEGER);"
                                  "CREATE TABLE c (k INTEGER PRIMARY KEY, n TEXT);";
  auto s = load_schema(build_db(dir / "h.sql", dir.path(), "h"));
  auto ex = structural_exclusions(s);
  ASSERT_EQ(ex.size(), 2u);
  for (const auto& e : ex) {
    EXPECT_EQ(s.column(e.column).name, "code");
    EXPECT_EQ(e.reason.rfind("implicit join key", 0), 0u) << e.reason;
  }
}

TEST_F(PhaseTiny, RuleScreenerFlagsDegradedNames) {
  RuleScreener rules;
  auto result = screen(schema, rules, data, 3);
  EXPECT_EQ(names(schema, result.flagged()),
            (std::set<std::string>{"employee.nm", "employee.sal", "department.dept_nm"}));
  EXPECT_EQ(result.excluded.size(), 1u);
  EXPECT_EQ(result.unflagged_count(), 2u);
  EXPECT_EQ(result.verdicts.size() + result.excluded.size(), schema.column_count());
  for (const auto& v : result.verdicts) {
    EXPECT_EQ(v.source, "rules");
    for (const auto& e : result.excluded) EXPECT_NE(v.column, e.column);
  }
  auto again = screen(schema, rules, data, 1);
  EXPECT_EQ(again.flagged(), result.flagged());
}

TEST(RuleScreener, Rules) {
  RuleScreener rules;
  EXPECT_FALSE(rules.assess(named("employee_name")).flagged);
  EXPECT_TRUE(rules.assess(named("nm")).flagged);
  EXPECT_TRUE(rules.assess(named("dept_nm")).flagged);
  EXPECT_TRUE(rules.assess(named("c12")).flagged);
  EXPECT_TRUE(rules.assess(named("value")).flagged);
  EXPECT_TRUE(rules.assess(named("code")).flagged);
  EXPECT_FALSE(rules.assess(named("salary")).flagged);
  EXPECT_FALSE(rules.assess(named("department_id")).flagged);
}

TEST_F(PhaseTiny, ScreeningContextCarriesFiveSignals) {
  auto ctx = build_screening_context(schema, col("employee", "sal"), data);
  EXPECT_EQ(ctx.domain_description, "A small company.");
  EXPECT_EQ(ctx.table, "employee");
  EXPECT_EQ(ctx.column_name, "sal");
  EXPECT_EQ(ctx.data_type, "INTEGER");
  EXPECT_EQ(ctx.neighbor_columns, (std::vector<std::string>{"emp_id", "nm", "dept_id"}));
  EXPECT_EQ(ctx.sample_rows.size(), 4u);
  EXPECT_EQ(*ctx.sample_rows[0][1], "Alice");
  auto j = nlohmann::json::parse(ctx.serialize());
  EXPECT_EQ(j["column"], "sal");
}

TEST_F(PhaseTiny, LlmScreenerParsesAnswersAndFailsOpen) {
  EXPECT_TRUE(LlmScreener::parse_answer("Yes, it is an abbreviation").flagged);
  EXPECT_FALSE(LlmScreener::parse_answer("no.").flagged);
  EXPECT_TRUE(LlmScreener::parse_answer("**Maybe**").flagged);

  std::string prompt;
  FakeChatServer server([&](const nlohmann::json& body) {
    prompt = body["messages"].back()["content"].get<std::string>();
    return std::string("No, it is clear.");
  });
  LlmScreener llm("stub", server.endpoint());
  auto result = screen(schema, llm, data, 1);
  EXPECT_NE(prompt.find(kScreeningQuestion), std::string::npos);
  EXPECT_EQ(result.verdicts.size(), 5u);
  EXPECT_TRUE(result.flagged().empty());
  EXPECT_EQ(server.requests(), 5);

  ChatEndpoint dead;
  dead.base_url = "http://127.0.0.1:1/v1";
  dead.timeout = std::chrono::milliseconds(300);
  dead.max_retries = 0;
  LlmScreener offline("dead", dead);
  auto fallback = screen(schema, offline, data, 2);
  EXPECT_EQ(fallback.flagged().size(), 5u);
}

TEST_F(PhaseTiny, GenerationContextSamples) {
  auto ctx = build_context(schema, col("employee", "sal"), data, 11);
  EXPECT_EQ(ctx.target_samples.size(), 4u);
  EXPECT_EQ(ctx.neighbors.size(), 3u);
  EXPECT_EQ(ctx.serialize(), build_context(schema, col("employee", "sal"), data, 11).serialize());
}

TEST(GenerationContext, CapsAtTwentyAndHandlesEmptyTables) {
  TempDir dir;
  std::string sql = "CREATE TABLE big (v INTEGER); CREATE TABLE empty (e TEXT);";
  for (int i = 0; i < 100; ++i) sql += "INSERT INTO big VALUES (" + std::to_string(i) + ");";
  std::ofstream(dir / "big.sql") << sql;
  auto db = build_db(dir / "big.sql", dir.path(), "big");
  auto s = load_schema(db);
  DataSource d(db, s);
  auto ctx = build_context(s, {0, 0}, d, 3);
  EXPECT_EQ(ctx.target_samples.size(), kDefaultTargetSamples);
  EXPECT_EQ(std::set<std::string>(ctx.target_samples.begin(), ctx.target_samples.end()).size(), 20u);
  EXPECT_EQ(build_context(s, {0, 0}, d, 3).target_samples, ctx.target_samples);
  EXPECT_TRUE(build_context(s, {1, 0}, d, 3).target_samples.empty());
}

TEST_F(PhaseTiny, DictionaryGeneratorCandidates) {
  DictionaryGenerator dict;
  auto nm = generate(schema, build_context(schema, col("employee", "nm"), data, 1), dict);
  EXPECT_EQ(nm.candidates, (std::vector<std::string>{"employee_name", "name", "full_name"}));
  EXPECT_EQ(nm.augmented(), (std::vector<std::string>{"nm", "employee_name", "name", "full_name"}));
  auto sal = generate(schema, build_context(schema, col("employee", "sal"), data, 1), dict);
  EXPECT_EQ(sal.augmented().size(), 4u);
  auto dept = generate(schema, build_context(schema, col("department", "dept_nm"), data, 1), dict);
  EXPECT_EQ(dept.augmented().size(), 3u);
  EXPECT_EQ(dept.candidates.front(), "department_name");
  EXPECT_EQ(*dict.propose(build_context(schema, col("employee", "nm"), data, 1), 3),
            *dict.propose(build_context(schema, col("employee", "nm"), data, 1), 3));
}

TEST_F(PhaseTiny, GenerateFiltersInvalidDuplicateAndCollidingNames) {
  ScriptedGenerator g(std::vector<std::string>{"nm", "Sal", "Employee Name", "employee_name", "9lives", "dept_id",
                                               "full_name", "extra"});
  auto ctx = build_context(schema, col("employee", "nm"), data, 1);
  auto set = generate(schema, ctx, g, 2);
  EXPECT_EQ(set.candidates, (std::vector<std::string>{"employee_name", "_9lives"}));
  EXPECT_EQ(set.augmented().front(), "nm");
  for (const auto& c : generate(schema, ctx, g, 8).candidates) {
    EXPECT_NO_THROW(apply_rename(schema, col("employee", "nm"), c)) << c;
  }
  ScriptedGenerator down(std::nullopt);
  auto empty = generate(schema, ctx, down);
  EXPECT_TRUE(empty.candidates.empty());
  EXPECT_EQ(empty.augmented(), std::vector<std::string>{"nm"});
  EXPECT_THROW(generate(schema, ctx, g, 0), Error);
}

TEST_F(PhaseTiny, DictionaryFileOverlay) {
  std::ofstream(dir / "abbr.tsv") << "# comment\nnm\tmoniker,label_text\n";
  auto dict = DictionaryGenerator::from_file(dir / "abbr.tsv");
  auto set = generate(schema, build_context(schema, col("employee", "nm"), data, 1), dict);
  EXPECT_EQ(set.candidates.front(), "employee_moniker");
  EXPECT_NE(DictionaryGenerator::builtin_table().count("sal"), 0u);
}

TEST_F(PhaseTiny, LlmGeneratorReadsJsonArray) {
  std::string prompt;
  FakeChatServer server([&](const nlohmann::json& body) {
    prompt = body["messages"].back()["content"].get<std::string>();
    return std::string("Here you go: [\"employee_name\", \"Staff Name\", \"sal\"]");
  });
  LlmGenerator llm("stub", server.endpoint());
  auto ctx = build_context(schema, col("employee", "nm"), data, 1);
  auto set = generate(schema, ctx, llm);
  EXPECT_EQ(set.candidates, (std::vector<std::string>{"employee_name", "staff_name"}));
  EXPECT_NE(prompt.find("Alice"), std::string::npos);

  FakeChatServer garbage([](const nlohmann::json&) { return std::string("no list today"); });
  LlmGenerator bad("stub", garbage.endpoint());
  EXPECT_TRUE(generate(schema, ctx, bad).candidates.empty());
}
