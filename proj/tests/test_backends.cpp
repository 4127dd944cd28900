#include <gtest/gtest.h>

#include <cstdlib>

#include "fake_chat_server.hpp"
#include "schemaref/backend.hpp"
#include "schemaref/data_source.hpp"
#include "schemaref/llm_client.hpp"
#include "test_support.hpp"

using namespace schemaref;
using namespace schemaref::testing;

namespace {

struct BackendTiny : ::testing::Test {
  TempDir dir;
  std::filesystem::path db = build_fixture_db("tiny_company", dir.path());
  SchemaModel schema = load_schema(db);
  DataSource data{db, schema};
  ColumnId col(const char* t, const char* c) const { return *schema.find_column(t, c); }
};

}  // namespace

TEST_F(BackendTiny, MockFollowsColumnNames) {
  MockBackend mock;
  auto renamed = apply_rename(schema, col("employee", "nm"), "employee_name");
  EXPECT_EQ(mock.infer(make_request("what is the employee name", renamed, &data)).predicted_sql,
            "SELECT employee_name FROM employee");
  const auto degraded = mock.infer(make_request("what is the employee name", schema, &data)).predicted_sql;
  EXPECT_EQ(degraded.find("nm"), std::string::npos) << degraded;
}

TEST_F(BackendTiny, MockCountsAndFilters) {
  MockBackend mock;
  EXPECT_EQ(mock.infer(make_request("How many employees are there?", schema, &data)).predicted_sql,
            "SELECT COUNT(*) FROM employee");
  auto clean = apply_rename(apply_rename(schema, col("employee", "nm"), "employee_name"), col("employee", "sal"),
                            "salary");
  EXPECT_EQ(mock.infer(make_request("What is the salary of employee Alice?", clean, &data)).predicted_sql,
            "SELECT salary FROM employee WHERE employee_name = 'Alice'");
}

TEST_F(BackendTiny, MockIsDeterministic) {
  MockBackend mock;
  auto req = make_request("List every department name.", schema, &data);
  EXPECT_EQ(mock.infer(req).predicted_sql, mock.infer(req).predicted_sql);
}

TEST_F(BackendTiny, RequestShowsCurrentNamesOnly) {
  auto renamed = apply_rename(schema, col("employee", "nm"), "employee_name");
  auto text = make_request("q", renamed, &data).serialize_schema();
  EXPECT_NE(text.find("employee_name"), std::string::npos);
  EXPECT_EQ(text.find(" nm "), std::string::npos);
  EXPECT_NE(make_request("q", renamed, &data).schema_fingerprint(), make_request("q", schema, &data).schema_fingerprint());
}

TEST_F(BackendTiny, CachingBackendReplays) {
  TempDir cache_dir;
  const auto file = cache_dir / "responses.jsonl";
  auto req = make_request("List every employee name.", schema, &data);
  {
    auto cache = std::make_shared<ResponseCache>(file);
    CachingBackend backend(std::make_shared<MockBackend>(), cache);
    auto first = backend.infer(req);
    auto second = backend.infer(req);
    EXPECT_EQ(first.predicted_sql, second.predicted_sql);
    EXPECT_EQ(backend.inner_calls(), 1u);
    EXPECT_EQ(backend.hits(), 1u);
    EXPECT_EQ(backend.misses(), 1u);
  }
  auto reloaded = std::make_shared<ResponseCache>(file);
  EXPECT_EQ(reloaded->size(), 1u);
  CachingBackend replay(std::make_shared<MockBackend>(), reloaded, true);
  EXPECT_FALSE(replay.infer(req).failed);
  EXPECT_EQ(replay.inner_calls(), 0u);
  auto miss = replay.infer(make_request("something never asked", schema, &data));
  EXPECT_TRUE(miss.failed);
  EXPECT_EQ(replay.inner_calls(), 0u);
  EXPECT_EQ(replay.misses(), 1u);
}

TEST(ResponseCacheKey, DependsOnEveryPart) {
  auto k = ResponseCache::key("m", "f", "q");
  EXPECT_EQ(k.size(), 64u);
  EXPECT_NE(k, ResponseCache::key("m2", "f", "q"));
  EXPECT_NE(k, ResponseCache::key("m", "f2", "q"));
  EXPECT_NE(k, ResponseCache::key("m", "f", "q2"));
}

TEST(ExtractSql, FencesAndBareSelect) {
  EXPECT_EQ(extract_sql("Here:\n```sql\nSELECT 1\n```\nbye"), "SELECT 1");
  EXPECT_EQ(extract_sql("The answer is\nSELECT a\nFROM t\n\nthanks"), "SELECT a\nFROM t");
  EXPECT_EQ(extract_sql("no query here"), "");
  auto arr = extract_string_array("sure: [\"a\", \"b\"] done");
  ASSERT_TRUE(arr);
  EXPECT_EQ(*arr, (std::vector<std::string>{"a", "b"}));
  EXPECT_FALSE(extract_string_array("[1, 2]"));
}

TEST_F(BackendTiny, LlmBackendAgainstLocalServer) {
  std::string seen_prompt;
  FakeChatServer server([&](const nlohmann::json& body) {
    seen_prompt = body["messages"][1]["content"].get<std::string>();
    return std::string("```sql\nSELECT nm FROM employee\n```");
  });
  auto endpoint = server.endpoint();
  ::setenv("SCHEMAREF_TEST_KEY", "secret", 1);
  endpoint.api_key_env = "SCHEMAREF_TEST_KEY";
  LlmBackend llm("stub", endpoint, 2);
  auto resp = llm.infer(make_request("List every employee name.", schema, &data));
  EXPECT_FALSE(resp.failed) << resp.error;
  EXPECT_EQ(resp.predicted_sql, "SELECT nm FROM employee");
  EXPECT_NE(seen_prompt.find("List every employee name."), std::string::npos);
  EXPECT_NE(seen_prompt.find("employee"), std::string::npos);
  EXPECT_EQ(server.last_authorization(), "Bearer secret");
}

TEST_F(BackendTiny, LlmBackendFailuresAreData) {
  FakeChatServer server([](const nlohmann::json&) { return std::string(); }, 500);
  LlmBackend llm("stub", server.endpoint());
  auto resp = llm.infer(make_request("q", schema, &data));
  EXPECT_TRUE(resp.failed);
  EXPECT_NE(resp.error.find("500"), std::string::npos);

  ChatEndpoint dead;
  dead.base_url = "http://127.0.0.1:1/v1";
  dead.timeout = std::chrono::milliseconds(500);
  dead.max_retries = 0;
  EXPECT_TRUE(LlmBackend("dead", dead).infer(make_request("q", schema, &data)).failed);
}

TEST_F(BackendTiny, LlmBackendWithoutSqlFails) {
  FakeChatServer server([](const nlohmann::json&) { return std::string("I cannot help"); });
  auto resp = LlmBackend("stub", server.endpoint()).infer(make_request("q", schema, &data));
  EXPECT_TRUE(resp.failed);
}
