#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "schemaref/error.hpp"
#include "schemaref/identifier.hpp"
#include "schemaref/schema.hpp"
#include "test_support.hpp"

using namespace schemaref;
using namespace schemaref::testing;

namespace {

struct SchemaTiny : ::testing::Test {
  TempDir dir;
  std::filesystem::path db = build_fixture_db("tiny_company", dir.path());
  SchemaModel schema = load_schema(db);

  ColumnId col(const char* t, const char* c) const { return *schema.find_column(t, c); }
};

ColumnRef column(std::string name, bool pk = false) {
  ColumnRef c;
  c.name = std::move(name);
  c.data_type = "TEXT";
  c.is_pk = pk;
  return c;
}

}  // namespace

TEST_F(SchemaTiny, LoadsCatalog) {
  EXPECT_EQ(schema.db_id(), "tiny_company");
  EXPECT_EQ(schema.tables().size(), 2u);
  EXPECT_EQ(schema.column_count(), 6u);
  ASSERT_EQ(schema.foreign_keys().size(), 1u);
  EXPECT_EQ(schema.foreign_keys()[0].child, col("employee", "dept_id"));
  EXPECT_EQ(schema.foreign_keys()[0].parent, col("department", "dept_id"));
  EXPECT_TRUE(schema.column(col("employee", "emp_id")).is_pk);
  EXPECT_TRUE(schema.column(col("employee", "dept_id")).is_fk);
  EXPECT_FALSE(schema.column(col("employee", "nm")).is_fk);
  EXPECT_EQ(schema.column(col("employee", "sal")).data_type, "INTEGER");
}

TEST_F(SchemaTiny, ScopeOfForeignKeyIncludesParent) {
  std::set<ColumnId> expected{col("employee", "emp_id"), col("employee", "nm"), col("employee", "sal"),
                              col("employee", "dept_id"), col("department", "dept_id")};
  auto scope = scope_of(schema, col("employee", "dept_id"));
  EXPECT_EQ(std::set<ColumnId>(scope.begin(), scope.end()), expected);
}

TEST_F(SchemaTiny, ScopeIsSymmetricOverForeignKeys) {
  auto parent = scope_of(schema, col("department", "dept_id"));
  EXPECT_NE(std::find(parent.begin(), parent.end(), col("employee", "dept_id")), parent.end());
  auto nm = scope_of(schema, col("employee", "nm"));
  EXPECT_EQ(std::find(nm.begin(), nm.end(), col("department", "dept_nm")), nm.end());
}

TEST_F(SchemaTiny, UnknownColumnScopeThrows) { EXPECT_THROW(scope_of(schema, ColumnId{7, 0}), Error); }

TEST_F(SchemaTiny, IdentityMappingIsAdmissible) { EXPECT_TRUE(check_admissible(schema, {}).ok()); }

TEST_F(SchemaTiny, SameTableDuplicateIsViolation) {
  RefinementMapping r;
  r.entries[col("employee", "nm")] = "salary";
  r.entries[col("employee", "sal")] = "Salary";
  auto v = check_admissible(schema, r);
  ASSERT_EQ(v.violations.size(), 1u);
  EXPECT_EQ(v.violations[0].first, col("employee", "nm"));
  EXPECT_EQ(v.violations[0].second, col("employee", "sal"));
}

TEST_F(SchemaTiny, RenameToUntouchedSiblingsOldSpellingIsFine) {
  RefinementMapping r;
  r.entries[col("employee", "nm")] = "salary";
  EXPECT_TRUE(check_admissible(schema, r).ok());
}

TEST_F(SchemaTiny, NonKeyColumnsAcrossForeignKeyAreNotInOneScope) {
  RefinementMapping r;
  r.entries[col("employee", "nm")] = "name";
  r.entries[col("department", "dept_nm")] = "name";
  EXPECT_TRUE(check_admissible(schema, r).ok());
}

TEST_F(SchemaTiny, ForeignKeyParentCollisionIsViolation) {
  RefinementMapping r;
  r.entries[col("employee", "nm")] = "dept_id";
  EXPECT_FALSE(check_admissible(schema, r).ok());
  RefinementMapping s;
  s.entries[col("department", "dept_nm")] = "nm";
  EXPECT_TRUE(check_admissible(schema, s).ok());
  s.entries[col("department", "dept_nm")] = "dept_id";
  EXPECT_FALSE(check_admissible(schema, s).ok());
}

TEST_F(SchemaTiny, ApplyRenameChangesOneName) {
  auto renamed = apply_rename(schema, col("employee", "nm"), "employee_name");
  EXPECT_EQ(renamed.column(col("employee", "nm")).name, "employee_name");
  EXPECT_EQ(renamed.column(col("employee", "nm")).original_name, "nm");
  EXPECT_EQ(schema.column(col("employee", "nm")).name, "nm");
  int differing = 0;
  for (auto id : schema.column_ids())
    if (schema.column(id).name != renamed.column(id).name) ++differing;
  EXPECT_EQ(differing, 1);
  auto back = apply_rename(renamed, col("employee", "nm"), "nm");
  EXPECT_EQ(back, schema);
  EXPECT_EQ(apply_rename(schema, col("employee", "nm"), "nm"), schema);
}

TEST_F(SchemaTiny, ApplyRenameRejectsDuplicatesAndBadIdentifiers) {
  EXPECT_THROW(apply_rename(schema, col("employee", "nm"), "sal"), Error);
  EXPECT_THROW(apply_rename(schema, col("employee", "nm"), "1abc"), Error);
  EXPECT_THROW(apply_rename(schema, col("employee", "nm"), "has space"), Error);
}

TEST(Schema, MissingFileThrows) {
  TempDir dir;
  EXPECT_THROW(load_schema(dir / "missing.sqlite"), Error);
}

TEST(Schema, DatabaseWithoutForeignKeys) {
  TempDir dir;
  std::ofstream(dir / "flat.sql") << "CREATE TABLE a (x INTEGER, y TEXT);";
  auto db = build_db(dir / "flat.sql", dir.path(), "flat");
  auto s = load_schema(db);
  EXPECT_TRUE(s.foreign_keys().empty());
  EXPECT_EQ(s.column_count(), 2u);
}

TEST(Schema, EmptySchemaIsHardError) {
  TempDir dir;
  std::ofstream(dir / "none.sql") << "PRAGMA user_version = 1;";
  auto db = build_db(dir / "none.sql", dir.path(), "none");
  EXPECT_THROW(load_schema(db), Error);
}

TEST(Schema, SingleColumnTableScopeIsItself) {
  SchemaModel s("x", {TableDef{"solo", {column("only")}}}, {});
  EXPECT_EQ(scope_of(s, {0, 0}), (std::vector<ColumnId>{ColumnId{0, 0}}));
}

TEST(Schema, CrossTableHomonymWithoutForeignKeyIsPermitted) {
  SchemaModel s("x", {TableDef{"a", {column("id", true), column("label")}}, TableDef{"b", {column("code")}}}, {});
  RefinementMapping r;
  r.entries[{1, 0}] = "label";
  EXPECT_TRUE(check_admissible(s, r).ok());
}

TEST(Schema, CoReferencingForeignKeysMayShareAName) {
  SchemaModel s("x",
                {TableDef{"p", {column("pid", true)}}, TableDef{"a", {column("p_ref")}},
                 TableDef{"b", {column("parent")}}},
                {ForeignKey{{1, 0}, {0, 0}}, ForeignKey{{2, 0}, {0, 0}}});
  RefinementMapping r;
  r.entries[{0, 0}] = "parent_id";
  r.entries[{1, 0}] = "parent_id";
  r.entries[{2, 0}] = "parent_id";
  EXPECT_TRUE(check_admissible(s, r).ok());
}

namespace {

// Independent oracle: scopes recomputed from the FK list, then every pair
// of columns scanned.
std::set<std::pair<ColumnId, ColumnId>> oracle_violations(const SchemaModel& s, const RefinementMapping& r) {
  auto ids = s.column_ids();
  auto linked = [&](ColumnId a, ColumnId b) {
    for (const auto& fk : s.foreign_keys())
      if ((fk.child == a && fk.parent == b) || (fk.child == b && fk.parent == a)) return true;
    return false;
  };
  auto parents_of = [&](ColumnId a) {
    std::set<ColumnId> out;
    for (const auto& fk : s.foreign_keys())
      if (fk.child == a) out.insert(fk.parent);
    return out;
  };
  auto in_scope = [&](ColumnId owner, ColumnId x) { return owner.table == x.table || linked(owner, x); };
  std::set<std::pair<ColumnId, ColumnId>> out;
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      ColumnId a = ids[i], b = ids[j];
      if (to_lower(r.name_of(s, a)) != to_lower(r.name_of(s, b))) continue;
      bool shared = false;
      for (ColumnId o : ids)
        if (in_scope(o, a) && in_scope(o, b)) shared = true;
      if (!shared) continue;
      if (linked(a, b)) continue;
      if (to_lower(s.column(a).original_name) == to_lower(s.column(b).original_name)) continue;
      if (a.table != b.table) {
        auto pa = parents_of(a), pb = parents_of(b);
        bool common = false;
        for (auto p : pa)
          if (pb.count(p)) common = true;
        if (common) continue;
      }
      out.insert({a, b});
    }
  return out;
}

}  // namespace

TEST(SchemaProperty, AdmissibilityAgreesWithPairwiseScan) {
  std::mt19937_64 rng(20241016);
  const std::vector<std::string> pool{"a", "b", "c", "name", "id", "code"};
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n_tables = 1 + rng() % 3;
    std::vector<TableDef> tables;
    std::size_t total = 0;
    for (std::size_t t = 0; t < n_tables && total < 8; ++t) {
      TableDef def{"t" + std::to_string(t), {}};
      const std::size_t n_cols = 1 + rng() % 3;
      for (std::size_t c = 0; c < n_cols && total < 8; ++c, ++total)
        def.columns.push_back(column("c" + std::to_string(t) + "_" + std::to_string(c), c == 0));
      tables.push_back(std::move(def));
    }
    std::vector<ForeignKey> fks;
    for (std::size_t t = 1; t < tables.size(); ++t)
      if (rng() % 2) fks.push_back({{t, tables[t].columns.size() - 1}, {rng() % t, 0}});
    SchemaModel s("rand", tables, fks);
    RefinementMapping r;
    for (auto id : s.column_ids())
      if (rng() % 2) r.entries[id] = pool[rng() % pool.size()];

    std::set<std::pair<ColumnId, ColumnId>> got;
    for (const auto& v : check_admissible(s, r).violations) got.insert({std::min(v.first, v.second), std::max(v.first, v.second)});
    ASSERT_EQ(got, oracle_violations(s, r)) << "trial " << trial;
  }
}

TEST(Identifier, PlainIdentifiersAndQuoting) {
  EXPECT_TRUE(is_plain_identifier("employee_name"));
  EXPECT_TRUE(is_plain_identifier("_x1"));
  EXPECT_FALSE(is_plain_identifier("1x"));
  EXPECT_FALSE(is_plain_identifier(""));
  EXPECT_FALSE(is_plain_identifier("a-b"));
  EXPECT_EQ(quote_identifier("a\"b"), "\"a\"\"b\"");
  EXPECT_EQ(quote_literal("it's"), "'it''s'");
  EXPECT_TRUE(iequals("Name", "nAME"));
  EXPECT_EQ(normalize_candidate(" Employee Name "), "employee_name");
}
