#include "schemaref/view_layer.hpp"

#include "schemaref/identifier.hpp"

namespace schemaref {

std::string ViewDef::create_statement(bool temporary) const {
  return std::string("CREATE ") + (temporary ? "TEMP " : "") + "VIEW " + quote_identifier(table) + " AS " +
         select_sql;
}

std::vector<std::string> ViewLayer::ddl() const {
  std::vector<std::string> out;
  for (const auto& v : views) out.push_back(v.create_statement(false));
  return out;
}

std::vector<ViewDef> build_view_defs(const SchemaModel& schema, const RefinementMapping& mapping) {
  std::vector<ViewDef> out;
  for (const auto& table : schema.tables()) {
    std::string sql = "SELECT ";
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      const auto& col = table.columns[i];
      if (i) sql += ", ";
      sql += quote_identifier(col.name) + " AS " + quote_identifier(mapping.name_of(schema, col.id));
    }
    sql += " FROM " + std::string(kBaseSchemaName) + "." + quote_identifier(table.name);
    out.push_back({table.name, std::move(sql)});
  }
  return out;
}

}  // namespace schemaref
