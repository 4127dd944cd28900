#include "schemaref/backend.hpp"

#include <cctype>
#include <chrono>
#include <set>

#include <json.hpp>

#include "schemaref/error.hpp"
#include "schemaref/hashing.hpp"
#include "schemaref/identifier.hpp"
#include "schemaref/log.hpp"

namespace schemaref {

using nlohmann::json;

std::string Text2SqlRequest::serialize_schema() const {
  std::string out;
  for (const auto& t : tables) {
    out += "CREATE TABLE " + quote_identifier(t.name) + " (\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      const auto& c = t.columns[i];
      out += "  " + quote_identifier(c.name);
      if (!c.type.empty()) out += " " + c.type;
      if (c.is_pk) out += " PRIMARY KEY";
      bool last = i + 1 == t.columns.size();
      for (const auto& fk : foreign_keys)
        if (fk.child_table == t.name) last = false;
      out += last ? "\n" : ",\n";
    }
    std::vector<const PromptForeignKey*> own;
    for (const auto& fk : foreign_keys)
      if (fk.child_table == t.name) own.push_back(&fk);
    for (std::size_t i = 0; i < own.size(); ++i) {
      out += "  FOREIGN KEY (" + quote_identifier(own[i]->child_column) + ") REFERENCES " +
             quote_identifier(own[i]->parent_table) + "(" + quote_identifier(own[i]->parent_column) + ")";
      out += i + 1 == own.size() ? "\n" : ",\n";
    }
    out += ");\n";
    if (!t.sample_rows.empty()) {
      out += "/* " + std::to_string(t.sample_rows.size()) + " example rows:\n";
      for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? " | " : "") + t.columns[i].name;
      out += "\n";
      for (const auto& row : t.sample_rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? " | " : "") + row[i].value_or("NULL");
        out += "\n";
      }
      out += "*/\n";
    }
  }
  return out;
}

std::string Text2SqlRequest::schema_fingerprint() const { return sha256_hex(serialize_schema()); }

Text2SqlRequest make_request(const std::string& question, const SchemaModel& schema, const DataSource* data,
                             std::size_t samples_per_table) {
  Text2SqlRequest req;
  req.question = question;
  for (std::size_t t = 0; t < schema.tables().size(); ++t) {
    const auto& table = schema.tables()[t];
    PromptTable pt{table.name, {}, {}};
    for (const auto& c : table.columns) pt.columns.push_back({c.name, c.data_type, c.is_pk});
    if (data && samples_per_table > 0) pt.sample_rows = data->sample_rows(t, samples_per_table);
    req.tables.push_back(std::move(pt));
  }
  for (const auto& fk : schema.foreign_keys()) {
    const auto& child = schema.column(fk.child);
    const auto& parent = schema.column(fk.parent);
    req.foreign_keys.push_back({child.table, child.name, parent.table, parent.name});
  }
  return req;
}

// ---------------------------------------------------------------------------
// Mock backend

namespace {

std::vector<std::string> word_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string fold_plural(const std::string& t) {
  return t.size() > 3 && t.back() == 's' ? t.substr(0, t.size() - 1) : t;
}

double overlap(const std::string& name, const std::set<std::string>& question) {
  auto toks = word_tokens(name);
  if (toks.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& t : toks)
    if (question.count(fold_plural(t))) ++hit;
  return static_cast<double>(hit) / static_cast<double>(toks.size());
}

bool is_number(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end && *end == '\0';
}

}  // namespace

Text2SqlResponse MockBackend::infer(const Text2SqlRequest& req) {
  Text2SqlResponse resp;
  resp.backend_id = id_;
  if (req.tables.empty()) {
    resp.failed = true;
    resp.error = "empty schema";
    return resp;
  }
  const auto raw = word_tokens(req.question);
  std::set<std::string> folded;
  for (const auto& t : raw) folded.insert(fold_plural(t));
  const std::set<std::string> raw_set(raw.begin(), raw.end());

  if (raw.empty()) {
    resp.predicted_sql = "SELECT * FROM " + quote_identifier(req.tables.front().name);
    return resp;
  }

  std::size_t best_table = 0;
  double best_score = -1;
  std::vector<std::vector<double>> col_scores(req.tables.size());
  for (std::size_t t = 0; t < req.tables.size(); ++t) {
    double total = overlap(req.tables[t].name, folded);
    for (const auto& c : req.tables[t].columns) {
      col_scores[t].push_back(overlap(c.name, folded));
      total += col_scores[t].back();
    }
    if (total > best_score) {
      best_score = total;
      best_table = t;
    }
  }
  const auto& table = req.tables[best_table];
  const auto& scores = col_scores[best_table];

  std::vector<std::string> select;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] >= 1.0) select.push_back(quote_identifier(table.columns[i].name));
  if (select.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
      if (scores[i] > scores[best]) best = i;
    if (!scores.empty() && scores[best] > 0) select.push_back(quote_identifier(table.columns[best].name));
  }

  std::string sql = "SELECT ";
  const bool count = raw.size() >= 2 && raw[0] == "how" && raw[1] == "many";
  if (count) {
    sql += "COUNT(*)";
  } else if (select.empty()) {
    sql += "*";
  } else {
    for (std::size_t i = 0; i < select.size(); ++i) sql += (i ? ", " : "") + select[i];
  }
  sql += " FROM " + quote_identifier(table.name);

  bool where_done = false;
  for (std::size_t c = 0; c < table.columns.size() && !where_done; ++c) {
    for (const auto& row : table.sample_rows) {
      if (c >= row.size() || !row[c] || is_number(*row[c])) continue;
      const auto value_tokens = word_tokens(*row[c]);
      if (value_tokens.empty()) continue;
      bool all = true;
      for (const auto& v : value_tokens) all = all && raw_set.count(v);
      if (all) {
        sql += " WHERE " + quote_identifier(table.columns[c].name) + " = " + quote_literal(*row[c]);
        where_done = true;
        break;
      }
    }
  }
  resp.predicted_sql = std::move(sql);
  return resp;
}

// ---------------------------------------------------------------------------
// LLM backend

LlmBackend::LlmBackend(std::string id, ChatEndpoint endpoint, int max_in_flight)
    : id_(std::move(id)), endpoint_(std::move(endpoint)), max_in_flight_(std::max(1, max_in_flight)) {}

std::vector<ChatMessage> LlmBackend::build_prompt(const Text2SqlRequest& request) {
  std::string user = "### SQLite database schema\n" + request.serialize_schema() +
                     "\n### Question\n" + request.question +
                     "\n\nWrite one SQLite SELECT query that answers the question. "
                     "Return only the query inside a ```sql code block.";
  return {{"system", "You translate natural-language questions into SQL for the given database schema."},
          {"user", std::move(user)}};
}

Text2SqlResponse LlmBackend::infer(const Text2SqlRequest& request) {
  {
    std::unique_lock lock(mutex_);
    slots_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
    ++in_flight_;
  }
  const auto start = std::chrono::steady_clock::now();
  auto reply = chat_complete(endpoint_, build_prompt(request));
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  slots_.notify_one();

  Text2SqlResponse resp;
  resp.backend_id = id_;
  resp.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (!reply.content) {
    resp.failed = true;
    resp.error = reply.error;
    return resp;
  }
  resp.predicted_sql = extract_sql(*reply.content);
  if (resp.predicted_sql.empty()) {
    resp.failed = true;
    resp.error = "no SQL in response";
  }
  return resp;
}

// ---------------------------------------------------------------------------
// Caching

ResponseCache::ResponseCache(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(file_);
  std::string line;
  while (std::getline(in, line)) {
    auto rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.contains("key") || !rec.contains("sql")) continue;
    entries_[rec["key"].get<std::string>()] = rec["sql"].get<std::string>();
  }
}

std::string ResponseCache::key(const std::string& backend_id, const std::string& fingerprint,
                               const std::string& question) {
  return sha256_hex(backend_id + '\x1f' + fingerprint + '\x1f' + question);
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const std::string& key, const std::string& sql) {
  std::lock_guard lock(mutex_);
  if (!entries_.emplace(key, sql).second) return;
  if (file_.empty()) return;
  if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
  std::ofstream out(file_, std::ios::app);
  out << json{{"key", key}, {"sql", sql}}.dump() << '\n';
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

CachingBackend::CachingBackend(std::shared_ptr<Text2SqlBackend> inner, std::shared_ptr<ResponseCache> cache,
                               bool replay_only)
    : inner_(std::move(inner)), cache_(std::move(cache)), replay_only_(replay_only) {
  if (!inner_ || !cache_) throw Error("CachingBackend needs a backend and a cache");
}

Text2SqlResponse CachingBackend::infer(const Text2SqlRequest& request) {
  const auto key = ResponseCache::key(inner_->id(), request.schema_fingerprint(), request.question);
  if (auto hit = cache_->get(key)) {
    ++hits_;
    return Text2SqlResponse{*hit, false, {}, inner_->id(), 0};
  }
  ++misses_;
  if (replay_only_) return Text2SqlResponse{{}, true, "not in cache", inner_->id(), 0};
  ++inner_calls_;
  auto resp = inner_->infer(request);
  if (!resp.failed) cache_->put(key, resp.predicted_sql);
  return resp;
}

}  // namespace schemaref
