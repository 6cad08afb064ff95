#include "sqlblock/training.hpp"

#include "sqlblock/sql_parser.hpp"
#include "sqlblock/tagging.hpp"

namespace sqlblock::profile {

MalformedRecord::MalformedRecord(int line, const std::string& reason)
    : std::runtime_error("training record at line " + std::to_string(line) + ": " + reason), line_(line) {}

namespace {

bool has_blank_line(std::string_view s) {
  for (auto l : text::split(s, '\n')) {
    if (text::trim(l).empty()) return true;
  }
  return false;
}

std::vector<sql::SqlStatement> parse_nonempty(const std::string& sql) {
  auto stmts = sql::parse_statements(sql);
  if (stmts.empty()) throw sql::ParseError(0, "a statement");
  return stmts;
}

}  // namespace

TrainingRecord record_training(std::string_view tagged_query) {
  if (tagged_query.empty() || has_blank_line(tagged_query)) {
    throw MalformedRecord(0, "query must be non-empty and contain no blank line");
  }
  tag::Decoded d = tag::decode_tag(tagged_query);
  auto stmts = parse_nonempty(d.sql);
  TrainingRecord rec;
  rec.tagged_query = std::string(tagged_query);
  rec.node_info = sql::node_info(stmts);
  rec.table_op = sql::table_op(stmts);
  return rec;
}

std::string format_record(const TrainingRecord& rec) {
  return rec.tagged_query + "\n" + rec.node_info + "\n" + rec.table_op + "\n";
}

std::vector<TrainingRecord> parse_training_log(std::string_view in, std::vector<std::string>* errors) {
  std::vector<TrainingRecord> out;
  std::vector<std::string_view> block;
  int block_line = 0;
  int ln = 0;
  auto close = [&] {
    if (block.empty()) return;
    if (block.size() < 3) {
      if (errors) {
        errors->push_back(MalformedRecord(block_line, "expected query, node_info and table_op lines").what());
      }
    } else {
      TrainingRecord rec;
      for (std::size_t i = 0; i + 2 < block.size(); ++i) {
        if (i) rec.tagged_query.push_back('\n');
        rec.tagged_query += block[i];
      }
      rec.node_info = std::string(block[block.size() - 2]);
      rec.table_op = std::string(block.back());
      rec.line = block_line;
      out.push_back(std::move(rec));
    }
    block.clear();
  };
  for (std::string_view line : text::split(in, '\n')) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::trim(line).empty()) {
      close();
      continue;
    }
    if (block.empty()) block_line = ln;
    block.push_back(line);
  }
  close();
  return out;
}

std::vector<QueryDescriptor> descriptors_from_record(const TrainingRecord& rec) {
  std::optional<tag::Decoded> d = tag::try_decode_tag(rec.tagged_query);
  if (!d) throw MalformedRecord(rec.line, "query carries no call-stack tag");
  std::vector<sql::SqlStatement> stmts;
  try {
    stmts = parse_nonempty(d->sql);
  } catch (const sql::SqlError& e) {
    throw MalformedRecord(rec.line, e.what());
  }
  std::string ni = sql::node_info(stmts);
  if (ni != rec.node_info) throw MalformedRecord(rec.line, "node_info does not match query (expected " + ni + ")");
  std::string to = sql::table_op(stmts);
  if (to != rec.table_op) throw MalformedRecord(rec.line, "table_op does not match query (expected " + to + ")");
  std::vector<QueryDescriptor> out;
  out.reserve(stmts.size());
  for (const auto& s : stmts) out.push_back(descriptor_from_signature(sql::extract_signature(s)));
  return out;
}

QueryDescriptor descriptor_from_record(const TrainingRecord& rec) {
  auto ds = descriptors_from_record(rec);
  if (ds.size() != 1) throw MalformedRecord(rec.line, "record holds " + std::to_string(ds.size()) + " statements");
  return ds.front();
}

BuildReport build_profile(const std::vector<TrainingRecord>& records, const php::DalSet& dal) {
  BuildReport r;
  r.profile.dal_fingerprint = text::hex64(dal.fingerprint());
  for (const TrainingRecord& rec : records) {
    try {
      auto descs = descriptors_from_record(rec);
      tag::Attribution who = tag::attribute(tag::decode_tag(rec.tagged_query).frames, dal);
      if (who.all_in_dal) {
        r.warnings.push_back("line " + std::to_string(rec.line) + ": every frame is access layer; attributed to " +
                             who.identity);
      }
      auto& set = r.profile.entries[who.identity];
      set.insert(descs.begin(), descs.end());
      ++r.used;
    } catch (const std::exception& e) {
      r.errors.push_back(e.what());
    }
  }
  if (r.used == 0) throw BuildFailed("no usable training records");
  return r;
}

}  // namespace sqlblock::profile
