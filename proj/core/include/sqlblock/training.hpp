// Training observations and profile construction.
//
// A log is a sequence of records separated by one blank line; each record is
// the tagged query followed by its node_info and table_op lines.
#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sqlblock/dal.hpp"
#include "sqlblock/profile.hpp"

namespace sqlblock::profile {

struct TrainingRecord {
  std::string tagged_query;
  std::string node_info;
  std::string table_op;
  int line = 0;  // first line in the log, 0 if not from a log
};

class MalformedRecord : public std::runtime_error {
 public:
  MalformedRecord(int line, const std::string& reason);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class BuildFailed : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Throws tag::MissingTag, sql::SqlError, or MalformedRecord (blank lines in
// the query would break the log layout).
TrainingRecord record_training(std::string_view tagged_query);

// The three lines, each newline-terminated.
std::string format_record(const TrainingRecord& rec);

// Structurally broken blocks are reported through `errors` and skipped.
std::vector<TrainingRecord> parse_training_log(std::string_view text, std::vector<std::string>* errors = nullptr);

// Re-derives the record from its query and checks both recorded lines.
std::vector<QueryDescriptor> descriptors_from_record(const TrainingRecord& rec);
QueryDescriptor descriptor_from_record(const TrainingRecord& rec);

struct BuildReport {
  Profile profile;
  std::size_t used = 0;
  std::vector<std::string> errors;    // skipped records
  std::vector<std::string> warnings;  // used, but attributed by fallback
};

// Throws BuildFailed when no record could be used.
BuildReport build_profile(const std::vector<TrainingRecord>& records, const php::DalSet& dal);

}  // namespace sqlblock::profile
