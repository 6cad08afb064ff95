// Database access layer resolution over a PHP corpus.
#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sqlblock/php_parser.hpp"
#include "sqlblock/text_util.hpp"

namespace sqlblock::php {

using NameSet = std::set<std::string, text::ICaseLess>;

struct DalSet {
  NameSet seeds;
  NameSet subclasses;  // always includes the seeds
  NameSet procedures;  // `f` or `Class::method`

  bool is_dal_class(std::string_view name) const;
  bool is_procedure(std::string_view identity) const;
  std::uint64_t fingerprint() const;

  bool operator==(const DalSet&) const;
};

class DalFormatError : public std::runtime_error {
 public:
  DalFormatError(int line, const std::string& what);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// `# seeds: ...` comment, then sorted `S`/`P` lines.
std::string serialize_dal(const DalSet& dal);
DalSet parse_dal(std::string_view text);

enum class EdgeKind { Extends, Implements };

struct Cdg {
  NameSet vertices;
  // child -> parents; each parent listed once per relation found.
  std::map<std::string, std::vector<std::pair<std::string, EdgeKind>>, text::ICaseLess> parents;
  NameSet interfaces;

  std::size_t edge_count() const;
  bool has_edge(std::string_view child, std::string_view parent) const;
};

Cdg build_cdg(const std::vector<PhpDecl>& decls);

struct AnalyzerOptions {
  std::vector<std::string> seeds{"PDO", "mysqli"};
  std::vector<std::string> initializers{"mysqli_init", "mysqli_connect"};
};

// Seeds, their descendants, classes calling an initializer and their
// descendants, plus interfaces implemented directly by any of those.
NameSet resolve_dal_classes(const Cdg& cdg, const std::vector<PhpDecl>& decls, const AnalyzerOptions& opts);

// Anchored, case-insensitive regex for a class-name expression evaluated in
// the scope of `scope_decl` (may be null for a literal-only expression).
std::string resolve_string_expr(const StringExpr& expr, const std::vector<PhpDecl>& decls, const PhpDecl* scope_decl);

NameSet find_db_procedures(const std::vector<PhpDecl>& decls, const NameSet& dal_classes);

struct AnalysisResult {
  DalSet dal;
  std::vector<std::string> warnings;
  std::size_t files_scanned = 0;
};

DalSet analyze_decls(const std::vector<PhpDecl>& decls, const AnalyzerOptions& opts = {});

// Reads `.php` files (and any file starting with `<?php`) under root in
// sorted path order. Unreadable or unparsable files become warnings.
AnalysisResult analyze_corpus(const std::filesystem::path& root, const AnalyzerOptions& opts = {});

}  // namespace sqlblock::php
