#include "sqlblock/dal.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

#include "sqlblock/io.hpp"

namespace sqlblock::php {

bool DalSet::is_dal_class(std::string_view name) const {
  return subclasses.find(name) != subclasses.end() || seeds.find(name) != seeds.end();
}

bool DalSet::is_procedure(std::string_view identity) const { return procedures.find(identity) != procedures.end(); }

std::uint64_t DalSet::fingerprint() const { return text::fnv1a64(serialize_dal(*this)); }

bool DalSet::operator==(const DalSet& o) const {
  auto same = [](const NameSet& a, const NameSet& b) { return std::equal(a.begin(), a.end(), b.begin(), b.end()); };
  return same(seeds, o.seeds) && same(subclasses, o.subclasses) && same(procedures, o.procedures);
}

DalFormatError::DalFormatError(int line, const std::string& what)
    : std::runtime_error("dal line " + std::to_string(line) + ": " + what), line_(line) {}

std::string serialize_dal(const DalSet& dal) {
  std::vector<std::string> lines;
  for (const auto& s : dal.subclasses) lines.push_back("S " + s);
  for (const auto& p : dal.procedures) lines.push_back("P " + p);
  std::sort(lines.begin(), lines.end());
  std::ostringstream os;
  os << "# sqlblock database access layer\n# seeds:";
  for (const auto& s : dal.seeds) os << ' ' << s;
  os << '\n';
  for (const auto& l : lines) os << l << '\n';
  return os.str();
}

DalSet parse_dal(std::string_view in) {
  DalSet dal;
  int ln = 0;
  for (std::string_view raw : text::split(in, '\n')) {
    ++ln;
    std::string_view line = text::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view kSeeds = "# seeds:";
      if (line.substr(0, kSeeds.size()) == kSeeds) {
        std::istringstream ss{std::string(line.substr(kSeeds.size()))};
        for (std::string s; ss >> s;) {
          dal.seeds.insert(s);
          dal.subclasses.insert(s);
        }
      }
      continue;
    }
    if (line.size() < 3 || line[1] != ' ') throw DalFormatError(ln, "expected 'S <class>' or 'P <procedure>'");
    std::string name(text::trim(line.substr(2)));
    if (name.empty()) throw DalFormatError(ln, "empty name");
    if (line[0] == 'S') dal.subclasses.insert(name);
    else if (line[0] == 'P') dal.procedures.insert(name);
    else throw DalFormatError(ln, "unknown entry kind '" + std::string(1, line[0]) + "'");
  }
  return dal;
}

// ---------------------------------------------------------------------------
// Class dependency graph

std::size_t Cdg::edge_count() const {
  std::size_t n = 0;
  for (const auto& [child, ps] : parents) n += ps.size();
  return n;
}

bool Cdg::has_edge(std::string_view child, std::string_view parent) const {
  auto it = parents.find(child);
  if (it == parents.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(),
                     [&](const auto& p) { return text::iequals(p.first, parent); });
}

Cdg build_cdg(const std::vector<PhpDecl>& decls) {
  Cdg g;
  for (const PhpDecl& d : decls) {
    if (d.kind != DeclKind::Class && d.kind != DeclKind::Interface) continue;
    g.vertices.insert(d.name);
    if (d.kind == DeclKind::Interface) g.interfaces.insert(d.name);
  }
  for (const PhpDecl& d : decls) {
    if (d.kind != DeclKind::Class && d.kind != DeclKind::Interface) continue;
    auto& ps = g.parents[d.name];
    auto add = [&](const std::string& p, EdgeKind k) {
      g.vertices.insert(p);
      bool dup = std::any_of(ps.begin(), ps.end(), [&](const auto& e) { return text::iequals(e.first, p); });
      if (!dup) ps.emplace_back(p, k);
    };
    for (const auto& p : d.extends) add(p, EdgeKind::Extends);
    for (const auto& p : d.implements) {
      add(p, EdgeKind::Implements);
      g.interfaces.insert(p);
    }
  }
  return g;
}

NameSet resolve_dal_classes(const Cdg& cdg, const std::vector<PhpDecl>& decls, const AnalyzerOptions& opts) {
  NameSet core(opts.seeds.begin(), opts.seeds.end());

  NameSet inits(opts.initializers.begin(), opts.initializers.end());
  for (const PhpDecl& d : decls) {
    if (d.kind != DeclKind::Method || !d.owner) continue;
    bool calls_init = std::any_of(d.calls.begin(), d.calls.end(), [&](const std::string& c) { return inits.count(c); });
    if (!calls_init) continue;
    // Keep the declared spelling of the owner.
    auto v = cdg.vertices.find(*d.owner);
    core.insert(v != cdg.vertices.end() ? *v : *d.owner);
  }

  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& [child, ps] : cdg.parents) {
      if (core.count(child)) continue;
      bool reaches = std::any_of(ps.begin(), ps.end(), [&](const auto& p) { return core.count(p.first) > 0; });
      if (reaches) {
        core.insert(child);
        grew = true;
      }
    }
  }

  // Interfaces implemented by access-layer classes are part of the layer's
  // surface, but do not pull in their other implementers.
  NameSet out = core;
  for (const auto& name : core) {
    auto it = cdg.parents.find(name);
    if (it == cdg.parents.end()) continue;
    for (const auto& [p, kind] : it->second) {
      if (kind == EdgeKind::Implements) out.insert(p);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// String folding

namespace {

constexpr int kMaxDepth = 16;
constexpr std::string_view kAny = ".*";

std::string regex_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::string_view("\\^$.|?*+()[]{}").find(c) != std::string_view::npos) out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

void push_any(std::string& out) {
  if (out.size() < kAny.size() || out.compare(out.size() - kAny.size(), kAny.size(), kAny) != 0 ||
      (out.size() > kAny.size() && out[out.size() - kAny.size() - 1] == '\\')) {
    out += kAny;
  }
}

struct Scope {
  const std::vector<PhpDecl>& decls;

  // Last assignment to `var` in `d` before position `before`; properties
  // fall back to assignments anywhere in the owning class.
  std::pair<const PhpDecl*, std::size_t> lookup(const std::string& var, const PhpDecl* d, std::size_t before) const {
    if (!d) return {nullptr, 0};
    for (std::size_t k = std::min(before, d->assigns.size()); k-- > 0;) {
      if (d->assigns[k].variable == var) return {d, k};
    }
    if (var.rfind("this->", 0) == 0 && d->owner) {
      std::pair<const PhpDecl*, std::size_t> found{nullptr, 0};
      for (const PhpDecl& m : decls) {
        if (&m == d || m.kind != DeclKind::Method || !m.owner || !text::iequals(*m.owner, *d->owner)) continue;
        for (std::size_t k = 0; k < m.assigns.size(); ++k) {
          if (m.assigns[k].variable == var) found = {&m, k};
        }
      }
      return found;
    }
    return {nullptr, 0};
  }

  void fold(const StringExpr& e, const PhpDecl* d, std::size_t before, int depth, std::string& out) const {
    for (const StrPart& p : e.parts) {
      switch (p.kind) {
        case StrPart::Kind::Literal:
          out += regex_escape(p.text);
          break;
        case StrPart::Kind::Call:
          push_any(out);
          break;
        case StrPart::Kind::Var:
          fold_var(p.text, d, before, depth, out);
          break;
      }
    }
  }

  void fold_var(const std::string& var, const PhpDecl* d, std::size_t before, int depth, std::string& out) const {
    auto [owner, idx] = lookup(var, d, before);
    if (!owner || depth >= kMaxDepth) {
      push_any(out);
      return;
    }
    const PhpExpr& v = owner->assigns[idx].value;
    if (v.kind == PhpExpr::Kind::String) fold(v.str, owner, idx, depth + 1, out);
    else if (v.kind == PhpExpr::Kind::Var) fold_var(v.name, owner, idx, depth + 1, out);
    else push_any(out);
  }
};

class ClassMatcher {
 public:
  explicit ClassMatcher(const NameSet& classes) : classes_(classes) {}

  bool any(const std::string& pattern) {
    auto [it, fresh] = cache_.try_emplace(pattern, false);
    if (!fresh) return it->second;
    std::regex re(pattern, std::regex::ECMAScript | std::regex::icase);
    it->second = std::any_of(classes_.begin(), classes_.end(), [&](const std::string& c) { return std::regex_match(c, re); });
    return it->second;
  }

 private:
  const NameSet& classes_;
  std::map<std::string, bool> cache_;
};

}  // namespace

std::string resolve_string_expr(const StringExpr& expr, const std::vector<PhpDecl>& decls, const PhpDecl* scope_decl) {
  std::string out;
  Scope{decls}.fold(expr, scope_decl, scope_decl ? scope_decl->assigns.size() : 0, 0, out);
  return out;
}

NameSet find_db_procedures(const std::vector<PhpDecl>& decls, const NameSet& dal_classes) {
  Scope scope{decls};
  ClassMatcher matcher(dal_classes);
  NameSet procs;

  // True if `e`, evaluated in `d` before assignment `before`, yields an
  // access-layer object.
  auto yields_dal = [&](auto&& self, const PhpExpr& e, const PhpDecl& d, std::size_t before, int depth) -> bool {
    if (depth >= kMaxDepth) return false;
    switch (e.kind) {
      case PhpExpr::Kind::New: {
        std::string pat;
        scope.fold(e.str, &d, before, 0, pat);
        return matcher.any(pat);
      }
      case PhpExpr::Kind::Var: {
        auto [owner, idx] = scope.lookup(e.name, &d, before);
        return owner && self(self, owner->assigns[idx].value, *owner, idx, depth + 1);
      }
      case PhpExpr::Kind::Call:
        return !e.name.empty() && procs.count(e.name) > 0;
      default:
        return false;
    }
  };

  for (bool grew = true; grew;) {
    grew = false;
    for (const PhpDecl& d : decls) {
      if (d.kind != DeclKind::Function && d.kind != DeclKind::Method) continue;
      if (d.owner && dal_classes.count(*d.owner)) continue;
      std::string id = d.identity();
      if (procs.count(id)) continue;
      bool hit = std::any_of(d.returns.begin(), d.returns.end(), [&](const ReturnExpr& r) {
        return yields_dal(yields_dal, r.value, d, d.assigns.size(), 0);
      });
      if (hit) {
        procs.insert(id);
        grew = true;
      }
    }
  }
  return procs;
}

DalSet analyze_decls(const std::vector<PhpDecl>& decls, const AnalyzerOptions& opts) {
  DalSet dal;
  dal.seeds.insert(opts.seeds.begin(), opts.seeds.end());
  Cdg cdg = build_cdg(decls);
  dal.subclasses = dal.seeds;
  NameSet classes = resolve_dal_classes(cdg, decls, opts);
  dal.subclasses.insert(classes.begin(), classes.end());
  dal.procedures = find_db_procedures(decls, dal.subclasses);
  return dal;
}

AnalysisResult analyze_corpus(const std::filesystem::path& root, const AnalyzerOptions& opts) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError(root, "not a readable directory");

  std::vector<fs::path> files;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec), end;
  if (ec) throw IoError(root, ec.message());
  AnalysisResult result;
  for (; it != end; it.increment(ec)) {
    if (ec) {
      result.warnings.push_back(root.string() + ": " + ec.message());
      ec.clear();
      continue;
    }
    if (it->is_regular_file(ec)) files.push_back(it->path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });

  std::vector<PhpDecl> decls;
  for (const fs::path& f : files) {
    std::string rel = f.lexically_relative(root).generic_string();
    std::string src;
    try {
      src = read_file(f);
    } catch (const IoError& e) {
      result.warnings.push_back(e.what());
      continue;
    }
    bool php = text::iequals(f.extension().string(), ".php") || src.rfind("<?php", 0) == 0;
    if (!php) continue;
    ++result.files_scanned;
    try {
      auto part = parse_php(src, rel);
      decls.insert(decls.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    } catch (const PhpParseError& e) {
      result.warnings.push_back(std::string("skipped ") + e.what());
    }
  }
  result.dal = analyze_decls(decls, opts);
  return result;
}

}  // namespace sqlblock::php
