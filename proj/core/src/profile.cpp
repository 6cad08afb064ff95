#include "sqlblock/profile.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <tuple>

namespace sqlblock::profile {

bool QueryDescriptor::operator<(const QueryDescriptor& o) const {
  return std::tie(op, tables, cond, funcs) < std::tie(o.op, o.tables, o.cond, o.funcs);
}

QueryDescriptor descriptor_from_signature(const sql::QuerySignature& sig) {
  QueryDescriptor d;
  d.op = sig.op;
  d.tables = sig.tables;
  d.cond = sig.logic;
  d.funcs = sig.func_keys();
  return d;
}

namespace {

template <typename Range, typename Fn>
std::string join(const Range& r, char sep, Fn fn) {
  std::string out;
  bool first = true;
  for (const auto& x : r) {
    if (!first) out.push_back(sep);
    first = false;
    out += fn(x);
  }
  return out;
}

}  // namespace

std::string format_descriptor(const QueryDescriptor& d) {
  std::string s = std::to_string(sql::op_code(d.op));
  s += '|';
  s += join(d.tables, ',', [](const std::string& t) { return t; });
  s += '|';
  s += sql::cond_name(d.cond);
  s += '|';
  s += join(d.funcs, ';', [](const sql::FuncKey& f) {
    return f.name + ":" + sql::arg_kind_name(f.first) + ":" + sql::arg_kind_name(f.rest);
  });
  return s;
}

const DescriptorSet* Profile::find(std::string_view identity) const {
  auto it = entries.find(identity);
  return it == entries.end() ? nullptr : &it->second;
}

FormatError::FormatError(int line, const std::string& what)
    : std::runtime_error("profile line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string body_of(const Profile& p) {
  std::string body;
  for (const auto& [id, set] : p.entries) {
    body += "F " + id + "\n";
    std::vector<std::string> lines;
    for (const auto& d : set) lines.push_back("D " + format_descriptor(d));
    std::sort(lines.begin(), lines.end());
    for (const auto& l : lines) body += l + "\n";
  }
  return body;
}

QueryDescriptor parse_descriptor(std::string_view s, int ln) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    std::size_t bar = s.find('|', start);
    if (bar == std::string_view::npos) throw FormatError(ln, "descriptor needs 4 '|'-separated fields");
    f.push_back(s.substr(start, bar - start));
    start = bar + 1;
  }
  f.push_back(s.substr(start));

  QueryDescriptor d;
  int code = 0;
  auto [p, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), code);
  auto op = ec == std::errc() && p == f[0].data() + f[0].size() ? sql::op_from_code(code) : std::nullopt;
  if (!op) throw FormatError(ln, "bad opcode '" + std::string(f[0]) + "'");
  d.op = *op;
  if (!f[1].empty()) {
    for (auto t : text::split(f[1], ',')) {
      if (t.empty()) throw FormatError(ln, "empty table name");
      d.tables.insert(std::string(t));
    }
  }
  auto cond = sql::cond_from_name(f[2]);
  if (!cond) throw FormatError(ln, "bad cond '" + std::string(f[2]) + "'");
  d.cond = *cond;
  if (!f[3].empty()) {
    for (auto fn : text::split(f[3], ';')) {
      std::size_t c2 = fn.rfind(':');
      std::size_t c1 = c2 == std::string_view::npos || c2 == 0 ? std::string_view::npos : fn.rfind(':', c2 - 1);
      if (c1 == std::string_view::npos || c1 == 0) throw FormatError(ln, "bad function entry '" + std::string(fn) + "'");
      auto first = sql::arg_kind_from_name(fn.substr(c1 + 1, c2 - c1 - 1));
      auto rest = sql::arg_kind_from_name(fn.substr(c2 + 1));
      if (!first || !rest) throw FormatError(ln, "bad argument kind in '" + std::string(fn) + "'");
      d.funcs.insert({std::string(fn.substr(0, c1)), *first, *rest});
    }
  }
  return d;
}

}  // namespace

std::string serialize_profile(const Profile& p) {
  std::string body = body_of(p);
  std::string out(kProfileHeader);
  out += "\nM dal=" + (p.dal_fingerprint.empty() ? std::string("-") : p.dal_fingerprint) +
         " digest=" + text::hex64(text::fnv1a64(body)) + "\n";
  out += body;
  return out;
}

Profile parse_profile(std::string_view in) {
  Profile p;
  auto lines = text::split(in, '\n');
  if (lines.empty() || text::trim(lines[0]) != kProfileHeader) throw FormatError(1, "missing profile header");
  DescriptorSet* cur = nullptr;
  std::string digest;
  std::size_t body_start = std::string_view::npos;
  std::size_t offset = lines[0].size() + 1;
  for (std::size_t i = 1; i < lines.size(); offset += lines[i].size() + 1, ++i) {
    int ln = static_cast<int>(i + 1);
    std::string_view line = lines[i];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') continue;
    if (line.size() < 2 || line[1] != ' ') throw FormatError(ln, "unrecognized line");
    std::string_view rest = line.substr(2);
    switch (line[0]) {
      case 'M': {
        std::istringstream ss{std::string(rest)};
        for (std::string kv; ss >> kv;) {
          if (kv.rfind("dal=", 0) == 0) p.dal_fingerprint = kv.substr(4) == "-" ? "" : kv.substr(4);
          else if (kv.rfind("digest=", 0) == 0) digest = kv.substr(7);
        }
        body_start = offset + lines[i].size() + 1;
        break;
      }
      case 'F': {
        std::string id(text::trim(rest));
        if (id.empty()) throw FormatError(ln, "empty function identity");
        cur = &p.entries[id];
        break;
      }
      case 'D':
        if (!cur) throw FormatError(ln, "descriptor before any function");
        cur->insert(parse_descriptor(rest, ln));
        break;
      default:
        throw FormatError(ln, "unrecognized line");
    }
  }
  if (!digest.empty() && body_start != std::string_view::npos && body_start <= in.size()) {
    std::string_view body = in.substr(body_start);
    if (text::hex64(text::fnv1a64(body)) != digest) throw FormatError(2, "digest does not match profile body");
  }
  return p;
}

}  // namespace sqlblock::profile
