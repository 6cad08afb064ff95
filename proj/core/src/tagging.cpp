#include "sqlblock/tagging.hpp"

#include <cctype>

#include "sqlblock/sql_lexer.hpp"

namespace sqlblock::tag {

InvalidFrame::InvalidFrame(const std::string& frame) : TagError("invalid call-stack frame '" + frame + "'") {}

bool valid_frame(std::string_view frame) noexcept {
  if (frame.empty()) return false;
  for (char c : frame) {
    if (c == '@' || c == '#' || std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::string encode_tag(std::string_view sql, const Frames& frames) {
  if (frames.empty()) throw TagError("call-stack tag needs at least one frame");
  std::string out(sql);
  out += " # ";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!valid_frame(frames[i])) throw InvalidFrame(frames[i]);
    if (i) out.push_back('@');
    out += frames[i];
  }
  return out;
}

namespace {

constexpr std::string_view kDelim = " # ";

std::optional<Frames> split_frames(std::string_view tail) {
  while (!tail.empty() && std::isspace(static_cast<unsigned char>(tail.back()))) tail.remove_suffix(1);
  Frames frames;
  std::size_t start = 0;
  while (true) {
    std::size_t at = tail.find('@', start);
    std::string_view f = tail.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start);
    if (!valid_frame(f)) return std::nullopt;
    frames.emplace_back(f);
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return frames;
}

std::optional<Decoded> split_at(std::string_view tagged, std::size_t pos) {
  auto frames = split_frames(tagged.substr(pos + kDelim.size()));
  if (!frames) return std::nullopt;
  return Decoded{std::string(tagged.substr(0, pos)), std::move(*frames)};
}

// Last delimiter whose `#` sits in a line-comment context. A delimiter after
// an injected `-- ` still counts: the whole tail is one comment either way.
std::optional<std::size_t> last_delimiter(std::string_view tagged) {
  std::vector<sql::Token> toks = sql::tokenize(tagged);
  for (auto it = toks.rbegin(); it != toks.rend(); ++it) {
    if (it->kind != sql::TokenKind::Comment) continue;
    bool line_comment = it->text.front() == '#' || it->text.substr(0, 2) == "--";
    if (!line_comment) continue;
    // Include the space before the comment token itself.
    std::size_t from = it->begin > 0 ? it->begin - 1 : it->begin;
    std::string_view span = tagged.substr(from, it->end - from);
    std::size_t k = span.rfind(kDelim);
    if (k != std::string_view::npos) return from + k;
  }
  return std::nullopt;
}

}  // namespace

std::optional<Decoded> try_decode_tag(std::string_view tagged) {
  std::optional<std::size_t> pos;
  try {
    pos = last_delimiter(tagged);
  } catch (const sql::LexError&) {
    // Broken quoting: fall back to the raw last delimiter.
    std::size_t k = tagged.rfind(kDelim);
    if (k != std::string_view::npos) pos = k;
  }
  if (!pos) return std::nullopt;
  return split_at(tagged, *pos);
}

Decoded decode_tag(std::string_view tagged) {
  auto d = try_decode_tag(tagged);
  if (!d) throw MissingTag();
  return std::move(*d);
}

namespace {

std::string_view class_part(std::string_view frame) {
  for (std::string_view sep : {"::", "->"}) {
    std::size_t k = frame.find(sep);
    if (k != std::string_view::npos) return frame.substr(0, k);
  }
  return {};
}

}  // namespace

Attribution attribute(const Frames& frames, const php::DalSet& dal) {
  if (frames.empty()) throw TagError("cannot attribute an empty call stack");
  for (const std::string& f : frames) {
    std::string_view cls = class_part(f);
    if (!cls.empty() && dal.is_dal_class(cls)) continue;
    std::string id = f;
    for (std::size_t k; (k = id.find("->")) != std::string::npos;) id.replace(k, 2, "::");
    if (dal.is_procedure(id)) continue;
    return {f, false};
  }
  return {frames.back(), true};
}

}  // namespace sqlblock::tag
