#include "rdfload/ntriples.hpp"

#include <istream>
#include <utility>

namespace rdfload {

namespace {

constexpr bool is_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
constexpr bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
constexpr bool is_hex(unsigned char c) {
  return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

// Non-ASCII bytes are accepted wholesale as PN_CHARS_BASE; the stream is assumed UTF-8.
constexpr bool is_pn_chars_u(unsigned char c) { return is_alpha(c) || c == '_' || c == ':' || c >= 0x80; }
constexpr bool is_pn_chars(unsigned char c) { return is_pn_chars_u(c) || is_digit(c) || c == '-'; }

// Characters IRIREF does not allow unescaped.
constexpr bool iri_needs_escape(unsigned char c) {
  return c <= 0x20 || c == '<' || c == '>' || c == '"' || c == '{' || c == '}' || c == '|' || c == '^' ||
         c == '`' || c == '\\';
}

constexpr bool literal_needs_escape(unsigned char c) { return c == '"' || c == '\\' || c == '\n' || c == '\r'; }

constexpr char kHexDigits[] = "0123456789ABCDEF";

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string format_error(std::size_t line, std::size_t column, const std::string& token, const std::string& msg) {
  std::string s = "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg;
  if (!token.empty()) s += " near '" + token + "'";
  return s;
}

class LineParser {
 public:
  LineParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  std::optional<Triple> triple() {
    skip_ws();
    if (at_end() || peek() == '#') return std::nullopt;
    Triple t;
    t.subject = subject();
    require_ws_or_term_start();
    t.predicate = predicate();
    skip_ws();
    t.object = object();
    skip_ws();
    if (at_end() || peek() != '.') fail("expected '.' terminating the statement");
    ++i_;
    skip_ws();
    if (!at_end() && peek() != '#') fail("unexpected content after '.'");
    return t;
  }

  Term single_term() {
    skip_ws();
    Term t = object();
    skip_ws();
    if (!at_end()) fail("unexpected content after term");
    return t;
  }

 private:
  bool at_end() const { return i_ >= s_.size(); }
  unsigned char peek() const { return static_cast<unsigned char>(s_[i_]); }

  void skip_ws() {
    while (!at_end() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }

  void require_ws_or_term_start() { skip_ws(); }

  std::string token_at(std::size_t pos) const {
    std::size_t end = pos;
    while (end < s_.size() && end - pos < 40 && s_[end] != ' ' && s_[end] != '\t') ++end;
    return std::string(s_.substr(pos, end - pos));
  }

  [[noreturn]] void fail(const std::string& msg) { fail_at(i_, msg); }
  [[noreturn]] void fail_at(std::size_t pos, const std::string& msg) {
    std::string tok = pos < s_.size() ? token_at(pos) : std::string("<end of line>");
    throw ParseError(line_, pos + 1, std::move(tok), msg);
  }

  Term subject() {
    if (at_end()) fail("expected subject");
    if (peek() == '<') return Term::iri(iriref());
    if (peek() == '_') return Term::blank(blank_label());
    fail("expected IRI or blank node as subject");
  }

  Term predicate() {
    if (at_end()) fail("expected predicate");
    if (peek() == '<') return Term::iri(iriref());
    fail("expected IRI as predicate");
  }

  Term object() {
    if (at_end()) fail("expected object");
    switch (peek()) {
      case '<':
        return Term::iri(iriref());
      case '_':
        return Term::blank(blank_label());
      case '"':
        return literal();
      default:
        fail("expected IRI, blank node or literal as object");
    }
  }

  std::uint32_t uchar() {
    // positioned on 'u' or 'U' after a backslash
    const std::size_t start = i_ - 1;
    const std::size_t digits = s_[i_] == 'u' ? 4 : 8;
    ++i_;
    if (i_ + digits > s_.size()) fail_at(start, "truncated \\u escape");
    std::uint32_t cp = 0;
    for (std::size_t k = 0; k < digits; ++k) {
      const auto c = static_cast<unsigned char>(s_[i_ + k]);
      if (!is_hex(c)) fail_at(start, "invalid hex digit in \\u escape");
      cp = cp * 16 + static_cast<std::uint32_t>(is_digit(c) ? c - '0' : (c | 0x20) - 'a' + 10);
    }
    i_ += digits;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) fail_at(start, "escape is not a Unicode scalar value");
    return cp;
  }

  std::string iriref() {
    const std::size_t start = i_;
    ++i_;  // '<'
    std::string out;
    while (true) {
      if (at_end()) fail_at(start, "unterminated IRI");
      const unsigned char c = peek();
      if (c == '>') {
        ++i_;
        break;
      }
      if (c == '\\') {
        ++i_;
        if (at_end() || (s_[i_] != 'u' && s_[i_] != 'U')) fail_at(i_ - 1, "invalid escape in IRI");
        append_utf8(out, uchar());
        continue;
      }
      if (iri_needs_escape(c)) fail("character not allowed in IRI");
      out.push_back(static_cast<char>(c));
      ++i_;
    }
    if (out.empty()) fail_at(start, "empty IRI");
    return out;
  }

  std::string blank_label() {
    const std::size_t start = i_;
    if (s_.substr(i_, 2) != "_:") fail("expected '_:' blank node prefix");
    i_ += 2;
    if (at_end() || !(is_pn_chars_u(peek()) || is_digit(peek()))) fail_at(start, "invalid blank node label");
    const std::size_t label_start = i_;
    ++i_;
    while (!at_end() && (is_pn_chars(peek()) || peek() == '.')) ++i_;
    // a label never ends in '.', so trailing dots belong to the statement
    while (s_[i_ - 1] == '.') --i_;
    return std::string(s_.substr(label_start, i_ - label_start));
  }

  Term literal() {
    const std::size_t start = i_;
    ++i_;  // '"'
    std::string lex;
    while (true) {
      if (at_end()) fail_at(start, "unterminated string literal");
      const unsigned char c = peek();
      if (c == '"') {
        ++i_;
        break;
      }
      if (c == '\\') {
        ++i_;
        if (at_end()) fail_at(i_ - 1, "dangling backslash in literal");
        switch (s_[i_]) {
          case 't': lex.push_back('\t'); ++i_; break;
          case 'b': lex.push_back('\b'); ++i_; break;
          case 'n': lex.push_back('\n'); ++i_; break;
          case 'r': lex.push_back('\r'); ++i_; break;
          case 'f': lex.push_back('\f'); ++i_; break;
          case '"': lex.push_back('"'); ++i_; break;
          case '\'': lex.push_back('\''); ++i_; break;
          case '\\': lex.push_back('\\'); ++i_; break;
          case 'u':
          case 'U': append_utf8(lex, uchar()); break;
          default: fail_at(i_ - 1, "invalid escape in literal");
        }
        continue;
      }
      if (c == '\n' || c == '\r') fail("raw line break in literal");
      lex.push_back(static_cast<char>(c));
      ++i_;
    }
    if (!at_end() && peek() == '@') {
      const std::size_t tag_start = ++i_;
      while (!at_end() && (is_alpha(peek()) || is_digit(peek()) || peek() == '-')) ++i_;
      std::string tag(s_.substr(tag_start, i_ - tag_start));
      if (!is_valid_language_tag(tag)) fail_at(tag_start - 1, "invalid language tag");
      return Term::literal(std::move(lex), {}, std::move(tag));
    }
    if (!at_end() && peek() == '^') {
      if (s_.substr(i_, 3) != "^^<") fail("expected '^^<' before datatype IRI");
      i_ += 2;
      return Term::literal(std::move(lex), iriref());
    }
    return Term::literal(std::move(lex));
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t i_ = 0;
};

std::size_t escaped_iri_length(std::string_view v) noexcept {
  std::size_t n = 0;
  for (unsigned char c : v) n += iri_needs_escape(c) ? 6 : 1;
  return n;
}

void append_escaped_iri(std::string& out, std::string_view v) {
  out.push_back('<');
  for (unsigned char c : v) {
    if (iri_needs_escape(c)) {
      out += "\\u00";
      out.push_back(kHexDigits[c >> 4]);
      out.push_back(kHexDigits[c & 0xF]);
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  out.push_back('>');
}

}  // namespace

Term Term::iri(std::string v) { return Term{TermKind::iri, std::move(v), {}, {}}; }

Term Term::blank(std::string label) { return Term{TermKind::blank_node, std::move(label), {}, {}}; }

Term Term::literal(std::string lexical, std::string datatype, std::string language) {
  if (datatype == kXsdString) datatype.clear();
  return Term{TermKind::literal, std::move(lexical), std::move(datatype), std::move(language)};
}

bool is_valid_blank_label(std::string_view label) {
  if (label.empty()) return false;
  const auto first = static_cast<unsigned char>(label.front());
  if (!(is_pn_chars_u(first) || is_digit(first))) return false;
  for (std::size_t k = 1; k < label.size(); ++k) {
    const auto c = static_cast<unsigned char>(label[k]);
    if (!(is_pn_chars(c) || c == '.')) return false;
  }
  return label.back() != '.';
}

bool is_valid_language_tag(std::string_view tag) {
  std::size_t k = 0;
  while (k < tag.size() && is_alpha(static_cast<unsigned char>(tag[k]))) ++k;
  if (k == 0) return false;
  while (k < tag.size()) {
    if (tag[k] != '-') return false;
    const std::size_t start = ++k;
    while (k < tag.size() && (is_alpha(static_cast<unsigned char>(tag[k])) || is_digit(static_cast<unsigned char>(tag[k]))))
      ++k;
    if (k == start) return false;
  }
  return true;
}

namespace {

void validate_iri(std::string_view v, const char* what) {
  if (v.empty()) throw std::invalid_argument(std::string(what) + " IRI is empty");
  for (unsigned char c : v) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' || c == '<' || c == '>')
      throw std::invalid_argument(std::string(what) + " IRI contains whitespace or angle bracket: " + std::string(v));
  }
}

}  // namespace

void validate(const Term& t) {
  switch (t.kind) {
    case TermKind::iri:
      validate_iri(t.value, "term");
      if (!t.datatype.empty() || !t.language.empty())
        throw std::invalid_argument("IRI term carries datatype or language");
      break;
    case TermKind::blank_node:
      if (!is_valid_blank_label(t.value)) throw std::invalid_argument("invalid blank node label: " + t.value);
      if (!t.datatype.empty() || !t.language.empty())
        throw std::invalid_argument("blank node carries datatype or language");
      break;
    case TermKind::literal:
      if (!t.datatype.empty() && !t.language.empty())
        throw std::invalid_argument("literal has both datatype and language");
      if (!t.datatype.empty()) validate_iri(t.datatype, "datatype");
      if (!t.language.empty() && !is_valid_language_tag(t.language))
        throw std::invalid_argument("invalid language tag: " + t.language);
      break;
  }
}

void validate(const Triple& t) {
  if (t.subject.kind == TermKind::literal) throw std::invalid_argument("literal in subject position");
  if (t.predicate.kind != TermKind::iri) throw std::invalid_argument("predicate must be an IRI");
  validate(t.subject);
  validate(t.predicate);
  validate(t.object);
}

bool is_valid(const Triple& t) noexcept {
  try {
    validate(t);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

ParseError::ParseError(std::size_t line, std::size_t column, std::string token, const std::string& message)
    : std::runtime_error(format_error(line, column, token, message)),
      line_(line),
      column_(column),
      token_(std::move(token)) {}

std::optional<Triple> parse_line(std::string_view line, std::size_t line_number) {
  return LineParser(line, line_number).triple();
}

Term parse_term(std::string_view text) { return LineParser(text, 1).single_term(); }

NTriplesReader::NTriplesReader(std::istream& in, ParseMode mode) : in_(in), mode_(mode) {}

std::optional<ParsedTriple> NTriplesReader::next() {
  while (std::getline(in_, line_)) {
    ++line_no_;
    if (line_.capacity() > peak_buffer_) peak_buffer_ = line_.capacity();
    std::string_view view(line_);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    try {
      if (auto t = parse_line(view, line_no_)) return ParsedTriple{line_no_, std::move(*t)};
    } catch (const ParseError& e) {
      if (mode_ == ParseMode::strict) throw;
      if (!first_error_) first_error_ = e;
      ++skipped_;
    }
  }
  if (in_.bad()) throw std::runtime_error("I/O error while reading N-Triples stream");
  return std::nullopt;
}

void append_term(std::string& out, const Term& t) {
  switch (t.kind) {
    case TermKind::iri:
      append_escaped_iri(out, t.value);
      break;
    case TermKind::blank_node:
      out += "_:";
      out += t.value;
      break;
    case TermKind::literal:
      out.push_back('"');
      for (char ch : t.value) {
        switch (ch) {
          case '"': out += "\\\""; break;
          case '\\': out += "\\\\"; break;
          case '\n': out += "\\n"; break;
          case '\r': out += "\\r"; break;
          default: out.push_back(ch);
        }
      }
      out.push_back('"');
      if (!t.language.empty()) {
        out.push_back('@');
        out += t.language;
      } else if (!t.datatype.empty()) {
        out += "^^";
        append_escaped_iri(out, t.datatype);
      }
      break;
  }
}

std::string serialize_term(const Term& t) {
  std::string s;
  s.reserve(term_byte_length(t));
  append_term(s, t);
  return s;
}

void append_triple(std::string& out, const Triple& t) {
  append_term(out, t.subject);
  out.push_back(' ');
  append_term(out, t.predicate);
  out.push_back(' ');
  append_term(out, t.object);
  out += " .\n";
}

std::string serialize_triple(const Triple& t) {
  std::string s;
  s.reserve(line_byte_length(t));
  append_triple(s, t);
  return s;
}

std::size_t term_byte_length(const Term& t) noexcept {
  switch (t.kind) {
    case TermKind::iri:
      return 2 + escaped_iri_length(t.value);
    case TermKind::blank_node:
      return 2 + t.value.size();
    case TermKind::literal: {
      std::size_t n = 2 + t.value.size();
      for (unsigned char c : t.value) n += literal_needs_escape(c) ? 1 : 0;
      if (!t.language.empty()) n += 1 + t.language.size();
      else if (!t.datatype.empty()) n += 2 + 2 + escaped_iri_length(t.datatype);
      return n;
    }
  }
  return 0;
}

std::size_t line_byte_length(const Triple& t) noexcept {
  // two separating spaces plus " .\n"
  return term_byte_length(t.subject) + term_byte_length(t.predicate) + term_byte_length(t.object) + 5;
}

}  // namespace rdfload
