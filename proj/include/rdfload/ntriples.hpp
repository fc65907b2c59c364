#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rdfload {

inline constexpr std::string_view kXsdString = "http://www.w3.org/2001/XMLSchema#string";

enum class TermKind : std::uint8_t { iri, blank_node, literal };

/// An RDF term. `datatype` and `language` are empty when absent and are only
/// ever set on literals. Plain literals carry no datatype (xsd:string is implicit).
struct Term {
  TermKind kind = TermKind::iri;
  std::string value;
  std::string datatype;
  std::string language;

  static Term iri(std::string v);
  static Term blank(std::string label);
  static Term literal(std::string lexical, std::string datatype = {}, std::string language = {});

  bool operator==(const Term&) const = default;
};

struct Triple {
  Term subject;
  Term predicate;
  Term object;

  bool operator==(const Triple&) const = default;
};

bool is_valid_blank_label(std::string_view label);
bool is_valid_language_tag(std::string_view tag);

/// Throws std::invalid_argument describing the first violated term invariant.
void validate(const Term& t);
/// Throws std::invalid_argument if the triple breaks a position constraint.
void validate(const Triple& t);
bool is_valid(const Triple& t) noexcept;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, std::string token, const std::string& message);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& token() const noexcept { return token_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string token_;
};

/// Parses one N-Triples line (without its terminator). Returns nullopt for
/// blank and comment-only lines; throws ParseError otherwise.
std::optional<Triple> parse_line(std::string_view line, std::size_t line_number = 1);

/// Parses a single serialized term, e.g. `<http://a>` or `"x"@en`.
Term parse_term(std::string_view text);

enum class ParseMode : std::uint8_t { strict, lenient };

struct ParsedTriple {
  std::size_t line;
  Triple triple;
};

/// Pull-based streaming reader. Holds one line at a time; accepts LF and CRLF.
class NTriplesReader {
 public:
  explicit NTriplesReader(std::istream& in, ParseMode mode = ParseMode::strict);

  /// Next triple in file order, or nullopt at end of stream. In strict mode a
  /// malformed line throws ParseError; in lenient mode it is skipped and counted.
  std::optional<ParsedTriple> next();

  std::size_t line_number() const noexcept { return line_no_; }
  std::size_t skipped_lines() const noexcept { return skipped_; }
  /// The first error seen in lenient mode, if any.
  const std::optional<ParseError>& first_skipped_error() const noexcept { return first_error_; }
  /// Largest capacity the line buffer reached; bounded by the longest line.
  std::size_t peak_buffer_bytes() const noexcept { return peak_buffer_; }

 private:
  std::istream& in_;
  ParseMode mode_;
  std::string line_;
  std::size_t line_no_ = 0;
  std::size_t skipped_ = 0;
  std::size_t peak_buffer_ = 0;
  std::optional<ParseError> first_error_;
};

// Canonical serialization: single spaces, " ." + LF, only the escapes the
// grammar requires (`\"`, `\\`, `\n`, `\r` in literals; `\uXXXX` for
// characters IRIREF forbids).

void append_term(std::string& out, const Term& t);
std::string serialize_term(const Term& t);
void append_triple(std::string& out, const Triple& t);
std::string serialize_triple(const Triple& t);

std::size_t term_byte_length(const Term& t) noexcept;
/// Byte length of serialize_triple(t), LF included, computed without building the line.
std::size_t line_byte_length(const Triple& t) noexcept;

}  // namespace rdfload
