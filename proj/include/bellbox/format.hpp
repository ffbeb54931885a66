#pragma once
// The `.bellbox` text format: scenarios, behaviors, both model families and
// quantum direction sets. Grammar in docs/FORMAT.md.

#include "bellbox/canonical.hpp"
#include "bellbox/error.hpp"
#include "bellbox/models.hpp"
#include "bellbox/number.hpp"
#include "bellbox/quantum.hpp"
#include "bellbox/scenario.hpp"

#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bellbox {

inline constexpr int kFormatVersion = 1;
inline constexpr std::string_view kFormatHeader = "bellbox-format";

/// Setting angles in degrees, as written in a `[quantum]` section.
struct QuantumBlock {
  std::array<std::vector<double>, 2> degrees;
  bool operator==(const QuantumBlock &) const = default;
};

struct ModelDocument {
  int version = kFormatVersion;
  std::optional<std::string> name;
  std::optional<std::string> description;
  Scenario scenario;
  std::variant<Behavior, NonContextualModel, ContextualModel, QuantumBlock> body;

  bool operator==(const ModelDocument &) const = default;
};

enum class Severity { Note, Warning, Error };

enum class DiagCode {
  Syntax,
  UnknownLabel,
  Unnormalized,
  VersionUnsupported,
  Duplicate,
  Missing,
  DecimalConverted,
};

constexpr const char *to_string(Severity s) {
  switch (s) {
  case Severity::Note: return "note";
  case Severity::Warning: return "warning";
  case Severity::Error: return "error";
  }
  return "?";
}

constexpr const char *to_string(DiagCode c) {
  switch (c) {
  case DiagCode::Syntax: return "SYNTAX";
  case DiagCode::UnknownLabel: return "UNKNOWN_LABEL";
  case DiagCode::Unnormalized: return "UNNORMALIZED";
  case DiagCode::VersionUnsupported: return "VERSION_UNSUPPORTED";
  case DiagCode::Duplicate: return "DUPLICATE";
  case DiagCode::Missing: return "MISSING";
  case DiagCode::DecimalConverted: return "DECIMAL_CONVERTED";
  }
  return "?";
}

/// Lines and columns are 1-based; a column may point one past the end of
/// its line (end-of-line diagnostics).
struct Diagnostic {
  Severity severity = Severity::Error;
  DiagCode code = DiagCode::Syntax;
  std::size_t line = 1;
  std::size_t column = 1;
  std::string message;
  std::string token;

  std::string str(std::string_view source_name = "<input>") const {
    std::string out = std::string(source_name) + ":" + std::to_string(line) + ":" +
                      std::to_string(column) + ": " + to_string(severity) + " " +
                      to_string(code) + ": " + message;
    if (!token.empty())
      out += " (at '" + token + "')";
    return out;
  }
};

struct ParseResult {
  std::optional<ModelDocument> document;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return document.has_value(); }
  bool has_errors() const {
    for (const auto &d : diagnostics)
      if (d.severity == Severity::Error)
        return true;
    return false;
  }
};

namespace fmt_detail {

struct Token {
  enum Kind { Word, LBracket, RBracket, Equals, LParen, RParen, Comma, Pipe, Arrow };
  Kind kind;
  std::string text;
  std::size_t column; // 1-based
};

inline bool is_ident_char(unsigned char ch) {
  return std::isalnum(ch) || ch == '_' || ch == '\'' || ch == '.' || ch == '-';
}

inline bool is_ident(std::string_view s) {
  if (s.empty() || s.front() == '-')
    return false;
  for (unsigned char ch : s)
    if (!is_ident_char(ch))
      return false;
  return true;
}

struct Line {
  std::size_t number;
  std::string text; // without comment or line terminator
  std::vector<Token> tokens;
};

struct LexError {
  std::size_t column;
  std::string token;
};

/// Splits one line into tokens; stops at '#'.
inline std::variant<std::vector<Token>, LexError> tokenize(const std::string &text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char ch = text[i];
    if (ch == ' ' || ch == '\t') {
      ++i;
      continue;
    }
    if (ch == '#')
      break;
    const std::size_t col = i + 1;
    auto single = [&](Token::Kind k) {
      out.push_back({k, std::string(1, ch), col});
      ++i;
    };
    switch (ch) {
    case '[': single(Token::LBracket); continue;
    case ']': single(Token::RBracket); continue;
    case '=': single(Token::Equals); continue;
    case '(': single(Token::LParen); continue;
    case ')': single(Token::RParen); continue;
    case ',': single(Token::Comma); continue;
    case '|': single(Token::Pipe); continue;
    default: break;
    }
    if (ch == '-' && i + 1 < text.size() && text[i + 1] == '>') {
      out.push_back({Token::Arrow, "->", col});
      i += 2;
      continue;
    }
    std::size_t j = i;
    while (j < text.size()) {
      const char c = text[j];
      if (c == ' ' || c == '\t' || c == '#' || c == '[' || c == ']' || c == '=' ||
          c == '(' || c == ')' || c == ',' || c == '|')
        break;
      if (c == '-' && j + 1 < text.size() && text[j + 1] == '>')
        break;
      const auto uc = static_cast<unsigned char>(c);
      if (!(is_ident_char(uc) || c == '/' || c == '~' || c == ':' || c == '+'))
        return LexError{j + 1, std::string(1, c)};
      ++j;
    }
    out.push_back({Token::Word, text.substr(i, j - i), col});
    i = j;
  }
  return out;
}

inline bool all_digits(std::string_view s) {
  if (s.empty())
    return false;
  for (char c : s)
    if (c < '0' || c > '9')
      return false;
  return true;
}

/// Best approximation of an exact rational with bounded denominator.
inline Rational best_rational_exact(const Rational &target, std::int64_t max_den) {
  if (boost::multiprecision::denominator(target) <= max_den)
    return target;
  BigInt p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  Rational rem = target;
  while (true) {
    const BigInt a = boost::multiprecision::numerator(rem) /
                     boost::multiprecision::denominator(rem);
    const BigInt q2 = a * q1 + q0;
    if (q2 > max_den) {
      const BigInt k = (BigInt(max_den) - q0) / q1;
      const Rational conv(p1, q1);
      if (k > 0) {
        const Rational semi(p0 + k * p1, q0 + k * q1);
        if (boost::multiprecision::abs(semi - target) <
            boost::multiprecision::abs(conv - target))
          return semi;
      }
      return conv;
    }
    const BigInt p2 = a * p1 + p0;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const Rational frac = rem - Rational(a);
    if (frac == 0)
      return Rational(p1, q1);
    rem = 1 / frac;
  }
}

struct NumberLiteral {
  Number value;
  bool converted_decimal = false;
};

/// Probability literal: p/q, integer, decimal (made rational) or ~float.
inline std::optional<NumberLiteral> parse_probability(std::string_view s) {
  if (s.empty())
    return std::nullopt;
  if (s.front() == '~') {
    const std::string_view body = s.substr(1);
    if (body.empty() || body.front() == '-' || body.front() == '+')
      return std::nullopt;
    double v = 0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec != std::errc() || ptr != body.data() + body.size() || !std::isfinite(v) || v < 0)
      return std::nullopt;
    return NumberLiteral{Number::floating(v), false};
  }
  if (const auto slash = s.find('/'); slash != std::string_view::npos) {
    const auto num = s.substr(0, slash), den = s.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den) || num.size() > 30 || den.size() > 30)
      return std::nullopt;
    const BigInt d{std::string(den)};
    if (d == 0)
      return std::nullopt;
    return NumberLiteral{Number(BigInt(std::string(num)), d), false};
  }
  if (const auto dot = s.find('.'); dot != std::string_view::npos) {
    const auto ip = s.substr(0, dot), fp = s.substr(dot + 1);
    if ((ip.empty() && fp.empty()) || (!ip.empty() && !all_digits(ip)) ||
        (!fp.empty() && !all_digits(fp)) || ip.size() > 30 || fp.size() > 30)
      return std::nullopt;
    BigInt scale = 1;
    for (std::size_t k = 0; k < fp.size(); ++k)
      scale *= 10;
    const BigInt whole = ip.empty() ? BigInt(0) : BigInt(std::string(ip));
    const BigInt frac = fp.empty() ? BigInt(0) : BigInt(std::string(fp));
    const Rational exact(whole * scale + frac, scale);
    return NumberLiteral{Number(best_rational_exact(exact, 1'000'000)), true};
  }
  if (!all_digits(s) || s.size() > 30)
    return std::nullopt;
  return NumberLiteral{Number(BigInt(std::string(s)), BigInt(1)), false};
}

inline std::optional<double> parse_angle(std::string_view s) {
  if (s.empty() || s.front() == '+')
    return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

struct Located {
  std::size_t line = 0, column = 0;
  std::string token;
};

struct ResponseDraft {
  std::vector<Number> values;
  Located at;
};

struct CauseDraft {
  std::string id;
  Number weight;
  Located at;
  // (party, setting) -> distribution
  std::map<std::pair<std::size_t, std::size_t>, ResponseDraft> responses;
};

struct ContextDraft {
  Located at;
  std::vector<CauseDraft> causes;
};

enum class Section { None, Meta, Scenario, Behavior, NonContextual, Contextual, Quantum };

inline std::optional<Section> section_named(std::string_view s) {
  if (s == "meta") return Section::Meta;
  if (s == "scenario") return Section::Scenario;
  if (s == "behavior") return Section::Behavior;
  if (s == "noncontextual") return Section::NonContextual;
  if (s == "contextual") return Section::Contextual;
  if (s == "quantum") return Section::Quantum;
  return std::nullopt;
}

inline const char *section_name(Section s) {
  switch (s) {
  case Section::Meta: return "meta";
  case Section::Scenario: return "scenario";
  case Section::Behavior: return "behavior";
  case Section::NonContextual: return "noncontextual";
  case Section::Contextual: return "contextual";
  case Section::Quantum: return "quantum";
  case Section::None: break;
  }
  return "?";
}

class Parser {
public:
  explicit Parser(std::string_view text) { split_lines(text); }

  ParseResult run() {
    ParseResult out;
    parse_lines();
    if (!fatal_ && !has_error())
      finish(out);
    out.diagnostics = std::move(diags_);
    return out;
  }

private:
  // ---- diagnostics
  void diag(Severity sev, DiagCode code, std::size_t line, std::size_t col,
            std::string msg, std::string token = {}) {
    // Clamp so positions always fall inside the source.
    if (line < 1)
      line = 1;
    if (line > line_lengths_.size())
      line = line_lengths_.size();
    const std::size_t max_col = line_lengths_[line - 1] + 1;
    if (col < 1)
      col = 1;
    if (col > max_col)
      col = max_col;
    diags_.push_back({sev, code, line, col, std::move(msg), std::move(token)});
  }
  void error(DiagCode code, const Line &l, const Token &t, std::string msg) {
    diag(Severity::Error, code, l.number, t.column, std::move(msg), t.text);
  }
  void error_eol(const Line &l, std::string msg) {
    diag(Severity::Error, DiagCode::Syntax, l.number, l.text.size() + 1, std::move(msg));
  }
  void error_at(DiagCode code, const Located &at, std::string msg) {
    diag(Severity::Error, code, at.line, at.column, std::move(msg), at.token);
  }
  bool has_error() const {
    for (const auto &d : diags_)
      if (d.severity == Severity::Error)
        return true;
    return false;
  }

  void split_lines(std::string_view text) {
    std::size_t start = 0;
    std::size_t number = 1;
    while (true) {
      const std::size_t nl = text.find('\n', start);
      std::string raw(text.substr(start, nl == std::string_view::npos ? std::string_view::npos
                                                                      : nl - start));
      if (!raw.empty() && raw.back() == '\r')
        raw.pop_back();
      line_lengths_.push_back(raw.size());
      raw_.push_back(raw);
      ++number;
      if (nl == std::string_view::npos)
        break;
      start = nl + 1;
    }
  }

  // ---- line-level parsing
  void parse_lines() {
    bool header_seen = false;
    for (std::size_t idx = 0; idx < raw_.size() && !fatal_; ++idx) {
      Line l{idx + 1, raw_[idx], {}};
      // [meta] values are free text: only the key part is tokenized.
      std::string lexable = l.text;
      if (section_ == Section::Meta) {
        const auto first = lexable.find_first_not_of(" \t");
        const auto eq = lexable.find('=');
        const auto hash = lexable.find('#');
        if (first != std::string::npos && lexable[first] != '[' && eq != std::string::npos &&
            (hash == std::string::npos || hash > eq))
          lexable.erase(eq + 1);
      }
      auto lexed = tokenize(lexable);
      if (auto *err = std::get_if<LexError>(&lexed)) {
        diag(Severity::Error, DiagCode::Syntax, l.number, err->column,
             "unexpected character", err->token);
        if (!header_seen) {
          fatal_ = true;
          return;
        }
        continue;
      }
      l.tokens = std::move(std::get<std::vector<Token>>(lexed));
      if (l.tokens.empty())
        continue;
      if (!header_seen) {
        parse_header(l);
        header_seen = true;
        continue;
      }
      if (l.tokens.front().kind == Token::LBracket) {
        open_section(l);
        continue;
      }
      switch (section_) {
      case Section::None:
        error(DiagCode::Syntax, l, l.tokens.front(), "entry outside of any section");
        break;
      case Section::Meta: parse_meta(l); break;
      case Section::Scenario: parse_scenario(l); break;
      case Section::Behavior: parse_behavior(l); break;
      case Section::NonContextual: parse_cause_line(l, false); break;
      case Section::Contextual: parse_cause_line(l, true); break;
      case Section::Quantum: parse_quantum(l); break;
      }
    }
    if (!header_seen && !fatal_) {
      diag(Severity::Error, DiagCode::Syntax, 1, 1,
           "missing 'bellbox-format 1' header");
      fatal_ = true;
    }
  }

  void parse_header(const Line &l) {
    const auto &t = l.tokens;
    if (t[0].kind != Token::Word || t[0].text != kFormatHeader) {
      error(DiagCode::Syntax, l, t[0], "expected 'bellbox-format <version>' header");
      fatal_ = true;
      return;
    }
    if (t.size() < 2) {
      error_eol(l, "missing format version");
      fatal_ = true;
      return;
    }
    if (t[1].kind != Token::Word || !all_digits(t[1].text)) {
      error(DiagCode::Syntax, l, t[1], "format version must be an integer");
      fatal_ = true;
      return;
    }
    if (t[1].text != std::to_string(kFormatVersion)) {
      error(DiagCode::VersionUnsupported, l, t[1],
            "unsupported format version (this reader understands version 1)");
      fatal_ = true;
      return;
    }
    if (t.size() > 2)
      error(DiagCode::Syntax, l, t[2], "unexpected token after header");
  }

  void open_section(const Line &l) {
    const auto &t = l.tokens;
    if (t.size() < 3 || t[1].kind != Token::Word || t[2].kind != Token::RBracket) {
      error(DiagCode::Syntax, l, t.size() > 1 ? t[1] : t[0], "malformed section header");
      section_ = Section::None;
      return;
    }
    if (t.size() > 3) {
      error(DiagCode::Syntax, l, t[3], "unexpected token after section header");
      section_ = Section::None;
      return;
    }
    const auto s = section_named(t[1].text);
    if (!s) {
      error(DiagCode::Syntax, l, t[1], "unknown section");
      section_ = Section::None;
      return;
    }
    if (seen_.count(*s)) {
      error(DiagCode::Duplicate, l, t[1], "section appears twice");
      section_ = Section::None;
      return;
    }
    seen_.insert(*s);
    const bool is_body = *s == Section::Behavior || *s == Section::NonContextual ||
                         *s == Section::Contextual || *s == Section::Quantum;
    if (*s == Section::Meta && seen_.count(Section::Scenario)) {
      error(DiagCode::Syntax, l, t[1], "[meta] must precede [scenario]");
      section_ = Section::None;
      return;
    }
    if (is_body) {
      if (body_ != Section::None) {
        error(DiagCode::Syntax, l, t[1],
              "a document holds exactly one of [behavior], [noncontextual], "
              "[contextual], [quantum]");
        section_ = Section::None;
        return;
      }
      if (!seen_.count(Section::Scenario)) {
        error(DiagCode::Syntax, l, t[1], "[scenario] must precede the model section");
        section_ = Section::None;
        return;
      }
      body_ = *s;
      body_at_ = {l.number, t[1].column, t[1].text};
      build_scenario(l);
    }
    if (*s == Section::Scenario)
      scenario_at_ = {l.number, t[1].column, t[1].text};
    section_ = *s;
  }

  void parse_meta(const Line &l) {
    const auto &t = l.tokens;
    if (t[0].kind != Token::Word || t.size() < 2 || t[1].kind != Token::Equals) {
      error(DiagCode::Syntax, l, t[0], "expected 'key = value'");
      return;
    }
    if (t[0].text != "name" && t[0].text != "description") {
      error(DiagCode::Syntax, l, t[0], "unknown [meta] key (expected name or description)");
      return;
    }
    std::string value = l.text.substr(t[1].column); // after '='
    if (auto hash = value.find('#'); hash != std::string::npos)
      value.erase(hash);
    const auto b = value.find_first_not_of(" \t");
    const auto e = value.find_last_not_of(" \t");
    value = b == std::string::npos ? std::string() : value.substr(b, e - b + 1);
    auto &slot = t[0].text == "name" ? name_ : description_;
    if (slot) {
      error(DiagCode::Duplicate, l, t[0], "key given twice");
      return;
    }
    slot = value;
  }

  void parse_scenario(const Line &l) {
    const auto &t = l.tokens;
    if (t[0].kind != Token::Word || (t[0].text != "alice" && t[0].text != "bob")) {
      error(DiagCode::Syntax, l, t[0], "expected 'alice = ...' or 'bob = ...'");
      return;
    }
    const std::size_t party = t[0].text == "alice" ? 0 : 1;
    if (t.size() < 2 || t[1].kind != Token::Equals) {
      if (t.size() < 2)
        error_eol(l, "expected '='");
      else
        error(DiagCode::Syntax, l, t[1], "expected '='");
      return;
    }
    if (settings_set_[party]) {
      error(DiagCode::Duplicate, l, t[0], "settings listed twice");
      return;
    }
    std::vector<Setting> list;
    std::size_t i = 2;
    while (true) {
      if (i >= t.size()) {
        error_eol(l, "expected a setting label");
        return;
      }
      if (t[i].kind != Token::Word) {
        error(DiagCode::Syntax, l, t[i], "expected a setting label");
        return;
      }
      std::string label = t[i].text;
      std::size_t outcomes = 2;
      if (auto colon = label.find(':'); colon != std::string::npos) {
        const std::string count = label.substr(colon + 1);
        label.erase(colon);
        if (!all_digits(count) || count.size() > 6 || std::stoul(count) < 2) {
          error(DiagCode::Syntax, l, t[i], "outcome count must be an integer >= 2");
          return;
        }
        outcomes = std::stoul(count);
      }
      if (!is_ident(label)) {
        error(DiagCode::Syntax, l, t[i], "invalid setting label");
        return;
      }
      for (const auto &s : list)
        if (s.label == label) {
          error(DiagCode::Duplicate, l, t[i], "setting label repeated");
          return;
        }
      list.push_back({label, outcomes});
      ++i;
      if (i == t.size())
        break;
      if (t[i].kind != Token::Comma) {
        error(DiagCode::Syntax, l, t[i], "expected ',' between setting labels");
        return;
      }
      ++i;
    }
    settings_[party] = std::move(list);
    settings_set_[party] = true;
  }

  void build_scenario(const Line &l) {
    for (std::size_t p = 0; p < 2; ++p)
      if (!settings_set_[p]) {
        diag(Severity::Error, DiagCode::Missing, scenario_at_.line, scenario_at_.column,
             std::string("[scenario] lists no settings for ") + (p == 0 ? "alice" : "bob"),
             scenario_at_.token);
        (void)l;
        return;
      }
    scenario_ = Scenario(settings_[0], settings_[1]);
  }

  /// Resolves a setting label; reports UNKNOWN_LABEL.
  std::optional<std::size_t> setting_index(const Line &l, const Token &t, std::size_t party) {
    if (!scenario_)
      return std::nullopt;
    if (t.kind != Token::Word) {
      error(DiagCode::Syntax, l, t, "expected a setting label");
      return std::nullopt;
    }
    auto idx = scenario_->find_setting(party == 0 ? Party::Alice : Party::Bob, t.text);
    if (!idx)
      error(DiagCode::UnknownLabel, l, t,
            std::string("no setting with this label for ") + (party == 0 ? "alice" : "bob"));
    return idx;
  }

  std::optional<Number> probability(const Line &l, const Token &t) {
    if (t.kind != Token::Word) {
      error(DiagCode::Syntax, l, t, "expected a probability");
      return std::nullopt;
    }
    auto lit = parse_probability(t.text);
    if (!lit) {
      error(DiagCode::Syntax, l, t, "malformed probability (expected p/q, decimal or ~float)");
      return std::nullopt;
    }
    if (lit->converted_decimal)
      diag(Severity::Note, DiagCode::DecimalConverted, l.number, t.column,
           "decimal converted to " + lit->value.str(), t.text);
    return lit->value;
  }

  std::optional<std::size_t> outcome_index(const Line &l, const Token &t, std::size_t limit) {
    if (t.kind != Token::Word || !all_digits(t.text) || t.text.size() > 6) {
      error(DiagCode::Syntax, l, t, "expected an outcome index");
      return std::nullopt;
    }
    const std::size_t v = std::stoul(t.text);
    if (v < 1 || v > limit) {
      error(DiagCode::UnknownLabel, l, t,
            "outcome index out of range 1.." + std::to_string(limit));
      return std::nullopt;
    }
    return v;
  }

  // P ( a , b | x , y ) = value
  void parse_behavior(const Line &l) {
    if (!scenario_)
      return;
    const auto &t = l.tokens;
    static const Token::Kind shape[] = {Token::Word,  Token::LParen, Token::Word,  Token::Comma,
                                        Token::Word,  Token::Pipe,   Token::Word,  Token::Comma,
                                        Token::Word,  Token::RParen, Token::Equals, Token::Word};
    for (std::size_t k = 0; k < 12; ++k) {
      if (k >= t.size()) {
        error_eol(l, "incomplete entry, expected 'P(a,b | x,y) = p/q'");
        return;
      }
      if (t[k].kind != shape[k] || (k == 0 && t[k].text != "P")) {
        error(DiagCode::Syntax, l, t[k], "expected 'P(a,b | x,y) = p/q'");
        return;
      }
    }
    if (t.size() > 12) {
      error(DiagCode::Syntax, l, t[12], "unexpected token after value");
      return;
    }
    const auto x = setting_index(l, t[6], 0);
    if (!x)
      return;
    const auto y = setting_index(l, t[8], 1);
    if (!y)
      return;
    const auto a = outcome_index(l, t[2], scenario_->outcomes(Party::Alice, *x));
    if (!a)
      return;
    const auto b = outcome_index(l, t[4], scenario_->outcomes(Party::Bob, *y));
    if (!b)
      return;
    const auto v = probability(l, t[11]);
    if (!v)
      return;
    auto &cell = behavior_[Context{*x, *y}];
    if (cell.count({*a, *b})) {
      error(DiagCode::Duplicate, l, t[0], "entry given twice");
      return;
    }
    cell[{*a, *b}] = {*v, {l.number, t[0].column, t[0].text}};
    if (!behavior_at_.count(Context{*x, *y}))
      behavior_at_[Context{*x, *y}] = {l.number, t[0].column, t[0].text};
  }

  void parse_cause_line(const Line &l, bool contextual) {
    if (!scenario_)
      return;
    const auto &t = l.tokens;
    if (t[0].kind != Token::Word) {
      error(DiagCode::Syntax, l, t[0], "expected 'cause', 'respond' or 'context'");
      return;
    }
    if (t[0].text == "context") {
      if (!contextual) {
        error(DiagCode::Syntax, l, t[0], "'context' blocks belong in [contextual]");
        return;
      }
      if (t.size() < 3) {
        error_eol(l, "expected 'context <alice setting> <bob setting>'");
        return;
      }
      if (t.size() > 3) {
        error(DiagCode::Syntax, l, t[3], "unexpected token");
        return;
      }
      current_context_.reset();
      const auto x = setting_index(l, t[1], 0);
      if (!x)
        return;
      const auto y = setting_index(l, t[2], 1);
      if (!y)
        return;
      const Context c{*x, *y};
      if (contexts_.count(c)) {
        error(DiagCode::Duplicate, l, t[0], "context block given twice");
        return;
      }
      contexts_[c].at = {l.number, t[0].column, t[0].text};
      current_context_ = c;
      return;
    }
    std::vector<CauseDraft> *causes = &causes_;
    if (contextual) {
      if (!current_context_) {
        if (!context_error_reported_)
          error(DiagCode::Syntax, l, t[0], "expected a 'context <x> <y>' line first");
        context_error_reported_ = true;
        return;
      }
      causes = &contexts_[*current_context_].causes;
    }
    if (t[0].text == "cause") {
      if (t.size() < 4) {
        error_eol(l, "expected 'cause <id> weight <p/q>'");
        return;
      }
      if (t[1].kind != Token::Word || !is_ident(t[1].text)) {
        error(DiagCode::Syntax, l, t[1], "invalid cause id");
        return;
      }
      if (t[2].kind != Token::Word || t[2].text != "weight") {
        error(DiagCode::Syntax, l, t[2], "expected 'weight'");
        return;
      }
      if (t.size() > 4) {
        error(DiagCode::Syntax, l, t[4], "unexpected token after weight");
        return;
      }
      for (const auto &c : *causes)
        if (c.id == t[1].text) {
          error(DiagCode::Duplicate, l, t[1], "cause id repeated in this cause set");
          return;
        }
      const auto w = probability(l, t[3]);
      if (!w)
        return;
      causes->push_back({t[1].text, *w, {l.number, t[1].column, t[1].text}, {}});
      return;
    }
    if (t[0].text == "respond") {
      if (causes->empty()) {
        error(DiagCode::Syntax, l, t[0], "'respond' before any 'cause'");
        return;
      }
      if (t.size() < 5) {
        error_eol(l, "expected 'respond <party> <setting> -> p1, p2, ...'");
        return;
      }
      if (t[1].kind != Token::Word || (t[1].text != "alice" && t[1].text != "bob")) {
        error(DiagCode::Syntax, l, t[1], "expected 'alice' or 'bob'");
        return;
      }
      const std::size_t party = t[1].text == "alice" ? 0 : 1;
      const auto s = setting_index(l, t[2], party);
      if (!s)
        return;
      if (contextual) {
        const std::size_t own = party == 0 ? current_context_->alice : current_context_->bob;
        if (*s != own) {
          error(DiagCode::UnknownLabel, l, t[2], "setting is not part of this context");
          return;
        }
      }
      if (t[3].kind != Token::Arrow) {
        error(DiagCode::Syntax, l, t[3], "expected '->'");
        return;
      }
      std::vector<Number> values;
      std::size_t i = 4;
      while (true) {
        if (i >= t.size()) {
          error_eol(l, "expected a probability");
          return;
        }
        const auto v = probability(l, t[i]);
        if (!v)
          return;
        values.push_back(*v);
        ++i;
        if (i == t.size())
          break;
        if (t[i].kind != Token::Comma) {
          error(DiagCode::Syntax, l, t[i], "expected ','");
          return;
        }
        ++i;
      }
      const std::size_t outcomes =
          scenario_->outcomes(party == 0 ? Party::Alice : Party::Bob, *s);
      if (values.size() != outcomes) {
        error(DiagCode::Syntax, l, t[4],
              "expected " + std::to_string(outcomes) + " outcome probabilities, got " +
                  std::to_string(values.size()));
        return;
      }
      auto &cause = causes->back();
      if (cause.responses.count({party, *s})) {
        error(DiagCode::Duplicate, l, t[2], "response given twice for this cause");
        return;
      }
      cause.responses[{party, *s}] = {std::move(values), {l.number, t[0].column, t[0].text}};
      return;
    }
    error(DiagCode::Syntax, l, t[0],
          contextual ? "expected 'context', 'cause' or 'respond'" : "expected 'cause' or 'respond'");
  }

  void parse_quantum(const Line &l) {
    if (!scenario_)
      return;
    const auto &t = l.tokens;
    if (t[0].kind != Token::Word || (t[0].text != "alice" && t[0].text != "bob")) {
      error(DiagCode::Syntax, l, t[0], "expected '<alice|bob> <setting> = <degrees>'");
      return;
    }
    if (t.size() < 4) {
      error_eol(l, "expected '<alice|bob> <setting> = <degrees>'");
      return;
    }
    const std::size_t party = t[0].text == "alice" ? 0 : 1;
    const auto s = setting_index(l, t[1], party);
    if (!s)
      return;
    if (t[2].kind != Token::Equals) {
      error(DiagCode::Syntax, l, t[2], "expected '='");
      return;
    }
    if (t.size() > 4) {
      error(DiagCode::Syntax, l, t[4], "unexpected token");
      return;
    }
    const auto angle = t[3].kind == Token::Word ? parse_angle(t[3].text) : std::nullopt;
    if (!angle) {
      error(DiagCode::Syntax, l, t[3], "malformed angle (degrees)");
      return;
    }
    if (angles_.count({party, *s})) {
      error(DiagCode::Duplicate, l, t[1], "angle given twice");
      return;
    }
    angles_[{party, *s}] = {*angle, {l.number, t[0].column, t[0].text}};
  }

  // ---- document assembly and invariant checks
  void finish(ParseResult &out) {
    if (!seen_.count(Section::Scenario)) {
      diag(Severity::Error, DiagCode::Missing, raw_.size(), 1, "missing [scenario] section");
      return;
    }
    if (body_ == Section::None) {
      build_scenario_if_needed();
      diag(Severity::Error, DiagCode::Missing, raw_.size(), 1,
           "missing model section ([behavior], [noncontextual], [contextual] or [quantum])");
      return;
    }
    if (!scenario_)
      return;
    ModelDocument doc;
    doc.name = name_;
    doc.description = description_;
    doc.scenario = *scenario_;
    const Scenario &s = *scenario_;
    switch (body_) {
    case Section::Behavior: {
      Behavior b = Behavior::zeros(s);
      for (const auto &c : s.contexts()) {
        auto it = behavior_.find(c);
        if (it == behavior_.end()) {
          error_at(DiagCode::Missing, body_at_,
                   "[behavior] has no entries for context " + s.label(c));
          continue;
        }
        for (const auto &[ab, entry] : it->second)
          b.at(c).at(ab.first - 1, ab.second - 1) = entry.first;
        const Number sum = b.at(c).sum();
        if (!within_tolerance_of_one(sum))
          error_at(DiagCode::Unnormalized, behavior_at_[c],
                   "[behavior] context " + s.label(c) + " sums to " + sum.str());
      }
      doc.body = std::move(b);
      break;
    }
    case Section::NonContextual: {
      NonContextualModel m;
      m.scenario = s;
      check_causes(causes_, "[noncontextual] cause set", body_at_, s, std::nullopt);
      for (const auto &cd : causes_) {
        m.causes.push_back({cd.id, cd.weight});
        for (const auto &[key, r] : cd.responses)
          (key.first == 0 ? m.alice : m.bob)[{key.second, cd.id}] = r.values;
      }
      doc.body = std::move(m);
      break;
    }
    case Section::Contextual: {
      ContextualModel m;
      m.scenario = s;
      for (const auto &c : s.contexts()) {
        auto it = contexts_.find(c);
        if (it == contexts_.end()) {
          error_at(DiagCode::Missing, body_at_, "[contextual] has no block for context " + s.label(c));
          continue;
        }
        check_causes(it->second.causes, "[contextual] context " + s.label(c) + " cause set",
                     it->second.at, s, c);
        ContextCauses cc;
        for (const auto &cd : it->second.causes) {
          cc.causes.push_back({cd.id, cd.weight});
          for (const auto &[key, r] : cd.responses)
            (key.first == 0 ? cc.alice : cc.bob)[{key.second, cd.id}] = r.values;
        }
        m.contexts.emplace(c, std::move(cc));
      }
      doc.body = std::move(m);
      break;
    }
    case Section::Quantum: {
      QuantumBlock q;
      for (std::size_t p = 0; p < 2; ++p) {
        const Party party = p == 0 ? Party::Alice : Party::Bob;
        for (std::size_t i = 0; i < s.setting_count(party); ++i) {
          if (s.outcomes(party, i) != 2)
            error_at(DiagCode::Syntax, scenario_at_,
                     "[quantum] needs two-outcome settings ('" + s.setting(party, i).label +
                         "' has " + std::to_string(s.outcomes(party, i)) + ")");
          auto it = angles_.find({p, i});
          if (it == angles_.end()) {
            error_at(DiagCode::Missing, body_at_,
                     std::string("[quantum] gives no angle for ") + party_name(party) + " " +
                         s.setting(party, i).label);
            continue;
          }
          q.degrees[p].push_back(it->second.first);
        }
      }
      doc.body = std::move(q);
      break;
    }
    default:
      return;
    }
    if (has_error())
      return;
    out.document = std::move(doc);
  }

  void build_scenario_if_needed() {}

  void check_causes(const std::vector<CauseDraft> &causes, const std::string &where,
                    const Located &set_at, const Scenario &s, std::optional<Context> ctx) {
    if (causes.empty()) {
      error_at(DiagCode::Missing, set_at, where + " is empty");
      return;
    }
    Number total(0);
    for (const auto &cd : causes)
      total += cd.weight;
    if (!within_tolerance_of_one(total))
      error_at(DiagCode::Unnormalized, causes.front().at,
               where + ": weights sum to " + total.str());
    for (const auto &cd : causes) {
      for (std::size_t p = 0; p < 2; ++p) {
        const Party party = p == 0 ? Party::Alice : Party::Bob;
        for (std::size_t i = 0; i < s.setting_count(party); ++i) {
          if (ctx && ctx->of(party) != i)
            continue;
          auto it = cd.responses.find({p, i});
          if (it == cd.responses.end()) {
            error_at(DiagCode::Missing, cd.at,
                     "cause '" + cd.id + "' has no response for " + party_name(party) + " " +
                         s.setting(party, i).label);
            continue;
          }
          Number sum(0);
          for (const auto &v : it->second.values)
            sum += v;
          if (!within_tolerance_of_one(sum))
            error_at(DiagCode::Unnormalized, it->second.at,
                     "response of " + std::string(party_name(party)) + " " +
                         s.setting(party, i).label + " under cause '" + cd.id + "' sums to " +
                         sum.str());
        }
      }
    }
  }

  std::vector<std::string> raw_;
  std::vector<std::size_t> line_lengths_;
  std::vector<Diagnostic> diags_;
  bool fatal_ = false;

  Section section_ = Section::None;
  Section body_ = Section::None;
  std::set<Section> seen_;
  Located body_at_, scenario_at_;

  std::optional<std::string> name_, description_;
  std::array<std::vector<Setting>, 2> settings_;
  std::array<bool, 2> settings_set_{false, false};
  std::optional<Scenario> scenario_;

  std::map<Context, std::map<std::pair<std::size_t, std::size_t>, std::pair<Number, Located>>>
      behavior_;
  std::map<Context, Located> behavior_at_;
  std::vector<CauseDraft> causes_;
  std::map<Context, ContextDraft> contexts_;
  std::optional<Context> current_context_;
  bool context_error_reported_ = false;
  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, Located>> angles_;
};

inline std::string number_literal(const Number &n) {
  return n.is_exact() ? n.str() : "~" + Number::shortest_double(n.to_double());
}

inline std::string vector_literal(const std::vector<Number> &v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i)
      out += ", ";
    out += number_literal(v[i]);
  }
  return out;
}

inline std::string setting_literal(const Setting &s) {
  return s.outcomes == 2 ? s.label : s.label + ":" + std::to_string(s.outcomes);
}

inline void check_meta_value(const std::optional<std::string> &v) {
  if (!v)
    return;
  if (v->find_first_of("#\n\r") != std::string::npos ||
      (!v->empty() && (v->front() == ' ' || v->back() == ' ' || v->front() == '\t' ||
                       v->back() == '\t')))
    throw Error(ErrorCode::ModelInvalid,
                "metadata values must be single-line, trimmed and free of '#'");
}

} // namespace fmt_detail

/// Parses a document; on success every invariant of the target types holds.
inline ParseResult parse_document(std::string_view text) {
  return fmt_detail::Parser(text).run();
}

/// Canonical text: fixed section order, sorted keys, reduced rationals,
/// contexts in lexicographic order, two-space indentation.
inline std::string serialize_document(const ModelDocument &d) {
  using namespace fmt_detail;
  check_meta_value(d.name);
  check_meta_value(d.description);
  const Scenario &s = d.scenario;
  std::ostringstream os;
  os << kFormatHeader << ' ' << d.version << '\n';
  if (d.name || d.description) {
    os << "\n[meta]\n";
    if (d.description)
      os << "description = " << *d.description << '\n';
    if (d.name)
      os << "name = " << *d.name << '\n';
  }
  os << "\n[scenario]\n";
  for (Party p : kParties) {
    os << party_name(p) << " = ";
    for (std::size_t i = 0; i < s.setting_count(p); ++i)
      os << (i ? ", " : "") << setting_literal(s.setting(p, i));
    os << '\n';
  }
  auto cause_block = [&](const std::vector<Cause> &causes, const ResponseFunction &alice,
                         const ResponseFunction &bob, const std::string &indent) {
    for (const auto &c : causes) {
      os << indent << "cause " << c.id << " weight " << number_literal(c.weight) << '\n';
      for (Party p : kParties) {
        const ResponseFunction &r = p == Party::Alice ? alice : bob;
        for (std::size_t i = 0; i < s.setting_count(p); ++i) {
          auto it = r.find({i, c.id});
          if (it == r.end())
            continue;
          os << indent << "  respond " << party_name(p) << ' ' << s.setting(p, i).label
             << " -> " << vector_literal(it->second) << '\n';
        }
      }
    }
  };
  std::visit(
      [&](const auto &body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, Behavior>) {
          os << "\n[behavior]\n";
          for (const auto &c : s.contexts()) {
            const ProbMatrix &m = body.at(c);
            for (std::size_t a = 0; a < m.rows(); ++a)
              for (std::size_t b = 0; b < m.cols(); ++b)
                os << "P(" << a + 1 << ',' << b + 1 << " | "
                   << s.setting(Party::Alice, c.alice).label << ','
                   << s.setting(Party::Bob, c.bob).label
                   << ") = " << number_literal(m.at(a, b)) << '\n';
          }
        } else if constexpr (std::is_same_v<T, NonContextualModel>) {
          os << "\n[noncontextual]\n";
          cause_block(body.causes, body.alice, body.bob, "");
        } else if constexpr (std::is_same_v<T, ContextualModel>) {
          os << "\n[contextual]\n";
          for (const auto &[c, cc] : body.contexts) {
            os << "context " << s.setting(Party::Alice, c.alice).label << ' '
               << s.setting(Party::Bob, c.bob).label << '\n';
            cause_block(cc.causes, cc.alice, cc.bob, "  ");
          }
        } else {
          os << "\n[quantum]\n";
          for (Party p : kParties)
            for (std::size_t i = 0; i < body.degrees[index_of(p)].size(); ++i)
              os << party_name(p) << ' ' << s.setting(p, i).label << " = "
                 << Number::shortest_double(body.degrees[index_of(p)][i]) << '\n';
        }
      },
      d.body);
  return os.str();
}

/// The model carried by a document (behavior and quantum documents have none).
inline std::optional<Model> document_model(const ModelDocument &d) {
  if (const auto *m = std::get_if<NonContextualModel>(&d.body))
    return Model(*m);
  if (const auto *m = std::get_if<ContextualModel>(&d.body))
    return Model(*m);
  return std::nullopt;
}

inline QuantumDirections quantum_directions(const Scenario &s, const QuantumBlock &q) {
  QuantumDirections d{s, {}};
  for (std::size_t p = 0; p < 2; ++p)
    for (double deg : q.degrees[p])
      d.angles[p].push_back(degrees_to_radians(deg));
  return d;
}

/// Exact behavior of a model document, the table of a behavior document, or
/// the singlet behavior of a quantum document.
inline Behavior document_behavior(const ModelDocument &d) {
  return std::visit(
      [&](const auto &body) -> Behavior {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, Behavior>)
          return body;
        else if constexpr (std::is_same_v<T, NonContextualModel>)
          return exact_behavior_noncontextual(body);
        else if constexpr (std::is_same_v<T, ContextualModel>)
          return exact_behavior_contextual(body);
        else
          return singlet_behavior(quantum_directions(d.scenario, body));
      },
      d.body);
}

inline ModelDocument behavior_document(const Behavior &b,
                                       std::optional<std::string> name = std::nullopt) {
  ModelDocument d;
  d.name = std::move(name);
  d.scenario = b.scenario();
  d.body = b;
  return d;
}

inline const std::vector<std::string> &builtin_names() {
  static const std::vector<std::string> names{"socks-on", "socks-off", "socks-color",
                                              "singlet-optimal"};
  return names;
}

inline ModelDocument builtin_document(std::string_view name) {
  ModelDocument d;
  if (name == "socks-on") {
    auto m = socks_on();
    d.name = "socks-on";
    d.description = "socks worn before the meeting; four states of mind fixed for every context";
    d.scenario = m.scenario;
    d.body = std::move(m);
  } else if (name == "socks-off") {
    auto m = socks_off();
    d.name = "socks-off";
    d.description = "socks put on when asked; cause sets depend on the joint measurement";
    d.scenario = m.scenario;
    d.body = std::move(m);
  } else if (name == "socks-color") {
    auto m = socks_color();
    d.name = "socks-color";
    d.description = "sock-color questions under the socks-off dynamics; violates the marginal laws";
    d.scenario = m.scenario;
    d.body = std::move(m);
  } else if (name == "singlet-optimal" || name == "singlet") {
    d.name = "singlet-optimal";
    d.description = "spin singlet, alice at 0 and 90 degrees, bob at 45 and 135 degrees";
    d.scenario = Scenario::binary({"A", "A'"}, {"B", "B'"});
    d.body = QuantumBlock{{std::vector<double>{0, 90}, std::vector<double>{45, 135}}};
  } else {
    throw Error(ErrorCode::UnknownBuiltin, "no builtin named '" + std::string(name) + "'");
  }
  return d;
}

} // namespace bellbox
