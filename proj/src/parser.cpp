#include "pslvqa/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pslvqa {

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
            message),
      line_(line),
      column_(column) {}

namespace {

enum class Tok { word, quoted, colon, lparen, rparen, comma, amp, bar, bang, arrow, leq, slash, eq, end };

struct Token {
  Tok kind;
  std::string text;
  std::size_t column;  // 1-based
  std::size_t offset;  // byte offset in the whole source
};

const char* describe(Tok t) {
  switch (t) {
    case Tok::word: return "identifier";
    case Tok::quoted: return "quoted constant";
    case Tok::colon: return "':'";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::comma: return "','";
    case Tok::amp: return "'&'";
    case Tok::bar: return "'|'";
    case Tok::bang: return "'!'";
    case Tok::arrow: return "'<-'";
    case Tok::leq: return "'<='";
    case Tok::slash: return "'/'";
    case Tok::eq: return "'='";
    case Tok::end: return "end of line";
  }
  return "?";
}

bool is_word_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || c == '-' || c == '.' || c == '?' || c == '+' || u >= 0x80;
}

class LineLexer {
 public:
  LineLexer(std::string_view line, std::size_t line_no, std::size_t base_offset)
      : line_(line), line_no_(line_no), base_(base_offset) {
    tokenize();
  }

  const Token& peek() const { return tokens_[pos_]; }
  Token next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
  bool accept(Tok kind) {
    if (peek().kind != kind) return false;
    ++pos_;
    return true;
  }
  Token expect(Tok kind, const char* context) {
    if (peek().kind != kind) fail(std::string("expected ") + describe(kind) + " " + context);
    return next();
  }
  [[noreturn]] void fail(const std::string& message) const {
    const Token& t = peek();
    std::string got = t.kind == Tok::end ? "end of line" : "'" + t.text + "'";
    throw ParseError(line_no_, t.column, message + ", found " + got);
  }
  [[noreturn]] void fail_at(const Token& t, const std::string& message) const {
    throw ParseError(line_no_, t.column, message);
  }
  std::size_t line_no() const { return line_no_; }
  std::string_view rest() const {
    std::size_t col = peek().column;
    return col == 0 ? std::string_view{} : line_.substr(col - 1);
  }

 private:
  void tokenize() {
    std::size_t i = 0;
    auto push = [&](Tok k, std::string text, std::size_t start) {
      tokens_.push_back({k, std::move(text), start + 1, base_ + start});
    };
    while (i < line_.size()) {
      char c = line_[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      if (c == '/' && i + 1 < line_.size() && line_[i + 1] == '/') break;  // comment
      std::size_t start = i;
      switch (c) {
        case ':': push(Tok::colon, ":", start); ++i; continue;
        case '(': push(Tok::lparen, "(", start); ++i; continue;
        case ')': push(Tok::rparen, ")", start); ++i; continue;
        case ',': push(Tok::comma, ",", start); ++i; continue;
        case '&': push(Tok::amp, "&", start); ++i; continue;
        case '|': push(Tok::bar, "|", start); ++i; continue;
        case '!': push(Tok::bang, "!", start); ++i; continue;
        case '/': push(Tok::slash, "/", start); ++i; continue;
        case '=': push(Tok::eq, "=", start); ++i; continue;
        case '<':
          if (i + 1 < line_.size() && line_[i + 1] == '-') {
            push(Tok::arrow, "<-", start);
            i += 2;
            continue;
          }
          if (i + 1 < line_.size() && line_[i + 1] == '=') {
            push(Tok::leq, "<=", start);
            i += 2;
            continue;
          }
          throw ParseError(line_no_, start + 1, "unexpected character '<'");
        case '"': {
          std::string text;
          ++i;
          bool closed = false;
          while (i < line_.size()) {
            char d = line_[i++];
            if (d == '\\' && i < line_.size()) {
              text.push_back(line_[i++]);
            } else if (d == '"') {
              closed = true;
              break;
            } else {
              text.push_back(d);
            }
          }
          if (!closed) throw ParseError(line_no_, start + 1, "unterminated quoted constant");
          push(Tok::quoted, std::move(text), start);
          continue;
        }
        default: break;
      }
      if (!is_word_char(c))
        throw ParseError(line_no_, start + 1, std::string("unexpected character '") + c + "'");
      while (i < line_.size() && is_word_char(line_[i])) ++i;
      push(Tok::word, std::string(line_.substr(start, i - start)), start);
    }
    tokens_.push_back({Tok::end, "", line_.size() + 1, base_ + line_.size()});
  }

  std::string_view line_;
  std::size_t line_no_;
  std::size_t base_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

bool parse_size(std::string_view text, std::size_t& out) {
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

struct PendingCheck {
  Atom atom;
  std::size_t line;
  std::size_t column;
};

class ProgramParser {
 public:
  explicit ProgramParser(std::string_view text) : text_(text) {}

  Program run() {
    std::size_t offset = 0;
    std::size_t line_no = 0;
    while (offset <= text_.size()) {
      std::size_t eol = text_.find('\n', offset);
      if (eol == std::string_view::npos) eol = text_.size();
      ++line_no;
      std::string_view line = text_.substr(offset, eol - offset);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      parse_line(LineLexer(line, line_no, offset));
      offset = eol + 1;
    }
    check_predicates();
    return std::move(program_);
  }

 private:
  void parse_line(LineLexer lex) {
    if (lex.peek().kind == Tok::end) return;
    const Token& first = lex.peek();
    if (first.kind == Tok::word && first.text == "predicate") {
      lex.next();
      parse_declaration(lex);
    } else if (first.kind == Tok::word && first.text == "sum") {
      lex.next();
      parse_constraint(lex);
    } else if (first.kind == Tok::word && first.text == "option") {
      lex.next();
      Token key = lex.expect(Tok::word, "after 'option'");
      lex.expect(Tok::eq, "after option name");
      std::string value(lex.rest());
      while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back())))
        value.pop_back();
      if (value.empty()) lex.fail("expected option value");
      program_.options[key.text] = value;
    } else {
      parse_rule(lex);
    }
  }

  std::pair<Symbol, std::size_t> parse_signature(LineLexer& lex, const char* context) {
    Token name = lex.expect(Tok::word, context);
    if (is_variable_name(name.text)) lex.fail_at(name, "predicate names must start lowercase");
    lex.expect(Tok::slash, "between predicate name and arity");
    Token arity_tok = lex.expect(Tok::word, "(arity)");
    std::size_t arity = 0;
    if (!parse_size(arity_tok.text, arity) || arity == 0)
      lex.fail_at(arity_tok, "arity must be a positive integer");
    return {Symbol(name.text), arity};
  }

  void parse_declaration(LineLexer& lex) {
    auto [name, arity] = parse_signature(lex, "after 'predicate'");
    PredicateSignature sig{name, arity, false};
    if (lex.peek().kind == Tok::word) {
      Token kind = lex.next();
      if (kind.text == "target")
        sig.target = true;
      else if (kind.text != "observed")
        lex.fail_at(kind, "expected 'target' or 'observed', found '" + kind.text + "'");
    }
    lex.expect(Tok::end, "after predicate declaration");
    if (const auto* existing = program_.find_predicate(name)) {
      if (!(*existing == sig))
        throw ParseError(lex.line_no(), 1, "conflicting declaration for " + name.str());
      return;
    }
    program_.predicates.push_back(sig);
  }

  void parse_constraint(LineLexer& lex) {
    auto [name, arity] = parse_signature(lex, "after 'sum'");
    lex.expect(Tok::leq, "in summation constraint");
    Token bound_tok = lex.expect(Tok::word, "(summation bound)");
    double bound = 0;
    if (!parse_double(bound_tok.text, bound) || !std::isfinite(bound))
      lex.fail_at(bound_tok, "summation bound must be a number");
    if (bound <= 0) lex.fail_at(bound_tok, "summation bound must be positive");
    lex.expect(Tok::end, "after summation constraint");
    program_.constraints.push_back({name, arity, bound});
    pending_.push_back({Atom{name, std::vector<Term>(arity, Term::constant("_"))},
                        lex.line_no(), 1});
  }

  Term parse_term(LineLexer& lex) {
    const Token& t = lex.peek();
    if (t.kind == Tok::quoted) return Term::constant(lex.next().text);
    if (t.kind == Tok::word) return Term::parse(lex.next().text);
    lex.fail("expected a term");
  }

  Literal parse_literal(LineLexer& lex) {
    Literal lit;
    lit.negated = lex.accept(Tok::bang);
    Token name = lex.expect(Tok::word, "(predicate name)");
    if (is_variable_name(name.text)) lex.fail_at(name, "predicate names must start lowercase");
    lit.atom.predicate = Symbol(name.text);
    lex.expect(Tok::lparen, "after predicate name");
    do {
      lit.atom.args.push_back(parse_term(lex));
    } while (lex.accept(Tok::comma));
    lex.expect(Tok::rparen, "to close argument list");
    pending_.push_back({lit.atom, lex.line_no(), name.column});
    return lit;
  }

  void parse_rule(LineLexer& lex) {
    Rule rule;
    Token weight_tok = lex.next();
    rule.location.line = lex.line_no();
    rule.location.column = weight_tok.column;
    rule.location.weight_offset = weight_tok.offset;
    rule.location.weight_length = weight_tok.text.size();
    if (weight_tok.kind != Tok::word)
      lex.fail_at(weight_tok, "expected a rule weight, 'hard', or a declaration");
    if (weight_tok.text == "hard") {
      rule.is_hard = true;
      rule.weight = 0.0;
    } else {
      double w = 0;
      if (!parse_double(weight_tok.text, w))
        lex.fail_at(weight_tok, "expected a rule weight, found '" + weight_tok.text + "'");
      if (!std::isfinite(w)) lex.fail_at(weight_tok, "rule weight must be finite");
      if (w < 0) lex.fail_at(weight_tok, "negative rule weight " + weight_tok.text);
      rule.weight = w;
    }
    lex.expect(Tok::colon, "after rule weight");
    do {
      rule.head.push_back(parse_literal(lex));
    } while (lex.accept(Tok::bar));
    if (lex.accept(Tok::arrow)) {
      if (lex.peek().kind == Tok::word && lex.peek().text == "true") {
        lex.next();
      } else {
        do {
          rule.body.push_back(parse_literal(lex));
        } while (lex.accept(Tok::amp));
      }
    }
    lex.expect(Tok::end, "at end of rule");
    try {
      rule.validate();
    } catch (const Error& e) {
      throw ParseError(rule.location.line, rule.location.column, e.what());
    }
    program_.rules.push_back(std::move(rule));
  }

  void check_predicates() const {
    for (const auto& p : pending_) {
      const PredicateSignature* sig = program_.find_predicate(p.atom.predicate);
      if (!sig)
        throw ParseError(p.line, p.column, "undeclared predicate " + p.atom.predicate.str());
      if (sig->arity != p.atom.arity())
        throw ParseError(p.line, p.column,
                         "arity mismatch for " + p.atom.predicate.str() + ": declared " +
                             std::to_string(sig->arity) + ", used with " +
                             std::to_string(p.atom.arity()));
    }
  }

  std::string_view text_;
  Program program_;
  std::vector<PendingCheck> pending_;
};

}  // namespace

const PredicateSignature* Program::find_predicate(Symbol name) const {
  auto it = std::find_if(predicates.begin(), predicates.end(),
                         [&](const PredicateSignature& s) { return s.name == name; });
  return it == predicates.end() ? nullptr : &*it;
}

Database Program::make_database() const { return Database(predicates); }

Program parse_program(std::string_view text) { return ProgramParser(text).run(); }

std::string print_program(const Program& program) {
  std::ostringstream out;
  for (const auto& p : program.predicates)
    out << "predicate " << p.to_string() << (p.target ? " target" : "") << "\n";
  for (const auto& r : program.rules) out << r.to_string() << "\n";
  for (const auto& c : program.constraints)
    out << "sum " << c.predicate.str() << "/" << c.arity << " <= " << format_weight(c.bound)
        << "\n";
  for (const auto& [k, v] : program.options) out << "option " << k << " = " << v << "\n";
  return out.str();
}

void load_data(std::string_view text, Database& db, std::vector<std::string>* warnings) {
  std::size_t offset = 0;
  std::size_t record = 0;
  while (offset < text.size()) {
    std::size_t eol = text.find('\n', offset);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(offset, eol - offset);
    offset = eol + 1;
    if (std::all_of(line.begin(), line.end(),
                    [](char c) { return std::isspace(static_cast<unsigned char>(c)); }))
      continue;
    ++record;
    auto fail = [&](const std::string& msg) -> void {
      throw Error("record " + std::to_string(record) + ": " + msg);
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      fail("malformed record");
    }
    if (!j.is_object()) fail("record is not an object");
    if (!j.contains("pred") || !j["pred"].is_string()) fail("missing string field 'pred'");
    if (!j.contains("args") || !j["args"].is_array()) fail("missing array field 'args'");
    bool target = false;
    if (j.contains("target")) {
      if (!j["target"].is_boolean()) fail("field 'target' must be a boolean");
      target = j["target"].get<bool>();
    }
    std::optional<double> value;
    if (j.contains("value") && !j["value"].is_null()) {
      if (!j["value"].is_number()) fail("field 'value' must be a number");
      value = j["value"].get<double>();
      if (!(*value >= 0.0 && *value <= 1.0))
        fail("value " + j["value"].dump() + " outside [0,1]");
    } else if (!target) {
      fail("observed record needs a 'value'");
    }
    Atom atom{Symbol(j["pred"].get<std::string>()), {}};
    for (const auto& a : j["args"]) {
      if (a.is_string())
        atom.args.push_back(Term::constant(a.get<std::string>()));
      else if (a.is_number())
        atom.args.push_back(Term::constant(a.dump()));
      else
        fail("arguments must be strings");
    }
    const PredicateSignature* sig = db.signature(atom.predicate);
    if (!sig) fail("undeclared predicate " + atom.predicate.str());
    if (sig->arity != atom.arity())
      fail("arity mismatch for " + atom.predicate.str() + ": declared " +
           std::to_string(sig->arity) + ", got " + std::to_string(atom.arity()));
    if (target && !sig->target) fail(atom.predicate.str() + " is not a target predicate");
    bool existed = target ? db.set_target(atom, value) : db.set_observed(atom, *value);
    if (existed && warnings)
      warnings->push_back("record " + std::to_string(record) + ": duplicate atom " +
                          atom.to_string() + ", last value wins");
  }
}

Database parse_data(std::string_view text, const Program& program,
                    std::vector<std::string>* warnings) {
  Database db = program.make_database();
  load_data(text, db, warnings);
  return db;
}

std::string rewrite_weights(std::string_view source, const Program& updated) {
  std::string out;
  std::size_t cursor = 0;
  for (const Rule& rule : updated.rules) {
    const auto& loc = rule.location;
    if (loc.weight_offset < cursor || loc.weight_offset + loc.weight_length > source.size())
      throw Error("rule locations do not match the source text");
    out.append(source.substr(cursor, loc.weight_offset - cursor));
    if (rule.is_hard)
      out.append(source.substr(loc.weight_offset, loc.weight_length));
    else
      out.append(format_value(rule.weight));
    cursor = loc.weight_offset + loc.weight_length;
  }
  out.append(source.substr(cursor));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace pslvqa
