#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pslvqa/logic.hpp"

namespace pslvqa {

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct Program {
  std::vector<PredicateSignature> predicates;
  std::vector<Rule> rules;
  std::vector<SummationConstraint> constraints;
  std::map<std::string, std::string> options;

  const PredicateSignature* find_predicate(Symbol name) const;
  // Empty database with every declared predicate.
  Database make_database() const;

  friend bool operator==(const Program&, const Program&) = default;
};

// Rule-file grammar, one statement per line:
//
//   predicate NAME/ARITY [target]
//   WEIGHT: HEAD <- BODY          HEAD = lit ('|' lit)*, BODY = lit ('&' lit)* | true
//   hard: HEAD <- BODY
//   sum NAME/ARITY <= FLOAT
//   option KEY = VALUE
//   // comment
//
// Literals are `[!]name(term, ...)`. Terms starting with an uppercase letter
// are variables; constants may be quoted ("standing near"); `?x` is the
// focus constant.
Program parse_program(std::string_view text);

std::string print_program(const Program& program);

// Line-delimited records {"pred":..,"args":[..],"value":..,"target":..}.
// Blank lines are skipped; `target` defaults to false.
Database parse_data(std::string_view text, const Program& program,
                    std::vector<std::string>* warnings = nullptr);
void load_data(std::string_view text, Database& db, std::vector<std::string>* warnings = nullptr);

// Returns `source` with each rule's weight literal replaced by the weight of
// the corresponding rule in `updated`. `source` must be the text `updated`
// was parsed from.
std::string rewrite_weights(std::string_view source, const Program& updated);

std::string read_file(const std::string& path);

}  // namespace pslvqa
