#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pslvqa {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Interned name. Two symbols compare equal iff their names are equal.
class Symbol {
 public:
  Symbol() = default;
  explicit Symbol(std::string_view name);

  const std::string& str() const;
  std::uint32_t id() const { return id_; }
  bool empty() const { return id_ == 0; }

  friend bool operator==(Symbol a, Symbol b) { return a.id_ == b.id_; }
  // Orders by name so containers keyed on Symbol iterate deterministically.
  friend std::strong_ordering operator<=>(Symbol a, Symbol b);

 private:
  std::uint32_t id_ = 0;
};

struct SymbolHash {
  std::size_t operator()(Symbol s) const noexcept { return s.id(); }
};

// The reserved constant naming the question focus node.
inline constexpr std::string_view kFocusNode = "?x";

class Term {
 public:
  enum class Kind { constant, variable };

  static Term constant(std::string_view name);
  static Term constant(Symbol name) { return Term(Kind::constant, name); }
  static Term variable(std::string_view name);
  // Variables start with an uppercase letter; anything else is a constant.
  static Term parse(std::string_view name);

  Kind kind() const { return kind_; }
  bool is_variable() const { return kind_ == Kind::variable; }
  Symbol name() const { return name_; }

  friend bool operator==(const Term&, const Term&) = default;

 private:
  Term(Kind kind, Symbol name) : kind_(kind), name_(name) {}
  Kind kind_ = Kind::constant;
  Symbol name_;
};

bool is_variable_name(std::string_view name);

struct Atom {
  Symbol predicate;
  std::vector<Term> args;

  std::size_t arity() const { return args.size(); }
  bool is_ground() const;
  std::string to_string() const;

  friend bool operator==(const Atom&, const Atom&) = default;
};

Atom make_atom(std::string_view predicate, const std::vector<std::string>& args);

struct Literal {
  Atom atom;
  bool negated = false;

  std::string to_string() const;
  friend bool operator==(const Literal&, const Literal&) = default;
};

struct SourceLocation {
  std::size_t line = 0;
  std::size_t column = 0;
  // Byte range of the weight literal in the source text, for rewriting.
  std::size_t weight_offset = 0;
  std::size_t weight_length = 0;
};

struct Rule {
  double weight = 1.0;
  bool is_hard = false;
  std::vector<Literal> head;  // disjunction
  std::vector<Literal> body;  // conjunction
  SourceLocation location;

  // Throws Error on negative/non-finite weight or a head variable missing
  // from the body.
  void validate() const;
  std::vector<Symbol> variables() const;
  bool is_ground() const;
  std::string to_string() const;

  // Structural equality; source location is not compared.
  friend bool operator==(const Rule& a, const Rule& b) {
    return a.weight == b.weight && a.is_hard == b.is_hard && a.head == b.head &&
           a.body == b.body;
  }
};

using Binding = std::map<Symbol, Symbol>;

// Replaces every variable by its bound constant. Throws Error
// "unbound variable X" if the binding does not cover the rule.
Rule substitute(const Rule& rule, const Binding& binding);
// Like substitute but leaves unbound variables in place.
Rule substitute_partial(const Rule& rule, const Binding& binding);

// Clause view of a rule: head positives and negated body literals go to
// `positive`; negated head literals and positive body literals go to
// `negative`.
struct ClauseForm {
  std::vector<Atom> positive;
  std::vector<Atom> negative;
  double weight = 0.0;
  bool is_hard = false;
};

ClauseForm clause_form(const Rule& rule);
// Inverse of clause_form: positives become the head disjunction, negatives
// the body conjunction.
Rule rule_from_clause(const ClauseForm& clause);

struct PredicateSignature {
  Symbol name;
  std::size_t arity = 0;
  // Target predicates are open-world and inferred; observed predicates are
  // closed-world (unlisted atoms are 0).
  bool target = false;

  std::string to_string() const;
  friend bool operator==(const PredicateSignature&, const PredicateSignature&) = default;
};

struct SummationConstraint {
  Symbol predicate;
  std::size_t arity = 0;
  double bound = 1.0;

  void validate() const;
  friend bool operator==(const SummationConstraint&, const SummationConstraint&) = default;
};

using AtomId = std::uint32_t;

enum class AtomStatus { observed, target };

// Ground atoms with soft truth values. Observed atoms carry a value in
// [0,1]; target atoms may carry an initial value or label.
class Database {
 public:
  Database() = default;
  explicit Database(std::vector<PredicateSignature> signatures);

  void declare(const PredicateSignature& signature);
  const PredicateSignature* signature(Symbol predicate) const;
  const std::vector<PredicateSignature>& signatures() const { return signatures_; }

  // Inserts or overwrites. Returns true if the atom already existed.
  bool set_observed(const Atom& atom, double value, AtomId* id = nullptr);
  bool set_target(const Atom& atom, std::optional<double> value, AtomId* id = nullptr);

  std::optional<AtomId> find(const Atom& atom) const;

  struct Lookup {
    AtomStatus status;
    std::optional<double> value;  // empty for an uninitialized target
    std::optional<AtomId> id;     // empty when the atom is not stored
  };
  // Closed world for observed predicates, "uninitialized target" for
  // unlisted atoms of target predicates. Throws on undeclared predicate.
  Lookup lookup(const Atom& atom) const;

  std::size_t size() const { return atoms_.size(); }
  const Atom& atom(AtomId id) const { return atoms_[id]; }
  AtomStatus status(AtomId id) const { return status_[id]; }
  std::optional<double> value(AtomId id) const;
  const std::vector<AtomId>& atoms_of(Symbol predicate) const;

 private:
  void check_atom(const Atom& atom) const;
  AtomId insert(const Atom& atom, AtomStatus status, double value, bool& existed);

  struct KeyHash {
    std::size_t operator()(const std::vector<std::uint32_t>& key) const noexcept;
  };
  static std::vector<std::uint32_t> key_of(const Atom& atom);

  std::vector<PredicateSignature> signatures_;
  std::unordered_map<Symbol, std::size_t, SymbolHash> signature_index_;
  std::vector<Atom> atoms_;
  std::vector<AtomStatus> status_;
  std::vector<double> values_;  // NaN marks an uninitialized target
  std::unordered_map<std::vector<std::uint32_t>, AtomId, KeyHash> index_;
  std::unordered_map<Symbol, std::vector<AtomId>, SymbolHash> by_predicate_;
};

// Formats a truth value with six decimals.
std::string format_value(double value);
// Shortest representation that parses back to the same double.
std::string format_weight(double weight);

}  // namespace pslvqa
