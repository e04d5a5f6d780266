#include "pslvqa/logic.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <deque>
#include <mutex>
#include <set>
#include <shared_mutex>

namespace pslvqa {

namespace {

class Interner {
 public:
  Interner() {
    names_.emplace_back();
    ids_.emplace(std::string_view(names_.front()), 0);
  }

  std::uint32_t intern(std::string_view name) {
    {
      std::shared_lock lock(mutex_);
      auto it = ids_.find(name);
      if (it != ids_.end()) return it->second;
    }
    std::unique_lock lock(mutex_);
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    names_.emplace_back(name);
    auto id = static_cast<std::uint32_t>(names_.size() - 1);
    ids_.emplace(std::string_view(names_.back()), id);
    return id;
  }

  const std::string& name(std::uint32_t id) {
    std::shared_lock lock(mutex_);
    return names_[id];
  }

 private:
  std::shared_mutex mutex_;
  std::deque<std::string> names_;  // deque keeps string_view keys stable
  std::unordered_map<std::string_view, std::uint32_t> ids_;
};

Interner& interner() {
  static Interner instance;
  return instance;
}

bool is_bare_constant(std::string_view s) {
  if (s == kFocusNode) return true;
  if (s.empty()) return false;
  auto first = static_cast<unsigned char>(s.front());
  if (!(std::islower(first) || std::isdigit(first) || first == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char ch) {
    auto c = static_cast<unsigned char>(ch);
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

std::string term_to_string(const Term& t) {
  const std::string& name = t.name().str();
  if (t.is_variable() || is_bare_constant(name)) return name;
  std::string out = "\"";
  for (char c : name) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void collect_variables(const Atom& atom, std::vector<Symbol>& out) {
  for (const Term& t : atom.args)
    if (t.is_variable() && std::find(out.begin(), out.end(), t.name()) == out.end())
      out.push_back(t.name());
}

Atom substitute_atom(const Atom& atom, const Binding& binding, bool strict) {
  Atom out{atom.predicate, {}};
  out.args.reserve(atom.args.size());
  for (const Term& t : atom.args) {
    if (!t.is_variable()) {
      out.args.push_back(t);
      continue;
    }
    auto it = binding.find(t.name());
    if (it != binding.end()) {
      out.args.push_back(Term::constant(it->second));
    } else if (strict) {
      throw Error("unbound variable " + t.name().str());
    } else {
      out.args.push_back(t);
    }
  }
  return out;
}

Rule substitute_impl(const Rule& rule, const Binding& binding, bool strict) {
  Rule out = rule;
  for (Literal& l : out.head) l.atom = substitute_atom(l.atom, binding, strict);
  for (Literal& l : out.body) l.atom = substitute_atom(l.atom, binding, strict);
  return out;
}

}  // namespace

Symbol::Symbol(std::string_view name) : id_(interner().intern(name)) {}

const std::string& Symbol::str() const { return interner().name(id_); }

std::strong_ordering operator<=>(Symbol a, Symbol b) {
  if (a.id_ == b.id_) return std::strong_ordering::equal;
  int c = a.str().compare(b.str());
  return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
}

bool is_variable_name(std::string_view name) {
  return !name.empty() && std::isupper(static_cast<unsigned char>(name.front()));
}

Term Term::constant(std::string_view name) { return Term(Kind::constant, Symbol(name)); }

Term Term::variable(std::string_view name) {
  if (!is_variable_name(name))
    throw Error("variable name must start with an uppercase letter: " + std::string(name));
  return Term(Kind::variable, Symbol(name));
}

Term Term::parse(std::string_view name) {
  return is_variable_name(name) ? variable(name) : constant(name);
}

bool Atom::is_ground() const {
  return std::none_of(args.begin(), args.end(), [](const Term& t) { return t.is_variable(); });
}

std::string Atom::to_string() const {
  std::string out = predicate.str() + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ",";
    out += term_to_string(args[i]);
  }
  return out + ")";
}

Atom make_atom(std::string_view predicate, const std::vector<std::string>& args) {
  Atom atom{Symbol(predicate), {}};
  for (const auto& a : args) atom.args.push_back(Term::constant(a));
  return atom;
}

std::string Literal::to_string() const { return (negated ? "!" : "") + atom.to_string(); }

void Rule::validate() const {
  if (!std::isfinite(weight) || weight < 0.0)
    throw Error("rule weight must be a finite non-negative number");
  if (head.empty()) throw Error("rule has an empty head");
  std::vector<Symbol> body_vars;
  for (const Literal& l : body)
    if (!l.negated) collect_variables(l.atom, body_vars);
  auto bound = [&](Symbol s) {
    return std::find(body_vars.begin(), body_vars.end(), s) != body_vars.end();
  };
  for (const Literal& l : head)
    for (const Term& t : l.atom.args)
      if (t.is_variable() && !bound(t.name()))
        throw Error("head variable " + t.name().str() + " does not appear in the rule body");
  for (const Literal& l : body)
    if (l.negated)
      for (const Term& t : l.atom.args)
        if (t.is_variable() && !bound(t.name()))
          throw Error("variable " + t.name().str() +
                      " in a negated body literal does not appear in a positive one");
}

std::vector<Symbol> Rule::variables() const {
  std::vector<Symbol> out;
  for (const Literal& l : body) collect_variables(l.atom, out);
  for (const Literal& l : head) collect_variables(l.atom, out);
  return out;
}

bool Rule::is_ground() const { return variables().empty(); }

std::string Rule::to_string() const {
  std::string out;
  if (is_hard) {
    out = "hard";
  } else {
    out = format_weight(weight);
  }
  out += ": ";
  for (std::size_t i = 0; i < head.size(); ++i) {
    if (i) out += " | ";
    out += head[i].to_string();
  }
  out += " <- ";
  if (body.empty()) return out + "true";
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (i) out += " & ";
    out += body[i].to_string();
  }
  return out;
}

Rule substitute(const Rule& rule, const Binding& binding) {
  return substitute_impl(rule, binding, true);
}

Rule substitute_partial(const Rule& rule, const Binding& binding) {
  return substitute_impl(rule, binding, false);
}

ClauseForm clause_form(const Rule& rule) {
  ClauseForm clause;
  clause.weight = rule.weight;
  clause.is_hard = rule.is_hard;
  for (const Literal& l : rule.head)
    (l.negated ? clause.negative : clause.positive).push_back(l.atom);
  for (const Literal& l : rule.body)
    (l.negated ? clause.positive : clause.negative).push_back(l.atom);
  return clause;
}

Rule rule_from_clause(const ClauseForm& clause) {
  Rule rule;
  rule.weight = clause.weight;
  rule.is_hard = clause.is_hard;
  for (const Atom& a : clause.positive) rule.head.push_back({a, false});
  // A purely negative clause has no positive head; keep it as a negated head.
  auto& negatives = clause.positive.empty() ? rule.head : rule.body;
  for (const Atom& a : clause.negative) negatives.push_back({a, clause.positive.empty()});
  return rule;
}

std::string PredicateSignature::to_string() const {
  return name.str() + "/" + std::to_string(arity);
}

void SummationConstraint::validate() const {
  if (!std::isfinite(bound) || bound <= 0.0)
    throw Error("summation bound must be positive for " + predicate.str());
}

// --- Database ---------------------------------------------------------------

Database::Database(std::vector<PredicateSignature> signatures) {
  for (const auto& s : signatures) declare(s);
}

void Database::declare(const PredicateSignature& signature) {
  auto it = signature_index_.find(signature.name);
  if (it != signature_index_.end()) {
    if (!(signatures_[it->second] == signature))
      throw Error("conflicting declaration for predicate " + signature.name.str());
    return;
  }
  signature_index_.emplace(signature.name, signatures_.size());
  signatures_.push_back(signature);
}

const PredicateSignature* Database::signature(Symbol predicate) const {
  auto it = signature_index_.find(predicate);
  return it == signature_index_.end() ? nullptr : &signatures_[it->second];
}

void Database::check_atom(const Atom& atom) const {
  const PredicateSignature* sig = signature(atom.predicate);
  if (!sig) throw Error("undeclared predicate " + atom.predicate.str());
  if (sig->arity != atom.arity())
    throw Error("arity mismatch for " + atom.predicate.str() + ": declared " +
                std::to_string(sig->arity) + ", got " + std::to_string(atom.arity()));
  if (!atom.is_ground()) throw Error("atom is not ground: " + atom.to_string());
}

std::vector<std::uint32_t> Database::key_of(const Atom& atom) {
  std::vector<std::uint32_t> key;
  key.reserve(atom.args.size() + 1);
  key.push_back(atom.predicate.id());
  for (const Term& t : atom.args) key.push_back(t.name().id());
  return key;
}

std::size_t Database::KeyHash::operator()(const std::vector<std::uint32_t>& key) const noexcept {
  std::size_t h = 1469598103934665603ull;
  for (auto v : key) h = (h ^ v) * 1099511628211ull;
  return h;
}

AtomId Database::insert(const Atom& atom, AtomStatus status, double value, bool& existed) {
  auto key = key_of(atom);
  auto it = index_.find(key);
  if (it != index_.end()) {
    existed = true;
    status_[it->second] = status;
    values_[it->second] = value;
    return it->second;
  }
  existed = false;
  auto id = static_cast<AtomId>(atoms_.size());
  atoms_.push_back(atom);
  status_.push_back(status);
  values_.push_back(value);
  index_.emplace(std::move(key), id);
  by_predicate_[atom.predicate].push_back(id);
  return id;
}

bool Database::set_observed(const Atom& atom, double value, AtomId* id) {
  check_atom(atom);
  if (!(value >= 0.0 && value <= 1.0))
    throw Error("truth value out of [0,1] for " + atom.to_string());
  bool existed = false;
  AtomId got = insert(atom, AtomStatus::observed, value, existed);
  if (id) *id = got;
  return existed;
}

bool Database::set_target(const Atom& atom, std::optional<double> value, AtomId* id) {
  check_atom(atom);
  if (value && !(*value >= 0.0 && *value <= 1.0))
    throw Error("truth value out of [0,1] for " + atom.to_string());
  bool existed = false;
  AtomId got = insert(atom, AtomStatus::target, value.value_or(std::nan("")), existed);
  if (id) *id = got;
  return existed;
}

std::optional<AtomId> Database::find(const Atom& atom) const {
  auto it = index_.find(key_of(atom));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Database::Lookup Database::lookup(const Atom& atom) const {
  check_atom(atom);
  if (auto id = find(atom)) return {status_[*id], value(*id), id};
  if (signature(atom.predicate)->target) return {AtomStatus::target, std::nullopt, std::nullopt};
  return {AtomStatus::observed, 0.0, std::nullopt};
}

std::optional<double> Database::value(AtomId id) const {
  double v = values_[id];
  if (std::isnan(v)) return std::nullopt;
  return v;
}

const std::vector<AtomId>& Database::atoms_of(Symbol predicate) const {
  static const std::vector<AtomId> kEmpty;
  auto it = by_predicate_.find(predicate);
  return it == by_predicate_.end() ? kEmpty : it->second;
}

std::string format_weight(double weight) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, weight);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos && s.find("inf") == std::string::npos) s += ".0";
  return s;
}

std::string format_value(double value) {
  char buf[64];
  if (value == 0.0) value = 0.0;  // print -0 as 0
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

}  // namespace pslvqa
