#include "pslvqa/grounding.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace pslvqa {

GroundingError::GroundingError(std::size_t rule_index, const std::string& message)
    : Error("rule " + std::to_string(rule_index) + ": " + message), rule_index_(rule_index) {}

bool blocking_filter(std::span<const double> similarity_values, double threshold) {
  return std::all_of(similarity_values.begin(), similarity_values.end(),
                     [&](double v) { return v >= threshold; });
}

namespace {

constexpr int kConstant = -1;

// An argument is either a constant symbol or a variable slot.
struct CompiledArg {
  int var = kConstant;
  Symbol constant;
};

struct CompiledLiteral {
  Symbol predicate;
  std::vector<CompiledArg> args;
  bool negated = false;
  bool in_head = false;
};

struct CompiledRule {
  std::vector<Symbol> variables;
  std::vector<CompiledLiteral> positive_body;
  std::vector<CompiledLiteral> other;  // head literals and negated body literals
};

CompiledLiteral compile_literal(const Literal& lit, bool in_head, std::vector<Symbol>& vars) {
  CompiledLiteral out{lit.atom.predicate, {}, lit.negated, in_head};
  for (const Term& t : lit.atom.args) {
    CompiledArg arg;
    if (t.is_variable()) {
      auto it = std::find(vars.begin(), vars.end(), t.name());
      if (it == vars.end()) {
        vars.push_back(t.name());
        it = vars.end() - 1;
      }
      arg.var = static_cast<int>(it - vars.begin());
    } else {
      arg.constant = t.name();
    }
    out.args.push_back(arg);
  }
  return out;
}

CompiledRule compile(const Rule& rule) {
  CompiledRule out;
  for (const Literal& l : rule.body)
    if (!l.negated) out.positive_body.push_back(compile_literal(l, false, out.variables));
  for (const Literal& l : rule.body)
    if (l.negated) out.other.push_back(compile_literal(l, false, out.variables));
  for (const Literal& l : rule.head) out.other.push_back(compile_literal(l, true, out.variables));
  return out;
}

struct ArgKey {
  std::uint32_t position;
  std::uint32_t symbol;
  bool operator==(const ArgKey&) const = default;
};

struct ArgKeyHash {
  std::size_t operator()(const ArgKey& k) const noexcept {
    return (static_cast<std::size_t>(k.position) << 32) ^ k.symbol;
  }
};

// Enumerable atoms of one predicate, with a per-argument index.
struct PredicateDomain {
  std::vector<AtomId> atoms;
  std::unordered_map<ArgKey, std::vector<AtomId>, ArgKeyHash> by_arg;
};

class Grounder {
 public:
  Grounder(const Program& program, Database& db, const GroundingOptions& options)
      : program_(program), db_(db), options_(options) {
    for (const auto& name : options.blocking.similarity_predicates)
      similarity_.insert(Symbol(name));
    for (const Rule& r : program.rules) rules_.push_back(compile(r));
  }

  GroundProgram run() {
    GroundProgram out;
    // Materializing implied targets can enlarge the domains of later rules;
    // repeat until a full pass adds nothing.
    while (true) {
      build_domains();
      added_targets_ = false;
      out.potentials.clear();
      for (std::size_t i = 0; i < rules_.size(); ++i) ground_rule(i, out.potentials);
      if (!added_targets_) break;
    }
    for (AtomId id = 0; id < db_.size(); ++id)
      if (db_.status(id) == AtomStatus::target) out.targets.push_back(id);
    for (std::size_t c = 0; c < program_.constraints.size(); ++c) {
      const auto& sc = program_.constraints[c];
      GroundConstraint gc{{}, sc.bound, c};
      for (AtomId id : db_.atoms_of(sc.predicate))
        if (db_.status(id) == AtomStatus::target && db_.atom(id).arity() == sc.arity)
          gc.atoms.push_back(id);
      out.constraints.push_back(std::move(gc));
    }
    return out;
  }

 private:
  void build_domains() {
    domains_.clear();
    for (const auto& sig : db_.signatures()) {
      PredicateDomain& dom = domains_[sig.name];
      for (AtomId id : db_.atoms_of(sig.name)) {
        if (db_.status(id) == AtomStatus::observed && options_.prune_zero_bodies &&
            *db_.value(id) <= 0.0)
          continue;
        dom.atoms.push_back(id);
        const Atom& a = db_.atom(id);
        for (std::size_t p = 0; p < a.args.size(); ++p)
          dom.by_arg[{static_cast<std::uint32_t>(p), a.args[p].name().id()}].push_back(id);
      }
    }
  }

  void ground_rule(std::size_t index, std::vector<GroundRule>& out) {
    const CompiledRule& rule = rules_[index];
    current_rule_ = index;
    binding_.assign(rule.variables.size(), Symbol());
    used_.assign(rule.positive_body.size(), false);
    body_atoms_.assign(rule.positive_body.size(), 0);
    instantiations_ = 0;
    join(rule, 0, out);
  }

  const std::vector<AtomId>* candidates(const CompiledLiteral& lit) const {
    auto dom_it = domains_.find(lit.predicate);
    if (dom_it == domains_.end()) return &kEmpty;
    const PredicateDomain& dom = dom_it->second;
    const std::vector<AtomId>* best = &dom.atoms;
    for (std::size_t p = 0; p < lit.args.size(); ++p) {
      Symbol s = lit.args[p].var == kConstant ? lit.args[p].constant : binding_[lit.args[p].var];
      if (s.empty()) continue;
      auto it = dom.by_arg.find({static_cast<std::uint32_t>(p), s.id()});
      if (it == dom.by_arg.end()) return &kEmpty;
      if (it->second.size() < best->size()) best = &it->second;
    }
    return best;
  }

  void join(const CompiledRule& rule, std::size_t depth, std::vector<GroundRule>& out) {
    if (depth == rule.positive_body.size()) {
      emit(rule, out);
      return;
    }
    // Most selective unprocessed literal first; ties keep source order.
    std::size_t pick = 0;
    const std::vector<AtomId>* pick_list = nullptr;
    for (std::size_t i = 0; i < rule.positive_body.size(); ++i) {
      if (used_[i]) continue;
      const auto* list = candidates(rule.positive_body[i]);
      if (!pick_list || list->size() < pick_list->size()) {
        pick = i;
        pick_list = list;
      }
    }
    const CompiledLiteral& lit = rule.positive_body[pick];
    used_[pick] = true;
    std::vector<int> newly_bound;
    for (AtomId id : *pick_list) {
      const Atom& atom = db_.atom(id);
      newly_bound.clear();
      bool ok = true;
      for (std::size_t p = 0; p < lit.args.size() && ok; ++p) {
        const CompiledArg& arg = lit.args[p];
        Symbol value = atom.args[p].name();
        if (arg.var == kConstant) {
          ok = arg.constant == value;
        } else if (binding_[arg.var].empty()) {
          binding_[arg.var] = value;
          newly_bound.push_back(arg.var);
        } else {
          ok = binding_[arg.var] == value;
        }
      }
      if (ok) {
        body_atoms_[pick] = id;
        join(rule, depth + 1, out);
      }
      for (int v : newly_bound) binding_[v] = Symbol();
    }
    used_[pick] = false;
  }

  Atom instantiate(const CompiledLiteral& lit) const {
    Atom atom{lit.predicate, {}};
    atom.args.reserve(lit.args.size());
    for (const CompiledArg& arg : lit.args)
      atom.args.push_back(Term::constant(arg.var == kConstant ? arg.constant : binding_[arg.var]));
    return atom;
  }

  void emit(const CompiledRule& rule, std::vector<GroundRule>& out) {
    if (++instantiations_ > options_.max_ground_rules)
      throw GroundingError(current_rule_, "grounding exceeded the cap of " +
                                              std::to_string(options_.max_ground_rules) +
                                              " instantiations");
    const Rule& source = program_.rules[current_rule_];
    GroundRule gr;
    gr.weight = source.weight;
    gr.is_hard = source.is_hard;
    gr.rule_index = current_rule_;

    sim_values_.clear();
    bool has_target = false;
    for (std::size_t i = 0; i < rule.positive_body.size(); ++i) {
      AtomId id = body_atoms_[i];
      gr.i_minus.push_back(id);
      if (db_.status(id) == AtomStatus::target) {
        has_target = true;
      } else if (similarity_.contains(rule.positive_body[i].predicate)) {
        sim_values_.push_back(*db_.value(id));
      }
    }
    if (!blocking_filter(sim_values_, options_.blocking.threshold)) return;

    for (const CompiledLiteral& lit : rule.other) {
      Atom atom = instantiate(lit);
      // Clause side: head positives and negated body atoms are in I+.
      bool plus = lit.in_head != lit.negated;
      auto found = db_.find(atom);
      if (!found) {
        if (db_.signature(atom.predicate)->target) {
          AtomId id = 0;
          db_.set_target(atom, std::nullopt, &id);
          added_targets_ = true;
          found = id;
        } else if (plus) {
          continue;  // closed-world 0 adds nothing to I+
        } else {
          return;  // closed-world 0 in I- satisfies the clause outright
        }
      }
      AtomId id = *found;
      if (db_.status(id) == AtomStatus::target) {
        has_target = true;
      } else if (options_.prune_zero_bodies && !lit.in_head && *db_.value(id) >= 1.0) {
        return;  // negated body literal with truth 0
      }
      (plus ? gr.i_plus : gr.i_minus).push_back(id);
    }
    if (!has_target) return;

    for (std::size_t v = 0; v < rule.variables.size(); ++v)
      gr.binding.emplace_back(rule.variables[v], binding_[v]);
    std::sort(gr.binding.begin(), gr.binding.end());
    out.push_back(std::move(gr));
  }

  static inline const std::vector<AtomId> kEmpty{};

  const Program& program_;
  Database& db_;
  const GroundingOptions& options_;
  std::unordered_set<Symbol, SymbolHash> similarity_;
  std::vector<CompiledRule> rules_;
  std::unordered_map<Symbol, PredicateDomain, SymbolHash> domains_;

  std::size_t current_rule_ = 0;
  std::vector<Symbol> binding_;
  std::vector<bool> used_;
  std::vector<AtomId> body_atoms_;
  std::vector<double> sim_values_;
  std::size_t instantiations_ = 0;
  bool added_targets_ = false;
};

std::string join_atoms(const std::vector<AtomId>& ids, const Database& db) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += db.atom(ids[i]).to_string();
  }
  return out;
}

}  // namespace

GroundProgram ground_program(const Program& program, Database& db,
                             const GroundingOptions& options) {
  if (options.blocking.threshold < 0.0 || options.blocking.threshold > 1.0)
    throw Error("blocking threshold must lie in [0,1]");
  for (const auto& sig : program.predicates) db.declare(sig);
  for (const auto& c : program.constraints) c.validate();
  return Grounder(program, db, options).run();
}

std::string dump_grounding(const GroundProgram& ground, const Database& db) {
  std::ostringstream out;
  for (const GroundRule& gr : ground.potentials) {
    out << (gr.is_hard ? std::string("hard") : format_value(gr.weight)) << " | "
        << join_atoms(gr.i_plus, db) << " | " << join_atoms(gr.i_minus, db) << " | rule "
        << gr.rule_index << " {";
    for (std::size_t i = 0; i < gr.binding.size(); ++i)
      out << (i ? ", " : "") << gr.binding[i].first.str() << "=" << gr.binding[i].second.str();
    out << "}\n";
  }
  return out.str();
}

}  // namespace pslvqa
