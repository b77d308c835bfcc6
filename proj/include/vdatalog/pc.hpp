#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vdatalog/hashing.hpp"

namespace vdatalog {

using FeatureId = std::uint32_t;

// Opaque presence-condition value. Under BddStore this is a node handle in a
// hash-consed ROBDD, so semantic equality coincides with handle equality.
// Under TextPcStore it is an interned normalized formula and equality is
// structural only.
using PcValue = std::uint32_t;

class PcParseError : public std::runtime_error {
 public:
  PcParseError(const std::string& msg, std::size_t position);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class UnassignedFeatureError : public std::runtime_error {
 public:
  explicit UnassignedFeatureError(const std::string& feature);
  const std::string& feature() const { return feature_; }

 private:
  std::string feature_;
};

/// Feature names interned to dense ids. Ids double as BDD variable levels,
/// so the variable order is the order of first registration.
class FeatureTable {
 public:
  FeatureId intern(std::string_view name);
  std::optional<FeatureId> find(std::string_view name) const;
  const std::string& name(FeatureId id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }

  static bool valid_name(std::string_view name);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, FeatureId> ids_;
};

/// A total feature assignment over the features declared at construction
/// time. Features registered later are unassigned and evaluating them fails.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::vector<std::uint8_t> values)
      : values_(std::move(values)) {}

  std::optional<bool> value(FeatureId f) const {
    if (f >= values_.size()) return std::nullopt;
    return values_[f] != 0;
  }
  std::size_t size() const { return values_.size(); }
  bool operator==(const Configuration&) const = default;

  std::string describe(const FeatureTable& features) const;

 private:
  std::vector<std::uint8_t> values_;
};

/// Propositional formula AST, as parsed from the concrete PC grammar.
struct Formula {
  enum class Kind : std::uint8_t { True, False, Var, Not, And, Or };

  Kind kind = Kind::True;
  FeatureId var = 0;
  std::unique_ptr<Formula> lhs;  // Not uses lhs only
  std::unique_ptr<Formula> rhs;

  Formula clone() const;

  static Formula make_true();
  static Formula make_false();
  static Formula make_var(FeatureId f);
  static Formula make_not(Formula f);
  static Formula make_and(Formula a, Formula b);
  static Formula make_or(Formula a, Formula b);
};

// Concrete grammar: identifiers, literals True/False, ! > && > ||,
// parentheses; & and | accepted as aliases on input, never emitted.
Formula parse_formula(std::string_view text, FeatureTable& features);
bool eval_formula(const Formula& f, const Configuration& config,
                  const FeatureTable& features);
std::string format_formula(const Formula& f, const FeatureTable& features);

/// The operations the evaluation engine needs from a presence-condition
/// representation. Implemented by BddStore (canonical, constant-time SAT)
/// and TextPcStore (textual fallback, no SAT decisions).
class PcAlgebra {
 public:
  virtual ~PcAlgebra() = default;

  virtual PcValue true_pc() const = 0;
  virtual PcValue false_pc() const = 0;
  virtual PcValue parse(std::string_view text) = 0;
  virtual PcValue conj(PcValue a, PcValue b) = 0;
  virtual PcValue disj(PcValue a, PcValue b) = 0;
  virtual bool is_sat(PcValue a) const = 0;
  virtual bool eval(PcValue a, const Configuration& config) const = 0;
  virtual std::string to_text(PcValue a) const = 0;
};

/// Hash-consed reduced ordered BDD store. Handles 0 and 1 are the False and
/// True terminals. All operations are memoized; node identity is semantic
/// identity.
class BddStore final : public PcAlgebra {
 public:
  explicit BddStore(FeatureTable& features) : features_(&features) {}

  PcValue true_pc() const override { return kTrue; }
  PcValue false_pc() const override { return kFalse; }

  PcValue var(FeatureId f);
  PcValue conj(PcValue a, PcValue b) override;
  PcValue disj(PcValue a, PcValue b) override;
  PcValue negate(PcValue a);

  // SAT is a terminal check: everything but the False terminal has a path
  // to True.
  bool is_sat(PcValue a) const override { return a != kFalse; }

  bool eval(PcValue a, const Configuration& config) const override;

  PcValue compile(const Formula& f);
  PcValue parse(std::string_view text) override;

  // Canonical text: disjunction of the cubes along all paths to True,
  // literals name-sorted within a cube, cubes sorted lexicographically.
  // parse(to_text(a)) == a.
  std::string to_text(PcValue a) const override;

  struct NodeView {
    FeatureId var;
    PcValue lo;  // cofactor with var = false
    PcValue hi;  // cofactor with var = true
  };
  bool is_terminal(PcValue a) const { return a <= kTrue; }
  NodeView node(PcValue a) const;

  // Structural audit for tests: reduced (lo != hi), ordered (levels strictly
  // increase towards the terminals) and hash-consed uniqueness, over every
  // node reachable from `a`.
  bool audit_structure(PcValue a) const;

  std::size_t node_count() const { return nodes_.size(); }

 private:
  static constexpr PcValue kFalse = 0;
  static constexpr PcValue kTrue = 1;
  static constexpr FeatureId kTerminalVar = 0xffffffffu;

  struct Node {
    FeatureId var;
    PcValue lo;
    PcValue hi;
  };

  enum class Op : std::uint32_t { And = 0, Or = 1 };

  PcValue mk(FeatureId var, PcValue lo, PcValue hi);
  PcValue apply(Op op, PcValue a, PcValue b);
  FeatureId level(PcValue a) const {
    return a <= kTrue ? kTerminalVar : nodes_[a - 2].var;
  }

  FeatureTable* features_;
  std::vector<Node> nodes_;  // handle = index + 2; 0/1 are the terminals
  std::unordered_map<std::array<std::uint32_t, 3>, PcValue, ArrayHash3>
      unique_;
  std::unordered_map<std::array<std::uint32_t, 3>, PcValue, ArrayHash3>
      apply_cache_;
  std::unordered_map<PcValue, PcValue> negate_cache_;
  std::unordered_map<std::string, PcValue> parse_cache_;
};

/// Textual presence conditions for the noSAT mode: each value is an interned
/// disjunction of conjunctions of units, where a unit is a literal or an
/// opaque parenthesized input sub-formula. Combination is purely syntactic
/// (set union with structural dedup); nothing is ever simplified and no
/// satisfiability decision is made.
class TextPcStore final : public PcAlgebra {
 public:
  explicit TextPcStore(FeatureTable& features);

  PcValue true_pc() const override { return true_; }
  PcValue false_pc() const override { return false_; }
  PcValue parse(std::string_view text) override;
  PcValue from_formula(const Formula& f);

  PcValue conj(PcValue a, PcValue b) override;
  PcValue disj(PcValue a, PcValue b) override;

  // No satisfiability reasoning in this representation: only the canonical
  // False value is reported unsatisfiable.
  bool is_sat(PcValue a) const override { return a != false_; }

  bool eval(PcValue a, const Configuration& config) const override;
  std::string to_text(PcValue a) const override;

 private:
  using UnitId = std::uint32_t;
  using TermId = std::uint32_t;

  struct Unit {
    std::string text;
    Formula ast;
  };

  UnitId intern_unit(const Formula& ast);
  TermId intern_term(std::vector<UnitId> units);
  PcValue intern_pc(std::vector<TermId> terms);
  void flatten_or(const Formula& f, std::vector<TermId>& terms);
  void flatten_and(const Formula& f, std::vector<UnitId>& units);

  FeatureTable* features_;
  std::vector<Unit> units_;
  std::unordered_map<std::string, UnitId> unit_ids_;
  std::vector<std::vector<UnitId>> terms_;
  std::unordered_map<std::vector<std::uint32_t>, TermId, VecHash> term_ids_;
  std::vector<std::vector<TermId>> pcs_;
  std::unordered_map<std::vector<std::uint32_t>, PcValue, VecHash> pc_ids_;
  std::unordered_map<std::string, PcValue> parse_cache_;
  PcValue true_ = 0;
  PcValue false_ = 0;
};

}  // namespace vdatalog
