#include "vdatalog/pc.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace vdatalog {

PcParseError::PcParseError(const std::string& msg, std::size_t position)
    : std::runtime_error(msg + " (at offset " + std::to_string(position) + ")"),
      position_(position) {}

UnassignedFeatureError::UnassignedFeatureError(const std::string& feature)
    : std::runtime_error("feature '" + feature +
                         "' is not assigned in this configuration"),
      feature_(feature) {}

// ---------------------------------------------------------------------------
// FeatureTable

bool FeatureTable::valid_name(std::string_view name) {
  if (name.empty()) return false;
  if (std::isdigit(static_cast<unsigned char>(name[0]))) return false;
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

FeatureId FeatureTable::intern(std::string_view name) {
  if (auto it = ids_.find(std::string(name)); it != ids_.end())
    return it->second;
  if (!valid_name(name))
    throw PcParseError("invalid feature name '" + std::string(name) + "'", 0);
  if (name == "True" || name == "False")
    throw PcParseError("'" + std::string(name) +
                           "' is a reserved literal, not a feature",
                       0);
  FeatureId id = static_cast<FeatureId>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<FeatureId> FeatureTable::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::string Configuration::describe(const FeatureTable& features) const {
  std::ostringstream out;
  out << '{';
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (i) out << ", ";
    out << features.name(static_cast<FeatureId>(i)) << ':'
        << (values_[i] ? "true" : "false");
  }
  out << '}';
  return out.str();
}

// ---------------------------------------------------------------------------
// Formula

Formula Formula::clone() const {
  Formula f;
  f.kind = kind;
  f.var = var;
  if (lhs) f.lhs = std::make_unique<Formula>(lhs->clone());
  if (rhs) f.rhs = std::make_unique<Formula>(rhs->clone());
  return f;
}

Formula Formula::make_true() { return Formula{}; }

Formula Formula::make_false() {
  Formula f;
  f.kind = Kind::False;
  return f;
}

Formula Formula::make_var(FeatureId id) {
  Formula f;
  f.kind = Kind::Var;
  f.var = id;
  return f;
}

Formula Formula::make_not(Formula inner) {
  Formula f;
  f.kind = Kind::Not;
  f.lhs = std::make_unique<Formula>(std::move(inner));
  return f;
}

Formula Formula::make_and(Formula a, Formula b) {
  Formula f;
  f.kind = Kind::And;
  f.lhs = std::make_unique<Formula>(std::move(a));
  f.rhs = std::make_unique<Formula>(std::move(b));
  return f;
}

Formula Formula::make_or(Formula a, Formula b) {
  Formula f;
  f.kind = Kind::Or;
  f.lhs = std::make_unique<Formula>(std::move(a));
  f.rhs = std::make_unique<Formula>(std::move(b));
  return f;
}

namespace {

// Recursive-descent parser for the PC grammar. '!'/'&&'/'||' with the usual
// precedences; '&' and '|' are accepted as input aliases.
class FormulaParser {
 public:
  FormulaParser(std::string_view text, FeatureTable& features)
      : text_(text), features_(features) {}

  Formula parse() {
    skip_ws();
    Formula f = parse_or();
    skip_ws();
    if (pos_ != text_.size())
      throw PcParseError("unexpected trailing input", pos_);
    return f;
  }

 private:
  Formula parse_or() {
    Formula lhs = parse_and();
    for (;;) {
      skip_ws();
      if (consume("||") || consume("|")) {
        lhs = Formula::make_or(std::move(lhs), parse_and());
      } else {
        return lhs;
      }
    }
  }

  Formula parse_and() {
    Formula lhs = parse_unary();
    for (;;) {
      skip_ws();
      if (consume("&&") || consume("&")) {
        lhs = Formula::make_and(std::move(lhs), parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Formula parse_unary() {
    skip_ws();
    if (consume("!")) return Formula::make_not(parse_unary());
    return parse_primary();
  }

  Formula parse_primary() {
    skip_ws();
    if (pos_ >= text_.size())
      throw PcParseError("unexpected end of formula", pos_);
    if (consume("(")) {
      Formula f = parse_or();
      skip_ws();
      if (!consume(")")) throw PcParseError("expected ')'", pos_);
      return f;
    }
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_'))
        ++pos_;
      std::string_view name = text_.substr(start, pos_ - start);
      if (name == "True") return Formula::make_true();
      if (name == "False") return Formula::make_false();
      return Formula::make_var(features_.intern(name));
    }
    throw PcParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  bool consume(std::string_view token) {
    if (text_.substr(pos_, token.size()) != token) return false;
    // Do not let '|' swallow the first half of '||'.
    if (token.size() == 1 && (token[0] == '&' || token[0] == '|') &&
        pos_ + 1 < text_.size() && text_[pos_ + 1] == token[0])
      return false;
    pos_ += token.size();
    return true;
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  std::string_view text_;
  FeatureTable& features_;
  std::size_t pos_ = 0;
};

}  // namespace

Formula parse_formula(std::string_view text, FeatureTable& features) {
  return FormulaParser(text, features).parse();
}

bool eval_formula(const Formula& f, const Configuration& config,
                  const FeatureTable& features) {
  switch (f.kind) {
    case Formula::Kind::True:
      return true;
    case Formula::Kind::False:
      return false;
    case Formula::Kind::Var: {
      auto v = config.value(f.var);
      if (!v) throw UnassignedFeatureError(features.name(f.var));
      return *v;
    }
    case Formula::Kind::Not:
      return !eval_formula(*f.lhs, config, features);
    case Formula::Kind::And:
      return eval_formula(*f.lhs, config, features) &&
             eval_formula(*f.rhs, config, features);
    case Formula::Kind::Or:
      return eval_formula(*f.lhs, config, features) ||
             eval_formula(*f.rhs, config, features);
  }
  return false;
}

namespace {

// Precedence levels for minimal parenthesization: Or < And < Not/atoms.
int formula_prec(const Formula& f) {
  switch (f.kind) {
    case Formula::Kind::Or:
      return 0;
    case Formula::Kind::And:
      return 1;
    default:
      return 2;
  }
}

void format_into(const Formula& f, const FeatureTable& features, int min_prec,
                 std::string& out) {
  bool parens = formula_prec(f) < min_prec;
  if (parens) out += '(';
  switch (f.kind) {
    case Formula::Kind::True:
      out += "True";
      break;
    case Formula::Kind::False:
      out += "False";
      break;
    case Formula::Kind::Var:
      out += features.name(f.var);
      break;
    case Formula::Kind::Not:
      out += '!';
      format_into(*f.lhs, features, 2, out);
      break;
    case Formula::Kind::And:
      format_into(*f.lhs, features, 1, out);
      out += " && ";
      format_into(*f.rhs, features, 1, out);
      break;
    case Formula::Kind::Or:
      format_into(*f.lhs, features, 0, out);
      out += " || ";
      format_into(*f.rhs, features, 0, out);
      break;
  }
  if (parens) out += ')';
}

}  // namespace

std::string format_formula(const Formula& f, const FeatureTable& features) {
  std::string out;
  format_into(f, features, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// BddStore

PcValue BddStore::mk(FeatureId var, PcValue lo, PcValue hi) {
  if (lo == hi) return lo;  // reduction
  std::array<std::uint32_t, 3> key{var, lo, hi};
  if (auto it = unique_.find(key); it != unique_.end()) return it->second;
  PcValue handle = static_cast<PcValue>(nodes_.size()) + 2;
  nodes_.push_back(Node{var, lo, hi});
  unique_.emplace(key, handle);
  return handle;
}

PcValue BddStore::var(FeatureId f) { return mk(f, kFalse, kTrue); }

PcValue BddStore::apply(Op op, PcValue a, PcValue b) {
  if (op == Op::And) {
    if (a == kFalse || b == kFalse) return kFalse;
    if (a == kTrue) return b;
    if (b == kTrue) return a;
  } else {
    if (a == kTrue || b == kTrue) return kTrue;
    if (a == kFalse) return b;
    if (b == kFalse) return a;
  }
  if (a == b) return a;
  if (a > b) std::swap(a, b);  // both ops are commutative

  std::array<std::uint32_t, 3> key{static_cast<std::uint32_t>(op), a, b};
  if (auto it = apply_cache_.find(key); it != apply_cache_.end())
    return it->second;

  FeatureId va = level(a);
  FeatureId vb = level(b);
  FeatureId v = std::min(va, vb);
  PcValue a_lo = a, a_hi = a, b_lo = b, b_hi = b;
  if (va == v) {
    const Node& n = nodes_[a - 2];
    a_lo = n.lo;
    a_hi = n.hi;
  }
  if (vb == v) {
    const Node& n = nodes_[b - 2];
    b_lo = n.lo;
    b_hi = n.hi;
  }
  PcValue r = mk(v, apply(op, a_lo, b_lo), apply(op, a_hi, b_hi));
  apply_cache_.emplace(key, r);
  return r;
}

PcValue BddStore::conj(PcValue a, PcValue b) { return apply(Op::And, a, b); }

PcValue BddStore::disj(PcValue a, PcValue b) { return apply(Op::Or, a, b); }

PcValue BddStore::negate(PcValue a) {
  if (a == kFalse) return kTrue;
  if (a == kTrue) return kFalse;
  if (auto it = negate_cache_.find(a); it != negate_cache_.end())
    return it->second;
  const Node n = nodes_[a - 2];
  PcValue r = mk(n.var, negate(n.lo), negate(n.hi));
  negate_cache_.emplace(a, r);
  return r;
}

bool BddStore::eval(PcValue a, const Configuration& config) const {
  while (a > kTrue) {
    const Node& n = nodes_[a - 2];
    auto v = config.value(n.var);
    if (!v) throw UnassignedFeatureError(features_->name(n.var));
    a = *v ? n.hi : n.lo;
  }
  return a == kTrue;
}

PcValue BddStore::compile(const Formula& f) {
  switch (f.kind) {
    case Formula::Kind::True:
      return kTrue;
    case Formula::Kind::False:
      return kFalse;
    case Formula::Kind::Var:
      return var(f.var);
    case Formula::Kind::Not:
      return negate(compile(*f.lhs));
    case Formula::Kind::And:
      return conj(compile(*f.lhs), compile(*f.rhs));
    case Formula::Kind::Or:
      return disj(compile(*f.lhs), compile(*f.rhs));
  }
  return kFalse;
}

PcValue BddStore::parse(std::string_view text) {
  std::string key(text);
  if (auto it = parse_cache_.find(key); it != parse_cache_.end())
    return it->second;
  PcValue v = compile(parse_formula(text, *features_));
  parse_cache_.emplace(std::move(key), v);
  return v;
}

std::string BddStore::to_text(PcValue a) const {
  if (a == kFalse) return "False";
  if (a == kTrue) return "True";

  std::vector<std::string> cubes;
  std::vector<std::pair<FeatureId, bool>> path;
  auto walk = [&](auto&& self, PcValue p) -> void {
    if (p == kFalse) return;
    if (p == kTrue) {
      std::vector<std::string> lits;
      lits.reserve(path.size());
      for (auto [f, pos] : path)
        lits.push_back(pos ? features_->name(f) : "!" + features_->name(f));
      std::sort(lits.begin(), lits.end(), [](const auto& x, const auto& y) {
        std::string_view xs = x, ys = y;
        if (xs.starts_with('!')) xs.remove_prefix(1);
        if (ys.starts_with('!')) ys.remove_prefix(1);
        return xs != ys ? xs < ys : x < y;
      });
      std::string cube = lits.front();
      for (std::size_t i = 1; i < lits.size(); ++i) cube += " && " + lits[i];
      cubes.push_back(std::move(cube));
      return;
    }
    const Node& n = nodes_[p - 2];
    path.emplace_back(n.var, false);
    self(self, n.lo);
    path.back().second = true;
    self(self, n.hi);
    path.pop_back();
  };
  walk(walk, a);

  std::sort(cubes.begin(), cubes.end());
  std::string out = cubes.front();
  for (std::size_t i = 1; i < cubes.size(); ++i) out += " || " + cubes[i];
  return out;
}

BddStore::NodeView BddStore::node(PcValue a) const {
  const Node& n = nodes_.at(a - 2);
  return NodeView{n.var, n.lo, n.hi};
}

bool BddStore::audit_structure(PcValue a) const {
  std::vector<PcValue> stack{a};
  std::unordered_map<PcValue, bool> seen;
  std::unordered_map<std::array<std::uint32_t, 3>, PcValue, ArrayHash3>
      triples;
  while (!stack.empty()) {
    PcValue p = stack.back();
    stack.pop_back();
    if (p <= kTrue || seen.count(p)) continue;
    seen.emplace(p, true);
    if (p - 2 >= nodes_.size()) return false;
    const Node& n = nodes_[p - 2];
    if (n.lo == n.hi) return false;  // not reduced
    if (level(n.lo) <= n.var || level(n.hi) <= n.var) return false;
    std::array<std::uint32_t, 3> key{n.var, n.lo, n.hi};
    if (auto [it, inserted] = triples.emplace(key, p); !inserted)
      return false;  // structurally equal nodes with distinct handles
    stack.push_back(n.lo);
    stack.push_back(n.hi);
  }
  return true;
}

// ---------------------------------------------------------------------------
// TextPcStore

TextPcStore::TextPcStore(FeatureTable& features) : features_(&features) {
  true_ = from_formula(Formula::make_true());
  false_ = from_formula(Formula::make_false());
}

TextPcStore::UnitId TextPcStore::intern_unit(const Formula& ast) {
  // Unit text is the canonical rendering, parenthesized when composite so
  // that re-parsing a rendered PC reproduces the same units.
  std::string text;
  if (ast.kind == Formula::Kind::And || ast.kind == Formula::Kind::Or) {
    text = "(" + format_formula(ast, *features_) + ")";
  } else {
    text = format_formula(ast, *features_);
  }
  if (auto it = unit_ids_.find(text); it != unit_ids_.end()) return it->second;
  UnitId id = static_cast<UnitId>(units_.size());
  units_.push_back(Unit{text, ast.clone()});
  unit_ids_.emplace(units_.back().text, id);
  return id;
}

TextPcStore::TermId TextPcStore::intern_term(std::vector<UnitId> units) {
  std::sort(units.begin(), units.end());
  units.erase(std::unique(units.begin(), units.end()), units.end());
  if (auto it = term_ids_.find(units); it != term_ids_.end())
    return it->second;
  TermId id = static_cast<TermId>(terms_.size());
  terms_.push_back(units);
  term_ids_.emplace(std::move(units), id);
  return id;
}

PcValue TextPcStore::intern_pc(std::vector<TermId> terms) {
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  if (auto it = pc_ids_.find(terms); it != pc_ids_.end()) return it->second;
  PcValue id = static_cast<PcValue>(pcs_.size());
  pcs_.push_back(terms);
  pc_ids_.emplace(std::move(terms), id);
  return id;
}

void TextPcStore::flatten_and(const Formula& f, std::vector<UnitId>& units) {
  if (f.kind == Formula::Kind::And) {
    flatten_and(*f.lhs, units);
    flatten_and(*f.rhs, units);
  } else if (f.kind == Formula::Kind::Or) {
    units.push_back(intern_unit(f));  // kept opaque, never distributed
  } else {
    units.push_back(intern_unit(f));
  }
}

void TextPcStore::flatten_or(const Formula& f, std::vector<TermId>& terms) {
  if (f.kind == Formula::Kind::Or) {
    flatten_or(*f.lhs, terms);
    flatten_or(*f.rhs, terms);
  } else {
    std::vector<UnitId> units;
    flatten_and(f, units);
    terms.push_back(intern_term(std::move(units)));
  }
}

PcValue TextPcStore::from_formula(const Formula& f) {
  std::vector<TermId> terms;
  flatten_or(f, terms);
  return intern_pc(std::move(terms));
}

PcValue TextPcStore::parse(std::string_view text) {
  std::string key(text);
  if (auto it = parse_cache_.find(key); it != parse_cache_.end())
    return it->second;
  PcValue v = from_formula(parse_formula(text, *features_));
  parse_cache_.emplace(std::move(key), v);
  return v;
}

PcValue TextPcStore::conj(PcValue a, PcValue b) {
  const auto& ta = pcs_.at(a);
  const auto& tb = pcs_.at(b);
  std::vector<TermId> terms;
  terms.reserve(ta.size() * tb.size());
  for (TermId x : ta) {
    for (TermId y : tb) {
      std::vector<UnitId> units = terms_[x];
      units.insert(units.end(), terms_[y].begin(), terms_[y].end());
      terms.push_back(intern_term(std::move(units)));
    }
  }
  return intern_pc(std::move(terms));
}

PcValue TextPcStore::disj(PcValue a, PcValue b) {
  std::vector<TermId> terms = pcs_.at(a);
  const auto& tb = pcs_.at(b);
  terms.insert(terms.end(), tb.begin(), tb.end());
  return intern_pc(std::move(terms));
}

bool TextPcStore::eval(PcValue a, const Configuration& config) const {
  for (TermId t : pcs_.at(a)) {
    bool all = true;
    for (UnitId u : terms_[t]) {
      if (!eval_formula(units_[u].ast, config, *features_)) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

std::string TextPcStore::to_text(PcValue a) const {
  std::vector<std::string> rendered;
  for (TermId t : pcs_.at(a)) {
    std::vector<std::string> unit_texts;
    unit_texts.reserve(terms_[t].size());
    for (UnitId u : terms_[t]) unit_texts.push_back(units_[u].text);
    std::sort(unit_texts.begin(), unit_texts.end());
    std::string s = unit_texts.front();
    for (std::size_t i = 1; i < unit_texts.size(); ++i)
      s += " && " + unit_texts[i];
    rendered.push_back(std::move(s));
  }
  std::sort(rendered.begin(), rendered.end());
  std::string out = rendered.front();
  for (std::size_t i = 1; i < rendered.size(); ++i) out += " || " + rendered[i];
  return out;
}

}  // namespace vdatalog
