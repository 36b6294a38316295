#include "qsqn/parser.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>

namespace qsqn {

namespace {

enum class Tok { ident, var, lparen, rparen, comma, dot, neck, query, amp, bar, hash, slash, number, end };

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t col;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_blank();
    Token t{Tok::end, "", line_, col_};
    if (pos_ >= src_.size()) return t;
    char c = src_[pos_];
    auto single = [&](Tok k) {
      t.kind = k;
      t.text = std::string(1, c);
      advance();
      return t;
    };
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                    src_[pos_] == '_'))
        advance();
      t.text = std::string(src_.substr(start, pos_ - start));
      t.kind = (std::isupper(static_cast<unsigned char>(c)) || c == '_') ? Tok::var : Tok::ident;
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) advance();
      t.text = std::string(src_.substr(start, pos_ - start));
      t.kind = Tok::number;
      return t;
    }
    switch (c) {
      case '(': return single(Tok::lparen);
      case ')': return single(Tok::rparen);
      case ',': return single(Tok::comma);
      case '.': return single(Tok::dot);
      case '&': return single(Tok::amp);
      case '|':
      case ';': return single(Tok::bar);
      case '#': return single(Tok::hash);
      case '/': return single(Tok::slash);
      case ':':
        if (peek(1) == '-') {
          advance(), advance();
          t.kind = Tok::neck;
          t.text = ":-";
          return t;
        }
        break;
      case '<':  // `<-` accepted as an alternative neck
        if (peek(1) == '-') {
          advance(), advance();
          t.kind = Tok::neck;
          t.text = "<-";
          return t;
        }
        break;
      case '?':
        if (peek(1) == '-') {
          advance(), advance();
          t.kind = Tok::query;
          t.text = "?-";
          return t;
        }
        break;
      default:
        break;
    }
    throw ParseError(ParseError::Kind::syntax, line_, col_,
                     std::string("unexpected character '") + c + "'");
  }

 private:
  char peek(std::size_t k) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_blank() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

const char* describe(Tok k) {
  switch (k) {
    case Tok::ident: return "identifier";
    case Tok::var: return "variable";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::comma: return "','";
    case Tok::dot: return "'.'";
    case Tok::neck: return "':-'";
    case Tok::query: return "'?-'";
    case Tok::amp: return "'&'";
    case Tok::bar: return "'|'";
    case Tok::hash: return "'#'";
    case Tok::slash: return "'/'";
    case Tok::number: return "number";
    case Tok::end: return "end of input";
  }
  return "?";
}

// Atom with its source position, before predicate resolution.
struct RawAtom {
  std::string name;
  Tuple args;
  std::size_t line;
  std::size_t col;
};

class Parser {
 public:
  Parser(KnowledgeBase& kb, std::string_view text) : kb_(kb), lex_(text) { tok_ = lex_.next(); }

  bool at(Tok k) const { return tok_.kind == k; }
  bool at_end() const { return at(Tok::end); }
  const Token& current() const { return tok_; }

  Token expect(Tok k) {
    if (!at(k))
      throw ParseError(ParseError::Kind::syntax, tok_.line, tok_.col,
                       std::string("expected ") + describe(k) + ", found " +
                           (at_end() ? std::string(describe(Tok::end)) : "'" + tok_.text + "'"));
    Token t = tok_;
    tok_ = lex_.next();
    return t;
  }
  bool accept(Tok k) {
    if (!at(k)) return false;
    tok_ = lex_.next();
    return true;
  }

  // Variables are scoped to one clause, fact or query.
  void reset_scope() { scope_.clear(); }

  TermId term() {
    if (at(Tok::var)) {
      Token t = expect(Tok::var);
      if (t.text == "_") return kb_.terms().new_variable("_");
      auto it = scope_.find(t.text);
      if (it != scope_.end()) return it->second;
      TermId v = kb_.terms().new_variable(t.text);
      scope_.emplace(t.text, v);
      order_.push_back(v);
      return v;
    }
    if (at(Tok::number)) return kb_.terms().constant(expect(Tok::number).text);
    Token name = expect(Tok::ident);
    if (!accept(Tok::lparen)) return kb_.terms().constant(name.text);
    Tuple args = term_list();
    expect(Tok::rparen);
    return kb_.terms().make(name.text, args);
  }

  Tuple term_list() {
    Tuple out{term()};
    while (accept(Tok::comma)) out.push_back(term());
    return out;
  }

  RawAtom atom() {
    Token name = expect(Tok::ident);
    RawAtom a{name.text, {}, name.line, name.col};
    if (accept(Tok::lparen)) {
      a.args = term_list();
      expect(Tok::rparen);
    }
    return a;
  }

  Tuple take_var_order() {
    Tuple out = std::move(order_);
    order_.clear();
    return out;
  }

 private:
  KnowledgeBase& kb_;
  Lexer lex_;
  Token tok_;
  std::map<std::string, TermId> scope_;
  Tuple order_;
};

Atom resolve(Program& program, const RawAtom& a, PredKind kind_if_new) {
  PredId p = program.declare(a.name, a.args.size(), kind_if_new, a.line, a.col);
  return {p, a.args};
}

void directive(Parser& ps, Program& program) {
  Token kw = ps.expect(Tok::ident);
  PredKind kind;
  if (kw.text == "extensional")
    kind = PredKind::extensional;
  else if (kw.text == "intensional")
    kind = PredKind::intensional;
  else
    throw ParseError(ParseError::Kind::syntax, kw.line, kw.col, "unknown directive #" + kw.text);
  do {
    Token name = ps.expect(Tok::ident);
    ps.expect(Tok::slash);
    Token n = ps.expect(Tok::number);
    std::size_t arity = std::stoul(n.text);
    PredId p = program.declare(name.text, arity, kind, name.line, name.col);
    if (program.predicate(p).declared && program.predicate(p).kind != kind)
      throw ParseError(ParseError::Kind::syntax, name.line, name.col,
                       "conflicting directives for " + name.text);
    program.set_kind(p, kind);
    program.mark_declared(p);
  } while (ps.accept(Tok::comma));
  ps.expect(Tok::dot);
}

}  // namespace

void parse_program(KnowledgeBase& kb, std::string_view text) {
  Program& program = kb.program;
  Parser ps(kb, text);
  struct HeadSite {
    PredId pred;
    std::size_t line, col;
  };
  std::vector<HeadSite> heads;
  std::set<PredId> in_heads;

  while (!ps.at_end()) {
    if (ps.at(Tok::hash)) {
      ps.expect(Tok::hash);
      directive(ps, program);
      continue;
    }
    ps.reset_scope();
    RawAtom head = ps.atom();
    Clause c;
    c.head = resolve(program, head, PredKind::intensional);
    if (ps.accept(Tok::neck)) {
      // `p :- .` is the empty body
      if (!ps.at(Tok::dot)) {
        do c.body.push_back(resolve(program, ps.atom(), PredKind::extensional));
        while (ps.accept(Tok::comma));
      }
    }
    ps.expect(Tok::dot);
    heads.push_back({c.head.pred, head.line, head.col});
    in_heads.insert(c.head.pred);
    program.add_clause(std::move(c));
    (void)ps.take_var_order();
  }

  for (const HeadSite& h : heads) {
    const Predicate& pr = program.predicate(h.pred);
    if ((pr.declared && pr.kind == PredKind::extensional) || kb.edb.relation(h.pred))
      throw ParseError(ParseError::Kind::extensional_in_head, h.line, h.col,
                       "extensional predicate " + pr.name + " in clause head");
    program.set_kind(h.pred, PredKind::intensional);
  }
}

void parse_edb(KnowledgeBase& kb, std::string_view text) {
  Parser ps(kb, text);
  while (!ps.at_end()) {
    ps.reset_scope();
    RawAtom a = ps.atom();
    ps.expect(Tok::dot);
    PredId p = kb.program.declare(a.name, a.args.size(), PredKind::extensional, a.line, a.col);
    if (kb.program.is_intensional(p))
      throw ParseError(ParseError::Kind::extensional_in_head, a.line, a.col,
                       "fact for intensional predicate " + a.name);
    kb.edb.add(kb.terms(), p, a.args.size(), a.args);
    (void)ps.take_var_order();
  }
}

void load_csv(KnowledgeBase& kb, std::string_view pred, std::string_view text) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  std::optional<PredId> p;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    Tuple row;
    std::size_t f = 0;
    while (true) {
      std::size_t comma = line.find(',', f);
      std::string_view field = line.substr(f, comma == std::string_view::npos ? comma : comma - f);
      auto b = field.find_first_not_of(" \t");
      auto e = field.find_last_not_of(" \t");
      if (b == std::string_view::npos)
        throw ParseError(ParseError::Kind::syntax, line_no, f + 1, "empty CSV field");
      row.push_back(kb.terms().constant(field.substr(b, e - b + 1)));
      if (comma == std::string_view::npos) break;
      f = comma + 1;
    }
    if (!p) {
      p = kb.program.declare(pred, row.size(), PredKind::extensional, line_no, 1);
      if (kb.program.is_intensional(*p))
        throw ParseError(ParseError::Kind::extensional_in_head, line_no, 1,
                         "CSV data for intensional predicate " + std::string(pred));
    } else if (kb.program.predicate(*p).arity != row.size()) {
      throw ParseError(ParseError::Kind::arity_conflict, line_no, 1,
                       "row has " + std::to_string(row.size()) + " fields, expected " +
                           std::to_string(kb.program.predicate(*p).arity));
    }
    std::size_t arity = row.size();
    kb.edb.add(kb.terms(), *p, arity, std::move(row));
    if (end == text.size()) break;
  }
}

namespace {

Formula disjunction(Parser& ps, Program& program);

Formula primary(Parser& ps, Program& program) {
  if (ps.accept(Tok::lparen)) {
    Formula f = disjunction(ps, program);
    ps.expect(Tok::rparen);
    return f;
  }
  RawAtom a = ps.atom();
  auto p = program.find(a.name);
  if (!p)
    throw ParseError(ParseError::Kind::unknown_predicate, a.line, a.col,
                     "unknown predicate " + a.name);
  if (program.predicate(*p).arity != a.args.size())
    throw ParseError(ParseError::Kind::arity_conflict, a.line, a.col,
                     "predicate " + a.name + " has arity " +
                         std::to_string(program.predicate(*p).arity));
  Formula f;
  f.atom = {*p, a.args};
  return f;
}

void absorb(Formula& parent, Formula child) {
  if (child.kind == parent.kind)
    for (Formula& c : child.children) parent.children.push_back(std::move(c));
  else
    parent.children.push_back(std::move(child));
}

Formula conjunction(Parser& ps, Program& program) {
  Formula first = primary(ps, program);
  if (!ps.at(Tok::amp) && !ps.at(Tok::comma)) return first;
  Formula f;
  f.kind = Formula::Kind::conj;
  absorb(f, std::move(first));
  while (ps.accept(Tok::amp) || ps.accept(Tok::comma)) absorb(f, primary(ps, program));
  return f;
}

Formula disjunction(Parser& ps, Program& program) {
  Formula first = conjunction(ps, program);
  if (!ps.at(Tok::bar)) return first;
  Formula f;
  f.kind = Formula::Kind::disj;
  absorb(f, std::move(first));
  while (ps.accept(Tok::bar)) absorb(f, conjunction(ps, program));
  return f;
}

}  // namespace

Query parse_query(KnowledgeBase& kb, std::string_view text) {
  Parser ps(kb, text);
  ps.accept(Tok::query);
  Query q;
  q.formula = disjunction(ps, kb.program);
  ps.accept(Tok::dot);
  if (!ps.at_end())
    throw ParseError(ParseError::Kind::syntax, ps.current().line, ps.current().col,
                     "trailing input after query");
  q.vars = ps.take_var_order();
  return q;
}

// ---------------------------------------------------------------------------

namespace {

class Normalizer {
 public:
  explicit Normalizer(KnowledgeBase& kb) : kb_(kb) {}

  Atom lower(const Formula& f) {
    if (f.kind == Formula::Kind::atom) return f.atom;
    // Children first, so inner predicates get the lower numbers.
    std::vector<std::vector<Atom>> bodies;
    if (f.kind == Formula::Kind::conj)
      bodies.push_back(body_of(f));
    else
      for (const Formula& d : f.children) bodies.push_back(body_of(d));
    Tuple vars;
    collect(f, vars);
    Atom head{new_pred(vars.size()), vars};
    for (auto& b : bodies) kb_.program.add_clause({head, std::move(b)});
    return head;
  }

  Atom wrap(const Atom& a, const Tuple& vars) {
    Atom head{new_pred(vars.size()), vars};
    kb_.program.add_clause({head, {a}});
    return head;
  }

 private:
  std::vector<Atom> body_of(const Formula& f) {
    if (f.kind != Formula::Kind::conj) return {lower(f)};
    std::vector<Atom> body;
    for (const Formula& c : f.children) body.push_back(lower(c));
    return body;
  }

  PredId new_pred(std::size_t arity) {
    while (kb_.program.find("_q" + std::to_string(next_))) ++next_;
    std::string name = "_q" + std::to_string(next_++);
    PredId p = kb_.program.declare(name, arity, PredKind::intensional);
    return p;
  }

  void collect(const Formula& f, Tuple& out) {
    if (f.kind == Formula::Kind::atom) {
      for (TermId v : variables_of(kb_.terms(), f.atom.args))
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
      return;
    }
    for (const Formula& c : f.children) collect(c, out);
  }

  KnowledgeBase& kb_;
  std::size_t next_ = 0;
};

}  // namespace

NormalizedQuery normalize_query(KnowledgeBase& kb, const Query& q) {
  NormalizedQuery out;
  out.vars = q.vars;
  Normalizer n(kb);
  if (q.formula.kind == Formula::Kind::atom) {
    if (kb.program.is_intensional(q.formula.atom.pred)) {
      out.goal = q.formula.atom;
      return out;
    }
    out.goal = n.wrap(q.formula.atom, q.vars);
    out.rewritten = true;
    return out;
  }
  out.goal = n.lower(q.formula);
  out.rewritten = true;
  return out;
}

}  // namespace qsqn
