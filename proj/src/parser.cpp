#include "cflpfd/parser.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "cflpfd/lexer.hpp"
#include "embedded_toy.hpp"

namespace cflpfd {

Module::Module() {
  auto set = [&](std::initializer_list<const char*> ops, int prec, int assoc) {
    for (const char* o : ops) fixity[o] = {prec, assoc};
  };
  set({"#*", "#/", "*", "/"}, 70, -1);
  set({"#+", "#-", "+", "-"}, 60, -1);
  set({"#<", "#<=", "#>", "#>=", "#=", "#\\=", "<", "<=", ">", ">="}, 50, 0);
  set({"==", "/="}, 40, 0);
}

namespace {

namespace fs = std::filesystem;

bool is_reserved_op(const std::string& s) {
  return s == "=" || s == "<==" || s == "::" || s == "|" || s == "->" ||
         s == ":-";
}

SrcLoc loc_of(const Token& t) { return {t.line, t.col}; }

std::string tok_desc(const Token& t) {
  if (t.kind == Tok::End) return "end of declaration";
  return "'" + t.text + "'";
}

enum class DKind { Include, Fixity, Data, Alias, Annot, Rule, Bad };

struct Decl {
  DKind kind = DKind::Bad;
  std::vector<Token> toks;  // End-terminated
};

struct Cur {
  const std::vector<Token>& t;
  size_t pos = 0;
  const Token& cur() const { return t[pos]; }
  const Token& peek() const { return t[std::min(pos + 1, t.size() - 1)]; }
  void next() {
    if (pos + 1 < t.size()) pos++;
  }
  bool at_end() const { return t[pos].kind == Tok::End; }
};

struct VarScope {
  std::map<std::string, VarId>* names;
  std::vector<std::pair<std::string, VarId>>* order = nullptr;
};

bool starts_atom(const Token& t) {
  switch (t.kind) {
    case Tok::Int:
    case Tok::Var:
    case Tok::Ident:
    case Tok::LParen:
    case Tok::LBracket:
      return true;
    default:
      return false;
  }
}

struct PendingRule {
  SymbolId fn = -1;
  std::vector<TermPtr> lhs;
  std::map<std::string, VarId> scope;
  size_t resume = 0;
  int decl = -1;
  bool is_clause = false;
  SrcLoc loc;
};

std::string read_file(const std::string& path, std::string& err) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    err = "cannot open '" + path + "'";
    return "";
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

struct FileParser {
  Module& m;
  ModuleLoader* loader;  // null when parsing goals (includes disabled)
  std::vector<Diagnostic>& diags;
  std::string file;
  std::string dir;
  std::vector<Decl> decls;

  void error(SrcLoc loc, std::string msg) {
    diags.push_back({file, loc, std::move(msg)});
  }

  // ------------------------------------------------------------------
  // Layout: a token in column 1 begins a new declaration; indented lines
  // continue the current one.
  // ------------------------------------------------------------------
  void split(const std::vector<Token>& toks) {
    for (const Token& t : toks) {
      if (t.kind == Tok::End) break;
      if (decls.empty() || t.col == 1) decls.emplace_back();
      decls.back().toks.push_back(t);
    }
    for (Decl& d : decls) {
      Token end;
      end.kind = Tok::End;
      end.line = d.toks.back().line;
      end.col = d.toks.back().col + static_cast<int>(d.toks.back().text.size());
      d.toks.push_back(std::move(end));
    }
  }

  void classify() {
    for (Decl& d : decls) {
      switch (d.toks[0].kind) {
        case Tok::KwInclude:
          d.kind = DKind::Include;
          continue;
        case Tok::KwInfix:
        case Tok::KwInfixl:
        case Tok::KwInfixr:
          d.kind = DKind::Fixity;
          continue;
        case Tok::KwData:
          d.kind = DKind::Data;
          continue;
        case Tok::KwType:
          d.kind = DKind::Alias;
          continue;
        default:
          break;
      }
      int depth = 0;
      for (const Token& t : d.toks) {
        if (t.kind == Tok::LParen || t.kind == Tok::LBracket) depth++;
        if (t.kind == Tok::RParen || t.kind == Tok::RBracket) depth--;
        if (depth == 0 && t.kind == Tok::Op) {
          if (t.text == "::") {
            d.kind = DKind::Annot;
            break;
          }
          if (t.text == "=" || t.text == ":-") {
            d.kind = DKind::Rule;
            break;
          }
        }
      }
      if (d.kind == DKind::Bad)
        error(loc_of(d.toks[0]),
              "declaration is neither a type annotation nor a rule");
    }
  }

  // ------------------------------------------------------------------
  // Expressions
  // ------------------------------------------------------------------
  SymbolId op_symbol(const Token& t, bool auto_create) {
    SymbolId s = m.sig.lookup(t.text);
    if (s >= 0) return s;
    if (auto_create) return m.sig.add(t.text, SymKind::Defined, -1);
    error(loc_of(t), "unknown operator '" + t.text + "'");
    return -1;
  }

  TermPtr parse_expr(Cur& c, VarScope& vs, bool auto_create, int min_prec) {
    TermPtr lhs = parse_apply(c, vs, auto_create);
    if (!lhs) return nullptr;
    while (c.cur().kind == Tok::Op) {
      const std::string op = c.cur().text;
      if (is_reserved_op(op)) break;
      auto fx = m.fixity.find(op);
      if (fx == m.fixity.end()) break;
      if (c.peek().kind == Tok::RParen) break;  // left operator section
      auto [prec, assoc] = fx->second;
      if (prec < min_prec) break;
      SymbolId os = op_symbol(c.cur(), auto_create);
      if (os < 0) return nullptr;
      c.next();
      TermPtr rhs = parse_expr(c, vs, auto_create, assoc > 0 ? prec : prec + 1);
      if (!rhs) return nullptr;
      lhs = mk_app(os, {lhs, rhs});
      if (assoc == 0 && c.cur().kind == Tok::Op &&
          !is_reserved_op(c.cur().text)) {
        auto fx2 = m.fixity.find(c.cur().text);
        if (fx2 != m.fixity.end() && fx2->second.first == prec &&
            fx2->second.second == 0) {
          error(loc_of(c.cur()),
                "operator '" + c.cur().text +
                    "' is non-associative; use parentheses");
          return nullptr;
        }
      }
    }
    return lhs;
  }

  TermPtr parse_apply(Cur& c, VarScope& vs, bool auto_create) {
    SrcLoc here = loc_of(c.cur());
    TermPtr first = parse_atom(c, vs, auto_create);
    if (!first) return nullptr;
    std::vector<TermPtr> extra;
    while (starts_atom(c.cur())) {
      TermPtr a = parse_atom(c, vs, auto_create);
      if (!a) return nullptr;
      extra.push_back(std::move(a));
    }
    if (extra.empty()) return first;
    if (first->kind != TermKind::Var && first->kind != TermKind::App &&
        first->kind != TermKind::FlexApp) {
      error(here, "this expression cannot be applied to arguments");
      return nullptr;
    }
    return mk_applied(first, std::move(extra));
  }

  TermPtr var_ref(const Token& t, VarScope& vs) {
    if (t.text == "_") return mk_var(m.vars.fresh(""));
    auto it = vs.names->find(t.text);
    if (it == vs.names->end()) {
      VarId v = m.vars.fresh(t.text);
      it = vs.names->emplace(t.text, v).first;
      if (vs.order) vs.order->push_back({t.text, v});
    }
    return mk_var(it->second);
  }

  TermPtr parse_atom(Cur& c, VarScope& vs, bool auto_create) {
    const Token t = c.cur();
    switch (t.kind) {
      case Tok::Int:
        c.next();
        return mk_int(t.ival);
      case Tok::Var:
        c.next();
        return var_ref(t, vs);
      case Tok::Ident: {
        c.next();
        SymbolId s = m.sig.lookup(t.text);
        if (s < 0) {
          if (!auto_create) {
            error(loc_of(t), "unknown symbol '" + t.text + "'");
            return nullptr;
          }
          s = m.sig.add(t.text, SymKind::Defined, -1);
        }
        return mk_app(s, {});
      }
      case Tok::LParen: {
        c.next();
        if (c.cur().kind == Tok::Op && !is_reserved_op(c.cur().text)) {
          SymbolId os = op_symbol(c.cur(), auto_create);
          if (os < 0) return nullptr;
          c.next();
          std::vector<TermPtr> args;
          while (starts_atom(c.cur())) {
            TermPtr a = parse_atom(c, vs, auto_create);
            if (!a) return nullptr;
            args.push_back(std::move(a));
          }
          if (c.cur().kind != Tok::RParen) {
            error(loc_of(c.cur()), "expected ')', found " + tok_desc(c.cur()));
            return nullptr;
          }
          c.next();
          return mk_app(os, std::move(args));
        }
        TermPtr e = parse_expr(c, vs, auto_create, 0);
        if (!e) return nullptr;
        if (c.cur().kind == Tok::Comma) {
          std::vector<TermPtr> parts{e};
          while (c.cur().kind == Tok::Comma) {
            c.next();
            TermPtr p = parse_expr(c, vs, auto_create, 0);
            if (!p) return nullptr;
            parts.push_back(std::move(p));
          }
          if (c.cur().kind != Tok::RParen) {
            error(loc_of(c.cur()), "expected ')', found " + tok_desc(c.cur()));
            return nullptr;
          }
          if (static_cast<int>(parts.size()) > kMaxTupleWidth) {
            error(loc_of(t), "tuple wider than " +
                                 std::to_string(kMaxTupleWidth) +
                                 " components");
            return nullptr;
          }
          c.next();
          return mk_tuple(std::move(parts));
        }
        if (c.cur().kind == Tok::Op && c.peek().kind == Tok::RParen &&
            !is_reserved_op(c.cur().text) && m.fixity.count(c.cur().text)) {
          SymbolId os = op_symbol(c.cur(), auto_create);
          if (os < 0) return nullptr;
          c.next();
          c.next();
          return mk_app(os, {std::move(e)});
        }
        if (c.cur().kind != Tok::RParen) {
          error(loc_of(c.cur()), "expected ')', found " + tok_desc(c.cur()));
          return nullptr;
        }
        c.next();
        return e;
      }
      case Tok::LBracket: {
        c.next();
        if (c.cur().kind == Tok::RBracket) {
          c.next();
          return mk_app(m.sig.s_nil, {});
        }
        std::vector<TermPtr> elems;
        TermPtr tail;
        while (true) {
          TermPtr e = parse_expr(c, vs, auto_create, 0);
          if (!e) return nullptr;
          elems.push_back(std::move(e));
          if (c.cur().kind == Tok::Comma) {
            c.next();
            continue;
          }
          if (c.cur().kind == Tok::Op && c.cur().text == "|") {
            c.next();
            tail = parse_expr(c, vs, auto_create, 0);
            if (!tail) return nullptr;
          }
          break;
        }
        if (c.cur().kind != Tok::RBracket) {
          error(loc_of(c.cur()), "expected ']', found " + tok_desc(c.cur()));
          return nullptr;
        }
        c.next();
        TermPtr acc = tail ? tail : mk_app(m.sig.s_nil, {});
        for (auto it = elems.rbegin(); it != elems.rend(); ++it)
          acc = mk_app(m.sig.s_cons, {*it, acc});
        return acc;
      }
      default:
        error(loc_of(t), "unexpected " + tok_desc(t));
        return nullptr;
    }
  }

  // ------------------------------------------------------------------
  // Types
  // ------------------------------------------------------------------
  struct TvScope {
    std::map<std::string, TypeVarId> names;
    TypeVarId next = 0;
    bool allow_new = true;
  };

  bool starts_atype(const Token& t) {
    return t.kind == Tok::Ident || t.kind == Tok::Var ||
           t.kind == Tok::LParen || t.kind == Tok::LBracket;
  }

  TypePtr resolve_type_name(const Token& name, std::vector<TypePtr> args) {
    auto al = m.aliases.find(name.text);
    if (al != m.aliases.end()) {
      const auto& [params, body] = al->second;
      if (params.size() != args.size()) {
        error(loc_of(name), "type alias '" + name.text + "' expects " +
                                std::to_string(params.size()) + " arguments");
        return nullptr;
      }
      TypeSubst ren;
      for (size_t i = 0; i < params.size(); ++i) ren.bind(params[i], args[i]);
      return ren.apply(body);
    }
    int con = m.tt.lookup_con(name.text);
    if (con < 0) {
      error(loc_of(name), "unknown type '" + name.text + "'");
      return nullptr;
    }
    if (m.tt.con_rank(con) != static_cast<int>(args.size())) {
      error(loc_of(name), "type '" + name.text + "' expects " +
                              std::to_string(m.tt.con_rank(con)) +
                              " arguments, given " +
                              std::to_string(args.size()));
      return nullptr;
    }
    return t_con(con, std::move(args));
  }

  TypePtr parse_type(Cur& c, TvScope& tvs) {
    TypePtr lhs = parse_btype(c, tvs);
    if (!lhs) return nullptr;
    if (c.cur().kind == Tok::Op && c.cur().text == "->") {
      c.next();
      TypePtr rhs = parse_type(c, tvs);
      if (!rhs) return nullptr;
      return t_arrow(std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  TypePtr parse_btype(Cur& c, TvScope& tvs) {
    if (c.cur().kind == Tok::Ident) {
      Token name = c.cur();
      c.next();
      std::vector<TypePtr> args;
      while (starts_atype(c.cur())) {
        TypePtr a = parse_atype(c, tvs);
        if (!a) return nullptr;
        args.push_back(std::move(a));
      }
      return resolve_type_name(name, std::move(args));
    }
    return parse_atype(c, tvs);
  }

  TypePtr parse_atype(Cur& c, TvScope& tvs) {
    const Token t = c.cur();
    switch (t.kind) {
      case Tok::Ident:
        c.next();
        return resolve_type_name(t, {});
      case Tok::Var: {
        c.next();
        auto it = tvs.names.find(t.text);
        if (it == tvs.names.end()) {
          if (!tvs.allow_new) {
            error(loc_of(t), "type variable " + t.text +
                                 " is not bound by the declaration head");
            return nullptr;
          }
          it = tvs.names.emplace(t.text, tvs.next++).first;
        }
        return t_var(it->second);
      }
      case Tok::LBracket: {
        c.next();
        TypePtr inner = parse_type(c, tvs);
        if (!inner) return nullptr;
        if (c.cur().kind != Tok::RBracket) {
          error(loc_of(c.cur()), "expected ']', found " + tok_desc(c.cur()));
          return nullptr;
        }
        c.next();
        return m.tt.list_of(std::move(inner));
      }
      case Tok::LParen: {
        c.next();
        std::vector<TypePtr> parts;
        while (true) {
          TypePtr p = parse_type(c, tvs);
          if (!p) return nullptr;
          parts.push_back(std::move(p));
          if (c.cur().kind == Tok::Comma) {
            c.next();
            continue;
          }
          break;
        }
        if (c.cur().kind != Tok::RParen) {
          error(loc_of(c.cur()), "expected ')', found " + tok_desc(c.cur()));
          return nullptr;
        }
        c.next();
        if (parts.size() == 1) return parts[0];
        if (static_cast<int>(parts.size()) > kMaxTupleWidth) {
          error(loc_of(t), "tuple type wider than " +
                               std::to_string(kMaxTupleWidth) + " components");
          return nullptr;
        }
        return t_tuple(std::move(parts));
      }
      default:
        error(loc_of(t), "unexpected " + tok_desc(t) + " in a type");
        return nullptr;
    }
  }

  // ------------------------------------------------------------------
  // Declarations
  // ------------------------------------------------------------------
  void handle_include(const Decl& d) {
    Cur c{d.toks};
    c.next();  // 'include'
    if (c.cur().kind != Tok::String) {
      error(loc_of(c.cur()), "expected a file name after include");
      return;
    }
    std::string name = c.cur().text;
    c.next();
    if (!c.at_end()) {
      error(loc_of(c.cur()), "unexpected " + tok_desc(c.cur()));
      return;
    }
    if (!loader) {
      error(loc_of(d.toks[0]), "includes are not allowed here");
      return;
    }
    if (m.included.count(name)) return;
    m.included.insert(name);
    std::string text, err;
    if (!loader->resolve_include(name, dir, text, err)) {
      error(loc_of(d.toks[0]), err);
      return;
    }
    loader->process(m, text, name, dir, diags);
  }

  void handle_fixity(const Decl& d) {
    Cur c{d.toks};
    int assoc = d.toks[0].kind == Tok::KwInfixl  ? -1
                : d.toks[0].kind == Tok::KwInfixr ? 1
                                                  : 0;
    c.next();
    if (c.cur().kind != Tok::Int) {
      error(loc_of(c.cur()), "expected a precedence number");
      return;
    }
    int prec = static_cast<int>(c.cur().ival);
    c.next();
    if (c.cur().kind != Tok::Op || is_reserved_op(c.cur().text)) {
      error(loc_of(c.cur()), "expected an operator symbol");
      return;
    }
    std::string op = c.cur().text;
    c.next();
    if (!c.at_end()) {
      error(loc_of(c.cur()), "unexpected " + tok_desc(c.cur()));
      return;
    }
    auto it = m.fixity.find(op);
    if (it != m.fixity.end() &&
        it->second != std::make_pair(prec, assoc)) {
      error(loc_of(d.toks[0]),
            "conflicting infix declaration for '" + op + "'");
      return;
    }
    m.fixity[op] = {prec, assoc};
  }

  // data name A B = c1 t.. | c2 t.. — first the type constructor (header),
  // later the alternatives (body), so datatypes may reference each other.
  void data_header(const Decl& d) {
    Cur c{d.toks};
    c.next();  // 'data'
    if (c.cur().kind != Tok::Ident) {
      error(loc_of(c.cur()), "expected a type name after data");
      return;
    }
    Token name = c.cur();
    c.next();
    std::vector<std::string> params;
    while (c.cur().kind == Tok::Var) {
      for (const auto& p : params)
        if (p == c.cur().text)
          error(loc_of(c.cur()),
                "duplicate type parameter " + c.cur().text);
      params.push_back(c.cur().text);
      c.next();
    }
    if (!(c.cur().kind == Tok::Op && c.cur().text == "=")) {
      error(loc_of(c.cur()), "expected '=' in the datatype declaration");
      return;
    }
    if (m.aliases.count(name.text)) {
      error(loc_of(name), "'" + name.text + "' is already a type alias");
      return;
    }
    int con = m.tt.lookup_con(name.text);
    if (con >= 0) {
      if (m.tt.con_rank(con) != static_cast<int>(params.size()) ||
          m.sig.family_of_type(name.text) != -1) {
        error(loc_of(name), "datatype '" + name.text + "' is already defined");
        return;
      }
      return;  // predefined empty type being filled in (labelType)
    }
    m.tt.add_con(name.text, static_cast<int>(params.size()));
  }

  void data_body(const Decl& d) {
    Cur c{d.toks};
    c.next();
    if (c.cur().kind != Tok::Ident) return;  // header already diagnosed
    Token name = c.cur();
    c.next();
    TvScope tvs;
    tvs.allow_new = false;
    std::vector<TypePtr> param_tys;
    while (c.cur().kind == Tok::Var) {
      TypeVarId v = tvs.next++;
      tvs.names.emplace(c.cur().text, v);
      param_tys.push_back(t_var(v));
      c.next();
    }
    if (!(c.cur().kind == Tok::Op && c.cur().text == "=")) return;
    c.next();
    int con = m.tt.lookup_con(name.text);
    if (con < 0) return;
    if (m.sig.family_of_type(name.text) != -1) return;  // already diagnosed
    int family = m.sig.add_family(name.text);
    TypePtr result = t_con(con, param_tys);
    std::vector<TypeVarId> quant;
    for (TypeVarId v = 0; v < tvs.next; ++v) quant.push_back(v);

    while (true) {
      if (c.cur().kind != Tok::Ident) {
        error(loc_of(c.cur()), "expected a constructor name");
        return;
      }
      Token cname = c.cur();
      c.next();
      std::vector<TypePtr> argtys;
      while (starts_atype(c.cur())) {
        TypePtr a = parse_atype(c, tvs);
        if (!a) return;
        argtys.push_back(std::move(a));
      }
      if (m.sig.lookup(cname.text) >= 0) {
        error(loc_of(cname),
              "symbol '" + cname.text + "' is already defined");
        return;
      }
      SymbolId s = m.sig.add_constructor(
          cname.text, static_cast<int>(argtys.size()), family);
      m.tt.set_scheme(s, {quant, t_fun(argtys, result)});
      if (c.cur().kind == Tok::Op && c.cur().text == "|") {
        c.next();
        continue;
      }
      break;
    }
    if (!c.at_end())
      error(loc_of(c.cur()), "unexpected " + tok_desc(c.cur()));
  }

  void alias_decl(const Decl& d) {
    Cur c{d.toks};
    c.next();  // 'type'
    if (c.cur().kind != Tok::Ident) {
      error(loc_of(c.cur()), "expected a type name after type");
      return;
    }
    Token name = c.cur();
    c.next();
    TvScope tvs;
    tvs.allow_new = false;
    std::vector<TypeVarId> params;
    while (c.cur().kind == Tok::Var) {
      params.push_back(tvs.next);
      tvs.names.emplace(c.cur().text, tvs.next++);
      c.next();
    }
    if (!(c.cur().kind == Tok::Op && c.cur().text == "=")) {
      error(loc_of(c.cur()), "expected '=' in the type alias");
      return;
    }
    c.next();
    if (m.tt.lookup_con(name.text) >= 0 || m.aliases.count(name.text)) {
      error(loc_of(name), "type '" + name.text + "' is already defined");
      return;
    }
    TypePtr body = parse_type(c, tvs);
    if (!body) return;
    if (!c.at_end()) {
      error(loc_of(c.cur()), "unexpected " + tok_desc(c.cur()));
      return;
    }
    m.aliases[name.text] = {std::move(params), std::move(body)};
  }

  void annot_decl(const Decl& d) {
    Cur c{d.toks};
    std::string name;
    SrcLoc nloc = loc_of(c.cur());
    if (c.cur().kind == Tok::Ident) {
      name = c.cur().text;
      c.next();
    } else if (c.cur().kind == Tok::LParen && c.peek().kind == Tok::Op) {
      name = c.peek().text;
      c.next();
      c.next();
      if (c.cur().kind != Tok::RParen) {
        error(loc_of(c.cur()), "expected ')', found " + tok_desc(c.cur()));
        return;
      }
      c.next();
    } else {
      error(nloc, "expected a function name before '::'");
      return;
    }
    if (!(c.cur().kind == Tok::Op && c.cur().text == "::")) {
      error(loc_of(c.cur()), "expected '::'");
      return;
    }
    c.next();
    TvScope tvs;
    TypePtr ty = parse_type(c, tvs);
    if (!ty) return;
    if (!c.at_end()) {
      error(loc_of(c.cur()), "unexpected " + tok_desc(c.cur()));
      return;
    }
    SymbolId s = m.sig.lookup(name);
    if (s < 0) {
      s = m.sig.add(name, SymKind::Defined, -1);
    } else if (m.sig.info(s).kind != SymKind::Defined) {
      error(nloc, "cannot declare a type for '" + name + "'");
      return;
    }
    if (m.tt.has_scheme(s)) {
      error(nloc, "duplicate type declaration for '" + name + "'");
      return;
    }
    m.tt.set_scheme(s, {type_vars_in_order(ty), ty});
  }

  // Rule heads first (so later rule bodies may reference any function in
  // the file), then right-hand sides and conditions.
  void rule_heads(std::vector<PendingRule>& pend) {
    for (size_t i = 0; i < decls.size(); ++i) {
      if (decls[i].kind != DKind::Rule) continue;
      Cur c{decls[i].toks};
      PendingRule pr;
      pr.decl = static_cast<int>(i);
      pr.loc = loc_of(c.cur());
      VarScope vs{&pr.scope, nullptr};
      TermPtr lhs = parse_expr(c, vs, /*auto_create=*/true, 0);
      if (!lhs) continue;
      if (c.cur().kind == Tok::Op && c.cur().text == "=") {
        pr.is_clause = false;
      } else if (c.cur().kind == Tok::Op && c.cur().text == ":-") {
        pr.is_clause = true;
      } else {
        error(loc_of(c.cur()),
              "expected '=' or ':-' after the rule head, found " +
                  tok_desc(c.cur()));
        continue;
      }
      c.next();
      pr.resume = c.pos;
      if (lhs->kind != TermKind::App) {
        error(pr.loc, "the left-hand side must be a function name applied "
                      "to patterns");
        continue;
      }
      SymbolId h = lhs->head;
      const SymbolInfo& info = m.sig.info(h);
      if (info.kind == SymKind::Constructor) {
        error(pr.loc,
              "cannot define rules for data constructor '" + info.name + "'");
        continue;
      }
      if (info.kind == SymKind::Primitive) {
        error(pr.loc, "cannot redefine primitive '" + info.name + "'");
        continue;
      }
      int n = static_cast<int>(lhs->args.size());
      if (info.arity < 0) {
        m.sig.info_mut(h).arity = n;
      } else if (info.arity != n) {
        error(pr.loc, "rules for '" + info.name +
                          "' have different numbers of arguments");
        continue;
      }
      pr.fn = h;
      pr.lhs = lhs->args;
      pend.push_back(std::move(pr));
    }
  }

  void rule_bodies(std::vector<PendingRule>& pend) {
    for (PendingRule& pr : pend) {
      Cur c{decls[pr.decl].toks};
      c.pos = pr.resume;
      VarScope vs{&pr.scope, nullptr};
      TermPtr rhs;
      if (pr.is_clause) {
        rhs = mk_app(m.sig.s_true, {});
      } else {
        rhs = parse_expr(c, vs, false, 0);
        if (!rhs) continue;
      }
      std::vector<TermPtr> conds;
      bool want_conds = pr.is_clause;
      if (!pr.is_clause && c.cur().kind == Tok::Op && c.cur().text == "<==") {
        c.next();
        want_conds = true;
      }
      bool bad = false;
      if (want_conds) {
        while (true) {
          TermPtr cd = parse_expr(c, vs, false, 0);
          if (!cd) {
            bad = true;
            break;
          }
          conds.push_back(std::move(cd));
          if (c.cur().kind == Tok::Comma) {
            c.next();
            continue;
          }
          break;
        }
      }
      if (bad) continue;
      if (!c.at_end()) {
        error(loc_of(c.cur()),
              "unexpected " + tok_desc(c.cur()) + " after the rule");
        continue;
      }
      m.prog.add_rule({pr.fn, pr.lhs, rhs, conds, pr.loc});
    }
  }

  void run() {
    for (const Decl& d : decls) {
      if (d.kind == DKind::Include) handle_include(d);
      if (d.kind == DKind::Fixity) handle_fixity(d);
    }
    for (const Decl& d : decls)
      if (d.kind == DKind::Data) data_header(d);
    for (const Decl& d : decls)
      if (d.kind == DKind::Alias) alias_decl(d);
    for (const Decl& d : decls)
      if (d.kind == DKind::Data) data_body(d);
    for (const Decl& d : decls)
      if (d.kind == DKind::Annot) annot_decl(d);
    std::vector<PendingRule> pend;
    rule_heads(pend);
    rule_bodies(pend);
  }
};

bool ModuleLoader::load_file(Module& m, const std::string& path,
                             std::vector<Diagnostic>& diags) {
  std::string err;
  std::string text = read_file(path, err);
  if (!err.empty()) {
    diags.push_back({path, {}, err});
    return false;
  }
  std::string dir = fs::path(path).parent_path().string();
  m.included.insert(fs::path(path).filename().string());
  return process(m, text, path, dir, diags);
}

bool ModuleLoader::load_text(Module& m, const std::string& text,
                             const std::string& name,
                             std::vector<Diagnostic>& diags) {
  return process(m, text, name, "", diags);
}

bool ModuleLoader::process(Module& m, const std::string& text,
                           const std::string& name, const std::string& dir,
                           std::vector<Diagnostic>& diags) {
  const size_t mark = diags.size();
  LexResult lx = lex(text);
  if (!lx.ok) {
    diags.push_back({name, {lx.line, lx.col}, lx.error});
    return false;
  }
  FileParser fp{m, this, diags, name, dir, {}};
  fp.split(lx.tokens);
  fp.classify();
  fp.run();
  return diags.size() == mark;
}

bool ModuleLoader::resolve_include(const std::string& name,
                                   const std::string& from_dir,
                                   std::string& text_out, std::string& err) {
  if (!lib_path_.empty()) {
    fs::path p = fs::path(lib_path_) / name;
    std::error_code ec;
    if (fs::exists(p, ec)) {
      text_out = read_file(p.string(), err);
      return err.empty();
    }
  }
  for (const auto& em : kEmbeddedModules) {
    if (name == em.name) {
      text_out = em.text;
      return true;
    }
  }
  if (!from_dir.empty()) {
    fs::path p = fs::path(from_dir) / name;
    std::error_code ec;
    if (fs::exists(p, ec)) {
      text_out = read_file(p.string(), err);
      return err.empty();
    }
  }
  err = "cannot resolve include \"" + name + "\"";
  return false;
}

bool parse_goal(Module& m, const std::string& text, ParsedGoal& out,
                std::vector<Diagnostic>& diags) {
  const size_t mark = diags.size();
  LexResult lx = lex(text);
  if (!lx.ok) {
    diags.push_back({"goal", {lx.line, lx.col}, lx.error});
    return false;
  }
  FileParser fp{m, nullptr, diags, "goal", "", {}};
  std::vector<Token> toks = lx.tokens;
  Cur c{toks};
  std::map<std::string, VarId> scope;
  VarScope vs{&scope, &out.display_vars};
  if (c.at_end()) return true;  // the empty goal is trivially solved
  while (true) {
    TermPtr e = fp.parse_expr(c, vs, false, 0);
    if (!e) return false;
    out.conjuncts.push_back(std::move(e));
    if (c.cur().kind == Tok::Comma) {
      c.next();
      continue;
    }
    break;
  }
  if (!c.at_end()) {
    diags.push_back(
        {"goal", loc_of(c.cur()), "unexpected " + tok_desc(c.cur())});
    return false;
  }
  return diags.size() == mark;
}

}  // namespace cflpfd
