#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cflpfd/program.hpp"
#include "cflpfd/term.hpp"
#include "cflpfd/types.hpp"

namespace cflpfd {

struct Diagnostic {
  std::string file;
  SrcLoc loc;
  std::string msg;
  std::string str() const {
    std::string s;
    if (!file.empty()) s += file + ":";
    if (loc.line) s += loc.str() + ": ";
    return s + msg;
  }
};

// Everything a loaded program provides: term symbols, types, rules and the
// operator fixity table used while parsing.
struct Module {
  Sig sig;
  TypeTable tt{sig};
  VarTable vars;
  Program prog;
  // operator -> {precedence, associativity (-1 left, 0 none, +1 right)}
  std::map<std::string, std::pair<int, int>> fixity;
  // alias name -> (parameters, body)
  std::map<std::string, std::pair<std::vector<TypeVarId>, TypePtr>> aliases;
  std::set<std::string> included;

  Module();
};

struct ParsedGoal {
  std::vector<TermPtr> conjuncts;
  // named goal variables in order of first appearance, for answer display
  std::vector<std::pair<std::string, VarId>> display_vars;
};

// Loads .toy modules into a Module: lexing, layout-based declaration
// splitting, parsing and desugaring (clauses, list/tuple sugar, operator
// sections, includes).  Type checking is a separate pass (typecheck.hpp).
class ModuleLoader {
 public:
  explicit ModuleLoader(std::string lib_path = "")
      : lib_path_(std::move(lib_path)) {}

  bool load_file(Module& m, const std::string& path,
                 std::vector<Diagnostic>& diags);
  bool load_text(Module& m, const std::string& text, const std::string& name,
                 std::vector<Diagnostic>& diags);

 private:
  friend struct FileParser;
  bool process(Module& m, const std::string& text, const std::string& name,
               const std::string& dir, std::vector<Diagnostic>& diags);
  bool resolve_include(const std::string& name, const std::string& from_dir,
                       std::string& text_out, std::string& err);

  std::string lib_path_;
};

// Parses a goal (a comma-separated conjunction of constraint expressions)
// against a loaded module.  Named variables are shared across conjuncts.
bool parse_goal(Module& m, const std::string& text, ParsedGoal& out,
                std::vector<Diagnostic>& diags);

}  // namespace cflpfd
