#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cflpfd {

enum class Tok : uint8_t {
  Ident,     // lowercase-first identifier (function/constructor/type name)
  Var,       // uppercase-first or underscore-first identifier (variable)
  Int,       // integer literal
  String,    // "..." (include file names)
  Op,        // run of symbolic characters: == <== #+ :- :: -> | = ...
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  KwInclude,
  KwData,
  KwType,
  KwInfix,
  KwInfixl,
  KwInfixr,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  long long ival = 0;
  int line = 1;
  int col = 1;
};

struct LexResult {
  bool ok = true;
  std::vector<Token> tokens;  // always terminated by an End token
  std::string error;
  int line = 0, col = 0;  // position of the error
};

// Tokenizes a module or goal.  `%` and all-dash runs (`--`) start comments
// that run to the end of the line.  A `-` immediately followed by a digit is
// a negative literal when the previous token cannot end an expression.
LexResult lex(const std::string& text);

}  // namespace cflpfd
