#include "tcml/parser.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "tcml/errors.hpp"

namespace tcml {
namespace {

enum class Tok : std::uint8_t {
  Ident, IntLit,
  KwLet, KwIn, KwIf, KwThen, KwElse, KwFun, KwAtomic, KwCommit, KwFlip,
  KwSend, KwRecv, KwSpawn, KwFst, KwSnd, KwNewchan, KwTrue, KwFalse,
  KwUnit, KwBool, KwInt, KwChan,
  LParen, RParen, LBracket, RBracket, LBrace, RBrace,
  Comma, Semi, Colon, Eq, Arrow, Leq, Plus, Minus, Star,
  End
};

struct Token {
  Tok kind;
  std::string_view text;
  std::int64_t num = 0;
  SourcePos pos;
};

const std::unordered_map<std::string_view, Tok>& keyword_table() {
  static const std::unordered_map<std::string_view, Tok> table = {
      {"let", Tok::KwLet},       {"in", Tok::KwIn},
      {"if", Tok::KwIf},         {"then", Tok::KwThen},
      {"else", Tok::KwElse},     {"fun", Tok::KwFun},
      {"atomic", Tok::KwAtomic}, {"commit", Tok::KwCommit},
      {"flip", Tok::KwFlip},     {"send", Tok::KwSend},
      {"recv", Tok::KwRecv},     {"spawn", Tok::KwSpawn},
      {"fst", Tok::KwFst},       {"snd", Tok::KwSnd},
      {"newchan", Tok::KwNewchan}, {"true", Tok::KwTrue},
      {"false", Tok::KwFalse},   {"unit", Tok::KwUnit},
      {"bool", Tok::KwBool},     {"int", Tok::KwInt},
      {"chan", Tok::KwChan},
  };
  return table;
}

bool ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(char c) { return c >= '0' && c <= '9'; }

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  SourcePos pos{1, 1, 0};
  std::size_t i = 0;

  auto advance = [&](std::size_t n) {
    for (std::size_t j = 0; j < n; j++) {
      if (src[i + j] == '\n') {
        pos.line++;
        pos.col = 1;
      } else {
        pos.col++;
      }
    }
    i += n;
    pos.offset = i;
  };
  auto push = [&](Tok k, std::size_t len, std::int64_t num = 0) {
    out.push_back({k, src.substr(i, len), num, pos});
    advance(len);
  };

  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
      std::size_t j = i;
      while (j < src.size() && src[j] != '\n') j++;
      advance(j - i);
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < src.size() && ident_char(src[j])) j++;
      std::string_view word = src.substr(i, j - i);
      auto it = keyword_table().find(word);
      push(it == keyword_table().end() ? Tok::Ident : it->second, j - i);
      continue;
    }
    if (digit(c)) {
      std::size_t j = i;
      std::int64_t v = 0;
      while (j < src.size() && digit(src[j])) {
        int d = src[j] - '0';
        if (v > (INT64_MAX - d) / 10)
          throw ParseError(pos, "integer literal out of range");
        v = v * 10 + d;
        j++;
      }
      if (j < src.size() && ident_start(src[j]))
        throw ParseError(pos, "malformed number");
      push(Tok::IntLit, j - i, v);
      continue;
    }
    switch (c) {
      case '(': push(Tok::LParen, 1); continue;
      case ')': push(Tok::RParen, 1); continue;
      case '[': push(Tok::LBracket, 1); continue;
      case ']': push(Tok::RBracket, 1); continue;
      case '{': push(Tok::LBrace, 1); continue;
      case '}': push(Tok::RBrace, 1); continue;
      case ',': push(Tok::Comma, 1); continue;
      case ';': push(Tok::Semi, 1); continue;
      case ':': push(Tok::Colon, 1); continue;
      case '=': push(Tok::Eq, 1); continue;
      case '+': push(Tok::Plus, 1); continue;
      case '*': push(Tok::Star, 1); continue;
      case '-':
        if (i + 1 < src.size() && src[i + 1] == '>') {
          push(Tok::Arrow, 2);
        } else {
          push(Tok::Minus, 1);
        }
        continue;
      case '<':
        if (i + 1 < src.size() && src[i + 1] == '=') {
          push(Tok::Leq, 2);
          continue;
        }
        throw ParseError(pos, "expected '<=' after '<'");
      default:
        throw ParseError(pos, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::End, src.substr(i, 0), 0, pos});
  return out;
}

const char* tok_name(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::IntLit: return "integer literal";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Comma: return "','";
    case Tok::Semi: return "';'";
    case Tok::Colon: return "':'";
    case Tok::Eq: return "'='";
    case Tok::Arrow: return "'->'";
    case Tok::Leq: return "'<='";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::End: return "end of input";
    default: return "keyword";
  }
}

// Fresh nodes are uniquely owned immediately after construction; stamping the
// source position through the const pointer is safe here and keeps the
// constructors position-free.
ExprPtr at(SourcePos p, ExprPtr e) {
  const_cast<Expr*>(e.get())->pos = p;
  return e;
}

struct Parser {
  std::vector<Token> toks;
  std::size_t i = 0;

  const Token& peek() const { return toks[i]; }
  const Token& get() { return toks[i++]; }
  bool accept(Tok k) {
    if (peek().kind == k) {
      i++;
      return true;
    }
    return false;
  }
  Token expect(Tok k, const char* what) {
    if (peek().kind != k)
      throw ParseError(peek().pos, std::string("expected ") + tok_name(k) +
                                       " " + what + ", found " +
                                       tok_name(peek().kind));
    return get();
  }
  Symbol expect_ident(const char* what) {
    Token t = expect(Tok::Ident, what);
    return Symbol::intern(t.text);
  }

  // type := prod ('->' type)?      right associative
  TypePtr type() {
    TypePtr l = type_prod();
    if (accept(Tok::Arrow)) return Type::arrow(std::move(l), type());
    return l;
  }
  TypePtr type_prod() {
    TypePtr l = type_post();
    while (accept(Tok::Star)) l = Type::prod(std::move(l), type_post());
    return l;
  }
  TypePtr type_post() {
    TypePtr t = type_atom();
    while (accept(Tok::KwChan)) t = Type::chan(std::move(t));
    return t;
  }
  TypePtr type_atom() {
    switch (peek().kind) {
      case Tok::KwUnit: get(); return Type::unit();
      case Tok::KwBool: get(); return Type::boolean();
      case Tok::KwInt: get(); return Type::integer();
      case Tok::LParen: {
        get();
        TypePtr t = type();
        expect(Tok::RParen, "to close the type");
        return t;
      }
      default:
        throw ParseError(peek().pos, "expected a type");
    }
  }

  // expr := item (';' expr)?       right associative
  ExprPtr expr() {
    SourcePos p = peek().pos;
    ExprPtr first = item();
    if (accept(Tok::Semi)) return at(p, e_seq(std::move(first), expr()));
    return first;
  }

  ExprPtr item() {
    switch (peek().kind) {
      case Tok::KwLet: return let_expr();
      case Tok::KwIf: return if_expr();
      case Tok::KwFun: return fun_expr();
      default: return cmp();
    }
  }

  ExprPtr let_expr() {
    SourcePos p = get().pos;  // 'let'
    Symbol x = expect_ident("after 'let'");
    expect(Tok::Eq, "after the bound name");
    ExprPtr bound = expr();
    expect(Tok::KwIn, "after the bound expression");
    return at(p, e_let(x, std::move(bound), expr()));
  }

  ExprPtr if_expr() {
    SourcePos p = get().pos;  // 'if'
    ExprPtr c = expr();
    expect(Tok::KwThen, "after the condition");
    ExprPtr t = expr();
    expect(Tok::KwElse, "after the then branch");
    ExprPtr e = item();  // the else branch stops before a following ';'
    return at(p, e_if(std::move(c), std::move(t), std::move(e)));
  }

  ExprPtr fun_expr() {
    SourcePos p = get().pos;  // 'fun'
    Symbol self = expect_ident("after 'fun'");
    expect(Tok::LParen, "after the function name");
    Symbol param = Symbol::intern("_");
    TypePtr param_type = Type::unit();
    if (!accept(Tok::RParen)) {
      param = expect_ident("as the parameter");
      expect(Tok::Colon, "after the parameter name");
      param_type = type();
      expect(Tok::RParen, "after the parameter type");
    }
    TypePtr ret;
    // The annotation stops below arrows so '->' still separates the body;
    // arrow result types take parentheses.
    if (accept(Tok::Colon)) ret = type_prod();
    expect(Tok::Arrow, "before the function body");
    ExprPtr body = expr();
    return at(p, e_val(v_fun(self, param, std::move(param_type), std::move(ret),
                             std::move(body))));
  }

  ExprPtr cmp() {
    SourcePos p = peek().pos;
    ExprPtr l = add();
    if (accept(Tok::Leq))
      return at(p, e_op(PrimOp::Leq, e_pair(std::move(l), add())));
    return l;
  }

  ExprPtr add() {
    SourcePos p = peek().pos;
    ExprPtr l = mul();
    for (;;) {
      if (accept(Tok::Plus))
        l = at(p, e_op(PrimOp::Add, e_pair(std::move(l), mul())));
      else if (accept(Tok::Minus))
        l = at(p, e_op(PrimOp::Sub, e_pair(std::move(l), mul())));
      else
        return l;
    }
  }

  ExprPtr mul() {
    SourcePos p = peek().pos;
    ExprPtr l = app();
    while (accept(Tok::Star))
      l = at(p, e_op(PrimOp::Mul, e_pair(std::move(l), app())));
    return l;
  }

  bool at_atom_start() const {
    switch (peek().kind) {
      case Tok::LParen:
      case Tok::IntLit:
      case Tok::KwTrue:
      case Tok::KwFalse:
      case Tok::Ident:
      case Tok::KwNewchan:
      case Tok::KwAtomic:
        return true;
      default:
        return false;
    }
  }

  // app := head atom*   where head is a prefix form or an atom
  ExprPtr app() {
    SourcePos p = peek().pos;
    ExprPtr head;
    switch (peek().kind) {
      case Tok::KwSend: {
        get();
        ExprPtr c = atom();
        head = at(p, e_send(std::move(c), atom()));
        break;
      }
      case Tok::KwRecv:
        get();
        head = at(p, e_recv(atom()));
        break;
      case Tok::KwSpawn:
        get();
        head = at(p, e_spawn(atom()));
        break;
      case Tok::KwFst:
        get();
        head = at(p, e_op(PrimOp::Fst, atom()));
        break;
      case Tok::KwSnd:
        get();
        head = at(p, e_op(PrimOp::Snd, atom()));
        break;
      case Tok::KwCommit: {
        get();
        TxnRef r;
        r.name = expect_ident("after 'commit'");
        head = at(p, e_commit(r));
        break;
      }
      case Tok::KwFlip:
        get();
        expect(Tok::LParen, "after 'flip'");
        expect(Tok::RParen, "after 'flip ('");
        head = at(p, e_flip());
        break;
      default:
        head = atom();
    }
    while (at_atom_start()) head = at(p, e_app(std::move(head), atom()));
    return head;
  }

  ExprPtr atom() {
    SourcePos p = peek().pos;
    switch (peek().kind) {
      case Tok::LParen: {
        get();
        if (accept(Tok::RParen)) return at(p, e_unit());
        ExprPtr e1 = expr();
        if (accept(Tok::Comma)) {
          ExprPtr e2 = expr();
          expect(Tok::RParen, "to close the pair");
          return at(p, e_pair(std::move(e1), std::move(e2)));
        }
        expect(Tok::RParen, "to close the expression");
        return e1;
      }
      case Tok::IntLit: {
        Token t = get();
        return at(p, e_int(t.num));
      }
      case Tok::KwTrue: get(); return at(p, e_bool(true));
      case Tok::KwFalse: get(); return at(p, e_bool(false));
      case Tok::Ident: {
        Token t = get();
        return at(p, e_var(Symbol::intern(t.text)));
      }
      case Tok::KwNewchan: {
        get();
        expect(Tok::LBracket, "after 'newchan'");
        TypePtr t = type();
        expect(Tok::RBracket, "after the payload type");
        return at(p, e_newchan(std::move(t)));
      }
      case Tok::KwAtomic: {
        get();
        Symbol k = expect_ident("after 'atomic'");
        expect(Tok::LBrace, "to open the default branch");
        ExprPtr d = expr();
        expect(Tok::RBrace, "to close the default branch");
        expect(Tok::KwElse, "after the default branch");
        expect(Tok::LBrace, "to open the alternative");
        ExprPtr a = expr();
        expect(Tok::RBrace, "to close the alternative");
        return at(p, e_atomic(k, std::move(d), std::move(a)));
      }
      default:
        throw ParseError(peek().pos, std::string("expected an expression, found ") +
                                         tok_name(peek().kind));
    }
  }
};

}  // namespace

ExprPtr parse_program(std::string_view source) {
  Parser p{lex(source)};
  ExprPtr e = p.expr();
  if (p.peek().kind != Tok::End)
    throw ParseError(p.peek().pos, std::string("unexpected trailing input: ") +
                                       tok_name(p.peek().kind));
  return e;
}

TypePtr parse_type_text(std::string_view source) {
  Parser p{lex(source)};
  TypePtr t = p.type();
  if (p.peek().kind != Tok::End)
    throw ParseError(p.peek().pos, "unexpected trailing input after type");
  return t;
}

}  // namespace tcml
