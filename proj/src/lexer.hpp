#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "qetlab/error.hpp"

namespace qetlab::lex {

enum class Tok {
    Ident,   // identifiers and keywords
    Number,  // decimal literal, raw text kept
    KetLit,  // whole ket[...] literal, raw text without the ket[ ] frame
    Symbol,  // punctuation, multi-char symbols
    End,
};

struct Token {
    Tok kind;
    std::string text;
    SourcePos pos;

    bool is(Tok k, const std::string& s) const { return kind == k && text == s; }
    bool is_sym(const std::string& s) const { return is(Tok::Symbol, s); }
    bool is_ident(const std::string& s) const { return is(Tok::Ident, s); }
};

// Longest-match first.
inline const std::vector<std::string>& symbols() {
    static const std::vector<std::string> syms = {
        "(+p0", "->", "-o", "=>", "+^", "<=", "==", "&&", "||", "[=", "(",  ")", "[", "]",
        "{",    "}",  "|",  ";",  ":",  ",",  ".",  "=",  "+",  "-",  "*", "<", ">", "!",
    };
    return syms;
}

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return cur_; }
    Token next() {
        Token t = cur_;
        advance();
        return t;
    }

    bool accept_sym(const std::string& s) {
        if (cur_.is_sym(s)) {
            advance();
            return true;
        }
        return false;
    }

    bool accept_ident(const std::string& s) {
        if (cur_.is_ident(s)) {
            advance();
            return true;
        }
        return false;
    }

    void expect_sym(const std::string& s) {
        if (!accept_sym(s))
            fail("SyntaxError", "expected '" + s + "' but found '" + cur_.text + "'", cur_.pos);
    }

    std::string expect_ident(const std::string& what) {
        if (cur_.kind != Tok::Ident)
            fail("SyntaxError", "expected " + what + " but found '" + cur_.text + "'", cur_.pos);
        return next().text;
    }

    /// Identifier or number token (constructor names may be numerals).
    std::string expect_name(const std::string& what) {
        if (cur_.kind != Tok::Ident && cur_.kind != Tok::Number)
            fail("SyntaxError", "expected " + what + " but found '" + cur_.text + "'", cur_.pos);
        return next().text;
    }

    double expect_number(const std::string& what) {
        if (cur_.kind != Tok::Number)
            fail("SyntaxError", "expected " + what + " but found '" + cur_.text + "'", cur_.pos);
        return std::stod(next().text);
    }

    bool at_end() const { return cur_.kind == Tok::End; }
    SourcePos pos() const { return cur_.pos; }

private:
    void skip_space() {
        while (i_ < src_.size()) {
            char c = src_[i_];
            if (c == '\n') {
                ++line_;
                col_ = 1;
                ++i_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++col_;
                ++i_;
            } else if (c == '-' && i_ + 1 < src_.size() && src_[i_ + 1] == '-') {
                while (i_ < src_.size() && src_[i_] != '\n') ++i_;
            } else if (c == '#') {
                while (i_ < src_.size() && src_[i_] != '\n') ++i_;
            } else {
                break;
            }
        }
    }

    void advance() {
        skip_space();
        SourcePos pos{line_, col_};
        if (i_ >= src_.size()) {
            cur_ = {Tok::End, "<eof>", pos};
            return;
        }
        char c = src_[i_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = i_;
            while (i_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[i_])) ||
                                        src_[i_] == '_' || src_[i_] == '\''))
                bump();
            std::string word = src_.substr(start, i_ - start);
            // A ket literal is lexed as one token so '|' and '>' inside it do
            // not collide with case arms and comparison operators.
            if (word == "ket" && i_ < src_.size() && src_[i_] == '[') {
                bump();
                size_t body = i_;
                while (i_ < src_.size() && src_[i_] != ']') bump();
                if (i_ >= src_.size()) fail("SyntaxError", "unterminated ket literal", pos);
                std::string raw = src_.substr(body, i_ - body);
                bump(); // ']'
                cur_ = {Tok::KetLit, raw, pos};
                return;
            }
            cur_ = {Tok::Ident, word, pos};
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t start = i_;
            while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) bump();
            if (i_ < src_.size() && src_[i_] == '.' && i_ + 1 < src_.size() &&
                std::isdigit(static_cast<unsigned char>(src_[i_ + 1]))) {
                bump();
                while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_])))
                    bump();
            }
            if (i_ < src_.size() && (src_[i_] == 'e' || src_[i_] == 'E')) {
                size_t save = i_;
                bump();
                if (i_ < src_.size() && (src_[i_] == '+' || src_[i_] == '-')) bump();
                if (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) {
                    while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_])))
                        bump();
                } else {
                    i_ = save; // not an exponent after all
                }
            }
            cur_ = {Tok::Number, src_.substr(start, i_ - start), pos};
            return;
        }
        for (const auto& sym : symbols()) {
            if (src_.compare(i_, sym.size(), sym) == 0) {
                for (size_t k = 0; k < sym.size(); ++k) bump();
                cur_ = {Tok::Symbol, sym, pos};
                return;
            }
        }
        fail("SyntaxError", std::string("unexpected character '") + c + "'", pos);
    }

    void bump() {
        ++col_;
        ++i_;
    }

    const std::string& src_;
    size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;
    Token cur_;
};

} // namespace qetlab::lex
