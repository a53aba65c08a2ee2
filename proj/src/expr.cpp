#include "wkam/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>

namespace wkam {

namespace {

const char* kVarNames[5] = {"x1", "x2", "p1", "p2", "u"};

}  // namespace

class ExprParser {
public:
    explicit ExprParser(const std::string& src) : src_(src) {}

    ScalarExpr run() {
        ScalarExpr e;
        parse_expr(e.program_);
        skip_ws();
        if (pos_ != src_.size()) fail("end of input");
        if (e.program_.empty()) fail("an expression");
        return e;
    }

private:
    using Op = ScalarExpr::Op;
    using Instr = std::vector<ScalarExpr::Instr>;

    const std::string& src_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& expected) {
        throw ParseError(pos_, expected);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    // expr := term (('+'|'-') term)*
    void parse_expr(Instr& out) {
        parse_term(out);
        for (;;) {
            if (eat('+')) {
                parse_term(out);
                out.push_back({Op::Add, 0, 0});
            } else if (eat('-')) {
                parse_term(out);
                out.push_back({Op::Sub, 0, 0});
            } else {
                return;
            }
        }
    }

    // term := factor (('*'|'/') factor)*
    void parse_term(Instr& out) {
        parse_factor(out);
        for (;;) {
            if (eat('*')) {
                parse_factor(out);
                out.push_back({Op::Mul, 0, 0});
            } else if (eat('/')) {
                parse_factor(out);
                out.push_back({Op::Div, 0, 0});
            } else {
                return;
            }
        }
    }

    // factor := unary ('^' factor)?   (right associative)
    void parse_factor(Instr& out) {
        parse_unary(out);
        if (eat('^')) {
            parse_factor(out);
            out.push_back({Op::Pow, 0, 0});
        }
    }

    void parse_unary(Instr& out) {
        if (eat('-')) {
            parse_unary(out);
            out.push_back({Op::Neg, 0, 0});
            return;
        }
        parse_primary(out);
    }

    void parse_primary(Instr& out) {
        skip_ws();
        if (pos_ >= src_.size()) fail("a number, name, or '('");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            parse_expr(out);
            if (!eat(')')) fail("')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            parse_number(out);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            parse_name(out);
            return;
        }
        fail("a number, name, or '('");
    }

    void parse_number(Instr& out) {
        const char* start = src_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(start, &end);
        if (end == start) fail("a number");
        pos_ += static_cast<std::size_t>(end - start);
        out.push_back({Op::PushConst, 0, v});
    }

    void parse_name(Instr& out) {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string name = src_.substr(start, pos_ - start);

        if (name == "pi") {
            out.push_back({Op::PushConst, 0, M_PI});
            return;
        }
        for (std::uint8_t i = 0; i < 5; ++i) {
            if (name == kVarNames[i]) {
                out.push_back({Op::LoadVar, i, 0});
                return;
            }
        }

        static const std::map<std::string, Op> unary_fns = {
            {"sin", Op::Sin},   {"cos", Op::Cos},   {"exp", Op::Exp},
            {"abs", Op::Abs},   {"sqrt", Op::Sqrt}, {"tanh", Op::Tanh},
            {"sinh", Op::Sinh}, {"cosh", Op::Cosh},
        };
        static const std::map<std::string, Op> binary_fns = {
            {"min", Op::Min},
            {"max", Op::Max},
        };

        if (auto it = unary_fns.find(name); it != unary_fns.end()) {
            if (!eat('(')) fail("'(' after function name");
            parse_expr(out);
            if (!eat(')')) fail("')'");
            out.push_back({it->second, 0, 0});
            return;
        }
        if (auto it = binary_fns.find(name); it != binary_fns.end()) {
            if (!eat('(')) fail("'(' after function name");
            parse_expr(out);
            if (!eat(',')) fail("','");
            parse_expr(out);
            if (!eat(')')) fail("')'");
            out.push_back({it->second, 0, 0});
            return;
        }
        pos_ = start;
        fail("a known identifier (x1, x2, p1, p2, u, pi, or a function name)");
    }
};

ScalarExpr ScalarExpr::parse(const std::string& source) { return ExprParser(source).run(); }

double ScalarExpr::eval(const ExprVars& v) const {
    const double vars[5] = {v.x1, v.x2, v.p1, v.p2, v.u};
    double stack[256];
    int top = -1;
    for (const Instr& in : program_) {
        switch (in.op) {
            case Op::PushConst:
                if (top >= 254) throw ModelError("expression: nesting too deep");
                stack[++top] = in.value;
                break;
            case Op::LoadVar:
                if (top >= 254) throw ModelError("expression: nesting too deep");
                stack[++top] = vars[in.var];
                break;
            case Op::Add: stack[top - 1] += stack[top]; --top; break;
            case Op::Sub: stack[top - 1] -= stack[top]; --top; break;
            case Op::Mul: stack[top - 1] *= stack[top]; --top; break;
            case Op::Div:
                if (stack[top] == 0.0) throw ModelError("expression: division by zero");
                stack[top - 1] /= stack[top];
                --top;
                break;
            case Op::Pow:
                stack[top - 1] = std::pow(stack[top - 1], stack[top]);
                --top;
                break;
            case Op::Neg: stack[top] = -stack[top]; break;
            case Op::Sin: stack[top] = std::sin(stack[top]); break;
            case Op::Cos: stack[top] = std::cos(stack[top]); break;
            case Op::Exp: stack[top] = std::exp(stack[top]); break;
            case Op::Abs: stack[top] = std::abs(stack[top]); break;
            case Op::Sqrt:
                if (stack[top] < 0.0) throw ModelError("expression: sqrt of negative value");
                stack[top] = std::sqrt(stack[top]);
                break;
            case Op::Tanh: stack[top] = std::tanh(stack[top]); break;
            case Op::Sinh: stack[top] = std::sinh(stack[top]); break;
            case Op::Cosh: stack[top] = std::cosh(stack[top]); break;
            case Op::Min:
                stack[top - 1] = std::min(stack[top - 1], stack[top]);
                --top;
                break;
            case Op::Max:
                stack[top - 1] = std::max(stack[top - 1], stack[top]);
                --top;
                break;
        }
    }
    const double r = stack[0];
    if (!std::isfinite(r)) throw ModelError("expression: non-finite result");
    return r;
}

bool ScalarExpr::uses(int var_slot) const {
    for (const Instr& in : program_)
        if (in.op == Op::LoadVar && in.var == var_slot) return true;
    return false;
}

std::string ScalarExpr::print() const {
    // Rebuild infix text from the postfix program; parenthesize everything
    // so the round trip is unambiguous.
    std::vector<std::string> stack;
    auto pop = [&stack]() {
        std::string s = std::move(stack.back());
        stack.pop_back();
        return s;
    };
    auto bin = [&](const char* op) {
        const std::string b = pop(), a = pop();
        stack.push_back("(" + a + op + b + ")");
    };
    auto fn1 = [&](const char* name) {
        const std::string a = pop();
        stack.push_back(std::string(name) + "(" + a + ")");
    };
    auto fn2 = [&](const char* name) {
        const std::string b = pop(), a = pop();
        stack.push_back(std::string(name) + "(" + a + "," + b + ")");
    };
    for (const Instr& in : program_) {
        switch (in.op) {
            case Op::PushConst: {
                char buf[40];
                std::snprintf(buf, sizeof buf, "%.17g", in.value);
                stack.push_back(buf);
                break;
            }
            case Op::LoadVar: stack.push_back(kVarNames[in.var]); break;
            case Op::Add: bin("+"); break;
            case Op::Sub: bin("-"); break;
            case Op::Mul: bin("*"); break;
            case Op::Div: bin("/"); break;
            case Op::Pow: bin("^"); break;
            case Op::Neg: {
                const std::string a = pop();
                stack.push_back("(-" + a + ")");
                break;
            }
            case Op::Sin: fn1("sin"); break;
            case Op::Cos: fn1("cos"); break;
            case Op::Exp: fn1("exp"); break;
            case Op::Abs: fn1("abs"); break;
            case Op::Sqrt: fn1("sqrt"); break;
            case Op::Tanh: fn1("tanh"); break;
            case Op::Sinh: fn1("sinh"); break;
            case Op::Cosh: fn1("cosh"); break;
            case Op::Min: fn2("min"); break;
            case Op::Max: fn2("max"); break;
        }
    }
    return stack.empty() ? "0" : stack.back();
}

}  // namespace wkam
