#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wkam/errors.hpp"

namespace wkam {

// Evaluation context for scalar expressions. Variable slots are fixed:
// x1, x2, p1, p2, u.
struct ExprVars {
    double x1 = 0, x2 = 0, p1 = 0, p2 = 0, u = 0;
};

// Arithmetic expression over {x1,x2,p1,p2,u}, constants, pi, + - * / ^,
// unary minus and functions sin cos exp abs sqrt tanh sinh cosh min max.
// Parsed once into a postfix program; evaluation is a tight stack loop.
class ScalarExpr {
public:
    ScalarExpr() = default;

    // Throws ParseError with byte position and expected-token message.
    static ScalarExpr parse(const std::string& source);

    // Throws ModelError on division by zero, sqrt of a negative number, or
    // any non-finite intermediate.
    double eval(const ExprVars& v) const;

    // Canonical text form; parse(print()) evaluates identically.
    std::string print() const;

    bool empty() const { return program_.empty(); }

    // True when the given variable slot appears in the expression.
    bool uses(int var_slot) const;

private:
    enum class Op : std::uint8_t {
        PushConst, LoadVar,
        Add, Sub, Mul, Div, Pow, Neg,
        Sin, Cos, Exp, Abs, Sqrt, Tanh, Sinh, Cosh, Min, Max,
    };
    struct Instr {
        Op op;
        std::uint8_t var = 0;
        double value = 0;
    };
    std::vector<Instr> program_;

    friend class ExprParser;
};

}  // namespace wkam
