#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace odestab {

enum class Op {
    Constant,
    Variable,
    Neg,
    Add, Sub, Mul, Div, Pow,
    Sin, Cos, Tan, Exp, Ln, Sqrt, Tanh,
};

bool is_call_op(Op op);
std::string_view call_name(Op op);

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

// Immutable expression tree node. Subtrees are shared freely; nothing is
// mutated after construction, so trees are safe to evaluate concurrently.
struct ExprNode {
    Op op;
    double value = 0.0;  // Op::Constant
    std::string name;    // Op::Variable
    ExprPtr a, b;        // children: a for unary/calls, a+b for binary
};

ExprPtr constant(double v);
ExprPtr variable(std::string name);
ExprPtr neg(ExprPtr x);
ExprPtr add(ExprPtr l, ExprPtr r);
ExprPtr sub(ExprPtr l, ExprPtr r);
ExprPtr mul(ExprPtr l, ExprPtr r);
ExprPtr div(ExprPtr l, ExprPtr r);
ExprPtr pow(ExprPtr base, ExprPtr exponent);
ExprPtr call(Op fn, ExprPtr arg);

bool structurally_equal(const ExprNode& x, const ExprNode& y);
inline bool structurally_equal(const ExprPtr& x, const ExprPtr& y) {
    return structurally_equal(*x, *y);
}

using Binding = std::map<std::string, double>;

// Evaluates in IEEE double precision. Throws EvalError on unbound variables,
// on ln/sqrt/division domain violations and whenever an operation produces a
// non-finite value (overflow is a failure, not a NaN to propagate).
double eval_expr(const ExprNode& e, const Binding& binding);
inline double eval_expr(const ExprPtr& e, const Binding& binding) { return eval_expr(*e, binding); }

// Symbolic partial derivative, passed through simplify. Constant exponents
// use the power rule; non-constant exponents go through exp(g*ln f).
ExprPtr differentiate(const ExprPtr& e, const std::string& var);

// Local rewrites (0*x, 1*x, x+0, x^1, x^0, constant folding, ...) applied to
// a fixed point. Folding only happens when the folded operation succeeds, so
// the result evaluates identically to the input wherever the input is valid.
ExprPtr simplify(ExprPtr e);

// Minimal-parentheses rendering; parsing the result reproduces the tree.
std::string to_string(const ExprNode& e);
inline std::string to_string(const ExprPtr& e) { return to_string(*e); }

std::string format_double(double v);  // shortest round-trip decimal

// Expression compiled to a postfix program over positional slots: state
// variables by index into one span, parameters by index into another.
// Parameters stay out of the program constants so one compile serves
// parameter sweeps.
class CompiledExpr {
public:
    CompiledExpr() = default;

    static CompiledExpr compile(const ExprNode& e,
                                std::span<const std::string> states,
                                std::span<const std::string> params);

    double eval(std::span<const double> state, std::span<const double> params) const;

    bool empty() const { return prog_.empty(); }

private:
    enum class Code : std::uint8_t {
        PushConst, PushState, PushParam,
        Neg, Add, Sub, Mul, Div, Pow,
        Sin, Cos, Tan, Exp, Ln, Sqrt, Tanh,
    };
    struct Instr {
        Code code;
        std::int32_t index = 0;
        double value = 0.0;
    };
    std::vector<Instr> prog_;
    int max_stack_ = 0;

    void emit(const ExprNode& e,
              std::span<const std::string> states,
              std::span<const std::string> params,
              int& depth);
};

// Free variables of the expression, sorted and deduplicated.
std::vector<std::string> free_variables(const ExprNode& e);

}  // namespace odestab
