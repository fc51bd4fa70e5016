#include "odestab/expr.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "odestab/error.hpp"

namespace odestab {

bool is_call_op(Op op) {
    switch (op) {
        case Op::Sin: case Op::Cos: case Op::Tan:
        case Op::Exp: case Op::Ln: case Op::Sqrt: case Op::Tanh:
            return true;
        default:
            return false;
    }
}

std::string_view call_name(Op op) {
    switch (op) {
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Tan: return "tan";
        case Op::Exp: return "exp";
        case Op::Ln: return "ln";
        case Op::Sqrt: return "sqrt";
        case Op::Tanh: return "tanh";
        default: return "?";
    }
}

ExprPtr constant(double v) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Constant;
    n->value = v;
    return n;
}

ExprPtr variable(std::string name) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Variable;
    n->name = std::move(name);
    return n;
}

ExprPtr neg(ExprPtr x) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Neg;
    n->a = std::move(x);
    return n;
}

static ExprPtr binary(Op op, ExprPtr l, ExprPtr r) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->a = std::move(l);
    n->b = std::move(r);
    return n;
}

ExprPtr add(ExprPtr l, ExprPtr r) { return binary(Op::Add, std::move(l), std::move(r)); }
ExprPtr sub(ExprPtr l, ExprPtr r) { return binary(Op::Sub, std::move(l), std::move(r)); }
ExprPtr mul(ExprPtr l, ExprPtr r) { return binary(Op::Mul, std::move(l), std::move(r)); }
ExprPtr div(ExprPtr l, ExprPtr r) { return binary(Op::Div, std::move(l), std::move(r)); }
ExprPtr pow(ExprPtr base, ExprPtr exponent) { return binary(Op::Pow, std::move(base), std::move(exponent)); }

ExprPtr call(Op fn, ExprPtr arg) {
    auto n = std::make_shared<ExprNode>();
    n->op = fn;
    n->a = std::move(arg);
    return n;
}

bool structurally_equal(const ExprNode& x, const ExprNode& y) {
    if (x.op != y.op) return false;
    switch (x.op) {
        case Op::Constant: return x.value == y.value;
        case Op::Variable: return x.name == y.name;
        default: break;
    }
    if (x.b && y.b)
        return structurally_equal(*x.a, *y.a) && structurally_equal(*x.b, *y.b);
    if (x.b || y.b) return false;
    return structurally_equal(*x.a, *y.a);
}

namespace {

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw EvalError(std::string("evaluation produced a non-finite value in ") + what);
    return v;
}

double apply_unary_fn(Op op, double a) {
    switch (op) {
        case Op::Neg: return -a;
        case Op::Sin: return checked(std::sin(a), "sin");
        case Op::Cos: return checked(std::cos(a), "cos");
        case Op::Tan: return checked(std::tan(a), "tan");
        case Op::Exp: return checked(std::exp(a), "exp");
        case Op::Ln:
            if (a <= 0.0) throw EvalError("ln of non-positive value");
            return checked(std::log(a), "ln");
        case Op::Sqrt:
            if (a < 0.0) throw EvalError("sqrt of negative value");
            return checked(std::sqrt(a), "sqrt");
        case Op::Tanh: return checked(std::tanh(a), "tanh");
        default: throw EvalError("bad unary op");
    }
}

double apply_binary_fn(Op op, double a, double b) {
    switch (op) {
        case Op::Add: return checked(a + b, "+");
        case Op::Sub: return checked(a - b, "-");
        case Op::Mul: return checked(a * b, "*");
        case Op::Div:
            if (b == 0.0) throw EvalError("division by zero");
            return checked(a / b, "/");
        case Op::Pow: return checked(std::pow(a, b), "^");
        default: throw EvalError("bad binary op");
    }
}

}  // namespace

double eval_expr(const ExprNode& e, const Binding& binding) {
    switch (e.op) {
        case Op::Constant: return e.value;
        case Op::Variable: {
            auto it = binding.find(e.name);
            if (it == binding.end()) throw EvalError("unbound variable '" + e.name + "'");
            return it->second;
        }
        default: break;
    }
    if (e.b) return apply_binary_fn(e.op, eval_expr(*e.a, binding), eval_expr(*e.b, binding));
    return apply_unary_fn(e.op, eval_expr(*e.a, binding));
}

// ---------------------------------------------------------------------------
// differentiation

namespace {

bool is_const(const ExprPtr& e) { return e->op == Op::Constant; }
bool is_const_value(const ExprPtr& e, double v) { return e->op == Op::Constant && e->value == v; }

ExprPtr diff(const ExprPtr& e, const std::string& var) {
    switch (e->op) {
        case Op::Constant:
            return constant(0.0);
        case Op::Variable:
            return constant(e->name == var ? 1.0 : 0.0);
        case Op::Neg:
            return neg(diff(e->a, var));
        case Op::Add:
            return add(diff(e->a, var), diff(e->b, var));
        case Op::Sub:
            return sub(diff(e->a, var), diff(e->b, var));
        case Op::Mul:
            return add(mul(diff(e->a, var), e->b), mul(e->a, diff(e->b, var)));
        case Op::Div:
            // (u'v - uv') / v^2
            return div(sub(mul(diff(e->a, var), e->b), mul(e->a, diff(e->b, var))),
                       pow(e->b, constant(2.0)));
        case Op::Pow: {
            if (is_const(e->b)) {
                // power rule, valid wherever f^k is differentiable
                double k = e->b->value;
                return mul(mul(constant(k), pow(e->a, constant(k - 1.0))), diff(e->a, var));
            }
            // f^g = exp(g ln f):  f^g * (g' ln f + g f'/f)
            return mul(e, add(mul(diff(e->b, var), call(Op::Ln, e->a)),
                              mul(e->b, div(diff(e->a, var), e->a))));
        }
        case Op::Sin:
            return mul(call(Op::Cos, e->a), diff(e->a, var));
        case Op::Cos:
            return neg(mul(call(Op::Sin, e->a), diff(e->a, var)));
        case Op::Tan:
            return mul(add(constant(1.0), pow(call(Op::Tan, e->a), constant(2.0))), diff(e->a, var));
        case Op::Exp:
            return mul(e, diff(e->a, var));
        case Op::Ln:
            return div(diff(e->a, var), e->a);
        case Op::Sqrt:
            return div(diff(e->a, var), mul(constant(2.0), e));
        case Op::Tanh:
            return mul(sub(constant(1.0), pow(call(Op::Tanh, e->a), constant(2.0))), diff(e->a, var));
    }
    throw Error("differentiate: unhandled node");
}

}  // namespace

ExprPtr differentiate(const ExprPtr& e, const std::string& var) {
    return simplify(diff(e, var));
}

// ---------------------------------------------------------------------------
// simplification

namespace {

// Folds a pure-constant operation, but only if it succeeds and stays finite;
// otherwise the node is kept and evaluation reports the failure.
ExprPtr try_fold_unary(Op op, const ExprPtr& a) {
    try {
        return constant(apply_unary_fn(op, a->value));
    } catch (const EvalError&) {
        return nullptr;
    }
}

ExprPtr try_fold_binary(Op op, const ExprPtr& a, const ExprPtr& b) {
    try {
        return constant(apply_binary_fn(op, a->value, b->value));
    } catch (const EvalError&) {
        return nullptr;
    }
}

// One local rewrite of a node whose children are already simplified.
// Returns nullptr when no rule applies.
ExprPtr rewrite(const ExprPtr& e) {
    const ExprPtr& a = e->a;
    const ExprPtr& b = e->b;
    switch (e->op) {
        case Op::Constant:
        case Op::Variable:
            return nullptr;
        case Op::Neg:
            if (is_const(a)) return constant(-a->value);
            if (a->op == Op::Neg) return a->a;
            return nullptr;
        case Op::Add:
            if (is_const(a) && is_const(b)) return try_fold_binary(Op::Add, a, b);
            if (is_const_value(a, 0.0)) return b;
            if (is_const_value(b, 0.0)) return a;
            return nullptr;
        case Op::Sub:
            if (is_const(a) && is_const(b)) return try_fold_binary(Op::Sub, a, b);
            if (is_const_value(b, 0.0)) return a;
            if (is_const_value(a, 0.0)) return neg(b);
            return nullptr;
        case Op::Mul:
            if (is_const(a) && is_const(b)) return try_fold_binary(Op::Mul, a, b);
            if (is_const_value(a, 0.0) || is_const_value(b, 0.0)) return constant(0.0);
            if (is_const_value(a, 1.0)) return b;
            if (is_const_value(b, 1.0)) return a;
            return nullptr;
        case Op::Div:
            if (is_const(a) && is_const(b)) return try_fold_binary(Op::Div, a, b);
            // 0/x -> 0 holds at every point where the input is valid
            if (is_const_value(a, 0.0)) return constant(0.0);
            if (is_const_value(b, 1.0)) return a;
            return nullptr;
        case Op::Pow:
            if (is_const(a) && is_const(b)) return try_fold_binary(Op::Pow, a, b);
            if (is_const_value(b, 1.0)) return a;
            if (is_const_value(b, 0.0)) return constant(1.0);  // pow(x,0) == 1, including x == 0
            return nullptr;
        default:
            if (is_const(a)) return try_fold_unary(e->op, a);
            return nullptr;
    }
}

ExprPtr simplify_rec(const ExprPtr& e) {
    ExprPtr cur = e;
    if (cur->a) {
        ExprPtr sa = simplify_rec(cur->a);
        ExprPtr sb = cur->b ? simplify_rec(cur->b) : nullptr;
        if (sa != cur->a || sb != cur->b) {
            auto n = std::make_shared<ExprNode>();
            n->op = cur->op;
            n->a = std::move(sa);
            n->b = std::move(sb);
            cur = n;
        }
    }
    while (ExprPtr next = rewrite(cur)) cur = next;
    return cur;
}

}  // namespace

ExprPtr simplify(ExprPtr e) {
    // children-first rewriting can expose new local rules; iterate to a fixed point
    for (int round = 0; round < 16; ++round) {
        ExprPtr next = simplify_rec(e);
        if (next == e || structurally_equal(*next, *e)) return next;
        e = next;
    }
    return e;
}

// ---------------------------------------------------------------------------
// printing

std::string format_double(double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) {
        std::snprintf(buf.data(), buf.size(), "%.17g", v);
        return std::string(buf.data());
    }
    return std::string(buf.data(), ptr);
}

namespace {

// grammar levels: expr(+,-) < term(*,/) < factor(^ over unary) < unary(-) < atom
void print(const ExprNode& e, std::string& out) {
    auto paren = [&out](const ExprNode& child) {
        out += '(';
        print(child, out);
        out += ')';
    };
    auto is_unary_level = [](const ExprNode& n) {
        return n.op == Op::Constant || n.op == Op::Variable || n.op == Op::Neg || is_call_op(n.op);
    };
    switch (e.op) {
        case Op::Constant:
            out += format_double(e.value);
            return;
        case Op::Variable:
            out += e.name;
            return;
        case Op::Neg:
            out += '-';
            // the operand of unary minus must itself parse as a factor
            if (is_unary_level(*e.a) || e.a->op == Op::Pow) print(*e.a, out);
            else paren(*e.a);
            return;
        case Op::Add:
        case Op::Sub:
            print(*e.a, out);
            out += (e.op == Op::Add) ? " + " : " - ";
            // left associativity: a +- (b +- c) keeps its parentheses
            if (e.b->op == Op::Add || e.b->op == Op::Sub) paren(*e.b);
            else print(*e.b, out);
            return;
        case Op::Mul:
        case Op::Div: {
            if (e.a->op == Op::Add || e.a->op == Op::Sub) paren(*e.a);
            else print(*e.a, out);
            out += (e.op == Op::Mul) ? '*' : '/';
            Op r = e.b->op;
            if (r == Op::Add || r == Op::Sub || r == Op::Mul || r == Op::Div) paren(*e.b);
            else print(*e.b, out);
            return;
        }
        case Op::Pow: {
            // the base must be a bare atom: -x^2 would read back as -(x^2)
            bool base_atom = (e.a->op == Op::Constant && !std::signbit(e.a->value)) ||
                             e.a->op == Op::Variable || is_call_op(e.a->op);
            if (base_atom) print(*e.a, out);
            else paren(*e.a);
            out += '^';
            // exponent position accepts a full factor (unary or another pow)
            if (is_unary_level(*e.b) || e.b->op == Op::Pow) print(*e.b, out);
            else paren(*e.b);
            return;
        }
        default:
            out += call_name(e.op);
            out += '(';
            print(*e.a, out);
            out += ')';
            return;
    }
}

}  // namespace

std::string to_string(const ExprNode& e) {
    std::string out;
    print(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// compiled form

CompiledExpr CompiledExpr::compile(const ExprNode& e,
                                   std::span<const std::string> states,
                                   std::span<const std::string> params) {
    CompiledExpr c;
    int depth = 0;
    c.emit(e, states, params, depth);
    return c;
}

void CompiledExpr::emit(const ExprNode& e,
                        std::span<const std::string> states,
                        std::span<const std::string> params,
                        int& depth) {
    auto push = [&](Instr in) {
        prog_.push_back(in);
        ++depth;
        max_stack_ = std::max(max_stack_, depth);
    };
    switch (e.op) {
        case Op::Constant:
            push({Code::PushConst, 0, e.value});
            return;
        case Op::Variable: {
            for (std::size_t i = 0; i < states.size(); ++i)
                if (states[i] == e.name) {
                    push({Code::PushState, static_cast<std::int32_t>(i), 0.0});
                    return;
                }
            for (std::size_t i = 0; i < params.size(); ++i)
                if (params[i] == e.name) {
                    push({Code::PushParam, static_cast<std::int32_t>(i), 0.0});
                    return;
                }
            throw EvalError("unbound variable '" + e.name + "'");
        }
        default: break;
    }
    emit(*e.a, states, params, depth);
    if (e.b) {
        emit(*e.b, states, params, depth);
        --depth;  // binary op pops one
    }
    Code code;
    switch (e.op) {
        case Op::Neg: code = Code::Neg; break;
        case Op::Add: code = Code::Add; break;
        case Op::Sub: code = Code::Sub; break;
        case Op::Mul: code = Code::Mul; break;
        case Op::Div: code = Code::Div; break;
        case Op::Pow: code = Code::Pow; break;
        case Op::Sin: code = Code::Sin; break;
        case Op::Cos: code = Code::Cos; break;
        case Op::Tan: code = Code::Tan; break;
        case Op::Exp: code = Code::Exp; break;
        case Op::Ln: code = Code::Ln; break;
        case Op::Sqrt: code = Code::Sqrt; break;
        case Op::Tanh: code = Code::Tanh; break;
        default: throw Error("compile: unhandled op");
    }
    prog_.push_back({code, 0, 0.0});
}

double CompiledExpr::eval(std::span<const double> state, std::span<const double> params) const {
    std::array<double, 64> local{};
    std::vector<double> heap;
    double* stack = local.data();
    if (max_stack_ > static_cast<int>(local.size())) {
        heap.resize(static_cast<std::size_t>(max_stack_));
        stack = heap.data();
    }
    int sp = 0;
    for (const Instr& in : prog_) {
        switch (in.code) {
            case Code::PushConst: stack[sp++] = in.value; break;
            case Code::PushState: stack[sp++] = state[static_cast<std::size_t>(in.index)]; break;
            case Code::PushParam: stack[sp++] = params[static_cast<std::size_t>(in.index)]; break;
            case Code::Neg: stack[sp - 1] = -stack[sp - 1]; break;
            case Code::Add: --sp; stack[sp - 1] = checked(stack[sp - 1] + stack[sp], "+"); break;
            case Code::Sub: --sp; stack[sp - 1] = checked(stack[sp - 1] - stack[sp], "-"); break;
            case Code::Mul: --sp; stack[sp - 1] = checked(stack[sp - 1] * stack[sp], "*"); break;
            case Code::Div:
                --sp;
                if (stack[sp] == 0.0) throw EvalError("division by zero");
                stack[sp - 1] = checked(stack[sp - 1] / stack[sp], "/");
                break;
            case Code::Pow: --sp; stack[sp - 1] = checked(std::pow(stack[sp - 1], stack[sp]), "^"); break;
            case Code::Sin: stack[sp - 1] = checked(std::sin(stack[sp - 1]), "sin"); break;
            case Code::Cos: stack[sp - 1] = checked(std::cos(stack[sp - 1]), "cos"); break;
            case Code::Tan: stack[sp - 1] = checked(std::tan(stack[sp - 1]), "tan"); break;
            case Code::Exp: stack[sp - 1] = checked(std::exp(stack[sp - 1]), "exp"); break;
            case Code::Ln:
                if (stack[sp - 1] <= 0.0) throw EvalError("ln of non-positive value");
                stack[sp - 1] = checked(std::log(stack[sp - 1]), "ln");
                break;
            case Code::Sqrt:
                if (stack[sp - 1] < 0.0) throw EvalError("sqrt of negative value");
                stack[sp - 1] = std::sqrt(stack[sp - 1]);
                break;
            case Code::Tanh: stack[sp - 1] = std::tanh(stack[sp - 1]); break;
        }
    }
    return stack[0];
}

std::vector<std::string> free_variables(const ExprNode& e) {
    std::vector<std::string> out;
    auto walk = [&out](auto&& self, const ExprNode& n) -> void {
        if (n.op == Op::Variable) {
            out.push_back(n.name);
            return;
        }
        if (n.a) self(self, *n.a);
        if (n.b) self(self, *n.b);
    };
    walk(walk, e);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace odestab
