#include "odestab/system.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "odestab/error.hpp"

namespace odestab {

SystemDef::SystemDef(std::string name,
                     std::vector<std::string> states,
                     std::vector<std::pair<std::string, double>> params,
                     std::vector<ExprPtr> rhs)
    : name_(std::move(name)),
      states_(std::move(states)),
      params_(std::move(params)),
      rhs_(std::move(rhs)) {
    if (states_.empty()) throw Error("system '" + name_ + "' declares no states");
    if (rhs_.size() != states_.size())
        throw Error("system '" + name_ + "': state count " + std::to_string(states_.size()) +
                    " != equation count " + std::to_string(rhs_.size()));

    std::set<std::string> seen;
    for (const auto& s : states_)
        if (!seen.insert(s).second) throw Error("duplicate declaration of '" + s + "'");
    for (const auto& [p, v] : params_) {
        (void)v;
        if (!seen.insert(p).second) throw Error("duplicate declaration of '" + p + "'");
    }

    for (const auto& [p, v] : params_) {
        param_names_.push_back(p);
        param_values_.push_back(v);
    }

    for (std::size_t i = 0; i < rhs_.size(); ++i) {
        for (const auto& v : free_variables(*rhs_[i]))
            if (!seen.count(v))
                throw Error("undeclared identifier '" + v + "' in equation for " + states_[i]);
        compiled_.push_back(CompiledExpr::compile(*rhs_[i], states_, param_names_));
    }
}

bool SystemDef::has_param(const std::string& name) const {
    return std::any_of(params_.begin(), params_.end(),
                       [&](const auto& p) { return p.first == name; });
}

double SystemDef::param(const std::string& name) const {
    for (const auto& [p, v] : params_)
        if (p == name) return v;
    throw Error("unknown parameter '" + name + "'");
}

SystemDef SystemDef::with_param(const std::string& name, double value) const {
    if (!has_param(name)) throw Error("unknown parameter '" + name + "'");
    auto params = params_;
    for (auto& [p, v] : params)
        if (p == name) v = value;
    return SystemDef(name_, states_, std::move(params), rhs_);
}

void SystemDef::eval_rhs(std::span<const double> x, std::span<double> out) const {
    for (std::size_t i = 0; i < compiled_.size(); ++i)
        out[i] = compiled_[i].eval(x, param_values_);
}

std::vector<double> SystemDef::eval_rhs(std::span<const double> x) const {
    std::vector<double> out(dim());
    eval_rhs(x, out);
    return out;
}

double SystemDef::rhs_norm(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& c : compiled_) {
        double f = c.eval(x, param_values_);
        s += f * f;
    }
    return std::sqrt(s);
}

Binding SystemDef::binding_at(std::span<const double> x) const {
    Binding b;
    for (std::size_t i = 0; i < states_.size(); ++i) b[states_[i]] = x[i];
    for (const auto& [p, v] : params_) b[p] = v;
    return b;
}

// ---------------------------------------------------------------------------

SymMatrix::SymMatrix(std::size_t rows, std::size_t cols, std::vector<ExprPtr> entries,
                     const SystemDef& sys)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (entries_.size() != rows_ * cols_) throw Error("SymMatrix: entry count mismatch");
    std::vector<std::string> param_names;
    for (const auto& [p, v] : sys.params()) {
        (void)v;
        param_names.push_back(p);
    }
    for (const auto& e : entries_)
        compiled_.push_back(CompiledExpr::compile(*e, sys.states(), param_names));
}

std::vector<double> SymMatrix::eval_at(std::span<const double> state,
                                       std::span<const double> params) const {
    std::vector<double> out(compiled_.size());
    for (std::size_t i = 0; i < compiled_.size(); ++i)
        out[i] = compiled_[i].eval(state, params);
    return out;
}

std::string_view to_string(HessianMode mode) {
    return mode == HessianMode::Tensor ? "tensor" : "paper-row";
}

SymMatrix jacobian_sym(const SystemDef& sys) {
    const std::size_t n = sys.dim();
    std::vector<ExprPtr> entries;
    entries.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            entries.push_back(differentiate(sys.rhs()[i], sys.states()[j]));
    return SymMatrix(n, n, std::move(entries), sys);
}

HessianBundle hessian_sym(const SystemDef& sys, HessianMode mode) {
    const std::size_t n = sys.dim();
    HessianBundle hb;
    hb.mode = mode;
    if (mode == HessianMode::Tensor) {
        for (std::size_t k = 0; k < n; ++k) {
            std::vector<ExprPtr> first(n);
            for (std::size_t i = 0; i < n; ++i)
                first[i] = differentiate(sys.rhs()[k], sys.states()[i]);
            std::vector<ExprPtr> entries;
            entries.reserve(n * n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    entries.push_back(differentiate(first[i], sys.states()[j]));
            hb.matrices.push_back(SymMatrix(n, n, std::move(entries), sys));
        }
    } else {
        std::vector<ExprPtr> entries;
        entries.reserve(n * n);
        for (std::size_t i = 0; i < n; ++i) {
            ExprPtr di = differentiate(sys.rhs()[i], sys.states()[i]);
            for (std::size_t j = 0; j < n; ++j)
                entries.push_back(differentiate(di, sys.states()[j]));
        }
        hb.matrices.push_back(SymMatrix(n, n, std::move(entries), sys));
    }
    return hb;
}

std::string print_system(const SystemDef& sys) {
    std::string out = "system " + sys.name() + "\n";
    for (const auto& [p, v] : sys.params())
        out += "param " + p + " = " + format_double(v) + "\n";
    out += "state ";
    for (std::size_t i = 0; i < sys.states().size(); ++i) {
        if (i) out += ", ";
        out += sys.states()[i];
    }
    out += "\n";
    for (std::size_t i = 0; i < sys.states().size(); ++i)
        out += "d" + sys.states()[i] + "/dt = " + to_string(sys.rhs()[i]) + "\n";
    return out;
}

}  // namespace odestab
