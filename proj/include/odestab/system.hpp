#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "odestab/expr.hpp"

namespace odestab {

// Parsed autonomous system x' = f(x). Immutable after construction; parameter
// overrides produce a new SystemDef sharing the expression trees.
class SystemDef {
public:
    SystemDef(std::string name,
              std::vector<std::string> states,
              std::vector<std::pair<std::string, double>> params,
              std::vector<ExprPtr> rhs);

    const std::string& name() const { return name_; }
    const std::vector<std::string>& states() const { return states_; }
    const std::vector<std::pair<std::string, double>>& params() const { return params_; }
    const std::vector<ExprPtr>& rhs() const { return rhs_; }
    std::size_t dim() const { return states_.size(); }

    bool has_param(const std::string& name) const;
    double param(const std::string& name) const;
    SystemDef with_param(const std::string& name, double value) const;

    const std::vector<double>& param_values() const { return param_values_; }

    // f(x) into out; both spans sized dim()
    void eval_rhs(std::span<const double> x, std::span<double> out) const;
    std::vector<double> eval_rhs(std::span<const double> x) const;
    double rhs_norm(std::span<const double> x) const;  // ||f(x)||_2

    Binding binding_at(std::span<const double> x) const;

private:
    std::string name_;
    std::vector<std::string> states_;
    std::vector<std::pair<std::string, double>> params_;
    std::vector<ExprPtr> rhs_;
    std::vector<std::string> param_names_;
    std::vector<double> param_values_;
    std::vector<CompiledExpr> compiled_;
};

// Matrix of expressions, with a compiled evaluator per entry.
class SymMatrix {
public:
    SymMatrix() = default;
    SymMatrix(std::size_t rows, std::size_t cols, std::vector<ExprPtr> entries,
              const SystemDef& sys);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const ExprPtr& at(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

    // row-major numeric values at a point
    std::vector<double> eval_at(std::span<const double> state,
                                std::span<const double> params) const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<ExprPtr> entries_;
    std::vector<CompiledExpr> compiled_;
};

enum class HessianMode { Tensor, PaperRow };

std::string_view to_string(HessianMode mode);

// Second-derivative field. Tensor mode carries one symmetric matrix
// H_k[i][j] = d2 f_k / dx_i dx_j per component; row mode carries the single
// matrix with entry (i,j) = d2 f_i / dx_i dx_j.
struct HessianBundle {
    HessianMode mode = HessianMode::Tensor;
    std::vector<SymMatrix> matrices;
};

SymMatrix jacobian_sym(const SystemDef& sys);
HessianBundle hessian_sym(const SystemDef& sys, HessianMode mode);

SystemDef parse_system(std::string_view source);
std::string print_system(const SystemDef& sys);

}  // namespace odestab
