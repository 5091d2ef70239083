#pragma once

// Arithmetic expression language for periodic coefficient fields and
// reaction terms.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?            (right associative)
//   primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//
// Identifiers: pi, u, x1..xN, named parameters, and the functions
// sin cos exp tanh (arity 1), abs (arity 1), min max (arity 2).

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spreadkit::fieldlang {

using ParamTable = std::map<std::string, double, std::less<>>;

enum class NodeKind : std::uint8_t { Number, Pi, Param, Var, U, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class Func : std::uint8_t { Sin, Cos, Exp, Tanh, Abs, Min, Max };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind = NodeKind::Number;
    double value = 0.0;      // Number literal or bound Param value
    std::size_t var = 0;     // zero-based x index for Var
    std::string name;        // Param name
    Func func = Func::Sin;   // Call
    std::vector<NodePtr> args;
};

// Postfix program evaluated on a small value stack. Built once per Expr.
struct Instr {
    NodeKind kind;
    Func func;
    std::uint32_t index;
    double value;
};

// Immutable expression. Copies share the tree; evaluation is pure and
// safe from concurrent threads.
class Expr {
public:
    Expr();
    explicit Expr(NodePtr root);

    const Node& root() const { return *root_; }
    const NodePtr& root_ptr() const { return root_; }

    // Throws DomainError on division by zero, 0^negative, or a negative
    // base raised to a non-integer power.
    double eval(std::span<const double> x, std::optional<double> u = std::nullopt) const;

    bool uses_u() const { return uses_u_; }
    // One past the highest x index referenced (0 when x-free).
    std::size_t var_extent() const { return var_extent_; }
    bool uses_x() const { return var_extent_ > 0; }
    bool has_nonsmooth() const { return nonsmooth_; }

    std::string to_string() const;

private:
    NodePtr root_;
    std::vector<Instr> program_;
    std::size_t max_stack_ = 0;
    std::size_t var_extent_ = 0;
    bool uses_u_ = false;
    bool nonsmooth_ = false;
};

bool structurally_equal(const Expr& a, const Expr& b);

Expr parse_expr(std::string_view source, std::size_t n_vars, bool allow_u,
                const ParamTable& params = {});

// Symbolic partial derivative in u. Light constant folding only.
Expr derivative_u(const Expr& e);

enum class FieldKind { Scalar, Vector, SymmetricMatrix };

// Unit-cell periodic field on R^N. Matrix entries are the upper triangle,
// row-major: (0,0) (0,1) ... (0,N-1) (1,1) ... (N-1,N-1).
class CoefficientField {
public:
    static CoefficientField scalar(std::size_t dim, Expr e, bool periodic = true);
    static CoefficientField vector(std::size_t dim, std::vector<Expr> comps, bool periodic = true);
    static CoefficientField symmetric_matrix(std::size_t dim, std::vector<Expr> upper, bool periodic = true);

    FieldKind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    bool declared_periodic() const { return periodic_; }
    const std::vector<Expr>& entries() const { return entries_; }
    const Expr& entry(std::size_t i, std::size_t j) const;
    bool uses_u() const;
    bool uses_x() const;

    double eval_scalar(std::span<const double> x, std::optional<double> u = std::nullopt) const;
    void eval_vector(std::span<const double> x, std::span<double> out) const;
    // Full N*N row-major symmetric matrix.
    void eval_matrix(std::span<const double> x, std::span<double> out) const;

private:
    CoefficientField(FieldKind k, std::size_t dim, std::vector<Expr> entries, bool periodic);

    FieldKind kind_;
    std::size_t dim_;
    std::vector<Expr> entries_;
    bool periodic_;
};

struct PeriodicityReport {
    bool pass = true;
    double worst = 0.0;
    std::vector<double> witness;  // x (and u last, for u-dependent fields)
    std::size_t samples = 0;
};

// Samples |e(x + h) - e(x)| over random x in the unit cell and the N unit
// lattice vectors h; u-dependent fields also draw u in [0,1].
PeriodicityReport validate_periodicity(const CoefficientField& field, std::size_t n_random = 100,
                                       std::uint64_t seed = 42, double tol = 1e-10);

}  // namespace spreadkit::fieldlang
