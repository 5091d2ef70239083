#pragma once

// Periodic principal eigenvalue k(z) of
//
//   L_z psi = div(A grad psi) - 2 z.A grad psi + q.grad psi
//             + (-div(A z) - q.z + z.A z + d_u f(x,0)) psi
//
// on the unit cell with periodic boundary conditions.

#include <cstddef>
#include <cstdint>
#include <list>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "spreadkit/media.hpp"

namespace spreadkit::eigen {

struct CsrMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> col;
    std::vector<double> val;

    void multiply(std::span<const double> x, std::span<double> y) const;
    double norm_inf() const;
    double diagonal(std::size_t row) const;
    double min_offdiagonal() const;
    std::size_t nnz() const { return val.size(); }
};

// Node values of the medium on the uniform periodic M^N grid; independent of z.
struct CellSampling {
    std::size_t dim = 0;
    std::size_t M = 0;
    std::vector<double> A;    // N*N per node
    std::vector<double> q;    // N per node
    std::vector<double> df0;  // d_u f(x,0) per node
    std::string medium_hash;

    std::size_t size() const;
};

CellSampling sample_cell(const media::MediumSpec& medium, std::size_t M);

struct DiscreteOperator {
    std::size_t dim = 0;
    std::size_t M = 0;
    std::vector<double> z;
    CsrMatrix matrix;
    std::string medium_hash;

    std::size_t size() const { return matrix.n; }
};

// Requires M >= 8 and a medium with a differentiable reaction.
DiscreteOperator assemble(const media::MediumSpec& medium, std::span<const double> z, std::size_t M);
DiscreteOperator assemble(const CellSampling& cell, std::span<const double> z);

// Largest s such that z = s*e keeps the advection stencil monotone
// (nonnegative off-diagonal couplings) for a diagonal diffusion matrix;
// +inf when no bound applies.
double max_monotone_scale(const CellSampling& cell, std::span<const double> e);

struct EigenOptions {
    double tol = 1e-10;
    std::size_t max_iter = 5'000'000;
};

struct EigenResult {
    double k = 0.0;
    std::vector<double> psi;  // max psi = 1, psi > 0
    double residual = 0.0;    // |L psi - k psi|_inf / |psi|_inf
    std::size_t M = 0;
    std::size_t iterations = 0;
    double shift = 0.0;
};

// Shifted power iteration on (sigma I + L) with sigma = |L|_inf + 1.
// `initial`, when given, must be a positive vector of the operator's size.
EigenResult principal_eigen(const DiscreteOperator& op, const EigenOptions& opts = {},
                            std::span<const double> initial = {});

// LRU memo of k values keyed by (M, z rounded to 1e-12). Thread-safe.
class EigenCache {
public:
    explicit EigenCache(std::size_t capacity = 10'000) : capacity_(capacity) {}

    std::optional<double> find(std::span<const double> z, std::size_t M);
    void insert(std::span<const double> z, std::size_t M, double k);
    std::size_t size() const;
    std::size_t hits() const;

private:
    using Key = std::string;
    static Key make_key(std::span<const double> z, std::size_t M);

    std::size_t capacity_;
    mutable std::mutex mu_;
    std::list<std::pair<Key, double>> order_;
    std::unordered_map<Key, std::list<std::pair<Key, double>>::iterator> index_;
    std::size_t hits_ = 0;
};

// k(z) for one medium, with the cell sampling computed once per M.
class KSolver {
public:
    KSolver(const media::MediumSpec& medium, EigenOptions opts = {}, std::size_t cache_capacity = 10'000);

    double k_of(std::span<const double> z, std::size_t M);
    // Full solve, bypassing the memo; `initial` warm-starts the iteration.
    EigenResult solve(std::span<const double> z, std::size_t M, std::span<const double> initial = {});

    const media::MediumSpec& medium() const { return medium_; }
    const EigenOptions& options() const { return opts_; }
    EigenCache& cache() { return cache_; }
    const CellSampling& cell(std::size_t M);

private:

    const media::MediumSpec& medium_;
    EigenOptions opts_;
    EigenCache cache_;
    std::mutex cell_mu_;
    std::unordered_map<std::size_t, CellSampling> cells_;
};

double k_of(const media::MediumSpec& medium, std::span<const double> z, std::size_t M);

}  // namespace spreadkit::eigen
