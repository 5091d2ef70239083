#include "spreadkit/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "spreadkit/io.hpp"

namespace spreadkit::eigen {

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += val[p] * x[col[p]];
        y[i] = s;
    }
}

double CsrMatrix::norm_inf() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += std::abs(val[p]);
        m = std::max(m, s);
    }
    return m;
}

double CsrMatrix::diagonal(std::size_t row) const {
    for (std::size_t p = row_ptr[row]; p < row_ptr[row + 1]; ++p)
        if (col[p] == row) return val[p];
    return 0.0;
}

double CsrMatrix::min_offdiagonal() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
            if (col[p] != i) m = std::min(m, val[p]);
    return m;
}

std::size_t CellSampling::size() const {
    std::size_t s = 1;
    for (std::size_t d = 0; d < dim; ++d) s *= M;
    return s;
}

namespace {

// Multi-index helpers on the periodic M^N grid; axis 0 varies fastest.
struct PeriodicGrid {
    std::size_t dim;
    std::size_t M;
    std::vector<std::size_t> stride;

    PeriodicGrid(std::size_t n, std::size_t m) : dim(n), M(m), stride(n) {
        std::size_t s = 1;
        for (std::size_t d = 0; d < n; ++d) {
            stride[d] = s;
            s *= m;
        }
    }

    std::size_t coord(std::size_t idx, std::size_t d) const { return (idx / stride[d]) % M; }

    std::size_t shift(std::size_t idx, std::size_t d, int by) const {
        const std::size_t c = coord(idx, d);
        const auto nc = static_cast<std::size_t>(static_cast<long>(c) + by + static_cast<long>(M)) % M;
        return idx - c * stride[d] + nc * stride[d];
    }
};

}  // namespace

CellSampling sample_cell(const media::MediumSpec& medium, std::size_t M) {
    if (M < 8) throw std::invalid_argument("eigen grid size M must be >= 8");
    CellSampling cell;
    cell.dim = medium.dim();
    cell.M = M;
    cell.medium_hash = medium.hash();
    const std::size_t n = cell.dim;
    const std::size_t total = cell.size();
    const PeriodicGrid grid(n, M);
    const double h = 1.0 / static_cast<double>(M);
    const auto& df = medium.linearization();

    cell.A.resize(total * n * n);
    cell.q.resize(total * n);
    cell.df0.resize(total);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < total; ++i) {
        for (std::size_t d = 0; d < n; ++d) x[d] = static_cast<double>(grid.coord(i, d)) * h;
        medium.diffusion().eval_matrix(x, std::span<double>(cell.A).subspan(i * n * n, n * n));
        medium.drift().eval_vector(x, std::span<double>(cell.q).subspan(i * n, n));
        cell.df0[i] = df.eval(x, 0.0);
    }
    return cell;
}

DiscreteOperator assemble(const CellSampling& cell, std::span<const double> z) {
    const std::size_t n = cell.dim;
    if (z.size() != n) throw std::invalid_argument("z must have the medium's dimension");
    const std::size_t M = cell.M;
    const std::size_t total = cell.size();
    const PeriodicGrid grid(n, M);
    const double h = 1.0 / static_cast<double>(M);
    const double h2 = h * h;

    auto a_at = [&](std::size_t node, std::size_t i, std::size_t j) { return cell.A[node * n * n + i * n + j]; };
    // (A z)_d at a node
    auto az_at = [&](std::size_t node, std::size_t d) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += a_at(node, d, j) * z[j];
        return s;
    };

    DiscreteOperator op;
    op.dim = n;
    op.M = M;
    op.z.assign(z.begin(), z.end());
    op.medium_hash = cell.medium_hash;
    CsrMatrix& mat = op.matrix;
    mat.n = total;
    mat.row_ptr.reserve(total + 1);
    mat.row_ptr.push_back(0);

    std::map<std::size_t, double> row;
    for (std::size_t i = 0; i < total; ++i) {
        row.clear();
        double c0 = cell.df0[i];
        for (std::size_t d = 0; d < n; ++d) {
            const std::size_t ip = grid.shift(i, d, +1);
            const std::size_t im = grid.shift(i, d, -1);

            // conservative diagonal diffusion with face-averaged coefficients
            const double ap = 0.5 * (a_at(i, d, d) + a_at(ip, d, d));
            const double am = 0.5 * (a_at(i, d, d) + a_at(im, d, d));
            row[ip] += ap / h2;
            row[im] += am / h2;
            row[i] -= (ap + am) / h2;

            // cross terms d_d (a_{dd'} d_{d'} psi)
            for (std::size_t e = 0; e < n; ++e) {
                if (e == d) continue;
                const double cp = a_at(ip, d, e) / (4.0 * h2);
                const double cm = a_at(im, d, e) / (4.0 * h2);
                if (cp == 0.0 && cm == 0.0) continue;
                row[grid.shift(ip, e, +1)] += cp;
                row[grid.shift(ip, e, -1)] -= cp;
                row[grid.shift(im, e, +1)] -= cm;
                row[grid.shift(im, e, -1)] += cm;
            }

            // centered advection with b = -2 A z + q
            const double b = -2.0 * az_at(i, d) + cell.q[i * n + d];
            row[ip] += b / (2.0 * h);
            row[im] -= b / (2.0 * h);

            // zeroth order: -div(Az) - q.z + z.Az
            c0 -= (az_at(ip, d) - az_at(im, d)) / (2.0 * h);
            c0 -= cell.q[i * n + d] * z[d];
            c0 += z[d] * az_at(i, d);
        }
        row[i] += c0;
        for (const auto& [c, v] : row) {
            mat.col.push_back(c);
            mat.val.push_back(v);
        }
        mat.row_ptr.push_back(mat.col.size());
    }
    return op;
}

double max_monotone_scale(const CellSampling& cell, std::span<const double> e) {
    const std::size_t n = cell.dim;
    const std::size_t total = cell.size();
    const PeriodicGrid grid(n, cell.M);
    const double h = 1.0 / static_cast<double>(cell.M);
    double limit = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < total; ++i) {
        for (std::size_t d = 0; d < n; ++d) {
            const auto a = [&](std::size_t node) { return cell.A[node * n * n + d * n + d]; };
            const double face = 0.5 * std::min(a(i) + a(grid.shift(i, d, 1)), a(i) + a(grid.shift(i, d, -1)));
            double ae = 0.0;
            for (std::size_t j = 0; j < n; ++j) ae += cell.A[i * n * n + d * n + j] * e[j];
            if (ae == 0.0) continue;
            // |-2 s (Ae)_d + q_d| / (2h) <= face / h^2
            const double room = 2.0 * face / h - std::abs(cell.q[i * n + d]);
            limit = std::min(limit, std::max(room, 0.0) / (2.0 * std::abs(ae)));
        }
    }
    return limit;
}

DiscreteOperator assemble(const media::MediumSpec& medium, std::span<const double> z, std::size_t M) {
    return assemble(sample_cell(medium, M), z);
}

EigenResult principal_eigen(const DiscreteOperator& op, const EigenOptions& opts, std::span<const double> initial) {
    const CsrMatrix& L = op.matrix;
    const std::size_t n = L.n;
    double sigma = L.norm_inf() + 1.0;
    // negative couplings void the Perron argument; a larger shift still
    // favours the eigenvalue of maximal real part
    if (L.min_offdiagonal() < 0.0) sigma *= 2.0;

    std::vector<double> x(n, 1.0), Lx(n);
    if (!initial.empty()) {
        if (initial.size() != n) throw std::invalid_argument("initial vector has the wrong size");
        std::copy(initial.begin(), initial.end(), x.begin());
    }
    auto normalize = [](std::vector<double>& v) {
        double m = 0.0;
        for (double e : v) m = std::max(m, std::abs(e));
        if (!(m > 0.0) || !std::isfinite(m)) return false;
        for (double& e : v) e /= m;
        return true;
    };
    if (!normalize(x)) throw std::invalid_argument("initial vector must be nonzero");

    EigenResult res;
    res.M = op.M;
    res.shift = sigma;
    double residual = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        L.multiply(x, Lx);
        double xx = 0.0, xLx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            xx += x[i] * x[i];
            xLx += x[i] * Lx[i];
        }
        const double k = xLx / xx;
        double rmax = 0.0, xmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            rmax = std::max(rmax, std::abs(Lx[i] - k * x[i]));
            xmax = std::max(xmax, std::abs(x[i]));
        }
        residual = rmax / xmax;
        res.iterations = it;
        if (!std::isfinite(residual)) break;
        if (residual <= opts.tol) {
            res.k = k;
            res.residual = residual;
            res.psi = std::move(x);
            if (res.psi[0] < 0.0)
                for (double& e : res.psi) e = -e;
            normalize(res.psi);
            const double mn = *std::min_element(res.psi.begin(), res.psi.end());
            if (!(mn > 0.0))
                throw NonPositiveEigenfunction("principal eigenfunction has a nonpositive entry (min " +
                                               io::fmt17(mn) + "); grid too coarse or assembly error");
            return res;
        }
        for (std::size_t i = 0; i < n; ++i) x[i] = sigma * x[i] + Lx[i];
        if (!normalize(x)) break;
    }
    throw NoConvergence("power iteration did not reach tol " + io::fmt17(opts.tol) + " in " +
                            std::to_string(opts.max_iter) + " iterations (residual " + io::fmt17(residual) + ")",
                        residual);
}

// ---------------------------------------------------------------------------

EigenCache::Key EigenCache::make_key(std::span<const double> z, std::size_t M) {
    std::string key = std::to_string(M);
    for (double zi : z) {
        key += ':';
        key += std::to_string(std::llround(zi * 1e12));
    }
    return key;
}

std::optional<double> EigenCache::find(std::span<const double> z, std::size_t M) {
    const Key key = make_key(z, M);
    std::lock_guard lock(mu_);
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    order_.splice(order_.begin(), order_, it->second);
    ++hits_;
    return it->second->second;
}

void EigenCache::insert(std::span<const double> z, std::size_t M, double k) {
    if (capacity_ == 0) return;
    Key key = make_key(z, M);
    std::lock_guard lock(mu_);
    if (auto it = index_.find(key); it != index_.end()) {
        it->second->second = k;
        order_.splice(order_.begin(), order_, it->second);
        return;
    }
    order_.emplace_front(key, k);
    index_.emplace(std::move(key), order_.begin());
    if (order_.size() > capacity_) {
        index_.erase(order_.back().first);
        order_.pop_back();
    }
}

std::size_t EigenCache::size() const {
    std::lock_guard lock(mu_);
    return order_.size();
}

std::size_t EigenCache::hits() const {
    std::lock_guard lock(mu_);
    return hits_;
}

KSolver::KSolver(const media::MediumSpec& medium, EigenOptions opts, std::size_t cache_capacity)
    : medium_(medium), opts_(opts), cache_(cache_capacity) {}

const CellSampling& KSolver::cell(std::size_t M) {
    std::lock_guard lock(cell_mu_);
    auto it = cells_.find(M);
    if (it == cells_.end()) it = cells_.emplace(M, sample_cell(medium_, M)).first;
    return it->second;
}

EigenResult KSolver::solve(std::span<const double> z, std::size_t M, std::span<const double> initial) {
    auto res = principal_eigen(assemble(cell(M), z), opts_, initial);
    cache_.insert(z, M, res.k);
    return res;
}

double KSolver::k_of(std::span<const double> z, std::size_t M) {
    if (auto k = cache_.find(z, M)) return *k;
    return solve(z, M).k;
}

double k_of(const media::MediumSpec& medium, std::span<const double> z, std::size_t M) {
    return principal_eigen(assemble(medium, z, M)).k;
}

}  // namespace spreadkit::eigen
