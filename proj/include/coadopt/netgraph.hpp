#pragma once

// Dense weighted digraphs and the structural checks the model needs on its
// physical and social layers: row-stochasticity, strong connectivity,
// reachability of anchored nodes and spectral radius estimation.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "coadopt/error.hpp"

namespace coadopt {

using Vec = std::vector<double>;

/// Square row-major dense matrix.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix from_rows(const std::vector<Vec>& rows);

    std::size_t size() const noexcept { return n_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * n_, n_};
    }

    /// y = M x, rows summed left to right (fixed summation order).
    Vec multiply(std::span<const double> x) const;
    void multiply_into(std::span<const double> x, std::span<double> y) const;

    /// diag(scale) * M
    Matrix scale_rows(std::span<const double> scale) const;
    Matrix transposed() const;

    std::vector<Vec> to_rows() const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// Entry (i, j) is the influence of node j on node i; the edge j -> i exists
/// iff the entry is positive.
class WeightedDigraph {
public:
    WeightedDigraph() = default;
    /// Throws InvalidArgument on n == 0 or a negative/non-finite entry.
    explicit WeightedDigraph(Matrix weights);

    std::size_t n() const noexcept { return weights_.size(); }
    const Matrix& weights() const noexcept { return weights_; }
    double weight(std::size_t i, std::size_t j) const noexcept { return weights_(i, j); }

    /// Out-neighbours in the influence sense: nodes j with weights(i, j) > 0,
    /// i.e. the nodes whose state node i listens to.
    std::vector<std::size_t> listens_to(std::size_t i) const;

    WeightedDigraph reversed() const { return WeightedDigraph(weights_.transposed()); }

    bool operator==(const WeightedDigraph&) const = default;

private:
    Matrix weights_;
};

struct RowStochasticReport {
    bool passed = true;
    double worst_deviation = 0.0;
    std::size_t worst_row = 0;
    std::vector<std::size_t> offending_rows;
};

RowStochasticReport check_row_stochastic(const WeightedDigraph& g, double tol);

/// Scales every row to sum to one. Rows summing to zero are an error.
WeightedDigraph row_normalized(const WeightedDigraph& g);

/// Strong connectivity of the positive-weight edge set (iterative Tarjan).
/// A single node is irreducible regardless of its self-loop.
bool is_irreducible(const WeightedDigraph& g);

/// Strongly connected component index per node.
std::vector<std::size_t> strongly_connected_components(const WeightedDigraph& g);

/// Entry i is true iff some anchored node is reachable from i by following
/// positive-weight entries (i -> j when weights(i, j) > 0). Every node reaches
/// itself.
std::vector<bool> check_reachability_to_anchored(const WeightedDigraph& g,
                                                 const std::vector<bool>& anchored);

struct SpectralRadiusOptions {
    double tol = 1e-12;
    std::size_t max_iter = 100000;
};

/// Power iteration from the all-ones vector. The estimate is the max-norm
/// growth ratio ||M v||_inf / ||v||_inf; convergence is declared when the
/// Collatz-Wielandt bounds min_i (Mv)_i/v_i and max_i (Mv)_i/v_i agree within
/// tol (irreducible case) or the ratio stops moving (reducible case).
/// Throws ConvergenceError carrying the best estimate otherwise.
double spectral_radius(const Matrix& m, SpectralRadiusOptions opts = {});

/// Edge list CSV with header `src,dst,weight`. An edge src -> dst sets
/// weights(dst, src): dst is influenced by src.
WeightedDigraph load_edge_csv(const std::filesystem::path& path, std::size_t n, bool normalize);
WeightedDigraph parse_edge_csv(std::string_view text, std::size_t n, bool normalize);
std::string to_edge_csv(const WeightedDigraph& g);

}  // namespace coadopt
