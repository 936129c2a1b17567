#pragma once

#include <set>
#include <utility>
#include <vector>

#include "synsim/numerics.hpp"

namespace synsim {

/// Undirected interaction graph on nodes 0..n-1 without self-loops.
class Graph {
public:
    using Edge = std::pair<int, int>;  // stored with first < second

    explicit Graph(int n);
    Graph(int n, const std::vector<Edge>& edges);

    void add_edge(int i, int j);
    bool has_edge(int i, int j) const;

    int size() const { return n_; }
    const std::set<Edge>& edges() const { return edges_; }
    std::vector<int> neighbors(int i) const;
    int degree(int i) const;

private:
    void check_node(int i) const;

    int n_;
    std::set<Edge> edges_;
};

Graph complete_graph(int n);

/// Graph Laplacian: degree on the diagonal, -1 for every edge.
class Laplacian {
public:
    explicit Laplacian(const Graph& g);

    const Matrix& matrix() const { return matrix_; }
    int size() const { return static_cast<int>(matrix_.rows()); }

    /// Second-smallest eigenvalue; zero for n == 1.
    double algebraic_connectivity() const;

private:
    Matrix matrix_;
};

Laplacian laplacian(const Graph& g);

/// Breadth-first reachability from node 0.
bool is_connected_search(const Graph& g);

/// lambda_2 > Tolerances::connectivity. Agrees with is_connected_search.
bool is_connected(const Graph& g);

/// I - (1/n) 1 1^T
Matrix projection_complement_span1(int n);

}  // namespace synsim
