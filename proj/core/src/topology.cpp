#include "synsim/topology.hpp"

#include <queue>
#include <stdexcept>
#include <string>

namespace synsim {

Graph::Graph(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("graph needs at least one node, got " + std::to_string(n));
}

Graph::Graph(int n, const std::vector<Edge>& edges) : Graph(n) {
    for (const auto& [i, j] : edges) add_edge(i, j);
}

void Graph::check_node(int i) const {
    if (i < 0 || i >= n_) {
        throw std::out_of_range("node " + std::to_string(i) + " outside [0, " + std::to_string(n_) + ")");
    }
}

void Graph::add_edge(int i, int j) {
    check_node(i);
    check_node(j);
    if (i == j) throw std::invalid_argument("self-loop on node " + std::to_string(i));
    edges_.insert({std::min(i, j), std::max(i, j)});
}

bool Graph::has_edge(int i, int j) const { return edges_.count({std::min(i, j), std::max(i, j)}) > 0; }

std::vector<int> Graph::neighbors(int i) const {
    check_node(i);
    std::vector<int> out;
    for (const auto& [a, b] : edges_) {
        if (a == i) out.push_back(b);
        if (b == i) out.push_back(a);
    }
    return out;
}

int Graph::degree(int i) const { return static_cast<int>(neighbors(i).size()); }

Graph complete_graph(int n) {
    Graph g(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) g.add_edge(i, j);
    }
    return g;
}

Laplacian::Laplacian(const Graph& g) : matrix_(Matrix::Zero(g.size(), g.size())) {
    for (const auto& [i, j] : g.edges()) {
        matrix_(i, j) = -1.0;
        matrix_(j, i) = -1.0;
        matrix_(i, i) += 1.0;
        matrix_(j, j) += 1.0;
    }
}

double Laplacian::algebraic_connectivity() const {
    if (size() < 2) return 0.0;
    return sym_eig(matrix_).values(1);
}

Laplacian laplacian(const Graph& g) { return Laplacian(g); }

bool is_connected_search(const Graph& g) {
    const int n = g.size();
    std::vector<std::vector<int>> adj(n);
    for (const auto& [i, j] : g.edges()) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    std::vector<bool> seen(n, false);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = true;
    int reached = 1;
    while (!frontier.empty()) {
        const int at = frontier.front();
        frontier.pop();
        for (int next : adj[at]) {
            if (!seen[next]) {
                seen[next] = true;
                ++reached;
                frontier.push(next);
            }
        }
    }
    return reached == n;
}

bool is_connected(const Graph& g) {
    if (g.size() == 1) return true;
    return Laplacian(g).algebraic_connectivity() > Tolerances::connectivity;
}

Matrix projection_complement_span1(int n) {
    if (n < 1) throw std::invalid_argument("projection needs n >= 1");
    return Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
}

}  // namespace synsim
