#pragma once

// Exhaustive cycle enumeration used as an independent reference for the
// minimum/maximum mean cycle routines.

#include "saist/quantgraph.hpp"

#include <functional>
#include <optional>
#include <random>

namespace saist::testing {

// Exhaustive oracle: every simple cycle, with the cheapest (or dearest)
// parallel edge between consecutive vertices.
struct BruteForce {
    Rational min, max;
};

inline BruteForce brute_force(const WeightedGraph& g) {
    const int n = g.size();
    std::vector<std::vector<std::optional<Rational>>> lo(n, std::vector<std::optional<Rational>>(n)), hi = lo;
    for (const auto& e : g.edges()) {
        auto& a = lo[e.src][e.dst];
        auto& b = hi[e.src][e.dst];
        if (!a || e.weight < *a) a = e.weight;
        if (!b || e.weight > *b) b = e.weight;
    }
    std::optional<Rational> best_lo, best_hi;
    std::vector<int> path;
    std::vector<char> on(n, 0);
    std::function<void(int, Rational, Rational)> dfs = [&](int v, Rational slo, Rational shi) {
        const int s = path.front();
        for (int u = s; u < n; ++u) {
            if (!lo[v][u]) continue;
            if (u == s) {
                const auto len = static_cast<std::int64_t>(path.size());
                const Rational mlo = (slo + *lo[v][u]) / len, mhi = (shi + *hi[v][u]) / len;
                if (!best_lo || mlo < *best_lo) best_lo = mlo;
                if (!best_hi || mhi > *best_hi) best_hi = mhi;
            } else if (!on[u]) {
                on[u] = 1;
                path.push_back(u);
                dfs(u, slo + *lo[v][u], shi + *hi[v][u]);
                path.pop_back();
                on[u] = 0;
            }
        }
    };
    for (int s = 0; s < n; ++s) {
        path = {s};
        on.assign(n, 0);
        on[s] = 1;
        dfs(s, 0, 0);
    }
    return {*best_lo, *best_hi};
}

inline WeightedGraph random_graph(std::mt19937_64& rng, int max_vertices) {
    std::uniform_int_distribution<int> nv(1, max_vertices), w(1, 20);
    const int n = nv(rng);
    std::uniform_int_distribution<int> pick(0, n - 1), extra(0, 2 * n);
    WeightedGraph g(n);
    for (int v = 0; v < n; ++v) g.add_edge(v, pick(rng), w(rng));
    for (int e = extra(rng); e > 0; --e) g.add_edge(pick(rng), pick(rng), w(rng));
    return g;
}

}  // namespace saist::testing
