#pragma once

// Weighted digraph algorithms over exact rationals: Karp's minimum mean
// cycle with cycle recovery, maximum mean by negation, Tarjan SCCs, the
// attracting-SCC upper bound, and conversion to simple weighted systems.

#include "saist/core.hpp"

#include <boost/integer/common_factor_rt.hpp>

#include <limits>
#include <numeric>
#include <optional>

namespace saist {

struct Edge {
    int src = 0;
    int dst = 0;
    Rational weight;
};

class WeightedGraph {
public:
    WeightedGraph() = default;

    int add_vertex(Word label) {
        labels_.push_back(std::move(label));
        out_.emplace_back();
        return static_cast<int>(labels_.size()) - 1;
    }

    /// Vertices labelled {0}, {1}, ...
    explicit WeightedGraph(int vertices) {
        for (int v = 0; v < vertices; ++v) add_vertex(Word{v});
    }

    void add_edge(int src, int dst, Rational weight) {
        if (src < 0 || dst < 0 || src >= size() || dst >= size()) throw InvalidSystem("edge endpoint out of range");
        out_[static_cast<std::size_t>(src)].push_back(static_cast<int>(edges_.size()));
        edges_.push_back({src, dst, weight});
    }

    int size() const { return static_cast<int>(labels_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
    const std::vector<int>& out_edges(int v) const { return out_[static_cast<std::size_t>(v)]; }
    const Word& label(int v) const { return labels_[static_cast<std::size_t>(v)]; }

    bool non_blocking() const {
        for (const auto& o : out_)
            if (o.empty()) return false;
        return true;
    }

    WeightedGraph negated() const {
        WeightedGraph g;
        for (const auto& l : labels_) g.add_vertex(l);
        for (const auto& e : edges_) g.add_edge(e.src, e.dst, -e.weight);
        return g;
    }

    /// Subgraph induced by `keep` (vertex ids in order); returns it with the id map.
    WeightedGraph induced(const std::vector<int>& keep, std::vector<int>* local_to_global = nullptr) const {
        std::vector<int> map(static_cast<std::size_t>(size()), -1);
        WeightedGraph g;
        for (int v : keep) map[static_cast<std::size_t>(v)] = g.add_vertex(label(v));
        for (const auto& e : edges_) {
            const int a = map[static_cast<std::size_t>(e.src)], b = map[static_cast<std::size_t>(e.dst)];
            if (a >= 0 && b >= 0) g.add_edge(a, b, e.weight);
        }
        if (local_to_global) *local_to_global = keep;
        return g;
    }

private:
    std::vector<Word> labels_;
    std::vector<std::vector<int>> out_;
    std::vector<Edge> edges_;
};

struct CycleResult {
    Rational value;
    std::vector<int> cycle;  ///< vertex ids, rotated to the smallest label sequence

    /// Sum of weights along the cycle divided by its length, using the
    /// cheapest edge between consecutive vertices.
    static Rational mean_of(const WeightedGraph& g, const std::vector<int>& cycle);
};

namespace graph_detail {

inline std::vector<Word> label_sequence(const WeightedGraph& g, const std::vector<int>& cyc) {
    std::vector<Word> s;
    s.reserve(cyc.size());
    for (int v : cyc) s.push_back(g.label(v));
    return s;
}

inline std::vector<int> canonical_cycle(const WeightedGraph& g, std::vector<int> cyc) {
    std::vector<int> best = cyc;
    auto best_key = label_sequence(g, best);
    for (std::size_t i = 1; i < cyc.size(); ++i) {
        std::rotate(cyc.begin(), cyc.begin() + 1, cyc.end());
        auto key = label_sequence(g, cyc);
        if (key < best_key || (key == best_key && cyc < best)) {
            best = cyc;
            best_key = std::move(key);
        }
    }
    return best;
}

}  // namespace graph_detail

inline Rational CycleResult::mean_of(const WeightedGraph& g, const std::vector<int>& cycle) {
    if (cycle.empty()) throw InvalidSystem("empty cycle");
    Rational sum = 0;
    for (std::size_t i = 0; i < cycle.size(); ++i) {
        const int u = cycle[i], v = cycle[(i + 1) % cycle.size()];
        std::optional<Rational> best;
        for (int e : g.out_edges(u))
            if (g.edge(e).dst == v && (!best || g.edge(e).weight < *best)) best = g.edge(e).weight;
        if (!best) throw InvalidSystem("vertex list is not a cycle of the graph");
        sum += *best;
    }
    return sum / static_cast<std::int64_t>(cycle.size());
}

/// Strongly connected components (iterative Tarjan). Components come out in
/// reverse topological order; vertices inside a component are sorted.
inline std::vector<std::vector<int>> strongly_connected_components(const WeightedGraph& g) {
    const int n = g.size();
    std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
    std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
    std::vector<int> stack;
    std::vector<std::vector<int>> comps;
    int counter = 0;
    struct Frame { int v; std::size_t next; };
    for (int root = 0; root < n; ++root) {
        if (index[static_cast<std::size_t>(root)] >= 0) continue;
        std::vector<Frame> call{{root, 0}};
        index[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = counter++;
        stack.push_back(root);
        on_stack[static_cast<std::size_t>(root)] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            const auto& outs = g.out_edges(f.v);
            if (f.next < outs.size()) {
                const int w = g.edge(outs[f.next++]).dst;
                const auto wi = static_cast<std::size_t>(w);
                if (index[wi] < 0) {
                    index[wi] = low[wi] = counter++;
                    stack.push_back(w);
                    on_stack[wi] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[wi]) {
                    low[static_cast<std::size_t>(f.v)] = std::min(low[static_cast<std::size_t>(f.v)], index[wi]);
                }
                continue;
            }
            const int v = f.v;
            call.pop_back();
            if (!call.empty()) {
                const auto p = static_cast<std::size_t>(call.back().v);
                low[p] = std::min(low[p], low[static_cast<std::size_t>(v)]);
            }
            if (low[static_cast<std::size_t>(v)] == index[static_cast<std::size_t>(v)]) {
                std::vector<int> comp;
                int w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<std::size_t>(w)] = 0;
                    comp.push_back(w);
                } while (w != v);
                std::sort(comp.begin(), comp.end());
                comps.push_back(std::move(comp));
            }
        }
    }
    return comps;
}

namespace graph_detail {

/// Integer weights: w * scale for the lcm of all denominators.
struct ScaledGraph {
    int n = 0;
    std::vector<std::vector<std::pair<int, std::int64_t>>> out;
    std::int64_t scale = 1;
};

inline ScaledGraph scale(const WeightedGraph& g) {
    ScaledGraph s;
    s.n = g.size();
    for (const auto& e : g.edges()) s.scale = boost::integer::lcm(s.scale, e.weight.denominator());
    s.out.resize(static_cast<std::size_t>(s.n));
    for (int v = 0; v < s.n; ++v)
        for (int ei : g.out_edges(v)) {
            const auto& e = g.edge(ei);
            s.out[static_cast<std::size_t>(v)].emplace_back(
                e.dst, e.weight.numerator() * (s.scale / e.weight.denominator()));
        }
    return s;
}

inline bool has_cycle(const ScaledGraph& s) {
    if (s.n > 1) return true;
    for (const auto& [d, w] : s.out[0])
        if (d == 0) return true;
    return false;
}

/// Karp's minimum cycle mean of a strongly connected graph, in scaled units.
/// Two passes keep memory linear: the first finds D_n, the second replays D_k.
inline Rational karp(const ScaledGraph& s) {
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
    const auto n = static_cast<std::size_t>(s.n);
    auto step = [&](const std::vector<std::int64_t>& cur) {
        std::vector<std::int64_t> nxt(n, kInf);
        for (std::size_t u = 0; u < n; ++u) {
            if (cur[u] >= kInf) continue;
            for (const auto& [v, w] : s.out[u]) {
                const auto vi = static_cast<std::size_t>(v);
                nxt[vi] = std::min(nxt[vi], cur[u] + w);
            }
        }
        return nxt;
    };
    std::vector<std::int64_t> d(n, 0);
    for (std::size_t k = 0; k < n; ++k) d = step(d);
    const std::vector<std::int64_t> dn = d;

    std::vector<std::optional<Rational>> worst(n);
    d.assign(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t v = 0; v < n; ++v) {
            if (dn[v] >= kInf || d[v] >= kInf) continue;
            const Rational r(dn[v] - d[v], static_cast<std::int64_t>(n - k));
            if (!worst[v] || r > *worst[v]) worst[v] = r;
        }
        d = step(d);
    }
    std::optional<Rational> best;
    for (const auto& w : worst)
        if (w && (!best || *w < *best)) best = *w;
    if (!best) throw InvalidSystem("strongly connected component without a cycle");
    return *best;
}

/// Elementary cycles of a digraph (Johnson), at most `cap` of them.
inline std::vector<std::vector<int>> elementary_cycles(const std::vector<std::vector<int>>& adj, std::size_t cap) {
    const int n = static_cast<int>(adj.size());
    std::vector<std::vector<int>> found;
    std::vector<char> blocked(adj.size());
    std::vector<std::vector<int>> bset(adj.size());
    std::vector<int> path;

    for (int s = 0; s < n && found.size() < cap; ++s) {
        // Restrict to vertices >= s; Johnson's recursion, written iteratively.
        for (int v = s; v < n; ++v) {
            blocked[static_cast<std::size_t>(v)] = 0;
            bset[static_cast<std::size_t>(v)].clear();
        }
        auto unblock = [&](int u) {
            std::vector<int> work{u};
            while (!work.empty()) {
                const int x = work.back();
                work.pop_back();
                if (!blocked[static_cast<std::size_t>(x)]) continue;
                blocked[static_cast<std::size_t>(x)] = 0;
                for (int y : bset[static_cast<std::size_t>(x)]) work.push_back(y);
                bset[static_cast<std::size_t>(x)].clear();
            }
        };
        struct Frame { int v; std::size_t next; bool found_cycle; };
        std::vector<Frame> call{{s, 0, false}};
        path.assign(1, s);
        blocked[static_cast<std::size_t>(s)] = 1;
        while (!call.empty() && found.size() < cap) {
            Frame& f = call.back();
            const auto& nb = adj[static_cast<std::size_t>(f.v)];
            if (f.next < nb.size()) {
                const int w = nb[f.next++];
                if (w < s) continue;
                if (w == s) {
                    found.push_back(path);
                    f.found_cycle = true;
                } else if (!blocked[static_cast<std::size_t>(w)]) {
                    blocked[static_cast<std::size_t>(w)] = 1;
                    path.push_back(w);
                    call.push_back({w, 0, false});
                }
                continue;
            }
            const Frame done = f;
            call.pop_back();
            if (done.found_cycle) {
                unblock(done.v);
            } else {
                for (int w : nb)
                    if (w >= s) {
                        auto& b = bset[static_cast<std::size_t>(w)];
                        if (std::find(b.begin(), b.end(), done.v) == b.end()) b.push_back(done.v);
                    }
            }
            path.pop_back();
            if (!call.empty() && done.found_cycle) call.back().found_cycle = true;
        }
    }
    return found;
}

/// All minimum-mean cycles (up to `cap`) of a strongly connected scaled graph
/// with known minimum mean p/q: potentials for w' = q w - p make every edge of
/// a minimum-mean cycle tight, and every cycle of tight edges minimum-mean.
inline std::vector<std::vector<int>> tight_cycles(const ScaledGraph& s, const Rational& mean, std::size_t cap) {
    const std::int64_t p = mean.numerator(), q = mean.denominator();
    const auto n = static_cast<std::size_t>(s.n);
    std::vector<std::int64_t> pot(n, 0);
    for (std::size_t it = 0; it <= n; ++it) {
        bool changed = false;
        for (std::size_t u = 0; u < n; ++u)
            for (const auto& [v, w] : s.out[u]) {
                const std::int64_t cand = pot[u] + q * w - p;
                if (cand < pot[static_cast<std::size_t>(v)]) {
                    pot[static_cast<std::size_t>(v)] = cand;
                    changed = true;
                }
            }
        if (!changed) break;
        if (it == n) throw InvalidSystem("negative reduced cycle: minimum mean is not minimal");
    }
    std::vector<std::vector<int>> adj(n);
    for (std::size_t u = 0; u < n; ++u)
        for (const auto& [v, w] : s.out[u])
            if (pot[u] + q * w - p == pot[static_cast<std::size_t>(v)]) adj[u].push_back(v);
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return elementary_cycles(adj, cap);
}

}  // namespace graph_detail

/// Default number of tied optimal cycles collected per query.
inline constexpr std::size_t kTieCap = 64;

/// Every minimum-mean cycle found (at most `cap`), canonically rotated and
/// sorted by label sequence. All share the same exact value.
inline std::vector<CycleResult> min_mean_cycles(const WeightedGraph& g, std::size_t cap = kTieCap) {
    if (g.size() == 0) throw InvalidSystem("graph has no vertices");
    if (!g.non_blocking()) throw InvalidSystem("graph is blocking: some vertex has no successor");
    std::optional<Rational> best;
    std::vector<std::vector<int>> cycles;
    for (const auto& comp : strongly_connected_components(g)) {
        std::vector<int> ids;
        const WeightedGraph sub = g.induced(comp, &ids);
        const auto sg = graph_detail::scale(sub);
        if (!graph_detail::has_cycle(sg)) continue;
        const Rational scaled = graph_detail::karp(sg);
        const Rational value = scaled / sg.scale;
        if (best && value > *best) continue;
        if (!best || value < *best) {
            best = value;
            cycles.clear();
        }
        for (auto& c : graph_detail::tight_cycles(sg, scaled, cap)) {
            for (int& v : c) v = ids[static_cast<std::size_t>(v)];
            cycles.push_back(std::move(c));
        }
    }
    std::vector<CycleResult> out;
    for (auto& c : cycles) out.push_back({*best, graph_detail::canonical_cycle(g, std::move(c))});
    std::sort(out.begin(), out.end(), [&](const CycleResult& a, const CycleResult& b) {
        const auto ka = graph_detail::label_sequence(g, a.cycle), kb = graph_detail::label_sequence(g, b.cycle);
        return ka != kb ? ka < kb : a.cycle < b.cycle;
    });
    if (out.size() > cap) out.resize(cap);
    return out;
}

inline CycleResult min_mean_cycle(const WeightedGraph& g) { return min_mean_cycles(g, kTieCap).front(); }

inline std::vector<CycleResult> max_mean_cycles(const WeightedGraph& g, std::size_t cap = kTieCap) {
    auto res = min_mean_cycles(g.negated(), cap);
    for (auto& r : res) r.value = -r.value;
    return res;
}

inline CycleResult max_mean_cycle(const WeightedGraph& g) { return max_mean_cycles(g, kTieCap).front(); }

/// SCCs with no edge leaving them.
inline std::vector<std::vector<int>> attracting_components(const WeightedGraph& g) {
    const auto comps = strongly_connected_components(g);
    std::vector<int> comp_of(static_cast<std::size_t>(g.size()));
    for (std::size_t c = 0; c < comps.size(); ++c)
        for (int v : comps[c]) comp_of[static_cast<std::size_t>(v)] = static_cast<int>(c);
    std::vector<std::vector<int>> out;
    for (std::size_t c = 0; c < comps.size(); ++c) {
        bool closed = true;
        for (int v : comps[c])
            for (int e : g.out_edges(v))
                if (comp_of[static_cast<std::size_t>(g.edge(e).dst)] != static_cast<int>(c)) closed = false;
        if (closed) out.push_back(comps[c]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Upper bound on the smallest achievable average: every run ends in some
/// attracting SCC, inside which no run averages more than its maximum cycle mean.
inline Rational attracting_scc_bound(const WeightedGraph& g) {
    if (!g.non_blocking()) throw InvalidSystem("graph is blocking: some vertex has no successor");
    std::optional<Rational> best;
    for (const auto& comp : attracting_components(g)) {
        const Rational v = max_mean_cycle(g.induced(comp)).value;
        if (!best || v < *best) best = v;
    }
    return *best;
}

struct SccSummary {
    std::vector<int> vertices;
    bool attracting = false;
    Rational min_mean;
    Rational max_mean;
};

/// Cycle-mean range of every SCC that contains a cycle.
inline std::vector<SccSummary> scc_summaries(const WeightedGraph& g) {
    const auto sinks = attracting_components(g);
    std::vector<SccSummary> out;
    for (auto comp : strongly_connected_components(g)) {
        std::sort(comp.begin(), comp.end());
        const WeightedGraph sub = g.induced(comp);
        if (!graph_detail::has_cycle(graph_detail::scale(sub))) continue;
        SccSummary s;
        s.attracting = std::find(sinks.begin(), sinks.end(), comp) != sinks.end();
        s.min_mean = min_mean_cycle(sub).value;
        s.max_mean = max_mean_cycle(sub).value;
        s.vertices = std::move(comp);
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const SccSummary& a, const SccSummary& b) { return a.vertices < b.vertices; });
    return out;
}

/// True when all outgoing edges of every vertex carry the same weight.
inline bool is_simple(const WeightedGraph& g) {
    for (int v = 0; v < g.size(); ++v) {
        const auto& o = g.out_edges(v);
        for (int e : o)
            if (g.edge(e).weight != g.edge(o.front()).weight) return false;
    }
    return true;
}

/// Simple-WTS conversion. Each vertex u gets one artificial successor per
/// distinct outgoing weight w (label: u's label, 0, index); u -> a weighs 0 and
/// a -> v weighs w for every original edge u -> v of weight w. Every mean is
/// halved. A graph that is already simple is returned unchanged.
inline WeightedGraph simplify_wts(const WeightedGraph& g) {
    if (is_simple(g)) return g;
    WeightedGraph out;
    for (int v = 0; v < g.size(); ++v) out.add_vertex(g.label(v));
    for (int u = 0; u < g.size(); ++u) {
        std::vector<Rational> weights;
        for (int e : g.out_edges(u)) weights.push_back(g.edge(e).weight);
        std::sort(weights.begin(), weights.end());
        weights.erase(std::unique(weights.begin(), weights.end()), weights.end());
        for (std::size_t i = 0; i < weights.size(); ++i) {
            Word lab = g.label(u);
            lab.push_back(0);
            lab.push_back(static_cast<int>(i));
            const int a = out.add_vertex(std::move(lab));
            out.add_edge(u, a, Rational(0));
            for (int e : g.out_edges(u))
                if (g.edge(e).weight == weights[i]) out.add_edge(a, g.edge(e).dst, weights[i]);
        }
    }
    return out;
}

}  // namespace saist
