#pragma once

// l-complete traffic abstractions: states are behavior fragments (words),
// transitions follow the domino rule, and the output of a state is its first
// letter. Targeted refinement splits only the states of a given cycle.

#include "saist/cone_oracle.hpp"
#include "saist/quantgraph.hpp"

#include <ostream>

namespace saist {

struct TrafficAbstraction {
    std::vector<Word> states;                  ///< sorted, unique
    std::vector<std::pair<int, int>> transitions;  ///< sorted (src, dst) indices
    int depth = 0;                             ///< longest word

    int output(int state) const { return states.at(static_cast<std::size_t>(state)).front(); }

    int index_of(const Word& w) const {
        const auto it = std::lower_bound(states.begin(), states.end(), w);
        return (it != states.end() && *it == w) ? static_cast<int>(it - states.begin()) : -1;
    }

    bool has_transition(int src, int dst) const {
        return std::binary_search(transitions.begin(), transitions.end(), std::make_pair(src, dst));
    }
};

namespace abstraction_detail {

inline bool is_prefix(const Word& p, const Word& w) {
    return p.size() <= w.size() && std::equal(p.begin(), p.end(), w.begin());
}

}  // namespace abstraction_detail

/// Prefix-compatible domino rule on a sorted word set: u -> v iff u minus its
/// first letter is a prefix of v, or v is a prefix of it. On words of one
/// common length this is exactly kσ -> σk'.
inline std::vector<std::pair<int, int>> domino_transitions(const std::vector<Word>& states) {
    if (!std::is_sorted(states.begin(), states.end())) throw InvalidSystem("states must be sorted");
    std::vector<std::pair<int, int>> out;
    const int n = static_cast<int>(states.size());
    for (int u = 0; u < n; ++u) {
        const Word& wu = states[static_cast<std::size_t>(u)];
        if (wu.empty()) throw InvalidSystem("empty word is not a state");
        const Word tail(wu.begin() + 1, wu.end());
        std::vector<int> targets;
        // Words extending the tail form a contiguous sorted block.
        for (auto it = std::lower_bound(states.begin(), states.end(), tail);
             it != states.end() && abstraction_detail::is_prefix(tail, *it); ++it)
            targets.push_back(static_cast<int>(it - states.begin()));
        // Proper nonempty prefixes of the tail.
        for (std::size_t len = 1; len < tail.size(); ++len) {
            const Word p(tail.begin(), tail.begin() + static_cast<std::ptrdiff_t>(len));
            const auto it = std::lower_bound(states.begin(), states.end(), p);
            if (it != states.end() && *it == p) targets.push_back(static_cast<int>(it - states.begin()));
        }
        std::sort(targets.begin(), targets.end());
        targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
        for (int v : targets) out.emplace_back(u, v);
    }
    return out;
}

inline TrafficAbstraction make_abstraction(std::vector<Word> states) {
    std::sort(states.begin(), states.end());
    states.erase(std::unique(states.begin(), states.end()), states.end());
    TrafficAbstraction a;
    for (const auto& w : states) a.depth = std::max(a.depth, static_cast<int>(w.size()));
    a.states = std::move(states);
    a.transitions = domino_transitions(a.states);
    return a;
}

/// Words of length l admitted by the oracle. Expansion is breadth-first over
/// the word tree: only children of admitted words are queried, which prunes
/// exactly like a depth-first walk but lets each level go out as one batch.
inline TrafficAbstraction build_l_complete(WordOracle& oracle, int l) {
    if (l < 1) throw InvalidSystem("abstraction depth must be at least 1");
    const auto letters = oracle.alphabet();
    std::vector<Word> level{Word{}};
    for (int depth = 1; depth <= l; ++depth) {
        std::vector<Word> children;
        children.reserve(level.size() * letters.size());
        for (const auto& w : level)
            for (int k : letters) children.push_back(concat(w, k));
        const auto ok = oracle.admits(children);
        level.clear();
        for (std::size_t i = 0; i < children.size(); ++i)
            if (ok[i]) level.push_back(std::move(children[i]));
    }
    return make_abstraction(std::move(level));
}

/// Replaces every state on `sac` (state indices) by its admitted one-letter
/// extensions and rebuilds the transitions.
inline TrafficAbstraction refine_sac(const TrafficAbstraction& abs, const std::vector<int>& sac, WordOracle& oracle) {
    std::vector<int> split = sac;
    std::sort(split.begin(), split.end());
    split.erase(std::unique(split.begin(), split.end()), split.end());
    const auto letters = oracle.alphabet();
    std::vector<Word> queries;
    for (int s : split)
        for (int k : letters) queries.push_back(concat(abs.states.at(static_cast<std::size_t>(s)), k));
    const auto ok = oracle.admits(queries);

    std::vector<Word> states;
    std::size_t q = 0;
    for (int s : split) {
        bool any = false;
        for (std::size_t i = 0; i < letters.size(); ++i, ++q) {
            if (ok[q]) {
                states.push_back(queries[q]);
                any = true;
            }
        }
        if (!any)
            throw EmptyRefinement("no admitted extension of " + to_string(abs.states[static_cast<std::size_t>(s)]));
    }
    for (int i = 0; i < static_cast<int>(abs.states.size()); ++i)
        if (!std::binary_search(split.begin(), split.end(), i)) states.push_back(abs.states[static_cast<std::size_t>(i)]);
    return make_abstraction(std::move(states));
}

/// Repeatedly drops states without successors (they carry no infinite run).
/// Returns the number of states removed.
inline std::size_t prune_blocking(TrafficAbstraction& abs) {
    std::size_t removed = 0;
    for (;;) {
        std::vector<char> has_succ(abs.states.size(), 0);
        for (const auto& [u, v] : abs.transitions) has_succ[static_cast<std::size_t>(u)] = 1;
        std::vector<Word> keep;
        for (std::size_t i = 0; i < abs.states.size(); ++i)
            if (has_succ[i]) keep.push_back(abs.states[i]);
        if (keep.size() == abs.states.size()) return removed;
        removed += abs.states.size() - keep.size();
        const int depth = abs.depth;
        abs = make_abstraction(std::move(keep));
        abs.depth = std::max(abs.depth, depth);
        if (abs.states.empty()) throw EmptyRefinement("every state of the abstraction is blocking");
    }
}

/// Simple weighted graph: weight(u, v) = output(u).
inline WeightedGraph to_graph(const TrafficAbstraction& abs) {
    WeightedGraph g;
    for (const auto& w : abs.states) g.add_vertex(w);
    for (const auto& [u, v] : abs.transitions) g.add_edge(u, v, Rational(abs.output(u)));
    return g;
}

/// Output word read along a cycle of states.
inline Word cycle_word(const TrafficAbstraction& abs, const std::vector<int>& cycle) {
    Word w;
    w.reserve(cycle.size());
    for (int s : cycle) w.push_back(abs.output(s));
    return w;
}

/// Graphviz rendering; nodes in state order, edges weighted by the source output.
inline void write_dot(std::ostream& os, const TrafficAbstraction& abs, const std::vector<int>& highlight = {}) {
    os << "digraph traffic {\n  rankdir=LR;\n";
    for (std::size_t i = 0; i < abs.states.size(); ++i) {
        const bool hi = std::find(highlight.begin(), highlight.end(), static_cast<int>(i)) != highlight.end();
        os << "  s" << i << " [label=\"" << to_string(abs.states[i]) << "\"" << (hi ? ", color=red" : "") << "];\n";
    }
    for (const auto& [u, v] : abs.transitions)
        os << "  s" << u << " -> s" << v << " [weight=" << abs.output(u) << "];\n";
    os << "}\n";
}

}  // namespace saist
