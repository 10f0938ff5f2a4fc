#pragma once

// Small symbolic systems with known limit-average behavior, used to exercise
// the generic abstraction engine. Each supplies a fragment oracle and a test
// for whether a periodic word repeated forever is a genuine behavior.

#include "saist/cone_oracle.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <set>

namespace saist::fixtures {

/// Fragment oracle driven by a predicate on words.
class LanguageOracle : public WordOracle {
public:
    using Pred = std::function<bool(const Word&)>;

    LanguageOracle(std::vector<int> letters, Pred admits) : letters_(std::move(letters)), admits_(std::move(admits)) {}

    std::vector<int> alphabet() const override { return letters_; }

    std::vector<bool> admits(const std::vector<Word>& words) override {
        std::vector<bool> out;
        out.reserve(words.size());
        for (const auto& w : words) {
            ++queries_;
            out.push_back(admits_(w));
        }
        return out;
    }

    long queries() const { return queries_; }

private:
    std::vector<int> letters_;
    Pred admits_;
    long queries_ = 0;
};

/// Is w a factor of the infinite periodic word p^ω?
inline bool factor_of_periodic(const Word& w, const Word& p) {
    if (p.empty()) return false;
    for (std::size_t s = 0; s < p.size(); ++s) {
        bool ok = true;
        for (std::size_t i = 0; i < w.size() && ok; ++i) ok = w[i] == p[(s + i) % p.size()];
        if (ok) return true;
    }
    return false;
}

/// Is the primitive root of w a rotation of p?
inline bool same_cycle(const Word& w, const Word& p) {
    return canonical_rotation(primitive_root(w)) == canonical_rotation(primitive_root(p));
}

struct Fixture {
    std::string name;
    std::vector<int> letters;
    LanguageOracle::Pred fragment;
    std::function<bool(const Word&)> periodic_behavior;
};

/// x -> 2x mod 1 on [0,1], output 0 below 1/2 and 1 above. Every binary word
/// is a fragment; a periodic word is realized unless it is all ones.
inline Fixture doubling_map() {
    return {"doubling_map", {0, 1}, [](const Word&) { return true; }, [](const Word& w) {
                return std::any_of(w.begin(), w.end(), [](int b) { return b == 0; });
            }};
}

/// Behaviors (1^n 2^n)^ω, n >= 1.
inline Fixture ones_then_twos() {
    auto block = [](std::size_t n) {
        Word p(n, 1);
        p.insert(p.end(), n, 2);
        return p;
    };
    return {"ones_then_twos", {1, 2},
            [block](const Word& w) {
                for (std::size_t n = 1; n <= w.size() + 1; ++n)
                    if (factor_of_periodic(w, block(n))) return true;
                return false;
            },
            [block](const Word& w) {
                const Word r = primitive_root(w);
                if (r.size() % 2) return false;
                return same_cycle(r, block(r.size() / 2));
            }};
}

/// Behaviors (1 2^n)^ω for n >= 2, and 2^ω.
inline Fixture one_then_twos() {
    auto block = [](std::size_t n) {
        Word p{1};
        p.insert(p.end(), n, 2);
        return p;
    };
    return {"one_then_twos", {1, 2},
            [block](const Word& w) {
                if (std::all_of(w.begin(), w.end(), [](int k) { return k == 2; })) return true;
                for (std::size_t n = 2; n <= w.size() + 1; ++n)
                    if (factor_of_periodic(w, block(n))) return true;
                return false;
            },
            [block](const Word& w) {
                const Word r = primitive_root(w);
                if (r == Word{2}) return true;
                return r.size() >= 3 && same_cycle(r, block(r.size() - 1));
            }};
}

/// x -> x + a mod 1, output 1 when x < a. For irrational a nothing periodic
/// occurs. Fragments of length l are read at the midpoints of the partition of
/// [0,1) cut by the points -j a and a - j a (j < l), where each l-window is constant.
inline Fixture irrational_rotation(double a) {
    auto cache = std::make_shared<std::map<std::size_t, std::set<Word>>>();
    auto windows = [a, cache](std::size_t l) -> const std::set<Word>& {
        auto it = cache->find(l);
        if (it != cache->end()) return it->second;
        std::vector<double> cuts{0.0, 1.0};
        for (std::size_t j = 0; j < l; ++j) {
            const double s = static_cast<double>(j) * a;
            cuts.push_back(1.0 - (s - std::floor(s)));
            const double t = a - s;
            cuts.push_back(t - std::floor(t));
        }
        std::sort(cuts.begin(), cuts.end());
        std::set<Word> words;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            if (cuts[i + 1] - cuts[i] < 1e-12) continue;
            double x = 0.5 * (cuts[i] + cuts[i + 1]);
            Word w;
            for (std::size_t j = 0; j < l; ++j) {
                w.push_back(x < a ? 1 : 0);
                x += a;
                x -= std::floor(x);
            }
            words.insert(std::move(w));
        }
        return cache->emplace(l, std::move(words)).first->second;
    };
    return {"irrational_rotation", {0, 1},
            [windows](const Word& w) { return windows(w.size()).count(w) != 0; },
            [](const Word&) { return false; }};
}

}  // namespace saist::fixtures
