#pragma once

#include <Eigen/Dense>
#include <boost/rational.hpp>

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace saist {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Exact rational used for cycle means and SAIST bounds.
using Rational = boost::rational<std::int64_t>;

/// A finite sequence of inter-sample times (or, for generic fixtures, output letters).
using Word = std::vector<int>;

inline double to_double(const Rational& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

/// Comma separated rendering, e.g. "1,2,2".
inline std::string to_string(const Word& w) {
    std::ostringstream os;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) os << ',';
        os << w[i];
    }
    return os.str();
}

inline std::string to_string(const Rational& r) {
    std::ostringstream os;
    os << r.numerator();
    if (r.denominator() != 1) os << '/' << r.denominator();
    return os.str();
}

inline Word concat(Word w, int letter) {
    w.push_back(letter);
    return w;
}

// ---------------------------------------------------------------------------
// Errors. Every failure the library reports derives from saist::Error.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define SAIST_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                    \
    public:                                                        \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

SAIST_DEFINE_ERROR(NonFiniteMatrix);
SAIST_DEFINE_ERROR(NonFiniteState);
SAIST_DEFINE_ERROR(InvalidSystem);
SAIST_DEFINE_ERROR(SolverUnavailable);
SAIST_DEFINE_ERROR(SolverError);
SAIST_DEFINE_ERROR(RankDeficientBasis);
SAIST_DEFINE_ERROR(SingularCycleMatrix);
SAIST_DEFINE_ERROR(DefectiveMatrix);
SAIST_DEFINE_ERROR(EmptyRefinement);
SAIST_DEFINE_ERROR(ConfigError);
SAIST_DEFINE_ERROR(CrosscheckFailed);

#undef SAIST_DEFINE_ERROR

// ---------------------------------------------------------------------------
// Word helpers shared by the graph, abstraction and driver layers.

/// Lexicographically smallest rotation of w.
inline Word canonical_rotation(const Word& w) {
    Word best = w;
    Word cur = w;
    for (std::size_t i = 1; i < w.size(); ++i) {
        std::rotate(cur.begin(), cur.begin() + 1, cur.end());
        if (cur < best) best = cur;
    }
    return best;
}

/// Shortest u with w = u^k.
inline Word primitive_root(const Word& w) {
    const std::size_t n = w.size();
    for (std::size_t p = 1; p < n; ++p) {
        if (n % p) continue;
        bool periodic = true;
        for (std::size_t i = p; i < n && periodic; ++i) periodic = w[i] == w[i - p];
        if (periodic) return Word(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(p));
    }
    return w;
}

inline Word power(const Word& w, int times) {
    Word out;
    out.reserve(w.size() * static_cast<std::size_t>(times));
    for (int i = 0; i < times; ++i) out.insert(out.end(), w.begin(), w.end());
    return out;
}

inline Rational word_mean(const Word& w) {
    std::int64_t s = 0;
    for (int k : w) s += k;
    return Rational(s, static_cast<std::int64_t>(w.size()));
}

}  // namespace saist
