#pragma once

// SMT-LIB2 (QF_NRA) rendering of sigma-cones and a subprocess client for an
// external nonlinear real arithmetic solver such as z3.

#include "saist/cone.hpp"

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <thread>

#include <fcntl.h>
#include <pthread.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace saist {

/// Plain decimal (no exponent) with `digits` significant figures, trailing
/// zeros trimmed but at least one fractional digit, e.g. "2.0", "-0.00125".
inline std::string format_decimal(double v, int digits) {
    if (v == 0.0) return "0.0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*e", digits - 1, std::fabs(v));
    const std::string s(buf);
    const auto epos = s.find('e');
    std::string mant;
    for (char ch : s.substr(0, epos))
        if (ch != '.') mant.push_back(ch);
    const int exp10 = std::stoi(s.substr(epos + 1));
    // value = 0.mant * 10^(exp10 + 1)
    const int point = exp10 + 1;
    std::string ip, fp;
    if (point <= 0) {
        ip = "0";
        fp = std::string(static_cast<std::size_t>(-point), '0') + mant;
    } else if (point >= static_cast<int>(mant.size())) {
        ip = mant + std::string(static_cast<std::size_t>(point) - mant.size(), '0');
    } else {
        ip = mant.substr(0, static_cast<std::size_t>(point));
        fp = mant.substr(static_cast<std::size_t>(point));
    }
    while (!fp.empty() && fp.back() == '0') fp.pop_back();
    if (fp.empty()) fp = "0";
    return (v < 0 ? "-" : "") + ip + "." + fp;
}

namespace smt_detail {

inline std::string literal(double v, int digits) {
    const std::string d = format_decimal(v, digits);
    return d[0] == '-' ? "(- " + d.substr(1) + ")" : d;
}

inline std::string quadratic_form(const Matrix& P, int digits) {
    std::vector<std::string> terms;
    const auto n = P.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double c = (i == j) ? P(i, i) : P(i, j) + P(j, i);
            if (c == 0.0) continue;
            terms.push_back("(* " + literal(c, digits) + " x" + std::to_string(i) + " x" + std::to_string(j) + ")");
        }
    }
    if (terms.empty()) return "0.0";
    if (terms.size() == 1) return terms.front();
    std::string s = "(+";
    for (const auto& t : terms) s += " " + t;
    return s + ")";
}

}  // namespace smt_detail

/// Deterministic QF_NRA query: one Real constant per coordinate, one assertion
/// per atom, and the unit-sphere nondegeneracy condition.
inline std::string emit_smtlib(const ConeSystem& cone, int digits = 15) {
    if (digits < 6) throw InvalidSystem("emit_smtlib needs at least 6 significant digits");
    std::string out = "(set-logic QF_NRA)\n";
    for (int i = 0; i < cone.n; ++i) out += "(declare-const x" + std::to_string(i) + " Real)\n";
    for (const auto& c : cone.constraints) {
        const char* op = c.sense == Sense::StrictPositive ? ">" : "<=";
        out += std::string("(assert (") + op + " " + smt_detail::quadratic_form(c.P, digits) + " 0))\n";
    }
    std::string sphere;
    for (int i = 0; i < cone.n; ++i) sphere += " (* x" + std::to_string(i) + " x" + std::to_string(i) + ")";
    if (cone.n > 1) sphere = " (+" + sphere + ")";
    out += "(assert (=" + sphere + " 1))\n(check-sat)\n(get-model)\n";
    return out;
}

// ---------------------------------------------------------------------------
// Solver replies.

enum class SolverStatus { Sat, Unsat, Unknown };

struct SolverReply {
    SolverStatus status = SolverStatus::Unknown;
    std::map<std::string, double> model;
};

namespace smt_detail {

struct SExpr {
    std::string atom;
    std::vector<SExpr> list;
    bool is_atom() const { return list.empty() && !atom.empty(); }
};

inline SExpr parse_sexpr(const std::string& s, std::size_t& pos) {
    auto skip = [&] {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    };
    skip();
    if (pos >= s.size()) throw SolverError("unexpected end of solver reply");
    SExpr e;
    if (s[pos] == '(') {
        ++pos;
        for (;;) {
            skip();
            if (pos >= s.size()) throw SolverError("unbalanced parentheses in solver reply");
            if (s[pos] == ')') { ++pos; break; }
            e.list.push_back(parse_sexpr(s, pos));
        }
        if (e.list.empty()) e.atom = "()";
        return e;
    }
    if (s[pos] == ')') throw SolverError("unexpected ')' in solver reply");
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) && s[pos] != '(' && s[pos] != ')')
        e.atom.push_back(s[pos++]);
    return e;
}

inline double eval_number(const SExpr& e) {
    if (e.is_atom()) {
        std::string a = e.atom;
        if (!a.empty() && a.back() == '?') a.pop_back();  // z3 marks truncated algebraic decimals
        char* end = nullptr;
        const double v = std::strtod(a.c_str(), &end);
        if (a.empty() || end != a.c_str() + a.size()) throw SolverError("bad numeral '" + e.atom + "'");
        return v;
    }
    if (e.list.size() == 2 && e.list[0].atom == "-") return -eval_number(e.list[1]);
    if (e.list.size() == 3 && e.list[0].atom == "/") return eval_number(e.list[1]) / eval_number(e.list[2]);
    throw SolverError("unsupported model value (algebraic numbers need pp.decimal=true)");
}

}  // namespace smt_detail

/// Parses "sat" + (model ...), "unsat" or "unknown"/"timeout" replies.
inline SolverReply parse_solver_reply(const std::string& text) {
    std::size_t pos = 0;
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    const std::string head = text.substr(pos, end - pos);
    SolverReply r;
    if (head == "unsat") { r.status = SolverStatus::Unsat; return r; }
    if (head == "unknown" || head == "timeout") return r;
    if (head != "sat") throw SolverError("unexpected solver reply: '" + text.substr(0, 200) + "'");
    r.status = SolverStatus::Sat;
    std::size_t p = end;
    while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p]))) ++p;
    if (p >= text.size()) return r;  // sat without model
    const smt_detail::SExpr model = smt_detail::parse_sexpr(text, p);
    auto entries = model.list;
    if (!entries.empty() && entries[0].atom == "model") entries.erase(entries.begin());
    for (const auto& def : entries) {
        if (def.list.size() != 5 || def.list[0].atom != "define-fun") continue;
        r.model[def.list[1].atom] = smt_detail::eval_number(def.list[4]);
    }
    return r;
}

// ---------------------------------------------------------------------------

struct SolverConfig {
    std::string path;          ///< empty: no external solver
    double timeout_s = 60.0;
    int digits = 15;
    /// Extra arguments; "{timeout}" is replaced by the integer timeout in seconds.
    std::vector<std::string> args = {"-in", "-smt2", "-T:{timeout}", "pp.decimal=true", "pp.decimal_precision=20"};

    bool configured() const { return !path.empty(); }
};

/// Runs one solver process per query, feeding the query on stdin and reading
/// the reply from stdout. Safe to call from several threads.
class SmtSolver {
public:
    explicit SmtSolver(SolverConfig cfg) : cfg_(std::move(cfg)) {}

    const SolverConfig& config() const { return cfg_; }

    SolverReply check(const std::string& query) const {
        if (!cfg_.configured()) throw SolverUnavailable("no external solver configured");
        return parse_solver_reply(run(query));
    }

private:
    std::string run(const std::string& input) const {
        int in_pipe[2], out_pipe[2];
        if (pipe(in_pipe) != 0) throw SolverUnavailable(std::strerror(errno));
        if (pipe(out_pipe) != 0) {
            close(in_pipe[0]);
            close(in_pipe[1]);
            throw SolverUnavailable(std::strerror(errno));
        }
        std::vector<std::string> argv_s{cfg_.path};
        const std::string tmo = std::to_string(static_cast<long>(std::ceil(cfg_.timeout_s)));
        for (std::string a : cfg_.args) {
            const auto at = a.find("{timeout}");
            if (at != std::string::npos) a.replace(at, 9, tmo);
            argv_s.push_back(a);
        }
        std::vector<char*> argv;
        for (auto& a : argv_s) argv.push_back(a.data());
        argv.push_back(nullptr);

        const pid_t pid = fork();
        if (pid < 0) throw SolverUnavailable(std::strerror(errno));
        if (pid == 0) {
            dup2(in_pipe[0], STDIN_FILENO);
            dup2(out_pipe[1], STDOUT_FILENO);
            dup2(out_pipe[1], STDERR_FILENO);
            close(in_pipe[0]); close(in_pipe[1]); close(out_pipe[0]); close(out_pipe[1]);
            execvp(argv[0], argv.data());
            _exit(127);
        }
        close(in_pipe[0]);
        close(out_pipe[1]);
        std::thread writer([fd = in_pipe[1], &input] {
            // A solver that exits early must not take the process down with SIGPIPE.
            sigset_t block;
            sigemptyset(&block);
            sigaddset(&block, SIGPIPE);
            pthread_sigmask(SIG_BLOCK, &block, nullptr);
            std::size_t off = 0;
            while (off < input.size()) {
                const ssize_t w = write(fd, input.data() + off, input.size() - off);
                if (w <= 0) break;
                off += static_cast<std::size_t>(w);
            }
            close(fd);
        });
        std::string out;
        char buf[4096];
        for (;;) {
            const ssize_t r = read(out_pipe[0], buf, sizeof buf);
            if (r <= 0) break;
            out.append(buf, static_cast<std::size_t>(r));
        }
        close(out_pipe[0]);
        writer.join();
        int status = 0;
        waitpid(pid, &status, 0);
        if (WIFEXITED(status) && WEXITSTATUS(status) == 127)
            throw SolverUnavailable("could not execute '" + cfg_.path + "'");
        return out;
    }

    SolverConfig cfg_;
};

}  // namespace saist
