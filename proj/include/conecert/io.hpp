#ifndef CONECERT_IO_HPP
#define CONECERT_IO_HPP

#include "conecert/experiment.hpp"
#include "conecert/l1.hpp"
#include "conecert/problem.hpp"
#include "conecert/verifier.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace conecert {

using Json = nlohmann::json;

namespace detail {

inline void rejectUnknownKeys(const Json& j, const std::set<std::string>& allowed,
                              const std::string& where) {
    if (!j.is_object()) throw InvalidInput(where + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw InvalidInput(where + ": unknown field \"" + it.key() + "\"");
}

inline void requireSchema(const Json& j, const std::string& where) {
    if (!j.contains("schema") || !j["schema"].is_number_integer() ||
        j["schema"].get<int>() != 1)
        throw InvalidInput(where + ": missing or unsupported \"schema\" (want 1)");
}

} // namespace detail

// Matrices travel as row-major nested arrays with explicit shape.
inline Json matrixToJson(const Matrix& m) {
    Json data = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        data.push_back(row);
    }
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Matrix matrixFromJson(const Json& j, const std::string& where) {
    detail::rejectUnknownKeys(j, {"rows", "cols", "data"}, where);
    if (!j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw InvalidInput(where + ": matrix needs rows, cols, data");
    const Eigen::Index rows = j["rows"].get<Eigen::Index>();
    const Eigen::Index cols = j["cols"].get<Eigen::Index>();
    if (rows < 0 || cols < 0) throw InvalidInput(where + ": negative shape");
    const Json& data = j["data"];
    if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows)
        throw InvalidInput(where + ": data has wrong row count");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Json& row = data[i];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw InvalidInput(where + ": data row has wrong length");
        for (Eigen::Index jj = 0; jj < cols; ++jj)
            m(i, jj) = row[jj].get<double>();
    }
    return m;
}

inline Json vectorToJson(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline Vector vectorFromJson(const Json& j, const std::string& where) {
    if (!j.is_array()) throw InvalidInput(where + ": expected an array");
    Vector v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

inline Json problemToJson(const ProblemInstance& p) {
    Json j{{"schema", 1},
           {"n1", p.n1},
           {"n2", p.n2},
           {"m", p.m},
           {"phi", matrixToJson(p.phi)},
           {"observation", vectorToJson(p.observation)}};
    j["x0"] = p.x0 ? matrixToJson(*p.x0) : Json(nullptr);
    return j;
}

inline ProblemInstance problemFromJson(const Json& j) {
    detail::rejectUnknownKeys(
        j, {"schema", "n1", "n2", "m", "phi", "observation", "x0"}, "problem");
    detail::requireSchema(j, "problem");
    ProblemInstance p;
    p.n1 = j.at("n1").get<Eigen::Index>();
    p.n2 = j.at("n2").get<Eigen::Index>();
    p.m = j.at("m").get<Eigen::Index>();
    p.phi = matrixFromJson(j.at("phi"), "problem.phi");
    p.observation = vectorFromJson(j.at("observation"), "problem.observation");
    if (j.contains("x0") && !j["x0"].is_null())
        p.x0 = matrixFromJson(j["x0"], "problem.x0");
    validate(p);
    return p;
}

inline Json reportToJson(const CertificationReport& r) {
    Json diag{{"certificate_residual", r.diag.certificateResidual},
              {"nnm_residual", r.diag.nnmResidual},
              {"nnm_iterations", r.diag.nnmIterations},
              {"radial_iterations", r.diag.radialIterations},
              {"tangent_iterations", r.diag.tangentIterations},
              {"runtime_ms", r.diag.runtimeMs},
              {"verifier_converged", r.diag.verifierConverged},
              {"fast_path", r.diag.fastPath},
              {"tilt_stable_known", r.diag.tiltStableKnown},
              {"tilt_stable", r.diag.tiltStable},
              {"note", r.diag.note}};
    return Json{{"schema", 1},      {"optimal", r.optimal}, {"unique", r.unique},
                {"strong", r.strong}, {"sharp", r.sharp},   {"sri", r.sri},
                {"ri", r.ri},         {"nsc", r.nsc},       {"rho", r.rho},
                {"r", r.r},           {"p", r.p},           {"m", r.m},
                {"diagnostics", diag}};
}

inline Json solveOutputToJson(const SolverReport& rep) {
    return Json{{"schema", 1},
                {"solution", matrixToJson(rep.solution)},
                {"report",
                 Json{{"primal_residual", rep.primalResidual},
                      {"dual_residual", rep.dualResidual},
                      {"iterations", rep.iterations},
                      {"converged", rep.converged}}}};
}

// --- l1 problems ---------------------------------------------------------

struct L1Problem {
    Matrix phi;
    Vector observation;
    Vector x0;
};

inline L1Problem l1ProblemFromJson(const Json& j) {
    detail::rejectUnknownKeys(j, {"schema", "phi", "observation", "x0"},
                              "l1 problem");
    detail::requireSchema(j, "l1 problem");
    L1Problem p;
    p.phi = matrixFromJson(j.at("phi"), "l1.phi");
    p.observation = vectorFromJson(j.at("observation"), "l1.observation");
    p.x0 = vectorFromJson(j.at("x0"), "l1.x0");
    if (p.phi.rows() != p.observation.size() || p.phi.cols() != p.x0.size())
        throw InvalidInput("l1 problem: inconsistent shapes");
    if ((p.phi * p.x0 - p.observation).norm() >
        1e-6 * (1.0 + p.observation.norm()))
        throw InvalidInput("l1 problem: x0 infeasible for the constraint");
    return p;
}

inline Json l1ReportToJson(const L1Report& r) {
    Json pattern = Json::array();
    for (CoordState s : r.pattern.state) {
        switch (s) {
            case CoordState::posActive: pattern.push_back("pos_active"); break;
            case CoordState::negActive: pattern.push_back("neg_active"); break;
            case CoordState::posBoundary: pattern.push_back("pos_boundary"); break;
            case CoordState::negBoundary: pattern.push_back("neg_boundary"); break;
            case CoordState::inactive: pattern.push_back("inactive"); break;
        }
    }
    return Json{{"schema", 1},
                {"optimal", r.optimal},
                {"unique", r.unique},
                {"pattern", pattern}};
}

// --- fixture --------------------------------------------------------------

// 2x2 problem with measurements (X11 + X22, X12 - X21 + X22) = (1, 0) and
// candidate diag(1, 0): optimal and unique but not a strong solution.
inline ProblemInstance lastExampleProblem() {
    ProblemInstance p;
    p.n1 = p.n2 = 2;
    p.m = 2;
    p.phi.resize(2, 4);
    // vec order: (X11, X21, X12, X22)
    p.phi << 1, 0, 0, 1,
             0, -1, 1, 1;
    p.observation.resize(2);
    p.observation << 1, 0;
    Matrix x0(2, 2);
    x0 << 1, 0,
          0, 0;
    p.x0 = x0;
    return p;
}

// --- experiment config (TOML subset) ---------------------------------------
//
// Accepts the flat key = value grammar with one optional [thresholds]
// table: integers, an integer array for ranks / m_grid, # comments.

inline ExperimentConfig configFromToml(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line;
    std::string section;
    int lineNo = 0;
    auto fail = [&](const std::string& msg) {
        throw InvalidInput("config line " + std::to_string(lineNo) + ": " + msg);
    };
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(is, line)) {
        ++lineNo;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("malformed table header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "thresholds") fail("unknown table [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        auto asInt = [&]() {
            size_t pos = 0;
            const long long v = std::stoll(val, &pos);
            if (pos != val.size()) fail("expected integer for " + key);
            return v;
        };
        auto asReal = [&]() {
            size_t pos = 0;
            const double v = std::stod(val, &pos);
            if (pos != val.size()) fail("expected number for " + key);
            return v;
        };
        auto asIntList = [&]() {
            if (val.size() < 2 || val.front() != '[' || val.back() != ']')
                fail("expected [..] array for " + key);
            std::vector<int> items;
            std::string body = val.substr(1, val.size() - 2);
            std::istringstream bs(body);
            std::string tok;
            while (std::getline(bs, tok, ',')) {
                tok = trim(tok);
                if (tok.empty()) continue;
                items.push_back(std::stoi(tok));
            }
            return items;
        };
        if (section == "thresholds") {
            if (key == "recovery") cfg.thresholds.recovery = asReal();
            else if (key == "witness") cfg.thresholds.witness = asReal();
            else if (key == "optimal") cfg.thresholds.optimal = asReal();
            else fail("unknown thresholds key " + key);
        } else {
            if (key == "n") cfg.n = static_cast<int>(asInt());
            else if (key == "ranks") cfg.ranks = asIntList();
            else if (key == "m_grid") cfg.mGrid = asIntList();
            else if (key == "trials") cfg.trials = static_cast<int>(asInt());
            else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(asInt());
            else if (key == "restarts") cfg.restarts = static_cast<int>(asInt());
            else fail("unknown key " + key);
        }
    }
    if (cfg.n < 2) throw InvalidInput("config: n must be >= 2");
    if (cfg.ranks.empty()) throw InvalidInput("config: ranks must be nonempty");
    return cfg;
}

// --- file helpers -----------------------------------------------------------

inline std::string readFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void writeFile(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write file: " + path);
    out << content;
    if (!out) throw InvalidInput("write failed: " + path);
}

} // namespace conecert

#endif // CONECERT_IO_HPP
