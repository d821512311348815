#ifndef CONECERT_EXPERIMENT_HPP
#define CONECERT_EXPERIMENT_HPP

#include "conecert/problem.hpp"
#include "conecert/rng.hpp"
#include "conecert/verifier.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace conecert {

struct Thresholds {
    double recovery = 1e-3;
    double witness = 1e-5;
    double optimal = 1.001;
};

struct ExperimentConfig {
    int n = 16;
    std::vector<int> ranks{2, 3};
    std::vector<int> mGrid;  // empty: 8 even points from r(r+1)/2 to n^2 per rank
    int trials = 25;
    std::uint64_t seed = 1;
    Thresholds thresholds;
    int restarts = 5;
};

struct TrialRecord {
    int n = 0, r = 0, m = 0, trial = 0;
    std::uint64_t seed = 0;
    bool recovered = false;
    double rho = 0.0;
    bool unique = false;
    bool strong = false;
    double runtimeMs = 0.0;

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct TrialAux {
    bool optimal = false;
    bool verifierConverged = false;
    bool failed = false;
    std::string error;
};

struct SweepResult {
    std::vector<TrialRecord> records;
    std::vector<TrialAux> aux;
};

// Planted low-rank instance: X0 = W H^T with iid standard normal factors,
// Phi with iid standard normal entries, observation Phi vec(X0).
inline ProblemInstance genInstance(int n, int r, int m, std::uint64_t seed,
                                   int* resamples = nullptr) {
    if (r < 1 || r > n) throw InvalidInput("genInstance: need 1 <= r <= n");
    if (m < 1 || m > n * n) throw InvalidInput("genInstance: need 1 <= m <= n^2");
    ProblemInstance prob;
    prob.n1 = prob.n2 = n;
    prob.m = m;
    std::uint64_t sub = 0;
    for (; sub < 16; ++sub) {
        Rng rng(hashSeed(seed, 0x696e7374ULL, sub));
        const Matrix w = rng.gaussianMatrix(n, r);
        const Matrix h = rng.gaussianMatrix(n, r);
        const Matrix x0 = w * h.transpose();
        if (rankTol(x0, defaultTol().rankRel) != r) continue;
        prob.x0 = x0;
        prob.phi = rng.gaussianMatrix(m, n * n);
        prob.observation = prob.phi * vec(x0);
        if (resamples) *resamples = static_cast<int>(sub);
        return prob;
    }
    throw InternalError("genInstance: repeated rank-deficient draws");
}

inline std::vector<int> effectiveMGrid(const ExperimentConfig& cfg, int r) {
    if (!cfg.mGrid.empty()) return cfg.mGrid;
    std::vector<int> grid;
    const double lo = r * (r + 1) / 2.0;
    const double hi = static_cast<double>(cfg.n) * cfg.n;
    for (int i = 0; i < 8; ++i) {
        int m = static_cast<int>(std::lround(lo + (hi - lo) * i / 7.0));
        m = std::max(1, std::min(m, cfg.n * cfg.n));
        if (grid.empty() || grid.back() != m) grid.push_back(m);
    }
    return grid;
}

inline int envThreadCount() {
    if (const char* env = std::getenv("CONECERT_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Recovery and uniqueness classification over the (r, m, trial) grid.
// Work items are independent; records land in preassigned slots so the
// output is invariant to scheduling.
inline SweepResult runSweep(const ExperimentConfig& cfg,
                            int threadCount = envThreadCount()) {
    if (cfg.trials < 1) throw InvalidInput("runSweep: trials must be >= 1");
    struct Task {
        int r, m, trial;
    };
    std::vector<Task> tasks;
    for (int r : cfg.ranks)
        for (int m : effectiveMGrid(cfg, r))
            for (int t = 0; t < cfg.trials; ++t) tasks.push_back({r, m, t});

    SweepResult out;
    out.records.resize(tasks.size());
    out.aux.resize(tasks.size());

    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t idx = next.fetch_add(1);
            if (idx >= tasks.size()) return;
            const Task& task = tasks[idx];
            TrialRecord rec;
            TrialAux aux;
            rec.n = cfg.n;
            rec.r = task.r;
            rec.m = task.m;
            rec.trial = task.trial;
            rec.seed = hashSeed(cfg.seed, task.r, task.m, task.trial);
            const auto t0 = std::chrono::steady_clock::now();
            try {
                const ProblemInstance prob =
                    genInstance(cfg.n, task.r, task.m, rec.seed);
                SolverReport nnm = solveNnm({prob.phi, prob.observation},
                                            prob.n1, prob.n2);
                const double relErr =
                    frob(nnm.solution - *prob.x0) / std::max(1e-300, frob(*prob.x0));
                rec.recovered = nnm.converged && relErr < cfg.thresholds.recovery;

                CertifyConfig ccfg;
                ccfg.seed = rec.seed;
                ccfg.caps.restarts = cfg.restarts;
                ccfg.caps.witnessTol = cfg.thresholds.witness;
                ccfg.tol.witness = cfg.thresholds.witness;
                ccfg.tol.optimalBound = cfg.thresholds.optimal;
                ccfg.tol.recovery = cfg.thresholds.recovery;
                const CertificationReport rep = certify(prob, ccfg);
                rec.rho = rep.rho;
                rec.unique = rep.unique;
                rec.strong = rep.strong;
                aux.optimal = rep.optimal;
                aux.verifierConverged = rep.diag.verifierConverged;
            } catch (const std::exception& e) {
                aux.failed = true;
                aux.error = e.what();
                rec.rho = std::numeric_limits<double>::quiet_NaN();
            }
            const auto t1 = std::chrono::steady_clock::now();
            rec.runtimeMs =
                std::chrono::duration<double, std::milli>(t1 - t0).count();
            out.records[idx] = rec;
            out.aux[idx] = aux;
        }
    };
    const int nThreads = std::max(1, threadCount);
    std::vector<std::thread> pool;
    for (int i = 1; i < nThreads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return out;
}

// --- CSV ---------------------------------------------------------------

inline constexpr const char* kCsvHeader =
    "n,r,m,trial,seed,recovered,rho,unique,strong,runtime_ms";

inline std::string formatReal(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string emitCsv(const std::vector<TrialRecord>& records) {
    std::ostringstream os;
    os << kCsvHeader << "\n";
    for (const TrialRecord& r : records) {
        os << r.n << ',' << r.r << ',' << r.m << ',' << r.trial << ',' << r.seed
           << ',' << (r.recovered ? 1 : 0) << ',' << formatReal(r.rho) << ','
           << (r.unique ? 1 : 0) << ',' << (r.strong ? 1 : 0) << ','
           << formatReal(r.runtimeMs) << "\n";
    }
    return os.str();
}

inline std::vector<TrialRecord> parseCsv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw InvalidInput("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw InvalidInput("csv: unexpected header: " + line);
    std::vector<TrialRecord> out;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                f.push_back(cur);
                cur.clear();
            } else
                cur.push_back(c);
        }
        f.push_back(cur);
        if (f.size() != 10) throw InvalidInput("csv: wrong field count: " + line);
        TrialRecord r;
        r.n = std::stoi(f[0]);
        r.r = std::stoi(f[1]);
        r.m = std::stoi(f[2]);
        r.trial = std::stoi(f[3]);
        r.seed = std::stoull(f[4]);
        r.recovered = f[5] == "1";
        r.rho = std::stod(f[6]);
        r.unique = f[7] == "1";
        r.strong = f[8] == "1";
        r.runtimeMs = std::stod(f[9]);
        out.push_back(r);
    }
    return out;
}

// --- SVG ---------------------------------------------------------------

namespace detail {

struct CurvePoint {
    int m;
    double recovery, uniqueness;
};

inline std::vector<std::pair<int, std::vector<CurvePoint>>> proportionCurves(
    const std::vector<TrialRecord>& records) {
    std::vector<std::pair<int, std::vector<CurvePoint>>> panels;
    std::vector<int> ranks;
    for (const auto& r : records)
        if (std::find(ranks.begin(), ranks.end(), r.r) == ranks.end())
            ranks.push_back(r.r);
    std::sort(ranks.begin(), ranks.end());
    for (int rank : ranks) {
        std::vector<int> ms;
        for (const auto& r : records)
            if (r.r == rank && std::find(ms.begin(), ms.end(), r.m) == ms.end())
                ms.push_back(r.m);
        std::sort(ms.begin(), ms.end());
        std::vector<CurvePoint> pts;
        for (int m : ms) {
            int total = 0, rec = 0, uni = 0;
            for (const auto& r : records)
                if (r.r == rank && r.m == m) {
                    ++total;
                    rec += r.recovered;
                    uni += r.unique;
                }
            pts.push_back({m, double(rec) / total, double(uni) / total});
        }
        panels.emplace_back(rank, std::move(pts));
    }
    return panels;
}

} // namespace detail

// Standalone SVG 1.1: one panel per rank, red recovery curve, blue
// uniqueness curve, proportion on [0, 1] against the measurement count.
inline std::string plotSvg(const std::vector<TrialRecord>& records) {
    const auto panels = detail::proportionCurves(records);
    const int panelW = 360, panelH = 300;
    const double left = 48, right = 16, top = 36, bottom = 40;
    const int count = std::max<int>(1, static_cast<int>(panels.size()));
    const int width = panelW * count, height = panelH;

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
       << width << "\" height=\"" << height << "\" viewBox=\"0 0 " << width
       << " " << height << "\">\n";
    os << "  <style>.recovery{fill:none;stroke:#cc0000;stroke-width:2} "
          ".uniqueness{fill:none;stroke:#0044cc;stroke-width:2} "
          ".axis{stroke:#000;stroke-width:1} "
          "text{font-family:sans-serif;font-size:12px}</style>\n";

    for (size_t pi = 0; pi < std::max<size_t>(1, panels.size()); ++pi) {
        const double x0 = pi * panelW + left;
        const double x1 = (pi + 1) * panelW - right;
        const double y0 = height - bottom;
        const double y1 = top;
        os << "  <line class=\"axis\" x1=\"" << x0 << "\" y1=\"" << y0
           << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\"/>\n";
        os << "  <line class=\"axis\" x1=\"" << x0 << "\" y1=\"" << y0
           << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\"/>\n";
        for (double tick : {0.0, 0.5, 1.0}) {
            const double y = y0 + (y1 - y0) * tick;
            os << "  <text x=\"" << (x0 - 34) << "\" y=\"" << (y + 4) << "\">"
               << formatReal(tick) << "</text>\n";
        }
        if (pi >= panels.size()) continue;
        const auto& [rank, pts] = panels[pi];
        os << "  <text x=\"" << (x0 + (x1 - x0) / 2 - 20) << "\" y=\""
           << (top - 12) << "\">r = " << rank << "</text>\n";
        if (pts.empty()) continue;
        const int mMin = pts.front().m, mMax = pts.back().m;
        auto mapX = [&](int m) {
            if (mMax == mMin) return 0.5 * (x0 + x1);
            return x0 + (x1 - x0) * double(m - mMin) / double(mMax - mMin);
        };
        auto mapY = [&](double p) { return y0 + (y1 - y0) * p; };
        os << "  <text x=\"" << mapX(mMin) << "\" y=\"" << (y0 + 16) << "\">"
           << mMin << "</text>\n";
        os << "  <text x=\"" << (mapX(mMax) - 24) << "\" y=\"" << (y0 + 16)
           << "\">" << mMax << "</text>\n";
        for (int curve = 0; curve < 2; ++curve) {
            os << "  <polyline class=\""
               << (curve == 0 ? "recovery" : "uniqueness") << "\" points=\"";
            for (size_t k = 0; k < pts.size(); ++k) {
                const double p = curve == 0 ? pts[k].recovery : pts[k].uniqueness;
                os << mapX(pts[k].m) << ',' << mapY(p);
                if (k + 1 < pts.size()) os << ' ';
            }
            os << "\"/>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace conecert

#endif // CONECERT_EXPERIMENT_HPP
