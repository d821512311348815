#ifndef CONECERT_CLI_HPP
#define CONECERT_CLI_HPP

#include "conecert/io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace conecert {

// Exit codes: 0 success, 1 usage or I/O error, 2 mathematical negative
// (candidate not optimal, solver not converged).
enum CliExit { kCliOk = 0, kCliError = 1, kCliNegative = 2 };

inline int runCli(const std::vector<std::string>& args) {
    CLI::App app{"certification of uniqueness, strong and sharp minima for "
                 "nuclear-norm minimization"};
    app.require_subcommand(0, 1);

    std::string fixtureName;
    std::string fixtureOut;
    app.add_option("--paper-fixture", fixtureName,
                   "emit a built-in fixture problem (last-example)");
    app.add_option("--out", fixtureOut, "output file for --paper-fixture");

    auto* certifyCmd = app.add_subcommand("certify", "certify a problem instance");
    std::string certifyProblem, certifyOut;
    std::uint64_t certifySeed = 1;
    int certifyRestarts = 5;
    certifyCmd->add_option("--problem", certifyProblem, "problem JSON file")
        ->required();
    certifyCmd->add_option("--out", certifyOut, "report JSON file")->required();
    certifyCmd->add_option("--seed", certifySeed, "verifier seed");
    certifyCmd->add_option("--restarts", certifyRestarts, "verifier restarts");

    auto* solveCmd = app.add_subcommand("solve", "solve the nuclear-norm program");
    std::string solveProblem, solveOut;
    solveCmd->add_option("--problem", solveProblem, "problem JSON file")
        ->required();
    solveCmd->add_option("--out", solveOut, "solution JSON file")->required();

    auto* expCmd = app.add_subcommand("experiment", "run a phase-transition sweep");
    std::string expConfig, expOut;
    expCmd->add_option("--config", expConfig, "TOML config file")->required();
    expCmd->add_option("--out", expOut, "results CSV file")->required();

    auto* plotCmd = app.add_subcommand("plot", "plot sweep results as SVG");
    std::string plotIn, plotOut;
    plotCmd->add_option("--in", plotIn, "results CSV file")->required();
    plotCmd->add_option("--out", plotOut, "SVG file")->required();

    auto* l1Cmd = app.add_subcommand("l1-certify", "exact l1 uniqueness check");
    std::string l1Problem, l1Out;
    l1Cmd->add_option("--problem", l1Problem, "l1 problem JSON file")->required();
    l1Cmd->add_option("--out", l1Out, "report JSON file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            std::cout << app.help() << std::endl;
            return kCliOk;
        }
        std::cerr << e.what() << std::endl;
        return kCliError;
    }

    try {
        if (!fixtureName.empty()) {
            if (fixtureName != "last-example") {
                std::cerr << "unknown fixture: " << fixtureName << std::endl;
                return kCliError;
            }
            const std::string text = problemToJson(lastExampleProblem()).dump(2) + "\n";
            if (fixtureOut.empty())
                std::cout << text;
            else
                writeFile(fixtureOut, text);
            return kCliOk;
        }

        if (*certifyCmd) {
            const ProblemInstance prob =
                problemFromJson(Json::parse(readFile(certifyProblem)));
            CertifyConfig cfg;
            cfg.seed = certifySeed;
            cfg.caps.restarts = certifyRestarts;
            const CertificationReport rep = certify(prob, cfg);
            writeFile(certifyOut, reportToJson(rep).dump(2) + "\n");
            return rep.optimal ? kCliOk : kCliNegative;
        }
        if (*solveCmd) {
            const ProblemInstance prob =
                problemFromJson(Json::parse(readFile(solveProblem)));
            const SolverReport rep =
                solveNnm({prob.phi, prob.observation}, prob.n1, prob.n2);
            writeFile(solveOut, solveOutputToJson(rep).dump(2) + "\n");
            return rep.converged ? kCliOk : kCliNegative;
        }
        if (*expCmd) {
            const ExperimentConfig cfg = configFromToml(readFile(expConfig));
            const SweepResult res = runSweep(cfg);
            writeFile(expOut, emitCsv(res.records));
            return kCliOk;
        }
        if (*plotCmd) {
            const std::vector<TrialRecord> records = parseCsv(readFile(plotIn));
            writeFile(plotOut, plotSvg(records));
            return kCliOk;
        }
        if (*l1Cmd) {
            const L1Problem prob =
                l1ProblemFromJson(Json::parse(readFile(l1Problem)));
            const L1Report rep = l1UniqueCheck(prob.phi, prob.x0);
            writeFile(l1Out, l1ReportToJson(rep).dump(2) + "\n");
            return rep.optimal ? kCliOk : kCliNegative;
        }
        std::cout << app.help() << std::endl;
        return kCliOk;
    } catch (const Json::exception& e) {
        std::cerr << "json error: " << e.what() << std::endl;
        return kCliError;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kCliError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kCliError;
    }
}

} // namespace conecert

#endif // CONECERT_CLI_HPP
