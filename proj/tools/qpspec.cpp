#include "qpspec/commands.hpp"
#include "qpspec/error.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

namespace {

using Command = std::vector<std::string> (*)(const qpspec::RunConfig&, const qpspec::CommandContext&);

int fail(const std::string& kind, int code, const std::string& what) {
    std::string line = what;
    for (char& c : line) {
        if (c == '\n') {
            c = ' ';
        }
    }
    std::cerr << "qpspec: error[" << kind << "]: " << line << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quasi-periodic Schrodinger operators with meromorphic potentials"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    unsigned threads = 1;
    bool verbose = false;

    const std::map<std::string, std::pair<Command, std::string>> commands{
        {"indices", {qpspec::cmd_indices, "beta, gamma and delta tables"}},
        {"lyapunov", {qpspec::cmd_lyapunov, "Lyapunov exponents over an energy grid"}},
        {"gordon", {qpspec::cmd_gordon, "eigenvalue exclusion certificates"}},
        {"classify", {qpspec::cmd_classify, "compare L(E) with delta over an energy grid"}},
        {"cf", {qpspec::cmd_cf, "continued fraction coefficients and convergents"}},
    };
    for (const auto& [name, entry] : commands) {
        CLI::App* sub = app.add_subcommand(name, entry.second);
        sub->add_option("--config", config_path, "INI run configuration")->required();
        sub->add_option("--out", out_dir, "output directory (overrides [output] dir)");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
        sub->add_flag("--verbose", verbose, "progress on stderr");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("config", 2, e.what());
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        qpspec::RunConfig config = qpspec::load_config(config_path);
        qpspec::CommandContext ctx;
        ctx.out_dir = out_dir.empty() ? config.out : out_dir;
        ctx.threads = threads;
        if (verbose) {
            ctx.log = [](const std::string& msg) { std::cerr << "qpspec: " << msg << "\n"; };
        }
        for (const std::string& path : commands.at(name).first(config, ctx)) {
            if (verbose) {
                std::cerr << "qpspec: wrote " << path << "\n";
            }
        }
    } catch (const qpspec::Error& e) {
        return fail(qpspec::to_string(e.kind()), qpspec::exit_code(e.kind()), e.what());
    } catch (const std::bad_alloc&) {
        return fail("numeric", 5, "out of memory");
    } catch (const std::exception& e) {
        return fail("numeric", 5, e.what());
    }
    return 0;
}
