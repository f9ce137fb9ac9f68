#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "jetfield/model.hpp"
#include "jetfield/run.hpp"

namespace {

int dispatch(const std::string& command, const std::string& model_path,
             const std::string& format, std::uint64_t seed, const std::string& out,
             const std::map<std::string, std::vector<std::string>>& extra) {
    jf::RunOptions opt;
    opt.command = command;
    opt.format = format;
    opt.seed = seed;
    opt.args = extra;

    std::optional<jf::ModelFile> model;
    try {
        if (!model_path.empty()) {
            std::ifstream in(model_path);
            if (!in) {
                std::cerr << "error: cannot open model file " << model_path << "\n";
                return 2;
            }
            std::ostringstream ss;
            ss << in.rdbuf();
            model = jf::parse_model(ss.str());
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << model_path << ": " << e.what() << "\n";
        return 2;
    }

    jf::Report rep;
    try {
        rep = jf::run(opt, model ? &*model : nullptr);
    } catch (const jf::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    const std::string& body = format == "json" ? rep.json : rep.text;
    if (out.empty()) {
        std::cout << body;
    } else {
        std::ofstream os(out);
        if (!os) {
            std::cerr << "error: cannot write " << out << "\n";
            return 2;
        }
        os << body;
    }
    return rep.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"jetfield: systems of maps, sections and connections"};
    app.require_subcommand(1);

    const std::vector<std::string> commands = {
        "prolong",  "contact",   "rep",       "section-apply",
        "universal", "curvature", "pullback", "verify-universal",
        "liouville", "nabla",     "probe"};

    struct Shared {
        std::string model, format = "text", out;
        std::uint64_t seed = 0;
        std::map<std::string, std::vector<std::string>> extra;
    };
    std::map<std::string, Shared> state;

    for (const auto& name : commands) {
        auto* sub = app.add_subcommand(name);
        Shared& sh = state[name];
        sub->add_option("--model", sh.model, "model file (.jf)");
        sub->add_option("--format", sh.format, "text or json")
            ->check(CLI::IsMember({"text", "json"}));
        sub->add_option("--seed", sh.seed, "random seed");
        sub->add_option("--out", sh.out, "write the report to a file");
        // command-specific flags are collected generically
        sub->allow_extras();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // any command-line problem is a usage error
    }

    auto* sub = app.get_subcommands().front();
    Shared& sh = state[sub->get_name()];

    // fold leftover "--key value" / "--key" pairs into the argument map
    auto extras = sub->remaining();
    for (size_t k = 0; k < extras.size(); ++k) {
        const std::string& tok = extras[k];
        if (tok.rfind("--", 0) != 0) {
            std::cerr << "error: unexpected argument '" << tok << "'\n";
            return 2;
        }
        std::string key = tok.substr(2);
        std::string value;
        size_t eq = key.find('=');
        if (eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
            sh.extra[key].push_back(value);
            continue;
        }
        // greedily take following non-flag tokens as values (supports --dims 2 1 1)
        bool took = false;
        while (k + 1 < extras.size() && extras[k + 1].rfind("--", 0) != 0) {
            sh.extra[key].push_back(extras[++k]);
            took = true;
        }
        if (!took) sh.extra[key];  // bare flag, e.g. --generic
    }

    return dispatch(sub->get_name(), sh.model, sh.format, sh.seed, sh.out, sh.extra);
}
