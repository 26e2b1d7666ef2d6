// Command-line front end: run strategy comparisons, significance tests and
// model-tree inspection over a project dataset.

#include "effort/cli.hpp"
#include "effort/error.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

namespace {

struct Flags {
    std::string dataset;
    std::string schema;
    std::vector<std::string> strategies;
    std::vector<std::size_t> ks{1, 2, 3};
    std::size_t folds = 3;
    std::vector<std::uint64_t> seeds{1};
    std::string out = ".";
};

void add_common(CLI::App& cmd, Flags& f, bool needs_strategy)
{
    cmd.add_option("--dataset", f.dataset, "Delimited project data file")->required();
    cmd.add_option("--schema", f.schema, "Schema file (name:kind per line)")->required();
    auto* s = cmd.add_option("--strategy", f.strategies, "eba, wmean, l-eba, mendes, s-eba, r-eba, mt-eba")
                  ->delimiter(',');
    if (needs_strategy) {
        s->required();
    }
    cmd.add_option("--k", f.ks, "Analogy counts, e.g. 1,2,3")->delimiter(',');
    cmd.add_option("--folds", f.folds, "Cross-validation folds");
    cmd.add_option("--seed", f.seeds, "Fold-plan seeds, e.g. 1,2,3")->delimiter(',');
    cmd.add_option("--out", f.out, "Output directory");
}

auto to_config(const Flags& f) -> effort::cli::RunConfig
{
    effort::cli::RunConfig c;
    c.dataset = f.dataset;
    c.schema = f.schema;
    for (const auto& s : f.strategies) {
        c.strategies.push_back(effort::parse_strategy(s));
    }
    c.ks = f.ks;
    c.folds = f.folds;
    c.seeds = f.seeds;
    c.out = f.out;
    return c;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Analogy-based effort estimation with model-tree adaptation"};
    app.require_subcommand(1);

    Flags run_flags;
    auto* run = app.add_subcommand("run", "Cross-validate strategies and write report, residual and boxplot files");
    add_common(*run, run_flags, true);

    Flags cmp_flags;
    std::string baseline = "mt-eba";
    auto* cmp = app.add_subcommand("compare", "Wilcoxon signed-rank of a baseline against other strategies");
    add_common(*cmp, cmp_flags, true);
    cmp->add_option("--baseline", baseline, "Baseline strategy");

    Flags tree_flags;
    std::size_t fold = 0;
    auto* tree = app.add_subcommand("inspect-tree", "Dump the adaptation model tree of one training fold");
    add_common(*tree, tree_flags, false);
    tree->add_option("--fold", fold, "Held-out fold index (0-based)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (run->parsed()) {
            effort::cli::cmd_run(to_config(run_flags), std::cout, std::cerr);
        } else if (cmp->parsed()) {
            effort::cli::cmd_compare(to_config(cmp_flags), effort::parse_strategy(baseline), std::cout, std::cerr);
        } else if (tree->parsed()) {
            auto config = to_config(tree_flags);
            if (tree_flags.seeds.size() != 1) {
                throw effort::Error("inspect-tree takes exactly one --seed");
            }
            const bool has_mt = config.strategies.empty()
                || std::find(config.strategies.begin(), config.strategies.end(), effort::Strategy::mt_eba)
                    != config.strategies.end();
            if (!has_mt) {
                throw effort::Error("inspect-tree requires mt-eba among the strategies");
            }
            effort::cli::cmd_inspect_tree(config, fold, tree_flags.seeds.front(), std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
