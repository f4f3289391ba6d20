#include <treeharmonic/acceptance.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
    treeharmonic::acceptance::options opt;
    CLI::App app{"Acceptance criteria, one PASS/FAIL line each"};
    app.add_option("--seed", opt.seed, "Seed for every randomized criterion");
    app.add_option("--restarts", opt.tau_restarts, "Simplex restarts for the tau criterion")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    const auto results = treeharmonic::acceptance::run_all(opt, &std::cerr);
    treeharmonic::acceptance::print_report(results, std::cout);
    return treeharmonic::acceptance::all_passed(results) ? 0 : 1;
}
