#include <catch_amalgamated.hpp>

#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>

using namespace treeharmonic;
using namespace treeharmonic::cli;

namespace {

std::vector<std::string> words(const std::string &text) {
    std::istringstream in(text);
    return {std::istream_iterator<std::string>(in), std::istream_iterator<std::string>()};
}

std::string usage_message(const std::string &text) {
    try {
        (void) parse_args(words(text));
    } catch (const usage_error &e) {
        return e.what();
    }
    return "";
}

std::string temp_path(const std::string &name) {
    return (std::filesystem::temp_directory_path() / ("treeharmonic_test_" + name)).string();
}

std::string slurp(const std::string &path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines_of(const std::string &text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        out.push_back(line);
    }
    return out;
}

}  // namespace

TEST_CASE("argument parsing") {
    const auto cfg = parse_args(words("solve --m 3 --op F1:alpha=0.5 --f id --n 4"));
    CHECK(cfg.command == "solve");
    CHECK(cfg.m == 3);
    CHECK(cfg.n == 4);
    CHECK(cfg.f_spec == "id");
    CHECK(cfg.config_text == "solve --m 3 --op F1:alpha=0.5 --f id --n 4");

    CHECK(usage_message("solve --m 2").find("--m") != std::string::npos);
    CHECK(usage_message("solve --op F2:alpha=1.5").find("--op") != std::string::npos);
    CHECK(usage_message("solve --op Fp:p=0.5").find("--op") != std::string::npos);
    CHECK(usage_message("measure --interval 1/0..1/2").find("--interval") != std::string::npos);
    CHECK(usage_message("measure --cells 2:0..9").find("--cells") != std::string::npos);
    CHECK(usage_message("bound --cells 1:0 --c -1").find("--c") != std::string::npos);
    CHECK(usage_message("solve --bogus 1").find("--bogus") != std::string::npos);
    CHECK(usage_message("solve --m 3..5").find("--m") != std::string::npos);
    CHECK(usage_message("tau --alpha 1").find("--alpha") != std::string::npos);
    CHECK(usage_message("solve --format xml").find("--format") != std::string::npos);
    CHECK_FALSE(usage_message("").empty());
    CHECK_THROWS_AS(parse_args(words("bound --help")), help_requested);

    const auto tau = parse_args(words("tau --family F2 --m 3..5 --alpha 0,0.5 --restarts 4"));
    CHECK(tau.m == 3);
    CHECK(tau.m_hi == 5);
    CHECK(tau.alphas == std::vector<double>{0.0, 0.5});
    CHECK(parse_args(words("ucp counterexample --rho 2,2,2 --depth 6")).rho == std::vector<unsigned>{2, 2, 2});
    CHECK(parse_args(words("ucp counterexample --rho 2,2")).command == "ucp counterexample");
}

TEST_CASE("bound row") {
    const auto path = temp_path("bound.csv");
    CHECK(run(parse_args(words("bound --m 3 --op F1:alpha=0.5 --cells 2:4..4 --c 1 --csv " + path))) == exit_ok);
    const auto l = lines_of(slurp(path));
    REQUIRE(l.size() == 3);
    CHECK(l[0] == "m,op,n,k0,k1,c,gap,bound_thm1,bound_l54,bound_l55,lower_bound,gamma,theta,satisfied");
    const auto r = check_bounds(gap_engine(averaging_op::mean_median(3, 0.5), boundary_data::constant(0.0), 2),
                                madic_union::cells(3, 2, 4, 4), 1.0);
    CHECK(l[1] == "3,F1:alpha=0.5,2,4,4,1," + format_double(r.measured_gap) + "," + format_double(r.bound_general) + "," +
                      format_double(*r.bound_single) + ",," + format_double(*r.lower_bound) + "," + format_double(r.gamma) +
                      "," + format_double(*r.theta) + ",true");
    CHECK(l[2].rfind("# meta ", 0) == 0);
    CHECK(l[2].find(path) == std::string::npos);
}

TEST_CASE("sweeps and exit codes") {
    const auto a = temp_path("sweep_a.tsv");
    const auto b = temp_path("sweep_b.tsv");
    const std::string args = "bound --m 4 --op F1:alpha=0.25 --f id --sweep-depths 1..3 --c 2 --format tsv --out ";
    CHECK(run(parse_args(words(args + a))) == exit_ok);
    CHECK(run(parse_args(words(args + b))) == exit_ok);
    CHECK(slurp(a) == slurp(b));
    CHECK(lines_of(slurp(a)).size() == 1 + (4 + 3) + (16 + 15) + (64 + 63) + 1);

    CHECK_THROWS_AS(run(parse_args(words("bound --m 3 --op F1:alpha=0.5 --cells 3:0 --gamma 0.5 --out " + a))), domain_error);
    CHECK_THROWS_AS(run(parse_args(words("lower-bound --op F0:alpha=1 --cells 1:0 --out " + a))), unsupported_operator_error);
    CHECK(run(parse_args(words("lower-bound --op Fp:p=2 --cells 2:3..4 --out " + a))) == exit_ok);

    const char *argv_bad[] = {"treeharmonic", "solve", "--m", "2"};
    CHECK(main_entry(4, const_cast<char **>(argv_bad)) == exit_usage);
}

TEST_CASE("other commands") {
    const auto out = temp_path("out.txt");
    CHECK(run(parse_args(words("solve --m 3 --op Fp:p=2 --f id --n 5 --dump csv --out " + out))) == exit_ok);
    auto l = lines_of(slurp(out));
    CHECK(l[0] == "level,index,psi,value");
    CHECK(l.size() == 1 + (1 + 3 + 9 + 27 + 81 + 243) + 1);
    CHECK(l[1] == "0,0,0," + format_double(solve(averaging_op::p_average(3, 2.0), boundary_data::identity(), 5).root()));

    CHECK(run(parse_args(words("measure --m 3 --op Fp:p=2 --interval 1/4..1/2 --n 3 --out " + out))) == exit_ok);
    l = lines_of(slurp(out));
    REQUIRE(l.size() == 4);
    CHECK(l[1] == "3,Fp:p=2,1/4..1/2,inner,3:7..12," + format_double(harmonic_measure(averaging_op::p_average(3, 2.0),
                                                                                        madic_union::cells(3, 3, 7, 12))));

    CHECK(run(parse_args(words("bcp --cells 9:100 --M 1 --eps 0.1 --out " + out))) == exit_ok);
    CHECK(lines_of(slurp(out))[1].find(",true,true") != std::string::npos);

    CHECK(run(parse_args(words("ucp counterexample --rho 2,2,2 --depth 6 --csv " + out))) == exit_ok);
    l = lines_of(slurp(out));
    CHECK(l.size() == 1 + 1093 + 1);
    CHECK(l[1] == "0,0,0,1,1");

    CHECK(run(parse_args(words("ucp classify --pattern linear:1,0 --out " + out))) == exit_ok);
    CHECK(slurp(out).find("verdict UCP_fails") != std::string::npos);

    std::ofstream(temp_path("U.txt")) << "22\n01\n";
    CHECK(run(parse_args(words("ucp extract --set-file " + temp_path("U.txt") + " --max-depth 4 --out " + out))) == exit_ok);
    CHECK(slurp(out).find("rho 2") != std::string::npos);

    CHECK(run(parse_args(words("axioms --op Fp:p=3 --samples 2000 --seed 1 --out " + out))) == exit_ok);
    CHECK(slurp(out).find("axiom reflection pass") != std::string::npos);
    CHECK(run(parse_args(words("axioms --op F2:alpha=0.5 --samples 2000 --out " + out))) == exit_ok);
    CHECK(slurp(out).find("verify empirically") != std::string::npos);

    CHECK(run(parse_args(words("tau --family F1 --m 3..4 --alpha 0.5 --restarts 8 --csv " + out))) == exit_ok);
    l = lines_of(slurp(out));
    CHECK(l[0] == "m,alpha,tau_numeric,dim_numeric,dim_closed,discrepancy,convention_matched");
    CHECK(l[1].substr(l[1].rfind(',') + 1) == "printed");
    CHECK(run(parse_args(words("tau --family F2 --m 5 --alpha 0.75 --restarts 8 --out " + out))) == exit_violation);
    CHECK(run(parse_args(words("tau --family F2 --m 3..40 --alpha 0 --limits --numeric-max-m 4 --restarts 4 --out " + out))) ==
          exit_ok);
    CHECK(lines_of(slurp(out)).size() == 1 + 38 + 1);
}
