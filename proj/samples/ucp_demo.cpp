// Exact bounded harmonic function that vanishes on the canonical set for rho = (2, 2, 2).
#include <treeharmonic/treeharmonic.hpp>

#include <iostream>

int main() {
    using namespace treeharmonic;
    const auto op = averaging_op::mean_median(3, 0.5);
    const auto ce = build_counterexample<rational>(op, {2, 2, 2}, 6);
    std::cout << "delta = " << ce.delta << ", residual = " << ce.residual << '\n';
    for (std::size_t k = 0; k < ce.level_max.size(); ++k) {
        std::cout << "max on level " << ce.eta[k] << " = " << ce.level_max[k] << '\n';
    }
    const auto profile = extract_rho(read_vertex_file(SAMPLES_DIR "/U.txt", 3), 3, 6, op);
    std::cout << "U.txt: P1 " << profile.p1_ok << ", P2 " << profile.p2_ok << ", rho_1 = " << profile.rho.front() << '\n';
    std::cout << "Linear(1,0): " << to_string(classify_pattern(1.0 / 6.0, rho_pattern::linear(1, 0))) << '\n';
}
