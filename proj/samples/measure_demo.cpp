// Harmonic measure of the cell [0, 1/3] and the perturbation gap against its bounds.
#include <treeharmonic/treeharmonic.hpp>

#include <iostream>

int main() {
    using namespace treeharmonic;
    const auto op = averaging_op::mean_median(3, 0.5);
    const auto I = madic_union::cells(3, 1, 0, 0);
    std::cout << op.name() << " omega(" << I.to_string() << ") = " << harmonic_measure(op, I) << '\n';

    const gap_engine engine(op, boundary_data::sine(1.0), 4);
    for (const auto &J : {madic_union::cells(3, 4, 40, 40), madic_union::cells(3, 4, 40, 41)}) {
        const auto r = check_bounds(engine, J, 1.0);
        std::cout << J.to_string() << ": gap " << r.measured_gap << ", upper " << r.upper_bound << " (" << r.upper_kind
                  << "), lower " << *r.lower_bound << '\n';
    }
}
