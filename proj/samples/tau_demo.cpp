// tau(m, F) by simplex search next to the exact order-statistic value and the closed forms.
#include <treeharmonic/treeharmonic.hpp>

#include <iostream>

int main() {
    using namespace treeharmonic;
    for (unsigned m = 3; m <= 6; ++m) {
        const auto f1 = averaging_op::mean_median(m, 0.5);
        const auto f2 = averaging_op::median_midrange(m, 0.5);
        std::cout << "m=" << m << "  F1 dim " << tau_minimize(f1, 16).dim << " closed " << tau_closed_form_F1(m, 0.5).dim
                  << "  F2 dim " << tau_order_statistic(f2).dim << " closed " << tau_closed_form_F2(m, 0.5).dim << '\n';
    }
}
