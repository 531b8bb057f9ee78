#include <stdio.h>
#include "capsweep.h"

int main(void) {
    CapsweepNetwork *net = NULL;
    if (capsweep_network_ieee33(11.0, 1.0, &net) != CAPSWEEP_STATUS_OK) {
        fprintf(stderr, "%s\n", capsweep_last_error_message());
        return 1;
    }
    size_t bus = 30;
    double kvar = 1428.0;
    CapsweepSolution *sol = NULL;
    if (capsweep_loadflow_solve(net, &bus, &kvar, 1, 1e-6, 100, &sol) != CAPSWEEP_STATUS_OK) {
        fprintf(stderr, "%s\n", capsweep_last_error_message());
        return 1;
    }
    double mag, angle;
    capsweep_solution_voltage(sol, 18, &mag, &angle);
    printf("buses=%zu converged=%d p_loss_kw=%.4f v18=%.5f\n", capsweep_network_bus_count(net),
           capsweep_solution_converged(sol), capsweep_solution_p_loss_kw(sol), mag);

    CapsweepNetwork *bad = NULL;
    CapsweepStatus st = capsweep_network_parse("1,2,0.1,0.1\n2,1,0.1,0.1\n", "", 11.0, 1.0, &bad);
    printf("duplicate status=%d message=%s\n", (int)st, capsweep_last_error_message());

    capsweep_solution_free(sol);
    capsweep_network_free(net);
    return 0;
}
