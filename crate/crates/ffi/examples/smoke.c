#include <stdio.h>
#include <string.h>
#include <assert.h>
#include "bicavity.h"

int main(void) {
    BcConfig *config = bc_config_default();
    BcProgram *program = NULL;
    assert(bc_program_builtin(BC_PROTOCOL_GHZ, 4, &program) == BC_STATUS_OK);

    char *text = bc_program_serialize(program);
    assert(strstr(text, "rabi As C1 angle=pi/2") != NULL);
    bc_string_free(text);

    BcRun *run = NULL;
    assert(bc_program_run(program, config, NULL, NULL, 0, 7, &run) == BC_STATUS_OK);
    assert(bc_run_postselect_pass(run) == 1);
    assert(bc_run_outcome_count(run) == 4);
    double p = bc_run_outcome_probability(run, 0);
    assert(p > 0.49 && p < 0.51);

    const char *axes[] = {"phi=0:6.2832:8"};
    const char *names[] = {"T"};
    double values[] = {0.0};
    char *csv = NULL;
    BcProgram *detect = NULL;
    assert(bc_program_builtin(BC_PROTOCOL_DETECT_GHZ, 0, &detect) == BC_STATUS_OK);
    assert(bc_sweep_csv(detect, config, axes, 1, names, values, 1, 0, &csv) == BC_STATUS_OK);
    assert(strncmp(csv, "phi,", 4) == 0);
    bc_string_free(csv);

    bc_run_free(run);
    bc_program_free(program);
    bc_program_free(detect);
    bc_config_free(config);
    printf("ffi smoke ok\n");
    return 0;
}
