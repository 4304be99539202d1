#include <stdio.h>
#include <stdlib.h>

#include "l20fs.h"

#define D 6
#define N 40

int main(void) {
    double features[D * N];
    size_t labels[N];
    unsigned state = 12345u;
    for (size_t j = 0; j < N; ++j) {
        for (size_t i = 0; i < D; ++i) {
            state = state * 1103515245u + 12345u;
            features[j * D + i] = ((double)(state >> 8) / (double)(1u << 24)) - 0.5;
        }
        /* only feature 2 carries the label */
        labels[j] = features[j * D + 2] > 0.0 ? 1 : 0;
    }

    L20fsDataset *dataset = NULL;
    if (l20fs_dataset_new(features, D, N, labels, 2, &dataset) != L20FS_STATUS_OK) {
        fprintf(stderr, "dataset: %s\n", l20fs_last_error());
        return 1;
    }
    L20fsSolverConfig config = l20fs_solver_config_default();
    L20fsPath *path = NULL;
    if (l20fs_solve(dataset, L20FS_ALGORITHM_HIHT, &config, &path) != L20FS_STATUS_OK) {
        fprintf(stderr, "solve: %s\n", l20fs_last_error());
        return 1;
    }
    size_t index = 0;
    if (l20fs_select_by_count(path, 1, &index) != L20FS_STATUS_OK) {
        return 1;
    }
    size_t support[D];
    size_t written = 0;
    if (l20fs_path_support(path, index, support, D, &written) != L20FS_STATUS_OK) {
        return 1;
    }
    L20fsPointInfo info;
    if (l20fs_path_point(path, l20fs_path_len(path), &info) != L20FS_STATUS_OUT_OF_RANGE) {
        return 1;
    }
    printf("points=%zu selected=%zu first=%zu\n", l20fs_path_len(path), written, written ? support[0] : (size_t)-1);
    l20fs_path_free(path);
    l20fs_dataset_free(dataset);
    return (written == 1 && support[0] == 2) ? 0 : 1;
}
