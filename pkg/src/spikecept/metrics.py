"""CSV metric files with fixed column schemas."""
from __future__ import annotations

import csv

SCHEMAS = {
    "learning_curve": ("iteration", "accuracy"),
    "robustness": ("rho", "mode", "mean_acc", "std"),
    "intensity": ("stage", "input_spikes", "output_spikes"),
    "counts": ("config", "n_neuron", "n_synapse"),
    "msds_matrix": ("class_a", "class_b", "value"),
}


def emit_metrics(rows, path, schema: str) -> None:
    """Write a header plus ``rows``; each row must match the schema's width."""
    if schema not in SCHEMAS:
        raise ValueError(f"unknown metrics schema {schema!r}; known: {', '.join(SCHEMAS)}")
    header = SCHEMAS[schema]
    rows = [tuple(r) for r in rows]
    for i, r in enumerate(rows):
        if len(r) != len(header):
            raise ValueError(f"row {i} has {len(r)} fields, schema {schema!r} needs {len(header)}")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def read_metrics(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
