#!/usr/bin/env python3
"""The prediction-log wire format and log replay.

Any classifier can be benchmarked offline by writing its predictions in
the line-delimited log format: one JSON header naming the classes and the
explanation bit order, then one JSON record per sample. This demo writes a
log, reads it back, evaluates it, and replays it through the sweep
machinery at smaller concept subsets.

Run:  python demos/04_prediction_logs.py
"""

import io

from sedkit import (
    LogBackend,
    LogHeader,
    SimulatorSpec,
    emit_report,
    evaluate_scheme,
    load_concept_matrix,
    read_log,
    run_scheme_sweep,
    simulate_records,
    write_log,
)

DOCUMENT = """\
,Two cars,Color red,Parallel tilted lines,Color black
Prohibited for all vehicles,0,1,0,0
No passing,1,1,0,1
End of no passing zone,1,0,1,1
End of speed limit 80,0,0,1,1
"""
m = load_concept_matrix(DOCUMENT)

# Produce a stream (here simulated; `sedkit attack` and the log-adapter
# package write the same format for real models) and serialize it.
selected = tuple(range(4))
records = simulate_records(
    m, selected, SimulatorSpec(samples=5000, p_err=0.4, p_err_b=0.3), seed=42
)
header = LogHeader(class_names=m.class_names, selected_concepts=m.concept_names)
buf = io.StringIO()
write_log(buf, header, records)
text = buf.getvalue()
print("first two log lines:")
for line in text.splitlines()[:2]:
    print(" ", line[:100] + ("..." if len(line) > 100 else ""))

# Ingest and evaluate.
got_header, got_records = read_log(text)
print(f"\nparsed {len(got_records)} records, "
      f"bit order = {got_header.selected_concepts}")
report = evaluate_scheme("SE+R1", m, selected, got_records)
print("evaluation:", report.summary_line())

# Replay the same log at k = 1, 2, 4 by projecting its explanation bits
# down to the top-ranked subsets.
backend = LogBackend(header=got_header, records=got_records)
sweep = run_scheme_sweep(m, ["SE"], backend, seed=0, k_range=[1, 2, 4])
print("\nreplay at smaller concept subsets:")
print(emit_report(sweep, "tabular"))

print("CLI equivalents:")
print("  sedkit simulate matrix.csv --seed 42 --p-err 0.4 --p-err-b 0.3 "
      "--output pred.jsonl")
print("  sedkit eval matrix.csv pred.jsonl --scheme SE+R1")
print("  sedkit sweep matrix.csv --backend log-file --log pred.jsonl --seed 0")
