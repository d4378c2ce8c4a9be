#!/usr/bin/env python3
"""Walk through the concept algebra on a small four-class example.

Run:  python demos/01_concept_scores.py
"""

from sedkit import (
    associated_classes,
    detectable_errors,
    jaccard,
    load_concept_matrix,
    max_ped_oracle,
    overall_scores,
)

# Four traffic-sign classes and four candidate concepts. A cell is 1 when
# the concept appears in every image of that class, so the concept belongs
# to the class's explanation.
DOCUMENT = """\
,Two cars,Color red,Parallel tilted lines,Color black
Prohibited for all vehicles,0,1,0,0
No passing,1,1,0,1
End of no passing zone,1,0,1,1
End of speed limit 80,0,0,1,1
"""

m = load_concept_matrix(DOCUMENT)
print(f"matrix: {m.n_classes} classes x {m.n_concepts} concepts")

# Which classes does each concept explain?
print("\nassociated classes")
for a, name in enumerate(m.concept_names):
    classes = sorted(m.class_names[j] for j in associated_classes(m, a))
    print(f"  {name:22s} -> {classes}")

# A concept distinguishes a misclassification (truth, predicted) exactly
# when its bit differs between the two explanations. "Two cars" separates
# "No passing" from "End of speed limit 80", but not from "End of no
# passing zone" (both contain the concept).
two_cars = m.concept_index("Two cars")
pairs = detectable_errors(m, two_cars)
np_, ens, esl = (
    m.class_index("No passing"),
    m.class_index("End of no passing zone"),
    m.class_index("End of speed limit 80"),
)
print(f"\n'Two cars' exposes {len(pairs)} of the 12 ordered error pairs")
print(f"  No passing -> End of speed limit 80 detectable? {(np_, esl) in pairs}")
print(f"  No passing -> End of no passing zone detectable? {(np_, ens) in pairs}")

# Two concepts that expose the same pairs are redundant; Jaccard overlap
# of their pair sets measures that. "Color red" and "Parallel tilted
# lines" are complementary columns, so their pair sets coincide exactly.
red = m.concept_index("Color red")
par = m.concept_index("Parallel tilted lines")
overlap = jaccard(detectable_errors(m, red), detectable_errors(m, par))
print(f"\noverlap(red, parallel tilted) = {overlap}  (fully redundant pair)")

# The score table combines coverage (importance) and redundancy
# (similarity) into one ranking.
table = overall_scores(m)
print("\n" + table.to_text())
print("ranking, best first:", [m.concept_names[a] for a in table.ranking()])

# Detection ceiling when only the top concept drives self-error detection:
top = table.top(1)
print(f"\ndetection ceiling with only {m.concept_names[top[0]]!r}: "
      f"{max_ped_oracle(m, top):.4f}")
print(f"ceiling with all concepts: {max_ped_oracle(m, tuple(range(4))):.4f}")
