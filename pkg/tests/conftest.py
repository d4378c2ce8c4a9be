import numpy as np
import pytest

from sedkit import ConceptMatrix, load_concept_matrix

# Four-class fixture mirroring the published worked example: the first
# column's class associations and the red/parallel duplicate detectable-error
# sets are fixed facts; tests cross-check every value by brute force.
F4_TEXT = """\
# four traffic-sign classes, four concepts
,Two cars,Color red,Parallel tilted lines,Color black
Prohibited for all vehicles,0,1,0,0
No passing,1,1,0,1
End of no passing zone,1,0,1,1
End of speed limit 80,0,0,1,1
"""

# class indices
C_PROHIBITED = 0
C_NO_PASSING = 1
C_END_NO_PASSING = 2
C_END_SPEED_80 = 3

# concept indices
A_TWO_CARS = 0
A_COLOR_RED = 1
A_PARALLEL = 2
A_COLOR_BLACK = 3


@pytest.fixture(scope="session")
def f4() -> ConceptMatrix:
    return load_concept_matrix(F4_TEXT)


def make_matrix(incidence, prefix="C", cprefix="a") -> ConceptMatrix:
    incidence = np.asarray(incidence)
    n, m = incidence.shape
    return ConceptMatrix(
        tuple(f"{prefix}{j}" for j in range(n)),
        tuple(f"{cprefix}{i}" for i in range(m)),
        incidence,
    )
