"""Multiscale independence testing on 2x2 contingency tables.

Tests whether two random vectors are independent by scanning a coarse-to-
fine cascade of dyadic blocks of the rank-transformed sample, applying an
exact conditional test to every scanned 2x2 face table, and controlling
the family-wise error rate over everything tested.  No resampling: error
control is exact at any sample size, and total cost stays near n log n.
"""

__version__ = "0.1.0"

from .preprocess import (  # noqa: E402
    DataMatrix,
    RankedSample,
    ingest_csv,
    rank_transform,
)
from .lattice import (  # noqa: E402
    CuboidKey,
    CuboidNode,
    FaceTable,
    children,
    empirical_lor,
    enumerate_exhaustive,
    exhaustive_test_count,
    face_table,
    root_cuboid,
)
from .exact_tests import (  # noqa: E402
    PValue,
    TwoByTwoTester,
    attainable_support,
    fisher_mid_p,
    fisher_two_sided,
    normal_approx,
)
from .corrections import AdjustedResults, holm, modified_holm  # noqa: E402
from .engine import (  # noqa: E402
    EngineConfig,
    Report,
    TestRecord,
    decide,
    run_exhaustive,
    run_multifit,
)
from .scenarios import ScenarioSpec, generate  # noqa: E402
from .harness import (  # noqa: E402
    StudyResult,
    StudySpec,
    fwer_study,
    power_study,
    read_study_csv,
    scaling_study,
)

__all__ = [
    "AdjustedResults",
    "CuboidKey",
    "CuboidNode",
    "DataMatrix",
    "EngineConfig",
    "FaceTable",
    "PValue",
    "RankedSample",
    "Report",
    "ScenarioSpec",
    "StudyResult",
    "StudySpec",
    "TestRecord",
    "TwoByTwoTester",
    "attainable_support",
    "children",
    "decide",
    "empirical_lor",
    "enumerate_exhaustive",
    "exhaustive_test_count",
    "face_table",
    "fisher_mid_p",
    "fisher_two_sided",
    "fwer_study",
    "generate",
    "holm",
    "ingest_csv",
    "modified_holm",
    "normal_approx",
    "power_study",
    "rank_transform",
    "read_study_csv",
    "root_cuboid",
    "run_exhaustive",
    "run_multifit",
    "scaling_study",
]
