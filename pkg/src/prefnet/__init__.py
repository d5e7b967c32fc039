"""prefnet: preference-guided synthesis of network designs when the real
objective is unknown, plus the traffic-engineering scenarios, oracles, and
evaluation harness used to study it."""

__version__ = "0.1.0"

from .netmodel import (  # noqa: F401
    DemandMatrix,
    Flow,
    Link,
    Path,
    Topology,
    Unreachable,
    ValidationError,
    build_tunnels,
    generate_demands,
    k_shortest_paths,
    load_demands,
    load_topology,
)
from .scenarios import (  # noqa: F401
    Candidate,
    ObjectiveInstance,
    Scenario,
    eval_objective,
    make_scenario,
    reward_cmp,
)
from .pcs import (  # noqa: F401
    ParetoCandidateSet,
    Pool,
    PreferenceRecord,
    PoolSource,
    FlySource,
    Unsatisfiable,
    adversarial_pcs,
    build_pool,
    load_pool,
)
from .learner import (  # noqa: F401
    LearnConfig,
    Query,
    SessionResult,
    Step,
    best_query,
    info_compare,
    info_propose,
    run_noprune,
    run_session,
    transcript_ndjson,
)
from .teacher import (  # noqa: F401
    HumanBridge,
    NoiseModel,
    Teacher,
    ensemble_wrap,
    imperfect_oracle,
    perfect_oracle,
)
from .evaluation import (  # noqa: F401
    BoundViolated,
    LemmaViolated,
    QualityCurve,
    check_half_lemma,
    check_logarithmic_bound,
    check_sortability,
    pool_size_sweep,
    quality,
    run_experiment,
    synthetic_frontier,
)
