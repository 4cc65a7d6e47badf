from types import MappingProxyType

# measures
WEIGHT_SUM_TOL = 1e-9
ATOM_MERGE_RTOL = 1e-12
QUAD_NODES = 256
QUAD_RTOL = 1e-10
QUAD_MAX_PANELS = 64

# theory
THRESHOLD_GUARD = 1e-6
ROOT_XTOL = 1e-14
ROOT_MAXITER = 200
ROOT_CACHE_SIZE = 8192

# estimator
ORTHOGONAL_TOL = 1e-8

# experiments
STAT_THRESHOLD_EXCLUSION = 0.2
DEFAULT_DELTA = 0.05
GAUSSIAN_NU4 = 3.0
BENCH_REPEATS = 5

#: replications and test-set size per scale
SCALES = MappingProxyType(
    {
        "desk": MappingProxyType({"replications": 100, "n_test": 100, "phi_points": 24}),
        "full": MappingProxyType({"replications": 500, "n_test": 100, "phi_points": 60}),
    }
)

# figure setups shared by every figure
FIGURE_N = 400
FIGURE_P = 200
FIGURE_PHI_RANGE = (0.1, 10.0)
FIGURE_PHI_PEAK_GAP = 0.1
CORRELATED_SPECTRUM = ((2.0, 0.5), (1.0, 0.5))
VALIDATION_SIZES = (20, 100, 200)

# tuning
#: risks within this (relative to max(1, risk)) count as tied; ties go to the larger m
RISK_TIE_RTOL = 1e-12
