"""detspace: design-space analysis for efficient face detectors.

Analytic MAC/parameter accounting of stem/stage/neck/head architectures,
flop-budgeted random sampling, empirical-bootstrap estimation of
best-model computation ratios, a two-step redistribution search, and a
crop/anchor-assignment simulator over face-detection annotations.
"""

from .arch import (
    ANCHOR_SCALES,
    ANCHOR_RATIO,
    BASELINE_ARCHS,
    STRIDES,
    ArchError,
    BackboneConfig,
    BlockKind,
    DetectorArch,
    HeadConfig,
    NeckConfig,
)
from .anchors import AnchorGrid, atss_assign, iou, iou_matrix, tile_anchors
from .bootstrap import BootstrapRange, ScoredPair, empirical_bootstrap, range_report
from .crops import (
    BASELINE_CROP,
    SR_CROP,
    CropPolicy,
    MatchStats,
    epoch_positive_stats,
    face_scale_cdf,
    simulate_crop,
)
from .evaluators import ConstantStub, CsvLookup, Evaluator, SyntheticSurrogate
from .flops import (
    FlopsBreakdown,
    component_ratios,
    conv_macs,
    detector_flops,
    enumerate_layers,
    layer_listing_csv,
    params_count,
)
from .pipeline import (
    RunRecord,
    SearchConfig,
    load_run,
    run_step1,
    run_step2,
    run_unconstrained,
    save_run,
    select_best,
)
from .sampling import (
    ArchSample,
    FlopRegime,
    RegimeInfeasibleError,
    SearchSpaceSpec,
    generate_population,
    sample_backbone,
    sample_neck_head,
)
from .widerface import (
    FaceBox,
    FaceDataset,
    GtParseError,
    ImageAnnotation,
    parse_widerface_gt,
    format_widerface_gt,
    resolve_dimensions,
)

__version__ = "0.1.0"
