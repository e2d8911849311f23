"""Randomized universal approximation between metric spaces.

Library layout:

* ``moduli``, ``metric``: moduli of continuity, finite metric spaces,
  snowflake transforms, doubling/net diagnostics.
* ``numerics``: simplex projection, softmax, attention layer, ceil indexing.
* ``measure``: discrete measures, exact W1, quantized mixing, sampling.
* ``geometry``: QAS structures (Euclidean, SPD, Wasserstein, circle arcs),
  Karcher barycenters, geodesic partitions.
* ``feature``: Kuratowski/landmark/Fourier feature maps and truncations.
* ``approximator``: ReLU cores plus the unstructured, barycentric, and
  structured measure-valued pipelines.
* ``carnot``: step-2 signatures and the ODE flow oracle.
* ``harness`` / ``cli``: reproducible experiment runner.
"""

from .approximator import (
    FeatureDecomposition,
    RandomizedApproximator,
    ReluNet,
    build_structured,
    build_unstructured,
    derandomize,
    evaluate,
    fit_universal,
    partition_weights,
    PartitionOfUnity,
    relu_forward,
)
from .errors import QasError
from .feature import BapFamily, FeatureMap, bap_rate, compressed_feature, kuratowski_embed, landmark_embed, schauder_truncate
from .geometry import (
    GeodesicPartition,
    QasStructure,
    SpdMatrix,
    barycenter_euclidean,
    check_mixing_inequality,
    circle_partition,
    contract_part,
    euclidean_qas,
    karcher_barycenter,
    separation_inverse,
    separation_lower_bound,
    spd_distance,
    spd_geodesic,
    spd_qas,
    wasserstein_qas,
)
from .harness import ExperimentConfig, ExperimentReport, emit_report, run_experiment
from .measure import (
    DiscreteMeasure,
    EuclideanCarrier,
    dirac,
    finite_set_success_bound,
    mix_wasserstein,
    quantize_measure,
    quantized_mixing_wasserstein,
    sample,
    w1_discrete,
    w1_to_dirac,
)
from .metric import (
    DoublingEstimate,
    FiniteMetricSpace,
    doubling_constant_bruteforce,
    hausdorff_distance,
    separated_net,
    shortest_path_metric,
    snowflake_distance,
)
from .moduli import Modulus, custom_modulus, eval_modulus, holder_modulus, log_modulus
from .numerics import attention_layer, ceil_index, ceil_index_flagged, project_simplex, softmax

__version__ = "0.1.0"
