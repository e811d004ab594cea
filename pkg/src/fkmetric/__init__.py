"""Feldman-Katok orbit metrics and entropy estimation at desk scale."""

__version__ = "0.1.0"

from .criterion import (CriterionReport, ProbeReport, ergodicity_probe,
                        katok_criterion_check)
from .entropy import (ComplexityCurve, EntropyCurve, LocalEntropyEstimate,
                      ScaleDescriptor, SpanningResult, brin_katok_local,
                      complexity_compare, exact_separated, exact_spanning,
                      greedy_separated, greedy_spanning, katok_entropy_curve,
                      measure_complexity_curve, measure_spanning,
                      topological_entropy_curve)
from .errors import ConfigurationError, DomainError, FkmetricError, HorizonError
from .matching import (Match, MetricKind, PairMetrics, bowen_distance,
                       fk_distance, fk_unordered_distance, match_fraction,
                       max_ordered_match, max_unordered_match, mean_distance,
                       metric_value, weak_mean_distance, word_edit_distance)
from .systems import (EmpiricalMeasure, OrbitArray, OrbitSegment, Partition,
                      Point, System, derive_rng, itineraries, itinerary,
                      make_system, orbit, pairwise_distance, sample_points)
from .verify import builtin_systems, run_suite

__all__ = [
    "__version__",
    "ConfigurationError", "DomainError", "FkmetricError", "HorizonError",
    "Point", "System", "OrbitSegment", "OrbitArray", "EmpiricalMeasure",
    "Partition", "make_system", "orbit", "sample_points", "itinerary",
    "itineraries", "pairwise_distance", "derive_rng",
    "Match", "MetricKind", "PairMetrics", "bowen_distance", "mean_distance",
    "fk_distance", "fk_unordered_distance", "weak_mean_distance",
    "word_edit_distance", "max_ordered_match", "max_unordered_match",
    "match_fraction", "metric_value",
    "SpanningResult", "EntropyCurve", "LocalEntropyEstimate",
    "ComplexityCurve", "ScaleDescriptor", "greedy_spanning",
    "greedy_separated", "exact_spanning", "exact_separated",
    "topological_entropy_curve", "measure_spanning", "katok_entropy_curve",
    "brin_katok_local", "measure_complexity_curve", "complexity_compare",
    "CriterionReport", "ProbeReport", "katok_criterion_check",
    "ergodicity_probe", "builtin_systems", "run_suite",
]
