"""Evaluation math: class discrimination, channel mutual information,
FAR/FRR curves and identification experiments."""

from __future__ import annotations

import io
import itertools
import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateInputError, EmptyInputError, InsufficientSamplesError, ShapeError
from .features import Signature, fvf_signature, order_channels
from .fusion import Rule, fuse
from .imaging import quantize
from .matching import DistanceTable, Metric, metric_distance, signature_distance

__all__ = [
    "ChannelDiscrimination",
    "DiscriminationReport",
    "RocCurve",
    "ExperimentConfig",
    "EvalReport",
    "class_discrimination",
    "discrimination_report",
    "channel_mutual_information",
    "far_frr",
    "genuine_impostor_scores",
    "run_identification_experiment",
]

log = logging.getLogger(__name__)

# subject -> samples, each sample a channel -> Signature map
FeatureSet = Mapping[str, Sequence[Mapping[str, Signature]]]

FVF = "FVF"


@dataclass(frozen=True)
class ChannelDiscrimination:
    avg_within: float
    avg_between: float
    theta_c: float

    @classmethod
    def from_averages(cls, avg_within: float, avg_between: float) -> "ChannelDiscrimination":
        if avg_within <= 0:
            raise DegenerateInputError("average within-class distance is zero; ratio undefined")
        return cls(avg_within, avg_between, avg_between / avg_within)


@dataclass
class DiscriminationReport:
    channels: dict[str, ChannelDiscrimination] = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [f"{'channel':<8}{'within':>12}{'between':>12}{'theta_c':>10}"]
        for ch, d in self.channels.items():
            lines.append(f"{ch:<8}{d.avg_within:>12.4f}{d.avg_between:>12.4f}{d.theta_c:>10.2f}")
        return "\n".join(lines) + "\n"


def class_discrimination(samples: Sequence[tuple[str, np.ndarray]], metric=Metric.KLD,
                         bins: int | None = None, weights=None) -> ChannelDiscrimination:
    """Ratio of mean between-class to mean within-class pairwise distance.

    ``samples`` is a sequence of ``(label, vector)``; ``bins``/``weights``
    give KLD its region blocks.
    """
    labels = {label for label, _ in samples}
    if len(labels) < 2:
        raise DegenerateInputError("class discrimination needs at least two classes")
    within, between = [], []
    for (la, va), (lb, vb) in itertools.combinations(samples, 2):
        d = metric_distance(va, vb, metric, bins, weights)
        (within if la == lb else between).append(d)
    if not within:
        raise DegenerateInputError("no class has two samples; within-class distance undefined")
    return ChannelDiscrimination.from_averages(float(np.mean(within)), float(np.mean(between)))


def discrimination_report(features: FeatureSet, channels: Sequence[str], metric=Metric.KLD) -> DiscriminationReport:
    report = DiscriminationReport()
    for ch in order_channels(channels):
        samples = [(subj, s[ch].values) for subj in sorted(features) for s in features[subj]]
        first = next(iter(features.values()))[0][ch]
        report.channels[ch] = class_discrimination(samples, metric, first.bins, first.region_weights)
    return report


def _entropy(counts: np.ndarray, total: int) -> float:
    # sorted so the sum is independent of histogram layout (keeps NMI symmetric bit-for-bit)
    p = np.sort(counts[counts > 0]) / total
    return float(-np.sum(p * np.log2(p)))


def channel_mutual_information(a: np.ndarray, b: np.ndarray, adjusted: bool = True) -> float:
    """Normalized mutual information of two planes, in percent.

    Planes are quantized to 256 levels. The plug-in value is
    ``100 * 2 I / (H(A) + H(B))``. With ``adjusted`` (the default) the mutual
    information expected between independent planes with the same level
    counts, E, is removed: ``100 * 2 (I - E) / (H(A) + H(B) - 2 E)``. The
    plug-in estimate alone reads about 10% on two independent 256x256 uniform
    planes; the adjusted one reads about 0. Results are clipped to [0, 100].
    Equal planes give 100; distinct constant planes give 0.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"planes differ in shape: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise EmptyInputError("empty planes")
    qa = quantize(a).ravel()
    qb = quantize(b).ravel()
    if np.array_equal(qa, qb):
        return 100.0
    # fixed argument order so the result is symmetric bit-for-bit
    if qa.tobytes() > qb.tobytes():
        qa, qb = qb, qa
    n = qa.size
    h_a = _entropy(np.bincount(qa, minlength=256), n)
    h_b = _entropy(np.bincount(qb, minlength=256), n)
    if h_a + h_b == 0.0:
        return 0.0
    if adjusted:
        from sklearn.metrics import adjusted_mutual_info_score

        value = 100.0 * adjusted_mutual_info_score(qa, qb, average_method="arithmetic")
    else:
        h_ab = _entropy(np.bincount(qa * 256 + qb, minlength=65536), n)
        value = 100.0 * 2.0 * (h_a + h_b - h_ab) / (h_a + h_b)
    return float(min(100.0, max(0.0, value)))


@dataclass
class RocCurve:
    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray
    eer: float

    def to_delimited(self, sep: str = ",") -> str:
        """Two columns (FAR, FRR), one row per threshold in ascending order."""
        buf = io.StringIO()
        buf.write(f"far{sep}frr\n")
        for fa, fr in zip(self.far, self.frr):
            buf.write(f"{fa:.10g}{sep}{fr:.10g}\n")
        return buf.getvalue()


def far_frr(genuine: Sequence[float], impostor: Sequence[float]) -> RocCurve:
    """FAR/FRR over every distinct score used as an acceptance threshold.

    Scores are distances: a comparison is accepted when its score is ``<= t``.
    The EER is found by linear interpolation where ``FAR - FRR`` changes sign;
    the implicit point below every score (FAR 0, FRR 1) anchors the sweep.
    """
    g = np.sort(np.asarray(genuine, dtype=np.float64))
    imp = np.sort(np.asarray(impostor, dtype=np.float64))
    if g.size == 0 or imp.size == 0:
        raise EmptyInputError("genuine and impostor score lists must be nonempty")
    t = np.unique(np.concatenate([g, imp]))
    far = np.searchsorted(imp, t, side="right") / imp.size
    frr = 1.0 - np.searchsorted(g, t, side="right") / g.size
    fa = np.concatenate([[0.0], far])
    fr = np.concatenate([[1.0], frr])
    diff = fa - fr
    i = int(np.argmax(diff >= 0))  # diff ends at +1, so a crossing always exists
    if diff[i] == 0.0:
        eer = float(fa[i])
    else:
        alpha = -diff[i - 1] / (diff[i] - diff[i - 1])
        eer = float(fa[i - 1] + alpha * (fa[i] - fa[i - 1]))
    return RocCurve(t, far, frr, eer)


def _pairwise(features: FeatureSet, key: str, metric: Metric, bins: int):
    """Distance matrix over all samples for one channel (or ``FVF``)."""
    flat = []
    for subj in sorted(features):
        for sample in features[subj]:
            if key == FVF:
                flat.append(fvf_signature([sig.coarsen(bins) for sig in sample.values()]))
            else:
                flat.append(sample[key].coarsen(bins))
    n = len(flat)
    d = np.zeros((n, n))
    # every metric is symmetric when both sides share region weights
    for i, j in itertools.combinations(range(n), 2):
        d[i, j] = d[j, i] = signature_distance(flat[i], flat[j], metric)
    return d


def genuine_impostor_scores(features: FeatureSet, metric=Metric.KLD, channel: str = FVF,
                            bins: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """All unordered sample pairs split into same-subject and cross-subject distances."""
    metric = Metric.parse(metric)
    any_sig = next(iter(next(iter(features.values()))[0].values()))
    d = _pairwise(features, channel, metric, bins or any_sig.bins)
    labels = [subj for subj in sorted(features) for _ in features[subj]]
    genuine, impostor = [], []
    for i, j in itertools.combinations(range(len(labels)), 2):
        (genuine if labels[i] == labels[j] else impostor).append(d[i, j])
    return np.array(genuine), np.array(impostor)


@dataclass
class ExperimentConfig:
    train_counts: tuple[int, ...] = (1, 2, 3, 4, 5)
    channels: tuple[str, ...] = ("H", "S", "I")
    grid: tuple[int, int] = (4, 4)
    bins: tuple[int, ...] = (256,)
    metric: str = "KLD"
    fusion: tuple[str, ...] = ("sum", "median", "mv", "fvf")
    trials: int = 10
    seed: int = 0
    # enroll every sample and probe with the same samples
    resubstitution: bool = False


@dataclass
class EvalReport:
    """Mean rank-1 recognition rates (percent) keyed by (train_count, rule, bins)."""

    rates: dict[tuple[int, str, int], float] = field(default_factory=dict)
    probes: dict[tuple[int, int], int] = field(default_factory=dict)

    def rate(self, train_count: int, rule: str, bins: int = 256) -> float:
        return self.rates[(train_count, Rule.parse(rule).value, bins)]

    def to_delimited(self, sep: str = ",") -> str:
        lines = [sep.join(("train_count", "rule", "bins", "rate"))]
        for (n, rule, bins), rate in sorted(self.rates.items()):
            lines.append(sep.join((str(n), rule, str(bins), f"{rate:.4f}")))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        rules = sorted({r for _, r, _ in self.rates}, key=[x.value for x in Rule].index)
        out = []
        for bins in sorted({b for _, _, b in self.rates}, reverse=True):
            out.append(f"bins={bins}")
            out.append(f"{'train':>6}" + "".join(f"{r.upper():>10}" for r in rules))
            for n in sorted({n for n, _, _ in self.rates}):
                out.append(f"{n:>6}" + "".join(f"{self.rates[(n, r, bins)]:>10.2f}" for r in rules))
            out.append("")
        return "\n".join(out)


def _splits(features: FeatureSet, config: ExperimentConfig):
    """Seeded train/test index splits per (train_count, trial)."""
    rng = np.random.default_rng(config.seed)
    subjects = sorted(features)
    out = {}
    for n in config.train_counts:
        for trial in range(config.trials):
            split = {}
            for s in subjects:
                k = len(features[s])
                if config.resubstitution:
                    split[s] = (list(range(k)), list(range(k)))
                else:
                    perm = rng.permutation(k)
                    split[s] = (sorted(perm[:n].tolist()), sorted(perm[n:].tolist()))
            out[(n, trial)] = split
    return out


def run_identification_experiment(features: FeatureSet, config: ExperimentConfig | None = None) -> EvalReport:
    """Repeated random-split identification over precomputed signatures.

    Distances between all sample pairs are computed once per channel and bin
    count, then every split reuses them. Each split's probes are identified
    with every configured fusion rule.
    """
    config = config or ExperimentConfig()
    metric = Metric.parse(config.metric)
    rules = [Rule.parse(r) for r in config.fusion]
    channels = order_channels(config.channels)
    if not features:
        raise EmptyInputError("no subjects in dataset")
    need = max(config.train_counts)
    for s, samples in features.items():
        if not config.resubstitution and len(samples) <= need:
            raise InsufficientSamplesError(
                f"subject {s!r} has {len(samples)} samples; need more than {need}"
            )
        for sample in samples:
            for ch in channels:
                if sample[ch].grid != tuple(config.grid):
                    raise ShapeError(f"signature grid {sample[ch].grid} differs from config {config.grid}")
    # restrict samples to the configured channels
    features = {s: [{ch: sample[ch] for ch in channels} for sample in features[s]] for s in sorted(features)}
    subjects = sorted(features)
    offsets = dict(zip(subjects, np.cumsum([0] + [len(features[s]) for s in subjects])))
    splits = _splits(features, config)

    report = EvalReport()
    for bins in config.bins:
        keys = list(channels) + ([FVF] if Rule.FVF in rules else [])
        dist = {k: _pairwise(features, k, metric, bins) for k in keys}
        for n in config.train_counts:
            correct = {r: 0 for r in rules}
            total = 0
            for trial in range(config.trials):
                split = splits[(n, trial)]
                for truth in subjects:
                    for probe_idx in split[truth][1]:
                        p = offsets[truth] + probe_idx
                        per_key = {
                            k: {s: min(dist[k][p, offsets[s] + j] for j in split[s][0]) for s in subjects}
                            for k in keys
                        }
                        table = DistanceTable(
                            f"{truth}/{probe_idx}", metric,
                            {(s, ch): per_key[ch][s] for ch in channels for s in subjects},
                        )
                        total += 1
                        for r in rules:
                            if r is Rule.FVF:
                                decision = min(subjects, key=lambda s: (per_key[FVF][s], s))
                            else:
                                decision = fuse(table, r)
                            correct[r] += decision == truth
            if total == 0:
                raise InsufficientSamplesError("no probes left after splitting")
            for r in rules:
                report.rates[(n, r.value, bins)] = 100.0 * correct[r] / total
            report.probes[(n, bins)] = total
            log.info("train=%d bins=%d: %s", n, bins,
                     ", ".join(f"{r.value}={report.rates[(n, r.value, bins)]:.2f}" for r in rules))
    return report
