"""Confusion accounting, error rates and the per-writer verification protocol."""
from __future__ import annotations

import hashlib
import logging
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .consensus import STRATEGIES, EnrollConfig, classify_many, prepare_enrollment, score_probes
from .core import (
    ConfusionCounts,
    InsufficientSamples,
    InvalidParameter,
    Label,
    LengthMismatch,
    RateReport,
    SignatureSample,
    SplitSpec,
    UndefinedRate,
    sum_counts,
)

log = logging.getLogger(__name__)

_STREAM_SPLIT = 0
_STREAM_FORGERIES = 1


def confusion(decisions: Sequence[int], labels: Sequence[Label]) -> ConfusionCounts:
    if len(decisions) != len(labels):
        raise LengthMismatch(f"{len(decisions)} decisions vs {len(labels)} labels")
    if len(decisions) == 0:
        raise LengthMismatch("confusion() needs at least one decision")
    tp = tn = fp = fn = 0
    for d, lab in zip(decisions, labels):
        genuine = lab is Label.GENUINE
        if d:
            if genuine:
                tp += 1
            else:
                fp += 1
        elif genuine:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, tn, fp, fn)


def rates(c: ConfusionCounts) -> RateReport:
    """Accuracy, FAR, FRR and AER in percent.

    Raises UndefinedRate when there are no forged (FAR) or no genuine (FRR)
    trials to compute a rate over.
    """
    if c.fp + c.tn == 0:
        raise UndefinedRate("FAR undefined: no forged probes were evaluated")
    if c.tp + c.fn == 0:
        raise UndefinedRate("FRR undefined: no genuine probes were evaluated")
    accuracy = 100.0 * (c.tp + c.tn) / c.total
    far = 100.0 * c.fp / (c.fp + c.tn)
    frr = 100.0 * c.fn / (c.fn + c.tp)
    return RateReport(c, accuracy, far, frr, (far + frr) / 2)


def derive_seed(master_seed: int, writer_id: str, trial: int, stream: int = _STREAM_SPLIT) -> int:
    """64-bit seed that depends only on its arguments, never on scheduling."""
    writer_key = int.from_bytes(hashlib.blake2b(str(writer_id).encode("utf-8"), digest_size=8).digest(), "little")
    ss = np.random.SeedSequence([int(master_seed), writer_key, int(trial), int(stream)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def group_by_writer(samples: Iterable[SignatureSample]) -> "OrderedDict[str, tuple[list, list]]":
    """``writer_id -> (genuine, forged)`` in sorted writer order, input order within a writer."""
    groups: dict[str, tuple[list, list]] = {}
    for s in samples:
        genuine, forged = groups.setdefault(s.writer_id, ([], []))
        (genuine if s.label is Label.GENUINE else forged).append(s)
    return OrderedDict(sorted(groups.items()))


@dataclass(frozen=True)
class TrialOutcome:
    """Scores and per-strategy thresholds for one writer in one trial."""

    writer_id: str
    trial: int
    seed: int
    labels: tuple  # Label per probe, genuine probes first
    scores: np.ndarray = field(repr=False)
    thresholds: Mapping[str, float] = field(default_factory=dict)

    def decisions(self, strategy: str) -> np.ndarray:
        return classify_many(self.scores, self.thresholds[strategy])

    def counts(self, strategy: str) -> ConfusionCounts:
        return confusion(self.decisions(strategy), self.labels)


def writer_trial_outcomes(genuine: Sequence[SignatureSample], forged: Sequence[SignatureSample],
                          config: EnrollConfig, strategies: Sequence[str], trials: int) -> list[TrialOutcome]:
    """Enroll and score one writer ``trials`` times, sharing draws across strategies."""
    split = config.split
    writer_id = (genuine or forged)[0].writer_id if (genuine or forged) else "?"
    if not genuine:
        raise InsufficientSamples(writer_id, split.n_genuine_required, 0)
    if split.n_probe_forge > 0 and not forged:
        raise InsufficientSamples(writer_id, 1, 0, what="forged")
    outcomes = []
    for trial in range(trials):
        seed = derive_seed(config.seed, writer_id, trial, _STREAM_SPLIT)
        enrollment = prepare_enrollment(genuine, config.with_(seed=seed))
        models = {s: enrollment.model(s, config) for s in strategies}
        # forgeries are drawn without replacement; with too few we use them all
        k = min(split.n_probe_forge, len(forged))
        rng = np.random.default_rng(derive_seed(config.seed, writer_id, trial, _STREAM_FORGERIES))
        forged_probes = [forged[i] for i in rng.choice(len(forged), size=k, replace=False)] if k else []
        probes = enrollment.probe_genuine + forged_probes
        labels = tuple(p.label for p in probes)
        any_model = next(iter(models.values()))
        scores = score_probes(np.stack([p.feature for p in probes]), any_model) if probes else np.empty(0)
        outcomes.append(TrialOutcome(writer_id, trial, seed, labels, scores,
                                     {s: m.tau_c for s, m in models.items()}))
    return outcomes


@dataclass(frozen=True)
class ProtocolResult:
    strategy: str
    per_writer: Mapping[str, RateReport]
    aggregate: RateReport
    trial_aggregates: tuple[RateReport, ...]
    trials: int
    seed: int
    skipped: Mapping[str, str] = field(default_factory=dict)

    @property
    def macro(self) -> dict[str, float]:
        """Unweighted mean over writers of each per-writer rate."""
        reports = list(self.per_writer.values())
        return {k: float(np.mean([getattr(r, k) for r in reports]))
                for k in ("accuracy", "far", "frr", "aer")}

    @property
    def trial_std(self) -> dict[str, float]:
        """Population std across trials of the per-trial micro-averaged rates."""
        return {k: float(np.std([getattr(r, k) for r in self.trial_aggregates]))
                for k in ("accuracy", "far", "frr", "aer")}

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "trials": self.trials,
            "seed": self.seed,
            "aggregate": self.aggregate.to_dict(),
            "per_writer": {w: r.to_dict() for w, r in self.per_writer.items()},
            "trial_aggregates": [r.to_dict() for r in self.trial_aggregates],
            "skipped": dict(self.skipped),
        }


def _check_protocol_args(split: SplitSpec, strategies: Sequence[str], trials: int):
    if split.n_probe_genuine < 1 or split.n_probe_forge < 1:
        raise InvalidParameter(
            "the protocol needs at least one genuine and one forged probe per writer "
            f"so FAR and FRR are defined; got split {split}")
    if trials < 1:
        raise InvalidParameter(f"trials must be >= 1, got {trials}")
    for s in strategies:
        if s not in STRATEGIES:
            raise InvalidParameter(f"unknown strategy {s!r}; expected one of {STRATEGIES}")


def collect_outcomes(dataset: Iterable[SignatureSample], config: EnrollConfig,
                     strategies: Sequence[str], trials: int, workers: int = 1):
    """Run every writer; returns ``(outcomes by writer, skipped writers)``, both sorted by writer."""
    _check_protocol_args(config.split, strategies, trials)
    groups = group_by_writer(dataset)

    def work(item):
        writer_id, (genuine, forged) = item
        try:
            return writer_id, writer_trial_outcomes(genuine, forged, config, strategies, trials), None
        except InsufficientSamples as exc:
            return writer_id, None, str(exc)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, groups.items()))
    else:
        results = [work(item) for item in groups.items()]

    outcomes: "OrderedDict[str, list[TrialOutcome]]" = OrderedDict()
    skipped: "OrderedDict[str, str]" = OrderedDict()
    for writer_id, res, reason in results:
        if res is None:
            log.warning("skipping writer %s: %s", writer_id, reason)
            skipped[writer_id] = reason
        else:
            outcomes[writer_id] = res
    if not outcomes:
        raise InsufficientSamples("<every writer>", config.split.n_genuine_required, 0,
                                  detail="skipped: " + "; ".join(skipped.values()))
    return outcomes, skipped


def summarize(outcomes: Mapping[str, list[TrialOutcome]], strategy: str, trials: int, seed: int,
              skipped: Mapping[str, str] | None = None) -> ProtocolResult:
    per_writer = OrderedDict()
    by_trial = [[] for _ in range(trials)]
    for writer_id, writer_outcomes in outcomes.items():
        counts = [o.counts(strategy) for o in writer_outcomes]
        per_writer[writer_id] = rates(sum_counts(counts))
        for o, c in zip(writer_outcomes, counts):
            by_trial[o.trial].append(c)
    aggregate = rates(sum_counts([r.counts for r in per_writer.values()]))
    trial_aggregates = tuple(rates(sum_counts(cs)) for cs in by_trial)
    return ProtocolResult(strategy, per_writer, aggregate, trial_aggregates, trials, seed,
                          dict(skipped or {}))


def run_protocol(dataset: Iterable[SignatureSample], split: SplitSpec, config: EnrollConfig,
                 strategy: str = "consensus", trials: int = 10, workers: int = 1) -> ProtocolResult:
    """Writer-dependent evaluation; rates are micro-averaged over writers and trials."""
    config = config.with_(split=split)
    outcomes, skipped = collect_outcomes(dataset, config, [strategy], trials, workers)
    return summarize(outcomes, strategy, trials, config.seed, skipped)


def compare_strategies(dataset: Iterable[SignatureSample], split: SplitSpec, config: EnrollConfig,
                       strategies: Sequence[str], trials: int = 10,
                       workers: int = 1) -> "OrderedDict[str, ProtocolResult]":
    """Evaluate several threshold criteria over the very same splits and probe draws."""
    config = config.with_(split=split)
    outcomes, skipped = collect_outcomes(dataset, config, list(strategies), trials, workers)
    return OrderedDict((s, summarize(outcomes, s, trials, config.seed, skipped)) for s in strategies)


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    result: ProtocolResult

    @property
    def accuracy(self):
        return self.result.aggregate.accuracy

    @property
    def far(self):
        return self.result.aggregate.far

    @property
    def frr(self):
        return self.result.aggregate.frr

    @property
    def aer(self):
        return self.result.aggregate.aer


def sweep_alpha(dataset: Iterable[SignatureSample], split: SplitSpec, config: EnrollConfig,
                alphas: Sequence[float], strategy: str = "consensus", trials: int = 10,
                workers: int = 1) -> list[SweepRow]:
    """One protocol run per alpha with everything else held fixed."""
    dataset = list(dataset)
    return [SweepRow(float(a), run_protocol(dataset, split, config.with_(alpha=float(a)),
                                            strategy, trials, workers))
            for a in alphas]
