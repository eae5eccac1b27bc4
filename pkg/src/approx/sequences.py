"""Freeze approximations, Cauchy/Mackey-Cauchy classification and the confinement pipeline."""

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path
from typing import Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel

from src.core.config import EstimatesConfig, StepperConfig
from src.core.curves import ChartLineCurve, Curve, PiecewiseCurve
from src.core.errors import InvalidArgumentError
from src.core.lie import LieContext
from src.core.reports import PipelineReport, StageReport, record_stage
from src.core.seminorms import SeminormFamily
from src.estimates.bounds import tame_check
from src.estimates.witness import EstimateWitness, constricted_constants, image_nodes

logger = logging.getLogger(__name__)

Envelope = Literal["geometric", "harmonic"]
Member = Union[Curve, np.ndarray]

CAUCHY_SHRINK = 0.5
MACKEY_SAFETY = 2.0
LIPSCHITZ_MARGIN = 1e-3

ANCHOR_UNIFORM = "p_∞(φ_n − φ) → 0"
ANCHOR_MACKEY = "p_∞(φ_m − φ_n) ≤ C_p·λ_{m,n}"
ANCHOR_TAME = "v∘Ad_{[∫_r^•φ_n]⁻¹} ≤ w for all n"


def freeze_approximate(curve: Curve, n: int, mode: Literal["hold", "chart"] = "hold") -> PiecewiseCurve:
    """``n`` uniform panels, each frozen at its left endpoint ``t_p``.

    ``hold`` keeps the constant ``φ(t_p)``; ``chart`` uses the chart line
    ``t ↦ X(1 + (t - t_p)X)^{-1}`` with ``X = φ(t_p)``, which starts at the
    same value and lives in ``gl(d)``.
    """
    if n < 1:
        raise InvalidArgumentError(f"freeze approximation needs n >= 1, got {n}")
    knots = np.linspace(curve.start, curve.end, n + 1)
    values = [curve.eval(t) for t in knots[:-1]]
    if mode == "hold":
        return PiecewiseCurve.constant(knots, values)
    if mode == "chart":
        pieces = [ChartLineCurve(X, a, (a, b)) for X, a, b in zip(values, knots[:-1], knots[1:])]
        return PiecewiseCurve(knots, pieces)
    raise InvalidArgumentError(f"unknown freeze mode {mode!r}")


def sup_distance(a: Curve, b: Curve, norm, n: int = 129) -> float:
    """Sampled ``sup_t norm(a(t) - b(t))`` including both one-sided values at every knot."""
    if not np.allclose(a.interval, b.interval, rtol=0, atol=1e-12):
        raise InvalidArgumentError(f"curves on {a.interval} and {b.interval}")
    times = np.unique(np.concatenate([a.sample_times(n), b.sample_times(n)]))
    breaks = set(a.breakpoints) | set(b.breakpoints)
    worst = 0.0
    for t in times:
        worst = max(worst, norm(a.eval(t) - b.eval(t)))
        if t in breaks:
            worst = max(worst, norm(a.eval(t, left=True) - b.eval(t, left=True)))
    return worst


def envelope_value(envelope: Envelope, m: int, n: int) -> float:
    k = min(m, n)
    if envelope == "geometric":
        return 2.0 ** (-k)
    if envelope == "harmonic":
        return 1.0 / k
    raise InvalidArgumentError(f"unknown envelope {envelope!r}")


class EvidenceRow(BaseModel):
    m: int
    n: int
    seminorm: str
    distance: float
    envelope: float


class SeminormConstant(BaseModel):
    seminorm: str
    C: float
    N: int = 1
    cauchy: bool
    mackey: bool
    diameter: float
    tail_diameter: float


EVIDENCE_COLUMNS = ["m", "n", "seminorm", "distance", "envelope"]


class SequenceReport(BaseModel):
    kind: Literal["cauchy", "mackey-cauchy", "neither"]
    envelope: Envelope
    constants: list[SeminormConstant]
    evidence: list[EvidenceRow]

    def dominated(self, rtol: float = 1e-12) -> bool:
        """Whether every evidence distance sits under ``C_p·λ_{m,n}``."""
        by_norm = {c.seminorm: c.C for c in self.constants}
        return all(row.distance <= by_norm[row.seminorm] * row.envelope * (1.0 + rtol) for row in self.evidence)

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(EVIDENCE_COLUMNS)
            for row in self.evidence:
                writer.writerow([row.m, row.n, row.seminorm, repr(row.distance), repr(row.envelope)])
        return path


def _distance(a: Member, b: Member, norm) -> float:
    if isinstance(a, Curve):
        return sup_distance(a, b, norm)
    ga, gb = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return norm(np.linalg.solve(ga, gb) - np.eye(ga.shape[0]))


def classify_sequence(
    seq: Sequence[Member],
    fam: SeminormFamily,
    norm_ids: Sequence[str] = ("op",),
    envelope: Envelope = "geometric",
    indices: Optional[Sequence[int]] = None,
) -> SequenceReport:
    """Cauchy / Mackey-Cauchy classification on the triangular grid of pairs.

    Curves are compared by sampled sup-distance, group elements by
    ``p(Ξ(g_m^{-1} g_n))``. The tail is the last quarter of the sequence (at
    least its last two members). The sequence counts as Cauchy when the tail
    diameter is at most half the full diameter (or zero); it is Mackey-Cauchy
    when, in addition, twice the envelope constant fitted on the pairs
    starting before the tail dominates every tail pair.
    """
    if not seq:
        raise InvalidArgumentError("cannot classify an empty sequence")
    indices = list(range(1, len(seq) + 1)) if indices is None else [int(i) for i in indices]
    if len(indices) != len(seq) or min(indices) < 1:
        raise InvalidArgumentError("indices must be positive, one per member")
    tail_start = max(0, len(seq) - max(2, len(seq) // 4))
    constants: list[SeminormConstant] = []
    evidence: list[EvidenceRow] = []
    for norm_id in norm_ids:
        norm = fam.get(norm_id)
        head: list[tuple[float, float]] = []
        tail: list[tuple[float, float]] = []
        for i in range(len(seq)):
            for j in range(i + 1, len(seq)):
                d = _distance(seq[i], seq[j], norm)
                lam = envelope_value(envelope, indices[i], indices[j])
                evidence.append(EvidenceRow(m=indices[i], n=indices[j], seminorm=norm_id, distance=d, envelope=lam))
                (tail if i >= tail_start else head).append((d, lam))
        pairs = head + tail
        diameter = max((d for d, _ in pairs), default=0.0)
        tail_diameter = max((d for d, _ in tail), default=0.0)
        cauchy = diameter == 0.0 or tail_diameter <= CAUCHY_SHRINK * diameter
        c_head = max((d / lam for d, lam in head), default=0.0)
        mackey = cauchy and all(d <= MACKEY_SAFETY * c_head * lam * (1.0 + 1e-12) for d, lam in tail)
        C = max((d / lam for d, lam in pairs), default=0.0)
        logger.debug("classify %s: diameter %.3e, tail %.3e, C %.3e", norm_id, diameter, tail_diameter, C)
        constants.append(
            SeminormConstant(
                seminorm=norm_id, C=C, cauchy=cauchy, mackey=mackey,
                diameter=diameter, tail_diameter=tail_diameter,
            )
        )
    if all(c.mackey for c in constants):
        kind = "mackey-cauchy"
    elif all(c.cauchy for c in constants):
        kind = "cauchy"
    else:
        kind = "neither"
    return SequenceReport(kind=kind, envelope=envelope, constants=constants, evidence=evidence)


# -- confinement pipeline --------------------------------------------------------


class ConfinedReport(PipelineReport):
    levels: list[int] = []
    classification: Optional[SequenceReport] = None
    witness: Optional[EstimateWitness] = None
    tame_constant: Optional[float] = None


def dyadic_levels(n_max: int) -> list[int]:
    if n_max < 1:
        raise InvalidArgumentError(f"n_max must be positive, got {n_max}")
    return [2**k for k in range(int(math.log2(n_max)) + 1)]


def _compact_sample(curves: Sequence[Curve]) -> list[np.ndarray]:
    seen: dict[bytes, np.ndarray] = {}
    for c in curves:
        for X in image_nodes(c):
            seen.setdefault(np.ascontiguousarray(X).tobytes(), X)
    return list(seen.values())


def _is_lipschitz(curve: Curve) -> bool:
    if curve.order < 1:
        return False
    return all(np.allclose(curve.eval(b), curve.eval(b, left=True), rtol=0, atol=1e-12) for b in curve.breakpoints)


def confined_pipeline(
    ctx: LieContext,
    fam: SeminormFamily,
    curve: Curve,
    n_max: int = 64,
    v_id: str = "op",
    cfg: Optional[StepperConfig] = None,
    estimates: Optional[EstimatesConfig] = None,
    seed: int = 0,
) -> ConfinedReport:
    """Freeze approximations at ``n = 1, 2, 4, …, n_max`` and certify convergence, Cauchy-ness and tameness.

    A continuous curve with a derivative on every piece is treated as
    Lipschitz with the sampled constant (plus a small margin): stage (i)
    compares with ``L·|r′−r|/n`` and stage (ii) asks for Mackey-Cauchy under
    ``1/min(m, n)``. Any other curve only gets the Cauchy certificate. Stage
    (iii) certifies one constricted witness on the union of all images and
    checks tameness against ``exp(|r′−r|·C_v)``.
    """
    levels = dyadic_levels(n_max)
    v = fam.get(v_id)
    approximations = [freeze_approximate(curve, n) for n in levels]
    stages: list[StageReport] = []
    lipschitz = _is_lipschitz(curve)
    notes: list[str] = []

    distances = [sup_distance(a, curve, v) for a in approximations]
    if lipschitz:
        L = curve.sup_norm(v, order=1) * (1.0 + LIPSCHITZ_MARGIN)
        worst = max(range(len(levels)), key=lambda k: distances[k] * levels[k])
        ok = record_stage(
            stages, "uniform-convergence", ANCHOR_UNIFORM,
            distances[worst], L * curve.length / levels[worst],
            notes=[f"n={levels[worst]}", f"L={L:.6g}"],
        )
    else:
        ok = record_stage(
            stages, "uniform-convergence", ANCHOR_UNIFORM, distances[-1], distances[0],
            notes=["order-0 curve: distance at n_max against n=1"],
        )
    if not ok:
        return ConfinedReport(stages=stages, levels=levels, notes=notes)

    envelope: Envelope = "harmonic" if lipschitz else "geometric"
    seq = classify_sequence(approximations, fam, (v_id,), envelope=envelope, indices=levels)
    wanted = "mackey-cauchy" if lipschitz else "cauchy"
    reached = seq.kind == "mackey-cauchy" or seq.kind == wanted
    constant = seq.constants[0]
    stages.append(
        StageReport(
            stage="sequence-class",
            anchor=ANCHOR_MACKEY,
            status="pass" if reached else "fail",
            measured=constant.tail_diameter,
            bound=CAUCHY_SHRINK * constant.diameter,
            notes=[f"kind={seq.kind}", f"wanted={wanted}", f"C={constant.C:.6g}", f"envelope={envelope}"],
        )
    )
    if not reached:
        logger.warning("confined pipeline: sequence is %s, wanted %s", seq.kind, wanted)
        return ConfinedReport(stages=stages, levels=levels, classification=seq, notes=notes)

    K = _compact_sample(approximations)
    witness = constricted_constants(ctx, fam, v_id, K, seed=seed, cfg=estimates)
    if not witness.certified:
        stages.append(
            StageReport(
                stage="tame", anchor=ANCHOR_TAME, status="fail", measured=math.inf, bound=math.nan,
                notes=["constricted witness search failed"],
            )
        )
        return ConfinedReport(stages=stages, levels=levels, classification=seq, witness=witness, notes=notes)
    tame = tame_check(ctx, fam, approximations, v_id, witness=witness, cfg=cfg, seed=seed)
    tame_constant = math.exp(curve.length * witness.C)
    record_stage(
        stages, "tame", ANCHOR_TAME,
        tame.witness_ratio if tame.witness_ratio is not None else math.inf,
        tame_constant,
        notes=[f"C_v={witness.C!r}", f"w={tame.w_id}"] + tame.notes,
    )
    return ConfinedReport(
        stages=stages,
        levels=levels,
        classification=seq,
        witness=witness,
        tame_constant=tame_constant,
        notes=notes,
    )
