"""Sample-based witnesses for ad-chain estimates.

An asymptotic witness certifies ``v(ad_{X_1}···ad_{X_n} Y) ≤ w(X_1)···w(X_n)·w(Y)``
for ``w = c·v``; a constricted witness certifies
``v(ad_{X_1}···ad_{X_n} Y) ≤ C^n·w(Y)`` for ``X_i`` drawn from a compact
sample ``K``. Both search a geometric grid and record what was sampled, so a
witness file can be regenerated from its seed.
"""

from __future__ import annotations

import itertools
import logging
import math
from pathlib import Path
from typing import Iterator, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.core.config import EstimatesConfig
from src.core.errors import InvalidArgumentError
from src.core.lie import LieContext
from src.core.reports import CheckReport
from src.core.seminorms import SeminormFamily

logger = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 4096
PAIRED_LIMIT = 20000
GRID_RTOL = 1e-12

ANCHOR_ASYMPTOTIC = "v(ad_{X₁}∘…∘ad_{X_n}(Y)) ≤ w(X₁)·…·w(X_n)·w(Y)"
ANCHOR_CONSTRICTED = "v(ad_{X₁}∘…∘ad_{X_n}(Y)) ≤ C_v^n·w(Y)"

Chain = tuple[tuple[np.ndarray, ...], np.ndarray]


class ChainRecord(BaseModel):
    depth: int
    operators: list[list[list[float]]]
    Y: list[list[float]]
    required: float

    @classmethod
    def of(cls, chain: Chain, required: float) -> "ChainRecord":
        Xs, Y = chain
        return cls(depth=len(Xs), operators=[X.tolist() for X in Xs], Y=Y.tolist(), required=required)


class SampleBatch(BaseModel):
    depth: int
    source: Literal["basis", "pairs", "random", "compact", "compact-random"]
    count: int


class EstimateWitness(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    kind: Literal["asymptotic", "constricted"]
    context: str
    v_id: str
    w_id: str
    multiplier: float
    C: Optional[float] = None
    certified: bool
    depth_max: int
    seed: int
    samples_per_depth: int
    max_slack: float
    sample_log: list[SampleBatch] = []
    compact_set: list[list[list[float]]] = []
    ball_radius: Optional[float] = None
    worst_chain: Optional[ChainRecord] = None
    violating_chain: Optional[ChainRecord] = None

    def as_check(self) -> CheckReport:
        """Certified witnesses have slack at most 1; a failed search reports an infinite slack."""
        anchor = ANCHOR_ASYMPTOTIC if self.kind == "asymptotic" else ANCHOR_CONSTRICTED
        return CheckReport.compare(
            f"{self.kind}-witness",
            anchor,
            self.max_slack,
            1.0,
            samples=sum(batch.count for batch in self.sample_log),
            notes=[f"multiplier={self.multiplier!r}", f"C={self.C!r}"],
            rtol=1e-9,
        )


# -- chain samplers ---------------------------------------------------------


def apply_chain(Xs: Sequence[np.ndarray], Y: np.ndarray) -> np.ndarray:
    Z = Y
    for X in reversed(Xs):
        Z = X @ Z - Z @ X
    return Z


def _normalized(X: np.ndarray, norm) -> Optional[np.ndarray]:
    n = norm(X)
    return X / n if n > 0 else None


def pair_elements(ctx: LieContext, norm) -> list[np.ndarray]:
    """Normalized ``b_i ± b_j`` for ``i < j``."""
    out = []
    for a, b in itertools.combinations(ctx.basis, 2):
        for s in (1.0, -1.0):
            X = _normalized(a + s * b, norm)
            if X is not None:
                out.append(X)
    return out


def unit_basis(ctx: LieContext, norm) -> list[np.ndarray]:
    return [X for X in (_normalized(b, norm) for b in ctx.basis) if X is not None]


def random_unit(ctx: LieContext, rng: np.random.Generator, norm) -> np.ndarray:
    while True:
        X = _normalized(ctx.from_coordinates(rng.normal(size=ctx.algebra_dim)), norm)
        if X is not None:
            return X


def basis_chains(ctx: LieContext, depth: int, norm) -> Iterator[Chain]:
    units = unit_basis(ctx, norm)
    for combo in itertools.product(units, repeat=depth + 1):
        yield tuple(combo[:-1]), combo[-1]


def random_chains(ctx: LieContext, seed: int, depth: int, count: int, norm) -> Iterator[Chain]:
    """``count`` unit chains; the stream for a depth depends only on ``(seed, depth)``."""
    rng = np.random.default_rng([seed, depth])
    for _ in range(count):
        Xs = tuple(random_unit(ctx, rng, norm) for _ in range(depth))
        yield Xs, random_unit(ctx, rng, norm)


# -- asymptotic estimate ------------------------------------------------------


def asymptotic_witness(
    ctx: LieContext,
    fam: SeminormFamily,
    v_id: str,
    depth_max: Optional[int] = None,
    samples: Optional[int] = None,
    seed: int = 0,
    cfg: Optional[EstimatesConfig] = None,
) -> EstimateWitness:
    """Smallest ``c ∈ {1, 2, 4, …}`` with ``w = c·v`` dominating every sampled chain."""
    cfg = cfg or EstimatesConfig()
    depth_max = cfg.depth_max if depth_max is None else depth_max
    samples = cfg.samples_per_depth if samples is None else samples
    if depth_max < 1:
        raise InvalidArgumentError("depth_max must be at least 1")
    v = fam.get(v_id)

    log: list[SampleBatch] = []
    records: list[tuple[Chain, float]] = []

    def consider(chain: Chain):
        Xs, Y = chain
        denom = math.prod(v(X) for X in Xs) * v(Y)
        if denom <= 0:
            return
        ratio = v(apply_chain(Xs, Y)) / denom
        records.append((chain, ratio ** (1.0 / (len(Xs) + 1))))

    for n in range(1, depth_max + 1):
        if n <= cfg.basis_depth:
            before = len(records)
            for chain in basis_chains(ctx, n, v):
                consider(chain)
            log.append(SampleBatch(depth=n, source="basis", count=len(records) - before))
        if n == 1:
            pairs = pair_elements(ctx, v)
            for X, Y in itertools.product(pairs, repeat=2):
                consider(((X,), Y))
            log.append(SampleBatch(depth=1, source="pairs", count=len(pairs) ** 2))
        for chain in random_chains(ctx, seed, n, samples, v):
            consider(chain)
        log.append(SampleBatch(depth=n, source="random", count=samples))

    need = max((req for _, req in records), default=0.0)
    multiplier = None
    for k in range(cfg.grid_max_exponent + 1):
        c = 2.0**k
        logger.debug("asymptotic witness %s/%s: trying c=%g (need %.6g)", ctx.name, v_id, c, need)
        if c * (1.0 + GRID_RTOL) >= need:
            multiplier = c
            break

    worst = max(records, key=lambda rec: rec[1], default=None)
    witness = EstimateWitness(
        kind="asymptotic",
        context=ctx.name,
        v_id=v_id,
        w_id=fam.scaled(v_id, multiplier if multiplier is not None else 2.0**cfg.grid_max_exponent),
        multiplier=multiplier if multiplier is not None else 2.0**cfg.grid_max_exponent,
        certified=multiplier is not None,
        depth_max=depth_max,
        seed=seed,
        samples_per_depth=samples,
        max_slack=_slack(records, multiplier),
        sample_log=log,
        worst_chain=ChainRecord.of(*worst) if worst else None,
        violating_chain=_deepest_violation(records, 2.0**cfg.grid_max_exponent) if multiplier is None else None,
    )
    if witness.certified:
        logger.info("asymptotic witness for %s/%s certified at c=%g", ctx.name, v_id, witness.multiplier)
    else:
        logger.warning("asymptotic witness for %s/%s: no c <= 2^%d certifies", ctx.name, v_id, cfg.grid_max_exponent)
    return witness


def _slack(records: list[tuple[Chain, float]], level: Optional[float]) -> float:
    """Largest ``lhs/rhs`` at the certified level (``required/level`` raised to the chain length)."""
    if level is None or level == 0:
        return math.inf if any(req > 0 for _, req in records) else 0.0
    return max(((req / level) ** (len(chain[0]) + 1) for chain, req in records), default=0.0)


def _deepest_violation(records: list[tuple[Chain, float]], level: float) -> Optional[ChainRecord]:
    bad = [(chain, req) for chain, req in records if req > level * (1.0 + GRID_RTOL)]
    if not bad:
        return None
    chain, req = max(bad, key=lambda rec: (len(rec[0][0]), rec[1]))
    return ChainRecord.of(chain, req)


# -- constricted constants ----------------------------------------------------


def ball_sample(
    ctx: LieContext,
    fam: SeminormFamily,
    v_id: str,
    radius: float,
    count: int = 64,
    seed: int = 0,
) -> list[np.ndarray]:
    """Boundary nodes of the ``v``-ball: scaled basis, pairs and random directions."""
    v = fam.get(v_id)
    rng = np.random.default_rng([seed, 0])
    nodes = unit_basis(ctx, v) + pair_elements(ctx, v)
    nodes += [random_unit(ctx, rng, v) for _ in range(count)]
    return [radius * X for X in nodes]


def constricted_constants(
    ctx: LieContext,
    fam: SeminormFamily,
    v_id: str,
    K: Optional[Sequence[np.ndarray]] = None,
    depth_max: Optional[int] = None,
    seed: int = 0,
    w_id: Optional[str] = None,
    ball_radius: Optional[float] = None,
    samples: Optional[int] = None,
    cfg: Optional[EstimatesConfig] = None,
) -> EstimateWitness:
    """Smallest grid constant ``C`` with ``v(ad_{X_1}···ad_{X_n} Y) ≤ C^n·w(Y)`` on ``K``.

    The grid is ``max_K v(X)·2^{j/s}`` for integer ``j`` (``s`` from the
    config); ``C = 0`` when every sampled chain vanishes.
    """
    cfg = cfg or EstimatesConfig()
    depth_max = cfg.depth_max if depth_max is None else depth_max
    samples = cfg.samples_per_depth if samples is None else samples
    w_id = v_id if w_id is None else w_id
    v, w = fam.get(v_id), fam.get(w_id)
    if K is None:
        if ball_radius is None:
            raise InvalidArgumentError("constricted_constants needs a compact sample K or a ball radius")
        K = ball_sample(ctx, fam, v_id, ball_radius, seed=seed)
    K = [ctx.algebra_element(X, "K element") for X in K]
    if not K:
        raise InvalidArgumentError("empty compact sample")

    ys = unit_basis(ctx, w) + pair_elements(ctx, w)
    log: list[SampleBatch] = []
    records: list[tuple[Chain, float]] = []

    def consider(Xs: tuple[np.ndarray, ...], Y: np.ndarray):
        wy = w(Y)
        if wy <= 0:
            return
        lhs = v(apply_chain(Xs, Y))
        records.append(((Xs, Y), (lhs / wy) ** (1.0 / len(Xs))))

    for n in range(1, depth_max + 1):
        rng = np.random.default_rng([seed, n])
        tuples = len(K) ** n
        if tuples <= EXHAUSTIVE_LIMIT:
            paired = tuples * len(ys) <= PAIRED_LIMIT
            for Xs in itertools.product(K, repeat=n):
                if paired:
                    for Y in ys:
                        consider(Xs, Y)
                else:
                    consider(Xs, random_unit(ctx, rng, w))
            log.append(SampleBatch(depth=n, source="compact", count=tuples * (len(ys) if paired else 1)))
        else:
            for _ in range(samples):
                idx = rng.integers(0, len(K), size=n)
                consider(tuple(K[i] for i in idx), random_unit(ctx, rng, w))
            log.append(SampleBatch(depth=n, source="compact-random", count=samples))

    base = max(v(X) for X in K)
    need = max((req for _, req in records), default=0.0)
    steps = cfg.constricted_grid_steps
    C: Optional[float] = None
    if need == 0.0:
        C = 0.0
    elif base > 0:
        span = steps * cfg.grid_max_exponent
        for j in range(-span, span + 1):
            level = base * 2.0 ** (j / steps)
            logger.debug("constricted %s/%s: trying C=%.6g (need %.6g)", ctx.name, v_id, level, need)
            if level * (1.0 + GRID_RTOL) >= need:
                C = level
                break

    worst = max(records, key=lambda rec: rec[1], default=None)
    witness = EstimateWitness(
        kind="constricted",
        context=ctx.name,
        v_id=v_id,
        w_id=w_id,
        multiplier=1.0,
        C=C,
        certified=C is not None,
        depth_max=depth_max,
        seed=seed,
        samples_per_depth=samples,
        max_slack=_constricted_slack(records, C),
        sample_log=log,
        compact_set=[] if ball_radius is not None else [X.tolist() for X in K],
        ball_radius=ball_radius,
        worst_chain=ChainRecord.of(*worst) if worst else None,
        violating_chain=None if C is not None else _deepest_violation(records, base * 2.0**cfg.grid_max_exponent),
    )
    if witness.certified:
        logger.info("constricted witness for %s/%s certified at C=%.6g", ctx.name, v_id, C)
    else:
        logger.warning("constricted witness for %s/%s: search failed", ctx.name, v_id)
    return witness


def _constricted_slack(records: list[tuple[Chain, float]], C: Optional[float]) -> float:
    if C is None:
        return math.inf
    if C == 0.0:
        return 0.0
    return max(((req / C) ** len(chain[0]) for chain, req in records), default=0.0)


# -- persistence and coverage -------------------------------------------------


def save_witness(witness: EstimateWitness, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(witness.model_dump_json(indent=2))
    return path


def load_witness(path: str | Path) -> EstimateWitness:
    return EstimateWitness.model_validate_json(Path(path).read_text())


def witness_covers(
    witness: EstimateWitness,
    points: Sequence[np.ndarray],
    fam: Optional[SeminormFamily] = None,
    tol: float = 1e-12,
) -> bool:
    """Whether every point lies in the compact set the witness was certified on."""
    if witness.kind == "asymptotic":
        return True
    fam = fam or SeminormFamily.standard()
    if witness.ball_radius is not None:
        v = fam.get(witness.v_id)
        return all(v(X) <= witness.ball_radius * (1.0 + tol) for X in points)
    K = [np.asarray(X) for X in witness.compact_set]
    for X in points:
        X = np.asarray(X, dtype=float)
        scale = max(1.0, float(np.max(np.abs(X), initial=0.0)))
        if not any(np.max(np.abs(X - k)) <= tol * scale for k in K):
            return False
    return True


def image_nodes(curve, n: int = 33) -> list[np.ndarray]:
    """Sampled image of a curve, used as the compact set of its constricted witness."""
    return curve.sample(n)
