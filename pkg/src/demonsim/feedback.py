"""Discrete measure-then-kick extraction cycle with two-point bookkeeping.

One trial of the protocol:

1. draw the initial qubit state from the thermal distribution and note the
   first projective energy outcome i
2. weak (or projective) readout of sigma_z with a Gaussian pointer, giving
   the demon's outcome k by thresholding the pointer value
3. an immediate verification projective measurement, outcome y
4. a pi pulse conditioned on k alone: the qubit is flipped when k = e
5. closing projective energy measurement, giving e_f and the extracted work

Between stages the qubit can relax toward its initialization temperature:
the config's t1_ratio is the total sequence time over T1, split evenly over
the three idle gaps (after the first projective measurement, between the two
readouts, and between the pulse and the closing measurement).

Because every stage is diagonal in the energy basis, the whole trial is a
classical Markov chain and all outcome probabilities have closed forms; the
same chain drives both the sampler and the exact enumeration used to pin the
estimators in tests. The information weight of a trial is

    i_qc = ln p(y | k) - ln p(i)

with p(y | k) taken from the model up to the verification measurement. Decay
in the last gap is deliberately absent from that conditional: it happens
after both readouts, so no record can see it, and its energy cost rides into
the closing measurement unannounced. That untracked cost is what pushes the
generalized estimator above one at small but finite t1_ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import streams, thermo
from .qcore import DensityMatrix, QUBIT, thermal_qubit_population
from .records import IrreversibleEventError, TPMRecord

_STATES = ("g", "e")


def _flip(state: str) -> str:
    return "e" if state == "g" else "g"


@dataclass(frozen=True)
class GaussianMeasurementModel:
    """Gaussian-pointer readout of sigma_z.

    The pointer value V is normal with unit variance centered on -s/2 for
    |g> and +s/2 for |e>, where s is `strength`; s**2 / 4 is the product of
    the effective measurement rate and the integration time, so s = 0 is no
    measurement and s = inf recovers a projective one. The demon's binary
    outcome is k = e when V exceeds `threshold`.
    """

    strength: float
    threshold: float = 0.0

    def __post_init__(self):
        if not self.strength >= 0.0:
            raise ValueError(f"measurement strength must be >= 0, got {self.strength}")

    def p_excited_outcome(self, state: str) -> float:
        """P(k = e | true state), marginal over the pointer."""
        if state not in _STATES:
            raise ValueError(f"unknown qubit state {state!r}")
        if math.isinf(self.strength):
            return 1.0 if state == "e" else 0.0
        center = 0.5 * self.strength if state == "e" else -0.5 * self.strength
        return float(ndtr(center - self.threshold))


def weak_measure(
    rho: DensityMatrix, model: GaussianMeasurementModel, rng: np.random.Generator
) -> tuple[float, DensityMatrix]:
    """Sample a pointer value and return it with the conditioned state.

    The Kraus element for record V is diagonal,
    M_V propto diag(exp(-(V + s/2)^2 / 4), exp(-(V - s/2)^2 / 4)), so V is
    drawn from the population-weighted mixture of the two unit-variance
    Gaussians and the posterior follows from Bayes weights. At infinite
    strength this degenerates to a projective measurement and the returned
    pointer value is the marker -1.0 or +1.0.
    """
    if rho.space != QUBIT:
        raise ValueError("weak_measure acts on a bare qubit state")
    p_g = float(np.real(rho.entries[0, 0]))
    p_e = float(np.real(rho.entries[1, 1]))
    if math.isinf(model.strength):
        if rng.uniform() < p_e:
            return 1.0, DensityMatrix(QUBIT, np.diag([0.0, 1.0]).astype(complex))
        return -1.0, DensityMatrix(QUBIT, np.diag([1.0, 0.0]).astype(complex))
    s = model.strength
    center = 0.5 * s if rng.uniform() < p_e else -0.5 * s
    v = center + rng.standard_normal()
    w_g = p_g * math.exp(-0.5 * (v + 0.5 * s) ** 2)
    w_e = p_e * math.exp(-0.5 * (v - 0.5 * s) ** 2)
    k_g = math.exp(-0.25 * (v + 0.5 * s) ** 2)
    k_e = math.exp(-0.25 * (v - 0.5 * s) ** 2)
    post = np.array(
        [
            [k_g * rho.entries[0, 0] * k_g, k_g * rho.entries[0, 1] * k_e],
            [k_e * rho.entries[1, 0] * k_g, k_e * rho.entries[1, 1] * k_e],
        ],
        dtype=complex,
    )
    return v, DensityMatrix(QUBIT, post / (w_g + w_e))


@dataclass(frozen=True)
class FeedbackDemonConfig:
    """Run parameters for the discrete protocol.

    beta_homega : dimensionless inverse temperature beta hbar omega_q, > 0
    model : pointer readout model
    t1_ratio : total sequence time over T1; 0 disables relaxation
    trials : number of independent trials
    seed : master seed for the per-trial streams
    """

    beta_homega: float
    model: GaussianMeasurementModel
    t1_ratio: float = 0.01
    trials: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not self.beta_homega > 0.0:
            raise ValueError(f"beta_homega must be > 0, got {self.beta_homega}")
        if self.t1_ratio < 0.0:
            raise ValueError(f"t1_ratio must be >= 0, got {self.t1_ratio}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")

    @property
    def p_excited(self) -> float:
        return thermal_qubit_population(self.beta_homega)


@dataclass(frozen=True)
class ChainTables:
    """Closed-form outcome probabilities of one trial's classical chain.

    p_i : initial thermal distribution over {g, e}
    gap_mix : relaxation mixing weight 1 - exp(-t1_ratio / 3) of each gap
    p_k : marginal over the demon's outcome
    p_y_given_k : conditional of the verification outcome on the demon's
    p_ky : joint over (k, y)
    """

    p_i: dict
    gap_mix: float
    p_k: dict
    p_y_given_k: dict
    p_ky: dict


def _gad_step(dist: dict, mix: float, p_e_th: float) -> dict:
    """Push a classical distribution one relaxation gap toward thermal."""
    return {
        "g": (1.0 - mix) * dist["g"] + mix * (1.0 - p_e_th) * (dist["g"] + dist["e"]),
        "e": (1.0 - mix) * dist["e"] + mix * p_e_th * (dist["g"] + dist["e"]),
    }


def _gad_transition(mix: float, p_e_th: float) -> dict:
    """T[(to, frm)] for one relaxation gap."""
    return {
        ("g", "g"): 1.0 - mix * p_e_th,
        ("e", "g"): mix * p_e_th,
        ("g", "e"): mix * (1.0 - p_e_th),
        ("e", "e"): 1.0 - mix * (1.0 - p_e_th),
    }


def chain_tables(cfg: FeedbackDemonConfig) -> ChainTables:
    p_e = cfg.p_excited
    p_i = {"g": 1.0 - p_e, "e": p_e}
    mix = -math.expm1(-cfg.t1_ratio / 3.0)
    t = _gad_transition(mix, p_e)
    p_ky = {(k, y): 0.0 for k in _STATES for y in _STATES}
    for i in _STATES:
        for s1 in _STATES:
            w1 = p_i[i] * t[(s1, i)]
            if w1 == 0.0:
                continue
            pk_e = cfg.model.p_excited_outcome(s1)
            for k, pk in (("e", pk_e), ("g", 1.0 - pk_e)):
                for y in _STATES:
                    p_ky[(k, y)] += w1 * pk * t[(y, s1)]
    p_k = {k: p_ky[(k, "g")] + p_ky[(k, "e")] for k in _STATES}
    p_y_given_k = {
        (y, k): (p_ky[(k, y)] / p_k[k] if p_k[k] > 0.0 else 0.0)
        for k in _STATES
        for y in _STATES
    }
    return ChainTables(p_i=p_i, gap_mix=mix, p_k=p_k, p_y_given_k=p_y_given_k, p_ky=p_ky)


def i_qc_discrete(i: str, k: str, y: str, tables: ChainTables) -> float:
    """Information weight ln p(y|k) - ln p(i) of one trial, in nats."""
    p_cond = tables.p_y_given_k[(y, k)]
    if p_cond == 0.0:
        raise IrreversibleEventError(
            f"outcome y={y} has zero model probability after k={k}"
        )
    return math.log(p_cond) - math.log(tables.p_i[i])


def eps_fb(cfg: FeedbackDemonConfig) -> float:
    """Probability that the verification disagrees with the demon, P(y != k).

    Without relaxation this reduces to the Gaussian overlap ndtr(-s/2) for a
    centered threshold: 0 for a projective readout, 1/2 at zero strength.
    """
    t = chain_tables(cfg)
    return t.p_ky[("g", "e")] + t.p_ky[("e", "g")]


def _apply_gad(state: str, mix: float, p_e_th: float, u: float) -> str:
    if state == "g":
        return "e" if u < mix * p_e_th else "g"
    return "g" if u < mix * (1.0 - p_e_th) else "e"


def run_feedback_demon(
    cfg: FeedbackDemonConfig, start: int = 0, count: int | None = None
) -> list[TPMRecord]:
    """Sample trials [start, start + count) of the protocol.

    Each trial consumes a fixed draw layout from its own stream (initial
    state, first gap, pointer noise, second gap, third gap), so any sharding
    of the trial range reproduces exactly the same records.
    """
    if count is None:
        count = cfg.trials - start
    if start < 0 or count < 0 or start + count > cfg.trials:
        raise ValueError(f"trial range [{start}, {start + count}) outside [0, {cfg.trials})")
    p_e = cfg.p_excited
    tables = chain_tables(cfg)
    mix = tables.gap_mix
    s = cfg.model.strength
    projective = math.isinf(s)
    records = []
    for idx in range(start, start + count):
        rng = streams.trial_rng(cfg.seed, streams.FEEDBACK, idx)
        u_i, u_g1 = rng.uniform(size=2)
        xi = rng.standard_normal()
        u_g2, u_g3 = rng.uniform(size=2)
        i = "e" if u_i < p_e else "g"
        s1 = _apply_gad(i, mix, p_e, u_g1)
        if projective:
            k = s1
        else:
            v = xi + (0.5 * s if s1 == "e" else -0.5 * s)
            k = "e" if v > cfg.model.threshold else "g"
        y = _apply_gad(s1, mix, p_e, u_g2)
        after_pulse = _flip(y) if k == "e" else y
        f = _apply_gad(after_pulse, mix, p_e, u_g3)
        e_i = 1.0 if i == "e" else 0.0
        e_f = 1.0 if f == "e" else 0.0
        try:
            info = i_qc_discrete(i, k, y, tables)
            records.append(
                TPMRecord(e_i=e_i, e_f=e_f, w=e_i - e_f, i_qc=info, i=i, k=k, y=y)
            )
        except IrreversibleEventError:
            records.append(
                TPMRecord(
                    e_i=e_i, e_f=e_f, w=e_i - e_f, i_qc=math.nan,
                    i=i, k=k, y=y, irreversible=True,
                )
            )
    return records


def lambda_fb_exact(cfg: FeedbackDemonConfig) -> float:
    """Backward probability mass on outcomes the forward model forbids.

    For every (k, y) with p(y | k) = 0 forward, accumulate the probability
    that the time-reversed protocol (thermal initialization, then the k-
    conditioned pulse undone) lands on y. Weak readouts leave every outcome
    possible and give exactly zero; only the projective, relaxation-free
    limit has forbidden pairs.
    """
    tables = chain_tables(cfg)
    p_e = cfg.p_excited
    p_th = {"g": 1.0 - p_e, "e": p_e}
    total = 0.0
    for k in _STATES:
        for y in _STATES:
            if tables.p_y_given_k[(y, k)] == 0.0 and tables.p_k[k] > 0.0:
                backward = p_th[_flip(y)] if k == "e" else p_th[y]
                total += tables.p_k[k] * backward
    return total


@dataclass(frozen=True)
class JarzynskiEstimate:
    """Fluctuation-relation estimators over a batch of records."""

    generalized: thermo.EstimatorResult
    plain: thermo.EstimatorResult
    lambda_fb: float
    n_flagged: int


def jarzynski_feedback(
    records, beta_homega: float, config: FeedbackDemonConfig | None = None
) -> JarzynskiEstimate:
    """Evaluate <exp(beta W - i_qc)> and <exp(beta W)> over trial records.

    Flagged (zero-model-probability) trials carry no finite information
    weight; they are excluded from the generalized average and reported in
    n_flagged, while the plain average uses every record. The absolutely
    irreversible mass lambda_fb is a model quantity, not a sample one, so it
    is computed exactly from the config when one is given and reported as 0
    otherwise.
    """
    ok = [r for r in records if not r.irreversible]
    generalized = thermo.exp_average([beta_homega * r.w - r.i_qc for r in ok])
    plain = thermo.exp_average([beta_homega * r.w for r in records])
    lam = lambda_fb_exact(config) if config is not None else 0.0
    return JarzynskiEstimate(
        generalized=generalized,
        plain=plain,
        lambda_fb=lam,
        n_flagged=len(records) - len(ok),
    )


@dataclass(frozen=True)
class FeedbackEnumeration:
    """Exact expectation values of the trial chain, no sampling involved."""

    generalized: float
    plain: float
    lambda_fb: float
    avg_info: float
    eps_fb: float
    flagged_mass: float


def enumerate_feedback(cfg: FeedbackDemonConfig) -> FeedbackEnumeration:
    """Sum the estimators exactly over all paths of the classical chain.

    This is the ground truth the Monte Carlo sampler is checked against in
    the tests; it shares only the closed-form outcome probabilities with the
    sampler, not the sampling path.
    """
    beta = cfg.beta_homega
    p_e = cfg.p_excited
    tables = chain_tables(cfg)
    mix = tables.gap_mix
    t = _gad_transition(mix, p_e)
    generalized = 0.0
    plain = 0.0
    avg_info = 0.0
    flagged = 0.0
    for i in _STATES:
        for s1 in _STATES:
            w1 = tables.p_i[i] * t[(s1, i)]
            if w1 == 0.0:
                continue
            pk_e = cfg.model.p_excited_outcome(s1)
            for k, pk in (("e", pk_e), ("g", 1.0 - pk_e)):
                if pk == 0.0:
                    continue
                for y in _STATES:
                    w2 = w1 * pk * t[(y, s1)]
                    if w2 == 0.0:
                        continue
                    after = _flip(y) if k == "e" else y
                    for f in _STATES:
                        w3 = w2 * t[(f, after)]
                        if w3 == 0.0:
                            continue
                        w_extr = (1.0 if i == "e" else 0.0) - (1.0 if f == "e" else 0.0)
                        plain += w3 * math.exp(beta * w_extr)
                        p_cond = tables.p_y_given_k[(y, k)]
                        if p_cond == 0.0:
                            flagged += w3
                            continue
                        info = math.log(p_cond) - math.log(tables.p_i[i])
                        generalized += w3 * math.exp(beta * w_extr - info)
                        avg_info += w3 * info
    return FeedbackEnumeration(
        generalized=generalized,
        plain=plain,
        lambda_fb=lambda_fb_exact(cfg),
        avg_info=avg_info,
        eps_fb=eps_fb(cfg),
        flagged_mass=flagged,
    )
