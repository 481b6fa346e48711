"""
Trade-off curve solvers for discrete encoders Z|X.

Information bottleneck (IB): minimize I(X;Y) − I(Z;Y) + β·I(Z;X) over
Markov representations Y - X - Z, with the self-consistent iteration
e(z|x) ∝ q(z)·2^(−D(p(y|x) ‖ q(y|z))/β).

Deficiency bottleneck (DB): minimize D(κ ‖ d∘e | π) + β·I(Z;X) jointly over
encoder e and decoder d by alternation. Decoder sweeps are EM steps;
encoder sweeps minimize a Jensen majorizer of the cross-entropy plus the
rate, written in closed form through the Wright omega function, and then
re-estimate the marginal of Z.

Curves anneal from the largest β down, warm-starting each point from the
previous encoder.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp, rel_entr, wrightomega

import config
from core_prob import LN2, Channel, Joint2, ProbVector, ValidationError, mi_array

logger = logging.getLogger(__name__)

PERTURBATION = 0.01


@dataclass(frozen=True)
class Schedule:
    """Number of encoder sweeps per decoder sweep; "oneshot" is one of each"""
    encoder_sweeps: int = 1
    sequential: bool = False

    def __post_init__(self):
        if self.encoder_sweeps < 1:
            raise ValidationError(f"schedule needs k >= 1, got {self.encoder_sweeps}")

    @classmethod
    def parse(cls, text):
        text = str(text).strip().lower()
        if text == "oneshot":
            return cls(1, False)
        if text.startswith("seq:"):
            try:
                k = int(text[4:])
            except ValueError:
                raise ValidationError(f"schedule {text!r}: k must be an integer")
            return cls(k, True)
        raise ValidationError(f"schedule must be 'oneshot' or 'seq:k', got {text!r}")

    def __str__(self):
        return f"seq:{self.encoder_sweeps}" if self.sequential else "oneshot"


@dataclass(frozen=True)
class BottleneckConfig:
    beta: float
    z_cardinality: int
    schedule: Schedule = Schedule()
    max_outer_iter: int = config.BOTTLENECK_MAX_OUTER_ITER
    tol: float = config.BOTTLENECK_TOL
    restarts: int = config.BOTTLENECK_RESTARTS
    seed: int = 0

    def __post_init__(self):
        if not self.beta >= 0:
            raise ValidationError(f"beta must be >= 0, got {self.beta}")
        if self.z_cardinality < 1:
            raise ValidationError(f"z_cardinality must be >= 1, got {self.z_cardinality}")
        if self.tol <= 0:
            raise ValidationError(f"tol must be positive, got {self.tol}")
        if self.restarts < 1:
            raise ValidationError(f"restarts must be >= 1, got {self.restarts}")
        if self.max_outer_iter < 1:
            raise ValidationError(f"max_outer_iter must be >= 1, got {self.max_outer_iter}")


@dataclass
class CurvePoint:
    beta: float
    rate: float
    sufficiency: float
    objective: float
    encoder: Channel
    decoder: Channel
    kind: str = "ib"
    converged: bool = True
    iterations: int = 0
    trace: Tuple[float, ...] = field(default_factory=tuple)
    schedule: str = ""


def default_beta_grid(size=None, beta_min=None, beta_max=None):
    size = config.BETA_GRID_SIZE if size is None else size
    beta_min = config.BETA_MIN if beta_min is None else beta_min
    beta_max = config.BETA_MAX if beta_max is None else beta_max
    return np.logspace(np.log10(beta_min), np.log10(beta_max), size)


def _initial_encoder(rng, n_x, n_z):
    e = 1.0 / n_z + PERTURBATION * rng.random((n_x, n_z))
    return e / e.sum(axis=1, keepdims=True)


def _perturb(e, rng):
    e = e + PERTURBATION * rng.random(e.shape)
    return e / e.sum(axis=1, keepdims=True)


def _uniform_unused(decoder, q_z):
    decoder = decoder.copy()
    decoder[q_z <= 0] = 1.0 / decoder.shape[1]
    return decoder


def _improved(previous, current, tol):
    return previous - current > tol * max(1.0, abs(previous))


# ---------------------------------------------------------------------------
# Information bottleneck
# ---------------------------------------------------------------------------

class _IBProblem:
    def __init__(self, joint_xy: Joint2):
        self.p_x = joint_xy.p.sum(axis=1)
        self.p_y_given_x = joint_xy.conditional().rows
        self.joint = joint_xy.p
        self.i_xy = mi_array(joint_xy.p)
        self.observed = self.p_x > 0
        self.x_labels = joint_xy.labels[0]
        self.y_labels = joint_xy.labels[1]

    def decoder(self, e):
        q_z = self.p_x @ e
        joint_zy = e.T @ self.joint
        rows = np.full(joint_zy.shape, 1.0 / joint_zy.shape[1])
        used = q_z > 0
        rows[used] = joint_zy[used] / q_z[used, None]
        return q_z, rows

    def evaluate(self, e, beta):
        """(objective, rate, relevance) of an encoder"""
        rate = mi_array(self.p_x[:, None] * e)
        relevance = mi_array(e.T @ self.joint)
        return self.i_xy - relevance + beta * rate, rate, relevance

    def update(self, e, beta):
        q_z, decoder = self.decoder(e)
        divergence = rel_entr(self.p_y_given_x[:, None, :], decoder[None, :, :]).sum(axis=2) / LN2
        new = e.copy()
        rows = self.observed
        if beta == 0:
            choice = np.argmin(divergence[rows], axis=1)
            hard = np.zeros((choice.size, e.shape[1]))
            hard[np.arange(choice.size), choice] = 1.0
            new[rows] = hard
        else:
            with np.errstate(divide="ignore"):
                logits = np.log(q_z)[None, :] - divergence[rows] * LN2 / beta
            new[rows] = np.exp(logits - logsumexp(logits, axis=1, keepdims=True))
        return new


def _ib_run(problem: _IBProblem, beta, e, max_iter, tol):
    objective = problem.evaluate(e, beta)[0]
    trace = [objective]
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        candidate = problem.update(e, beta)
        value = problem.evaluate(candidate, beta)[0]
        if value > objective:
            converged = True
            break
        improved = _improved(objective, value, tol)
        e, objective = candidate, value
        trace.append(objective)
        if not improved:
            converged = True
            break
    return e, objective, trace, converged, iteration


def _ib_point(problem: _IBProblem, beta, e, trace, converged, iterations):
    objective, rate, relevance = problem.evaluate(e, beta)
    q_z, decoder = problem.decoder(e)
    z_labels = tuple(str(z) for z in range(e.shape[1]))
    return CurvePoint(
        beta=float(beta),
        rate=rate,
        sufficiency=relevance,
        objective=objective,
        encoder=Channel(e, problem.x_labels, z_labels),
        decoder=Channel(_uniform_unused(decoder, q_z), z_labels, problem.y_labels),
        kind="ib",
        converged=converged,
        iterations=iterations,
        trace=tuple(trace),
    )


def _ib_best(problem, cfg: BottleneckConfig, starts):
    best = None
    for e0 in starts:
        result = _ib_run(problem, cfg.beta, e0, cfg.max_outer_iter, cfg.tol)
        if best is None or result[1] < best[1]:
            best = result
    e, _, trace, converged, iterations = best
    if not converged:
        logger.warning("IB at beta=%.4g stopped after %d sweeps without converging", cfg.beta, iterations)
    return _ib_point(problem, cfg.beta, e, trace, converged, iterations)


def ib_solve(joint_xy: Joint2, cfg: BottleneckConfig, init=None) -> CurvePoint:
    """Best of `cfg.restarts` seeded runs (the first one from `init` when given)"""
    problem = _IBProblem(joint_xy)
    rng = np.random.default_rng(cfg.seed)
    n_x = problem.p_x.size
    starts = [_initial_encoder(rng, n_x, cfg.z_cardinality) for _ in range(cfg.restarts)]
    if init is not None:
        starts[0] = np.asarray(init, dtype=float)
    return _ib_best(problem, cfg, starts)


def ib_curve(joint_xy: Joint2, beta_grid, cfg: BottleneckConfig) -> List[CurvePoint]:
    """Annealed IB curve, largest β first, returned sorted by rate"""
    problem = _IBProblem(joint_xy)
    rng = np.random.default_rng(cfg.seed)
    points = []
    previous = None
    for beta in sorted(set(float(b) for b in beta_grid), reverse=True):
        point_cfg = replace(cfg, beta=beta)
        if previous is None:
            point = ib_solve(joint_xy, point_cfg)
        else:
            warm = previous.encoder.rows
            point = _ib_best(problem, point_cfg, [warm.copy(), _perturb(warm, rng)])
        logger.debug("IB beta=%.4g rate=%.6f relevance=%.6f", beta, point.rate, point.sufficiency)
        points.append(point)
        previous = point
    return sorted(points, key=lambda p: (p.rate, -p.beta))


# ---------------------------------------------------------------------------
# Deficiency bottleneck
# ---------------------------------------------------------------------------

def solve_encoder_row(c, r, beta):
    """
    argmin over the simplex of −Σ c_z log e_z + β·KL(e ‖ r).

    Stationarity gives e_z = r_z·exp(ω(a_z + μ) − 1 − μ) with
    a_z = log(c_z/β) − log r_z + 1 and ω the Wright omega function; μ is the
    normalizer, found by root bracketing.
    """
    if beta == 0:
        return c / c.sum()
    active = r > 0
    positive = active & (c > 0)
    a = np.log(c[positive] / beta) - np.log(r[positive]) + 1.0

    def row(mu):
        omega = np.zeros(r.size)
        omega[positive] = np.real(wrightomega(a + mu))
        e = np.zeros(r.size)
        e[active] = r[active] * np.exp(omega[active] - 1.0 - mu)
        return e

    def excess(mu):
        return row(mu).sum() - 1.0

    # ω >= 0 makes Σe >= Σr = 1 at μ = -1
    lo, hi = -1.0, 1.0
    while excess(hi) > 0.0:
        hi *= 2.0
    mu = lo if excess(lo) <= 0.0 else brentq(excess, lo, hi, xtol=1e-14, rtol=1e-14)
    e = row(mu)
    return e / e.sum()


class _DBProblem:
    def __init__(self, pi: ProbVector, kappa: Channel):
        if pi.size != kappa.n_inputs:
            raise ValidationError(f"prior has {pi.size} symbols, channel expects {kappa.n_inputs}")
        self.pi = pi.probs
        self.kappa = kappa.rows
        self.observed = self.pi > 0
        self.i_xy = mi_array(self.pi[:, None] * self.kappa)
        self.x_labels = kappa.input_labels
        self.y_labels = kappa.output_labels

    def distortion(self, e, d):
        """D(κ ‖ d∘e | π) in bits"""
        mixture = e[self.observed] @ d
        per_row = rel_entr(self.kappa[self.observed], mixture).sum(axis=1) / LN2
        if np.isinf(per_row).any():
            return float("inf")
        return max(0.0, float(self.pi[self.observed] @ per_row))

    def rate(self, e):
        return mi_array(self.pi[:, None] * e)

    def objective(self, e, d, beta):
        return self.distortion(e, d) + beta * self.rate(e)

    def bayes_decoder(self, e):
        q_z = self.pi @ e
        joint_zy = e.T @ (self.pi[:, None] * self.kappa)
        rows = np.full(joint_zy.shape, 1.0 / joint_zy.shape[1])
        used = q_z > 0
        rows[used] = joint_zy[used] / q_z[used, None]
        return rows

    def _likelihood_ratio(self, e, d):
        mixture = e @ d
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.kappa > 0, self.kappa / mixture, 0.0)

    def decoder_sweep(self, e, d):
        weight = (self.pi[:, None] * e).T @ self._likelihood_ratio(e, d)
        new = d * weight
        totals = new.sum(axis=1)
        keep = totals > 0
        new[keep] /= totals[keep, None]
        new[~keep] = d[~keep]
        return new

    def encoder_sweep(self, e, d, beta):
        r = self.pi @ e
        responsibility = e * (self._likelihood_ratio(e, d) @ d.T)
        new = e.copy()
        for x in np.flatnonzero(self.observed):
            c = responsibility[x]
            new[x] = solve_encoder_row(c / c.sum(), r, beta)
        return new


def _db_run(problem: _DBProblem, cfg: BottleneckConfig, e, d):
    beta = cfg.beta
    objective = problem.objective(e, d, beta)
    trace = [objective]
    converged = False
    outer = 0
    for outer in range(1, cfg.max_outer_iter + 1):
        start = objective
        for _ in range(cfg.schedule.encoder_sweeps):
            candidate = problem.encoder_sweep(e, d, beta)
            value = problem.objective(candidate, d, beta)
            if value <= objective:
                e, objective = candidate, value
                trace.append(objective)
        candidate = problem.decoder_sweep(e, d)
        value = problem.objective(e, candidate, beta)
        if value <= objective:
            d, objective = candidate, value
            trace.append(objective)
        if not _improved(start, objective, cfg.tol):
            converged = True
            break
    return e, d, objective, trace, converged, outer


def _db_point(problem: _DBProblem, cfg: BottleneckConfig, e, d, trace, converged, iterations):
    distortion = problem.distortion(e, d)
    rate = problem.rate(e)
    q_z = problem.pi @ e
    z_labels = tuple(str(z) for z in range(e.shape[1]))
    return CurvePoint(
        beta=float(cfg.beta),
        rate=rate,
        sufficiency=problem.i_xy - distortion,
        objective=distortion + cfg.beta * rate,
        encoder=Channel(e, problem.x_labels, z_labels),
        decoder=Channel(_uniform_unused(d, q_z), z_labels, problem.y_labels),
        kind="db",
        converged=converged,
        iterations=iterations,
        trace=tuple(trace),
        schedule=str(cfg.schedule),
    )


def _db_best(problem, cfg: BottleneckConfig, starts):
    best = None
    for e0, d0 in starts:
        result = _db_run(problem, cfg, e0, problem.bayes_decoder(e0) if d0 is None else d0)
        if best is None or result[2] < best[2]:
            best = result
    e, d, _, trace, converged, iterations = best
    if not converged:
        logger.warning("DB at beta=%.4g (%s) stopped after %d outer iterations without converging",
                       cfg.beta, cfg.schedule, iterations)
    return _db_point(problem, cfg, e, d, trace, converged, iterations)


def db_solve(pi: ProbVector, kappa: Channel, cfg: BottleneckConfig, init=None) -> CurvePoint:
    """Best of `cfg.restarts` seeded alternations; `init` is an optional (encoder, decoder) pair"""
    problem = _DBProblem(pi, kappa)
    rng = np.random.default_rng(cfg.seed)
    starts = [(_initial_encoder(rng, pi.size, cfg.z_cardinality), None) for _ in range(cfg.restarts)]
    if init is not None:
        starts[0] = (np.asarray(init[0], dtype=float), None if init[1] is None else np.asarray(init[1], dtype=float))
    return _db_best(problem, cfg, starts)


def db_curve(pi: ProbVector, kappa: Channel, beta_grid, cfg: BottleneckConfig) -> List[CurvePoint]:
    """Annealed DB curve for `cfg.schedule`, largest β first, returned sorted by rate"""
    problem = _DBProblem(pi, kappa)
    rng = np.random.default_rng(cfg.seed)
    points = []
    previous = None
    for beta in sorted(set(float(b) for b in beta_grid), reverse=True):
        point_cfg = replace(cfg, beta=beta)
        if previous is None:
            point = db_solve(pi, kappa, point_cfg)
        else:
            e_prev, d_prev = previous.encoder.rows.copy(), previous.decoder.rows.copy()
            point = _db_best(problem, point_cfg, [(e_prev, d_prev), (_perturb(e_prev, rng), None)])
        logger.debug("DB beta=%.4g rate=%.6f sufficiency=%.6f", beta, point.rate, point.sufficiency)
        points.append(point)
        previous = point
    return sorted(points, key=lambda p: (p.rate, -p.beta))


def db_schedule_comparison(pi: ProbVector, kappa: Channel, beta_grid, cfg: BottleneckConfig,
                           schedules: Sequence) -> Dict[str, List[CurvePoint]]:
    """One annealed DB curve per schedule, all from the same seed"""
    curves = {}
    for schedule in schedules:
        schedule = schedule if isinstance(schedule, Schedule) else Schedule.parse(schedule)
        curves[str(schedule)] = db_curve(pi, kappa, beta_grid, replace(cfg, schedule=schedule))
    return curves


def distortion_of(pi: ProbVector, kappa: Channel, encoder: Channel, decoder: Channel):
    """D(κ ‖ d∘e | π) recomputed from a solver's returned channels"""
    return _DBProblem(pi, kappa).distortion(encoder.rows, decoder.rows)
