"""
Deficiency of a decoder with respect to a channel, and Blackwell input
sufficiency. Both reduce to per-input problems over the convex hull of the
decoder rows: a KL projection (solved by multiplicative EM) for the
deficiency, and an L1 feasibility LP (solved by the bundled simplex) for
sufficiency.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import rel_entr

import config
from core_prob import LN2, Channel, ProbVector, ValidationError
from lp_solver import solve_lp

logger = logging.getLogger(__name__)

MATCH_TOL = 1e-12


@dataclass
class InputProjection:
    x: int
    projection: ProbVector
    divergence: float


@dataclass
class DeficiencyResult:
    value: float
    encoder: Channel
    per_input: List[InputProjection]

    @property
    def is_finite(self):
        return np.isfinite(self.value)


@dataclass
class BlackwellReport:
    sufficient: bool
    witness_encoder: Optional[Channel]
    max_residual: float
    residuals: np.ndarray


def _as_matrix(atoms):
    if isinstance(atoms, Channel):
        return atoms.rows
    return np.vstack([a.probs if isinstance(a, ProbVector) else np.asarray(a, dtype=float) for a in atoms])


def _matching_atom(target, atoms):
    distance = np.abs(atoms - target[None, :]).max(axis=1)
    matches = np.flatnonzero(distance <= MATCH_TOL)
    return int(matches[0]) if matches.size else -1


def _kl_bits(target, mixture):
    return max(0.0, float(rel_entr(target, mixture).sum() / LN2))


def ri_project(target, atoms, tol=None, max_iter=None, history=None):
    """
    Minimize KL(target ‖ Σ_z w_z·atom_z) over mixture weights w.

    Returns (weights, divergence in bits). EM starts from uniform weights and
    stops once the improvement of one sweep, or the Frank–Wolfe duality bound,
    falls below tol. If `history` is a list, the divergence after every sweep
    is appended to it.
    """
    tol = config.PROJECTION_TOL if tol is None else tol
    max_iter = config.PROJECTION_MAX_ITER if max_iter is None else max_iter
    if tol <= 0:
        raise ValidationError(f"tol must be positive, got {tol}")
    t = target.probs if isinstance(target, ProbVector) else np.asarray(target, dtype=float)
    A = _as_matrix(atoms)
    if A.shape[0] == 0:
        raise ValidationError("atom set is empty")
    if A.shape[1] != t.size:
        raise ValidationError(f"atoms live on {A.shape[1]} symbols, target on {t.size}")
    n_atoms = A.shape[0]

    match = _matching_atom(t, A)
    if match >= 0:
        if history is not None:
            history.append(0.0)
        return ProbVector.point_mass(n_atoms, match), 0.0

    support = t > 0
    if (A[:, support].sum(axis=0) == 0).any():
        if history is not None:
            history.append(float("inf"))
        return ProbVector.uniform(n_atoms), float("inf")

    t_s, A_s = t[support], A[:, support]
    w = np.full(n_atoms, 1.0 / n_atoms)
    mixture = w @ A_s
    divergence = _kl_bits(t_s, mixture)
    if history is not None:
        history.append(divergence)
    for iteration in range(max_iter):
        responsibility = A_s @ (t_s / mixture)
        if (responsibility.max() - 1.0) / LN2 < tol:
            break
        w = w * responsibility
        w /= w.sum()
        mixture = w @ A_s
        updated = _kl_bits(t_s, mixture)
        if history is not None:
            history.append(updated)
        improvement = divergence - updated
        divergence = min(divergence, updated)
        if improvement < tol:
            break
    else:
        logger.debug("ri_project reached max_iter=%d at divergence %.3g", max_iter, divergence)
    return ProbVector(w), divergence


def deficiency(d: Channel, kappa: Channel, pi: ProbVector, tol=None, max_iter=None) -> DeficiencyResult:
    """δ^π(d, κ) = min_e D(κ ‖ d∘e | π), one projection per supported input"""
    if d.n_outputs != kappa.n_outputs:
        raise ValidationError(f"decoder emits {d.n_outputs} symbols, channel emits {kappa.n_outputs}")
    if pi.size != kappa.n_inputs:
        raise ValidationError(f"prior has {pi.size} symbols, channel expects {kappa.n_inputs}")
    encoder_rows = np.full((kappa.n_inputs, d.n_inputs), 1.0 / d.n_inputs)
    per_input = []
    value = 0.0
    for x in np.flatnonzero(pi.support()):
        weights, divergence = ri_project(kappa.rows[x], d, tol=tol, max_iter=max_iter)
        encoder_rows[x] = weights.probs
        per_input.append(InputProjection(int(x), ProbVector(weights.probs @ d.rows), divergence))
        value += pi.probs[x] * divergence
    if not np.isfinite(value):
        logger.info("Deficiency is infinite: absolute continuity fails for some input")
    encoder = Channel(encoder_rows, kappa.input_labels, d.input_labels)
    return DeficiencyResult(max(0.0, float(value)), encoder, per_input)


def _l1_residual(target, D):
    """min ‖Dᵀe − target‖₁ over the simplex, as an LP with split slacks"""
    n_z, n_y = D.shape
    A_eq = np.zeros((n_y + 1, n_z + 2 * n_y))
    A_eq[:n_y, :n_z] = D.T
    A_eq[:n_y, n_z:n_z + n_y] = np.eye(n_y)
    A_eq[:n_y, n_z + n_y:] = -np.eye(n_y)
    A_eq[n_y, :n_z] = 1.0
    b_eq = np.append(target, 1.0)
    c = np.concatenate([np.zeros(n_z), np.ones(2 * n_y)])
    result = solve_lp(c, A_eq, b_eq)
    if result.status != "optimal":
        logger.warning("Blackwell subproblem returned %s", result.status)
        return np.full(n_z, 1.0 / n_z), float("inf")
    weights = result.x[:n_z]
    total = weights.sum()
    weights = weights / total if total > 0 else np.full(n_z, 1.0 / n_z)
    return weights, max(0.0, result.objective)


def blackwell_sufficient(d: Channel, kappa: Channel, tol=None) -> BlackwellReport:
    """Is κ = d∘e for some encoder e? Solved input by input as an L1 feasibility LP."""
    tol = config.BLACKWELL_TOL if tol is None else tol
    if d.n_outputs != kappa.n_outputs:
        raise ValidationError(f"decoder emits {d.n_outputs} symbols, channel emits {kappa.n_outputs}")
    rows = np.zeros((kappa.n_inputs, d.n_inputs))
    residuals = np.zeros(kappa.n_inputs)
    for x in range(kappa.n_inputs):
        match = _matching_atom(kappa.rows[x], d.rows)
        if match >= 0:
            rows[x, match] = 1.0
            residuals[x] = float(np.abs(d.rows[match] - kappa.rows[x]).sum())
        else:
            rows[x], residuals[x] = _l1_residual(kappa.rows[x], d.rows)
    max_residual = float(residuals.max())
    sufficient = bool(max_residual <= tol)
    witness = Channel(rows, kappa.input_labels, d.input_labels) if sufficient else None
    return BlackwellReport(sufficient, witness, max_residual, residuals)
