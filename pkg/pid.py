"""
Bivariate information decompositions of I(Y; X, Z).

The classical decomposition is built on the unique information
UI(Y;X\\Z) = min over couplings Q with P's (Y,X) and (Y,Z) marginals of
I_Q(Y;X|Z), found with Frank–Wolfe over per-y transportation polytopes.
The deficiency-induced decomposition replaces UI by the deficiencies of the
two reverse channels P_{Y|Z} and P_{Y|X}.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

import config
from core_prob import (
    Joint3,
    ValidationError,
    cmi_array,
    conditional_mutual_information,
    mutual_information,
)
from lp_solver import solve_lp
from projection import DeficiencyResult, deficiency

logger = logging.getLogger(__name__)

LOG_FLOOR = -1e3
STEP_RULES = ("pairwise", "open_loop")
MEMBERSHIP_TOL = 1e-9
HOLD_TOL = 1e-6


@dataclass
class CouplingFamily:
    """Per-y couplings Q(x, z | y) for every y with P(y) > 0"""
    y_index: np.ndarray
    per_y: np.ndarray
    p_y: np.ndarray
    gap: float = 0.0
    iterations: int = 0
    converged: bool = True

    def joint(self, shape) -> np.ndarray:
        q = np.zeros(shape)
        q[self.y_index] = self.p_y[:, None, None] * self.per_y
        return q

    def is_member(self, P: Joint3, tol=MEMBERSHIP_TOL) -> bool:
        p = P.p[self.y_index] / self.p_y[:, None, None]
        totals_ok = np.allclose(self.per_y.sum(axis=(1, 2)), 1.0, atol=tol)
        rows_ok = np.allclose(self.per_y.sum(axis=2), p.sum(axis=2), atol=tol)
        cols_ok = np.allclose(self.per_y.sum(axis=1), p.sum(axis=1), atol=tol)
        return bool(totals_ok and rows_ok and cols_ok and (self.per_y >= -tol).all())


@dataclass
class PidTerms:
    ui_x: float
    ui_z: float
    si: float
    ci: float
    kind: str  # "classical" or "deficiency_induced"
    witness: object = None
    degenerate: bool = False

    def values(self) -> Dict[str, float]:
        return {"ui_x": self.ui_x, "ui_z": self.ui_z, "si": self.si, "ci": self.ci}

    def total(self):
        return self.ui_x + self.ui_z + self.si + self.ci


@dataclass
class DecompositionComparison:
    classical: PidTerms
    deficiency_induced: PidTerms
    slacks: Dict[str, float] = field(default_factory=dict)
    holds: Dict[str, bool] = field(default_factory=dict)
    near_equality: Dict[str, bool] = field(default_factory=dict)


@dataclass
class _Marginals:
    i_yx: float
    i_yz: float
    i_yx_given_z: float
    i_yz_given_x: float


def _marginal_informations(P: Joint3) -> _Marginals:
    return _Marginals(
        i_yx=mutual_information(P.pair("Y", "X")),
        i_yz=mutual_information(P.pair("Y", "Z")),
        i_yx_given_z=conditional_mutual_information(P, ("Y", "X"), "Z"),
        i_yz_given_x=conditional_mutual_information(P, ("Y", "Z"), "X"),
    )


class CouplingPolytope:
    """The product over y of transportation polytopes {Q_y : rows P(x|y), columns P(z|y)}"""

    def __init__(self, P: Joint3):
        p_y = P.p.sum(axis=(1, 2))
        self.y_index = np.flatnonzero(p_y > 0)
        self.p_y = p_y[self.y_index]
        conditional = P.p[self.y_index] / self.p_y[:, None, None]
        self.rows = conditional.sum(axis=2)
        self.cols = conditional.sum(axis=1)
        self.shape = (self.y_index.size,) + P.p.shape[1:]
        self.p_conditional = conditional

    def product_coupling(self):
        return self.rows[:, :, None] * self.cols[:, None, :]

    def is_point(self):
        fixed = ((self.rows > 0).sum(axis=1) <= 1) | ((self.cols > 0).sum(axis=1) <= 1)
        return bool(fixed.all())

    def objective(self, Q):
        """I_Q(Y;X|Z) in bits"""
        return cmi_array(self.p_y[:, None, None] * np.maximum(Q, 0.0))

    def gradient(self, Q):
        q = self.p_y[:, None, None] * np.maximum(Q, 0.0)
        q_xz = np.broadcast_to(q.sum(axis=0, keepdims=True), q.shape)
        log_ratio = np.zeros(q.shape)
        both = (q > 0) & (q_xz > 0)
        log_ratio[both] = np.log2(q[both] / q_xz[both])
        log_ratio[(q <= 0) & (q_xz > 0)] = LOG_FLOOR
        return self.p_y[:, None, None] * np.maximum(log_ratio, LOG_FLOOR)

    def vertex(self, G):
        """Vertex minimizing ⟨G, S⟩, one transportation LP per y"""
        S = np.zeros(self.shape)
        for k in range(self.shape[0]):
            xs = np.flatnonzero(self.rows[k] > 0)
            zs = np.flatnonzero(self.cols[k] > 0)
            if xs.size == 1 or zs.size == 1:
                S[k][np.ix_(xs, zs)] = np.outer(self.rows[k, xs], self.cols[k, zs])
                continue
            n_x, n_z = xs.size, zs.size
            A_eq = np.zeros((n_x + n_z, n_x * n_z))
            for i in range(n_x):
                A_eq[i, i * n_z:(i + 1) * n_z] = 1.0
            for j in range(n_z):
                A_eq[n_x + j, j::n_z] = 1.0
            b_eq = np.concatenate([self.rows[k, xs], self.cols[k, zs]])
            result = solve_lp(G[k][np.ix_(xs, zs)].ravel(), A_eq, b_eq)
            if result.status != "optimal":
                raise RuntimeError(f"transportation LP for y={self.y_index[k]} returned {result.status}")
            S[k][np.ix_(xs, zs)] = result.x.reshape(n_x, n_z)
        return S


def _line_search(polytope, Q, direction, max_step, current):
    """Minimize the objective on Q + γ·direction for γ in [0, max_step]"""
    def phi(gamma):
        return polytope.objective(Q + gamma * direction)

    result = minimize_scalar(phi, bounds=(0.0, max_step), method="bounded",
                             options={"xatol": 1e-12 * max(1.0, max_step)})
    best_gamma, best_value = 0.0, current
    for gamma, value in ((float(result.x), float(result.fun)), (max_step, phi(max_step))):
        if value < best_value:
            best_gamma, best_value = gamma, value
    return best_gamma, best_value


class _ActiveSet:
    def __init__(self, start):
        self.atoms = [start]
        self.weights = [1.0]

    def find(self, S):
        for i, atom in enumerate(self.atoms):
            if np.abs(atom - S).max() <= 1e-12:
                return i
        return -1

    def add(self, S, weight):
        i = self.find(S)
        if i >= 0:
            self.weights[i] += weight
        else:
            self.atoms.append(S)
            self.weights.append(weight)

    def away_atom(self, G):
        scores = [float((G * atom).sum()) for atom in self.atoms]
        return int(np.argmax(scores))

    def pairwise_step(self, away, S, gamma, max_step):
        if gamma >= max_step:
            del self.atoms[away]
            del self.weights[away]
        else:
            self.weights[away] -= gamma
        self.add(S, gamma)

    def frank_wolfe_step(self, S, gamma):
        self.weights = [w * (1.0 - gamma) for w in self.weights]
        self.add(S, gamma)
        keep = [i for i, w in enumerate(self.weights) if w > 0.0]
        self.atoms = [self.atoms[i] for i in keep]
        self.weights = [self.weights[i] for i in keep]


def unique_information(P: Joint3, tol=None, max_iter=None, step_rule=None, history=None):
    """
    UI(Y;X\\Z) = min_{Q ∈ Δ_P} I_Q(Y;X|Z).

    Returns (ui, witness). The iterate starts at the better of the
    conditionally independent coupling and P itself; `step_rule` is
    "pairwise" (line search along pairwise directions) or "open_loop"
    (γ = 2/(t+2), halved until the objective decreases). Accepted objective
    values are appended to `history` when it is a list.
    """
    tol = config.UI_TOL if tol is None else tol
    max_iter = config.UI_MAX_ITER if max_iter is None else max_iter
    step_rule = config.UI_STEP_RULE if step_rule is None else step_rule
    if step_rule not in STEP_RULES:
        raise ValidationError(f"step_rule must be one of {STEP_RULES}, got {step_rule!r}")

    polytope = CouplingPolytope(P)
    candidates = [polytope.product_coupling(), polytope.p_conditional.copy()]
    values = [polytope.objective(Q) for Q in candidates]
    start = int(np.argmin(values))
    Q, f = candidates[start], values[start]
    if history is not None:
        history.append(f)

    gap, converged, iteration = 0.0, True, 0
    if not polytope.is_point():
        active = _ActiveSet(Q)
        converged = False
        for iteration in range(1, max_iter + 1):
            G = polytope.gradient(Q)
            S = polytope.vertex(G)
            gap = float((G * (Q - S)).sum())
            if gap < tol:
                converged = True
                break

            if step_rule == "pairwise":
                away = active.away_atom(G)
                max_step = active.weights[away]
                direction = S - active.atoms[away]
                gamma, f_new = _line_search(polytope, Q, direction, max_step, f)
                if gamma > 0.0:
                    active.pairwise_step(away, S, gamma, max_step)
                else:
                    direction = S - Q
                    gamma, f_new = _line_search(polytope, Q, direction, 1.0, f)
                    if gamma > 0.0:
                        active.frank_wolfe_step(S, gamma)
            else:
                direction = S - Q
                gamma = 2.0 / (iteration + 2.0)
                f_new = polytope.objective(Q + gamma * direction)
                halvings = 0
                while f_new >= f and halvings < 40:
                    gamma *= 0.5
                    f_new = polytope.objective(Q + gamma * direction)
                    halvings += 1
                if f_new >= f:
                    gamma = 0.0

            if gamma <= 0.0:
                logger.debug("Frank-Wolfe stalled at gap %.3g after %d iterations", gap, iteration)
                converged = gap < 10 * tol
                break
            Q = np.maximum(Q + gamma * direction, 0.0)
            f = f_new
            if history is not None:
                history.append(f)
        if not converged:
            logger.warning("unique_information did not reach gap %.1e (gap %.3g after %d iterations)",
                           tol, gap, iteration)

    witness = CouplingFamily(polytope.y_index, Q, polytope.p_y, gap, iteration, converged)
    return f, witness


def classical_decomposition(P: Joint3, tol=None, max_iter=None, step_rule=None) -> PidTerms:
    """SI = I(Y;X) − UI_X, CI = I(Y;X|Z) − UI_X, UI_Z = I(Y;Z) − SI"""
    m = _marginal_informations(P)
    ui, witness = unique_information(P, tol=tol, max_iter=max_iter, step_rule=step_rule)
    lower = max(0.0, m.i_yx - m.i_yz)
    upper = max(lower, min(m.i_yx, m.i_yx_given_z))
    ui_x = min(max(ui, lower), upper)
    si = m.i_yx - ui_x
    ci = m.i_yx_given_z - ui_x
    ui_z = m.i_yz - si
    return PidTerms(ui_x, ui_z, si, ci, "classical", witness)


def swap_xz(P: Joint3) -> Joint3:
    return P.swap_xz()


def directed_deficiency(P: Joint3, tol=None, max_iter=None) -> DeficiencyResult:
    """δ^π(P_{Y|Z}, P_{Y|X}) with π = P_X, decoder rows restricted to observed z"""
    return deficiency(
        P.channel_y_given("Z", restrict_support=True),
        P.channel_y_given("X"),
        P.marginal("X"),
        tol=tol,
        max_iter=max_iter,
    )


def deficiency_decomposition(P: Joint3, tol=None, max_iter=None) -> PidTerms:
    """Decomposition assembled from the deficiencies δ^X and δ^Z of the two reverse channels"""
    m = _marginal_informations(P)
    result_x = directed_deficiency(P, tol, max_iter)
    result_z = directed_deficiency(swap_xz(P), tol, max_iter)
    degenerate = not (result_x.is_finite and result_z.is_finite)
    if degenerate:
        logger.warning("Deficiency-induced decomposition is degenerate: δX=%s, δZ=%s",
                       result_x.value, result_z.value)

    delta_x = min(max(result_x.value, 0.0), min(m.i_yx, m.i_yx_given_z))
    delta_z = min(max(result_z.value, 0.0), min(m.i_yz, m.i_yz_given_x))

    ui_x = max(delta_x, delta_z + m.i_yx - m.i_yz)
    ui_z = max(delta_z, delta_x + m.i_yz - m.i_yx)
    si = min(m.i_yx - delta_x, m.i_yz - delta_z)
    ci = min(m.i_yx_given_z - delta_x, m.i_yz_given_x - delta_z)
    return PidTerms(ui_x, ui_z, si, ci, "deficiency_induced", (result_x, result_z), degenerate)


def compare_decompositions(P: Joint3, tol=HOLD_TOL, ui_tol=None, ui_max_iter=None, step_rule=None,
                           projection_tol=None, projection_max_iter=None) -> DecompositionComparison:
    """
    Slacks of ŨI_X ≤ UI_X, ŨI_Z ≤ UI_Z, S̃I ≥ SI and C̃I ≥ CI; each slack is
    nonnegative when its inequality holds and flagged as near-equality below tol.
    """
    classical = classical_decomposition(P, tol=ui_tol, max_iter=ui_max_iter, step_rule=step_rule)
    induced = deficiency_decomposition(P, tol=projection_tol, max_iter=projection_max_iter)
    slacks = {
        "ui_x": classical.ui_x - induced.ui_x,
        "ui_z": classical.ui_z - induced.ui_z,
        "si": induced.si - classical.si,
        "ci": induced.ci - classical.ci,
    }
    return DecompositionComparison(
        classical,
        induced,
        slacks,
        {name: slack >= -HOLD_TOL for name, slack in slacks.items()},
        {name: abs(slack) < tol for name, slack in slacks.items()},
    )
