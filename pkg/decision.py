"""
Decision-theoretic view of deficiency.
Log-loss Bayes risks, the risk of predictions restricted to the decoder's
mixture hull, the check that their gap equals the deficiency, and optimal
risks of finite decision problems.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

import config
from core_prob import Channel, ProbVector, ValidationError, conditional_entropy, cross_entropy, joint_from_prior_channel
from projection import deficiency, ri_project

logger = logging.getLogger(__name__)

IDENTITY_TOL = 1e-6


@dataclass
class RiskReport:
    bayes_risk: float
    restricted_risk: float
    gap: float
    per_input_acts: List[ProbVector]


@dataclass
class RiskGapCheck:
    gap: float
    deficiency: float
    abs_difference: float
    consistent: bool


@dataclass
class DecisionProblem:
    """Finite decision problem: loss[y, a] for state y and action a, with a prior on states"""
    actions: Tuple[str, ...]
    loss: np.ndarray
    prior: ProbVector

    def __post_init__(self):
        self.actions = tuple(str(a) for a in self.actions)
        self.loss = np.array(self.loss, dtype=float)
        if self.loss.shape != (self.prior.size, len(self.actions)):
            raise ValidationError(
                f"loss has shape {self.loss.shape}, expected ({self.prior.size}, {len(self.actions)})"
            )
        if not np.isfinite(self.loss).all():
            y, a = np.argwhere(~np.isfinite(self.loss))[0]
            raise ValidationError(f"loss[{y}][{a}] is not finite")


def zero_one_problem(prior: ProbVector) -> DecisionProblem:
    """Guess the state: loss 0 when right, 1 otherwise"""
    n = prior.size
    return DecisionProblem(prior.labels, 1.0 - np.eye(n), prior)


def bayes_risk_logloss(pi: ProbVector, kappa: Channel) -> float:
    """Minimal expected log-loss when predicting Y from X, i.e. H(Y|X)"""
    return conditional_entropy(joint_from_prior_channel(pi, kappa))


def restricted_bayes_risk(pi: ProbVector, kappa: Channel, d: Channel, tol=None, max_iter=None) -> RiskReport:
    """Log-loss risk when every prediction must be a mixture of the rows of d"""
    if d.n_outputs != kappa.n_outputs or pi.size != kappa.n_inputs:
        raise ValidationError(
            f"restricted_bayes_risk dimension mismatch: π {pi.size}, κ {kappa.rows.shape}, d {d.rows.shape}"
        )
    acts = []
    restricted = 0.0
    for x in range(kappa.n_inputs):
        weights, _ = ri_project(kappa.rows[x], d, tol=tol, max_iter=max_iter)
        act = ProbVector(weights.probs @ d.rows, d.output_labels)
        acts.append(act)
        if pi.probs[x] > 0:
            restricted += pi.probs[x] * cross_entropy(kappa.rows[x], act.probs)
    bayes = bayes_risk_logloss(pi, kappa)
    return RiskReport(bayes, restricted, restricted - bayes, acts)


def verify_risk_gap_identity(pi: ProbVector, kappa: Channel, d: Channel, tol=IDENTITY_TOL,
                             projection_tol=None, max_iter=None) -> RiskGapCheck:
    """Compare the log-loss risk gap with δ^π(d, κ), each computed on its own path"""
    report = restricted_bayes_risk(pi, kappa, d, tol=projection_tol, max_iter=max_iter)
    value = deficiency(d, kappa, pi, tol=projection_tol, max_iter=max_iter).value
    if np.isinf(report.gap) and np.isinf(value):
        difference = 0.0
    else:
        difference = abs(report.gap - value)
    if difference > tol:
        logger.warning("Risk gap %.10g and deficiency %.10g differ by %.3g", report.gap, value, difference)
    return RiskGapCheck(report.gap, value, difference, difference <= tol)


def _expected_losses(problem: DecisionProblem, channel: Channel):
    if channel.n_inputs != problem.prior.size:
        raise ValidationError(f"channel reads {channel.n_inputs} states, prior has {problem.prior.size}")
    joint = problem.prior.probs[:, None] * channel.rows
    return joint.T @ problem.loss


def bayes_decision_rule(problem: DecisionProblem, channel: Channel) -> np.ndarray:
    """Action index per observation; ties go to the lowest action index"""
    return np.argmin(_expected_losses(problem, channel), axis=1)


def optimal_risk(problem: DecisionProblem, channel: Channel) -> float:
    """Minimal expected loss attainable from observations of `channel`"""
    return float(_expected_losses(problem, channel).min(axis=1).sum())
