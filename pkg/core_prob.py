"""
Finite-alphabet probability objects and information measures.
Every quantity is reported in bits, with 0·log 0 = 0. Objects are immutable
once constructed: inputs within NORMALIZATION_TOL of a valid distribution are
renormalized, anything further away is rejected with a ValidationError.
"""
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import entr, rel_entr, xlogy

import config

LN2 = np.log(2.0)
AXES = ("Y", "X", "Z")


class ValidationError(ValueError):
    """Raised when an input is not a valid distribution, channel or joint"""


def _frozen(array):
    array = np.ascontiguousarray(array, dtype=float)
    array.setflags(write=False)
    return array


def _default_labels(n):
    return tuple(str(i) for i in range(n))


def _check_labels(labels, n, name):
    if labels is None:
        return _default_labels(n)
    labels = tuple(str(label) for label in labels)
    if len(labels) != n:
        raise ValidationError(f"{name} has {len(labels)} labels for {n} symbols")
    return labels


def _check_entries(values, name, tol):
    values = np.array(values, dtype=float)
    if values.size == 0:
        raise ValidationError(f"{name} is empty")
    bad = np.flatnonzero(~np.isfinite(values.ravel()))
    if bad.size:
        raise ValidationError(f"{name}[{int(bad[0])}] is not finite")
    bad = np.flatnonzero(values.ravel() < -tol)
    if bad.size:
        raise ValidationError(f"{name}[{int(bad[0])}] is negative ({values.ravel()[bad[0]]:.3g})")
    return np.clip(values, 0.0, None)


def _normalize_rows(rows, name, tol):
    sums = rows.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        raise ValidationError(f"{name}[{int(bad[0])}] sums to {sums[bad[0]]:.12g}, expected 1")
    return rows / sums[:, None]


@dataclass(frozen=True, eq=False)
class ProbVector:
    """A distribution on a finite alphabet"""
    probs: np.ndarray
    labels: Optional[Tuple[str, ...]] = None
    tol: float = field(default=config.NORMALIZATION_TOL, repr=False)

    def __post_init__(self):
        probs = _check_entries(self.probs, "probs", self.tol)
        if probs.ndim != 1:
            raise ValidationError(f"probs must be one-dimensional, got shape {probs.shape}")
        probs = _normalize_rows(probs[None, :], "probs", self.tol)[0]
        object.__setattr__(self, "probs", _frozen(probs))
        object.__setattr__(self, "labels", _check_labels(self.labels, probs.size, "probs"))

    @classmethod
    def uniform(cls, n, labels=None):
        return cls(np.full(n, 1.0 / n), labels)

    @classmethod
    def point_mass(cls, n, index, labels=None):
        probs = np.zeros(n)
        probs[index] = 1.0
        return cls(probs, labels)

    @property
    def size(self):
        return self.probs.size

    def __len__(self):
        return self.probs.size

    def support(self):
        return self.probs > 0


@dataclass(frozen=True, eq=False)
class Channel:
    """A row-stochastic matrix: rows indexed by the input, columns by the output"""
    rows: np.ndarray
    input_labels: Optional[Tuple[str, ...]] = None
    output_labels: Optional[Tuple[str, ...]] = None
    tol: float = field(default=config.NORMALIZATION_TOL, repr=False)

    def __post_init__(self):
        rows = _check_entries(self.rows, "rows", self.tol)
        if rows.ndim != 2:
            raise ValidationError(f"rows must be a matrix, got shape {rows.shape}")
        rows = _normalize_rows(rows, "rows", self.tol)
        object.__setattr__(self, "rows", _frozen(rows))
        object.__setattr__(self, "input_labels", _check_labels(self.input_labels, rows.shape[0], "input_labels"))
        object.__setattr__(self, "output_labels", _check_labels(self.output_labels, rows.shape[1], "output_labels"))

    @property
    def n_inputs(self):
        return self.rows.shape[0]

    @property
    def n_outputs(self):
        return self.rows.shape[1]

    def row(self, x):
        return ProbVector(self.rows[x], self.output_labels)

    def restrict_inputs(self, keep):
        keep = np.asarray(keep)
        if keep.dtype == bool:
            keep = np.flatnonzero(keep)
        labels = tuple(self.input_labels[i] for i in keep)
        return Channel(self.rows[keep], labels, self.output_labels)


@dataclass(frozen=True, eq=False)
class Joint2:
    """A joint distribution over two named axes, p[a, b]"""
    p: np.ndarray
    axes: Tuple[str, str] = ("X", "Y")
    labels: Optional[Tuple[Tuple[str, ...], Tuple[str, ...]]] = None
    tol: float = field(default=config.NORMALIZATION_TOL, repr=False)

    def __post_init__(self):
        p = _check_entries(self.p, "values", self.tol)
        if p.ndim != 2:
            raise ValidationError(f"joint2 values must form a matrix, got shape {p.shape}")
        total = p.sum()
        if abs(total - 1.0) > self.tol:
            raise ValidationError(f"values sum to {total:.12g}, expected 1")
        p = p / total
        labels = self.labels or (None, None)
        object.__setattr__(self, "p", _frozen(p))
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "labels", (
            _check_labels(labels[0], p.shape[0], f"labels[{self.axes[0]}]"),
            _check_labels(labels[1], p.shape[1], f"labels[{self.axes[1]}]"),
        ))

    def marginal(self, axis):
        index = self.axes.index(axis)
        return ProbVector(self.p.sum(axis=1 - index), self.labels[index])

    def transpose(self):
        return Joint2(self.p.T, (self.axes[1], self.axes[0]), (self.labels[1], self.labels[0]))

    def conditional(self):
        """Channel from the first axis to the second; rows of unobserved inputs are uniform"""
        row_mass = self.p.sum(axis=1)
        rows = np.full(self.p.shape, 1.0 / self.p.shape[1])
        observed = row_mass > 0
        rows[observed] = self.p[observed] / row_mass[observed, None]
        return Channel(rows, self.labels[0], self.labels[1])


@dataclass(frozen=True, eq=False)
class Joint3:
    """A joint distribution P over (Y, X, Z), stored as p[y, x, z]"""
    p: np.ndarray
    labels: Optional[Tuple[Tuple[str, ...], Tuple[str, ...], Tuple[str, ...]]] = None
    tol: float = field(default=config.NORMALIZATION_TOL, repr=False)

    def __post_init__(self):
        p = _check_entries(self.p, "values", self.tol)
        if p.ndim != 3:
            raise ValidationError(f"joint3 values must have three axes, got shape {p.shape}")
        total = p.sum()
        if abs(total - 1.0) > self.tol:
            raise ValidationError(f"values sum to {total:.12g}, expected 1")
        p = p / total
        labels = self.labels or (None, None, None)
        object.__setattr__(self, "p", _frozen(p))
        object.__setattr__(self, "labels", tuple(
            _check_labels(labels[i], p.shape[i], f"labels[{AXES[i]}]") for i in range(3)
        ))

    @classmethod
    def _from_valid(cls, p, labels, tol=config.NORMALIZATION_TOL):
        """Wrap an already validated array without renormalizing it"""
        joint = object.__new__(cls)
        object.__setattr__(joint, "p", _frozen(p))
        object.__setattr__(joint, "labels", tuple(labels))
        object.__setattr__(joint, "tol", tol)
        return joint

    @property
    def shape(self):
        return self.p.shape

    def marginal(self, axis):
        index = AXES.index(axis)
        others = tuple(i for i in range(3) if i != index)
        return ProbVector(self.p.sum(axis=others), self.labels[index])

    def pair(self, first, second):
        """Pairwise marginal as a Joint2 with axes (first, second)"""
        i, j = AXES.index(first), AXES.index(second)
        if i == j:
            raise ValidationError(f"pair needs two distinct axes, got {first} twice")
        p = self.p.sum(axis=3 - i - j)
        return Joint2(p if i < j else p.T, (first, second), (self.labels[i], self.labels[j]))

    def channel_y_given(self, axis, restrict_support=False):
        """P_{Y|axis} as a Channel; with restrict_support, unobserved inputs are dropped"""
        conditional = self.pair(axis, "Y").conditional()
        if restrict_support:
            return conditional.restrict_inputs(self.marginal(axis).support())
        return conditional

    def swap_xz(self):
        """Exchange the X and Z axes; swapping twice gives back the same array"""
        return Joint3._from_valid(
            np.transpose(self.p, (0, 2, 1)), (self.labels[0], self.labels[2], self.labels[1]), self.tol
        )


# ---------------------------------------------------------------------------
# Information measures (bits)
# ---------------------------------------------------------------------------

def _probs(distribution):
    if isinstance(distribution, (ProbVector,)):
        return distribution.probs
    if isinstance(distribution, (Joint2, Joint3)):
        return distribution.p
    return np.asarray(distribution, dtype=float)


def entropy(distribution):
    """Shannon entropy of a ProbVector or of any joint (all axes together)"""
    return max(0.0, float(entr(_probs(distribution)).sum() / LN2))


def conditional_entropy(joint: Joint2):
    """H(second axis | first axis)"""
    value = entropy(joint.p) - entropy(joint.p.sum(axis=1))
    return max(0.0, value)


def mi_array(p):
    """I(A;B) of a raw array p[a, b]"""
    product = np.outer(p.sum(axis=1), p.sum(axis=0))
    return max(0.0, float(rel_entr(p, product).sum() / LN2))


def mutual_information(joint: Joint2):
    return mi_array(joint.p)


def cmi_array(p):
    """I(A;B|C) of a raw array p[a, b, c]"""
    p_ac = p.sum(axis=1, keepdims=True)
    p_bc = p.sum(axis=0, keepdims=True)
    p_c = p.sum(axis=(0, 1), keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        reference = np.where(p_c > 0, p_ac * p_bc / np.where(p_c > 0, p_c, 1.0), 0.0)
    return max(0.0, float(rel_entr(p, reference).sum() / LN2))


def conditional_mutual_information(joint: Joint3, pair=("Y", "X"), given="Z"):
    """I(A;B|C) for A, B = pair and C = given, axes named from (Y, X, Z)"""
    order = [AXES.index(pair[0]), AXES.index(pair[1]), AXES.index(given)]
    if len(set(order)) != 3:
        raise ValidationError(f"axes {pair} | {given} must be three distinct names from {AXES}")
    return cmi_array(np.transpose(joint.p, order))


def kl_divergence(p, q):
    """D(p‖q) in bits, +inf when p is not absolutely continuous w.r.t. q"""
    p, q = _probs(p), _probs(q)
    if p.shape != q.shape:
        raise ValidationError(f"kl_divergence needs matching alphabets, got {p.size} and {q.size}")
    return max(0.0, float(rel_entr(p, q).sum() / LN2))


def cross_entropy(p, q):
    """-Σ p log2 q, +inf when q vanishes on the support of p"""
    p, q = _probs(p), _probs(q)
    return float(-xlogy(p, q).sum() / LN2)


def conditional_kl(kappa: Channel, lam: Channel, pi: ProbVector):
    """Σ_x π(x)·D(κ_x‖λ_x), ignoring inputs with π(x) = 0"""
    if kappa.rows.shape != lam.rows.shape or pi.size != kappa.n_inputs:
        raise ValidationError(
            f"conditional_kl dimension mismatch: κ {kappa.rows.shape}, λ {lam.rows.shape}, π {pi.size}"
        )
    supported = pi.support()
    per_row = rel_entr(kappa.rows[supported], lam.rows[supported]).sum(axis=1) / LN2
    if np.isinf(per_row).any():
        return float("inf")
    return max(0.0, float(pi.probs[supported] @ per_row))


# ---------------------------------------------------------------------------
# Composition and constructors
# ---------------------------------------------------------------------------

def compose(d: Channel, e: Channel) -> Channel:
    """(d∘e)(y|x) = Σ_z e(z|x)·d(y|z)"""
    if e.n_outputs != d.n_inputs:
        raise ValidationError(f"compose: encoder emits {e.n_outputs} symbols, decoder reads {d.n_inputs}")
    return Channel(e.rows @ d.rows, e.input_labels, d.output_labels)


def joint_from_prior_channel(pi: ProbVector, kappa: Channel, axes=("X", "Y")) -> Joint2:
    """p(a, b) = π(a)·κ(b|a)"""
    if pi.size != kappa.n_inputs:
        raise ValidationError(f"prior has {pi.size} symbols, channel expects {kappa.n_inputs}")
    return Joint2(pi.probs[:, None] * kappa.rows, axes, (pi.labels, kappa.output_labels))


def extend_markov(joint_yx: Joint2, channel: Channel) -> Joint3:
    """Joint3 of the chain Y - X - Z from a (Y, X) joint and a channel X → Z"""
    if joint_yx.p.shape[1] != channel.n_inputs:
        raise ValidationError(f"joint has {joint_yx.p.shape[1]} x-symbols, channel expects {channel.n_inputs}")
    p = joint_yx.p[:, :, None] * channel.rows[None, :, :]
    return Joint3(p, (joint_yx.labels[0], joint_yx.labels[1], channel.output_labels))


def identity_channel(n, labels=None) -> Channel:
    return Channel(np.eye(n), labels, labels)


def constant_channel(q: ProbVector, n_inputs) -> Channel:
    return Channel(np.tile(q.probs, (n_inputs, 1)), None, q.labels)


def binary_symmetric_channel(crossover) -> Channel:
    if not 0.0 <= crossover <= 1.0:
        raise ValidationError(f"crossover probability {crossover} outside [0, 1]")
    return Channel([[1.0 - crossover, crossover], [crossover, 1.0 - crossover]])


def erasure_channel(eps, alphabet_size=2, erasure_input=False) -> Channel:
    """
    Erasure channel on `alphabet_size` symbols plus an erasure output "e".
    With erasure_input the input alphabet also contains "e", which stays erased.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValidationError(f"erasure probability {eps} outside [0, 1]")
    symbols = _default_labels(alphabet_size)
    rows = np.zeros((alphabet_size, alphabet_size + 1))
    rows[:, :alphabet_size] = (1.0 - eps) * np.eye(alphabet_size)
    rows[:, alphabet_size] = eps
    input_labels = symbols
    if erasure_input:
        erased = np.zeros(alphabet_size + 1)
        erased[alphabet_size] = 1.0
        rows = np.vstack([rows, erased])
        input_labels = symbols + ("e",)
    return Channel(rows, input_labels, symbols + ("e",))


def random_channel(rng, n_inputs, n_outputs, concentration=1.0) -> Channel:
    return Channel(rng.dirichlet(np.full(n_outputs, concentration), size=n_inputs))


def random_joint3(rng, shape, concentration=1.0) -> Joint3:
    return Joint3(rng.dirichlet(np.full(int(np.prod(shape)), concentration)).reshape(shape))
