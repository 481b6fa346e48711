"""
Monte Carlo estimators of the variational deficiency bottleneck (VDB) and
variational information bottleneck (VIB) objectives for discrete encoders
and decoders.

For a minibatch of (x, y) pairs and M encoder samples z_ij ~ e(·|x_i):

    VDB = mean_i [ −log2( mean_j d(y_i|z_ij) ) + β·KL(e(·|x_i) ‖ r) ]
    VIB = mean_i [ mean_j ( −log2 d(y_i|z_ij) ) + β·KL(e(·|x_i) ‖ r) ]

Both estimators evaluate the same sampled z_ij, so at M = 1 they agree bit
for bit and VIB ≥ VDB in expectation for every M.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy.special import rel_entr

from core_prob import LN2, Channel, ProbVector, ValidationError

logger = logging.getLogger(__name__)

M_GRID = (1, 3, 6, 12)
REFERENCES = ("uniform", "marginal")


@dataclass(frozen=True)
class EstimatorConfig:
    m_samples: int = 1
    batch: int = 100
    beta: float = 0.0
    reference: Optional[ProbVector] = None
    seed: int = 0
    n_batches: int = 1

    def __post_init__(self):
        if self.m_samples < 1:
            raise ValidationError(f"m_samples must be >= 1, got {self.m_samples}")
        if self.batch < 1:
            raise ValidationError(f"batch must be >= 1, got {self.batch}")
        if self.n_batches < 1:
            raise ValidationError(f"n_batches must be >= 1, got {self.n_batches}")
        if not self.beta >= 0:
            raise ValidationError(f"beta must be >= 0, got {self.beta}")


def batch_generator(seed, batch_index):
    """Counter-based stream for one batch, independent of every other batch"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, batch_index])))


def as_samples(data) -> np.ndarray:
    samples = np.asarray(data)
    if samples.ndim != 2 or samples.shape[1] != 2:
        raise ValidationError(f"data must be a sequence of (x, y) pairs, got shape {samples.shape}")
    if samples.shape[0] == 0:
        raise ValidationError("data is empty")
    if not np.issubdtype(samples.dtype, np.integer):
        if not np.all(samples == np.round(samples)):
            raise ValidationError("data entries must be integer symbol indices")
        samples = samples.astype(int)
    return samples


def _check_alphabets(samples, e: Channel, d: Channel):
    if e.n_outputs != d.n_inputs:
        raise ValidationError(f"encoder emits {e.n_outputs} symbols, decoder reads {d.n_inputs}")
    for column, (name, size) in enumerate((("x", e.n_inputs), ("y", d.n_outputs))):
        bad = np.flatnonzero((samples[:, column] < 0) | (samples[:, column] >= size))
        if bad.size:
            raise ValidationError(f"data[{int(bad[0])}].{name} = {samples[bad[0], column]} outside alphabet of size {size}")


def encoder_marginal(data, e: Channel) -> ProbVector:
    """Average encoder row over the x values in the data"""
    samples = as_samples(data)
    return ProbVector(e.rows[samples[:, 0]].mean(axis=0), e.output_labels)


def resolve_reference(cfg: EstimatorConfig, e: Channel) -> np.ndarray:
    if cfg.reference is None:
        return np.full(e.n_outputs, 1.0 / e.n_outputs)
    if cfg.reference.size != e.n_outputs:
        raise ValidationError(f"reference has {cfg.reference.size} symbols, encoder emits {e.n_outputs}")
    return cfg.reference.probs


def _rate_terms(x, e: Channel, reference, beta):
    kl = rel_entr(e.rows[x], reference[None, :]).sum(axis=1) / LN2
    return beta * kl


def sample_latents(x, e: Channel, m_samples, rng) -> np.ndarray:
    """z_ij = number of cdf entries of e(·|x_i) at or below a uniform draw"""
    cdf = np.cumsum(e.rows[x], axis=1)
    cdf[:, -1] = 1.0
    u = rng.random((x.size, m_samples))
    z = (cdf[:, None, :] <= u[:, :, None]).sum(axis=2)
    return np.minimum(z, e.n_outputs - 1)


def _sample_losses(likelihoods, kind):
    with np.errstate(divide="ignore"):
        if kind == "vdb":
            return -np.log2(likelihoods.mean(axis=1))
        return (-np.log2(likelihoods)).mean(axis=1)


def _estimate(samples, e, d, cfg, kind, batch_index):
    rng = batch_generator(cfg.seed, batch_index)
    x, y = samples[:, 0], samples[:, 1]
    z = sample_latents(x, e, cfg.m_samples, rng)
    likelihoods = d.rows[z, y[:, None]]
    rates = _rate_terms(x, e, resolve_reference(cfg, e), cfg.beta)
    return float((_sample_losses(likelihoods, kind) + rates).mean())


def vdb_estimate(data, e: Channel, d: Channel, cfg: EstimatorConfig, batch_index=0) -> float:
    """Empirical VDB objective on `data` (the whole sequence is the minibatch)"""
    samples = as_samples(data)
    _check_alphabets(samples, e, d)
    return _estimate(samples, e, d, cfg, "vdb", batch_index)


def vib_estimate(data, e: Channel, d: Channel, cfg: EstimatorConfig, batch_index=0) -> float:
    """Empirical VIB objective; draws the same z_ij as vdb_estimate for equal seeds"""
    samples = as_samples(data)
    _check_alphabets(samples, e, d)
    return _estimate(samples, e, d, cfg, "vib", batch_index)


def exact_objective(data, e: Channel, d: Channel, beta=0.0, reference: Optional[ProbVector] = None) -> float:
    """The M → ∞ value: mean_i [ −log2 (d∘e)(y_i|x_i) + β·KL(e(·|x_i) ‖ r) ]"""
    samples = as_samples(data)
    _check_alphabets(samples, e, d)
    x, y = samples[:, 0], samples[:, 1]
    cfg = EstimatorConfig(beta=beta, reference=reference)
    mixture = (e.rows @ d.rows)[x, y]
    with np.errstate(divide="ignore"):
        losses = -np.log2(mixture)
    return float((losses + _rate_terms(x, e, resolve_reference(cfg, e), beta)).mean())


def _standard_error(values):
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / np.sqrt(values.size))


def paired_objective_report(data, e: Channel, d: Channel, cfg: EstimatorConfig, m_grid=M_GRID) -> pd.DataFrame:
    """
    Mean VDB and VIB over cfg.n_batches minibatches of cfg.batch pairs drawn
    with replacement, per M in m_grid. Both estimators see the same
    minibatches and latent draws.
    """
    samples = as_samples(data)
    _check_alphabets(samples, e, d)
    reference = resolve_reference(cfg, e)
    rows = []
    for m in m_grid:
        vdb = np.empty(cfg.n_batches)
        vib = np.empty(cfg.n_batches)
        rate = np.empty(cfg.n_batches)
        for b in range(cfg.n_batches):
            rng = batch_generator(cfg.seed, b)
            batch = samples[rng.integers(0, samples.shape[0], size=cfg.batch)]
            x, y = batch[:, 0], batch[:, 1]
            z = sample_latents(x, e, m, rng)
            likelihoods = d.rows[z, y[:, None]]
            rates = _rate_terms(x, e, reference, cfg.beta)
            vdb[b] = float((_sample_losses(likelihoods, "vdb") + rates).mean())
            vib[b] = float((_sample_losses(likelihoods, "vib") + rates).mean())
            rate[b] = float(rates.mean())
        gap = vib - vdb
        rows.append({
            "m_samples": int(m),
            "mean_vdb": float(vdb.mean()),
            "mean_vib": float(vib.mean()),
            "jensen_gap": float(gap.mean()),
            "se_vdb": _standard_error(vdb),
            "se_vib": _standard_error(vib),
            "se_gap": _standard_error(gap),
            "rate_term": float(rate.mean()),
        })
    report = pd.DataFrame(rows)
    if not np.isfinite(report[["mean_vdb", "mean_vib"]].to_numpy()).all():
        logger.info("Some minibatches produced infinite losses (decoder assigns zero likelihood)")
    return report
