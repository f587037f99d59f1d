"""Replicate runners for the warp-recovery and bimodal-posterior experiments.

Both experiments use noiseless data; replicates differ only in the
importance draws and the resampling, each with its own derived seed.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import identity_basis
from .dp import DpConfig, dp_align
from .exceptions import InvalidInputError
from .functions import (
    compute_srsf,
    l2_distance,
    uniform_grid,
    warp_function,
    warp_srsf,
)
from .model import PriorConfig, importance_sample, sir_resample
from .posterior import dpd_or_nan, kmeans, pooled_variance, select_num_modes, summarize
from .sphere import fisher_rao_distance, karcher_mean, normalize, srd_to_warping

SIM1_WARPS = ("gamma1", "gamma2", "gamma3")


def sim1_warps(n_points=100):
    """The three true warps ``t + 0.15t(1-t)``, ``t + 0.70t(1-t)``, ``t + 0.1 sin(2 pi t)``."""
    t = uniform_grid(n_points)
    return {
        "gamma1": t + 0.15 * t * (1.0 - t),
        "gamma2": t + 0.70 * t * (1.0 - t),
        "gamma3": t + 0.1 * np.sin(2.0 * np.pi * t),
    }


def _bump(t, center, width=0.005):
    return np.exp(-((t - center) ** 2) / width)


def sim1_base_function(n_points=100):
    """Two-bump test function ``exp(-(t-0.3)^2/0.005) + 0.8 exp(-(t-0.7)^2/0.005)``."""
    t = uniform_grid(n_points)
    return _bump(t, 0.3) + 0.8 * _bump(t, 0.7)


def sim2_functions(n_points=100):
    """Unimodal ``f1`` (one bump at 0.5) and bimodal ``f2`` (equal bumps at 0.3 and 0.7).

    The two peaks of ``f2`` are equidistant from the peak of ``f1``, so
    the posterior of the warp has two symmetric modes.
    """
    t = uniform_grid(n_points)
    return _bump(t, 0.5), _bump(t, 0.3) + _bump(t, 0.7)


@dataclass
class SimulationReport:
    """Per-replicate records of one experiment plus summary statistics.

    ``records`` holds one flat dict per replicate; every statistic in
    :meth:`summary` is recomputed from them.
    """

    name: str
    n_points: int
    n_samples: int
    n_resample: int
    seed: int | None
    records: list = field(default_factory=list)
    reference: dict = field(default_factory=dict)

    @property
    def replicates(self):
        return len(self.records)

    def column(self, key):
        return np.array([r[key] for r in self.records], dtype=float)

    def summary(self):
        """Mean and standard deviation of every numeric per-replicate field."""
        out = {}
        keys = [k for k, v in self.records[0].items() if k not in ("replicate", "seed")
                and isinstance(v, (int, float, np.floating, np.integer))]
        for k in keys:
            col = self.column(k)
            col = col[np.isfinite(col)]
            if col.size == 0:
                out[k] = {"mean": None, "sd": None}
                continue
            out[k] = {"mean": float(col.mean()),
                      "sd": float(col.std(ddof=1)) if col.size > 1 else 0.0}
        return out

    def to_dict(self):
        return {
            "name": self.name,
            "n_points": self.n_points,
            "n_samples": self.n_samples,
            "n_resample": self.n_resample,
            "seed": self.seed,
            "reference": self.reference,
            "records": self.records,
            "summary": self.summary(),
        }


def replicate_seeds(seed, replicates):
    """Two independent 32-bit seeds (sampling, resampling) per replicate."""
    children = np.random.SeedSequence(seed).spawn(replicates)
    return [tuple(int(x) for x in c.generate_state(2)) for c in children]


def posterior_sample(q1, q2, n_samples, n_resample, prior=None, imp=None, seed=None,
                     basis=None, n_jobs=1):
    """Importance-sample, weight and resample; returns ``(psis, log_posterior, samples)``.

    ``seed`` is a pair ``(sampling_seed, resampling_seed)`` or a single
    integer from which both are derived.
    """
    if seed is None or np.ndim(seed) == 0:
        seed = replicate_seeds(seed, 1)[0]
    samples = importance_sample(q1, q2, n_samples, prior, imp, seed[0], basis, n_jobs,
                                keep_coefficients=False)
    idx = sir_resample(samples.log_weight, n_resample, seed[1])
    psis = normalize(np.maximum(samples.psi[idx], 0.0))
    return psis, samples.log_posterior[idx], samples


def _map_jobs(fn, items, n_jobs):
    if n_jobs == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items))


def run_sim1(warp="gamma1", replicates=20, n_samples=50_000, n_resample=200, n_points=100,
             prior=None, seed=0, n_jobs=1, dp_cfg=None):
    """Warp-recovery experiment for one true warp.

    The pair is ``f1 = f o gamma_T`` and ``f2 = f``, so the ideal
    registration of ``f2`` onto ``f1`` is ``gamma_T`` itself.

    Parameters
    ----------
    warp : str or ndarray
        ``"gamma1"``, ``"gamma2"``, ``"gamma3"``, ``"identity"`` or an explicit warp.
    replicates, n_samples, n_resample, n_points : int
        Replicate count, importance draws S, resample size s and grid size N.
    prior : PriorConfig, optional
    seed : int
    n_jobs : int
        Replicates run concurrently; results do not depend on it.
    dp_cfg : DpConfig, optional

    Returns
    -------
    SimulationReport
    """
    if isinstance(warp, str):
        table = dict(sim1_warps(n_points), identity=uniform_grid(n_points))
        if warp not in table:
            raise InvalidInputError(f"unknown warp {warp!r}")
        name, gamma_t = warp, table[warp]
    else:
        name, gamma_t = "custom", np.asarray(warp, dtype=float)
    if replicates < 1:
        raise InvalidInputError("need at least one replicate")
    prior = prior or PriorConfig()
    f = sim1_base_function(n_points)
    q1 = compute_srsf(warp_function(f, gamma_t))
    q2 = compute_srsf(f)
    basis = identity_basis(n_points, prior.m)
    gamma_dp = dp_align(q1, q2, dp_cfg or DpConfig())
    d_fr_dp = fisher_rao_distance(gamma_t, gamma_dp)
    dpd_dp = dpd_or_nan(q1, q2, gamma_dp)

    def one(item):
        rep, sd = item
        psis, _, smp = posterior_sample(q1, q2, n_samples, n_resample, prior, None, sd, basis)
        gbar = srd_to_warping(karcher_mean(psis))
        return {
            "replicate": rep,
            "seed": list(sd),
            "d_fr_mean": float(fisher_rao_distance(gamma_t, gbar)),
            "d_fr_dp": float(d_fr_dp),
            "dpd_mean": dpd_or_nan(q1, q2, gbar),
            "dpd_dp": float(dpd_dp),
            "ess": float(smp.effective_sample_size()),
        }

    seeds = replicate_seeds(seed, replicates)
    records = _map_jobs(one, list(enumerate(seeds)), n_jobs)
    return SimulationReport(
        name=f"sim1-{name}",
        n_points=n_points,
        n_samples=n_samples,
        n_resample=n_resample,
        seed=seed,
        records=records,
        reference={"no_warp_distance": float(l2_distance(q1, q2)),
                   "dp_distance": float(l2_distance(q1, warp_srsf(q2, gamma_dp)))},
    )


def _order_clusters(result):
    """Order clusters by the value of their centre's warp at t = 1/2 (a stable naming)."""
    mid = [srd_to_warping(c)[c.size // 2] for c in result.centers]
    return np.argsort(mid, kind="stable")


def run_sim2(replicates=20, n_samples=50_000, n_resample=200, n_points=100, prior=None,
             seed=0, n_jobs=1, dp_cfg=None):
    """Bimodal-posterior experiment with the number of clusters fixed at two.

    Per replicate the record holds the pooled-variance decrease from one
    to two clusters, the number of modes chosen by the automatic rule,
    both cluster sizes, and the distance
    ``||q1 - (q2, gamma)||`` under each cluster's mean, median and MAP warp.
    Clusters are ordered by their centre's warp value at the midpoint.
    """
    if replicates < 1:
        raise InvalidInputError("need at least one replicate")
    prior = prior or PriorConfig()
    f1, f2 = sim2_functions(n_points)
    q1, q2 = compute_srsf(f1), compute_srsf(f2)
    basis = identity_basis(n_points, prior.m)
    gamma_dp = dp_align(q1, q2, dp_cfg or DpConfig())
    base = float(l2_distance(q1, q2))

    def one(item):
        rep, sd = item
        psis, logpost, _ = posterior_sample(q1, q2, n_samples, n_resample, prior, None, sd,
                                            basis)
        single = kmeans(psis, 1)
        v1 = pooled_variance(psis, single.labels, single.centers)
        res = kmeans(psis, 2)
        v2 = pooled_variance(psis, res.labels, res.centers)
        rec = {
            "replicate": rep,
            "seed": list(sd),
            "variance_decrease": float((v1 - v2) / v1) if v1 > 0 else 0.0,
            "selected_k": int(select_num_modes(psis).k),
            "no_warp_distance": base,
        }
        for pos, c in enumerate(_order_clusters(res), start=1):
            members = res.labels == c
            summ = summarize(psis[members], q1, q2, log_posterior=logpost[members])
            rec[f"size_{pos}"] = int(members.sum())
            rec[f"distance_mean_{pos}"] = summ.distance_mean
            rec[f"distance_median_{pos}"] = summ.distance_median
            rec[f"distance_map_{pos}"] = summ.distance_map
        return rec

    seeds = replicate_seeds(seed, replicates)
    records = _map_jobs(one, list(enumerate(seeds)), n_jobs)
    return SimulationReport(
        name="sim2",
        n_points=n_points,
        n_samples=n_samples,
        n_resample=n_resample,
        seed=seed,
        records=records,
        reference={"no_warp_distance": base,
                   "dp_distance": float(l2_distance(q1, warp_srsf(q2, gamma_dp)))},
    )


@dataclass
class TemplateAlignment:
    """MAP registration of every function of a dataset onto one template."""

    template_index: int
    warps: np.ndarray
    aligned: np.ndarray
    mean_before: np.ndarray
    mean_after: np.ndarray


def map_warp(q1, q2, n_samples=50_000, prior=None, imp=None, seed=None, basis=None,
             n_jobs=1):
    """Warp of the importance sample with the largest unnormalized log posterior."""
    if seed is None or np.ndim(seed) == 0:
        seed = replicate_seeds(seed, 1)[0]
    smp = importance_sample(q1, q2, n_samples, prior, imp, seed[0], basis, n_jobs,
                            keep_coefficients=False)
    lp = np.where(smp.valid, smp.log_posterior, -np.inf)
    best = smp.psi[int(np.argmax(lp))]
    return srd_to_warping(normalize(np.maximum(best, 0.0)))


def run_template_alignment(dataset, template_index=0, n_samples=50_000, prior=None,
                           seed=0, n_jobs=1):
    """Register every function of ``dataset`` onto ``dataset[template_index]``.

    Parameters
    ----------
    dataset : ndarray, shape (n, N)
        Functions on a common uniform grid, ``n >= 2``.
    template_index : int
    n_samples : int
        Importance draws per pair.
    prior : PriorConfig, optional
    seed : int
    n_jobs : int
        Pairs run concurrently; results do not depend on it.

    Returns
    -------
    TemplateAlignment
    """
    data = np.asarray(dataset, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise InvalidInputError("template alignment needs at least two functions")
    if not 0 <= template_index < data.shape[0]:
        raise InvalidInputError(f"template index {template_index} out of range")
    prior = prior or PriorConfig()
    n_points = data.shape[1]
    basis = identity_basis(n_points, prior.m)
    q_template = compute_srsf(data[template_index])
    seeds = replicate_seeds(seed, data.shape[0])

    def one(i):
        return map_warp(q_template, compute_srsf(data[i]), n_samples, prior, None,
                        seeds[i], basis)

    warps = np.array(_map_jobs(one, range(data.shape[0]), n_jobs))
    aligned = np.array([warp_function(f, g) for f, g in zip(data, warps)])
    return TemplateAlignment(
        template_index=template_index,
        warps=warps,
        aligned=aligned,
        mean_before=data.mean(axis=0),
        mean_after=aligned.mean(axis=0),
    )
