"""CSV ingestion, run configuration, JSON result bundles and plot-data export.

CSV input: the first column is ``t`` (strictly increasing, from 0 to 1),
every further column is one function sampled at those ``t``.  A header row
is optional.  Functions are linearly resampled to the uniform grid.

The result bundle is a JSON document tagged ``"schema": "bayeswarp.result/1"``.
Floats are written in their shortest round-trip form (at most 17
significant digits), so reading a bundle back gives bit-identical values.
"""

import csv
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import InvalidInputError
from .functions import uniform_grid, warp_function
from .sphere import srd_to_warping

SCHEMA = "bayeswarp.result/1"
SEED_ENV = "BAYESWARP_SEED"
IMPORTANCE_SOURCES = ("identity", "dp-solution", "file")


class ParseError(InvalidInputError):
    """Malformed CSV input; ``line`` is the 1-based line number (or None)."""

    def __init__(self, message, path=None, line=None):
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.path = path
        self.line = line


# -- CSV -----------------------------------------------------------------


def _parse_row(row, path, line):
    try:
        values = [float(x) for x in row]
    except ValueError:
        raise ParseError(f"non-numeric value in row {row!r}", path, line) from None
    if not all(math.isfinite(v) for v in values):
        raise ParseError("non-finite value", path, line)
    return values


def read_csv(path):
    """Read a function table; returns ``(t, functions)`` on the file's own grid.

    ``functions`` has one row per function column.
    """
    path = os.fspath(path)
    try:
        with open(path, newline="") as fh:
            rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1)
                    if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise ParseError(f"cannot read file ({exc.strerror})", path) from None
    if not rows:
        raise ParseError("file is empty", path)

    first_line, first = rows[0]
    try:
        [float(x) for x in first]
    except ValueError:
        rows = rows[1:]
    data = []
    width = None
    for line, row in rows:
        values = _parse_row([c.strip() for c in row], path, line)
        if width is None:
            width = len(values)
            if width < 2:
                raise ParseError("need a t column and at least one function column",
                                 path, line)
        elif len(values) != width:
            raise ParseError(f"expected {width} columns, found {len(values)}", path, line)
        data.append(values)
    if len(data) < 3:
        raise ParseError(f"need at least 3 sample points, found {len(data)}", path,
                         rows[-1][0] if rows else first_line)
    arr = np.array(data)
    t = arr[:, 0]
    steps = np.diff(t)
    if np.any(steps <= 0):
        bad = int(np.flatnonzero(steps <= 0)[0]) + 1
        raise ParseError("t must be strictly increasing", path, rows[bad][0])
    if abs(t[0]) > 1e-9 or abs(t[-1] - 1.0) > 1e-9:
        raise ParseError(f"t must run from 0 to 1 (got {t[0]} to {t[-1]})", path)
    return t, arr[:, 1:].T


def load_functions(path, n_points=None):
    """Load the function columns of a CSV file on a uniform grid.

    Parameters
    ----------
    path : str or path-like
    n_points : int, optional
        Size of the output grid; defaults to the number of data rows.

    Returns
    -------
    list of ndarray
        One array of length ``n_points`` per function column.
    """
    t, funcs = read_csv(path)
    n = n_points or t.size
    grid = uniform_grid(n)
    if n == t.size and np.allclose(t, grid, rtol=0.0, atol=1e-12):
        return [f.copy() for f in funcs]
    return [np.interp(grid, t, f) for f in funcs]


def save_functions(path, functions, t=None, header=None):
    """Write functions as CSV columns next to ``t`` (uniform grid by default)."""
    funcs = np.atleast_2d(np.asarray(functions, dtype=float))
    if t is None:
        t = uniform_grid(funcs.shape[1])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for i, ti in enumerate(t):
            writer.writerow([_fmt(ti)] + [_fmt(v) for v in funcs[:, i]])


def _fmt(x):
    return repr(float(x))


def file_digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


# -- configuration ---------------------------------------------------------


@dataclass
class RunConfig:
    """Settings of one registration run.

    ``basis_size`` defaults to ``N - 1`` (rounded down to odd);
    ``importance_mean`` is ``identity``, ``dp-solution`` or ``file`` (the
    warp stored in ``importance_mean_file``).
    """

    grid_size: int = 100
    samples: int = 50_000
    resample: int = 200
    basis_size: int | None = None
    sigma2: float = 1000.0
    decay: str = "quadratic"
    gamma_alpha: float = 1.0
    gamma_beta: float = 0.01
    k_max: int = 5
    mode_threshold: float = 0.30
    n_clusters: int | None = None
    seed: int | None = None
    importance_mean: str = "identity"
    importance_mean_file: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("grid_size", "samples", "resample", "k_max"):
            if int(getattr(self, name)) < 1:
                raise InvalidInputError(f"{name} must be positive")
        if self.grid_size < 3:
            raise InvalidInputError("grid_size must be at least 3")
        if self.resample > self.samples:
            raise InvalidInputError("resample must not exceed samples")
        if self.basis_size is not None:
            if self.basis_size < 1:
                raise InvalidInputError("basis_size must be positive")
            if self.basis_size > self.grid_size - 1:
                raise InvalidInputError(
                    f"basis_size {self.basis_size} exceeds grid_size - 1 = "
                    f"{self.grid_size - 1}; use --basis-size {self.grid_size - 1} or less "
                    "(an odd number) or increase --grid-size"
                )
            if self.basis_size % 2 == 0:
                raise InvalidInputError("basis_size must be odd (constant-free Fourier basis)")
        if not 0.0 < self.mode_threshold < 1.0:
            raise InvalidInputError("mode_threshold must lie in (0, 1)")
        if not self.sigma2 > 0:
            raise InvalidInputError("sigma2 must be positive")
        if not (self.gamma_alpha > 0 and self.gamma_beta > 0):
            raise InvalidInputError("gamma_alpha and gamma_beta must be positive")
        if self.n_clusters is not None and self.n_clusters < 1:
            raise InvalidInputError("n_clusters must be positive")
        if self.importance_mean not in IMPORTANCE_SOURCES:
            raise InvalidInputError(
                f"importance_mean must be one of {IMPORTANCE_SOURCES}"
            )
        if self.importance_mean == "file" and not self.importance_mean_file:
            raise InvalidInputError("importance_mean 'file' needs importance_mean_file")

    def to_dict(self):
        return asdict(self)


# -- result bundle ---------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


@dataclass
class ResultBundle:
    """Everything produced by one ``align`` run, plus its provenance."""

    config: dict
    provenance: dict
    t: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    warps: np.ndarray
    weights: np.ndarray
    log_posterior: np.ndarray
    clusters: dict
    summaries: list
    dp: dict
    diagnostics: dict = field(default_factory=dict)
    schema: str = SCHEMA

    def to_dict(self):
        return _jsonable(asdict(self))

    @classmethod
    def from_dict(cls, data):
        if data.get("schema") != SCHEMA:
            raise InvalidInputError(f"unsupported bundle schema {data.get('schema')!r}")
        arrays = ("t", "f1", "f2", "warps", "weights", "log_posterior")
        kw = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        for k in arrays:
            kw[k] = np.array([np.nan if v is None else v for v in np.ravel(data[k])],
                             dtype=float).reshape(np.shape(data[k]))
        return cls(**kw)

    @classmethod
    def from_estimator(cls, est, f1, f2, config, provenance):
        """Collect a fitted :class:`BayesianWarpRegistration` into a bundle."""
        cl = est.clusters_
        summaries = [asdict(summ) for summ in est.summaries_]
        return cls(
            config=config,
            provenance=provenance,
            t=uniform_grid(f1.size),
            f1=f1,
            f2=f2,
            warps=est.warps_,
            weights=est.weights_,
            log_posterior=est.log_posterior_,
            clusters={
                "k": int(cl.k),
                "labels": cl.labels,
                "sizes": cl.sizes,
                "center_warps": [srd_to_warping(c) for c in cl.centers],
                "avg_silhouette": cl.avg_silhouette,
                "pooled_variance_curve": cl.pooled_variance_curve,
            },
            summaries=summaries,
            dp={
                "warp": est.dp_warp_,
                "distance": est.dp_distance_,
                "dpd": est.dpd_dp_,
                "no_warp_distance": est.no_warp_distance_,
            },
            diagnostics={
                "effective_sample_size": est.effective_sample_size_,
                "valid_samples": est.n_valid_,
            },
        )


def dumps(obj):
    """Serialize a bundle or plain structure to canonical JSON text."""
    data = obj.to_dict() if hasattr(obj, "to_dict") else _jsonable(obj)
    return json.dumps(data, indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_json(obj, path):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def read_bundle(path):
    with open(path) as fh:
        return ResultBundle.from_dict(json.load(fh))


# -- plot data -------------------------------------------------------------


def _write_table(path, header, columns):
    cols = [np.asarray(c, dtype=float) for c in columns]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*cols):
            writer.writerow([_fmt(v) for v in row])


def export_plot_data(bundle, out_dir):
    """Write plot-ready CSV tables for every posterior cluster.

    Per cluster ``c`` (1-based): ``cluster{c}_warps.csv`` (mean, median,
    MAP and DP warps), ``cluster{c}_band.csv`` (t, lower, median, upper,
    sd), ``cluster{c}_aligned.csv`` (``f1``, ``f2`` and ``f2`` warped by
    each estimate) and ``cluster{c}_averages.csv`` (pointwise averages of
    ``f1`` and the aligned ``f2``).

    Returns
    -------
    list of str
        Paths of the written files.
    """
    if isinstance(bundle, (str, os.PathLike)):
        bundle = read_bundle(bundle)
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise InvalidInputError(f"cannot create {out_dir}: {exc.strerror}") from None
    if not os.access(out_dir, os.W_OK):
        raise InvalidInputError(f"directory {out_dir} is not writable")

    t, f1, f2 = bundle.t, bundle.f1, bundle.f2
    dp_warp = np.asarray(bundle.dp["warp"], dtype=float)
    written = []
    for c, summ in enumerate(bundle.summaries, start=1):
        est = {k: np.asarray(summ[f"{k}_warp"], dtype=float) for k in ("mean", "median", "map")}
        aligned = {k: warp_function(f2, g) for k, g in est.items()}
        tables = {
            "warps": (["t", "mean", "median", "map", "dp"],
                      [t, est["mean"], est["median"], est["map"], dp_warp]),
            "band": (["t", "lower", "median", "upper", "sd"],
                     [t, summ["band_lower"], summ["pointwise_median"], summ["band_upper"],
                      summ["pointwise_sd"]]),
            "aligned": (["t", "f1", "f2", "f2_mean", "f2_median", "f2_map"],
                        [t, f1, f2, aligned["mean"], aligned["median"], aligned["map"]]),
            "averages": (["t", "no_warp", "mean", "median", "map"],
                         [t, 0.5 * (f1 + f2)] + [0.5 * (f1 + aligned[k])
                                                  for k in ("mean", "median", "map")]),
        }
        for name, (header, cols) in tables.items():
            path = os.path.join(out_dir, f"cluster{c}_{name}.csv")
            _write_table(path, header, cols)
            written.append(path)
    return written
