"""Synthetic planted-support problems and their on-disk format.

A problem directory holds ``dictionary.csv`` (N rows, M columns),
``observation.csv`` (one value per line) and ``problem.json`` with the noise
precision, seeds and, for generated problems, the planted weights.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, InputError
from .priors import GAUSSIAN, ScaleFamilyPrior
from .section import SparseProblem

DICTIONARY_KINDS = ("gaussian_iid", "dct_overcomplete")
# precision reported for noiseless problems (the solver needs a finite lambda)
NOISELESS_SNR_DB = 120.0


@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 100
    m: int = 256
    k: int = 10
    snr_db: float = 30.0
    dictionary_kind: str = "gaussian_iid"
    weight_prior: ScaleFamilyPrior = GAUSSIAN
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise DomainError("n and m must be positive")
        if not 0 <= self.k <= self.m:
            raise DomainError(f"planted sparsity k={self.k} must lie in [0, m={self.m}]")
        if self.dictionary_kind not in DICTIONARY_KINDS:
            raise DomainError(f"dictionary_kind must be one of {DICTIONARY_KINDS}")
        if isinstance(self.weight_prior, (dict, str)):
            object.__setattr__(self, "weight_prior", ScaleFamilyPrior.from_config(self.weight_prior))

    def to_config(self) -> dict:
        out = asdict(self)
        out["weight_prior"] = self.weight_prior.to_config()
        if math.isinf(self.snr_db):
            out["snr_db"] = "inf"
        return out

    @classmethod
    def from_config(cls, config: dict) -> "SyntheticSpec":
        config = dict(config)
        if str(config.get("snr_db")) == "inf":
            config["snr_db"] = math.inf
        return cls(**config)


@dataclass
class Planted:
    support: list
    weights: np.ndarray
    noise: np.ndarray
    realized_snr_db: float
    spec: SyntheticSpec = field(repr=False, default=None)


def make_dictionary(kind: str, n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    if kind == "gaussian_iid":
        A = rng.standard_normal((n, m))
    elif kind == "dct_overcomplete":
        rows = np.arange(n)[:, None] + 0.5
        A = np.cos(np.pi * rows * np.arange(m)[None, :] / m)
    else:
        raise DomainError(f"unknown dictionary kind {kind!r}")
    return A / np.linalg.norm(A, axis=0)


def generate(spec: SyntheticSpec) -> tuple[SparseProblem, Planted]:
    """Draw ``y = A x + v`` with exactly the requested SNR.

    The noise is scaled so that ``10 log10(|Ax|^2 / |v|^2)`` equals
    ``spec.snr_db`` to rounding.  The noise precision handed to the solver
    is the per-sample precision of that noise level.
    """
    rng = np.random.default_rng(spec.seed)
    A = make_dictionary(spec.dictionary_kind, spec.n, spec.m, rng)
    support = np.sort(rng.choice(spec.m, size=spec.k, replace=False))
    x = np.zeros(spec.m)
    x[support] = spec.weight_prior.sample(1.0, spec.k, rng)
    signal = A @ x
    power = float(signal @ signal)
    if math.isinf(spec.snr_db) or power == 0.0:
        v = np.zeros(spec.n)
        snr_for_lambda = NOISELESS_SNR_DB
        realized = math.inf
    else:
        v = rng.standard_normal(spec.n)
        v *= math.sqrt(power / (v @ v) * 10.0 ** (-spec.snr_db / 10.0))
        snr_for_lambda = spec.snr_db
        realized = 10.0 * math.log10(power / float(v @ v))
    mean_power = power / spec.n if power > 0 else 1.0
    noise_precision = 10.0 ** (snr_for_lambda / 10.0) / mean_power
    problem = SparseProblem(A, signal + v, noise_precision)
    return problem, Planted(support.tolist(), x, v, realized, spec)


def nmse(estimate, truth) -> float:
    truth = np.asarray(truth, dtype=float)
    denom = float(truth @ truth)
    err = np.asarray(estimate, dtype=float) - truth
    return float(err @ err) / denom if denom > 0 else float(err @ err)


# -- file I/O -----------------------------------------------------------------------


def format_float(v: float) -> str:
    return repr(float(v))


def write_csv(path, array) -> None:
    array = np.atleast_2d(np.asarray(array, dtype=float))
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in array:
            writer.writerow([format_float(v) for v in row])


def write_table(path, columns: dict) -> None:
    """Write named columns with a header row."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in data:
            writer.writerow([format_float(v) for v in row])


def read_csv(path, header: bool = False) -> np.ndarray:
    """Parse a numeric CSV; malformed cells raise :class:`InputError` with the line number."""
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    rows = []
    width = None
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if header and lineno == 1:
            continue
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            values = [float(cell) for cell in row]
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric entry in {row!r}") from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise InputError(f"{path}:{lineno}: expected {width} columns, found {len(values)}")
        rows.append(values)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def save_problem(directory, problem: SparseProblem, planted: Planted | None = None, meta: dict | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_csv(directory / "dictionary.csv", problem.dictionary)
    write_csv(directory / "observation.csv", problem.observation[:, None])
    record = {"noise_precision": problem.noise_precision, "dictionary": "dictionary.csv",
              "observation": "observation.csv"}
    if planted is not None:
        record["planted_support"] = list(map(int, planted.support))
        record["planted_weights"] = [float(v) for v in planted.weights]
        record["realized_snr_db"] = None if math.isinf(planted.realized_snr_db) else planted.realized_snr_db
        if planted.spec is not None:
            record["spec"] = planted.spec.to_config()
    record.update(meta or {})
    (directory / "problem.json").write_text(json.dumps(record, indent=2) + "\n", encoding="ascii")
    return directory


def load_problem(directory) -> tuple[SparseProblem, dict]:
    """Read a problem directory written by :func:`save_problem`."""
    directory = Path(directory)
    meta_path = directory / "problem.json"
    try:
        meta = json.loads(meta_path.read_text(encoding="ascii"))
    except OSError as exc:
        raise InputError(f"{meta_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{meta_path}:{exc.lineno}: {exc.msg}") from exc
    if "noise_precision" not in meta:
        raise InputError(f"{meta_path}: missing 'noise_precision'")
    A = read_csv(directory / meta.get("dictionary", "dictionary.csv"))
    y = read_csv(directory / meta.get("observation", "observation.csv"))
    if y.shape[1] != 1:
        raise InputError(f"observation file must have a single column, found {y.shape[1]}")
    try:
        problem = SparseProblem(A, y[:, 0], meta["noise_precision"])
    except DomainError as exc:
        raise InputError(str(exc)) from exc
    return problem, meta
