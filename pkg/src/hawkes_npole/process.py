"""Event streams, ground-truth Hawkes models, intensities and simulation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from . import _numba_sim
from .kernels import GaussianKernel, KernelExpansion

# term columns: alpha, power m, cosine freq, exp rate, gaussian sharpness, gaussian center
# f(t) = sum alpha * t**m * cos(w t) * exp(-beta t - s (t - gamma)**2), t >= 0
N_TERM_COLS = 6


class EventFormatError(ValueError):
    """Malformed or unsorted event input."""


class SimulationError(RuntimeError):
    pass


class UnsupportedModelError(ValueError):
    pass


# -- ground-truth triggering functions ---------------------------------------

@dataclass(frozen=True)
class GroundTruthFn:
    """Closed-form nonnegative triggering function.

    Build with the module-level constructors (:func:`exp_decay`,
    :func:`gauss_bump`, ...).  Every form compiles to a small table of
    ``alpha t^m cos(w t) exp(-beta t - s (t-gamma)^2)`` terms, which is what
    the simulator and the vectorised evaluators consume.
    """

    kind: str
    params: tuple = ()
    parts: tuple = ()

    def terms(self) -> np.ndarray:
        k, p = self.kind, self.params
        if k == "zero":
            rows = []
        elif k == "exp":
            rows = [(p[0], 0, 0, p[1], 0, 0)]
        elif k == "gauss":
            rows = [(p[0], 0, 0, 0, p[2], p[1])]
        elif k == "cos":
            rows = [(0.5, 0, 0, 1.0, 0, 0), (0.5, 0, math.pi, 1.0, 0, 0)]
        elif k == "pow":
            rows = [(p[0], 0, 0, 5.0 * math.log(p[1]), 0, 0)]
        elif k == "texp":
            rows = [(1.0, 1, 0, 0, 5.0, 1.0)]
        elif k == "mixture":
            return np.concatenate([f.terms() for f in self.parts] + [np.zeros((0, N_TERM_COLS))])
        else:
            raise ValueError(f"unknown triggering form {k!r}")
        return np.asarray(rows, dtype=float).reshape(-1, N_TERM_COLS)

    def __call__(self, t):
        return eval_terms(self.terms(), t)

    def is_exponential(self) -> bool:
        tm = self.terms()
        return bool(np.all(tm[:, 1] == 0) and np.all(tm[:, 2] == 0) and np.all(tm[:, 4] == 0))

    def integral(self) -> float:
        """``int_0^inf f``."""
        tm = self.terms()
        if len(tm) == 0:
            return 0.0
        if self.is_exponential():
            return float(np.sum(tm[:, 0] / tm[:, 3]))
        cut = decay_cutoff(tm)
        pts = [g for g in tm[:, 5] if 0 < g < cut]
        val, _ = integrate.quad(self, 0.0, cut, points=pts or None, limit=400, epsabs=1e-13)
        return float(val)

    def describe(self) -> dict:
        if self.kind == "mixture":
            return {"kind": "mixture", "parts": [f.describe() for f in self.parts]}
        return {"kind": self.kind, "params": list(self.params)}


def exp_decay(alpha: float, beta: float) -> GroundTruthFn:
    """``alpha * exp(-beta t)``."""
    if beta <= 0:
        raise ValueError("decay rate must be positive")
    return GroundTruthFn("exp", (float(alpha), float(beta)))


def gauss_bump(alpha: float, gamma: float, s: float) -> GroundTruthFn:
    """``alpha * exp(-s (t - gamma)^2)``."""
    return GroundTruthFn("gauss", (float(alpha), float(gamma), float(s)))


def cosine_damped() -> GroundTruthFn:
    """``(1 + cos(pi t)) exp(-t) / 2``."""
    return GroundTruthFn("cos")


def pow_exp(alpha: float, c: float) -> GroundTruthFn:
    """``alpha * c ** (-5 t)``."""
    return GroundTruthFn("pow", (float(alpha), float(c)))


def t_exp() -> GroundTruthFn:
    """``t * exp(-5 (t - 1)^2)``."""
    return GroundTruthFn("texp")


def zero() -> GroundTruthFn:
    return GroundTruthFn("zero")


def mixture(*parts: GroundTruthFn) -> GroundTruthFn:
    return GroundTruthFn("mixture", parts=tuple(parts))


def groundtruth_from_description(d: dict) -> GroundTruthFn:
    if d["kind"] == "mixture":
        return mixture(*(groundtruth_from_description(x) for x in d["parts"]))
    return GroundTruthFn(d["kind"], tuple(d.get("params", ())))


def eval_terms(terms: np.ndarray, t) -> np.ndarray | float:
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    pos = t >= 0
    tt = np.where(pos, t, 0.0)
    for a, m, w, b, s, g in terms:
        v = a * np.exp(-b * tt - s * (tt - g) ** 2)
        if m:
            v = v * tt**m
        if w:
            v = v * np.cos(w * tt)
        out += v
    out = np.where(pos, out, 0.0)
    return float(out) if out.ndim == 0 else out


def decay_cutoff(terms: np.ndarray, tol: float = 1e-15) -> float:
    """Lag beyond which every term stays below ``tol`` (doubling search)."""
    if len(terms) == 0:
        return 0.0
    env = np.abs(terms).copy()
    env[:, 2] = 0.0  # |cos| <= 1
    span = 1.0
    while span < 1e5:
        x = np.linspace(span, 2 * span, 2001)
        if np.max(eval_terms(env, x)) < tol:
            return span
        span *= 2
    raise UnsupportedModelError("triggering function does not decay")


def expansion_terms(f: KernelExpansion) -> np.ndarray:
    if not isinstance(f.kernel, GaussianKernel) or f.is_2d:
        raise UnsupportedModelError("only Gaussian time expansions compile to terms")
    sharp = 1.0 / (2.0 * f.kernel.bandwidth**2)
    rows = [(a, 0, 0, 0, sharp, c) for c, a in zip(f.centers, f.coefs)]
    return np.asarray(rows, dtype=float).reshape(-1, N_TERM_COLS)


def benchmark_model() -> "HawkesModel":
    """The 5-dimensional synthetic model with ``mu_i = 0.05``."""
    Z = zero()
    F = [
        [exp_decay(1, 2.5), Z, Z, gauss_bump(1, 1, 10), Z],
        [pow_exp(1, 2), cosine_damped(), exp_decay(1, 5), Z, Z],
        [Z, exp_decay(2, 3), Z, Z, Z],
        [Z, Z, Z, mixture(gauss_bump(0.6, 0, 3), gauss_bump(0.4, 1, 3)), exp_decay(1, 4)],
        [Z, Z, t_exp(), Z, exp_decay(1, 3)],
    ]
    return HawkesModel(np.full(5, 0.05), F)


# -- models and streams ------------------------------------------------------

@dataclass
class HawkesModel:
    """Base intensities ``mu`` and a ``p x p`` matrix of triggering functions.

    Entries of ``F`` are :class:`GroundTruthFn` or :class:`KernelExpansion`.
    ``F[i][j]`` is the effect of a dimension-``j`` arrival on dimension ``i``.
    """

    mu: np.ndarray
    F: list
    window: float = math.inf
    check_stability: bool = True

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float).reshape(-1)
        p = len(self.mu)
        if len(self.F) != p or any(len(row) != p for row in self.F):
            raise ValueError("F must be p x p")
        if np.any(self.mu <= 0):
            raise ValueError("base intensities must be positive")
        if self.check_stability and self.is_groundtruth():
            rho = self.spectral_radius()
            if rho >= 1.0:
                raise ValueError(f"branching matrix spectral radius {rho:.4f} >= 1")

    @property
    def p(self) -> int:
        return len(self.mu)

    def is_groundtruth(self) -> bool:
        return all(isinstance(f, GroundTruthFn) for row in self.F for f in row)

    def branching_matrix(self) -> np.ndarray:
        B = np.zeros((self.p, self.p))
        for i in range(self.p):
            for j in range(self.p):
                f = self.F[i][j]
                if isinstance(f, GroundTruthFn):
                    B[i, j] = f.integral()
                else:
                    upper = f.window if f.window is not None else 50.0
                    B[i, j] = integrate.quad(f, 0.0, upper, limit=400)[0]
        return B

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.branching_matrix()))))

    def stationary_rate(self) -> np.ndarray:
        """``(I - B)^{-1} mu``."""
        return np.linalg.solve(np.eye(self.p) - self.branching_matrix(), self.mu)

    def f(self, i: int, j: int, lags):
        fn = self.F[i][j]
        return fn(np.asarray(lags, dtype=float))

    def pair_terms(self, i: int, j: int) -> tuple[np.ndarray, float]:
        fn = self.F[i][j]
        if isinstance(fn, GroundTruthFn):
            tm = fn.terms()
            return tm, decay_cutoff(tm)
        tm = expansion_terms(fn)
        cut = fn.window if fn.window is not None else decay_cutoff(tm)
        return tm, cut


@dataclass
class EventStream:
    """Time-ordered multivariate arrivals on ``[0, T]``.

    ``dims`` are 0-based here; files use 1-based dimensions.
    """

    times: np.ndarray
    dims: np.ndarray
    T: float
    p: int
    marks: np.ndarray | None = None
    locations: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float).reshape(-1)
        self.dims = np.asarray(self.dims, dtype=np.int64).reshape(-1)
        if self.marks is not None:
            self.marks = np.asarray(self.marks, dtype=float).reshape(-1)
        if self.locations is not None:
            loc = np.asarray(self.locations, dtype=float)
            self.locations = loc if loc.ndim == 2 and len(loc) == 0 else loc.reshape(len(self.times), -1)
        n = len(self.times)
        if len(self.dims) != n:
            raise EventFormatError("times and dims differ in length")
        if n:
            if np.any(np.diff(self.times) < 0):
                raise EventFormatError("event times are not sorted")
            if self.times[0] < 0 or self.times[-1] > self.T:
                raise EventFormatError("event times outside [0, T]")
            if self.dims.min() < 0 or self.dims.max() >= self.p:
                raise EventFormatError("dimension index out of range")
            same = np.diff(self.times) == 0
            if np.any(same & (np.diff(self.dims) < 0)):
                raise EventFormatError("simultaneous events must be ordered by dimension")

    @classmethod
    def from_unsorted(cls, times, dims, T, p, marks=None, locations=None) -> "EventStream":
        """Sort by time, breaking ties by dimension then insertion order."""
        times = np.asarray(times, dtype=float)
        dims = np.asarray(dims, dtype=np.int64)
        order = np.lexsort((np.arange(len(times)), dims, times))
        return cls(
            times[order],
            dims[order],
            T,
            p,
            None if marks is None else np.asarray(marks, float)[order],
            None if locations is None else np.asarray(locations, float)[order],
        )

    def __len__(self) -> int:
        return len(self.times)

    def counts(self) -> np.ndarray:
        return np.bincount(self.dims, minlength=self.p)

    def count_before(self, t: float) -> int:
        """``N(t)`` over all dimensions (events with time <= t)."""
        return int(np.searchsorted(self.times, t, side="right"))

    def restrict(self, T: float) -> "EventStream":
        n = self.count_before(T)
        return EventStream(
            self.times[:n],
            self.dims[:n],
            T,
            self.p,
            None if self.marks is None else self.marks[:n],
            None if self.locations is None else self.locations[:n],
        )


# -- intensity -----------------------------------------------------------------

def _intensity_at(model, stream, i, t, z, left_limit):
    if left_limit:
        n = int(np.searchsorted(stream.times, t, side="left"))
    else:
        n = int(np.searchsorted(stream.times, t, side="right"))
    lags = t - stream.times[:n]
    dims = stream.dims[:n]
    keep = lags < z
    lags, dims = lags[keep], dims[keep]
    total = model.mu[i]
    for j in range(model.p):
        sel = lags[dims == j]
        if len(sel):
            total += float(np.sum(model.f(i, j, sel)))
    return float(total)


def intensity(model: HawkesModel, stream: EventStream, i: int, t: float, left_limit: bool = True) -> float:
    """``lambda_i(t) = mu_i + sum_j sum_n f_ij(t - tau_jn)``.

    With ``left_limit`` (default) only arrivals strictly before ``t`` count,
    which is the predictable intensity used in likelihoods.  Pass
    ``left_limit=False`` to include an arrival at exactly ``t`` (it adds
    ``f(0)``).
    """
    return _intensity_at(model, stream, i, t, math.inf, left_limit)


def intensity_truncated(
    model: HawkesModel, stream: EventStream, i: int, t: float, z: float, left_limit: bool = True
) -> float:
    """Intensity using only arrivals with ``t - tau < z``."""
    if not z > 0:
        raise ValueError("window must be positive")
    return _intensity_at(model, stream, i, t, z, left_limit)


def pairwise_lags(query, event_times, z=math.inf, chunk=2_000_000):
    """Index pairs ``(q, e)`` with ``0 < query[q] - event_times[e] < z``.

    Returns ``(q_idx, e_idx, lag)``.  Event times must be sorted.
    """
    query = np.asarray(query, dtype=float)
    hi = np.searchsorted(event_times, query, side="left")
    lo = np.zeros_like(hi) if math.isinf(z) else np.searchsorted(event_times, query - z, side="right")
    counts = hi - lo
    total = int(counts.sum())
    if total > 50 * chunk:
        raise MemoryError("too many (epoch, event) pairs; use a finite window")
    q_idx = np.repeat(np.arange(len(query)), counts)
    starts = np.repeat(lo - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
    e_idx = starts + np.arange(total)
    lag = query[q_idx] - event_times[e_idx]
    return q_idx, e_idx, lag


def intensity_at_times(model: HawkesModel, stream: EventStream, i: int, ts, z: float = math.inf) -> np.ndarray:
    """Vectorised left-limit (truncated) intensity of dimension ``i`` at many times."""
    ts = np.asarray(ts, dtype=float)
    out = np.full(len(ts), model.mu[i])
    q, e, lag = pairwise_lags(ts, stream.times, z)
    if len(q) == 0:
        return out
    # the right-closed window keeps lag == z out, matching the strict t - tau < z
    dims = stream.dims[e]
    for j in range(model.p):
        sel = dims == j
        if np.any(sel):
            np.add.at(out, q[sel], model.f(i, j, lag[sel]))
    return out


# -- simulation -----------------------------------------------------------------

ENVELOPE_STEP = 2e-3
ENVELOPE_MARGIN = 1.1


def _compile_model(model: HawkesModel):
    p = model.p
    blocks, offs, cut = [], np.zeros((p, p + 1), dtype=np.int64), np.zeros((p, p))
    pos = 0
    for i in range(p):
        offs[i, 0] = pos
        for j in range(p):
            tm, c = model.pair_terms(i, j)
            blocks.append(tm)
            pos += len(tm)
            offs[i, j + 1] = pos
            cut[i, j] = c
    terms = np.concatenate(blocks + [np.zeros((0, N_TERM_COLS))])
    n_env = int(np.ceil(cut.max() / ENVELOPE_STEP)) + 2 if cut.max() > 0 else 1
    env = np.zeros((p, p, n_env))
    x = np.arange(n_env) * ENVELOPE_STEP
    for i in range(p):
        for j in range(p):
            tm = terms[offs[i, j] : offs[i, j + 1]]
            if len(tm) == 0:
                continue
            vals = np.maximum(eval_terms(tm, x), 0.0)
            vals[x > cut[i, j] + ENVELOPE_STEP] = 0.0
            env[i, j] = ENVELOPE_MARGIN * np.maximum.accumulate(vals[::-1])[::-1]
    return terms, offs, cut, env


def simulate(model: HawkesModel, T: float, seed: int, block: int = 1 << 16) -> EventStream:
    """Exact simulation by thinning (Ogata-style, all dimensions jointly).

    The dominating rate is refreshed after every candidate from a
    non-increasing envelope of each triggering function, inflated by 10%.
    Uniforms come from a Philox generator keyed by ``seed``.
    """
    if not T > 0:
        raise ValueError("horizon must be positive")
    if not model.is_groundtruth() and model.check_stability is False:
        pass
    rate = model.stationary_rate() if model.is_groundtruth() else model.mu * 10
    if np.any(rate <= 0) or not np.all(np.isfinite(rate)):
        raise SimulationError("model has no finite stationary rate")
    guard = int(100 * max(float(np.sum(rate)) * T, 1.0))
    terms, offs, cut, env = _compile_model(model)
    rng = np.random.Generator(np.random.Philox(seed))
    cap = max(1024, int(2 * float(np.sum(rate)) * T))
    times = np.empty(cap)
    dims = np.empty(cap, dtype=np.int64)
    n, t, lo = 0, 0.0, 0
    left = np.zeros(0)
    while True:
        u = np.concatenate([left, rng.random(block)])
        t, n, lo, used, status = _numba_sim.thin(
            model.mu, terms, offs, cut, env, ENVELOPE_STEP, T, t, times, dims, n, lo, u, guard
        )
        left = u[used:]
        if status == 0:
            break
        if status == 1:
            continue
        if status == 3:
            times = np.concatenate([times, np.empty(cap)])
            dims = np.concatenate([dims, np.empty(cap, dtype=np.int64)])
            cap *= 2
            continue
        if status == 2:
            raise SimulationError("thinning bound violated; envelope too small")
        if status == 4:
            raise SimulationError(f"explosion guard: more than {guard} events")
    return EventStream(times[:n].copy(), dims[:n].copy(), T, model.p)


# -- exact likelihood for exponential kernels ---------------------------------------

def exact_nll_exponential(model: HawkesModel, stream: EventStream, i: int, T: float | None = None) -> float:
    """Negative log-likelihood of dimension ``i`` on ``[0, T]``.

    The compensator is integrated in closed form and the log-intensity at each
    arrival comes from the exponential Markov recursion, so no quadrature is
    involved.
    """
    T = stream.T if T is None else T
    p = model.p
    blocks = []
    for j in range(p):
        fn = model.F[i][j]
        if not isinstance(fn, GroundTruthFn) or not fn.is_exponential():
            raise UnsupportedModelError("exact likelihood needs exponential triggering functions")
        blocks.append(fn.terms())
    n = stream.count_before(T)
    times, dims = stream.times[:n], stream.dims[:n]
    comp = model.mu[i] * T
    for j in range(p):
        tj = times[dims == j]
        for a, _, _, b, _, _ in blocks[j]:
            comp += a / b * float(np.sum(-np.expm1(-b * (T - tj))))
    # recursion state per (j, term): sum over past arrivals of exp(-b (t - tau))
    states = [np.zeros(len(blocks[j])) for j in range(p)]
    rates = [blocks[j][:, 3] for j in range(p)]
    amps = [blocks[j][:, 0] for j in range(p)]
    last = 0.0
    logsum = 0.0
    k = 0
    while k < n:
        t = times[k]
        dt = t - last
        for j in range(p):
            states[j] *= np.exp(-rates[j] * dt)
        last = t
        # all arrivals at this instant see the same left limit
        k2 = k
        while k2 < n and times[k2] == t:
            k2 += 1
        lam = model.mu[i] + sum(float(amps[j] @ states[j]) for j in range(p))
        n_i = int(np.sum(dims[k:k2] == i))
        if n_i:
            logsum += n_i * math.log(lam)
        for kk in range(k, k2):
            states[dims[kk]] += 1.0
        k = k2
    return float(comp - logsum)


# -- event files --------------------------------------------------------------------

def write_events(stream: EventStream, path_or_buf=None) -> str:
    """CSV with header ``time,dim[,mark][,x1,...]``; dims 1-based."""
    buf = io.StringIO()
    buf.write(f"# horizon={stream.T!r} p={stream.p}\n")
    w = csv.writer(buf, lineterminator="\n")
    header = ["time", "dim"]
    if stream.marks is not None:
        header.append("mark")
    nloc = 0 if stream.locations is None else stream.locations.shape[1]
    header += [f"x{m + 1}" for m in range(nloc)]
    w.writerow(header)
    for k in range(len(stream)):
        row = [repr(float(stream.times[k])), str(int(stream.dims[k]) + 1)]
        if stream.marks is not None:
            row.append(repr(float(stream.marks[k])))
        if nloc:
            row += [repr(float(v)) for v in stream.locations[k]]
        w.writerow(row)
    text = buf.getvalue()
    if path_or_buf is not None:
        with open(path_or_buf, "w") as fh:
            fh.write(text)
    return text


def parse_events(text: str, sort: bool = False, T: float | None = None, p: int | None = None) -> EventStream:
    """Parse the event CSV.  Raises :class:`EventFormatError` with line numbers."""
    meta = {}
    body = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
            continue
        if line.strip():
            body.append((lineno, line))
    if not body:
        raise EventFormatError("missing header")
    hline, header_text = body[0]
    header = [h.strip() for h in next(csv.reader([header_text]))]
    if header[:2] != ["time", "dim"]:
        raise EventFormatError(f"line {hline}: header must start with time,dim")
    has_mark = len(header) > 2 and header[2] == "mark"
    loc_cols = header[3:] if has_mark else header[2:]
    for m, name in enumerate(loc_cols):
        if name != f"x{m + 1}":
            raise EventFormatError(f"line {hline}: unexpected column {name!r}")
    ncol = len(header)
    times, dims, marks, locs = [], [], [], []
    bad = []
    for lineno, line in body[1:]:
        row = next(csv.reader([line]))
        if len(row) != ncol:
            bad.append(lineno)
            continue
        try:
            t = float(row[0])
            d = int(row[1])
            vals = [float(v) for v in row[2:]]
        except ValueError:
            bad.append(lineno)
            continue
        if not math.isfinite(t) or t < 0 or d < 1 or not all(math.isfinite(v) for v in vals):
            bad.append(lineno)
            continue
        times.append(t)
        dims.append(d - 1)
        if has_mark:
            marks.append(vals[0])
            vals = vals[1:]
        if loc_cols:
            locs.append(vals)
    if bad:
        raise EventFormatError("malformed rows at lines " + ", ".join(map(str, bad)))
    times_a = np.asarray(times, dtype=float)
    dims_a = np.asarray(dims, dtype=np.int64)
    if p is None:
        p = int(meta["p"]) if "p" in meta else (int(dims_a.max()) + 1 if len(dims_a) else 1)
    if T is None:
        T = float(meta["horizon"]) if "horizon" in meta else (float(times_a.max()) if len(times_a) else 0.0)
    marks_a = np.asarray(marks, float) if has_mark else None
    locs_a = np.asarray(locs, float).reshape(len(times), len(loc_cols)) if loc_cols else None
    if len(times_a) > 1:
        order_bad = (np.diff(times_a) < 0) | ((np.diff(times_a) == 0) & (np.diff(dims_a) < 0))
        if np.any(order_bad):
            if not sort:
                first = int(np.argmax(order_bad))
                raise EventFormatError(f"unsorted times at line {body[first + 2][0]}")
            return EventStream.from_unsorted(times_a, dims_a, T, p, marks_a, locs_a)
    return EventStream(times_a, dims_a, T, p, marks_a, locs_a)


def read_events(path, sort: bool = False, T: float | None = None, p: int | None = None) -> EventStream:
    with open(path) as fh:
        return parse_events(fh.read(), sort=sort, T=T, p=p)


def random_exponential_model(rng: np.random.Generator, p: int, radius: float = 0.7) -> HawkesModel:
    """Random stable model with exponential kernels (used by oracle checks)."""
    alpha = rng.uniform(0.0, 1.0, size=(p, p)) * (rng.random((p, p)) < 0.8)
    beta = rng.uniform(0.5, 4.0, size=(p, p))
    B = alpha / beta
    r = np.max(np.abs(np.linalg.eigvals(B)))
    if r > 0:
        alpha *= radius * rng.uniform(0.3, 1.0) / r
    mu = rng.uniform(0.2, 1.0, size=p)
    F = [[exp_decay(alpha[i, j], beta[i, j]) if alpha[i, j] > 0 else zero() for j in range(p)] for i in range(p)]
    return HawkesModel(mu, F)


def exp_model(mu: Sequence[float], alpha, beta) -> HawkesModel:
    alpha = np.atleast_2d(np.asarray(alpha, float))
    beta = np.broadcast_to(np.asarray(beta, float), alpha.shape)
    p = alpha.shape[0]
    F = [[exp_decay(alpha[i, j], beta[i, j]) if alpha[i, j] != 0 else zero() for j in range(p)] for i in range(p)]
    return HawkesModel(np.asarray(mu, float), F)


__all__ = [
    "EventFormatError",
    "EventStream",
    "GroundTruthFn",
    "HawkesModel",
    "SimulationError",
    "UnsupportedModelError",
    "cosine_damped",
    "exact_nll_exponential",
    "exp_decay",
    "exp_model",
    "gauss_bump",
    "intensity",
    "intensity_at_times",
    "intensity_truncated",
    "mixture",
    "benchmark_model",
    "parse_events",
    "pow_exp",
    "random_exponential_model",
    "read_events",
    "simulate",
    "t_exp",
    "write_events",
    "zero",
]
