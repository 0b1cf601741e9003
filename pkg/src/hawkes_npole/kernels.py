"""Reproducing kernels and finite kernel expansions.

A triggering-function estimate is a weighted sum of kernel sections
``f(x) = sum_s a_s K(s, x)``.  Time kernels act on scalars; the product
kernel acts on ``(time, mark)`` rows.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

# round-off counter for rkhs_norm_sq clamping
NEGATIVE_NORM_CLAMPS = 0


def _check_finite(*arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("kernel arguments must be finite")


@dataclass(frozen=True)
class GaussianKernel:
    bandwidth: float = 0.2

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    def __call__(self, x, y):
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return np.exp(-(d * d) / (2.0 * self.bandwidth**2))

    def vec(self, x, y):
        """Vector points along the last axis."""
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return np.exp(-np.sum(d * d, axis=-1) / (2.0 * self.bandwidth**2))

    def describe(self) -> dict:
        return {"kernel": "gaussian", "bandwidth": self.bandwidth}


@dataclass(frozen=True)
class LaplacianKernel:
    bandwidth: float = 0.2

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    def __call__(self, x, y):
        d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        return np.exp(-d / self.bandwidth)

    def vec(self, x, y):
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return np.exp(-np.sqrt(np.sum(d * d, axis=-1)) / self.bandwidth)

    def describe(self) -> dict:
        return {"kernel": "laplacian", "bandwidth": self.bandwidth}


@dataclass(frozen=True)
class PolynomialKernel:
    """``(alpha * x * y + beta) ** (2 * d)``; even degree so nonnegativity is SOS-checkable."""

    d: int = 2
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.d < 1 or not (self.alpha > 0 and self.beta > 0):
            raise ValueError("polynomial kernel needs d >= 1 and positive alpha, beta")

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (self.alpha * x * y + self.beta) ** (2 * self.d)

    def half(self) -> "PolynomialKernel":
        """Kernel of degree ``d`` whose feature map squares to this one."""
        return _HalfPolynomial(self.d, self.alpha, self.beta)

    def describe(self) -> dict:
        return {"kernel": "polynomial", "d": self.d, "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class _HalfPolynomial:
    d: int
    alpha: float
    beta: float

    def __call__(self, x, y):
        return (self.alpha * np.asarray(x, float) * np.asarray(y, float) + self.beta) ** self.d


@dataclass(frozen=True)
class ProductKernel:
    """Product of a time kernel and a mark (or displacement) kernel on rows ``(t, v...)``."""

    time: object = field(default_factory=GaussianKernel)
    mark: object = field(default_factory=lambda: GaussianKernel(1.0))

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        kt = self.time(x[..., 0], y[..., 0])
        rest_x, rest_y = x[..., 1:], y[..., 1:]
        if rest_x.shape[-1] == 1:
            km = self.mark(rest_x[..., 0], rest_y[..., 0])
        else:
            km = self.mark.vec(rest_x, rest_y)
        return kt * km

    def describe(self) -> dict:
        return {
            "kernel": "product",
            "time": self.time.describe(),
            "mark": self.mark.describe(),
        }


Kernel = GaussianKernel | LaplacianKernel | PolynomialKernel | ProductKernel


def kernel_from_description(desc: dict):
    kind = desc["kernel"]
    if kind == "gaussian":
        return GaussianKernel(float(desc["bandwidth"]))
    if kind == "laplacian":
        return LaplacianKernel(float(desc["bandwidth"]))
    if kind == "polynomial":
        return PolynomialKernel(int(desc["d"]), float(desc["alpha"]), float(desc["beta"]))
    if kind == "product":
        return ProductKernel(kernel_from_description(desc["time"]), kernel_from_description(desc["mark"]))
    raise ValueError(f"unknown kernel {kind!r}")


def is_unit_diagonal(k) -> bool:
    if isinstance(k, ProductKernel):
        return is_unit_diagonal(k.time) and is_unit_diagonal(k.mark)
    return isinstance(k, (GaussianKernel, LaplacianKernel))


def kernel_eval(k, x, y) -> float:
    """Evaluate ``K(x, y)`` for a single pair of points."""
    _check_finite(x, y)
    return float(k(np.asarray(x, float), np.asarray(y, float)))


def gram(k, xs, ys=None) -> np.ndarray:
    """Gramian ``[K(x_a, y_b)]``; points are scalars or rows."""
    xs = np.asarray(xs, dtype=float)
    ys = xs if ys is None else np.asarray(ys, dtype=float)
    if xs.ndim <= 1:
        return k(xs.reshape(-1)[:, None], ys.reshape(-1)[None, :])
    return k(xs[:, None, :], ys[None, :, :])


@dataclass
class KernelExpansion:
    """``f(x) = sum_s a_s K(s, x)`` with an optional budget and support window.

    Evaluation is zero for time arguments outside ``[0, window]`` when a
    window is set.  Centers are scalars (time kernels) or ``(time, mark...)``
    rows (product kernels).
    """

    kernel: object
    centers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    coefs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    budget: int | None = None
    window: float | None = None

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float)
        self.coefs = np.asarray(self.coefs, dtype=float).reshape(-1)
        if self.centers.ndim == 2 and self.centers.shape[0] == 0:
            pass
        elif self.centers.ndim == 0:
            self.centers = self.centers.reshape(1)
        if len(self.centers) != len(self.coefs):
            raise ValueError("centers and coefficients must align")

    def __len__(self) -> int:
        return len(self.coefs)

    @property
    def is_2d(self) -> bool:
        return self.centers.ndim == 2

    def __call__(self, x):
        return expansion_eval(self, x)

    def gram(self) -> np.ndarray:
        return gram(self.kernel, self.centers)

    def copy(self) -> "KernelExpansion":
        return replace(self, centers=self.centers.copy(), coefs=self.coefs.copy())

    def with_coefs(self, coefs) -> "KernelExpansion":
        return replace(self, centers=self.centers.copy(), coefs=np.asarray(coefs, float).copy())

    def __add__(self, other: "KernelExpansion") -> "KernelExpansion":
        if len(other) == 0:
            return self.copy()
        if len(self) == 0:
            return replace(self, centers=other.centers.copy(), coefs=other.coefs.copy())
        return merge_duplicates(
            replace(
                self,
                centers=np.concatenate([self.centers, other.centers]),
                coefs=np.concatenate([self.coefs, other.coefs]),
            )
        )

    def scaled(self, s: float) -> "KernelExpansion":
        return self.with_coefs(self.coefs * s)

    def __sub__(self, other: "KernelExpansion") -> "KernelExpansion":
        return self + other.scaled(-1.0)


def merge_duplicates(f: KernelExpansion) -> KernelExpansion:
    """Sum coefficients of identical centers, keeping first-seen order."""
    if len(f) == 0:
        return f.copy()
    keys = f.centers if f.is_2d else f.centers[:, None]
    uniq, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    coefs = np.zeros(len(uniq))
    np.add.at(coefs, inverse, f.coefs)
    order = np.argsort(first, kind="stable")
    centers = uniq[order] if f.is_2d else uniq[order, 0]
    return replace(f, centers=centers, coefs=coefs[order])


def expansion_eval(f: KernelExpansion, x):
    """Evaluate the expansion at one point or an array of points."""
    x = np.asarray(x, dtype=float)
    _check_finite(x)
    scalar = x.ndim == 0 or (f.is_2d and x.ndim == 1)
    pts = x.reshape(1, -1) if (f.is_2d and x.ndim == 1) else np.atleast_1d(x)
    if len(f) == 0:
        out = np.zeros(len(pts))
    else:
        out = gram(f.kernel, pts, f.centers) @ f.coefs
    if f.window is not None:
        t = pts[:, 0] if f.is_2d else pts
        out = np.where((t >= 0) & (t <= f.window), out, 0.0)
    return float(out[0]) if scalar else out


def rkhs_norm_sq(f: KernelExpansion) -> float:
    """``a^T G a`` clamped at zero for tiny negative round-off."""
    global NEGATIVE_NORM_CLAMPS
    if len(f) == 0:
        return 0.0
    val = float(f.coefs @ f.gram() @ f.coefs)
    if val < 0.0:
        if val < -1e-10 * max(1.0, float(np.sum(np.abs(f.coefs))) ** 2):
            raise ArithmeticError(f"Gramian not PSD: a^T G a = {val}")
        NEGATIVE_NORM_CLAMPS += 1
        val = 0.0
    return val


def rkhs_distance(f: KernelExpansion, g: KernelExpansion) -> float:
    return math.sqrt(rkhs_norm_sq(f - g))


def truncate_budget(f: KernelExpansion) -> tuple[KernelExpansion, float]:
    """Drop centers until at most ``budget`` remain.

    The center minimising ``|a_s| K(s, s)`` goes first.  Returns the
    truncated expansion and its RKHS distance to the input.
    """
    if f.budget is None or len(f) <= f.budget:
        return f.copy(), 0.0
    diag = f.kernel(f.centers, f.centers)
    score = np.abs(f.coefs) * diag
    # stable sort: among ties the earlier center is dropped
    order = np.argsort(score, kind="stable")
    n_drop = len(f) - f.budget
    keep = np.sort(order[n_drop:])
    out = replace(f, centers=f.centers[keep].copy(), coefs=f.coefs[keep].copy())
    return out, rkhs_distance(f, out)


def snap_center(t, g: float):
    """Round ``t`` to the nearest multiple of ``g``."""
    if not g > 0:
        raise ValueError("grid step must be positive")
    return np.rint(np.asarray(t, dtype=float) / g) * g if np.ndim(t) else float(np.rint(t / g) * g)


# -- CSV round trip ---------------------------------------------------------

def _kernel_header(f: KernelExpansion) -> str:
    parts = [f"{k}={v!r}" for k, v in _flatten(f.kernel.describe()).items()]
    parts.append(f"budget={f.budget!r}")
    parts.append(f"window={f.window!r}")
    return "# " + " ".join(parts)


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out.update(_flatten(v, prefix + k + "."))
        else:
            out[prefix + k] = v
    return out


def _unflatten(flat: dict) -> dict:
    out: dict = {}
    for key, v in flat.items():
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = v
    return out


def _parse_literal(s: str):
    if s == "None":
        return None
    if s.startswith("'") and s.endswith("'"):
        return s[1:-1]
    try:
        return int(s)
    except ValueError:
        return float(s)


def expansion_to_csv(f: KernelExpansion) -> str:
    buf = io.StringIO()
    buf.write(_kernel_header(f) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    ncol = f.centers.shape[1] if f.is_2d else 1
    w.writerow([f"c{m}" for m in range(ncol)] + ["coefficient"])
    for c, a in zip(f.centers, f.coefs):
        row = [repr(float(v)) for v in np.atleast_1d(c)]
        w.writerow(row + [repr(float(a))])
    return buf.getvalue()


def expansion_from_csv(text: str) -> KernelExpansion:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ValueError("missing kernel header")
    flat = {}
    for tok in lines[0][2:].split():
        k, v = tok.split("=", 1)
        flat[k] = _parse_literal(v)
    budget = flat.pop("budget")
    window = flat.pop("window")
    kernel = kernel_from_description(_unflatten(flat))
    rows = list(csv.reader(lines[1:]))
    header, body = rows[0], rows[1:]
    ncol = len(header) - 1
    data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(-1, ncol + 1)
    centers = data[:, :ncol] if ncol > 1 else data[:, 0]
    return KernelExpansion(kernel, centers, data[:, ncol], budget=budget, window=window)


def write_expansion(f: KernelExpansion, path) -> None:
    with open(path, "w") as fh:
        fh.write(expansion_to_csv(f))


def read_expansion(path) -> KernelExpansion:
    with open(path) as fh:
        return expansion_from_csv(fh.read())


def lattice(z: float, g: float) -> np.ndarray:
    """Snap lattice ``{0, g, 2g, ..., z}``."""
    n = int(round(z / g))
    return np.arange(n + 1) * g


def iter_pairs(p: int) -> Iterable[tuple[int, int]]:
    for i in range(p):
        for j in range(p):
            yield i, j
