"""Non-decreasing sub-linear functions used to parameterize conflict graphs.

Four families are supported::

    constant   f(x) = g
    tlog       f(x) = g * max(log2(x) ** (2 / (alpha - m)), 1)
    log        f(x) = s * max(log_b(x), 1)
    power      f(x) = s * x ** e,   0 < e < 1

All logarithms are base 2 unless a base is given.  Evaluation accepts floats,
numpy arrays and (for the logarithmic families) arbitrarily large Python
integers, so that iterated values such as ``f_star(log2, 2**65536)`` can be
computed without overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

FAMILIES = ("constant", "tlog", "log", "power")

# f_star never needs more compositions than this on any realistic input.
MAX_COMPOSITIONS = 200

_FLOAT_LIMIT = 2.0**1000


class DivergentIterationError(ValueError):
    pass


@dataclass(frozen=True)
class SublinearFn:
    family: str
    scale: float = 1.0
    base: float = 2.0
    exponent: float = 0.5
    alpha: float | None = None
    m: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown function family {self.family!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.family == "log" and not self.base > 1:
            raise ValueError("log base must exceed 1")
        if self.family == "power" and not 0 < self.exponent < 1:
            raise ValueError("power exponent must lie in (0, 1)")
        if self.family == "tlog":
            if self.alpha is None or self.m is None:
                raise ValueError("tlog needs alpha and m")
            if not self.alpha > self.m:
                raise ValueError("tlog needs alpha > m")

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, gamma: float) -> "SublinearFn":
        return cls("constant", scale=float(gamma))

    @classmethod
    def tlog(cls, alpha: float, m: float, gamma: float = 1.0) -> "SublinearFn":
        return cls("tlog", scale=float(gamma), alpha=float(alpha), m=float(m))

    @classmethod
    def log(cls, scale: float = 1.0, base: float = 2.0) -> "SublinearFn":
        return cls("log", scale=float(scale), base=float(base))

    @classmethod
    def power(cls, exponent: float, scale: float = 1.0) -> "SublinearFn":
        return cls("power", scale=float(scale), exponent=float(exponent))

    def scaled(self, factor: float) -> "SublinearFn":
        """Return ``factor * f``."""
        return replace(self, scale=self.scale * factor)

    @property
    def tlog_exponent(self) -> float:
        return 2.0 / (self.alpha - self.m)

    # -- evaluation -------------------------------------------------------

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Evaluate at ``x >= 1`` (scalar, array, or big int)."""
        if isinstance(x, int) and not isinstance(x, bool) and x > _FLOAT_LIMIT:
            return self._eval_bigint(x)
        arr = np.asarray(x, dtype=float)
        if np.any(arr < 1) or np.any(np.isnan(arr)):
            raise ValueError("sub-linear functions are evaluated on x >= 1 only")
        out = self._eval_array(arr)
        if np.ndim(x) == 0:
            return float(out)
        return out

    def _eval_array(self, x: np.ndarray) -> np.ndarray:
        if self.family == "constant":
            return np.full_like(x, self.scale)
        # element-wise through math so results never depend on array length or SIMD path
        flat = [self._eval_float(v) for v in x.ravel().tolist()]
        return np.array(flat, dtype=float).reshape(x.shape)

    def _eval_float(self, x: float) -> float:
        if self.family == "tlog":
            return self.scale * max(math.log2(x) ** self.tlog_exponent, 1.0)
        if self.family == "log":
            return self.scale * max(math.log2(x) / math.log2(self.base), 1.0)
        if self.family == "power":
            return self.scale * x**self.exponent
        return self.scale

    def _eval_bigint(self, x: int) -> float:
        lg = math.log2(x)
        if self.family == "constant":
            return self.scale
        if self.family == "tlog":
            return self.scale * max(lg**self.tlog_exponent, 1.0)
        if self.family == "log":
            return self.scale * max(lg / math.log2(self.base), 1.0)
        e = self.exponent * lg + math.log2(self.scale)
        if e > 1000:
            raise OverflowError("power function value exceeds float range")
        return 2.0**e

    def spec_string(self) -> str:
        if self.family == "constant":
            return f"const:{_fmt(self.scale)}"
        if self.family == "tlog":
            return f"tlog:g={_fmt(self.scale)}"
        if self.family == "log":
            parts = []
            if self.scale != 1.0:
                parts.append(f"s={_fmt(self.scale)}")
            if self.base != 2.0:
                parts.append(f"b={_fmt(self.base)}")
            return "log" + (":" + ",".join(parts) if parts else "")
        return f"pow:e={_fmt(self.exponent)},s={_fmt(self.scale)}"

    def to_json(self) -> dict:
        d = {"family": self.family, "scale": self.scale, "spec": self.spec_string()}
        if self.family == "log":
            d["base"] = self.base
        if self.family == "power":
            d["exponent"] = self.exponent
        if self.family == "tlog":
            d["alpha"] = self.alpha
            d["m"] = self.m
        return d


def _fmt(v: float) -> str:
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def parse_fn(spec: str, alpha: float | None = None, m: float | None = None) -> SublinearFn:
    """Parse a function spec string such as ``const:1.5``, ``tlog:g=2``,
    ``log``, ``log:s=2,b=10`` or ``pow:e=0.5,s=3``.

    ``tlog`` inherits ``alpha`` and ``m`` from the caller (normally the
    instance being processed).
    """
    name, _, rest = spec.strip().partition(":")
    name = name.lower()
    kv: dict[str, float] = {}
    positional: list[float] = []
    if rest:
        for tok in rest.split(","):
            tok = tok.strip()
            if not tok:
                continue
            if "=" in tok:
                k, v = tok.split("=", 1)
                kv[k.strip()] = float(v)
            else:
                positional.append(float(tok))
    try:
        if name in ("const", "constant"):
            gamma = positional[0] if positional else kv.get("g", kv.get("gamma", 1.0))
            return SublinearFn.constant(gamma)
        if name == "tlog":
            a = kv.get("alpha", alpha)
            mm = kv.get("m", m)
            if a is None or mm is None:
                raise ValueError("tlog needs alpha and m (from the instance or the spec string)")
            return SublinearFn.tlog(a, mm, kv.get("g", positional[0] if positional else 1.0))
        if name in ("log", "log2"):
            return SublinearFn.log(kv.get("s", 1.0), kv.get("b", 2.0))
        if name in ("pow", "power"):
            return SublinearFn.power(kv.get("e", positional[0] if positional else 0.5), kv.get("s", 1.0))
    except IndexError:
        pass
    raise ValueError(f"bad function spec {spec!r}")


def iterate_c(f: Callable, x, c: int):
    """Compute the ``c``-fold composition ``f(f(...f(x)))``.

    Stops and returns 1.0 as soon as an intermediate value drops below 1.
    """
    if c < 1:
        raise ValueError("c must be a positive integer")
    if x < 1:
        raise ValueError("x must be >= 1")
    v = x
    for _ in range(c):
        v = f(v)
        if v < 1:
            return 1.0
    return v


def threshold_x0(f: SublinearFn) -> float:
    """The point past which iteration of ``f`` is counted, plus one.

    Closed forms for constant, log2 and power; numeric search otherwise.
    The numeric search locates the last crossing of ``f(x) = x`` so that
    ``f(x) < x`` holds on the whole tail beyond it.
    """
    if f.family == "constant":
        return max(f.scale, 1.0) + 1.0
    if f.family == "log" and f.scale == 1.0 and f.base == 2.0:
        return 2.0
    if f.family == "power":
        return max(f.scale ** (1.0 / (1.0 - f.exponent)), 1.0) + 1.0
    return _crossing_by_search(f) + 1.0


def _crossing_by_search(f: Callable, top_exp: int = 60, steps_per_octave: int = 8) -> float:
    grid = 2.0 ** (np.arange(top_exp * steps_per_octave + 1) / steps_per_octave)
    vals = np.array([f(float(x)) for x in grid])
    above = vals >= grid
    if above[-1]:
        raise DivergentIterationError(f"f(x) >= x up to 2^{top_exp}; iteration diverges")
    idx = np.nonzero(above)[0]
    if len(idx) == 0:
        return 1.0
    lo, hi = float(grid[idx[-1]]), float(grid[idx[-1] + 1])
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) >= mid:
            lo = mid
        else:
            hi = mid
    return lo


def f_star(f: SublinearFn, x, x0: float | None = None) -> int:
    """Iterated ``f``: the least ``c`` with ``f^(c)(x) <= x0`` (1 if ``x <= x0``)."""
    if x < 1:
        raise ValueError("x must be >= 1")
    if x0 is None:
        x0 = threshold_x0(f)
    if x <= x0:
        return 1
    v = x
    for c in range(1, MAX_COMPOSITIONS + 1):
        v = f(v)
        if v <= x0:
            return c
    raise DivergentIterationError(f"f* did not reach x0={x0} within {MAX_COMPOSITIONS} compositions")


def log_star(x) -> int:
    """``log*`` with ``x0 = 2``."""
    return f_star(SublinearFn.log(), x)


def is_strongly_sublinear_probe(
    f: Callable,
    c: float = 2.0,
    max_exp: int = 40,
    steps_per_octave: int = 2,
    candidates: Iterable[float] | None = None,
):
    """Numerically probe strong sub-linearity of ``f`` for one constant ``c``.

    Looks for the smallest ``c'`` among ``candidates`` such that
    ``c * f(x) / x <= f(y) / y`` holds for every grid pair with ``x >= c' * y``.
    Returns ``("witness", c')`` or ``("counterexample", (x, y))``, the latter
    taken at the largest candidate tried.  This is a heuristic, not a proof.
    """
    if c < 1:
        raise ValueError("c must be >= 1")
    grid = 2.0 ** (np.arange(max_exp * steps_per_octave + 1) / steps_per_octave)
    ratio = np.array([f(float(x)) / x for x in grid])
    if candidates is None:
        candidates = 2.0 ** np.arange(0, max_exp // 2 + 1)
    # viol[a, b] compares x = grid[a] against y = grid[b]
    viol = c * ratio[:, None] > ratio[None, :] * (1 + 1e-12)
    last = None
    for cp in candidates:
        ok_pairs = grid[:, None] >= cp * grid[None, :]
        bad = viol & ok_pairs
        if not bad.any():
            return "witness", float(cp)
        a, b = np.argwhere(bad)[0]
        last = (float(grid[a]), float(grid[b]))
    return "counterexample", last


def nondecreasing_on(f: Callable, xs: Sequence[float]) -> bool:
    vals = [f(x) for x in sorted(xs)]
    return all(u <= v for u, v in zip(vals, vals[1:]))
