"""Scheduling and weighted capacity on top of the conflict graphs.

``schedule`` colors ``G_{gamma * tlog}`` greedily and, in verified mode,
checks every color class with the exact power-control oracle, splitting
failing classes by first fit.  ``opts_oracle`` gives the true optimum for
small instances so that the heuristics can be measured against it.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .conflict import b_measure, build, f_independent_set
from .funclib import SublinearFn, log_star
from .graphalg import WisSolution, greedy_color, local_ratio_wis
from .metric import LinkInstance, NonFadingError
from .sinr import FeasibilityVerdict, aggregate_influence, exact_feasible, kesselheim_sufficient

MAX_OPTS_N = 12
BENCH_FIELDS = ("seed", "n", "delta", "log_star_delta", "slots", "b_gamma", "b_tlog", "baseline_slots")


def default_threads() -> int:
    """Worker cap from ``SINRC_THREADS`` (default 1, i.e. serial)."""
    raw = os.environ.get("SINRC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"SINRC_THREADS must be a positive integer, got {raw!r}") from None


@dataclass
class Schedule:
    slots: list  # lists of link positions
    certificates: list | None = None  # FeasibilityVerdict per slot, verified mode only
    meta: dict = field(default_factory=dict)

    @property
    def n_slots(self) -> int:
        return len(self.slots)

    def is_partition(self, n: int) -> bool:
        seen = sorted(k for s in self.slots for k in s)
        return seen == list(range(n)) and all(self.slots)

    def infeasible_slots(self, instance: LinkInstance) -> list[int]:
        """Indices of slots that the exact oracle does not certify."""
        return [k for k, s in enumerate(self.slots) if not exact_feasible(instance, s).feasible]

    def to_json(self, instance: LinkInstance) -> dict:
        ids = instance.ids
        return {
            "slots": [[int(ids[k]) for k in s] for s in self.slots],
            "certificates": None if self.certificates is None else [c.to_json(ids) for c in self.certificates],
            "meta": self.meta,
        }


def _require_fading(instance: LinkInstance) -> None:
    if not instance.is_fading:
        raise NonFadingError(
            f"scheduling needs a fading metric: alpha={instance.alpha} must exceed doubling dimension {instance.m}")


def _canonical(instance: LinkInstance, slots, certs=None):
    """Sort links within a slot by id and slots by their smallest id."""
    ids = instance.ids
    keyed = []
    for k, s in enumerate(slots):
        s = sorted(s, key=lambda v: ids[v])
        keyed.append((ids[s[0]], s, None if certs is None else certs[k]))
    keyed.sort(key=lambda t: t[0])
    return [t[1] for t in keyed], (None if certs is None else [t[2] for t in keyed])


def first_fit_feasible(instance: LinkInstance, links) -> tuple[list, list]:
    """Place links in decreasing length order into the earliest exact-feasible slot."""
    rank = instance.rank
    slots: list[list[int]] = []
    certs: list[FeasibilityVerdict] = []
    for v in sorted(links, key=lambda u: -rank[u]):
        for k, s in enumerate(slots):
            verdict = exact_feasible(instance, s + [v])
            if verdict.feasible:
                s.append(v)
                certs[k] = verdict
                break
        else:
            slots.append([v])
            certs.append(exact_feasible(instance, [v]))
    return slots, certs


def _verify_class(instance: LinkInstance, links):
    verdict = exact_feasible(instance, links)
    if verdict.feasible:
        return [list(links)], [verdict], False
    slots, certs = first_fit_feasible(instance, links)
    return slots, certs, True


def schedule(instance: LinkInstance, gamma: float = 1.0, verify: bool = True,
             threads: int | None = None) -> Schedule:
    """Partition the links into slots by greedily coloring ``G_{gamma * tlog}``.

    With ``verify`` every slot carries an exact-oracle certificate; color
    classes that fail are split by first fit in decreasing length order.
    """
    _require_fading(instance)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    f = SublinearFn.tlog(instance.alpha, instance.m, gamma)
    n = instance.n
    if n == 0:
        return Schedule([], [] if verify else None, {"f": f.spec_string(), "gamma": gamma, "repaired_slots": 0})
    g = build(instance, f)
    coloring = greedy_color(g)
    classes = coloring.classes()
    meta = {
        "f": f.spec_string(),
        "gamma": gamma,
        "colors": coloring.colors_used,
        "b_gamma": b_measure(instance, SublinearFn.constant(gamma)),
        "verified": verify,
    }
    if not verify:
        slots, _ = _canonical(instance, classes)
        meta.update(slots=len(slots), repaired_slots=0, extra_slots=0)
        meta["ratio"] = len(slots) / meta["b_gamma"]
        return Schedule(slots, None, meta)

    threads = default_threads() if threads is None else threads
    if threads > 1 and len(classes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: _verify_class(instance, c), classes))
    else:
        results = [_verify_class(instance, c) for c in classes]
    slots, certs = [], []
    repaired = 0
    kesselheim_ok = 0
    for c, (s, cs, was_repaired) in zip(classes, results):
        slots.extend(s)
        certs.extend(cs)
        repaired += was_repaired
        kesselheim_ok += kesselheim_sufficient(instance, c)
    slots, certs = _canonical(instance, slots, certs)
    meta.update(
        slots=len(slots),
        repaired_slots=repaired,
        extra_slots=len(slots) - len(classes),
        kesselheim_classes=kesselheim_ok,
        ratio=len(slots) / meta["b_gamma"],
    )
    return Schedule(slots, certs, meta)


def wcapacity(instance: LinkInstance, weights=None, gamma: float = 1.0, cross_check: bool = False) -> WisSolution:
    """Heavy ``gamma * tlog``-independent set by local ratio.

    The result is re-checked for independence; with ``cross_check`` the exact
    feasibility verdict is attached as ``verdict``.
    """
    _require_fading(instance)
    f = SublinearFn.tlog(instance.alpha, instance.m, gamma)
    g = build(instance, f)
    sol = local_ratio_wis(g, weights)
    if not f_independent_set(instance, f, sol.chosen):
        raise AssertionError("local ratio returned a dependent set")
    if cross_check:
        sol.verdict = exact_feasible(instance, sol.chosen)
    return sol


def feasible_table(instance: LinkInstance) -> np.ndarray:
    """``ok[mask]`` is True iff the links in ``mask`` are exact-feasible.

    Feasibility is hereditary, so a mask is only sent to the oracle when all
    of its one-smaller subsets passed.  ``unknown`` verdicts count as infeasible.
    """
    n = instance.n
    ok = np.zeros(1 << n, dtype=bool)
    ok[0] = True
    for mask in range(1, 1 << n):
        bits = [k for k in range(n) if mask >> k & 1]
        if len(bits) == 1:
            ok[mask] = True
            continue
        if all(ok[mask ^ (1 << k)] for k in bits):
            ok[mask] = exact_feasible(instance, bits).feasible
    return ok


def opts_oracle(instance: LinkInstance) -> int:
    """Exact minimum number of feasible slots (``n <= 12``)."""
    n = instance.n
    if n > MAX_OPTS_N:
        raise ValueError(f"opts_oracle is limited to {MAX_OPTS_N} links, got {n}")
    if n == 0:
        return 0
    ok = feasible_table(instance)
    full = (1 << n) - 1
    best = [0] * (1 << n)
    for mask in range(1, full + 1):
        low = mask & -mask
        rest = mask ^ low
        b = n + 1
        # every partition has a part containing the lowest link of mask
        sub = rest
        while True:
            part = sub | low
            if ok[part]:
                b = min(b, best[mask ^ part] + 1)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        best[mask] = b
    return best[full]


def measure(instance: LinkInstance, gamma: float = 1.0) -> dict:
    """B-measures, greedy colors and influence of the whole link set."""
    fg = SublinearFn.constant(gamma)
    ft = SublinearFn.tlog(instance.alpha, instance.m, gamma)
    delta = instance.delta()
    out = {
        "n": instance.n,
        "gamma": gamma,
        "f_gamma": fg.spec_string(),
        "f_tlog": ft.spec_string(),
        "b_gamma": b_measure(instance, fg),
        "b_tlog": b_measure(instance, ft),
        "colors_gamma": greedy_color(build(instance, fg)).colors_used,
        "colors_tlog": greedy_color(build(instance, ft)).colors_used,
        "influence": aggregate_influence(instance, range(instance.n)),
        "delta": delta,
        "log_star_delta": log_star(delta),
    }
    out["b_ratio"] = out["b_tlog"] / out["b_gamma"]
    return out


def baseline_lengthclass(instance: LinkInstance) -> Schedule:
    """Doubling length classes, first-fit exact-feasible inside each class."""
    if instance.n == 0:
        return Schedule([], [], {"baseline": "lengthclass", "classes": 0})
    lengths = instance.lengths
    cls = np.floor(np.log2(lengths / lengths.min())).astype(int)
    slots, certs = [], []
    for c in np.unique(cls):
        s, cs = first_fit_feasible(instance, np.nonzero(cls == c)[0].tolist())
        slots.extend(s)
        certs.extend(cs)
    slots, certs = _canonical(instance, slots, certs)
    return Schedule(slots, certs, {"baseline": "lengthclass", "classes": int(len(np.unique(cls))),
                                   "slots": len(slots)})


def bench_row(instance: LinkInstance, seed: int, gamma: float = 1.0) -> dict:
    """One CSV row: the verified schedule against both B-measures and the baseline."""
    m = measure(instance, gamma)
    return {
        "seed": seed,
        "n": instance.n,
        "delta": m["delta"],
        "log_star_delta": m["log_star_delta"],
        "slots": schedule(instance, gamma, verify=True, threads=1).n_slots,
        "b_gamma": m["b_gamma"],
        "b_tlog": m["b_tlog"],
        "baseline_slots": baseline_lengthclass(instance).n_slots,
    }
