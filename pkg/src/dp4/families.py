"""The two explicit families, closed-form predictions, point search and censuses.

First family (parameters p = 1 mod 4 prime, a*b = p - 1):

    y^2 - p x^2 = u v ;  z^2 - p x^2 = (a u - p v)(u - b v)

Second family (p odd prime, (a+b-1)^2 - 4ab = p, 4a = 4b = 1 mod p,
a, b odd, a = 1 mod 8):

    y^2 - p x^2 = u v ;  z^2 - p x^2 = (u + v)(a u + b v)
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass
from math import gcd, isqrt

from .arith import is_prime, legendre
from .brauer import bm_verdict, reciprocity_check
from .quadform import Point, SubfamilySurface, validate_subfamily


# ---------------------------------------------------------------------------
# first family


def make_Y(p: int, a: int, b: int) -> SubfamilySurface:
    """The surface y^2 - px^2 = uv, z^2 - px^2 = (au - pv)(u - bv)."""
    if p % 4 != 1 or not is_prime(p):
        raise ValueError(f"need a prime p = 1 mod 4, got {p}")
    if a * b != p - 1:
        raise ValueError(f"need a*b = p - 1, got {a}*{b} != {p - 1}")
    s = SubfamilySurface(p, a, -p, 1, -b, 1)
    validate_subfamily(s)
    assert s.N == 2  # (AD+BC-M)^2 - 4ABCD = 4p for this family
    return s


@dataclass(frozen=True)
class PredictedVerdict:
    obstructed_by: tuple[str, ...]
    reason: str


def predict_Y(p: int, a: int, b: int) -> PredictedVerdict:
    """Closed-form verdict: class A obstructs exactly when (a/p) = -1.

    The equivalent congruence criterion (p = 5 mod 8 with a and b even) is
    recomputed and must agree.
    """
    make_Y(p, a, b)  # validate parameters
    la, lb = legendre(a, p), legendre(b, p)
    assert la == lb, "the two Legendre symbols must coincide when ab = p - 1"
    by_parity = p % 8 == 5 and a % 2 == 0 and b % 2 == 0
    assert (la == -1) == by_parity, "congruence criterion disagrees with the Legendre symbol"
    if la == -1:
        return PredictedVerdict(("A",), f"({a}/{p}) = -1")
    return PredictedVerdict((), f"({a}/{p}) = +1")


# ---------------------------------------------------------------------------
# second family


def check_S_params(p: int, a: int, b: int) -> list[str]:
    """Condition-by-condition check; empty list means the parameters qualify."""
    failures = []
    if p % 2 == 0 or not is_prime(p):
        failures.append(f"p = {p} is not an odd prime")
        return failures
    if (a + b - 1) ** 2 - 4 * a * b != p:
        failures.append(f"(a+b-1)^2 - 4ab = {(a + b - 1) ** 2 - 4 * a * b} != {p}")
    if (4 * a - 1) % p or (4 * b - 1) % p:
        failures.append("4a and 4b must be 1 mod p")
    if a % 2 == 0 or b % 2 == 0:
        failures.append("a and b must be odd")
    if a % 8 != 1:
        failures.append("a must be 1 mod 8")
    return failures


def make_S(p: int, a: int, b: int) -> SubfamilySurface:
    """The surface y^2 - px^2 = uv, z^2 - px^2 = (u + v)(au + bv)."""
    failures = check_S_params(p, a, b)
    if failures:
        raise ValueError("; ".join(failures))
    s = SubfamilySurface(p, 1, 1, a, b, 1)
    validate_subfamily(s)
    assert s.N == 1
    return s


def s_from_t(p: int, t: int) -> tuple[int, int, int]:
    """Parameters (p, a_t, b_t) of the second family from the stock construction.

    Needs p = 5 mod 8 and t = 3(p-1)/4 mod 8; the output is validated against
    all four defining conditions, never assumed.
    """
    if p % 8 != 5 or not is_prime(p):
        raise ValueError(f"need a prime p = 5 mod 8, got {p}")
    if (t - 3 * (p - 1) // 4) % 8:
        raise ValueError(f"need t = 3(p-1)/4 mod 8, got t = {t}")
    a = t * t * p * p - t * p - (p - 1) // 4
    b = t * t * p * p + t * p - (p - 1) // 4
    failures = check_S_params(p, a, b)
    if failures:
        raise AssertionError(f"construction produced invalid parameters: {failures}")
    return (p, a, b)


def predict_S(p: int, a: int, b: int) -> PredictedVerdict:
    """Closed-form verdict: class B always obstructs on the second family."""
    failures = check_S_params(p, a, b)
    if failures:
        raise ValueError("; ".join(failures))
    return PredictedVerdict(("B",), "class B has constant invariant 1/2 at p")


# ---------------------------------------------------------------------------
# rational point search


def point_search(s: SubfamilySurface, height_bound: int, jobs: int = 1) -> list[Point]:
    """All primitive points with max |coordinate| <= height_bound.

    Iterates (u, v) by |u| + |v| shells, bounds |x| by the requirement that
    both right-hand sides stay squares of size at most the bound, and tests
    squareness with integer square roots only.
    """
    if height_bound < 1:
        return []
    if jobs > 1:
        shells = list(range(0, 2 * height_bound + 1))
        chunks = [shells[i::jobs] for i in range(jobs)]
        with multiprocessing.get_context("fork").Pool(jobs) as pool:
            parts = pool.starmap(_search_shells, [(s, height_bound, c) for c in chunks])
        found = set().union(*parts)
    else:
        found = _search_shells(s, height_bound, range(0, 2 * height_bound + 1))
    return sorted(found)


def _search_shells(s: SubfamilySurface, bound: int, shells) -> set[Point]:
    p, A, B, C, D, M = s.p, s.A, s.B, s.C, s.D, s.M
    h2 = bound * bound
    found: set[Point] = set()
    for shell in shells:
        for u in range(0, min(shell, bound) + 1):
            vv = shell - u
            if vv > bound:
                continue
            vs = (vv,) if (u == 0 or vv == 0) else (vv, -vv)
            if u == 0 and vv == 0:
                continue
            for v in vs:
                if u == 0 and v <= 0:
                    continue
                muv = M * u * v
                q2 = (A * u + B * v) * (C * u + D * v)
                lo = max(-muv, -q2, 0)
                hi = min(h2 - muv, h2 - q2)
                if hi < lo:
                    continue
                xmax = min(isqrt(hi // p), bound)
                xmin = isqrt((lo + p - 1) // p)
                if xmin * xmin * p < lo:
                    xmin += 1
                for x in range(xmin, xmax + 1):
                    y2 = muv + p * x * x
                    y = isqrt(y2)
                    if y * y != y2:
                        continue
                    z2 = q2 + p * x * x
                    z = isqrt(z2)
                    if z * z != z2:
                        continue
                    for xx in {x, -x}:
                        for yy in {y, -y}:
                            for zz in {z, -z}:
                                pt = (u, v, xx, yy, zz)
                                g = 0
                                for c in pt:
                                    g = gcd(g, c)
                                if g == 1:
                                    found.add(pt)
    return found


# ---------------------------------------------------------------------------
# censuses


@dataclass(frozen=True)
class CensusRow:
    family: str
    params: tuple[int, int, int]
    surface: str
    predicted: tuple[str, ...]
    computed: tuple[str, ...] | None
    wa_failure: bool | None
    unknown_classes: tuple[str, ...]
    points: tuple[Point, ...]
    agreement: bool
    error: str | None = None

    def to_json(self):
        return {
            "family": self.family,
            "params": list(self.params),
            "surface": self.surface,
            "predicted_obstruction": list(self.predicted),
            "computed_obstruction": None if self.computed is None else list(self.computed),
            "wa_failure": self.wa_failure,
            "unknown_classes": list(self.unknown_classes),
            "points": [list(pt) for pt in self.points],
            "agreement": self.agreement,
            "error": self.error,
        }


@dataclass(frozen=True)
class CensusResult:
    header: dict
    rows: tuple[CensusRow, ...]

    def to_json(self):
        return {"header": self.header, "rows": [r.to_json() for r in self.rows]}


def _census_row(task) -> CensusRow:
    family, p, a, b, height_bound, sample_budget, seed = task
    params = (p, a, b)
    predicted: tuple[str, ...] = ()
    label = f"X_{p}"
    try:
        if family == "Y":
            s = make_Y(p, a, b)
            predicted = predict_Y(p, a, b).obstructed_by
        else:
            s = make_S(p, a, b)
            predicted = predict_S(p, a, b).obstructed_by
        label = s.label()
        report = bm_verdict(s, sample_budget=sample_budget, seed=seed)
        points = tuple(point_search(s, height_bound)) if height_bound else ()
        for pt in points:
            assert s.contains(pt)
            assert reciprocity_check(s, pt)
        agreement = (report.hp_obstructed_by == predicted
                     and len(report.hp_obstructed_by) <= 1
                     and report.wa_failure
                     and not report.unknown_classes)
        return CensusRow(family, params, s.label(), predicted, report.hp_obstructed_by,
                         report.wa_failure, report.unknown_classes, points, agreement)
    except Exception as exc:  # a census survives per-row failures and reports them
        return CensusRow(family, params, label, predicted,
                         None, None, (), (), False, error=f"{type(exc).__name__}: {exc}")


def census_Y(p_max: int, height_bound: int = 0, sample_budget: int = 32,
             seed: int = 0, jobs: int = 1) -> CensusResult:
    """Every (p, a, b) with p = 1 mod 4 prime, p <= p_max, ab = p - 1, a, b > 0."""
    tasks = []
    for p in range(5, p_max + 1):
        if p % 4 == 1 and is_prime(p):
            for a in range(1, p):
                if (p - 1) % a == 0:
                    tasks.append(("Y", p, a, (p - 1) // a, height_bound, sample_budget, seed))
    return _run_census(tasks, jobs, {"family": "Y", "p_max": p_max})


def census_S(p_list, t_count: int = 3, height_bound: int = 0, sample_budget: int = 32,
             seed: int = 0, jobs: int = 1) -> CensusResult:
    """Rows from the stock construction: the first t_count admissible t per p."""
    tasks = []
    for p in p_list:
        t0 = 3 * (p - 1) // 4 % 8
        if t0 == 0:
            t0 = 8
        for i in range(t_count):
            t = t0 + 8 * i
            _, a, b = s_from_t(p, t)
            tasks.append(("S", p, a, b, height_bound, sample_budget, seed))
    return _run_census(tasks, jobs, {"family": "S", "p_list": list(p_list), "t_count": t_count})


def _run_census(tasks, jobs: int, extra_header: dict) -> CensusResult:
    if jobs > 1:
        with multiprocessing.get_context("fork").Pool(jobs) as pool:
            rows = tuple(pool.map(_census_row, tasks))
    else:
        rows = tuple(_census_row(t) for t in tasks)
    header = {
        "rows": len(rows),
        "height_bound": tasks[0][4] if tasks else 0,
        "sample_budget": tasks[0][5] if tasks else 0,
        "seed": tasks[0][6] if tasks else 0,
        "jobs": jobs,
        **extra_header,
    }
    return CensusResult(header, rows)
