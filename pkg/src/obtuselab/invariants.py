"""Obtuse-constant estimators over any :class:`~obtuselab.spaces.SpaceHandle`.

Every obtuse-type quantity is reported with the ``- pi/2`` normalization, so
values lie in ``[-pi/2, pi/2]``.  The angle between the set of minimal
directions to the partner point and the direction to a far point is the
infimum over that set; when the far point itself has several minimal
directions the largest resulting angle is used (the estimators take a
supremum over far points anyway).

Limits are realized by finite ladders.  ``InvariantEstimate.value`` is the
last rung; ``uncertainty`` is the gap to the previous rung.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError, DomainError, InvalidTriangleError
from .model_trig import comparison_angle

HALF_PI = 0.5 * math.pi
TRIANGLE_SLACK = 1e-7   # relative slack tolerated before a numeric triangle is rejected
TOP_K = 4               # far samples re-evaluated with refined distances per rung and side
CONVENTION_NOTES = ("obtuse values normalized by -pi/2 (comparison variants included); "
                    "angle(U, v) = inf over minimal directions U")


@dataclass(frozen=True)
class ComparisonQuery:
    p: object
    q: object
    kappa: float = 0.0
    far_radii: tuple = ()
    samples_per_radius: int = 720
    seed: int = 0

    def __post_init__(self):
        radii = tuple(float(x) for x in self.far_radii)
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise DomainError("far radius ladder must be strictly increasing")
        if self.samples_per_radius < 1:
            raise DomainError("samples_per_radius must be >= 1")
        object.__setattr__(self, "far_radii", radii)


@dataclass
class InvariantEstimate:
    value: float
    ladder_values: list
    monotone: bool
    uncertainty: float
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {"value": self.value, "ladder": list(self.ladder_values), "monotone": self.monotone,
                "uncertainty": self.uncertainty, **self.details}


def _clip(v):
    return min(HALF_PI, max(-HALF_PI, v))


def _estimate(ladder, increasing=True, **details):
    vals = [float(v) for v in ladder]
    mono = all(b >= a - 1e-9 for a, b in zip(vals, vals[1:])) if increasing else \
        all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))
    unc = abs(vals[-1] - vals[-2]) if len(vals) > 1 else 0.0
    return InvariantEstimate(vals[-1], vals, mono, unc, details)


def safe_comparison_angle(kappa, adj1, adj2, opp, slack=TRIANGLE_SLACK):
    """Comparison angle between ``adj1`` and ``adj2`` with numeric slack on the triangle inequality.

    Triples off by more than ``slack`` (relative) return NaN.
    """
    if not (adj1 > 0 and adj2 > 0) or not math.isfinite(opp):
        return math.nan
    lo, hi = abs(adj1 - adj2), adj1 + adj2
    tol = slack * max(1.0, hi)
    if opp < lo - tol or opp > hi + tol:
        return math.nan
    opp = min(max(opp, lo), hi)
    try:
        return comparison_angle(kappa, (adj1, adj2, opp), opposite=2)
    except (InvalidTriangleError, DomainError):
        return math.nan


def _far_sets(space, p, q, query, compact):
    """Per-rung far samples (shared by both sides) and how many trail as extension samples."""
    if compact:
        ext = space.extension_samples(p, q, None) + space.extension_samples(q, p, None)
        return [(space.region_samples(p, q) + ext, len(ext))]
    out = []
    for R in query.far_radii:
        ext = space.extension_samples(p, q, R) + space.extension_samples(q, p, R)
        out.append((space.far_samples(p, q, R, query.samples_per_radius) + ext, len(ext)))
    return out


def _side_values(space, a, b, dab, xs, da, db, dirs_a, dirs_ab, variants, kappa):
    """Per-sample angle values at ``a`` (partner ``b``) for each requested variant."""
    vals = {}
    if "comparison" in variants:
        vals["comparison"] = np.array([safe_comparison_angle(kappa, da[i], dab, db[i]) for i in range(len(xs))])
    if "angle" in variants:
        v = np.full(len(xs), np.nan)
        for i in range(len(xs)):
            if not dirs_a[i]:
                continue
            v[i] = max(min(space.angle(a, u, w) for u in dirs_ab) for w in dirs_a[i])
        vals["angle"] = v
    return vals


def _pair_values(space, query, variants, compact=False):
    """Ladder of far-maxima for each variant; returns {variant: [per-rung value]}."""
    p, q = query.p, query.q
    if "angle" in variants:
        space.require("angles")
    dpq = space.distance(p, q)
    if not dpq > 0:
        raise DomainError("obtuse estimators need p != q")
    sets = _far_sets(space, p, q, query, compact)
    rungs = [pts for pts, _ in sets]
    allx = [x for r in rungs for x in r]
    need_dirs = "angle" in variants
    dp, Dp = space.profile(p, allx, dirs=need_dirs)
    dq, Dq = space.profile(q, allx, dirs=need_dirs)
    up = space.directions(p, q) if need_dirs else None
    uq = space.directions(q, p) if need_dirs else None
    if compact:
        half = 0.5 * space.radius()
    ladders = {v: [] for v in variants}
    start = 0
    for pts, n_ext in sets:
        sl = slice(start, start + len(pts))
        start += len(pts)
        xs = allx[sl]
        sides = []
        for a, b, da, db, Da, ua in ((p, q, dp[sl], dq[sl], Dp[sl] if Dp else None, up),
                                      (q, p, dq[sl], dp[sl], Dq[sl] if Dq else None, uq)):
            vals = _side_values(space, a, b, dpq, xs, da, db, Da, ua, variants, query.kappa)
            if compact:
                far = da >= half * (1 - 1e-12)
                for k in vals:
                    vals[k] = np.where(far, vals[k], np.nan)
            sides.append((a, b, xs, vals))
        for v in variants:
            best = -math.inf
            for a, b, xs_, vals in sides:
                arr = vals[v]
                if not np.any(np.isfinite(arr)):
                    continue
                order = list(np.argsort(np.where(np.isfinite(arr), arr, -np.inf))[::-1][:TOP_K])
                # coarse values tie at the degenerate pi; extension samples are always rechecked
                order += [i for i in range(len(arr) - n_ext, len(arr)) if np.isfinite(arr[i]) and i not in order]
                # refine the leading candidates with precise distances/directions
                cand = [xs_[i] for i in order]
                pa, PA = space.profile(a, cand, dirs=need_dirs, precise=True)
                pb, _ = space.profile(b, cand, dirs=False, precise=True) if v == "comparison" else (None, None)
                for j, i in enumerate(order):
                    if v == "comparison":
                        val = safe_comparison_angle(query.kappa, pa[j], dpq, pb[j])
                    else:
                        if compact and pa[j] < half * (1 - 1e-12):
                            continue
                        ua = up if a is p else uq
                        if not PA[j]:
                            continue
                        val = max(min(space.angle(a, u, w) for u in ua) for w in PA[j])
                    if math.isfinite(val):
                        best = max(best, val)
            if best == -math.inf:
                raise DomainError("no admissible far samples for this pair")
            ladders[v].append(_clip(best - HALF_PI))
    return ladders


def _with_radii(space, query):
    if query.far_radii:
        return query
    return ComparisonQuery(query.p, query.q, query.kappa, tuple(space.default_far_radii(query.p, query.q)),
                           query.samples_per_radius, query.seed)


def pair_obtuse_comparison(space, query: ComparisonQuery) -> InvariantEstimate:
    """``limsup_x max(comparison angle at p, at q) - pi/2`` from distances only."""
    if space.compact:
        raise CapabilityError("pair_obtuse_comparison estimates the limit at infinity; use obtuse_compact")
    query = _with_radii(space, query)
    lad = _pair_values(space, query, ("comparison",))["comparison"]
    return _estimate(lad, variant="comparison", kappa=query.kappa, far_radii=list(query.far_radii))


def pair_obtuse_angle(space, query: ComparisonQuery) -> InvariantEstimate:
    """``limsup_x max(angle(U_p^q, x), angle(U_q^p, x)) - pi/2`` with true angles."""
    space.require("angles")
    if space.compact:
        raise CapabilityError("pair_obtuse_angle estimates the limit at infinity; use obtuse_compact")
    query = _with_radii(space, query)
    lad = _pair_values(space, query, ("angle",))["angle"]
    return _estimate(lad, variant="angle", far_radii=list(query.far_radii))


def pair_obtuse_both(space, query: ComparisonQuery) -> dict:
    """Both pair estimators from one set of far samples."""
    space.require("angles")
    query = _with_radii(space, query)
    lad = _pair_values(space, query, ("comparison", "angle"))
    return {v: _estimate(lad[v], variant=v, far_radii=list(query.far_radii)) for v in lad}


def _variants(variant):
    if variant == "both":
        return ("comparison", "angle")
    if variant not in ("comparison", "angle"):
        raise DomainError(f"unknown variant {variant!r}")
    return (variant,)


def obtuse_from_infinity(space, pair_ladder, template: ComparisonQuery = None, variant: str = "angle",
                         n_pairs: int = 36):
    """``liminf_{|p,q| -> 0}`` of the pair constant from infinity.

    For each separation in ``pair_ladder`` the infimum over the space's pair
    population is taken.  With ``variant="both"`` a dict of estimates is
    returned.
    """
    if space.compact:
        raise CapabilityError("obtuse_from_infinity needs a noncompact space")
    template = template or ComparisonQuery(None, None)
    return _obtuse_ladder(space, pair_ladder, template, variant, n_pairs, compact=False)


def obtuse_compact(space, pair_ladder, template: ComparisonQuery = None, variant: str = "angle",
                   n_pairs: int = 36):
    """``liminf_{|p,q| -> 0} ob(p, q)`` with far sets ``B(p, R_M/2)^c``."""
    if not space.compact:
        raise CapabilityError("obtuse_compact needs a compact space")
    space.require("extents", "region_sampler")
    template = template or ComparisonQuery(None, None)
    return _obtuse_ladder(space, pair_ladder, template, variant, n_pairs, compact=True)


def _obtuse_ladder(space, pair_ladder, template, variant, n_pairs, compact):
    seps = [float(x) for x in pair_ladder]
    if any(b >= a for a, b in zip(seps, seps[1:])):
        raise DomainError("pair separations must be strictly decreasing")
    variants = _variants(variant)
    if "angle" in variants:
        space.require("angles")
    rng = np.random.default_rng(template.seed)
    per_sep = {v: [] for v in variants}
    worst = {v: [] for v in variants}
    for delta in seps:
        pairs = space.pair_population(delta, n_pairs, rng)
        mins = {v: math.inf for v in variants}
        arg = {v: None for v in variants}
        for p, q in pairs:
            query = ComparisonQuery(p, q, template.kappa, template.far_radii, template.samples_per_radius,
                                    template.seed)
            if not compact:
                query = _with_radii(space, query)
            lad = _pair_values(space, query, variants, compact=compact)
            for v in variants:
                if lad[v][-1] < mins[v]:
                    mins[v], arg[v] = lad[v][-1], (p, q)
        for v in variants:
            per_sep[v].append(mins[v])
            worst[v].append(repr(arg[v]))
    out = {v: _estimate(per_sep[v], variant=v, separations=seps, worst_pairs=worst[v]) for v in variants}
    return out if variant == "both" else out[variant]


def kappa_obtuse_infinity(space, kappa: float, pairs=None, n_pairs: int = 24, seed: int = 0,
                          far_radii=(), samples: int = 720) -> InvariantEstimate:
    """Infimum over a pair population of the comparison kappa-obtuse constant from infinity."""
    if space.compact:
        raise CapabilityError("kappa_obtuse_infinity needs a noncompact space")
    rng = np.random.default_rng(seed)
    if pairs is None:
        pairs = space.random_pairs(n_pairs, rng)
    vals = []
    ladders = []
    for p, q in pairs:
        query = _with_radii(space, ComparisonQuery(p, q, kappa, tuple(far_radii), samples, seed))
        est = pair_obtuse_comparison(space, query)
        vals.append(est.value)
        ladders.append(est.ladder_values)
    i = int(np.argmin(vals))
    lad = np.min(np.array(ladders), axis=0)
    return InvariantEstimate(vals[i], [float(x) for x in lad],
                             all(b >= a - 1e-9 for a, b in zip(lad, lad[1:])),
                             abs(float(lad[-1] - lad[-2])) if len(lad) > 1 else 0.0,
                             {"variant": "comparison", "kappa": kappa, "n_pairs": len(pairs),
                              "worst_pair": repr(pairs[i])})


def growth_report(space) -> dict:
    """Volume growth data (noncompact) or normalized volume (compact)."""
    if space.compact:
        ext = space.extents()
        return {"normalized_volume": ext["normalized_volume"], "diameter": ext["diameter"],
                "radius": ext["radius"], "area": ext["area"]}
    space.require("growth")
    return space.growth()
