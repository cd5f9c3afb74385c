"""Closed-form weight policies evaluated at each rebalance date.

All policies are pure functions of the current prices (equivalently the
market weights; the policies used here are scale-invariant).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .market import RankState, WeightVector, _check_prices, compute_ranks, market_weights


def equal_weights(n: int) -> WeightVector:
    if n < 1:
        raise InvalidInputError("need at least one asset")
    return WeightVector(np.full(n, 1.0 / n))


def diversity_weights(prices, p: float) -> WeightVector:
    """Power-law weights X_i^p / sum_j X_j^p; p=1 is the market, p=0 equal."""
    x = _check_prices(prices)
    if not np.isfinite(p):
        raise InvalidInputError("diversity parameter must be finite")
    if p == 0.0:
        return equal_weights(x.size)
    # work in logs so large |p| does not overflow
    logw = p * np.log(x)
    logw -= logw.max()
    w = np.exp(logw)
    return WeightVector(w / w.sum())


def reverse_weights(mu, ranks: RankState | None = None) -> WeightVector:
    """Asset ranked k receives the market weight of rank n+1-k."""
    m = np.asarray(mu, dtype=float)
    if ranks is None:
        ranks = compute_ranks(m)
    n = m.size
    if ranks.n != n:
        raise InvalidInputError("rank state does not match weight vector")
    sorted_desc = m[ranks.name_at]              # weight at rank k is sorted_desc[k-1]
    out = sorted_desc[n - ranks.rank_of]        # rank k gets sorted value at rank n+1-k
    return WeightVector(out)


def permutation_weights(mu, perm) -> WeightVector:
    """pi_i = mu_{p(i)} for a permutation p of 0..n-1 (by name)."""
    m = np.asarray(mu, dtype=float)
    p = np.asarray(perm, dtype=int)
    if not np.array_equal(np.sort(p), np.arange(m.size)):
        raise InvalidInputError("perm must be a bijection on 0..n-1")
    return WeightVector(m[p])


def swap_weights(mu, i: int, j: int) -> WeightVector:
    """Two-asset portfolio holding each of i, j at the other's market weight."""
    m = np.asarray(mu, dtype=float)
    n = m.size
    if i == j:
        raise InvalidInputError("swap requires two distinct assets")
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidInputError("swap index out of range")
    out = np.zeros(n)
    s = m[i] + m[j]
    out[i] = m[j] / s
    out[j] = m[i] / s
    return WeightVector(out)


@dataclass(frozen=True)
class WeightPolicy:
    """A named weight rule; ``kind`` is one of market, equal, diversity,
    reverse, swap, permutation, generated."""

    kind: str
    p: float | None = None                  # diversity exponent
    pair: tuple[str, str] | None = None     # swap asset ids (names or indices)
    perm: tuple[int, ...] | None = None     # permutation of 0..n-1
    generator: object = None                # GeneratingFunction for kind="generated"
    name: str = ""

    def __post_init__(self):
        if self.kind not in {"market", "equal", "diversity", "reverse",
                             "swap", "permutation", "generated"}:
            raise InvalidInputError(f"unknown policy kind {self.kind!r}")
        if self.kind == "diversity" and (self.p is None or not np.isfinite(self.p)):
            raise InvalidInputError("diversity policy needs a finite parameter")
        if self.kind == "swap":
            if self.pair is None or self.pair[0] == self.pair[1]:
                raise InvalidInputError("swap policy needs two distinct assets")
        if self.kind == "permutation" and self.perm is None:
            raise InvalidInputError("permutation policy needs a permutation")
        if self.kind == "generated" and self.generator is None:
            raise InvalidInputError("generated policy needs a generating function")
        if not self.name:
            object.__setattr__(self, "name", self.label())

    def label(self) -> str:
        if self.kind == "diversity":
            return f"diversity:{self.p:g}"
        if self.kind == "swap":
            return f"swap:{self.pair[0]},{self.pair[1]}"
        if self.kind == "permutation":
            return "permutation:[" + ",".join(map(str, self.perm)) + "]"
        return self.kind

    def _resolve_pair(self, assets, n) -> tuple[int, int]:
        out = []
        for tok in self.pair:
            if assets is not None and tok in assets:
                out.append(assets.index(tok))
            else:
                try:
                    out.append(int(tok))
                except (TypeError, ValueError):
                    raise InvalidInputError(f"swap asset {tok!r} not found")
        i, j = out
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidInputError("swap asset out of range")
        return i, j

    def weights(self, prices, assets: list[str] | None = None) -> WeightVector:
        """Evaluate the policy on current prices."""
        x = _check_prices(prices)
        n = x.size
        if self.kind == "market":
            return market_weights(x)
        if self.kind == "equal":
            return equal_weights(n)
        if self.kind == "diversity":
            return diversity_weights(x, self.p)
        mu = market_weights(x).weights
        if self.kind == "reverse":
            return reverse_weights(mu, compute_ranks(x))
        if self.kind == "swap":
            i, j = self._resolve_pair(assets, n)
            return swap_weights(mu, i, j)
        if self.kind == "permutation":
            if len(self.perm) != n:
                raise InvalidInputError("permutation length does not match asset count")
            return permutation_weights(mu, self.perm)
        # generated
        from .fgp import fgp_weights
        return fgp_weights(self.generator, WeightVector(mu))


def parse_policy(spec: str) -> WeightPolicy:
    """Parse a policy spec string.

    Accepted forms: ``market``, ``equal``, ``reverse``, ``diversity:-0.5``,
    ``swap:i,j`` (asset names or indices), ``permutation:[2,0,1]``.
    """
    s = spec.strip()
    if s in {"market", "equal", "reverse"}:
        return WeightPolicy(kind=s)
    if s.startswith("diversity:"):
        try:
            p = float(s.split(":", 1)[1])
        except ValueError:
            raise InvalidInputError(f"bad diversity parameter in {spec!r}")
        return WeightPolicy(kind="diversity", p=p)
    if s.startswith("swap:"):
        toks = s.split(":", 1)[1].split(",")
        if len(toks) != 2:
            raise InvalidInputError(f"swap spec needs two assets: {spec!r}")
        return WeightPolicy(kind="swap", pair=(toks[0].strip(), toks[1].strip()))
    if s.startswith("permutation:"):
        body = s.split(":", 1)[1].strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise InvalidInputError(f"permutation spec needs [..]: {spec!r}")
        try:
            perm = tuple(int(tok) for tok in body[1:-1].split(",") if tok.strip())
        except ValueError:
            raise InvalidInputError(f"bad permutation entries in {spec!r}")
        return WeightPolicy(kind="permutation", perm=perm)
    raise InvalidInputError(f"unknown policy spec {spec!r}")
