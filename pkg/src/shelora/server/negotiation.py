"""Negotiation of the global set of encrypted columns from OPE-coded bids.

Clients are processed in ascending order of budget ``k``.  A budget level
held by one client is filled greedily from that client's own bid; a level
shared by several clients mixes three ranked lists with coefficients
``(a, b, c)`` found by :func:`shelora.server.bayesopt.optimize_coefficients`:

* *Clients*: columns bid by that level's clients, by their minimum code
* *Common*: all bid columns, most frequently bid first
* *Sensitivity*: all bid columns, by their maximum code

Codes are compared across clients, which is sound because every client
encodes under the same OPE key.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

from ..errors import ValidationError
from ..messages import SensitivityBid

logger = logging.getLogger(__name__)

FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class NegotiationResult:
    res: tuple
    coefficients: tuple | None
    score: float
    group_coefficients: dict = field(default_factory=dict)
    shortfall: int = 0

    @property
    def k(self):
        return len(self.res)


@dataclass(frozen=True)
class RankedLists:
    common: tuple
    sensitivity: tuple


def coverage_risk(res, bids):
    """``(min-Coverage, max-Risk)`` of a candidate set over all bids.

    A bid with no columns is skipped (it is vacuously covered and exposes
    nothing).  Risk weights columns by their codes; a bid whose codes sum to
    zero falls back to counting columns.
    """
    res = set(res)
    cov, risk = 1.0, 0.0
    for bid in bids:
        if not bid.columns:
            logger.debug("client %s bid no columns; coverage treated as 1", bid.client_id)
            continue
        covered = sum(1 for j in bid.columns if j in res)
        cov = min(cov, covered / len(bid.columns))
        total = float(sum(bid.codes))
        if total > 0:
            exposed = float(sum(s for j, s in zip(bid.columns, bid.codes) if j not in res))
            risk = max(risk, exposed / total)
        else:
            risk = max(risk, 1.0 - covered / len(bid.columns))
    return cov, risk


def objective_score(res, bids):
    cov, risk = coverage_risk(res, bids)
    return cov - risk


def ranked_lists(bids):
    freq = defaultdict(int)
    top = {}
    for bid in bids:
        for j, s in zip(bid.columns, bid.codes):
            freq[j] += 1
            top[j] = max(top.get(j, s), s)
    common = sorted(freq, key=lambda j: (-freq[j], -top[j], j))
    sensitivity = sorted(freq, key=lambda j: (-top[j], j))
    return RankedLists(tuple(common), tuple(sensitivity))


def clients_list(group):
    low = {}
    for bid in group:
        for j, s in zip(bid.columns, bid.codes):
            low[j] = min(low.get(j, s), s)
    return tuple(sorted(low, key=lambda j: (-low[j], j)))


def _take(ranked, count, exclude):
    out = []
    if count <= 0:
        return out
    for j in ranked:
        if j not in exclude:
            out.append(j)
            if len(out) == count:
                break
    return out


def floor_share(coef, lam):
    return int(math.floor(coef * lam + FLOOR_EPS))


def select_mixed(a, b, lam, res, clients, lists):
    """Pick ``lam`` new columns: ``floor(a*lam)`` from *Clients*,
    ``floor(b*lam)`` from *Common*, the rest from *Sensitivity*.

    If an earlier list runs dry, the later ones absorb the deficit.
    """
    taken = set(res)
    p = _take(clients, floor_share(a, lam), taken)
    taken.update(p)
    c = _take(lists.common, floor_share(b, lam), taken)
    taken.update(c)
    s = _take(lists.sensitivity, lam - len(p) - len(c), taken)
    return p + c + s


def negotiate(bids, n_opt=50, seed=0, coefficients=None):
    """Agree on ``max_i k_i`` columns to encrypt.

    ``coefficients`` fixes ``(a, b, c)`` for every shared budget level
    instead of searching for them.
    """
    from .bayesopt import optimize_coefficients

    bids = list(bids)
    if not bids:
        raise ValidationError("negotiation needs at least one bid")
    if not all(isinstance(b, SensitivityBid) for b in bids):
        raise ValidationError("bids must be SensitivityBid instances")
    lists = ranked_lists(bids)
    groups = defaultdict(list)
    for bid in sorted(bids, key=lambda b: b.client_id):
        groups[bid.k].append(bid)

    res = []
    chosen = {}
    last = None
    for k in sorted(groups):
        lam = k - len(res)
        if lam <= 0:
            continue
        group = groups[k]
        if len(group) == 1:
            own = sorted(zip(group[0].codes, group[0].columns), key=lambda t: (-t[0], t[1]))
            new = _take([j for _, j in own], lam, set(res))
        else:
            clients = clients_list(group)
            if coefficients is None:
                coef = optimize_coefficients(lam, res, clients, lists, bids, n_opt=n_opt, seed=seed)
            else:
                coef = tuple(float(x) for x in coefficients)
            chosen[k] = coef
            last = coef
            new = select_mixed(coef[0], coef[1], lam, res, clients, lists)
        if len(new) < lam:
            new += _take(lists.sensitivity, lam - len(new), set(res) | set(new))
        res.extend(new)

    want = max(b.k for b in bids)
    shortfall = want - len(res)
    if shortfall > 0:
        logger.warning("budget exceeds proposals: %d columns short of %d", shortfall, want)
    return NegotiationResult(
        res=tuple(sorted(res)),
        coefficients=last,
        score=objective_score(res, bids),
        group_coefficients=chosen,
        shortfall=max(shortfall, 0),
    )
