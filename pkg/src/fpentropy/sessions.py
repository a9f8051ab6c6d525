"""Session-level risk analytics over visit events.

A session is every visit by one client to one site inside a fixed 28-day
window. Its fingerprinting exposure is the Chow-Liu bound of the surfaces it
observed. Histograms weight every site equally, no matter how many sessions
it has.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence
from urllib.parse import urlsplit

import numpy as np

from .chowliu import MiGraph, chow_liu_upper_bound
from .rng import substream

log = logging.getLogger(__name__)

WINDOW_DAYS = 28
# Multi-label public suffixes we recognise; everything else is treated as a
# single-label TLD.
_MULTI_LABEL_SUFFIXES = frozenset(
    {"co.uk", "org.uk", "ac.uk", "gov.uk", "com.au", "net.au", "org.au", "co.jp", "ne.jp",
     "com.br", "com.cn", "co.in", "co.kr", "co.nz", "com.mx", "com.tr", "github.io"}
)


def registrable_domain(origin: str) -> str:
    """eTLD+1 of an origin or host, using a small built-in suffix list."""
    host = urlsplit(origin).hostname if "://" in origin else origin.split("/")[0].split(":")[0]
    host = (host or "").lower().rstrip(".")
    labels = host.split(".")
    if len(labels) <= 2 or host.replace(".", "").isdigit():
        return host
    if ".".join(labels[-2:]) in _MULTI_LABEL_SUFFIXES:
        return ".".join(labels[-3:])
    return ".".join(labels[-2:])


@dataclass(frozen=True)
class Script:
    id: str
    host: str = ""
    signatures: tuple[str, ...] = ()


@dataclass(frozen=True)
class VisitEvent:
    client: str
    site: str
    origin: str
    day: int
    surfaces: tuple[str, ...]
    # surface -> ids of the scripts that observed it; missing means unattributed
    surface_scripts: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    scripts: tuple[Script, ...] = ()

    @property
    def first_party(self) -> bool:
        return registrable_domain(self.origin) == registrable_domain(self.site)

    @classmethod
    def from_json(cls, rec: Mapping[str, Any]) -> VisitEvent:
        surfaces: list[str] = []
        attribution: dict[str, tuple[str, ...]] = {}
        for item in rec["surfaces"]:
            name = item if isinstance(item, str) else item["surface"]
            if not isinstance(name, str) or not name:
                raise ValueError(f"bad surface entry {item!r}")
            if name not in surfaces:
                surfaces.append(name)
            if isinstance(item, Mapping):
                ids = item.get("scripts") or ([item["script"]] if item.get("script") is not None else [])
                attribution[name] = attribution.get(name, ()) + tuple(str(i) for i in ids)
        scripts = tuple(
            Script(str(s["id"]), s.get("host", ""), tuple(s.get("signatures", ()))) for s in rec.get("scripts", ())
        )
        day = rec["day"]
        if not isinstance(day, int) or day < 0:
            raise ValueError(f"bad day {day!r}")
        return cls(str(rec["client"]), rec["site"], rec.get("origin", rec["site"]), day, tuple(surfaces), attribution, scripts)

    def to_json(self) -> dict[str, Any]:
        return {
            "client": self.client,
            "site": self.site,
            "origin": self.origin,
            "day": self.day,
            "surfaces": [
                {"surface": s, "scripts": list(self.surface_scripts[s])} if s in self.surface_scripts else s
                for s in self.surfaces
            ],
            "scripts": [{"id": s.id, "host": s.host, "signatures": list(s.signatures)} for s in self.scripts],
        }


@dataclass(frozen=True)
class SessionLog:
    client: str
    site: str
    window_start: int
    surfaces: frozenset[str]
    first_party_surfaces: frozenset[str]
    third_party_surfaces: frozenset[str]
    vertical: str | None = None
    has_signature: bool = False

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.client, self.site, self.window_start)

    def to_json(self) -> dict[str, Any]:
        return {
            "client": self.client,
            "site": self.site,
            "window_start": self.window_start,
            "surfaces": sorted(self.surfaces),
            "first_party_surfaces": sorted(self.first_party_surfaces),
            "third_party_surfaces": sorted(self.third_party_surfaces),
            "vertical": self.vertical,
            "has_signature": self.has_signature,
        }


def parse_events(lines: Iterable[str], skipped: Counter | None = None) -> list[VisitEvent]:
    events = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            events.append(VisitEvent.from_json(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            log.warning("skipping malformed event on line %d: %s", lineno, exc)
            if skipped is not None:
                skipped["malformed"] += 1
    return events


def sessionize(
    events: Iterable[VisitEvent | Mapping[str, Any]],
    verticals: Mapping[str, str] | None = None,
    skipped: Counter | None = None,
    keep_empty: bool = False,
) -> list[SessionLog]:
    """Group visits into (client, site, 28-day window) sessions.

    Windows are fixed blocks starting at day 0. Malformed events are skipped
    and counted in ``skipped["malformed"]``. Events with no surfaces are
    dropped unless ``keep_empty`` (used when an intervention removed them).
    """
    acc: dict[tuple[str, str, int], dict[str, Any]] = {}
    for ev in events:
        if not isinstance(ev, VisitEvent):
            try:
                ev = VisitEvent.from_json(ev)
            except (ValueError, KeyError, TypeError):
                if skipped is not None:
                    skipped["malformed"] += 1
                continue
        if not ev.surfaces and not keep_empty:
            if skipped is not None:
                skipped["malformed"] += 1
            continue
        key = (ev.client, ev.site, (ev.day // WINDOW_DAYS) * WINDOW_DAYS)
        slot = acc.setdefault(key, {"first": set(), "third": set(), "sig": False})
        (slot["first"] if ev.first_party else slot["third"]).update(ev.surfaces)
        if any(s.signatures for s in ev.scripts):
            slot["sig"] = True
    verticals = verticals or {}
    return [
        SessionLog(
            client,
            site,
            start,
            frozenset(slot["first"] | slot["third"]),
            frozenset(slot["first"]),
            frozenset(slot["third"]),
            verticals.get(site),
            slot["sig"],
        )
        for (client, site, start), slot in sorted(acc.items())
    ]


def _bound(surfaces: Iterable[str], graph: MiGraph, default_entropy: float) -> float:
    surfaces = set(surfaces)
    known = [s for s in surfaces if s in graph.nodes]
    unknown = len(surfaces) - len(known)
    if unknown:
        log.warning("%d session surfaces missing from the MI graph; using %.3g bits each", unknown, default_entropy)
    base = chow_liu_upper_bound(graph, known).upper_bits if known else 0.0
    return base + unknown * default_entropy


def session_entropy(session: SessionLog, graph: MiGraph, default_entropy: float = 0.0) -> float:
    """Chow-Liu bound (bits) over the session's surfaces."""
    return _bound(session.surfaces, graph, default_entropy)


@dataclass(frozen=True)
class EntropyHistogram:
    edges: np.ndarray
    mass: np.ndarray
    normalization: str = "per-site-equal-weight"

    def to_csv(self) -> str:
        lines = ["bucket_low_bits,bucket_high_bits,mass"]
        for lo, hi, m in zip(self.edges[:-1], self.edges[1:], self.mass):
            lines.append(f"{lo:g},{hi:g},{m:.12g}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict[str, Any]:
        return {"edges": self.edges.tolist(), "mass": self.mass.tolist(), "normalization": self.normalization}


def _site_weights(sessions: Sequence[SessionLog]) -> np.ndarray:
    per_site = Counter(s.site for s in sessions)
    n_sites = len(per_site)
    return np.array([1.0 / (n_sites * per_site[s.site]) for s in sessions])


def histogram_from_values(
    sessions: Sequence[SessionLog],
    entropies: Sequence[float],
    bucket_width: float,
    max_bits: float | None = None,
) -> EntropyHistogram:
    if not sessions:
        raise ValueError("at least one session required")
    if bucket_width <= 0:
        raise ValueError("bucket_width must be positive")
    values = np.asarray(entropies, dtype=float)
    top = max(float(values.max()), max_bits or 0.0)
    nb = int(math.floor(top / bucket_width)) + 1
    edges = np.arange(nb + 1) * bucket_width
    idx = np.minimum((values // bucket_width).astype(int), nb - 1)
    mass = np.bincount(idx, weights=_site_weights(sessions), minlength=nb)
    return EntropyHistogram(edges, mass)


def entropy_distribution(
    sessions: Sequence[SessionLog],
    graph: MiGraph,
    bucket_width: float = 1.0,
    max_bits: float | None = None,
    default_entropy: float = 0.0,
) -> EntropyHistogram:
    """Histogram of session entropy; each site carries mass 1/|sites|."""
    values = [session_entropy(s, graph, default_entropy) for s in sessions]
    return histogram_from_values(sessions, values, bucket_width, max_bits)


@dataclass(frozen=True)
class PartySplit:
    group: str | None
    first_party_bits: float
    third_party_bits: float
    sessions: int
    sites: int


def party_split_report(
    sessions: Sequence[SessionLog],
    graph: MiGraph,
    group_by: Callable[[SessionLog], str | None] = lambda s: s.vertical,
    min_sites: int = 0,
    default_entropy: float = 0.0,
) -> dict[str | None, PartySplit]:
    """Average first- and third-party Chow-Liu bits per group.

    Groups with fewer than ``min_sites`` distinct sites are dropped.
    """
    groups: dict[str | None, list[SessionLog]] = {}
    for s in sessions:
        groups.setdefault(group_by(s), []).append(s)
    out = {}
    for g in sorted(groups, key=lambda x: (x is None, x or "")):
        members = groups[g]
        n_sites = len({s.site for s in members})
        if not members or n_sites < min_sites:
            continue
        fp = np.mean([_bound(s.first_party_surfaces, graph, default_entropy) for s in members])
        tp = np.mean([_bound(s.third_party_surfaces, graph, default_entropy) for s in members])
        out[g] = PartySplit(g, float(fp), float(tp), len(members), n_sites)
    return out


@dataclass(frozen=True)
class FamilyFrequency:
    per_site: dict[tuple[str, str], float]
    # family -> {percentile: value across sites}
    percentiles: dict[str, dict[int, float]]


def family_call_frequency(
    sessions: Sequence[SessionLog],
    family_map: Mapping[str, str],
    thresholds: Mapping[str, int],
    percentiles: Sequence[int] = (10, 25, 50, 75, 90),
) -> FamilyFrequency:
    """Fraction of each site's sessions touching >= t_f distinct surfaces of family f."""
    families = set(family_map.values())
    missing = sorted(families - set(thresholds))
    extra = sorted(set(thresholds) - families)
    if missing or extra:
        raise ValueError(f"unknown family in map: missing thresholds {missing}, unmapped thresholds {extra}")
    by_site: dict[str, list[SessionLog]] = {}
    for s in sessions:
        by_site.setdefault(s.site, []).append(s)
    per_site = {}
    for f in sorted(families):
        t = thresholds[f]
        for site in sorted(by_site):
            hits = sum(
                1 for s in by_site[site] if sum(1 for x in s.surfaces if family_map.get(x) == f) >= t
            )
            per_site[(f, site)] = hits / len(by_site[site])
    pct = {}
    for f in sorted(families):
        vals = [per_site[(f, site)] for site in sorted(by_site)]
        pct[f] = {p: float(np.percentile(vals, p)) for p in percentiles} if vals else {}
    return FamilyFrequency(per_site, pct)


@dataclass(frozen=True)
class BoxStats:
    bucket: str
    sites: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    mean: float


def _rate_bucket(rate: float) -> str:
    if rate <= 0.0:
        return "0%"
    hi = min(100, int(math.ceil(rate * 10 - 1e-12)) * 10)
    return f"{hi - 10}-{hi}%"


def signature_association(
    sessions: Sequence[SessionLog], graph: MiGraph, default_entropy: float = 0.0
) -> list[BoxStats]:
    """Per-site signature rate bucketed by decile vs. per-site mean session entropy."""
    by_site: dict[str, list[SessionLog]] = {}
    for s in sessions:
        by_site.setdefault(s.site, []).append(s)
    buckets: dict[str, list[float]] = {}
    for site, members in by_site.items():
        rate = sum(s.has_signature for s in members) / len(members)
        mean_h = float(np.mean([session_entropy(s, graph, default_entropy) for s in members]))
        buckets.setdefault(_rate_bucket(rate), []).append(mean_h)

    def order(label: str) -> int:
        return -1 if label == "0%" else int(label.split("-")[0])

    out = []
    for label in sorted(buckets, key=order):
        v = np.asarray(buckets[label])
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        out.append(BoxStats(label, len(v), float(v.min()), float(q1), float(med), float(q3), float(v.max()), float(v.mean())))
    return out


def _host_blocked(host: str, blocklist: frozenset[str]) -> bool:
    host = host.lower()
    parts = host.split(".")
    return any(".".join(parts[i:]) in blocklist for i in range(len(parts)))


def apply_blocklist(
    events: Iterable[VisitEvent], blocklist: Iterable[str] = (), signature_block: bool = False
) -> list[VisitEvent]:
    """Drop surface observations made by blocked scripts.

    A script is blocked when its host (or a parent domain of it) is listed,
    or, with ``signature_block``, when it carries any fingerprinting
    signature. A surface goes only when every script that observed it is
    blocked; unattributed observations are never removed.
    """
    blocked_hosts = frozenset(h.strip().lower() for h in blocklist if h.strip())
    out = []
    for ev in events:
        blocked = {
            s.id
            for s in ev.scripts
            if (s.host and _host_blocked(s.host, blocked_hosts)) or (signature_block and s.signatures)
        }
        keep = tuple(
            x for x in ev.surfaces if not ev.surface_scripts.get(x) or not set(ev.surface_scripts[x]) <= blocked
        )
        attribution = {k: tuple(i for i in v if i not in blocked) for k, v in ev.surface_scripts.items() if k in keep}
        scripts = tuple(s for s in ev.scripts if s.id not in blocked)
        out.append(VisitEvent(ev.client, ev.site, ev.origin, ev.day, keep, attribution, scripts))
    return out


@dataclass(frozen=True)
class BlocklistImpact:
    baseline: EntropyHistogram
    intervention: EntropyHistogram
    delta: np.ndarray
    baseline_entropy: dict[tuple[str, str, int], float]
    intervention_entropy: dict[tuple[str, str, int], float]

    def to_json(self) -> dict[str, Any]:
        return {
            "edges": self.baseline.edges.tolist(),
            "baseline": self.baseline.mass.tolist(),
            "intervention": self.intervention.mass.tolist(),
            "delta": self.delta.tolist(),
        }


def blocklist_impact(
    events: Sequence[VisitEvent],
    graph: MiGraph,
    blocklist: Iterable[str] = (),
    signature_block: bool = False,
    bucket_width: float = 1.0,
    verticals: Mapping[str, str] | None = None,
    default_entropy: float = 0.0,
) -> BlocklistImpact:
    """Session-entropy histograms before and after blocking scripts."""
    base_sessions = sessionize(events, verticals)
    after_sessions = sessionize(apply_blocklist(events, blocklist, signature_block), verticals, keep_empty=True)
    after_by_key = {s.key: s for s in after_sessions}
    # same session keys on both sides so the histograms are comparable
    after_sessions = [after_by_key[s.key] for s in base_sessions]
    h_base = {s.key: session_entropy(s, graph, default_entropy) for s in base_sessions}
    h_after = {s.key: session_entropy(s, graph, default_entropy) for s in after_sessions}
    top = max(h_base.values(), default=0.0)
    base = histogram_from_values(base_sessions, [h_base[s.key] for s in base_sessions], bucket_width, top)
    after = histogram_from_values(after_sessions, [h_after[s.key] for s in after_sessions], bucket_width, top)
    return BlocklistImpact(base, after, after.mass - base.mass, h_base, h_after)


def select_core_surfaces(
    reports: Iterable[Any],
    min_clients: int = 500,
    single_value_fraction: float = 0.95,
    min_entropy_bits: float = 0.1,
    max_daily_cv: float = 0.5,
    days: int = WINDOW_DAYS,
) -> set[str]:
    """Surfaces that are popular, stable per client, non-trivial and steadily reported.

    ``reports`` need ``client_id``, ``surface``, ``value`` and ``timestamp``
    (a day index in ``[0, days)``). Entropy is computed over each client's
    most frequent value. Steadiness is the coefficient of variation of the
    daily distinct-reporter count, including days with no reporters.
    """
    values: dict[str, dict[Any, Counter]] = {}
    daily: dict[str, list[set]] = {}
    for r in reports:
        values.setdefault(r.surface, {}).setdefault(r.client_id, Counter())[r.value] += 1
        day_sets = daily.setdefault(r.surface, [set() for _ in range(days)])
        if 0 <= r.timestamp < days:
            day_sets[r.timestamp].add(r.client_id)
    core = set()
    for s, per_client in values.items():
        n_clients = len(per_client)
        if n_clients < min_clients:
            continue
        single = sum(1 for c in per_client.values() if len(c) == 1) / n_clients
        if single < single_value_fraction:
            continue
        modal = Counter(c.most_common(1)[0][0] for c in per_client.values())
        p = np.array(list(modal.values()), dtype=float) / n_clients
        h = float(-np.sum(p * np.log2(p)))
        if h < min_entropy_bits:
            continue
        counts = np.array([len(d) for d in daily[s]], dtype=float)
        cv = counts.std() / counts.mean() if counts.mean() > 0 else math.inf
        if cv > max_daily_cv:
            continue
        core.add(s)
    return core


# ---------------------------------------------------------------- synthetic corpora


@dataclass(frozen=True)
class ScriptProfile:
    id: str
    host: str
    surfaces: tuple[str, ...]
    call_probability: float = 1.0
    signatures: tuple[str, ...] = ()
    # document origin the script runs in; None means the top-level site
    frame_origin: str | None = None


@dataclass(frozen=True)
class SiteProfile:
    site: str
    scripts: tuple[ScriptProfile, ...]
    vertical: str | None = None


def generate_events(
    sites: Sequence[SiteProfile],
    num_clients: int,
    visits_per_client: int,
    seed: int,
    days: int = WINDOW_DAYS,
) -> list[VisitEvent]:
    """Synthetic visit log: each visit picks a site and runs its scripts.

    Each script observes all its surfaces with its call probability.
    """
    rng = substream(seed, "events")
    events = []
    for c in range(num_clients):
        for _ in range(visits_per_client):
            prof = sites[int(rng.integers(len(sites)))]
            day = int(rng.integers(days))
            by_origin: dict[str, tuple[list[str], dict[str, tuple[str, ...]], list[Script]]] = {}
            for sc in prof.scripts:
                if rng.random() >= sc.call_probability:
                    continue
                origin = sc.frame_origin or prof.site
                surf, attr, scripts = by_origin.setdefault(origin, ([], {}, []))
                scripts.append(Script(sc.id, sc.host, sc.signatures))
                for s in sc.surfaces:
                    if s not in attr:
                        surf.append(s)
                    attr[s] = attr.get(s, ()) + (sc.id,)
            for origin in sorted(by_origin):
                surf, attr, scripts = by_origin[origin]
                if surf:
                    events.append(VisitEvent(f"c{c}", prof.site, origin, day, tuple(surf), attr, tuple(scripts)))
    return events
