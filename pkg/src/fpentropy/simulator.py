"""Synthetic client populations and the three-phase telemetry protocol.

Ground truth comes from a dependency forest over surfaces: each surface has
at most one parent and a conditional value table, so the joint entropy of
any subset can be computed exactly. Clients draw surface values from the
model, visit sites where surfaces are called with per-visit probabilities,
and report observations according to the phase rules:

* phase 1 reports which surfaces were called, never their values;
* phase 2 assigns each client one family and reports each in-family
  observation with probability ``min(1, 40 / n)``, stopping after 40 reports;
* phase 3 assigns planned subsets whose exact joint entropy is within the
  20-bit budget and reports every in-list observation.
"""

from __future__ import annotations

import hashlib
import hmac
import itertools
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .planner import AssignmentPlan
from .rng import substream

log = logging.getLogger(__name__)

DEFAULT_FAMILIES = tuple(f"family-{i}" for i in range(10))
PHASE2_REPORT_CAP = 40
PHASE3_BIT_BUDGET = 20.0
K_ANONYMITY_THRESHOLD = 50
MAX_ENUMERATION = 2**20
_BLOCK = 4096


class ModelError(ValueError):
    pass


class CapViolation(AssertionError):
    pass


class BudgetExceededError(ValueError):
    pass


class HashCollisionError(ValueError):
    pass


@dataclass(frozen=True)
class SurfaceSpec:
    id: str
    domain: tuple[str, ...]
    family: str = DEFAULT_FAMILIES[0]
    call_probability: float = 1.0


@dataclass(frozen=True)
class PopulationModel:
    """Dependency-forest model.

    ``tables[s]`` is the marginal (1-D) for a root and the conditional
    ``P(s | parent)`` (rows indexed by parent value) for a child.
    """

    surfaces: tuple[SurfaceSpec, ...]
    parents: Mapping[str, str]
    tables: Mapping[str, np.ndarray]
    families: tuple[str, ...] = DEFAULT_FAMILIES
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "surfaces", tuple(self.surfaces))
        object.__setattr__(self, "tables", {k: np.asarray(v, dtype=float) for k, v in self.tables.items()})
        ids = [s.id for s in self.surfaces]
        if len(set(ids)) != len(ids):
            raise ModelError("duplicate surface ids")
        spec = {s.id: s for s in self.surfaces}
        for s in self.surfaces:
            if not s.id:
                raise ModelError("surface id must be non-empty")
            if not s.domain or len(set(s.domain)) != len(s.domain):
                raise ModelError(f"{s.id}: domain must be non-empty with distinct tokens")
            if s.family not in self.families:
                raise ModelError(f"{s.id}: unknown family {s.family!r}")
            if not 0.0 <= s.call_probability <= 1.0:
                raise ModelError(f"{s.id}: call probability outside [0, 1]")
        for child, parent in self.parents.items():
            if child not in spec or parent not in spec:
                raise ModelError(f"edge {parent!r}->{child!r} references unknown surface")
        for s in ids:
            seen = {s}
            cur = s
            while cur in self.parents:
                cur = self.parents[cur]
                if cur in seen:
                    raise ModelError(f"cycle through {s!r}")
                seen.add(cur)
        for s in self.surfaces:
            t = self.tables.get(s.id)
            if t is None:
                raise ModelError(f"{s.id}: missing table")
            k = len(s.domain)
            shape = (len(spec[self.parents[s.id]].domain), k) if s.id in self.parents else (k,)
            if t.shape != shape:
                raise ModelError(f"{s.id}: table shape {t.shape}, expected {shape}")
            if np.any(t < 0) or not np.allclose(t.sum(axis=-1), 1.0, rtol=0, atol=1e-12):
                raise ModelError(f"invalid conditional table for {s.id}: rows must sum to 1")

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.surfaces]

    def spec(self, surface: str) -> SurfaceSpec:
        for s in self.surfaces:
            if s.id == surface:
                return s
        raise KeyError(surface)

    def children(self, surface: str) -> list[str]:
        return [c for c in self.ids if self.parents.get(c) == surface]

    def topological_order(self) -> list[str]:
        order: list[str] = []
        pending = [s for s in self.ids if s not in self.parents]
        while pending:
            s = pending.pop(0)
            order.append(s)
            pending.extend(self.children(s))
        return order

    def root_of(self, surface: str) -> str:
        while surface in self.parents:
            surface = self.parents[surface]
        return surface

    def marginal(self, surface: str) -> np.ndarray:
        if surface not in self.parents:
            return self.tables[surface]
        return self.marginal(self.parents[surface]) @ self.tables[surface]

    def families_map(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for s in self.surfaces:
            out.setdefault(s.family, []).append(s.id)
        return out

    def to_json(self) -> dict[str, Any]:
        surfaces = []
        for s in self.surfaces:
            rec: dict[str, Any] = {
                "id": s.id,
                "domain": list(s.domain),
                "family": s.family,
                "call_probability": s.call_probability,
            }
            if s.id in self.parents:
                rec["parent"] = self.parents[s.id]
                rec["conditional"] = self.tables[s.id].tolist()
            else:
                rec["probabilities"] = self.tables[s.id].tolist()
            surfaces.append(rec)
        return {"families": list(self.families), "seed": self.seed, "surfaces": surfaces}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> PopulationModel:
        surfaces, parents, tables = [], {}, {}
        for rec in data["surfaces"]:
            surfaces.append(
                SurfaceSpec(
                    rec["id"],
                    tuple(str(v) for v in rec["domain"]),
                    rec.get("family", DEFAULT_FAMILIES[0]),
                    float(rec.get("call_probability", 1.0)),
                )
            )
            if rec.get("parent") is not None:
                parents[rec["id"]] = rec["parent"]
                tables[rec["id"]] = np.asarray(rec["conditional"], dtype=float)
            else:
                tables[rec["id"]] = np.asarray(rec["probabilities"], dtype=float)
        families = tuple(data.get("families", DEFAULT_FAMILIES))
        return cls(tuple(surfaces), parents, tables, families, int(data.get("seed", 0)))

    @classmethod
    def load(cls, path: str) -> PopulationModel:
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def random_forest_model(
    num_surfaces: int,
    max_values: int,
    rng: np.random.Generator,
    edge_probability: float = 0.7,
    concentration: float = 0.5,
    call_probability: float | tuple[float, float] = 1.0,
    families: Sequence[str] = DEFAULT_FAMILIES,
    min_values: int = 2,
) -> PopulationModel:
    """Random dependency forest with Dirichlet tables.

    Surfaces are named ``s00``, ``s01``... Each surface after the first gets a
    parent among earlier surfaces with probability ``edge_probability``.
    """
    surfaces, parents, tables = [], {}, {}
    for i in range(num_surfaces):
        sid = f"s{i:02d}"
        k = int(rng.integers(min_values, max_values + 1))
        if isinstance(call_probability, tuple):
            cp = float(rng.uniform(*call_probability))
        else:
            cp = float(call_probability)
        family = families[i % len(families)]
        surfaces.append(SurfaceSpec(sid, tuple(f"v{j}" for j in range(k)), family, cp))
        if i > 0 and rng.random() < edge_probability:
            parent = surfaces[int(rng.integers(i))]
            parents[sid] = parent.id
            tables[sid] = rng.dirichlet(np.full(k, concentration), size=len(parent.domain))
        else:
            tables[sid] = rng.dirichlet(np.full(k, concentration))
    return PopulationModel(tuple(surfaces), parents, _renormalize(tables), tuple(families))


def _renormalize(tables: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    # Dirichlet draws can underflow to exact zeros; keep rows summing to 1.
    return {k: v / v.sum(axis=-1, keepdims=True) for k, v in tables.items()}


# ---------------------------------------------------------------- exact oracle


def _subtree_tensor(model: PopulationModel, node: str, keep: set[str]) -> tuple[np.ndarray, list[str]]:
    """P(kept descendants | node) as an array with node's value on axis 0."""
    k = len(model.spec(node).domain)
    tensor = np.ones((k,))
    axes: list[str] = []
    for child in model.children(node):
        ct, caxes = _subtree_tensor(model, child, keep)
        if not caxes and child not in keep:
            continue
        cond = model.tables[child]
        if child in keep:
            # keep the child's own value as an axis: P(child, rest | node)
            msg = np.einsum("pc,c...->pc...", cond, ct)
            caxes = [child] + caxes
        else:
            msg = np.tensordot(cond, ct, axes=([1], [0]))
        tensor = tensor.reshape(tensor.shape + (1,) * (msg.ndim - 1)) * msg.reshape(
            (k,) + (1,) * (tensor.ndim - 1) + msg.shape[1:]
        )
        axes.extend(caxes)
    return tensor, axes


def joint_table(model: PopulationModel, subset: Iterable[str]) -> tuple[np.ndarray, list[str]]:
    """Exact joint probability table over ``subset`` (axis order returned)."""
    keep = set(subset)
    unknown = keep - set(model.ids)
    if unknown:
        raise ModelError(f"unknown surfaces: {sorted(unknown)}")
    size = 1
    for s in keep:
        size *= len(model.spec(s).domain)
    if size > MAX_ENUMERATION:
        raise ModelError(f"joint domain of {size} values exceeds enumeration limit {MAX_ENUMERATION}")
    result = np.ones(())
    axes: list[str] = []
    for root in (s for s in model.ids if s not in model.parents):
        t, taxes = _subtree_tensor(model, root, keep)
        prior = model.tables[root]
        if root in keep:
            part = prior.reshape((-1,) + (1,) * len(taxes)) * t
            taxes = [root] + taxes
        elif taxes:
            part = np.tensordot(prior, t, axes=([0], [0]))
        else:
            continue
        result = np.multiply.outer(result, part)
        axes.extend(taxes)
    return result, axes


def _entropy_bits(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def exact_joint_entropy(model: PopulationModel, subset: Iterable[str]) -> float:
    """Exact joint entropy in bits.

    Pieces that are connected within their tree use the chain rule; anything
    else is marginalized by enumeration, up to ``MAX_ENUMERATION`` cells.
    """
    subset = list(subset)
    if not subset:
        return 0.0
    # trees are independent, so entropy adds across them
    by_root: dict[str, list[str]] = {}
    for s in subset:
        if s not in model.ids:
            raise ModelError(f"unknown surface {s!r}")
        by_root.setdefault(model.root_of(s), []).append(s)
    total = 0.0
    for part in by_root.values():
        members = set(part)
        tops = [s for s in members if model.parents.get(s) not in members]
        if len(tops) == 1:
            total += _connected_entropy(model, tops[0], members)
        else:
            total += _entropy_bits(joint_table(model, part)[0])
    return total


def _connected_entropy(model: PopulationModel, top: str, members: set[str]) -> float:
    """Chain rule over a connected piece of one tree: H(top) + sum H(child | parent)."""
    h = _entropy_bits(model.marginal(top))
    for s in members:
        if s == top:
            continue
        cond = model.tables[s]
        parent_marginal = model.marginal(model.parents[s])
        h += float(sum(w * _entropy_bits(row) for w, row in zip(parent_marginal, cond) if w > 0))
    return h


def exact_mutual_information(model: PopulationModel, a: str, b: str) -> float:
    return max(
        0.0,
        exact_joint_entropy(model, [a])
        + exact_joint_entropy(model, [b])
        - exact_joint_entropy(model, [a, b]),
    )


def exact_graph(model: PopulationModel, forest_only: bool = False):
    """MiGraph holding exact entropies and MI (all pairs, or forest edges only)."""
    from .chowliu import MiGraph

    entropies = {s: exact_joint_entropy(model, [s]) for s in model.ids}
    if forest_only:
        pairs = [(c, p) for c, p in model.parents.items()]
    else:
        pairs = list(itertools.combinations(model.ids, 2))
    mi = {p: exact_mutual_information(model, *p) for p in pairs}
    return MiGraph.from_values(entropies, mi)


# ---------------------------------------------------------------- population


@dataclass(frozen=True)
class Population:
    model: PopulationModel
    values: Mapping[str, np.ndarray]
    seed: int

    @property
    def num_clients(self) -> int:
        return len(next(iter(self.values.values()))) if self.values else 0

    def tokens(self, surface: str) -> np.ndarray:
        domain = np.asarray(self.model.spec(surface).domain, dtype=object)
        return domain[self.values[surface]]

    def token(self, surface: str, client: int) -> str:
        return self.model.spec(surface).domain[int(self.values[surface][client])]


def _sample_rows(rng: np.random.Generator, probs: np.ndarray) -> np.ndarray:
    """One categorical draw per row of ``probs``."""
    cdf = np.cumsum(probs, axis=-1)
    u = rng.random(probs.shape[0])
    idx = (u[:, None] >= cdf).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def generate_population(model: PopulationModel, num_clients: int, seed: int | None = None) -> Population:
    """Draw every client's surface values.

    Clients are simulated in fixed blocks, each with its own sub-stream of the
    master seed, so the table does not depend on evaluation order.
    """
    seed = model.seed if seed is None else seed
    order = model.topological_order()
    values = {s: np.empty(num_clients, dtype=np.int64) for s in order}
    for b, start in enumerate(range(0, num_clients, _BLOCK)):
        stop = min(start + _BLOCK, num_clients)
        rng = substream(seed, "population", b)
        for s in order:
            t = model.tables[s]
            if s in model.parents:
                rows = t[values[model.parents[s]][start:stop]]
            else:
                rows = np.broadcast_to(t, (stop - start, t.shape[0]))
            values[s][start:stop] = _sample_rows(rng, rows)
    return Population(model, values, seed)


# ---------------------------------------------------------------- telemetry


@dataclass(frozen=True)
class VisitSchedule:
    """Logical visit plan: each client makes ``visits_per_client`` visits to
    sites drawn uniformly from ``sites``; visit ``v`` happens at tick ``v``."""

    sites: tuple[str, ...] = ("site-0.example",)
    visits_per_client: int = 1

    def __post_init__(self) -> None:
        if not self.sites:
            raise ValueError("at least one site required")
        if self.visits_per_client < 1:
            raise ValueError("visits_per_client must be >= 1")


class PresenceRecord(NamedTuple):
    client_id: int
    site: str
    surface: str
    timestamp: int


class ReportRecord(NamedTuple):
    client_id: int
    surface: str
    value: str
    site: str
    timestamp: int

    def to_json(self) -> dict[str, Any]:
        return self._asdict()


@dataclass
class ClientState:
    client_id: int
    assigned_list: frozenset[str]
    reporting_probability: float
    reported_count: int = 0
    exposure_bits: float | None = None


@dataclass
class PhaseResult:
    phase: int
    records: list
    clients: list[ClientState] = field(default_factory=list)

    def max_reports(self) -> int:
        return max((c.reported_count for c in self.clients), default=0)


def _observations(population: Population, schedule: VisitSchedule, seed: int, stage: str, start: int, stop: int, block: int):
    """Per-visit site choice and call matrix for clients [start, stop)."""
    rng = substream(seed, stage, block)
    probs = np.array([s.call_probability for s in population.model.surfaces])
    site_idx = rng.integers(len(schedule.sites), size=(stop - start, schedule.visits_per_client))
    called = rng.random((stop - start, schedule.visits_per_client, len(probs))) < probs
    return rng, site_idx, called


def _client_ids(population: Population, clients: Sequence[int] | None) -> np.ndarray:
    ids = np.arange(population.num_clients) if clients is None else np.asarray(clients, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= population.num_clients):
        raise ValueError("client id outside population")
    if len(np.unique(ids)) != len(ids):
        raise ValueError("duplicate client ids")
    return ids


def run_phase1(
    population: Population,
    schedule: VisitSchedule = VisitSchedule(),
    seed: int | None = None,
    clients: Sequence[int] | None = None,
) -> PhaseResult:
    """Surface-call presence only: (client, site, surface, tick), no values."""
    seed = population.seed if seed is None else seed
    ids = _client_ids(population, clients)
    surfaces = population.model.ids
    records: list[PresenceRecord] = []
    for b, start in enumerate(range(0, len(ids), _BLOCK)):
        block_ids = ids[start : start + _BLOCK]
        _, site_idx, called = _observations(population, schedule, seed, "phase1", 0, len(block_ids), b)
        ci, vi, si = np.nonzero(called)
        for c, v, s in zip(ci.tolist(), vi.tolist(), si.tolist()):
            records.append(PresenceRecord(int(block_ids[c]), schedule.sites[site_idx[c, v]], surfaces[s], v))
    return PhaseResult(1, records)


def expected_family_calls(model: PopulationModel, schedule: VisitSchedule) -> dict[str, float]:
    """Model-implied expected in-family observations per client over the horizon."""
    out: dict[str, float] = {}
    for s in model.surfaces:
        out[s.family] = out.get(s.family, 0.0) + s.call_probability * schedule.visits_per_client
    return out


def reporting_probability(expected_calls: float, cap: int = PHASE2_REPORT_CAP) -> float:
    if expected_calls <= 0:
        return 1.0
    return min(1.0, cap / expected_calls)


def run_phase2(
    population: Population,
    schedule: VisitSchedule = VisitSchedule(),
    families: Mapping[str, Sequence[str]] | None = None,
    expected_calls: Mapping[str, float] | None = None,
    seed: int | None = None,
    clients: Sequence[int] | None = None,
    cap: int = PHASE2_REPORT_CAP,
) -> PhaseResult:
    """Family-list reporting with probability min(1, cap/n) and a hard cap.

    Clients record every called surface, then keep only their family's
    surfaces before the reporting coin flips.
    """
    model = population.model
    seed = population.seed if seed is None else seed
    families = dict(families) if families is not None else model.families_map()
    owner: dict[str, str] = {}
    for f, members in families.items():
        for s in members:
            if s in owner:
                raise ValueError(f"surface {s!r} in two families")
            owner[s] = f
    if set(owner) != set(model.ids):
        raise ValueError("families must partition the model's surfaces")
    fam_names = sorted(f for f, m in families.items() if m)
    if expected_calls is None:
        expected_calls = expected_family_calls(model, schedule)
    p_fam = np.array([reporting_probability(expected_calls.get(f, 0.0), cap) for f in fam_names])
    surf_fam = np.array([fam_names.index(owner[s]) for s in model.ids])

    ids = _client_ids(population, clients)
    records: list[ReportRecord] = []
    states: list[ClientState] = []
    for b, start in enumerate(range(0, len(ids), _BLOCK)):
        block_ids = ids[start : start + _BLOCK]
        rng, site_idx, called = _observations(population, schedule, seed, "phase2", 0, len(block_ids), b)
        assigned = rng.integers(len(fam_names), size=len(block_ids))
        p_c = p_fam[assigned]
        in_list = surf_fam[None, :] == assigned[:, None]
        observed = called & in_list[:, None, :]  # record-then-filter
        coin = rng.random(observed.shape) < p_c[:, None, None]
        wanted = (observed & coin).reshape(len(block_ids), -1)
        emitted = wanted & (np.cumsum(wanted, axis=1) <= cap)
        k_c = emitted.sum(axis=1)
        emitted = emitted.reshape(observed.shape)
        ci, vi, si = np.nonzero(emitted)
        for c, v, s in zip(ci.tolist(), vi.tolist(), si.tolist()):
            client = int(block_ids[c])
            sid = model.ids[s]
            records.append(ReportRecord(client, sid, population.token(sid, client), schedule.sites[site_idx[c, v]], v))
        for j, client in enumerate(block_ids.tolist()):
            kc = int(k_c[j])
            states.append(
                ClientState(
                    client,
                    frozenset(families[fam_names[assigned[j]]]),
                    0.0 if kc >= cap else float(p_c[j]),
                    kc,
                )
            )
    result = PhaseResult(2, records, states)
    check_phase2_caps(result, cap)
    return result


def check_phase2_caps(result: PhaseResult, cap: int = PHASE2_REPORT_CAP) -> None:
    per_client = Counter(r.client_id for r in result.records)
    lists = {c.client_id: c.assigned_list for c in result.clients}
    for c in result.clients:
        if c.reported_count > cap or per_client.get(c.client_id, 0) > cap:
            raise CapViolation(f"client {c.client_id} reported {c.reported_count} > {cap} values")
    for r in result.records:
        if r.surface not in lists[r.client_id]:
            raise CapViolation(f"client {r.client_id} reported {r.surface} outside its list")


def _plan_rounds(plan: AssignmentPlan | Sequence[tuple[Sequence[str], int]]) -> list[tuple[tuple[str, ...], int]]:
    if isinstance(plan, AssignmentPlan):
        return [(tuple(r.subset), r.clients) for r in plan.rounds]
    return [(tuple(s), int(m)) for s, m in plan]


def run_phase3(
    population: Population,
    plan: AssignmentPlan | Sequence[tuple[Sequence[str], int]],
    schedule: VisitSchedule = VisitSchedule(),
    seed: int | None = None,
    clients: Sequence[int] | None = None,
    exclude_clients: Iterable[int] = (),
    budget: float = PHASE3_BIT_BUDGET,
) -> PhaseResult:
    """Report every in-list observation for clients holding planned subsets.

    Subsets are scored by the model's exact joint entropy; any subset above
    ``budget`` bits is refused before a single report is produced.
    """
    model = population.model
    seed = population.seed if seed is None else seed
    rounds = _plan_rounds(plan)
    exposure = {}
    for subset, _ in rounds:
        h = exact_joint_entropy(model, subset)
        if h > budget + 1e-9:
            raise BudgetExceededError(f"subset {list(subset)} exposes {h:.3f} bits > {budget} bit budget")
        exposure[subset] = h
    ids = _client_ids(population, clients)
    excluded = set(int(c) for c in exclude_clients)
    ids = np.array([c for c in ids.tolist() if c not in excluded], dtype=np.int64)
    needed = sum(m for _, m in rounds)
    if needed > len(ids):
        raise ValueError(f"plan needs {needed} clients, only {len(ids)} available")

    assigned = ids[:needed]
    subset_of = np.repeat(np.arange(len(rounds)), [m for _, m in rounds])
    masks = np.array([[s in set(sub) for s in model.ids] for sub, _ in rounds], dtype=bool).reshape(
        len(rounds), len(model.ids)
    )
    records: list[ReportRecord] = []
    states: list[ClientState] = []
    for b, start in enumerate(range(0, needed, _BLOCK)):
        block_ids = assigned[start : start + _BLOCK]
        block_subsets = subset_of[start : start + _BLOCK]
        _, site_idx, called = _observations(population, schedule, seed, "phase3", 0, len(block_ids), b)
        emitted = called & masks[block_subsets][:, None, :]
        counts = emitted.reshape(len(block_ids), -1).sum(axis=1)
        ci, vi, si = np.nonzero(emitted)
        for c, v, s in zip(ci.tolist(), vi.tolist(), si.tolist()):
            client = int(block_ids[c])
            sid = model.ids[s]
            records.append(ReportRecord(client, sid, population.token(sid, client), schedule.sites[site_idx[c, v]], v))
        for j, client in enumerate(block_ids.tolist()):
            sub = rounds[block_subsets[j]][0]
            states.append(ClientState(client, frozenset(sub), 1.0, int(counts[j]), exposure[sub]))
    result = PhaseResult(3, records, states)
    check_phase3_caps(result, budget)
    return result


def check_phase3_caps(result: PhaseResult, budget: float = PHASE3_BIT_BUDGET) -> None:
    lists = {c.client_id: c.assigned_list for c in result.clients}
    for c in result.clients:
        if c.exposure_bits is None or c.exposure_bits > budget + 1e-9:
            raise CapViolation(f"client {c.client_id} exposure {c.exposure_bits} bits > {budget}")
    for r in result.records:
        if r.surface not in lists[r.client_id]:
            raise CapViolation(f"client {r.client_id} reported {r.surface} outside its list")


def full_reports(population: Population, clients: Sequence[int] | None = None) -> list[ReportRecord]:
    """One uncapped, unfiltered report of every surface per client."""
    ids = _client_ids(population, clients)
    records = []
    for sid in population.model.ids:
        toks = population.tokens(sid)
        records.extend(ReportRecord(int(c), sid, toks[c], "", 0) for c in ids.tolist())
    return records


# ---------------------------------------------------------------- privacy


def _digest(salt: bytes, surface: str, value: str) -> str:
    msg = surface.encode() + b"\x00" + str(value).encode()
    return hmac.new(salt, msg, hashlib.sha256).hexdigest()[:16]


def hash_values(records: Iterable[ReportRecord], salt: bytes | str) -> list[ReportRecord]:
    """Replace values by a keyed digest; raise if two values share a digest."""
    if isinstance(salt, str):
        salt = salt.encode()
    seen: dict[tuple[str, str], str] = {}
    cache: dict[tuple[str, str], str] = {}
    out = []
    for r in records:
        key = (r.surface, r.value)
        token = cache.get(key)
        if token is None:
            token = _digest(salt, r.surface, r.value)
            prior = seen.setdefault((r.surface, token), r.value)
            if prior != r.value:
                raise HashCollisionError(f"digest collision on {r.surface!r}; choose a new salt")
            cache[key] = token
        out.append(r._replace(value=token))
    return out


def distinct_client_counts(records: Iterable[ReportRecord]) -> dict[tuple[str, str], int]:
    clients: dict[tuple[str, str], set[int]] = {}
    for r in records:
        clients.setdefault((r.surface, r.value), set()).add(r.client_id)
    return {k: len(v) for k, v in clients.items()}


def k_anonymity_filter(
    counts: Mapping[tuple[str, str], int], threshold: int = K_ANONYMITY_THRESHOLD
) -> dict[tuple[str, str], int]:
    """Drop (surface, value) rows seen by fewer than ``threshold`` clients."""
    kept = {k: c for k, c in counts.items() if c >= threshold}
    dropped = len(counts) - len(kept)
    if dropped:
        log.info("k-anonymity filter dropped %d of %d values (threshold %d)", dropped, len(counts), threshold)
    return kept


def filter_records(records: Sequence[ReportRecord], threshold: int = K_ANONYMITY_THRESHOLD) -> list[ReportRecord]:
    kept = k_anonymity_filter(distinct_client_counts(records), threshold)
    return [r for r in records if (r.surface, r.value) in kept]


def client_values(records: Iterable[ReportRecord]) -> dict[str, dict[int, str]]:
    """First reported value per (surface, client)."""
    out: dict[str, dict[int, str]] = {}
    for r in records:
        out.setdefault(r.surface, {}).setdefault(r.client_id, r.value)
    return out
