"""Electrical parameters, load allocation and network assembly for a feeder tree."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from decimal import Decimal, localcontext
from typing import Iterable, Mapping

from .errors import ConfigError, NetworkValidationError
from .geograph import GeoPoint, project_points
from .synth.feeder import FeederGraph


@dataclass(frozen=True)
class LineTemplate:
    line_class: str
    r_per_km: float
    x_per_km: float
    rating_mva: float

    def __post_init__(self):
        for name in ("r_per_km", "x_per_km", "rating_mva"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"line template {self.line_class!r}: {name} must be > 0, got {v}")


DEFAULT_TEMPLATES = {
    "residential": LineTemplate("residential", 0.642, 0.083, 0.4),
    "trunk": LineTemplate("trunk", 0.193, 0.086, 4.0),
}

# road class -> line template class
DEFAULT_CLASS_TEMPLATE = {
    "residential": "residential",
    "living_street": "residential",
    "unclassified": "residential",
    "service": "residential",
    "tertiary": "residential",
    "tertiary_link": "residential",
    "secondary": "trunk",
    "secondary_link": "trunk",
    "primary": "trunk",
    "primary_link": "trunk",
    "trunk": "trunk",
    "trunk_link": "trunk",
}


@dataclass(frozen=True)
class LoadAllocationConfig:
    """Parameters of the spatial demand weighting.

    ``centroids=None`` means "derive one": the mean of the activity points if
    any were supplied, otherwise the feeder's node centroid. An explicit empty
    list is taken at face value and rejected when ``beta > 0``.
    """

    eta: float = 1.0
    beta: float = 1.0
    epsilon: float = 1e-6
    total_p_mw: float = 1.44
    power_factor: float | Mapping[str, float] = 0.95
    centroids: tuple[GeoPoint, ...] | None = None
    activity_radius_m: float = 60.0

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if not (math.isfinite(self.total_p_mw) and self.total_p_mw >= 0):
            raise ConfigError(f"total_p_mw must be >= 0, got {self.total_p_mw}")
        if not (math.isfinite(self.activity_radius_m) and self.activity_radius_m >= 0):
            raise ConfigError(f"activity_radius_m must be >= 0, got {self.activity_radius_m}")
        for name in ("eta", "beta"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        pfs = self.power_factor.values() if isinstance(self.power_factor, Mapping) else [self.power_factor]
        for pf in pfs:
            if not (0 < pf <= 1):
                raise ConfigError(f"power factor must lie in (0, 1], got {pf}")
        if self.centroids is not None:
            object.__setattr__(self, "centroids", tuple(self.centroids))

    def pf_of(self, bus: str) -> float:
        if isinstance(self.power_factor, Mapping):
            try:
                return self.power_factor[bus]
            except KeyError:
                raise ConfigError(f"no power factor configured for bus {bus!r}") from None
        return self.power_factor


@dataclass(frozen=True)
class Bus:
    id: str
    x: float
    y: float
    lon: float | None = None
    lat: float | None = None


@dataclass(frozen=True)
class Line:
    """One feeder branch. ``r_ohm`` is ``r_per_km * length_km`` as computed."""

    id: str
    from_bus: str
    to_bus: str
    r_ohm: float
    x_ohm: float
    rating_mva: float
    length_km: float
    line_class: str
    r_per_km: float
    x_per_km: float


@dataclass(frozen=True)
class Load:
    bus: str
    p_mw: float
    q_mvar: float
    households: int = 0


@dataclass(frozen=True)
class ElectricalNetwork:
    buses: tuple[Bus, ...]
    slack_bus: str
    slack_v_pu: float
    base_mva: float
    base_kv: float
    lines: tuple[Line, ...]
    loads: tuple[Load, ...]
    total_p_mw: float = field(default=0.0)

    @property
    def z_base(self) -> float:
        return self.base_kv * self.base_kv / self.base_mva


def reactive_factor(pf: float) -> float:
    """tan(arccos(pf)) evaluated as sqrt(1 - pf^2) / pf in decimal arithmetic.

    Working from the decimal literal of ``pf`` keeps textbook cases exact:
    pf = 0.8 gives 0.75, where the float trig route lands one ulp low.
    """
    if not (0 < pf <= 1):
        raise ConfigError(f"power factor must lie in (0, 1], got {pf}")
    with localcontext() as ctx:
        ctx.prec = 40
        d = Decimal(repr(float(pf)))
        return float((1 - d * d).sqrt() / d)


def assign_line_params(feeder: FeederGraph, templates: Mapping[str, LineTemplate] = DEFAULT_TEMPLATES,
                       class_map: Mapping[str, str] | None = DEFAULT_CLASS_TEMPLATE) -> list[Line]:
    """One line per feeder edge with impedance ``per_km * length_km``.

    ``class_map`` translates road classes to template classes; a road class
    absent from the map is looked up in ``templates`` under its own name.
    """
    lines = []
    for e in feeder.edges:
        cls = (class_map or {}).get(e.road_class, e.road_class)
        t = templates.get(cls)
        if t is None:
            raise ConfigError(f"no line template for class {cls!r} (road class {e.road_class!r})")
        km = e.d / 1000.0
        lines.append(Line(f"L{e.id}", e.parent, e.child, t.r_per_km * km, t.x_per_km * km, t.rating_mva, km,
                          t.line_class, t.r_per_km, t.x_per_km))
    return lines


def default_centroid(feeder: FeederGraph, activity_points: Iterable[GeoPoint] | None) -> GeoPoint:
    pts = list(activity_points or ())
    src = pts if pts else list(feeder.nodes.values())
    lon = math.fsum(p.lon for p in src) / len(src)
    lat = math.fsum(p.lat for p in src) / len(src)
    if feeder.frame is None:
        x = math.fsum(p.x for p in src) / len(src)
        y = math.fsum(p.y for p in src) / len(src)
        return GeoPoint(lon, lat, x, y)
    return project_points([GeoPoint(lon, lat)], feeder.frame)[0]


def _projected(points, feeder):
    pts = list(points)
    if all(p.projected for p in pts):
        return pts
    if feeder.frame is None:
        raise ConfigError("points lack planar coordinates and the feeder has no projection frame")
    return project_points(pts, feeder.frame)


def compute_weights(feeder: FeederGraph, cfg: LoadAllocationConfig,
                    activity_points: Iterable[GeoPoint] | None = None) -> dict[str, float]:
    """omega_i = (A_i + eps)^eta / (delta_i + eps)^beta for every feeder node.

    ``activity_points=None`` means no activity layer, so A_i = 1 everywhere.
    """
    if cfg.centroids is not None and not cfg.centroids and cfg.beta > 0:
        raise ConfigError("beta > 0 needs at least one demand centroid")
    acts = None if activity_points is None else _projected(activity_points, feeder)
    if cfg.centroids is None:
        cents = [default_centroid(feeder, acts)]
    else:
        cents = _projected(cfg.centroids, feeder)
    r2 = cfg.activity_radius_m ** 2
    out = {}
    for n, p in feeder.nodes.items():
        if acts is None:
            a = 1.0
        else:
            a = float(sum(1 for q in acts if (q.x - p.x) ** 2 + (q.y - p.y) ** 2 <= r2))
        delta = min(math.hypot(c.x - p.x, c.y - p.y) for c in cents) if cents else 0.0
        out[n] = (a + cfg.epsilon) ** cfg.eta / (delta + cfg.epsilon) ** cfg.beta
    return out


def apportion(weights: Mapping[str, float], total: int) -> dict[str, int]:
    """Largest-remainder (Hamilton) split of an integer total.

    Ties on the fractional part go to the larger weight, then to mapping order.
    """
    if total < 0:
        raise ConfigError(f"household total must be >= 0, got {total}")
    keys = list(weights)
    s = math.fsum(weights.values())
    quotas = [total * weights[k] / s for k in keys]
    counts = [int(math.floor(q)) for q in quotas]
    short = total - sum(counts)
    order = sorted(range(len(keys)), key=lambda i: (-(quotas[i] - counts[i]), -weights[keys[i]], i))
    for i in order[:short]:
        counts[i] += 1
    return dict(zip(keys, counts))


def _exact_shares(weights: Mapping[str, float], total: float) -> dict[str, float]:
    """total * w_i / sum(w), with the float residue moved onto the largest weight."""
    s = math.fsum(weights.values())
    p = {k: total * w / s for k, w in weights.items()}
    if not p:
        return p
    big = min(p, key=lambda k: (-weights[k], list(weights).index(k)))
    p[big] += total - math.fsum(p.values())
    # p[big] <= total, so its ulp is no coarser than total's and stepping converges
    for _ in range(64):
        s = math.fsum(p.values())
        if s == total:
            break
        p[big] = math.nextafter(p[big], math.inf if s < total else -math.inf)
    return p


def allocate_loads(weights: Mapping[str, float], cfg: LoadAllocationConfig, households_total: int) -> list[Load]:
    """Aggregated load points proportional to ``weights``.

    Households are apportioned first; buses that receive none carry no load
    record, and active power is shared among the remaining load buses in
    proportion to their weight. With ``households_total == 0`` every bus is a
    load point.
    """
    if not weights:
        raise ConfigError("no buses to allocate load to")
    if any(not math.isfinite(w) or w < 0 for w in weights.values()):
        raise ConfigError("load weights must be finite and >= 0")
    if math.fsum(weights.values()) <= 0:
        raise ConfigError("load weights sum to zero")
    hh = apportion(weights, households_total)
    if households_total > 0:
        active = {k: w for k, w in weights.items() if hh[k] > 0}
    else:
        active = {k: w for k, w in weights.items() if w > 0}
    p = _exact_shares(active, cfg.total_p_mw)
    loads = []
    for k in active:
        loads.append(Load(k, p[k], p[k] * reactive_factor(cfg.pf_of(k)), hh[k]))
    return loads


def validate_network(net: ElectricalNetwork) -> list[str]:
    """Every invariant breach of ``net`` as a readable string (empty when valid)."""
    bad = []
    ids = [b.id for b in net.buses]
    idset = set(ids)
    if len(idset) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        bad.append(f"duplicate bus ids {dup}")
    if net.slack_bus not in idset:
        bad.append(f"slack bus {net.slack_bus!r} is not a bus")
    for name in ("slack_v_pu", "base_mva", "base_kv"):
        v = getattr(net, name)
        if not (math.isfinite(v) and v > 0):
            bad.append(f"{name} must be > 0, got {v}")
    for ln in net.lines:
        for end in (ln.from_bus, ln.to_bus):
            if end not in idset:
                bad.append(f"line {ln.id}: unknown bus {end!r}")
        for name in ("r_ohm", "x_ohm", "rating_mva", "length_km"):
            v = getattr(ln, name)
            if not (math.isfinite(v) and v > 0):
                bad.append(f"line {ln.id}: {name} must be > 0, got {v}")
        if ln.r_ohm != ln.r_per_km * ln.length_km or ln.x_ohm != ln.x_per_km * ln.length_km:
            bad.append(f"line {ln.id}: impedance differs from per-km value times length")
    if len(net.lines) != len(net.buses) - 1:
        bad.append(f"{len(net.lines)} lines for {len(net.buses)} buses is not radial")
    elif net.slack_bus in idset and not _connected(net):
        bad.append("line graph is not connected")
    seen = set()
    for ld in net.loads:
        if ld.bus not in idset:
            bad.append(f"load on unknown bus {ld.bus!r}")
        if ld.bus in seen:
            bad.append(f"more than one load record on bus {ld.bus!r}")
        seen.add(ld.bus)
        if not (math.isfinite(ld.p_mw) and math.isfinite(ld.q_mvar)):
            bad.append(f"load on {ld.bus!r} is not finite")
        if ld.households < 0:
            bad.append(f"load on {ld.bus!r} has negative households")
    total = math.fsum(ld.p_mw for ld in net.loads)
    if abs(total - net.total_p_mw) > 1e-12 * max(abs(net.total_p_mw), 1e-300) and total != net.total_p_mw:
        bad.append(f"loads sum to {total} MW, expected {net.total_p_mw}")
    return bad


def _connected(net: ElectricalNetwork) -> bool:
    adj = defaultdict(list)
    for ln in net.lines:
        adj[ln.from_bus].append(ln.to_bus)
        adj[ln.to_bus].append(ln.from_bus)
    seen = {net.slack_bus}
    stack = [net.slack_bus]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(net.buses)


def build_network(feeder: FeederGraph, lines: Iterable[Line], loads: Iterable[Load], slack_v_pu: float = 1.0,
                  base_mva: float = 1.0, base_kv: float = 11.0, total_p_mw: float | None = None) -> ElectricalNetwork:
    loads = tuple(loads)
    buses = tuple(Bus(n, p.x, p.y, p.lon, p.lat) for n, p in feeder.nodes.items())
    if total_p_mw is None:
        total_p_mw = math.fsum(ld.p_mw for ld in loads)
    net = ElectricalNetwork(buses, feeder.root, slack_v_pu, base_mva, base_kv, tuple(lines), loads, total_p_mw)
    bad = validate_network(net)
    if bad:
        raise NetworkValidationError("electrical network failed validation", bad)
    return net


def scale_loads(net: ElectricalNetwork, factor: float) -> ElectricalNetwork:
    """Same network with every load's P and Q multiplied by ``factor``."""
    if not (math.isfinite(factor) and factor >= 0):
        raise ConfigError(f"load scale factor must be >= 0, got {factor}")
    loads = tuple(replace(ld, p_mw=ld.p_mw * factor, q_mvar=ld.q_mvar * factor) for ld in net.loads)
    return replace(net, loads=loads, total_p_mw=math.fsum(ld.p_mw for ld in loads))
