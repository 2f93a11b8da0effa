"""Shared visualization scene: elements, viewport, hit-testing, queries,
and the mapping from gesture events to replicated document writes.

The document key layout (all values JSON scalars/arrays/objects):

    viewport/state               {"pan": [x, y], "scale": s}
    zoom/{participant}/baseline  scale captured at ZoomBegin
    pos/{element}                [x, y] override of an element position
    sel/{participant}/{hand}     {"mode": "fine"|"coarse", "ids": [...]}
    widget/{id}/option           selected switcher option
    widget/{id}/scroll           list scroll offset (rows, >= 0)
    grab/{participant}/{hand}    pinch anchor, null when released
    edge/{a}|{b}                 true for a connection added at runtime
"""
from __future__ import annotations

import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

from .config import DEFAULT_SCENE, SceneConfig
from .landmarks import Handedness
from .recognizer import Circle, GestureEvent, GestureKind
from .replica import Document, ReplicaOp

logger = logging.getLogger(__name__)

VIEWPORT_KEY = "viewport/state"
SCALE_MIN = 0.25
SCALE_MAX = 8.0
DEFAULT_AIRPORT_RADIUS = 0.02


class ElementKind(str, Enum):
    NODE = "Node"
    AIRPORT = "Airport"
    LIST_WIDGET = "ListWidget"
    SWITCHER_WIDGET = "SwitcherWidget"


SELECTABLE_KINDS = frozenset({ElementKind.NODE, ElementKind.AIRPORT})


@dataclass(frozen=True)
class Element:
    id: str
    kind: ElementKind
    x: float
    y: float
    radius: float
    payload: dict = field(default_factory=dict)

    def at(self, x: float, y: float) -> "Element":
        return Element(self.id, self.kind, x, y, self.radius, self.payload)


@dataclass(frozen=True)
class Viewport:
    pan_x: float = 0.0
    pan_y: float = 0.0
    scale: float = 1.0


def to_screen(vp: Viewport, point: tuple[float, float]) -> tuple[float, float]:
    return ((point[0] - vp.pan_x) * vp.scale, (point[1] - vp.pan_y) * vp.scale)


def to_scene(vp: Viewport, point: tuple[float, float]) -> tuple[float, float]:
    return (point[0] / vp.scale + vp.pan_x, point[1] / vp.scale + vp.pan_y)


def hit_test_point(elements: Iterable[Element], cursor: tuple[float, float]) -> Optional[str]:
    """Nearest element whose hit radius covers the cursor, smallest id on ties."""
    best: tuple[float, str] | None = None
    for el in elements:
        dx = cursor[0] - el.x
        dy = cursor[1] - el.y
        d = math.sqrt(dx * dx + dy * dy)
        if d <= el.radius and (best is None or (d, el.id) < best):
            best = (d, el.id)
    return best[1] if best else None


def hit_test_circle(elements: Iterable[Element], circle: Circle) -> set[str]:
    """Center-in-circle membership, boundary inclusive."""
    cx, cy = circle.center
    hits = set()
    for el in elements:
        dx = el.x - cx
        dy = el.y - cy
        if math.sqrt(dx * dx + dy * dy) <= circle.radius:
            hits.add(el.id)
    return hits


# -- relational data ---------------------------------------------------------


class Graph:
    """Undirected graph over node ids; edges stored as sorted pairs."""

    def __init__(self, nodes: Iterable[str], edges: Iterable[tuple[str, str]] = ()):
        self.nodes: set[str] = set(nodes)
        self.edges: set[tuple[str, str]] = set()
        for a, b in edges:
            self.add_edge(a, b)

    def add_edge(self, a: str, b: str) -> tuple[str, str]:
        if a == b:
            raise ValueError(f"self-loop on {a!r}")
        for n in (a, b):
            if n not in self.nodes:
                raise KeyError(f"unknown node {n!r}")
        edge = (a, b) if a < b else (b, a)
        self.edges.add(edge)
        return edge

    def neighbors(self, node: str) -> list[str]:
        out = [b for a, b in self.edges if a == node]
        out += [a for a, b in self.edges if b == node]
        return sorted(out)


def shortest_path(graph: Graph, a: str, b: str) -> Optional[list[str]]:
    """Minimum-hop path via BFS; neighbors expand in ascending id order."""
    for n in (a, b):
        if n not in graph.nodes:
            raise KeyError(f"unknown node {n!r}")
    if a == b:
        return [a]
    parent: dict[str, str] = {a: a}
    queue: deque[str] = deque([a])
    while queue:
        cur = queue.popleft()
        for nxt in graph.neighbors(cur):
            if nxt in parent:
                continue
            parent[nxt] = cur
            if nxt == b:
                path = [b]
                while path[-1] != a:
                    path.append(parent[path[-1]])
                path.reverse()
                return path
            queue.append(nxt)
    return None


@dataclass(frozen=True)
class Flight:
    origin: str
    dest: str
    airline: str
    cost: int
    duration_min: int
    depart_day: int

    def to_obj(self) -> dict:
        return {
            "origin": self.origin,
            "dest": self.dest,
            "airline": self.airline,
            "cost": self.cost,
            "duration_min": self.duration_min,
            "depart_day": self.depart_day,
        }

    @staticmethod
    def from_obj(obj: dict) -> "Flight":
        return Flight(
            origin=obj["origin"],
            dest=obj["dest"],
            airline=obj["airline"],
            cost=obj["cost"],
            duration_min=obj["duration_min"],
            depart_day=obj["depart_day"],
        )


@dataclass
class FlightDataset:
    airports: dict[str, tuple[float, float]]  # code -> (lat, lon)
    flights: list[Flight]
    seed: int = 0

    def to_json(self) -> str:
        obj = {
            "seed": self.seed,
            "airports": {code: [lat, lon] for code, (lat, lon) in self.airports.items()},
            "flights": [f.to_obj() for f in self.flights],
        }
        return json.dumps(obj, separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "FlightDataset":
        obj = json.loads(text)
        return FlightDataset(
            airports={c: (ll[0], ll[1]) for c, ll in obj["airports"].items()},
            flights=[Flight.from_obj(f) for f in obj["flights"]],
            seed=obj.get("seed", 0),
        )


def query_flights(dataset: FlightDataset, origins: set[str], dests: set[str]) -> list[Flight]:
    """Flights from any origin to any destination, cheapest first."""
    for code in list(origins) + list(dests):
        if code not in dataset.airports:
            raise KeyError(f"unknown airport code {code!r}")
    hits = [f for f in dataset.flights if f.origin in origins and f.dest in dests]
    hits.sort(key=lambda f: (f.cost, f.depart_day, f.origin, f.dest))
    return hits


def connections_between(
    source: Union[Graph, Sequence[Flight]], sel_a: set[str], sel_b: set[str]
) -> set[tuple[str, str]] | list[Flight]:
    """Links with one endpoint in each selection set."""
    if isinstance(source, Graph):
        out = set()
        for a, b in source.edges:
            if (a in sel_a and b in sel_b) or (b in sel_a and a in sel_b):
                out.add((a, b))
        return out
    return [
        f
        for f in source
        if (f.origin in sel_a and f.dest in sel_b) or (f.origin in sel_b and f.dest in sel_a)
    ]


def histogram(values: Sequence[float], bin_count: int) -> list[int]:
    """Equal-width counts over [min, max]; the max falls in the last bin."""
    if bin_count < 1:
        raise ValueError(f"bin_count must be >= 1, got {bin_count}")
    counts = [0] * bin_count
    if not values:
        return counts
    lo = min(values)
    hi = max(values)
    span = hi - lo
    for v in values:
        if span == 0.0:
            idx = bin_count - 1  # degenerate range: single value -> last bin
        else:
            idx = min(int((v - lo) / span * bin_count), bin_count - 1)
        counts[idx] += 1
    return counts


def project(lat: float, lon: float) -> tuple[float, float]:
    """Equirectangular projection into the unit square."""
    if not -90.0 <= lat <= 90.0:
        raise ValueError(f"lat out of range: {lat}")
    if not -180.0 <= lon <= 180.0:
        raise ValueError(f"lon out of range: {lon}")
    return ((lon + 180.0) / 360.0, (90.0 - lat) / 180.0)


# -- scenario + replicated scene document ------------------------------------


@dataclass(frozen=True)
class Selection:
    participant: str
    hand: Handedness
    mode: str  # "fine" | "coarse"
    ids: tuple[str, ...]


@dataclass
class Scenario:
    name: str
    elements: dict[str, Element]
    edges: list[tuple[str, str]]

    def node_ids(self) -> set[str]:
        return {e.id for e in self.elements.values() if e.kind is ElementKind.NODE}


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    return scenario_from_obj(obj)


def scenario_from_obj(obj: dict) -> Scenario:
    elements: dict[str, Element] = {}

    def add(el: Element) -> None:
        if el.id in elements:
            raise ValueError(f"duplicate element id {el.id!r}")
        if el.radius <= 0:
            raise ValueError(f"element {el.id!r} has non-positive radius")
        elements[el.id] = el

    for entry in obj.get("airports", []):
        code = entry["code"]
        x, y = project(entry["lat"], entry["lon"])
        add(
            Element(
                id=code,
                kind=ElementKind.AIRPORT,
                x=x,
                y=y,
                radius=entry.get("radius", DEFAULT_AIRPORT_RADIUS),
                payload={"code": code, "lat": entry["lat"], "lon": entry["lon"]},
            )
        )
    for entry in obj.get("elements", []):
        el = Element(
            id=entry["id"],
            kind=ElementKind(entry["kind"]),
            x=entry["x"],
            y=entry["y"],
            radius=entry["radius"],
            payload=entry.get("payload", {}),
        )
        if el.kind is ElementKind.SWITCHER_WIDGET:
            options = el.payload.get("options") or []
            if not options:
                raise ValueError(f"switcher {el.id!r} declares no options")
            initial = el.payload.get("option", options[0])
            if initial not in options:
                raise ValueError(f"switcher {el.id!r} initial option {initial!r} not offered")
        add(el)
    edges = [(a, b) for a, b in obj.get("edges", [])]
    node_ids = {e.id for e in elements.values() if e.kind is ElementKind.NODE}
    for a, b in edges:
        if a not in node_ids or b not in node_ids:
            raise ValueError(f"edge ({a!r}, {b!r}) references a non-node element")
        if a == b:
            raise ValueError(f"self-loop on {a!r}")
    return Scenario(name=obj.get("name", "scene"), elements=elements, edges=edges)


class SceneDoc:
    """A scenario joined with one replica's document state."""

    def __init__(self, scenario: Scenario, doc: Document, cfg: SceneConfig = DEFAULT_SCENE):
        self.scenario = scenario
        self.doc = doc
        self.cfg = cfg

    def viewport(self) -> Viewport:
        raw = self.doc.get(VIEWPORT_KEY)
        if not raw:
            return Viewport()
        return Viewport(pan_x=raw["pan"][0], pan_y=raw["pan"][1], scale=raw["scale"])

    def position(self, element_id: str) -> tuple[float, float]:
        initial = self.scenario.elements[element_id]
        override = self.doc.get(f"pos/{element_id}")
        if override is not None:
            return (override[0], override[1])
        return (initial.x, initial.y)

    def current_elements(self) -> list[Element]:
        out = []
        for el in self.scenario.elements.values():
            x, y = self.position(el.id)
            out.append(el.at(x, y) if (x, y) != (el.x, el.y) else el)
        return out

    def graph(self) -> Graph:
        g = Graph(self.scenario.node_ids(), self.scenario.edges)
        for key, value in self.doc.items_with_prefix("edge/"):
            if not value:
                continue
            a, _, b = key[len("edge/"):].partition("|")
            if a in g.nodes and b in g.nodes:
                g.add_edge(a, b)
        return g

    def selections(self) -> list[Selection]:
        out = []
        for key, value in self.doc.items_with_prefix("sel/"):
            if not value:
                continue
            _, participant, hand = key.split("/", 2)
            out.append(
                Selection(
                    participant=participant,
                    hand=Handedness(hand),
                    mode=value["mode"],
                    ids=tuple(value["ids"]),
                )
            )
        return out

    def _selected_airports(self, hand: Handedness) -> set[str]:
        codes = set()
        for sel in self.selections():
            if sel.hand is not hand:
                continue
            for eid in sel.ids:
                el = self.scenario.elements.get(eid)
                if el is not None and el.kind is ElementKind.AIRPORT:
                    codes.add(eid)
        return codes

    def origins(self) -> set[str]:
        return self._selected_airports(Handedness.LEFT)

    def dests(self) -> set[str]:
        return self._selected_airports(Handedness.RIGHT)

    def widget_option(self, widget_id: str) -> str | None:
        el = self.scenario.elements[widget_id]
        return self.doc.get(f"widget/{widget_id}/option", el.payload.get("option"))

    def scroll_offset(self, widget_id: str) -> int:
        return self.doc.get(f"widget/{widget_id}/scroll", 0)

    def hit_point(self, cursor: tuple[float, float]) -> Optional[str]:
        return hit_test_point(self.current_elements(), cursor)


def _clamp_scale(scale: float) -> float:
    return min(max(scale, SCALE_MIN), SCALE_MAX)


def apply_event(scene: SceneDoc, event: GestureEvent) -> list[ReplicaOp]:
    """Translate a gesture event into document writes.

    Ephemeral events produce no ops (they live in presence); events that
    reference elements which no longer exist are dropped with a warning,
    never an exception.
    """
    doc = scene.doc
    vp = scene.viewport()
    kind = event.kind
    p = event.participant
    hand = event.hand.value

    if kind is GestureKind.PERSIST_TAP:
        cursor = to_scene(vp, tuple(event.payload["cursor"]))
        hit = scene.hit_point(cursor)
        if hit is None:
            logger.warning("tap at %s hit nothing", cursor)
            return []
        el = scene.scenario.elements[hit]
        if el.kind in SELECTABLE_KINDS:
            return [doc.local_set(f"sel/{p}/{hand}", {"mode": "fine", "ids": [hit]})]
        if el.kind is ElementKind.SWITCHER_WIDGET:
            options = el.payload.get("options", [])
            if not options:
                logger.warning("switcher %s has no options", hit)
                return []
            current = scene.widget_option(hit)
            idx = options.index(current) if current in options else -1
            return [
                doc.local_set(f"widget/{hit}/option", options[(idx + 1) % len(options)])
            ]
        logger.warning("tap on %s (%s) has no action", hit, el.kind.value)
        return []

    if kind is GestureKind.MARQUEE:
        if not event.payload.get("persistent"):
            return []
        center = to_scene(vp, tuple(event.payload["center"]))
        circle = Circle(center=center, radius=event.payload["radius"] / vp.scale)
        ids = hit_test_circle(scene.current_elements(), circle)
        selectable = sorted(
            i for i in ids if scene.scenario.elements[i].kind in SELECTABLE_KINDS
        )
        return [doc.local_set(f"sel/{p}/{hand}", {"mode": "coarse", "ids": selectable})]

    if kind is GestureKind.PINCH_BEGIN:
        cursor = to_scene(vp, tuple(event.payload["cursor"]))
        hit = scene.hit_point(cursor)
        if hit is None:
            return []
        el = scene.scenario.elements[hit]
        if el.kind is ElementKind.NODE:
            pos = scene.position(hit)
            grab = {"id": hit, "dx": cursor[0] - pos[0], "dy": cursor[1] - pos[1]}
            return [doc.local_set(f"grab/{p}/{hand}", grab)]
        if el.kind is ElementKind.LIST_WIDGET:
            grab = {"id": hit, "y0": cursor[1], "scroll0": scene.scroll_offset(hit)}
            return [doc.local_set(f"grab/{p}/{hand}", grab)]
        return []

    if kind is GestureKind.PINCH_MOVE:
        grab = doc.get(f"grab/{p}/{hand}")
        if not grab:
            return []
        target = scene.scenario.elements.get(grab["id"])
        if target is None:
            logger.warning("pinch drag references missing element %s", grab["id"])
            return []
        cursor = to_scene(vp, tuple(event.payload["cursor"]))
        if target.kind is ElementKind.NODE:
            pos = [cursor[0] - grab["dx"], cursor[1] - grab["dy"]]
            return [doc.local_set(f"pos/{grab['id']}", pos)]
        if target.kind is ElementKind.LIST_WIDGET:
            rows = math.floor((grab["y0"] - cursor[1]) / scene.cfg.scroll_row_units + 0.5)
            offset = max(0, grab["scroll0"] + rows)
            return [doc.local_set(f"widget/{grab['id']}/scroll", offset)]
        return []

    if kind is GestureKind.PINCH_END:
        if doc.get(f"grab/{p}/{hand}"):
            return [doc.local_set(f"grab/{p}/{hand}", None)]
        return []

    if kind is GestureKind.CONNECT_HOLD:
        a = scene.hit_point(to_scene(vp, tuple(event.payload["cursor_a"])))
        b = scene.hit_point(to_scene(vp, tuple(event.payload["cursor_b"])))
        nodes = scene.scenario.node_ids()
        if a is None or b is None or a == b or a not in nodes or b not in nodes:
            logger.warning("connect hold did not land on two distinct nodes (%s, %s)", a, b)
            return []
        lo, hi = (a, b) if a < b else (b, a)
        return [doc.local_set(f"edge/{lo}|{hi}", True)]

    if kind is GestureKind.PAN_MOVE:
        dx, dy = event.payload["delta"]
        value = {"pan": [vp.pan_x - dx, vp.pan_y - dy], "scale": vp.scale}
        return [doc.local_set(VIEWPORT_KEY, value)]

    if kind is GestureKind.ZOOM_BEGIN:
        return [doc.local_set(f"zoom/{p}/baseline", vp.scale)]

    if kind is GestureKind.ZOOM_MOVE:
        base = doc.get(f"zoom/{p}/baseline", vp.scale)
        new_scale = _clamp_scale(base * event.payload["factor"])
        ax, ay = event.payload["anchor"]
        # Keep the scene point under the anchor fixed on screen.
        pan = [
            vp.pan_x + ax * (1.0 / vp.scale - 1.0 / new_scale),
            vp.pan_y + ay * (1.0 / vp.scale - 1.0 / new_scale),
        ]
        return [doc.local_set(VIEWPORT_KEY, {"pan": pan, "scale": new_scale})]

    # EphemeralPoint, ephemeral Marquee, HandIdle, Pan/Zoom begin-end
    # bookkeeping without document effect.
    return []
