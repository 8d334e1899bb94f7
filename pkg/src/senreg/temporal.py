"""Interval algebra, mount-consistency checks and point-in-time state.

Everything here is pure and stateless: callers pass complete action
lists and get values back.  Atomicity of validate-then-write belongs to
the storage layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import IntEnum
from typing import Iterable, Mapping, Optional, Sequence, Union

from senreg.model import (
    Configuration,
    Entity,
    EntityId,
    EntityRef,
    LocationAction,
    MountAction,
    Offset,
    QuantityRef,
    StaticLocation,
    TimeInterval,
)


class InconsistentStateError(Exception):
    """A mounted child's parent is absent at the requested instant."""


class NotMountedError(Exception):
    """The node is not part of the mount tree at the requested instant."""


# --- interval algebra -----------------------------------------------------------


def interval_overlaps(a: TimeInterval, b: TimeInterval) -> bool:
    """True iff the half-open intervals share at least one instant."""
    latest_begin = max(a.begin, b.begin)
    if a.end is not None and a.end <= latest_begin:
        return False
    if b.end is not None and b.end <= latest_begin:
        return False
    return True


def merge_intervals(intervals: Iterable[TimeInterval]) -> list[TimeInterval]:
    """Union of intervals as a minimal sorted list; touching ends merge."""
    ordered = sorted(intervals, key=lambda iv: iv.begin)
    merged: list[TimeInterval] = []
    for interval in ordered:
        if merged:
            last = merged[-1]
            if last.end is None:
                continue
            if interval.begin <= last.end:
                if interval.end is None or interval.end > last.end:
                    merged[-1] = TimeInterval(last.begin, interval.end)
                continue
        merged.append(interval)
    return merged


def interval_covers(cover: TimeInterval, target: TimeInterval) -> bool:
    if cover.begin > target.begin:
        return False
    if cover.end is None:
        return True
    return target.end is not None and target.end <= cover.end


# --- check results --------------------------------------------------------------


@dataclass(frozen=True)
class TemporalResult:
    """Outcome of a consistency check; ``ok`` results carry no detail."""

    def describe(self) -> str:
        return "ok"

    @property
    def ok(self) -> bool:
        return isinstance(self, Ok)


@dataclass(frozen=True)
class Ok(TemporalResult):
    pass


OK = Ok()


@dataclass(frozen=True)
class MountConflict(TemporalResult):
    """The proposed interval overlaps an existing mount of the same device."""

    configuration_id: EntityId
    mount: MountAction

    def describe(self) -> str:
        return (
            f"device already mounted in configuration {self.configuration_id} "
            f"by mount {self.mount.id} from {self.mount.interval.begin.isoformat()}"
        )


@dataclass(frozen=True)
class ContainmentViolation(TemporalResult):
    """The child's interval is not fully covered by its parent's mounts."""

    parent: Optional[EntityRef]
    uncovered_from: datetime

    def describe(self) -> str:
        label = f"{self.parent.kind.value} {self.parent.id}" if self.parent else "parent"
        return (
            f"{label} is not mounted "
            f"from {self.uncovered_from.isoformat()} onward within the child interval"
        )


@dataclass(frozen=True)
class CycleDetected(TemporalResult):
    path: tuple[EntityRef, ...]
    at: datetime

    def describe(self) -> str:
        chain = " -> ".join(f"{r.kind.value}:{r.id}" for r in self.path)
        return f"mount cycle at {self.at.isoformat()}: {chain}"


@dataclass(frozen=True)
class MultipleParents(TemporalResult):
    node: EntityRef
    at: datetime
    mounts: tuple[MountAction, ...] = ()

    def describe(self) -> str:
        return (
            f"{self.node.kind.value} {self.node.id} has "
            f"{len(self.mounts)} simultaneous parents at {self.at.isoformat()}"
        )


@dataclass(frozen=True)
class LocationOverlap(TemporalResult):
    first: LocationAction
    second: LocationAction

    def describe(self) -> str:
        return f"location actions {self.first.id} and {self.second.id} overlap in time"


# --- consistency checks -----------------------------------------------------------


def check_device_availability(
    device_id: EntityId,
    proposed: TimeInterval,
    all_mounts: Sequence[tuple[EntityId, MountAction]],
) -> TemporalResult:
    """A physical device may sit in at most one configuration at a time.

    ``all_mounts`` must contain every existing mount of the device across
    every configuration; the first conflicting mount (by begin, then id)
    is reported.
    """
    ordered = sorted(
        (pair for pair in all_mounts if pair[1].child.id == device_id),
        key=lambda pair: (pair[1].interval.begin, pair[1].id),
    )
    for configuration_id, mount in ordered:
        if interval_overlaps(proposed, mount.interval):
            return MountConflict(configuration_id=configuration_id, mount=mount)
    return OK


def check_parent_containment(
    child_interval: TimeInterval,
    parent_mounts: Sequence[MountAction],
    parent: Optional[EntityRef] = None,
) -> TemporalResult:
    """The union of the parent's mount intervals must cover the child's.

    Without this rule a reconstructed tree could contain children whose
    parent is absent.  The configuration root is always present, so this
    check only applies to platform parents.
    """
    merged = merge_intervals(mount.interval for mount in parent_mounts)
    for interval in merged:
        if interval_covers(interval, child_interval):
            return OK
    witness = child_interval.begin
    for interval in merged:
        if interval.contains(witness):
            # begin is covered; the gap starts where this covering run ends
            witness = interval.end  # type: ignore[assignment]  # open end would have covered
            break
    return ContainmentViolation(parent=parent, uncovered_from=witness)


def active_mounts(mounts: Iterable[MountAction], at: datetime) -> list[MountAction]:
    return [mount for mount in mounts if mount.interval.contains(at)]


def detect_cycle(mounts: Sequence[MountAction], at: datetime) -> TemporalResult:
    """Check the forest property among the mounts active at ``at``.

    Reports a node with two simultaneous parents, or a cycle reached by
    following parent links; the configuration root terminates every
    healthy walk.
    """
    active = active_mounts(mounts, at)
    by_child: dict[EntityRef, list[MountAction]] = {}
    for mount in active:
        by_child.setdefault(mount.child, []).append(mount)
    for child, child_mounts in sorted(by_child.items(), key=lambda kv: (kv[0].kind.value, kv[0].id)):
        if len(child_mounts) > 1:
            return MultipleParents(node=child, at=at, mounts=tuple(child_mounts))
    parent_link = {mount.child: mount.parent for mount in active}
    safe: set[EntityRef] = set()
    for start in parent_link:
        if start in safe:
            continue
        path: list[EntityRef] = []
        seen: dict[EntityRef, int] = {}
        node: Optional[EntityRef] = start
        while node is not None and node in parent_link:
            if node in safe:
                break
            if node in seen:
                cycle = tuple(path[seen[node] :])
                return CycleDetected(path=cycle, at=at)
            seen[node] = len(path)
            path.append(node)
            node = parent_link[node]
        safe.update(path)
    return OK


def check_location_exclusivity(location_actions: Sequence[LocationAction]) -> TemporalResult:
    """At most one location definition may be in force at any instant."""
    ordered = sorted(location_actions, key=lambda a: (a.interval.begin, a.id))
    for earlier, later in zip(ordered, ordered[1:]):
        if interval_overlaps(earlier.interval, later.interval):
            return LocationOverlap(first=earlier, second=later)
    return OK


def mount_begin_instants(mounts: Iterable[MountAction]) -> list[datetime]:
    """Candidate instants for state checks: the set of mount begins.

    Any overlap or cycle among half-open intervals is already visible at
    the latest begin instant of the mounts involved, so sweeping begins
    is exhaustive.
    """
    return sorted({mount.interval.begin for mount in mounts})


def check_configuration_consistency(configuration: Configuration) -> TemporalResult:
    """All within-configuration temporal rules: containment of every
    child under its platform parent, forest shape at every begin
    instant, and non-overlapping location actions."""
    mounts = configuration.mount_actions
    by_child_entity: dict[EntityId, list[MountAction]] = {}
    for mount in mounts:
        by_child_entity.setdefault(mount.child.id, []).append(mount)
    for mount in sorted(mounts, key=lambda a: (a.interval.begin, a.id)):
        if mount.parent is None:
            continue
        parent_mounts = by_child_entity.get(mount.parent.id, [])
        result = check_parent_containment(mount.interval, parent_mounts, parent=mount.parent)
        if not result.ok:
            return result
    for at in mount_begin_instants(mounts):
        result = detect_cycle(mounts, at)
        if not result.ok:
            return result
    return check_location_exclusivity(configuration.location_actions)


# --- point-in-time reconstruction ---------------------------------------------------


@dataclass(frozen=True)
class MountEdge:
    parent: Optional[EntityRef]  # None = configuration root
    child: EntityRef
    mount: MountAction


@dataclass(frozen=True)
class MountTree:
    """The mount forest of one configuration at one instant.

    Edges are stored in deterministic pre-order; children under one
    parent sort by short name, then id.
    """

    root: EntityId
    at: datetime
    nodes: frozenset[EntityRef]
    edges: tuple[MountEdge, ...]

    def children(self, parent: Optional[EntityRef]) -> tuple[MountEdge, ...]:
        return tuple(edge for edge in self.edges if edge.parent == parent)

    def edge_for(self, node: EntityRef) -> Optional[MountEdge]:
        for edge in self.edges:
            if edge.child == node:
                return edge
        return None

    def path_to(self, node: EntityRef) -> tuple[MountEdge, ...]:
        """Edges from the configuration root down to ``node``."""
        path: list[MountEdge] = []
        current: Optional[EntityRef] = node
        while current is not None:
            edge = self.edge_for(current)
            if edge is None:
                raise NotMountedError(f"{current.kind.value} {current.id} is not mounted")
            path.append(edge)
            current = edge.parent
        path.reverse()
        return tuple(path)

    def depth(self) -> int:
        best = 0
        for node in self.nodes:
            best = max(best, len(self.path_to(node)))
        return best

    def leaves(self) -> tuple[EntityRef, ...]:
        parents = {edge.parent for edge in self.edges if edge.parent is not None}
        return tuple(sorted((n for n in self.nodes if n not in parents), key=lambda r: (r.kind.value, r.id)))


def mount_tree_at(
    configuration: Configuration,
    at: datetime,
    names: Optional[Mapping[EntityId, str]] = None,
) -> MountTree:
    """Reconstruct the mount forest in force at ``at``.

    Precondition: the configuration passes :func:`detect_cycle` for the
    instant.  Raises :class:`InconsistentStateError` when an active
    child's parent is itself absent.
    """
    names = names or {}
    active = active_mounts(configuration.mount_actions, at)
    result = detect_cycle(configuration.mount_actions, at)
    if not result.ok:
        raise InconsistentStateError(result.describe())
    mounted = {mount.child for mount in active}
    for mount in active:
        if mount.parent is not None and mount.parent not in mounted:
            raise InconsistentStateError(
                f"parent {mount.parent.kind.value} {mount.parent.id} of "
                f"{mount.child.kind.value} {mount.child.id} is absent at {at.isoformat()}"
            )
    by_parent: dict[Optional[EntityRef], list[MountAction]] = {}
    for mount in active:
        by_parent.setdefault(mount.parent, []).append(mount)

    def sort_key(mount: MountAction):
        return (names.get(mount.child.id, ""), mount.child.id, mount.id)

    edges: list[MountEdge] = []

    def walk(parent: Optional[EntityRef]) -> None:
        for mount in sorted(by_parent.get(parent, ()), key=sort_key):
            edges.append(MountEdge(parent=parent, child=mount.child, mount=mount))
            walk(mount.child)

    walk(None)
    return MountTree(root=configuration.id, at=at, nodes=frozenset(mounted), edges=tuple(edges))


# --- positions ---------------------------------------------------------------------


@dataclass(frozen=True)
class AbsolutePosition:
    """Configuration location in force plus the node's local ENU offset."""

    latitude: float
    longitude: float
    height: float
    epsg_code: str
    offset: Offset


@dataclass(frozen=True)
class DynamicPosition:
    """References to the measured quantities that carry the coordinates;
    the registry stores no observation data, so nothing is evaluated."""

    x_source: Optional[QuantityRef]
    y_source: Optional[QuantityRef]
    z_source: Optional[QuantityRef]


@dataclass(frozen=True)
class UndefinedPosition:
    pass


ResolvedPosition = Union[AbsolutePosition, DynamicPosition, UndefinedPosition]


def location_in_force(configuration: Configuration, at: datetime) -> Optional[LocationAction]:
    for action in sorted(configuration.location_actions, key=lambda a: (a.interval.begin, a.id)):
        if action.interval.contains(at):
            return action
    return None


def local_offset(tree: MountTree, node: EntityRef) -> Offset:
    """Sum of relative offsets along the root path; an absolute offset on
    the way restarts the accumulation from that value."""
    total = Offset()
    for edge in tree.path_to(node):
        if edge.mount.absolute_offset is not None:
            total = edge.mount.absolute_offset
        else:
            total = total + edge.mount.offset
    return total


def resolve_position(
    configuration: Configuration,
    node: EntityRef,
    at: datetime,
    names: Optional[Mapping[EntityId, str]] = None,
) -> ResolvedPosition:
    """Where a mounted node is at ``at``: the static configuration
    location plus the accumulated offset, the dynamic quantity
    references, or undefined when no location action covers the instant."""
    tree = mount_tree_at(configuration, at, names=names)
    if node not in tree.nodes:
        raise NotMountedError(f"{node.kind.value} {node.id} is not mounted at {at.isoformat()}")
    location = location_in_force(configuration, at)
    if location is None:
        return UndefinedPosition()
    if isinstance(location.location, StaticLocation):
        static = location.location
        return AbsolutePosition(
            latitude=static.latitude,
            longitude=static.longitude,
            height=static.height,
            epsg_code=static.epsg_code,
            offset=local_offset(tree, node),
        )
    dynamic = location.location
    return DynamicPosition(
        x_source=dynamic.x_source,
        y_source=dynamic.y_source,
        z_source=dynamic.z_source,
    )


# --- timelines ----------------------------------------------------------------------


class TimelineEventKind(IntEnum):
    """Tie-break order for simultaneous events: ends sort before begins
    so back-to-back remounts at one instant replay deterministically."""

    MOUNT_END = 0
    MOUNT_BEGIN = 1
    PARAMETER_VALUE = 2
    GENERIC_ACTION = 3


@dataclass(frozen=True)
class TimelineEvent:
    at: datetime
    kind: TimelineEventKind
    source_id: str
    description: str = ""
    mount: Optional[MountAction] = None


def entity_timeline(
    entity: Entity,
    related_mounts: Optional[Iterable[MountAction]] = None,
) -> list[TimelineEvent]:
    """Merge actions, parameter changes and mount begins/ends into one
    deterministic event list.

    For configurations the own mount actions are used; for devices and
    platforms the caller passes the mounts gathered across
    configurations (a record does not know where it is mounted).
    """
    events: list[TimelineEvent] = []
    if isinstance(entity, Configuration) and related_mounts is None:
        mounts: Iterable[MountAction] = entity.mount_actions
    else:
        mounts = related_mounts or ()
    for mount in mounts:
        events.append(
            TimelineEvent(
                at=mount.interval.begin,
                kind=TimelineEventKind.MOUNT_BEGIN,
                source_id=mount.id,
                description=mount.begin_description,
                mount=mount,
            )
        )
        if mount.interval.end is not None:
            events.append(
                TimelineEvent(
                    at=mount.interval.end,
                    kind=TimelineEventKind.MOUNT_END,
                    source_id=mount.id,
                    description=mount.end_description,
                    mount=mount,
                )
            )
    for parameter in getattr(entity, "parameters", ()):
        for value in parameter.value_actions:
            events.append(
                TimelineEvent(
                    at=value.timestamp,
                    kind=TimelineEventKind.PARAMETER_VALUE,
                    source_id=parameter.id,
                    description=f"{parameter.label} = {value.value}",
                )
            )
    for action in getattr(entity, "actions", ()):
        if action.begin is None:
            continue
        events.append(
            TimelineEvent(
                at=action.begin,
                kind=TimelineEventKind.GENERIC_ACTION,
                source_id=action.id,
                description=action.description,
            )
        )
    events.sort(key=lambda e: (e.at, e.kind, e.source_id))
    return events
