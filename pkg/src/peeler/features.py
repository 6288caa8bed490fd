"""Per-window process trees, feature vectors, and event-count correlations.

Two feature views feed the classifiers: the process-tree shape of a window
(spawn-heavy screen lockers stand out) and raw per-window event-type counts
(crypto I/O storms stand out). Trees are rebuilt per window from that
window's events only, so windows stay independent samples.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .events import Event, EventType, Provider
from .trace_io import TraceLabel, TraceManifest, Window

UNKNOWN_IMAGE = "?"


@dataclass
class ProcessNode:
    pid: int
    parent_pid: int
    image_name: str
    thread_count: int = 0
    children: List["ProcessNode"] = field(default_factory=list)


@dataclass
class ProcessTree:
    """Forest of processes observed in one window; cycle-breaking edges are
    recorded as warnings rather than errors."""

    roots: List[ProcessNode]
    warnings: List[str] = field(default_factory=list)

    def node_count(self) -> int:
        return sum(1 for _ in self.walk())

    def walk(self):
        stack = list(self.roots)
        while stack:
            node = stack.pop()
            yield node
            stack.extend(node.children)


@dataclass(frozen=True)
class MlrFeatures:
    """Process-tree feature vector (tree-model input)."""

    n_processes: int
    n_threads_total: int
    max_depth: int
    n_leaf_nodes: int
    n_unique_image_names: int

    def as_vector(self) -> np.ndarray:
        return np.array(
            [
                self.n_processes,
                self.n_threads_total,
                self.max_depth,
                self.n_leaf_nodes,
                self.n_unique_image_names,
            ],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class SvmFeatures:
    """Per-window event-type counts (frequency-model input)."""

    n_process_start: int
    n_process_end: int
    n_image_load: int
    n_image_unload: int
    n_file_read: int
    n_file_write: int
    n_thread_start: int
    n_thread_end: int

    def as_vector(self) -> np.ndarray:
        return np.array(
            [
                self.n_process_start,
                self.n_process_end,
                self.n_image_load,
                self.n_image_unload,
                self.n_file_read,
                self.n_file_write,
                self.n_thread_start,
                self.n_thread_end,
            ],
            dtype=np.float64,
        )


def _events_of(window) -> List[Event]:
    return window.events if isinstance(window, Window) else list(window)


def build_process_tree(window) -> ProcessTree:
    """Build the window's process forest.

    One node per pid with a Process Start event, plus stub nodes for parents
    referenced by parent_id but not started in the window (image name taken
    from any Process event of that pid when available, "?" otherwise).
    parent_id 0 means parentless. thread_count counts Thread Start events
    attributed to the node's pid. A parent edge that would close a cycle is
    dropped (the child becomes a root) and recorded as a warning.
    """
    events = _events_of(window)
    images: Dict[int, str] = {}
    started: Dict[int, int] = {}
    threads: Counter = Counter()

    for e in events:
        if e.provider is Provider.PROCESS:
            attrs = e.attrs
            if attrs.image_file_name and e.pid not in images:
                images[e.pid] = attrs.image_file_name
            if e.etype is EventType.START and e.pid not in started:
                started[e.pid] = attrs.parent_id
        elif e.provider is Provider.THREAD and e.etype is EventType.START:
            threads[e.pid] += 1

    nodes: Dict[int, ProcessNode] = {}
    for pid, parent in started.items():
        nodes[pid] = ProcessNode(pid, parent, images.get(pid, UNKNOWN_IMAGE))
    for pid, parent in started.items():
        if parent != 0 and parent not in nodes:
            nodes[parent] = ProcessNode(parent, 0, images.get(parent, UNKNOWN_IMAGE))
    for pid, node in nodes.items():
        node.thread_count = threads.get(pid, 0)

    tree = ProcessTree(roots=[])
    parent_of: Dict[int, int] = {}
    for pid, node in nodes.items():
        parent = node.parent_pid
        if parent == 0 or parent == pid or parent not in nodes:
            tree.roots.append(node)
            continue
        # walk the already-assigned ancestry; refuse the edge if it loops back
        cursor = parent
        cyclic = False
        while cursor in parent_of:
            cursor = parent_of[cursor]
            if cursor == pid:
                cyclic = True
                break
        if cyclic:
            tree.warnings.append(f"cycle broken at pid {pid} -> parent {parent}")
            tree.roots.append(node)
        else:
            parent_of[pid] = parent
            nodes[parent].children.append(node)
    return tree


def extract_mlr_features(tree: ProcessTree) -> MlrFeatures:
    """Count tree shape features; root depth is 1, a leaf has no children.

    Stub nodes with unknown images do not count toward unique image names.
    """
    n_processes = 0
    n_threads = 0
    n_leaves = 0
    max_depth = 0
    names = set()
    stack = [(root, 1) for root in tree.roots]
    while stack:
        node, depth = stack.pop()
        n_processes += 1
        n_threads += node.thread_count
        if depth > max_depth:
            max_depth = depth
        if not node.children:
            n_leaves += 1
        if node.image_name != UNKNOWN_IMAGE:
            names.add(node.image_name.lower())
        stack.extend((c, depth + 1) for c in node.children)
    return MlrFeatures(n_processes, n_threads, max_depth, n_leaves, len(names))


_SVM_KEYS = (
    (Provider.PROCESS, EventType.START),
    (Provider.PROCESS, EventType.END),
    (Provider.IMAGE, EventType.LOAD),
    (Provider.IMAGE, EventType.UNLOAD),
    (Provider.FILE, EventType.READ),
    (Provider.FILE, EventType.WRITE),
    (Provider.THREAD, EventType.START),
    (Provider.THREAD, EventType.END),
)


def extract_svm_features(window) -> SvmFeatures:
    """Count the eight tracked (provider, etype) pairs in one window."""
    counts: Counter = Counter()
    for e in _events_of(window):
        counts[(e.provider, e.etype)] += 1
    return SvmFeatures(*(counts.get(k, 0) for k in _SVM_KEYS))


def window_features(window) -> Tuple[MlrFeatures, SvmFeatures]:
    return extract_mlr_features(build_process_tree(window)), extract_svm_features(window)


def pearson_flagged(xs: Sequence[float], ys: Sequence[float]) -> Tuple[float, bool]:
    """Pearson product-moment coefficient plus a degenerate flag.

    Returns (0.0, True) when either series has zero variance; raises
    ValueError on length mismatch or fewer than two points.
    """
    if len(xs) != len(ys):
        raise ValueError("series length mismatch")
    if len(xs) < 2:
        raise ValueError("need at least two points")
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return 0.0, True
    return float(dx @ dy) / float(np.sqrt(sxx) * np.sqrt(syy)), False


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    return pearson_flagged(xs, ys)[0]


CORRELATION_PAIRS = (
    ("File Read", "File Write", "n_file_read", "n_file_write"),
    ("Process End", "Image Unload", "n_process_end", "n_image_unload"),
    ("Process Start", "Image Load", "n_process_start", "n_image_load"),
    ("Thread Start", "Thread End", "n_thread_start", "n_thread_end"),
)


@dataclass
class CorrelationCell:
    coefficient: float
    degenerate: bool


@dataclass
class CorrelationRow:
    pair: Tuple[str, str]
    ransomware: CorrelationCell
    benign: CorrelationCell


@dataclass
class CorrelationReport:
    rows: List[CorrelationRow]
    n_ransomware_windows: int
    n_benign_windows: int

    def as_table(self, sep: str = " | ") -> str:
        lines = [sep.join(["events pair", "ransomware", "benign"])]
        for row in self.rows:
            cells = []
            for cell in (row.ransomware, row.benign):
                cells.append("degenerate" if cell.degenerate else f"{cell.coefficient:.4f}")
            lines.append(sep.join([f"({row.pair[0]}, {row.pair[1]})"] + cells))
        return "\n".join(lines)


def correlation_report(
    corpus: Iterable[Tuple[TraceManifest, List[Window]]],
) -> CorrelationReport:
    """Per-window count correlations for the four tracked event pairs,
    computed separately over ransomware-labeled and benign-labeled traces."""
    groups: Dict[bool, List[np.ndarray]] = {True: [], False: []}
    for manifest, windows in corpus:
        if manifest.label is TraceLabel.UNKNOWN:
            continue
        key = manifest.label.is_ransomware
        for w in windows:
            groups[key].append(extract_svm_features(w).as_vector())
    if not groups[True] and not groups[False]:
        raise ValueError("corpus is empty")

    field_index = {name: i for i, name in enumerate(SvmFeatures.__dataclass_fields__)}
    stacked = {
        key: (np.vstack(vecs) if vecs else np.zeros((0, 8))) for key, vecs in groups.items()
    }

    rows = []
    for xname, yname, xfield, yfield in CORRELATION_PAIRS:
        cells = {}
        for key, mat in stacked.items():
            if mat.shape[0] < 2:
                cells[key] = CorrelationCell(0.0, True)
            else:
                r, degenerate = pearson_flagged(mat[:, field_index[xfield]], mat[:, field_index[yfield]])
                cells[key] = CorrelationCell(r, degenerate)
        rows.append(CorrelationRow((xname, yname), cells[True], cells[False]))
    return CorrelationReport(
        rows=rows,
        n_ransomware_windows=stacked[True].shape[0],
        n_benign_windows=stacked[False].shape[0],
    )
