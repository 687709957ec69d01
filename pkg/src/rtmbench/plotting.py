"""Render finite transition graphs to image files with matplotlib.

States are placed in columns by BFS distance from the initial state.  Large
graphs are drawn without edge labels to stay legible.
"""

from __future__ import annotations

from collections import deque
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from .lts import TAU_LABEL, FiniteLts

LABEL_LIMIT = 60  # above this many transitions, edge labels are dropped


def layered_layout(g: FiniteLts) -> Dict[int, Tuple[float, float]]:
    dist = {g.initial: 0}
    queue = deque([g.initial])
    adj = g.adjacency()
    while queue:
        s = queue.popleft()
        for _, t in adj[s]:
            if t not in dist:
                dist[t] = dist[s] + 1
                queue.append(t)
    far = max(dist.values(), default=0) + 1
    for s in g.states:
        dist.setdefault(s, far)
    columns: Dict[int, List[int]] = {}
    for s in sorted(g.states):
        columns.setdefault(dist[s], []).append(s)
    pos = {}
    for x, members in columns.items():
        for i, s in enumerate(members):
            pos[s] = (float(x), (len(members) - 1) / 2.0 - i)
    return pos


def plot_lts(g: FiniteLts, path: Union[str, Path], title: Optional[str] = None) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.patches import FancyArrowPatch

    pos = layered_layout(g)
    width = max(x for x, _ in pos.values()) + 1 if pos else 1
    height = max((abs(y) for _, y in pos.values()), default=0) * 2 + 1
    fig, ax = plt.subplots(figsize=(min(4 + 1.6 * width, 40), min(3 + 0.8 * height, 40)))
    show_labels = len(g.transitions) <= LABEL_LIMIT
    for s, a, t in g.transitions:
        (x1, y1), (x2, y2) = pos[s], pos[t]
        style = "dashed" if a == TAU_LABEL else "solid"
        if s == t:
            arrow = FancyArrowPatch((x1 - 0.08, y1 + 0.1), (x1 + 0.08, y1 + 0.1), connectionstyle="arc3,rad=-2.5",
                                    arrowstyle="-|>", mutation_scale=8, linestyle=style, color="0.35")
            lx, ly = x1, y1 + 0.35
        else:
            arrow = FancyArrowPatch((x1, y1), (x2, y2), connectionstyle="arc3,rad=0.15", arrowstyle="-|>",
                                    mutation_scale=10, shrinkA=9, shrinkB=9, linestyle=style, color="0.35")
            lx, ly = (x1 + x2) / 2, (y1 + y2) / 2 + 0.08
        ax.add_patch(arrow)
        if show_labels:
            ax.text(lx, ly, a, fontsize=7, ha="center", va="bottom", color="tab:blue")
    for s, (x, y) in pos.items():
        ax.scatter([x], [y], s=220, color="tab:orange" if s == g.initial else "white",
                   edgecolors="black" if s not in g.frontier else "tab:red", zorder=3)
        ax.text(x, y, str(s), fontsize=7, ha="center", va="center", zorder=4)
    ax.set_xlim(-0.6, width - 0.4)
    ax.set_ylim(-height / 2 - 0.6, height / 2 + 0.6)
    ax.set_axis_off()
    ax.set_title(title or f"{g.num_states} states, {len(g.transitions)} transitions", fontsize=9)
    path = Path(path)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
