"""Figure rendering for the report paths.

Every CLI report that writes delimited output also renders the matching
figure next to it: the convergence trace for a run, grouped sample/error
bars for a scheme comparison, and the timing curve for the scaling bench.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_convergence(ao_trace: list[float], path: str) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot(range(len(ao_trace)), ao_trace, marker="o", ms=3)
    ax.set_xlabel("alternation round")
    ax.set_ylabel("objective")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _grouped_bars(ax, by_scheme: dict[str, list[float]], labels: list[str]):
    width = 0.8 / max(len(by_scheme), 1)
    for i, (scheme, values) in enumerate(by_scheme.items()):
        positions = [j + i * width for j in range(len(values))]
        ax.bar(positions, values, width=width, label=scheme)
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(labels))])
    ax.set_xticklabels(labels)
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3, axis="y")


def save_sample_comparison(by_scheme: dict[str, list[float]], path: str) -> None:
    """Mean sample count per vehicle, grouped by scheme."""
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    num_cavs = len(next(iter(by_scheme.values())))
    _grouped_bars(ax, by_scheme, [f"vehicle {k + 1}" for k in range(num_cavs)])
    ax.set_ylabel("samples collected")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_error_comparison(by_scheme: dict[str, list[float]], path: str) -> None:
    """Mean perception error per vehicle, grouped by scheme."""
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    num_cavs = len(next(iter(by_scheme.values())))
    _grouped_bars(ax, by_scheme, [f"vehicle {k + 1}" for k in range(num_cavs)])
    ax.set_ylabel("perception error")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_scaling(rows: list[dict], path: str) -> None:
    """Wall time against slot count, one line per scheme."""
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    schemes = sorted({r["scheme"] for r in rows if r.get("status", "ok") == "ok"})
    for scheme in schemes:
        pts = sorted((r["slots"], r["wall_time_s"]) for r in rows
                     if r["scheme"] == scheme and r.get("status", "ok") == "ok")
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=scheme)
    ax.set_xlabel("time slots")
    ax.set_ylabel("wall time (s)")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
