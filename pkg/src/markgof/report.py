"""Figure rendering for experiment results.

The CSV is the contract; the figure is a convenience rendered next to it:
rejection rates against the expected number of points, split into a type I
panel (isotropic rows) and a power panel (elongated rows), one curve per
test variant.
"""

from __future__ import annotations

from matplotlib.figure import Figure

from .harness import ErrorRateTable

__all__ = ["render_error_rates"]


def _variant_label(row) -> str:
    if row.test == "tmd":
        return f"TMD c={row.c:g}"
    return f"MGM n={row.n_mc}"


def _curves(rows):
    grouped: dict[tuple, list] = {}
    for r in rows:
        grouped.setdefault((_variant_label(r), r.c_e), []).append(r)
    for key in sorted(grouped):
        pts = sorted(grouped[key], key=lambda r: r.target_points)
        yield key, pts


def render_error_rates(table: ErrorRateTable, path, alpha: float | None = None):
    """Render the error-rate table to an image file (format from suffix)."""
    fig = Figure(figsize=(11.0, 4.4))
    ax_null, ax_alt = fig.subplots(1, 2)

    null_rows = [r for r in table if r.c_e == 1.0]
    alt_rows = [r for r in table if r.c_e != 1.0]

    for (label, _), pts in _curves(null_rows):
        x = [r.target_points for r in pts]
        y = [r.rate for r in pts]
        err = [2 * r.se for r in pts]
        ax_null.errorbar(x, y, yerr=err, marker="o", capsize=2, label=label)
    if alpha is not None:
        ax_null.axhline(alpha, color="0.4", linestyle="--", linewidth=1)
    ax_null.set_title("isotropic model: type I error")
    ax_null.set_xlabel("expected points in window")
    ax_null.set_ylabel("rejection rate")
    if null_rows:
        ax_null.legend(fontsize=8)

    for (label, c_e), pts in _curves(alt_rows):
        x = [r.target_points for r in pts]
        y = [r.rate for r in pts]
        ax_alt.plot(x, y, marker="o", label=f"{label}, c_e={c_e:g}")
    ax_alt.set_title("elongated grains: power")
    ax_alt.set_xlabel("expected points in window")
    ax_alt.set_ylabel("rejection rate")
    ax_alt.set_ylim(-0.02, 1.02)
    if alt_rows:
        ax_alt.legend(fontsize=8)

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    return path
