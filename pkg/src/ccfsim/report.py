"""Writers for results tables, summaries and simulated REX logs."""

from __future__ import annotations

import csv
import io
import json
from typing import Iterable, Sequence

from .combinations import CLASS_LABELS, COMBINATION_CLASSES
from .engine import HistoryResult
from .estimators import CampaignResult

RESULT_COLUMNS = (
    "setting",
    "rho",
    "p_a",
    "p_b",
    "mu",
    "omega",
    "histories",
    "pfd_reference",
    "pfd_reference_ci_low",
    "pfd_reference_ci_high",
    "pfd_visible",
    "pfd_visible_ci_low",
    "pfd_visible_ci_high",
    "mttff_hours",
    "mttff_relative",
    "failing",
    "survivors",
) + COMBINATION_CLASSES


def fmt(value) -> str:
    """Scientific notation with six significant digits; integers and text verbatim."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.5e}"
    return str(value)


def result_row(res: CampaignResult) -> dict[str, str]:
    lab = res.label
    values = {
        "setting": lab.get("setting"),
        "rho": lab.get("rho"),
        "p_a": lab.get("p_a"),
        "p_b": lab.get("p_b"),
        "mu": lab.get("mu"),
        "omega": lab.get("omega"),
        "histories": res.histories,
        "pfd_reference": res.pfd_reference.mean,
        "pfd_reference_ci_low": res.pfd_reference.ci_low,
        "pfd_reference_ci_high": res.pfd_reference.ci_high,
        "pfd_visible": res.pfd_visible.mean,
        "pfd_visible_ci_low": res.pfd_visible.ci_low,
        "pfd_visible_ci_high": res.pfd_visible.ci_high,
        "mttff_hours": res.mttff.mean_hours,
        "mttff_relative": res.mttff.relative,
        "failing": res.mttff.failing,
        "survivors": res.mttff.survivors,
    }
    values.update(res.combination_counts)
    return {k: fmt(values[k]) for k in RESULT_COLUMNS}


def results_csv(results: Sequence[CampaignResult]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RESULT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for res in results:
        writer.writerow(result_row(res))
    return buf.getvalue()


def simulate_summary(results: Sequence[CampaignResult], header: Iterable[str] = ()) -> str:
    lines = list(header)
    for res in results:
        row = result_row(res)
        lines.append("")
        lines.append(f"[{row['setting']}] rho = {row['rho']}, mu = {row['mu']} /h, omega = {row['omega']} /h")
        lines.append(f"  histories        {row['histories']}")
        lines.append(
            f"  PFD reference    {row['pfd_reference']}  "
            f"(95% CI {row['pfd_reference_ci_low']} .. {row['pfd_reference_ci_high']})"
        )
        lines.append(
            f"  PFD visible      {row['pfd_visible']}  "
            f"(95% CI {row['pfd_visible_ci_low']} .. {row['pfd_visible_ci_high']})"
        )
        lines.append(f"  failing / surv.  {row['failing']} / {row['survivors']}")
        if row["mttff_hours"]:
            lines.append(f"  MTTFF            {row['mttff_hours']} h")
    return "\n".join(lines) + "\n"


def sweep_summary(results: Sequence[CampaignResult], header: Iterable[str] = ()) -> str:
    """Combination-count table with one column per orientation pair."""
    lines = list(header)
    rows = [result_row(r) for r in results]
    heads = [f"{float(r['p_a']):.2g}/{float(r['p_b']):.2g}" for r in rows]
    width = max(12, *(len(h) for h in heads)) + 2
    label_w = max(len(v) for v in CLASS_LABELS.values()) + 2
    lines.append("")
    lines.append("Combination".ljust(label_w) + "".join(h.rjust(width) for h in heads))
    for cls in COMBINATION_CLASSES:
        lines.append(CLASS_LABELS[cls].ljust(label_w) + "".join(r[cls].rjust(width) for r in rows))
    lines.append("survived".ljust(label_w) + "".join(r["survivors"].rjust(width) for r in rows))
    lines.append("MTTFF [h]".ljust(label_w) + "".join(r["mttff_hours"].rjust(width) for r in rows))
    lines.append("MTTFF relative".ljust(label_w) + "".join(r["mttff_relative"].rjust(width) for r in rows))
    return "\n".join(lines) + "\n"


def rex_lines(histories: Iterable[HistoryResult]) -> Iterable[str]:
    """JSON Lines, histories in index order, records in time order within each."""
    for h in sorted(histories, key=lambda h: h.history):
        for rec in h.event_log or ():
            yield json.dumps(rec.to_dict(), separators=(",", ":")) + "\n"
