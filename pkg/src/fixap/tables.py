"""Tabular renditions of an apparatus, its reversals, and session reports.

Every number is printed with 12 significant digits; magnitudes below
``1e-13`` print as ``0``.  Complex cells read ``<re>+<im>j`` and parse with
Python's ``complex()``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Optional

from .attack import AttackPlan, synthesize_grouped, synthesize_per_outcome
from .hilbert import StateVector
from .optics import ComposedApparatus
from .presets import MACH_ZEHNDER, legitimate_slots

FORMATS = ("text", "csv", "json-lines")
SNAP = 1e-13


def fmt_num(x: float) -> str:
    x = float(x)
    if abs(x) < SNAP:
        return "0"
    return f"{x:.12g}"


def fmt_complex(z: complex) -> str:
    z = complex(z)
    re_, im = fmt_num(z.real), fmt_num(z.imag)
    if im.startswith("-"):
        return f"{re_}{im}j"
    return f"{re_}+{im}j"


def pair(z: complex) -> list:
    """``[re, im]`` rounded to the printed precision."""
    return [float(fmt_num(z.real)), float(fmt_num(z.imag))]


@dataclass
class Table:
    name: str
    header: list[str]
    rows: list[list[str]]

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(self.header)
            w.writerows(self.rows)
            return buf.getvalue()
        if fmt == "json-lines":
            return "".join(json.dumps({"table": self.name, **dict(zip(self.header, r))},
                                      ensure_ascii=False) + "\n" for r in self.rows)
        if fmt == "text":
            widths = [max(len(str(c)) for c in col) for col in zip(self.header, *self.rows)]
            lines = [f"# {self.name}",
                     "  ".join(h.ljust(w) for h, w in zip(self.header, widths)).rstrip()]
            for r in self.rows:
                lines.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())
            return "\n".join(lines) + "\n"
        raise ValueError(f"unknown format {fmt!r}")


def state_cells(st: Optional[StateVector]) -> list[str]:
    if st is None:
        return ["gap"]
    return [fmt_complex(a) for a in st.amplitudes]


def apparatus_tables(c: ComposedApparatus) -> list[Table]:
    dom = c.domain.labels
    cod = c.codomain.labels
    iso = Table("isometry", ["output"] + dom,
                [[lbl] + [fmt_complex(z) for z in row] for lbl, row in zip(cod, c.iso.matrix)])
    spaces = Table("spaces", ["space", "index", "basis_state"],
                   [["domain", str(i), b] for i, b in enumerate(dom)]
                   + [["codomain", str(i), b] for i, b in enumerate(cod)])
    return [spaces, iso]


def reversal_table(c: ComposedApparatus, plan: Optional[AttackPlan] = None) -> Table:
    plan = plan or synthesize_per_outcome(c.iso, c.detector_basis, c.apparatus.name)
    mu = c.apparatus.outcome_map
    rows = []
    for key, st in plan.entries:
        m = str(mu[key]) if mu is not None else ""
        rows.append([m, str(key)] + state_cells(st))
    return Table("reversal", ["meaning", "detector"] + c.domain.labels, rows)


def outcome_table(c: ComposedApparatus) -> Table:
    mu = c.apparatus.outcome_map
    return Table("outcome_map", ["detector", "meaning"],
                 [[str(r), str(m)] for r, m in mu.entries])


def grouped_plan_for(c: ComposedApparatus) -> AttackPlan:
    """Grouped plan, confined to the legitimate slots for time-bin receivers."""
    restriction = legitimate_slots(c.domain) if c.apparatus.name == MACH_ZEHNDER else None
    return synthesize_grouped(c.iso, c.apparatus.outcome_map, restriction, c.apparatus.name)


def grouped_attack_table(c: ComposedApparatus, plan: Optional[AttackPlan] = None) -> Table:
    plan = plan or grouped_plan_for(c)
    rows = [[str(k), plan.restriction_label] + state_cells(st) for k, st in plan.entries]
    return Table("grouped_attack", ["meaning", "restriction"] + c.domain.labels, rows)


def statistics_table(scheme) -> Table:
    from .protocol import NO_CLICK, meaning_distribution

    cols = [str(m) for m in scheme.keys]
    extra = sorted({str(m) for m in scheme.mu.meanings} - set(cols))
    cols += extra + [NO_CLICK]
    rows = []
    for m in scheme.keys:
        dist = {str(k): v for k, v in meaning_distribution(scheme, scheme.encoded(m)).items()}
        rows.append([m.basis, str(m.bit)] + [fmt_num(dist.get(cname, 0.0)) for cname in cols])
    return Table("statistics", ["alice_basis", "alice_bit"] + cols, rows)


def all_tables(c: ComposedApparatus, scheme=None) -> list[Table]:
    out = [reversal_table(c), outcome_table(c)]
    if scheme is not None:
        out.append(statistics_table(scheme))
    out.append(grouped_attack_table(c))
    return out


# -- session reports ---------------------------------------------------------

def report_summary(rep) -> dict:
    lay = rep.layout
    return {
        "scheme": lay.scheme,
        "adversary": lay.adversary,
        "restriction": lay.restriction,
        "seed": rep.seed,
        "rounds": rep.rounds,
        "sifted": rep.sifted_count,
        "errors": rep.error_count,
        "qber": None if rep.qber is None else float(fmt_num(rep.qber)),
        "eve_agreement": None if rep.eve_agreement is None else float(fmt_num(rep.eve_agreement)),
        "monitor_alarms": rep.monitor_alarms,
        "no_click": rep.no_click_count,
    }


def histogram_table(rep, kind: str = "meaning") -> Table:
    hist = rep.outcome_histogram if kind == "meaning" else rep.raw_histogram
    rows = [[a.basis, str(a.bit), o, str(n)] for (a, o), n in hist.items()]
    return Table(f"{kind}_histogram", ["alice_basis", "alice_bit", "outcome", "count"], rows)


def render_report(rep, fmt: str, histogram: str = "meaning") -> str:
    summary = report_summary(rep)
    if fmt == "csv":
        return histogram_table(rep, histogram).render("csv")
    if fmt == "json-lines":
        head = json.dumps({"table": "summary", **summary}, ensure_ascii=False) + "\n"
        return (head + histogram_table(rep, "meaning").render("json-lines")
                + histogram_table(rep, "raw").render("json-lines"))
    lines = []
    for k, v in summary.items():
        if k == "eve_agreement" and v is None:
            continue
        lines.append(f"{k}: {'n/a' if v is None else v}")
    text = "\n".join(lines) + "\n\n"
    return text + histogram_table(rep, "meaning").render("text") + "\n" + \
        histogram_table(rep, "raw").render("text")
