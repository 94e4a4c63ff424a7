"""Command-line front end.

Exit codes: 0 ok, 2 configuration error, 3 mathematical consistency failure
(isometry or image check), 4 attack-plan verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .attack import GROUPED, PER_OUTCOME, AttackPlan, PlanVerificationError, verify_plan
from .config import ConfigError, SessionConfig, load_apparatus, load_session, scheme_from_config
from .hilbert import IsometryError, TwoPhotonError
from .optics import ApparatusError, ImageCheckError, compose
from .presets import PRESET_NAMES, restriction_by_name
from .protocol import make_plan, parse_monitor, run_session, scheme_by_name
from .tables import FORMATS, Table, all_tables, apparatus_tables, fmt_num, render_report, reversal_table

EXIT_OK, EXIT_CONFIG, EXIT_MATH, EXIT_PLAN = 0, 2, 3, 4


def _load(args, monitor=()):
    """Return ``(composed apparatus, scheme or None)`` from --scheme/--config."""
    if args.config:
        cfg = load_apparatus(args.config)
        composed = compose(cfg.apparatus, tol=args.tol)
        scheme = scheme_from_config(cfg, monitor) if cfg.states else None
        return composed, scheme
    name = args.scheme or PRESET_NAMES[1]
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown scheme {name!r}; choose from {', '.join(PRESET_NAMES)}")
    scheme = scheme_by_name(name, theta=args.theta, monitor=monitor)
    return compose(scheme.apparatus, tol=args.tol), scheme


def _write(args, text: str):
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _render(tables: list[Table], fmt: str) -> str:
    sep = "\n" if fmt == "text" else ""
    if fmt == "csv" and len(tables) > 1:
        return "".join(f"# {t.name}\n" + t.render("csv") + "\n" for t in tables)
    return sep.join(t.render(fmt) for t in tables)


def cmd_apparatus(args) -> int:
    c, _ = _load(args)
    tabs = apparatus_tables(c)
    head = Table("apparatus", ["key", "value"], [
        ["name", c.apparatus.name],
        ["domain_dim", str(c.domain.dim)],
        ["codomain_dim", str(c.codomain.dim)],
        ["unitary", str(c.iso.is_unitary).lower()],
    ])
    if args.format == "json-lines":
        doc = {"name": c.apparatus.name, "domain": c.domain.labels, "codomain": c.codomain.labels,
               "matrix": [[[float(fmt_num(z.real)), float(fmt_num(z.imag))] for z in row]
                          for row in c.iso.matrix]}
        _write(args, json.dumps(doc) + "\n")
    else:
        _write(args, _render([head] + tabs, args.format))
    return EXIT_OK


def cmd_reverse(args) -> int:
    c, _ = _load(args)
    _write(args, reversal_table(c).render(args.format))
    return EXIT_OK


def cmd_tables(args) -> int:
    c, scheme = _load(args)
    tabs = all_tables(c, scheme)
    if args.out and Path(args.out).suffix == "" and args.format == "csv":
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for t in tabs:
            (out / f"{t.name}.csv").write_text(t.render("csv"), encoding="utf-8", newline="\n")
        return EXIT_OK
    _write(args, _render(tabs, args.format))
    return EXIT_OK


def cmd_attack(args) -> int:
    c, scheme = _load(args)
    if scheme is not None:
        plan = make_plan(scheme, args.mode, args.restrict)
    elif args.mode == PER_OUTCOME:
        from .attack import synthesize_per_outcome

        plan = synthesize_per_outcome(c.iso, c.detector_basis, c.apparatus.name)
    else:
        from .attack import synthesize_grouped

        sub = None if args.restrict in (None, "none") else restriction_by_name(args.restrict, c.domain)
        plan = synthesize_grouped(c.iso, c.apparatus.outcome_map, sub, c.apparatus.name)
    _write(args, plan.to_json() + "\n")
    if plan.gaps:
        print("plan has gaps: " + ", ".join(str(k) for k in plan.gaps), file=sys.stderr)
        return EXIT_PLAN
    return EXIT_OK


def cmd_verify(args) -> int:
    c, scheme = _load(args)
    if scheme is None:
        raise ConfigError("verification needs sender states (use a preset or add 'states')")
    try:
        text = Path(args.plan).read_text(encoding="utf-8")
        restriction = None
        data = json.loads(text)
        if data.get("restriction", "none") != "none":
            restriction = restriction_by_name(data["restriction"], c.domain)
        plan = AttackPlan.from_json(text, restriction)
    except (OSError, ValueError, KeyError) as e:
        raise ConfigError(f"cannot load plan {args.plan}: {e}") from None
    rep = verify_plan(plan, scheme.iso, scheme.mu, scheme.honest_source(), tol=args.tol)
    _write(args, "\n".join(rep.lines()) + "\n")
    return EXIT_OK if rep.ok else EXIT_PLAN


def cmd_simulate(args) -> int:
    if args.session:
        cfg = load_session(args.session)
    else:
        cfg = SessionConfig()
    for key in ("scheme", "rounds", "adversary", "restriction", "loss"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.monitor is not None:
        cfg.monitor = [t for t in args.monitor.split(",") if t.strip()]
    if args.config:
        cfg.apparatus = args.config
    if cfg.seed is None:
        raise ConfigError("simulate requires --seed (or 'seed' in the session file)")
    if cfg.rounds <= 0:
        raise ConfigError("rounds must be positive")
    if cfg.apparatus:
        acfg = load_apparatus(cfg.apparatus)
        scheme = scheme_from_config(acfg)
    else:
        name = cfg.scheme or PRESET_NAMES[1]
        if name not in PRESET_NAMES:
            raise ConfigError(f"unknown scheme {name!r}")
        scheme = scheme_by_name(name, theta=cfg.theta)
    if cfg.monitor:
        try:
            scheme = scheme.with_monitor(parse_monitor(scheme, cfg.monitor))
        except ValueError as e:
            raise ConfigError(str(e)) from None
    rep = run_session(scheme, cfg.rounds, cfg.adversary, seed=cfg.seed,
                      restriction=cfg.restriction, loss=cfg.loss, workers=args.workers)
    _write(args, render_report(rep, args.format, args.histogram))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--scheme", choices=PRESET_NAMES, help="built-in apparatus and encodings")
    src.add_argument("--config", help="apparatus YAML file")
    common.add_argument("--out", help="output file (stdout if omitted)")
    common.add_argument("--format", choices=FORMATS, default="text")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float, default=1e-10, help="consistency tolerance")
    common.add_argument("--theta", type=float, default=0.0,
                        help="polarization rotator phase for polarization-bb84")

    p = argparse.ArgumentParser(prog="fixap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("apparatus", parents=[common], help="print input/output bases and the isometry")
    sub.add_parser("reverse", parents=[common], help="print the reversed detector states")
    sub.add_parser("tables", parents=[common],
                   help="emit reversal, outcome-map, statistics and grouped-attack tables")
    a = sub.add_parser("attack", parents=[common], help="synthesize an attack plan (JSON)")
    a.add_argument("--mode", choices=(PER_OUTCOME, GROUPED), default=PER_OUTCOME)
    a.add_argument("--restrict", help="h01, none, or comma-separated input mode labels")
    v = sub.add_parser("verify", parents=[common], help="verify a plan JSON against a scheme")
    v.add_argument("--plan", required=True)
    s = sub.add_parser("simulate", parents=[common], help="run a BB84 session")
    s.add_argument("--session", help="session YAML file")
    s.add_argument("--rounds", type=int)
    s.add_argument("--adversary", choices=("none", PER_OUTCOME, GROUPED))
    s.add_argument("--restriction")
    s.add_argument("--monitor", help="comma-separated input modes, e.g. t-1,t2 or a:t-1")
    s.add_argument("--loss", type=float)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--histogram", choices=("meaning", "raw"), default="meaning",
                   help="histogram written in csv format")
    return p


COMMANDS = {
    "apparatus": cmd_apparatus,
    "reverse": cmd_reverse,
    "tables": cmd_tables,
    "attack": cmd_attack,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ApparatusError, KeyError) as e:
        print(f"fixap: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ImageCheckError, IsometryError, TwoPhotonError) as e:
        print(f"fixap: consistency check failed: {e}", file=sys.stderr)
        return EXIT_MATH
    except PlanVerificationError as e:
        print(f"fixap: {e}", file=sys.stderr)
        return EXIT_PLAN


if __name__ == "__main__":
    sys.exit(main())
