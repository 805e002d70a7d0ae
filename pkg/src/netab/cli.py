"""``netab`` command line.

Every command writes its artifact to ``--out`` (or stdout) and a manifest
next to it (``<out>.manifest.json``, or stderr when writing to stdout). The
manifest holds the fully resolved configuration, so ``netab rerun MANIFEST``
reproduces the artifact byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import secrets
import sys
from typing import Optional, Sequence

from . import __version__
from .asymptotics import diagnostics
from .design import DEFAULT_ALPHA, DEFAULT_T, algorithm2, derive_seed
from .evaluation import (
    CONVERGENCE_HEADER,
    PROB_HEADER,
    TABLE1_HEADER,
    TABLE1_SETTINGS,
    configure,
    convergence_study,
    evaluate,
    prob_figure_data,
    table1_study,
    to_csv,
)
from .graph import generate_er, load_edge_list
from .variance import ScenarioIParams

COMMANDS = ("generate", "design", "diagnose", "evaluate", "table1", "prob-figure", "convergence")
_MULTI = {"table1", "prob-figure", "convergence"}
# Child-seed slot for networks generated from --n/--p; slots 0-3 belong to evaluation.
_NETWORK_SLOT = 9


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _unit_interval(name):
    def parse(s):
        try:
            v = float(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {s!r}") from None
        if not 0.0 < v < 1.0:
            raise argparse.ArgumentTypeError(f"{name} must lie strictly between 0 and 1, got {s}")
        return v
    return parse


def _positive_int(name):
    def parse(s):
        try:
            v = int(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer, got {s!r}") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{name} must be >= 1, got {s}")
        return v
    return parse


def _seed(s):
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--seed must be an unsigned integer, got {s!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"--seed must fit in 64 unsigned bits, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="netab", description="Network A/B test design by degree-paired rerandomization.")
    parser.add_argument("--version", action="version", version=f"netab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for cmd in COMMANDS:
        p = sub.add_parser(cmd)
        multi = cmd in _MULTI
        if cmd != "generate":
            p.add_argument("--edges", action="append" if cmd == "prob-figure" else None, metavar="PATH")
        nargs = "+" if multi else None
        p.add_argument("--n", type=_positive_int("--n"), nargs=nargs, metavar="INT")
        p.add_argument("--p", type=_unit_interval("--p"), nargs=nargs, metavar="FLOAT")
        p.add_argument("--scenario", choices=["I", "II"], nargs="+" if cmd == "table1" else None)
        p.add_argument("--alpha", type=_unit_interval("--alpha"))
        p.add_argument("--T", type=_positive_int("--T"), default=DEFAULT_T)
        p.add_argument("--rho", type=_unit_interval("--rho"), default=0.5)
        p.add_argument("--n-mc", dest="n_mc", type=_positive_int("--n-mc"), default=1000)
        p.add_argument("--reps", type=_positive_int("--reps"), default=None)
        p.add_argument("--c", type=float, default=None)
        p.add_argument("--delta1", type=float, default=None)
        p.add_argument("--delta2", type=float, default=1.0)
        p.add_argument("--seed", type=_seed, default=None)
        p.add_argument("--threads", type=_positive_int("--threads"), default=1)
        p.add_argument("--format", choices=["json", "csv"], default=None)
        p.add_argument("--out", metavar="PATH")

    rr = sub.add_parser("rerun", help="re-execute a run from its manifest")
    rr.add_argument("manifest")
    rr.add_argument("--out", metavar="PATH")
    return parser


class DomainError(Exception):
    pass


def _resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("NETAB_SEED")
    if env:
        return _seed(env)
    return secrets.randbits(64)


def _file_digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _one_network(cfg: dict):
    if cfg.get("edges"):
        return load_edge_list(cfg["edges"])
    if cfg.get("n") is None or cfg.get("p") is None:
        raise DomainError("need --edges PATH or both --n and --p")
    return generate_er(cfg["n"], cfg["p"], derive_seed(cfg["seed"], _NETWORK_SLOT))


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _rows_out(rows, header, fmt) -> str:
    if fmt == "json":
        return _dump_json([{k: r.get(k) for k in header} for r in rows])
    return to_csv(rows, header)


def execute(cfg: dict) -> str:
    """Run a resolved configuration and return the artifact text."""
    cmd = cfg["command"]
    seed = cfg["seed"]
    params = ScenarioIParams(rho=cfg["rho"])

    if cmd == "generate":
        if cfg.get("n") is None or cfg.get("p") is None:
            raise DomainError("generate needs --n and --p")
        net = generate_er(cfg["n"], cfg["p"], seed)
        return "".join(f"{a} {b}\n" for a, b in net.edges)

    if cmd == "design":
        net = _one_network(cfg)
        scen = cfg["scenario"] or "I"
        sc = configure(net, scen, seed, alpha=cfg["alpha"], T=cfg["T"], c=cfg["c"],
                       delta1=cfg["delta1"], delta2=cfg["delta2"])
        res = algorithm2(net, sc, derive_seed(seed, 1), batch=64)
        out = res.to_dict()
        out["seed"] = seed
        return _dump_json(out)

    if cmd == "diagnose":
        net = _one_network(cfg)
        scen = cfg["scenario"] or "I"
        alphas = dict(DEFAULT_ALPHA)
        if cfg["alpha"] is not None:
            alphas[scen] = cfg["alpha"]
        rep = diagnostics(net, derive_seed(seed, 0), alpha1=alphas["I"], alpha2=alphas["II"])
        return _dump_json(rep)

    if cmd == "evaluate":
        net = _one_network(cfg)
        scen = cfg["scenario"] or "I"
        sc = configure(net, scen, seed, alpha=cfg["alpha"], T=cfg["T"], c=cfg["c"],
                       delta1=cfg["delta1"], delta2=cfg["delta2"])
        rep = evaluate(net, scen, sc, params, cfg["n_mc"], seed)
        return _dump_json(rep.to_dict())

    if cmd == "table1":
        scens = cfg["scenario"] or ["I", "II"]
        if cfg.get("n") or cfg.get("p"):
            if not (cfg.get("n") and cfg.get("p")):
                raise DomainError("table1 needs both --n and --p when either is given")
            settings = [(n, p, s) for s in scens for n in cfg["n"] for p in cfg["p"]]
        else:
            settings = [st for st in TABLE1_SETTINGS if st[2] in scens]
        alpha = {s: cfg["alpha"] for s in scens} if cfg["alpha"] is not None else None
        rows = table1_study(settings, reps=cfg["reps"] or 10, seed=seed, n_mc=cfg["n_mc"],
                            params=params, alpha=alpha, T=cfg["T"], threads=cfg["threads"])
        for r in rows:
            for err in r["errors"]:
                print(f"netab: warning: {err}", file=sys.stderr)
        return _rows_out(rows, TABLE1_HEADER, cfg["format"])

    if cmd == "prob-figure":
        if cfg.get("edges"):
            nets = [load_edge_list(p) for p in cfg["edges"]]
            names = [os.path.basename(p) for p in cfg["edges"]]
        else:
            ns = cfg.get("n") or [100, 1000]
            ps = cfg.get("p") or [0.01, 0.1]
            reps = cfg["reps"] or 1
            nets, names = [], []
            for i, (n, p, r) in enumerate((n, p, r) for n in ns for p in ps for r in range(reps)):
                nets.append(generate_er(n, p, derive_seed(seed, _NETWORK_SLOT, i)))
                names.append(f"er_n{n}_p{p:g}_r{r}")
        rows = prob_figure_data(nets, seed=derive_seed(seed, 1), names=names)
        return _rows_out(rows, PROB_HEADER, cfg["format"])

    if cmd == "convergence":
        ns = cfg.get("n") or [100, 500, 1000, 2000, 5000]
        ps = cfg.get("p") or [0.01, 0.1, 0.3]
        rows = convergence_study(ns, ps, reps=cfg["reps"] or 5, seed=seed, threads=cfg["threads"])
        return _rows_out(rows, CONVERGENCE_HEADER, cfg["format"])

    raise DomainError(f"unknown command {cmd!r}")


def _config_from_args(args) -> dict:
    cfg = {k: v for k, v in vars(args).items()}
    cfg["seed"] = _resolve_seed(cfg.get("seed"))
    if cfg.get("format") is None:
        cfg["format"] = "csv" if cfg["command"] in _MULTI else "json"
    edges = cfg.get("edges")
    if edges:
        paths = edges if isinstance(edges, list) else [edges]
        cfg["edges_sha256"] = [_file_digest(p) for p in paths]
    return cfg


def _write(cfg: dict, text: str) -> None:
    manifest = _dump_json({"netab_version": __version__, "config": cfg})
    out = cfg.get("out")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        with open(out + ".manifest.json", "w", encoding="utf-8") as fh:
            fh.write(manifest)
    else:
        sys.stdout.write(text)
        sys.stderr.write(manifest)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0

    try:
        if args.command == "rerun":
            with open(args.manifest, encoding="utf-8") as fh:
                cfg = json.load(fh)["config"]
            if args.out:
                cfg["out"] = args.out
            for path, digest in zip(_as_list(cfg.get("edges")), cfg.get("edges_sha256", [])):
                if _file_digest(path) != digest:
                    raise DomainError(f"edge file {path} changed since the manifest was written")
        else:
            cfg = _config_from_args(args)
        text = execute(cfg)
    except (DomainError, ValueError, OSError) as exc:
        print(f"netab: error: {exc}", file=sys.stderr)
        return 1
    _write(cfg, text)
    return 0


def _as_list(v):
    if v is None:
        return []
    return v if isinstance(v, list) else [v]


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
