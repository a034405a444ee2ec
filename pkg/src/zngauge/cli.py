"""Command line interface: simulate, verify, constants, census, oracle.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .gibbs_sampler import BoxLattice
from .harness_oracle import (
    SUITES,
    ManifestError,
    OracleSpec,
    WilsonObservable,
    dumps17,
    exact_expectations,
    load_manifest,
    measure_run,
    parse_manifest,
    run_suite,
    write_census_csv,
    write_sample_csv,
    _fmt,
)
from .lattice_complex import Box, DomainError
from .loops_surfaces import parse_loop_description, rectangle_loop
from .zn_model import constants_bundle, lambda_

ORACLE_CSV_HEADER = "# zngauge oracle csv v1"


def _open_out(path):
    return open(path, "w", newline="") if path and path != "-" else sys.stdout


def cmd_simulate(args) -> int:
    manifest = load_manifest(args.manifest)
    run = measure_run(manifest, use_cache=False, snapshot_every=args.snapshot_every)
    out = _open_out(args.output)
    try:
        write_sample_csv(run, out)
    finally:
        if out is not sys.stdout:
            out.close()
    if args.snapshots:
        if not args.snapshot_every:
            raise DomainError("--snapshots needs --snapshot-every")
        np.savez_compressed(args.snapshots, values=np.array(run.snapshots),
                            sweeps=np.array(run.snapshot_sweeps),
                            manifest=json.dumps(manifest.to_dict()))
    ok = bool(run.census_ok.all())
    if not ok:
        print(f"decomposition invariants failed at sweeps {run.census_failures[:10]}", file=sys.stderr)
    return 0 if ok else 1


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    reports = [run_suite(name) for name in names]
    data = [r.to_dict() for r in reports]
    text = dumps17(data[0] if len(data) == 1 else data)
    if args.json:
        Path(args.json).write_text(text + "\n")
    else:
        print(text)
    for r in reports:
        print(r.table(), file=sys.stderr)
    return 0 if all(r.passed for r in reports) else 1


def cmd_constants(args) -> int:
    consts = constants_bundle(args.n, args.m_rep, args.beta0, require_admissible=not args.allow_inadmissible)
    data = asdict(consts)
    data["K0"] = {str(k): v for k, v in consts.K0.items()}
    data["lambda_formula"] = "exp(-beta0 * (1 - cos(2 pi m_rep / n)))"
    data["lambda_at_beta0"] = lambda_(args.beta0, args.n, args.m_rep)
    print(dumps17(data))
    return 0


def cmd_census(args) -> int:
    archive = np.load(args.samples, allow_pickle=False)
    manifest = parse_manifest(str(archive["manifest"]), args.samples)
    lattice = BoxLattice(manifest.box)
    R, T = manifest.loops[0]
    loop = rectangle_loop((1, 2), R, T, (0,) * manifest.dim)
    out = _open_out(args.output)
    try:
        ok = write_census_csv(lattice, manifest.n, archive["values"], out,
                              archive["sweeps"].tolist(), loop)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0 if ok else 1


def _load_oracle_spec(path: str) -> dict:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    for key in ("box", "n", "loops"):
        if key not in data:
            raise ManifestError(f"{path}:1: missing field {key!r}")
    return data


def cmd_oracle(args) -> int:
    data = _load_oracle_spec(args.spec)
    box = Box(tuple(data["box"]["lower"]), tuple(data["box"]["upper"]))
    betas = data.get("betas", [data.get("beta", 0.0)])
    loops = [parse_loop_description(d) for d in data["loops"]]
    out = _open_out(args.output)
    try:
        out.write(ORACLE_CSV_HEADER + "\n")
        out.write("loop,beta,re,im\n")
        for beta in betas:
            spec = OracleSpec(box, int(data["n"]), float(beta), int(data.get("m_rep", 1)),
                              bool(data.get("gauge_fixing", True)))
            obs = [WilsonObservable(spec.lattice, g, spec.rep) for g in loops]
            vals = exact_expectations(spec, obs)
            for i, v in enumerate(vals):
                out.write(f"{i},{_fmt(float(beta))},{_fmt(v.real)},{_fmt(v.imag)}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zngauge", description="Z_n lattice gauge theory toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a manifest and write the sample CSV")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--snapshots", help="write spin snapshots to this .npz file")
    p.add_argument("--snapshot-every", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=list(SUITES) + ["all"])
    p.add_argument("--json", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("constants", help="print the theory constants as JSON")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m-rep", type=int, default=1)
    p.add_argument("--beta0", type=float, default=1.0)
    p.add_argument("--allow-inadmissible", action="store_true")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("census", help="vortex census of saved snapshots")
    p.add_argument("samples", help=".npz written by simulate --snapshots")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("oracle", help="exact Wilson loop expectations on a small box")
    p.add_argument("spec")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
