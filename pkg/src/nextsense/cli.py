"""Command-line entry points: run, replay-estimate, validate-spec, compare, serve."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import channel as chan
from . import runner as run_mod
from . import scenario as scn
from . import validation as val


def _load_spec(path: str) -> scn.ExperimentSpec:
    return scn.spec_from_json(Path(path).read_text())


def cmd_validate_spec(args) -> int:
    spec = _load_spec(args.spec)
    violations = scn.validate_spec(spec)
    if not violations:
        print("spec is valid")
        return 0
    for v in violations:
        print(f"violation: {v}")
    return 1


def cmd_run(args) -> int:
    spec = _load_spec(args.spec)
    violations = scn.validate_spec(spec)
    if violations:
        for v in violations:
            print(f"violation: {v}", file=sys.stderr)
        return 1
    ds = run_mod.run_experiment(spec)
    digest = run_mod.write_dataset(ds, args.out)
    print(f"wrote dataset to {args.out} (iq sha256 {digest[:16]}...)")
    return 0


def cmd_replay_estimate(args) -> int:
    taps = run_mod.replay_estimate(
        args.dataset, ue_index=args.ue, max_taps=args.max_taps, power_floor_db=args.floor_db
    )
    chan.write_tap_file(args.out, taps)
    print(f"recovered {len(taps)} taps -> {args.out}")
    return 0


def cmd_compare(args) -> int:
    ds_a = run_mod.read_dataset(args.dir_a)
    ds_b = run_mod.read_dataset(args.dir_b)
    iq_a, iq_b = ds_a.ues[args.ue].iq, ds_b.ues[args.ue].iq
    if iq_a.shape != iq_b.shape:
        print(f"dims mismatch: {iq_a.shape} vs {iq_b.shape}", file=sys.stderr)
        return 1
    stats = val.ensemble_report(iq_a, iq_b)
    out = Path(args.out)
    out.write_text(json.dumps(stats.to_doc(), sort_keys=True, indent=2) + "\n")
    base = out.with_suffix("")
    Path(f"{base}_waterfall_a.csv").write_text(val.waterfall_csv(iq_a))
    Path(f"{base}_waterfall_b.csv").write_text(val.waterfall_csv(iq_b))
    Path(f"{base}_cdf.csv").write_text(val.magnitude_cdf_csv(iq_a, iq_b))
    print(
        f"ks_d={stats.ks_d:.5f} ks_p={stats.ks_p:.4f} wd={stats.wasserstein:.6f} "
        f"var_a={stats.var_a:.5f} var_b={stats.var_b:.5f} -> {args.out}"
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    app = create_app(data_dir=args.data_dir, workers=args.workers)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="nextsense", description="semi-synthetic 5G sensing dataset platform"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-spec", help="check an experiment spec")
    p.add_argument("spec")
    p.set_defaults(func=cmd_validate_spec)

    p = sub.add_parser("run", help="execute an experiment spec")
    p.add_argument("spec")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay-estimate", help="reconstruct taps from a dataset")
    p.add_argument("dataset")
    p.add_argument("--out", required=True, help="output tap file")
    p.add_argument("--ue", type=int, default=0)
    p.add_argument("--max-taps", type=int, default=12)
    p.add_argument("--floor-db", type=float, default=-25.0)
    p.set_defaults(func=cmd_replay_estimate)

    p = sub.add_parser("compare", help="ensemble statistics between two datasets")
    p.add_argument("dir_a")
    p.add_argument("dir_b")
    p.add_argument("--out", required=True, help="output stats.json")
    p.add_argument("--ue", type=int, default=0)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=int(os.environ.get("NEXTSENSE_PORT", "8470")))
    p.add_argument("--data-dir", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
