"""Thin command-line client of the geoforest service.

Every subcommand builds a request model, posts it to the service (an
in-process ASGI app by default, a remote server with --server) and
writes the returned CSV files plus a summary.json to --out. Flag values
override config-file values (flat JSON, keys named like the long flags);
the master seed resolves as flag > config file > GEOFOREST_SEED > a
fresh random seed, and is always printed to stderr so any run can be
reproduced byte for byte.

Exit codes: 0 success, 2 configuration error, 3 experiment-level
failure (e.g. exclusion rate above threshold).
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import secrets
import sys
from pathlib import Path

import httpx

ENV_SEED = "GEOFOREST_SEED"

_ENDPOINTS = {
    "forest": "/v1/experiments/forest",
    "root-dist": "/v1/experiments/root-dist",
    "walk-dist": "/v1/experiments/walk-dist",
    "height-tail": "/v1/experiments/height-tail",
    "dual": "/v1/experiments/dual",
    "transform": "/v1/analytics/transform",
    "closed-forms": "/v1/analytics/closed-forms",
}


def _post(server: str | None, path: str, payload: dict) -> tuple[int, dict]:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            r = client.post(path, json=payload)
            return r.status_code, r.json()

    from .service import create_app

    async def go():
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://geoforest.local", timeout=None
        ) as client:
            r = await client.post(path, json=payload)
            return r.status_code, r.json()

    return asyncio.run(go())


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.is_file():
        print(f"config file not found: {path}", file=sys.stderr)
        raise SystemExit(2)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        print(f"malformed config file: {e}", file=sys.stderr)
        raise SystemExit(2)
    if not isinstance(data, dict):
        print("config file must hold a flat JSON object", file=sys.stderr)
        raise SystemExit(2)
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def _resolve_seed(flag_seed, file_cfg: dict) -> int:
    if flag_seed is not None:
        return int(flag_seed)
    if "seed" in file_cfg:
        return int(file_cfg["seed"])
    if os.environ.get(ENV_SEED):
        return int(os.environ[ENV_SEED])
    return secrets.randbits(48)


def _merge(args: argparse.Namespace, file_cfg: dict, fields: list[str]) -> dict:
    """Config-file values filled in wherever the flag was not given."""
    out = {}
    for f in fields:
        v = getattr(args, f, None)
        if v is None:
            v = file_cfg.get(f)
        if v is not None:
            out[f] = v
    return out


def _write_outputs(report: dict, out: str | None) -> None:
    summary = {k: report[k] for k in ("experiment", "seed", "config", "metrics", "notes")}
    text = json.dumps(summary, sort_keys=True, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / "summary.json").write_text(text)
    for name, payload in report.get("csv", {}).items():
        (d / name).write_text(payload)
    print(f"wrote {', '.join(['summary.json'] + list(report.get('csv', {})))} to {d}",
          file=sys.stderr)


def _dispatch(server: str | None, sub: str, payload: dict, out: str | None) -> int:
    status, body = _post(server, _ENDPOINTS[sub], payload)
    if status == 200:
        if sub == "closed-forms":
            print(body["value"])
            if out:
                d = Path(out)
                d.mkdir(parents=True, exist_ok=True)
                (d / "closed_form.json").write_text(
                    json.dumps(body, sort_keys=True, indent=2) + "\n"
                )
        else:
            _write_outputs(body, out)
        return 0
    detail = body.get("detail", body)
    print(f"error ({status}): {json.dumps(detail)}", file=sys.stderr)
    if status == 409:
        return 3
    return 2


def _comma_floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="geoforest",
        description="Geodesic forests in exponential last-passage percolation: "
        "experiments, closed forms and a service front end.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, threads=True):
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (integer; default: config file, then "
                            f"${ENV_SEED}, then a fresh random seed)")
        p.add_argument("--config", default=None,
                       help="flat JSON config file; flags override its values")
        p.add_argument("--out", default=None,
                       help="output directory for summary.json and CSV files "
                            "(default: summary to stdout)")
        p.add_argument("--server", default=None,
                       help="base URL of a running service (default: in-process)")
        if threads:
            p.add_argument("--threads", type=int, default=None,
                           help="worker processes for replica scheduling (default 1)")

    p = sub.add_parser("closed-forms", help="evaluate a closed-form root probability")
    p.add_argument("--substrate", dest="family", default=None,
                   choices=["bernoulli", "periodic", "finite-rooted-direction",
                            "finite-rooted-total", "weighted"],
                   help="formula family (default bernoulli)")
    p.add_argument("--a", type=float, default=None, help="direction slope (default 1.0)")
    p.add_argument("--p-minus", dest="p_minus", type=float, default=None,
                   help="left up-step probability (default 2/3)")
    p.add_argument("--p-plus", dest="p_plus", type=float, default=None,
                   help="right down-step probability (default 1/3)")
    p.add_argument("--k-plus", dest="k_plus", type=int, default=None,
                   help="periodic right steps per period (default 1)")
    p.add_argument("--k-minus", dest="k_minus", type=int, default=None,
                   help="periodic up steps per period (default 2)")
    p.add_argument("--m", type=int, default=None,
                   help="finite-rooted flat stretch length (default 1)")
    p.add_argument("--mu-minus", dest="mu_minus", type=float, default=None,
                   help="weighted substrate left drift (default 2.0)")
    p.add_argument("--mu-plus", dest="mu_plus", type=float, default=None,
                   help="weighted substrate right drift (default 4/3)")
    common(p, threads=False)

    p = sub.add_parser("forest", help="build one root map and export it as CSV")
    p.add_argument("--substrate", default=None,
                   choices=["bernoulli", "periodic", "finite_rooted", "flat"],
                   help="substrate family (default flat)")
    p.add_argument("--p-minus", dest="p_minus", type=float, default=None)
    p.add_argument("--p-plus", dest="p_plus", type=float, default=None)
    p.add_argument("--k-plus", dest="k_plus", type=int, default=None)
    p.add_argument("--k-minus", dest="k_minus", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--level-max", dest="level_max", type=int, default=None,
                   help="top antidiagonal level x1+x2 (default 24)")
    p.add_argument("--col-lo", dest="col_lo", type=int, default=None,
                   help="first output column (default 1)")
    p.add_argument("--col-hi", dest="col_hi", type=int, default=None,
                   help="last output column (default 12)")
    p.add_argument("--window", type=int, default=None,
                   help="substrate window, edges per side (default 256)")
    common(p, threads=False)

    p = sub.add_parser("root-dist", help="lattice-root vs walk-argmax distributions")
    p.add_argument("--substrate", default=None, choices=["bernoulli", "periodic"],
                   help="substrate family (default bernoulli)")
    p.add_argument("--p-minus", dest="p_minus", type=float, default=None)
    p.add_argument("--p-plus", dest="p_plus", type=float, default=None)
    p.add_argument("--k-plus", dest="k_plus", type=int, default=None)
    p.add_argument("--k-minus", dest="k_minus", type=int, default=None)
    p.add_argument("--a", type=float, default=None, help="direction slope (default 1.0)")
    p.add_argument("--replicas", type=int, default=None,
                   help="samples per arm (default 10000)")
    p.add_argument("--checkpoint-start", dest="checkpoint_start", type=int, default=None,
                   help="first stabilization level (default 32)")
    p.add_argument("--max-level", dest="max_level", type=int, default=None,
                   help="lattice-arm level budget (default 512)")
    p.add_argument("--agree", type=int, default=None,
                   help="consecutive agreeing checkpoints (default 3)")
    p.add_argument("--tv-band", dest="tv_band", type=int, default=None,
                   help="ordinal band for the TV distance (default 20)")
    p.add_argument("--max-exclusion-rate", dest="max_exclusion_rate", type=float,
                   default=None, help="abort threshold (default 0.01)")
    common(p)

    p = sub.add_parser("walk-dist", help="one-sided maxima vs queueing closed forms")
    p.add_argument("--p", type=float, default=None,
                   help="side's own step parameter (default 1/3)")
    p.add_argument("--side", default=None, choices=["+", "-"],
                   help="walk side (default +)")
    p.add_argument("--a", type=float, default=None, help="direction slope (default 1.0)")
    p.add_argument("--replicas", type=int, default=None, help="default 100000")
    p.add_argument("--xs", type=_comma_floats, default=None,
                   help="tail thresholds, comma separated (default 0.5,1,2)")
    common(p)

    p = sub.add_parser("height-tail", help="tree-height survival curve and tail fit")
    p.add_argument("--model", default=None, choices=["flat", "weighted"],
                   help="flat diagonal substrate or flat weighted model (default flat)")
    p.add_argument("--samples", type=int, default=None, help="default 20000")
    p.add_argument("--nmax", dest="n_max", type=int, default=None,
                   help="censoring level (default 512)")
    p.add_argument("--fit-lo", dest="fit_lo", type=int, default=None,
                   help="tail-fit range start (default nmax/16)")
    p.add_argument("--fit-hi", dest="fit_hi", type=int, default=None,
                   help="tail-fit range end (default nmax/2)")
    p.add_argument("--batch", type=int, default=None,
                   help="samples per scheduled batch (default 512)")
    common(p)

    p = sub.add_parser("dual", help="coalescence time vs weighted-substrate height")
    p.add_argument("--m", type=int, default=None, help="start separation (default 4)")
    p.add_argument("--replicas", type=int, default=None, help="per arm (default 5000)")
    p.add_argument("--n", type=int, default=None,
                   help="geodesic target level, doubled for the check (default 400)")
    p.add_argument("--alpha", type=float, default=None,
                   help="KS significance level (default 0.01)")
    p.add_argument("--max-nc-rate", dest="max_nc_rate", type=float, default=None,
                   help="non-coalescence abort threshold (default 0.01)")
    p.add_argument("--batch", type=int, default=None, help="default 16")
    common(p)

    p = sub.add_parser("transform", help="joint transform E(s^|Z| e^{uM}) rows")
    p.add_argument("--family", default=None,
                   choices=["bernoulli", "periodic", "weighted"],
                   help="step-law family (default bernoulli)")
    p.add_argument("--p-minus", dest="p_minus", type=float, default=None)
    p.add_argument("--p-plus", dest="p_plus", type=float, default=None)
    p.add_argument("--k-plus", dest="k_plus", type=int, default=None)
    p.add_argument("--k-minus", dest="k_minus", type=int, default=None)
    p.add_argument("--a", type=float, default=None, help="direction slope (default 1.0)")
    p.add_argument("--s", dest="s_values", type=_comma_floats, default=None,
                   help="s grid, comma separated in (0,1) (default 0.3,0.5)")
    p.add_argument("--u", dest="u_values", type=_comma_floats, default=None,
                   help="u grid, comma separated in [0, min gamma) (default 0)")
    p.add_argument("--n-max", dest="n_max", type=int, default=None,
                   help="series truncation (default 150)")
    p.add_argument("--samples-per-term", dest="samples_per_term", type=int, default=None,
                   help="Monte Carlo pool size per side (default 200000)")
    p.add_argument("--tolerance", type=float, default=None,
                   help="max allowed truncation bound (default 1e-3)")
    common(p, threads=False)

    p = sub.add_parser("serve", help="run the HTTP service with uvicorn")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return ap


_SUBSTRATE_FIELDS = {
    "bernoulli": ["p_minus", "p_plus"],
    "periodic": ["k_plus", "k_minus"],
    "finite_rooted": ["m"],
    "flat": [],
}


def _substrate_payload(args, file_cfg) -> dict:
    kind = getattr(args, "substrate", None) or file_cfg.get("substrate") or None
    if kind is None:
        kind = "bernoulli" if args.command == "root-dist" else "flat"
    spec = {"kind": kind}
    for f in _SUBSTRATE_FIELDS.get(kind, []):
        v = getattr(args, f, None)
        if v is None:
            v = file_cfg.get(f)
        if v is not None:
            spec[f] = v
    return spec


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    file_cfg = _load_config_file(args.config)
    seed = _resolve_seed(args.seed, file_cfg)
    print(f"resolved master seed: {seed}", file=sys.stderr)

    if args.command == "closed-forms":
        payload = _merge(args, file_cfg,
                         ["family", "a", "p_minus", "p_plus", "k_plus", "k_minus",
                          "m", "mu_minus", "mu_plus"])
    elif args.command == "forest":
        payload = _merge(args, file_cfg, ["level_max", "col_lo", "col_hi", "window"])
        payload["substrate"] = _substrate_payload(args, file_cfg)
        payload["seed"] = seed
    elif args.command == "root-dist":
        payload = _merge(args, file_cfg,
                         ["a", "replicas", "checkpoint_start", "max_level", "agree",
                          "tv_band", "max_exclusion_rate", "threads"])
        payload["substrate"] = _substrate_payload(args, file_cfg)
        payload["seed"] = seed
    elif args.command == "walk-dist":
        payload = _merge(args, file_cfg, ["p", "side", "a", "replicas", "xs", "threads"])
        payload["seed"] = seed
    elif args.command == "height-tail":
        payload = _merge(args, file_cfg,
                         ["model", "samples", "n_max", "fit_lo", "fit_hi", "batch",
                          "threads"])
        payload["seed"] = seed
    elif args.command == "dual":
        payload = _merge(args, file_cfg,
                         ["m", "replicas", "n", "alpha", "max_nc_rate", "batch",
                          "threads"])
        payload["seed"] = seed
    elif args.command == "transform":
        payload = _merge(args, file_cfg,
                         ["family", "p_minus", "p_plus", "k_plus", "k_minus", "a",
                          "s_values", "u_values", "n_max", "samples_per_term",
                          "tolerance"])
        payload["seed"] = seed
    else:  # pragma: no cover
        print(f"unknown command {args.command!r}", file=sys.stderr)
        return 2

    return _dispatch(args.server, args.command, payload, args.out)


if __name__ == "__main__":
    sys.exit(main())
