"""Command-line entry point: batch computations with machine-readable output.

One flat job config per run (JSON file via --config, individual flags
override file values).  Commands:

  wave      sample one wave profile                    -> profile JSON
  whitham   modulation matrix, speeds, classification  -> report JSON
  smallamp  small-oscillation expansion quantities     -> JSON or CSV row
  bloch     origin spectral curves and slopes          -> JSON
  evolve    time evolution diagnostics                 -> JSON lines
  sweep     classification over a parameter grid       -> CSV
  verify    slope vs characteristic-speed cross-check  -> table + JSON

Every output records the fully resolved config in its header.  Outputs are
written to a temporary file and renamed, so failures leave no partial file.
Exit codes: 0 success, 1 domain/config errors (and failed verification),
2 convergence failures.  Plots are out of scope: the CSV/JSON artifacts are
plot-ready.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from .bloch import origin_slopes
from .errors import ConduitError, ConvergenceError, DomainError
from .potential import WaveParams
from .quadrature import reconstruct_profile
from .reparam import from_kma
from .smallamp import stokes_data
from .verify import matched_speed_table
from .whitham import FAILED, SweepRecord, sweep_csv, whitham_matrix
from .evolution import evolve as _evolve
from .evolution import seeded_sideband_initial, traveling_wave_initial

_COMMANDS = ("wave", "whitham", "smallamp", "bloch", "evolve", "sweep", "verify")

# Per-command config schema: required keys and optional keys with defaults.
_SCHEMAS: dict[str, tuple[set[str], dict]] = {
    "wave": ({"a", "E", "c"}, {"n": 256}),
    "whitham": ({"a", "E", "c"}, {"n": 256}),
    "smallamp": ({"k", "M", "A"}, {}),
    "bloch": ({"a", "E", "c"}, {"n": 128, "xi_max": 1e-3}),
    "evolve": (
        {"a", "E", "c", "tmax"},
        {"n": 256, "periods": 1, "dt": None, "record_every": None,
         "noise": 0.0, "rtol": 1e-10, "keep_u": False},
    ),
    "sweep": (
        set(),
        {"n": 256, "M": None, "A": None, "k_min": None, "k_max": None,
         "a": None, "c": None, "E_min": None, "E_max": None, "count": None},
    ),
    "verify": ({"a", "E", "c"}, {"n": 128, "xi_max": 1e-3, "tol": 1e-3}),
}

_FLAG_KEYS = ("a", "E", "c", "k", "M", "A", "n", "xi_max", "tmax", "dt")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="conduitwave",
        description="Periodic traveling waves of the conduit equation: "
        "profiles, modulation matrices, Bloch spectra, time evolution.",
    )
    ap.add_argument("--command", choices=_COMMANDS, help="job to run")
    ap.add_argument("--config", help="JSON file with one flat job config")
    ap.add_argument("--out", help="output path (default: stdout)")
    ap.add_argument("--format", choices=("json", "csv"), dest="fmt")
    ap.add_argument("--seed", type=int, help="seed for randomized sampling")
    ap.add_argument("--a", type=float)
    ap.add_argument("--E", type=float)
    ap.add_argument("--c", type=float)
    ap.add_argument("--k", type=float)
    ap.add_argument("--M", type=float)
    ap.add_argument("--A", type=float)
    ap.add_argument("--n", type=int)
    ap.add_argument("--xi-max", type=float, dest="xi_max")
    ap.add_argument("--tmax", type=float)
    ap.add_argument("--dt", type=float)
    return ap


def _resolve_config(args: argparse.Namespace) -> dict:
    """Merge config file and flags, validate keys, apply defaults."""
    cfg: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config file: {exc}") from exc
        if not isinstance(loaded, dict):
            raise DomainError("config file must hold one flat JSON object")
        cfg.update(loaded)
    for key in _FLAG_KEYS:
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    if args.command:
        cfg["command"] = args.command
    if args.out:
        cfg["out"] = args.out
    if args.fmt:
        cfg["format"] = args.fmt
    if args.seed is not None:
        cfg["seed"] = args.seed

    command = cfg.get("command")
    if command not in _COMMANDS:
        raise DomainError(f"missing or unknown command: {command!r}")
    required, optional = _SCHEMAS[command]
    general = {"command", "out", "format", "seed"}
    allowed = required | set(optional) | general
    unknown = set(cfg) - allowed
    if unknown:
        raise DomainError(
            f"unknown config keys for {command}: {sorted(unknown)}"
        )
    missing = required - set(cfg)
    if missing:
        raise DomainError(f"missing config keys for {command}: {sorted(missing)}")
    for key, default in optional.items():
        cfg.setdefault(key, default)
    cfg.setdefault("format", "csv" if command == "sweep" else "json")
    cfg.setdefault("seed", 0)
    cfg.setdefault("out", None)
    return cfg


def _json_body(cfg: dict, result) -> str:
    doc = {"config": {k: v for k, v in cfg.items() if k != "out" or v},
           "result": result}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _csv_body(cfg: dict, csv_text: str) -> str:
    header = json.dumps({k: v for k, v in cfg.items() if v is not None},
                        sort_keys=True)
    return f"# config: {header}\n{csv_text}"


def _params(cfg: dict) -> WaveParams:
    return WaveParams(a=cfg["a"], E=cfg["E"], c=cfg["c"])


def _run_wave(cfg: dict) -> str:
    profile = reconstruct_profile(_params(cfg), n=cfg["n"])
    return _json_body(cfg, profile.to_dict())


def _run_whitham(cfg: dict) -> str:
    wm = whitham_matrix(_params(cfg), n=cfg["n"])
    return _json_body(cfg, wm.to_dict())


def _run_smallamp(cfg: dict) -> str:
    data = stokes_data(cfg["k"], cfg["M"], cfg["A"])
    if cfg["format"] == "csv":
        d = data.to_dict()
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = ["k", "M", "A", "omega0", "omega2", "domega0_dk",
                "d2omega0_dk2", "n", "Re(lambda1)", "Im(lambda1)",
                "Re(lambda+)", "Im(lambda+)", "Re(lambda-)", "Im(lambda-)"]
        writer.writerow(cols)
        writer.writerow(
            [d["k"], d["M"], d["A"], d["omega0"], d["omega2"],
             d["domega0_dk"], d["d2omega0_dk2"], d["n"],
             *d["lambda1"], *d["lambda_plus"], *d["lambda_minus"]]
        )
        return _csv_body(cfg, buf.getvalue())
    return _json_body(cfg, data.to_dict())


def _run_bloch(cfg: dict) -> str:
    profile = reconstruct_profile(_params(cfg), n=cfg["n"])
    xi = cfg["xi_max"]
    result = origin_slopes(profile, xi_list=(-xi, -xi / 2, xi / 2, xi),
                           n=cfg["n"])
    return _json_body(cfg, result.to_dict())


def _run_evolve(cfg: dict) -> str:
    profile = reconstruct_profile(_params(cfg), n=max(cfg["n"] // cfg["periods"], 32))
    if cfg["noise"]:
        u0, L = seeded_sideband_initial(
            profile, cfg["periods"], cfg["n"], noise=cfg["noise"],
            seed=cfg["seed"],
        )
    else:
        u0, L = traveling_wave_initial(profile, cfg["periods"], cfg["n"])
    traj = _evolve(
        u0, L, cfg["tmax"], dt=cfg["dt"], record_every=cfg["record_every"],
        rtol=cfg["rtol"], carrier=cfg["periods"] if cfg["periods"] > 1 else None,
        keep_u=cfg["keep_u"],
    )
    header = json.dumps({"config": {k: v for k, v in cfg.items() if v is not None}},
                        sort_keys=True)
    return header + "\n" + traj.to_json_lines()


def _sweep_points(cfg: dict):
    k_keys = all(cfg[k] is not None for k in ("M", "A", "k_min", "k_max", "count"))
    e_keys = all(cfg[k] is not None for k in ("a", "c", "E_min", "E_max", "count"))
    if k_keys == e_keys:
        raise DomainError(
            "sweep needs either {M, A, k_min, k_max, count} or "
            "{a, c, E_min, E_max, count}"
        )
    if k_keys:
        for k in np.linspace(cfg["k_min"], cfg["k_max"], int(cfg["count"])):
            yield ("kma", float(k))
    else:
        for E in np.linspace(cfg["E_min"], cfg["E_max"], int(cfg["count"])):
            yield ("aEc", float(E))


def _run_sweep(cfg: dict) -> str:
    records = []
    guess = None
    for i, (mode, val) in enumerate(_sweep_points(cfg)):
        try:
            if mode == "kma":
                p = from_kma(val, cfg["M"], cfg["A"], guess=guess)
                guess = p
            else:
                p = WaveParams(a=cfg["a"], E=val, c=cfg["c"])
            wm = whitham_matrix(p, n=cfg["n"])
            records.append(
                SweepRecord(index=i, params=p, kmq=wm.kmq, c=wm.c,
                            speeds=wm.speeds, classification=wm.classification)
            )
        except ConduitError as exc:
            records.append(
                SweepRecord(index=i, params=None, kmq=None, c=None, speeds=None,
                            classification=FAILED,
                            reason=f"{type(exc).__name__}: {exc}")
            )
    return _csv_body(cfg, sweep_csv(records))


def _run_verify(cfg: dict) -> tuple[str, bool]:
    xi = cfg["xi_max"]
    report = matched_speed_table(
        _params(cfg), n_bloch=cfg["n"], xi_list=(-xi, -xi / 2, xi / 2, xi),
        tol=cfg["tol"],
    )
    print(report.table())
    return _json_body(cfg, report.to_dict()), report.passed


def _write_output(path: str | None, body: str) -> None:
    if path is None:
        sys.stdout.write(body)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(body)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        command = cfg["command"]
        if cfg["format"] == "csv" and command not in ("sweep", "smallamp"):
            raise DomainError(f"command {command} has no CSV schema; use json")
        ok = True
        if command == "wave":
            body = _run_wave(cfg)
        elif command == "whitham":
            body = _run_whitham(cfg)
        elif command == "smallamp":
            body = _run_smallamp(cfg)
        elif command == "bloch":
            body = _run_bloch(cfg)
        elif command == "evolve":
            body = _run_evolve(cfg)
        elif command == "sweep":
            body = _run_sweep(cfg)
        else:
            body, ok = _run_verify(cfg)
        _write_output(cfg["out"], body)
        if not ok:
            _fail("VerificationFailed", "speed match exceeded tolerance")
            return 1
        return 0
    except ConvergenceError as exc:
        _fail(type(exc).__name__, str(exc))
        return 2
    except ConduitError as exc:
        _fail(type(exc).__name__, str(exc))
        return 1


def _fail(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
