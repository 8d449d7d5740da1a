"""Command-line front end: synth -> process -> fit -> report.

Exit codes: 0 ok, 2 configuration, 3 file format, 4 data.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .errors import DegenerateInputError, FormatError
from .fitting import FLOOR_K_DB, EmpiricalCdf, fit_bimodal_gmm, gmm_cdf, pool_k_values
from .pipeline import envelope_report, process_ctf
from .scenarios import (
    N_C,
    N_FREQ_BINS,
    Q,
    ScenarioProfile,
    builtin_profiles,
    get_profile,
    load_profiles,
    profiles_to_json,
)
from .synth import DEFAULT_TAP_SPACING, SynthSpec, sinusoidal_gain, synthesize

log = logging.getLogger("v2vkfactor")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FORMAT = 3
EXIT_DATA = 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class ExperimentConfig:
    profile: ScenarioProfile
    duration_s: float = 10.0
    seed: int = 0
    out_dir: Path = Path(".")
    n_c: int = N_C
    q: int = Q
    stride: int | None = None
    invalid_k: str = "floor"
    tap_spacing: int = DEFAULT_TAP_SPACING
    shadowing_db: float = 0.0

    def validate(self) -> None:
        if self.n_c < 2 or self.q < 1:
            raise CliError("--nc must be >= 2 and --q >= 1", EXIT_CONFIG)
        if self.q * (self.n_c - 1) + 1 > N_FREQ_BINS:
            raise CliError(f"{self.q} sub-bands of {self.n_c} bins exceed {N_FREQ_BINS} frequency bins", EXIT_CONFIG)
        if self.stride is not None and self.stride < 1:
            raise CliError("--stride must be >= 1", EXIT_CONFIG)
        if self.invalid_k not in ("exclude", "floor"):
            raise CliError("--invalid-k must be 'exclude' or 'floor'", EXIT_CONFIG)
        if self.duration_s <= 0:
            raise CliError("--duration-s must be positive", EXIT_CONFIG)
        if not 0 <= self.seed < 2**64:
            raise CliError("--seed must be a 64-bit unsigned integer", EXIT_CONFIG)
        if self.tap_spacing < 1:
            raise CliError("--tap-spacing must be >= 1", EXIT_CONFIG)


def thread_count() -> int:
    raw = os.environ.get("V2V_THREADS", "")
    try:
        n = int(raw) if raw else (os.cpu_count() or 1)
    except ValueError:
        raise CliError(f"V2V_THREADS must be an integer, got {raw!r}", EXIT_CONFIG)
    return max(1, n)


def slug(name: str) -> str:
    return name.replace(" - ", "_").replace(" ", "-")


def _catalog(args) -> list[ScenarioProfile]:
    if getattr(args, "profiles", None):
        try:
            return load_profiles(args.profiles)
        except (OSError, ValueError, KeyError) as exc:
            raise CliError(f"cannot load profiles from {args.profiles}: {exc}", EXIT_CONFIG)
    return builtin_profiles()


def _lookup(name: str, catalog) -> ScenarioProfile:
    try:
        return get_profile(name, catalog)
    except KeyError as exc:
        raise CliError(str(exc.args[0]), EXIT_CONFIG)


# -- subcommands -------------------------------------------------------------

def cmd_profiles(args) -> int:
    text = profiles_to_json(_catalog(args))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = ExperimentConfig(
        profile=_lookup(args.scenario, _catalog(args)),
        duration_s=args.duration_s,
        seed=args.seed,
        out_dir=Path(args.out_dir),
        n_c=args.nc,
        q=args.q,
        tap_spacing=args.tap_spacing,
        shadowing_db=args.shadowing_db,
    )
    cfg.validate()
    spec = SynthSpec(profile=cfg.profile, duration=cfg.duration_s, seed=cfg.seed, n_c=cfg.n_c,
                     tap_spacing=cfg.tap_spacing)
    if spec.S < cfg.profile.s_k:
        raise CliError(f"duration gives {spec.S} snapshots, fewer than one block ({cfg.profile.s_k})", EXIT_CONFIG)
    if cfg.shadowing_db > 0:
        spec.large_scale = sinusoidal_gain(spec.S, 10 * cfg.profile.s_ls, cfg.shadowing_db)
    res = synthesize(spec, dtype=np.complex64)

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.name or f"{slug(cfg.profile.name)}_seed{cfg.seed}"
    ctf_path = cfg.out_dir / f"{stem}.ctf"
    io.write_ctf(ctf_path, res.ctf)
    io.write_json(ctf_path.with_suffix(".json"), {
        "format": "V2VCTF1",
        "profile": cfg.profile.to_dict(),
        "seed": cfg.seed,
        "duration_s": cfg.duration_s,
        "S": res.ctf.S,
        "N": res.ctf.N,
        "n_c": cfg.n_c,
        "tap_spacing": cfg.tap_spacing,
        "tap_bins": res.tap_bins,
        "tail_pdp": list(spec.tail_pdp),
        "drift_cycles": spec.drift_cycles,
        "shadowing_db": cfg.shadowing_db,
        "k_block_length": res.ktraj.block_length,
        "k_blocks_db": res.ktraj.block_k_db.tolist(),
    })
    log.info("wrote %s (S=%d, N=%d)", ctf_path, res.ctf.S, res.ctf.N)
    print(ctf_path)
    return EXIT_OK


def cmd_process(args) -> int:
    ctf_path = Path(args.ctf)
    if not ctf_path.exists():
        raise CliError(f"no such file: {ctf_path}", EXIT_FORMAT)
    try:
        ctf = io.read_ctf(ctf_path)
    except FormatError as exc:
        raise CliError(str(exc), EXIT_FORMAT)

    sidecar = ctf_path.with_suffix(".json")
    meta = io.read_json(sidecar) if sidecar.exists() else {}
    if args.scenario:
        profile = _lookup(args.scenario, _catalog(args))
    elif "profile" in meta:
        profile = ScenarioProfile.from_dict(meta["profile"])
    else:
        raise CliError("no --scenario given and no sidecar JSON next to the CTF", EXIT_CONFIG)
    cfg = ExperimentConfig(profile=profile, out_dir=Path(args.out_dir), n_c=args.nc, q=args.q, stride=args.stride)
    cfg.validate()
    if ctf.N < cfg.q * (cfg.n_c - 1) + 1:
        raise CliError(f"CTF has {ctf.N} frequency bins, too few for {cfg.q} x {cfg.n_c}", EXIT_FORMAT)
    if ctf.S <= profile.s_ls + profile.s_k:
        raise CliError(f"CTF has {ctf.S} snapshots; need more than s_ls + s_k = {profile.s_ls + profile.s_k}",
                       EXIT_DATA)

    try:
        res = process_ctf(ctf, profile.s_k, profile.s_ls, cfg.n_c, cfg.q, cfg.stride, threads=thread_count(),
                          keep_cir=not args.no_cir)
    except DegenerateInputError as exc:
        raise CliError(str(exc), EXIT_DATA)

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.name or ctf_path.stem
    if res.cir is not None:
        io.write_cir(cfg.out_dir / f"{stem}.cir", res.cir)
    io.write_kfield_csv(cfg.out_dir / f"{stem}_kfield.csv", res.field)
    io.write_json(cfg.out_dir / f"{stem}_kfield.json", {"scenario": profile.name, **res.field.summary()})

    if res.cir is not None:
        taps = meta.get("tap_bins", list(range(min(5, cfg.n_c))))
        records, rows = envelope_report(res.cir, taps, profile.s_k, max(cfg.q // 2 - 1, 0))
        io.write_json(cfg.out_dir / f"{stem}_envelope.json", records)
        io.write_xy_csv(cfg.out_dir / f"{stem}_weibull.csv", ("time_s", "tap_bin", "ln_z", "ln_neg_ln_1_minus_F"),
                        *zip(*rows) if rows else ((), (), (), ()))
    print(cfg.out_dir / f"{stem}_kfield.csv")
    return EXIT_OK


def cmd_fit(args) -> int:
    catalog = _catalog(args)
    profile = _lookup(args.scenario, catalog)
    if args.invalid_k not in ("exclude", "floor"):
        raise CliError("--invalid-k must be 'exclude' or 'floor'", EXIT_CONFIG)
    pooled = []
    for p in args.fields:
        if not Path(p).exists():
            raise CliError(f"no such file: {p}", EXIT_FORMAT)
        try:
            cols = io.read_kfield_csv(p)
        except FormatError as exc:
            raise CliError(str(exc), EXIT_FORMAT)
        pooled.append(pool_k_values(cols["k_db"], cols["valid"], args.invalid_k, FLOOR_K_DB))
    k = np.concatenate(pooled) if pooled else np.zeros(0)
    try:
        fit = fit_bimodal_gmm(k)
    except ValueError as exc:
        raise CliError(f"cannot fit mixture: {exc}", EXIT_DATA)

    ref = profile.gmm.to_dict()
    got = fit.params.to_dict()
    result = {
        "scenario": profile.name,
        "runs": len(args.fields),
        "invalid_k": args.invalid_k,
        **fit.to_dict(),
        "reference": {**ref, "epsilon_bound": profile.epsilon_bound, "runs": profile.runs},
        "deltas": {key: got[key] - ref[key] for key in ref},
    }
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.name or slug(profile.name)
    io.write_json(out_dir / f"{stem}_fit.json", result)
    emp = EmpiricalCdf(k)
    grid = np.unique(emp.values)
    io.write_xy_csv(out_dir / f"{stem}_cdf.csv", ("k_db", "empirical_cdf", "fitted_cdf"),
                    grid, emp(grid), gmm_cdf(fit.params, grid))
    print(out_dir / f"{stem}_fit.json")
    return EXIT_OK


REPORT_COLUMNS = ("scenario", "w", "mu1_db", "sigma1_db", "mu2_db", "sigma2_db", "epsilon", "runs")


def cmd_report(args) -> int:
    order = {name: i for i, name in enumerate(p.name for p in _catalog(args))}
    fits = []
    for i, p in enumerate(args.fits):
        try:
            fits.append((i, io.read_json(p)))
        except (OSError, ValueError) as exc:
            print(f"warning: skipping {p}: {exc}", file=sys.stderr)
    fits.sort(key=lambda t: (order.get(t[1].get("scenario"), len(order)), t[0]))
    rows = [[f.get(c) for c in REPORT_COLUMNS] for _, f in fits]

    def cell(v):
        return f"{v:.3g}" if isinstance(v, float) else str(v)

    widths = [max(len(c), *(len(cell(r[i])) for r in rows)) if rows else len(c) for i, c in enumerate(REPORT_COLUMNS)]
    print("  ".join(c.ljust(w) for c, w in zip(REPORT_COLUMNS, widths)))
    for r in rows:
        print("  ".join(cell(v).ljust(w) for v, w in zip(r, widths)))
    if args.csv:
        io.write_xy_csv(args.csv, REPORT_COLUMNS, *zip(*rows) if rows else [()] * len(REPORT_COLUMNS))
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="v2vk", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--profiles", help="JSON scenario catalog to use instead of the built-in one")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profiles", help="export the scenario catalog as JSON")
    p.add_argument("--out")
    p.set_defaults(func=cmd_profiles)

    p = sub.add_parser("synth", help="synthesize a transfer function with known K trajectory")
    p.add_argument("--scenario", required=True)
    p.add_argument("--duration-s", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nc", type=int, default=N_C)
    p.add_argument("--q", type=int, default=Q)
    p.add_argument("--tap-spacing", type=int, default=DEFAULT_TAP_SPACING)
    p.add_argument("--shadowing-db", type=float, default=0.0,
                   help="amplitude of slow sinusoidal large-scale fading (dB); 0 disables")
    p.add_argument("--name", help="output file stem")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("process", help="sub-band transform, preprocessing and sliding K estimation")
    p.add_argument("ctf")
    p.add_argument("--scenario")
    p.add_argument("--nc", type=int, default=N_C)
    p.add_argument("--q", type=int, default=Q)
    p.add_argument("--stride", type=int)
    p.add_argument("--no-cir", action="store_true", help="skip writing the processed CIR container")
    p.add_argument("--name", help="output file stem")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("fit", help="fit the bi-modal mixture to pooled K fields")
    p.add_argument("fields", nargs="*")
    p.add_argument("--scenario", required=True)
    p.add_argument("--invalid-k", choices=("exclude", "floor"), default="floor")
    p.add_argument("--name", help="output file stem")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="tabulate fit results in catalog order")
    p.add_argument("fits", nargs="+")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
