"""Command-line front end: ``coexist <subcommand> --config scenario.toml``.

Every table cell comes from a library call; this module only selects, formats
and writes. Exit status is 0 on success, 2 for configuration errors and 3 for
numerical failures (including failed ``--verify`` cross-checks).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfg
from . import fiber as fib
from . import interference as itf
from . import qkd
from . import scenario as sc
from .errors import (ConfigurationError, ContractError, DomainError, GeometryError,
                     IntegrationError)
from .interference import Direction
from .units import nm_to_thz, thz_to_nm

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
FLOAT_FORMAT = "{:.10g}"

ODE_RTOL = 5e-3  # closed form vs ODE, per mechanism
GMCS_TOL_BITS = 1e-3  # asymptotic vs V_A = 1e6
SYMPLECTIC_TOL = 1e-10


class VerificationError(Exception):
    pass


# ---------------------------------------------------------------------------
# output


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT.format(float(value))
    return value


class Table:
    def __init__(self, columns):
        self.columns = list(columns)
        self.rows = []

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row length does not match the header")
        self.rows.append([_fmt(v) for v in values])

    def render(self, fmt: str = "csv") -> str:
        buf = io.StringIO()
        if fmt == "csv":
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(self.columns)
            writer.writerows(self.rows)
        else:
            for row in self.rows:
                rec = {k: (float(v) if isinstance(v, str) and _is_number(v) else v)
                       for k, v in zip(self.columns, row)}
                buf.write(json.dumps(rec) + "\n")
        return buf.getvalue()


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


# ---------------------------------------------------------------------------
# helpers


def _directions(args, scenario: sc.Scenario) -> tuple[Direction, ...]:
    if args.direction is None:
        return scenario.directions
    if args.direction == "both":
        return (Direction.FORWARD, Direction.BACKWARD)
    return (Direction.parse(args.direction),)


def _protocols(args, loaded) -> tuple[sc.Protocol, ...]:
    if args.protocol is None:
        return loaded.run.protocols
    return (sc.Protocol.parse(args.protocol),)


def _load(args) -> cfg.LoadedConfig:
    if args.config is None:
        bundled = cfg.bundled_configs()
        if "reference_c" not in bundled:
            raise ConfigurationError("no --config given and no bundled reference config found")
        args.config = str(bundled["reference_c"])
    loaded = cfg.load(args.config, oh_scale=args.oh_scale)
    if loaded.run.output and not args.output:
        args.output = str(Path(args.config).parent / loaded.run.output)
    directions = _directions(args, loaded.scenario)
    return replace(loaded, scenario=loaded.scenario.replace(directions=directions))


def _log(msg: str):
    print(msg, file=sys.stderr)


ODE_BUDGET = 2e6  # FWM terms times integration steps, per verify point


def _ode_cost(scenario: sc.Scenario, f_thz: float) -> float:
    link = itf.sample_link(scenario.plan, scenario.fiber, f_thz)
    terms = itf.fwm_terms(scenario.plan, link)
    if len(terms) == 0:
        return 0.0
    steps = scenario.length_km * np.abs(terms.mismatch.delta_beta).max() / (0.5 * np.pi)
    return len(terms) * steps


def _verify_points(scenario: sc.Scenario, lam: np.ndarray, count: int = 5) -> np.ndarray:
    """Up to ``count`` evenly spread sweep points outside the classical band.

    Points where the forward ODE would need more than ``ODE_BUDGET`` work
    (many fast-oscillating FWM terms) are skipped; the test suite covers those.
    """
    if lam.size == 0:
        return lam
    if scenario.plan.active:
        lo, hi = scenario.plan.band()
        f = nm_to_thz(lam)
        margin = scenario.plan.spacing_thz
        lam = lam[(f < lo - margin) | (f > hi + margin)]
    if lam.size > count and Direction.FORWARD in scenario.directions:
        # cheap pre-thinning before the per-point cost estimate
        lam = lam[np.linspace(0, lam.size - 1, min(lam.size, 8 * count)).round().astype(int)]
        lam = np.array([x for x in lam if _ode_cost(scenario, float(nm_to_thz(x))) <= ODE_BUDGET])
    if lam.size <= count:
        return lam
    return lam[np.linspace(0, lam.size - 1, count).round().astype(int)]


def _verify_ode(scenario: sc.Scenario, lam: np.ndarray):
    worst = 0.0
    for x in _verify_points(scenario, lam):
        f = float(nm_to_thz(x))
        for d in scenario.directions:
            closed = itf.total_noise(scenario.plan, scenario.fiber, f, scenario.length_km, d,
                                     scenario.fwm_kernel)
            ode = itf.propagate_ode(scenario.plan, scenario.fiber, f, scenario.length_km, d)
            for name in ("sprs", "fwm", "leakage"):
                a, b = getattr(closed, name), getattr(ode, name)
                scale = max(abs(a), abs(b))
                if scale > 0:
                    worst = max(worst, abs(a - b) / scale)
    if worst > ODE_RTOL:
        raise VerificationError(f"closed form vs ODE: relative error {worst:.3g} > {ODE_RTOL}")
    _log(f"verify: closed form vs ODE ok (max relative error {worst:.2e})")


def _verify_gmcs(result: sc.SweepResult, protocols):
    worst_bits = 0.0
    worst_eig = 0.0
    for p in protocols:
        if p.detection is None:
            continue
        for d in result.directions:
            T = result.transmittance[0]
            xi = result.excess_noise[d][0]
            for j in np.linspace(0, T.size - 1, min(T.size, 5)).round().astype(int):
                if not 0 < T[j] < 1:
                    continue
                a = qkd.gmcs_skr_asymptotic(T[j], xi[j], p.detection, clamp=False)
                b = qkd.gmcs_skr_finite(1e6, T[j], xi[j], p.detection, clamp=False)
                worst_bits = max(worst_bits, abs(a - b))
                cm = qkd.conditional_covariance(1e3, T[j], xi[j], p.detection)
                closed = np.array(qkd.symplectic_eigs(cm))
                dense = np.array(qkd.symplectic_eigs_dense(cm.matrix))
                worst_eig = max(worst_eig, float(np.max(np.abs(closed - dense) / dense)))
    if worst_bits > GMCS_TOL_BITS:
        raise VerificationError(f"GMCS asymptotic vs finite V_A: {worst_bits:.3g} bits")
    if worst_eig > SYMPLECTIC_TOL:
        raise VerificationError(f"symplectic closed form vs dense: {worst_eig:.3g}")
    _log(f"verify: GMCS asymptotic vs finite V_A ok ({worst_bits:.2e} bits); "
         f"symplectic eigenvalues ok ({worst_eig:.2e})")


def _verify_bb84():
    r = qkd.bb84_skr(qkd.BB84_QBER_THRESHOLD, 1.0, clamp=False)
    if abs(r) > 1e-9 or qkd.bb84_skr(0.0, 0.3) != 0.15:
        raise VerificationError("BB84 threshold or zero-QBER rate check failed")
    _log("verify: BB84 threshold and zero-QBER rate ok")


# ---------------------------------------------------------------------------
# subcommands


def cmd_fiber_profile(args) -> Table:
    loaded = _load(args)
    fiber = loaded.scenario.fiber
    lam = loaded.run.wavelengths_nm
    if args.min_nm is not None or args.max_nm is not None or args.step_nm is not None:
        lo = args.min_nm if args.min_nm is not None else float(lam[0]) if lam.size else 1260.0
        hi = args.max_nm if args.max_nm is not None else float(lam[-1]) if lam.size else 1675.0
        lam = cfg._grid(lo, hi, args.step_nm or 1.0)
    t = Table(["wavelength_nm", "frequency_thz", "n_core", "n_eff", "a_eff_um2",
               "beta2_ps2_per_km", "gamma_per_w_km", "rayleigh_per_km", "alpha_db_per_km"])
    for x in lam:
        t.add(x, float(nm_to_thz(x)), fib.refractive_index(fiber, x), fib.effective_index(fiber, x),
              fib.effective_area(fiber, x), fib.beta2(fiber, x), fib.gamma(fiber, x),
              fib.rayleigh_coeff(fiber, x), fib.attenuation_db(fiber, x))
    if args.verify and lam.size:
        worst = 0.0
        for x in lam[:: max(1, lam.size // 5)]:
            a = fib.beta2(fiber, x)
            b = fib.beta2(fiber, x, rel_step=2e-4)
            worst = max(worst, abs(a - b) / max(abs(a), 1e-3))
        if worst > 1e-4:
            raise VerificationError(f"beta2 step-size sensitivity {worst:.3g}")
        _log(f"verify: beta2 finite-difference stability ok ({worst:.2e})")
    return t


def cmd_noise_sweep(args) -> Table:
    loaded = _load(args)
    s = loaded.scenario
    res = sc.noise_spectrum(s, loaded.run.wavelengths_nm, snap=loaded.run.snap)
    slot_hz = s.plan.slot_bandwidth_ghz * 1e9
    t = Table(["wavelength_nm", "direction", "deallocated_index", "sprs_w", "fwm_w",
               "leakage_w", "total_w", "psd_w_per_hz"])
    for d in res.directions:
        parts = res.noise[d]
        total = res.total_noise(d)[0]
        for j, x in enumerate(res.wavelength_nm):
            t.add(x, d.value, res.deallocated[j], parts["sprs"][0, j], parts["fwm"][0, j],
                  parts["leakage"][0, j], total[j], total[j] / slot_hz)
    if args.verify:
        _verify_ode(s, res.wavelength_nm)
    return t


def cmd_skr_sweep(args) -> Table:
    loaded = _load(args)
    s = loaded.scenario
    protocols = _protocols(args, loaded)
    res = sc.skr_vs_wavelength(s, loaded.run.wavelengths_nm, protocols, snap=loaded.run.snap)
    t = Table(["wavelength_nm", "direction", "protocol", "transmittance", "qber",
               "excess_noise_snu", "skr_bits_per_symbol", "skr_loss_limited"])
    for d in res.directions:
        for p in protocols:
            rate = res.rate(p, d)[0]
            limit = res.limit(p)[0]
            for j, x in enumerate(res.wavelength_nm):
                t.add(x, d.value, p.value, res.transmittance[0, j], res.qber[d][0, j],
                      res.excess_noise[d][0, j], rate[j], limit[j])
    for msg in res.diagnostics:
        _log(f"note: {msg}")
    if args.verify:
        _verify_ode(s, res.wavelength_nm)
        _verify_gmcs(res, protocols)
        _verify_bb84()
    return t


def cmd_skr_map(args) -> Table:
    loaded = _load(args)
    s = loaded.scenario
    protocols = _protocols(args, loaded)
    res = sc.skr_map(s, loaded.run.wavelengths_nm, loaded.run.lengths_km, protocols,
                     snap=loaded.run.snap)
    t = Table(["length_km", "wavelength_nm", "direction", "protocol", "skr_bits_per_symbol"])
    for d in res.directions:
        for p in protocols:
            rate = res.rate(p, d)
            for m, length in enumerate(res.length_km):
                for j, x in enumerate(res.wavelength_nm):
                    t.add(length, x, d.value, p.value, rate[m, j])
    for msg in res.diagnostics:
        _log(f"note: {msg}")
    if args.verify:
        _verify_gmcs(replace(res, transmittance=res.transmittance[-1:],
                             excess_noise={d: v[-1:] for d, v in res.excess_noise.items()}),
                     protocols)
        _verify_bb84()
    return t


def cmd_band_average(args) -> Table:
    loaded = _load(args)
    s = loaded.scenario
    protocols = _protocols(args, loaded)
    t = Table(["center_nm", "width_nm", "direction", "protocol", "skr_band_average"])
    for d in s.directions:
        for p in protocols:
            for width in loaded.run.band_widths_nm:
                curve = sc.band_average_curve(s, loaded.run.band_centers_nm, width, p, d)
                for c, v in zip(loaded.run.band_centers_nm, curve):
                    t.add(c, width, d.value, p.value, v)
    if args.verify:
        # a band narrower than one slot must reproduce the single-slot rate
        c = float(loaded.run.band_centers_nm[len(loaded.run.band_centers_nm) // 2])
        d = s.directions[0]
        p = protocols[0]
        avg = sc.band_average_skr(s, c, 0.0, p, d)
        f = float(s.plan.snap(nm_to_thz(c)))
        single = sc.skr_vs_wavelength(s.replace(directions=(d,)), [float(thz_to_nm(f))], (p,))
        ref = float(single.rate(p, d)[0, 0])
        if not np.isclose(avg, ref, rtol=1e-12, atol=0):
            raise VerificationError("single-slot band average differs from point rate")
        _log("verify: single-slot band average ok")
    return t


def cmd_multi_band(args) -> Table:
    loaded = _load(args)
    base = loaded.scenario
    protocols = _protocols(args, loaded)
    src = loaded.document.get("plan", {}).get("fill", {})
    power = src.get("power_dbm", -2.0)
    leak = loaded.document.get("plan", {}).get("leakage_floor_dbm_per_ghz", -100.0)
    scenarios = {}
    for band in loaded.run.multi_band:
        plan = sc.reference_plan(band, power, base.plan.spacing_ghz, leak,
                                 anchor_thz=base.plan.anchor_thz)
        scenarios[band] = base.replace(plan=plan, name=f"{band}-loaded")
    results = sc.multi_band_compare(scenarios, loaded.run.wavelengths_nm, protocols)
    t = Table(["loading", "wavelength_nm", "direction", "protocol", "total_noise_w",
               "skr_bits_per_symbol"])
    for band, res in results.items():
        for d in res.directions:
            total = res.total_noise(d)[0]
            for p in protocols:
                rate = res.rate(p, d)[0]
                for j, x in enumerate(res.wavelength_nm):
                    t.add(band, x, d.value, p.value, total[j], rate[j])
    if args.verify:
        for band, s in scenarios.items():
            _verify_ode(s, loaded.run.wavelengths_nm)
    return t


def cmd_fwm_tools(args) -> Table:
    counts = args.channels
    density_n = args.density_channels
    if args.config is not None:
        loaded = cfg.load(args.config)
        counts = counts or list(loaded.run.fwm_channels)
        density_n = density_n or loaded.run.fwm_density_channels
    counts = counts or [3, 8, 16, 32]
    columns = ["n_channels", "index", "offset", "count", "normalized_count", "density"]
    if args.verify:
        columns.append("count_bruteforce")
    t = Table(columns)
    mismatches = 0
    for n in counts:
        offsets, normalized = itf.fwm_count_normalized(n)
        for idx, off, norm in zip(range(-n + 1, 2 * n - 1), offsets, normalized):
            row = [n, idx, off, itf.fwm_count(n, idx), norm, float(itf.fwm_density(off))]
            if args.verify:
                brute = itf.fwm_count_bruteforce(n, idx)
                mismatches += brute != row[3]
                row.append(brute)
            t.add(*row)
    if args.verify:
        if mismatches:
            raise VerificationError(f"FWM count closed form disagrees with enumeration "
                                    f"in {mismatches} cases")
        n = density_n or 512
        off, norm = itf.fwm_count_normalized(n)
        dev = float(np.max(np.abs(norm - itf.fwm_density(off))))
        _log(f"verify: FWM counts match enumeration; density deviation at N={n}: {dev:.3g}")
    return t


def cmd_validate(args) -> list[str]:
    """Lint a config; returns findings as ``LEVEL CODE: message`` strings."""
    findings = []
    path = Path(args.config) if args.config else None
    if path is None:
        return ["ERROR E-CONFIG: --config is required"]
    try:
        loaded = cfg.load(path, oh_scale=args.oh_scale)
    except ConfigurationError as exc:
        msg = str(exc)
        code = "E-COLLIDE" if "E-COLLIDE" in msg else "E-SCHEMA" if "invalid configuration" in msg \
            else "E-CONFIG"
        return [f"ERROR {code}: {msg.replace('E-COLLIDE: ', '')}"]
    except (GeometryError, ValueError) as exc:
        return [f"ERROR E-CONFIG: {exc}"]
    s = loaded.scenario
    table = s.fiber.raman
    active = s.plan.active
    probes = []
    q = s.plan.quantum
    if q is not None:
        probes.append(("quantum channel", q.frequency))
    lam = loaded.run.wavelengths_nm
    if lam.size:
        probes += [("sweep start", float(nm_to_thz(lam[0]))),
                   ("sweep end", float(nm_to_thz(lam[-1])))]
    for what, f in probes:
        for ch in active:
            if abs(ch.frequency - f) < 0.5 * s.plan.slot_bandwidth_ghz * 1e-3 * (1 - 1e-9):
                if what == "quantum channel":
                    findings.append(f"ERROR E-COLLIDE: quantum channel {q.index} inside active "
                                    f"classical slot {ch.index}")
        if active:
            worst = max(abs(ch.frequency - f) for ch in active)
            if worst > table.max_detuning:
                findings.append(
                    f"WARNING W-RAMAN-SUPPORT: {what} at {float(thz_to_nm(f)):.2f} nm is "
                    f"{worst:.2f} THz from a classical channel; table ends at "
                    f"{table.max_detuning:g} THz (SpRS beyond is taken as 0)")
    lo, hi = fib.ATTENUATION_RANGE_NM
    if lam.size and (lam[0] < lo or lam[-1] > hi):
        findings.append(f"ERROR E-RANGE: sweep wavelengths leave the fiber model ({lo}-{hi} nm)")
    return findings


COMMANDS = {
    "fiber-profile": cmd_fiber_profile,
    "noise-sweep": cmd_noise_sweep,
    "skr-sweep": cmd_skr_sweep,
    "skr-map": cmd_skr_map,
    "band-average": cmd_band_average,
    "multi-band": cmd_multi_band,
    "fwm-tools": cmd_fwm_tools,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="scenario TOML (default: bundled "
                        "reference C-band config)")
    common.add_argument("--output", metavar="PATH", help="write the table here instead of stdout")
    common.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    common.add_argument("--direction", choices=("fwd", "bwd", "both"))
    common.add_argument("--protocol", choices=[p.value for p in sc.Protocol])
    common.add_argument("--verify", action="store_true", help="run embedded oracle cross-checks")
    common.add_argument("--oh-scale", type=float, metavar="FLOAT",
                        help="override the OH absorption scale of the fiber")

    parser = argparse.ArgumentParser(prog="coexist", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    fp = sub.add_parser("fiber-profile", parents=[common], help="fiber parameters vs wavelength")
    fp.add_argument("--min-nm", type=float)
    fp.add_argument("--max-nm", type=float)
    fp.add_argument("--step-nm", type=float)
    sub.add_parser("noise-sweep", parents=[common], help="interference vs wavelength")
    sub.add_parser("skr-sweep", parents=[common], help="key rates vs wavelength")
    sub.add_parser("skr-map", parents=[common], help="key rates vs wavelength and length")
    sub.add_parser("band-average", parents=[common], help="QKD-band averaged key rates")
    sub.add_parser("multi-band", parents=[common], help="compare S/C/L classical loading")
    ft = sub.add_parser("fwm-tools", parents=[common], help="FWM matching counts and density")
    ft.add_argument("--channels", type=int, action="append", metavar="N",
                    help="number of classical channels (repeatable)")
    ft.add_argument("--density-channels", type=int, metavar="N")
    sub.add_parser("validate", parents=[common], help="schema and physics lint")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            findings = cmd_validate(args)
            for line in findings:
                print(line)
            if any(line.startswith("ERROR") for line in findings):
                return EXIT_CONFIG
            if not findings:
                print("ok")
            return EXIT_OK
        if args.command == "fwm-tools" and (args.direction or args.protocol):
            raise ConfigurationError("fwm-tools takes no --direction or --protocol")
        if args.command == "fwm-tools" and args.oh_scale is not None:
            raise ConfigurationError("fwm-tools takes no --oh-scale")
        table = COMMANDS[args.command](args)
        text = table.render(args.format)
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            try:
                sys.stdout.write(text)
                sys.stdout.flush()
            except BrokenPipeError:
                sys.stdout = None  # downstream closed early, e.g. piped into head
        return EXIT_OK
    except (ConfigurationError, GeometryError) as exc:
        _log(f"configuration error: {exc}")
        return EXIT_CONFIG
    except (VerificationError, DomainError, ContractError, IntegrationError,
            FloatingPointError) as exc:
        _log(f"numerical failure: {exc}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
