"""TOML scenario documents: schema validation and conversion to library objects.

Every quantity carries its unit in the key name (``power_dbm``,
``spacing_ghz``...). Unknown keys are rejected. Relative data paths are looked
up next to the config file, then in ``COEXIST_DATA_DIR``, then among the
bundled data files.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import fiber as fib
from . import qkd
from .errors import ConfigurationError
from .interference import Channel, ChannelPlan, Direction
from .scenario import BANDS, REFERENCE_BANDS, Protocol, QkdConfig, Scenario
from .units import dbm_to_watt

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


NUM = {"type": "number"}
POS = {"type": "number", "exclusiveMinimum": 0}
NONNEG = {"type": "number", "minimum": 0}
UNIT_INTERVAL = {"type": "number", "exclusiveMinimum": 0, "maximum": 1}
INT = {"type": "integer"}

_RANGE = _obj({"min_nm": NUM, "max_nm": NUM, "step_nm": POS})

SCHEMA = _obj({
    "name": {"type": "string"},
    "description": {"type": "string"},
    "metadata": {"type": "object", "additionalProperties": {"type": "string"}},
    "fiber": _obj({
        "oh_scale": NONNEG,
        "gamma_ref_per_w_km": POS,
        "rayleigh_ref_per_km": POS,
        "reference_wavelength_nm": POS,
        "waveguide_dispersion": {"type": "boolean"},
        "raman_table": {"type": "string"},
        "geometry": _obj({"core_radius_um": POS, "index_contrast": POS}),
        "sellmeier": _obj({
            "b": {"type": "array", "items": NUM, "minItems": 3, "maxItems": 3},
            "resonance_um": {"type": "array", "items": POS, "minItems": 3, "maxItems": 3},
        }, required=("b", "resonance_um")),
        "attenuation": _obj({
            "rayleigh_db_um4_per_km": POS,
            "ir_amplitude_db_per_km": NONNEG,
            "ir_decay_um": POS,
            "oh_peaks": {"type": "array", "items": _obj(
                {"center_nm": POS, "fwhm_nm": POS, "height_db_per_km": NONNEG},
                required=("center_nm", "fwhm_nm", "height_db_per_km"))},
        }),
    }),
    "plan": _obj({
        "anchor_thz": POS,
        "spacing_ghz": POS,
        "slot_bandwidth_ghz": POS,
        "leakage_floor_dbm_per_ghz": NUM,
        "fill": _obj({
            "band": {"enum": sorted(BANDS)},
            "f_lo_thz": POS,
            "f_hi_thz": POS,
            "count": {"type": "integer", "minimum": 1},
            "power_dbm": NUM,
            "kurtosis": POS,
        }, required=("power_dbm",)),
        "channels": {"type": "array", "items": _obj({
            "index": INT,
            "power_dbm": NUM,
            "kurtosis": POS,
            "role": {"enum": ["classical", "quantum"]},
        }, required=("index",))},
    }),
    "qkd": _obj({
        "extra_excess_noise_snu": NONNEG,
        "dv": _obj({
            "r_det": NONNEG,
            "b_det_ghz": POS,
            "tau_det_ns": POS,
            "dark_counts": NONNEG,
            "eta_rx": UNIT_INTERVAL,
        }),
        "cv": _obj({
            "beta_ec": UNIT_INTERVAL,
            "eta_rx": UNIT_INTERVAL,
            "v_el_snu": NONNEG,
            "v_a_snu": POS,
        }),
    }),
    "run": _obj({
        "length_km": POS,
        "directions": {"type": "array", "items": {"enum": ["fwd", "bwd"]}, "minItems": 1},
        "protocols": {"type": "array", "items": {"enum": [p.value for p in Protocol]},
                      "minItems": 1},
        "fwm_kernel": {"enum": ["exact", "avg"]},
        "snap_to_grid": {"type": "boolean"},
        "wavelengths": _RANGE,
        "lengths": _obj({"min_km": NONNEG, "max_km": POS, "step_km": POS}),
        "band_average": _obj({
            "centers": _RANGE,
            "widths_nm": {"type": "array", "items": NONNEG, "minItems": 1},
        }),
        "multi_band": _obj({
            "bands": {"type": "array", "items": {"enum": ["S", "C", "L"]}, "minItems": 1},
        }),
        "extra_excess_noise": _obj({
            "values_snu": {"type": "array", "items": NONNEG, "minItems": 1},
        }),
        "fwm_tools": _obj({
            "channels": {"type": "array", "items": {"type": "integer", "minimum": 1},
                         "minItems": 1},
            "density_channels": {"type": "integer", "minimum": 1},
        }),
        "output": {"type": "string"},
    }),
})


@dataclass(frozen=True)
class RunSettings:
    wavelengths_nm: np.ndarray
    lengths_km: np.ndarray
    protocols: tuple[Protocol, ...]
    snap: bool = False
    band_centers_nm: np.ndarray = field(default_factory=lambda: np.zeros(0))
    band_widths_nm: tuple[float, ...] = ()
    multi_band: tuple[str, ...] = ("S", "C", "L")
    extra_xi: tuple[float, ...] = ()
    fwm_channels: tuple[int, ...] = (3, 8, 16, 32)
    fwm_density_channels: int = 512
    output: str | None = None


@dataclass(frozen=True)
class LoadedConfig:
    scenario: Scenario
    run: RunSettings
    source: Path | None
    document: dict


def _line_of(text: str, path) -> int | None:
    """Best-effort line number of a key path in the TOML text."""
    keys = [p for p in path if isinstance(p, str)]
    if not keys:
        return None
    table = ".".join(keys[:-1])
    leaf = keys[-1]
    in_table = not table
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        header = re.match(r"^\[\[?\s*([^\]]+?)\s*\]\]?", stripped)
        if header:
            in_table = header.group(1) == table
            if header.group(1) == ".".join(keys):
                return lineno
            continue
        if in_table and re.match(rf"^{re.escape(leaf)}\s*=", stripped):
            return lineno
    return None


def validate_document(doc: dict, text: str = "", source: str = "<config>") -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.path)))
    if not errors:
        return
    lines = []
    for err in errors:
        path = list(err.path)
        if err.validator == "additionalProperties":
            extra = re.findall(r"'([^']+)'", err.message)
            path = path + extra[:1]
        where = ".".join(str(p) for p in path) or "<root>"
        lineno = _line_of(text, path) if text else None
        loc = f"{source}:{lineno}" if lineno else source
        lines.append(f"{loc}: {where}: {err.message}")
    raise ConfigurationError("invalid configuration\n  " + "\n  ".join(lines))


def resolve_data_file(name: str, base_dir: Path | None) -> Path:
    p = Path(name)
    if p.is_absolute():
        return p
    if base_dir is not None and (base_dir / p).exists():
        return base_dir / p
    return fib.data_path(name)


def _fiber(section: dict, base_dir: Path | None) -> fib.FiberProfile:
    kw = {}
    if "gamma_ref_per_w_km" in section:
        kw["gamma_ref"] = section["gamma_ref_per_w_km"]
    if "rayleigh_ref_per_km" in section:
        kw["rayleigh_ref"] = section["rayleigh_ref_per_km"]
    if "reference_wavelength_nm" in section:
        kw["reference_wavelength"] = section["reference_wavelength_nm"]
    if "waveguide_dispersion" in section:
        kw["waveguide_dispersion"] = section["waveguide_dispersion"]
    if "raman_table" in section:
        path = resolve_data_file(section["raman_table"], base_dir)
        if not path.exists():
            raise ConfigurationError(f"Raman table not found: {section['raman_table']}")
        kw["raman"] = fib.RamanGainTable.from_file(path)
    if "geometry" in section:
        g = section["geometry"]
        base = fib.StepIndexGeometry()
        kw["geometry"] = fib.StepIndexGeometry(g.get("core_radius_um", base.core_radius),
                                               g.get("index_contrast", base.index_contrast))
    if "sellmeier" in section:
        s = section["sellmeier"]
        kw["sellmeier"] = fib.SellmeierCoefficients(tuple(s["b"]), tuple(s["resonance_um"]))
    att = fib.AttenuationModel()
    a = section.get("attenuation", {})
    peaks = tuple(fib.OHPeak(p["center_nm"], p["fwhm_nm"], p["height_db_per_km"])
                  for p in a["oh_peaks"]) if "oh_peaks" in a else att.oh_peaks
    kw["attenuation"] = fib.AttenuationModel(
        rayleigh_coeff=a.get("rayleigh_db_um4_per_km", att.rayleigh_coeff),
        ir_amplitude=a.get("ir_amplitude_db_per_km", att.ir_amplitude),
        ir_decay=a.get("ir_decay_um", att.ir_decay),
        oh_peaks=peaks,
        oh_scale=section.get("oh_scale", att.oh_scale),
    )
    return fib.FiberProfile(**kw)


def _plan(section: dict) -> ChannelPlan:
    anchor = section.get("anchor_thz", 193.1)
    spacing = section.get("spacing_ghz", 50.0)
    slot = section.get("slot_bandwidth_ghz", spacing)
    leak = float(dbm_to_watt(section.get("leakage_floor_dbm_per_ghz", -100.0)))
    common = dict(anchor_thz=anchor, spacing_ghz=spacing, slot_bandwidth_ghz=slot,
                  leakage_floor_w_per_ghz=leak)
    channels: dict[int, Channel] = {}
    if "fill" in section:
        f = section["fill"]
        if "band" in f:
            if "f_lo_thz" in f or "f_hi_thz" in f:
                raise ConfigurationError("plan.fill: give either band or f_lo_thz/f_hi_thz")
            count = f.get("count", REFERENCE_BANDS.get(f["band"]))
            if count is None:
                raise ConfigurationError(f"plan.fill: band {f['band']} needs an explicit count")
            lo, hi = BANDS[f["band"]].f_lo_thz, BANDS[f["band"]].f_hi_thz
        elif "f_lo_thz" in f and "f_hi_thz" in f and "count" in f:
            lo, hi, count = f["f_lo_thz"], f["f_hi_thz"], f["count"]
        else:
            raise ConfigurationError("plan.fill needs band, or f_lo_thz, f_hi_thz and count")
        filled = ChannelPlan.fill(lo, hi, count, float(dbm_to_watt(f["power_dbm"])),
                                  kurtosis=f.get("kurtosis", 2.0), **common)
        channels.update({ch.index: ch for ch in filled.channels})
    for entry in section.get("channels", []):
        idx = entry["index"]
        role = entry.get("role", "classical")
        power = float(dbm_to_watt(entry["power_dbm"])) if "power_dbm" in entry else 0.0
        if role == "classical" and "power_dbm" not in entry:
            raise ConfigurationError(f"plan.channels index {idx}: classical channel needs power_dbm")
        if role == "quantum" and idx in channels and channels[idx].launch_power > 0:
            raise ConfigurationError(
                f"E-COLLIDE: quantum channel {idx} sits on an active classical slot")
        channels[idx] = Channel(idx, anchor + idx * spacing * 1e-3, power,
                                entry.get("kurtosis", 2.0), role)
    return ChannelPlan(tuple(channels[k] for k in sorted(channels)), **common)


def _qkd(section: dict) -> QkdConfig:
    dv = section.get("dv", {})
    cv = section.get("cv", {})
    dv_kw = {"dark_counts": dv.get("dark_counts", 0.0), "eta_rx": dv.get("eta_rx", 1.0)}
    if "b_det_ghz" in dv and "tau_det_ns" in dv:
        dvp = qkd.DvReceiverParams.from_window(dv["b_det_ghz"], dv["tau_det_ns"], **dv_kw)
        if "r_det" in dv and not np.isclose(dv["r_det"], dvp.r_det):
            raise ConfigurationError("qkd.dv: r_det disagrees with b_det_ghz * tau_det_ns")
    else:
        dvp = qkd.DvReceiverParams(r_det=dv.get("r_det", 1.0), **dv_kw)
    cvp = qkd.CvReceiverParams(beta_ec=cv.get("beta_ec", 1.0), eta_rx=cv.get("eta_rx", 1.0),
                               v_el=cv.get("v_el_snu", 0.0), v_a=cv.get("v_a_snu"))
    return QkdConfig(dvp, cvp)


def _grid(lo, hi, step):
    if hi < lo:
        return np.zeros(0)
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def _run(section: dict) -> RunSettings:
    w = section.get("wavelengths", {})
    lam = _grid(w.get("min_nm", 1260.0), w.get("max_nm", 1675.0), w.get("step_nm", 1.0))
    ln = section.get("lengths", {})
    lengths = _grid(ln.get("min_km", 1.0), ln.get("max_km", 100.0), ln.get("step_km", 1.0))
    ba = section.get("band_average", {})
    c = ba.get("centers", {})
    centers = _grid(c.get("min_nm", 1300.0), c.get("max_nm", 1460.0), c.get("step_nm", 1.0))
    ft = section.get("fwm_tools", {})
    return RunSettings(
        wavelengths_nm=lam,
        lengths_km=lengths,
        protocols=tuple(Protocol.parse(p) for p in
                        section.get("protocols", [p.value for p in Protocol])),
        snap=section.get("snap_to_grid", False),
        band_centers_nm=centers,
        band_widths_nm=tuple(ba.get("widths_nm", [0.0, 10.0, 20.0])),
        multi_band=tuple(section.get("multi_band", {}).get("bands", ["S", "C", "L"])),
        extra_xi=tuple(section.get("extra_excess_noise", {}).get("values_snu", [])),
        fwm_channels=tuple(ft.get("channels", [3, 8, 16, 32])),
        fwm_density_channels=ft.get("density_channels", 512),
        output=section.get("output"),
    )


def build(doc: dict, base_dir: Path | None = None, source: Path | None = None,
          oh_scale: float | None = None) -> LoadedConfig:
    validate_document(doc)
    fsec = dict(doc.get("fiber", {}))
    if oh_scale is not None:
        fsec["oh_scale"] = oh_scale
    fiber = _fiber(fsec, base_dir)
    plan = _plan(doc.get("plan", {"fill": {"band": "C", "power_dbm": -2.0}}))
    run = doc.get("run", {})
    qsec = doc.get("qkd", {})
    scenario = Scenario(
        fiber=fiber,
        plan=plan,
        length_km=run.get("length_km", 25.0),
        directions=tuple(Direction.parse(d) for d in run.get("directions", ["fwd", "bwd"])),
        qkd=_qkd(qsec),
        extra_excess_noise=qsec.get("extra_excess_noise_snu", 0.0),
        fwm_kernel=run.get("fwm_kernel", "exact"),
        name=doc.get("name", ""),
        metadata=dict(doc.get("metadata", {})),
    )
    return LoadedConfig(scenario, _run(run), source, doc)


def load(path, oh_scale: float | None = None) -> LoadedConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    validate_document(doc, text, str(path))
    return build(doc, path.parent, path, oh_scale)


def bundled_configs() -> dict[str, Path]:
    """Bundled example configs keyed by file stem."""
    return {p.stem: p for p in sorted(fib.data_path("configs").glob("*.toml"))}
