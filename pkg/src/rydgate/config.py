"""Experiment configuration files.

A configuration is an INI file with the sections below. Frequencies and rates
are ordinary frequencies in MHz, times in us; conversion to angular units
happens inside :mod:`rydgate.model`.

``[experiment]``  ``kind`` (fig2, fig3, fig4, gate, sweep, motion), ``output``
``[physical]``    ``omega``, ``delta``, ``v_r``, ``tau`` and the rates
                  ``gamma0``, ``gamma1``, ``gammar``, ``gammard``; ``gamma_p``
                  may replace ``gamma0``/``gamma1`` and is split evenly
``[solver]``      ``dt``, ``steps_per_tau``, ``max_dt``, ``record_every``, ``tolerance``
``[sweep]``       ``parameter`` and a comma separated ``values`` list
``[trap]``        ``omega0`` (kHz), ``r0`` (nm), ``r`` (um)
``[spectrum]``    ``grid_size``
``[inset]``       ``gamma_p`` list and ``tau`` list
``[gate]``        ``dissipative``, ``target_phase`` (rad), ``calibration_tol``
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .model import PhysicalParams
from .motion import TrapParams
from .propagate import SolverConfig

KINDS = ("fig2", "fig3", "fig4", "gate", "sweep", "motion")
PHYSICAL_KEYS = tuple(f.name for f in fields(PhysicalParams))
SWEEPABLE = PHYSICAL_KEYS + ("gamma_p",)
_SOLVER_KEYS = ("dt", "steps_per_tau", "max_dt", "record_every", "tolerance")


@dataclass(frozen=True)
class SweepAxis:
    parameter: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.parameter not in SWEEPABLE:
            raise ConfigError(f"unknown sweep parameter {self.parameter!r}; expected one of {SWEEPABLE}")
        if not self.values:
            raise ConfigError("sweep values must be non-empty")

    def apply(self, params: PhysicalParams, value: float) -> PhysicalParams:
        if self.parameter == "gamma_p":
            return params.replace(gamma0=value / 2.0, gamma1=value / 2.0)
        return params.replace(**{self.parameter: value})


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    physical: PhysicalParams
    solver: SolverConfig = field(default_factory=SolverConfig)
    output_path: str = "out.csv"
    sweep: SweepAxis | None = None
    trap: TrapParams | None = None
    grid_size: int = 200
    inset_gamma_p: tuple[float, ...] = ()
    inset_tau: tuple[float, ...] = ()
    dissipative: bool = False
    target_phase: float = math.pi
    calibration_tol: float = 1e-6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if not self.output_path:
            raise ConfigError("output path must be non-empty")
        if self.kind == "motion" and self.trap is None:
            raise ConfigError("motion experiments need a [trap] section")
        if self.kind == "fig4":
            if self.sweep is None or self.sweep.parameter != "v_r":
                raise ConfigError("fig4 needs a [sweep] over v_r")
            if bool(self.inset_gamma_p) != bool(self.inset_tau):
                raise ConfigError("[inset] needs both gamma_p and tau lists")
        if self.kind == "sweep" and self.sweep is None:
            raise ConfigError("sweep experiments need a [sweep] section")
        if self.grid_size < 100:
            raise ConfigError("grid_size must be at least 100")
        if not self.calibration_tol > 0:
            raise ConfigError("calibration_tol must be positive")

    def series(self) -> list[tuple[float | None, PhysicalParams]]:
        """Physical parameters for each sweep value, ascending; a single unlabelled entry without a sweep."""
        if self.sweep is None:
            return [(None, self.physical)]
        return [(v, self.sweep.apply(self.physical, v)) for v in sorted(self.sweep.values)]


def _float(section, key: str, default=None) -> float:
    raw = section.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"[{section.name}] is missing {key!r}")
        return default
    if not raw.strip():
        raise ConfigError(f"[{section.name}] {key} is empty")
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} is not a number") from exc


def _float_list(section, key: str) -> tuple[float, ...]:
    raw = section.get(key, "")
    items = [item.strip() for item in raw.replace("\n", ",").split(",")]
    items = [item for item in items if item]
    if not items:
        raise ConfigError(f"[{section.name}] {key} must list at least one value")
    try:
        return tuple(float(item) for item in items)
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} contains a non-number") from exc


def _check_keys(section, allowed) -> None:
    unknown = set(section.keys()) - set(allowed)
    if unknown:
        raise ConfigError(f"[{section.name}] has unknown keys {sorted(unknown)}")


def _physical(section) -> PhysicalParams:
    _check_keys(section, PHYSICAL_KEYS + ("gamma_p",))
    if "gamma_p" in section and ("gamma0" in section or "gamma1" in section):
        raise ConfigError("give either gamma_p or gamma0/gamma1, not both")
    values = {key: _float(section, key) for key in ("omega", "delta", "v_r", "tau")}
    for key in ("gamma0", "gamma1", "gammar", "gammard"):
        values[key] = _float(section, key, 0.0)
    if "gamma_p" in section:
        gamma_p = _float(section, "gamma_p")
        values["gamma0"] = values["gamma1"] = gamma_p / 2.0
    return PhysicalParams(**values)


def _solver(section) -> SolverConfig:
    if section is None:
        return SolverConfig()
    _check_keys(section, _SOLVER_KEYS)
    defaults = SolverConfig()
    try:
        return SolverConfig(
            dt=_float(section, "dt") if "dt" in section else None,
            steps_per_tau=int(_float(section, "steps_per_tau", float(defaults.steps_per_tau))),
            max_dt=_float(section, "max_dt", defaults.max_dt),
            record_every=int(_float(section, "record_every", float(defaults.record_every))),
            tolerance=_float(section, "tolerance", defaults.tolerance),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    known = {"experiment", "physical", "solver", "sweep", "trap", "spectrum", "inset", "gate"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"{source}: unknown sections {sorted(unknown)}")
    for required in ("experiment", "physical"):
        if not parser.has_section(required):
            raise ConfigError(f"{source}: missing [{required}] section")

    exp = parser["experiment"]
    _check_keys(exp, ("kind", "output"))
    kwargs = {
        "kind": exp.get("kind", "").strip(),
        "output_path": exp.get("output", "").strip(),
        "physical": _physical(parser["physical"]),
        "solver": _solver(parser["solver"] if parser.has_section("solver") else None),
    }
    if parser.has_section("sweep"):
        sec = parser["sweep"]
        _check_keys(sec, ("parameter", "values"))
        kwargs["sweep"] = SweepAxis(sec.get("parameter", "").strip(), _float_list(sec, "values"))
    if parser.has_section("trap"):
        sec = parser["trap"]
        _check_keys(sec, ("omega0", "r0", "r"))
        kwargs["trap"] = TrapParams(_float(sec, "omega0"), _float(sec, "r0"), _float(sec, "r"))
    if parser.has_section("spectrum"):
        sec = parser["spectrum"]
        _check_keys(sec, ("grid_size",))
        kwargs["grid_size"] = int(_float(sec, "grid_size"))
    if parser.has_section("inset"):
        sec = parser["inset"]
        _check_keys(sec, ("gamma_p", "tau"))
        kwargs["inset_gamma_p"] = _float_list(sec, "gamma_p")
        kwargs["inset_tau"] = _float_list(sec, "tau")
    if parser.has_section("gate"):
        sec = parser["gate"]
        _check_keys(sec, ("dissipative", "target_phase", "calibration_tol"))
        try:
            kwargs["dissipative"] = sec.getboolean("dissipative", False)
        except ValueError as exc:
            raise ConfigError(f"[gate] dissipative: {exc}") from exc
        kwargs["target_phase"] = _float(sec, "target_phase", math.pi)
        kwargs["calibration_tol"] = _float(sec, "calibration_tol", 1e-6)
    return ExperimentConfig(**kwargs)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_list(values) -> str:
    return ", ".join(_fmt(v) for v in values)


def serialize_config(cfg: ExperimentConfig) -> str:
    """INI text that :func:`parse_config` maps back to an equal configuration."""
    lines = ["[experiment]", f"kind = {cfg.kind}", f"output = {cfg.output_path}", "", "[physical]"]
    lines += [f"{key} = {_fmt(getattr(cfg.physical, key))}" for key in PHYSICAL_KEYS]
    lines += ["", "[solver]"]
    if cfg.solver.dt is not None:
        lines.append(f"dt = {_fmt(cfg.solver.dt)}")
    lines += [
        f"steps_per_tau = {cfg.solver.steps_per_tau}",
        f"max_dt = {_fmt(cfg.solver.max_dt)}",
        f"record_every = {cfg.solver.record_every}",
        f"tolerance = {_fmt(cfg.solver.tolerance)}",
    ]
    if cfg.sweep is not None:
        lines += ["", "[sweep]", f"parameter = {cfg.sweep.parameter}", f"values = {_fmt_list(cfg.sweep.values)}"]
    if cfg.trap is not None:
        t = cfg.trap
        lines += ["", "[trap]", f"omega0 = {_fmt(t.omega0)}", f"r0 = {_fmt(t.r0)}", f"r = {_fmt(t.r)}"]
    lines += ["", "[spectrum]", f"grid_size = {cfg.grid_size}"]
    if cfg.inset_gamma_p:
        lines += ["", "[inset]", f"gamma_p = {_fmt_list(cfg.inset_gamma_p)}", f"tau = {_fmt_list(cfg.inset_tau)}"]
    lines += [
        "",
        "[gate]",
        f"dissipative = {'true' if cfg.dissipative else 'false'}",
        f"target_phase = {_fmt(cfg.target_phase)}",
        f"calibration_tol = {_fmt(cfg.calibration_tol)}",
    ]
    return "\n".join(lines) + "\n"
