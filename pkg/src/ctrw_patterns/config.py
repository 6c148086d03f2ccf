"""Experiment configuration files.

A config is an INI document with typed sections::

    [experiment]
    kind = react-diffuse          ; diffuse | react-diffuse | dispersion | predict | classify

    [network]
    generator = BA                ; BA | WS | ring | complete | star | path | edge-list
    J = 50
    k = 3
    p = 0.1                       ; WS only
    seed = 1
    ; path = graph.txt            ; edge-list only, relative to this file

    [laplacian]
    variant = CaseB               ; CaseA | CaseB
    alpha = 1
    rescale = true                ; multiply species rates by J / sum(k)

    [kinetics]
    model = gierer-meinhardt      ; none | logistic | linear | gierer-meinhardt
    rates = 1/256, 1              ; one transport rate per species
    ; further keys are model parameters, e.g. mu = 5/256

    [initial]
    kind = perturbed              ; homogeneous | perturbed | uniform
    amplitude = 0.01
    seed = 0

    [integrator]
    method = RK45
    s = window-centre             ; a number, or the geometric centre of the Turing window
    t_max = 1e5

    [analysis]
    s_min = 1e-4
    s_max = 1e2
    s_points = 200

    [output]
    dir = out                     ; relative to this file

Numbers may be written as fractions (``1/256``).  Every problem found is
reported with its ``section.key`` path before any computation starts.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import kinetics
from .dynamics import IntegratorConfig
from .network import GeneratorConfig, InvalidParameters

KINDS = ("diffuse", "react-diffuse", "dispersion", "predict", "classify")
GENERATORS = GeneratorConfig.VARIANTS + ("edge-list",)
INITIAL_KINDS = ("homogeneous", "perturbed", "uniform")
WINDOW_CENTRE = "window-centre"
SECTIONS = ("experiment", "network", "laplacian", "kinetics", "initial", "integrator", "analysis", "output")


class ConfigError(ValueError):
    """One or more invalid fields; ``problems`` holds ``(path, message)`` pairs."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(f"{path}: {msg}" for path, msg in self.problems))


@dataclass(frozen=True)
class NetworkSpec:
    generator: str = "BA"
    J: int = 50
    k: int = 3
    p: float = 0.1
    seed: int = 0
    path: str | None = None

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(self.generator, self.J, self.k, self.p, self.seed)


@dataclass(frozen=True)
class LaplacianSpec:
    variant: str = "CaseA"
    alpha: float = 1.0
    rescale: bool = False


@dataclass(frozen=True)
class KineticsSpec:
    model: str = "none"
    rates: tuple[float, ...] = (1.0,)
    params: dict = field(default_factory=dict)

    def build(self) -> kinetics.ReactionModel:
        return kinetics.make_model(self.model, **self.params)


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "homogeneous"
    amplitude: float = 0.01
    low: float = 0.5
    high: float = 1.5
    seed: int = 0


@dataclass(frozen=True)
class AnalysisSpec:
    s_min: float = 1e-4
    s_max: float = 1e2
    s_points: int = 200
    method: str = "auto"
    workers: int = 1
    deviation_threshold: float = 0.1


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    network: NetworkSpec
    laplacian: LaplacianSpec
    kinetics: KineticsSpec
    initial: InitialSpec
    integrator: IntegratorConfig
    analysis: AnalysisSpec
    output_dir: Path
    s_spec: float | str = 1.0
    base_dir: Path = Path(".")

    def to_ini(self) -> str:
        """Canonical text form; loading it back gives an equal config."""
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["experiment"] = {"kind": self.kind}
        net = {"generator": self.network.generator}
        if self.network.generator == "edge-list":
            net["path"] = self.network.path
        else:
            net.update(J=str(self.network.J), k=str(self.network.k), p=_fmt(self.network.p),
                       seed=str(self.network.seed))
        cp["network"] = net
        cp["laplacian"] = {"variant": self.laplacian.variant, "alpha": _fmt(self.laplacian.alpha),
                           "rescale": str(self.laplacian.rescale).lower()}
        kin = {"model": self.kinetics.model, "rates": ", ".join(_fmt(r) for r in self.kinetics.rates)}
        kin.update({k: _fmt(v) for k, v in sorted(self.kinetics.params.items())})
        cp["kinetics"] = kin
        cp["initial"] = {k: _fmt(v) if isinstance(v, float) else str(v)
                         for k, v in dataclasses.asdict(self.initial).items()}
        integ = {}
        for f in dataclasses.fields(IntegratorConfig):
            v = getattr(self.integrator, f.name)
            if f.name == "s":
                v = self.s_spec
            if v is None:
                continue
            integ[f.name] = _fmt(v) if isinstance(v, float) else str(v).lower() if isinstance(v, bool) else str(v)
        cp["integrator"] = integ
        cp["analysis"] = {k: _fmt(v) if isinstance(v, float) else str(v)
                          for k, v in dataclasses.asdict(self.analysis).items()}
        cp["output"] = {"dir": os.path.relpath(self.output_dir, self.base_dir)}
        lines = []
        for section in cp.sections():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}" for k, v in cp[section].items())
            lines.append("")
        return "\n".join(lines)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("inf" if x > 0 else "-inf")
    return str(x)


class _Reader:
    """Typed access to a ConfigParser that records problems instead of raising."""

    def __init__(self, parser: configparser.ConfigParser):
        self.cp = parser
        self.problems: list[tuple[str, str]] = []
        self.used: set[tuple[str, str]] = set()

    def raw(self, section, key):
        if self.cp.has_option(section, key):
            self.used.add((section, key))
            return self.cp.get(section, key).strip()
        return None

    def error(self, section, key, msg):
        self.problems.append((f"{section}.{key}", msg))

    def number(self, section, key, default, kind=float, check=None, describe=""):
        text = self.raw(section, key)
        if text is None:
            return default
        try:
            value = _parse_number(text, kind)
        except ValueError:
            self.error(section, key, f"expected {'an integer' if kind is int else 'a number'}, got {text!r}")
            return default
        if check is not None and not check(value):
            self.error(section, key, f"must be {describe}, got {text}")
            return default
        return value

    def choice(self, section, key, default, options):
        text = self.raw(section, key)
        if text is None:
            return default
        if text not in options:
            self.error(section, key, f"unknown value {text!r}; expected one of {', '.join(options)}")
            return default
        return text

    def boolean(self, section, key, default):
        text = self.raw(section, key)
        if text is None:
            return default
        lowered = text.lower()
        if lowered in ("true", "yes", "on", "1"):
            return True
        if lowered in ("false", "no", "off", "0"):
            return False
        self.error(section, key, f"expected true or false, got {text!r}")
        return default


def _parse_number(text: str, kind=float):
    text = text.strip()
    if kind is int:
        value = float(Fraction(text))
        if not value.is_integer():
            raise ValueError(text)
        return int(value)
    if text.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return float(Fraction(text))


def _positive(x):
    return x > 0


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([("config", f"cannot read {path}: {exc.strerror or exc}")]) from exc
    return parse_config(text, base_dir=path.resolve().parent)


def parse_config(text: str, base_dir: str | os.PathLike = ".") -> ExperimentConfig:
    base_dir = Path(base_dir)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([("config", f"not a valid INI document: {exc.message}")]) from exc
    r = _Reader(cp)
    for section in cp.sections():
        if section not in SECTIONS:
            r.problems.append((section, f"unknown section; expected one of {', '.join(SECTIONS)}"))

    if not cp.has_option("experiment", "kind"):
        r.error("experiment", "kind", "missing; expected one of " + ", ".join(KINDS))
    kind = r.choice("experiment", "kind", "diffuse", KINDS)

    # network
    generator = r.choice("network", "generator", "BA", GENERATORS)
    net_path = r.raw("network", "path")
    if generator == "edge-list":
        if net_path is None:
            r.error("network", "path", "required for generator = edge-list")
        elif not (base_dir / net_path).is_file():
            r.error("network", "path", f"file {net_path!r} does not exist")
    network = NetworkSpec(
        generator=generator,
        J=r.number("network", "J", 50, int, lambda v: v >= 1, "a positive integer"),
        k=r.number("network", "k", 3, int, lambda v: v >= 0, "nonnegative"),
        p=r.number("network", "p", 0.1, float, lambda v: 0 <= v <= 1, "in [0, 1]"),
        seed=r.number("network", "seed", 0, int, lambda v: 0 <= v < 2**64, "in [0, 2^64)"),
        path=net_path,
    )
    if generator != "edge-list":
        try:
            network.generator_config()
        except InvalidParameters as exc:
            r.problems.append(("network", str(exc)))

    # laplacian
    laplacian = LaplacianSpec(
        variant=r.choice("laplacian", "variant", "CaseA", ("CaseA", "CaseB")),
        alpha=r.number("laplacian", "alpha", 1.0, float, _positive, "positive"),
        rescale=r.boolean("laplacian", "rescale", False),
    )

    # kinetics
    default_model = "none" if kind == "diffuse" else None
    model_name = r.raw("kinetics", "model") or default_model
    model = None
    params = {}
    if model_name is None:
        r.error("kinetics", "model", f"missing; expected one of {', '.join(kinetics.MODELS)}")
    elif model_name not in kinetics.MODELS:
        r.error("kinetics", "model", f"unknown model {model_name!r}; expected one of {', '.join(kinetics.MODELS)}")
    else:
        for key in cp.options("kinetics") if cp.has_section("kinetics") else []:
            if key in ("model", "rates"):
                continue
            r.used.add(("kinetics", key))
            try:
                params[key] = _parse_number(cp.get("kinetics", key), int if key == "species_count" else float)
            except ValueError:
                r.error("kinetics", key, f"expected a number, got {cp.get('kinetics', key)!r}")
        try:
            model = kinetics.make_model(model_name, **params)
        except TypeError as exc:
            r.problems.append(("kinetics", f"bad parameter for {model_name}: {exc}"))
        except ValueError as exc:
            r.problems.append(("kinetics", str(exc)))
    rates_text = r.raw("kinetics", "rates")
    m = model.species_count if model is not None else 1
    rates = (1.0,) * m
    if rates_text is not None:
        try:
            rates = tuple(_parse_number(t) for t in rates_text.split(","))
        except ValueError:
            r.error("kinetics", "rates", f"expected comma-separated numbers, got {rates_text!r}")
        else:
            if model is not None and len(rates) != m:
                r.error("kinetics", "rates", f"{model_name} has {m} species but {len(rates)} rates were given")
            if any(not (x >= 0 and math.isfinite(x)) for x in rates):
                r.error("kinetics", "rates", "rates must be finite and nonnegative")
    kin = KineticsSpec(model_name or "none", rates, params)

    # initial condition
    init_default = "uniform" if model_name == "none" else "homogeneous"
    initial = InitialSpec(
        kind=r.choice("initial", "kind", init_default, INITIAL_KINDS),
        amplitude=r.number("initial", "amplitude", 0.01, float, lambda v: 0 < v <= 0.1, "in (0, 0.1]"),
        low=r.number("initial", "low", 0.5),
        high=r.number("initial", "high", 1.5),
        seed=r.number("initial", "seed", 0, int, lambda v: 0 <= v < 2**64, "in [0, 2^64)"),
    )
    if initial.kind == "uniform" and not initial.low < initial.high:
        r.problems.append(("initial", f"uniform initial condition needs low < high, got {initial.low}, {initial.high}"))
    if model_name == "none" and initial.kind != "uniform" and kind in ("diffuse", "react-diffuse"):
        r.error("initial", "kind", "pure diffusion has no reaction steady state; use kind = uniform")
    if model is not None and model.positive_domain and initial.kind == "uniform" and initial.low <= 0:
        r.error("initial", "low", f"{model_name} needs strictly positive concentrations")

    # integrator
    s_spec: float | str = 1.0
    s_text = r.raw("integrator", "s")
    if s_text is not None:
        if s_text == WINDOW_CENTRE:
            s_spec = WINDOW_CENTRE
        else:
            try:
                s_spec = _parse_number(s_text)
                if not (s_spec >= 0 and math.isfinite(s_spec)):
                    r.error("integrator", "s", f"must be finite and nonnegative, got {s_text}")
                    s_spec = 1.0
            except ValueError:
                r.error("integrator", "s", f"expected a number or {WINDOW_CENTRE!r}, got {s_text!r}")
    defaults = IntegratorConfig()
    ikw = {"method": r.choice("integrator", "method", defaults.method, ("RK45", "RK4"))}
    for name in ("dt", "rtol", "atol", "dt_min", "dt_max", "t_max", "steady_rtol", "polish_rtol", "polish_max_shift"):
        ikw[name] = r.number("integrator", name, getattr(defaults, name), float, _positive, "positive")
    for name in ("steady_tol", "snapshot_dt"):
        ikw[name] = r.number("integrator", name, None, float, _positive, "positive")
    ikw["max_steps"] = r.number("integrator", "max_steps", defaults.max_steps, int, _positive, "positive")
    ikw["newton_polish"] = r.boolean("integrator", "newton_polish", defaults.newton_polish)
    try:
        integrator = IntegratorConfig(s=s_spec if isinstance(s_spec, float) else 1.0, **ikw)
    except ValueError as exc:
        r.problems.append(("integrator", str(exc)))
        integrator = defaults

    # analysis
    analysis = AnalysisSpec(
        s_min=r.number("analysis", "s_min", 1e-4, float, _positive, "positive"),
        s_max=r.number("analysis", "s_max", 1e2, float, _positive, "positive"),
        s_points=r.number("analysis", "s_points", 200, int, lambda v: v >= 2, "at least 2"),
        method=r.choice("analysis", "method", "auto", ("auto", "modal", "full")),
        workers=r.number("analysis", "workers", 1, int, _positive, "positive"),
        deviation_threshold=r.number("analysis", "deviation_threshold", 0.1, float, _positive, "positive"),
    )
    if not analysis.s_min < analysis.s_max:
        r.problems.append(("analysis", f"s_min must be below s_max, got {analysis.s_min} and {analysis.s_max}"))

    out = r.raw("output", "dir") or "out"

    if model is not None and model.species_count > 1 and kind == "diffuse":
        r.error("kinetics", "model", "diffuse experiments take model = none")
    if kind in ("dispersion", "classify") and model is not None:
        try:
            model.steady_state()
        except ValueError:
            r.error("kinetics", "model", f"{kind} needs a model with a homogeneous steady state")
    if s_spec == WINDOW_CENTRE and kind not in ("react-diffuse", "classify", "predict"):
        r.error("integrator", "s", f"{WINDOW_CENTRE!r} is meaningless for kind = {kind}")

    for section in cp.sections():
        if section in SECTIONS and section != "kinetics":
            for key in cp.options(section):
                if (section, key) not in r.used:
                    r.error(section, key, "unknown key")

    if r.problems:
        raise ConfigError(r.problems)
    return ExperimentConfig(kind, network, laplacian, kin, initial, integrator, analysis,
                            (base_dir / out).resolve(), s_spec, base_dir.resolve())
