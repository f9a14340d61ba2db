"""Experiment configuration documents (INI-style ``.cfg`` files).

One document carries the plant, the controller, both optimisers, output
settings and the master seed. Every key has a default, so a document may list
only what it changes. Unknown sections or keys are rejected.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from .controllers import AredParams, PiParams, RemParams
from .fluid import NetworkParams
from .ga import GaConfig
from .neural import WINDUP_LIMIT, RbfSpec
from .pso import PsoConfig
from .tuning import TUNING_HORIZON, InnerBudget

DISCIPLINES = ("droptail", "pi", "rem", "ared", "rbf", "irbf")


class ConfigError(ValueError):
    """Malformed, unknown or inconsistent configuration."""


@dataclass
class ConfigDocument:
    network: NetworkParams = field(default_factory=NetworkParams)
    discipline: str = "irbf"
    target: float = 150.0
    control_period: float = 1.0 / 160.0
    windup: float = WINDUP_LIMIT
    trapezoid: bool = False
    pi: PiParams = field(default_factory=PiParams)
    rem: RemParams = field(default_factory=RemParams)
    ared: AredParams = field(default_factory=AredParams)
    rbf: RbfSpec | None = None
    pso: PsoConfig = field(default_factory=PsoConfig)
    tuning_horizon: float = TUNING_HORIZON
    ga: GaConfig = field(default_factory=GaConfig)
    inner: InnerBudget = field(default_factory=InnerBudget)
    output_dir: str = "results"
    sample_period: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.discipline not in DISCIPLINES:
            raise ConfigError(f"unknown discipline {self.discipline!r}")
        if not 0 < self.target < self.network.buffer:
            raise ConfigError("target must lie strictly inside (0, buffer)")
        if not self.sample_period >= self.network.dt:
            raise ConfigError("sample_period must be at least dt")
        if self.pso.seed != self.seed or self.ga.seed != self.seed:
            self.pso = replace(self.pso, seed=self.seed)
            self.ga = replace(self.ga, seed=self.seed)


# --- value codecs ----------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def _bool(s: str) -> bool:
    s = s.strip().lower()
    if s in ("true", "yes", "on", "1"):
        return True
    if s in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _profile(s: str) -> tuple:
    out = []
    for item in s.split(","):
        t, n = item.split(":")
        out.append((float(t), int(n)))
    return tuple(out)


def _fmt_profile(p) -> str:
    return ", ".join(f"{t!r}:{n}" for t, n in p)


def _optional_float(s: str):
    return None if s.strip().lower() in ("auto", "none", "") else float(s)


# (section, key) -> (parser, formatter); attribute paths are resolved below
_NETWORK = {
    "capacity": float, "prop_delay": float, "buffer": float, "packet_size": int,
    "dt": float, "horizon": float, "w0": float, "q0": float,
    "delayed_drop_probability": _bool, "overflow_drops": _bool, "n_profile": _profile,
}
_CONTROLLER = {"discipline": str, "target": float, "control_period": float,
               "windup": float, "trapezoid": _bool}
_PI = {"a": float, "b": float, "sample_period": float}
_REM = {"gamma": float, "phi": float, "alpha": float, "q_ref": float}
_ARED = {"min_th": float, "max_th": float, "w_q": _optional_float, "max_p": float,
         "band": float, "interval": float, "increment": float, "decrease": float,
         "max_p_low": float, "max_p_high": float, "gentle": _bool}
_RBF = {"centers": _floats, "spreads": _floats, "weights": _floats, "integral_gain": float}
_PSO = {"swarm_size": int, "max_velocity": float, "alpha1": float, "alpha2": float,
        "inertia_start": float, "inertia_end": float, "max_iterations": int,
        "per_dimension_random": _bool, "horizon": float}
_GA = {"population": int, "elite_count": int, "crossover_count": int, "mutation_count": int,
       "crossover_fraction": float, "shrink": float, "generations": int, "neuron_min": int,
       "neuron_max": int, "sigma0": float, "inner_particles": int, "inner_iterations": int,
       "inner_horizon": float}
_OUTPUT = {"directory": str, "sample_period": float}
_EXPERIMENT = {"seed": int}

SCHEMA = {
    "network": _NETWORK, "controller": _CONTROLLER, "pi": _PI, "rem": _REM, "ared": _ARED,
    "rbf": _RBF, "pso": _PSO, "ga": _GA, "output": _OUTPUT, "experiment": _EXPERIMENT,
}


def _read_section(cp, name) -> dict:
    if not cp.has_section(name):
        return {}
    schema = SCHEMA[name]
    out = {}
    for key, raw in cp.items(name):
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in section [{name}]")
        try:
            out[key] = schema[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for [{name}] {key}: {raw!r} ({exc})") from None
    return out


def loads(text: str) -> ConfigDocument:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    unknown = set(cp.sections()) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    s = {name: _read_section(cp, name) for name in SCHEMA}
    try:
        net = NetworkParams(**s["network"])
        ctrl = s["controller"]
        pso_kw = dict(s["pso"])
        tuning_horizon = pso_kw.pop("horizon", TUNING_HORIZON)
        ga_kw = dict(s["ga"])
        inner = InnerBudget(
            particles=ga_kw.pop("inner_particles", InnerBudget.particles),
            iterations=ga_kw.pop("inner_iterations", InnerBudget.iterations),
            horizon=ga_kw.pop("inner_horizon", InnerBudget.horizon),
        )
        lo = ga_kw.pop("neuron_min", GaConfig.neuron_range[0])
        hi = ga_kw.pop("neuron_max", GaConfig.neuron_range[1])
        seed = s["experiment"].get("seed", 0)
        rbf = None
        if cp.has_section("rbf"):
            r = s["rbf"]
            if "weights" not in r:
                raise ConfigError("[rbf] needs at least 'weights'")
            n = len(r["weights"])
            default = RbfSpec.evenly_spaced(n)
            rbf = RbfSpec(r.get("centers", default.centers), r.get("spreads", default.spreads),
                          r["weights"], r.get("integral_gain", 0.0))
        target = ctrl.get("target", 150.0)
        return ConfigDocument(
            network=net,
            discipline=ctrl.get("discipline", "irbf"),
            target=target,
            control_period=ctrl.get("control_period", 1.0 / 160.0),
            windup=ctrl.get("windup", WINDUP_LIMIT),
            trapezoid=ctrl.get("trapezoid", False),
            pi=PiParams(**s["pi"]),
            rem=RemParams(**s["rem"]),
            ared=AredParams(target=target, **s["ared"]),
            rbf=rbf,
            pso=PsoConfig(seed=seed, **pso_kw),
            tuning_horizon=tuning_horizon,
            ga=GaConfig(neuron_range=(lo, hi), seed=seed, **ga_kw),
            inner=inner,
            output_dir=s["output"].get("directory", "results"),
            sample_period=s["output"].get("sample_period", 0.01),
            seed=seed,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def dumps(doc: ConfigDocument) -> str:
    """Serialise every setting; ``loads(dumps(doc))`` reproduces ``doc``."""
    n = doc.network
    sections = {
        "network": {k: getattr(n, k) for k in _NETWORK},
        "controller": {"discipline": doc.discipline, "target": doc.target,
                       "control_period": doc.control_period, "windup": doc.windup,
                       "trapezoid": doc.trapezoid},
        "pi": {k: getattr(doc.pi, k) for k in _PI},
        "rem": {k: getattr(doc.rem, k) for k in _REM},
        "ared": {k: getattr(doc.ared, k) for k in _ARED},
    }
    if doc.rbf is not None:
        sections["rbf"] = {k: getattr(doc.rbf, k) for k in _RBF}
    sections["pso"] = {k: getattr(doc.pso, k) for k in _PSO if k != "horizon"}
    sections["pso"]["horizon"] = doc.tuning_horizon
    ga = {k: getattr(doc.ga, k) for k in _GA if hasattr(doc.ga, k)}
    ga["neuron_min"], ga["neuron_max"] = doc.ga.neuron_range
    ga["inner_particles"] = doc.inner.particles
    ga["inner_iterations"] = doc.inner.iterations
    ga["inner_horizon"] = doc.inner.horizon
    sections["ga"] = {k: ga[k] for k in _GA}
    sections["output"] = {"directory": doc.output_dir, "sample_period": doc.sample_period}
    sections["experiment"] = {"seed": doc.seed}

    buf = io.StringIO()
    for name, values in sections.items():
        buf.write(f"[{name}]\n")
        for key, value in values.items():
            if key == "n_profile":
                text = _fmt_profile(value)
            elif key == "w_q" and value is None:
                text = "auto"
            else:
                text = _fmt(value)
            buf.write(f"{key} = {text}\n")
        buf.write("\n")
    return buf.getvalue()


PRESETS = ("table2_rbf", "table2_irbf", "table3_baselines")


def preset_text(name: str) -> str:
    name = name[:-4] if name.endswith(".cfg") else name
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    return resources.files("aqmfluid").joinpath("presets", f"{name}.cfg").read_text()


def load(path) -> ConfigDocument:
    """Read a config file; a bare preset name falls back to the packaged preset."""
    p = Path(path)
    if p.is_file():
        return loads(p.read_text())
    stem = p.name[:-4] if p.name.endswith(".cfg") else p.name
    if stem in PRESETS and p.parent == Path("."):
        return loads(preset_text(stem))
    raise FileNotFoundError(f"config file not found: {path}")


def save(doc: ConfigDocument, path) -> Path:
    path = Path(path)
    path.write_text(dumps(doc))
    return path
