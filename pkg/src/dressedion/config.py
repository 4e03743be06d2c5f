"""Run configuration: declarative documents, units, defaults, provenance.

Documents are YAML mappings (flat keys plus `noise`/`spam` sections).
Frequencies are plain Hz, times are seconds; both also accept strings with
a unit suffix ("36.5kHz", "500us").  Every field has a default annotated
with why that value was chosen; `explain_config` renders the table.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field as dc_field

import numpy as np
import yaml

from .experiments import Spam, calibrated_noise, default_scan_points
from .noise import OUNoise

TAU = 2.0 * math.pi

STATE_LABELS = ("0", "0'", "-1", "+1", "D", "B", "u", "d")
TRANSITIONS = ("-1<->0", "+1<->0", "-1<->0'", "+1<->0'")
FORMATS = ("csv", "json", "svg")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending path."""


_FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9}
_QUANTITY_RE = re.compile(
    r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([a-zA-Zµ]*)\s*$")


def parse_quantity(value, kind: str, path: str = "value") -> float:
    """Float in base units (Hz or s) from a number or unit-suffixed string."""
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected a {kind}, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(
            f"{path}: expected a number or '<number><unit>' string")
    m = _QUANTITY_RE.match(value)
    if not m:
        raise ConfigError(f"{path}: cannot parse quantity {value!r}")
    num, suffix = m.groups()
    if not suffix:
        return float(num)
    units = _FREQ_UNITS if kind == "frequency" else _TIME_UNITS
    scale = units.get(suffix.lower())
    if scale is None:
        raise ConfigError(
            f"{path}: unknown {kind} unit {suffix!r} "
            f"(accepted: {', '.join(sorted(units))})")
    return float(num) * scale


@dataclass(frozen=True)
class Field:
    name: str
    kind: str
    default: object
    provenance: str
    low: float | None = None          # inclusive unless `positive`
    high: float | None = None
    positive: bool = False
    choices: tuple | None = None
    allow_none: bool = False
    required: bool = False


def _check_range(f: Field, value: float, path: str):
    if f.positive and value <= 0:
        raise ConfigError(f"{path}: must be > 0 (got {value})")
    if f.low is not None and value < f.low:
        raise ConfigError(f"{path}: must be >= {f.low} (got {value})")
    if f.high is not None and value > f.high:
        raise ConfigError(f"{path}: must be <= {f.high} (got {value})")


def _parse_time_list(value, path: str) -> tuple:
    """Tuple of times from an explicit list or a {from, to, num} span."""
    if isinstance(value, dict):
        extra = set(value) - {"from", "to", "num"}
        if extra:
            raise ConfigError(
                f"{path}: unknown key '{sorted(extra)[0]}' in span")
        for key in ("from", "to", "num"):
            if key not in value:
                raise ConfigError(f"{path}: span needs 'from', 'to', 'num'")
        lo = parse_quantity(value["from"], "time", f"{path}.from")
        hi = parse_quantity(value["to"], "time", f"{path}.to")
        num = value["num"]
        if not isinstance(num, int) or isinstance(num, bool) or num < 2:
            raise ConfigError(f"{path}.num: must be an integer >= 2")
        return tuple(float(t) for t in np.linspace(lo, hi, num))
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{path}: expected a list of times or a span")
    if len(value) == 0:
        raise ConfigError(f"{path}: must not be empty")
    out = []
    for i, item in enumerate(value):
        t = parse_quantity(item, "time", f"{path}[{i}]")
        if t < 0:
            raise ConfigError(f"{path}[{i}]: must be >= 0 (got {t})")
        out.append(t)
    return tuple(out)


def _parse_float_list(value, path: str) -> tuple:
    """Tuple of plain numbers from a list or a {from, to, num} span."""
    if isinstance(value, dict):
        extra = set(value) - {"from", "to", "num"}
        if extra:
            raise ConfigError(
                f"{path}: unknown key '{sorted(extra)[0]}' in span")
        for key in ("from", "to", "num"):
            if key not in value:
                raise ConfigError(f"{path}: span needs 'from', 'to', 'num'")
        for key in ("from", "to"):
            v = value[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{path}.{key}: must be a number")
        num = value["num"]
        if not isinstance(num, int) or isinstance(num, bool) or num < 2:
            raise ConfigError(f"{path}.num: must be an integer >= 2")
        return tuple(float(t) for t in
                     np.linspace(value["from"], value["to"], num))
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        raise ConfigError(f"{path}: expected a non-empty list of numbers")
    out = []
    for i, item in enumerate(value):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"{path}[{i}]: must be a number")
        if item < 0:
            raise ConfigError(f"{path}[{i}]: must be >= 0 (got {item})")
        out.append(float(item))
    return tuple(out)


_POINT_KEYS = {"width_cycles": "float", "sep_cycles": "float",
               "substeps": "int", "detuning_split": "frequency"}


def _parse_points(value, path: str) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        raise ConfigError(f"{path}: expected a non-empty list of mappings")
    out = []
    for i, item in enumerate(value):
        here = f"{path}[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{here}: expected a mapping")
        point = {}
        for key, raw in item.items():
            kind = _POINT_KEYS.get(key)
            if kind is None:
                raise ConfigError(f"{here}.{key}: unknown key")
            if kind == "int":
                if not isinstance(raw, int) or isinstance(raw, bool):
                    raise ConfigError(f"{here}.{key}: must be an integer")
                if raw < 1:
                    raise ConfigError(f"{here}.{key}: must be >= 1")
                point[key] = raw
            else:
                v = parse_quantity(raw, kind, f"{here}.{key}")
                if key in ("width_cycles", "sep_cycles") and v < 0:
                    raise ConfigError(f"{here}.{key}: must be >= 0")
                point[key] = v
        out.append(point)
    return tuple(out)


_PIECE_FIELDS = {
    "pi": {"transition": ("choice", TRANSITIONS, None), "f_rabi":
           ("frequency", None, None), "phase": ("float", None, 0.0),
           "fraction": ("float", None, 1.0)},
    "ramp_in": {"f_rabi": ("frequency", None, None)},
    "ramp_out": {"f_rabi": ("frequency", None, None)},
    "hold": {"f_rabi": ("frequency", None, None),
             "duration": ("time", None, None)},
    "rf_pulse": {"f_rabi": ("frequency", None, None),
                 "rf_rabi": ("frequency", None, None),
                 "rf_detuning": ("frequency", None, 0.0),
                 "duration": ("time", None, None)},
}
# shape parameters shared by the stirap-derived pieces
_RAMP_EXTRAS = {"width_cycles": ("float", None, 5.0),
                "sep_cycles": ("float", None, 6.0),
                "substeps": ("int", None, 10),
                "relative_phase": ("float", None, 0.0),
                "width_convention": ("choice", ("half1e", "fwhm", "sigma"),
                                     "half1e")}


def _parse_pieces(value, path: str) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) == 0:
        raise ConfigError(f"{path}: expected a non-empty list of pieces")
    out = []
    for i, item in enumerate(value):
        here = f"{path}[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{here}: expected a mapping")
        kind = item.get("type")
        if kind not in _PIECE_FIELDS:
            raise ConfigError(
                f"{here}.type: expected one of {sorted(_PIECE_FIELDS)}")
        table = dict(_PIECE_FIELDS[kind])
        if kind in ("ramp_in", "ramp_out", "hold", "rf_pulse"):
            table.update(_RAMP_EXTRAS)
        piece = {"type": kind}
        for key, raw in item.items():
            if key == "type":
                continue
            if key not in table:
                raise ConfigError(f"{here}.{key}: unknown key")
            fkind, choices, _ = table[key]
            piece[key] = _parse_piece_value(raw, fkind, choices,
                                            f"{here}.{key}")
        for key, (fkind, choices, default) in table.items():
            if key in piece:
                continue
            if default is None:
                raise ConfigError(f"{here}: missing required key '{key}'")
            piece[key] = default
        if kind in ("hold", "rf_pulse") and piece["duration"] <= 0:
            raise ConfigError(f"{here}.duration: must be > 0")
        out.append(piece)
    return tuple(out)


def _parse_piece_value(raw, fkind, choices, path):
    if fkind in ("frequency", "time"):
        return parse_quantity(raw, fkind, path)
    if fkind == "int":
        if not isinstance(raw, int) or isinstance(raw, bool) or raw < 1:
            raise ConfigError(f"{path}: must be an integer >= 1")
        return raw
    if fkind == "float":
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"{path}: must be a number")
        return float(raw)
    if fkind == "choice":
        if raw not in choices:
            raise ConfigError(f"{path}: expected one of {list(choices)}")
        return raw
    raise AssertionError(fkind)


@dataclass(frozen=True)
class NoiseConfig:
    enabled: bool
    t2: float
    correlation_time: float
    amplitude_hz: float | None
    n_traj: int

    def model(self) -> OUNoise | None:
        """OUNoise instance, calibrating the amplitude from t2 if needed."""
        if not self.enabled:
            return None
        if self.amplitude_hz is not None:
            return OUNoise(amplitude=TAU * self.amplitude_hz,
                           correlation_time=self.correlation_time)
        return calibrated_noise(t2=self.t2,
                                correlation_time=self.correlation_time)


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    seed: int
    workers: int
    out: str
    formats: tuple
    params: dict
    noise: NoiseConfig | None
    spam: Spam | None
    user_keys: frozenset = dc_field(default_factory=frozenset, compare=False)


def _common_fields(exp: str) -> tuple:
    return (
        Field("seed", "int", 20260815, "root RNG seed; every trajectory and "
              "shot stream derives from it deterministically", low=0),
        Field("workers", "int", 1, "process count for trajectory ensembles; "
              "results are identical for any value", low=1),
        Field("out", "str", "out", "artifact directory"),
        Field("formats", "formats", FORMATS,
              "artifact formats (manifest is always written)"),
    )


_NOISE_PROVENANCE = {
    "enabled": "field noise toggle",
    "t2": "bare-qubit dephasing time the amplitude is calibrated against "
          "(measured upper bound of the undressed qubit)",
    "correlation_time": "noise-spectrum knee: slow against the dressing "
                        "gap, fast against second-scale holds",
    "amplitude_hz": "explicit noise amplitude; when omitted the t2 "
                    "calibration supplies it",
    "n_traj": "trajectories per ensemble average",
}

_SPAM_PROVENANCE = {
    "prep_error": "probability a shot starts fully depolarized",
    "dark_misread": "probability the target outcome reads as its opposite",
    "bright_misread": "probability a non-target outcome reads as the target",
}


@dataclass(frozen=True)
class ExperimentSpec:
    description: str
    fields: tuple
    noise_default: bool | None = None     # None: section rejected
    spam_defaults: tuple | None = None    # None: section rejected
    n_traj_default: int = 100


def _f(name, kind, default, prov, **kw):
    return Field(name, kind, default, prov, **kw)


EXPERIMENTS = {
    "fig2": ExperimentSpec(
        "transfer effectiveness vs pulse separation (93% plateau)",
        fields=(
            _f("f_rabi", "frequency", 36.5e3, "dressing amplitude at the "
               "demonstrated protection point", positive=True),
            _f("width_cycles", "float", 10.0, "pulse width (drive cycles) "
               "at which the separation plateau appears", positive=True),
            _f("substeps", "int", 10, "envelope samples per drive cycle",
               low=1),
            _f("separations", "float_list",
               (4.0, 6.0, 8.0, 10.0, 12.0, 15.0, 18.0, 20.0, 24.0, 28.0,
                32.0, 36.0, 40.0),
               "pulse separations (drive cycles); spans the plateau on "
               "[10, 20] and the falloff on both sides"),
            _f("n_reps", "int", 0, "readout shots per point; 0 reports "
               "expectation values", low=0),
        ),
        spam_defaults=(0.02, 0.05, 0.0)),
    "fig3a": ExperimentSpec(
        "protected-qubit Rabi flopping via the collective rf coupling",
        fields=(
            _f("f_rabi", "frequency", 31.8e3, "dressing amplitude used for "
               "the demonstrated protected flops", positive=True),
            _f("rf_rabi", "frequency", 500.0, "rf amplitude; the flop runs "
               "at sqrt(2) times this", positive=True),
            _f("width_cycles", "float", 7.0, "ramp width in drive cycles",
               positive=True),
            _f("durations", "time_list",
               tuple(float(t) for t in np.linspace(2e-4, 6e-3, 24)),
               "rf pulse lengths; a few flop periods"),
            _f("n_reps", "int", 0, "readout shots per point", low=0),
        ),
        noise_default=True, spam_defaults=(0.0, 0.0, 0.0)),
    "fig3b": ExperimentSpec(
        "protected-qubit Ramsey fringes at a programmed rf detuning",
        fields=(
            _f("f_rabi", "frequency", 37.3e3, "dressing amplitude used for "
               "the demonstrated fringes", positive=True),
            _f("rf_rabi", "frequency", 200.0, "rf amplitude setting the "
               "pi/2 pulse length", positive=True),
            _f("rf_detuning", "frequency", 144.4, "programmed fringe "
               "frequency"),
            _f("width_cycles", "float", 7.0, "ramp width in drive cycles",
               positive=True),
            _f("gaps", "time_list",
               tuple(float(t) for t in np.linspace(5e-4, 2e-2, 24)),
               "free-evolution gaps; a few fringe periods"),
            _f("fit_model", "str", "sinusoid", "fringe fit model",
               choices=("sinusoid", "damped_sinusoid")),
            _f("n_reps", "int", 0, "readout shots per point", low=0),
        ),
        noise_default=True, spam_defaults=(0.0, 0.0, 0.0)),
    "stirap-scan": ExperimentSpec(
        "noiseless transfer-fidelity scans over ramp-shape parameters",
        fields=(
            _f("f_rabi", "frequency", 36.5e3, "dressing amplitude of the "
               "reference transfer", positive=True),
            _f("points", "points", None, "scan points; the default grid "
               "walks the robustness plateau and its degraded corners",
               allow_none=True),
            _f("n_reps", "int", 0, "readout shots per point", low=0),
        ),
        spam_defaults=(0.0, 0.0, 0.0)),
    "sideband": ExperimentSpec(
        "gradient-mediated blue-sideband flop: full vs effective model",
        fields=(
            _f("nu", "frequency", 200e3, "trap mode frequency",
               positive=True),
            _f("eta", "float", 0.05, "gradient-induced effective "
               "Lamb-Dicke factor", positive=True, high=0.5),
            _f("dressing_rabi", "frequency", 20e3, "dressing amplitude "
               "setting the carrier suppression", positive=True),
            _f("omega_g", "frequency", None, "rf gate amplitude; when "
               "omitted, dressing/20 keeps carrier leakage below 1%",
               allow_none=True, positive=True),
            _f("delta", "frequency", 0.0, "extra detuning from the "
               "gradient-shifted sideband"),
            _f("n_fock", "int", 8, "motional levels kept; the top level is "
               "watched for truncation leakage", low=2),
            _f("n_steps_full", "int", 20000, "full-model steps over one pi "
               "time; keeps the sideband tone well sampled", low=100),
            _f("record_every", "int", 50, "steps between recorded samples",
               low=1),
            _f("top_level_limit", "float", 1e-4, "truncation-abort "
               "threshold on the top Fock level", positive=True, high=1.0),
        )),
    "comb": ExperimentSpec(
        "second-order light-shift cancellation for symmetric drive pairs",
        fields=(
            _f("omega", "frequency", 36.5e3, "dressing amplitude the "
               "detuning is measured against", positive=True),
            _f("big_delta", "frequency", None, "comb-line detuning; "
               "defaults to 10x omega (perturbative regime)",
               allow_none=True, positive=True),
            _f("peak_rabi", "frequency", None, "comb-line amplitude; "
               "defaults to omega", allow_none=True, positive=True),
        )),
    "custom": ExperimentSpec(
        "user-declared pulse schedule from a document",
        fields=(
            _f("pieces", "pieces", None, "ordered pulse pieces",
               required=True),
            _f("initial_state", "str", "0", "starting level or dressed "
               "column", choices=STATE_LABELS),
            _f("observable", "str", "0", "population reported over time",
               choices=STATE_LABELS),
            _f("relative_phase", "float", 0.0, "dressing phase defining "
               "the D/B columns used for dressed labels"),
            _f("record_every", "int", 50, "steps between recorded samples",
               low=1),
        ),
        noise_default=False),
}


def _parse_scalar(f: Field, raw, path: str):
    if raw is None:
        if f.allow_none:
            return None
        raise ConfigError(f"{path}: must not be null")
    if f.kind == "frequency" or f.kind == "time":
        v = parse_quantity(raw, f.kind, path)
        _check_range(f, v, path)
        return v
    if f.kind == "int":
        if not isinstance(raw, int) or isinstance(raw, bool):
            raise ConfigError(f"{path}: must be an integer")
        _check_range(f, raw, path)
        return raw
    if f.kind == "float":
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"{path}: must be a number")
        v = float(raw)
        _check_range(f, v, path)
        return v
    if f.kind == "bool":
        if not isinstance(raw, bool):
            raise ConfigError(f"{path}: must be true or false")
        return raw
    if f.kind == "str":
        if not isinstance(raw, str):
            raise ConfigError(f"{path}: must be a string")
        if f.choices and raw not in f.choices:
            raise ConfigError(f"{path}: expected one of {list(f.choices)}")
        return raw
    if f.kind == "formats":
        if not isinstance(raw, (list, tuple)) or not raw:
            raise ConfigError(f"{path}: expected a non-empty list")
        for fmt in raw:
            if fmt not in FORMATS:
                raise ConfigError(
                    f"{path}: unknown format {fmt!r} (accepted: "
                    f"{', '.join(FORMATS)})")
        return tuple(dict.fromkeys(raw))
    if f.kind == "time_list":
        return _parse_time_list(raw, path)
    if f.kind == "float_list":
        return _parse_float_list(raw, path)
    if f.kind == "points":
        return _parse_points(raw, path)
    if f.kind == "pieces":
        return _parse_pieces(raw, path)
    raise AssertionError(f.kind)


def _parse_section(doc, name, fields, defaults, user_keys):
    raw = doc.pop(name, None)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected a mapping")
    raw = dict(raw)
    out = {}
    for f in fields:
        path = f"{name}.{f.name}"
        if f.name in raw:
            user_keys.add(path)
            out[f.name] = _parse_scalar(f, raw.pop(f.name), path)
        else:
            out[f.name] = defaults[f.name]
    if raw:
        raise ConfigError(f"{name}.{sorted(raw)[0]}: unknown key")
    return out


def parse_config(document, experiment: str | None = None) -> RunConfig:
    """Validated RunConfig from a mapping (or YAML text) plus defaults.

    `experiment` (usually the CLI subcommand) must agree with the
    document's own `experiment` key when both are given.
    """
    if isinstance(document, str):
        document = load_document(document)
    if document is None:
        document = {}
    if not isinstance(document, dict):
        raise ConfigError("document: expected a mapping at the top level")
    doc = dict(document)
    user_keys = set()

    doc_exp = doc.pop("experiment", None)
    if doc_exp is not None:
        user_keys.add("experiment")
    if doc_exp is not None and doc_exp not in EXPERIMENTS:
        raise ConfigError(
            f"experiment: unknown experiment {doc_exp!r} "
            f"(accepted: {', '.join(sorted(EXPERIMENTS))})")
    if experiment is not None and doc_exp is not None and \
            experiment != doc_exp:
        raise ConfigError(
            f"experiment: document says {doc_exp!r} but the command "
            f"requested {experiment!r}")
    exp = experiment or doc_exp
    if exp is None:
        raise ConfigError("experiment: missing (set it in the document or "
                          "pick a subcommand)")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown experiment {exp!r}")
    spec = EXPERIMENTS[exp]

    common = {}
    for f in _common_fields(exp):
        if f.name in doc:
            user_keys.add(f.name)
            common[f.name] = _parse_scalar(f, doc.pop(f.name), f.name)
        else:
            common[f.name] = f.default

    params = {}
    for f in spec.fields:
        if f.name in doc:
            user_keys.add(f.name)
            params[f.name] = _parse_scalar(f, doc.pop(f.name), f.name)
        elif f.required:
            raise ConfigError(f"{f.name}: required for '{exp}'")
        else:
            params[f.name] = f.default

    noise = None
    if spec.noise_default is not None:
        fields = (
            Field("enabled", "bool", spec.noise_default,
                  _NOISE_PROVENANCE["enabled"]),
            Field("t2", "time", 5.3e-3, _NOISE_PROVENANCE["t2"],
                  positive=True),
            Field("correlation_time", "time", 1e-4,
                  _NOISE_PROVENANCE["correlation_time"], positive=True),
            Field("amplitude_hz", "frequency", None,
                  _NOISE_PROVENANCE["amplitude_hz"], allow_none=True,
                  positive=True),
            Field("n_traj", "int", spec.n_traj_default,
                  _NOISE_PROVENANCE["n_traj"], low=1),
        )
        defaults = {f.name: f.default for f in fields}
        got = _parse_section(doc, "noise", fields, defaults, user_keys)
        noise = NoiseConfig(**got)
    elif "noise" in doc:
        raise ConfigError(f"noise: not accepted by '{exp}'")

    spam = None
    if spec.spam_defaults is not None:
        names = ("prep_error", "dark_misread", "bright_misread")
        fields = tuple(
            Field(n, "float", d, _SPAM_PROVENANCE[n], low=0.0, high=1.0)
            for n, d in zip(names, spec.spam_defaults))
        defaults = {f.name: f.default for f in fields}
        got = _parse_section(doc, "spam", fields, defaults, user_keys)
        spam = Spam(**got)
    elif "spam" in doc:
        raise ConfigError(f"spam: not accepted by '{exp}'")

    if doc:
        raise ConfigError(f"{sorted(doc)[0]}: unknown key")
    return RunConfig(experiment=exp, seed=common["seed"],
                     workers=common["workers"], out=common["out"],
                     formats=common["formats"], params=params, noise=noise,
                     spam=spam, user_keys=frozenset(user_keys))


def load_document(text: str) -> dict:
    """YAML text to a mapping, with parse errors wrapped as ConfigError."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"document: invalid YAML ({exc})") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError("document: expected a mapping at the top level")
    return doc


def serialize_config(config: RunConfig) -> dict:
    """Plain mapping (YAML/JSON safe) that re-parses to an equal config."""
    doc = {"experiment": config.experiment, "seed": config.seed,
           "workers": config.workers, "out": config.out,
           "formats": list(config.formats)}
    for key, value in config.params.items():
        doc[key] = _plain(value)
    if config.noise is not None:
        doc["noise"] = {"enabled": config.noise.enabled,
                        "t2": config.noise.t2,
                        "correlation_time": config.noise.correlation_time,
                        "amplitude_hz": config.noise.amplitude_hz,
                        "n_traj": config.noise.n_traj}
    if config.spam is not None:
        doc["spam"] = {"prep_error": config.spam.prep_error,
                       "dark_misread": config.spam.dark_misread,
                       "bright_misread": config.spam.bright_misread}
    return doc


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def _fmt_value(f: Field | None, value) -> str:
    if value is None:
        return "null"
    if isinstance(value, tuple) and f is not None and \
            f.kind in ("time_list", "float_list", "points", "pieces"):
        return f"<{len(value)} entries>"
    if f is not None and f.kind == "frequency" and value is not None:
        return f"{value:g} Hz"
    if f is not None and f.kind == "time":
        return f"{value:g} s"
    return f"{value!r}" if isinstance(value, str) else f"{value}"


def explain_config(config: RunConfig) -> list:
    """Lines describing every effective value and why it is the default."""
    spec = EXPERIMENTS[config.experiment]
    lines = [f"experiment = {config.experiment}  ({spec.description})"]

    def add(path, f, value):
        origin = "config " if path in config.user_keys else "default"
        lines.append(f"{path} = {_fmt_value(f, value)}  [{origin}]  "
                     f"{f.provenance}")

    for f in _common_fields(config.experiment):
        add(f.name, f, getattr(config, f.name)
            if f.name != "formats" else config.formats)
    for f in spec.fields:
        add(f.name, f, config.params[f.name])
    if config.noise is not None:
        n = config.noise
        rows = (("enabled", n.enabled, "bool"),
                ("t2", n.t2, "time"),
                ("correlation_time", n.correlation_time, "time"),
                ("amplitude_hz", n.amplitude_hz, "frequency"),
                ("n_traj", n.n_traj, "int"))
        for name, value, kind in rows:
            f = Field(name, kind, None, _NOISE_PROVENANCE[name])
            add(f"noise.{name}", f, value)
    if config.spam is not None:
        for name in ("prep_error", "dark_misread", "bright_misread"):
            f = Field(name, "float", None, _SPAM_PROVENANCE[name])
            add(f"spam.{name}", f, getattr(config.spam, name))
    return lines
