"""Scenario configuration: JSON schema, exhaustive validation, presets.

A scenario is one JSON object with the exact field names below; unknown
keys are rejected at every level and every violation found is reported in
one pass, path-prefixed, so a bad file never needs several round trips.

    {
      "name": "fig1-left",            optional, defaults to the file stem
      "model": "nonlinear_mc",        meanfield | linear_mc | nonlinear_mc
                                      | equilibrium | explicit
      "prefs": {"alpha": 0.5, "beta": 0.5},          beta optional
      "saving": {"lambda_x": 0.8, "lambda_y": 0.2},
      "coeff_model": {"mode": "deterministic"},      or "uniform" + widths
      "means0": {"Mx": 3, "My": 3, "mx": 10, "my": 2},
      "N_A": 5000, "N_B": 5000,
      "sigma": 1.0, "mu": 1.0, "dt": 0.01,
      "t_end": 50.0, "phase1_end": 10.0,             phase1_end defaults to 10/sigma
      "seed": 0,
      "output": {"path": "runs", "format": "csv"},   or "jsonl"
      "init_shape": {"kind": "degenerate"},          or "uniform_spread" + width
      "snapshot_every": 100                          or null to disable
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .core import CoefficientModel, MeanState, Preferences, SavingPolicy
from .errors import ConfigurationError, MarketError

MODELS = ("meanfield", "linear_mc", "nonlinear_mc", "equilibrium", "explicit")
OUTPUT_FORMATS = ("csv", "jsonl")
INIT_KINDS = ("degenerate", "uniform_spread")

_MAX_SEED = 2**64


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully resolved scenario; every default already applied."""

    name: str
    model: str
    prefs: Preferences
    saving: SavingPolicy
    coeff_model: CoefficientModel
    means0: MeanState
    n_dealers: int
    n_speculators: int
    sigma: float
    mu: float
    dt: float
    t_end: float
    phase1_end: float
    seed: int
    out_dir: str
    out_format: str
    init_kind: str
    init_width: float
    snapshot_every: int | None

    def to_json_dict(self) -> dict:
        """Serialize with the exact external field names; round-trips."""
        init_shape: dict = {"kind": self.init_kind}
        if self.init_kind == "uniform_spread":
            init_shape["width"] = self.init_width
        return {
            "name": self.name,
            "model": self.model,
            "prefs": {"alpha": self.prefs.alpha, "beta": self.prefs.beta},
            "saving": {
                "lambda_x": self.saving.lambda_x,
                "lambda_y": self.saving.lambda_y,
            },
            "coeff_model": {
                "mode": self.coeff_model.mode,
                "half_width_alpha": self.coeff_model.half_width_alpha,
                "half_width_beta": self.coeff_model.half_width_beta,
            },
            "means0": {
                "Mx": self.means0.Mx,
                "My": self.means0.My,
                "mx": self.means0.mx,
                "my": self.means0.my,
            },
            "N_A": self.n_dealers,
            "N_B": self.n_speculators,
            "sigma": self.sigma,
            "mu": self.mu,
            "dt": self.dt,
            "t_end": self.t_end,
            "phase1_end": self.phase1_end,
            "seed": self.seed,
            "output": {"path": self.out_dir, "format": self.out_format},
            "init_shape": init_shape,
            "snapshot_every": self.snapshot_every,
        }


def _type_name(value) -> str:
    return type(value).__name__


def _check_unknown(obj: dict, known: tuple[str, ...], path: str, errors: list[str]) -> None:
    for key in obj:
        if key not in known:
            errors.append(f"{path}{key}: unknown key")


def _get_obj(doc, key, errors, required=False) -> dict | None:
    if key not in doc:
        if required:
            errors.append(f"{key}: required object is missing")
        return None
    value = doc[key]
    if not isinstance(value, dict):
        errors.append(f"{key}: must be an object, got {_type_name(value)}")
        return None
    return value


def _get_num(obj, key, path, errors, required=False, default=None):
    if obj is None or key not in obj:
        if required:
            errors.append(f"{path}{key}: required number is missing")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{path}{key}: must be a number, got {_type_name(value)}")
        return default
    return float(value)


def _get_int(obj, key, path, errors, required=False, default=None):
    if obj is None or key not in obj:
        if required:
            errors.append(f"{path}{key}: required integer is missing")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        errors.append(f"{path}{key}: must be an integer, got {_type_name(value)}")
        return default
    return value


def _get_str(obj, key, path, errors, required=False, default=None, choices=None):
    if obj is None or key not in obj:
        if required:
            errors.append(f"{path}{key}: required string is missing")
        return default
    value = obj[key]
    if not isinstance(value, str):
        errors.append(f"{path}{key}: must be a string, got {_type_name(value)}")
        return default
    if choices is not None and value not in choices:
        errors.append(f"{path}{key}: must be one of {list(choices)}, got {value!r}")
        return default
    return value


_TOP_KEYS = (
    "name", "model", "prefs", "saving", "coeff_model", "means0",
    "N_A", "N_B", "sigma", "mu", "dt", "t_end", "phase1_end", "seed",
    "output", "init_shape", "snapshot_every",
)


def parse_config(doc, default_name: str = "scenario") -> ScenarioConfig:
    """Validate a parsed JSON document and resolve every default.

    Raises ConfigurationError carrying the complete list of violations.
    """
    if not isinstance(doc, dict):
        raise ConfigurationError([f"document must be a JSON object, got {_type_name(doc)}"])
    errors: list[str] = []
    _check_unknown(doc, _TOP_KEYS, "", errors)

    name = _get_str(doc, "name", "", errors, default=default_name)
    model = _get_str(doc, "model", "", errors, required=True, choices=MODELS)

    prefs_obj = _get_obj(doc, "prefs", errors, required=True)
    alpha = beta = None
    if prefs_obj is not None:
        _check_unknown(prefs_obj, ("alpha", "beta"), "prefs.", errors)
        alpha = _get_num(prefs_obj, "alpha", "prefs.", errors, required=True)
        beta = _get_num(prefs_obj, "beta", "prefs.", errors)
        if alpha is not None:
            if not 0.0 < alpha < 1.0:
                errors.append(f"prefs.alpha: must lie in (0, 1), got {alpha}")
            elif beta is None:
                beta = 1.0 - alpha
            elif abs(alpha + beta - 1.0) > 1e-12:
                errors.append(
                    f"prefs: alpha + beta must equal 1 within 1e-12, got {alpha + beta}"
                )

    saving_obj = _get_obj(doc, "saving", errors, required=True)
    lam_x = lam_y = None
    if saving_obj is not None:
        _check_unknown(saving_obj, ("lambda_x", "lambda_y"), "saving.", errors)
        lam_x = _get_num(saving_obj, "lambda_x", "saving.", errors, required=True)
        lam_y = _get_num(saving_obj, "lambda_y", "saving.", errors, required=True)
        for label, lam in (("lambda_x", lam_x), ("lambda_y", lam_y)):
            if lam is not None and not 0.0 <= lam <= 1.0:
                errors.append(f"saving.{label}: must lie in [0, 1], got {lam}")

    coeff_obj = _get_obj(doc, "coeff_model", errors)
    mode = "deterministic"
    hw_alpha = hw_beta = 0.0
    if coeff_obj is not None:
        _check_unknown(
            coeff_obj, ("mode", "half_width_alpha", "half_width_beta"), "coeff_model.", errors
        )
        mode = _get_str(
            coeff_obj, "mode", "coeff_model.", errors, required=True,
            choices=("deterministic", "uniform"),
        ) or "deterministic"
        hw_alpha = _get_num(coeff_obj, "half_width_alpha", "coeff_model.", errors, default=0.0)
        hw_beta = _get_num(coeff_obj, "half_width_beta", "coeff_model.", errors, default=0.0)
        for label, hw in (("half_width_alpha", hw_alpha), ("half_width_beta", hw_beta)):
            if hw is not None and hw < 0.0:
                errors.append(f"coeff_model.{label}: must be nonnegative, got {hw}")
        if mode == "uniform" and None not in (alpha, beta, hw_alpha, hw_beta):
            if alpha - hw_alpha < 0.0 or alpha + hw_alpha > 1.0:
                errors.append(
                    "coeff_model.half_width_alpha: draw interval "
                    f"[{alpha - hw_alpha}, {alpha + hw_alpha}] leaves [0, 1]"
                )
            if beta - hw_beta < 0.0 or beta + hw_beta > 1.0:
                errors.append(
                    "coeff_model.half_width_beta: draw interval "
                    f"[{beta - hw_beta}, {beta + hw_beta}] leaves [0, 1]"
                )

    means_obj = _get_obj(doc, "means0", errors, required=True)
    means_vals = {}
    if means_obj is not None:
        _check_unknown(means_obj, ("Mx", "My", "mx", "my"), "means0.", errors)
        for key in ("Mx", "My", "mx", "my"):
            v = _get_num(means_obj, key, "means0.", errors, required=True)
            if v is not None and v < 0.0:
                errors.append(f"means0.{key}: must be nonnegative, got {v}")
            means_vals[key] = v

    n_dealers = _get_int(doc, "N_A", "", errors, default=5000)
    n_speculators = _get_int(doc, "N_B", "", errors, default=5000)
    for label, n in (("N_A", n_dealers), ("N_B", n_speculators)):
        if n is not None and n < 1:
            errors.append(f"{label}: must be at least 1, got {n}")

    sigma = _get_num(doc, "sigma", "", errors, default=1.0)
    mu = _get_num(doc, "mu", "", errors, default=1.0)
    dt = _get_num(doc, "dt", "", errors, default=0.01)
    t_end = _get_num(doc, "t_end", "", errors, default=50.0)
    if sigma is not None and sigma <= 0.0:
        errors.append(f"sigma: must be positive, got {sigma}")
    if mu is not None and mu <= 0.0:
        errors.append(f"mu: must be positive, got {mu}")
    if dt is not None and dt <= 0.0:
        errors.append(f"dt: must be positive, got {dt}")
    if t_end is not None and t_end < 0.0:
        errors.append(f"t_end: must be nonnegative, got {t_end}")

    phase1_end = _get_num(doc, "phase1_end", "", errors)
    if phase1_end is None and "phase1_end" not in doc and sigma and sigma > 0.0:
        # speculators enter once the dealer market has settled, but never
        # after the end of a short run
        phase1_end = 10.0 / sigma
        if t_end is not None and t_end >= 0.0:
            phase1_end = min(phase1_end, t_end)
    if phase1_end is not None:
        if phase1_end < 0.0:
            errors.append(f"phase1_end: must be nonnegative, got {phase1_end}")
        elif t_end is not None and 0.0 <= t_end < phase1_end:
            errors.append(
                f"phase1_end: must not exceed t_end, got {phase1_end} > {t_end}"
            )

    seed = _get_int(doc, "seed", "", errors, default=0)
    if seed is not None and not 0 <= seed < _MAX_SEED:
        errors.append(f"seed: must lie in [0, 2**64), got {seed}")

    out_obj = _get_obj(doc, "output", errors)
    out_dir = "runs"
    out_format = "csv"
    if out_obj is not None:
        _check_unknown(out_obj, ("path", "format"), "output.", errors)
        out_dir = _get_str(out_obj, "path", "output.", errors, default="runs")
        out_format = _get_str(
            out_obj, "format", "output.", errors, default="csv", choices=OUTPUT_FORMATS
        )

    init_obj = _get_obj(doc, "init_shape", errors)
    init_kind = "degenerate"
    init_width = 0.0
    if init_obj is not None:
        _check_unknown(init_obj, ("kind", "width"), "init_shape.", errors)
        init_kind = _get_str(
            init_obj, "kind", "init_shape.", errors, required=True, choices=INIT_KINDS
        ) or "degenerate"
        width = _get_num(init_obj, "width", "init_shape.", errors)
        if init_kind == "uniform_spread":
            if width is None:
                errors.append("init_shape.width: required for uniform_spread")
            elif not 0.0 <= width <= 1.0:
                errors.append(f"init_shape.width: must lie in [0, 1], got {width}")
            else:
                init_width = width
        elif width is not None:
            errors.append("init_shape.width: only valid for kind 'uniform_spread'")

    snapshot_every: int | None = 100
    if "snapshot_every" in doc:
        if doc["snapshot_every"] is None:
            snapshot_every = None
        else:
            snapshot_every = _get_int(doc, "snapshot_every", "", errors)
            if snapshot_every is not None and snapshot_every < 1:
                errors.append(f"snapshot_every: must be at least 1, got {snapshot_every}")

    # Cross-field checks need several valid parts at once.
    if None not in (lam_x, lam_y) and all(v is not None for v in means_vals.values()):
        exposed_x = means_vals["Mx"] + lam_x * means_vals["mx"]
        exposed_y = means_vals["My"] + lam_y * means_vals["my"]
        if exposed_x <= 0.0:
            errors.append(
                f"means0: no good X on the market, Mx + lambda_x*mx = {exposed_x}"
            )
        if exposed_y <= 0.0:
            errors.append(
                f"means0: no good Y on the market, My + lambda_y*my = {exposed_y}"
            )
    if model in ("linear_mc", "nonlinear_mc") and None not in (sigma, dt):
        if sigma * dt > 1.0:
            errors.append(
                f"sigma*dt: update probability must not exceed 1, got {sigma * dt}"
            )
    if model == "nonlinear_mc" and None not in (mu, dt, n_dealers):
        if mu * dt > n_dealers:
            errors.append(f"mu*dt: must not exceed N_A, got {mu * dt}")
    if model == "explicit" and None not in (lam_x, lam_y):
        if lam_x != 0.0 or lam_y != 1.0:
            errors.append(
                "saving: the explicit model needs lambda_x = 0 and lambda_y = 1, "
                f"got ({lam_x}, {lam_y})"
            )
    if model == "explicit" and means_vals.get("Mx") is not None and means_vals["Mx"] <= 0.0:
        errors.append("means0.Mx: the explicit model needs positive dealer X")

    if errors:
        raise ConfigurationError(errors)

    try:
        return ScenarioConfig(
            name=name,
            model=model,
            prefs=Preferences(alpha, beta),
            saving=SavingPolicy(lam_x, lam_y),
            coeff_model=CoefficientModel(mode, hw_alpha, hw_beta),
            means0=MeanState(**means_vals),
            n_dealers=n_dealers,
            n_speculators=n_speculators,
            sigma=sigma,
            mu=mu,
            dt=dt,
            t_end=t_end,
            phase1_end=phase1_end,
            seed=seed,
            out_dir=out_dir,
            out_format=out_format,
            init_kind=init_kind,
            init_width=init_width,
            snapshot_every=snapshot_every,
        )
    except MarketError as exc:
        # Constructors enforce the same rules; surface anything they add.
        raise ConfigurationError([str(exc)]) from exc


def load_config(path) -> ScenarioConfig:
    """Read and validate a scenario file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError([f"cannot read config {p}: {exc}"]) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            [f"{p}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"]
        ) from exc
    return parse_config(doc, default_name=p.stem)


# Bundled two-phase experiments. Each entry pins the preference exponent,
# the initial means (Mx, My, mx, my), and the saving fractions; schedule
# and population sizes follow the package defaults.
_PRESET_PARAMS: dict[str, dict] = {
    "fig1-left": {"alpha": 0.5, "means": (3.0, 3.0, 10.0, 2.0), "saving": (0.8, 0.2)},
    "fig1-right": {"alpha": 0.5, "means": (3.0, 3.0, 10.0, 2.0), "saving": (0.5, 0.5)},
    "fig2-left": {"alpha": 0.25, "means": (3.0, 3.0, 10.0, 2.0), "saving": (0.8, 0.2)},
    "fig2-right": {"alpha": 0.75, "means": (3.0, 3.0, 10.0, 2.0), "saving": (0.5, 0.5)},
    "fig3-left": {"alpha": 0.5, "means": (3.0, 7.5, 20.0, 5.0), "saving": (0.8, 0.2)},
    "fig3-right": {"alpha": 0.5, "means": (3.0, 20.0, 7.5, 5.0), "saving": (0.2, 0.8)},
}

PRESET_IDS = tuple(_PRESET_PARAMS)


def figure_preset(
    preset_id: str,
    seed: int = 0,
    out_dir: str = "runs",
    t_end: float | None = None,
) -> ScenarioConfig:
    """Scenario for one bundled figure panel: nonlinear model, two phases."""
    if preset_id not in _PRESET_PARAMS:
        raise ConfigurationError(
            [f"unknown preset {preset_id!r}; valid ids: {', '.join(PRESET_IDS)}"]
        )
    params = _PRESET_PARAMS[preset_id]
    Mx, My, mx, my = params["means"]
    lam_x, lam_y = params["saving"]
    config = parse_config(
        {
            "name": preset_id,
            "model": "nonlinear_mc",
            "prefs": {"alpha": params["alpha"]},
            "saving": {"lambda_x": lam_x, "lambda_y": lam_y},
            "means0": {"Mx": Mx, "My": My, "mx": mx, "my": my},
            "output": {"path": out_dir, "format": "csv"},
            "seed": seed,
        },
        default_name=preset_id,
    )
    if t_end is not None:
        config = replace(config, t_end=t_end)
    return config
