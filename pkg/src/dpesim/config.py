"""Config-file schema, parsing, validation and defaults for the CLI.

The format is INI-style plain text: named sections holding key = value
pairs. Every key is validated against the schema below; unknown sections or
keys are rejected with their dotted path. The budget sections are the one
exception: their keys are the ordered efficiency stages themselves.

Units are encoded in the key names (energies in meV or ueV, times in ps,
rates in 1/ps, budget entries in percent). Defaults reproduce the reference
zero-field operating point of the modeled source: a 394 ps exciton lifetime,
250 ps biexciton lifetime, 0.90 meV biexciton binding energy, 5.9 ueV
fine-structure splitting, 10 ps / 15 ps pulse pair 20 ps apart and a 12.5 ns
repetition period.
"""

import configparser
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .lindblad import DecayRates
from .qd_model import LevelScheme

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_angle_rad(text: str) -> float:
    """Accept plain numbers plus 'pi' multiples like 'pi', '2pi', 'pi/2'."""
    low = text.strip().lower().replace(" ", "")
    if "pi" in low:
        pre, _, post = low.partition("pi")
        value = math.pi
        if pre:
            value *= float(pre)
        if post:
            if not post.startswith("/"):
                raise ValueError(f"cannot parse angle {text!r}")
            value /= float(post[1:])
        return value
    return float(low)


def _parse_auto_float(text: str) -> float | None:
    return None if text.strip().lower() == "auto" else float(text)


# schema entries: (parser, default-as-string, documentation)
SCHEMA: dict[str, dict[str, tuple]] = {
    "scheme": {
        "exciton_energy_mev": (float, "1363.9", "mean X transition energy"),
        "binding_energy_mev": (float, "0.90", "biexciton binding energy, > 0"),
        "fss_uev": (float, "5.9", "fine-structure splitting at B = 0"),
        "g_factor": (float, "3.11", "exciton g factor"),
        "diamagnetic_uev_per_t2": (float, "0.0", "diamagnetic coefficient"),
        "b_field_t": (float, "0.0", "magnetic field, Faraday geometry"),
        "upper_branch": (str, "sigma-", "circular label of the upper Zeeman branch"),
    },
    "rates": {
        "x_lifetime_ps": (float, "394.0", "exciton lifetime per branch"),
        "xx_lifetime_ps": (float, "250.0", "total biexciton lifetime"),
        "pure_dephasing_per_ps": (float, "0.0", "pure-dephasing rate"),
    },
    "tpe": {
        "fwhm_ps": (float, "10.0", "TPE pulse duration (FWHM)"),
        "amplitude_rad_per_ps": (
            _parse_auto_float,
            "auto",
            "peak Rabi rate; auto = calibrate to the first XX maximum",
        ),
        "polarization": (str, "H", "H, V, sigma+, sigma- or angle in degrees"),
    },
    "trigger": {
        "enabled": (_parse_bool, "true", "apply the de-excitation pulse"),
        "fwhm_ps": (float, "15.0", "trigger pulse duration (FWHM)"),
        "delay_ps": (float, "20.0", "TPE-to-trigger interval"),
        "area_rad": (_parse_angle_rad, "pi", "trigger pulse area"),
        "polarization": (
            str,
            "auto",
            "auto = co-polarized with the target branch",
        ),
        "target": (str, "auto", "exciton branch to prepare; auto = V / upper"),
    },
    "detection": {
        "analyzer": (str, "auto", "analyzer polarization; auto = target branch"),
        "irf": (str, "snspd", "snspd (60 ps), spad (427 ps), none, or FWHM in ps"),
    },
    "simulation": {
        "lifetimes": (float, "8.0", "post-pulse span in units of the X lifetime"),
        "n_points": (int, "600", "trajectory samples per cycle"),
        "rtol": (float, "1e-8", "integrator relative tolerance"),
        "correlation_points": (int, "400", "two-time grid points per axis"),
        "correlation_lifetimes": (float, "5.0", "two-time window in X lifetimes"),
    },
    "train": {
        "repetition_ps": (float, "12500.0", "excitation repetition period"),
    },
    "rabi_tpe": {
        "amplitude_max_factor": (float, "2.2", "grid end over the pi amplitude"),
        "n": (int, "23", "number of scan points"),
    },
    "rabi_trigger": {
        "area_max_rad": (_parse_angle_rad, "2pi", "grid end"),
        "n": (int, "21", "number of scan points"),
    },
    "delay_map": {
        "delay_min_ps": (float, "8.0", "first trigger delay"),
        "delay_max_ps": (float, "400.0", "last trigger delay"),
        "n_delay": (int, "11", "delay points"),
        "area_max_rad": (_parse_angle_rad, "2pi", "area grid end"),
        "n_area": (int, "9", "area points"),
    },
    "pol_scan": {
        "angle_min_deg": (float, "0.0", "first trigger angle"),
        "angle_max_deg": (float, "180.0", "last trigger angle"),
        "n": (int, "19", "number of scan points"),
    },
    "magneto": {
        "b_min_t": (float, "0.0", "first field value"),
        "b_max_t": (float, "4.0", "last field value"),
        "n": (int, "41", "number of field points"),
    },
    "stokes": {
        "s1": (float, "0.79", "input Stokes S1 (synthetic source)"),
        "s2": (float, "-0.28", "input Stokes S2"),
        "s3": (float, "-0.16", "input Stokes S3"),
        "qwp_step_deg": (float, "5.0", "QWP rotation step over 180 deg"),
        "samples_csv": (str, "", "optional measured (angle, intensity) table"),
    },
    "hwp": {
        "source": (str, "emission", "emission (simulate) or vector ([stokes])"),
        "angle_step_deg": (float, "2.5", "HWP step over 180 deg"),
    },
    "histograms": {
        "g2": (float, "0.004", "ground-truth center-to-side peak ratio"),
        "v_raw": (float, "0.84", "ground-truth raw HOM visibility"),
        "side_area": (float, "10000", "expected side-peak counts"),
        "n_side_peaks": (int, "3", "side peaks per side"),
        "splitting_ratio": (float, "0.488", "interferometer splitting fraction"),
        "bin_width_ps": (float, "4.0", "histogram bin width"),
    },
}

#: sections whose keys are free-form ordered (name, percent) stage lists
BUDGET_SECTIONS = ("budget_dpe", "budget_rf", "extinction")

DEFAULT_BUDGET = {
    "budget_dpe": [
        ("sample_to_objective", 9.0),
        ("objective", 88.9),
        ("window", 92.6),
        ("bs_50_50", 49.8),
        ("hwp", 98.4),
        ("polarizer", 81.4),
        ("fiber_coupling", 55.0),
        ("spectral_filter", 39.0),
    ],
    "budget_rf": [
        ("sample_to_objective", 9.0),
        ("objective", 88.9),
        ("window", 92.6),
        ("bs_50_50", 49.8),
        ("hwp", 98.4),
        ("polarizer", 40.7),
        ("fiber_coupling", 55.0),
    ],
    "extinction": [
        ("spectral_filter", 1e-4),
        ("polarization_filter", 1e-4),
    ],
}


@dataclass
class RunConfig:
    """Fully resolved configuration of one CLI invocation."""

    values: dict  # section -> key -> parsed value
    budget: dict  # section -> ordered (name, value) list
    seed: int = 0
    threads: int = 1

    def __getitem__(self, path: str):
        section, _, key = path.partition(".")
        return self.values[section][key]

    def scheme(self) -> LevelScheme:
        v = self.values["scheme"]
        try:
            return LevelScheme(
                exciton_energy=v["exciton_energy_mev"],
                binding_energy=v["binding_energy_mev"],
                fss=v["fss_uev"],
                g_factor=v["g_factor"],
                diamagnetic=v["diamagnetic_uev_per_t2"],
                b_field=v["b_field_t"],
                upper_is_sigma_minus=(v["upper_branch"] == "sigma-"),
            )
        except Exception as exc:
            raise ConfigError(str(exc), field="scheme") from exc

    def rates(self) -> DecayRates:
        v = self.values["rates"]
        try:
            return DecayRates(
                gamma_xx=1.0 / v["xx_lifetime_ps"],
                gamma_x=1.0 / v["x_lifetime_ps"],
                gamma_deph=v["pure_dephasing_per_ps"],
            )
        except Exception as exc:
            raise ConfigError(str(exc), field="rates") from exc

    def irf_fwhm(self) -> float | None:
        text = self.values["detection"]["irf"].strip().lower()
        if text == "none":
            return None
        if text == "snspd":
            return 60.0
        if text == "spad":
            return 427.0
        try:
            return float(text)
        except ValueError:
            raise ConfigError(
                f"expected snspd, spad, none or a number, got {text!r}",
                field="detection.irf",
            ) from None

    def echo_items(self):
        """Ordered (dotted path, value text) pairs of the resolved config."""
        items = [("seed", str(self.seed)), ("threads", str(self.threads))]
        for section in SCHEMA:
            for key in SCHEMA[section]:
                items.append((f"{section}.{key}", str(self.values[section][key])))
        for section in BUDGET_SECTIONS:
            for name, value in self.budget[section]:
                items.append((f"{section}.{name}", repr(value)))
        return items


def default_config() -> RunConfig:
    values = {
        section: {key: spec[0](spec[1]) for key, spec in keys.items()}
        for section, keys in SCHEMA.items()
    }
    budget = {k: list(v) for k, v in DEFAULT_BUDGET.items()}
    return RunConfig(values=values, budget=budget)


def load_config(path: str | None) -> RunConfig:
    """Parse and validate a config file; None yields pure defaults.

    Raises ConfigError naming the dotted section.key path of the first
    offending entry.
    """
    cfg = default_config()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep stage names case-sensitive
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from exc

    for section in parser.sections():
        if section in BUDGET_SECTIONS:
            stages = []
            for key, text in parser.items(section):
                try:
                    stages.append((key, float(text)))
                except ValueError:
                    raise ConfigError(
                        f"expected a number, got {text!r}", field=f"{section}.{key}"
                    ) from None
            cfg.budget[section] = stages
            continue
        if section not in SCHEMA:
            raise ConfigError("unknown section", field=section)
        for key, text in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError("unknown key", field=f"{section}.{key}")
            parse = SCHEMA[section][key][0]
            try:
                cfg.values[section][key] = parse(text)
            except ValueError as exc:
                raise ConfigError(str(exc), field=f"{section}.{key}") from exc

    _cross_validate(cfg)
    return cfg


def _cross_validate(cfg: RunConfig) -> None:
    checks = [
        ("rates.x_lifetime_ps", cfg["rates.x_lifetime_ps"] > 0, "must be > 0"),
        ("rates.xx_lifetime_ps", cfg["rates.xx_lifetime_ps"] > 0, "must be > 0"),
        (
            "rates.pure_dephasing_per_ps",
            cfg["rates.pure_dephasing_per_ps"] >= 0,
            "must be >= 0",
        ),
        ("tpe.fwhm_ps", cfg["tpe.fwhm_ps"] > 0, "must be > 0"),
        ("trigger.fwhm_ps", cfg["trigger.fwhm_ps"] > 0, "must be > 0"),
        ("trigger.area_rad", cfg["trigger.area_rad"] >= 0, "must be >= 0"),
        ("train.repetition_ps", cfg["train.repetition_ps"] > 0, "must be > 0"),
        ("simulation.n_points", cfg["simulation.n_points"] >= 50, "must be >= 50"),
        (
            "simulation.correlation_points",
            cfg["simulation.correlation_points"] >= 10,
            "must be >= 10",
        ),
        (
            "scheme.upper_branch",
            cfg["scheme.upper_branch"] in ("sigma-", "sigma+"),
            "must be sigma- or sigma+",
        ),
        ("histograms.g2", cfg["histograms.g2"] >= 0, "must be >= 0"),
        (
            "histograms.v_raw",
            0 <= cfg["histograms.v_raw"] <= 1,
            "must lie in [0, 1]",
        ),
        (
            "histograms.splitting_ratio",
            0 < cfg["histograms.splitting_ratio"] < 1,
            "must lie in (0, 1)",
        ),
        ("hwp.source", cfg["hwp.source"] in ("emission", "vector"), "must be emission or vector"),
    ]
    for path, ok, message in checks:
        if not ok:
            raise ConfigError(message, field=path)
    cfg.scheme()
    cfg.rates()
    cfg.irf_fwhm()


def schema_documentation() -> str:
    """Human-readable key table, printed by the CLI and used in the README."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (_, default, doc) in keys.items():
            lines.append(f"  {key} = {default}  ; {doc}")
        lines.append("")
    lines.append("; ordered free-form stage lists (values in percent / as ratios):")
    for section in BUDGET_SECTIONS:
        lines.append(f"[{section}]")
        for name, value in DEFAULT_BUDGET[section]:
            lines.append(f"  {name} = {value}")
        lines.append("")
    return "\n".join(lines)
