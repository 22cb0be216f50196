"""Experiment configuration, orchestration and reproducible output.

A config is a flat TOML document (``key = value`` lines). Randomness derives
from a single root seed: stream ``(experiment, sweep point)`` is
``SeedSequence(seed, spawn_key=(EXPERIMENT_CODES[experiment], point))`` and
frame ``i`` of that stream is its i-th spawned child, itself split into
(bits, noise). Systems compared at the same sweep point share the stream,
so their comparison is paired.
"""

import math
import os
import shutil
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from ._accel import backend_name
from .analog import analog_basis
from .channel import DdChannel, eva_profile
from .detection import ber_from_counts
from .export import write_csv, write_json, sha256_file
from .link import CHANNEL_ESTIMATES, DETECTORS, SYSTEMS, Transceiver, ber_point, frames_for_bits, run_frame
from .orthogonality import auto_ambiguity, cross_ambiguity_ce, lambda_digital, lambda_from_basis
from .params import DomainError, OddmParams, q_for_duration, qam_map, random_bits
from .pulse import CE_SCALES, srrc_pulse
from .spectrum import oobe_metrics, psd_analytic_analog, psd_analytic_digital, psd_empirical

EXPERIMENTS = ("waveform", "psd", "ambiguity", "gram", "ber")
EXPERIMENT_CODES = {name: i for i, name in enumerate(EXPERIMENTS)}

# gain_re, gain_im, delay bin l, Doppler bin k
DEFAULT_TAPS = ((0.6, 0.0, 0, 0), (0.0, 0.5, 1, 1), (-0.45, 0.0, 2, -1), (0.24, 0.38, 3, 2))

DEFAULTS = dict(
    preset="full",
    seed=0,
    systems=["analog", "digital"],
    workers=1,
    trials=1000,
    fft_factor=16,
    thresholds_db=[3, 7, 10, 20, 30, 40],
    ta_list=[0.3, 10.0],
    ta_auto=0.3,
    ta_cross=10.0,
    ce_scale="unit_energy",
    ebn0_db=[0, 2, 4, 6, 8, 10, 12],
    bits_per_point=200000,
    detector="mp",
    channel_estimate="calibrated",
    channel="fixed",
    taps=[list(t) for t in DEFAULT_TAPS],
    fc_hz=5e9,
    speed_kmh=500.0,
)
PARAM_KEYS = ("M", "N", "T", "Q", "beta", "Ns", "Lcp", "ta")
_INT_KEYS = {"M", "N", "Q", "Ns", "Lcp", "seed", "workers", "trials", "fft_factor", "bits_per_point"}
_FLOAT_KEYS = {"T", "beta", "ta", "ta_auto", "ta_cross", "fc_hz", "speed_kmh"}
_LIST_KEYS = {"systems", "thresholds_db", "ta_list", "ebn0_db", "taps"}
_STR_KEYS = {"preset", "ce_scale", "detector", "channel", "channel_estimate"}
KNOWN_KEYS = set(DEFAULTS) | set(PARAM_KEYS)


class ConfigError(DomainError):
    """Invalid configuration; ``problems`` lists every issue found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: OddmParams
    options: dict
    warnings: tuple = field(default=(), compare=False)

    def echo(self):
        return dict(experiment=self.experiment, params=self.params.as_dict(), **self.options)


def parse_override(text):
    """``key=value`` with a TOML value; bare words are taken as strings."""
    if "=" not in text:
        raise ConfigError([f"--set expects key=value, got {text!r}"])
    key, raw = (s.strip() for s in text.split("=", 1))
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


def _default_lcp(experiment, M):
    if experiment == "psd":
        return math.ceil(M / 10)
    if experiment == "ber":
        return math.ceil(M / 8)
    return 0


def _check_type(key, value, problems):
    if key in _INT_KEYS and (isinstance(value, bool) or not isinstance(value, int)):
        problems.append(f"{key}: expected an integer, got {value!r}")
    elif key in _FLOAT_KEYS and (isinstance(value, bool) or not isinstance(value, (int, float))):
        problems.append(f"{key}: expected a number, got {value!r}")
    elif key in _STR_KEYS and not isinstance(value, str):
        problems.append(f"{key}: expected a string, got {value!r}")
    elif key in _LIST_KEYS and not isinstance(value, list):
        problems.append(f"{key}: expected a list, got {value!r}")


def validate_config(text="", experiment=None, overrides=()):
    """Parse TOML ``text`` plus ``key=value`` overrides into an :class:`ExperimentConfig`.

    All problems are collected and raised together as :class:`ConfigError`.
    """
    problems = []
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"config is not valid TOML: {exc}"]) from exc
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        raw[key] = value
    if experiment is not None:
        raw["experiment"] = experiment
    exp = raw.pop("experiment", None)
    if exp not in EXPERIMENTS:
        problems.append(f"experiment: expected one of {EXPERIMENTS}, got {exp!r}")
    if isinstance(raw.get("systems"), str):
        raw["systems"] = [raw["systems"]]
    for key in sorted(set(raw) - KNOWN_KEYS):
        problems.append(f"{key}: unknown key")
        del raw[key]
    for key in list(raw):
        before = len(problems)
        _check_type(key, raw[key], problems)
        if len(problems) > before:
            del raw[key]  # fall back to the default so later checks still run

    opts = {k: v for k, v in DEFAULTS.items()}
    opts.update({k: v for k, v in raw.items() if k not in PARAM_KEYS})

    if opts["preset"] not in ("full", "desk"):
        problems.append(f"preset: expected 'full' or 'desk', got {opts['preset']!r}")
    base = OddmParams.desk() if opts["preset"] == "desk" else OddmParams.full()
    fields = base.as_dict()
    fields.update({k: raw[k] for k in ("M", "N", "T", "Q", "beta", "Ns") if k in raw})
    if "ta" in raw:
        if "Q" in raw:
            problems.append("ta and Q both set; give only one")
        elif isinstance(fields["M"], int) and fields["M"] >= 1 and raw["ta"] > 0:
            fields["Q"] = q_for_duration(raw["ta"], fields["M"])
        else:
            problems.append(f"ta: must be positive, got {raw['ta']!r}")
    if "Lcp" in raw:
        fields["Lcp"] = raw["Lcp"]
    elif isinstance(fields["M"], int):
        fields["Lcp"] = _default_lcp(exp, fields["M"])
    params = None
    try:
        params = OddmParams(**fields)
    except DomainError:
        problems.extend(f"params: {p}" for p in OddmParams.problems(_Shadow(fields)))

    for s in opts["systems"]:
        if s not in SYSTEMS:
            problems.append(f"systems: unknown system {s!r}; expected some of {SYSTEMS}")
    if not opts["systems"]:
        problems.append("systems: must not be empty")
    for key in ("ta_list", "ebn0_db", "thresholds_db"):
        if not opts[key]:
            problems.append(f"{key}: must not be empty")
        elif not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in opts[key]):
            problems.append(f"{key}: entries must be numbers")
    if any(isinstance(v, (int, float)) and v <= 0 for v in opts["ta_list"]):
        problems.append("ta_list: durations must be positive")
    for key in ("trials", "workers", "fft_factor", "bits_per_point"):
        if opts[key] < 1:
            problems.append(f"{key}: must be >= 1, got {opts[key]}")
    if not 0 <= opts["seed"] < 2**64:
        problems.append(f"seed: must lie in [0, 2^64), got {opts['seed']}")
    if opts["ce_scale"] not in CE_SCALES:
        problems.append(f"ce_scale: expected one of {CE_SCALES}, got {opts['ce_scale']!r}")
    if opts["detector"] not in DETECTORS:
        problems.append(f"detector: expected one of {DETECTORS}, got {opts['detector']!r}")
    if opts["channel_estimate"] not in CHANNEL_ESTIMATES:
        problems.append(f"channel_estimate: expected one of {CHANNEL_ESTIMATES}, got {opts['channel_estimate']!r}")
    if opts["channel"] not in ("fixed", "eva"):
        problems.append(f"channel: expected 'fixed' or 'eva', got {opts['channel']!r}")
    for t in opts["taps"]:
        if not (isinstance(t, list) and len(t) == 4 and all(isinstance(v, (int, float)) for v in t)):
            problems.append(f"taps: each tap must be [gain_re, gain_im, l, k], got {t!r}")
        elif t[2] != int(t[2]) or t[3] != int(t[3]) or t[2] < 0:
            problems.append(f"taps: delay and Doppler bins must be integers with l >= 0, got {t!r}")
    if problems:
        raise ConfigError(problems)

    notes = []
    if exp == "ber":
        tau_max = _channel_delay_spread(opts, params)
        if tau_max > params.Tcp + 1e-15:
            notes.append(f"cyclic prefix Tcp = {params.Tcp:.4g} s is shorter than the channel delay spread {tau_max:.4g} s")
    return ExperimentConfig(exp, params, opts, tuple(notes))


class _Shadow:
    """Attribute view used to list parameter problems without constructing OddmParams."""

    def __init__(self, fields):
        self.__dict__.update(fields)


def _channel_delay_spread(opts, params):
    if opts["channel"] == "eva":
        return 2510e-9
    return max(t[2] for t in opts["taps"]) * params.delay_res


def load_config(path, experiment=None, overrides=()):
    try:
        text = Path(path).read_text() if path is not None else ""
    except OSError as exc:
        raise ConfigError([f"config file: {exc}"]) from exc
    return validate_config(text, experiment, overrides)


# -- experiment bodies -----------------------------------------------------------------


def _stream(cfg, point):
    return np.random.SeedSequence(cfg.options["seed"], spawn_key=(EXPERIMENT_CODES[cfg.experiment], point))


def _pool(cfg):
    return ProcessPoolExecutor(cfg.options["workers"]) if cfg.options["workers"] > 1 else None


def _random_grid(params, seed):
    return qam_map(random_bits(np.random.default_rng(seed), params), params)


def _frame(link, seed):
    return link.modulate(_random_grid(link.params, seed))


def _run_waveform(cfg, out, derived):
    seed = _stream(cfg, 0).spawn(1)[0]
    grid = _random_grid(cfg.params, seed)
    grid.to_csv(out / "grid.csv")
    for s in cfg.options["systems"]:
        link = Transceiver(cfg.params, s)
        wf = link.modulate(grid)
        wf.to_csv(out / f"waveform_{s}.csv")
        derived[f"energy_{s}"] = wf.energy()
    if any(s != "otfs" for s in cfg.options["systems"]):
        srrc_pulse(cfg.params).to_csv(out / "pulse.csv")


def _run_psd(cfg, out, derived):
    p = cfg.params
    opts = cfg.options
    fft_len = opts["fft_factor"] * p.N * p.samples_per_symbol
    band_edge = (1 + p.beta) * p.M / (2 * p.T)
    pulse = srrc_pulse(p)
    pool = _pool(cfg)
    try:
        for s in opts["systems"]:
            link = Transceiver(p, s, None if s == "otfs" else pulse)
            seeds = _stream(cfg, 0).spawn(opts["trials"])
            frames = pool.map(_frame, [link] * len(seeds), seeds, chunksize=16) if pool else (_frame(link, x) for x in seeds)
            emp = psd_empirical(frames, opts["trials"], fft_len)
            emp.to_csv(out / f"psd_{s}_empirical.csv")
            curves = {"empirical": emp}
            if s != "otfs":
                f = emp.freqs
                fn = psd_analytic_analog if s == "analog" else psd_analytic_digital
                ana = fn(p, pulse, f)
                ana.to_csv(out / f"psd_{s}_analytic.csv")
                curves["analytic"] = ana
            for kind, c in curves.items():
                m = oobe_metrics(c, opts["thresholds_db"], band_edge)
                derived[f"{s}_{kind}_peak_sidelobe_db"] = m.pop("peak_sidelobe_db")
                derived[f"{s}_{kind}_bandwidth_hz"] = {str(k): v for k, v in m.items()}
    finally:
        if pool:
            pool.shutdown()


def _run_ambiguity(cfg, out, derived):
    opts = cfg.options
    p_auto = cfg.params.with_duration(opts["ta_auto"])
    p_cross = cfg.params.with_duration(opts["ta_cross"])
    auto = auto_ambiguity(p_auto, srrc_pulse(p_auto))
    auto.to_csv(out / "ambiguity_auto.csv")
    cross = cross_ambiguity_ce(p_cross, srrc_pulse(p_cross), opts["ce_scale"])
    cross.to_csv(out / "ambiguity_cross.csv")
    for name, surf, p in (("auto", auto, p_auto), ("cross", cross, p_cross)):
        off = surf.off_center()
        derived[f"{name}_Q"] = p.Q
        derived[f"{name}_center_abs"] = float(abs(surf.center))
        derived[f"{name}_off_center_max_db"] = float(20 * np.log10(off.max())) if off.max() > 0 else -np.inf


def _run_gram(cfg, out, derived):
    for i, ta in enumerate(cfg.options["ta_list"]):
        p = cfg.params.with_duration(ta)
        pulse = srrc_pulse(p)
        for s in cfg.options["systems"]:
            if s == "digital":
                surf = lambda_digital(p, pulse)
            elif s == "analog":
                surf = lambda_from_basis(lambda m, n: analog_basis(m, n, p, pulse), p)
            else:
                raise DomainError("the gram experiment covers the analog and digital systems only")
            name = f"lambda_{s}_ta{i}"
            surf.to_csv(out / f"{name}.csv")
            off = surf.off_center()
            derived[name] = dict(
                ta_over_T=ta, Q=p.Q, center=float(abs(surf.center)), off_center_max_db=float(20 * np.log10(off.max()))
            )


def _fixed_channel(cfg):
    taps = [(complex(t[0], t[1]), int(t[2]), int(t[3])) for t in cfg.options["taps"]]
    return DdChannel.on_grid(cfg.params, taps)


def _run_ber(cfg, out, derived):
    p = cfg.params
    opts = cfg.options
    frames = frames_for_bits(p, opts["bits_per_point"])
    cols = {k: [] for k in ("ebn0_db", "system", "detector", "ber", "ci_lo", "ci_hi", "trials")}
    pool = _pool(cfg)
    try:
        links = {s: Transceiver(p, s) for s in opts["systems"]}
        fixed = _fixed_channel(cfg) if opts["channel"] == "fixed" else None
        if fixed is not None:
            fixed.to_csv(out / "channel.csv")
            hs = {s: link.detector_channel(fixed, opts["channel_estimate"]) for s, link in links.items()}
        for i, e in enumerate(opts["ebn0_db"]):
            for s, link in links.items():
                stream = _stream(cfg, i)
                if fixed is not None:
                    r = ber_point(link, fixed, float(e), opts["detector"], frames, stream, hs[s], pool)
                else:
                    r = _ber_point_eva(cfg, link, float(e), frames, stream)
                for k, v in zip(cols, (e, s, opts["detector"], r.rate, r.ci_lo, r.ci_hi, frames)):
                    cols[k].append(v)
                derived[f"bits_{s}_{e}"] = r.total
    finally:
        if pool:
            pool.shutdown()
    write_csv(out / "ber.csv", list(cols), list(cols.values()))


def _ber_point_eva(cfg, link, ebn0_db, frames, stream):
    """Fresh on-grid EVA realization per frame (the channel stream is a third child per frame)."""
    errors = total = 0
    for s in stream.spawn(frames):
        s_frame, s_chan = s.spawn(2)
        ch = eva_profile(cfg.options["fc_hz"], cfg.options["speed_kmh"], cfg.params, np.random.default_rng(s_chan))
        H = link.detector_channel(ch, cfg.options["channel_estimate"])
        r = run_frame(link, ch, H, ebn0_db, cfg.options["detector"], s_frame)
        errors += r.errors
        total += r.total
    return ber_from_counts(errors, total)


_RUNNERS = dict(waveform=_run_waveform, psd=_run_psd, ambiguity=_run_ambiguity, gram=_run_gram, ber=_run_ber)


def run_experiment(cfg, out_dir):
    """Run ``cfg`` and write its CSVs plus ``manifest.json`` into ``out_dir``.

    Files are staged in a sibling temporary directory and moved into place
    only after the run succeeds; a failed run leaves ``out_dir`` untouched.
    Returns the manifest dict.
    """
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".oddm-stage-", dir=out_dir.parent))
    try:
        start = time.perf_counter()
        derived = dict(cfg.params.derived())
        _RUNNERS[cfg.experiment](cfg, stage, derived)
        files = sorted(stage.iterdir())
        manifest = dict(
            config=cfg.echo(),
            version=__version__,
            backend=backend_name(),
            derived=derived,
            warnings=list(cfg.warnings),
            wall_time_s=time.perf_counter() - start,
            files=[dict(name=f.name, sha256=sha256_file(f), bytes=f.stat().st_size) for f in files],
        )
        write_json(stage / "manifest.json", manifest)
        out_dir.mkdir(exist_ok=True)
        for f in sorted(stage.iterdir()):
            os.replace(f, out_dir / f.name)
        return manifest
    finally:
        shutil.rmtree(stage, ignore_errors=True)
