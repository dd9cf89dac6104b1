"""Batch command-line front end.

Usage: ``necrostab [--config FILE] [--show-config] COMMAND [options]``

Commands: stationary, spectrum, threshold, evolve, modes, heleshaw, verify.
Settings are resolved as built-in defaults, then the config file (flat
``key = value`` lines, ``#`` comments), then command-line flags.

Exit status: 0 success, 1 invalid input, 2 solver failure, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import dynamics, radial, spectrum
from .harmonics import HarmonicExpansion, HarmonicIndexError
from .radial import InvalidParameterError, ModelParams, NoNecroticCoreError, RadialDomainError
from .verify import verify_suite

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SOLVER = 2
EXIT_VERIFY = 3

FLOAT_FMT = "%.17g"

DEFAULTS: dict[str, object] = {
    "a": 1.0,
    "b": 0.25,
    "sigma_hat": 0.5,
    "gamma": None,
    "kmax": spectrum.DEFAULT_KMAX,
    "points": 201,
    "r0": None,
    "t_end": 300.0,
    "samples": 301,
    "n": 3,
    "format": None,
    "output": None,
    "table": None,
    "perturbation": None,
    "snapshot": None,
}

_CONVERT = {
    "a": float, "b": float, "sigma_hat": float, "gamma": float, "r0": float, "t_end": float,
    "kmax": int, "points": int, "samples": int, "n": int,
    "format": str, "output": str, "table": str, "perturbation": str, "snapshot": str,
}

_HELP = {
    "gamma": "unset: required by threshold classification and modes",
    "r0": "unset: 1.1 times the stationary radius",
    "format": "unset: csv for tables, json for reports",
    "output": "unset: write the artifact to stdout",
}


class InputError(ValueError):
    """Bad command-line input, config file or perturbation file."""


class StageFailure(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"solver failure in stage '{stage}': {type(cause).__name__}: {cause}")
        self.stage = stage


_INPUT_ERRORS = (InvalidParameterError, NoNecroticCoreError, RadialDomainError, HarmonicIndexError, InputError)


@contextlib.contextmanager
def _stage(name: str):
    try:
        yield
    except _INPUT_ERRORS:
        raise
    except Exception as exc:
        raise StageFailure(name, exc) from exc


@dataclass
class RunConfig:
    command: str
    params: ModelParams
    options: dict = field(default_factory=dict)

    def __getattr__(self, name):
        if name == "options":
            raise AttributeError(name)
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None


# ---------------------------------------------------------------------------
# Config and serialization
# ---------------------------------------------------------------------------

def read_config_file(path: str) -> dict:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise InputError(f"{path}:{lineno}: unknown key '{key}'")
        out[key] = _convert(key, value, f"{path}:{lineno}")
    return out


def _convert(key: str, value: str, where: str):
    if value == "":
        return None
    try:
        return _CONVERT[key](value)
    except ValueError as exc:
        raise InputError(f"{where}: bad value for {key}: {value!r}") from exc


def format_config(settings: dict) -> str:
    lines = []
    for key, value in settings.items():
        text = "" if value is None else (FLOAT_FMT % value if isinstance(value, float) else str(value))
        note = f"  # {_HELP[key]}" if key in _HELP and value is None else ""
        lines.append(f"{key} = {text}{note}".rstrip())
    return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return FLOAT_FMT % value
    return str(value)


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def json_text(obj) -> str:
    # json writes floats with repr, which round-trips exactly
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def read_perturbation_file(path: str) -> HarmonicExpansion:
    """Parse ``k l c`` triples (whitespace or comma separated, ``#`` comments)."""
    triples = []
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read perturbation file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise InputError(f"{path}:{lineno}: expected three fields 'k l c'")
        try:
            triples.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
    if not triples:
        raise InputError(f"{path}: no perturbation coefficients")
    return HarmonicExpansion.from_triples(triples)


# ---------------------------------------------------------------------------
# Commands.  Each returns (artifact text, summary text, exit status).
# ---------------------------------------------------------------------------

def _fmt_kind(cfg: RunConfig, default: str) -> str:
    fmt = cfg.format or default
    if fmt not in ("csv", "json"):
        raise InputError(f"--format must be csv or json, got {fmt!r}")
    return fmt


def _stationary_state(params: ModelParams) -> radial.RadialStationary:
    with _stage("stationary radius"):
        return radial.solve_stationary_radius(params)


def cmd_stationary(cfg: RunConfig):
    if cfg.points < 2:
        raise InputError("--points must be at least 2")
    stat = _stationary_state(cfg.params)
    with _stage("stationary profile"):
        table = stat.profile_table(cfg.points)
    header = ["r", "sigma", "dsigma", "pi0", "dpi0"]
    summary = f"r_star = {_fmt(stat.r_star)}\nr_s = {_fmt(stat.r_s)}\nk_s = {_fmt(stat.k_s)}\n"
    if _fmt_kind(cfg, "csv") == "csv":
        return csv_text(header, table.tolist()), summary, EXIT_OK
    doc = {
        "params": cfg.params.as_dict(), "r_star": stat.r_star, "r_s": stat.r_s, "k_s": stat.k_s,
        "d_const": stat.d_const, "c_const": stat.c_const,
        "profile": {name: [float(v) for v in table[:, j]] for j, name in enumerate(header)},
    }
    return json_text(doc), summary, EXIT_OK


def _require_gamma(cfg: RunConfig) -> float:
    if cfg.gamma is None:
        raise InputError(f"'{cfg.command}' needs --gamma")
    if not cfg.gamma > 0:
        raise InputError(f"--gamma must be positive, got {cfg.gamma!r}")
    return cfg.gamma


def _check_kmax(cfg: RunConfig) -> None:
    if cfg.kmax < 2:
        raise InputError("--kmax must be at least 2")


def cmd_spectrum(cfg: RunConfig):
    gamma = _require_gamma(cfg)
    _check_kmax(cfg)
    stat = _stationary_state(cfg.params)
    with _stage("mode spectrum"):
        report = spectrum.classify_stability(cfg.params, gamma, cfg.kmax, stat=stat)
    rows = list(report.table_rows())
    table = csv_text(["k", "a_k", "gamma_k"], rows)
    if cfg.table:
        atomic_write(cfg.table, table)
    summary = (f"gamma_star = {_fmt(report.gamma_star)}\nargmax_k = {report.argmax_k}\n"
               f"classification = {report.classification}\n")
    if _fmt_kind(cfg, "json") == "csv":
        return table, summary, EXIT_OK
    return json_text(report.to_dict()), summary, EXIT_OK


def cmd_threshold(cfg: RunConfig):
    _check_kmax(cfg)
    if cfg.gamma is not None:
        _require_gamma(cfg)
    stat = _stationary_state(cfg.params)
    with _stage("threshold"):
        gstar, arg = spectrum.gamma_star(stat, kmax=cfg.kmax)
    doc = {"params": cfg.params.as_dict(), "r_s": stat.r_s, "gamma_star": gstar, "argmax_k": arg}
    if cfg.gamma is not None:
        doc["gamma"] = cfg.gamma
        doc["classification"] = spectrum.classify(cfg.gamma, gstar)
    text = "".join(f"{k} = {_fmt(v)}\n" for k, v in doc.items() if k != "params")
    if _fmt_kind(cfg, "json") == "json" and cfg.output:
        return json_text(doc), text, EXIT_OK
    return text, text, EXIT_OK


def _time_grid(cfg: RunConfig) -> np.ndarray:
    if not cfg.t_end > 0 or cfg.samples < 2:
        raise InputError("need --t-end > 0 and --samples >= 2")
    return np.linspace(0.0, cfg.t_end, cfg.samples)


def cmd_evolve(cfg: RunConfig):
    t = _time_grid(cfg)
    stat = _stationary_state(cfg.params)
    r0 = 1.1 * stat.r_s if cfg.r0 is None else cfg.r0
    if not r0 > 0:
        raise InputError(f"--r0 must be positive, got {r0!r}")
    with _stage("radius evolution"):
        trace = dynamics.evolve_radius(r0, cfg.t_end, cfg.params, t_eval=t)
    summary = f"r0 = {_fmt(r0)}\nr_s = {_fmt(stat.r_s)}\nr_final = {_fmt(trace.values[-1])}\n"
    if _fmt_kind(cfg, "csv") == "csv":
        return csv_text(["t", "R"], zip(trace.times, trace.values)), summary, EXIT_OK
    doc = {"params": cfg.params.as_dict(), "r0": r0, "r_s": stat.r_s,
           "t": [float(v) for v in trace.times], "R": [float(v) for v in trace.values]}
    return json_text(doc), summary, EXIT_OK


def cmd_modes(cfg: RunConfig):
    gamma = _require_gamma(cfg)
    if not cfg.perturbation:
        raise InputError("'modes' needs --perturbation FILE")
    xi = read_perturbation_file(cfg.perturbation)
    t = _time_grid(cfg)
    stat = _stationary_state(cfg.params)
    with _stage("linear mode evolution"):
        trace = dynamics.evolve_modes(xi, gamma, t, stat)
    names = [f"c_{k}_{l}" for k, l in trace.metadata["indices"]]
    if cfg.snapshot:
        theta = np.linspace(0.0, np.pi, 37)
        phi = np.linspace(0.0, 2 * np.pi, 73)
        T, P = np.meshgrid(theta, phi, indexing="ij")
        radius = dynamics.shape_snapshot(trace, len(t) - 1, stat, T, P)
        atomic_write(cfg.snapshot, csv_text(["theta", "phi", "radius"],
                                            zip(T.ravel(), P.ravel(), np.ravel(radius))))
    rates = trace.metadata["rates"]
    summary = "".join(f"a_{k} = {_fmt(v)}\n" for k, v in rates.items())
    if _fmt_kind(cfg, "csv") == "csv":
        rows = ([ti, *vals] for ti, vals in zip(trace.times, trace.values))
        return csv_text(["t", *names], rows), summary, EXIT_OK
    doc = {"params": cfg.params.as_dict(), "gamma": gamma, "note": trace.metadata["note"],
           "indices": [list(p) for p in trace.metadata["indices"]],
           "rates": {str(k): v for k, v in rates.items()},
           "t": [float(v) for v in trace.times],
           "c": [[float(v) for v in row] for row in trace.values]}
    return json_text(doc), summary, EXIT_OK


def cmd_heleshaw(cfg: RunConfig):
    if cfg.n < 2 or cfg.kmax < 0:
        raise InputError("need --n >= 2 and --kmax >= 0")
    hs = spectrum.heleshaw_spectrum(cfg.n, cfg.kmax)
    rows = [(k, str(mu), spectrum.harmonic_multiplicity(k, cfg.n)) for k, mu in enumerate(hs.mu_values)]
    summary = f"mu = {', '.join(str(mu) for mu in hs.mu_values)}\nkernel_dim = {hs.kernel_dim}\n"
    if _fmt_kind(cfg, "csv") == "csv":
        return csv_text(["k", "mu", "multiplicity"], rows), summary, EXIT_OK
    doc = {"n": cfg.n, "kmax": cfg.kmax, "mu": [str(mu) for mu in hs.mu_values], "kernel_dim": hs.kernel_dim}
    return json_text(doc), summary, EXIT_OK


def cmd_verify(cfg: RunConfig):
    _check_kmax(cfg)
    report = verify_suite(cfg.params, kmax=cfg.kmax)
    text = "\n".join(report.lines()) + "\n"
    status = EXIT_OK if report.passed else EXIT_VERIFY
    if cfg.output and _fmt_kind(cfg, "json") == "json":
        return json_text(report.to_dict()), text, status
    return text, text, status


COMMANDS = {
    "stationary": (cmd_stationary, "stationary radii and the radial profile table"),
    "spectrum": (cmd_spectrum, "eigenvalue and neutral surface tension table with a JSON report"),
    "threshold": (cmd_threshold, "critical surface tension and classification"),
    "evolve": (cmd_evolve, "radius trace of the radially symmetric flow"),
    "modes": (cmd_modes, "linearized mode evolution from a (k, l, c) perturbation file"),
    "heleshaw": (cmd_heleshaw, "Hele-Shaw linearized multipliers"),
    "verify": (cmd_verify, "run the full check suite; exit 0 iff every check passes"),
}

_FLAGS = {
    "stationary": ["points"],
    "spectrum": ["gamma", "kmax", "table"],
    "threshold": ["gamma", "kmax"],
    "evolve": ["r0", "t_end", "samples"],
    "modes": ["gamma", "perturbation", "t_end", "samples", "snapshot"],
    "heleshaw": ["n", "kmax"],
    "verify": ["kmax"],
}

_NO_PARAMS = {"heleshaw"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="necrostab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", help="flat key = value settings file")
    parser.add_argument("--show-config", action="store_true", help="print the resolved defaults and exit")
    sub = parser.add_subparsers(dest="command")
    S = argparse.SUPPRESS
    for name, (_, helptext) in COMMANDS.items():
        p = sub.add_parser(name, help=helptext, argument_default=S)
        p.add_argument("--config", help="flat key = value settings file")
        if name not in _NO_PARAMS:
            p.add_argument("--a", type=float, help="proliferation rate a")
            p.add_argument("--b", type=float, help="apoptosis rate b (b < a sigma_hat)")
            p.add_argument("--sigma-hat", type=float, help="necrosis threshold in (0, 1)")
        for flag in _FLAGS[name]:
            p.add_argument("--" + flag.replace("_", "-"), type=_CONVERT[flag])
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--output", "-o", help="artifact path (written atomically)")
    return parser


def resolve(argv: Optional[list[str]] = None) -> tuple[Optional[RunConfig], dict]:
    ns = build_parser().parse_args(argv)
    settings = dict(DEFAULTS)
    if getattr(ns, "config", None):
        settings.update(read_config_file(ns.config))
    flags = {k: v for k, v in vars(ns).items() if k in DEFAULTS}
    settings.update(flags)
    if ns.show_config or ns.command is None:
        return None, settings
    params = ModelParams(settings["a"], settings["b"], settings["sigma_hat"], settings["gamma"])
    options = {k: v for k, v in settings.items() if k not in ("a", "b", "sigma_hat")}
    return RunConfig(ns.command, params, options), settings


def run_command(argv: Optional[list[str]] = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        cfg, settings = resolve(argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    except _INPUT_ERRORS as exc:
        stderr.write(f"invalid input: {exc}\n")
        return EXIT_INVALID
    if cfg is None:
        stdout.write(format_config(settings))
        return EXIT_OK
    func = COMMANDS[cfg.command][0]
    try:
        artifact, summary, status = func(cfg)
        if cfg.output:
            atomic_write(cfg.output, artifact)
            stdout.write(summary)
        else:
            stdout.write(artifact)
    except _INPUT_ERRORS as exc:
        stderr.write(f"invalid input: {exc}\n")
        return EXIT_INVALID
    except StageFailure as exc:
        stderr.write(f"{exc}\n")
        return EXIT_SOLVER
    except OSError as exc:
        stderr.write(f"invalid input: cannot write output: {exc}\n")
        return EXIT_INVALID
    return status


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
