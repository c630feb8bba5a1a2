"""Command-line front end.

Parameters come from an INI file (section [common] plus one section per
subcommand) and from flags; flags win.  Every run writes its artifacts and
a meta.txt echoing the resolved parameters into the output directory.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 benchmark tolerance exceeded.
"""

import argparse
import configparser
import math
import os
import sys

import numpy as np

from . import __version__
from . import reservoir as rm
from .decoherence import (
    BECFock,
    CoherentCircleMixture,
    CoherentDirac,
    ReservoirSpec,
    Thermal,
    classify_asymptotics,
    decoherence_fn,
)
from .errors import DomainError, IntegrationError, SamplingError, StiffnessError, UsageError
from .output import config_hash, write_csv, write_key_values, write_rows

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_TOLERANCE = 0, 2, 3, 4
OUT_ENV = "QCSPIN_OUT"

COMMANDS = ("decoherence", "nonmarkov-scan", "qc", "benchmark", "scattering", "rabi", "asymptotics")

# key -> (type, default, help)
SCHEMA = {
    "alpha": (float, 0.0, "infrared exponent of the form factor (> -3)"),
    "omega_c": (float, 1.0, "ultraviolet cutoff frequency (> 0)"),
    "omega0": (float, 1.0, "spin level splitting"),
    "lam": (float, 1.0, "coupling constant lambda"),
    "beta": (float, 1.0, "inverse temperature beta' of the thermal state (> 0)"),
    "eps": (float, 0.0, "classicality parameter in [0, 1]"),
    "family": (str, "thermal", "reservoir state: dirac | circle | bec | thermal"),
    "coupling": (str, "sz_half", "interaction operator G: sz_half | sx | sy | sz"),
    "gamma11": (float, 0.5, "initial population of the upper level"),
    "gamma12_re": (float, 0.5, "real part of the initial coherence"),
    "gamma12_im": (float, 0.0, "imaginary part of the initial coherence"),
    "t_min": (float, 0.0, "first time of the grid"),
    "t_max": (float, 20.0, "last time of the grid"),
    "n_t": (int, 200, "number of grid times"),
    "eps_min": (float, 0.0, "first eps of the scan grid"),
    "eps_max": (float, 1.0, "last eps of the scan grid"),
    "n_eps": (int, 5, "number of eps values"),
    "eps_list": (str, "", "comma-separated eps values (overrides eps_min/eps_max/n_eps)"),
    "sampler": (str, "circle", "classical field measure: dirac | circle | gaussian"),
    "n_nodes": (int, 128, "theta nodes of the circle sampler"),
    "quadrature": (str, "true", "circle sampler on deterministic theta nodes (true) or random phases"),
    "n_samples": (int, 2000, "Gaussian samples (antithetic pairs)"),
    "n_modes": (int, 64, "modes of the Gaussian field grid"),
    "mode_min": (float, 0.01, "lowest mode frequency"),
    "mode_max": (float, 20.0, "highest mode frequency"),
    "rel_tol": (float, 1e-10, "relative quadrature tolerance"),
    "abs_tol": (float, 1e-13, "absolute quadrature tolerance"),
    "ode_tol": (float, 1e-11, "local error tolerance of the ODE integrator"),
    "tolerance": (float, 1e-7, "benchmark: maximal allowed discrepancy"),
    "theta": (float, 0.0, "phase theta of the classical field e^{i theta} f0"),
    "omega_R": (float, None, "constant dispersion frequency (polaron); unset = radial dispersion"),
    "kappa": (float, 0.5, "rabi: drive amplitude Re<f0, g>"),
    "polarization": (str, "circular", "rabi: circular | linear"),
    "theta_nodes": (int, 64, "rabi: theta nodes of the condensate average"),
    "n_periods": (int, 10, "rabi: periods checked in the linear case"),
    "T_values": (str, "10,20,40,80,160", "scattering: comma-separated cutoff times"),
    "T_l1": (float, 100.0, "scattering: upper limit of the alpha L1 quadrature"),
    "window_lo": (float, 10.0, "asymptotics: start of the fit window"),
    "window_hi": (float, 200.0, "asymptotics: end of the fit window"),
    "n_points": (int, 200, "asymptotics: fit points"),
    "derivative": (str, "true", "decoherence: also write d|D|^2/dt"),
}


class ConfigError(Exception):
    pass


def _convert(key, raw):
    typ = SCHEMA[key][0]
    if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("", "none")):
        if typ is str:
            return "" if raw is not None else None
        return None
    try:
        return typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot parse {raw!r} as {typ.__name__}") from None


def _as_bool(key, v):
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {v!r}")


def load_config(path, command):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"config: {exc}") from None
    values = {}
    for section in ("common", command):
        if not cp.has_section(section):
            continue
        for k, v in cp.items(section):
            if k not in SCHEMA:
                raise ConfigError(f"{k}: unknown key in section [{section}]")
            values[k] = _convert(k, v)
    unknown = [s for s in cp.sections() if s not in ("common",) + COMMANDS]
    if unknown:
        raise ConfigError(f"config: unknown section(s) {', '.join(unknown)}")
    return values


def resolve(args):
    cfg = {k: v[1] for k, v in SCHEMA.items()}
    if args.config:
        cfg.update(load_config(args.config, args.command))
    for k in SCHEMA:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = _convert(k, v)
    cfg["seed"] = args.seed
    cfg["threads"] = 1 if args.deterministic else args.threads
    cfg["command"] = args.command
    validate(cfg)
    return cfg


def _floats(key, s):
    try:
        return [float(x) for x in str(s).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {s!r}") from None


def validate(cfg):
    def need(cond, key, msg):
        if not cond:
            raise ConfigError(f"{key}: {msg} (got {cfg.get(key)!r})")

    need(cfg["alpha"] is not None and cfg["alpha"] > -3.0, "alpha", "must be > -3")
    need(cfg["omega_c"] is not None and cfg["omega_c"] > 0.0, "omega_c", "must be > 0")
    need(cfg["omega0"] is not None and cfg["omega0"] > 0.0, "omega0", "must be > 0")
    need(cfg["beta"] is not None and cfg["beta"] > 0.0, "beta", "must be > 0")
    need(cfg["eps"] is not None and 0.0 <= cfg["eps"] <= 1.0, "eps", "must lie in [0, 1]")
    need(cfg["lam"] is not None and math.isfinite(cfg["lam"]), "lam", "must be finite")
    need(cfg["family"] in ("dirac", "circle", "bec", "thermal"), "family", "unknown family")
    need(cfg["coupling"] in ("sz_half", "sx", "sy", "sz"), "coupling", "unknown coupling")
    need(cfg["sampler"] in ("dirac", "circle", "gaussian"), "sampler", "unknown sampler")
    need(cfg["polarization"] in ("circular", "linear"), "polarization", "unknown polarization")
    need(cfg["n_t"] is not None and cfg["n_t"] >= 1, "n_t", "must be >= 1")
    need(cfg["t_min"] is not None and cfg["t_min"] >= 0.0, "t_min", "must be >= 0")
    need(cfg["t_max"] is not None and (cfg["t_max"] > cfg["t_min"] or cfg["n_t"] == 1), "t_max",
         "must exceed t_min")
    need(cfg["n_eps"] is not None and cfg["n_eps"] >= 1, "n_eps", "must be >= 1")
    need(cfg["n_nodes"] >= 1, "n_nodes", "must be >= 1")
    need(cfg["n_samples"] >= 1, "n_samples", "must be >= 1")
    need(cfg["n_modes"] >= 2, "n_modes", "must be >= 2")
    need(0.0 < cfg["mode_min"] < cfg["mode_max"], "mode_min", "need 0 < mode_min < mode_max")
    need(cfg["rel_tol"] > 0.0, "rel_tol", "must be > 0")
    need(cfg["abs_tol"] > 0.0, "abs_tol", "must be > 0")
    need(cfg["ode_tol"] > 0.0, "ode_tol", "must be > 0")
    need(cfg["omega_R"] is None or cfg["omega_R"] > 0.0, "omega_R", "must be > 0")
    need(0.0 < cfg["window_lo"] < cfg["window_hi"], "window_lo", "need 0 < window_lo < window_hi")
    need(cfg["theta_nodes"] >= 32, "theta_nodes", "must be >= 32")
    need(cfg["n_periods"] >= 0, "n_periods", "must be >= 0")
    for key in ("quadrature", "derivative"):
        _as_bool(key, cfg[key])
    eps = eps_grid(cfg)
    need(all(0.0 <= e <= 1.0 for e in eps), "eps_list" if cfg["eps_list"] else "eps_max",
         "eps grid must lie in [0, 1]")
    need(len(eps) == 1 or np.all(np.diff(eps) > 0), "eps_list", "eps grid must be increasing")
    Ts = _floats("T_values", cfg["T_values"])
    need(len(Ts) >= 1 and all(T > 0 for T in Ts), "T_values", "need positive cutoff times")
    try:
        gamma0(cfg)
    except DomainError as exc:
        raise ConfigError(f"gamma11/gamma12: {exc}") from None


def eps_grid(cfg):
    if cfg["eps_list"]:
        return np.array(_floats("eps_list", cfg["eps_list"]))
    if cfg["n_eps"] == 1:
        return np.array([cfg["eps_min"]])
    return np.linspace(cfg["eps_min"], cfg["eps_max"], cfg["n_eps"])


def t_grid(cfg):
    if cfg["n_t"] == 1:
        return np.array([cfg["t_min"]])
    return np.linspace(cfg["t_min"], cfg["t_max"], cfg["n_t"])


def gamma0(cfg):
    from .qc_dynamics import QubitState

    return QubitState.from_entries(cfg["gamma11"], complex(cfg["gamma12_re"], cfg["gamma12_im"]))


def form_factor(cfg):
    return rm.PaperRadial(cfg["alpha"], cfg["omega_c"])


def engine(cfg):
    return rm.InnerProductEngine(rel_tol=cfg["rel_tol"], abs_tol=cfg["abs_tol"])


def reservoir_spec(cfg, g):
    fam = cfg["family"]
    state = {"dirac": CoherentDirac, "circle": CoherentCircleMixture, "bec": BECFock}.get(fam)
    state = Thermal(cfg["beta"]) if fam == "thermal" else state(g)
    return ReservoirSpec(state, cfg["eps"], cfg["lam"])


def coupling_matrix(cfg):
    from .qc_dynamics import SX, SY, SZ

    return {"sz_half": 0.5 * SZ, "sx": SX, "sy": SY, "sz": SZ}[cfg["coupling"]]


def sampler(cfg, g):
    from .qc_dynamics import CircleSampler, DiracSampler, GaussianThermalSampler, ModeGrid

    kind = cfg["sampler"]
    if kind == "dirac":
        return DiracSampler(g)
    if kind == "circle":
        return CircleSampler(g, cfg["n_nodes"], _as_bool("quadrature", cfg["quadrature"]))
    modes = ModeGrid.log_spaced(cfg["n_modes"], cfg["mode_min"], cfg["mode_max"])
    return GaussianThermalSampler(cfg["beta"], modes, max(cfg["n_samples"], 2))


def _meta(out, cfg, chash, extra=()):
    items = [(k, cfg[k]) for k in sorted(cfg) if k != "out"] + list(extra)
    write_key_values(os.path.join(out, "meta.txt"), items, chash)


# ---------------------------------------------------------------------------
# subcommands


def cmd_decoherence(cfg, out, chash):
    from .nonmarkov import d_absD2_dt

    g = form_factor(cfg)
    spec = reservoir_spec(cfg, g)
    eng = engine(cfg)
    with_d = _as_bool("derivative", cfg["derivative"])
    rows = []
    for t in t_grid(cfg):
        try:
            D = decoherence_fn(spec, g, t, eng)
            d = d_absD2_dt(spec, g, t, eng) if with_d else None
        except (IntegrationError, StiffnessError, ArithmeticError) as exc:
            raise NumericalFailure(f"decoherence failed at t = {float(t)!r}: {exc}") from exc
        rows.append((float(t), D.real, D.imag, abs(D) ** 2, d))
    write_csv(os.path.join(out, "trace.csv"), ("t", "ReD", "ImD", "absD2", "dAbsD2dt"), rows, chash)
    _meta(out, cfg, chash)
    return EXIT_OK


def cmd_nonmarkov_scan(cfg, out, chash):
    from .nonmarkov import region_scan

    g = form_factor(cfg)
    spec = reservoir_spec(cfg, g)
    rmap = region_scan(spec, g, t_grid(cfg), eps_grid(cfg), engine(cfg), cfg["threads"])
    write_rows(os.path.join(out, "matrix.csv"), "first row t grid, first column eps, body d|D|^2/dt",
               rmap.matrix_rows(), chash)
    write_csv(os.path.join(out, "regions.csv"), ("eps", "t_start", "t_end"), rmap.region_rows(), chash)
    extra = [("failed_cells", len(rmap.failures))]
    extra += [("failed_cell", f"eps={e!r} t={t!r} {msg}") for e, t, msg in rmap.failures]
    if rmap.note:
        extra.append(("note", rmap.note))
    _meta(out, cfg, chash, extra)
    return EXIT_OK


def _coupling(cfg):
    from .qc_dynamics import SpinCoupling

    return SpinCoupling(coupling_matrix(cfg), cfg["omega0"], cfg["lam"])


def cmd_qc(cfg, out, chash):
    from .qc_dynamics import QCTrajectory, qc_evolve

    g = form_factor(cfg)
    traj = qc_evolve(_coupling(cfg), sampler(cfg, g), gamma0(cfg), t_grid(cfg), g,
                     seed=cfg["seed"], tol=cfg["ode_tol"], workers=cfg["threads"], engine=engine(cfg))
    write_csv(os.path.join(out, "trajectory.csv"), QCTrajectory.COLUMNS, traj.rows(), chash)
    _meta(out, cfg, chash, [("n_samples_used", traj.n_samples - traj.failures),
                            ("failures", traj.failures)])
    return EXIT_OK


def cmd_benchmark(cfg, out, chash):
    from .qc_dynamics import BenchmarkResult, benchmark

    if cfg["coupling"] != "sz_half":
        raise ConfigError("coupling: benchmark needs the energy-conserving coupling sz_half")
    g = form_factor(cfg)
    res = benchmark(_coupling(cfg), sampler(cfg, g), g, gamma0(cfg), t_grid(cfg),
                    seed=cfg["seed"], tol=cfg["ode_tol"], workers=cfg["threads"], engine=engine(cfg))
    write_csv(os.path.join(out, "benchmark.csv"), BenchmarkResult.COLUMNS, res.rows(), chash)
    ok = res.max_discrepancy <= cfg["tolerance"]
    _meta(out, cfg, chash, [("max_discrepancy", res.max_discrepancy), ("within_tolerance", ok)])
    print(f"max discrepancy {res.max_discrepancy!r} (tolerance {cfg['tolerance']!r})")
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_scattering(cfg, out, chash):
    from .scattering import field_amplitude, scattering_report

    g = form_factor(cfg)
    amp = field_amplitude(g, g, theta=cfg["theta"], omega_R=cfg["omega_R"], engine=engine(cfg))
    rep = scattering_report(_coupling(cfg), amp, _floats("T_values", cfg["T_values"]), cfg["T_l1"])
    write_key_values(os.path.join(out, "report.txt"), rep.key_values(), chash)
    write_csv(os.path.join(out, "increments.csv"), ("T", "norm_increment"), rep.increment_rows(), chash)
    _meta(out, cfg, chash)
    print("L¹ divergent" if rep.divergent else f"alpha_l1 = {rep.alpha_l1!r}")
    return EXIT_OK


def cmd_rabi(cfg, out, chash):
    from .polaron import (
        PolaronSpec,
        circular_closed_form,
        circular_trajectory,
        linear_periodicity_check,
        rabi_frequency,
    )

    spec = PolaronSpec(cfg["omega_R"] if cfg["omega_R"] is not None else 0.7, cfg["omega0"],
                       cfg["kappa"], cfg["polarization"], cfg["theta"], cfg["lam"])
    g0 = gamma0(cfg)
    if spec.polarization == "circular":
        ts = t_grid(cfg)
        ode = circular_trajectory(spec, g0, ts, cfg["theta_nodes"], min(cfg["ode_tol"], 1e-12))
        rows = []
        worst = 0.0
        for k, t in enumerate(ts):
            c = circular_closed_form(spec, g0, t)
            d = float(np.max(np.abs(c - ode[k])))
            worst = max(worst, d)
            rows.append((float(t), c[0, 0].real, c[0, 1].real, c[0, 1].imag,
                         ode[k][0, 0].real, ode[k][0, 1].real, ode[k][0, 1].imag, d))
        write_csv(os.path.join(out, "trajectory.csv"),
                  ("t", "closed11", "Re_closed12", "Im_closed12", "ode11", "Re_ode12", "Im_ode12",
                   "discrepancy"), rows, chash)
        _meta(out, cfg, chash, [("rabi_frequency", rabi_frequency(spec)), ("max_discrepancy", worst)])
    else:
        res = linear_periodicity_check(spec, g0, cfg["n_periods"], min(cfg["ode_tol"], 1e-12))
        write_csv(os.path.join(out, "periodicity.csv"), ("k", "t", "deviation"),
                  [(k + 1, (k + 1) * res.period, d) for k, d in enumerate(res.deviations)], chash)
        _meta(out, cfg, chash, [("max_deviation", res.max_deviation),
                                ("floquet_error", res.floquet_error)])
    return EXIT_OK


def cmd_asymptotics(cfg, out, chash):
    g = form_factor(cfg)
    fam = "thermal" if cfg["family"] == "thermal" else "coherent"
    rep = classify_asymptotics(g, eps_lam2=cfg["eps"] * cfg["lam"] ** 2,
                               window=(cfg["window_lo"], cfg["window_hi"]), n_points=cfg["n_points"],
                               family=fam, beta=cfg["beta"], eps=cfg["eps"], engine=engine(cfg))
    items = [("p", rep.p), ("regime", rep.regime), ("law", rep.law), ("residual", rep.residual),
             ("conclusive", rep.conclusive), ("family", rep.family)]
    items += [(f"coef_{k}", v) for k, v in rep.coefficients.items()]
    items += [(f"rate_{k}", v) for k, v in rep.rate_constants.items()]
    write_key_values(os.path.join(out, "report.txt"), items, chash)
    _meta(out, cfg, chash)
    print(f"regime {rep.regime} (residual {rep.residual:.3g})")
    return EXIT_OK


HANDLERS = {
    "decoherence": cmd_decoherence,
    "nonmarkov-scan": cmd_nonmarkov_scan,
    "qc": cmd_qc,
    "benchmark": cmd_benchmark,
    "scattering": cmd_scattering,
    "rabi": cmd_rabi,
    "asymptotics": cmd_asymptotics,
}


class NumericalFailure(Exception):
    pass


def build_parser():
    p = argparse.ArgumentParser(
        prog="qcspin",
        description="Spin-boson decoherence, quasi-classical spin dynamics and scattering checks.",
        epilog=f"Output directory defaults to ${OUT_ENV} or ./qcspin_out. "
               "Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 benchmark tolerance.",
    )
    p.add_argument("--version", action="version", version=f"qcspin {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "decoherence": "D(t) and d|D|^2/dt on a time grid (trace.csv)",
        "nonmarkov-scan": "sign of d|D|^2/dt on a (t, eps) grid (matrix.csv, regions.csv)",
        "qc": "averaged quasi-classical spin dynamics (trajectory.csv)",
        "benchmark": "ODE average vs closed form for G = sz/2 (benchmark.csv)",
        "scattering": "alpha L1 norm and wave-operator approximants (report.txt, increments.csv)",
        "rabi": "constant-dispersion drive: circular closed form or linear periodicity",
        "asymptotics": "long-time regime of the decoherence exponent (report.txt)",
    }
    for name in COMMANDS:
        s = sub.add_parser(name, help=helps[name], description=helps[name])
        s.add_argument("--config", metavar="PATH", help="INI file with [common] and [%s] sections" % name)
        s.add_argument("--out", metavar="DIR", help=f"output directory (default ${OUT_ENV} or ./qcspin_out)")
        s.add_argument("--seed", type=int, default=0, help="RNG seed for sampled measures")
        s.add_argument("--threads", type=int, default=1, help="worker threads, 0 = one per CPU")
        s.add_argument("--deterministic", action="store_true", help="force single-threaded execution")
        for key, (typ, default, text) in SCHEMA.items():
            s.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None, metavar=typ.__name__.upper(),
                           help=f"{text} [default: {default}]")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = resolve(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or os.environ.get(OUT_ENV) or "qcspin_out"
    os.makedirs(out, exist_ok=True)
    cfg["out"] = os.path.abspath(out)
    hashed = {k: v for k, v in cfg.items() if k not in ("out", "threads")}
    chash = config_hash(hashed)
    try:
        return HANDLERS[args.command](cfg, out, chash)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, UsageError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, IntegrationError, StiffnessError, SamplingError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
