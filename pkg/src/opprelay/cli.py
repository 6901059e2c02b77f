"""Command line front end: bounds, simulations, sweeps and the worked example.

Exit codes: 0 success, 2 configuration/usage error, 3 ``--check`` failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import io
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    ber_union_bound,
    packet_success_lower_bound,
    rayleigh_snr_cdf,
    wef_table,
)
from .channel import (
    LinkBudget,
    NoiseParams,
    PathLossParams,
    db_to_linear,
    linear_to_db,
    path_loss_gain,
)
from .protocol import ContentionConfig, SelectionPolicy
from .sim import ExperimentConfig, resolve_axis, run_policies, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 2, 3
ALL_POLICIES = tuple(SelectionPolicy)


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


class ConfigError(ValueError):
    def __init__(self, lineno: int | None, msg: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno else msg)


# section -> key -> (target, converter); target "cfg.x", "contention.x", "pathloss.x",
# "noise.x" or "policies"
def _floats(s):
    return tuple(float(v) for v in s.replace(",", " ").split())


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _prob(s):
    vals = _floats(s)
    return vals[0] if len(vals) == 1 else vals


def _policies(s):
    return tuple(SelectionPolicy.parse(v) for v in s.replace(",", " ").split())


def _opt_float(s):
    return None if s.strip().lower() in ("", "none") else float(s)


SCHEMA = {
    "network": {
        "n_relays": ("cfg.n_relays", int),
        "sd_distance": ("cfg.sd_distance", float),
        "relay_offsets": ("cfg.relay_offsets", _floats),
        "redraw_topology": ("cfg.redraw_topology", _bool),
        "carrier_frequency": ("pathloss.carrier_frequency", float),
        "reference_distance": ("pathloss.reference_distance", float),
        "pathloss_exponent": ("pathloss.exponent", float),
        "noise_db": ("noise.n0_db", float),
    },
    "contention": {
        "minislots": ("contention.minislots", int),
        "feedback_prob": ("contention.feedback_prob", _prob),
        "eta_db": ("contention.eta_db", float),
        "beta_db": ("contention.beta_db", float),
        "bias": ("contention.bias", float),
        "policies": ("policies", _policies),
    },
    "code": {
        "puncturing_table": ("cfg.puncturing_table", str),
        "wef_table": ("wef_table", str),
    },
    "run": {
        "snr_db": ("cfg.snr_db", _opt_float),
        "tx_energy_db": ("cfg.tx_energy_db", _opt_float),
        "episodes": ("cfg.episodes", int),
        "seed": ("cfg.seed", int),
        "workers": ("cfg.workers", int),
        "relay_recombining": ("cfg.relay_recombining", _bool),
        "early_stop": ("cfg.early_stop", _bool),
        "rel_precision": ("cfg.rel_precision", float),
        "min_episodes": ("cfg.min_episodes", int),
        "batch_size": ("cfg.batch_size", int),
    },
}
IGNORED_SECTIONS = {"manifest"}


@dataclasses.dataclass
class RunSpec:
    config: ExperimentConfig
    policies: tuple[SelectionPolicy, ...] = ALL_POLICIES
    wef_table: str | None = None


def parse_config(text: str) -> RunSpec:
    """Parse ``[section]`` / ``key = value`` text; an empty text gives the defaults."""
    groups = {"cfg": {}, "contention": {}, "pathloss": {}, "noise": {}}
    extra = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(lineno, f"malformed section header {raw.strip()!r}")
            section = line[1:-1].strip().lower()
            if section not in SCHEMA and section not in IGNORED_SECTIONS:
                raise ConfigError(lineno, f"unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        if section is None:
            raise ConfigError(lineno, "key outside of any [section]")
        if section in IGNORED_SECTIONS:
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in SCHEMA[section]:
            raise ConfigError(lineno, f"unknown key {key!r} in [{section}]")
        target, conv = SCHEMA[section][key]
        try:
            parsed = conv(value)
        except ValueError as exc:
            raise ConfigError(lineno, f"bad value for {key}: {exc}") from None
        if "." in target:
            grp, attr = target.split(".")
            groups[grp][attr] = parsed
        else:
            extra[target] = parsed

    try:
        contention = ContentionConfig(**groups["contention"])
        cfg_kw = dict(groups["cfg"])
        if "tx_energy_db" in cfg_kw and cfg_kw["tx_energy_db"] is not None:
            cfg_kw.setdefault("snr_db", None)
        cfg = ExperimentConfig(
            contention=contention,
            pathloss=PathLossParams(**groups["pathloss"]),
            noise=NoiseParams(**groups["noise"]),
            **cfg_kw,
        )
    except ValueError as exc:
        raise ConfigError(None, str(exc)) from None
    spec = RunSpec(cfg, extra.get("policies", ALL_POLICIES), extra.get("wef_table"))
    if not spec.policies:
        raise ConfigError(None, "no policies listed")
    return spec


def load_config(path) -> RunSpec:
    if path is None:
        return parse_config("")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(None, f"cannot read config: {exc}") from None
    return parse_config(text)


def render_config(spec: RunSpec) -> str:
    """Inverse of ``parse_config``: every setting, one per line."""
    cfg = spec.config
    c = cfg.contention
    p = c.feedback_prob
    out = io.StringIO()
    out.write("[network]\n")
    out.write(f"n_relays = {cfg.n_relays}\n")
    out.write(f"sd_distance = {fmt(cfg.sd_distance)}\n")
    if cfg.relay_offsets is not None:
        out.write("relay_offsets = " + ", ".join(fmt(x) for x in cfg.relay_offsets) + "\n")
    out.write(f"redraw_topology = {str(cfg.redraw_topology).lower()}\n")
    out.write(f"carrier_frequency = {fmt(cfg.pathloss.carrier_frequency)}\n")
    out.write(f"reference_distance = {fmt(cfg.pathloss.reference_distance)}\n")
    out.write(f"pathloss_exponent = {fmt(cfg.pathloss.exponent)}\n")
    out.write(f"noise_db = {fmt(cfg.noise.n0_db)}\n")
    out.write("\n[contention]\n")
    out.write(f"minislots = {c.minislots}\n")
    out.write("feedback_prob = "
              + (", ".join(fmt(x) for x in p) if isinstance(p, tuple) else fmt(p)) + "\n")
    out.write(f"eta_db = {fmt(c.eta_db)}\n")
    out.write(f"beta_db = {fmt(c.beta_db)}\n")
    out.write(f"bias = {fmt(c.bias)}\n")
    out.write("policies = " + ", ".join(pol.value for pol in spec.policies) + "\n")
    out.write("\n[code]\n")
    if cfg.puncturing_table:
        out.write(f"puncturing_table = {cfg.puncturing_table}\n")
    if spec.wef_table:
        out.write(f"wef_table = {spec.wef_table}\n")
    out.write("\n[run]\n")
    if cfg.tx_energy_db is not None:
        out.write(f"tx_energy_db = {fmt(cfg.tx_energy_db)}\n")
    else:
        out.write(f"snr_db = {fmt(cfg.snr_db)}\n")
    for key in ("episodes", "seed", "workers", "min_episodes", "batch_size"):
        out.write(f"{key} = {getattr(cfg, key)}\n")
    out.write(f"rel_precision = {fmt(cfg.rel_precision)}\n")
    out.write(f"relay_recombining = {str(cfg.relay_recombining).lower()}\n")
    out.write(f"early_stop = {str(cfg.early_stop).lower()}\n")
    return out.getvalue()


def write_manifest(out_dir: Path, spec: RunSpec, command: str, outputs) -> Path:
    path = out_dir / "manifest.txt"
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    body = render_config(spec)
    body += "\n[manifest]\n"
    body += f"command = {command}\n"
    body += f"code_version = {__version__}\n"
    body += f"master_seed = {spec.config.seed}\n"
    body += f"timestamp = {stamp}\n"
    body += "outputs = " + ", ".join(str(Path(o).name) for o in outputs) + "\n"
    path.write_text(body)
    return path


def _write_csv(path: Path, header, rows, manifest_name="manifest.txt"):
    with open(path, "w", newline="") as fh:
        fh.write(f"# manifest: {manifest_name}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


# --- bound -----------------------------------------------------------------

BOUND_COLUMNS = ["gamma_db", "gamma_linear", "pb_bound", "vacuous", "p1_bound"]


def bound_rows(rate, snrs_linear, table_path=None):
    wef = wef_table(rate, table_path)
    rows = []
    for g in snrs_linear:
        pb = ber_union_bound(g, wef)
        p1 = packet_success_lower_bound(g, wef)
        gdb = float(linear_to_db(g)) if g > 0 else float("-inf")
        rows.append([gdb, float(g), pb, pb >= 1.0, p1.value])
    return rows


def cmd_bound(args) -> int:
    snrs = [float(db_to_linear(x)) for x in args.snr_db or []]
    snrs += [float(x) for x in args.snr or []]
    if args.snr_range:
        start, stop, step = args.snr_range
        if step <= 0:
            raise ConfigError(None, "--snr-range step must be positive")
        grid = np.arange(start, stop + step / 2, step)
        snrs += [float(db_to_linear(x)) for x in grid]
    if not snrs:
        raise ConfigError(None, "give at least one SNR (--snr-db, --snr or --snr-range)")
    try:
        rows = bound_rows(Fraction(args.rate), snrs, args.wef)
    except ValueError as exc:
        raise ConfigError(None, str(exc)) from None
    w = csv.writer(args.stdout)
    w.writerow(BOUND_COLUMNS)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return EXIT_OK


# --- simulate / sweep ------------------------------------------------------

SIM_COLUMNS = ["policy", "snr_db", "tx_energy_db", "episodes", "r_avg", "ci_low", "ci_high",
               "success_rate", "goodput", "mean_rounds", "relay_rounds", "source_rounds",
               "ber_round1", "ber_round2", "undetected"]


def _apply_overrides(spec: RunSpec, args) -> RunSpec:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.episodes is not None:
        changes["episodes"] = args.episodes
    if args.workers is not None:
        changes["workers"] = args.workers
    if changes:
        try:
            spec = dataclasses.replace(spec, config=spec.config.replace(**changes))
        except ValueError as exc:
            raise ConfigError(None, str(exc)) from None
    return spec


def _sim_row(res):
    cfg = res.config
    lo, hi = res.r_avg_ci
    sel = res.selections
    return [res.policy.value, cfg.snr_db if cfg.snr_db is not None else "",
            cfg.budget().energy_db_above_floor, res.episodes, res.r_avg, lo, hi,
            res.success_rate, res.goodput, float(res.rounds_used.mean()),
            sel["relay"], sel["source"], res.ber(0), res.ber(1), res.undetected]


def cmd_simulate(args) -> int:
    spec = _apply_overrides(load_config(args.config), args)
    results = run_policies(spec.config, spec.policies)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "simulate.csv"
    _write_csv(csv_path, SIM_COLUMNS, [_sim_row(results[p]) for p in spec.policies])
    write_manifest(out, spec, "simulate", [csv_path])
    print(csv_path)
    return EXIT_OK


SWEEP_COLUMNS = ["axis", "value", "policy", "episodes", "r_avg", "ci_low", "ci_high",
                 "success_rate", "ber_round2", "ber_round2_low", "ber_round2_high"]


def gnuplot_script(csv_name: str, axis: str, policies) -> str:
    plots = ", \\\n     ".join(
        f"'< grep {p.value} {csv_name}' using 2:5:6:7 with yerrorlines title '{p.value}'"
        for p in policies)
    return (
        "set datafile separator ','\n"
        f"set xlabel '{axis}'\n"
        "set ylabel 'R_avg'\n"
        "set key bottom right\n"
        f"plot {plots}\n"
    )


def cmd_sweep(args) -> int:
    spec = _apply_overrides(load_config(args.config), args)
    try:
        axis = resolve_axis(args.axis)
        values = [float(v) for v in args.values.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(None, str(exc)) from None
    if not values:
        raise ConfigError(None, "sweep needs at least one value")
    if axis in ("minislots", "n_relays"):
        values = [int(v) for v in values]
    try:
        points = run_sweep(spec.config, axis, values, spec.policies)
    except ValueError as exc:
        raise ConfigError(None, str(exc)) from None
    rows = []
    for v, res_by_policy in zip(values, points):
        for p in spec.policies:
            res = res_by_policy[p]
            lo, hi = res.r_avg_ci
            blo, bhi = res.ber_ci(1)
            rows.append([axis, v, p.value, res.episodes, res.r_avg, lo, hi,
                         res.success_rate, res.ber(1), blo, bhi])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "sweep.csv"
    gp_path = out / "sweep.gp"
    _write_csv(csv_path, SWEEP_COLUMNS, rows)
    gp_path.write_text(gnuplot_script(csv_path.name, axis, spec.policies))
    write_manifest(out, spec, f"sweep axis={axis} values={args.values}", [csv_path, gp_path])
    print(csv_path)
    return EXIT_OK


# --- worked example ----------------------------------------------------------

@dataclasses.dataclass
class ReportLine:
    name: str
    value: float
    reference: str
    ok: bool | None  # None = informational (NOTE)
    note: str = ""


def example_report() -> list[ReportLine]:
    pl, noise = PathLossParams(), NoiseParams()
    budget = LinkBudget.from_energy_db(101.0, pl, noise)
    e_r = budget.tx_energy * path_loss_gain(pl, 75.0)
    g1r = e_r / noise.linear
    gtr = budget.mean_snr(100.0)
    gt1 = budget.mean_snr(25.0)
    w23, w45 = wef_table("2/3"), wef_table("4/5")

    def rel(x, ref, tol=0.01):
        return abs(x - ref) <= tol * abs(ref)

    lines = []
    add = lines.append
    add(ReportLine("E_r at 75 m [J]", e_r, "1.17e-13 +-1%", rel(e_r, 1.17e-13)))
    for name, g, ref in (("gamma_1r", g1r, 4.7), ("gamma_tr", gtr, 0.952), ("gamma_t1", gt1, 19.0)):
        gdb = float(linear_to_db(g))
        add(ReportLine(f"{name} [dB]", gdb, f"{ref} +-0.05 dB", abs(gdb - ref) <= 0.05))
    for label, g, ref in (("Pb(4.7 dB)", float(db_to_linear(4.7)), 5.42e-4),
                          ("Pb(2)", 2.0, 0.0688),
                          ("Pb(0.952 dB)", float(db_to_linear(0.952)), 5.55),
                          ("Pb(0.85)", 0.85, 64.7)):
        pb = ber_union_bound(g, w23)
        note = "vacuous (> 1)" if pb >= 1 else ""
        add(ReportLine(f"{label}, rate 2/3", pb, f"{ref:g} +-1%", rel(pb, ref), note))
    p1_hi = packet_success_lower_bound(float(db_to_linear(19.0)), w45).value
    add(ReportLine("P1 bound(19 dB), rate 4/5", p1_hi, ">= 0.999 (approx 1)", p1_hi >= 0.999))
    p1_lo = packet_success_lower_bound(5.0, w45).value
    p1_n = (1 - ber_union_bound(5.0, w45)) ** 2040
    add(ReportLine("P1 bound(5), rate 4/5", p1_lo, "> 0.851", p1_lo > 0.851,
                   f"exponent n+M=2046; exponent n=2040 would give {p1_n:.5f}"))
    for label, thr, mean_db, ref in (("Pr(gamma < 2 | 4.7 dB)", 2.0, 4.7, 0.492),
                                     ("Pr(gamma < 0.85 | 0.952 dB)", 0.85, 0.952, 0.495),
                                     ("Pr(gamma < 5 | 19 dB)", 5.0, 19.0, 0.0608)):
        v = rayleigh_snr_cdf(thr, float(db_to_linear(mean_db)))
        add(ReportLine(label, v, f"{ref} +-0.002", abs(v - ref) <= 0.002))
    at_mean = rayleigh_snr_cdf(1.0, 1.0)
    add(ReportLine("Pr(gamma < mean)", at_mean, "reference quotes 0.368", None,
                   "exponential CDF at its mean is 1 - 1/e; 0.368 is Pr(gamma > mean)"))
    eta = float(db_to_linear(-91.0))
    p2_gain = 1 - rayleigh_snr_cdf(eta, path_loss_gain(pl, 75.0))
    p2_snr = 1 - rayleigh_snr_cdf(eta, g1r)
    add(ReportLine("P2 = Pr(|h_1r|^2 > eta)", p2_gain, "reference: approx 1", None,
                   f"eta compared with the channel gain; comparing eta with the SNR instead "
                   f"gives {p2_snr:.6f}"))
    return lines


def cmd_example_sec5(args) -> int:
    lines = example_report()
    out = args.stdout
    out.write(f"{'quantity':34s} {'computed':>14s}  {'reference':24s} status\n")
    failed = False
    for ln in lines:
        status = "NOTE" if ln.ok is None else ("PASS" if ln.ok else "FAIL")
        failed |= ln.ok is False
        out.write(f"{ln.name:34s} {ln.value:14.6g}  {ln.reference:24s} {status}")
        out.write(f"  ({ln.note})\n" if ln.note else "\n")
    if args.check and failed:
        return EXIT_CHECK
    return EXIT_OK


# --- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="opprelay", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bound", help="BER union bound and packet-success bound as CSV")
    b.add_argument("--rate", required=True, help="family member with a WEF table, e.g. 2/3")
    b.add_argument("--snr-db", type=float, nargs="+", help="SNR values in dB")
    b.add_argument("--snr", type=float, nargs="+", help="SNR values, linear")
    b.add_argument("--snr-range", type=float, nargs=3, metavar=("START", "STOP", "STEP"),
                   help="dB grid, inclusive")
    b.add_argument("--wef", help="WEF table file (rate d c_d per line)")
    b.set_defaults(func=cmd_bound)

    def run_flags(p):
        p.add_argument("--config", help="key = value config file; omit for the defaults")
        p.add_argument("--seed", type=int)
        p.add_argument("--episodes", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out", default="out", help="output directory")

    s = sub.add_parser("simulate", help="run every configured policy on shared episodes")
    run_flags(s)
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="vary one parameter, long-format CSV")
    run_flags(w)
    w.add_argument("--axis", required=True,
                   help="beta_db, eta_db, bias, feedback_prob, minislots, n_relays or snr_db")
    w.add_argument("--values", required=True, help="comma separated axis values")
    w.set_defaults(func=cmd_sweep)

    e = sub.add_parser("example-sec5", help="single-relay worked example, every quantity")
    e.add_argument("--check", action="store_true", help="exit 3 if any quantity misses")
    e.set_defaults(func=cmd_example_sec5)
    return ap


def main(argv=None, stdout=None) -> int:
    args = build_parser().parse_args(argv)
    args.stdout = stdout or sys.stdout
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"opprelay: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
