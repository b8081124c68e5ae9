"""Command-line experiment runner.

Every subcommand sweeps a parameter list and writes CSV files into ``--out``.
Settings come from built-in defaults, then the ``[common]`` and
``[<subcommand>]`` sections of an INI file given by ``--config``, then
``--set key=value`` flags and the global ``--seed``. Rows are written in sweep
order whatever order the worker threads finish in.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import io
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .hamiltonians import (
    build_h2,
    build_kitaev_ring,
    build_tfim,
    diagonalize,
    load_h2_table,
    random_tfim_parameters,
    shift_for_ratio,
)
from .hilbert import GridBackend
from .hybrid import (
    HybridIPIConfig,
    evolution_time_budget,
    hybrid_energy,
    ideal_inverse_energy,
    reference_energy,
)
from .noise import DepolarizingChannel, LossChannel, ZneSchedule, noisy_quipi, zne_extrapolate
from .qumode import (
    ProjectionKernel,
    analytic_amplitude,
    build_resource,
    prepare_by_displacements,
    resource_qumode,
)
from .solver import REPORT_COLUMNS, QuipiConfig, parse_state, quipi_solve

# --- value parsing --------------------------------------------------------------


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(",", " ").split())


def _opt_int(text: str) -> int | None:
    return None if text.strip().lower() in ("none", "inf", "") else int(text)


def _opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("none", "") else float(text)


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _show(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return " ".join(_show(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


_QUIPI_PARAMS: dict[str, tuple[Any, Callable[[str], Any]]] = {
    "s": (10.0, float),
    "cut": (20, _opt_int),
    "iterations": (3, int),
    "trotter_steps": (0, int),
    "backend": ("grid", str),
    "fock_cut": (60, int),
    "grid_points": (4096, int),
    "shots": (0, int),
}


def _params(**extra) -> dict[str, tuple[Any, Callable[[str], Any]]]:
    out = dict(_QUIPI_PARAMS)
    out.update(extra)
    return out


@dataclass(frozen=True)
class Command:
    name: str
    params: dict[str, tuple[Any, Callable[[str], Any]]]
    run: Callable[[dict, "Runner"], list[tuple[str, list[str], list[list[str]]]]]
    help: str


class Runner:
    """Runs independent sweep points on a thread pool, returning results in input order."""

    def __init__(self, threads: int):
        self.threads = max(1, threads)

    def map(self, fn, items):
        items = list(items)
        if self.threads == 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, items))


def _num(x: float) -> str:
    return f"{x:.17g}"


def _quipi_config(cfg: dict, **override) -> QuipiConfig:
    keys = {k: cfg[k] for k in _QUIPI_PARAMS}
    keys["seed"] = cfg["seed"]
    keys.update(override)
    return QuipiConfig(**keys)


def _h2(cfg: dict, bond: float, shift: float):
    table = load_h2_table(cfg["table"]) if cfg.get("table") else None
    return build_h2(bond, table, shift)


def _report_rows(prefix: list[str], reports) -> list[list[str]]:
    return [prefix + r.row() for r in reports]


# --- subcommands -----------------------------------------------------------------


def cmd_h2_curve(cfg, runner):
    table = load_h2_table(cfg["table"] or None)
    missing = [d for d in cfg["distances"] if not any(abs(d - k) <= 1e-6 for k in table.distances)]
    if missing:
        raise LookupError("no coefficient rows for bond distances " + " ".join(_show(d) for d in missing))
    init = parse_state(cfg["initial_state"], 2)

    def point(i_bond):
        i, bond = i_bond
        h = build_h2(bond, table, cfg["shift"])
        res = quipi_solve(h, _quipi_config(cfg, seed=cfg["seed"] + i), init)
        oracle = diagonalize(h).ground_energy - h.shift
        f = res.final
        return [_num(bond), _num(f.energy), _num(oracle), _num(abs(f.energy - oracle)), _num(f.cumulative_success)]

    rows = runner.map(point, list(enumerate(cfg["distances"])))
    return [("h2_curve.csv", ["bond_angstrom", "energy", "oracle_energy", "energy_error", "cumulative_success"], rows)]


def _h2_sweep(cfg, runner, key, values, make):
    init = parse_state(cfg["initial_state"], 2)

    def point(i_v):
        i, v = i_v
        h, qc = make(v, i)
        return _report_rows([_show(v)], quipi_solve(h, qc, init).reports)

    rows = [r for block in runner.map(point, list(enumerate(values))) for r in block]
    return [rows, [key, *REPORT_COLUMNS]]


def cmd_ratio_study(cfg, runner):
    rows, header = _h2_sweep(
        cfg, runner, "shift", cfg["shifts"],
        lambda v, i: (_h2(cfg, cfg["bond"], v), _quipi_config(cfg, seed=cfg["seed"] + i)),
    )
    return [("ratio_study.csv", header, rows)]


def cmd_squeeze_study(cfg, runner):
    rows, header = _h2_sweep(
        cfg, runner, "s", cfg["squeezings"],
        lambda v, i: (_h2(cfg, cfg["bond"], cfg["shift"]), _quipi_config(cfg, s=v, seed=cfg["seed"] + i)),
    )
    return [("squeeze_study.csv", header, rows)]


def cmd_cut_study(cfg, runner):
    rows, header = _h2_sweep(
        cfg, runner, "cut", cfg["cuts"],
        lambda v, i: (_h2(cfg, cfg["bond"], cfg["shift"]), _quipi_config(cfg, cut=v, seed=cfg["seed"] + i)),
    )
    return [("cut_study.csv", header, rows)]


def cmd_trotter_study(cfg, runner):
    n = cfg["sites"]
    if cfg["model"] == "uniform":
        fields, couplings = np.ones(n), np.ones((n, n))
    elif cfg["model"] == "random":
        fields, couplings = random_tfim_parameters(n, cfg["model_seed"])
    else:
        raise ValueError(f"model must be 'uniform' or 'random', got {cfg['model']!r}")
    h0 = build_tfim(n, fields, couplings)
    h = h0.with_shift(shift_for_ratio(h0, cfg["margin"]))
    init = parse_state(cfg["initial_state"], n)

    def point(i_steps):
        i, steps = i_steps
        qc = _quipi_config(cfg, trotter_steps=steps, seed=cfg["seed"] + i)
        return _report_rows([str(steps)], quipi_solve(h, qc, init).reports[-1:])

    rows = [r for block in runner.map(point, list(enumerate(cfg["trotter_list"]))) for r in block]
    return [("trotter_study.csv", ["n", *REPORT_COLUMNS], rows)]


def cmd_kitaev_sweep(cfg, runner):
    n = cfg["sites"]

    def point(i_field):
        i, field = i_field
        h0 = build_kitaev_ring(n, cfg["hopping"], field)
        ev = diagonalize(h0).eigenvalues
        h = h0.with_shift(shift_for_ratio(h0, cfg["margin"]))
        init = parse_state("plus" if field < cfg["switch_field"] else "zero", n)
        f = quipi_solve(h, _quipi_config(cfg, seed=cfg["seed"] + i), init).final
        return [_show(field), *f.row(), _num(ev[0]), _num(ev[1])]

    rows = runner.map(point, list(enumerate(cfg["fields"])))
    return [("kitaev_sweep.csv", ["h", *REPORT_COLUMNS, "oracle_ground", "oracle_first_excited"], rows)]


def cmd_noise_study(cfg, runner):
    h = _h2(cfg, cfg["bond"], cfg["shift"])
    init = parse_state(cfg["initial_state"], 2)
    qc = _quipi_config(cfg, backend="fock")
    if cfg["zne"]:
        ZneSchedule(cfg["zne_scales"])
    jobs = []
    for pl in cfg["p_loss"]:
        for pd in cfg["p_depol"]:
            scales = cfg["zne_scales"] if cfg["zne"] and (pl > 0 or pd > 0) else (1.0,)
            for sc in scales:
                jobs.append((pl, pd, sc))

    def point(job):
        pl, pd, sc = job
        loss = LossChannel(pl * sc, cfg["kraus_rank"]) if pl > 0 else None
        depol = DepolarizingChannel(pd * sc) if pd > 0 else None
        return noisy_quipi(h, qc, loss, depol, init)

    results = dict(zip(jobs, runner.map(point, jobs)))
    header = ["k", "p_loss", "p_depol", "zne_scale", "energy", "energy_error"]
    rows = []
    for pl in cfg["p_loss"]:
        for pd in cfg["p_depol"]:
            runs = [(sc, results[(p, d, sc)]) for (p, d, sc) in results if p == pl and d == pd]
            for sc, res in runs:
                for r in res.reports:
                    rows.append([str(r.k), _show(pl), _show(pd), _show(sc), _num(r.energy), _num(r.energy_error)])
            if len(runs) > 1:
                target = runs[0][1].target_energy
                for k in range(qc.iterations):
                    e = zne_extrapolate([(sc, res.reports[k].energy) for sc, res in runs])
                    rows.append([str(k + 1), _show(pl), _show(pd), "0", _num(e), _num(abs(e - target))])
    return [("noise_study.csv", header, rows)]


def cmd_hybrid_compare(cfg, runner):
    h = _h2(cfg, cfg["bond"], cfg["shift"])
    init = parse_state(cfg["initial_state"], 2)
    exact = reference_energy(h)
    dp = cfg["delta_p"]
    header = ["k", "delta_p", "m_j", "phi_max", "energy", "energy_error", "max_evolution_time"]

    def point(phi):
        m = int(round(phi / dp))
        ratio = cfg["damping_ratio"]
        rows = []
        for k in cfg["ks"]:
            hc = HybridIPIConfig(dp, m, k, None if ratio is None else m * dp / ratio)
            e = hybrid_energy(h, init, hc)
            t = evolution_time_budget(hc).max_evolution_time
            rows.append([str(k), _show(dp), str(m), _num(hc.phi_max), _num(e), _num(abs(e - exact)), _num(t)])
        return rows

    rows = [r for block in runner.map(point, cfg["phi_max"]) for r in block]
    for k in cfg["ks"]:
        e = ideal_inverse_energy(h, init, k)
        rows.append([str(k), "0", "0", "inf", _num(e), _num(abs(e - exact)), "0"])
    # QuIPI couples for unit time per round whatever the accuracy target
    for k in cfg["ks"]:
        rows.append([str(k), "0", "0", "quipi", "", "", _num(1.0)])
    return [("hybrid_compare.csv", header, rows)]


def cmd_resource_prep(cfg, runner):
    s = cfg["s"]
    grid = np.linspace(cfg["p_min"], cfg["p_max"], cfg["samples"])
    fine = GridBackend.for_squeezing(s, 4096)

    def point(cut):
        res = build_resource(s, cut)
        prep = prepare_by_displacements(res)
        p = fine.momenta
        psi = res.momentum_wavefunction(p)
        mass = np.abs(psi) ** 2 * fine.spacing
        positive = float(mass[p >= 0].sum() / mass.sum())
        return res, prep, positive

    out = runner.map(point, cfg["cuts"])
    coeff_rows, wave_rows, summary = [], [], []
    for cut, (res, prep, positive) in zip(cfg["cuts"], out):
        for n, c in enumerate(res.fock_coefficients):
            coeff_rows.append([str(cut), str(n), _num(c.real), _num(c.imag)])
        for p, v in zip(grid, res.momentum_wavefunction(grid)):
            wave_rows.append([str(cut), _num(p), _num(v.real), _num(v.imag)])
        summary.append(
            [str(cut), _num(prep.fidelity), _num(prep.truncated_fidelity), _num(res.retained_weight), _num(positive)]
        )
    return [
        ("resource_coefficients.csv", ["cut", "n", "re_cn", "im_cn"], coeff_rows),
        ("resource_wavefunction.csv", ["cut", "p", "psi_re", "psi_im"], wave_rows),
        ("resource_summary.csv", ["cut", "fidelity", "truncated_fidelity", "retained_weight", "positive_mass"], summary),
    ]


def additional_weight(energies: np.ndarray, s: float, cut: int | None, points: int = 4096) -> np.ndarray:
    """<q=0,s| exp(-i E p) |R> for a resource truncated at ``cut`` (None: untruncated)."""
    grid = GridBackend.for_squeezing(s, points)
    q = resource_qumode(s, grid, cut)
    kern = q.amplitudes * q.weights * ProjectionKernel(s).grid_values(grid.momenta)
    energies = np.asarray(energies, dtype=float)
    if energies.size == 0:
        return np.zeros(0, dtype=complex)
    return np.exp(-1j * np.outer(energies, grid.momenta)) @ kern


def cmd_additional_weight(cfg, runner):
    s = cfg["s"]
    energies = np.array(cfg["energies"], dtype=float)
    header = ["cut", "E", "re_w", "im_w", "scaled_weight", "inverse", "analytic_abs"]
    cuts = list(cfg["cuts"])
    weights = runner.map(lambda c: additional_weight(energies, s, c), cuts)
    ref = np.abs(analytic_amplitude(energies, s))
    rows = []
    scale = s * np.sqrt(np.pi / 2)
    for cut, w in zip(cuts, weights):
        for e, x, a in zip(energies, w, ref):
            rows.append([_show(cut), _num(e), _num(x.real), _num(x.imag), _num(abs(x) * scale), _num(1 / e), _num(a)])
    return [("additional_weight.csv", header, rows)]


_H2_COMMON = {
    "bond": (0.75, float),
    "shift": (1.37, float),
    "initial_state": ("01-10", str),
    "table": ("", str),
}

COMMANDS: dict[str, Command] = {
    c.name: c
    for c in [
        Command(
            "h2-curve",
            _params(distances=((0.75,), _floats), **_H2_COMMON),
            cmd_h2_curve,
            "energy against bond distance",
        ),
        Command(
            "ratio-study",
            _params(shifts=((2.74, 1.68, 1.37), _floats), **_H2_COMMON) | {"iterations": (6, int), "cut": (None, _opt_int)},
            cmd_ratio_study,
            "convergence for several energy shifts",
        ),
        Command(
            "squeeze-study",
            _params(squeezings=((6.0, 8.0, 10.0), _floats), **_H2_COMMON),
            cmd_squeeze_study,
            "accuracy and success rate against squeezing",
        ),
        Command(
            "cut-study",
            _params(cuts=((4, 8, 12, 20), _ints), **_H2_COMMON) | {"s": (5.0, float), "shift": (1.68, float)},
            cmd_cut_study,
            "accuracy against resource truncation",
        ),
        Command(
            "noise-study",
            _params(
                p_loss=((0.0, 1e-4, 1e-3), _floats),
                p_depol=((0.0,), _floats),
                zne=(False, _bool),
                zne_scales=((1.0, 2.0, 3.0), _floats),
                kraus_rank=(8, int),
                **_H2_COMMON,
            )
            | {"backend": ("fock", str), "fock_cut": (30, int), "trotter_steps": (16, int), "iterations": (2, int)},
            cmd_noise_study,
            "loss and depolarization, optional zero-noise extrapolation",
        ),
        Command(
            "trotter-study",
            _params(
                model=("uniform", str),
                model_seed=(42, int),
                sites=(3, int),
                margin=(0.3, float),
                trotter_list=((2, 4, 8, 16, 32), _ints),
                initial_state=("minus", str),
            )
            | {"s": (2.0, float), "iterations": (12, int), "backend": ("fock", str), "fock_cut": (40, int)},
            cmd_trotter_study,
            "energy error against Trotter number",
        ),
        Command(
            "kitaev-sweep",
            _params(
                sites=(3, int),
                hopping=(1.0, float),
                fields=(tuple(round(0.2 * i, 10) for i in range(1, 11)), _floats),
                margin=(0.5, float),
                switch_field=(1.0, float),
            ),
            cmd_kitaev_sweep,
            "ground energy across the field sweep",
        ),
        Command(
            "hybrid-compare",
            {
                "delta_p": (0.1, float),
                "phi_max": ((40.0, 80.0, 160.0, 320.0), _floats),
                "ks": (tuple(range(1, 9)), _ints),
                "damping_ratio": (4.0, _opt_float),
                **_H2_COMMON,
            },
            cmd_hybrid_compare,
            "summed-evolution inverse iteration against the ideal inverse",
        ),
        Command(
            "resource-prep",
            {
                "s": (5.0, float),
                "cuts": ((4, 8, 12, 20), _ints),
                "p_min": (-10.0, float),
                "p_max": (20.0, float),
                "samples": (301, int),
            },
            cmd_resource_prep,
            "resource coefficients, wavefunctions and preparation fidelity",
        ),
        Command(
            "additional-weight",
            {
                "s": (5.0, float),
                "cuts": ((4, 8, 12, 20), lambda t: tuple(_opt_int(x) for x in t.replace(",", " ").split())),
                "energies": (tuple(np.round(np.linspace(0.25, 4.0, 16), 10)), _floats),
            },
            cmd_additional_weight,
            "projected weight of the truncated resource against 1/E",
        ),
    ]
}

class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message.replace("\n", " "))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quipi", description="Run inverse-iteration experiments and write CSV files.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="INI file with [common] and per-command sections")
    parser.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--dry-run", action="store_true", help="print the resolved configuration and exit")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one setting")
    return parser


def resolve_config(command: Command, config_path: Path | None, overrides: list[str], seed: int | None) -> dict:
    params = dict(command.params)
    params.setdefault("seed", (0, int))
    raw: dict[str, str] = {}
    if config_path is not None:
        if not config_path.is_file():
            raise FileNotFoundError(f"config file {config_path} does not exist")
        ini = configparser.ConfigParser()
        ini.read(config_path, encoding="utf-8")
        for section in ("common", command.name):
            if ini.has_section(section):
                raw.update(ini[section])
    for item in overrides:
        if "=" not in item:
            raise CliError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()
    if seed is not None:
        raw["seed"] = str(seed)
    unknown = sorted(set(raw) - set(params))
    if unknown:
        raise CliError(f"unknown setting(s) for {command.name}: {' '.join(unknown)}")
    cfg = {}
    for key, (default, parse) in params.items():
        cfg[key] = parse(raw[key]) if key in raw else default
    return cfg


def format_csv(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        command = COMMANDS[args.command]
        cfg = resolve_config(command, args.config, args.set, args.seed)
        if args.threads < 1:
            raise CliError("--threads must be >= 1")
        if args.dry_run:
            lines = [f"[{command.name}]"] + [f"{k} = {_show(v)}" for k, v in sorted(cfg.items())]
            lines.append(f"# out = {args.out}")
            lines.append(f"# threads = {args.threads}")
            print("\n".join(lines))
            return 0
        outputs = command.run(cfg, Runner(args.threads))
        args.out.mkdir(parents=True, exist_ok=True)
        stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        for name, header, rows in outputs:
            path = args.out / name
            path.write_text(f"# generated {stamp} by quipi {command.name}\n" + format_csv(header, rows), encoding="utf-8")
            print(path)
        return 0
    except CliError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # one-line report for any failure
        msg = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
