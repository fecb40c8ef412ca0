"""Command-line front end: every experiment and certificate as a run.

Subcommands
    params          derived constants, formulas, and region boxes
    simulate        orbit ensembles or single crafted bases; histogram CSV
    verify          certificate suites with a pass/fail exit status
    critical-word   build and certify one word targeting a safe-cube ball

Defaults, in one place (each subcommand takes the subset it uses):

    --n 16      --k 2        --seed 0      --threads 1
    --steps 1000000          --orbits 100
    --grid 64 for the histogram (simulate), 1000 for certificate cells
    --samples 1000 (perturbed strip sampling)   --trials 200 (shadowing)
    --burn-in 1000 for random ensembles, 0 for explicit bases

Every report starts with a self-describing header (format tag, package
version, the full resolved configuration including seeds), so a run can
be reproduced byte for byte from its own output.  Reports are JSON with
sorted keys, histograms are CSV with repr() floats, traces are JSONL;
nothing embeds a timestamp, and the thread count changes wall time
only.  The optional figures (--figures, off by default) are rendered
beside the delimited outputs and are the one artifact class excluded
from byte-identity, because the PNG encoder embeds library versioning.

Exit codes: 0 success / all certificates pass; 1 certificate, pipeline,
or experiment failure; 2 bad arguments (including schema violations in
--config); 3 dynamical anomaly (an orbit left the absorbing cube); 4
I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .baseseq import (
    BaseSequence,
    CraftSpec,
    craft_base,
    read_base_packed,
    read_base_text,
    word_to_text,
)
from .certs import Certificate, CertificateSet
from .fiber import FiberFamily, make_family
from .orbit import (
    OrbitEscapeError,
    PerturbationSpec,
    make_perturbation,
    run_ensemble,
    run_orbit,
)
from .params import Params, RegionId, derive_params, region_box
from .verify import (
    check_directional_movement,
    check_discrepancy_bound,
    check_norm_bounds,
    check_strip_dynamics,
    check_zero_run_lemma,
    write_histogram_csv,
)
from .words import (
    build_upper_system,
    check_ifs_assumptions,
    critical_word_for,
    entry_word,
    make_descent_base,
    negut_frequency_experiment,
)

_FORMULAS = {
    "nu": "1/n",
    "h": "1/(16*n)",
    "rho": "h/10",
    "r": "h*nu/10",
    "d": "5/n",
    "lambda": "1 - 1/(8*n)",
    "mu": "2/3",
    "a": "1/3",
    "c": "lambda**Kc * a for the smallest Kc >= 0 with the value in [d, 2*d)",
    "Kc": "smallest ladder depth, see c",
    "epsilon_log2": "-(n**k)",
}

_PLAIN_REGIONS = ("Q", "Qplus", "Qminus", "P", "Pminus", "D", "W", "Wprime", "R")
_STAT_REGIONS = ("R", "Wprime", "W", "D")
_SUITES = ("norms", "strips", "zero-run", "words", "perturbed")
_PLANAR_NOTE = "stated for the planar family (k = 2); nothing is claimed at k = {k}"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Resolved options of one run, validated before any computation."""

    command: str
    n: int = 16
    k: int = 2
    seed: int = 0
    threads: int = 1
    steps: int | None = None
    orbits: int | None = None
    delta: float | None = None
    grid: int | None = None
    samples: int | None = None
    trials: int | None = None
    burn_in: int | None = None
    suite: str | None = None
    base: str | None = None
    x0: str | None = None
    target: str | None = None
    radius: float | None = None
    trace: bool = False
    figures: bool = False
    out: str | None = None
    config: str | None = None

    def validate(self) -> None:
        def positive(name, value, floor=1):
            if value is not None and value < floor:
                raise ValueError(f"--{name.replace('_', '-')} must be >= {floor}, got {value}")

        positive("steps", self.steps)
        positive("orbits", self.orbits)
        positive("grid", self.grid, 2)
        positive("samples", self.samples, 0)
        positive("trials", self.trials)
        positive("threads", self.threads)
        positive("burn_in", self.burn_in, 0)
        if self.radius is not None and not self.radius > 0.0:
            raise ValueError(f"--radius must be positive, got {self.radius}")
        if self.delta is not None and not self.delta > 0.0:
            raise ValueError(f"--delta must be positive, got {self.delta}")
        if self.trace and self.base == "random":
            raise ValueError("--trace needs an explicit base; the ensemble has no single orbit")
        if self.x0 is not None and self.base == "random":
            raise ValueError("--x0 applies to explicit bases; ensemble starts come from the seed")
        if self.trace and self.out is None:
            raise ValueError("--trace writes trace.jsonl and therefore needs --out")
        if self.figures and self.out is None:
            raise ValueError("--figures writes image files and therefore needs --out")

    def to_json(self) -> dict:
        # Execution plumbing (thread cap, output directory, config file
        # path) is omitted from the echo: none of it can affect a computed
        # value, and leaving it out keeps equal-configuration runs
        # byte-identical end to end.
        out = dataclasses.asdict(self)
        for key in ("threads", "out", "config"):
            out.pop(key)
        return out


def _config_of(command: str, args: argparse.Namespace) -> RunConfig:
    kwargs = {}
    for f in dataclasses.fields(RunConfig):
        if f.name == "command":
            continue
        if hasattr(args, f.name):
            kwargs[f.name] = getattr(args, f.name)
    cfg = RunConfig(command=command, **kwargs)
    cfg.validate()
    return cfg


def _header(cfg: RunConfig) -> dict:
    return {
        "format": "stepskew-report/1",
        "version": __version__,
        "config": cfg.to_json(),
    }


# ---------------------------------------------------------------------------
# small helpers
# ---------------------------------------------------------------------------


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj).__name__}")


def _dump(report: dict) -> str:
    return json.dumps(
        report, indent=2, sort_keys=True, allow_nan=False, default=_json_default
    ) + "\n"


def _emit(report: dict, out: str | None) -> None:
    text = _dump(report)
    sys.stdout.write(text)
    if out is not None:
        os.makedirs(out, exist_ok=True)
        path = os.path.join(out, "report.json")
        with open(path, "w") as fh:
            fh.write(text)
        print(f"wrote {path}", file=sys.stderr)


def _parse_point(text: str, k: int, flag: str) -> np.ndarray:
    try:
        vals = [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError:
        raise ValueError(f"{flag} must be {k} comma-separated numbers, got {text!r}")
    if len(vals) != k:
        raise ValueError(f"{flag} must have {k} coordinates, got {len(vals)}")
    return np.array(vals, dtype=np.float64)


def _family(cfg: RunConfig) -> FiberFamily:
    return make_family(derive_params(cfg.n, cfg.k))


def _pert_json(pert: PerturbationSpec) -> dict:
    budget = max(pert.sup_displacement(c) for c in range(pert.amps.shape[0]))
    return {
        "delta": pert.delta,
        "seed": pert.seed,
        "bumps_per_symbol": pert.n_bumps,
        "displacement_budget": budget,
        "measured": dict(pert.measured),
    }


def _coverage_ok(p: Params) -> bool:
    return p.c is not None and p.Kc is not None and p.c <= p.a / 4.0


# ---------------------------------------------------------------------------
# params
# ---------------------------------------------------------------------------


def cmd_params(args: argparse.Namespace) -> int:
    cfg = _config_of("params", args)
    p = derive_params(cfg.n, cfg.k)
    regions = {}
    for name in _PLAIN_REGIONS:
        regions[name] = region_box(p, RegionId(name)).to_json()
    if p.c is not None:
        for name in ("Kminus", "K", "Kplus"):
            try:
                regions[name] = region_box(p, RegionId(name)).to_json()
            except ValueError:
                pass
    report = {
        "header": _header(cfg),
        "params": p.to_json(),
        "formulas": _FORMULAS,
        "warnings": list(p.warnings),
        "epsilon_log2": p.epsilon_log2,
        "regions": regions,
    }
    _emit(report, cfg.out)
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _resolve_base(fam: FiberFamily, cfg: RunConfig) -> tuple[BaseSequence, dict]:
    p = fam.p
    source = cfg.base
    if source in ("all-zero", "all-one"):
        base = craft_base(CraftSpec(k=p.k, length=cfg.steps, background=source))
        return base, {"source": source, "length": base.length}
    if source == "descent":
        base, meta = make_descent_base(fam)
        info = {"source": "descent", "length": base.length}
        info.update(meta)
        return base, info
    if not os.path.exists(source):
        raise ValueError(
            f"base source {source!r} is neither a keyword "
            "(random | all-zero | all-one | descent) nor an existing file"
        )
    if source.endswith((".bits", ".packed")):
        base = read_base_packed(source)
        if base.k != p.k:
            raise ValueError(f"base file has k = {base.k}, run has k = {p.k}")
    else:
        base = read_base_text(source, p.k)
    return base, {"source": source, "length": base.length}


def _write_trace(trace: np.ndarray, origin: int, out: str) -> str:
    path = os.path.join(out, "trace.jsonl")
    with open(path, "w") as fh:
        for i in range(trace.shape[0]):
            row = {"t": origin + i, "x": [float(v) for v in trace[i]]}
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return path


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _config_of("simulate", args)
    fam = _family(cfg)
    p = fam.p
    regions = [RegionId(name) for name in _STAT_REGIONS]
    pert = (
        make_perturbation(fam, delta=cfg.delta, seed=cfg.seed)
        if cfg.delta is not None
        else None
    )

    trace = None
    final_x = None
    if cfg.base == "random":
        burn = 1000 if cfg.burn_in is None else cfg.burn_in
        ens = run_ensemble(
            fam,
            cfg.orbits,
            cfg.steps,
            cfg.seed,
            regions=regions,
            burn_in=burn,
            pert=pert,
            hist_grid=cfg.grid,
            threads=cfg.threads,
        )
        stats, counted, hist = ens.stats, ens.counted_steps, ens.hist
        base_info = {"source": "random", "orbits": cfg.orbits, "length": cfg.steps}
        used_orbits = cfg.orbits
        run_seed = cfg.seed
    else:
        base, base_info = _resolve_base(fam, cfg)
        burn = 0 if cfg.burn_in is None else cfg.burn_in
        x0 = (
            _parse_point(cfg.x0, p.k, "--x0")
            if cfg.x0 is not None
            else np.full(p.k, 0.5)
        )
        res = run_orbit(
            fam,
            base,
            x0,
            regions=regions,
            burn_in=burn,
            pert=pert,
            hist_grid=cfg.grid,
            trace=cfg.trace,
        )
        stats, counted, hist = res.stats, res.counted_steps, res.hist
        final_x = [float(v) for v in res.x]
        trace = res.trace
        base_info["x0"] = [float(v) for v in x0]
        used_orbits = 1
        run_seed = None

    # histogram metadata, same shape the library's histogram helper emits
    meta = {
        "n": p.n,
        "k": p.k,
        "grid": cfg.grid,
        "extent": [-2.0 * p.nu, 1.0 + 2.0 * p.nu],
        "coordinates": [p.k - 2, p.k - 1],
        "orbits": used_orbits,
        "counted_steps": counted,
        "burn_in": burn,
        "seed": run_seed,
        "perturbed": pert is not None,
    }

    deep = stats[0]
    deep_freq = deep.hits / counted if counted else 0.0
    invisibility = {
        "epsilon_log2": p.epsilon_log2,
        "deep_hits": deep.hits,
        "deep_frequency": deep_freq,
        "verdict": "invisible at this horizon" if deep.hits == 0 else "visible",
    }

    report = {
        "header": _header(cfg),
        "params": p.to_json(),
        "warnings": list(p.warnings),
        "mode": "ensemble" if cfg.base == "random" else "single",
        "base": base_info,
        "burn_in": burn,
        "counted_steps": counted,
        "perturbation": _pert_json(pert) if pert is not None else None,
        "stats": [st.to_json(counted) for st in stats],
        "invisibility": invisibility,
        "final_x": final_x,
        "histogram": dict(meta, file="histogram.csv" if cfg.out else None),
    }

    if cfg.out is not None:
        os.makedirs(cfg.out, exist_ok=True)
        csv_path = os.path.join(cfg.out, "histogram.csv")
        write_histogram_csv(hist, meta, csv_path)
        print(f"wrote {csv_path}", file=sys.stderr)
        if cfg.trace and trace is not None:
            path = _write_trace(trace, 0, cfg.out)
            print(f"wrote {path}", file=sys.stderr)
        if cfg.figures:
            from . import figures

            hist_png = os.path.join(cfg.out, "hist.png")
            figures.save_histogram_figure(hist, meta, hist_png, p=p)
            print(f"wrote {hist_png}", file=sys.stderr)
            if trace is not None:
                stride = max(1, trace.shape[0] // 20000)
                trace_png = os.path.join(cfg.out, "trace.png")
                figures.save_trace_figure(trace, p, trace_png, stride=stride)
                print(f"wrote {trace_png}", file=sys.stderr)
    _emit(report, cfg.out)
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _word_targets(p: Params, count: int, seed: int) -> list[np.ndarray]:
    """Deterministic targets in the safe cube, alternating between the
    zone above the shelf edge (ascent route) and the tooth zone below
    it (ladder route), each kept a tooth-width away from the split."""
    qm = region_box(p, RegionId("Qminus"))
    lo, hi = np.asarray(qm.lo), np.asarray(qm.hi)
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(13,)))
    )
    split = 0.25 + p.rho
    targets = []
    for i in range(count):
        t = rng.uniform(lo, hi)
        if i % 2 == 0:
            t[-1] = rng.uniform(min(split + p.h, hi[-1]), hi[-1])
        else:
            t[-1] = rng.uniform(lo[-1], max(split - p.h, lo[-1]))
        targets.append(t)
    return targets


def _suite_words(
    fam: FiberFamily, cfg: RunConfig, pert: PerturbationSpec | None, notes: dict
) -> list[CertificateSet]:
    p = fam.p
    us = build_upper_system(p)  # raises for k != 2 or a missing ladder constant
    sets = []
    ws = CertificateSet("word-machinery" + ("-perturbed" if pert is not None else ""))
    word, cert = entry_word(fam, pert=pert)
    ws.add(cert)
    rep = negut_frequency_experiment(
        fam, word, us.Kplus_box, length=cfg.steps, seed=cfg.seed
    )
    ws.add(
        Certificate(
            claim=(
                "entry-word occurrences in a random base follow the Bernoulli "
                "law and every landing lies in the outer block"
            ),
            passed=rep.frequency_ok and rep.landings_ok,
            margin=float(3.0 - abs(rep.z_score)),
            method="measured",
            witness=rep.to_json(),
        )
    )
    sets.append(ws)
    if _coverage_ok(p):
        sets.append(check_ifs_assumptions(fam))
        cw = CertificateSet("critical-words")
        for t in _word_targets(p, 20, cfg.seed):
            res = critical_word_for(fam, t, radius=0.05)
            res.certificate.witness["target"] = [float(v) for v in t]
            res.certificate.witness["route"] = res.parts.get("route")
            res.certificate.witness["length"] = int(res.word.shape[0])
            cw.add(res.certificate)
        sets.append(cw)
    else:
        notes["critical-words"] = (
            f"skipped: ladder constant c = {p.c} exceeds a/4 = {p.a / 4.0}, the "
            f"coverage precondition of the greedy word search fails at n = {p.n}; "
            "the contraction system and the critical-word pipeline are claimed "
            "only where it holds (n = 128 satisfies it)"
        )
    return sets


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _config_of("verify", args)
    fam = _family(cfg)
    p = fam.p
    explicit = cfg.suite != "all"
    want = [cfg.suite] if explicit else list(_SUITES)
    notes: dict[str, str] = {}
    pert_requested = cfg.delta is not None
    pert = None
    if pert_requested or "perturbed" in want:
        pert = make_perturbation(fam, delta=cfg.delta, seed=cfg.seed)

    sets: list[CertificateSet] = []
    strips_already_perturbed = False
    for suite in want:
        if suite == "norms":
            if p.k != 2:
                msg = "norm certificates are " + _PLANAR_NOTE.format(k=p.k)
                if explicit:
                    raise ValueError(msg)
                notes["norms"] = "skipped: " + msg
                continue
            if pert_requested:
                notes["norms"] = (
                    "the norm bounds describe the unperturbed family; "
                    "--delta has no effect on this suite"
                )
            sets.append(check_norm_bounds(fam, grid=cfg.grid))
        elif suite == "strips":
            sp = pert if pert_requested else None
            sets.append(
                check_strip_dynamics(
                    fam, pert=sp, samples_per_block=cfg.samples, seed=cfg.seed
                )
            )
            if p.k == 2:
                sets.append(check_directional_movement(fam, pert=sp, grid=cfg.grid))
            else:
                notes["movement"] = (
                    "skipped: movement certificates are " + _PLANAR_NOTE.format(k=p.k)
                )
            strips_already_perturbed = sp is not None
        elif suite == "zero-run":
            sets.append(
                check_zero_run_lemma(
                    fam,
                    orbits=cfg.orbits,
                    steps=cfg.steps,
                    seed=cfg.seed,
                    threads=cfg.threads,
                    burn_in=cfg.burn_in if cfg.burn_in is not None else 1000,
                    crafted=True,
                )
            )
        elif suite == "words":
            if p.k != 2:
                msg = "word machinery is " + _PLANAR_NOTE.format(k=p.k)
                if explicit:
                    raise ValueError(msg)
                notes["words"] = "skipped: " + msg
                continue
            try:
                sets.extend(
                    _suite_words(fam, cfg, pert if pert_requested else None, notes)
                )
            except ValueError:
                if explicit:
                    raise
                notes["words"] = (
                    f"skipped: no ladder constant at n = {p.n}, "
                    "the coarse word system is undefined"
                )
        elif suite == "perturbed":
            if not strips_already_perturbed:
                sets.append(
                    check_strip_dynamics(
                        fam, pert=pert, samples_per_block=cfg.samples, seed=cfg.seed
                    )
                )
                if p.k == 2:
                    sets.append(
                        check_directional_movement(fam, pert=pert, grid=cfg.grid)
                    )
            pw = CertificateSet("perturbed-shadowing")
            if p.k == 2 and p.c is not None:
                _, cert = entry_word(fam, pert=pert)
                pw.add(cert)
            else:
                notes["perturbed-entry"] = (
                    "skipped: the perturbed entry-word certificate needs the "
                    "planar family and the ladder constant"
                )
            pw.add(
                check_discrepancy_bound(fam, pert, trials=cfg.trials, seed=cfg.seed)
            )
            sets.append(pw)

    passed = bool(sets) and all(s.passed for s in sets)
    for s in sets:
        verdict = "pass" if s.passed else "FAIL"
        print(
            f"{s.name}: {verdict} ({len(s.certificates)} certificates, "
            f"min margin {s.min_margin:.6g})",
            file=sys.stderr,
        )
    for key, note in sorted(notes.items()):
        print(f"note [{key}]: {note}", file=sys.stderr)

    report = {
        "header": _header(cfg),
        "params": p.to_json(),
        "warnings": list(p.warnings),
        "suites": [s.to_json() for s in sets],
        "notes": notes,
        "perturbation": _pert_json(pert) if pert is not None else None,
        "pass": passed,
    }
    if cfg.figures and cfg.out is not None and p.k == 2:
        from . import figures

        os.makedirs(cfg.out, exist_ok=True)
        path = os.path.join(cfg.out, "norms.png")
        figures.save_norm_figure(fam, path, grid=256)
        print(f"wrote {path}", file=sys.stderr)
    _emit(report, cfg.out)
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# critical-word
# ---------------------------------------------------------------------------


def cmd_critical_word(args: argparse.Namespace) -> int:
    cfg = _config_of("critical-word", args)
    fam = _family(cfg)
    p = fam.p
    target = _parse_point(cfg.target, p.k, "--target")
    res = critical_word_for(fam, target, radius=cfg.radius)
    length = int(res.word.shape[0])
    report = {
        "header": _header(cfg),
        "params": p.to_json(),
        "target": [float(v) for v in target],
        "radius": cfg.radius if cfg.radius is not None else p.r,
        "length": length,
        "parts": res.parts,
        "certificate": res.certificate.to_json(),
        "word": word_to_text(res.word) if length <= 64 else None,
        "word_file": "word.txt" if cfg.out else None,
        "pass": res.certificate.passed,
    }
    if cfg.out is not None:
        os.makedirs(cfg.out, exist_ok=True)
        path = os.path.join(cfg.out, "word.txt")
        with open(path, "w") as fh:
            fh.write(word_to_text(res.word))
            fh.write("\n")
        print(f"wrote {path}", file=sys.stderr)
    _emit(report, cfg.out)
    return 0 if res.certificate.passed else 1


# ---------------------------------------------------------------------------
# parser and dispatch
# ---------------------------------------------------------------------------


def _build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=16, help="resolution parameter, n >= 11")
    common.add_argument("--k", type=int, default=2, help="number of coordinates, k >= 2")
    common.add_argument("--seed", type=int, default=0, help="root seed of every random draw")
    common.add_argument("--threads", type=int, default=1, help="worker cap; results never depend on it")
    common.add_argument("--out", default=None, metavar="DIR", help="output directory; the report always also prints to stdout")
    common.add_argument("--config", default=None, metavar="FILE", help="JSON file of flag defaults; explicit flags override")

    parser = argparse.ArgumentParser(
        prog="stepskew",
        description="simulator and desk-scale verifier for step skew products",
    )
    subs = parser.add_subparsers(dest="command", metavar="command")

    p_params = subs.add_parser(
        "params", parents=[common], help="derived constants, formulas, region boxes"
    )
    p_params.set_defaults(func=cmd_params)

    p_sim = subs.add_parser(
        "simulate", parents=[common], help="orbit statistics and occupancy histogram"
    )
    p_sim.add_argument("--steps", type=int, default=10**6, help="steps per orbit (generated bases)")
    p_sim.add_argument("--orbits", type=int, default=100, help="ensemble size for --base random")
    p_sim.add_argument("--grid", type=int, default=64, help="histogram cells per axis")
    p_sim.add_argument(
        "--base",
        default="random",
        help="random | all-zero | all-one | descent | path to a base file "
        "(text of 0/1 letters, or packed with suffix .bits/.packed)",
    )
    p_sim.add_argument("--x0", default=None, help="comma-separated start point for explicit bases (default 0.5,...)")
    p_sim.add_argument(
        "--burn-in", dest="burn_in", type=int, default=None,
        help="steps excluded from counting (default 1000 for random ensembles, 0 for explicit bases)",
    )
    p_sim.add_argument("--delta", type=float, default=None, help="apply a post-composition perturbation of this size")
    p_sim.add_argument("--trace", action="store_true", help="write trace.jsonl (explicit bases, needs --out)")
    p_sim.add_argument(
        "--figures", action=argparse.BooleanOptionalAction, default=False,
        help="render PNG figures beside the delimited output (needs --out)",
    )
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = subs.add_parser(
        "verify", parents=[common], help="run certificate suites; exit 0 iff all pass"
    )
    p_ver.add_argument("--suite", default="all", choices=list(_SUITES) + ["all"])
    p_ver.add_argument("--steps", type=int, default=10**6, help="steps per orbit / experiment length")
    p_ver.add_argument("--orbits", type=int, default=100, help="random orbits in the zero-run suite")
    p_ver.add_argument("--grid", type=int, default=1000, help="cells per axis for interval hulls")
    p_ver.add_argument("--samples", type=int, default=1000, help="sample points per block for perturbed strip checks")
    p_ver.add_argument("--trials", type=int, default=200, help="orbit pairs in the shadowing check")
    p_ver.add_argument("--delta", type=float, default=None, help="perturbation size (default r/2 where one is needed)")
    p_ver.add_argument("--burn-in", dest="burn_in", type=int, default=1000, help="ensemble burn-in for the zero-run suite")
    p_ver.add_argument(
        "--figures", action=argparse.BooleanOptionalAction, default=False,
        help="render the derivative-norm panel beside the report (needs --out)",
    )
    p_ver.set_defaults(func=cmd_verify)

    p_word = subs.add_parser(
        "critical-word", parents=[common], help="build and certify one critical word"
    )
    p_word.add_argument("--target", required=True, help="comma-separated point in the safe cube")
    p_word.add_argument("--radius", type=float, default=None, help="sup-ball radius around the target (default r)")
    p_word.set_defaults(func=cmd_critical_word)

    names = {
        "params": p_params,
        "simulate": p_sim,
        "verify": p_ver,
        "critical-word": p_word,
    }
    return parser, names


def _find_config_path(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config":
            return argv[i + 1] if i + 1 < len(argv) else None
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(
    subparsers: dict[str, argparse.ArgumentParser], argv: list[str]
) -> None:
    path = _find_config_path(argv)
    if path is None:
        return
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise _CliError(4, f"cannot read config file: {exc}")
    except json.JSONDecodeError as exc:
        raise _CliError(2, f"config file is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise _CliError(2, "config file must hold a JSON object of flag defaults")

    known: set[str] = set()
    for sub in subparsers.values():
        for action in sub._actions:
            if action.dest not in ("help", "func"):
                known.add(action.dest)
    mapped = {}
    for key, value in raw.items():
        dest = key.replace("-", "_")
        if dest not in known:
            raise _CliError(2, f"unknown config key {key!r}")
        mapped[dest] = value
    for sub in subparsers.values():
        dests = {a.dest for a in sub._actions}
        subset = {k: v for k, v in mapped.items() if k in dests}
        if subset:
            sub.set_defaults(**subset)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = _build_parser()
    try:
        _apply_config(subparsers, argv)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except OrbitEscapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
