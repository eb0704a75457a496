"""
Command-line front end: ``bounds``, ``sweep``, ``verify``, ``certify`` and ``synth``.

Exit codes: 0 success, 1 failed check or flagged verdict, 2 usage error.
"""

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channels as ch
from . import fidelity_limits as fl
from . import fock_numerics as fn
from . import gaussian_core as gc
from .exceptions import CVLimitsError, UsageError

SWEEP_COLUMNS = ["kind", "n_in", "eta", "lambda", "channel", "param",
                 "f_closed", "f_quadrature", "bound", "branch", "gap"]
RECORD_COLUMNS = ["alpha_re", "alpha_im", "fidelity_estimate", "n_trials"]
SWEEP_SCHEMA = "cvlimits.sweep/1"


def fmt_float(x):
    """17 significant digits, so every float round-trips exactly."""
    return "%.17g" % x


# ---------------------------------------------------------------- parsing helpers

def parse_grid(text):
    """``"a:b:num"`` (inclusive linspace), ``"a,b,c"`` or a single number."""
    text = text.strip()
    try:
        if ":" in text:
            a, b, num = text.split(":")
            return [float(x) for x in np.linspace(float(a), float(b), int(num))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}") from None


def parse_channel(token, task):
    """Channel token to a ChannelSpec for ``task``, or None when it does not apply.

    Tokens: ``amp-opt``, ``mp-opt``, ``mp-direct-opt``, ``identity`` and
    ``<kind>:<param>`` for any channel kind.
    """
    token = token.strip()
    if token == "amp-opt":
        if task.conjugate:
            return None
        t = fl.scale_task(task)
        return ch.ChannelSpec.amplifier(fl.best_gaussian_amplifier(t.eta, t.lam)[0])
    if token == "mp-opt":
        return fl.task_bound(task).attained_by if task.conjugate else None
    if token == "mp-direct-opt":
        return None if task.conjugate else ch.ChannelSpec.mp_direct(fl.best_mp_direct(task)[0])
    if token == "identity":
        return ch.ChannelSpec.identity()
    kind, sep, value = token.partition(":")
    if not sep or kind not in ch.KINDS:
        raise UsageError(f"unknown channel token {token!r}")
    try:
        spec = ch.ChannelSpec(kind, float(value))
    except ValueError:
        raise UsageError(f"bad channel parameter in {token!r}") from None
    try:
        ch.check_compatible(spec, task)
    except UsageError:
        return None
    return spec


# ---------------------------------------------------------------- sweep

def sweep_rows(tasks, channel_tokens, quadrature=True, nodes=80, workers=1):
    """One row per (task, applicable channel), in input order."""
    jobs = []
    for task in tasks:
        for token in channel_tokens:
            chan = parse_channel(token, task)
            if chan is not None:
                jobs.append((task, chan))

    def row(job):
        task, chan = job
        bound = fl.task_bound(task)
        f_closed = float(ch.average_fidelity_closed(chan, task))
        f_quad = (ch.average_fidelity_quadrature(chan, task, radial_nodes=nodes)
                  if quadrature else float("nan"))
        return {
            "kind": fl.task_kind(task), "n_in": task.n_in, "eta": task.eta, "lambda": task.lam,
            "channel": chan.kind, "param": chan.param, "f_closed": f_closed,
            "f_quadrature": float(f_quad), "bound": bound.value, "branch": bound.branch.value,
            "gap": bound.value - f_closed,
        }

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(row, jobs))
    return [row(j) for j in jobs]


def sweep_tasks(task_kind, outer_grid, lambda_grid):
    """Tasks ``(1, eta, lam)`` for ``amp`` or ``(N, 1, lam, conj)`` for ``conj``."""
    out = []
    for x in outer_grid:
        for lam in lambda_grid:
            if task_kind == "amp":
                out.append(ch.TaskSpec(1.0, x, lam))
            else:
                out.append(ch.TaskSpec(x, 1.0, lam, conjugate=True))
    return out


def _cell(v):
    return fmt_float(v) if isinstance(v, float) else str(v)


def write_rows(rows, columns, fmt, fh, schema=None):
    if fmt == "json":
        payload = {"schema": schema, "columns": columns,
                   "rows": [[r[c] for c in columns] for r in rows]}
        fh.write(json.dumps(payload, indent=1) + "\n")
        return
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])


# ---------------------------------------------------------------- verify

@dataclass
class CheckResult:
    name: str
    error: float
    tolerance: float
    seconds: float = 0.0
    message: str = ""

    @property
    def passed(self):
        return bool(self.error <= self.tolerance)


def _check_norm(conj, kappas, dim, nodes, fault=0.0):
    trunc = fn.TruncationSpec(dim)
    worst = 0.0
    for s in (0.5, 1.0, 2.0):
        for k in kappas:
            spec = gc.GaussianMixtureSpec(s, k, conjugate_mode_b=conj)
            nu_p, nu_m = gc.closed_form_symplectic_eigenvalues(spec)
            if conj:
                closed = gc.gaussian_max_eigenvalue(nu_p + fault, nu_m)
            else:
                closed = s / (s + 1.0 + k**2)
            oracle = fn.hermitian_max_eigenvalue(fn.build_mixture_operator(spec, trunc, nodes))
            worst = max(worst, abs(oracle - closed) / closed)
    return worst


def _check_symplectic():
    worst = 0.0
    for s in np.geomspace(0.1, 10, 9):
        for k in np.linspace(0, 1.5, 7):
            for conj in (True, False):
                spec = gc.GaussianMixtureSpec(s, k, conj)
                got = gc.symplectic_eigenvalues(gc.mixture_covariance(spec))
                ref = gc.closed_form_symplectic_eigenvalues(spec)
                worst = max(worst, max(abs(a - b) / b for a, b in zip(got, ref)))
    return worst


def _check_amplifier(dim):
    trunc = fn.TruncationSpec(dim)
    worst = 0.0
    for g in (1.5, 2.0, 3.0):
        task = ch.TaskSpec(1.0, g, 0.5)
        chan = ch.ChannelSpec.amplifier(g)
        for a in (0.3, 0.6 + 0.3j, 1.0):
            rho = fn.amplifier_apply(fn.coherent_vector(a, trunc).projector(), g)
            got = fn.pure_state_fidelity(fn.coherent_vector(np.sqrt(g) * a, trunc), rho)
            worst = max(worst, abs(got - ch.per_input_fidelity(chan, a, task)))
    return worst


def _check_mp(dim):
    trunc = fn.TruncationSpec(dim)
    worst = 0.0
    for c in (0.5, 2.0 / 3.0, 1.0):
        for a in (0.0, 0.7, 1.0 + 0.5j):
            for chan, task in ((ch.ChannelSpec.mp_conjugator(c), ch.TaskSpec(1, 1, 0.5, True)),
                               (ch.ChannelSpec.mp_direct(c), ch.TaskSpec(1, 1, 0.5))):
                got = ch.fock_fidelity(chan, a, task, trunc)
                worst = max(worst, abs(got - ch.per_input_fidelity(chan, a, task)))
    return worst


def _check_scaling():
    worst = 0.0
    chans = [ch.ChannelSpec.amplifier(2.0), ch.ChannelSpec.attenuator(0.5),
             ch.ChannelSpec.mp_direct(0.7), ch.ChannelSpec.identity()]
    for n, eta, lam in ((2.0, 1.0, 0.5), (4.0, 8.0, 1.0), (0.5, 3.0, 0.2)):
        task = ch.TaskSpec(n, eta, lam)
        forms = (task, fl.unit_target(task), fl.scale_task(task))
        for chan in chans:
            v = [ch.average_fidelity_quadrature(chan, t) for t in forms]
            worst = max(worst, max(v) - min(v))
        ctask = ch.TaskSpec(n, eta, lam, True)
        cforms = (ctask, fl.unit_target(ctask), fl.scale_task(ctask))
        v = [ch.average_fidelity_quadrature(ch.ChannelSpec.mp_conjugator(0.6), t) for t in cforms]
        worst = max(worst, max(v) - min(v))
    return worst


def _check_witness():
    worst = 0.0
    for eta in (2.0, 4.0, 8.0):
        for lam in (0.01, 0.1, 0.3):
            if eta < (1 + lam) ** 2:
                continue
            _, v = fl.witness_bound_optimize(ch.TaskSpec(1.0, eta, lam))
            worst = max(worst, abs(v - fl.amplification_bound(eta, lam).value))
    for n in (0.5, 1.0, 2.0):
        for lam in (0.01, 0.5, 1.0):
            _, v = fl.witness_bound_optimize(ch.TaskSpec(n, 1.0, lam, True))
            worst = max(worst, abs(v - fl.conjugation_bound(n, lam).value))
    return worst


def _check_amplifier_average(dim):
    trunc = fn.TruncationSpec(dim)
    worst = 0.0
    for g, eta, lam in ((2, 4, 0.2), (1.5, 2, 0.1), (3, 9, 0.05)):
        task = ch.TaskSpec(1.0, eta, lam)
        got = ch.amplifier_average_fidelity_displaced(g, task, trunc)
        worst = max(worst, abs(got - ch.average_fidelity_closed(ch.ChannelSpec.amplifier(g), task)))
    return worst


def _check_convergence(nodes):
    worst = 0.0
    for conj, kappas in ((True, (0.0, 0.3, 0.7, 1.0)), (False, (0.0, 0.3, 0.7, 1.0, 1.5))):
        for s in (0.5, 1.0, 2.0):
            for k in kappas:
                spec = gc.GaussianMixtureSpec(s, k, conj)
                a, b = (fn.hermitian_max_eigenvalue(
                    fn.build_mixture_operator(spec, fn.TruncationSpec(d), nodes)) for d in (60, 80))
                worst = max(worst, abs(a - b))
    return worst


def verification_checks(level="fast", dim=None, nodes=80, inject_fault=False):
    """``(name, tolerance, thunk)`` triples run by ``verify``."""
    if level not in ("fast", "full"):
        raise UsageError(f"unknown verification level {level!r}")
    dim = dim or (40 if level == "fast" else 60)
    fault = 1e-3 if inject_fault else 0.0
    star_kappas = (0.0, 0.3, 0.7, 1.0) if level == "fast" else (0.0, 0.3, 0.7, 1.0, 1.5)
    checks = [
        ("norm_M", 1e-6, lambda: _check_norm(True, (0.0, 0.3, 0.7, 1.0), dim, nodes, fault)),
        ("norm_M_star", 1e-6, lambda: _check_norm(False, star_kappas, dim, nodes)),
        ("symplectic_closed_forms", 1e-10, _check_symplectic),
        ("amplifier_apply", 1e-6, lambda: _check_amplifier(dim)),
        ("mp_output", 1e-6, lambda: _check_mp(dim)),
        ("amplifier_average", 1e-6, lambda: _check_amplifier_average(dim)),
        ("scaling_identity", 1e-8, _check_scaling),
        ("witness_chain", 1e-8, _check_witness),
    ]
    if level == "full":
        checks.append(("norm_convergence_60_80", 1e-8, lambda: _check_convergence(nodes)))
    return checks


def run_verification(level="fast", dim=None, nodes=80, inject_fault=False, workers=1):
    checks = verification_checks(level, dim, nodes, inject_fault)

    def run(item):
        name, tol, thunk = item
        t0 = time.perf_counter()
        try:
            err, msg = float(thunk()), ""
        except CVLimitsError as exc:
            err, msg = math.inf, str(exc)
        return CheckResult(name, err, tol, time.perf_counter() - t0, msg)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, checks))
    return [run(c) for c in checks]


# ---------------------------------------------------------------- certification

@dataclass(frozen=True)
class ExperimentRecord:
    alpha_re: float
    alpha_im: float
    fidelity_estimate: float
    n_trials: int


@dataclass
class CertificationVerdict:
    empirical_mean: float
    std_err: float
    bound: fl.BoundResult
    classical_baseline: float
    verdict: str
    z: float
    n_records: int
    warnings: list = field(default_factory=list)


class RecordParseError(UsageError):
    pass


def read_records(fh):
    """Parse certification input; errors name the offending line."""
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise RecordParseError("line 1: empty file") from None
    if [h.strip() for h in header] != RECORD_COLUMNS:
        raise RecordParseError(f"line 1: expected header {','.join(RECORD_COLUMNS)}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise RecordParseError(f"line {lineno}: expected 4 fields, got {len(row)}")
        try:
            a_re, a_im, f = (float(x) for x in row[:3])
            n = int(row[3])
        except ValueError:
            raise RecordParseError(f"line {lineno}: non-numeric field") from None
        if not all(math.isfinite(x) for x in (a_re, a_im, f)):
            raise RecordParseError(f"line {lineno}: non-finite value")
        if not 0.0 <= f <= 1.0:
            raise RecordParseError(f"line {lineno}: fidelity_estimate {f} outside [0, 1]")
        if n < 1:
            raise RecordParseError(f"line {lineno}: n_trials must be >= 1")
        records.append(ExperimentRecord(a_re, a_im, f, n))
    if not records:
        raise RecordParseError("no data rows")
    return records


def write_records(records, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in records:
        w.writerow([fmt_float(r.alpha_re), fmt_float(r.alpha_im), fmt_float(r.fidelity_estimate), r.n_trials])


def synthesize_records(chan, task, n_records, n_trials, seed):
    """Simulated test data: ``alpha ~ p_lam``, success counts ``~ Binomial(n_trials, F(alpha))``."""
    rng = np.random.default_rng(seed)
    alpha = ch.sample_prior(rng, task.lam, n_records)
    p = np.clip(ch.per_input_fidelity(chan, alpha, task), 0.0, 1.0)
    k = rng.binomial(n_trials, p)
    return [ExperimentRecord(float(a.real), float(a.imag), float(ki) / n_trials, n_trials)
            for a, ki in zip(alpha, k)]


def prior_moment_warnings(records, lam, z):
    """Flag samples whose first or second moments disagree with ``p_lam`` at ``z`` sigma."""
    a = np.array([complex(r.alpha_re, r.alpha_im) for r in records])
    n = len(a)
    out = []
    sd = 1.0 / np.sqrt(2.0 * lam)
    for name, m in (("mean Re(alpha)", a.real.mean()), ("mean Im(alpha)", a.imag.mean())):
        if abs(m) > z * sd / np.sqrt(n):
            out.append(f"{name} = {m:.4g} inconsistent with 0 at z={z}")
    m2 = np.mean(np.abs(a) ** 2)
    # |alpha|^2 is exponential with mean and std 1/lam
    if abs(m2 - 1.0 / lam) > z / (lam * np.sqrt(n)):
        out.append(f"mean |alpha|^2 = {m2:.4g} inconsistent with 1/lambda = {1 / lam:.4g} at z={z}")
    return out


def certify(records, task, z=3.0):
    """Compare a fidelity dataset with the quantum limit and the measure-and-prepare baseline.

    The mean is weighted by ``n_trials``; its standard error is the
    sandwich estimate over records, which covers both the spread of ``alpha``
    and the per-record sampling noise.
    """
    f = np.array([r.fidelity_estimate for r in records])
    w = np.array([r.n_trials for r in records], dtype=float)
    W = w.sum()
    mean = float(np.sum(w * f) / W)
    R = len(records)
    if R > 1:
        se = float(np.sqrt(R / (R - 1) * np.sum(w**2 * (f - mean) ** 2)) / W)
    else:
        se = float(np.sqrt(mean * (1 - mean) / W))
    bound = fl.task_bound(task)
    baseline = float(fl.classical_baseline(task))
    if mean - z * se > bound.value + 1e-9:
        verdict = "exceeds_quantum_limit_flagged"
    elif mean + z * se < baseline:
        verdict = "below_classical"
    else:
        verdict = "between"
    return CertificationVerdict(mean, se, bound, baseline, verdict, z, R,
                                prior_moment_warnings(records, task.lam, z))


# ---------------------------------------------------------------- argparse plumbing

GLOBAL_DEFAULTS = {"format": None, "seed": 0, "dim": None, "nodes": 80, "out": None, "workers": 1}


def _global_flags(parser):
    parser.add_argument("--format", choices=("table", "csv", "json"), default=argparse.SUPPRESS)
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    parser.add_argument("--dim", type=int, default=argparse.SUPPRESS, help="Fock truncation per mode")
    parser.add_argument("--nodes", type=int, default=argparse.SUPPRESS, help="radial quadrature nodes")
    parser.add_argument("--out", default=argparse.SUPPRESS, help="output path (default stdout)")
    parser.add_argument("--workers", type=int, default=argparse.SUPPRESS)


def _task_flags(parser, need_kind=True):
    group = parser.add_mutually_exclusive_group(required=need_kind)
    group.add_argument("--amp", action="store_const", const="amp", dest="task_kind")
    group.add_argument("--conj", action="store_const", const="conj", dest="task_kind")
    group.add_argument("--atten", action="store_const", const="atten", dest="task_kind")
    parser.add_argument("--n", type=float, default=1.0, dest="n_in", help="input scale N")
    parser.add_argument("--eta", type=float, default=1.0, help="target scale")
    parser.add_argument("--lambda", type=float, required=True, dest="lam", help="prior inverse width")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common)
    parser = argparse.ArgumentParser(prog="cvlimits", parents=[common],
                                     description="Quantum-limit fidelities for Gaussian-distributed coherent tasks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", parents=[common], help="quantum limit of a task")
    _task_flags(p)

    p = sub.add_parser("sweep", parents=[common], help="fidelity/bound table over a task grid")
    p.add_argument("--task", choices=("amp", "conj"), default="amp")
    p.add_argument("--eta-grid", default="1:10:21")
    p.add_argument("--n-grid", default="1,2,4")
    p.add_argument("--lambda-grid", default="0.01:1:21")
    p.add_argument("--channels", default="amp-opt,mp-opt,mp-direct-opt,identity")
    p.add_argument("--no-quadrature", action="store_true")

    p = sub.add_parser("verify", parents=[common], help="closed forms against the Fock oracle")
    p.add_argument("--level", choices=("fast", "full"), default="fast")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("certify", parents=[common], help="certify a fidelity dataset")
    p.add_argument("data")
    _task_flags(p)
    p.add_argument("--z", type=float, default=3.0)

    p = sub.add_parser("synth", parents=[common], help="simulate a fidelity dataset")
    _task_flags(p)
    p.add_argument("--channel", default="amp-opt")
    p.add_argument("--records", type=int, default=10_000)
    p.add_argument("--trials", type=int, default=100)
    return parser


def _task_from_args(args):
    if args.task_kind == "conj":
        return ch.TaskSpec(args.n_in, 1.0, args.lam, conjugate=True)
    if args.task_kind == "amp":
        return ch.TaskSpec(1.0, args.eta, args.lam)
    return ch.TaskSpec(args.n_in, args.eta, args.lam)


def _bound_for_args(args):
    if args.task_kind == "amp":
        return fl.amplification_bound(args.eta, args.lam)
    if args.task_kind == "conj":
        return fl.conjugation_bound(args.n_in, args.lam)
    return fl.attenuation_bound(_task_from_args(args))


def _bound_dict(b):
    return {
        "value": b.value, "branch": b.branch.value,
        "attained_by": b.attained_by.kind if b.attained_by else None,
        "param": b.attained_by.param if b.attained_by else None,
        "attainability": b.attainability.value,
        "best_known": None if b.best_known is None else float(b.best_known),
    }


def _emit_table(pairs, fh):
    width = max(len(k) for k, _ in pairs)
    for k, v in pairs:
        shown = "-" if v is None else ("%.10g" % v if isinstance(v, float) else str(v))
        fh.write(f"{k:<{width}}  {shown}\n")


def _emit_mapping(d, fmt, fh):
    if fmt == "json":
        fh.write(json.dumps(d, indent=1) + "\n")
    elif fmt == "csv":
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(d))
        w.writerow([_cell(v) if v is not None else "" for v in d.values()])
    else:
        _emit_table(list(d.items()), fh)


def cmd_bounds(args, fh):
    _emit_mapping(_bound_dict(_bound_for_args(args)), args.format or "table", fh)
    return 0


def cmd_sweep(args, fh):
    outer = parse_grid(args.eta_grid if args.task == "amp" else args.n_grid)
    lams = parse_grid(args.lambda_grid)
    tokens = [t for t in args.channels.split(",") if t.strip()]
    rows = sweep_rows(sweep_tasks(args.task, outer, lams), tokens,
                      quadrature=not args.no_quadrature, nodes=args.nodes, workers=args.workers)
    write_rows(rows, SWEEP_COLUMNS, args.format or "csv", fh, schema=SWEEP_SCHEMA)
    return 0


def cmd_verify(args, fh):
    results = run_verification(args.level, args.dim, args.nodes, args.inject_fault, args.workers)
    ok = all(r.passed for r in results)
    if args.format == "json":
        fh.write(json.dumps({"level": args.level, "passed": ok, "checks": [
            {"name": r.name, "error": r.error if math.isfinite(r.error) else None,
             "tolerance": r.tolerance, "passed": r.passed, "seconds": r.seconds,
             "message": r.message} for r in results]}, indent=1) + "\n")
    else:
        for r in results:
            fh.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<24} err={r.error:.3e}  "
                     f"tol={r.tolerance:.0e}  ({r.seconds:.1f}s)"
                     + (f"  {r.message}" if r.message else "") + "\n")
        failed = [r.name for r in results if not r.passed]
        fh.write("all checks passed\n" if ok else f"failed: {', '.join(failed)}\n")
    return 0 if ok else 1


def cmd_certify(args, fh):
    with open(args.data, newline="", encoding="utf-8") as data:
        records = read_records(data)
    v = certify(records, _task_from_args(args), args.z)
    for msg in v.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    d = {"verdict": v.verdict, "empirical_mean": v.empirical_mean, "std_err": v.std_err,
         "z": v.z, "n_records": v.n_records, "bound": v.bound.value,
         "classical_baseline": v.classical_baseline}
    _emit_mapping(d, args.format or "table", fh)
    return 1 if v.verdict == "exceeds_quantum_limit_flagged" else 0


def cmd_synth(args, fh):
    task = _task_from_args(args)
    chan = parse_channel(args.channel, task)
    if chan is None:
        raise UsageError(f"channel {args.channel!r} does not apply to this task")
    write_records(synthesize_records(chan, task, args.records, args.trials, args.seed), fh)
    return 0


COMMANDS = {"bounds": cmd_bounds, "sweep": cmd_sweep, "verify": cmd_verify,
            "certify": cmd_certify, "synth": cmd_synth}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    buf = io.StringIO()
    try:
        code = COMMANDS[args.command](args, buf)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
    except (CVLimitsError, OSError) as exc:
        print(f"cvlimits {args.command}: {exc}", file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
