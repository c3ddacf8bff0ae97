"""``swistab`` command-line interface.

Every subcommand reads one JSON system file::

    {"d": 2, "K": 2,
     "matrices": [[[1, 0], [0, 0.5]], [[0.5, 0], [0, 1]]],
     "P": [[1, 0], [0, 1]],                      # optional, identity by default
     "tolerances": {"eig_tol": 1e-13}}           # optional overrides

and prints a human summary, or with ``--json`` a machine report.  Exit codes:
0 success or stable, 1 negative verdict, 2 undetermined, 3 not converged,
64 usage or input error, 65 budget exceeded, 70 internal error.
"""

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, fields
from enum import Enum

import numpy as np

from . import __version__, dynamics, ksub, lyapunov, signals, words
from .errors import BudgetExceeded, NotConverged, ParseError, SwistabError
from .matcore import DEFAULT_TOL, Tolerance, as_symmetric

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_UNDETERMINED = 2
EXIT_NOT_CONVERGED = 3
EXIT_USAGE = 64
EXIT_BUDGET = 65
EXIT_INTERNAL = 70

_TOL_NAMES = tuple(f.name for f in fields(Tolerance))


class UsageError(Exception):
    pass


@dataclass(frozen=True, eq=False)
class SystemFile:
    d: int
    K: int
    matrices: tuple
    P: np.ndarray = None
    tolerances: dict = None

    def system(self):
        return lyapunov.SwitchedSystem(self.matrices)

    def tolerance(self):
        return DEFAULT_TOL.updated(**(self.tolerances or {}))

    def to_dict(self):
        out = {"d": self.d, "K": self.K, "matrices": [np.asarray(m).tolist() for m in self.matrices]}
        if self.P is not None:
            out["P"] = np.asarray(self.P).tolist()
        if self.tolerances:
            out["tolerances"] = dict(self.tolerances)
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _matrix(value, d, field):
    if not isinstance(value, list) or len(value) != d:
        raise ParseError(f"field '{field}': expected {d} rows")
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != d:
            raise ParseError(f"field '{field}[{i}]': expected a row of {d} numbers")
        for j, x in enumerate(row):
            if not _is_number(x):
                raise ParseError(f"field '{field}[{i}][{j}]': expected a finite number, got {x!r}")
    return np.array(value, dtype=float)


def parse_system(text):
    """Parse a system file; errors name the offending line or field."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")
    for key in ("d", "K", "matrices"):
        if key not in doc:
            raise ParseError(f"missing field '{key}'")
    d, K = doc["d"], doc["K"]
    for name, v in (("d", d), ("K", K)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ParseError(f"field '{name}': expected a positive integer, got {v!r}")
    mats = doc["matrices"]
    if not isinstance(mats, list) or len(mats) != K:
        raise ParseError(f"field 'matrices': expected {K} matrices")
    matrices = tuple(_matrix(m, d, f"matrices[{k}]") for k, m in enumerate(mats))
    P = _matrix(doc["P"], d, "P") if doc.get("P") is not None else None
    tols = doc.get("tolerances") or {}
    if not isinstance(tols, dict):
        raise ParseError("field 'tolerances': expected an object")
    for name, v in tols.items():
        if name not in _TOL_NAMES:
            raise ParseError(f"field 'tolerances.{name}': unknown tolerance (known: {', '.join(_TOL_NAMES)})")
        if not _is_number(v) or v <= 0:
            raise ParseError(f"field 'tolerances.{name}': expected a positive number")
    unknown = set(doc) - {"d", "K", "matrices", "P", "tolerances"}
    if unknown:
        raise ParseError(f"unknown field(s): {', '.join(sorted(unknown))}")
    return SystemFile(d, K, matrices, P, dict(tols) or None)


def load_system(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not UTF-8 text") from exc
    return parse_system(text), hashlib.sha256(raw).hexdigest()


def jsonable(obj):
    """Convert results to plain JSON types; non-finite floats become strings."""
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, ksub.Subspace):
        return {"dim": obj.dim, "basis": jsonable(obj.basis.T)}
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def report_digest(report):
    stable = {k: v for k, v in report.items() if k not in ("timing_s", "report_digest")}
    blob = json.dumps(stable, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


# -- subcommands: each returns (exit code, result dict, human lines) --------


def _certificate(sf, tol, required=True):
    cert = lyapunov.verify_weak_lyapunov(sf.system(), sf.P, tol)
    if required:
        cert.require_valid()
    return cert


def _cert_dict(cert):
    return {
        "valid": cert.valid,
        "margins": cert.margins,
        "strict": cert.strict,
        "p_norms": cert.p_norms,
        "min_margin": cert.min_margin,
        "beta": cert.beta,
    }


def cmd_verify(sf, tol, args):
    cert = _certificate(sf, tol, required=False)
    lines = [f"weak Lyapunov certificate: {'VALID' if cert.valid else 'INVALID'}"]
    for k, (m, n) in enumerate(zip(cert.margins, cert.p_norms), 1):
        lines.append(f"  S_{k}: margin {m:.6e}  ||S_{k}||_P = {n:.17g}")
    lines.append(f"  validity band: margin >= -{tol.psd_tol:g} * ||P||")
    return (EXIT_OK if cert.valid else EXIT_NEGATIVE), _cert_dict(cert), lines


def _verdict_dict(v):
    return {
        "status": v.status,
        "worst": v.worst,
        "worst_word": v.worst_word,
        "margin": v.margin,
        "witness": v.witness,
        "witness_value": v.witness_value,
        "lengths": v.lengths,
        "decision_band": v.decision_band,
        "eig_tol": v.eig_tol,
        "per_length": [{"length": r.length, "max": r.value, "word": r.witness, "words": r.count}
                       for r in v.per_length],
    }


_STATUS_EXIT = {
    words.Status.ABSOLUTELY_STABLE: EXIT_OK,
    words.Status.NOT_ABSOLUTELY_STABLE: EXIT_NEGATIVE,
    words.Status.UNDETERMINED: EXIT_UNDETERMINED,
}


def cmd_decide(sf, tol, args):
    if sf.d not in (2, 3):
        raise UsageError(f"decide needs d = 2 or 3, got d = {sf.d}; "
                         "use 'gsr' for an empirical periodic-signal probe")
    sys_ = sf.system()
    cert = lyapunov.verify_weak_lyapunov(sys_, sf.P, tol)
    if not cert.valid:
        raise UsageError("decide needs a common weak Lyapunov matrix; "
                         f"margins {cert.margins} violate it (see 'verify'); "
                         "use 'gsr' for an empirical periodic-signal probe")
    v = (words.decide_d2 if sf.d == 2 else words.decide_d3)(sys_, cert, tol)
    lines = [
        f"verdict: {v.status.value}",
        f"  max rho(w)^(1/|w|) over lengths {list(v.lengths)}: {v.worst:.17g} at word {_word(v.worst_word)}",
        f"  margin 1 - max = {v.margin:.6e}  (decision band {v.decision_band:g}, eig tol {v.eig_tol:g})",
    ]
    if v.witness is not None:
        lines.append(f"  witness: {_word(v.witness)}  rho^(1/n) = {v.witness_value:.17g}")
    return _STATUS_EXIT[v.status], _verdict_dict(v), lines


def _given(value, default):
    return default if value is None else value


def _word(w):
    return " ".join(map(str, w)) if w else "-"


def cmd_ksub(sf, tol, args):
    sys_ = sf.system()
    P = sf.P if sf.P is not None else np.eye(sf.d)
    cert = _certificate(sf, tol, required=False)
    per = []
    lines = []
    for k, S in enumerate(sys_.matrices, 1):
        V = ksub.k_subspace(P, S, tol)
        U = ksub.unit_gain_subspace(P, S, tol)
        inv = ksub.is_invariant(S, V, tol)
        per.append({"letter": k, "p_norm": cert.p_norms[k - 1], "norm_set": V,
                    "unit_gain_set": U, "invariant": inv})
        lines.append(f"S_{k}: ||S||_P = {cert.p_norms[k - 1]:.17g}, norm-attaining set dim {V.dim}"
                     f" (invariant: {inv}), unit-gain set dim {U.dim}")
        for b in V.basis.T:
            lines.append(f"    basis {np.array2string(b, precision=12)}")
    result = {"certificate_valid": cert.valid, "matrices": per}
    pairs = []
    for i in range(sys_.K):
        for j in range(i + 1, sys_.K):
            inter = ksub.intersect(per[i]["unit_gain_set"], per[j]["unit_gain_set"], tol)
            pairs.append({"pair": (i + 1, j + 1), "intersection_dim": inter.dim})
    result["pairs"] = pairs
    if sys_.K == 2:
        rep = ksub.check_iv1(sys_, P, tol)
        result["disjoint"] = {
            "holds": rep.holds,
            "intersection_dim": rep.intersection_dim,
            "invariant": rep.invariant,
            "generic_signals_stable": rep.generic_signals_stable,
            "exception_words": rep.exception_words,
        }
        lines.append(f"unit-gain sets meet only at 0: {rep.holds}; "
                     f"generic signals stable: {rep.generic_signals_stable}")
        if rep.exception_words:
            lines.append("  periodic exceptions: " + ", ".join(f"({_word(w)})^inf" for w in rep.exception_words))
    else:
        for p in pairs:
            lines.append(f"pair {p['pair']}: unit-gain intersection dim {p['intersection_dim']}")
    return EXIT_OK, result, lines


def _signal(args, K):
    spec = args.signal or "bernoulli:" + ",".join([repr(1.0 / K)] * K)
    try:
        return signals.from_spec(spec, K, seed=args.seed)
    except OSError as exc:
        raise UsageError(f"cannot read signal file: {exc}") from exc
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad signal file: {exc}") from exc


def _vector(text, d):
    try:
        x = np.array([float(s) for s in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"cannot parse --x0 {text!r}") from exc
    if x.size != d:
        raise UsageError(f"--x0 needs {d} entries, got {x.size}")
    return x


def cmd_simulate(sf, tol, args):
    sys_ = sf.system()
    cert = _certificate(sf, tol)
    sig = _signal(args, sf.K)
    x0 = _vector(args.x0, sf.d) if args.x0 else None
    n = _given(args.horizon, 1000)
    rec = dynamics.iterate(sys_, cert, sig, n, x0)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("index,norm\n")
            for i, v in enumerate(rec.product_norms, 1):
                fh.write(f"{i},{v:.17g}\n")
    result = {
        "signal": sig.describe(),
        "horizon": n,
        "final_norm": rec.product_norms[-1],
        "min_norm": rec.product_norms.min(),
        "max_increase": rec.max_increase(),
        "monotone_band": 10 * tol.psd_tol,
        "final_product": rec.final_product,
        "final_state_norm": rec.state_norms[-1] if x0 is not None else None,
        "csv": args.csv,
    }
    lines = [
        f"signal {sig.kind.value}, horizon {n}",
        f"  final ||product||_P = {rec.product_norms[-1]:.17g}",
        f"  largest step increase {rec.max_increase():.3e} (allowed {10 * tol.psd_tol:g})",
    ]
    if x0 is not None:
        lines.append(f"  final ||x_n||_P = {rec.state_norms[-1]:.17g}")
    return EXIT_OK, result, lines


def cmd_omega(sf, tol, args):
    sys_ = sf.system()
    cert = _certificate(sf, tol)
    sig = _signal(args, sf.K)
    n = _given(args.horizon, 2000)
    est = dynamics.omega_estimate(sys_, cert, sig, n, tol=tol)
    result = {
        "signal": sig.describe(),
        "horizon": n,
        "Q": est.Q,
        "r_ext": est.r_ext,
        "r_int": est.r_int,
        "stable_subspace": est.stable,
        "residual": est.residual,
        "gram_residual": est.gram_residual,
        "m_converged": est.m_converged,
        "conv_tol": tol.conv_tol,
        "probes": est.probes,
    }
    lines = [
        f"limit radii: r_ext = {est.r_ext:.17g}, r_int = {est.r_int:.17g}",
        f"  residual {est.residual:.3e}, Gram residual {est.gram_residual:.3e} (tol {tol.conv_tol:g})"
        + ("" if est.m_converged else "; products rotate, Q taken from the Gram limit"),
        f"  stable subspace dim {est.stable.dim}",
        "  Q =",
        *("    " + np.array2string(r, precision=12) for r in est.Q),
    ]
    if sf.d == 2:
        sp = dynamics.split_from_limit(cert.P, est.M, tol)
        result["splitting"] = {"co_part": sp.co_part, "norm_part": sp.norm_part, "tail_error": sp.tail_error}
    return EXIT_OK, result, lines


def cmd_montecarlo(sf, tol, args):
    sys_ = sf.system()
    cert = _certificate(sf, tol)
    measure = _signal(args, sf.K)
    trials, n = _given(args.trials, 1000), _given(args.horizon, 5000)
    rep = dynamics.monte_carlo_stability(sys_, cert, measure, trials, n, args.decay_thresh, args.seed)
    result = {
        "measure": measure.describe(),
        "fraction": rep.fraction,
        "decayed": rep.decayed,
        "trials": rep.trials,
        "horizon": rep.horizon,
        "decay_thresh": rep.decay_thresh,
        "generator": rep.generator,
        "trial_seeds": rep.trial_seeds,
        "final_norms": rep.final_norms,
        "decay_steps": rep.decay_steps,
    }
    lines = [
        f"{rep.decayed}/{rep.trials} sampled signals decayed below {rep.decay_thresh:g} "
        f"within {rep.horizon} steps (fraction {rep.fraction:.6g})",
        f"  seed {rep.seed} ({rep.generator}); measure atomic: {measure.atomic}",
    ]
    return EXIT_OK, result, lines


def cmd_gsr(sf, tol, args):
    n_max = _given(args.nmax, 8)
    b = words.gsr_lower_bound(sf.system(), n_max, dedup=not args.no_dedup, tol=tol)
    result = {
        "lower_bound": b.value,
        "witness": b.witness,
        "n_max": b.n_max,
        "dedup_cyclic": not args.no_dedup,
        "per_length": [{"length": r.length, "max": r.value, "word": r.witness, "words": r.count}
                       for r in b.per_length],
    }
    lines = [f"generalized spectral radius >= {b.value:.17g} (word {_word(b.witness)}, lengths <= {n_max})"]
    lines += [f"  n={r.length:2d}: {r.value:.17g}  {_word(r.witness)}" for r in b.per_length]
    return EXIT_OK, result, lines


COMMANDS = {
    "verify": cmd_verify,
    "decide": cmd_decide,
    "ksub": cmd_ksub,
    "simulate": cmd_simulate,
    "omega": cmd_omega,
    "montecarlo": cmd_montecarlo,
    "gsr": cmd_gsr,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("file", help="system file (JSON)")
    common.add_argument("--json", action="store_true", help="print the machine-readable report")
    common.add_argument("--tol-eig", type=float, help="spectral-radius tolerance")
    common.add_argument("--tol-rank", type=float, help="relative kernel/rank tolerance")
    common.add_argument("--tol-psd", type=float, help="semidefiniteness tolerance")
    common.add_argument("--band", type=float, help="decision band below 1 for a stable verdict")
    common.add_argument("--tol-conv", type=float, help="convergence tolerance for limit probes")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--nmax", type=int, help="longest word length (gsr)")
    common.add_argument("--no-dedup", action="store_true", help="evaluate every word, not one per cyclic class")
    common.add_argument("--horizon", type=int, help="number of steps")
    common.add_argument("--trials", type=int, help="Monte Carlo trials")
    common.add_argument("--decay-thresh", type=float, default=1e-6)
    common.add_argument("--signal", help="periodic:1,2 | bernoulli:0.5,0.5 | markov:<file> | constantrun:1")
    common.add_argument("--x0", help="initial state, comma separated")
    common.add_argument("--csv", help="write the product-norm profile as index,norm")

    parser = _Parser(prog="swistab", description="Stability analysis of switched linear systems "
                     "that share a weak quadratic Lyapunov function.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _tolerance(sf, args):
    tol = sf.tolerance()
    return tol.updated(eig_tol=args.tol_eig, rank_tol=args.tol_rank, psd_tol=args.tol_psd,
                       decision_band=args.band, conv_tol=args.tol_conv)


def run(argv):
    """Parse ``argv`` and run the subcommand; returns ``(exit code, report, text lines, json flag)``."""
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    sf, digest = load_system(args.file)
    if sf.P is not None:
        # reject an asymmetric P before any analysis
        as_symmetric(sf.P, sf.tolerance(), "P")
    tol = _tolerance(sf, args)
    code, result, lines = COMMANDS[args.command](sf, tol, args)
    report = {
        "command": args.command,
        "argv": list(argv),
        "input_sha256": digest,
        "tolerances": tol.as_dict(),
        "seed": args.seed,
        "exit_code": code,
        "result": jsonable(result),
        "timing_s": time.perf_counter() - start,
    }
    report["report_digest"] = report_digest(report)
    return code, report, lines, args.json


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        code, report, lines, as_json = run(argv)
    except SystemExit as exc:
        # --help / --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except (UsageError, ValueError) as exc:
        print(f"swistab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"swistab: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except NotConverged as exc:
        print(f"swistab: not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except SwistabError as exc:
        print(f"swistab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"swistab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if as_json:
        print(json.dumps(report, sort_keys=True, indent=2))
    else:
        print("\n".join(lines))
        print(f"[{report['command']} exit {code}; input sha256 {report['input_sha256'][:16]}; "
              f"{report['timing_s']:.3f} s]")
    return code


if __name__ == "__main__":
    sys.exit(main())
