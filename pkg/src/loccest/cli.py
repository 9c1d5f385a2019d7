"""Command-line entry point.

Every command writes one JSON report (to ``--output`` or stdout) holding
the tool version, the full parameter echo and the results. Exit codes:
0 success, 2 validation error, 3 inconsistent moments.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import __version__, applications, maps, protocol, spectrum, transport
from .errors import InconsistentMomentsError, NotPositiveError, ProtocolError, ValidationError
from .interferometer import estimate_from_counts, joint_probs, moment_from_probs, sample_shots
from .rng import check_seed, split_seed
from .states import (DensityOperator, maximally_mixed, moment_direct, partial_transpose,
                     random_density, singlet, werner)

DEFAULT_SEED = 0
EXIT_OK, EXIT_VALIDATION, EXIT_INCONSISTENT = 0, 2, 3


def generate_state(spec: str) -> DensityOperator:
    """Built-in generators: ``werner:p``, ``singlet``, ``maxmixed:d``, ``random:d:seed``.

    ``d`` is the local dimension; the state lives on ``d (x) d``.
    """
    name, *args = spec.split(":")
    try:
        if name == "singlet" and not args:
            return singlet()
        if name == "werner" and len(args) == 1:
            return werner(float(args[0]))
        if name == "maxmixed" and len(args) == 1:
            d = int(args[0])
            return maximally_mixed((d, d))
        if name == "random" and len(args) == 2:
            d, seed = int(args[0]), check_seed(int(args[1]))
            return random_density((d, d), np.random.Generator(np.random.Philox(seed)))
    except ValueError as exc:
        raise ValidationError(f"bad generator {spec!r}: {exc}") from exc
    raise ValidationError(f"unknown generator {spec!r}")


def load_state(args) -> DensityOperator:
    if (args.state is None) == (args.gen is None):
        raise ValidationError("give exactly one of --state or --gen")
    if args.gen is not None:
        return generate_state(args.gen)
    return DensityOperator.from_dict(_read_json(args.state))


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc


def load_map(spec: str, d: int | None) -> maps.QuantumMap:
    """A named map (needs ``--dim``), ``dephasing:c`` or a Choi JSON file."""
    if spec.endswith(".json"):
        try:
            return maps.QuantumMap.from_dict(_read_json(spec))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"{spec}: bad map payload ({exc})") from exc
    if spec.startswith("dephasing:"):
        return applications.dephasing(float(spec.split(":", 1)[1]))
    return maps.choi_of(spec, d)


def _moment_report(rho, k, mode, shots, seed):
    table = joint_probs(rho, k)
    out = {"k": k, "probabilities": table.to_dict()}
    if mode == "exact":
        out["moment"] = moment_from_probs(table)
        out["direct"] = moment_direct(rho, k)
        out["residual"] = abs(out["moment"] - out["direct"])
    else:
        child = split_seed(seed, k)
        rec = sample_shots(table, shots, child)
        est = estimate_from_counts(rec)
        out.update(moment=est.moment, std_error=est.std_error, counts=rec.to_dict())
    return out


def cmd_moments(args):
    rho = load_state(args)
    ks = [args.k] if args.k is not None else list(range(2, args.k_max + 1))
    return {"state": rho.to_dict(),
            "moments": [_moment_report(rho, k, args.mode, args.shots, args.seed) for k in ks]}


def _via(args, k_max):
    if args.mode == "exact":
        return "exact"
    return spectrum.Interferometric(k_max, args.shots, args.seed)


def _parse_moments(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise ValidationError(f"bad --moments list: {exc}") from exc


def cmd_spectrum(args):
    if args.moments is not None:
        if args.state is not None or args.gen is not None:
            raise ValidationError("--moments replaces --state/--gen")
        est = spectrum.spectrum_from_moments(_parse_moments(args.moments), strict=True)
        return {"spectrum": est.to_dict(), "entropy": spectrum.entropy(est.eigenvalues)}
    rho = load_state(args)
    k_max = args.k_max if args.k_max is not None else rho.dim
    if k_max < rho.dim:
        raise ValidationError(f"--k-max {k_max} is below the dimension {rho.dim}")
    out = {"state": rho.to_dict()}
    if args.mode == "exact":
        est = spectrum.spectrum_from_state(rho, "exact")
    else:
        mv, meas = spectrum.sampled_moments(rho, k_max, args.shots, args.seed)
        est = spectrum.spectrum_from_moments(mv, strict=False, measurements=meas)
        out["moments"] = [{"k": k, "moment": float(v), "std_error": float(s)}
                          for k, v, s in zip(range(1, mv.n + 1), mv.values, mv.std_errors)]
    out["spectrum"] = est.to_dict()
    out["purity"] = float(np.sum(est.eigenvalues ** 2))
    out["entropy"] = spectrum.entropy(est.eigenvalues)
    return out


def cmd_detect(args):
    rho = load_state(args)
    lam_map = load_map(args.map, args.dim or rho.dims[0])
    k_max = args.k_max if args.k_max is not None else rho.dim
    verdict = applications.detect_entanglement(rho, lam_map, _via(args, k_max))
    return {"state": rho.to_dict(), "verdict": verdict.to_dict()}


def cmd_negativity(args):
    rho = load_state(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        neg = applications.negativity(rho, warn=True)
    pt = partial_transpose(rho, 1)
    return {"state": rho.to_dict(), "negativity": neg,
            "partial_transpose_eigenvalues": applications.linalg.eigvalsh(pt).tolist(),
            "maximally_mixed_marginal": not caught,
            "warnings": [str(w.message) for w in caught]}


def cmd_spa_params(args):
    m = load_map(args.map, args.dim)
    if args.locc:
        dec = maps.locc_spa(m)
        slack = dec.feasibility()
        return {"d": dec.d, "lambda": dec.lam, "alpha": dec.alpha, "beta": dec.beta,
                "weights": [t.probability for t in dec.terms],
                "feasibility_slack": list(slack),
                "threshold": applications.detection_threshold(dec.lam, dec.d)}
    res = maps.spa(m)
    return {"d": m.d_in, "lambda": res.lam, "alpha": res.alpha,
            "min_choi_eig": maps.min_choi_eig(m),
            "spa_min_choi_eig": float(res.map.choi_eigenvalues()[-1])}


def cmd_locc_decompose(args):
    dec = maps.locc_spa(load_map(args.map, args.dim))
    return {"decomposition": dec.to_dict(), "feasibility_slack": list(dec.feasibility())}


def cmd_channel(args):
    ch = load_map(args.map, args.dim)
    report = applications.capacity_indicator(ch, single_qubit=ch.d_in == 2)
    return {"channel": ch.to_dict(), "report": report.to_dict(),
            "jam_eigenvalues": report.jam_state.eigenvalues().tolist()}


def cmd_simulate(args):
    rho = load_state(args)
    shots = None if args.mode == "exact" else args.shots
    ends = transport.line_protocol() if args.transport == "line" else transport.in_memory()
    tr = protocol.run_protocol(rho, args.k, shots, args.seed, ends, args.exchange, args.schedule)
    if args.transcript:
        tr.export(args.transcript)
    out = {"state": rho.to_dict(), "estimates": tr.estimates.to_dict(),
           "alice_counts": tr.alice_counts, "bob_counts": tr.bob_counts,
           "messages": len(tr.messages)}
    if tr.joint_counts is not None:
        out["joint_counts"] = tr.joint_counts.to_dict()
    if tr.probabilities is not None:
        out["probabilities"] = tr.probabilities
    return out


COMMANDS = {
    "moments": cmd_moments, "spectrum": cmd_spectrum, "detect": cmd_detect,
    "negativity": cmd_negativity, "spa-params": cmd_spa_params,
    "locc-decompose": cmd_locc_decompose, "channel": cmd_channel, "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loccest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"loccest {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def state_opts(p):
        p.add_argument("--state", help="density matrix JSON file {dims, re, im}")
        p.add_argument("--gen", help="werner:p | singlet | maxmixed:d | random:d:seed")

    def sampling_opts(p, default_mode="exact"):
        p.add_argument("--mode", choices=("exact", "sampled"), default=default_mode)
        p.add_argument("--shots", type=int, default=10 ** 5, help="shots per moment")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    def map_opts(p, required=True):
        p.add_argument("--map", required=required,
                       help="transposition | depolarizing | identity | negation | dephasing:c | file.json")
        p.add_argument("--dim", type=int, help="dimension for named maps")

    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--output", help="report path (default: stdout)")
        if name in ("moments", "spectrum", "detect", "negativity", "simulate"):
            state_opts(p)
        if name in ("moments", "spectrum", "detect", "simulate"):
            sampling_opts(p, "sampled" if name == "simulate" else "exact")
        if name in ("detect", "spa-params", "locc-decompose", "channel"):
            map_opts(p)
        if name == "moments":
            g = p.add_mutually_exclusive_group()
            g.add_argument("--k", type=int)
            g.add_argument("--k-max", type=int, default=4)
        if name in ("spectrum", "detect"):
            p.add_argument("--k-max", type=int, help="highest moment order (default: dimension)")
        if name == "spectrum":
            p.add_argument("--moments", help="invert given tr rho^k, k = 1..n (comma separated)")
        if name == "spa-params":
            p.add_argument("--locc", action="store_true", help="LOCC-implementable parameters")
        if name == "simulate":
            p.add_argument("--k", type=int, default=2)
            p.add_argument("--transport", choices=("memory", "line"), default="memory")
            p.add_argument("--exchange", choices=("per_shot", "batched"), default="per_shot")
            p.add_argument("--schedule", default="round_robin",
                           help="round_robin | bob_first | random:<seed> | threads")
            p.add_argument("--transcript", help="export the full transcript JSON here")
    return parser


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "output"}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "seed", None) is not None:
            args.seed = check_seed(args.seed)
        if getattr(args, "shots", None) is not None and args.shots < 2:
            raise ValidationError("--shots must be at least 2")
        result = COMMANDS[args.command](args)
        code = EXIT_OK
        report = {"tool": "loccest", "version": __version__, "command": args.command,
                  "config": _config(args), "result": result}
    except InconsistentMomentsError as exc:
        code = EXIT_INCONSISTENT
        report = {"tool": "loccest", "version": __version__, "command": args.command,
                  "config": _config(args), "error": {"type": "inconsistent_moments",
                                                     "message": str(exc)}}
    except (ValidationError, NotPositiveError, ProtocolError, ValueError) as exc:
        code = EXIT_VALIDATION
        report = {"tool": "loccest", "version": __version__, "command": args.command,
                  "config": _config(args), "error": {"type": "validation", "message": str(exc)}}
    text = json.dumps(report, indent=2)
    if args.output and code == EXIT_OK:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    elif code == EXIT_OK:
        print(text)
    else:
        print(text, file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
