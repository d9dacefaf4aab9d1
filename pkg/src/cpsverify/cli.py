"""Command-line entry point.

Exit codes: 0 on success or accept, 2 on reject or abort, 1 on any error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import dense
from .certify import (
    CertConfig,
    certify_iid,
    sample_size_iid,
    sample_size_noniid,
    verify_noniid,
)
from .clifford import CircuitError, CliffordCircuit, conjugate
from .config import ConfigError, ExperimentConfig
from .msi import UniversalCircuit, compile_msi, ideal_distribution, run_msi, verify_and_run
from .pauli import PauliAxis, PauliError, embed_single
from .prover import HonestIid, SessionError, open_session
from .seeds import derive_rng, resolve_seed
from .selftest import run_selftest
from .sweep import run_sweep, sweep_csv
from .target import CpsTarget, SamplingMode, TargetError, build_plan, chi, parse_state_tokens

EXIT_OK, EXIT_ERROR, EXIT_REJECT = 0, 1, 2
# kept-copy fidelity needs a dense density matrix; past this width it is skipped
REPORT_MAX_QUBITS = 8


class CliError(Exception):
    pass


def _emit(text: str, out: Path | None) -> None:
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text if text.endswith("\n") else text + "\n")
    print(text.rstrip("\n"))


def _dump(data: dict[str, Any]) -> str:
    return json.dumps(data, indent=2)


def _config_path(args) -> Path:
    path = args.config_pos or args.config
    if path is None:
        raise CliError("a config file is required (positional or --config)")
    return Path(path)


def _load_config(args) -> ExperimentConfig:
    return ExperimentConfig.load(_config_path(args))


def _out_path(args, cfg: ExperimentConfig | None = None, key: str = "result") -> Path | None:
    if args.out:
        return Path(args.out)
    if cfg is not None:
        return cfg.output_path(getattr(cfg.output, key))
    return None


# -- subcommands -------------------------------------------------------------


def cmd_chi(args) -> int:
    table = chi(parse_state_tokens(args.state))
    lines = [f"chi({axis.name})={table.chi[axis]:.6f}" for axis in PauliAxis]
    lines.append(f"w={table.w:.6f}")
    _emit("\n".join(lines), _out_path(args))
    return EXIT_OK


def _target_for_backprop(path: Path) -> CliffordCircuit:
    if path.suffix == ".json":
        return ExperimentConfig.load(path).build_target().circuit
    if not path.is_file():
        raise CliError(f"circuit file {path} does not exist")
    return CliffordCircuit.load(path)


def cmd_backprop(args) -> int:
    circuit = _target_for_backprop(Path(args.target))
    target = CpsTarget(tuple(parse_state_tokens(["0"]) for _ in range(circuit.n)), circuit)
    if not 0 <= args.qubit < circuit.n:
        raise CliError(f"qubit {args.qubit} outside the {circuit.n}-qubit target")
    observable = conjugate(target.tableau, embed_single(PauliAxis.parse(args.axis), args.qubit, circuit.n))
    _emit(str(observable), _out_path(args))
    return EXIT_OK


def cmd_sample_size(args) -> int:
    if args.config_pos or args.config:
        cfg = _load_config(args)
        target = cfg.build_target()
        cert_section = cfg.cert
        c_noniid = cfg.verify.c_noniid
    else:
        if args.magic:
            tokens = ["T"] * args.magic
        elif args.states:
            tokens = args.states.split(",")
        else:
            raise CliError("give a config, --states or --magic")
        target = CpsTarget.product([parse_state_tokens(t.split()) for t in tokens])
        cert_section = None
        c_noniid = 1.0
    eps = args.epsilon if args.epsilon is not None else (cert_section.epsilon if cert_section else 0.3)
    delta = args.delta if args.delta is not None else (cert_section.delta if cert_section else 0.1)
    k = args.k if args.k is not None else (cert_section.k if cert_section else 3)
    mode = args.mode or (cert_section.mode if cert_section else SamplingMode.EXCLUDE_IDENTITY)
    if args.c_noniid is not None:
        c_noniid = args.c_noniid
    cert = CertConfig(eps, delta, k, mode)
    plan = build_plan(target, cert.mode)
    n_iid = sample_size_iid(plan, cert)
    n_noniid = sample_size_noniid(n_iid, target.n, cert, c_noniid)
    report = {
        "n": target.n,
        "mode": cert.mode.value,
        "m": plan.m,
        "m_eff": plan.m_eff,
        "epsilon": eps,
        "delta": delta,
        "k": k,
        "c_noniid": c_noniid,
        "N_iid": n_iid,
        "N_noniid": n_noniid,
    }
    _emit(f"N_iid={n_iid}\nN_noniid={n_noniid}", None)
    if args.out:
        Path(args.out).write_text(_dump(report) + "\n")
    return EXIT_OK


def _setup(args):
    cfg = _load_config(args)
    seed = resolve_seed(args.seed, cfg.seed)
    target = cfg.build_target()
    cert = cfg.cert.build(seed, args.mode)
    plan = build_plan(target, cert.mode)
    prover = cfg.build_prover(target)
    return cfg, seed, target, cert, plan, prover


def cmd_certify(args) -> int:
    cfg, seed, target, cert, plan, prover = _setup(args)
    n_copies = cfg.cert.n_copies or sample_size_iid(plan, cert)
    rng = derive_rng(seed, "certify")
    session = open_session(prover, n_copies, rng)
    result = certify_iid(target, plan, session, cert, rng, n_copies=n_copies)
    _emit(_dump(result.to_json()), _out_path(args, cfg))
    tallies = cfg.output_path(cfg.output.tallies)
    if tallies is not None:
        tallies.write_text(result.tallies_csv())
    return EXIT_OK if result.accept else EXIT_REJECT


def cmd_verify(args) -> int:
    cfg, seed, target, cert, plan, prover = _setup(args)
    vcfg = cfg.verify.build(plan, cert)
    rng = derive_rng(seed, "verify")
    session = open_session(prover, vcfg.n_total, rng)
    result, kept = verify_noniid(target, plan, session, vcfg, rng)
    report = result.to_json()
    report.update({"N1": vcfg.n_total, "N2": vcfg.n_test, "c_noniid": vcfg.c_noniid})
    if target.n <= REPORT_MAX_QUBITS:
        report["kept_fidelity"] = dense.fidelity(kept.density(), dense.build_cps_dense(target))
    _emit(_dump(report), _out_path(args, cfg))
    tallies = cfg.output_path(cfg.output.tallies)
    if tallies is not None:
        tallies.write_text(result.tallies_csv())
    return EXIT_OK if result.accept else EXIT_REJECT


def _load_universal(path: str) -> UniversalCircuit:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"circuit file {p} does not exist")
    return UniversalCircuit.load(p)


def cmd_msi_compile(args) -> int:
    program = compile_msi(_load_universal(args.circuit))
    _emit(_dump(program.to_json()), _out_path(args))
    return EXIT_OK


def _counts_report(outputs: list[str], circ: UniversalCircuit) -> dict[str, Any]:
    counts: dict[str, int] = {}
    for bits in outputs:
        counts[bits] = counts.get(bits, 0) + 1
    report: dict[str, Any] = {"shots": len(outputs), "counts": dict(sorted(counts.items()))}
    if circ.n <= dense.MAX_QUBITS:
        ideal = ideal_distribution(circ)
        empirical = {k: v / len(outputs) for k, v in counts.items()}
        report["ideal"] = {k: v for k, v in sorted(ideal.items()) if v > 1e-15}
        report["tvd"] = dense.total_variation(empirical, ideal)
    return report


def cmd_msi_run(args) -> int:
    circ = _load_universal(args.circuit)
    program = compile_msi(circ)
    if args.shots < 1:
        raise CliError("--shots must be at least 1")
    if args.config is None:
        seed = resolve_seed(args.seed)
        rng = derive_rng(seed, "msi")
        perfect = HonestIid(program.cps)
        outputs = [run_msi(program, open_session(perfect, 1, rng, adaptive=True)) for _ in range(args.shots)]
        report = {"seed": seed, "certified": False, **_counts_report(outputs, circ)}
        _emit(_dump(report), _out_path(args))
        return EXIT_OK

    cfg = ExperimentConfig.load(args.config)
    seed = resolve_seed(args.seed, cfg.seed)
    cert = cfg.cert.build(seed, args.mode)
    plan = build_plan(program.cps, cert.mode)
    prover = cfg.build_prover(program.cps)
    vcfg = cfg.verify.build(plan, cert)
    run = verify_and_run(program, prover, vcfg, derive_rng(seed, "msi"), shots=args.shots)
    report: dict[str, Any] = {
        "seed": seed,
        "certified": True,
        "accept": run.accept,
        "bound": run.bound,
        "certification": run.certification.to_json(),
    }
    if run.accept:
        report.update(_counts_report(run.outputs, circ))
    _emit(_dump(report), _out_path(args, cfg))
    return EXIT_OK if run.accept else EXIT_REJECT


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    seed = resolve_seed(args.seed, cfg.seed)
    rows = run_sweep(cfg, seed, jobs=args.jobs, mode=args.mode)
    _emit(sweep_csv(rows), _out_path(args, cfg, "sweep"))
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = run_selftest(resolve_seed(args.seed))
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_ERROR


# -- parser ------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (falls back to CPSVERIFY_SEED)")
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--out", help="also write the output to this file")
    common.add_argument("--mode", choices=["exclude", "include"], help="identity handling in the sampling plan")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="cpsverify", description="Certify and use Clifford-enhanced product states.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chi", parents=[common], help="characteristic function of a single-qubit state")
    p.add_argument("state", nargs="+", help="named token (0 1 + - +i -i T), 'bloch rx ry rz' or 'angles theta phi'")
    p.set_defaults(func=cmd_chi)

    p = sub.add_parser("backprop", parents=[common], help="print C P_i C† for a target circuit")
    p.add_argument("target", help="circuit file or experiment config")
    p.add_argument("qubit", type=int)
    p.add_argument("axis", choices=["X", "Y", "Z", "x", "y", "z"])
    p.set_defaults(func=cmd_backprop)

    p = sub.add_parser("sample-size", parents=[common], help="print N_iid and N_noniid")
    p.add_argument("config_pos", nargs="?", metavar="config")
    p.add_argument("--states", help="comma-separated state tokens")
    p.add_argument("--magic", type=int, help="use an all-T|+> target on this many qubits")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--c-noniid", type=float, dest="c_noniid")
    p.set_defaults(func=cmd_sample_size)

    for name, func, text in (
        ("certify", cmd_certify, "one i.i.d. certification run"),
        ("verify", cmd_verify, "one non-i.i.d. verification run"),
        ("sweep", cmd_sweep, "acceptance rate over a noise grid, as CSV"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("config_pos", nargs="?", metavar="config")
        p.set_defaults(func=func)

    msi = sub.add_parser("msi", help="magic-state-injection compilation and execution")
    msi_sub = msi.add_subparsers(dest="msi_command", required=True)
    p = msi_sub.add_parser("compile", parents=[common], help="print the compiled program as JSON")
    p.add_argument("circuit")
    p.set_defaults(func=cmd_msi_compile)
    p = msi_sub.add_parser("run", parents=[common], help="run the compiled program (certified if --config is given)")
    p.add_argument("circuit")
    p.add_argument("--shots", type=int, default=1000)
    p.set_defaults(func=cmd_msi_run)

    p = sub.add_parser("selftest", parents=[common], help="oracle-backed invariant checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.mode is not None:
        args.mode = SamplingMode.parse(args.mode).value
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except (CliError, ConfigError, CircuitError, TargetError, PauliError, SessionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


__all__ = ["main", "build_parser"]
