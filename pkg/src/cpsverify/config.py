"""JSON experiment configuration and its translation into runnable objects.

Schema (every section is optional; ``target`` is needed by everything except
``msi run``, which builds its own target from the circuit)::

    {
      "target": {"states": "states.txt" | ["T", "0", ...],
                 "circuit": "circuit.txt" | ["H 0", "CNOT 0 1", ...] | null},
      "prover": {"kind": "honest",
                 "depolarizing": 0.1 | [0.0, 0.1, ...],
                 "dephasing": ..., "amplitude_damping": ...,
                 "rotation": [["Z", 0.2, 0], ...],
                 "post_pauli": [["ZI", 0.05], ...]}
              | {"kind": "correlated",
                 "strategies": [{"prob": 0.3, "prover": {...}}, ...]}
              | {"kind": "fixed", "states": ..., "circuit": ..., <noise keys>},
      "cert":   {"epsilon": 0.3, "delta": 0.1, "k": 3,
                 "mode": "exclude_identity", "n_copies": null},
      "verify": {"n_total": null, "n_test": null, "c_noniid": 1.0},
      "sweep":  {"param": "depolarizing", "grid": [0.0, 0.1], "trials": 200},
      "seed": 7,
      "output": {"result": null, "tallies": null, "sweep": null}
    }

Relative paths resolve against the directory holding the config file.  A
``fixed`` prover sends the dense state of its own CPS description (with the
same noise keys); its circuit defaults to the target circuit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Union

from .certify import CertConfig, VerifyConfig, sample_size_iid, sample_size_noniid
from .clifford import CliffordCircuit
from .dense import AmplitudeDamping, Dephasing, Depolarizing, PauliChannel, UnitaryRotation
from .pauli import PauliAxis, parse_observable
from .prover import CorrelatedClassical, FixedAlternative, HonestIid, ProverSpec
from .target import CpsTarget, SamplingMode, SamplingPlan, parse_state_tokens, parse_states

PROVER_KINDS = ("honest", "correlated", "fixed")
NOISE_PARAMS = ("depolarizing", "dephasing", "amplitude_damping")
_NOISE_CHANNELS = {
    "depolarizing": Depolarizing,
    "dephasing": Dephasing,
    "amplitude_damping": AmplitudeDamping,
}

Rate = Union[float, list[float], None]
Source = Union[str, list[str], None]


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def _check_keys(section: str, data: dict[str, Any], allowed: set[str]) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected an object, got {type(data).__name__}")
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"{section}: unknown keys {sorted(unknown)}")


def _resolve(base_dir: Path, name: str) -> Path:
    path = Path(name)
    return path if path.is_absolute() else base_dir / path


def _states_from(source: Source, base_dir: Path, section: str):
    if isinstance(source, str):
        path = _resolve(base_dir, source)
        if not path.is_file():
            raise ConfigError(f"{section}: state file {path} does not exist")
        return parse_states(path.read_text())
    if isinstance(source, list) and source:
        return tuple(parse_state_tokens(str(tok).split()) for tok in source)
    raise ConfigError(f"{section}: 'states' must be a file path or a non-empty list")


def _circuit_from(source: Source, n: int, base_dir: Path, section: str) -> CliffordCircuit:
    if source is None:
        return CliffordCircuit(n)
    if isinstance(source, str):
        path = _resolve(base_dir, source)
        if not path.is_file():
            raise ConfigError(f"{section}: circuit file {path} does not exist")
        return CliffordCircuit.parse(path.read_text(), n=n)
    if isinstance(source, list):
        return CliffordCircuit.parse("\n".join(source), n=n)
    raise ConfigError(f"{section}: 'circuit' must be a file path, a list of gate lines or null")


@dataclass
class TargetConfig:
    states: Source
    circuit: Source = None

    @classmethod
    def from_dict(cls, data: dict[str, Any], section: str = "target") -> TargetConfig:
        _check_keys(section, data, {"states", "circuit"})
        if "states" not in data:
            raise ConfigError(f"{section}: 'states' is required")
        return cls(data["states"], data.get("circuit"))

    def to_dict(self) -> dict[str, Any]:
        return {"states": self.states, "circuit": self.circuit}

    def build(self, base_dir: Path, section: str = "target") -> CpsTarget:
        states = _states_from(self.states, base_dir, section)
        return CpsTarget(states, _circuit_from(self.circuit, len(states), base_dir, section))

    def check_files(self, base_dir: Path, section: str = "target") -> None:
        for key in ("states", "circuit"):
            value = getattr(self, key)
            if isinstance(value, str) and not _resolve(base_dir, value).is_file():
                raise ConfigError(f"{section}: {key} file {_resolve(base_dir, value)} does not exist")


@dataclass
class ProverConfig:
    kind: str = "honest"
    depolarizing: Rate = None
    dephasing: Rate = None
    amplitude_damping: Rate = None
    rotation: list[tuple[str, float, int]] = field(default_factory=list)
    post_pauli: list[tuple[str, float]] = field(default_factory=list)
    strategies: list[tuple[float, ProverConfig]] = field(default_factory=list)
    states: Source = None
    circuit: Source = None

    _NOISE_KEYS = {"depolarizing", "dephasing", "amplitude_damping", "rotation", "post_pauli"}

    @classmethod
    def from_dict(cls, data: dict[str, Any], section: str = "prover") -> ProverConfig:
        if not isinstance(data, dict):
            raise ConfigError(f"{section}: expected an object")
        kind = data.get("kind", "honest")
        if kind not in PROVER_KINDS:
            raise ConfigError(f"{section}: unknown prover kind {kind!r}")
        if kind == "correlated":
            _check_keys(section, data, {"kind", "strategies"})
            raw = data.get("strategies") or []
            if not raw:
                raise ConfigError(f"{section}: correlated prover needs strategies")
            strategies = []
            for idx, entry in enumerate(raw):
                where = f"{section}.strategies[{idx}]"
                _check_keys(where, entry, {"prob", "prover"})
                inner = ProverConfig.from_dict(entry.get("prover", {}), f"{where}.prover")
                if inner.kind == "correlated":
                    raise ConfigError(f"{where}: correlated strategies cannot nest")
                strategies.append((float(entry["prob"]), inner))
            return cls(kind=kind, strategies=strategies)

        allowed = {"kind"} | cls._NOISE_KEYS
        if kind == "fixed":
            allowed |= {"states", "circuit"}
        _check_keys(section, data, allowed)
        if kind == "fixed" and "states" not in data:
            raise ConfigError(f"{section}: fixed prover needs 'states'")
        return cls(
            kind=kind,
            depolarizing=data.get("depolarizing"),
            dephasing=data.get("dephasing"),
            amplitude_damping=data.get("amplitude_damping"),
            rotation=[(str(a), float(t), int(q)) for a, t, q in data.get("rotation", [])],
            post_pauli=[(str(p), float(prob)) for p, prob in data.get("post_pauli", [])],
            states=data.get("states"),
            circuit=data.get("circuit"),
        )

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "correlated":
            return {
                "kind": self.kind,
                "strategies": [{"prob": p, "prover": s.to_dict()} for p, s in self.strategies],
            }
        out: dict[str, Any] = {"kind": self.kind}
        for key in NOISE_PARAMS:
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        if self.rotation:
            out["rotation"] = [list(r) for r in self.rotation]
        if self.post_pauli:
            out["post_pauli"] = [list(p) for p in self.post_pauli]
        if self.kind == "fixed":
            out["states"] = self.states
            out["circuit"] = self.circuit
        return out

    def with_noise(self, param: str, value: float) -> ProverConfig:
        """Copy with ``param`` set to ``value`` on every qubit (and every strategy)."""
        if param not in NOISE_PARAMS:
            raise ConfigError(f"cannot sweep {param!r}; choose one of {NOISE_PARAMS}")
        if self.kind == "correlated":
            return replace(self, strategies=[(p, s.with_noise(param, value)) for p, s in self.strategies])
        return replace(self, **{param: float(value)})

    def _honest(self, target: CpsTarget, section: str) -> HonestIid:
        n = target.n
        channels = []
        for key, channel_cls in _NOISE_CHANNELS.items():
            rates = getattr(self, key)
            if rates is None:
                continue
            if isinstance(rates, (int, float)):
                rates = [float(rates)] * n
            if len(rates) != n:
                raise ConfigError(f"{section}: '{key}' lists {len(rates)} rates for {n} qubits")
            channels.extend(channel_cls(float(r), j) for j, r in enumerate(rates) if r)
        for axis, angle, qubit in self.rotation:
            if not 0 <= qubit < n:
                raise ConfigError(f"{section}: rotation on qubit {qubit} outside the target")
            channels.append(UnitaryRotation(PauliAxis.parse(axis), angle, qubit))
        terms = []
        for text, prob in self.post_pauli:
            p = parse_observable(text)
            if p.n != n:
                raise ConfigError(f"{section}: post-Clifford Pauli {text} has width {p.n}, target has {n}")
            terms.append((p, prob))
        return HonestIid(target, tuple(channels), PauliChannel(tuple(terms)))

    def build(self, target: CpsTarget, base_dir: Path, section: str = "prover") -> ProverSpec:
        if self.kind == "honest":
            return self._honest(target, section)
        if self.kind == "fixed":
            states = _states_from(self.states, base_dir, section)
            if self.circuit is None:
                circuit = target.circuit
            else:
                circuit = _circuit_from(self.circuit, len(states), base_dir, section)
            alternative = CpsTarget(states, circuit)
            if alternative.n != target.n:
                raise ConfigError(f"{section}: fixed state has {alternative.n} qubits, target has {target.n}")
            return FixedAlternative(self._honest(alternative, section).dense_state())
        built = []
        for idx, (p, s) in enumerate(self.strategies):
            built.append((p, s.build(target, base_dir, f"{section}.strategies[{idx}].prover")))
        try:
            return CorrelatedClassical(tuple(built))
        except ValueError as exc:
            raise ConfigError(f"{section}: {exc}") from None


@dataclass
class CertSection:
    epsilon: float = 0.3
    delta: float = 0.1
    k: int = 3
    mode: str = SamplingMode.EXCLUDE_IDENTITY.value
    n_copies: int | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CertSection:
        _check_keys("cert", data, {"epsilon", "delta", "k", "mode", "n_copies"})
        out = cls(**data)
        out.mode = SamplingMode.parse(out.mode).value
        if out.n_copies is not None and out.n_copies < 1:
            raise ConfigError("cert: n_copies must be at least 1")
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "k": self.k,
            "mode": self.mode,
            "n_copies": self.n_copies,
        }

    def build(self, seed: int | None = None, mode: str | None = None) -> CertConfig:
        return CertConfig(self.epsilon, self.delta, self.k, SamplingMode.parse(mode or self.mode), seed)


@dataclass
class VerifySection:
    n_total: int | None = None
    n_test: int | None = None
    c_noniid: float = 1.0

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> VerifySection:
        _check_keys("verify", data, {"n_total", "n_test", "c_noniid"})
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        return {"n_total": self.n_total, "n_test": self.n_test, "c_noniid": self.c_noniid}

    def build(self, plan: SamplingPlan, cert: CertConfig) -> VerifyConfig:
        n_test = self.n_test if self.n_test is not None else sample_size_iid(plan, cert)
        if self.n_total is not None:
            n_total = self.n_total
        else:
            n_total = sample_size_noniid(n_test, plan.n, cert, self.c_noniid)
        return VerifyConfig(cert, n_total, n_test, self.c_noniid)


@dataclass
class SweepSection:
    param: str = "depolarizing"
    grid: list[float] = field(default_factory=lambda: [0.0])
    trials: int = 100

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SweepSection:
        _check_keys("sweep", data, {"param", "grid", "trials"})
        out = cls(**data)
        if out.param not in NOISE_PARAMS:
            raise ConfigError(f"sweep: param must be one of {NOISE_PARAMS}")
        if not out.grid:
            raise ConfigError("sweep: grid must be non-empty")
        if int(out.trials) != out.trials or out.trials < 1:
            raise ConfigError("sweep: trials must be a positive integer")
        out.grid = [float(g) for g in out.grid]
        out.trials = int(out.trials)
        return out

    def to_dict(self) -> dict[str, Any]:
        return {"param": self.param, "grid": list(self.grid), "trials": self.trials}


@dataclass
class OutputSection:
    result: str | None = None
    tallies: str | None = None
    sweep: str | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> OutputSection:
        _check_keys("output", data, {"result", "tallies", "sweep"})
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        return {"result": self.result, "tallies": self.tallies, "sweep": self.sweep}


@dataclass
class ExperimentConfig:
    target: TargetConfig | None = None
    prover: ProverConfig = field(default_factory=ProverConfig)
    cert: CertSection = field(default_factory=CertSection)
    verify: VerifySection = field(default_factory=VerifySection)
    sweep: SweepSection | None = None
    seed: int | None = None
    output: OutputSection = field(default_factory=OutputSection)
    base_dir: Path = field(default=Path("."), compare=False)

    @classmethod
    def from_dict(cls, data: dict[str, Any], base_dir: str | Path = ".") -> ExperimentConfig:
        _check_keys("config", data, {"target", "prover", "cert", "verify", "sweep", "seed", "output"})
        try:
            seed = data.get("seed")
            if seed is not None and (int(seed) != seed or seed < 0):
                raise ConfigError(f"config: seed must be a non-negative integer, got {seed!r}")
            return cls(
                target=TargetConfig.from_dict(data["target"]) if data.get("target") is not None else None,
                prover=ProverConfig.from_dict(data.get("prover", {})),
                cert=CertSection.from_dict(data.get("cert", {})),
                verify=VerifySection.from_dict(data.get("verify", {})),
                sweep=SweepSection.from_dict(data["sweep"]) if data.get("sweep") is not None else None,
                seed=None if seed is None else int(seed),
                output=OutputSection.from_dict(data.get("output", {})),
                base_dir=Path(base_dir),
            )
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"config: {exc}") from None

    def to_dict(self) -> dict[str, Any]:
        return {
            "target": self.target.to_dict() if self.target else None,
            "prover": self.prover.to_dict(),
            "cert": self.cert.to_dict(),
            "verify": self.verify.to_dict(),
            "sweep": self.sweep.to_dict() if self.sweep else None,
            "seed": self.seed,
            "output": self.output.to_dict(),
        }

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
        cfg = cls.from_dict(data, path.parent)
        cfg.check_files()
        return cfg

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def check_files(self) -> None:
        if self.target is not None:
            self.target.check_files(self.base_dir)
        provers = [self.prover] + [s for _, s in self.prover.strategies]
        for p in provers:
            if p.kind == "fixed":
                TargetConfig(p.states, p.circuit).check_files(self.base_dir, "prover")

    def output_path(self, name: str | None) -> Path | None:
        return None if name is None else _resolve(self.base_dir, name)

    # -- builders ----------------------------------------------------------

    def build_target(self) -> CpsTarget:
        if self.target is None:
            raise ConfigError("config: 'target' section is required")
        return self.target.build(self.base_dir)

    def build_prover(self, target: CpsTarget, prover: ProverConfig | None = None) -> ProverSpec:
        return (prover or self.prover).build(target, self.base_dir)

