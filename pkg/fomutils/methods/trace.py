import logging
from typing import Dict, List, Optional

import numpy as np

from ..errors import ConfigError
from ..schedule import SIMPLE_AVERAGES, SMOOTH_KINDS, MixPolicy, Schedule
from ..space import CompositeTerm, ProxSetup

l = logging.getLogger(__name__)

SUBGRAD_A = "subgrad_a"
SUBGRAD_B = "subgrad_b"
CGM = "cgm"
FGM = "fgm"
METHODS = (SUBGRAD_A, SUBGRAD_B, CGM, FGM)
NONSMOOTH_METHODS = (SUBGRAD_A, SUBGRAD_B)
STRUCTURED_METHODS = (CGM, FGM)

# which relation certifies each method
RELATION_OF = {SUBGRAD_A: "R_hat", SUBGRAD_B: "R", CGM: "R_hat_prime", FGM: "R"}

MAX_ITERS = "max_iters"
OPTIMAL_POINT = "optimal_point"
CERTIFIED_GAP = "certified_gap"
TERMINATION_REASONS = (MAX_ITERS, OPTIMAL_POINT, CERTIFIED_GAP)


def _vec(values) -> Optional[np.ndarray]:
    return None if values is None else np.asarray(values, dtype=float)


class RunConfig:
    """
    Everything a driver needs besides the problem and the setup.

    :ivar method:       subgrad_a, subgrad_b, cgm or fgm.
    :ivar schedule:     The Schedule producing (lambda_k, beta_k).
    :ivar mix:          The MixPolicy choosing MD or DA per step.
    :ivar max_iters:    Number of iterations, at least 1.
    :ivar termination:  Optional early exits: {"zero_subgradient": bool, "gap": eps}.
    :ivar seed:         Seed recorded with the run.
    :ivar name:         Preset name or a user label.
    """

    __slots__ = ("method", "schedule", "mix", "max_iters", "termination", "seed", "name")

    def __init__(self, method: str, schedule: Schedule, mix: Optional[MixPolicy] = None, max_iters=100,
                 termination: Optional[Dict] = None, seed=0, name=None):
        if method not in METHODS:
            raise ConfigError(f"unknown method {method!r}")
        if int(max_iters) < 1:
            raise ConfigError(f"max_iters must be at least 1, got {max_iters!r}")

        termination = dict(termination or {})
        unknown = set(termination) - {"zero_subgradient", "gap"}
        if unknown:
            raise ConfigError(f"unknown termination options {sorted(unknown)}")
        if termination.get("gap") is not None and not float(termination["gap"]) > 0:
            raise ConfigError("termination gap must be positive")

        self.method = method
        self.schedule = schedule
        self.mix = mix or MixPolicy()
        self.max_iters = int(max_iters)
        self.termination = termination
        self.seed = int(seed)
        self.name = name or method

    def __repr__(self):
        return f"<RunConfig {self.name}: {self.method} {self.schedule.kind} {self.mix.kind} x{self.max_iters}>"

    def copy(self, **overrides) -> "RunConfig":
        values = {name: getattr(self, name) for name in self.__slots__}
        values.update(overrides)
        return RunConfig(**values)

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "method": self.method,
            "schedule": self.schedule.to_dict(),
            "mix": self.mix.to_dict(),
            "max_iters": self.max_iters,
            "termination": dict(self.termination),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict, sigma=1.0, lipschitz: Optional[float] = None) -> "RunConfig":
        """
        Build a run from its JSON object. A "preset" fills in method, mix and schedule kind; explicit
        keys win where the preset leaves a choice open. Smooth schedules without "L" take
        ``lipschitz`` (normally the problem's declared constant).
        """
        from .presets import preset

        data = dict(data)
        name = data.get("name")
        if "preset" in data:
            fragment = preset(data["preset"])
            name = name or data["preset"]
            method = fragment["method"]
            mix_data = fragment["mix"]
            if data.get("mix") and MixPolicy.from_dict(data["mix"]) != MixPolicy.from_dict(mix_data):
                raise ConfigError(f"preset {data['preset']} fixes the mix policy to {mix_data}")
            schedule_data = dict(data.get("schedule") or {})
            if fragment.get("schedule") and fragment.get("fixed_schedule"):
                if schedule_data.get("kind", fragment["schedule"]) != fragment["schedule"]:
                    raise ConfigError(f"preset {data['preset']} requires the {fragment['schedule']} schedule")
                schedule_data["kind"] = fragment["schedule"]
            elif "kind" not in schedule_data:
                schedule_data["kind"] = fragment["schedule"]
        else:
            method = data["method"]
            mix_data = data.get("mix")
            schedule_data = dict(data.get("schedule") or {})

        if "kind" not in schedule_data:
            raise ConfigError(f"run {name or method} needs a schedule kind")
        schedule = _schedule_with_defaults(schedule_data, sigma, lipschitz)
        return cls(method, schedule, MixPolicy.from_dict(mix_data), max_iters=data.get("max_iters", 100),
                   termination=data.get("termination"), seed=data.get("seed", 0), name=name)


def _schedule_with_defaults(data: Dict, sigma, lipschitz) -> Schedule:
    data = dict(data)
    if data["kind"] in SMOOTH_KINDS and "L" not in data:
        if lipschitz is None:
            raise ConfigError(f"schedule {data['kind']} needs 'L' and the problem declares none")
        data["L"] = lipschitz
    if data["kind"] == SIMPLE_AVERAGES:
        data.setdefault("gamma", 1.0)
    return Schedule.from_dict(data, sigma=sigma)


class IterationRecord:
    """
    Everything measured at iteration k.

    :ivar x_k:              Test point where the oracle was queried.
    :ivar z_k:              Minimizer of psi_k.
    :ivar xhat_k:           Approximate solution.
    :ivar lambda_k:         Weight.
    :ivar beta_k:           Scaling of psi_k.
    :ivar beta_prev:        beta_{k-1}.
    :ivar S_k:              Sum of weights up to k.
    :ivar f_x:              True f(x_k).
    :ivar f_z:              True f(z_k).
    :ivar f_xhat:           True f(xhat_k).
    :ivar f_best:           min_{i <= k} f(x_i).
    :ivar oracle_value:     The oracle's (possibly perturbed) value at x_k.
    :ivar slope:            g_k.
    :ivar grad_dual_norm:   ||g_k||_*.
    :ivar lipschitz:        L(x_k), None for non-smooth problems.
    :ivar delta:            delta(x_k).
    :ivar min_psi:          min psi_k.
    :ivar C_k:              The driver's running error term.
    :ivar model:            "MD" or "DA".
    """

    __slots__ = (
        "k", "x_k", "z_k", "xhat_k", "lambda_k", "beta_k", "beta_prev", "S_k",
        "f_x", "f_z", "f_xhat", "f_best", "oracle_value", "slope", "grad_dual_norm",
        "lipschitz", "delta", "min_psi", "C_k", "model",
    )

    VECTORS = ("x_k", "z_k", "xhat_k", "slope")

    def __init__(self, **fields):
        for name in self.__slots__:
            setattr(self, name, fields.get(name))

    def __repr__(self):
        return f"<IterationRecord k={self.k} f(xhat)={self.f_xhat!r} min_psi={self.min_psi!r}>"

    def copy(self) -> "IterationRecord":
        fields = {name: getattr(self, name) for name in self.__slots__}
        for name in self.VECTORS:
            fields[name] = None if fields[name] is None else np.array(fields[name], dtype=float)
        return IterationRecord(**fields)

    def to_dict(self) -> Dict:
        data = {}
        for name in self.__slots__:
            value = getattr(self, name)
            data[name] = value.tolist() if isinstance(value, np.ndarray) else value
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "IterationRecord":
        fields = dict(data)
        for name in cls.VECTORS:
            fields[name] = _vec(fields.get(name))
        return cls(**fields)


class RunTrace:
    """
    The output of a driver.

    :ivar config:           The RunConfig.
    :ivar problem_id:       Problem identifier.
    :ivar setup:            The ProxSetup (setup_id is derived from it).
    :ivar composite:        The problem's composite term.
    :ivar problem:          JSON spec that rebuilds the problem, when known.
    :ivar beta_init:        beta_{-1}.
    :ivar records:          IterationRecords, contiguous in k from 0.
    :ivar termination:      One of TERMINATION_REASONS.
    :ivar terminal_point:   The optimal test point when the run stopped on a zero subgradient.
    """

    __slots__ = ("config", "problem_id", "setup", "composite", "problem", "beta_init", "records", "termination",
                 "terminal_point")

    def __init__(self, config: RunConfig, problem_id: str, setup: ProxSetup, composite: CompositeTerm, beta_init: float,
                 records: Optional[List[IterationRecord]] = None, termination=MAX_ITERS, terminal_point=None,
                 problem: Optional[Dict] = None):
        self.config = config
        self.problem_id = problem_id
        self.setup = setup
        self.composite = composite
        self.problem = problem
        self.beta_init = float(beta_init)
        self.records = records if records is not None else []
        self.termination = termination
        self.terminal_point = _vec(terminal_point)

    def __repr__(self):
        return f"<RunTrace {self.config.name} on {self.problem_id}/{self.setup_id}: {len(self.records)} records, {self.termination}>"

    def __len__(self):
        return len(self.records)

    @property
    def setup_id(self) -> str:
        return self.setup.ident

    @property
    def method(self) -> str:
        return self.config.method

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def vectors(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def copy(self) -> "RunTrace":
        return RunTrace(self.config, self.problem_id, self.setup, self.composite, self.beta_init,
                        [r.copy() for r in self.records], self.termination,
                        None if self.terminal_point is None else self.terminal_point.copy(), self.problem)

    def to_dict(self) -> Dict:
        return {
            "config": self.config.to_dict(),
            "problem_id": self.problem_id,
            "setup_id": self.setup_id,
            "problem": self.problem,
            "setup": self.setup.to_dict(),
            "composite": self.composite.to_dict(),
            "beta_init": self.beta_init,
            "termination": self.termination,
            "terminal_point": None if self.terminal_point is None else self.terminal_point.tolist(),
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "RunTrace":
        setup = ProxSetup.from_dict(data["setup"])
        config_data = data["config"]
        schedule = Schedule.from_dict(config_data["schedule"], sigma=setup.sigma)
        config = RunConfig(config_data["method"], schedule, MixPolicy.from_dict(config_data["mix"]),
                           max_iters=config_data["max_iters"], termination=config_data.get("termination"),
                           seed=config_data.get("seed", 0), name=config_data.get("name"))
        records = [IterationRecord.from_dict(r) for r in data["records"]]
        return cls(config, data["problem_id"], setup, CompositeTerm.from_dict(data.get("composite")), data["beta_init"],
                   records, data.get("termination", MAX_ITERS), data.get("terminal_point"), data.get("problem"))
