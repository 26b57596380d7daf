import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

from .errors import ConfigError

l = logging.getLogger(__name__)

#
# Numerical slack
#

DEFAULT_RESIDUAL_ABS = 1e-9
DEFAULT_RESIDUAL_REL = 1e-9
DEFAULT_IDENTITY = 1e-12
DEFAULT_FEASIBILITY = 1e-10
DEFAULT_ENVELOPE = 1e-8
DEFAULT_REPLAY = 1e-8
DEFAULT_STEP_REL = 1e-9


class Tolerances:
    """
    The single record of numerical slack used by certificates and invariant checks. The
    inequalities being checked are exact, so these only absorb floating-point error.

    :ivar residual_abs:     Absolute slack on relation residuals and bound-minus-gap.
    :ivar residual_rel:     Slack relative to the magnitude of min psi_k (and the relation's left side).
    :ivar identity:         Slack on algebraic identities (Bregman three-point, averaging, S_k).
    :ivar feasibility:      Allowed constraint residual of recorded points.
    :ivar envelope:         Slack on closed-form rate envelopes and boundedness balls.
    :ivar replay:           Slack when a trace is replayed and compared with its own records.
    :ivar step_rel:         Relative slack on step conditions that hold with equality.
    """

    __slots__ = (
        "residual_abs",
        "residual_rel",
        "identity",
        "feasibility",
        "envelope",
        "replay",
        "step_rel",
    )

    def __init__(
            self,
            residual_abs=DEFAULT_RESIDUAL_ABS,
            residual_rel=DEFAULT_RESIDUAL_REL,
            identity=DEFAULT_IDENTITY,
            feasibility=DEFAULT_FEASIBILITY,
            envelope=DEFAULT_ENVELOPE,
            replay=DEFAULT_REPLAY,
            step_rel=DEFAULT_STEP_REL,
    ):
        self.residual_abs = float(residual_abs)
        self.residual_rel = float(residual_rel)
        self.identity = float(identity)
        self.feasibility = float(feasibility)
        self.envelope = float(envelope)
        self.replay = float(replay)
        self.step_rel = float(step_rel)
        for name in self.__slots__:
            if not getattr(self, name) >= 0:
                raise ConfigError(f"tolerance {name} must be nonnegative, got {getattr(self, name)!r}")

    def __repr__(self):
        fields = ", ".join(f"{name}={getattr(self, name)!r}" for name in self.__slots__)
        return f"<Tolerances {fields}>"

    def __eq__(self, other):
        return isinstance(other, Tolerances) and all(
            getattr(self, name) == getattr(other, name) for name in self.__slots__
        )

    def copy(self, **overrides) -> "Tolerances":
        values = {name: getattr(self, name) for name in self.__slots__}
        values.update(overrides)
        return Tolerances(**values)

    def relation_slack(self, *magnitudes) -> float:
        scale = max([abs(m) for m in magnitudes] + [0.0])
        return self.residual_abs + self.residual_rel * scale

    def to_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in self.__slots__}

    @classmethod
    def from_dict(cls, data: Optional[Dict], base: Optional["Tolerances"] = None) -> "Tolerances":
        base = base or DEFAULT_TOLERANCES
        if not data:
            return base.copy()

        unknown = set(data) - set(cls.__slots__)
        if unknown:
            raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")

        return base.copy(**data)


DEFAULT_TOLERANCES = Tolerances()


#
# Experiment configuration
#

class ExperimentConfig:
    """
    A parsed experiment file. The nested objects stay as plain JSON dicts here and are turned
    into problems, setups and run configs by their own modules' ``from_dict`` constructors.

    :ivar problem:      Problem spec: generator form {"variant", "dim", "seed", ...} or explicit data.
    :ivar setup:        ProxSetup JSON object.
    :ivar runs:         One dict per run: {"preset" or "method", "schedule", "mix", "max_iters", ...}.
    :ivar optimum:      Optional overrides for the optimum, e.g. {"d_star_upper": D}.
    :ivar output_dir:   Where artifacts go; None means the CLI's --out flag or the cwd.
    :ivar tolerances:   The merged Tolerances record.
    """

    __slots__ = ("problem", "setup", "runs", "optimum", "output_dir", "tolerances", "path")

    def __init__(self, problem: Dict, setup: Dict, runs: List[Dict], optimum=None, output_dir=None,
                 tolerances: Optional[Tolerances] = None, path=None):
        self.problem = problem
        self.setup = setup
        self.runs = runs
        self.optimum = optimum or {}
        self.output_dir = output_dir
        self.tolerances = tolerances or DEFAULT_TOLERANCES
        self.path = path

    def __repr__(self):
        return f"<ExperimentConfig {self.problem.get('variant')!r} with {len(self.runs)} runs>"

    @classmethod
    def from_dict(cls, data: Dict, path=None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("experiment config must be a JSON object")

        for key in ("problem", "setup", "runs"):
            if key not in data:
                raise ConfigError(f"experiment config is missing '{key}'")

        problem, setup, runs = data["problem"], data["setup"], data["runs"]
        if not isinstance(problem, dict) or "variant" not in problem:
            raise ConfigError("'problem' must be an object with a 'variant'")
        if not isinstance(setup, dict) or "dim" not in setup:
            raise ConfigError("'setup' must be an object with a 'dim'")
        if not isinstance(runs, list) or not runs:
            raise ConfigError("'runs' must be a nonempty list")

        for i, run in enumerate(runs):
            if not isinstance(run, dict) or not ("preset" in run or "method" in run):
                raise ConfigError(f"run #{i} needs a 'preset' or a 'method'")

        problem_dim = problem.get("dim")
        if problem_dim is not None and int(problem_dim) != int(setup["dim"]):
            raise ConfigError(f"problem dim {problem_dim} does not match setup dim {setup['dim']}")

        output = data.get("output") or {}
        return cls(
            problem,
            setup,
            runs,
            optimum=data.get("optimum"),
            output_dir=output.get("dir"),
            tolerances=Tolerances.from_dict(data.get("tolerances")),
            path=path,
        )


def load_experiment_config(path: Union[Path, str]) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fp:
            data = json.load(fp)
    except (OSError, json.JSONDecodeError) as ex:
        raise ConfigError(f"could not read experiment config {path}: {ex}") from ex

    config = ExperimentConfig.from_dict(data, path=path)
    l.debug("loaded %r from %s", config, path)
    return config
