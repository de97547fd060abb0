"""Run manifests: JSON-declared sweep definitions with schema validation and
content hashing for idempotent resume."""

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


class ValidationError(ValueError):
    """Manifest or configuration input rejected before any computation."""


_REQUIRED = {"problem", "constraint_values", "horizons"}
_KNOWN = _REQUIRED | {
    "grid_n",
    "nu",
    "dt",
    "ell",
    "seed",
    "output_dir",
    "save_stride",
    "max_iterations",
    "guess_k_max",
    "objective_stall_tol",
}
_PROBLEMS = ("problem1", "problem2", "problem3")


@dataclass
class RunManifest:
    """One sweep: a problem, constraint magnitudes, and horizon values.

    ``constraint_values`` follow the conventional sweep parameterization:
    the fourth power of the L4 norm for problem1, the squared Hdot^{3/4}
    seminorm for problem2, and the kinetic energy itself for problem3.
    """

    problem: str
    constraint_values: list = field(default_factory=list)
    horizons: list = field(default_factory=list)
    grid_n: int = 32
    nu: float = 0.01
    dt: float = 1e-4
    ell: float = 2.0
    seed: int = 0
    output_dir: str = "sweep"
    save_stride: int = 1
    max_iterations: int = 500
    guess_k_max: float = 4.0
    objective_stall_tol: float = 1e-6

    def __post_init__(self):
        if self.problem not in _PROBLEMS:
            raise ValidationError(f"problem must be one of {_PROBLEMS}, got '{self.problem}'")
        for name in ("constraint_values", "horizons"):
            vals = getattr(self, name)
            if any(v <= 0.0 for v in vals):
                raise ValidationError(f"every value in {name} must be positive")
        if self.grid_n <= 0 or self.grid_n % 2 != 0:
            raise ValidationError("grid_n must be a positive even integer")
        for name in ("nu", "dt", "ell"):
            if getattr(self, name) <= 0.0:
                raise ValidationError(f"{name} must be positive")
        if self.max_iterations < 1 or self.save_stride < 1:
            raise ValidationError("max_iterations and save_stride must be >= 1")

    def sphere_value(self, constraint_value: float) -> float:
        """Convert a sweep-level magnitude to the sphere radius-like value."""
        if self.problem == "problem1":
            return constraint_value**0.25
        if self.problem == "problem2":
            return constraint_value**0.5
        return constraint_value

    @classmethod
    def from_dict(cls, raw: dict) -> "RunManifest":
        unknown = set(raw) - _KNOWN
        if unknown:
            raise ValidationError(f"unknown manifest keys: {sorted(unknown)}")
        missing = _REQUIRED - set(raw)
        if missing:
            raise ValidationError(f"missing manifest keys: {sorted(missing)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ValidationError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "RunManifest":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise ValidationError(f"{path}: manifest must be a JSON object")
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return asdict(self)

    def run_spec(self, constraint_value: float, horizon: float) -> dict:
        """Canonical parameters of one member run, used for content hashing."""
        spec = self.to_dict()
        spec.pop("constraint_values")
        spec.pop("horizons")
        spec.pop("output_dir")
        spec["constraint_value"] = constraint_value
        spec["horizon"] = horizon
        return spec

    def run_hash(self, constraint_value: float, horizon: float) -> str:
        canonical = json.dumps(self.run_spec(constraint_value, horizon), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()
