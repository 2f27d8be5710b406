"""Study configuration read from TOML.

Recognized layout (every key optional except ``models``)::

    seed = 2024
    n_blocks = 100
    sites = 10
    side = 10.0
    replicates = 3
    estimators = ["aabc", "mcle"]

    [[models]]
    label = "C"
    family = "whittle-matern"
    c2 = 1.0
    nu = 3.0

    [abc]
    iterations = 20000
    stage2_iterations = 20000
    percentile = 0.005
    clusters = 50
    prior = "c2=0:10,nu=0:10"
    truncation_bound = 4.0

    [mcle]
    grid = 7
    starts = 3

Unknown keys are rejected.
"""
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..corrfuncs import CorrelationModel, Family
from ..errors import ParameterDomainError, ParseError, SchemaError

ESTIMATORS = ("madogram", "pairwise", "triplet", "aabc", "mcle")

# Benchmark models ordered from short (A) to long (F) range dependence.
REFERENCE_MODELS = {
    "A": (0.5, 1.0), "B": (1.0, 1.0), "C": (1.0, 3.0),
    "D": (3.0, 1.0), "E": (3.0, 3.0), "F": (5.0, 3.0),
}


@dataclass(frozen=True)
class ModelSpec:
    label: str
    family: Family
    c2: float
    nu: float

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        self.model  # validates the parameters

    @property
    def model(self):
        return CorrelationModel(self.family, self.c2, self.nu)

    @classmethod
    def reference(cls, label):
        c2, nu = REFERENCE_MODELS[label]
        return cls(label, Family.WHITTLE_MATERN, c2, nu)


@dataclass(frozen=True)
class AbcSettings:
    iterations: int = 20_000
    stage2_iterations: int = 20_000
    percentile: float = 0.005
    clusters: int = 50
    prior: str = "c2=0:10,nu=0:10"
    truncation_bound: float = 4.0


@dataclass(frozen=True)
class McleSettings:
    grid: int = 7
    starts: int = 3


@dataclass(frozen=True)
class StudyConfig:
    models: tuple
    seed: int = 2024
    n_blocks: int = 100
    sites: int = 10
    side: float = 10.0
    replicates: int = 3
    estimators: tuple = ("aabc", "mcle")
    abc: AbcSettings = field(default_factory=AbcSettings)
    mcle: McleSettings = field(default_factory=McleSettings)

    def __post_init__(self):
        if not self.models:
            raise SchemaError("a study needs at least one model")
        labels = [m.label for m in self.models]
        if len(set(labels)) != len(labels):
            raise SchemaError("model labels must be unique")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise SchemaError(f"unknown estimator(s): {', '.join(sorted(unknown))}")
        if self.sites < 3 or self.n_blocks < 1 or self.replicates < 1:
            raise ParameterDomainError("sites >= 3, n_blocks >= 1 and replicates >= 1 are required")
        if not self.side > 0:
            raise ParameterDomainError("side must be positive")

    def with_overrides(self, **kw):
        return replace(self, **kw)


def _take(table, cls, where):
    allowed = {f.name for f in fields(cls)}
    unknown = set(table) - allowed
    if unknown:
        raise SchemaError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")
    return table


def config_from_dict(data):
    data = dict(data)
    _take(data, StudyConfig, "top level")
    models = []
    for i, m in enumerate(data.pop("models", [])):
        _take(m, ModelSpec, f"models[{i}]")
        try:
            models.append(ModelSpec(m.get("label", f"M{i + 1}"), m.get("family", "whittle-matern"),
                                    float(m["c2"]), float(m["nu"])))
        except KeyError as exc:
            raise SchemaError(f"models[{i}] is missing {exc.args[0]}") from None
    abc = AbcSettings(**_take(data.pop("abc", {}), AbcSettings, "[abc]"))
    mcle = McleSettings(**_take(data.pop("mcle", {}), McleSettings, "[mcle]"))
    if "estimators" in data:
        data["estimators"] = tuple(data["estimators"])
    return StudyConfig(models=tuple(models), abc=abc, mcle=mcle, **data)


def load_config(path):
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return config_from_dict(data)
