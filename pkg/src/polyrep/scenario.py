"""Declarative scenarios: parsing, validation, builtins and the runner.

Scenario documents are TOML. Grammar (all keys at top level or in the named
table; ``?`` marks optional entries)::

    name        = "text"                         ?
    analyses    = ["rest_point", ...]            subset of ANALYSES
    target      = [{coords = [x..], weight = w}, ...]
    initial     = [{coords = [x..], weight = w}, ...]      ?
    witnesses   = [[{coords = [x..], weight = w}, ...], ...]  ?

    [space]         lower = [..], upper = [..]
    [kernel]        variant = "...", bound = b ?, [kernel.params] ...
    [integrator]    method, dt, t_end, record_every, renormalize      ?
    [neighborhood]  epsilon, n_samples, mutant_grid, seed             ?
    [basin]         final_tol                                         ?
    [outputs]       trajectory_csv, report                            ?

A ``GridTable`` kernel takes either inline ``points``/``table`` params or
``table_csv``: a path (relative to the scenario file) to a CSV whose first
row lists the n grid coordinates (whitespace-separated within a cell for
multi-dimensional spaces) followed by n rows of n payoffs.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import stability
from .dynamics import IntegratorConfig, integrate, rest_point_residual
from .errors import InvalidEpsilon, InvalidMeasure, ParseError, PolyrepError, StepSizeTooLarge, ValidationError
from .games import PayoffKernel, make_kernel
from .measures import DiscreteMeasure, StrategySpace, match_points
from .stability import NeighborhoodSpec, StabilityReport

ANALYSES = ("rest_point", "uninvadable", "unbeatable", "negdef", "certificate", "basin")
SAMPLER_ANALYSES = {"uninvadable", "unbeatable", "negdef", "basin"}


@dataclass(frozen=True)
class Outputs:
    trajectory_csv: str = "trajectory.csv"
    report: str = "report.json"


@dataclass(eq=True)
class ScenarioConfig:
    space: StrategySpace
    kernel: PayoffKernel
    target: DiscreteMeasure
    analyses: tuple[str, ...] = ("rest_point",)
    name: str = "scenario"
    initial: DiscreteMeasure | None = None
    witnesses: tuple[DiscreteMeasure, ...] = ()
    integrator: IntegratorConfig | None = None
    neighborhood: NeighborhoodSpec | None = None
    basin_final_tol: float = 1e-3
    outputs: Outputs = field(default_factory=Outputs)

    def validate(self) -> None:
        unknown = set(self.analyses) - set(ANALYSES)
        if unknown:
            raise ValidationError("analyses", f"unknown analyses {sorted(unknown)}")
        if self.kernel.space != self.space:
            raise ValidationError("kernel", "kernel space differs from scenario space")
        if not self.target.probability:
            raise ValidationError("target", "target must be a probability measure")
        wanted = set(self.analyses)
        if wanted & {"basin", "certificate"} and self.integrator is None:
            raise ValidationError("integrator", "basin/certificate analyses need an integrator section")
        if wanted & SAMPLER_ANALYSES and self.neighborhood is None:
            raise ValidationError("neighborhood", "sampler-based analyses need a neighborhood section")
        if "certificate" in wanted and self.initial is None and "basin" not in wanted:
            raise ValidationError("initial", "certificate needs an initial state or a basin probe")
        if self.initial is not None and np.any(match_points(self.target.points, self.initial.points) < 0):
            raise ValidationError("initial", "supp(target) must be contained in supp(initial)")
        if self.neighborhood is not None:
            try:
                self.neighborhood.validate(self.target)
            except InvalidEpsilon as exc:
                raise ValidationError("epsilon", str(exc)) from None
        if self.integrator is not None:
            try:
                self.integrator.check(self.kernel)
            except StepSizeTooLarge as exc:
                raise ValidationError("dt", str(exc)) from None
        if not self.basin_final_tol > 0:
            raise ValidationError("final_tol", "basin final_tol must be positive")


def _line_of(exc: Exception) -> int | None:
    m = re.search(r"line (\d+)", str(exc))
    return int(m.group(1)) if m else None


def _get(table: dict, key: str, kind, where: str = ""):
    path = f"{where}.{key}" if where else key
    if key not in table:
        raise ParseError(path)
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise ParseError(path, f"field {path!r} must be {getattr(kind, '__name__', kind)}")
    return value


def _measure(records, space: StrategySpace, where: str) -> DiscreteMeasure:
    if not isinstance(records, list) or not all(isinstance(r, dict) for r in records):
        raise ParseError(where, f"field {where!r} must be a list of {{coords, weight}} records")
    try:
        atoms = [(_get(r, "coords", list, where), _get(r, "weight", float, where)) for r in records]
        return DiscreteMeasure.from_atoms(space, atoms)
    except ParseError:
        raise
    except (InvalidMeasure, ValueError) as exc:
        raise ValidationError(where, str(exc)) from None


def _read_table_csv(path: Path, dimension: int) -> dict:
    try:
        with path.open(newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise ParseError("kernel.params.table_csv", f"cannot read {path}: {exc}") from None
    if not rows:
        raise ParseError("kernel.params.table_csv", f"{path} is empty")
    try:
        points = [[float(x) for x in cell.split()] for cell in rows[0]]
        table = [[float(x) for x in row] for row in rows[1:]]
    except ValueError as exc:
        raise ParseError("kernel.params.table_csv", f"{path}: {exc}") from None
    if any(len(p) != dimension for p in points):
        raise ParseError("kernel.params.table_csv", f"{path}: grid coordinates must have dimension {dimension}")
    return {"points": points, "table": table}


def config_from_dict(doc: dict, base_dir: Path | None = None) -> ScenarioConfig:
    space_t = _get(doc, "space", dict)
    try:
        space = StrategySpace(tuple(_get(space_t, "lower", list, "space")), tuple(_get(space_t, "upper", list, "space")))
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ValidationError("space", str(exc)) from None

    kernel_t = _get(doc, "kernel", dict)
    variant = _get(kernel_t, "variant", str, "kernel")
    params = dict(kernel_t.get("params", {}))
    if "table_csv" in params:
        csv_path = Path(params.pop("table_csv"))
        if not csv_path.is_absolute():
            csv_path = (base_dir or Path.cwd()) / csv_path
        params.update(_read_table_csv(csv_path, space.dimension))
    bound = _get(kernel_t, "bound", float, "kernel") if "bound" in kernel_t else None
    try:
        kernel = make_kernel(variant, space, params, bound)
    except (ValueError, TypeError) as exc:
        raise ValidationError("kernel", str(exc)) from None

    target = _measure(_get(doc, "target", list), space, "target")
    initial = _measure(doc["initial"], space, "initial") if "initial" in doc else None
    witnesses = tuple(
        _measure(w, space, f"witnesses[{i}]") for i, w in enumerate(doc.get("witnesses", []))
    )
    analyses = tuple(_get(doc, "analyses", list)) if "analyses" in doc else ("rest_point",)

    integrator = neighborhood = None
    if "integrator" in doc:
        t = _get(doc, "integrator", dict)
        try:
            integrator = IntegratorConfig(
                method=str(t.get("method", "Exponential")),
                dt=_get(t, "dt", float, "integrator"),
                t_end=_get(t, "t_end", float, "integrator"),
                record_every=_get(t, "record_every", int, "integrator") if "record_every" in t else 1,
                renormalize=_get(t, "renormalize", bool, "integrator") if "renormalize" in t else True,
            )
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ValidationError("integrator", str(exc)) from None
    if "neighborhood" in doc:
        t = _get(doc, "neighborhood", dict)
        try:
            neighborhood = NeighborhoodSpec(
                epsilon=_get(t, "epsilon", float, "neighborhood"),
                n_samples=_get(t, "n_samples", int, "neighborhood"),
                mutant_grid=_get(t, "mutant_grid", int, "neighborhood") if "mutant_grid" in t else 4,
                seed=_get(t, "seed", int, "neighborhood") if "seed" in t else 0,
            )
        except InvalidEpsilon as exc:
            raise ValidationError("epsilon", str(exc)) from None
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ValidationError("neighborhood", str(exc)) from None
    out_t = doc.get("outputs", {})
    outputs = Outputs(
        trajectory_csv=str(out_t.get("trajectory_csv", Outputs.trajectory_csv)),
        report=str(out_t.get("report", Outputs.report)),
    )
    final_tol = _get(doc["basin"], "final_tol", float, "basin") if "basin" in doc else 1e-3

    cfg = ScenarioConfig(
        space=space,
        kernel=kernel,
        target=target,
        analyses=analyses,
        name=str(doc.get("name", "scenario")),
        initial=initial,
        witnesses=witnesses,
        integrator=integrator,
        neighborhood=neighborhood,
        basin_final_tol=final_tol,
        outputs=outputs,
    )
    cfg.validate()
    return cfg


def parse_scenario(text: str, base_dir: Path | None = None) -> ScenarioConfig:
    """Parse and validate a scenario document.

    Raises :class:`ParseError` for malformed documents or missing/mistyped
    fields and :class:`ValidationError` for violated cross-field invariants.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError("document", str(exc), line=_line_of(exc)) from None
    return config_from_dict(doc, base_dir)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    doc = {"name": cfg.name, "analyses": list(cfg.analyses), "target": cfg.target.to_records()}
    if cfg.initial is not None:
        doc["initial"] = cfg.initial.to_records()
    if cfg.witnesses:
        doc["witnesses"] = [w.to_records() for w in cfg.witnesses]
    doc["space"] = {"lower": list(cfg.space.lower), "upper": list(cfg.space.upper)}
    doc["kernel"] = cfg.kernel.spec()
    if cfg.integrator is not None:
        doc["integrator"] = dataclasses.asdict(cfg.integrator)
    if cfg.neighborhood is not None:
        doc["neighborhood"] = dataclasses.asdict(cfg.neighborhood)
    doc["basin"] = {"final_tol": cfg.basin_final_tol}
    doc["outputs"] = dataclasses.asdict(cfg.outputs)
    return doc


def serialize_scenario(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def load_scenario(source: str) -> ScenarioConfig:
    """Load ``builtin:<name>`` or a scenario file path."""
    if source.startswith("builtin:"):
        return parse_scenario(builtin_text(source.split(":", 1)[1]))
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError("document", f"cannot read {path}: {exc}") from None
    return parse_scenario(text, base_dir=path.parent)


@dataclass
class RunResult:
    status: int
    report: dict
    report_path: Path
    trajectory_path: Path | None = None
    legend_path: Path | None = None


def run_scenario(cfg: ScenarioConfig, out_dir=".", seed: int | None = None) -> RunResult:
    """Run the requested analyses in a fixed order and write the artifacts.

    Order: rest point, sampler-based tests, simulation, certificate, basin.
    Status is 0 if every verdict passes, 1 if any fails and 2 if an analysis
    or output step raised.
    """
    if seed is not None and cfg.neighborhood is not None:
        cfg = dataclasses.replace(cfg, neighborhood=dataclasses.replace(cfg.neighborhood, seed=seed))
    out_dir = Path(out_dir)
    k, pstar, wanted = cfg.kernel, cfg.target, set(cfg.analyses)
    rep = StabilityReport()
    trajectory = None

    def attempt(label, fn):
        try:
            return fn()
        except (PolyrepError, ValueError, ArithmeticError) as exc:
            rep.errors.append(f"{label}: {type(exc).__name__}: {exc}")
            return None

    if "rest_point" in wanted:
        rep.rest_residual = attempt("rest_point", lambda: rest_point_residual(k, pstar))

    samples = None
    if wanted & SAMPLER_ANALYSES:
        samples = attempt("sampling", lambda: stability.sample_neighborhood(pstar, cfg.neighborhood, kernel=k))
    if samples is not None:
        spec, ws = cfg.neighborhood, cfg.witnesses
        if "uninvadable" in wanted:
            rep.uninvadable = attempt(
                "uninvadable", lambda: stability.test_strong_uninvadability(k, pstar, spec, ws, samples)
            )
        if "unbeatable" in wanted:
            rep.unbeatable = attempt(
                "unbeatable", lambda: stability.test_strong_unbeatability(k, pstar, spec, ws, samples)
            )
        if "negdef" in wanted:
            rep.negdef = attempt("negdef", lambda: stability.estimate_negdef_constant(k, pstar, spec, ws, samples))

    if cfg.initial is not None and cfg.integrator is not None:
        trajectory = attempt("simulation", lambda: integrate(k, cfg.initial, cfg.integrator, target=pstar))

    if "certificate" in wanted and trajectory is not None:
        rep.certificate = attempt(
            "certificate", lambda: stability.verify_lyapunov_certificate(k, pstar, [trajectory])
        )

    if "basin" in wanted and samples is not None:
        rep.basin = attempt(
            "basin",
            lambda: stability.basin_probe(k, pstar, cfg.neighborhood, cfg.integrator, cfg.basin_final_tol, samples),
        )
        if rep.basin is not None and rep.basin.trajectories:
            rep.basin_certificate = attempt(
                "basin_certificate",
                lambda: stability.verify_lyapunov_certificate(k, pstar, rep.basin.trajectories),
            )

    report_path = out_dir / cfg.outputs.report
    trajectory_path = legend_path = None
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if trajectory is not None:
            trajectory_path = out_dir / cfg.outputs.trajectory_csv
            legend_path = trajectory.write_csv(trajectory_path)
    except OSError as exc:
        rep.errors.append(f"output: cannot write {exc.filename}: {exc.strerror}")

    verdicts = rep.verdicts()
    status = 2 if rep.errors else (0 if all(verdicts.values()) else 1)
    report = {
        "scenario": cfg.name,
        "status": status,
        "config": config_to_dict(cfg),
        "results": rep.to_dict(),
        "outputs": {
            "trajectory_csv": trajectory_path.name if trajectory_path else None,
            "legend": legend_path.name if legend_path else None,
        },
    }
    try:
        report_path.write_text(json.dumps(report, indent=2) + "\n")
    except OSError as exc:
        report["status"] = status = 2
        rep.errors.append(f"output: cannot write {report_path}: {exc.strerror}")
    return RunResult(status, report, report_path, trajectory_path, legend_path)


_HALF_HALF = """target = [{coords = [-1.0], weight = 0.5}, {coords = [1.0], weight = 0.5}]"""

BUILTINS = {
    "example1": """
name = "example1"
analyses = ["rest_point"]
target = [
    {coords = [0.0], weight = 0.3333333333333333},
    {coords = [0.5], weight = 0.3333333333333333},
    {coords = [1.0], weight = 0.3333333333333333},
]

[space]
lower = [0.0]
upper = [1.0]

[kernel]
variant = "HarvestPiecewise"
bound = 1.0
""",
    "example2": f"""
name = "example2"
analyses = ["rest_point", "negdef"]
{_HALF_HALF}
witnesses = [[{{coords = [-0.5], weight = 0.5}}, {{coords = [0.5], weight = 0.5}}]]

[space]
lower = [-1.0]
upper = [1.0]

[kernel]
variant = "Linear2mzw"
bound = 3.0

[neighborhood]
epsilon = 0.2
n_samples = 50
mutant_grid = 4
seed = 1
""",
    "example2_basin": f"""
name = "example2_basin"
analyses = ["rest_point", "unbeatable", "certificate", "basin"]
{_HALF_HALF}
initial = [{{coords = [-1.0], weight = 0.6}}, {{coords = [1.0], weight = 0.4}}]

[space]
lower = [-1.0]
upper = [1.0]

[kernel]
variant = "Linear2mzw"
bound = 3.0

[integrator]
method = "Exponential"
dt = 0.01
t_end = 15.0
record_every = 10

[neighborhood]
epsilon = 0.2
n_samples = 50
mutant_grid = 4
seed = 2

[basin]
final_tol = 0.001
""",
    "coordination_zw": f"""
name = "coordination_zw"
analyses = ["rest_point", "unbeatable", "certificate"]
{_HALF_HALF}
initial = [{{coords = [-1.0], weight = 0.45}}, {{coords = [1.0], weight = 0.55}}]
witnesses = [[{{coords = [-1.0], weight = 0.45}}, {{coords = [1.0], weight = 0.55}}]]

[space]
lower = [-1.0]
upper = [1.0]

[kernel]
variant = "AffineQuadratic"
bound = 1.0

[kernel.params]
a = 0.0
b = 0.0
c = 0.0
d = 1.0

[integrator]
method = "Exponential"
dt = 0.01
t_end = 15.0
record_every = 10

[neighborhood]
epsilon = 0.2
n_samples = 50
mutant_grid = 4
seed = 3
""",
    "negdef_mzw": f"""
name = "negdef_mzw"
analyses = ["rest_point", "uninvadable", "negdef"]
{_HALF_HALF}
witnesses = [[{{coords = [-1.0], weight = 0.45}}, {{coords = [1.0], weight = 0.55}}]]

[space]
lower = [-1.0]
upper = [1.0]

[kernel]
variant = "AffineQuadratic"
bound = 1.0

[kernel.params]
a = 0.0
b = 0.0
c = 0.0
d = -1.0

[neighborhood]
epsilon = 0.2
n_samples = 50
mutant_grid = 4
seed = 4
""",
}


def builtin_text(name: str) -> str:
    try:
        return BUILTINS[name].lstrip()
    except KeyError:
        raise ParseError("builtin", f"unknown builtin {name!r}; available: {', '.join(BUILTINS)}") from None
