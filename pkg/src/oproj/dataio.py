"""Dataset ingestion, standardization, and synthetic benchmark generation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, DegenerateFeatureError, SyntheticSpecError
from .linalg import FeatureMatrix, FeatureVector

VALID_ROLES = ("feature", "target", "ignore")
VALID_KINDS = ("numeric", "categorical")


@dataclass(frozen=True)
class ColumnSpec:
    role: str = "feature"
    kind: str = "numeric"

    def __post_init__(self):
        if self.role not in VALID_ROLES:
            raise DataError(f"unknown column role '{self.role}'")
        if self.kind not in VALID_KINDS:
            raise DataError(f"unknown column kind '{self.kind}'")


@dataclass(frozen=True)
class DatasetSchema:
    """Per-column roles and kinds. Columns not listed default to numeric
    features, so an all-numeric CSV needs no schema at all."""

    columns: dict[str, ColumnSpec] = field(default_factory=dict)

    def spec_for(self, name: str) -> ColumnSpec:
        return self.columns.get(name, ColumnSpec())

    def target_column(self) -> str | None:
        targets = [n for n, s in self.columns.items() if s.role == "target"]
        if len(targets) > 1:
            raise DataError(f"schema declares {len(targets)} target columns: {targets}")
        return targets[0] if targets else None

    def categorical_columns(self) -> list[str]:
        return [n for n, s in self.columns.items() if s.kind == "categorical"]

    def with_target(self, name: str) -> "DatasetSchema":
        cols = dict(self.columns)
        kind = cols[name].kind if name in cols else "numeric"
        cols[name] = ColumnSpec(role="target", kind=kind)
        return DatasetSchema(cols)


def parse_schema_file(path: str | Path) -> DatasetSchema:
    """Sidecar format: one ``column=role`` or ``column=role:kind`` per line.
    Blank lines and '#' comments are skipped."""
    cols: dict[str, ColumnSpec] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"schema line {lineno} is not key=value: {line!r}")
        name, _, value = line.partition("=")
        name = name.strip()
        role, _, kind = value.strip().partition(":")
        spec = ColumnSpec(role=role.strip(), kind=kind.strip() or "numeric")
        if name in cols:
            raise DataError(f"schema line {lineno} repeats column '{name}'")
        cols[name] = spec
    return DatasetSchema(cols)


def _parse_numeric(cell: str, *, row: int, column: str) -> float:
    text = cell.strip()
    if not text:
        raise DataError(
            f"missing value at row {row}, column '{column}'", row=row, column=column
        )
    try:
        value = float(text)
    except ValueError:
        raise DataError(
            f"unparseable numeric {text!r} at row {row}, column '{column}'",
            row=row,
            column=column,
        ) from None
    if not np.isfinite(value):
        raise DataError(
            f"non-finite value {text!r} at row {row}, column '{column}'",
            row=row,
            column=column,
        )
    return value


def load_csv(
    path: str | Path, schema: DatasetSchema | None = None
) -> tuple[FeatureMatrix, np.ndarray | None]:
    """Load a UTF-8, comma-delimited, header-mandatory CSV.

    Numeric columns parse as float64. Categorical columns one-hot encode
    into ``<col>=<level>`` indicator columns, levels ordered
    lexicographically. Missing cells and unparseable numerics are hard
    errors naming the row and column; duplicate headers are rejected.
    Returns the feature matrix and the target vector when the schema
    declares a target column.
    """
    schema = schema or DatasetSchema()
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty; a header row is required") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise DataError(f"duplicate header names: {dupes}")
        rows = list(reader)
    if not rows:
        raise DataError(f"{path} has a header but no data rows")

    raw_columns: dict[str, list[str]] = {h: [] for h in header}
    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DataError(
                f"row {r} has {len(row)} cells, expected {len(header)}", row=r
            )
        for h, cell in zip(header, row):
            raw_columns[h].append(cell)

    features: list[FeatureVector] = []
    target: np.ndarray | None = None
    target_name = schema.target_column()
    for h in header:
        spec = schema.spec_for(h)
        if spec.role == "ignore":
            continue
        if spec.role == "target" or h == target_name:
            values = [
                _parse_numeric(c, row=r, column=h)
                for r, c in enumerate(raw_columns[h], start=1)
            ]
            target = np.asarray(values, dtype=np.float64)
            continue
        if spec.kind == "categorical":
            cells = []
            for r, c in enumerate(raw_columns[h], start=1):
                text = c.strip()
                if not text:
                    raise DataError(
                        f"missing value at row {r}, column '{h}'", row=r, column=h
                    )
                cells.append(text)
            for level in sorted(set(cells)):
                indicator = np.asarray(
                    [1.0 if c == level else 0.0 for c in cells], dtype=np.float64
                )
                features.append(FeatureVector(f"{h}={level}", indicator))
        else:
            values = [
                _parse_numeric(c, row=r, column=h)
                for r, c in enumerate(raw_columns[h], start=1)
            ]
            features.append(FeatureVector(h, np.asarray(values, dtype=np.float64)))

    if not features:
        raise DataError(f"{path} contains no feature columns after applying the schema")
    return FeatureMatrix(tuple(features)), target


def save_csv(
    X: FeatureMatrix,
    path: str | Path,
    *,
    target: np.ndarray | None = None,
    target_name: str = "target",
) -> None:
    """Write a matrix (plus optional target column) with full round-trip
    precision, matching what load_csv expects back."""
    path = Path(path)
    names = list(X.names)
    data = X.as_array()
    if target is not None:
        if target.shape[0] != X.n:
            raise DataError(
                f"target length {target.shape[0]} does not match {X.n} rows"
            )
        if target_name in names:
            raise DataError(f"target name '{target_name}' collides with a feature")
        names.append(target_name)
        data = np.column_stack([data, np.asarray(target, dtype=np.float64)])
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(names) + "\n")
        for row in data:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


@dataclass(frozen=True)
class AffineMap:
    """z = (x - offset) / scale, and its inverse for query reconstruction."""

    offset: float
    scale: float

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - self.offset) / self.scale

    def invert(self, z: np.ndarray) -> np.ndarray:
        return z * self.scale + self.offset


def standardize(X: FeatureMatrix) -> tuple[FeatureMatrix, list[AffineMap]]:
    """Z-score every column (population convention, divisor n).

    A second centering pass, folded into the returned affine map, keeps the
    output mean below 1e-12 even for columns with large offsets. Constant
    columns are a DegenerateFeatureError naming the column.
    """
    out_cols: list[FeatureVector] = []
    maps: list[AffineMap] = []
    for c in X.columns:
        v = c.values
        mean = float(np.mean(v))
        sd = float(np.sqrt(np.mean((v - mean) ** 2)))
        if sd == 0.0 or sd < 1e-12 * max(abs(mean), 1.0):
            raise DegenerateFeatureError(
                f"column '{c.name}' is constant (sd={sd:.3e}); it cannot be standardized"
            )
        z = (v - mean) / sd
        resid_mean = float(np.mean(z))
        z = z - resid_mean
        out_cols.append(FeatureVector(c.name, z))
        maps.append(AffineMap(offset=mean + sd * resid_mean, scale=sd))
    return FeatureMatrix(tuple(out_cols)), maps


@dataclass(frozen=True)
class NonlinearTerm:
    """Extra additive contribution to the synthetic target.

    kind "squared" adds coefficient * x^2; kind "log" adds
    coefficient * log(x - min(x) + 1).
    """

    feature: str
    kind: str
    coefficient: float

    def __post_init__(self):
        if self.kind not in ("squared", "log"):
            raise SyntheticSpecError(f"unknown nonlinear kind '{self.kind}'")


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a correlated-Gaussian benchmark with known ground truth."""

    n: int
    coefficients: tuple[float, ...]
    names: tuple[str, ...] = ()
    noise_sd: float = 0.0
    correlation: np.ndarray | None = None
    nonlinear: tuple[NonlinearTerm, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise SyntheticSpecError(f"need n >= 2 samples, got {self.n}")
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise SyntheticSpecError("at least one coefficient is required")
        names = tuple(self.names) or tuple(f"x{j + 1}" for j in range(len(coeffs)))
        if len(names) != len(coeffs):
            raise SyntheticSpecError(
                f"{len(names)} names for {len(coeffs)} coefficients"
            )
        if len(set(names)) != len(names):
            raise SyntheticSpecError("feature names must be unique")
        if self.noise_sd < 0:
            raise SyntheticSpecError("noise_sd must be >= 0")
        corr = self.correlation
        if corr is not None:
            corr = np.asarray(corr, dtype=np.float64)
            k = len(coeffs)
            if corr.shape != (k, k):
                raise SyntheticSpecError(
                    f"correlation matrix shape {corr.shape} does not match k={k}"
                )
            if not np.allclose(corr, corr.T, atol=1e-12):
                raise SyntheticSpecError("correlation matrix must be symmetric")
            corr = corr.copy()
            corr.flags.writeable = False
        for term in self.nonlinear:
            if term.feature not in names:
                raise SyntheticSpecError(
                    f"nonlinear term references unknown feature '{term.feature}'"
                )
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "correlation", corr)
        object.__setattr__(self, "nonlinear", tuple(self.nonlinear))

    @property
    def k(self) -> int:
        return len(self.coefficients)


def generate_synthetic(
    spec: SyntheticSpec,
) -> tuple[FeatureMatrix, np.ndarray, tuple[str, ...] | None]:
    """Draw correlated Gaussian features and a linear(+optional nonlinear)
    target from a seeded generator.

    Features come from the Cholesky factor of the correlation matrix, so a
    non-positive-definite matrix is a SyntheticSpecError. The returned
    importance order is descending |coefficient| (ties by name) and is None
    when nonlinear terms make it unknowable from coefficients alone.
    """
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal((spec.n, spec.k))
    if spec.correlation is not None:
        try:
            chol = np.linalg.cholesky(spec.correlation)
        except np.linalg.LinAlgError:
            raise SyntheticSpecError(
                "correlation matrix is not positive definite (Cholesky failed)"
            ) from None
        data = z @ chol.T
    else:
        data = z
    X = FeatureMatrix.from_arrays(spec.names, data)
    y = data @ np.asarray(spec.coefficients)
    for term in spec.nonlinear:
        col = data[:, spec.names.index(term.feature)]
        if term.kind == "squared":
            y = y + term.coefficient * col**2
        else:
            y = y + term.coefficient * np.log(col - np.min(col) + 1.0)
    if spec.noise_sd > 0:
        y = y + spec.noise_sd * rng.standard_normal(spec.n)

    if spec.nonlinear:
        order = None
    else:
        order = tuple(
            name
            for _, name in sorted(
                zip(spec.coefficients, spec.names), key=lambda t: (-abs(t[0]), t[1])
            )
        )
    return X, y, order


def parse_synthetic_spec(path: str | Path) -> SyntheticSpec:
    """Parse a key=value spec file.

    Keys: n, coefficients (comma list), names (comma list, optional),
    noise_sd, seed, and repeatable ``corr=name1,name2,rho`` and
    ``nonlinear=name,kind,coef`` lines.
    """
    pairs: list[tuple[str, str, int]] = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SyntheticSpecError(f"spec line {lineno} is not key=value: {line!r}")
        key, _, value = line.partition("=")
        pairs.append((key.strip().lower(), value.strip(), lineno))

    scalars: dict[str, str] = {}
    corr_entries: list[tuple[str, str, float]] = []
    nonlinear: list[NonlinearTerm] = []
    for key, value, lineno in pairs:
        if key == "corr":
            parts = [p.strip() for p in value.split(",")]
            if len(parts) != 3:
                raise SyntheticSpecError(
                    f"spec line {lineno}: corr needs name1,name2,rho"
                )
            try:
                rho = float(parts[2])
            except ValueError:
                raise SyntheticSpecError(
                    f"spec line {lineno}: bad correlation {parts[2]!r}"
                ) from None
            corr_entries.append((parts[0], parts[1], rho))
        elif key == "nonlinear":
            parts = [p.strip() for p in value.split(",")]
            if len(parts) != 3:
                raise SyntheticSpecError(
                    f"spec line {lineno}: nonlinear needs name,kind,coef"
                )
            try:
                coef = float(parts[2])
            except ValueError:
                raise SyntheticSpecError(
                    f"spec line {lineno}: bad coefficient {parts[2]!r}"
                ) from None
            nonlinear.append(NonlinearTerm(parts[0], parts[1], coef))
        else:
            if key in scalars:
                raise SyntheticSpecError(f"spec line {lineno} repeats key '{key}'")
            scalars[key] = value

    known = {"n", "coefficients", "names", "noise_sd", "seed"}
    unknown = set(scalars) - known
    if unknown:
        raise SyntheticSpecError(f"unknown spec keys: {sorted(unknown)}")
    if "n" not in scalars or "coefficients" not in scalars:
        raise SyntheticSpecError("spec requires both 'n' and 'coefficients'")
    try:
        n = int(scalars["n"])
        coefficients = tuple(float(c) for c in scalars["coefficients"].split(","))
        noise_sd = float(scalars.get("noise_sd", "0"))
        seed = int(scalars.get("seed", "0"))
    except ValueError as exc:
        raise SyntheticSpecError(f"bad scalar value in spec: {exc}") from None
    names = (
        tuple(s.strip() for s in scalars["names"].split(","))
        if "names" in scalars
        else ()
    )

    correlation = None
    if corr_entries:
        resolved = names or tuple(f"x{j + 1}" for j in range(len(coefficients)))
        correlation = np.eye(len(coefficients))
        for a, b, rho in corr_entries:
            if a not in resolved or b not in resolved:
                raise SyntheticSpecError(f"corr references unknown feature: {a},{b}")
            i, j = resolved.index(a), resolved.index(b)
            if i == j:
                raise SyntheticSpecError(f"corr must name two distinct features: {a}")
            correlation[i, j] = correlation[j, i] = rho

    return SyntheticSpec(
        n=n,
        coefficients=coefficients,
        names=names,
        noise_sd=noise_sd,
        correlation=correlation,
        nonlinear=tuple(nonlinear),
        seed=seed,
    )
