"""Experiment configuration files.

Sectioned ``key = value`` text; lists are comma separated and expressions are
double quoted::

    [domain]
    lower = 0, 0
    upper = pi, pi
    split = 1

    [grid]
    n = 64, 64

    [coefficients]
    a11 = "1 + 0.5*sin(x1)"
    a22 = "1"

    [source]
    f = "sin(x1)^2*sin(x2)"

Coefficient keys are entries ``aIJ`` (1-based). The diagonal entries of the
A22 block are required; other diagonal entries default to 1 and off-diagonal
ones to 0. Numbers may be constant expressions such as ``pi`` or ``2^-3``.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import H_FLOOR_RATIO
from .assembly import SCHEMES
from .cascade import BRANCHES, MAX_ORDER
from .coefficients import BlockCoefficientField, validate
from .expr import ExprSyntaxError, evaluate, parse, variables
from .grid import BoxDomain, build_grid
from .linalg import DEFAULT_TOL
from .problem import AnisotropicProblem

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config"]

SUPPORTED_DIMS = (2, 3)

_KEYS = {
    "domain": {"lower", "upper", "split"},
    "grid": {"n"},
    "coefficients": {"lambda"},  # plus aIJ entries
    "source": {"f"},
    "expansion": {"order", "branch", "scheme"},
    "sweep": {"eps", "slope_tol", "slope_tol_x1"},
    "solver": {"tol", "max_iter"},
    "oracle": {"refine"},
    "output": {"dir"},
}
_ENTRY = re.compile(r"a([1-9])([1-9])")


class ConfigError(ValueError):
    """Invalid configuration; ``report`` holds a coefficient validation report if relevant."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class ExperimentConfig:
    domain: BoxDomain
    subdivisions: tuple[int, ...]
    coefficients: tuple[tuple[str, ...], ...]
    f: str
    ellipticity_lambda: float = 1e-3
    order: int = 0
    branch: str = "auto"
    scheme: str = "strong"
    eps: tuple[float, ...] = (0.5, 0.25, 0.125)
    tol: float = DEFAULT_TOL
    max_iter: int = 20000
    slope_tol: float = 0.25
    slope_tol_x1: float | None = None
    refine: tuple[int, ...] = (1, 2, 4)
    out_dir: str = "out"
    _problem: list = field(default_factory=list, compare=False, repr=False)

    def problem(self) -> AnisotropicProblem:
        if not self._problem:
            n = self.domain.ndim
            coeffs = BlockCoefficientField(
                tuple(tuple(parse(s, n) for s in row) for row in self.coefficients),
                self.domain.split,
                self.ellipticity_lambda,
            )
            self._problem.append(AnisotropicProblem(coeffs, parse(self.f, n), build_grid(self.domain, self.subdivisions)))
        return self._problem[0]

    def sweep_kwargs(self) -> dict:
        return dict(
            order=self.order,
            eps_values=self.eps,
            branch=self.branch,
            scheme=self.scheme,
            tol=self.tol,
            max_iter=self.max_iter,
            slope_tol=self.slope_tol,
            slope_tol_x1=self.slope_tol_x1,
        )

    def resolved_lines(self) -> list[str]:
        """The full resolved configuration, one ``[section] key = value`` per line."""
        g = lambda v: format(float(v), ".17g")  # noqa: E731
        lst = lambda vs, fmt=g: ", ".join(fmt(v) for v in vs)  # noqa: E731
        n = self.domain.ndim
        lines = [
            f"[domain] lower = {lst(self.domain.lower)}",
            f"[domain] upper = {lst(self.domain.upper)}",
            f"[domain] split = {self.domain.split}",
            f"[grid] n = {lst(self.subdivisions, str)}",
        ]
        for i in range(n):
            for j in range(n):
                lines.append(f'[coefficients] a{i + 1}{j + 1} = "{self.coefficients[i][j]}"')
        lines += [
            f"[coefficients] lambda = {g(self.ellipticity_lambda)}",
            f'[source] f = "{self.f}"',
            f"[expansion] order = {self.order}",
            f"[expansion] branch = {self.branch}",
            f"[expansion] scheme = {self.scheme}",
            f"[sweep] eps = {lst(self.eps)}",
            f"[sweep] slope_tol = {g(self.slope_tol)}",
            f"[sweep] slope_tol_x1 = {g(self.slope_tol if self.slope_tol_x1 is None else self.slope_tol_x1)}",
            f"[solver] tol = {g(self.tol)}",
            f"[solver] max_iter = {self.max_iter}",
            f"[oracle] refine = {lst(self.refine, str)}",
            f"[analysis] h_floor_ratio = {g(H_FLOOR_RATIO)}",
        ]
        return lines


def _strip(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] == '"':
        return value[1:-1]
    return value


def _number(text: str, where: str) -> float:
    text = _strip(text)
    try:
        return float(text)
    except ValueError:
        pass
    try:
        e = parse(text, 2)
    except ExprSyntaxError as exc:
        raise ConfigError(f"{where}: malformed number {text!r}") from exc
    if variables(e.ast):
        raise ConfigError(f"{where}: malformed number {text!r}")
    return float(evaluate(e, [0.0, 0.0]))


def _numbers(text: str, where: str) -> list[float]:
    items = [t for t in (s.strip() for s in _strip(text).split(",")) if t]
    if not items:
        raise ConfigError(f"{where}: empty list")
    return [_number(t, where) for t in items]


def _integer(text: str, where: str) -> int:
    v = _number(text, where)
    if v != int(v):
        raise ConfigError(f"{where}: expected an integer, got {text!r}")
    return int(v)


def _integers(text: str, where: str) -> list[int]:
    return [_integer(t, where) for t in _strip(text).split(",")]


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=None)
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    for section in cp.sections():
        if section not in _KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if key in _KEYS[section] or (section == "coefficients" and _ENTRY.fullmatch(key)):
                continue
            raise ConfigError(f"[{section}] unknown key {key!r}")

    def get(section, key, default=None, required=False):
        if cp.has_option(section, key):
            return cp.get(section, key)
        if required:
            raise ConfigError(f"missing required key [{section}] {key}")
        return default

    lower = _numbers(get("domain", "lower", required=True), "[domain] lower")
    upper = _numbers(get("domain", "upper", required=True), "[domain] upper")
    split = _integer(get("domain", "split", required=True), "[domain] split")
    if len(lower) not in SUPPORTED_DIMS:
        raise ConfigError(f"[domain] dimension N={len(lower)} not supported (N must be 2 or 3)")
    try:
        domain = BoxDomain(tuple(lower), tuple(upper), split)
    except ValueError as exc:
        raise ConfigError(f"[domain] {exc}") from exc
    ndim = domain.ndim

    n = _integers(get("grid", "n", required=True), "[grid] n")
    if len(n) == 1:
        n = n * ndim
    if len(n) != ndim or any(v < 2 for v in n):
        raise ConfigError(f"[grid] n must give {ndim} counts, each >= 2")

    rows = []
    for i in range(1, ndim + 1):
        row = []
        for j in range(1, ndim + 1):
            key = f"a{i}{j}"
            required = i == j and i > split
            default = "1" if i == j else "0"
            text = _strip(get("coefficients", key, default, required=required))
            try:
                parse(text, ndim)
            except ExprSyntaxError as exc:
                raise ConfigError(f"[coefficients] {key}: {exc}") from exc
            row.append(text)
        rows.append(tuple(row))
    for key in cp["coefficients"] if cp.has_section("coefficients") else ():
        m = _ENTRY.fullmatch(key)
        if m and (int(m.group(1)) > ndim or int(m.group(2)) > ndim):
            raise ConfigError(f"[coefficients] {key} exceeds N={ndim}")
    lam = _number(get("coefficients", "lambda", "1e-3"), "[coefficients] lambda")
    if not lam > 0:
        raise ConfigError("[coefficients] lambda must be positive")

    f = _strip(get("source", "f", required=True))
    try:
        parse(f, ndim)
    except ExprSyntaxError as exc:
        raise ConfigError(f"[source] f: {exc}") from exc

    order = _integer(get("expansion", "order", "0"), "[expansion] order")
    if not 0 <= order <= MAX_ORDER:
        raise ConfigError(f"[expansion] order must be in 0..{MAX_ORDER}")
    branch = _strip(get("expansion", "branch", "auto"))
    if branch not in BRANCHES:
        raise ConfigError(f"[expansion] branch must be one of {BRANCHES}")
    scheme = _strip(get("expansion", "scheme", "strong"))
    if scheme not in SCHEMES:
        raise ConfigError(f"[expansion] scheme must be one of {SCHEMES}")

    eps = _numbers(get("sweep", "eps", "0.5, 0.25, 0.125"), "[sweep] eps")
    bad = [e for e in eps if not 0 < e <= 1]
    if bad:
        raise ConfigError(f"[sweep] eps out of (0,1]: {bad[0]:g}")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("[sweep] eps must be strictly decreasing")
    slope_tol = _number(get("sweep", "slope_tol", "0.25"), "[sweep] slope_tol")
    stx1 = get("sweep", "slope_tol_x1")
    slope_tol_x1 = None if stx1 is None else _number(stx1, "[sweep] slope_tol_x1")

    tol = _number(get("solver", "tol", repr(DEFAULT_TOL)), "[solver] tol")
    if not 0 < tol < 1:
        raise ConfigError("[solver] tol must lie in (0, 1)")
    max_iter = _integer(get("solver", "max_iter", "20000"), "[solver] max_iter")
    refine = _integers(get("oracle", "refine", "1, 2, 4"), "[oracle] refine")
    if len(refine) < 2 or any(r < 1 for r in refine) or sorted(set(refine)) != refine:
        raise ConfigError("[oracle] refine must be at least two increasing positive factors")
    out_dir = _strip(get("output", "dir", "out"))

    config = ExperimentConfig(
        domain=domain,
        subdivisions=tuple(n),
        coefficients=tuple(rows),
        f=f,
        ellipticity_lambda=lam,
        order=order,
        branch=branch,
        scheme=scheme,
        eps=tuple(eps),
        tol=tol,
        max_iter=max_iter,
        slope_tol=slope_tol,
        slope_tol_x1=slope_tol_x1,
        refine=tuple(refine),
        out_dir=out_dir,
    )

    problem = config.problem()
    report = validate(problem.field, problem.grid)
    if not report.ok:
        failed = "; ".join(f"{c.name} (witness {c.witness})" for c in report.failures())
        raise ConfigError(f"[coefficients] hypotheses failed: {failed}", report)
    if branch == "diagonal" and not report.diagonal_blocks:
        raise ConfigError("[expansion] branch = diagonal needs A12 = A21 = 0")
    return config


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))
