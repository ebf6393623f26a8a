"""TOML problem files.

A problem file has three tables::

    name = "ou-square"              # optional

    [dimensions]
    d = 1
    m = 1                           # defaults to d

    [coefficients]                  # either a family ...
    family = "ornstein_uhlenbeck"
    [coefficients.params]
    theta = 0.5

    [coefficients]                  # ... or expressions over t, x1..xd
    drift = ["-x1"]                 # d strings
    diffusion = [["1"]]             # d rows of m strings
    potential = "1 + 0.1*tanh(x1)"
    source = "0"
    terminal = "x1^2"
    [coefficients.growth]           # optional growth classes per coefficient
    terminal = "polynomial"

    [constants]
    T = 1.0
    t0 = 0.0
    c0 = 0.9
    q = 1
    delta = 0.5                     # optional
    gamma = 0.0                     # optional zeroth-order shift
    weight_q = 0                    # optional weight transform exponent

With a family, entries of [constants] override what the family sets.
"""

from __future__ import annotations

import dataclasses
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

from .families import build_family
from .fields import from_expression
from .spec import ProblemSpec

_GROWTH_DEFAULTS = {"drift": "linear", "diffusion": "linear", "potential": "bounded", "source": "bounded", "terminal": "bounded"}
_CONSTANT_KEYS = ("T", "t0", "c0", "q", "delta", "gamma", "weight_q")


class ProblemFileError(ValueError):
    pass


def spec_from_dict(doc: dict) -> ProblemSpec:
    dims = doc.get("dimensions", {})
    coeffs = doc.get("coefficients")
    consts = dict(doc.get("constants", {}))
    if coeffs is None:
        raise ProblemFileError("missing [coefficients] table")
    unknown = set(consts) - set(_CONSTANT_KEYS)
    if unknown:
        raise ProblemFileError(f"unknown constants {sorted(unknown)}")
    name = doc.get("name")

    if "family" in coeffs:
        params = dict(coeffs.get("params", {}))
        if "d" in dims:
            params.setdefault("d", dims["d"])
        for key in ("T", "t0"):
            if key in consts:
                params.setdefault(key, consts[key])
        if name is not None:
            params["name"] = name
        try:
            spec = build_family(coeffs["family"], **params)
        except TypeError as exc:
            raise ProblemFileError(f"bad parameters for family {coeffs['family']!r}: {exc}") from None
        if "m" in dims and dims["m"] != spec.m:
            raise ProblemFileError(f"family {coeffs['family']!r} has m={spec.m}, file says {dims['m']}")
        changes = {k: consts[k] for k in _CONSTANT_KEYS if k in consts and k not in ("T", "t0")}
        return dataclasses.replace(spec, **changes) if changes else spec

    try:
        d = int(dims["d"])
    except KeyError:
        raise ProblemFileError("missing dimensions.d") from None
    m = int(dims.get("m", d))
    growth = dict(_GROWTH_DEFAULTS)
    growth.update(coeffs.get("growth", {}))

    def field(key, src):
        if not isinstance(src, str):
            src = repr(float(src))
        return from_expression(src, d, growth=growth[key])

    try:
        drift = coeffs["drift"]
        diffusion = coeffs["diffusion"]
    except KeyError as exc:
        raise ProblemFileError(f"missing coefficients.{exc.args[0]}") from None
    if len(drift) != d:
        raise ProblemFileError(f"drift needs {d} entries")
    if len(diffusion) != d or any(len(row) != m for row in diffusion):
        raise ProblemFileError(f"diffusion needs {d} rows of {m} entries")
    if "T" not in consts:
        raise ProblemFileError("missing constants.T")
    return ProblemSpec(
        d=d,
        m=m,
        T=float(consts["T"]),
        t0=float(consts.get("t0", 0.0)),
        drift=tuple(field("drift", s) for s in drift),
        diffusion=tuple(tuple(field("diffusion", s) for s in row) for row in diffusion),
        potential=field("potential", coeffs.get("potential", "0")),
        source=field("source", coeffs.get("source", "0")),
        terminal=field("terminal", coeffs.get("terminal", "0")),
        c0=float(consts.get("c0", 0.0)),
        q=int(consts.get("q", 0)),
        delta=None if consts.get("delta") is None else float(consts["delta"]),
        name=name or "problem",
        gamma=float(consts.get("gamma", 0.0)),
        weight_q=int(consts.get("weight_q", 0)),
    )


def spec_to_dict(spec: ProblemSpec) -> dict:
    consts = {"T": spec.T, "t0": spec.t0, "c0": spec.c0, "q": spec.q}
    if spec.delta is not None:
        consts["delta"] = spec.delta
    if spec.gamma:
        consts["gamma"] = spec.gamma
    if spec.weight_q:
        consts["weight_q"] = spec.weight_q
    doc = {"name": spec.name, "dimensions": {"d": spec.d, "m": spec.m}}
    if spec.family is not None:
        params = {k: v for k, v in spec.family["params"].items() if k not in ("T", "t0", "d")}
        doc["coefficients"] = {"family": spec.family["name"], "params": params}
    else:
        def text(g, what):
            if g.text is None:
                raise ProblemFileError(f"{what} has no textual form and cannot be written")
            return g.text

        doc["coefficients"] = {
            "drift": [text(g, "drift") for g in spec.drift],
            "diffusion": [[text(g, "diffusion") for g in row] for row in spec.diffusion],
            "potential": text(spec.potential, "potential"),
            "source": text(spec.source, "source"),
            "terminal": text(spec.terminal, "terminal"),
            "growth": {
                "drift": spec.drift[0].growth,
                "diffusion": spec.diffusion[0][0].growth,
                "potential": spec.potential.growth,
                "source": spec.source.growth,
                "terminal": spec.terminal.growth,
            },
        }
    doc["constants"] = consts
    return doc


def loads_problem(text: str) -> ProblemSpec:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ProblemFileError(f"cannot parse problem file: {exc}") from None
    return spec_from_dict(doc)


def load_problem(path) -> ProblemSpec:
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ProblemFileError(f"cannot parse {path}: {exc}") from None
    return spec_from_dict(doc)


def dumps_problem(spec: ProblemSpec) -> str:
    return tomli_w.dumps(spec_to_dict(spec))


def save_problem(spec: ProblemSpec, path):
    with open(path, "w") as fh:
        fh.write(dumps_problem(spec))
