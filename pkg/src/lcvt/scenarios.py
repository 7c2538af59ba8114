"""Scenario files: a TOML description that maps one-to-one onto ScenarioSpec.

Layout::

    [defaults]                 # optional, merged under every scenario
    reps = 300
    base_seed = 20240601
    alpha = 0.05
    alternative = "two_sided"  # or "greater"
    engine = "lasso"           # or "ols_baseline"

    [defaults.lasso]           # any LassoConfig field
    cv_folds = 10
    selection_rule = "one_se"

    [[scenario]]               # one explicit cell
    id = "t2-toeplitz-sparse-form1"
    n = 100
    p = 200                    # or p_over_n = 2.0
    covariance = { kind = "toeplitz", rho = 0.9 }
    coefficients = { kind = "sparse" }     # tau computed unless given
    form = "form1"
    augment_d = 0              # optional irrelevant Toeplitz(0.9) columns

    [[grid]]                   # cartesian product of the list-valued keys
    id_prefix = "t1"
    n = [100, 500]
    p_over_n = 2.0
    covariance = [{ kind = "independent" }, { kind = "equicorr", rho = 0.3 }]
    coefficients = ["sparse", "dense"]
    form = "homoskedastic"

Scenario-level keys override ``[defaults]``; ``lasso`` tables are merged key
by key.
"""

import itertools
import sys
from dataclasses import fields
from importlib import resources

from .errors import ConfigError, InputFileNotFound
from .lasso import LassoConfig
from .simulation import CoefficientSpec, CovarianceSpec, ScenarioSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_TOP_KEYS = {"defaults", "scenario", "grid"}
_SCENARIO_KEYS = {"id", "n", "p", "p_over_n", "covariance", "coefficients", "form",
                  "alpha", "alternative", "reps", "base_seed", "engine", "augment_d",
                  "augment_rho", "lasso"}
_GRID_KEYS = (_SCENARIO_KEYS - {"id"}) | {"id_prefix"}
_LASSO_KEYS = {f.name for f in fields(LassoConfig)}
_EXPANDABLE = ("n", "covariance", "coefficients", "form", "augment_d", "engine")


def builtin_names():
    files = resources.files("lcvt").joinpath("scenarios")
    return sorted(f.name[:-5] for f in files.iterdir() if f.name.endswith(".toml"))


def builtin_text(name):
    path = resources.files("lcvt").joinpath("scenarios", f"{name}.toml")
    if not path.is_file():
        raise ConfigError(f"no builtin scenario file {name!r}; "
                          f"choose from {', '.join(builtin_names())}", "builtin")
    return path.read_text(encoding="utf-8")


def load_scenarios(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except FileNotFoundError:
        raise InputFileNotFound(f"scenario file not found: {path}") from None
    return parse_scenarios(raw.decode("utf-8"))


def load_builtin(name):
    return parse_scenarios(builtin_text(name))


def parse_scenarios(text):
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    for key in doc:
        if key not in _TOP_KEYS:
            raise ConfigError("unknown top-level key", key)
    defaults = doc.get("defaults", {})
    _check_keys(defaults, _SCENARIO_KEYS - {"id"}, "defaults")

    specs = []
    for i, entry in enumerate(doc.get("scenario", [])):
        _check_keys(entry, _SCENARIO_KEYS, f"scenario[{i}]")
        specs.append(_build(_merge(defaults, entry), f"scenario[{i}]",
                            entry.get("id") or f"s{i + 1}"))
    for g, entry in enumerate(doc.get("grid", [])):
        _check_keys(entry, _GRID_KEYS, f"grid[{g}]")
        specs.extend(_expand(_merge(defaults, entry), f"grid[{g}]"))
    if not specs:
        raise ConfigError("no scenarios defined", "scenario")
    seen = set()
    for s in specs:
        if s.id in seen:
            raise ConfigError(f"duplicate id {s.id!r}", "id")
        seen.add(s.id)
    return specs


def _check_keys(table, allowed, where):
    if not isinstance(table, dict):
        raise ConfigError("expected a table", where)
    for key in table:
        if key not in allowed:
            raise ConfigError("unknown key", f"{where}.{key}")
    lasso = table.get("lasso", {})
    if not isinstance(lasso, dict):
        raise ConfigError("expected a table", f"{where}.lasso")
    for key in lasso:
        if key not in _LASSO_KEYS:
            raise ConfigError("unknown key", f"{where}.lasso.{key}")


def _merge(defaults, entry):
    out = dict(defaults)
    out.update(entry)
    out["lasso"] = {**defaults.get("lasso", {}), **entry.get("lasso", {})}
    return out


def _as_table(value, where):
    if isinstance(value, str):
        return {"kind": value}
    if isinstance(value, dict):
        return value
    raise ConfigError("expected a string or table", where)


def _require(entry, key, where):
    if key not in entry:
        raise ConfigError("missing required key", f"{where}.{key}")
    return entry[key]


def _build(entry, where, sid):
    try:
        n = int(_require(entry, "n", where))
        if "p" in entry:
            p = int(entry["p"])
        elif "p_over_n" in entry:
            p = int(round(float(entry["p_over_n"]) * n))
        else:
            raise ConfigError("one of p or p_over_n is required", f"{where}.p")
        cov = _as_table(_require(entry, "covariance", where), f"{where}.covariance")
        coef = _as_table(_require(entry, "coefficients", where), f"{where}.coefficients")
        for key in cov:
            if key not in ("kind", "rho"):
                raise ConfigError("unknown key", f"{where}.covariance.{key}")
        for key in coef:
            if key not in ("kind", "tau"):
                raise ConfigError("unknown key", f"{where}.coefficients.{key}")
        augment_d = entry.get("augment_d")
        return ScenarioSpec(
            n=n,
            p=p,
            covariance=CovarianceSpec(str(cov.get("kind", "")), p, float(cov.get("rho", 0.0))),
            coefficients=CoefficientSpec(str(coef.get("kind", "")), p, coef.get("tau")),
            form=str(entry.get("form", "homoskedastic")),
            alpha=float(entry.get("alpha", 0.05)),
            alternative=str(entry.get("alternative", "two_sided")),
            reps=int(entry.get("reps", 100)),
            base_seed=int(entry.get("base_seed", 0)),
            engine=str(entry.get("engine", "lasso")),
            augment_d=int(augment_d) if augment_d else None,
            augment_rho=float(entry.get("augment_rho", 0.9)),
            lasso=LassoConfig(**entry.get("lasso", {})),
            id=str(sid),
        )
    except ConfigError as exc:
        if exc.key and not exc.key.startswith(where):
            raise ConfigError(str(exc).split(": ", 1)[-1], f"{where}.{exc.key}") from None
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), where) from None


def _label(value):
    if isinstance(value, dict):
        kind = value.get("kind", "")
        rho = value.get("rho")
        return f"{kind}{rho:g}" if rho is not None else str(kind)
    return str(value)


def _expand(entry, where):
    axes = []
    for key in _EXPANDABLE:
        value = entry.get(key)
        axes.append(value if isinstance(value, list) else [value])
    prefix = entry.get("id_prefix", where)
    specs = []
    for combo in itertools.product(*axes):
        cell = dict(entry)
        cell.pop("id_prefix", None)
        parts = [prefix]
        for key, value in zip(_EXPANDABLE, combo):
            if value is None:
                cell.pop(key, None)
                continue
            cell[key] = value
            if key == "n":
                parts.append(f"n{value}")
            elif key == "augment_d":
                parts.append(f"d{value}")
            elif key == "engine":
                if isinstance(entry.get("engine"), list):
                    parts.append(str(value))
            else:
                parts.append(_label(value))
        specs.append(_build(cell, where, "-".join(parts)))
    return specs
