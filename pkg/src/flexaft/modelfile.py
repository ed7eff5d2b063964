"""Persistence for fitted models: a self-describing text format.

A model file is line-oriented key-value text with two block forms, one
for vectors (values on the key line) and one for the covariance matrix
(row per line). All floats are written with full round-trip precision,
so ``load_model(save_model(f))`` reproduces theta, covariance and the
information criteria bit for bit. The header carries a format version;
readers reject versions they do not know rather than guessing.

The fit's optimization trace is not persisted; a loaded model carries
an empty trace and is otherwise usable anywhere a freshly fitted model
is, prediction included.
"""

from pathlib import Path

import numpy as np

from .errors import ModelFileError
from .estimation import FittedModel
from .models import ModelSpec, build_model
from .splines import KnotVector

__all__ = ["save_model", "load_model", "FORMAT_VERSION"]

FORMAT_VERSION = 1
_MAGIC = "flexaft-model"


def _floats(values):
    return " ".join(repr(float(v)) for v in values)


def save_model(fitted, path):
    """Write a FittedModel to ``path``; returns the path.

    Works for non-converged fits too (the flag is stored), so study
    scripts can archive everything they produced.
    """
    if not isinstance(fitted, FittedModel):
        raise ModelFileError("save_model expects a FittedModel")
    spec = fitted.spec
    lines = [
        f"{_MAGIC} format-version {FORMAT_VERSION}",
        f"family {spec.family}",
        f"covariates {','.join(spec.covariates) if spec.covariates else '-'}",
    ]
    if spec.family == "fpaft":
        lines.append(f"df {spec.df}")
        lines.append(f"knots {_floats(fitted.model.knots.knots)}")
        for name, kv in fitted.model.tde_knots:
            lines.append(f"tde_knots {name} {_floats(kv.knots)}")
    lines += [
        f"converged {str(bool(fitted.converged)).lower()}",
        f"iterations {int(fitted.iterations)}",
        f"singular_information "
        f"{str(bool(fitted.singular_information)).lower()}",
        f"n_events {int(fitted.n_events)}",
        f"n_rows {int(fitted.n_rows)}",
        f"bic_sample_size {fitted.bic_sample_size}",
        f"loglik {fitted.loglik!r}",
        f"data_checksum {fitted.data_checksum or '-'}",
        f"theta {_floats(fitted.theta)}",
        f"score {_floats(fitted.score)}",
    ]
    if fitted.covariance is not None:
        lines.append(f"covariance {fitted.k}")
        for row in fitted.covariance:
            lines.append(_floats(row))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def _parse_floats(text, what):
    try:
        return np.array([float(v) for v in text.split()], dtype=np.float64)
    except ValueError as exc:
        raise ModelFileError(f"bad {what} values: {exc}") from None


def load_model(path):
    """Read a model file back into a FittedModel.

    Raises ModelFileError on unknown versions, missing keys, or
    dimension mismatches between spec, knots, theta and covariance.
    """
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc}") from None
    lines = [ln for ln in raw.splitlines() if ln.strip()]
    if not lines:
        raise ModelFileError(f"{path} is empty")
    head = lines[0].split()
    if len(head) != 3 or head[0] != _MAGIC or head[1] != "format-version":
        raise ModelFileError(f"{path} is not a flexaft model file")
    if head[2] != str(FORMAT_VERSION):
        raise ModelFileError(
            f"unsupported model file format-version {head[2]} "
            f"(this reader understands {FORMAT_VERSION})"
        )

    fields = {}
    tde_knots = []
    cov_rows = None
    cov_size = 0
    i = 1
    while i < len(lines):
        key, _, rest = lines[i].partition(" ")
        if key == "tde_knots":
            name, _, values = rest.partition(" ")
            tde_knots.append((name, _parse_floats(values, "tde_knots")))
        elif key == "covariance":
            try:
                cov_size = int(rest)
            except ValueError:
                raise ModelFileError(f"bad covariance size {rest!r}") \
                    from None
            rows = lines[i + 1: i + 1 + cov_size]
            if len(rows) != cov_size:
                raise ModelFileError("truncated covariance block")
            cov_rows = [_parse_floats(row, "covariance") for row in rows]
            i += cov_size
        elif key in fields:
            raise ModelFileError(f"duplicate key {key!r}")
        else:
            fields[key] = rest
        i += 1

    required = ["family", "covariates", "converged", "iterations",
                "singular_information", "n_events", "n_rows",
                "bic_sample_size", "loglik", "data_checksum", "theta",
                "score"]
    missing = [key for key in required if key not in fields]
    if missing:
        raise ModelFileError(f"missing keys {missing} in {path}")

    covariates = (tuple(fields["covariates"].split(","))
                  if fields["covariates"] != "-" else ())
    family = fields["family"]
    if family == "fpaft":
        if "df" not in fields or "knots" not in fields:
            raise ModelFileError("fpaft model file needs df and knots")
        df = int(fields["df"])
        knot_values = _parse_floats(fields["knots"], "knots")
        if knot_values.size != df + 1:
            raise ModelFileError(
                f"df {df} needs {df + 1} knots, file has {knot_values.size}"
            )
        spec = ModelSpec(family="fpaft", covariates=covariates, df=df,
                         tde=tuple((n, len(kv) - 1) for n, kv in tde_knots))
        model = build_model(
            spec,
            knots=KnotVector(tuple(knot_values)),
            tde_knots=tuple((n, KnotVector(tuple(kv)))
                            for n, kv in tde_knots),
        )
    else:
        spec = ModelSpec(family=family, covariates=covariates)
        model = build_model(spec)

    theta = _parse_floats(fields["theta"], "theta")
    score = _parse_floats(fields["score"], "score")
    if theta.size != model.n_params:
        raise ModelFileError(
            f"theta has {theta.size} entries, the spec needs "
            f"{model.n_params}"
        )
    if score.size != theta.size:
        raise ModelFileError("score length does not match theta")
    covariance = None
    if cov_rows is not None:
        if cov_size != theta.size \
                or any(row.size != cov_size for row in cov_rows):
            raise ModelFileError("covariance shape does not match theta")
        covariance = np.array(cov_rows)

    def _bool(key):
        value = fields[key]
        if value not in ("true", "false"):
            raise ModelFileError(f"{key} must be true or false, got {value!r}")
        return value == "true"

    checksum = fields["data_checksum"]
    return FittedModel(
        spec=spec,
        model=model,
        theta=theta,
        loglik=float(fields["loglik"]),
        score=score,
        converged=_bool("converged"),
        iterations=int(fields["iterations"]),
        trace=(),
        covariance=covariance,
        singular_information=_bool("singular_information"),
        n_events=int(fields["n_events"]),
        n_rows=int(fields["n_rows"]),
        bic_sample_size=fields["bic_sample_size"],
        data_checksum="" if checksum == "-" else checksum,
    )
