"""Self-describing model artifact files.

Layout::

    SMOOTHCAST-ARTIFACT <version>\\n
    section*   name_len:u16  name:utf8  type:u8  payload_len:u64  payload
    trailer    sha256 digest (32 bytes) of everything before it

Section type ``J`` holds canonical JSON (sorted keys); type ``A`` holds a
float64 array as ``ndim:u8``, ``ndim`` x ``u64`` dimensions, then the
little-endian values. All integers are little-endian. The same fitted model
always serializes to the same bytes.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .dlt import DltPriors, RegressionPrior
from .estimator import FittedModel
from .exceptions import ChecksumMismatch, VersionMismatch
from .forecast import FinalState
from .inference import PosteriorDraws
from .lgt import LgtPriors
from .models import model_from_config
from .series import InitialState

MAGIC = b"SMOOTHCAST-ARTIFACT"
VERSION = "1"
DIGEST_SIZE = 32


def _encode_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _encode_array(array):
    array = np.ascontiguousarray(array, dtype="<f8")
    head = struct.pack("<B", array.ndim) + b"".join(struct.pack("<Q", d) for d in array.shape)
    return head + array.tobytes()


def _decode_array(payload):
    ndim = payload[0]
    shape = struct.unpack_from(f"<{ndim}Q", payload, 1)
    offset = 1 + 8 * ndim
    array = np.frombuffer(payload, dtype="<f8", offset=offset).reshape(shape)
    return array.astype(np.float64)


def _priors_to_dict(priors):
    if isinstance(priors, DltPriors):
        return {
            "gamma0": priors.gamma0,
            "regression_mu": list(priors.regression.mu),
            "regression_sigma": list(priors.regression.sigma),
            "trend_sd": priors.trend_sd,
        }
    return {"gamma0": priors.gamma0}


def _priors_from_dict(kind, data):
    if kind == "dlt":
        return DltPriors(
            gamma0=data["gamma0"],
            regression=RegressionPrior(tuple(data["regression_mu"]),
                                       tuple(data["regression_sigma"])),
            trend_sd=data["trend_sd"],
        )
    return LgtPriors(gamma0=data["gamma0"])


def dumps(fitted: FittedModel) -> bytes:
    meta = {
        "format_version": VERSION,
        "model": fitted.model.config(),
        "mode": fitted.mode,
        "method": fitted.method,
        "seed": fitted.seed,
        "data_fingerprint": fitted.data_fingerprint,
        "n_obs": fitted.n_obs,
        "param_names": fitted.model.param_names(),
        "initial_state": {
            "level_0": fitted.init_state.level_0,
            "trend_0": fitted.init_state.trend_0,
        },
        "priors": _priors_to_dict(fitted.priors),
        "fit_info": fitted.fit_info,
        "t_end": fitted.final_states.t_end,
    }
    sections = [
        ("meta", b"J", _encode_json(meta)),
        ("initial_seasonal", b"A", _encode_array(fitted.init_state.seasonal_0)),
        ("final_level", b"A", _encode_array(fitted.final_states.level)),
        ("final_trend", b"A", _encode_array(fitted.final_states.trend)),
        ("final_seasonal", b"A", _encode_array(fitted.final_states.seasonal)),
    ]
    if fitted.draws is None:
        sections.append(("points", b"A", _encode_array(fitted.points)))
    else:
        meta_draws = {
            "n_warmup": fitted.draws.n_warmup,
            "acceptance_rate": [float(a) for a in fitted.draws.acceptance_rate],
        }
        sections.append(("draws_meta", b"J", _encode_json(meta_draws)))
        sections.append(("draws", b"A", _encode_array(fitted.draws.draws)))
        if fitted.draws.log_posterior is not None:
            sections.append(("draws_log_posterior", b"A",
                             _encode_array(fitted.draws.log_posterior)))

    body = bytearray(MAGIC + b" " + VERSION.encode("ascii") + b"\n")
    for name, kind, payload in sections:
        encoded = name.encode("utf-8")
        body += struct.pack("<H", len(encoded)) + encoded + kind
        body += struct.pack("<Q", len(payload)) + payload
    return bytes(body) + hashlib.sha256(body).digest()


def _split_sections(data):
    newline = data.find(b"\n")
    if newline < 0 or not data.startswith(MAGIC + b" "):
        raise ChecksumMismatch("not a model artifact (bad header)")
    version = data[len(MAGIC) + 1 : newline].decode("ascii", errors="replace")
    if version != VERSION:
        raise VersionMismatch(f"artifact version {version!r}; this build reads {VERSION!r}")
    if len(data) < newline + 1 + DIGEST_SIZE:
        raise ChecksumMismatch("artifact is truncated")
    body, digest = data[:-DIGEST_SIZE], data[-DIGEST_SIZE:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumMismatch("artifact checksum does not match its contents")

    sections = {}
    pos = newline + 1
    while pos < len(body):
        (name_len,) = struct.unpack_from("<H", body, pos)
        pos += 2
        name = body[pos : pos + name_len].decode("utf-8")
        pos += name_len
        kind = body[pos : pos + 1]
        pos += 1
        (size,) = struct.unpack_from("<Q", body, pos)
        pos += 8
        payload = body[pos : pos + size]
        pos += size
        sections[name] = json.loads(payload) if kind == b"J" else _decode_array(payload)
    return sections


def loads(data: bytes) -> FittedModel:
    sections = _split_sections(bytes(data))
    meta = sections["meta"]
    model = model_from_config(meta["model"])
    init_state = InitialState(
        level_0=meta["initial_state"]["level_0"],
        trend_0=meta["initial_state"]["trend_0"],
        seasonal_0=sections["initial_seasonal"],
    )
    final_states = FinalState(
        level=sections["final_level"],
        trend=sections["final_trend"],
        seasonal=sections["final_seasonal"],
        t_end=meta["t_end"],
    )
    draws = None
    if "draws" in sections:
        dmeta = sections["draws_meta"]
        draws = PosteriorDraws(
            draws=sections["draws"],
            acceptance_rate=np.array(dmeta["acceptance_rate"]),
            n_warmup=dmeta["n_warmup"],
            names=tuple(meta["param_names"]),
            log_posterior=sections.get("draws_log_posterior"),
        )
        points = draws.pooled()
    else:
        points = sections["points"]
    return FittedModel(
        model=model,
        mode=meta["mode"],
        method=meta["method"],
        init_state=init_state,
        priors=_priors_from_dict(model.kind, meta["priors"]),
        points=points,
        final_states=final_states,
        seed=meta["seed"],
        data_fingerprint=meta["data_fingerprint"],
        n_obs=meta["n_obs"],
        fit_info=meta["fit_info"],
        draws=draws,
    )


def save(fitted: FittedModel, path):
    with open(path, "wb") as fh:
        fh.write(dumps(fitted))


def load(path) -> FittedModel:
    with open(path, "rb") as fh:
        return loads(fh.read())
