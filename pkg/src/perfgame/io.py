"""JSON game files: schema, parsing and dumping.

Layout (every object rejects unknown keys)::

    {
      "dims":     {"d": [d_1, ...], "m": [m_1, ...]},
      "feasible": {"type": "whole"} | [per-player set, ...],
      "family":   {"players": [{"base": {...}, "A_own": [[...]], "A_other": [[...]]}, ...]},
      "losses":   [{"type": "revenue", "lam": 1.0, "scale": 0.5}, ...],
      "separable": true
    }

Sets: ``whole``, ``box`` (lower, upper), ``ball`` (center, radius).
Bases: ``deterministic`` (mean), ``gaussian`` (mean, cov), ``empirical``
(samples), ``features`` (thetas, offsets, noise_std).
Losses: ``revenue`` (lam, scale), ``strategic``, ``quadratic``
(xx, xz, zz, x_lin, z_lin).
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np

from .distributions import Deterministic, Empirical, FeatureBase, Gaussian
from .game import GameDims, GameInstance
from .losses import QuadraticCustom, Revenue, StrategicPrediction
from .sets import Ball, Box, ProductSet, WholeSpace


class GameFileError(ValueError):
    """Malformed or inconsistent game / config file."""


_num = {"type": "number"}
_vec = {"type": "array", "items": _num}
_mat = {"type": "array", "items": _vec}
_ten = {"type": "array", "items": _mat}


def _obj(props, required):
    return {"type": "object", "properties": props, "required": required, "additionalProperties": False}


_SET = {
    "oneOf": [
        _obj({"type": {"const": "whole"}}, ["type"]),
        _obj({"type": {"const": "box"}, "lower": _vec, "upper": _vec}, ["type", "lower", "upper"]),
        _obj({"type": {"const": "ball"}, "center": _vec, "radius": _num}, ["type", "center", "radius"]),
    ]
}

_BASE = {
    "oneOf": [
        _obj({"type": {"const": "deterministic"}, "mean": _vec}, ["type", "mean"]),
        _obj({"type": {"const": "gaussian"}, "mean": _vec, "cov": _mat}, ["type", "mean", "cov"]),
        _obj({"type": {"const": "empirical"}, "samples": _mat}, ["type", "samples"]),
        _obj(
            {"type": {"const": "features"}, "thetas": _ten, "offsets": _mat, "noise_std": _num},
            ["type", "thetas", "offsets"],
        ),
    ]
}

_LOSS = {
    "oneOf": [
        _obj({"type": {"const": "revenue"}, "lam": _num, "scale": _num}, ["type", "lam"]),
        _obj({"type": {"const": "strategic"}}, ["type"]),
        _obj(
            {"type": {"const": "quadratic"}, "xx": _mat, "xz": _mat, "zz": _mat, "x_lin": _vec, "z_lin": _vec},
            ["type", "xx", "xz", "zz", "x_lin", "z_lin"],
        ),
    ]
}

_dimlist = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1}

GAME_SCHEMA = _obj(
    {
        "dims": _obj({"d": _dimlist, "m": _dimlist}, ["d", "m"]),
        "feasible": {"oneOf": [_SET, {"type": "array", "items": _SET, "minItems": 1}]},
        "family": _obj(
            {
                "players": {
                    "type": "array",
                    "minItems": 1,
                    "items": _obj({"base": _BASE, "A_own": _mat, "A_other": _mat}, ["base", "A_own"]),
                }
            },
            ["players"],
        ),
        "losses": {"type": "array", "items": _LOSS, "minItems": 1},
        "separable": {"type": "boolean"},
    },
    ["dims", "family", "losses"],
)


def _set_from(entry, dim):
    t = entry["type"]
    if t == "whole":
        return WholeSpace(dim)
    if t == "box":
        return Box(entry["lower"], entry["upper"])
    return Ball(entry["center"], entry["radius"])


def _base_from(entry):
    t = entry["type"]
    if t == "deterministic":
        return Deterministic(entry["mean"])
    if t == "gaussian":
        return Gaussian(entry["mean"], entry["cov"])
    if t == "empirical":
        return Empirical(entry["samples"])
    return FeatureBase(entry["thetas"], entry["offsets"], entry.get("noise_std", 0.0))


def _loss_from(entry):
    t = entry["type"]
    if t == "revenue":
        return Revenue(entry["lam"], entry.get("scale", 1.0))
    if t == "strategic":
        return StrategicPrediction()
    return QuadraticCustom(entry["xx"], entry["xz"], entry["zz"], entry["x_lin"], entry["z_lin"])


def game_from_dict(doc):
    try:
        jsonschema.validate(doc, GAME_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise GameFileError(f"game file invalid at {where}: {e.message}") from None
    try:
        dims = GameDims(doc["dims"]["d"], doc["dims"]["m"])
        n = dims.n
        players = doc["family"]["players"]
        if len(players) != n or len(doc["losses"]) != n:
            raise GameFileError(f"dims describe {n} players but family/losses list {len(players)}/{len(doc['losses'])}")
        feas = doc.get("feasible", {"type": "whole"})
        if isinstance(feas, dict):
            feas = [feas] * n
        if len(feas) != n:
            raise GameFileError(f"feasible lists {len(feas)} sets for {n} players")
        sets = [_set_from(s, k) for s, k in zip(feas, dims.d_i)]
        bases = [_base_from(p["base"]) for p in players]
        A_own = [np.array(p["A_own"], dtype=float) for p in players]
        A_other = []
        for i, p in enumerate(players):
            shape = (dims.m_i[i], dims.d - dims.d_i[i])
            if "A_other" in p:
                A_other.append(np.array(p["A_other"], dtype=float).reshape(shape))
            else:
                A_other.append(np.zeros(shape))
        losses = [_loss_from(s) for s in doc["losses"]]
        return GameInstance(dims, sets, bases, A_own, A_other, losses, separable=doc.get("separable"))
    except GameFileError:
        raise
    except (ValueError, TypeError) as e:
        raise GameFileError(f"inconsistent game file: {e}") from None


def load_game(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise GameFileError(f"{path}: not valid JSON ({e})") from None
    return game_from_dict(doc)


def _tolist(a):
    return np.asarray(a, dtype=float).tolist()


def _set_to(s):
    if isinstance(s, WholeSpace):
        return {"type": "whole"}
    if isinstance(s, Box):
        return {"type": "box", "lower": _tolist(s.lower), "upper": _tolist(s.upper)}
    return {"type": "ball", "center": _tolist(s.center), "radius": float(s.radius)}


def _base_to(b):
    if isinstance(b, Deterministic):
        return {"type": "deterministic", "mean": _tolist(b.mean)}
    if isinstance(b, Gaussian):
        return {"type": "gaussian", "mean": _tolist(b.mean), "cov": _tolist(b.cov)}
    if isinstance(b, Empirical):
        return {"type": "empirical", "samples": _tolist(b.samples)}
    return {"type": "features", "thetas": _tolist(b.thetas), "offsets": _tolist(b.offsets), "noise_std": b.noise_std}


def _loss_to(loss):
    if isinstance(loss, Revenue):
        return {"type": "revenue", "lam": float(loss.lam), "scale": float(loss.scale)}
    if isinstance(loss, StrategicPrediction):
        return {"type": "strategic"}
    return {
        "type": "quadratic",
        "xx": _tolist(loss.xx),
        "xz": _tolist(loss.xz),
        "zz": _tolist(loss.zz),
        "x_lin": _tolist(loss.x_lin),
        "z_lin": _tolist(loss.z_lin),
    }


def game_to_dict(game):
    dims = game.dims
    return {
        "dims": {"d": list(dims.d_i), "m": list(dims.m_i)},
        "feasible": [_set_to(s) for s in game.feasible.sets],
        "family": {
            "players": [
                {"base": _base_to(b), "A_own": _tolist(Ao), "A_other": _tolist(Ax)}
                for b, Ao, Ax in zip(game.bases, game.A_own, game.A_other)
            ]
        },
        "losses": [_loss_to(l) for l in game.losses],
        "separable": game.separable,
    }


def save_game(game, path):
    Path(path).write_text(json.dumps(game_to_dict(game), indent=1) + "\n")


def read_json(path, what="config"):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise GameFileError(f"{what} {path}: not valid JSON ({e})") from None


__all__ = [
    "GAME_SCHEMA",
    "GameFileError",
    "ProductSet",
    "game_from_dict",
    "game_to_dict",
    "load_game",
    "read_json",
    "save_game",
]
