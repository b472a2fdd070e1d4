"""JSON documents for systems, factors, reductions and reports."""

import json

from .errors import InvalidMatrix
from .lti import LtiSystem
from .lyapunov import CONTROLLABILITY, OBSERVABILITY, GramianFactor

SYSTEM_SCHEMA = """\
system file: {"n": int, "m": int, "p": int,
              "A": n x n nested list, "B": n x m nested list, "C": n x p nested list}
  (row-major decimal numbers; output is y = C^T x; NaN/Inf rejected)
factor file: {"controllability": F, "observability": F}
  with F = {"n": int, "k": int, "Z": n x k nested list, "eps": float, "side": str}"""


def _reject_constant(name):
    raise InvalidMatrix(f"non-finite number {name} in input")


def loads(text):
    return json.loads(text, parse_constant=_reject_constant)


def dumps(obj):
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def write_json(obj, path=None, stream=None):
    text = dumps(obj)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    elif stream is not None:
        stream.write(text)
    return text


def read_system(path):
    return LtiSystem.from_dict(read_json(path))


def factors_to_dict(Sf, Rf):
    return {CONTROLLABILITY: Sf.to_dict(), OBSERVABILITY: Rf.to_dict()}


def factors_from_dict(d):
    if "factors" in d:
        d = d["factors"]
    try:
        Sf = GramianFactor.from_dict(d[CONTROLLABILITY])
        Rf = GramianFactor.from_dict(d[OBSERVABILITY])
    except KeyError as exc:
        raise InvalidMatrix(f"factor file lacks {exc}") from None
    return Sf, Rf
