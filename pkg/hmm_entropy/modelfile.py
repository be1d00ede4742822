"""Model document codec.

A model document is JSON:

    {
      "format": "hmm-entropy/model",
      "version": 1,
      "states": B,
      "symbols": A,
      "trunc_len": L,
      "phi": [a_0, ..., a_{B-1}],
      "delta": [[["num/den", ...], ...], ...]
    }

delta[i][j] lists the coefficients of eps^0, eps^1, ... as exact rational
strings. Decimal strings are rejected so the pipeline stays exact.
Serialization is canonical: parse -> serialize -> parse is the identity and
serialize(parse(serialize(m))) == serialize(m) byte for byte.
"""
import hashlib
import json
import re
from fractions import Fraction
from typing import Any, List, Optional, Tuple

from .errors import ModelFormatError
from .hmm import HmmModel

FORMAT_NAME = "hmm-entropy/model"
FORMAT_VERSION = 1

_RATIONAL = re.compile(r"^-?\d+(/\d+)?$")


def _locate(text: str, token: str) -> Tuple[Optional[int], Optional[int]]:
    # Best effort: first occurrence of a quoted token.
    pos = text.find(json.dumps(token))
    if pos < 0:
        return None, None
    line = text.count("\n", 0, pos) + 1
    column = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, column


def format_rational(value: Fraction) -> str:
    """Render a rational as "num/den", always with an explicit denominator."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(token: Any, text: str = "") -> Fraction:
    """
    Parse an exact rational string such as "1/3", "-2" or "0/1".

    Raises:
        ModelFormatError: If the token is not an exact rational string.
    """
    if not isinstance(token, str) or not _RATIONAL.match(token.strip()):
        line, column = _locate(text, token) if isinstance(token, str) else (None, None)
        raise ModelFormatError(f"expected an exact rational string like \"1/3\", got {token!r}",
                               line, column)
    try:
        return Fraction(token.strip())
    except ZeroDivisionError:
        line, column = _locate(text, token)
        raise ModelFormatError(f"zero denominator in {token!r}", line, column)


def _require(doc: dict, key: str, kind) -> Any:
    if key not in doc:
        raise ModelFormatError(f"missing field {key!r}")
    value = doc[key]
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ModelFormatError(f"field {key!r} has the wrong type ({type(value).__name__})")
    return value


def parse_model(text: str, source: str = "<model>") -> HmmModel:
    """
    Parse a model document.

    Args:
        text (str): The JSON document.
        source (str): Name used in error messages.

    Returns:
        HmmModel: The validated model at the stored truncation.

    Raises:
        ModelFormatError: On malformed JSON or schema violations, with
            line and column where they can be determined.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{source}: {e.msg}", e.lineno, e.colno)
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{source}: top level must be an object")
    if doc.get("format") != FORMAT_NAME:
        raise ModelFormatError(f"{source}: format must be {FORMAT_NAME!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"{source}: unsupported version {doc.get('version')!r}")

    states = _require(doc, "states", int)
    symbols = _require(doc, "symbols", int)
    trunc_len = _require(doc, "trunc_len", int)
    phi = _require(doc, "phi", list)
    delta = _require(doc, "delta", list)
    if trunc_len < 0:
        raise ModelFormatError(f"{source}: trunc_len must be non-negative")
    if len(delta) != states or any(not isinstance(row, list) or len(row) != states for row in delta):
        raise ModelFormatError(f"{source}: delta must be a {states}x{states} array")
    if len(phi) != states or any(not isinstance(a, int) or isinstance(a, bool) for a in phi):
        raise ModelFormatError(f"{source}: phi must list {states} integer symbols")

    coeffs: List[List[List[Fraction]]] = []
    for i, row in enumerate(delta):
        parsed_row = []
        for j, entry in enumerate(row):
            if not isinstance(entry, list) or not entry:
                raise ModelFormatError(f"{source}: delta[{i}][{j}] must be a non-empty list")
            if len(entry) > trunc_len + 1:
                raise ModelFormatError(
                    f"{source}: delta[{i}][{j}] has {len(entry)} coefficients, trunc_len is {trunc_len}"
                )
            parsed_row.append([parse_rational(c, text) for c in entry])
        coeffs.append(parsed_row)

    # Stochasticity and labelling problems surface as ModelValidationError.
    return HmmModel.from_coeffs(coeffs, phi, symbols=symbols, trunc_len=trunc_len)


def _trimmed(coeffs) -> List[str]:
    values = list(coeffs)
    while len(values) > 1 and values[-1] == 0:
        values.pop()
    return [format_rational(c) for c in values]


def model_document(model: HmmModel) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "states": model.states,
        "symbols": model.symbols,
        "trunc_len": model.trunc_len,
        "phi": list(model.phi),
        "delta": [[_trimmed(e.coeffs) for e in row] for row in model.delta],
    }


def serialize_model(model: HmmModel) -> str:
    return json.dumps(model_document(model), indent=2) + "\n"


def model_hash(model: HmmModel) -> str:
    """SHA-256 of the canonical serialization."""
    return hashlib.sha256(serialize_model(model).encode("utf8")).hexdigest()


def read_model_file(path: str) -> HmmModel:
    try:
        with open(path, "r", encoding="utf8") as f:
            text = f.read()
    except OSError as e:
        raise ModelFormatError(f"could not read {path}: {e}")
    return parse_model(text, source=path)
