import json
from fractions import Fraction

import pytest

from hmm_entropy.errors import ModelFormatError, ModelValidationError
from hmm_entropy.modelfile import (
    format_rational,
    model_hash,
    parse_model,
    parse_rational,
    read_model_file,
    serialize_model,
)

GOOD = """{
  "format": "hmm-entropy/model",
  "version": 1,
  "states": 2,
  "symbols": 2,
  "trunc_len": 1,
  "phi": [0, 1],
  "delta": [[["1/2", "-1/2"], ["1/2", "1/2"]], [["1"], ["0/1"]]]
}
"""


def test_parse_rational():
    assert parse_rational("1/3") == Fraction(1, 3)
    assert parse_rational(" -2 ") == -2
    assert format_rational(Fraction(-4, 6)) == "-2/3"
    assert format_rational(0) == "0/1"


@pytest.mark.parametrize("token", ["0.5", "1e-3", "one", 1, None])
def test_parse_rational_rejects_inexact(token):
    with pytest.raises(ModelFormatError):
        parse_rational(token)


def test_zero_denominator():
    with pytest.raises(ModelFormatError, match="zero denominator"):
        parse_rational("1/0")


def test_parse_good_document():
    model = parse_model(GOOD)
    assert model.states == 2
    assert model.trunc_len == 1
    assert model.delta[0][0].coeffs == (Fraction(1, 2), Fraction(-1, 2))
    assert model.delta[1][0].coeffs == (1, 0)


def test_round_trip_is_canonical(ordentlich_half, ge_positive):
    for model in (ordentlich_half, ge_positive, parse_model(GOOD)):
        text = serialize_model(model)
        again = parse_model(text)
        assert again == model
        assert serialize_model(again) == text
        assert model_hash(again) == model_hash(model)


def test_hash_distinguishes_models(ordentlich_half, bsc_black_hole):
    assert model_hash(ordentlich_half) != model_hash(bsc_black_hole)


def test_json_syntax_error_has_position():
    broken = GOOD.replace('"symbols": 2,', '"symbols": 2')
    with pytest.raises(ModelFormatError) as info:
        parse_model(broken)
    assert info.value.line == 6
    assert info.value.column is not None
    assert str(info.value).startswith("line 6, column")


def test_decimal_coefficient_is_located():
    text = GOOD.replace('"1/2", "1/2"', '"1/2", "0.5"')
    with pytest.raises(ModelFormatError) as info:
        parse_model(text)
    assert info.value.line == 8


@pytest.mark.parametrize("edit", [
    lambda d: d.pop("phi"),
    lambda d: d.update(format="other"),
    lambda d: d.update(version=2),
    lambda d: d.update(states=True),
    lambda d: d.update(trunc_len=-1),
    lambda d: d.update(states=3),
    lambda d: d.update(phi=[0, "1"]),
    lambda d: d["delta"][0].__setitem__(0, []),
    lambda d: d["delta"][0].__setitem__(0, ["1/2", "0/1", "0/1"]),
])
def test_schema_violations(edit):
    doc = json.loads(GOOD)
    edit(doc)
    with pytest.raises(ModelFormatError):
        parse_model(json.dumps(doc))


def test_top_level_must_be_object():
    with pytest.raises(ModelFormatError):
        parse_model("[1, 2]")


def test_stochastic_violation_is_validation_error():
    doc = json.loads(GOOD)
    doc["delta"][1] = [["1/2"], ["1/3"]]
    with pytest.raises(ModelValidationError):
        parse_model(json.dumps(doc))


def test_read_model_file(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(GOOD)
    assert read_model_file(str(path)) == parse_model(GOOD)
    with pytest.raises(ModelFormatError, match="could not read"):
        read_model_file(str(tmp_path / "missing.json"))
