import math

import pytest

import rvol


def test_version_and_commands():
    assert rvol.version().startswith("rvol")
    assert "signtable" in rvol.commands()


def test_einstein_vk():
    v = rvol.einstein_vk(5, 0.5)
    for k, x in enumerate(v):
        assert x == pytest.approx(0.5**k * math.comb(5, k), rel=1e-12)


def test_sign_tables():
    assert rvol.sign_Fk(5, 1, 1) == ("positive definite", 0)
    assert rvol.sign_Fk(6, 4, 1, round_sphere=True) == ("negative semi-definite", 7)
    assert rvol.sign_V(4, 1)[0] == "positive definite"
    assert rvol.sign_V(6, 1)[0] == "negative definite"


def test_run_records_and_report():
    rec = rvol.run("rv", model="hyperbolic4")
    assert rec["payload"]["V"] == pytest.approx(4 * math.pi**2 / 3, rel=1e-12)
    assert rec["payload"]["geodcomp"]["status"] == "PASS"
    again = rvol.run("rv", model="hyperbolic4")
    assert again["payload"] == rec["payload"]
    assert again["config_hash"] == rec["config_hash"]
    text = rvol.report([rec])
    assert "Volume identities" in text
    assert text == rvol.report([again])


def test_config():
    canon = rvol.canonical_config("n = 05\nmodel = sphere\ncommand = vk\n")
    assert canon == "command = vk\nmodel = sphere\nn = 5\n"
    assert rvol.config_hash(canon) == rvol.config_hash("command=vk\nn=5\nmodel=sphere")


def test_errors():
    with pytest.raises(rvol.Error) as e:
        rvol.run("hessian", model="sphere", n=4, k=2)
    assert e.value.args[0] == "ConfigInvalid"
    with pytest.raises(rvol.Error):
        rvol.canonical_config("bogus = 1\n")
