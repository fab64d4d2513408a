import pytest

from aleplate.config import Config, ConfigError, format_config, parse_config, parse_text


def test_defaults():
    cfg = parse_text("")
    assert (cfg.n1, cfg.n2, cfg.n3) == (32, 32, 33)
    assert (cfg.gamma, cfg.m0, cfg.M0, cfg.rbar, cfg.safety) == (1.4, 0.5, 2.0, 1.0, 0.5)
    assert cfg == Config()


def test_values_comments_and_types():
    cfg = parse_text("# run\nn1 = 16   # tangential\nT=0.25\nledgers = no\nfamily = plate\n")
    assert cfg.n1 == 16 and cfg.T == 0.25 and cfg.ledgers is False and cfg.family == "plate"
    assert cfg.law.m0 == 0.5


def test_round_trip(tmp_path):
    cfg = parse_text("n1 = 8\nn2 = 8\nn3 = 17\nseed = 7\namplitude = 1e-4\n")
    path = tmp_path / "c.txt"
    path.write_text(format_config(cfg))
    assert parse_config(path) == cfg


@pytest.mark.parametrize("text, pattern", [
    ("n1 = 16\nfoo = 1\n", "line 2: unknown key 'foo'"),
    ("T = 1\nT = 2\n", "line 2: duplicate key 'T'"),
    ("n3 = many\n", "line 1: cannot read n3"),
    ("just words\n", "line 1: expected"),
    ("\n\nm0 = 0\n", "line 3: .*positivity requirement"),
    ("M0 = 0.4\n", "line 1: M0"),
    ("gamma = 1\n", "gamma"),
    ("n1 = 7\n", "n1 must be even"),
    ("window = 10\n", "window must be odd"),
    ("family = vortex\n", "unknown family"),
])
def test_rejections_name_the_line(text, pattern):
    with pytest.raises(ConfigError, match=pattern):
        parse_text(text)


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        parse_config(tmp_path / "missing.txt")
