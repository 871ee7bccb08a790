import numpy as np
import pytest

from ltci.io import (
    ConfigError,
    CubeFormatError,
    decode_cube,
    encode_cube,
    format_table,
    parse_config,
    read_cube,
    write_cube,
    write_table,
)
from ltci.signal_model import (
    FreqPulseCube,
    MotionParams,
    RadarParams,
    RangePulseCube,
    Target,
    add_noise,
    range_ifft,
    synthesize_cube,
)

P = RadarParams(fc=4e8, fs=100e6, Br=25e6, PRF=500, M=8, K=16)


def noisy():
    return add_noise(synthesize_cube(P, [Target(1 + 1j, MotionParams([9.0, 2.0, 1.0]))]), 0.5, 1)


def test_round_trip_is_bit_exact(tmp_path):
    cube = noisy()
    path = tmp_path / "a.ltci"
    write_cube(path, cube, 0.5)
    back, s2 = read_cube(path)
    assert isinstance(back, FreqPulseCube)
    assert np.array_equal(back.data, cube.data)
    assert back.params == cube.params and s2 == 0.5
    assert path.stat().st_size == 61 + P.K * P.M * 16


def test_range_domain_flag():
    rc = range_ifft(noisy())
    back, _ = decode_cube(encode_cube(rc))
    assert isinstance(back, RangePulseCube)
    assert np.array_equal(back.data, rc.data)


def test_payload_is_pulse_major_little_endian():
    cube = noisy()
    raw = encode_cube(cube)[61:]
    first = np.frombuffer(raw[: 16 * P.K], dtype="<c16")
    assert np.array_equal(first, cube.data[:, 0])
    assert raw[:8] == np.float64(cube.data[0, 0].real).astype("<f8").tobytes()


def test_full_scale_file_size():
    p = RadarParams(fc=28e9, fs=491.52e6, Br=400e6, PRF=1905, M=512, K=2048)
    buf = encode_cube(FreqPulseCube(np.zeros((p.K, p.M)), p))
    assert len(buf) == 61 + 2048 * 512 * 16


@pytest.mark.parametrize("mutate", [
    lambda b: b"XXXX" + b[4:],
    lambda b: b[:4] + (2).to_bytes(4, "little") + b[8:],
    lambda b: b[:8] + bytes([7]) + b[9:],
    lambda b: b[:-1],
    lambda b: b[:20],
])
def test_corrupt_files_rejected(mutate):
    with pytest.raises(CubeFormatError):
        decode_cube(mutate(encode_cube(noisy())))


CONFIG = """
# scene
[radar]
fc = 4e8
fs = 100e6
Br = 25e6
PRF = 500
M = 8
K = 16
sigma2 = 0.25
seed = 4

[target]
amplitude = 1+0.5j
range = 9
velocity = 2
accel = 1

[target]
range = 12
velocity = -1
accel = 0

[space]
velocity_min = -5
velocity_max = 5
accel_min = -20
accel_max = 20
alpha = 0.5, 0.5
roi_start = 2
roi_stop = 10

[detector]
name = ds-grft
p_fa = 1e-3
project = yes

[bench]
detectors = fd-grft, ds-grft
"""


def test_parse_config():
    cfg = parse_config(CONFIG)
    assert cfg.radar_params() == P
    tg = cfg.target_list()
    assert len(tg) == 2 and tg[0].amplitude == 1 + 0.5j and tg[1].amplitude == 1.0
    assert tg[0].motion.c == (9.0, 2.0, 1.0)
    assert cfg.bounds() == ((-5.0, 5.0), (-20.0, 20.0))
    assert list(cfg.roi()) == list(range(2, 10))
    assert cfg.space["alpha"] == (0.5, 0.5)
    assert cfg.detector["project"] is True
    assert cfg.bench["detectors"] == ("fd-grft", "ds-grft")


@pytest.mark.parametrize("text, line, column", [
    ("[radar]\nfc = 1\n[nonsense]\n", 3, 2),
    ("[radar]\n  bogus = 3\n", 2, 3),
    ("[radar]\nM = eight\n", 2, 5),
    ("[radar]\nM = 8\nM = 16\n", 3, 1),
    ("fc = 1\n", 1, 1),
    ("[radar]\njust words\n", 2, 1),
    ("[radar\n", 1, 6),
])
def test_config_errors_carry_position(text, line, column):
    with pytest.raises(ConfigError) as e:
        parse_config(text)
    assert e.value.line == line
    assert e.value.column == column
    assert f"line {line}" in str(e.value)


def test_semantic_config_errors():
    with pytest.raises(ConfigError):
        parse_config("[radar]\nfc = 1e9\n").radar_params()
    with pytest.raises(ConfigError):
        parse_config("[target]\nrange = 1\n").target_list()
    with pytest.raises(ConfigError):
        parse_config("[target]\nrange = 1\nvelocity = 1\njerk = 2\n").target_list()
    with pytest.raises(ConfigError):
        parse_config("[space]\nvelocity_min = 1\n").bounds()
    with pytest.raises(ConfigError):
        parse_config("[space]\nvelocity_min = 1\nvelocity_max = 2\nroi_start = 5\nroi_stop = 5\n").roi()


def test_tables(tmp_path):
    text = format_table(["a", "b"], [[1, 0.5], ["x", np.float64(2.0)]])
    assert text == "a,b\n1,0.5\nx,2.0\n"
    path = tmp_path / "t.csv"
    write_table(path, ["a"], [[1]])
    assert path.read_text() == "a\n1\n"
    assert not list(tmp_path.glob(".t.csv.*"))
