import csv
import io
import json

import numpy as np
import pytest

from spectral_percept import spectrogram as S
from spectral_percept.audio import AudioClip, load_wav, write_wav
from spectral_percept.cli import main
from spectral_percept.metrics import ms_ssim
from spectral_percept.signals import music_like, tone


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def wavs(tmp_path):
    paths = {}
    for name, clip in {
        "tone": tone(500.0),
        "music": music_like(seed=3),
        "silent": AudioClip(np.zeros(67328), 16000),
    }.items():
        paths[name] = tmp_path / f"{name}.wav"
        write_wav(clip, paths[name])
    return paths


def test_spectrogram_command(capsys, tmp_path, wavs):
    out = tmp_path / "music.sgram"
    code, stdout, _ = run(capsys, "spectrogram", wavs["music"], out)
    assert code == 0
    info = json.loads(stdout)
    assert (info["height"], info["width"]) == (256, 256)
    spec = S.load_sgram(out)
    assert spec.shape == (256, 256)
    assert (info["log_lo"], info["log_hi"]) == (spec.log_lo, spec.log_hi)


def test_spectrogram_resamples_other_rates(capsys, tmp_path):
    src = tmp_path / "hi.wav"
    write_wav(tone(440.0, seconds=1.0, sample_rate=48000), src)
    code, _, _ = run(capsys, "spectrogram", src, tmp_path / "hi.sgram", "--frames", "64")
    assert code == 0
    assert S.load_sgram(tmp_path / "hi.sgram").shape == (256, 64)


def test_silent_clip(capsys, tmp_path, wavs):
    out = tmp_path / "s.sgram"
    assert run(capsys, "spectrogram", wavs["silent"], out)[0] == 0
    assert not S.load_sgram(out).values.any()


def test_missing_input(capsys, tmp_path):
    out = tmp_path / "never.sgram"
    code, stdout, err = run(capsys, "spectrogram", tmp_path / "nope.wav", out)
    assert code != 0 and "error" in err and stdout == ""
    assert not out.exists()


def test_compare_identity_and_perturbation(capsys, tmp_path, wavs):
    ref = tmp_path / "ref.sgram"
    run(capsys, "spectrogram", wavs["music"], ref)
    spec = S.load_sgram(ref)
    delta = np.float32(0.25)
    vals = spec.values.copy()
    vals[100, 50] = vals[100, 50] + delta if vals[100, 50] < 0.5 else vals[100, 50] - delta
    actual = float(vals[100, 50]) - float(spec.values[100, 50])
    deg = tmp_path / "deg.sgram"
    S.save_sgram(S.Spectrogram(vals, spec.params, spec.log_lo, spec.log_hi), deg)

    code, stdout, _ = run(capsys, "compare", ref, ref)
    rec = json.loads(stdout)["records"][0]
    assert code == 0
    assert (rec["mse"], rec["nlpd"]) == (0.0, 0.0)
    assert rec["ms_ssim"] == pytest.approx(1.0, abs=1e-12)

    code, stdout, _ = run(capsys, "compare", ref, deg)
    rec = json.loads(stdout)["records"][0]
    assert rec["mse"] == actual**2 / vals.size
    assert rec["nlpd"] > 0 and rec["ms_ssim"] < 1


def test_compare_wav_against_sgram(capsys, tmp_path, wavs):
    sg = tmp_path / "m.sgram"
    run(capsys, "spectrogram", wavs["music"], sg)
    code, stdout, _ = run(capsys, "compare", wavs["music"], sg)
    rec = json.loads(stdout)["records"][0]
    assert code == 0 and rec["mse"] == 0.0


def test_compare_params_echo(capsys, wavs):
    _, stdout, _ = run(capsys, "compare", wavs["tone"], wavs["music"], "--hop", "260")
    params = json.loads(stdout)["params"]
    assert params["mel"] == {"sample_rate": 16000, "n_fft": 1024, "hop": 260, "n_mels": 256,
                             "eps": 0.001, "target_frames": 256}
    assert params["metrics"]["ms_ssim"]["window_size"] == 11
    assert params["metrics"]["nlpd"]["sigma"] == 0.17


def test_compare_manifest_order_and_csv(capsys, tmp_path, wavs, monkeypatch):
    manifest = tmp_path / "pairs.txt"
    pairs = [("tone", "music"), ("music", "music"), ("silent", "tone")]
    manifest.write_text("# ref deg\n" + "".join(f"{a}.wav {b}.wav\n" for a, b in pairs))
    for threads in ("1", "4"):
        monkeypatch.setenv("SPECTRAL_PERCEPT_THREADS", threads)
        code, stdout, _ = run(capsys, "compare", "--manifest", manifest)
        records = json.loads(stdout)["records"]
        assert code == 0
        assert [(r["ref"], r["deg"]) for r in records] == [
            (str(tmp_path / f"{a}.wav"), str(tmp_path / f"{b}.wav")) for a, b in pairs
        ]
    code, stdout, _ = run(capsys, "compare", "--manifest", manifest, "--csv")
    rows = list(csv.DictReader(io.StringIO(stdout)))
    assert list(rows[0]) == ["ref", "deg", "mse", "nlpd", "ms_ssim"]
    assert [float(r["mse"]) for r in rows] == [r["mse"] for r in records]


def test_compare_errors(capsys, tmp_path, wavs):
    small = tmp_path / "small.sgram"
    run(capsys, "spectrogram", wavs["tone"], small, "--frames", "128")
    assert run(capsys, "compare", wavs["tone"], small)[0] == 1
    assert run(capsys, "compare", wavs["tone"])[0] == 1
    junk = tmp_path / "junk.bin"
    junk.write_bytes(b"hello")
    assert run(capsys, "compare", junk, junk)[0] == 1
    monkey = tmp_path / "m.txt"
    monkey.write_text("a.wav\n")
    assert run(capsys, "compare", "--manifest", monkey)[0] == 1


def test_invert_writes_pcm16(capsys, tmp_path, wavs):
    sg, out = tmp_path / "t.sgram", tmp_path / "t.wav"
    run(capsys, "spectrogram", wavs["tone"], sg)
    code, stdout, _ = run(capsys, "invert", sg, out, "--gl-iters", "0")
    assert code == 0
    clip = load_wav(out)
    assert clip.sample_rate == 16000
    assert len(clip) == json.loads(stdout)["samples"] == 255 * 260
    assert out.read_bytes()[34:36] == (16).to_bytes(2, "little")


def test_invert_corrupt_sgram(capsys, tmp_path):
    bad = tmp_path / "bad.sgram"
    bad.write_bytes(b"SGRM\x01short")
    assert run(capsys, "invert", bad, tmp_path / "o.wav")[0] == 1


def test_round_trip_tone(capsys, tmp_path, wavs):
    a, w, b = tmp_path / "a.sgram", tmp_path / "r.wav", tmp_path / "b.sgram"
    run(capsys, "spectrogram", wavs["tone"], a)
    run(capsys, "invert", a, w, "--gl-iters", "32")
    run(capsys, "spectrogram", w, b)
    score = ms_ssim(S.load_sgram(a).values.astype(float), S.load_sgram(b).values.astype(float))
    assert score > 0.8


def test_fit_command(capsys, tmp_path):
    target = S.Spectrogram(np.random.default_rng(0).random((32, 32)), S.MelParams(n_mels=32, target_frames=32))
    tpath = tmp_path / "target.sgram"
    S.save_sgram(target, tpath)
    outs = []
    for i in range(2):
        out = tmp_path / f"fit{i}.sgram"
        code, stdout, _ = run(capsys, "fit", "--target", tpath, "--loss", "mse", "--seed", 5, "--out", out)
        assert code == 0
        outs.append((stdout, out.read_bytes()))
        summary = json.loads(stdout)
        assert summary["report"]["mse"] < 1e-4
        assert summary["final_loss"] <= summary["initial_loss"]
    assert outs[0] == outs[1]


def test_fit_unknown_loss(capsys, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["fit", "--target", str(tmp_path / "x.sgram"), "--loss", "ssim2"])
    assert exc.value.code != 0
    assert "usage" in capsys.readouterr().err


def test_entropy_command(capsys):
    code, stdout, _ = run(capsys, "entropy")
    assert code == 0 and stdout.strip() == "32768 bits, 0.5 bpp, 48:1"
    _, stdout, _ = run(capsys, "entropy", "--centers", 4)
    assert stdout.startswith("65536 bits, 1.0 bpp")
    assert run(capsys, "entropy", "--layers", 5, "--width", 256)[0] == 0
    code, _, err = run(capsys, "entropy", "--width", 100, "--layers", 4)
    assert code == 1 and "divisible" in err
    _, stdout, _ = run(capsys, "entropy", "--json")
    assert json.loads(stdout) == {"bits": 32768.0, "bpp": 0.5, "ratio": 48.0}


def test_gradcheck_command(capsys):
    code, stdout, _ = run(capsys, "gradcheck", "--metric", "mse", "--size", 16)
    assert code == 0 and json.loads(stdout)["p99_rel_error"] < 1e-8
    code, stdout, _ = run(capsys, "gradcheck", "--metric", "nlpd", "--size", 48)
    assert code == 0 and json.loads(stdout)["pass"]
    code, _, err = run(capsys, "gradcheck", "--metric", "msssim", "--size", 8)
    assert code == 1 and "window" in err


def test_bad_thread_env(capsys, monkeypatch, wavs):
    monkeypatch.setenv("SPECTRAL_PERCEPT_THREADS", "many")
    assert run(capsys, "compare", wavs["tone"], wavs["tone"])[0] == 1
