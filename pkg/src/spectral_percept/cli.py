"""Command-line entry point: ``spectral-percept <command> ...``.

Results go to stdout (JSON unless stated otherwise), diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from spectral_percept import audio, gradients as G, metrics as M, quantization as Q
from spectral_percept import spectrogram as S
from spectral_percept.fit import LOSSES, FitConfig, fit_report, fit_spectrogram

THREADS_ENV = "SPECTRAL_PERCEPT_THREADS"
CSV_FIELDS = ("ref", "deg", "mse", "nlpd", "ms_ssim")


class CliError(Exception):
    pass


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")


def _mel_params(args) -> S.MelParams:
    return S.MelParams(
        sample_rate=args.sample_rate,
        n_fft=args.n_fft,
        hop=args.hop,
        n_mels=args.n_mels,
        eps=args.eps,
        target_frames=args.frames,
    )


def _add_mel_flags(p: argparse.ArgumentParser) -> None:
    d = S.MelParams()
    g = p.add_argument_group("mel-spectrogram parameters")
    g.add_argument("--sample-rate", type=int, default=d.sample_rate)
    g.add_argument("--n-fft", type=int, default=d.n_fft)
    g.add_argument("--hop", type=int, default=d.hop)
    g.add_argument("--n-mels", type=int, default=d.n_mels)
    g.add_argument("--eps", type=float, default=d.eps)
    g.add_argument("--frames", type=int, default=d.target_frames, help="output width in frames")


def spectrogram_from_wav(path, params: S.MelParams) -> S.Spectrogram:
    clip = audio.load_wav(path)
    if clip.sample_rate != params.sample_rate:
        clip = audio.resample(clip, params.sample_rate)
    return S.mel_spectrogram(clip, params)


def load_any(path, params: S.MelParams) -> S.Spectrogram:
    """Read an SGRAM or a WAV (analysed with ``params``), sniffing magic bytes first."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            head = fh.read(12)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    if head[:4] == S.SGRAM_MAGIC:
        return S.load_sgram(path)
    if head[:4] == b"RIFF":
        return spectrogram_from_wav(path, params)
    suffix = path.suffix.lower()
    if suffix in (".sgram", ".sgrm"):
        return S.load_sgram(path)
    if suffix == ".wav":
        return spectrogram_from_wav(path, params)
    raise CliError(f"{path}: neither a WAV nor an SGRAM file")


# --------------------------------------------------------------------------- #
# commands


def cmd_spectrogram(args) -> int:
    spec = spectrogram_from_wav(args.input, _mel_params(args))
    S.save_sgram(spec, args.output)
    h, w = spec.shape
    _emit({"height": h, "width": w, "log_lo": spec.log_lo, "log_hi": spec.log_hi, "output": str(args.output)})
    return 0


def _metric_params_echo() -> dict:
    ms = M.MsSsimParams()
    nl = M.NlpdParams()
    return {
        "ms_ssim": {
            "max_scales": ms.scales,
            "scale_weights": list(ms.scale_weights),
            "window_size": ms.window_size,
            "window_sigma": ms.window_sigma,
            "c1": ms.c1,
            "c2": ms.c2,
            "note": "scales truncated to those the grid supports; leading weights renormalized",
        },
        "nlpd": {
            "max_levels": nl.levels,
            "sigma": nl.sigmas[0],
            "norm_filter": M.default_norm_filter().tolist(),
            "exponent": nl.exponent,
        },
    }


def _read_manifest(path) -> list[tuple[str, str]]:
    base = Path(path).parent
    pairs = []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cols = [c.strip() for c in (line.split(",") if "," in line else line.split())]
            if len(cols) != 2:
                raise CliError(f"{path}:{lineno}: expected two columns, got {len(cols)}")
            pairs.append(tuple(str(p if Path(p).is_absolute() else base / p) for p in cols))
    return pairs


def compare_pair(ref, deg, params: S.MelParams) -> dict:
    a = load_any(ref, params)
    b = load_any(deg, params)
    if a.shape != b.shape:
        raise CliError(f"dimension mismatch: {ref} is {a.shape}, {deg} is {b.shape}")
    report = M.compare(a.values, b.values)
    values = report.as_dict()
    if not all(np.isfinite(v) for v in values.values()):
        raise CliError(f"non-finite metric for {ref} vs {deg}")
    return {"ref": str(ref), "deg": str(deg), **values}


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise CliError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
        return max(1, n)
    return os.cpu_count() or 1


def cmd_compare(args) -> int:
    params = _mel_params(args)
    if args.manifest:
        if args.ref or args.deg:
            raise CliError("give either REF DEG or --manifest, not both")
        pairs = _read_manifest(args.manifest)
    elif args.ref and args.deg:
        pairs = [(args.ref, args.deg)]
    else:
        raise CliError("compare needs REF and DEG, or --manifest")

    with ThreadPoolExecutor(max_workers=min(_threads(), max(1, len(pairs)))) as pool:
        records = list(pool.map(lambda p: compare_pair(p[0], p[1], params), pairs))

    if args.csv:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for r in records:
            writer.writerow({k: (repr(r[k]) if isinstance(r[k], float) else r[k]) for k in CSV_FIELDS})
        sys.stdout.write(buf.getvalue())
    else:
        _emit({"params": {"mel": asdict(params), "metrics": _metric_params_echo()}, "records": records})
    return 0


def cmd_invert(args) -> int:
    spec = S.load_sgram(args.input)
    mag = S.invert_mel(spec)
    clip = S.griffin_lim(
        mag,
        spec.params.n_fft,
        spec.params.hop,
        iters=args.gl_iters,
        seed=args.seed,
        sample_rate=spec.params.sample_rate,
        init=args.init,
    )
    audio.write_wav(clip, args.output)
    _emit({"samples": len(clip), "sample_rate": clip.sample_rate, "duration": clip.duration, "output": str(args.output)})
    return 0


def cmd_fit(args) -> int:
    target = S.load_sgram(args.target)
    cfg = FitConfig(loss=args.loss, max_steps=args.steps, seed=args.seed,
                    initial_step=args.initial_step, tolerance=args.tolerance)
    values = target.values.astype(float)
    result = fit_spectrogram(values, cfg)
    report = fit_report(result, values)
    if args.out:
        S.save_sgram(S.Spectrogram(result.final, target.params, target.log_lo, target.log_hi), args.out)
    _emit({
        "loss": cfg.loss,
        "seed": cfg.seed,
        "steps_taken": result.steps_taken,
        "converged": result.converged,
        "initial_loss": result.loss_trajectory[0],
        "final_loss": result.loss_trajectory[-1],
        "report": report.as_dict(),
    })
    return 0


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:g}"


def cmd_entropy(args) -> int:
    inp = Q.EntropyInputs(W=args.width, H=args.height, n=args.layers, m=args.channels, L=args.centers)
    bits = Q.entropy_bound(inp)
    bpp = Q.bits_per_pixel(bits, inp.W, inp.H)
    ratio = Q.compression_ratio(bpp)
    if args.json:
        _emit({"bits": bits, "bpp": bpp, "ratio": ratio})
    else:
        print(f"{_fmt(bits)} bits, {bpp!r} bpp, {_fmt(ratio)}:1")
    return 0


_DEFAULT_H = {"mse": 1e-5, "msssim": 1e-4, "nlpd": 1e-4}
GRADCHECK_TOL = 1e-4


def cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    shape = (args.size, args.size)
    if args.metric == "msssim":
        params = M.MsSsimParams.for_shape(shape)
    elif args.metric == "nlpd":
        params = M.NlpdParams.for_shape(shape)
    else:
        params = None
    a, b = rng.random(shape), rng.random(shape)
    metric, grad = G.METRICS[args.metric], G.GRADIENTS[args.metric]
    if params is not None:
        f = lambda x, y: metric(x, y, params)  # noqa: E731
        analytic = grad(a, b, params)
    else:
        f = metric
        analytic = grad(a, b)
    h = args.h if args.h is not None else _DEFAULT_H[args.metric]
    numeric = G.finite_diff_grad(f, a, b, h)
    err = G.relative_error(analytic, numeric)
    p99 = float(np.percentile(err, 99))
    ok = p99 < GRADCHECK_TOL
    _emit({"metric": args.metric, "size": args.size, "seed": args.seed, "h": h,
           "max_rel_error": float(err.max()), "p99_rel_error": p99, "pass": ok})
    return 0 if ok else 1


# --------------------------------------------------------------------------- #


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectral-percept",
        description="Perceptual metrics (MSE, MS-SSIM, NLPD) on log-mel spectrograms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrogram", help="WAV -> SGRAM")
    p.add_argument("input")
    p.add_argument("output")
    _add_mel_flags(p)
    p.set_defaults(func=cmd_spectrogram)

    p = sub.add_parser("compare", help="MSE / NLPD / MS-SSIM between WAV or SGRAM pairs")
    p.add_argument("ref", nargs="?")
    p.add_argument("deg", nargs="?")
    p.add_argument("--manifest", help="file with one 'ref deg' pair per line")
    p.add_argument("--csv", action="store_true", help="CSV instead of JSON")
    _add_mel_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("invert", help="SGRAM -> WAV via Griffin-Lim")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--gl-iters", type=int, default=32)
    p.add_argument("--init", choices=("zero", "frame", "random"), default="zero")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("fit", help="fit noise to a target SGRAM under a metric")
    p.add_argument("--target", required=True)
    p.add_argument("--loss", choices=sorted(LOSSES), default="mse")
    p.add_argument("--steps", type=int, default=FitConfig.max_steps)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--initial-step", type=float, default=FitConfig.initial_step)
    p.add_argument("--tolerance", type=float, default=FitConfig.tolerance)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    d = Q.EntropyInputs()
    p = sub.add_parser("entropy", help="latent entropy bound, bpp and compression ratio")
    p.add_argument("--width", type=int, default=d.W)
    p.add_argument("--height", type=int, default=d.H)
    p.add_argument("--layers", type=int, default=d.n)
    p.add_argument("--channels", type=int, default=d.m)
    p.add_argument("--centers", type=int, default=d.L)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference gradients on a random pair")
    p.add_argument("--metric", choices=("mse", "msssim", "nlpd"), required=True)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=float, default=None)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, audio.AudioError, S.SgramError, ValueError, OSError) as exc:
        print(f"spectral-percept {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
