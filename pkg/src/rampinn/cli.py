"""Experiment command line: generate, train, eval, ablate, zero-shot.

Every command writes a resolved-config snapshot (JSON, no timestamps) into
its output directory so a run can be reproduced byte-identically in
single-threaded mode.  Exit codes: 0 success, 1 usage error, 2 data or
validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AllZeroSignal, NonFiniteGradient, RamPinnError
from .external import ExternalFormatError, parse_external_spectrum
from .hilbert import classical_kk_retrieve
from .metrics import PeakParams, score_pair, write_metrics_csv
from .model import (
    ArrayDataset,
    RamPinnConfig,
    RamPinnModel,
    dataset_from_samples,
    train,
)
from .reports import save_overlay_svg, save_sweep_plot, save_traces_csv
from .spectra import Spectrum, WavenumberGrid, default_grid
from .synth import GenConfig, generate_dataset, read_dataset, write_dataset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _limit_threads(threads: int) -> None:
    if threads and threads > 0:
        try:
            from threadpoolctl import threadpool_limits

            threadpool_limits(limits=threads)
        except ImportError:
            pass


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return data


def _merge(args: argparse.Namespace, file_cfg: dict, key: str, default):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in file_cfg:
        return file_cfg[key]
    return default


def _resolve_seed(seed: int) -> int:
    env = os.environ.get("RAMPINN_SEED")
    if env is not None:
        return int(env)
    return seed


def _write_resolved(out_dir: Path, command: str, resolved: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {"command": command, "version": __version__, "resolved": resolved}
    with open(out_dir / "config.resolved.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _normalized_row(values: np.ndarray) -> np.ndarray:
    peak = float(np.max(values))
    return values / peak if peak > 0 else values


# ---------------------------------------------------------------------------
# generate


def _cmd_generate(args) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = GenConfig(
        seed=_resolve_seed(int(_merge(args, file_cfg, "seed", 0))),
        n_samples=int(_merge(args, file_cfg, "n", 2000)),
        noise_range=(
            float(_merge(args, file_cfg, "noise_min", 0.0005)),
            float(_merge(args, file_cfg, "noise_max", 0.003)),
        ),
        peak_count_range=(
            int(_merge(args, file_cfg, "peaks_min", 1)),
            int(_merge(args, file_cfg, "peaks_max", 25)),
        ),
        nrb_kind_probability=float(_merge(args, file_cfg, "sigmoid_prob", 0.5)),
        max_poly_degree=int(_merge(args, file_cfg, "max_poly_degree", 4)),
        injected_artifact_peaks=int(_merge(args, file_cfg, "inject_peaks", 0)),
    )
    out = Path(_merge(args, file_cfg, "out", "dataset.jsonl"))
    out.parent.mkdir(parents=True, exist_ok=True)
    threads = int(_merge(args, file_cfg, "threads", 1))
    _limit_threads(threads)
    samples = generate_dataset(cfg, threads=threads)
    count = write_dataset(samples, out)
    manifest = {
        "seed": cfg.seed,
        "count": count,
        "config": {
            "n_samples": cfg.n_samples,
            "peak_count_range": list(cfg.peak_count_range),
            "noise_range": list(cfg.noise_range),
            "nrb_kind_probability": cfg.nrb_kind_probability,
            "max_poly_degree": cfg.max_poly_degree,
            "injected_artifact_peaks": cfg.injected_artifact_peaks,
            "grid_length": cfg.grid_length,
        },
    }
    with open(out.with_suffix(out.suffix + ".manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_resolved(out.parent, "generate", {**manifest, "out": str(out), "threads": threads})
    if count == 0:
        print(f"warning: wrote empty dataset to {out}", file=sys.stderr)
    else:
        print(f"wrote {count} samples to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train


def _train_config_from_args(args, file_cfg) -> RamPinnConfig:
    return RamPinnConfig(
        input_length=int(_merge(args, file_cfg, "input_length", 1000)),
        use_attention=not bool(_merge(args, file_cfg, "no_attention", False)),
        width_multiplier=float(_merge(args, file_cfg, "width_mult", 1.0)),
        lambda_data=float(_merge(args, file_cfg, "lambda_data", 10.0)),
        lambda_kk=float(_merge(args, file_cfg, "lambda_kk", 1.0)),
        lambda_smooth=float(_merge(args, file_cfg, "lambda_smooth", 10.0)),
        lr=float(_merge(args, file_cfg, "lr", 1e-3)),
        batch_size=int(_merge(args, file_cfg, "batch_size", 32)),
        max_epochs=int(_merge(args, file_cfg, "max_epochs", 200)),
        patience=int(_merge(args, file_cfg, "patience", 20)),
        clip_norm=float(_merge(args, file_cfg, "clip_norm", 1.0)),
        seed=_resolve_seed(int(_merge(args, file_cfg, "seed", 0))),
    )


def _cmd_train(args) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = _train_config_from_args(args, file_cfg)
    dataset_path = _merge(args, file_cfg, "dataset", None)
    if dataset_path is None:
        raise UsageError("train requires --dataset")
    out_dir = Path(_merge(args, file_cfg, "out_dir", "train_out"))
    threads = int(_merge(args, file_cfg, "threads", 1))
    _limit_threads(threads)
    train_size = _merge(args, file_cfg, "train_size", None)
    samples = read_dataset(dataset_path)
    if not samples:
        print(f"error: dataset {dataset_path} is empty", file=sys.stderr)
        return EXIT_DATA
    if train_size is not None:
        samples = samples[: int(train_size)]
    data = dataset_from_samples(samples, with_labels=cfg.lambda_data > 0)
    model = RamPinnModel(cfg)
    _write_resolved(
        out_dir,
        "train",
        {
            "dataset": str(dataset_path),
            "train_size": len(samples),
            "threads": threads,
            "model": cfg.to_dict(),
        },
    )
    try:
        history = train(model, data, None, cfg)
    except NonFiniteGradient as err:
        history = getattr(err, "history", None)
        if history is not None:
            history.to_csv(out_dir / "history.csv")
        model.save(out_dir / "checkpoint.rpnn")
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    history.to_csv(out_dir / "history.csv")
    model.save(out_dir / "checkpoint.rpnn")
    last = history.epochs[-1]
    print(
        f"trained {len(history.epochs)} epochs (best {history.best_epoch}); "
        f"final val loss {last['L_total_val']:.6g}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval


def _predictions(model, samples):
    x = np.stack([s.triple.cars.values for s in samples]).astype(np.float32)
    raman, nrb = model.predict_arrays(x)
    return raman, nrb


def _cmd_eval(args) -> int:
    file_cfg = _load_config_file(args.config)
    checkpoint = _merge(args, file_cfg, "checkpoint", None)
    dataset_path = _merge(args, file_cfg, "dataset", None)
    if checkpoint is None or dataset_path is None:
        raise UsageError("eval requires --checkpoint and --dataset")
    out_dir = Path(_merge(args, file_cfg, "out_dir", "eval_out"))
    plot_limit = int(_merge(args, file_cfg, "plot_limit", 8))
    classical = bool(_merge(args, file_cfg, "classical_kk", False))
    threads = int(_merge(args, file_cfg, "threads", 1))
    _limit_threads(threads)
    model = RamPinnModel.load(checkpoint)
    samples = read_dataset(dataset_path)
    if not samples:
        print(f"error: dataset {dataset_path} is empty", file=sys.stderr)
        return EXIT_DATA
    grid = samples[0].triple.cars.grid
    raman_pred, nrb_pred = _predictions(model, samples)
    params = PeakParams()
    scores = []
    classical_corr = []
    for i, sample in enumerate(samples):
        pred = Spectrum(grid, _normalized_row(raman_pred[i]))
        scores.append(score_pair(pred, sample.triple.raman, params))
        if classical:
            est = classical_kk_retrieve(sample.triple.cars, sample.triple.nrb)
            corr = float(np.corrcoef(est.values, sample.triple.raman.values)[0, 1])
            classical_corr.append(corr)
    extra = {"classical_pearson": classical_corr} if classical else None
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = write_metrics_csv(out_dir / "metrics.csv", scores, params, extra)
    for i in range(min(plot_limit, len(samples))):
        traces = {
            "cars": samples[i].triple.cars.values,
            "raman_true": samples[i].triple.raman.values,
            "raman_pred": _normalized_row(raman_pred[i]),
            "nrb_pred": _normalized_row(nrb_pred[i]),
        }
        save_traces_csv(out_dir / f"sample_{i:04d}.csv", grid.points, traces)
        save_overlay_svg(out_dir / f"sample_{i:04d}.svg", grid.points, traces, f"sample {i}")
    _write_resolved(
        out_dir,
        "eval",
        {
            "checkpoint": str(checkpoint),
            "dataset": str(dataset_path),
            "plot_limit": plot_limit,
            "classical_kk": classical,
            "threads": threads,
        },
    )
    mean_mse = float(np.mean([s.mse for s in scores]))
    print(f"evaluated {len(samples)} samples: mean MSE {mean_mse:.6g}, "
          f"micro F1 {summary.micro['f1']:.4g}")
    if classical and classical_corr:
        frac = float(np.mean([c > 0.9 for c in classical_corr]))
        print(f"classical baseline: median corr {np.median(classical_corr):.4g}, "
              f"fraction > 0.9: {frac:.3g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# ablate


def _test_mse(model, test_data: ArrayDataset) -> float:
    raman, _ = model.predict_arrays(test_data.x)
    errs = []
    for i in range(len(test_data)):
        pred = _normalized_row(raman[i])
        errs.append(float(np.mean((pred - test_data.y[i].astype(np.float64)) ** 2)))
    return float(np.mean(errs))


def _cmd_ablate(args) -> int:
    file_cfg = _load_config_file(args.config)
    dataset_path = _merge(args, file_cfg, "dataset", None)
    test_path = _merge(args, file_cfg, "test_dataset", None)
    if dataset_path is None or test_path is None:
        raise UsageError("ablate requires --dataset and --test-dataset")
    sweep = _merge(args, file_cfg, "sweep", "kk")
    points = int(_merge(args, file_cfg, "points", 10))
    seeds = int(_merge(args, file_cfg, "seeds", 3))
    out_dir = Path(_merge(args, file_cfg, "out_dir", "ablate_out"))
    threads = int(_merge(args, file_cfg, "threads", 1))
    _limit_threads(threads)
    base_cfg = _train_config_from_args(args, file_cfg)
    train_size = _merge(args, file_cfg, "train_size", None)
    train_samples = read_dataset(dataset_path)
    test_samples = read_dataset(test_path)
    if not train_samples or not test_samples:
        print("error: empty dataset", file=sys.stderr)
        return EXIT_DATA
    if train_size is not None:
        train_samples = train_samples[: int(train_size)]
    test_data = dataset_from_samples(test_samples)
    if sweep == "kk":
        values = np.linspace(0.0, 1.0, points)
    elif sweep == "smooth":
        values = np.linspace(0.0, 10.0, points)
    elif sweep == "data":
        values = np.round(np.linspace(0, len(train_samples), points)).astype(int)
    else:
        raise UsageError(f"unknown sweep {sweep!r} (choose kk, smooth or data)")
    rows = []
    for value in values:
        per_seed = []
        for seed_offset in range(seeds):
            seed = base_cfg.seed + seed_offset
            if sweep == "kk":
                cfg = RamPinnConfig(**{**base_cfg.to_dict(), "lambda_kk": float(value), "seed": seed})
                data = dataset_from_samples(train_samples)
            elif sweep == "smooth":
                cfg = RamPinnConfig(**{**base_cfg.to_dict(), "lambda_smooth": float(value), "seed": seed})
                data = dataset_from_samples(train_samples)
            else:
                n = int(value)
                if n == 0:
                    cfg = RamPinnConfig(**{**base_cfg.to_dict(), "lambda_data": 0.0, "seed": seed})
                    data = dataset_from_samples(train_samples, with_labels=False)
                else:
                    cfg = RamPinnConfig(**{**base_cfg.to_dict(), "seed": seed})
                    data = dataset_from_samples(train_samples[:n])
            model = RamPinnModel(cfg)
            train(model, data, None, cfg)
            per_seed.append(_test_mse(model, test_data))
        rows.append((float(value), float(np.mean(per_seed)), float(np.std(per_seed)), per_seed))
    out_dir.mkdir(parents=True, exist_ok=True)
    sweep_csv = out_dir / "sweep.csv"
    with open(sweep_csv, "w", encoding="utf-8") as fh:
        fh.write("sweep_value,test_mse_mean,test_mse_std"
                 + "".join(f",seed{j}" for j in range(seeds)) + "\n")
        for value, mean, std, per_seed in rows:
            fh.write(f"{value:.10g},{mean:.10g},{std:.10g}"
                     + "".join(f",{v:.10g}" for v in per_seed) + "\n")
    save_sweep_plot(
        out_dir / "sweep.svg",
        [r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows],
        xlabel={"kk": "lambda_KK", "smooth": "lambda_smooth", "data": "train samples"}[sweep],
    )
    _write_resolved(
        out_dir,
        "ablate",
        {
            "dataset": str(dataset_path),
            "test_dataset": str(test_path),
            "sweep": sweep,
            "points": points,
            "seeds": seeds,
            "train_size": len(train_samples),
            "threads": threads,
            "model": base_cfg.to_dict(),
        },
    )
    print(f"wrote sweep with {len(rows)} rows to {sweep_csv}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# zero-shot


def _cmd_zero_shot(args) -> int:
    file_cfg = _load_config_file(args.config)
    checkpoint = _merge(args, file_cfg, "checkpoint", None)
    if checkpoint is None:
        raise UsageError("zero-shot requires --checkpoint")
    inputs = list(args.inputs or file_cfg.get("inputs", []))
    if not inputs:
        raise UsageError("zero-shot requires at least one spectrum file")
    out_dir = Path(_merge(args, file_cfg, "out_dir", "zero_shot_out"))
    threads = int(_merge(args, file_cfg, "threads", 1))
    _limit_threads(threads)
    model = RamPinnModel.load(checkpoint)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = PeakParams()
    rows = []
    for input_path in inputs:
        spec = parse_external_spectrum(input_path).ascending
        name = Path(input_path).stem
        w = spec.wavenumbers
        axis01 = (w - w[0]) / (w[-1] - w[0])
        grid_len = len(w)
        # resample the measured spectrum onto the model's native grid
        native_axis = default_grid(model.config.input_length).points
        cars_norm = _normalized_row(spec.cars.astype(np.float64))
        native_cars = np.interp(native_axis, axis01, cars_norm)
        raman_native, nrb_native = model.predict_arrays(native_cars.astype(np.float32))
        raman_back = np.interp(axis01, native_axis, raman_native[0])
        nrb_back = np.interp(axis01, native_axis, nrb_native[0])
        raman_back = _normalized_row(raman_back)
        nrb_back = _normalized_row(nrb_back)
        traces = {"cars": cars_norm, "raman_pred": raman_back, "nrb_pred": nrb_back}
        row = {"molecule": name, "n_points": grid_len}
        if spec.raman_truth is not None:
            grid = WavenumberGrid(grid_len)
            truth = Spectrum(grid, _normalized_row(spec.raman_truth.astype(np.float64)))
            pred = Spectrum(grid, raman_back)
            score = score_pair(pred, truth, params)
            r = score.report
            row.update(
                {
                    "mse": score.mse,
                    "psnr": score.psnr,
                    "precision": r.precision,
                    "recall": r.recall,
                    "f1": r.f1,
                    "mle": r.mle_norm,
                    "rie_mean": r.rie_mean(params.intensity_floor),
                }
            )
            traces["raman_true"] = truth.values
        else:
            print(f"note: {name}: no truth column, metrics omitted", file=sys.stderr)
        rows.append(row)
        save_traces_csv(out_dir / f"{name}.csv", w, traces)
        save_overlay_svg(out_dir / f"{name}.svg", w, traces, name, xlabel="wavenumber")
    report = out_dir / "zero_shot.csv"
    keys = ["molecule", "n_points", "mse", "psnr", "precision", "recall", "f1", "mle", "rie_mean"]
    with open(report, "w", encoding="utf-8") as fh:
        fh.write("# zero-shot report: single checkpoint selected by validation loss\n")
        fh.write(",".join(keys) + "\n")
        for row in rows:
            fh.write(",".join(str(row.get(k, "")) for k in keys) + "\n")
    _write_resolved(
        out_dir,
        "zero-shot",
        {"checkpoint": str(checkpoint), "inputs": [str(p) for p in inputs], "threads": threads},
    )
    print(f"wrote zero-shot report for {len(rows)} spectra to {report}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring


def _add_train_flags(p: _Parser) -> None:
    p.add_argument("--input-length", dest="input_length", type=int)
    p.add_argument("--lambda-data", dest="lambda_data", type=float)
    p.add_argument("--lambda-kk", dest="lambda_kk", type=float)
    p.add_argument("--lambda-smooth", dest="lambda_smooth", type=float)
    p.add_argument("--width-mult", dest="width_mult", type=float)
    p.add_argument("--no-attention", dest="no_attention", action="store_const", const=True)
    p.add_argument("--lr", dest="lr", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--patience", dest="patience", type=int)
    p.add_argument("--clip-norm", dest="clip_norm", type=float)
    p.add_argument("--seed", dest="seed", type=int)
    p.add_argument("--train-size", dest="train_size", type=int)


def build_parser() -> _Parser:
    parser = _Parser(prog="rampinn", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("generate", help="generate a synthetic dataset")
    p.add_argument("--config", type=str)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=str)
    p.add_argument("--noise-min", dest="noise_min", type=float)
    p.add_argument("--noise-max", dest="noise_max", type=float)
    p.add_argument("--peaks-min", dest="peaks_min", type=int)
    p.add_argument("--peaks-max", dest="peaks_max", type=int)
    p.add_argument("--sigmoid-prob", dest="sigmoid_prob", type=float)
    p.add_argument("--max-poly-degree", dest="max_poly_degree", type=int)
    p.add_argument("--inject-peaks", dest="inject_peaks", type=int)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("train", help="train the reconstruction network")
    p.add_argument("--config", type=str)
    p.add_argument("--dataset", type=str)
    p.add_argument("--out-dir", dest="out_dir", type=str)
    p.add_argument("--threads", type=int)
    _add_train_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--config", type=str)
    p.add_argument("--checkpoint", type=str)
    p.add_argument("--dataset", type=str)
    p.add_argument("--out-dir", dest="out_dir", type=str)
    p.add_argument("--plot-limit", dest="plot_limit", type=int)
    p.add_argument("--classical-kk", dest="classical_kk", action="store_const", const=True)
    p.add_argument("--threads", type=int)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", help="sweep a loss weight or the training-set size")
    p.add_argument("--config", type=str)
    p.add_argument("--dataset", type=str)
    p.add_argument("--test-dataset", dest="test_dataset", type=str)
    p.add_argument("--sweep", type=str, choices=("kk", "smooth", "data"))
    p.add_argument("--points", type=int)
    p.add_argument("--seeds", type=int)
    p.add_argument("--out-dir", dest="out_dir", type=str)
    p.add_argument("--threads", type=int)
    _add_train_flags(p)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("zero-shot", help="predict external spectrum files")
    p.add_argument("--config", type=str)
    p.add_argument("--checkpoint", type=str)
    p.add_argument("--out-dir", dest="out_dir", type=str)
    p.add_argument("--threads", type=int)
    p.add_argument("inputs", nargs="*", type=str)
    p.set_defaults(func=_cmd_zero_shot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help()
            return EXIT_USAGE
        return args.func(args)
    except SystemExit as err:  # argparse --help / --version
        return int(err.code or 0)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (NonFiniteGradient, AllZeroSignal) as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ExternalFormatError, RamPinnError, ValueError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
