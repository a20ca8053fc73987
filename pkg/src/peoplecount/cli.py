"""Command-line entry point for the whole pipeline."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import frames as fp
from .background import BackgroundModel, ForegroundParams
from .dataset_io import (SequenceManifest, import_dataset,
                         load_manifest_samples, write_rgbp)
from .lrcn import ConfigError, LRCNConfig, LRCNModel
from .metrics import evaluate, write_report
from .service import PipelineState
from .synth import SceneConfig, generate, label_stream
from .training import TrainConfig, run_strategy, stratified_split, train


def _add_bg_flags(p):
    p.add_argument("--eta", type=int, default=100)
    p.add_argument("--tau", type=float, default=0.8)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--lambda-c", type=int, default=4, dest="lambda_c")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="peoplecount")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="convert an RGB frame directory to RGBP")
    p.add_argument("input_dir")
    p.add_argument("--out", required=True)
    p.add_argument("--stride", type=int, default=5)
    _add_bg_flags(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("import", help="build a sequence manifest from RGBP frames")
    p.add_argument("root")
    p.add_argument("--out", required=True)
    p.add_argument("--stride", type=int, default=5)
    p.add_argument("--seq-len", type=int, default=9, dest="seq_len")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("synth", help="generate a synthetic labeled scene")
    p.add_argument("--out", required=True)
    p.add_argument("--actors", type=int, default=3)
    p.add_argument("--duration", type=int, default=120)
    p.add_argument("--width", type=int, default=400)
    p.add_argument("--height", type=int, default=225)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a count regressor from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--strategy", choices=["scratch", "transfer", "fine_tune"],
                   default="scratch")
    p.add_argument("--label-mode", choices=["all_people", "customers_only"],
                   default="all_people", dest="label_mode")
    p.add_argument("--checkpoint", help="base checkpoint for transfer/fine_tune")
    p.add_argument("--seq-len", type=int, default=9, dest="seq_len")
    p.add_argument("--conv-layers", type=int, default=3, dest="conv_layers")
    p.add_argument("--filters", type=int, default=8)
    p.add_argument("--kernel", type=int, default=5)
    p.add_argument("--lstm-units", default="250", dest="lstm_units",
                   help="comma-separated units per LSTM layer")
    p.add_argument("--width", type=int, default=400)
    p.add_argument("--height", type=int, default=225)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=16, dest="batch_size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="training report path (csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", default="eval.json")
    p.add_argument("--label-mode", choices=["all_people", "customers_only"],
                   default="all_people", dest="label_mode")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", type=float, default=0.70,
                   help="train fraction; evaluation uses the remainder")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="stream a frame directory through the pipeline")
    p.add_argument("input_dir")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--seq-len", type=int, dest="seq_len")
    p.add_argument("--stride", type=int, default=5)
    p.add_argument("--fps", type=float, default=20.0)
    p.add_argument("--out", help="prediction event log path")
    _add_bg_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve-annotation", help="run the annotation HTTP backend")
    p.add_argument("root", help="directory of video frame folders")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve_annotation)

    return parser


def _list_image_frames(input_dir: Path):
    from PIL import Image

    files = sorted(p for p in input_dir.iterdir()
                   if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp"))
    if not files:
        raise SystemExit(f"no image frames in {input_dir}")
    for idx, f in enumerate(files):
        arr = np.asarray(Image.open(f).convert("RGB"))
        yield f, fp.RawFrame(arr, timestamp_ms=idx * 50, index=idx)


def cmd_preprocess(args) -> int:
    input_dir = Path(args.input_dir)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    bg = BackgroundModel(fp.TARGET_HEIGHT, fp.TARGET_WIDTH, lambda_c=args.lambda_c,
                         eta=args.eta, tau=args.tau)
    params = ForegroundParams(beta=args.beta)
    written = 0
    for _, raw in _list_image_frames(input_dir):
        resized = fp.resample(raw)
        q = fp.quantize(resized, args.lambda_c)
        bg.ingest(q)
        if not bg.initialized or raw.index % args.stride != 0:
            continue
        p = bg.foreground(q, params)
        rgbp = fp.assemble_rgbp(resized, p)
        write_rgbp(rgbp, out_dir / f"frame_{raw.index:06d}.rgbp")
        written += 1
    print(f"wrote {written} RGBP frames to {out_dir}")
    return 0


def cmd_import(args) -> int:
    manifest = import_dataset(args.root, args.stride, args.seq_len)
    manifest.save(args.out)
    print(f"{len(manifest.sequences)} sequences -> {args.out}")
    return 0


def cmd_synth(args) -> int:
    from PIL import Image

    out = Path(args.out)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    cfg = SceneConfig(width=args.width, height=args.height,
                      duration=args.duration, n_actors=args.actors, seed=args.seed)
    frames, gt = generate(cfg)
    for frame, mask in zip(frames, gt.masks):
        Image.fromarray(frame.pixels).save(out / "frames" / f"frame_{frame.index:06d}.png")
        Image.fromarray(mask * 255).save(out / "masks" / f"mask_{frame.index:06d}.png")
    label_stream(gt, fps=cfg.fps).save(out / "labels.csv")
    print(f"{len(frames)} frames -> {out}")
    return 0


def _arch_from_args(args) -> LRCNConfig:
    units = tuple(int(u) for u in str(args.lstm_units).split(","))
    return LRCNConfig(
        conv_layers=args.conv_layers, filters=args.filters, kernel=args.kernel,
        lstm_units=units, seq_len=args.seq_len,
        input_width=args.width, input_height=args.height,
    )


def cmd_train(args) -> int:
    manifest = SequenceManifest.load(args.manifest)
    samples = load_manifest_samples(manifest)
    arch = _arch_from_args(args)
    tcfg = TrainConfig(
        learning_rate=args.lr, batch_size=args.batch_size, max_epochs=args.epochs,
        strategy=args.strategy, label_mode=args.label_mode, seed=args.seed,
    )
    train_set, test_set = stratified_split(samples, tcfg.split_fraction, args.seed)
    base_conv = None
    if args.strategy in ("transfer", "fine_tune"):
        if not args.checkpoint:
            print("transfer/fine_tune require --checkpoint", file=sys.stderr)
            return 1
        base = LRCNModel.load(args.checkpoint)
        base_conv = {n: base.params[n] for n in base.conv_param_names()}
    model, report = run_strategy(args.strategy, train_set, arch, tcfg,
                                 base_conv_weights=base_conv, test_set=test_set,
                                 seed=args.seed)
    model.save(args.out)
    if args.report:
        report.write(args.report)
    print(f"trained {report.stopped_epoch} epochs, "
          f"{report.trainable_params} trainable params -> {args.out}")
    if report.eval_report:
        print(f"test E={report.eval_report.relative_error_pct:.2f}% "
              f"MAE={report.eval_report.mae:.3f}")
    return 0


def cmd_evaluate(args) -> int:
    manifest = SequenceManifest.load(args.manifest)
    samples = load_manifest_samples(manifest)
    model = LRCNModel.load(args.checkpoint)
    _, test_set = stratified_split(samples, args.split, args.seed)
    report = evaluate(model, test_set, label_mode=args.label_mode)
    csv_path = str(Path(args.out).with_suffix(".csv"))
    write_report(report, args.out, csv_path)
    print(f"E={report.relative_error_pct:.2f}% MAE={report.mae:.3f} "
          f"histogram={csv_path}")
    return 0


def cmd_predict(args) -> int:
    model = LRCNModel.load(args.checkpoint)
    if args.seq_len is not None and args.seq_len != model.config.seq_len:
        print(f"--seq-len {args.seq_len} does not match checkpoint "
              f"T={model.config.seq_len}", file=sys.stderr)
        return 1
    state = PipelineState(model, eta=args.eta, tau=args.tau, beta=args.beta,
                          lambda_c=args.lambda_c, stride=args.stride)
    frame_ms = 1000.0 / args.fps
    for _, raw in _list_image_frames(Path(args.input_dir)):
        raw = fp.RawFrame(raw.pixels, timestamp_ms=int(raw.index * frame_ms),
                          index=raw.index)
        event = state.ingest_frame(raw)
        if event is not None:
            print(event.as_line())
    if args.out:
        state.write_event_log(args.out)
    return 0


def cmd_serve_annotation(args) -> int:
    import uvicorn

    from .annotation import AnnotationStore, create_app

    app = create_app(AnnotationStore(args.root))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
