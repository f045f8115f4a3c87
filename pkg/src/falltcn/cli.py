"""Command-line entry point.

Subcommands: prepare, train-lift, train-fall, eval, bench, synth.
Exit codes: 0 ok, 2 usage/config error, 3 data error, 4 numeric failure.
Every command that writes outputs also writes a fully-resolved key=value
config next to its primary output, so runs are reproducible from disk.
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import fallnet, lifting, metrics, normalize, skeleton
from .errors import (
    ConfigError,
    DataError,
    FallTcnError,
    NumericError,
)
from .joints import joint_set
from .nn import load_checkpoint, save_checkpoint

_ANGLE_TO_CAMERA = {angle: cam for cam, angle in
                    skeleton.DEFAULT_CAMERA_ANGLE_MAP.items()}


# ---------------------------------------------------------------------------
# config file plumbing

def load_config_file(path):
    """Flat key=value text with # comments."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def write_config_file(path, values):
    with open(path, "w") as f:
        for key in sorted(values):
            f.write(f"{key}={values[key]}\n")


def resolve(args, defaults):
    """Merge defaults < config file < explicit flags. Flags parsed with
    default=None count as unset."""
    file_values = load_config_file(args.config) if args.config else {}
    resolved = {}
    for key, default in defaults.items():
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            resolved[key] = cli_value
        elif key in file_values:
            raw = file_values[key]
            if isinstance(default, bool):
                resolved[key] = raw.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                resolved[key] = int(raw)
            elif isinstance(default, float):
                resolved[key] = float(raw)
            else:
                resolved[key] = raw
        else:
            resolved[key] = default
    return resolved


# ---------------------------------------------------------------------------
# shared model construction

def _fall_config_from(values, num_joints, length):
    return fallnet.FallNetConfig(
        joints=num_joints, length=length, channels=values["channels"],
        blocks=values["blocks"], dropout=values["dropout"])


def _write_fallnet_sidecar(ckpt_path, cfg, extra):
    values = {"model": "fallnet", "joints": cfg.joints, "length": cfg.length,
              "channels": cfg.channels, "blocks": cfg.blocks,
              "dropout": cfg.dropout}
    values.update(extra)
    write_config_file(str(ckpt_path) + ".config", values)


def _load_fallnet(ckpt_path):
    sidecar = load_config_file(str(ckpt_path) + ".config")
    if sidecar.get("model") != "fallnet":
        raise DataError(f"{ckpt_path}.config: not a fall-net checkpoint")
    cfg = fallnet.FallNetConfig(
        joints=int(sidecar["joints"]), length=int(sidecar["length"]),
        channels=int(sidecar["channels"]), blocks=int(sidecar["blocks"]),
        dropout=float(sidecar["dropout"]))
    net = fallnet.FallNet(cfg)
    net.load_state_dict(load_checkpoint(ckpt_path))
    return net, cfg


# ---------------------------------------------------------------------------
# subcommands

def cmd_prepare(args):
    defaults = {"joint_set": "Full25", "length": 300, "fall_action": 43,
                "seed": 0}
    v = resolve(args, defaults)
    data_dir = Path(args.data_dir)
    if not data_dir.is_dir():
        raise DataError(f"data directory {data_dir} not readable")
    jset = joint_set(v["joint_set"])
    files = sorted(data_dir.glob("*.skeleton"))
    if not files:
        raise DataError(f"no .skeleton files in {data_dir}")
    sequences = []
    for path in files:
        angle, subject, action = skeleton.parse_ntu_filename(path.name)
        seq = skeleton.parse_ntu_skeleton(
            path.read_text(), action_label=action, camera_angle=angle,
            subject_id=subject, name=path.name)
        sequences.append(seq)
    usable, excluded = skeleton.filter_usable(sequences)
    if not usable:
        raise DataError("zero usable samples after filtering")
    train, test = skeleton.split_by_camera(usable)

    def tensorize(seqs):
        records = []
        for seq in seqs:
            frames = [
                skeleton.FramePose(normalize.normalize_3d(f.joints3d))
                for f in seq.frames
            ]
            normed = skeleton.SkeletonSequence(
                frames, action_label=seq.action_label,
                camera_angle=seq.camera_angle, subject_id=seq.subject_id)
            normed = skeleton.select_joints(normed, jset)
            records.append(skeleton.pad_to_length(
                normed, length=v["length"], fall_action=v["fall_action"]))
        return records

    out = Path(args.out_cache)
    train_records = tensorize(train)
    test_records = tensorize(test)
    skeleton.write_cache(f"{out}.train.ftcn", train_records, jset.size, v["length"])
    skeleton.write_cache(f"{out}.test.ftcn", test_records, jset.size, v["length"])
    falls = sum(r.label for r in train_records + test_records)
    total = len(sequences)
    write_config_file(f"{out}.config", {**v, "data_dir": str(data_dir)})
    print(f"total {total}")
    print(f"excluded {len(excluded)}")
    print(f"train {len(train_records)}")
    print(f"test {len(test_records)}")
    print(f"falls {falls}")
    ratio = falls / max(len(train_records) + len(test_records), 1)
    print(f"fall_ratio {ratio:.6g}")
    return 0


def cmd_train_lift(args):
    defaults = {"pairs": 256, "joints": 16, "width": lifting.DEFAULT_HIDDEN,
                "blocks": 2, "dropout": 0.25, "epochs": 60, "lr": 1e-4,
                "batch_size": 16, "seed": 0, "decay": 0.1}
    v = resolve(args, defaults)
    if args.cache:
        nj, _, data, _ = skeleton.read_cache(args.cache)
        if nj != v["joints"]:
            raise DataError(
                f"cache has {nj} joints, model configured for {v['joints']}")
        pairs = _pairs_from_cache(data, nj, v["pairs"], v["seed"])
    else:
        pairs = lifting.synth_pose_pairs(v["seed"], v["pairs"], joints=v["joints"])
    cfg = lifting.LiftingConfig(joints=v["joints"], hidden=v["width"],
                                blocks=v["blocks"], dropout=v["dropout"])
    net = lifting.LiftingNet(cfg, seed=v["seed"])
    log_lines = []
    code = 0
    try:
        result = lifting.train_lifting(
            net, pairs.x2d, pairs.y3d, epochs=v["epochs"], lr=v["lr"],
            decay=v["decay"], batch_size=v["batch_size"], seed=v["seed"])
        log_lines = [f"epoch {i} loss {loss!r}"
                     for i, loss in enumerate(result.losses)]
    except NumericError as exc:
        log_lines.append(f"aborted {exc}")
        code = 4
    save_checkpoint(args.out, net.state_dict())
    write_config_file(str(args.out) + ".config",
                      {"model": "lifting", **{k: v[k] for k in defaults}})
    Path(str(args.out) + ".log").write_text("\n".join(log_lines) + "\n")
    if code == 0 and log_lines:
        print(log_lines[-1])
    if code:
        raise NumericError("lifting training aborted; last-good checkpoint saved")
    return 0


def _pairs_from_cache(data, num_joints, n, seed):
    """Sample 3D poses from cached sequences, stage them in front of the
    fixed pinhole camera and project to build lifting pairs."""
    rng = np.random.default_rng(seed)
    count, _, length = data.shape
    raw3d = np.empty((n, num_joints, 3))
    raw2d = np.empty((n, num_joints, 2))
    x2d = np.empty((n, 2 * num_joints))
    y3d = np.empty((n, 3 * num_joints))
    for i in range(n):
        si = int(rng.integers(0, count))
        ti = int(rng.integers(0, length))
        pose = data[si, :, ti].reshape(num_joints, 3).astype(np.float64)
        staged = pose + np.array([0.0, 0.0, 3.0])  # camera depth offset
        p2 = lifting.project_pinhole(staged)
        raw3d[i] = staged
        raw2d[i] = p2
        x2d[i] = normalize.normalize_2d(p2, root_index=0).reshape(-1)
        c3 = normalize.center_to_root(staged, 0)
        s3, _ = normalize.frobenius_scale(c3)
        y3d[i] = s3.reshape(-1)
    return lifting.PosePairBatch(x2d=x2d, y3d=y3d, raw3d=raw3d, raw2d=raw2d,
                                 intrinsics=lifting.INTRINSICS)


def cmd_train_fall(args):
    defaults = {"channels": 512, "blocks": 4, "dropout": 0.25, "epochs": 20,
                "lr": 1e-4, "batch_size": 16, "loss": "ce", "seed": 0,
                "decay": 0.1, "milestones": "", "stop_when_perfect": False}
    v = resolve(args, defaults)
    nj, length, data, labels = skeleton.read_cache(args.cache)
    cfg = _fall_config_from(v, nj, length)
    net = fallnet.FallNet(cfg, seed=v["seed"])
    milestones = tuple(int(m) for m in str(v["milestones"]).split(",") if m)
    log_lines = []
    code = 0
    try:
        result = fallnet.train_fall(
            net, data, labels, epochs=v["epochs"], lr=v["lr"],
            milestones=milestones, decay=v["decay"],
            batch_size=v["batch_size"], loss=v["loss"], seed=v["seed"],
            stop_when_perfect=v["stop_when_perfect"])
        for em in result.history:
            prec = "undef" if em.precision is None else repr(em.precision)
            rec = "undef" if em.recall is None else repr(em.recall)
            log_lines.append(
                f"epoch {em.epoch} loss {em.loss!r} accuracy {em.accuracy!r} "
                f"precision {prec} recall {rec}")
    except NumericError as exc:
        log_lines.append(f"aborted {exc}")
        code = 4
    save_checkpoint(args.out, net.state_dict())
    _write_fallnet_sidecar(args.out, cfg,
                           {k: v[k] for k in defaults if k != "milestones"}
                           | {"milestones": ",".join(map(str, milestones))})
    Path(str(args.out) + ".log").write_text("\n".join(log_lines) + "\n")
    if code == 0 and log_lines:
        print(log_lines[-1])
    if code:
        raise NumericError("fall training aborted; last-good checkpoint saved")
    return 0


def cmd_eval(args):
    net, cfg = _load_fallnet(args.ckpt)
    nj, length, data, labels = skeleton.read_cache(args.cache)
    if data.shape[0] == 0:
        raise DataError(f"{args.cache}: empty evaluation cache")
    if nj != cfg.joints or length != cfg.length:
        raise DataError(
            f"cache shape (J={nj}, T={length}) does not match checkpoint "
            f"(J={cfg.joints}, T={cfg.length})")
    preds = fallnet.evaluate_predictions(net, data)
    cm = metrics.confusion_metrics(preds, labels)
    report = metrics.EvalReport()
    report.update_confusion(cm)
    report.set("model.params", metrics.count_params(net))
    report.set("model.flops", metrics.count_flops(net).total)
    out = Path(args.report_out)
    out.with_suffix(out.suffix + ".kv").write_text(report.to_kv())
    out.with_suffix(out.suffix + ".txt").write_text(report.to_text())
    print(report.to_text(), end="")
    return 0


def cmd_bench(args):
    defaults = {"iters": 20, "warmup": 3, "platform": "local", "seed": 0}
    v = resolve(args, defaults)
    net, cfg = _load_fallnet(args.ckpt)
    shape = (1, 3 * cfg.joints, cfg.length)
    result = metrics.bench_fps(net, shape, warmup=v["warmup"],
                               iters=v["iters"], platform_tag=v["platform"])
    report = metrics.EvalReport()
    report.set("params", metrics.count_params(net))
    report.set("flops", metrics.count_flops(net).total)
    report.set("fps", result.fps)
    report.set("platform", result.platform)
    report.set("iters", result.iters)
    if result.low_confidence:
        report.set("confidence", "low")
    print(report.to_kv(), end="")
    return 0


def cmd_synth(args):
    defaults = {"seed": 0, "n": 32, "fall_fraction": 0.5, "length_min": 40,
                "length_max": 120}
    v = resolve(args, defaults)
    if v["n"] > 999:
        raise ConfigError("synth supports at most 999 sequences per directory")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sequences = skeleton.synth_generate(
        v["seed"], v["n"], v["fall_fraction"],
        length_range=(v["length_min"], v["length_max"]))
    manifest = []
    for i, seq in enumerate(sequences):
        cam = _ANGLE_TO_CAMERA[seq.camera_angle]
        name = (f"S001C{cam:03d}P{seq.subject_id:03d}R{i + 1:03d}"
                f"A{seq.action_label:03d}.skeleton")
        (out_dir / name).write_text(skeleton.serialize_ntu_skeleton(seq))
        manifest.append(
            f"{name} {int(seq.action_label == skeleton.FALL_ACTION_ID)}")
    (out_dir / "labels.txt").write_text("\n".join(manifest) + "\n")
    write_config_file(out_dir / "synth.config", v)
    print(f"wrote {len(sequences)} sequences to {out_dir}")
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="falltcn",
        description="Skeleton-sequence fall detection: data preparation, "
                    "training, evaluation and benchmarking.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file; flags override")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None,
                       help="accepted for compatibility; execution is single-threaded")

    p = sub.add_parser("prepare", help="parse, filter, normalize and cache skeleton files")
    common(p)
    p.add_argument("data_dir")
    p.add_argument("out_cache", help="cache base path; writes <base>.train.ftcn and <base>.test.ftcn")
    p.add_argument("--joint-set", dest="joint_set", choices=["Full25", "Mid16", "Core8"])
    p.add_argument("--length", type=int, default=None)
    p.add_argument("--fall-action", dest="fall_action", type=int, default=None)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train-lift", help="train the 2D-to-3D lifting network")
    common(p)
    p.add_argument("--cache", help="optional sequence cache to draw poses from")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--pairs", type=int, default=None)
    p.add_argument("--joints", type=int, default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--blocks", type=int, default=None)
    p.add_argument("--dropout", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--decay", type=float, default=None)
    p.set_defaults(func=cmd_train_lift)

    p = sub.add_parser("train-fall", help="train the fall classifier on a cache")
    common(p)
    p.add_argument("--cache", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--channels", type=int, default=None)
    p.add_argument("--blocks", type=int, default=None)
    p.add_argument("--dropout", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--loss", choices=["ce", "wcel"], default=None)
    p.add_argument("--milestones", default=None, help="comma-separated decay epochs")
    p.add_argument("--decay", type=float, default=None)
    p.add_argument("--stop-when-perfect", dest="stop_when_perfect",
                   action="store_const", const=True, default=None)
    p.set_defaults(func=cmd_train_fall)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a cache")
    common(p)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--report-out", dest="report_out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="parameters, FLOPs and throughput")
    common(p)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--warmup", type=int, default=None)
    p.add_argument("--platform", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="write synthetic skeleton files")
    common(p)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--fall-fraction", dest="fall_fraction", type=float, default=None)
    p.add_argument("--length-min", dest="length_min", type=int, default=None)
    p.add_argument("--length-max", dest="length_max", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        os.environ.setdefault("OMP_NUM_THREADS", str(args.threads))
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"E2 usage: {exc}\n")
        return 2
    except NumericError as exc:
        sys.stderr.write(f"E4 numeric: {exc}\n")
        return 4
    except DataError as exc:
        sys.stderr.write(f"E3 data: {exc}\n")
        return 3
    except FallTcnError as exc:
        sys.stderr.write(f"E3 data: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
