"""Command-line pipeline driver.

Subcommands: prep, build-centers, train, infer, eval, synth-gen, ablate,
bench-hpi, selfcheck. Every run resolves one config (JSON file defaults,
flags win) and writes it next to its artifacts as resolved_config.json for
exact replay. Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from cras import __version__
from cras import centers as ctr
from cras import crd_train as cdt
from cras import dafs
from cras import feature_prep as fp
from cras import nn_model as nn
from cras import scoring_eval as se
from cras import synth_bench as sb
from cras import tensor_store as ts

log = logging.getLogger("cras")

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


class CliValidationError(Exception):
    """User-input problem: bad flags, missing files, inconsistent config."""


@dataclass(frozen=True)
class RunConfig:
    manifest: str | None = None
    out_dir: str = "runs/out"
    prep: fp.PrepConfig = field(default_factory=fp.PrepConfig)
    train: cdt.TrainConfig = field(default_factory=cdt.TrainConfig)
    smooth_sigma: float = 4.0
    deterministic: bool = False
    seed: int = 0


def _cfg_to_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["prep"]["levels_used"] = list(cfg.prep.levels_used)
    return d


def _build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge config file values with flag overrides; flags win."""
    raw: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise CliValidationError(f"config file not found: {path}")
        raw = json.loads(path.read_text(encoding="utf-8"))

    def pick(flag_name, cfg_path, default):
        v = getattr(args, flag_name, None)
        if v is not None:
            return v
        node = raw
        for key in cfg_path[:-1]:
            node = node.get(key, {})
        return node.get(cfg_path[-1], default)

    try:
        seed = int(pick("seed", ["seed"], 0))
        prep = fp.PrepConfig(
            patch_size=int(pick("patch_size", ["prep", "patch_size"], 3)),
            levels_used=tuple(pick("levels", ["prep", "levels_used"], (2, 3))),
            target_channels=_none_ok(pick("target_channels", ["prep", "target_channels"], None)),
        )
        noise = dafs.NoiseConfig(
            sigma=float(pick("sigma", ["train", "noise", "sigma"], 0.015)),
            beta=float(pick("beta", ["train", "noise", "beta"], 0.3)),
            seed=seed,
        )
        train = cdt.TrainConfig(
            epochs=int(pick("epochs", ["train", "epochs"], 100)),
            batch_size=int(pick("batch_size", ["train", "batch_size"], 32)),
            lr_adapter=float(pick("lr_adapter", ["train", "lr_adapter"], 1e-4)),
            lr_discriminator=float(pick("lr_discriminator", ["train", "lr_discriminator"], 2e-4)),
            weight_decay=float(pick("weight_decay", ["train", "weight_decay"], 1e-2)),
            noise=noise,
            refresh_policy=pick("refresh_policy", ["train", "refresh_policy"], "per-epoch"),
            seed=seed,
            feature_mode=pick("feature_mode", ["train", "feature_mode"], "raw+residual"),
            center_mode=pick("center_mode", ["train", "center_mode"], "mean"),
        )
        return RunConfig(
            manifest=pick("manifest", ["manifest"], None),
            out_dir=str(pick("out_dir", ["out_dir"], "runs/out")),
            prep=prep,
            train=train,
            smooth_sigma=float(pick("smooth_sigma", ["smooth_sigma"], 4.0)),
            deterministic=bool(pick("deterministic", ["deterministic"], False)),
            seed=seed,
        )
    except (fp.FeaturePrepError, cdt.TrainingError, dafs.SynthesisError, TypeError, ValueError) as exc:
        raise CliValidationError(f"invalid configuration: {exc}") from exc


def _none_ok(v):
    if v in (None, "none", "null", ""):
        return None
    return int(v)


def _write_resolved_config(out_dir: Path, cfg: RunConfig, command: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {"command": command, "version": __version__, "config": _cfg_to_dict(cfg)}
    (out_dir / "resolved_config.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _load_manifest_arg(cfg: RunConfig, eager: bool = True) -> ts.DatasetManifest:
    if not cfg.manifest:
        raise CliValidationError("no dataset manifest given (use --manifest or the config file)")
    path = Path(cfg.manifest)
    if not path.exists():
        raise CliValidationError(f"manifest not found: {path}")
    return ts.load_manifest(path, eager=eager)


def _load_model(checkpoint: str | None, out_dir: Path):
    path = Path(checkpoint) if checkpoint else out_dir / "checkpoint.crmd"
    if not path.exists():
        raise CliValidationError(f"checkpoint not found: {path}")
    return nn.load_checkpoint(path)


def _load_bank(centers_dir: str | None, out_dir: Path) -> ctr.CenterBank:
    path = Path(centers_dir) if centers_dir else out_dir / "centers"
    if not (path / "index.json").exists():
        raise CliValidationError(f"center bank not found: {path}")
    return ctr.load_center_bank(path)


# ---------------------------------------------------------------- subcommands


def cmd_prep(args) -> int:
    cfg = _build_run_config(args)
    manifest = _load_manifest_arg(cfg)
    out_dir = Path(cfg.out_dir)
    _write_resolved_config(out_dir, cfg, "prep")

    by_sample: dict[str, list[ts.ManifestEntry]] = {}
    for e in manifest.entries:
        if e.level is None:
            raise CliValidationError(f"{e.path}: entry has no hierarchy level tag")
        by_sample.setdefault(e.sample_id, []).append(e)

    (out_dir / "feats").mkdir(parents=True, exist_ok=True)
    new_entries: list[ts.ManifestEntry] = []
    for sid in sorted(by_sample):
        group = sorted(by_sample[sid], key=lambda e: e.level)
        stack = fp.HierarchyStack(
            [(e.level, ts.read_tensor(manifest.resolve(e.path))) for e in group]
        )
        merged = fp.merge_hierarchies(stack, cfg.prep)
        rel = f"feats/{sid}.crft"
        ts.write_tensor(out_dir / rel, merged)
        head = group[0]
        mask_rel = None
        if head.mask_path is not None:
            mask_rel = f"masks/{sid}.crft"
            (out_dir / "masks").mkdir(exist_ok=True)
            shutil.copyfile(manifest.resolve(head.mask_path), out_dir / mask_rel)
        new_entries.append(
            ts.ManifestEntry(rel, head.category, sid, head.split, head.label, mask_path=mask_rel)
        )
    ts.write_manifest(out_dir / "manifest.jsonl", new_entries)
    log.info("merged %d samples -> %s", len(new_entries), out_dir / "manifest.jsonl")
    return 0


def cmd_build_centers(args) -> int:
    cfg = _build_run_config(args)
    manifest = _load_manifest_arg(cfg)
    out_dir = Path(cfg.out_dir)
    _write_resolved_config(out_dir, cfg, "build-centers")
    if args.checkpoint:
        adapter, _ = _load_model(args.checkpoint, out_dir)
    else:
        first = manifest.split("train")[0]
        channels = ts.read_tensor(manifest.resolve(first.path)).shape[0]
        adapter = nn.AdapterNet(channels, np.random.default_rng(cfg.seed))
    bank = ctr.build_center_bank(
        manifest, adapter, refresh_policy=cfg.train.refresh_policy, center_mode=cfg.train.center_mode
    )
    ctr.save_center_bank(out_dir / "centers", bank)
    log.info("wrote %d centers to %s", len(bank.centers), out_dir / "centers")
    return 0


def cmd_train(args) -> int:
    cfg = _build_run_config(args)
    manifest = _load_manifest_arg(cfg)
    out_dir = Path(cfg.out_dir)
    _write_resolved_config(out_dir, cfg, "train")
    bank = _load_bank(args.centers, out_dir) if args.centers else None
    result = cdt.train(manifest, bank, cfg.train)
    nn.save_checkpoint(out_dir / "checkpoint.crmd", result.adapter, result.disc)
    ctr.save_center_bank(out_dir / "centers", result.bank)
    with (out_dir / "training_log.jsonl").open("w", encoding="utf-8") as fh:
        for row in result.log:
            fh.write(json.dumps(row) + "\n")
    log.info(
        "trained %d epochs, final epoch loss %.6f -> %s",
        cfg.train.epochs,
        result.final_epoch_loss,
        out_dir / "checkpoint.crmd",
    )
    return 0


def cmd_infer(args) -> int:
    cfg = _build_run_config(args)
    manifest = _load_manifest_arg(cfg)
    out_dir = Path(cfg.out_dir)
    _write_resolved_config(out_dir, cfg, "infer")
    adapter, disc = _load_model(args.checkpoint, out_dir)
    bank = _load_bank(args.centers, out_dir)
    se.evaluate(
        manifest,
        adapter,
        disc,
        bank,
        smooth_sigma=cfg.smooth_sigma,
        feature_mode=cfg.train.feature_mode,
        score_dump_dir=out_dir / "scores",
        write_heatmaps=args.heatmaps,
    )
    log.info("score maps written to %s", out_dir / "scores")
    return 0


def cmd_eval(args) -> int:
    cfg = _build_run_config(args)
    manifest = _load_manifest_arg(cfg)
    out_dir = Path(cfg.out_dir)
    _write_resolved_config(out_dir, cfg, "eval")
    adapter, disc = _load_model(args.checkpoint, out_dir)
    bank = _load_bank(args.centers, out_dir)
    report = se.evaluate(
        manifest,
        adapter,
        disc,
        bank,
        smooth_sigma=cfg.smooth_sigma,
        feature_mode=cfg.train.feature_mode,
        score_dump_dir=out_dir / "scores" if args.dump_scores else None,
        write_heatmaps=args.heatmaps,
    )
    (out_dir / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    print(report.format_table())
    log.info("report written to %s", out_dir / "report.json")
    return 0


def cmd_synth_gen(args) -> int:
    kwargs = {}
    if args.spec:
        path = Path(args.spec)
        if not path.exists():
            raise CliValidationError(f"spec file not found: {path}")
        kwargs = json.loads(path.read_text(encoding="utf-8"))
    for name in (
        "n_classes",
        "channels",
        "height",
        "width",
        "train_per_class",
        "test_normal_per_class",
        "test_anomalous_per_class",
        "anomaly_patch",
        "mask_scale",
    ):
        v = getattr(args, name, None)
        if v is not None:
            kwargs[name] = v
    for name in ("within_class_std", "class_separation", "anomaly_shift"):
        v = getattr(args, name, None)
        if v is not None:
            kwargs[name] = v
    if args.heteroscedastic:
        kwargs["heteroscedastic"] = True
    if args.seed is not None:
        kwargs["seed"] = args.seed
    try:
        spec = sb.SynthSpec(**kwargs)
        manifest_path = sb.generate(spec, args.out_dir, force=args.force)
    except (sb.SynthError, TypeError) as exc:
        raise CliValidationError(str(exc)) from exc
    (Path(args.out_dir) / "spec.json").write_text(
        json.dumps(asdict(spec), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(manifest_path)
    return 0


def cmd_ablate(args) -> int:
    cfg = _build_run_config(args)
    manifest = _load_manifest_arg(cfg)
    out_dir = Path(cfg.out_dir)
    _write_resolved_config(out_dir, cfg, "ablate")
    if args.variants:
        path = Path(args.variants)
        if not path.exists():
            raise CliValidationError(f"variants file not found: {path}")
        specs = json.loads(path.read_text(encoding="utf-8"))
        try:
            variants = [sb.AblationVariant(**v) for v in specs]
        except TypeError as exc:
            raise CliValidationError(f"bad variant record: {exc}") from exc
    else:
        variants = [
            sb.AblationVariant("full"),
            sb.AblationVariant("raw-only", feature_mode="raw"),
            sb.AblationVariant("beta0", beta=0.0),
            sb.AblationVariant("single-sample-center", center_mode="single-sample"),
        ]
    rows = sb.run_ablation(manifest, variants, cfg.train, smooth_sigma=cfg.smooth_sigma)
    (out_dir / "ablation.json").write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    print(sb.format_ablation_table(rows))
    return 0


def run_hpi_benchmark(
    class_counts: list[int],
    channels: int = 32,
    height: int = 16,
    width: int = 16,
    queries: int = 32,
    repeats: int = 5,
    seed: int = 0,
) -> list[dict]:
    """Time the two-stage local alignment against flat multi-center search.

    The local stage aligns against only the matched center, so its cost must
    stay flat as classes are added; the flat baseline grows linearly.
    """
    rng = np.random.default_rng(seed)
    max_k = max(class_counts)
    all_centers = [
        ctr.ClassCenter(f"k{i}", rng.normal(size=(channels, height, width)).astype(np.float32))
        for i in range(max_k)
    ]
    us = [rng.normal(size=(channels, height, width)).astype(np.float32) for _ in range(queries)]
    rows = []
    for k in class_counts:
        bank = ctr.CenterBank(all_centers[:k])
        matched = [bank.get(ctr.match_class(u, bank)[0]) for u in us]
        local_best, flat_best, global_best = np.inf, np.inf, np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            for u in us:
                ctr.match_class(u, bank)
            t1 = time.perf_counter()
            for u, center in zip(us, matched):
                ctr.align_patches(u, center)
            t2 = time.perf_counter()
            for u in us:
                ctr.flat_search_align(u, bank)
            t3 = time.perf_counter()
            global_best = min(global_best, t1 - t0)
            local_best = min(local_best, t2 - t1)
            flat_best = min(flat_best, t3 - t2)
        rows.append(
            {
                "classes": k,
                "global_s": global_best,
                "local_s": local_best,
                "two_stage_s": global_best + local_best,
                "flat_s": flat_best,
            }
        )
    return rows


def cmd_bench_hpi(args) -> int:
    class_counts = [int(x) for x in args.classes.split(",")]
    if len(class_counts) < 2:
        raise CliValidationError("need at least two class counts to compare")
    rows = run_hpi_benchmark(
        class_counts,
        channels=args.channels,
        height=args.height,
        width=args.width,
        queries=args.queries,
        repeats=args.repeats,
        seed=args.seed or 0,
    )
    header = f"{'classes':>8}{'global(s)':>12}{'local(s)':>12}{'flat(s)':>12}"
    print(header)
    for row in rows:
        print(
            f"{row['classes']:>8}{row['global_s']:>12.5f}{row['local_s']:>12.5f}{row['flat_s']:>12.5f}"
        )
    first, last = rows[0], rows[-1]
    local_ratio = last["local_s"] / first["local_s"]
    flat_ratio = last["flat_s"] / first["flat_s"]
    print(
        f"local-stage time ratio {first['classes']}->{last['classes']} classes: {local_ratio:.2f}x; "
        f"flat search: {flat_ratio:.2f}x"
    )
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_selfcheck(args) -> int:
    failures = []

    def check(name, fn):
        try:
            detail = fn()
        except Exception as exc:  # noqa: BLE001 - report, do not crash the suite
            failures.append(name)
            print(f"FAIL {name}: {exc}")
            return
        print(f"ok   {name}{': ' + detail if detail else ''}")

    def grad_check():
        rng = np.random.default_rng(417)
        worst = 0.0
        for trial in range(3):
            c = int(rng.integers(3, 9))
            adapter = nn.AdapterNet(c, rng, dtype=np.float64, init_scale=0.05)
            disc = nn.DiscriminatorNet(2 * c, c, rng, dtype=np.float64)
            disc.fc2 = nn.DenseLayer(rng.normal(0, 0.5, size=(1, c)), rng.normal(size=1))
            t = rng.normal(size=(2, c, 3, 3))
            p = rng.normal(size=(2, c, 3, 3))
            g = rng.normal(0, 0.5, size=(2, c, 3, 3))
            _, a_grads, d_grads = cdt.step_loss_and_grads(t, p, g, adapter, disc, 0.3, "raw+residual")

            def loss_fn():
                return cdt.step_loss(t, p, g, adapter, disc, 0.3, "raw+residual")

            fd = nn.finite_difference_gradients(loss_fn, {**adapter.params(), **disc.params()})
            worst = max(worst, nn.max_relative_error({**a_grads, **d_grads}, fd))
        if worst > 1e-6:
            raise AssertionError(f"max gradient relative error {worst:.3e} > 1e-6")
        return f"max gradient relative error {worst:.3e}"

    def roundtrip_check():
        rng = np.random.default_rng(418)
        with tempfile.TemporaryDirectory() as d:
            t = rng.normal(size=(3, 5, 4)).astype(np.float32)
            ts.write_tensor(Path(d) / "t.crft", t)
            back = ts.read_tensor(Path(d) / "t.crft")
            if back.tobytes() != t.tobytes():
                raise AssertionError("roundtrip not bit-exact")
        return "bit-exact"

    def noise_check():
        cfg_a = dafs.NoiseConfig(sigma=0.015, beta=0.3, seed=99)
        a = dafs.sample_noise((4, 6, 6), cfg_a)
        b = dafs.sample_noise((4, 6, 6), cfg_a)
        if a.tobytes() != b.tobytes():
            raise AssertionError("seeded noise not reproducible")
        return "seeded noise reproducible"

    check("gradient-fidelity", grad_check)
    check("tensor-roundtrip", roundtrip_check)
    check("noise-determinism", noise_check)
    return 0 if not failures else 2


# --------------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; usage errors are 1
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser, manifest=True):
    p.add_argument("--config", help="JSON run config; flags override its values")
    if manifest:
        p.add_argument("--manifest", help="dataset manifest (JSON lines)")
    p.add_argument("--out-dir", dest="out_dir", help="artifact directory")
    p.add_argument("--seed", type=int, help="run seed (training, noise, shuffling)")
    p.add_argument("--deterministic", action="store_true", default=None,
                   help="force single-worker execution (execution here is always single-worker; recorded for replay)")


def _add_train_knobs(p: argparse.ArgumentParser):
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr-adapter", dest="lr_adapter", type=float)
    p.add_argument("--lr-discriminator", dest="lr_discriminator", type=float)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    p.add_argument("--sigma", type=float, help="Gaussian noise std")
    p.add_argument("--beta", type=float, help="noise variance adjustment magnitude")
    p.add_argument("--refresh-policy", dest="refresh_policy", choices=["per-epoch", "once"])
    p.add_argument("--feature-mode", dest="feature_mode", choices=list(cdt.FEATURE_MODES))
    p.add_argument("--center-mode", dest="center_mode", choices=["mean", "single-sample"])
    p.add_argument("--smooth-sigma", dest="smooth_sigma", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cras", description=__doc__)
    parser.add_argument("--version", action="version", version=f"cras {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("prep", help="merge per-level feature files into training features")
    _add_common(p)
    p.add_argument("--patch-size", dest="patch_size", type=int)
    p.add_argument("--levels", type=lambda s: tuple(int(x) for x in s.split(",")))
    p.add_argument("--target-channels", dest="target_channels")
    p.set_defaults(fn=cmd_prep)

    p = sub.add_parser("build-centers", help="initialize per-category centers")
    _add_common(p)
    p.add_argument("--checkpoint", help="adapter checkpoint (fresh near-identity adapter if omitted)")
    p.add_argument("--center-mode", dest="center_mode", choices=["mean", "single-sample"])
    p.add_argument("--refresh-policy", dest="refresh_policy", choices=["per-epoch", "once"])
    p.set_defaults(fn=cmd_build_centers)

    p = sub.add_parser("train", help="train adapter and discriminator")
    _add_common(p)
    _add_train_knobs(p)
    p.add_argument("--centers", help="existing center bank directory (built from scratch if omitted)")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("infer", help="write score maps for the test split")
    _add_common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--centers")
    p.add_argument("--smooth-sigma", dest="smooth_sigma", type=float)
    p.add_argument("--feature-mode", dest="feature_mode", choices=list(cdt.FEATURE_MODES))
    p.add_argument("--heatmaps", action="store_true", help="also write 8-bit PGM heatmaps")
    p.set_defaults(fn=cmd_infer)

    p = sub.add_parser("eval", help="score the test split and compute metrics")
    _add_common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--centers")
    p.add_argument("--smooth-sigma", dest="smooth_sigma", type=float)
    p.add_argument("--feature-mode", dest="feature_mode", choices=list(cdt.FEATURE_MODES))
    p.add_argument("--dump-scores", dest="dump_scores", action="store_true")
    p.add_argument("--heatmaps", action="store_true")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("synth-gen", help="generate a synthetic multi-class dataset")
    p.add_argument("--spec", help="JSON file of dataset spec fields")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--force", action="store_true", help="allow degenerate specs")
    p.add_argument("--heteroscedastic", action="store_true")
    for name in ("n-classes", "channels", "height", "width", "train-per-class",
                 "test-normal-per-class", "test-anomalous-per-class", "anomaly-patch", "mask-scale"):
        p.add_argument(f"--{name}", dest=name.replace("-", "_"), type=int)
    for name in ("within-class-std", "class-separation", "anomaly-shift"):
        p.add_argument(f"--{name}", dest=name.replace("-", "_"), type=float)
    p.set_defaults(fn=cmd_synth_gen)

    p = sub.add_parser("ablate", help="train and evaluate a list of model variants")
    _add_common(p)
    _add_train_knobs(p)
    p.add_argument("--variants", help="JSON list of variant records")
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("bench-hpi", help="time two-stage matching against flat multi-center search")
    p.add_argument("--classes", default="2,4,8,16", help="comma-separated class counts")
    p.add_argument("--channels", type=int, default=32)
    p.add_argument("--height", type=int, default=16)
    p.add_argument("--width", type=int, default=16)
    p.add_argument("--queries", type=int, default=32)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int)
    p.add_argument("--json-out", dest="json_out")
    p.set_defaults(fn=cmd_bench_hpi)

    p = sub.add_parser("selfcheck", help="gradient, format, and determinism self-tests")
    p.set_defaults(fn=cmd_selfcheck)

    return parser


def main(argv=None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("CRAS_LOG_LEVEL", "info").lower(), logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.fn(args)
    except CliValidationError as exc:
        log.error("%s", exc)
        return 1
    except (ts.TensorStoreError, fp.FeaturePrepError, sb.SynthError) as exc:
        log.error("%s", exc)
        return 1
    except SystemExit:
        raise
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 2
        log.error("runtime failure: %s", exc, exc_info=level <= logging.DEBUG)
        return 2


if __name__ == "__main__":
    sys.exit(main())
