"""Command-line pipeline: phantom generation, segmentation, boundary
extraction, 3D reconstruction, curvature quantification, sector datasets,
classifier training, and metric reports.

Every command writes its artifact plus a run manifest (inputs hash, seed,
version, effective config). Exit codes: 0 ok, 2 missing input, 3 invariant
violation, 4 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import curvature as curv_mod
from . import eval_metrics as em
from . import phantom as ph
from . import pointset_classifier as psn
from . import sector_quant as sq
from . import tensor_nn as tn
from . import wrb_segnet as seg
from .boundary import SliceBoundarySet, read_boundaries_csv, write_boundaries_csv
from .errors import IrisError
from .mesh import read_ply, write_ply
from .pgm import read_pgm, write_pgm
from .reconstruct import (
    SamplingParams,
    ScanGeometry,
    coarse_mesh,
    refine_surface,
    slices_to_cloud,
)

EXIT_OK = 0
EXIT_IO = 2
EXIT_INVARIANT = 3
EXIT_USAGE = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _input_hashes(paths) -> dict[str, str]:
    out = {}
    for p in paths:
        p = Path(p)
        if p.is_dir():
            agg = hashlib.sha256()
            for f in sorted(p.rglob("*")):
                if f.is_file():
                    agg.update(f.name.encode())
                    agg.update(bytes.fromhex(_file_sha256(f)))
            out[str(p)] = agg.hexdigest()
        else:
            out[str(p)] = _file_sha256(p)
    return out


def _write_manifest(path: Path, command: str, config: dict, inputs=()) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "inputs": _input_hashes(inputs),
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(str(p))
    return p


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(_require(path)) as fh:
        return json.load(fh)


def _pick(args_value, config: dict, key: str, default):
    if args_value is not None:
        return args_value
    if key in config:
        return config[key]
    return default


def _geometry(args, config) -> ScanGeometry:
    sub = config.get("geometry", {})
    return ScanGeometry(
        slices=int(_pick(args.slices, sub, "slices", 128)),
        width=int(_pick(args.width, sub, "width", 512)),
        height=int(_pick(args.height, sub, "height", 192)),
        s_xy=float(_pick(args.s_xy, sub, "s_xy", 1.0)),
        s_z=float(_pick(args.s_z, sub, "s_z", 1.0)),
    )


def _geometry_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--slices", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--s-xy", dest="s_xy", type=float)
    p.add_argument("--s-z", dest="s_z", type=float)


def _geom_dict(geom: ScanGeometry) -> dict:
    return {
        "slices": geom.slices,
        "width": geom.width,
        "height": geom.height,
        "s_xy": geom.s_xy,
        "s_z": geom.s_z,
    }


# ---------------------------------------------------------------------------
# commands


def cmd_phantom(args) -> int:
    config = _load_config(args.config)
    geom = _geometry(args, config)
    seed = int(_pick(args.seed, config, "seed", 0))
    volumes = int(_pick(args.volumes, config, "volumes", 1))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for vol in range(volumes):
        closure = vol % 2 == 1
        params = ph.sample_volume_params(rng, closure, geom)
        volume = ph.phantom_slices(params, geom, with_masks=args.masks)
        vdir = out_dir / f"vol_{vol:03d}"
        vdir.mkdir(exist_ok=True)
        write_boundaries_csv(vdir / "boundaries.csv", volume.boundaries)
        ph.write_phantom_metadata(vdir / "meta.json", volume)
        if args.masks and volume.masks is not None:
            mdir = vdir / "masks"
            idir = vdir / "images"
            mdir.mkdir(exist_ok=True)
            idir.mkdir(exist_ok=True)
            img_rng = np.random.default_rng([seed, vol, 0xF00D])
            for i, mask in enumerate(volume.masks):
                write_pgm(mdir / f"slice_{i:03d}.pgm", mask * 255)
                img = ph.render_slice_image(mask, img_rng)
                write_pgm(idir / f"slice_{i:03d}.pgm", img * 255)
    _write_manifest(
        out_dir / "manifest.json",
        "phantom",
        {"seed": seed, "volumes": volumes, "masks": bool(args.masks), "geometry": _geom_dict(geom)},
    )
    print(f"phantom: wrote {volumes} volume(s) to {out_dir}")
    return EXIT_OK


def _load_seg_dataset(data_dir: Path, cfg: seg.WrbNetConfig):
    images_dir = _require(data_dir / "images")
    masks_dir = _require(data_dir / "masks")
    dataset = []
    for img_path in sorted(images_dir.glob("*.pgm")):
        mask_path = masks_dir / img_path.name
        _require(mask_path)
        img = read_pgm(img_path).astype(np.float64) / 255.0
        mask = (read_pgm(mask_path) > 127).astype(np.int64)
        dataset.append((img[None, :, :], mask))
    if not dataset:
        raise FileNotFoundError(f"no .pgm images under {images_dir}")
    return dataset


def cmd_segment(args) -> int:
    config = _load_config(args.config)
    cfg = seg.WrbNetConfig(
        height=int(_pick(args.net_size, config, "net_size", 64)),
        width=int(_pick(args.net_size, config, "net_size", 64)),
        skip_mode=args.skip_mode,
    )
    if args.train:
        data_dir = _require(args.data)
        dataset = _load_seg_dataset(Path(data_dir), cfg)
        epochs = int(_pick(args.epochs, config, "segnet_epochs", 30))
        seed = int(_pick(args.seed, config, "seed", 0))
        params, curve = seg.segnet_train(dataset, epochs=epochs, seed=seed, cfg=cfg)
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        tn.save_checkpoint(out, params)
        with open(out.with_suffix(".loss.json"), "w") as fh:
            json.dump({"epoch_mean_loss": curve}, fh, indent=2)
            fh.write("\n")
        _write_manifest(
            out.with_suffix(".manifest.json"),
            "segment",
            {"mode": "train", "epochs": epochs, "seed": seed, "skip_mode": cfg.skip_mode},
            [data_dir],
        )
        print(f"segment: trained {epochs} epochs, final loss {curve[-1]:.6f}")
        return EXIT_OK
    ckpt = _require(args.checkpoint)
    images_dir = _require(args.images)
    params = seg.init_params(cfg, seed=0)
    tn.restore_params(params, ckpt)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for img_path in sorted(Path(images_dir).glob("*.pgm")):
        img = read_pgm(img_path).astype(np.float64) / 255.0
        mask = seg.predict_mask(img[None, :, :], params, cfg)
        write_pgm(out_dir / img_path.name, mask * 255)
        count += 1
    if count == 0:
        raise FileNotFoundError(f"no .pgm images under {images_dir}")
    _write_manifest(
        out_dir / "manifest.json",
        "segment",
        {"mode": "apply", "skip_mode": cfg.skip_mode},
        [ckpt, images_dir],
    )
    print(f"segment: wrote {count} mask(s) to {out_dir}")
    return EXIT_OK


def cmd_boundaries(args) -> int:
    masks_dir = _require(args.masks)
    files = sorted(Path(masks_dir).glob("*.pgm"))
    if not files:
        raise FileNotFoundError(f"no .pgm masks under {masks_dir}")
    bset = SliceBoundarySet()
    for i, path in enumerate(files):
        mask = read_pgm(path) > 127
        bset.add(i, seg.extract_upper_boundary(mask))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_boundaries_csv(out, bset)
    _write_manifest(
        out.with_suffix(".manifest.json"), "boundaries", {"slices": len(files)}, [masks_dir]
    )
    print(f"boundaries: wrote {len(files)} slice(s) to {out}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    config = _load_config(args.config)
    geom = _geometry(args, config)
    sub = config.get("sampling", {})
    params = SamplingParams(
        r1=float(_pick(args.r1, sub, "r1", 6.0)),
        r2=float(_pick(args.r2, sub, "r2", 10.0)),
        beta=float(_pick(args.beta, sub, "beta", 10.0)),
        seed=int(_pick(args.seed, config, "seed", 0)),
        scale=geom.s_xy,
    )
    k = int(_pick(args.k, config, "curvature_k", 16))
    meridian_samples = int(_pick(args.meridian_samples, config, "meridian_samples", 64))
    boundaries_path = _require(args.boundaries)
    bset = read_boundaries_csv(boundaries_path)
    cloud = slices_to_cloud(bset, geom)
    coarse = coarse_mesh(cloud, meridian_samples)
    field = curv_mod.curvature_field(coarse, k=k)
    _, refined = refine_surface(coarse, field.max_abs_curvature, params)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    coarse_path = Path(str(prefix) + "_coarse.ply")
    refined_path = Path(str(prefix) + "_refined.ply")
    write_ply(coarse_path, coarse)
    write_ply(refined_path, refined)
    _write_manifest(
        Path(str(prefix) + ".manifest.json"),
        "reconstruct",
        {
            "geometry": _geom_dict(geom),
            "sampling": {"r1": params.r1, "r2": params.r2, "beta": params.beta, "seed": params.seed},
            "curvature_k": k,
            "meridian_samples": meridian_samples,
        },
        [boundaries_path],
    )
    print(
        f"reconstruct: coarse {len(coarse.vertices)} vertices -> refined "
        f"{len(refined.vertices)} vertices ({refined_path})"
    )
    return EXIT_OK


def cmd_quantify(args) -> int:
    config = _load_config(args.config)
    k = int(_pick(args.k, config, "curvature_k", 16))
    mesh_path = _require(args.mesh)
    mesh, _ = read_ply(mesh_path)
    field = curv_mod.curvature_field(mesh, k=k)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    curv_mod.write_curvature_csv(out, mesh, field)
    _write_manifest(
        out.with_suffix(".manifest.json"), "quantify", {"curvature_k": k}, [mesh_path]
    )
    print(f"quantify: wrote curvature for {len(mesh.vertices)} vertices to {out}")
    return EXIT_OK


def _field_from_csv(cols, n_vertices: int) -> curv_mod.CurvatureField:
    if len(cols["vertex"]) != n_vertices:
        raise IrisError(
            f"curvature CSV has {len(cols['vertex'])} rows for {n_vertices} vertices"
        )
    return curv_mod.CurvatureField(
        k1=cols["k1"],
        k2=cols["k2"],
        gaussian=cols["K"],
        mean=cols["H"],
        shape_index=cols["E"],
        planar=cols["planar"],
        valid=np.ones(n_vertices, dtype=bool),
    )


def cmd_sectors(args) -> int:
    config = _load_config(args.config)
    n = int(_pick(args.n, config, "sector_points", 256))
    seed = int(_pick(args.seed, config, "seed", 0))
    mesh_path = _require(args.mesh)
    curv_path = _require(args.curvature)
    mesh, _ = read_ply(mesh_path)
    cols = curv_mod.read_curvature_csv(curv_path)
    field = _field_from_csv(cols, len(mesh.vertices))
    label = None if args.label is None else int(args.label)
    samples, errors = sq.build_sector_samples(
        mesh, field, n_points=n, seed=seed, label=label,
        on_empty="skip" if args.permissive else "raise",
    )
    for msg in errors:
        print(f"sectors: warning: {msg}", file=sys.stderr)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    sq.write_sector_dataset(out, samples)
    _write_manifest(
        out.with_suffix(".manifest.json"),
        "sectors",
        {"n_points": n, "seed": seed, "label": label},
        [mesh_path, curv_path],
    )
    print(f"sectors: wrote {len(samples)} sample(s) to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _load_config(args.config)
    sub = config.get("classifier", {})
    cfg = psn.PsnConfig(
        lr=float(_pick(args.lr, sub, "lr", 0.01)),
        momentum=float(_pick(args.momentum, sub, "momentum", 0.9)),
        epochs=int(_pick(args.epochs, sub, "epochs", 30)),
        batch_size=int(_pick(args.batch_size, sub, "batch_size", 16)),
        seed=int(_pick(args.seed, config, "seed", 0)),
    )
    train_path = _require(args.train)
    valid_path = _require(args.valid)
    train_set = sq.read_sector_dataset(train_path)
    valid_set = sq.read_sector_dataset(valid_path)
    params, report = psn.psn_train(train_set, valid_set, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tn.save_checkpoint(out, params)
    report_path = Path(args.report)
    em.write_metric_report(
        report_path, {k: v for k, v in report.items() if k != "train_loss"}
    )
    _write_manifest(
        out.with_suffix(".manifest.json"),
        "train",
        {"epochs": cfg.epochs, "lr": cfg.lr, "momentum": cfg.momentum,
         "batch_size": cfg.batch_size, "seed": cfg.seed},
        [train_path, valid_path],
    )
    shown = {k: v for k, v in report.items() if k != "train_loss"}
    print("train: " + ", ".join(f"{k}={v:.6f}" for k, v in sorted(shown.items()) if v is not None))
    return EXIT_OK


def cmd_classify(args) -> int:
    ckpt = _require(args.checkpoint)
    data_path = _require(args.dataset)
    cfg = psn.PsnConfig()
    params = psn.init_params(cfg)
    tn.restore_params(params, ckpt)
    samples = sq.read_sector_dataset(data_path)
    scores = psn.psn_scores(samples, params, cfg)
    labels = np.array([-1 if s.label is None else s.label for s in samples])
    report_path = Path(args.report)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    if np.all(labels >= 0):
        report = em.classification_metrics(scores, labels)
        em.write_metric_report(report_path, report)
        print("classify: " + ", ".join(
            f"{k}={v:.6f}" for k, v in sorted(report.items()) if v is not None
        ))
    else:
        with open(report_path, "w") as fh:
            json.dump({"scores": [float(s) for s in scores]}, fh, indent=2)
            fh.write("\n")
        print(f"classify: wrote {len(scores)} score(s) (no labels)")
    _write_manifest(
        report_path.with_suffix(".manifest.json"), "classify", {}, [ckpt, data_path]
    )
    return EXIT_OK


def cmd_metrics(args) -> int:
    pred_path = _require(args.pred)
    gt_path = _require(args.gt)
    pred = read_pgm(pred_path) > 127
    gt = read_pgm(gt_path) > 127
    report = em.region_metrics(pred, gt)
    for name in sorted(report):
        print(f"{name} {report[name]:.6f}")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        em.write_metric_report(out, report)
        _write_manifest(
            out.with_suffix(".manifest.json"), "metrics", {}, [pred_path, gt_path]
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# pipeline


def _volume_sectors(vol: int, params: ph.PhantomParams, geom: ScanGeometry,
                    sampling: dict, curvature_k: int, sector_n: int,
                    meridian_samples: int) -> list[sq.SectorSample]:
    volume = ph.phantom_slices(params, geom, with_masks=False)
    cloud = slices_to_cloud(volume.boundaries, geom)
    coarse = coarse_mesh(cloud, meridian_samples)
    coarse_field = curv_mod.curvature_field(coarse, k=curvature_k)
    sp = SamplingParams(
        r1=sampling["r1"], r2=sampling["r2"], beta=sampling["beta"],
        seed=sampling["seed"] + vol, scale=geom.s_xy,
    )
    _, refined = refine_surface(coarse, coarse_field.max_abs_curvature, sp)
    refined_field = curv_mod.curvature_field(refined, k=curvature_k)
    samples, errors = sq.build_sector_samples(
        refined, refined_field, n_points=sector_n, seed=sampling["seed"] + vol,
        label=volume.label, volume=f"vol_{vol:03d}", on_empty="skip",
    )
    for msg in errors:
        print(f"pipeline: vol_{vol:03d}: warning: {msg}", file=sys.stderr)
    return samples


def run_pipeline(
    out_dir,
    seed: int = 0,
    volumes: int = 20,
    geom: ScanGeometry | None = None,
    sampling: dict | None = None,
    curvature_k: int = 16,
    sector_n: int = 256,
    meridian_samples: int = 48,
    epochs: int = 30,
    train_fraction: float = 0.8,
    jobs: int = 1,
) -> dict:
    """Chain phantom -> boundaries -> reconstruct -> quantify -> sectors ->
    train -> classify; returns the final classification report."""
    geom = geom or ScanGeometry(slices=32, width=512, height=192)
    sampling = dict(sampling or {"r1": 6.0, "r2": 10.0, "beta": 10.0, "seed": seed})
    sampling.setdefault("seed", seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(seed)
    vol_params = [
        ph.sample_volume_params(rng, closure=vol % 2 == 1, geom=geom)
        for vol in range(volumes)
    ]
    args_list = [
        (vol, vol_params[vol], geom, sampling, curvature_k, sector_n, meridian_samples)
        for vol in range(volumes)
    ]
    if jobs > 1:
        from multiprocessing import get_context

        with get_context("fork").Pool(jobs) as pool:
            per_volume = pool.starmap(_volume_sectors, args_list)
    else:
        per_volume = [_volume_sectors(*a) for a in args_list]
    all_samples = [s for chunk in per_volume for s in chunk]

    split_rng = np.random.default_rng([seed, 0x5EED])
    order = split_rng.permutation(len(all_samples))
    n_train = int(round(train_fraction * len(all_samples)))
    train_set = [all_samples[i] for i in order[:n_train]]
    valid_set = [all_samples[i] for i in order[n_train:]]
    sq.write_sector_dataset(out_dir / "train.jsonl", train_set)
    sq.write_sector_dataset(out_dir / "valid.jsonl", valid_set)

    cfg = psn.PsnConfig(epochs=epochs, seed=seed)
    params, report = psn.psn_train(train_set, valid_set, cfg)
    tn.save_checkpoint(out_dir / "classifier.ckpt", params)
    final = {k: v for k, v in report.items() if k != "train_loss"}
    em.write_metric_report(out_dir / "report.json", final)
    _write_manifest(
        out_dir / "manifest.json",
        "pipeline",
        {
            "seed": seed,
            "volumes": volumes,
            "geometry": _geom_dict(geom),
            "sampling": {k: sampling[k] for k in ("r1", "r2", "beta", "seed")},
            "curvature_k": curvature_k,
            "sector_n": sector_n,
            "meridian_samples": meridian_samples,
            "epochs": epochs,
            "train_fraction": train_fraction,
        },
    )
    return final


def cmd_pipeline(args) -> int:
    config = _load_config(args.config)
    geom = _geometry(args, config)
    if args.slices is None and "geometry" not in config:
        geom = ScanGeometry(slices=32, width=geom.width, height=geom.height,
                            s_xy=geom.s_xy, s_z=geom.s_z)
    sub = config.get("sampling", {})
    seed = int(_pick(args.seed, config, "seed", 0))
    report = run_pipeline(
        args.out,
        seed=seed,
        volumes=int(_pick(args.volumes, config, "volumes", 20)),
        geom=geom,
        sampling={
            "r1": float(_pick(args.r1, sub, "r1", 6.0)),
            "r2": float(_pick(args.r2, sub, "r2", 10.0)),
            "beta": float(_pick(args.beta, sub, "beta", 10.0)),
            "seed": seed,
        },
        curvature_k=int(_pick(args.k, config, "curvature_k", 16)),
        sector_n=int(_pick(args.n, config, "sector_points", 256)),
        meridian_samples=int(_pick(args.meridian_samples, config, "meridian_samples", 48)),
        epochs=int(_pick(args.epochs, config, "classifier_epochs", 30)),
        jobs=args.jobs,
    )
    print("pipeline: " + ", ".join(
        f"{k}={v:.6f}" for k, v in sorted(report.items()) if v is not None
    ))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> _Parser:
    p = _Parser(prog="iris3d", description=__doc__)
    p.add_argument("--version", action="version", version=f"iris3d {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("phantom", help="generate synthetic volumes")
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--volumes", type=int)
    sp.add_argument("--masks", action=argparse.BooleanOptionalAction, default=True)
    sp.add_argument("--config")
    _geometry_flags(sp)
    sp.set_defaults(func=cmd_phantom)

    sp = sub.add_parser("segment", help="train or apply the segmentation net")
    mode = sp.add_mutually_exclusive_group(required=True)
    mode.add_argument("--train", action="store_true")
    mode.add_argument("--apply", action="store_true")
    sp.add_argument("--data", help="dir with images/ and masks/ (train)")
    sp.add_argument("--images", help="dir with slice images (apply)")
    sp.add_argument("--checkpoint", help="trained checkpoint (apply)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--net-size", dest="net_size", type=int)
    sp.add_argument("--skip-mode", dest="skip_mode", choices=("wrb", "pool"), default="wrb")
    sp.add_argument("--config")
    sp.set_defaults(func=cmd_segment)

    sp = sub.add_parser("boundaries", help="extract upper boundaries from masks")
    sp.add_argument("--masks", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_boundaries)

    sp = sub.add_parser("reconstruct", help="boundaries -> coarse + refined mesh")
    sp.add_argument("--boundaries", required=True)
    sp.add_argument("--out-prefix", dest="out_prefix", required=True)
    sp.add_argument("--r1", type=float)
    sp.add_argument("--r2", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--meridian-samples", dest="meridian_samples", type=int)
    sp.add_argument("--config")
    _geometry_flags(sp)
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("quantify", help="per-vertex curvature of a mesh")
    sp.add_argument("--mesh", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--k", type=int)
    sp.add_argument("--config")
    sp.set_defaults(func=cmd_quantify)

    sp = sub.add_parser("sectors", help="build per-sector classifier inputs")
    sp.add_argument("--mesh", required=True)
    sp.add_argument("--curvature", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--n", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--label", type=int)
    sp.add_argument("--permissive", action="store_true")
    sp.add_argument("--config")
    sp.set_defaults(func=cmd_sectors)

    sp = sub.add_parser("train", help="train the point-set classifier")
    sp.add_argument("--train", required=True)
    sp.add_argument("--valid", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--report", required=True)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--lr", type=float)
    sp.add_argument("--momentum", type=float)
    sp.add_argument("--batch-size", dest="batch_size", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--config")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("classify", help="score a sector dataset")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--report", required=True)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("metrics", help="region metrics between two masks")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--gt", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("pipeline", help="full phantom-to-report chain")
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--volumes", type=int)
    sp.add_argument("--r1", type=float)
    sp.add_argument("--r2", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--k", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--meridian-samples", dest="meridian_samples", type=int)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--config")
    _geometry_flags(sp)
    sp.set_defaults(func=cmd_pipeline)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"iris3d: missing input: {exc}", file=sys.stderr)
        return EXIT_IO
    except IrisError as exc:
        print(f"iris3d: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
