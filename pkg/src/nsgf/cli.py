"""Command-line pipeline: gen -> annotate -> primitives -> fit -> transfer -> eval -> export.

Each stage reads and writes files in the output directory, so stages are
independently re-runnable; identical config + seed reproduces artifacts
bit-exactly. Ablation flags: --no-width-refine (geometry-unaware widths),
--cold-start (refit without source weights), --no-filter (keep unstable
transported grasps).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import traceback
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .errors import NsgfError, UserError
from .geomcore.field import load_grid, save_grid
from .geomcore.mesh import TriMesh, extract_mesh, write_obj
from .geomcore.sampling import sample_surface
from .geomcore.shapes import ShapeSpec, generate_shape
from .graspkit.annotate import annotate_source, load_annotations, save_annotations
from .graspkit.metrics import evaluate, save_report_csv, save_report_json
from .neuralfield.fitting import fit
from .neuralfield.losses import build_labels
from .neuralfield.model import NsgfModel
from .neuralfield.pose import Grasp, assemble_pose
from .primitives.spheres import (fit_instance, fit_template, load_primitives,
                                 save_primitives)
from .runlog import EventLog, output_lock
from .transfer.pipeline import decode_grasps, transfer_field
from .transfer.records import ObjectRecord

log = logging.getLogger("nsgf")

MANIFEST_VERSION = 1


def _object_names(cfg: ExperimentConfig) -> list[tuple[str, object]]:
    objs = [("source", cfg.source)]
    objs += [(f"target_{i:02d}", t) for i, t in enumerate(cfg.targets)]
    return objs


def _load_manifest(out: Path) -> dict:
    path = out / "objects.json"
    if not path.exists():
        raise UserError(f"missing manifest {path}; run `nsgf gen` first")
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != MANIFEST_VERSION:
        raise UserError(f"{path}: unsupported manifest version {doc.get('version')}")
    return doc


def _load_record(cfg: ExperimentConfig, out: Path, name: str,
                 with_prims: bool = True, with_field: bool = False) -> ObjectRecord:
    grid_path = out / f"{name}.grid"
    if not grid_path.exists():
        raise UserError(f"missing grid file {grid_path}; run `nsgf gen` first")
    field = load_grid(grid_path)
    mesh = extract_mesh(field, cfg.iso)
    prims = None
    if with_prims:
        p_path = out / f"{name}.prims.json"
        if not p_path.exists():
            raise UserError(f"missing primitives {p_path}; run `nsgf primitives` first")
        prims = load_primitives(p_path)
    manifest = _load_manifest(out)
    spec = next(o for o in manifest["objects"] if o["name"] == name)
    record = ObjectRecord(name, ShapeSpec.from_dict(spec["spec"]).pose, mesh,
                          prims, field)
    if with_field:
        m_path = out / f"{name}.model.json"
        if not m_path.exists():
            raise UserError(f"missing model {m_path}; run `nsgf fit`/`nsgf transfer` first")
        record = record.with_field(NsgfModel.load(m_path))
    return record


def _save_grasps(path, grasps: list[Grasp], config_hash: str) -> None:
    doc = {"format": "nsgf-grasps", "version": 1, "config_hash": config_hash,
           "grasps": [g.to_dict() for g in grasps]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _load_grasps(path) -> list[Grasp]:
    if not Path(path).exists():
        raise UserError(f"missing grasp set {path}")
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "nsgf-grasps":
        raise UserError(f"{path}: not a grasp-set file")
    return [Grasp.from_dict(d) for d in doc["grasps"]]


def cmd_gen(cfg: ExperimentConfig, out: Path, args) -> None:
    ev = EventLog(out / "gen.events.jsonl")
    objects = []
    for name, spec in _object_names(cfg):
        field, _ = generate_shape(spec, cfg.grid_dims)
        save_grid(field, out / f"{name}.grid")
        mesh = extract_mesh(field, cfg.iso)
        if mesh.is_empty:
            raise UserError(f"object {name}: empty iso-surface at iso={cfg.iso}")
        write_obj(mesh, out / f"{name}.obj")
        objects.append({"name": name, "role": "source" if name == "source" else "target",
                        "spec": spec.to_dict(), "grid_file": f"{name}.grid",
                        "obj_file": f"{name}.obj"})
        ev.emit("generated", object=name, dims=cfg.grid_dims,
                vertices=len(mesh.vertices), faces=len(mesh.faces))
    manifest = {"format": "nsgf-objects", "version": MANIFEST_VERSION,
                "config_hash": cfg.config_hash(), "iso": cfg.iso,
                "grid_dims": cfg.grid_dims, "objects": objects}
    with open(out / "objects.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"gen: wrote {len(objects)} objects to {out}")


def cmd_annotate(cfg: ExperimentConfig, out: Path, args) -> None:
    ev = EventLog(out / "annotate.events.jsonl")
    record = _load_record(cfg, out, "source", with_prims=False)
    annotations = annotate_source(record.occupancy, record.mesh, cfg.gripper,
                                  cfg.mu, budget=cfg.annotation_budget,
                                  seed=cfg.seed + 1, iso=cfg.iso,
                                  candidates=cfg.annotation_candidates)
    save_annotations(annotations, out / "annotations.json",
                     extra={"config_hash": cfg.config_hash()})
    ev.emit("annotated", count=len(annotations))
    print(f"annotate: {len(annotations)} oracle-certified grasps")


def cmd_primitives(cfg: ExperimentConfig, out: Path, args) -> None:
    ev = EventLog(out / "primitives.events.jsonl")
    template = None
    for name, _ in _object_names(cfg):
        record = _load_record(cfg, out, name, with_prims=False)
        samples = sample_surface(record.mesh, record.occupancy,
                                 cfg.primitive_samples, seed=cfg.seed + 3)
        if template is None:
            prims = fit_template(samples, cfg.n_primitives, cfg.primitive_fit)
            prims = replace(prims, category_id=cfg.category_id)
            template = prims
        else:
            prims = fit_instance(samples, template, cfg.primitive_fit)
        save_primitives(prims, out / f"{name}.prims.json")
        ev.emit("primitives_fitted", object=name, template=prims.template,
                converged=prims.converged, final_loss=prims.final_loss)
    print(f"primitives: fitted {cfg.n_primitives} spheres per object")


def cmd_fit(cfg: ExperimentConfig, out: Path, args) -> None:
    ev = EventLog(out / "fit.events.jsonl")
    record = _load_record(cfg, out, "source", with_prims=False)
    annotations = load_annotations(out / "annotations.json")
    samples = sample_surface(record.mesh, record.occupancy, cfg.surface_samples,
                             seed=cfg.seed + 6)
    dataset = build_labels(samples, [a.label for a in annotations],
                           cfg.label_radius)
    ev.emit("labels_built", samples=len(dataset), positives=dataset.n_positive)
    model = NsgfModel.create(record.occupancy.bbox_min, record.occupancy.bbox_max,
                             w_max=cfg.gripper.max_width, seed=cfg.seed + 7)
    fitted, trace = fit(model, dataset, cfg.fit)
    fitted.config_echo["config_hash"] = cfg.config_hash()
    fitted.save(out / "source.model.json")
    ev.emit("fitted", iterations=len(trace), first_loss=trace[0],
            final_loss=trace[-1], trace=trace)
    record = record.with_field(fitted)
    grasps = decode_grasps(fitted, record, n_points=cfg.decode_points,
                           seed=cfg.seed + 5, iso=cfg.iso,
                           refine=not args.no_width_refine)
    _save_grasps(out / "source.grasps.json", grasps, cfg.config_hash())
    ev.emit("decoded", grasps=len(grasps))
    print(f"fit: final loss {trace[-1]:.4f}, decoded {len(grasps)} valid grasps")


def cmd_transfer(cfg: ExperimentConfig, out: Path, args) -> None:
    ev = EventLog(out / "transfer.events.jsonl")
    src = _load_record(cfg, out, "source", with_field=True)
    for name, _ in _object_names(cfg)[1:]:
        tgt = _load_record(cfg, out, name)
        fitted, stats = transfer_field(
            src, tgt, cfg.gripper, cfg.mu, cfg.refit,
            approx_samples=cfg.approx_samples, label_samples=cfg.surface_samples,
            rho=cfg.label_radius, iso=cfg.iso, seed=cfg.seed + 8,
            skip_filter=args.no_filter, cold_start=args.cold_start,
            refine_widths=not args.no_width_refine)
        fitted.config_echo["config_hash"] = cfg.config_hash()
        fitted.save(out / f"{name}.model.json")
        stats.save(out / f"{name}.stats.json",
                   extra={"config_hash": cfg.config_hash(), "object": name})
        tgt = tgt.with_field(fitted)
        grasps = decode_grasps(fitted, tgt, n_points=cfg.decode_points,
                               seed=cfg.seed + 5, iso=cfg.iso,
                               refine=not args.no_width_refine)
        _save_grasps(out / f"{name}.grasps.json", grasps, cfg.config_hash())
        ev.emit("transferred", object=name, grasps=len(grasps),
                **stats.to_dict())
        print(f"transfer {name}: {stats.n_survivors} survivors, "
              f"{len(grasps)} decoded grasps")


def cmd_eval(cfg: ExperimentConfig, out: Path, args) -> None:
    ev = EventLog(out / "eval.events.jsonl")
    triples = []
    for name, _ in _object_names(cfg):
        grasp_path = out / f"{name}.grasps.json"
        if not grasp_path.exists():
            log.warning("eval: skipping %s (no grasp set)", name)
            continue
        grasps = _load_grasps(grasp_path)
        gt = load_grid(out / f"{name}.grid")
        triples.append((name, grasps, gt))
    if not triples:
        raise UserError("eval: no grasp sets found; run `nsgf fit`/`nsgf transfer`")
    report = evaluate(triples, cfg.gripper, cfg.mu, cfg.iso)
    save_report_json(report, out / "report.json",
                     extra={"config_hash": cfg.config_hash()})
    save_report_csv(report, out / "report.csv")
    ev.emit("evaluated", s_omni=report.s_omni, s_best=report.s_best,
            n_cat=report.n_cat)
    print(f"eval: s_omni={report.s_omni:.4f} s_best={report.s_best:.4f} "
          f"over {report.n_cat} objects")


def cmd_export(cfg: ExperimentConfig, out: Path, args) -> None:
    ev = EventLog(out / "export.events.jsonl")
    export_dir = out / "export"
    export_dir.mkdir(exist_ok=True)
    n_exported = 0
    for name, _ in _object_names(cfg):
        grasp_path = out / f"{name}.grasps.json"
        if not grasp_path.exists():
            continue
        grasps = _load_grasps(grasp_path)[:args.top]
        with open(export_dir / f"{name}_confidence.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rank", "confidence", "validity_logit", "width"])
            for k, g in enumerate(grasps):
                writer.writerow([k, f"{g.confidence:.6f}", f"{g.validity:.6f}",
                                 f"{g.width:.6f}"])
        for k, g in enumerate(grasps):
            pose = assemble_pose(g, cfg.gripper)
            mesh = cfg.gripper.display_mesh(g.width)
            # display_mesh is mid-contact anchored; re-anchor to the wrist frame
            offset = np.array([0.0, 0.0, cfg.gripper.finger_depth])
            verts = (mesh.vertices + offset) @ pose[:3, :3].T + pose[:3, 3]
            normals = mesh.vertex_normals @ pose[:3, :3].T
            write_obj(TriMesh(verts, mesh.faces, normals),
                      export_dir / f"{name}_grasp_{k:03d}.obj")
            n_exported += 1
        ev.emit("exported", object=name, grasps=len(grasps))
    print(f"export: wrote {n_exported} gripper meshes to {export_dir}")


COMMANDS = {
    "gen": cmd_gen,
    "annotate": cmd_annotate,
    "primitives": cmd_primitives,
    "fit": cmd_fit,
    "transfer": cmd_transfer,
    "eval": cmd_eval,
    "export": cmd_export,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsgf",
        description="Fit, transfer, and evaluate neural surface grasping fields "
                    "on synthetic shape categories.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        if name in ("fit", "transfer"):
            p.add_argument("--no-width-refine", action="store_true",
                           help="skip occupancy-guided width refinement (ablation)")
        if name == "transfer":
            p.add_argument("--cold-start", action="store_true",
                           help="refit targets from scratch (ablation)")
            p.add_argument("--no-filter", action="store_true",
                           help="skip oracle filtering of transported grasps (ablation)")
        if name == "export":
            p.add_argument("--top", type=int, default=20,
                           help="gripper instances per object")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_json(args.config)
        cfg = cfg.with_overrides(out_dir=args.out, seed=args.seed)
        with output_lock(cfg.out_dir) as out:
            COMMANDS[args.command](cfg, out, args)
        return 0
    except UserError as exc:
        print(f"nsgf {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except NsgfError as exc:
        print(f"nsgf {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
