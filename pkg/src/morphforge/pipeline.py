"""End-to-end dataset build: base-sample acceptance loop, mated-sample
generation, pair selection, morph generation, and manifest validation."""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from . import __version__, formats, gates, latent as lm, morph as me, pairing
from .errors import MorphforgeError, NoFaceError
from .providers import Provider
from .raster import load_png, save_png

SPLITS = ("train", "dev", "test")
MATED_MODES = ("ifgs", "ifgd", "frpca")


class BudgetExhaustedError(MorphforgeError):
    """Candidate budget ran out before the acceptance targets were met."""


@dataclass
class PipelineConfig:
    seed: int = 0
    latent_dim: int = 32
    provider: dict = field(default_factory=lambda: {"mode": "toy"})
    splits: dict = field(default_factory=lambda: {
        "train": {"F": 1000, "M": 1000},
        "dev": {"F": 75, "M": 75},
        "test": {"F": 100, "M": 100},
    })
    candidate_budget: int | None = None  # default: 50x total target
    diversity_threshold: float = 0.45
    preservation_threshold: float = 0.45
    pose_limit: float = 5.0
    ear_min: float = 0.2
    edge_density: float = 0.03
    directions: dict = field(default_factory=dict)  # pose/illum/expr/age specs
    d_neutral: float | None = None  # default: expr direction's neg-class mean distance
    ifgs: dict = field(default_factory=lambda: {
        "illum_scales": np.linspace(-3, 3, 7).tolist(),
        "age_scales": np.linspace(-3, 3, 9).tolist(),
    })
    ifgd: dict = field(default_factory=lambda: {
        "pose_scales": np.linspace(-4, 4, 3).tolist(),
        "expr_scales": [-4.0, 4.0],
        "illum_scales": np.linspace(-4, 4, 3).tolist(),
        "age_scales": np.linspace(-4, 4, 5).tolist(),
    })
    frpca: dict = field(default_factory=lambda: {
        "count": 55, "components": 55, "tau_id": 0.45, "s_max": 10.0,
    })
    pairing_k: int = 50  # train split; dev/test always use full combination
    morph_alpha: float = 0.5
    feather_px: int = 8
    gender_labels: str | None = None  # label file for providers without the capability

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        cfg = cls()
        unknown = set(data) - set(cfg.__dict__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key, value in data.items():
            if isinstance(getattr(cfg, key), dict) and isinstance(value, dict) \
                    and key in ("ifgs", "ifgd", "frpca"):
                getattr(cfg, key).update(value)
            else:
                setattr(cfg, key, value)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for name, lo, hi in (("diversity_threshold", 0.0, 2.0),
                             ("preservation_threshold", 0.0, 2.0),
                             ("morph_alpha", 0.0, 1.0)):
            v = getattr(self, name)
            if not lo <= v <= hi:
                raise ValueError(f"{name} out of range: {v}")
        for split, counts in self.splits.items():
            if split not in SPLITS:
                raise ValueError(f"unknown split {split!r}")
            for g, n in counts.items():
                if g not in ("F", "M") or n < 0:
                    raise ValueError(f"bad split count {split}/{g}={n}")

    def to_dict(self) -> dict:
        return json.loads(json.dumps(self.__dict__, sort_keys=True))

    def hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def total_target(self) -> int:
        return sum(n for counts in self.splits.values() for n in counts.values())

    def budget(self) -> int:
        return self.candidate_budget if self.candidate_budget is not None \
            else 50 * max(self.total_target(), 1)


def load_config(path: str | Path) -> PipelineConfig:
    import yaml

    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    return PipelineConfig.from_dict(data)


def load_direction(spec: dict, dim: int, attribute: str) -> lm.SemanticDirection:
    """Direction spec: {"axis": i} (unit axis vector) or {"synv": path, "meta": path}."""
    if "axis" in spec:
        normal = np.zeros(dim)
        normal[int(spec["axis"])] = 1.0
        return lm.SemanticDirection(
            attribute=attribute, normal=normal,
            mean_distance_neg=float(spec.get("mean_distance_neg", 0.0)),
            mean_distance_pos=float(spec.get("mean_distance_pos", 0.0)))
    normal = formats.load_synv(spec["synv"])[0]
    meta = formats.load_direction_meta(spec["meta"])
    return lm.SemanticDirection(
        attribute=meta.get("attribute", attribute),
        normal=normal / np.linalg.norm(normal),
        mean_distance_neg=float(meta["mean_distance_neg"]),
        mean_distance_pos=float(meta["mean_distance_pos"]))


# --- manifest -----------------------------------------------------------------

def new_manifest(config: PipelineConfig) -> dict:
    now = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return {
        "version": 1,
        "config_hash": config.hash(),
        "subjects": [],
        "mated": {},
        "mated_dropped": {},
        "pairs": {},
        "morphs": [],
        "morph_errors": [],
        "rejections": {},
        "cursor": 0,
        "provenance": {"tool": f"morphforge {__version__}",
                       "created_at": now, "updated_at": now},
    }


def save_manifest(root: Path, manifest: dict) -> None:
    manifest["provenance"]["updated_at"] = time.strftime(
        "%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    tmp = root / "manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, root / "manifest.json")


def load_manifest(root: Path) -> dict:
    path = Path(root) / "manifest.json"
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MorphforgeError(f"cannot read manifest at {path}: {exc}") from exc


# --- base acceptance ----------------------------------------------------------

def _load_directions(config: PipelineConfig) -> dict[str, lm.SemanticDirection]:
    out = {}
    for attr in ("pose", "illum", "expr", "age"):
        spec = config.directions.get(attr)
        if spec is None:
            raise ValueError(f"config.directions is missing the {attr!r} direction")
        out[attr] = load_direction(spec, config.latent_dim, attr)
    return out


def _gender_labels(config: PipelineConfig) -> dict[int, str] | None:
    if config.gender_labels is None:
        return None
    data = json.loads(Path(config.gender_labels).read_text())
    return {int(k): v for k, v in data.items()}


def run_base_acceptance(config: PipelineConfig, provider: Provider,
                        root: str | Path) -> dict:
    """Draw candidates, neutralize, gate, and commit accepted base subjects to
    the manifest. Resumes from an existing manifest with the same config hash."""
    root = Path(root)
    (root / "base").mkdir(parents=True, exist_ok=True)
    manifest_path = root / "manifest.json"
    if manifest_path.exists():
        manifest = load_manifest(root)
        if manifest["config_hash"] != config.hash():
            raise MorphforgeError("existing manifest was built with a different config")
    else:
        manifest = new_manifest(config)

    dirs = _load_directions(config)
    d_neutral = config.d_neutral if config.d_neutral is not None \
        else dirs["expr"].mean_distance_neg
    labels = _gender_labels(config)

    remaining = {(s, g): int(n) for s, counts in config.splits.items()
                 for g, n in counts.items()}
    for subj in manifest["subjects"]:
        key = (subj["split"], subj["gender"])
        remaining[key] = remaining.get(key, 0) - 1
    gallery = [formats.load_synv(root / s["embedding"])[0]
               for s in manifest["subjects"]]
    serial = {"F": sum(1 for s in manifest["subjects"] if s["gender"] == "F"),
              "M": sum(1 for s in manifest["subjects"] if s["gender"] == "M")}
    rejections = manifest["rejections"]

    def tally(reason: str) -> None:
        rejections[reason] = rejections.get(reason, 0) + 1

    budget = config.budget()
    i = manifest.get("cursor", 0)
    while any(n > 0 for n in remaining.values()):
        if i >= budget:
            save_manifest(root, manifest)
            shortfall = {f"{s}/{g}": n for (s, g), n in remaining.items() if n > 0}
            raise BudgetExhaustedError(
                f"candidate budget {budget} exhausted; shortfall: {shortfall}")
        candidate_seed = config.seed + i
        i += 1
        manifest["cursor"] = i
        w = provider.sample_latents(1, seed=candidate_seed)[0]
        w = lm.neutralize(w, dirs["pose"], dirs["illum"], dirs["expr"], d_neutral)
        try:
            img = provider.decode_latent(w)
            pose = provider.estimate_pose(img)
            if not gates.pose_gate(pose, limit=config.pose_limit):
                tally("pose")
                continue
            landmarks = provider.detect_landmarks(img)
            if gates.eye_aspect_ratio(landmarks, "left") < config.ear_min or \
                    gates.eye_aspect_ratio(landmarks, "right") < config.ear_min:
                tally("eyes")
                continue
            glasses = gates.glasses_check(img if img.ndim == 2 else img[:, :, 0],
                                          landmarks,
                                          density_threshold=config.edge_density)
            if glasses.flagged:
                tally("glasses")
                continue
            if labels is not None:
                gender = labels.get(candidate_seed - config.seed)
                if gender is None:
                    raise MorphforgeError(
                        f"no gender label for candidate {candidate_seed - config.seed}")
            else:
                gender = provider.classify_gender(img)
            split = next((s for s in SPLITS if remaining.get((s, gender), 0) > 0), None)
            if split is None:
                tally("quota")
                continue
            emb = provider.embed_face(img)
            div = gates.diversity_check(emb, gallery, threshold=config.diversity_threshold)
            if not div.accepted:
                tally("diversity")
                continue
        except NoFaceError:
            tally("no_face")
            continue

        serial[gender] += 1
        sid = f"{gender}{serial[gender]:04d}"
        paths = {
            "latent": f"base/{sid}.synv",
            "image": f"base/{sid}.png",
            "landmarks": f"base/{sid}_landmarks.json",
            "pose": f"base/{sid}_pose.json",
            "embedding": f"base/{sid}_embedding.synv",
        }
        formats.save_synv(root / paths["latent"], w)
        save_png(root / paths["image"], img)
        formats.save_landmarks(root / paths["landmarks"], landmarks)
        formats.save_pose(root / paths["pose"], pose.yaw, pose.pitch, pose.roll)
        formats.save_synv(root / paths["embedding"], emb)
        manifest["subjects"].append({
            "subject_id": sid, "gender": gender, "split": split,
            "candidate_seed": candidate_seed,
            "gates": {"yaw": pose.yaw, "pitch": pose.pitch,
                      "nearest_distance": div.nearest_distance,
                      "glasses_density": glasses.density},
            **paths,
        })
        gallery.append(emb)
        remaining[(split, gender)] -= 1
        save_manifest(root, manifest)  # checkpoint after each commit

    save_manifest(root, manifest)
    return manifest


# --- mated generation ---------------------------------------------------------

def run_mated_generation(manifest: dict, config: PipelineConfig, provider: Provider,
                         root: str | Path, modes=MATED_MODES) -> dict:
    """Generate mated samples per subject: IFGS/IFGD grids filtered by the
    identity-preservation check, FRPCA self-controlled via the embedding oracle."""
    root = Path(root)
    dirs = _load_directions(config)

    pca_components = None
    if "frpca" in modes:
        base_latents = [formats.load_synv(root / s["latent"])[0]
                        for s in manifest["subjects"]]
        if len(base_latents) >= 2:
            k = int(config.frpca["components"])
            try:
                pca_components = lm.fit_pca(base_latents, k)
            except ValueError:
                # fewer subjects than requested components: use the full rank
                X = np.asarray(base_latents)
                rank = int(np.linalg.matrix_rank(X - X.mean(axis=0)))
                pca_components = lm.fit_pca(base_latents, max(rank, 1))

    def embed_latent(w: np.ndarray) -> np.ndarray:
        return provider.embed_face(provider.decode_latent(w))

    for subj_index, subj in enumerate(manifest["subjects"]):
        sid = subj["subject_id"]
        w_base = formats.load_synv(root / subj["latent"])[0]
        base_emb = formats.load_synv(root / subj["embedding"])[0]
        entry = manifest["mated"].setdefault(sid, {})
        dropped = manifest["mated_dropped"].setdefault(sid, {})

        if "ifgs" in modes and "ifgs" not in entry:
            kept, ndrop = [], 0
            combos = list(product(config.ifgs["illum_scales"], config.ifgs["age_scales"]))
            for idx, (a_i, a_a) in enumerate(combos):
                w = lm.edit_ifgs(w_base, dirs["illum"], dirs["age"], a_i, a_a)
                img = provider.decode_latent(w)
                dist = gates.cosine_distance(base_emb, provider.embed_face(img))
                if dist > config.preservation_threshold:
                    ndrop += 1
                    continue
                kept.append(_save_mated(root, "ifgs", sid, idx, w, img,
                                        {"scales": [a_i, a_a],
                                         "preservation_distance": dist}))
            entry["ifgs"] = kept
            dropped["ifgs"] = ndrop

        if "ifgd" in modes and "ifgd" not in entry:
            kept, ndrop = [], 0
            combos = list(product(config.ifgd["pose_scales"], config.ifgd["expr_scales"],
                                  config.ifgd["illum_scales"], config.ifgd["age_scales"]))
            for idx, (b_p, b_ns, b_i, b_a) in enumerate(combos):
                recipe = lm.EditRecipe(terms=(
                    (dirs["pose"], b_p), (dirs["expr"], b_ns),
                    (dirs["illum"], b_i), (dirs["age"], b_a)), mode="IFGD")
                w = lm.edit_ifgd(w_base, recipe)
                img = provider.decode_latent(w)
                dist = gates.cosine_distance(base_emb, provider.embed_face(img))
                if dist > config.preservation_threshold:
                    ndrop += 1
                    continue
                kept.append(_save_mated(root, "ifgd", sid, idx, w, img,
                                        {"scales": [b_p, b_ns, b_i, b_a],
                                         "preservation_distance": dist}))
            entry["ifgd"] = kept
            dropped["ifgd"] = ndrop

        if "frpca" in modes and "frpca" not in entry:
            if pca_components is None:
                raise MorphforgeError("FRPCA requires at least 2 base subjects")
            kept = []
            for j in range(int(config.frpca["count"])):
                seed = config.seed + 7919 * (subj_index + 1) + j
                w = lm.edit_frpca(w_base, pca_components, seed=seed,
                                  embed=embed_latent,
                                  tau_id=float(config.frpca["tau_id"]),
                                  s_max=float(config.frpca["s_max"]))
                img = provider.decode_latent(w)
                dist = gates.cosine_distance(base_emb, provider.embed_face(img))
                kept.append(_save_mated(root, "frpca", sid, j, w, img,
                                        {"seed": seed, "distance": dist}))
            entry["frpca"] = kept

        save_manifest(root, manifest)
    return manifest


def _save_mated(root: Path, mode: str, sid: str, idx: int, w: np.ndarray,
                img: np.ndarray, extra: dict) -> dict:
    out_dir = root / "mated" / mode / sid
    out_dir.mkdir(parents=True, exist_ok=True)
    latent_path = f"mated/{mode}/{sid}/{idx:03d}.synv"
    image_path = f"mated/{mode}/{sid}/{idx:03d}.png"
    formats.save_synv(root / latent_path, w)
    save_png(root / image_path, img)
    return {"index": idx, "latent": latent_path, "image": image_path, **extra}


# --- pairing + morphs ---------------------------------------------------------

def run_pairing(manifest: dict, config: PipelineConfig, root: str | Path,
                split: str, k=None) -> list[pairing.Pair]:
    """Select contributor pairs for one split and record them in the manifest.
    Defaults: train uses config.pairing_k, dev/test use the full combination."""
    root = Path(root)
    if k is None:
        k = config.pairing_k if split == "train" else pairing.FULL
    subjects = [
        pairing.SubjectEntry(
            subject_id=s["subject_id"], gender=s["gender"], split=s["split"],
            embedding=formats.load_synv(root / s["embedding"])[0])
        for s in manifest["subjects"] if s["split"] == split
    ]
    selection = pairing.select_pairs(subjects, split, k)
    (root / "pairs").mkdir(exist_ok=True)
    path = f"pairs/{split}.json"
    formats.save_pairs(root / path, [
        {"subject_a": p.subject_a, "subject_b": p.subject_b,
         "similarity": p.similarity} for p in selection.pairs])
    manifest["pairs"][split] = path
    save_manifest(root, manifest)
    return selection.pairs


def run_morph_generation(manifest: dict, config: PipelineConfig,
                         root: str | Path, alpha: float | None = None) -> dict:
    """Generate one landmark morph per selected pair, splice it onto the first
    contributor's background, and append the records to the manifest."""
    root = Path(root)
    alpha = config.morph_alpha if alpha is None else alpha
    (root / "morphs" / "lma").mkdir(parents=True, exist_ok=True)
    by_id = {s["subject_id"]: s for s in manifest["subjects"]}
    existing = {(m["subject_a"], m["subject_b"]) for m in manifest["morphs"]}

    for split, pairs_path in sorted(manifest["pairs"].items()):
        for pair in formats.load_pairs(root / pairs_path):
            a_id, b_id = pair["subject_a"], pair["subject_b"]
            if (a_id, b_id) in existing:
                continue
            try:
                sa, sb = by_id[a_id], by_id[b_id]
                img_a = load_png(root / sa["image"])
                img_b = load_png(root / sb["image"])
                lm_a = formats.load_landmarks(root / sa["landmarks"])
                lm_b = formats.load_landmarks(root / sb["landmarks"])
                morphed = me.morph_pair(img_a, lm_a, img_b, lm_b, alpha)
                morph_lm = (1.0 - alpha) * lm_a + alpha * lm_b
                spliced = me.splice_postprocess(morphed, img_a, morph_lm,
                                                feather_px=config.feather_px)
                out = f"morphs/lma/{a_id}_{b_id}.png"
                save_png(root / out, spliced)
                manifest["morphs"].append({
                    "subject_a": a_id, "subject_b": b_id, "algorithm": "LMA",
                    "alpha": alpha, "output": out, "split": split,
                    "gender": sa["gender"],
                })
                existing.add((a_id, b_id))
            except (OSError, ValueError, KeyError) as exc:
                manifest["morph_errors"].append(
                    {"subject_a": a_id, "subject_b": b_id, "error": str(exc)})
        save_manifest(root, manifest)
    return manifest


# --- validation ---------------------------------------------------------------

def validate_manifest(manifest: dict, config: PipelineConfig,
                      root: str | Path) -> list[dict]:
    """Check manifest invariants; returns a machine-readable violation list."""
    root = Path(root)
    violations: list[dict] = []

    counts: dict[tuple[str, str], int] = {}
    for s in manifest["subjects"]:
        counts[(s["split"], s["gender"])] = counts.get((s["split"], s["gender"]), 0) + 1
    for split, per_gender in config.splits.items():
        for gender, expected in per_gender.items():
            got = counts.get((split, gender), 0)
            if got != expected:
                violations.append({
                    "kind": "split_count",
                    "detail": f"{split}/{gender}: expected {expected}, got {got}"})

    def check_file(path: str, owner: str) -> None:
        if not (root / path).exists():
            violations.append({"kind": "missing_file",
                               "detail": f"{owner}: {path} does not exist"})

    by_id = {}
    for s in manifest["subjects"]:
        by_id[s["subject_id"]] = s
        for key in ("latent", "image", "landmarks", "pose", "embedding"):
            check_file(s[key], s["subject_id"])
    for sid, modes in manifest["mated"].items():
        for mode, entries in modes.items():
            for e in entries:
                check_file(e["latent"], f"{sid}/{mode}")
                check_file(e["image"], f"{sid}/{mode}")
    for m in manifest["morphs"]:
        check_file(m["output"], f"morph {m['subject_a']}_{m['subject_b']}")
        if m["subject_a"] == m["subject_b"]:
            violations.append({"kind": "self_morph",
                               "detail": f"morph {m['output']} pairs a subject with itself"})
        if not 0.0 <= m["alpha"] <= 1.0:
            violations.append({"kind": "bad_alpha",
                               "detail": f"morph {m['output']}: alpha {m['alpha']}"})
        sa, sb = by_id.get(m["subject_a"]), by_id.get(m["subject_b"])
        if sa is None or sb is None:
            violations.append({"kind": "unknown_subject",
                               "detail": f"morph {m['output']} references a missing subject"})
            continue
        if sa["gender"] != sb["gender"]:
            violations.append({"kind": "cross_gender_morph",
                               "detail": f"morph {m['output']} pairs "
                                         f"{m['subject_a']} ({sa['gender']}) with "
                                         f"{m['subject_b']} ({sb['gender']})"})
        if sa["split"] != sb["split"]:
            violations.append({"kind": "cross_split_morph",
                               "detail": f"morph {m['output']} pairs splits "
                                         f"{sa['split']} and {sb['split']}"})
    return violations
