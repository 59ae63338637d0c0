"""Content-addressed artifact store.

Every artifact is a directory `<root>/<id>/` holding `manifest.json` plus
payload files. The id is a hash of (kind, config, parent ids, payload file
hashes), so identical work yields identical ids and a finished store can be
compared across runs byte for byte. Parents must exist before a child can
be written, which keeps lineage acyclic by construction.
"""

from __future__ import annotations

import hashlib
import json
import tempfile
from pathlib import Path

from ..corpus import MonolingualCorpus, ParallelCorpus, format_sentence
from ..errors import ConfigError, DataError
from ..nmt import Checkpoint, NeuralModel, load_model, save_model

KINDS = ("model", "corpus", "table", "report")

_MANIFEST = "manifest.json"
_MODEL_DIR = "model"


def canonical_json(obj) -> str:
    """Key-sorted, whitespace-free JSON; the hashing representation."""
    try:
        return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"artifact config is not canonical JSON data: {e}") from e


def short_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def derive_seed(*parts) -> int:
    """Stable sub-seed for a labelled piece of work under a master seed."""
    text = "/".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def artifact_id(kind: str, config, parents, data_hashes) -> str:
    body = {
        "kind": kind,
        "config": config,
        "parents": list(parents),
        "data_hashes": dict(data_hashes),
    }
    return short_hash(canonical_json(body).encode("utf-8"))


class ArtifactStore:
    """Directory-backed store; writes are idempotent, manifests immutable."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, art_id: str) -> Path:
        return self.root / art_id

    def exists(self, art_id: str) -> bool:
        return (self.path(art_id) / _MANIFEST).is_file()

    def ids(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if (p / _MANIFEST).is_file())

    def manifest(self, art_id: str) -> dict:
        path = self.path(art_id) / _MANIFEST
        if not path.is_file():
            raise ConfigError(f"unknown artifact {art_id!r}")
        return json.loads(path.read_text(encoding="utf-8"))

    def put(self, kind: str, config, parents, files: dict) -> str:
        """Write an artifact from in-memory payload bytes; returns its id.

        Re-putting identical content is a no-op; a differing manifest under
        the same id means the store is corrupt.
        """
        if kind not in KINDS:
            raise ConfigError(f"unknown artifact kind {kind!r}")
        if not files:
            raise DataError("artifact needs at least one payload file")
        parents = list(parents)
        for parent in parents:
            if not self.exists(parent):
                raise ConfigError(f"parent artifact {parent!r} is not in the store")
        for name in files:
            if name == _MANIFEST or ".." in Path(name).parts or Path(name).is_absolute():
                raise ConfigError(f"illegal payload file name {name!r}")
        data_hashes = {name: short_hash(files[name]) for name in sorted(files)}
        art_id = artifact_id(kind, config, parents, data_hashes)
        manifest = {
            "id": art_id,
            "kind": kind,
            "config": config,
            "parents": parents,
            "data_hashes": data_hashes,
        }
        directory = self.path(art_id)
        if self.exists(art_id):
            if self.manifest(art_id) != manifest:
                raise ConfigError(f"artifact {art_id!r} exists with a different manifest")
            return art_id
        directory.mkdir(parents=True, exist_ok=True)
        for name, data in sorted(files.items()):
            target = directory / name
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)
        # manifest written last marks the artifact complete
        with open(directory / _MANIFEST, "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")
        return art_id

    def lineage(self, art_id: str) -> list[dict]:
        """Manifests of the artifact and all ancestors, parents first."""
        order = []
        seen = set()

        def visit(node):
            if node in seen:
                return
            seen.add(node)
            manifest = self.manifest(node)
            for parent in manifest["parents"]:
                visit(parent)
            order.append(manifest)

        visit(art_id)
        return order


def model_files(model: NeuralModel, step: int, dev_bleu: float) -> dict:
    """Render a model to payload bytes in the checkpoint directory format."""
    with tempfile.TemporaryDirectory() as tmp:
        save_model(tmp, model, step=step, dev_bleu=dev_bleu)
        root = Path(tmp)
        return {
            f"{_MODEL_DIR}/{p.relative_to(root).as_posix()}": p.read_bytes()
            for p in sorted(root.rglob("*"))
            if p.is_file()
        }


def store_model(
    store: ArtifactStore,
    config,
    parents,
    model: NeuralModel,
    step: int,
    dev_bleu: float,
) -> str:
    return store.put("model", config, parents, model_files(model, step, dev_bleu))


def load_model_artifact(store: ArtifactStore, art_id: str) -> tuple[NeuralModel, Checkpoint]:
    manifest = store.manifest(art_id)
    if manifest["kind"] != "model":
        raise ConfigError(f"artifact {art_id!r} is a {manifest['kind']}, not a model")
    return load_model(store.path(art_id) / _MODEL_DIR)


def _text_bytes(sentences) -> bytes:
    return "".join(format_sentence(s) + "\n" for s in sentences).encode("utf-8")


def store_parallel(store: ArtifactStore, config, parents, corpus: ParallelCorpus) -> str:
    files = {
        "src.txt": _text_bytes(corpus.side("src")),
        "tgt.txt": _text_bytes(corpus.side("tgt")),
    }
    return store.put("corpus", config, parents, files)


def store_monolingual(store: ArtifactStore, config, parents, corpus: MonolingualCorpus) -> str:
    return store.put("corpus", config, parents, {"text.txt": _text_bytes(corpus.sentences)})
