import os
import shutil
import json
from typing import Optional

from rsii.core.errors import ConfigError

LOCK_NAME = ".rsii.lock"

STAGE_DIRS = {
    "inputs": "inputs",
    "surface": "surface",
    "register": "registration",
    "tension": "tension",
    "indices": "indices",
}


class Workspace:
    """
    Artifact directory of one pipeline run.

    Every stage writes into its own sub-directory so a later stage (or a resumed run)
    can re-load what an earlier one produced. A lockfile keeps two runs from sharing
    the same directory.
    """

    def __init__(self, root_dir: str):
        """:param root_dir: Output directory of the run, created with its stage folders."""
        self.root_dir = root_dir
        os.makedirs(self.root_dir, exist_ok=True)

        self.paths = {key: os.path.join(self.root_dir, name) for key, name in STAGE_DIRS.items()}
        for path in self.paths.values():
            os.makedirs(path, exist_ok=True)

        self._lock_fd: Optional[int] = None

    # -------------------------------------------------------------------------
    # Paths
    # -------------------------------------------------------------------------

    def directory(self, key: str) -> str:
        """Get the directory path for a given stage key."""
        return self.paths[key]

    def path(self, key: str, name: str) -> str:
        """Path of artifact ``name`` inside the ``key`` directory."""
        return os.path.join(self.paths[key], name)

    def root_path(self, name: str) -> str:
        return os.path.join(self.root_dir, name)

    # -------------------------------------------------------------------------
    # Save/load helpers
    # -------------------------------------------------------------------------

    def save_json(self, key: Optional[str], name: str, data: dict) -> str:
        """
        Save JSON data under the given stage key (or the run root when ``key`` is None).

        Keys are sorted so identical data always gives identical bytes.

        :param name: File name (without .json extension).
        :return: Path to the saved file.
        """
        folder = self.root_dir if key is None else self.paths[key]
        path = os.path.join(folder, f"{name}.json")
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")
        return path

    def load_json(self, key: Optional[str], name: str) -> dict:
        folder = self.root_dir if key is None else self.paths[key]
        path = os.path.join(folder, f"{name}.json")
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)

    def has_json(self, key: Optional[str], name: str) -> bool:
        folder = self.root_dir if key is None else self.paths[key]
        return os.path.exists(os.path.join(folder, f"{name}.json"))

    def clear(self, key: str):
        """Empty one stage directory."""
        path = self.paths[key]
        if os.path.exists(path):
            shutil.rmtree(path)
        os.makedirs(path, exist_ok=True)

    # -------------------------------------------------------------------------
    # Lock
    # -------------------------------------------------------------------------

    def acquire_lock(self):
        """
        Create the lockfile exclusively.

        :raises ConfigError: If another run holds the directory.
        """
        lock = self.root_path(LOCK_NAME)
        try:
            fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError as exc:
            raise ConfigError(
                f"output directory {self.root_dir} is locked by another run "
                f"(remove {lock} if that run is gone)"
            ) from exc
        os.write(fd, str(os.getpid()).encode("ascii"))
        self._lock_fd = fd

    def release_lock(self):
        if self._lock_fd is None:
            return
        os.close(self._lock_fd)
        self._lock_fd = None
        lock = self.root_path(LOCK_NAME)
        if os.path.exists(lock):
            os.remove(lock)

    def __enter__(self) -> "Workspace":
        self.acquire_lock()
        return self

    def __exit__(self, *exc_info) -> None:
        self.release_lock()
