from unida.project.config import ExperimentConfig, load_presets
from unida.project.manifest import RunManifest
from unida.project.utils import resolve_num_threads

__all__ = ["ExperimentConfig", "RunManifest", "load_presets", "resolve_num_threads"]
